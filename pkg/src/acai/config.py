"""Service configuration loaded from a YAML file or defaults."""

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .provisioner import PriceSchedule


@dataclass
class Config:
    data_dir: str = "acai-data"
    quota_k: int = 2
    host: str = "127.0.0.1"
    port: int = 8420
    cpu_per_vcpu_hour: float = 0.048
    mem_per_gb_hour: float = 0.0065
    fsync: bool = True

    @property
    def price_schedule(self) -> PriceSchedule:
        return PriceSchedule(self.cpu_per_vcpu_hour, self.mem_per_gb_hour)

    @classmethod
    def load(cls, path) -> "Config":
        raw = yaml.safe_load(Path(path).read_text()) or {}
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in raw.items() if k in known})
