"""Runtime profiling, the log-linear runtime model, pricing, and
constrained grid-search auto-provisioning.

The runtime model is multiplicative, t = alpha * prod(x_i ** beta_i) over
the template variables plus vcpu and mem_mb, fitted by ordinary least
squares after a log transform.  Unit prices ramp linearly from 2/3 of the
base price at the smallest allocation to 4/3 at the largest; pricing uses
exact rational arithmetic so the ramp endpoints are exact.
"""

import math
import re
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    FitError,
    InfeasibleError,
    NotFoundError,
    ProfilingError,
    ValidationError,
)
from .engine.jobs import ResourceConfig

# -- command templates ----------------------------------------------------

_HINT_RE = re.compile(r"\{([^{}]*)\}")


@dataclass(frozen=True)
class CommandTemplate:
    name: str
    command: str
    opts: Tuple[Tuple[int, ...], ...]  # one integer set per hint slot, in order

    @property
    def k(self) -> int:
        return len(self.opts)

    def instantiate(self, values: Sequence[int]) -> str:
        if len(values) != self.k:
            raise ValidationError(
                f"template {self.name} takes {self.k} values, got {len(values)}")
        out = []
        last = 0
        for match, value in zip(_HINT_RE.finditer(self.command), values):
            out.append(self.command[last:match.start()])
            out.append(str(value))
            last = match.end()
        out.append(self.command[last:])
        return "".join(out)


def parse_template(name: str, command: str) -> CommandTemplate:
    stripped = _HINT_RE.sub("", command)
    if "{" in stripped or "}" in stripped:
        raise ValidationError(f"unbalanced or nested braces in template: {command!r}")
    opts = []
    for match in _HINT_RE.finditer(command):
        body = match.group(1)
        values = []
        for token in body.split(","):
            token = token.strip()
            if not token.isdigit() or int(token) < 1:
                raise ValidationError(
                    f"hint values must be positive integers: {{{body}}}")
            values.append(int(token))
        if not values:
            raise ValidationError("empty hint set")
        opts.append(tuple(values))
    return CommandTemplate(name, command, tuple(opts))


# -- pricing --------------------------------------------------------------

VCPU_MIN, VCPU_MAX = Fraction(1, 2), Fraction(8)
MEM_MIN, MEM_MAX = 512, 8192


@dataclass(frozen=True)
class PriceSchedule:
    cpu_per_vcpu_hour: object = 0.048   # currency per vCPU-hour at list price
    mem_per_gb_hour: object = 0.0065    # currency per GB-hour at list price


def _exact(value) -> Fraction:
    # grid values (multiples of 0.5 / integers) are exactly representable
    return Fraction(value)


def unit_prices(config: ResourceConfig, schedule: PriceSchedule):
    """Effective (per-vCPU-hour, per-GB-hour) unit prices for a config.

    Both ramp linearly from 2/3 of the base price at the minimum allocation
    to 4/3 at the maximum.
    """
    config.validate()
    c = _exact(config.vcpu)
    m = _exact(config.mem_mb)
    factor_c = Fraction(2, 3) + Fraction(2, 3) * (c - VCPU_MIN) / (VCPU_MAX - VCPU_MIN)
    factor_m = Fraction(2, 3) + Fraction(2, 3) * (m - MEM_MIN) / (MEM_MAX - MEM_MIN)
    return schedule.cpu_per_vcpu_hour * factor_c, schedule.mem_per_gb_hour * factor_m


def job_cost(config: ResourceConfig, runtime_seconds, schedule: PriceSchedule):
    """Billed cost: (mu_c * vcpu + mu_m * mem_gb) * hours."""
    if runtime_seconds < 0:
        raise ValidationError("runtime must be >= 0")
    mu_c, mu_m = unit_prices(config, schedule)
    hourly = mu_c * _exact(config.vcpu) + mu_m * Fraction(config.mem_mb, 1024)
    return hourly * runtime_seconds / 3600


# -- runtime model --------------------------------------------------------

@dataclass(frozen=True)
class RuntimeModel:
    alpha: float
    betas: Tuple[float, ...]
    features: Tuple[str, ...]  # template variables then "vcpu", "mem_mb"
    n_samples: int = 0
    residual_std: float = 0.0  # std of log-space residuals

    def predict(self, values: Sequence[float], config: ResourceConfig) -> float:
        x = list(values) + [config.vcpu, config.mem_mb]
        if len(x) != len(self.features):
            raise ValidationError(
                f"model expects {len(self.features) - 2} template values")
        if any(v <= 0 for v in x):
            raise ValidationError("features must be strictly positive")
        result = self.alpha
        for xi, bi in zip(x, self.betas):
            result *= xi ** bi
        return result

    def to_text(self) -> str:
        lines = [f"features {' '.join(self.features)}",
                 f"alpha {self.alpha!r}",
                 "betas " + " ".join(repr(b) for b in self.betas),
                 f"n_samples {self.n_samples}",
                 f"residual_std {self.residual_std!r}"]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RuntimeModel":
        fields = {}
        for line in text.splitlines():
            key, _, rest = line.partition(" ")
            fields[key] = rest
        return cls(
            alpha=float(fields["alpha"]),
            betas=tuple(float(b) for b in fields["betas"].split()),
            features=tuple(fields["features"].split()),
            n_samples=int(fields["n_samples"]),
            residual_std=float(fields["residual_std"]),
        )


def fit(samples: List[Tuple[Sequence[float], float]],
        feature_names: Sequence[str]) -> RuntimeModel:
    """OLS in log space; zero-variance features are dropped (beta fixed to 0)."""
    names = tuple(feature_names)
    rows = []
    for x, t in samples:
        if len(x) != len(names):
            raise FitError(f"sample has {len(x)} features, expected {len(names)}")
        if t <= 0:
            raise FitError(f"nonpositive runtime rejected: {t}")
        if any(v <= 0 for v in x):
            raise FitError(f"nonpositive feature rejected: {x}")
        rows.append((tuple(x), t))
    if len(rows) < len(names) + 1:
        raise FitError(
            f"underdetermined: {len(rows)} samples for {len(names)} features")
    X = np.log(np.array([x for x, _ in rows], dtype=float))
    y = np.log(np.array([t for _, t in rows], dtype=float))
    varying = [i for i in range(X.shape[1])
               if not np.allclose(X[:, i], X[0, i])]
    design = np.column_stack([np.ones(len(rows))] + [X[:, i] for i in varying])
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise FitError("singular design matrix")
    betas = [0.0] * len(names)
    for j, i in enumerate(varying):
        betas[i] = float(coef[j + 1])
    residuals = y - design @ coef
    return RuntimeModel(
        alpha=float(math.exp(coef[0])),
        betas=tuple(betas),
        features=names,
        n_samples=len(rows),
        residual_std=float(np.std(residuals)),
    )


# -- grid search ----------------------------------------------------------

def resource_grid() -> List[ResourceConfig]:
    """All 16 x 31 = 496 provisionable configurations."""
    return [ResourceConfig(i / 2, mem)
            for i in range(1, 17)
            for mem in range(MEM_MIN, MEM_MAX + 1, 256)]


@dataclass(frozen=True)
class ProvisionChoice:
    config: ResourceConfig
    predicted_runtime: float
    predicted_cost: float


def choose_config(model: RuntimeModel, values: Sequence[float],
                  schedule: PriceSchedule,
                  max_cost: Optional[float] = None,
                  max_runtime: Optional[float] = None) -> ProvisionChoice:
    """Exhaustive grid search under one constraint.

    With a cost cap the predicted runtime is minimized; with a runtime cap
    the predicted cost is minimized.  Ties break toward lower cost, then
    fewer vCPUs, then less memory.
    """
    if (max_cost is None) == (max_runtime is None):
        raise ValidationError("exactly one of max_cost/max_runtime is required")
    if (max_cost is not None and max_cost <= 0) or \
       (max_runtime is not None and max_runtime <= 0):
        raise ValidationError("constraint must be positive")
    candidates = []
    violating = []
    for config in resource_grid():
        t = model.predict(values, config)
        g = float(job_cost(config, t, schedule))
        if max_cost is not None:
            feasible, objective, violation = g <= max_cost, t, g
        else:
            feasible, objective, violation = t <= max_runtime, g, t
        entry = (objective, g, config.vcpu, config.mem_mb,
                 ProvisionChoice(config, t, g))
        if feasible:
            candidates.append(entry)
        else:
            violating.append((violation, g, config.vcpu, config.mem_mb, entry[4]))
    if not candidates:
        best = min(violating)[4]
        raise InfeasibleError(
            f"no configuration satisfies the constraint; closest: "
            f"{best.config.vcpu} vCPU / {best.config.mem_mb} MB "
            f"(runtime {best.predicted_runtime:.1f}s, cost {best.predicted_cost:.5f})",
            best_violating=best)
    return min(candidates)[4]


# -- profiler service -----------------------------------------------------

PROFILE_CPUS = (0.5, 1, 2)
PROFILE_MEMS = (512, 1024, 2048)


def profiling_grid(template: CommandTemplate):
    """(values, vcpu, mem_mb) trials: Cartesian product of hints x cpus x mems."""
    import itertools
    value_combos = list(itertools.product(*template.opts)) if template.k else [()]
    return [(values, cpu, mem)
            for values in value_combos
            for cpu in PROFILE_CPUS
            for mem in PROFILE_MEMS]


@dataclass
class JobSkeleton:
    """Everything besides command and resources needed to submit a job."""
    project: str
    user: str
    input_fileset: str
    code: Tuple[str, ...] = ()


class EngineRunner:
    """Runs a profiling grid through the execution engine.

    Waits for ceil(0.95 * N) successful completions before handing the
    training set back; stragglers keep running but are excluded.
    """

    def __init__(self, engine, poll_interval: float = 0.02):
        self.engine = engine
        self.poll_interval = poll_interval

    def run(self, template: CommandTemplate, trials, skeleton: JobSkeleton):
        from .engine.jobs import FAILED, FINISHED, KILLED
        job_ids = []
        for i, (values, cpu, mem) in enumerate(trials):
            job_id = self.engine.submit(
                project=skeleton.project, user=skeleton.user,
                input_fileset=skeleton.input_fileset,
                output_fileset_name=f"{template.name}.profile.{i}",
                command=template.instantiate(values),
                vcpu=cpu, mem_mb=mem, code=skeleton.code, billed=False,
            )
            job_ids.append(job_id)
        n = len(job_ids)
        need = math.ceil(0.95 * n)
        while True:
            states = [self.engine.get(j).state for j in job_ids]
            finished = sum(s == FINISHED for s in states)
            dead = sum(s in (FAILED, KILLED) for s in states)
            if finished >= need or finished + dead == n:
                break
            import time
            time.sleep(self.poll_interval)
        if dead > n - need:
            raise ProfilingError(
                f"{dead}/{n} profiling jobs failed (limit {n - need})")
        results = []
        for job_id, (values, cpu, mem) in zip(job_ids, trials):
            job = self.engine.get(job_id)
            if job.state == FINISHED and job.runtime and job.runtime > 0:
                results.append((list(values) + [cpu, mem], job.runtime))
        return results


class Profiler:
    """Registry of command templates and their fitted runtime models."""

    def __init__(self, root, engine=None):
        self.root = Path(root) / "models"
        self.root.mkdir(parents=True, exist_ok=True)
        self.engine = engine
        self._lock = threading.RLock()
        self._templates: Dict[str, CommandTemplate] = {}
        self._models: Dict[str, RuntimeModel] = {}
        self._status: Dict[str, str] = {}   # profiling | ready | failed
        self._errors: Dict[str, str] = {}
        for path in self.root.glob("*.model"):
            name = path.stem
            text = path.read_text()
            header, _, body = text.partition("\n---\n")
            self._templates[name] = parse_template(name, header)
            self._models[name] = RuntimeModel.from_text(body)
            self._status[name] = "ready"

    def register_template(self, name: str, command: str) -> CommandTemplate:
        template = parse_template(name, command)
        with self._lock:
            self._templates[name] = template
            self._status[name] = "profiling"
        return template

    def profile(self, name: str, command: str, skeleton: JobSkeleton,
                runner=None) -> RuntimeModel:
        """Run the profiling grid and fit + register the runtime model."""
        template = self.register_template(name, command)
        if runner is None:
            if self.engine is None:
                raise ValidationError("profiler has no engine attached")
            runner = EngineRunner(self.engine)
        try:
            samples = runner.run(template, profiling_grid(template), skeleton)
            features = tuple(f"tau{i + 1}" for i in range(template.k)) + \
                ("vcpu", "mem_mb")
            model = fit(samples, features)
        except Exception as exc:
            with self._lock:
                self._status[name] = "failed"
                self._errors[name] = str(exc)
            raise
        with self._lock:
            self._models[name] = model
            self._status[name] = "ready"
            (self.root / f"{name}.model").write_text(
                template.command + "\n---\n" + model.to_text())
        return model

    def profile_async(self, name: str, command: str, skeleton: JobSkeleton,
                      runner=None) -> threading.Thread:
        self.register_template(name, command)
        thread = threading.Thread(
            target=self._profile_quiet, args=(name, command, skeleton, runner),
            daemon=True)
        thread.start()
        return thread

    def _profile_quiet(self, name, command, skeleton, runner):
        try:
            self.profile(name, command, skeleton, runner)
        except Exception:
            pass  # status/_errors carry the failure

    def status(self, name: str) -> dict:
        with self._lock:
            if name not in self._templates:
                raise NotFoundError(f"no such template: {name}")
            out = {"template_name": name, "status": self._status[name],
                   "command_template": self._templates[name].command}
            if name in self._models:
                model = self._models[name]
                out["model"] = {"alpha": model.alpha,
                                "betas": list(model.betas),
                                "features": list(model.features),
                                "n_samples": model.n_samples,
                                "residual_std": model.residual_std}
            if name in self._errors:
                out["error"] = self._errors[name]
            return out

    def model(self, name: str) -> RuntimeModel:
        with self._lock:
            if name not in self._models:
                raise NotFoundError(f"no fitted model for template: {name}")
            return self._models[name]

    def template(self, name: str) -> CommandTemplate:
        with self._lock:
            if name not in self._templates:
                raise NotFoundError(f"no such template: {name}")
            return self._templates[name]

    def autoprovision(self, name: str, values: Sequence[int],
                      skeleton: JobSkeleton, schedule: PriceSchedule,
                      max_cost: Optional[float] = None,
                      max_runtime: Optional[float] = None,
                      output_fileset_name: Optional[str] = None):
        """Pick the optimal config and submit the composed job."""
        template = self.template(name)
        model = self.model(name)
        choice = choose_config(model, list(values), schedule,
                               max_cost=max_cost, max_runtime=max_runtime)
        job_id = None
        if self.engine is not None:
            job_id = self.engine.submit(
                project=skeleton.project, user=skeleton.user,
                input_fileset=skeleton.input_fileset,
                output_fileset_name=output_fileset_name or f"{name}.auto",
                command=template.instantiate(list(values)),
                vcpu=choice.config.vcpu, mem_mb=choice.config.mem_mb,
                code=skeleton.code,
            )
        return choice, job_id
