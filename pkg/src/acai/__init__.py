"""ACAI: desk-scale ML experiment platform.

Versioned data lake (files, filesets, metadata, provenance DAG) plus an
execution engine with quota FIFO scheduling and model-based resource
auto-provisioning, served over a FastAPI gateway with a thin CLI client.
"""

from .config import Config
from .platform import Platform

__all__ = ["Config", "Platform"]
__version__ = "0.1.0"
