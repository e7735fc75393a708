"""API V1: schemas and headless engine for the ensemble experiment.

Only the pydantic schemas are imported eagerly; import the engine from
``src.api.v1.engine``.
"""

from .endpoints import AlgorithmStatus, ExperimentConfig, ProcessResult, RunManifest

__all__ = ["AlgorithmStatus", "ExperimentConfig", "ProcessResult", "RunManifest"]
