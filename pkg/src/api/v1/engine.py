"""Headless engine for the full experiment protocol."""

from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator

from .endpoints import AlgorithmStatus, ExperimentConfig, RunManifest
from ... import pipeline
from ...dataset import Dataset
from ...ensemble.quantiles import TauGrid
from ...ensemble.runner import RunOutput, run_all_algorithms
from ...exporter import utc_now, write_manifest, write_results
from ...metrics import EvaluationReport
from ...services.splitting import ThreeWaySplit


class ExperimentEngine:
    """Runs load, split, fit, predict, evaluate and export without any CLI concerns."""

    def __init__(self, config: ExperimentConfig) -> None:
        self.config = config
        self.grid = TauGrid(tuple(config.taus))
        self.stage_seconds: Dict[str, float] = {}

    @contextmanager
    def _timed(self, stage: str) -> Iterator[None]:
        started = time.perf_counter()
        try:
            yield
        finally:
            elapsed = time.perf_counter() - started
            self.stage_seconds[stage] = elapsed
            logging.info("Stage %s finished in %.2fs", stage, elapsed)

    def load_dataset(self) -> Dataset:
        with self._timed("load"):
            return pipeline.load_input(self.config)

    def split(self, d: Dataset) -> ThreeWaySplit:
        with self._timed("split"):
            return pipeline.split(d, self.config)

    def run_algorithms(self, parts: ThreeWaySplit) -> RunOutput:
        with self._timed("algorithms"):
            return run_all_algorithms(parts, self.grid, self.config)

    def evaluate(self, output: RunOutput, parts: ThreeWaySplit) -> EvaluationReport | None:
        if not output.matrices:
            logging.error("No algorithm produced a quantile matrix; skipping evaluation.")
            return None
        with self._timed("evaluate"):
            return pipeline.evaluate_matrices(
                output.matrices, parts.set3, parts.training(), self.grid, order=self.config.algorithms
            )

    def run(self, out_dir: Path | str | None = None) -> RunManifest:
        """
        Execute the protocol and write every artifact.

        Data and config problems propagate; algorithm failures are recorded in
        the manifest, which is then marked incomplete.
        """
        started_at = utc_now()
        out = Path(out_dir or self.config.output_dir)
        d = self.load_dataset()
        parts = self.split(d)
        output = self.run_algorithms(parts)
        report = self.evaluate(output, parts)

        skills = report.to_dict()["scoring_rule_skill"] if report is not None else {}
        status: Dict[str, AlgorithmStatus] = {}
        for algorithm_id in self.config.algorithms:
            st = output.status.get(algorithm_id)
            if st is None:
                st = AlgorithmStatus(algorithm=algorithm_id, success=False, message="not run")
            elif st.success and report is not None:
                st = st.model_copy(
                    update={
                        "diagnostics": {
                            **st.diagnostics,
                            "scoring_rule_skill": skills.get(algorithm_id),
                        }
                    }
                )
            status[algorithm_id] = st

        with self._timed("export"):
            written = write_results(out, self.config, output.matrices, report, output.stacked)
        stage_seconds = dict(self.stage_seconds)
        stage_seconds.update({f"algorithm {k}": v for k, v in output.seconds.items()})
        manifest = write_manifest(
            out, self.config, written, report is not None, status, stage_seconds, started_at=started_at
        )
        if manifest.complete:
            logging.info("Experiment complete: %d algorithms written to %s", len(output.matrices), out)
        else:
            logging.warning("Experiment incomplete; see %s", out / "manifest.json")
        return manifest


def run_experiment(config: ExperimentConfig, out_dir: Path | str | None = None) -> RunManifest:
    return ExperimentEngine(config).run(out_dir)


__all__ = ["ExperimentEngine", "run_experiment"]
