"""Result types for checks and witness searches.

Two result shapes cover everything the toolkit reports:

* :class:`ConditionReport` — outcome of a sampled check.  The verdict
  vocabulary is deliberately tiny: ``pass-on-samples`` (no violation found
  among the samples; never a proof) or ``fail`` (a concrete violation was
  found).  Every ``fail`` carries a witness dictionary with the inputs and
  both sides of the violated inequality, precise enough to re-evaluate
  independently to 1e-12.
* :class:`WitnessTranscript` — outcome of a *constructive* search (e.g.
  showing a rival growth structure cannot hold).  It records every
  numeric step of the search so the transcript stands on its own.

Both serialize to structured text (``key: value`` lines) and to CSV rows;
seeds are always recorded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .fields import fmt

PASS = "pass-on-samples"
FAIL = "fail"


def _jsonify(value):
    """Make numpy scalars/arrays JSON-serializable without losing precision."""
    import numpy as np

    if isinstance(value, (bool,)):
        return value
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, np.ndarray):
        return [_jsonify(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_jsonify(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonify(v) for k, v in value.items()}
    return value


def _format_scalar(value) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return fmt(value)
    return str(value)


@dataclass
class ConditionReport:
    """Outcome of one sampled condition check."""

    condition: str
    verdict: str
    samples: int
    seed: int
    details: dict = field(default_factory=dict)
    witness: dict | None = None

    def __post_init__(self):
        if self.verdict not in (PASS, FAIL):
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.verdict == FAIL and not self.witness:
            raise ValueError("fail verdicts must carry a witness")
        self.details = _jsonify(self.details)
        if self.witness is not None:
            self.witness = _jsonify(self.witness)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_text(self) -> str:
        lines = [
            f"condition: {self.condition}",
            f"verdict: {self.verdict}",
            f"samples: {self.samples}",
            f"seed: {self.seed}",
        ]
        for key in sorted(self.details):
            lines.append(f"{key}: {_format_scalar(self.details[key])}")
        if self.witness is not None:
            lines.append("witness:")
            for key in sorted(self.witness):
                lines.append(f"  {key}: {_format_scalar(self.witness[key])}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def csv_header() -> str:
        return "condition,verdict,samples,seed,details,witness"

    def to_csv_row(self) -> str:
        details = json.dumps(self.details, sort_keys=True)
        witness = json.dumps(self.witness, sort_keys=True) if self.witness else ""
        return ",".join(
            [
                self.condition,
                self.verdict,
                str(self.samples),
                str(self.seed),
                '"' + details.replace('"', '""') + '"',
                '"' + witness.replace('"', '""') + '"' if witness else "",
            ]
        )


@dataclass
class WitnessTranscript:
    """Numeric transcript of a constructive witness search."""

    name: str
    found: bool
    steps: list = field(default_factory=list)
    conclusion: str = ""
    seed: int | None = None

    def add(self, label: str, **numbers) -> dict:
        step = {"label": label}
        step.update({k: _jsonify(v) for k, v in numbers.items()})
        self.steps.append(step)
        return step

    def to_text(self) -> str:
        lines = [f"witness: {self.name}", f"found: {self.found}"]
        if self.seed is not None:
            lines.append(f"seed: {self.seed}")
        for step in self.steps:
            parts = [
                f"{k}={_format_scalar(v)}"
                for k, v in step.items()
                if k != "label"
            ]
            lines.append(f"  {step['label']}: " + ", ".join(parts))
        if self.conclusion:
            lines.append(f"conclusion: {self.conclusion}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def csv_header() -> str:
        return "witness,found,step,label,values"

    def to_csv_rows(self) -> list[str]:
        rows = []
        for i, step in enumerate(self.steps):
            values = json.dumps(
                {k: v for k, v in step.items() if k != "label"}, sort_keys=True
            )
            rows.append(
                ",".join(
                    [
                        self.name,
                        str(self.found),
                        str(i),
                        step["label"],
                        '"' + values.replace('"', '""') + '"',
                    ]
                )
            )
        return rows
