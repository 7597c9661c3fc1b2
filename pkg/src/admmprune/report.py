"""Per-iteration solver traces and their summary form."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ValidationError


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    seconds: float
    objective: float
    sparsity: float


@dataclass
class PruneReport:
    """Trace of one solver run plus the configuration that produced it."""

    layer: str
    records: list = field(default_factory=list)
    final_objective: float = 0.0
    final_density: float = 1.0
    config: dict = field(default_factory=dict)

    def validate(self):
        """Check the trace invariants: contiguous steps, monotone clock."""
        for pos, rec in enumerate(self.records, start=1):
            if rec.iter != pos:
                raise ValidationError(
                    f"iteration column must count 1..n, got {rec.iter} at row {pos}"
                )
            if rec.seconds < 0 or rec.objective < 0:
                raise ValidationError("seconds and objective must be >= 0")
            if not 0.0 <= rec.sparsity <= 1.0:
                raise ValidationError("sparsity must be in [0, 1]")
            if pos > 1 and rec.seconds < self.records[pos - 2].seconds:
                raise ValidationError("seconds must be non-decreasing")
        return self
