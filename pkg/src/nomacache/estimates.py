"""Probability values tagged with their provenance.

Analysis code and the Monte Carlo engines both return :class:`ProbEstimate`
so downstream tooling (sweeps, comparison reports, CSV output) can treat the
two uniformly and keep confidence intervals and diagnostic flags attached to
the numbers they describe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "SOURCE_CLOSED_FORM",
    "SOURCE_QUADRATURE",
    "SOURCE_MONTE_CARLO",
    "ProbEstimate",
    "analysis_estimate",
    "mc_estimate",
]

SOURCE_CLOSED_FORM = "closed_form"
SOURCE_QUADRATURE = "quadrature"
SOURCE_MONTE_CARLO = "monte_carlo"

_SOURCES = (SOURCE_CLOSED_FORM, SOURCE_QUADRATURE, SOURCE_MONTE_CARLO)


@dataclass(frozen=True)
class ProbEstimate:
    """A probability together with how it was obtained.

    Attributes:
        value: the estimate, always inside [0, 1].
        source: ``closed_form``, ``quadrature`` or ``monte_carlo``.
        trials: Monte Carlo trial count, ``None`` for analysis results.
        ci_halfwidth: 95% binomial half width ``1.96 sqrt(v(1-v)/n)``,
            ``None`` for analysis results.
        flags: diagnostic notes such as infeasible power splits or window
            truncation records.  Flags never remove a value; callers decide
            what to do with flagged points.
    """

    value: float
    source: str
    trials: int | None = None
    ci_halfwidth: float | None = None
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.source not in _SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"probability {self.value!r} outside [0, 1]")
        if self.trials is not None and self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.ci_halfwidth is not None and self.ci_halfwidth < 0.0:
            raise ValueError("ci_halfwidth must be nonnegative")

    def with_flags(self, *extra: str) -> "ProbEstimate":
        """Copy of this estimate with extra diagnostic flags appended."""
        if not extra:
            return self
        return ProbEstimate(
            value=self.value,
            source=self.source,
            trials=self.trials,
            ci_halfwidth=self.ci_halfwidth,
            flags=self.flags + tuple(extra),
        )


def analysis_estimate(
    value: float,
    source: str = SOURCE_CLOSED_FORM,
    flags: tuple[str, ...] = (),
    context: str = "",
) -> ProbEstimate:
    """Wrap an analytical probability under the shared clamping policy."""
    from .numerics import clamp_probability

    v = clamp_probability(float(value), context=context)
    return ProbEstimate(value=v, source=source, flags=tuple(flags))


def mc_estimate(successes: int, trials: int, flags: tuple[str, ...] = ()) -> ProbEstimate:
    """Binomial point estimate with a normal-approximation 95% half width."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not 0 <= successes <= trials:
        raise ValueError(f"successes {successes} outside [0, {trials}]")
    v = successes / trials
    hw = 1.96 * math.sqrt(v * (1.0 - v) / trials)
    return ProbEstimate(
        value=v,
        source=SOURCE_MONTE_CARLO,
        trials=trials,
        ci_halfwidth=hw,
        flags=tuple(flags),
    )
