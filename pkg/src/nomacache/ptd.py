"""Closed-form analysis of the push-then-deliver strategy.

Pushing phase: the station superimposes up to ``M_s`` files; the most
popular one gets a CR-style guaranteed power share sized for the ``t``-th
nearest cache server, the rest share the residual power with fixed
fractions.  Cache hits are read off the ordered-distance laws of the server
field (no small-scale fading on the station-to-server links).

Delivery phase: every cache server simultaneously serves a near/far user
pair with a two-message superposition, so the outage expressions combine
the in-cell composite fading/path-loss law with the Laplace transform of
the co-channel interference field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _special

from .content import FileLibrary, hit_probability
from .estimates import (
    SOURCE_CLOSED_FORM,
    SOURCE_QUADRATURE,
    ProbEstimate,
    analysis_estimate,
)
from .noma import PowerAllocation
from .numerics import QuadratureRule, beta_fn, chebyshev_nodes
from .point_fields import GeometryConfig

__all__ = [
    "PushScenario",
    "DeliveryScenario",
    "outage_f1_at_cs",
    "outage_fi_at_target",
    "outage_fi_at_cs_m",
    "push_hit_probability",
    "mean_ordered_gain",
    "interference_laplace",
    "composite_gain_cdf",
    "delivery_outage_near",
    "delivery_outage_far",
    "delivery_outage_oma",
]


@dataclass(frozen=True)
class PushScenario:
    """Parameters of one pushing-phase configuration.

    Attributes:
        library: content library (rates indexed in popularity order).
        m: ordering index of the tagged cache server (hits are evaluated
            there), 1-based.
        t: ordering index of the design-point server the guaranteed power
            share is sized for; requires ``1 <= m <= t``.
        M_s: number of files superimposed per push slot.
        betas: residual power fractions for files ``2..M_s`` (length
            ``M_s - 1``, summing to one; empty for ``M_s = 1``).
        rho: transmit SNR of the station.
        geometry: the server-field geometry.
    """

    library: FileLibrary
    m: int
    t: int
    M_s: int
    betas: tuple[float, ...]
    rho: float
    geometry: GeometryConfig

    def __post_init__(self) -> None:
        if not 1 <= self.m <= self.t:
            raise ValueError(f"need 1 <= m <= t, got m={self.m}, t={self.t}")
        if not 1 <= self.M_s <= self.library.file_count:
            raise ValueError(
                f"M_s must lie in [1, {self.library.file_count}], got {self.M_s}"
            )
        betas = tuple(float(b) for b in self.betas)
        if len(betas) != self.M_s - 1:
            raise ValueError(
                f"betas must cover files 2..{self.M_s}: expected {self.M_s - 1} "
                f"entries, got {len(betas)}"
            )
        if betas:
            if any(b < 0.0 for b in betas):
                raise ValueError("residual fractions must be nonnegative")
            if abs(sum(betas) - 1.0) > 1e-12:
                raise ValueError(f"residual fractions must sum to 1, got {sum(betas)!r}")
        if self.rho <= 0.0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        object.__setattr__(self, "betas", betas)

    @property
    def eps(self) -> np.ndarray:
        """Decoding thresholds of the pushed files."""
        return self.library.eps[: self.M_s]

    @property
    def eps1(self) -> float:
        return float(self.eps[0])

    def residual_margins(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-file residual margins ``xibar`` and running minima ``phi``.

        Both arrays are indexed by file ``i = 2..M_s`` (position ``i - 2``).
        ``phi[i-2] <= 0`` means file ``i`` can never be decoded whatever the
        channel (its outage is one).
        """
        b = np.asarray(self.betas, dtype=float)
        if b.size == 0:
            return np.zeros(0), np.zeros(0)
        eps_tail = self.eps[1:]
        tail = np.concatenate([np.cumsum(b[::-1])[::-1][1:], [0.0]])
        xibar = b - eps_tail * tail
        phi = np.minimum.accumulate(xibar / eps_tail)
        return xibar, phi


def _poisson_at_most(count: int, mu: float) -> float:
    # P(Poisson(mu) <= count) via the regularized upper incomplete gamma
    return float(_special.gammaincc(count + 1, mu))


def outage_f1_at_cs(n: int, scenario: PushScenario) -> ProbEstimate:
    """Outage of the guaranteed file at the n-th nearest cache server.

    Under the CR share the guaranteed file decodes exactly when a bare
    full-power transmission would, so the outage is the chance that the
    n-th server sits outside the full-power decode radius
    ``(rho / eps1)^(1/alpha)``.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    g = scenario.geometry
    mu = g.lambda_c * math.pi * (scenario.rho / scenario.eps1) ** (2.0 / g.alpha)
    return analysis_estimate(_poisson_at_most(n - 1, mu), context=f"outage_f1_at_cs(n={n})")


def outage_fi_at_target(i: int, scenario: PushScenario) -> ProbEstimate:
    """Outage of opportunistic file ``i`` (2..M_s) at the design-point server.

    The residual share suffices at gain ``z`` exactly when
    ``z >= eps1/rho + (1 + eps1)/(rho phi_i)``, so the outage is the chance
    that the t-th server lies beyond the corresponding radius.  An
    infeasible split (``phi_i <= 0``) makes the outage one (flagged).
    """
    _check_file_index(i, scenario)
    _, phi = scenario.residual_margins()
    phi_i = float(phi[i - 2])
    if phi_i <= 0.0:
        return ProbEstimate(1.0, SOURCE_CLOSED_FORM, flags=(f"phi[{i}] <= 0: file {i} undecodable",))
    g = scenario.geometry
    eps1, rho = scenario.eps1, scenario.rho
    radius_sq = (eps1 / rho + (1.0 + eps1) / (rho * phi_i)) ** (-2.0 / g.alpha)
    mu = g.lambda_c * math.pi * radius_sq
    return analysis_estimate(
        _poisson_at_most(scenario.t - 1, mu), context=f"outage_fi_at_target(i={i})"
    )


def outage_fi_at_cs_m(
    m: int,
    i: int,
    scenario: PushScenario,
    rule: QuadratureRule | None = None,
) -> ProbEstimate:
    """Outage of opportunistic file ``i`` at the m-th nearest server (m <= t).

    Splits into the event that even the guaranteed file fails at the design
    point (no residual power at all) plus the quadrature term over design
    point distances where the residual share exists but is too small at the
    m-th server.
    """
    _check_file_index(i, scenario)
    if not 1 <= m <= scenario.t:
        raise ValueError(f"need 1 <= m <= t, got m={m}, t={scenario.t}")
    if m == scenario.t:
        return outage_fi_at_target(i, scenario)
    if rule is None:
        rule = chebyshev_nodes()
    _, phi = scenario.residual_margins()
    phi_i = float(phi[i - 2])
    if phi_i <= 0.0:
        return ProbEstimate(1.0, SOURCE_QUADRATURE, flags=(f"phi[{i}] <= 0: file {i} undecodable",))

    g = scenario.geometry
    t = scenario.t
    eps1, rho, alpha = scenario.eps1, scenario.rho, g.alpha
    lam_pi = g.lambda_c * math.pi

    tau1 = (rho * phi_i / (1.0 + eps1 + eps1 * phi_i)) ** (1.0 / alpha)
    tau2 = (rho / eps1) ** (1.0 / alpha)
    if tau1 > tau2:
        raise ValueError(
            f"decode radii out of order (tau1={tau1!r} > tau2={tau2!r}); "
            "thresholds and power split are inconsistent"
        )

    # design point fails outright beyond tau2
    p_t1 = _poisson_at_most(t - 1, lam_pi * tau2**2)

    def g_radius(y: np.ndarray) -> np.ndarray:
        margin = np.clip(phi_i * (rho - eps1 * y**alpha) / (1.0 + eps1), 0.0, None)
        return margin ** (1.0 / alpha)

    half = 0.5 * (tau2 - tau1)
    y = half * rule.nodes + 0.5 * (tau2 + tau1)
    gy = g_radius(y)
    kmax = t - m - 1
    norm = 4.0 * lam_pi**t / (math.factorial(kmax) * math.factorial(m - 1))
    inner = np.zeros_like(y)
    for p in range(kmax + 1):
        coef = (-1.0) ** p * math.comb(kmax, p)
        power = 2 * m + 2 * p
        inner += coef * y ** (2 * kmax - 2 * p + 1) * (y**power - gy**power) / power
    vals = norm * np.exp(-lam_pi * y * y) * inner
    q1 = float(half * np.dot(rule.weights, vals))

    return analysis_estimate(
        p_t1 + q1, source=SOURCE_QUADRATURE, context=f"outage_fi_at_cs_m(m={m}, i={i})"
    )


def push_hit_probability(
    m: int,
    scenario: PushScenario,
    mode: str = "noma",
    rule: QuadratureRule | None = None,
) -> ProbEstimate:
    """Cache hit probability at the m-th nearest server after one push slot.

    ``noma`` pushes ``M_s`` files by superposition; ``oma`` spends the slot
    on the most popular file alone.  The hit probability weighs per-file
    decode successes by request popularity.
    """
    if mode not in ("noma", "oma"):
        raise ValueError(f"mode must be 'noma' or 'oma', got {mode!r}")
    sub = outage_f1_at_cs(m, scenario)
    failures = [sub.value]
    flags = sub.flags
    source = SOURCE_CLOSED_FORM
    count = 1
    if mode == "noma":
        count = scenario.M_s
        for i in range(2, scenario.M_s + 1):
            est = outage_fi_at_cs_m(m, i, scenario, rule)
            failures.append(est.value)
            flags += est.flags
            if est.source == SOURCE_QUADRATURE:
                source = SOURCE_QUADRATURE
    pop = scenario.library.popularity_head(count)
    hit = hit_probability(pop, failures)
    return ProbEstimate(value=hit, source=source, flags=flags)


def mean_ordered_gain(t: int, lambda_c: float, alpha: float) -> float:
    """Mean path-loss gain ``E[r_t^-alpha]`` of the t-th nearest server.

    Equals ``(lambda_c pi)^(alpha/2) Gamma(t - alpha/2) / Gamma(t)``;
    finite only for ``t > alpha / 2``.
    """
    if alpha <= 2.0:
        raise ValueError(f"alpha must exceed 2, got {alpha}")
    if t <= alpha / 2.0:
        raise ValueError(f"mean gain diverges unless t > alpha/2, got t={t}")
    lp = lambda_c * math.pi
    return float(lp ** (alpha / 2.0) * _special.gamma(t - alpha / 2.0) / _special.gamma(t))


def interference_laplace(s, lambda_c: float, alpha: float):
    """Laplace transform of the unit-power interference field at the origin.

    ``E[e^(-s I)] = exp(-2 pi lambda_c s^(2/alpha) B(2/alpha, (alpha-2)/alpha)
    / alpha)`` for a homogeneous field of density ``lambda_c`` with path loss
    exponent ``alpha > 2`` and unit-mean exponential marks.  Exact (no
    quadrature); vectorised over ``s``.
    """
    if alpha <= 2.0:
        raise ValueError(f"alpha must exceed 2, got {alpha}")
    if lambda_c <= 0.0:
        raise ValueError(f"lambda_c must be positive, got {lambda_c}")
    s_a = np.asarray(s, dtype=float)
    if np.any(s_a < 0.0):
        raise ValueError("transform argument must be nonnegative")
    coef = 2.0 * math.pi * lambda_c * beta_fn(2.0 / alpha, (alpha - 2.0) / alpha) / alpha
    out = np.exp(-coef * s_a ** (2.0 / alpha))
    return float(out) if out.ndim == 0 else out


def _composite_terms(radius: float, alpha: float, rule: QuadratureRule) -> tuple[np.ndarray, np.ndarray]:
    # weights and path-loss constants of the composite fading/position CDF
    w = rule.nodes
    wbar = (math.pi / (2.0 * rule.order)) * np.sqrt(1.0 - w * w) * (w + 1.0)
    c = ((radius / 2.0) * (w + 1.0)) ** alpha
    return wbar, c


def composite_gain_cdf(z, radius: float, alpha: float, rule: QuadratureRule | None = None):
    """CDF of ``h / r^alpha`` for Rayleigh ``h`` and ``r`` uniform in a disc.

    Chebyshev-Gauss approximation ``sum_n wbar_n (1 - e^(-c_n z))`` of
    ``(2 / radius^2) integral (1 - e^(-u^alpha z)) u du``.
    """
    if radius <= 0.0:
        raise ValueError(f"radius must be positive, got {radius}")
    if alpha <= 2.0:
        raise ValueError(f"alpha must exceed 2, got {alpha}")
    if rule is None:
        rule = chebyshev_nodes()
    z_a = np.asarray(z, dtype=float)
    wbar, c = _composite_terms(radius, alpha, rule)
    out = np.sum(wbar * (1.0 - np.exp(-c * z_a[..., None])), axis=-1)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DeliveryScenario:
    """Parameters of one delivery-phase configuration.

    The serving cache server superimposes two messages: stage 0 for the far
    user (ring ``[Rs, Rc]``, rate ``R1``), stage 1 for the near user (disc
    ``[0, Rs]``, rate ``R2``).  Other servers interfere at unit total power.

    The OMA baseline gives each user a dedicated slot: the scheduled user
    gets the full power at ``rate_scale`` times its target rate.  The far
    user is served every slot at doubled rate by default; the near user is
    scheduled with probability one half at its own rate.
    """

    alloc: PowerAllocation
    R1: float
    R2: float
    rho: float
    geometry: GeometryConfig
    oma_far_rate_scale: float = 2.0
    oma_far_serve_prob: float = 1.0
    oma_near_rate_scale: float = 1.0
    oma_near_serve_prob: float = 0.5

    def __post_init__(self) -> None:
        if len(self.alloc) != 2:
            raise ValueError(f"delivery uses a two-message superposition, got {len(self.alloc)}")
        if self.R1 <= 0.0 or self.R2 <= 0.0:
            raise ValueError("target rates must be positive")
        if self.rho <= 0.0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        for p in (self.oma_far_serve_prob, self.oma_near_serve_prob):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"serve probability {p} outside [0, 1]")
        if self.oma_far_rate_scale <= 0.0 or self.oma_near_rate_scale <= 0.0:
            raise ValueError("rate scales must be positive")

    @property
    def eps1(self) -> float:
        return 2.0**self.R1 - 1.0

    @property
    def eps2(self) -> float:
        return 2.0**self.R2 - 1.0

    @property
    def far_margin(self) -> float:
        """``alpha_1^2 - eps1 alpha_2^2``; nonpositive means certain outage."""
        a1, a2 = self.alloc.coeffs
        return a1 - self.eps1 * a2

    @property
    def near_margin(self) -> float:
        """``min{far_margin / eps1, alpha_2^2 / eps2}`` for the two-stage SIC."""
        return min(self.far_margin / self.eps1, self.alloc.coeffs[1] / self.eps2)


def _interference_success(scenario: DeliveryScenario, radius: float, scale: float, rule: QuadratureRule) -> float:
    # E over user position in a disc and fading of e^{-r^alpha scale (I + 1/rho)}
    g = scenario.geometry
    wbar, c = _composite_terms(radius, g.alpha, rule)
    s = c * scale
    lap = interference_laplace(s, g.lambda_c, g.alpha)
    return float(np.sum(wbar * np.exp(-s / scenario.rho) * lap))


def _ring_success(scenario: DeliveryScenario, scale: float, rule: QuadratureRule) -> float:
    g = scenario.geometry
    rs2, rc2 = g.Rs**2, g.Rc**2
    s_in = _interference_success(scenario, g.Rs, scale, rule)
    s_out = _interference_success(scenario, g.Rc, scale, rule)
    return float((rc2 * s_out - rs2 * s_in) / (rc2 - rs2))


def delivery_outage_near(scenario: DeliveryScenario, rule: QuadratureRule | None = None) -> ProbEstimate:
    """Outage of the near user (must pass both SIC stages)."""
    if rule is None:
        rule = chebyshev_nodes()
    margin = scenario.near_margin
    if margin <= 0.0:
        return ProbEstimate(1.0, SOURCE_QUADRATURE, flags=("near SIC margin <= 0: certain outage",))
    ok = _interference_success(scenario, scenario.geometry.Rs, 1.0 / margin, rule)
    return analysis_estimate(1.0 - ok, source=SOURCE_QUADRATURE, context="delivery_outage_near")


def delivery_outage_far(scenario: DeliveryScenario, rule: QuadratureRule | None = None) -> ProbEstimate:
    """Outage of the far user (decodes its message treating the pair as noise)."""
    if rule is None:
        rule = chebyshev_nodes()
    d = scenario.far_margin
    if d <= 0.0:
        return ProbEstimate(1.0, SOURCE_QUADRATURE, flags=("far power margin <= 0: certain outage",))
    ok = _ring_success(scenario, scenario.eps1 / d, rule)
    return analysis_estimate(1.0 - ok, source=SOURCE_QUADRATURE, context="delivery_outage_far")


def delivery_outage_oma(
    scenario: DeliveryScenario,
    user: str,
    rule: QuadratureRule | None = None,
) -> ProbEstimate:
    """Outage of one user under the dedicated-slot baseline.

    The scheduled user receives a single full-power message at
    ``rate_scale`` times its target rate; being unscheduled counts as
    outage.  Conventions are carried by the scenario fields.
    """
    if rule is None:
        rule = chebyshev_nodes()
    if user == "far":
        eps = 2.0 ** (scenario.oma_far_rate_scale * scenario.R1) - 1.0
        ok = scenario.oma_far_serve_prob * _ring_success(scenario, eps, rule)
    elif user == "near":
        eps = 2.0 ** (scenario.oma_near_rate_scale * scenario.R2) - 1.0
        ok = scenario.oma_near_serve_prob * _interference_success(
            scenario, scenario.geometry.Rs, eps, rule
        )
    else:
        raise ValueError(f"user must be 'near' or 'far', got {user!r}")
    return analysis_estimate(1.0 - ok, source=SOURCE_QUADRATURE, context=f"delivery_outage_oma({user})")


def _check_file_index(i: int, scenario: PushScenario) -> None:
    if scenario.M_s < 2:
        raise ValueError("no opportunistic files when M_s < 2")
    if not 2 <= i <= scenario.M_s:
        raise ValueError(f"file index must lie in [2, {scenario.M_s}], got {i}")
