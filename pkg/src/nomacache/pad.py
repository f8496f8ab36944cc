"""Closed-form analysis of the push-and-deliver strategy.

One block carries a single superposition: message 0 delivers to the
scheduled user while messages 1..M_s push files into the cache tier.  Cache
servers keep an exclusion distance from the station and see no small-scale
fading, so their SIC chain reduces to deterministic decode radii; the
served user is uniform in the tagged server's cell and does fade.

The device-to-device extension treats every listening user as a potential
cache: a requester is served when at least one user inside its cooperation
disc decoded the wanted file during the push.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as _special

from .content import FileLibrary, hit_probability
from .estimates import (
    SOURCE_CLOSED_FORM,
    SOURCE_QUADRATURE,
    ProbEstimate,
    analysis_estimate,
)
from .noma import PowerAllocation, sic_quantities
from .numerics import QuadratureRule, chebyshev_nodes, lower_incomplete_gamma
from .point_fields import (
    GeometryConfig,
    conditional_pdf_user_bs_distance,
    marginal_pdf_rm,
)

__all__ = [
    "PadScenario",
    "D2DScenario",
    "pad_cs_outage",
    "pad_user_outage",
    "pad_hit_probability",
    "pad_oma_benchmark",
    "d2d_decode_probability",
    "d2d_intensity_measure",
    "d2d_hit_probability",
    "d2d_miss_probability",
]

# truncation target for the open-ended server-distance integral
_TAIL = 1e-6

# the served-user integrand peaks against the exclusion boundary, which the
# default 20-node rule resolves to ~4e-4 only; 80 nodes brings it under 3e-5
_USER_RULE_ORDER = 80


@dataclass(frozen=True)
class PadScenario:
    """Parameters of one push-and-deliver configuration.

    Attributes:
        library: content library; only its request popularity is used here,
            the coding lives on the slots.
        alloc: power shares of the superposed messages, delivery first.
        slot_rates: target rates of the messages, delivery first (same
            length as ``alloc``).
        m: ordering index of the tagged cache server, 1-based.
        rho: transmit SNR of the station.
        geometry: server-field geometry; its exclusion factor keeps servers
            ``delta Rc`` away from the station.
        file_slots: pushed slot carrying file ``i`` (entry ``i - 1``, slots
            1-based); defaults to the identity assignment.
        oma_rate_scale: rate multiplier of the dedicated-slot baseline;
            ``None`` scales by the slot count ``M_s + 1`` (equal delivered
            information), 1.0 keeps the original thresholds (optimistic).
    """

    library: FileLibrary
    alloc: PowerAllocation
    slot_rates: tuple[float, ...]
    m: int
    rho: float
    geometry: GeometryConfig
    file_slots: tuple[int, ...] | None = None
    oma_rate_scale: float | None = None
    feasibility_flags: tuple[str, ...] = field(init=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.alloc) < 1:
            raise ValueError("need at least the delivery message")
        rates = tuple(float(r) for r in self.slot_rates)
        if len(rates) != len(self.alloc):
            raise ValueError(
                f"slot_rates must match the superposition: expected {len(self.alloc)} "
                f"entries, got {len(rates)}"
            )
        if any(r <= 0.0 for r in rates):
            raise ValueError("slot rates must be positive")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.rho <= 0.0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if self.M_s > self.library.file_count:
            raise ValueError(
                f"pushing {self.M_s} files from a library of {self.library.file_count}"
            )
        if self.oma_rate_scale is not None and self.oma_rate_scale <= 0.0:
            raise ValueError(f"oma_rate_scale must be positive, got {self.oma_rate_scale}")
        slots = self.file_slots
        if slots is None:
            slots = tuple(range(1, self.M_s + 1))
        else:
            slots = tuple(int(s) for s in slots)
            if sorted(slots) != list(range(1, self.M_s + 1)):
                raise ValueError(
                    f"file_slots must permute the pushed slots 1..{self.M_s}, got {slots}"
                )
        object.__setattr__(self, "slot_rates", rates)
        object.__setattr__(self, "file_slots", slots)
        object.__setattr__(self, "feasibility_flags", self.sic_chain().flags)

    @property
    def M_s(self) -> int:
        """Number of pushed files (the delivery message is not cached)."""
        return len(self.alloc) - 1

    @property
    def slot_eps(self) -> np.ndarray:
        """SINR thresholds of the superposed messages."""
        return np.exp2(np.asarray(self.slot_rates)) - 1.0

    def oma_slot_eps(self) -> np.ndarray:
        """Thresholds of the dedicated-slot baseline."""
        scale = self.oma_rate_scale if self.oma_rate_scale is not None else self.M_s + 1.0
        return np.exp2(scale * np.asarray(self.slot_rates)) - 1.0

    def sic_chain(self):
        """Stage margins and decode radii of the superposition."""
        return sic_quantities(
            self.alloc, self.slot_eps, rho=self.rho, alpha=self.geometry.alpha
        )


def _server_survival(scenario: PadScenario, radius: float) -> float:
    # P(tagged server lies beyond the decode radius), exclusion respected
    g = scenario.geometry
    e = g.exclusion_radius
    if radius <= e:
        return 1.0
    mu = g.lambda_c * math.pi * (radius * radius - e * e)
    return float(_special.gammaincc(scenario.m, mu))


def pad_cs_outage(i: int, scenario: PadScenario, mode: str = "noma") -> ProbEstimate:
    """Outage of pushed file ``i`` (1..M_s) at the tagged cache server.

    Without fading the server decodes its SIC chain exactly when it lies
    inside the running-worst decode radius, so the outage is the chance
    that the m-th server (outside the exclusion zone) sits beyond it.  The
    ``oma`` baseline sends each message in a dedicated slot at the
    time-sliced rate.
    """
    _check_file(i, scenario)
    slot = scenario.file_slots[i - 1]
    if mode == "noma":
        chain = scenario.sic_chain()
        taubar = float(chain.taubar[slot])
        if not math.isfinite(taubar):
            return ProbEstimate(
                1.0,
                SOURCE_CLOSED_FORM,
                flags=(f"slot {slot} margin <= 0: file {i} undecodable",),
            )
        radius = 1.0 / taubar
    elif mode == "oma":
        eps = float(scenario.oma_slot_eps()[slot])
        radius = (scenario.rho / eps) ** (1.0 / scenario.geometry.alpha)
    else:
        raise ValueError(f"mode must be 'noma' or 'oma', got {mode!r}")
    if radius <= scenario.geometry.exclusion_radius:
        return ProbEstimate(
            1.0,
            SOURCE_CLOSED_FORM,
            flags=(f"decode radius inside the exclusion zone: file {i} undecodable",),
        )
    return analysis_estimate(
        _server_survival(scenario, radius), context=f"pad_cs_outage(i={i}, {mode})"
    )


def pad_user_outage(
    scenario: PadScenario,
    mode: str = "noma",
    rule: QuadratureRule | None = None,
) -> ProbEstimate:
    """Outage of the delivery message at the scheduled user.

    The user is uniform in the tagged server's cell, fades, and decodes
    message 0 treating the pushed files as noise; success averages
    ``exp(-(taubar_0 r)^alpha)`` over the user's distance to the station.
    The open-ended server-distance integral is truncated where its tail
    drops below 1e-6 and evaluated on a two-level Chebyshev-Gauss grid.
    """
    if rule is None:
        rule = chebyshev_nodes(_USER_RULE_ORDER)
    g = scenario.geometry
    if mode == "noma":
        chain = scenario.sic_chain()
        taubar0 = float(chain.taubar[0])
        if not math.isfinite(taubar0):
            return ProbEstimate(
                1.0, SOURCE_QUADRATURE, flags=("delivery margin <= 0: certain outage",)
            )
    elif mode == "oma":
        eps = float(scenario.oma_slot_eps()[0])
        taubar0 = (eps / scenario.rho) ** (1.0 / g.alpha)
    else:
        raise ValueError(f"mode must be 'noma' or 'oma', got {mode!r}")

    e = g.exclusion_radius
    mu_star = float(_special.gammainccinv(scenario.m, _TAIL))
    z_star = math.sqrt(e * e + mu_star / (g.lambda_c * math.pi))

    half_outer = 0.5 * (z_star - e)
    y = half_outer * rule.nodes + 0.5 * (z_star + e)
    w_outer = (math.pi / rule.order) * np.sqrt(1.0 - rule.nodes**2) * half_outer

    r = g.Rc * rule.nodes[None, :] + y[:, None]
    w_inner = (math.pi / rule.order) * np.sqrt(1.0 - rule.nodes**2) * g.Rc
    decode = np.exp(-((taubar0 * r) ** g.alpha))
    cond = np.vstack(
        [conditional_pdf_user_bs_distance(r[j], float(y[j]), g.Rc) for j in range(len(y))]
    )
    inner = (cond * decode) @ w_inner
    success = float(np.dot(w_outer, marginal_pdf_rm(y, scenario.m, g.lambda_c, e) * inner))
    return analysis_estimate(
        1.0 - success, source=SOURCE_QUADRATURE, context=f"pad_user_outage({mode})"
    )


def pad_hit_probability(
    scenario: PadScenario, mode: str = "noma", rule: QuadratureRule | None = None
) -> ProbEstimate:
    """Cache hit probability at the tagged server after one block.

    Weighs the per-file decode successes by request popularity; requests
    for files beyond the pushed ``M_s`` always miss.  The delivery message
    is not a cacheable file and does not contribute; with nothing pushed
    the hit probability is zero.
    """
    del rule  # server-side outages are closed-form; kept for surface symmetry
    failures = []
    flags: tuple[str, ...] = ()
    for i in range(1, scenario.M_s + 1):
        est = pad_cs_outage(i, scenario, mode)
        failures.append(est.value)
        flags += est.flags
    if not failures:
        return ProbEstimate(0.0, SOURCE_CLOSED_FORM, flags=("nothing pushed",))
    pop = scenario.library.popularity_head(scenario.M_s)
    return ProbEstimate(
        value=hit_probability(pop, failures), source=SOURCE_CLOSED_FORM, flags=flags
    )


def pad_oma_benchmark(
    variant: str, scenario: PadScenario, rule: QuadratureRule | None = None
) -> ProbEstimate:
    """Hit probability of an orthogonal baseline.

    ``naive`` never pushes, so its hit probability is identically zero;
    ``time_sliced`` sends every message alone in a dedicated sub-slot at
    the scenario's baseline thresholds (see ``oma_rate_scale``).
    """
    if variant == "naive":
        return ProbEstimate(
            0.0, SOURCE_CLOSED_FORM, flags=("naive baseline never pushes",)
        )
    if variant == "time_sliced":
        return pad_hit_probability(scenario, "oma", rule)
    raise ValueError(f"variant must be 'naive' or 'time_sliced', got {variant!r}")


def _check_file(i: int, scenario: PadScenario) -> None:
    if not 1 <= i <= scenario.M_s:
        raise ValueError(f"file index must lie in [1, {scenario.M_s}], got {i}")


@dataclass(frozen=True)
class D2DScenario:
    """Parameters of the device-to-device cooperation extension.

    Listening users form a homogeneous field of density ``lambda_u`` and
    cache whatever they decode from the push superposition (delivery
    message first, as in :class:`PadScenario`).  A requester at distance
    ``bs_distance`` from the station is served when some user within
    ``radius`` of it holds the wanted file.
    """

    alloc: PowerAllocation
    rates: tuple[float, ...]
    rho: float
    alpha: float
    lambda_u: float
    bs_distance: float
    radius: float
    oma_rate_scale: float | None = None

    def __post_init__(self) -> None:
        if len(self.alloc) < 2:
            raise ValueError("need a delivery message plus at least one pushed file")
        rates = tuple(float(r) for r in self.rates)
        if len(rates) != len(self.alloc):
            raise ValueError(
                f"rates must match the superposition: expected {len(self.alloc)} "
                f"entries, got {len(rates)}"
            )
        if any(r <= 0.0 for r in rates):
            raise ValueError("rates must be positive")
        if self.rho <= 0.0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if self.alpha <= 2.0:
            raise ValueError(f"alpha must exceed 2, got {self.alpha}")
        if self.lambda_u <= 0.0:
            raise ValueError(f"lambda_u must be positive, got {self.lambda_u}")
        if self.bs_distance < 0.0:
            raise ValueError(f"bs_distance must be nonnegative, got {self.bs_distance}")
        if self.radius <= 0.0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if self.oma_rate_scale is not None and self.oma_rate_scale <= 0.0:
            raise ValueError(f"oma_rate_scale must be positive, got {self.oma_rate_scale}")
        object.__setattr__(self, "rates", rates)

    @property
    def M_s(self) -> int:
        return len(self.alloc) - 1

    @property
    def eps(self) -> np.ndarray:
        return np.exp2(np.asarray(self.rates)) - 1.0

    def decode_scale(self, i: int, mode: str = "noma") -> float:
        """Per-distance decode attenuation ``taubar_i`` of pushed file ``i``.

        ``inf`` marks a stage whose power margin is nonpositive (nobody
        ever decodes it).
        """
        if not 1 <= i <= self.M_s:
            raise ValueError(f"file index must lie in [1, {self.M_s}], got {i}")
        if mode == "noma":
            chain = sic_quantities(self.alloc, self.eps, rho=self.rho, alpha=self.alpha)
            return float(chain.taubar[i])
        if mode == "oma":
            scale = self.oma_rate_scale if self.oma_rate_scale is not None else self.M_s + 1.0
            eps = float(np.exp2(scale * self.rates[i]) - 1.0)
            return (eps / self.rho) ** (1.0 / self.alpha)
        raise ValueError(f"mode must be 'noma' or 'oma', got {mode!r}")


def d2d_decode_probability(r, i: int, scenario: D2DScenario, mode: str = "noma"):
    """Chance that a fading user at distance ``r`` decoded pushed file ``i``."""
    taubar = scenario.decode_scale(i, mode)
    ra = np.asarray(r, dtype=float)
    if np.any(ra < 0.0):
        raise ValueError("distances must be nonnegative")
    if not math.isfinite(taubar):
        out = np.zeros_like(ra)
    else:
        out = np.exp(-((taubar * ra) ** scenario.alpha))
    return float(out) if out.ndim == 0 else out


def _arc_angle(z: np.ndarray, r0: float, d: float) -> np.ndarray:
    # half-angle of the circle of radius z (around the station) inside the
    # cooperation disc; endpoints clamp exactly to 0 / pi
    arg = (z * z + r0 * r0 - d * d) / (2.0 * r0 * z)
    return np.arccos(np.clip(arg, -1.0, 1.0))


def d2d_intensity_measure(
    i: int,
    scenario: D2DScenario,
    mode: str = "noma",
    rule: QuadratureRule | None = None,
) -> float:
    """Mean number of file-``i`` holders inside the cooperation disc.

    Integrates the thinned user field over the disc of radius ``d`` around
    the requester: the full inner disc (present only when ``d`` exceeds the
    requester's station distance) has a closed form, the remaining
    crescent is an arc-weighted Chebyshev-Gauss sum.
    """
    if rule is None:
        rule = chebyshev_nodes()
    taubar = scenario.decode_scale(i, mode)
    if not math.isfinite(taubar):
        return 0.0
    r0, d, alpha = scenario.bs_distance, scenario.radius, scenario.alpha
    lam_u = scenario.lambda_u
    weights = (math.pi / rule.order) * np.sqrt(1.0 - rule.nodes**2)

    if d <= r0:
        z = r0 + d * rule.nodes
        decode = np.exp(-((taubar * z) ** alpha))
        arc = 2.0 * lam_u * d * np.dot(weights, decode * z * _arc_angle(z, r0, d))
        return float(arc)

    # the disc around the station of radius d - r0 is wholly inside
    core = (
        2.0
        * math.pi
        * lam_u
        / (alpha * taubar**2)
        * lower_incomplete_gamma(2.0 / alpha, (taubar * (d - r0)) ** alpha)
    )
    if r0 == 0.0:
        # requester sits on the station: purely radial, no crescent
        return float(core)
    z = d + r0 * rule.nodes
    decode = np.exp(-((taubar * z) ** alpha))
    arc = 2.0 * lam_u * r0 * np.dot(weights, decode * z * _arc_angle(z, r0, d))
    return float(core + arc)


def d2d_miss_probability(
    i: int,
    scenario: D2DScenario,
    mode: str = "noma",
    rule: QuadratureRule | None = None,
) -> ProbEstimate:
    """Chance that no user inside the cooperation disc holds file ``i``.

    The holders form a thinned homogeneous field, so the miss probability
    is ``exp(-Lambda)`` with the intensity measure of the disc.
    """
    taubar = scenario.decode_scale(i, mode)
    if not math.isfinite(taubar):
        return ProbEstimate(
            1.0,
            SOURCE_QUADRATURE,
            flags=(f"stage {i} margin <= 0: no listener ever decodes",),
        )
    lam = d2d_intensity_measure(i, scenario, mode, rule)
    return analysis_estimate(
        math.exp(-lam), source=SOURCE_QUADRATURE, context=f"d2d_miss_probability(i={i})"
    )


def d2d_hit_probability(
    i: int,
    scenario: D2DScenario,
    mode: str = "noma",
    rule: QuadratureRule | None = None,
) -> ProbEstimate:
    """Chance that some user inside the cooperation disc holds file ``i``."""
    miss = d2d_miss_probability(i, scenario, mode, rule)
    return ProbEstimate(1.0 - miss.value, miss.source, flags=miss.flags)
