"""Superposition power allocation and SIC decoding primitives.

A transmitter sends up to ``M`` messages at power fractions ``coeffs``
(squared amplitude coefficients summing to one).  Receivers decode in the
fixed message order, subtracting each decoded message before the next.
Everything downstream (push analysis, delivery analysis, the simulators)
builds on the per-stage feasibility quantities computed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MODE_CR_INSPIRED",
    "MODE_FIXED",
    "PowerAllocation",
    "SicQuantities",
    "dbm_to_linear_snr",
    "cr_alpha1",
    "cr_residual_power",
    "derive_cr_allocation",
    "sic_quantities",
    "sinr_noma_downlink",
    "sic_decode_success",
]

MODE_CR_INSPIRED = "CR_inspired"
MODE_FIXED = "fixed"

_COEFF_TOL = 1e-12


def dbm_to_linear_snr(power_dbm: float, noise_dbm: float = -100.0) -> float:
    """Transmit SNR ``rho = 10^((P - sigma^2) / 10)`` from dBm levels."""
    return 10.0 ** ((power_dbm - noise_dbm) / 10.0)


@dataclass(frozen=True)
class PowerAllocation:
    """Squared power coefficients of one superposition transmission.

    Attributes:
        coeffs: per-message power fractions in decode order; nonnegative,
            summing to one within 1e-12.
        mode: ``CR_inspired`` when the first coefficient follows the
            cognitive-radio style guarantee, ``fixed`` otherwise.
    """

    coeffs: tuple[float, ...]
    mode: str = MODE_FIXED

    def __post_init__(self) -> None:
        if self.mode not in (MODE_CR_INSPIRED, MODE_FIXED):
            raise ValueError(f"unknown allocation mode {self.mode!r}")
        if len(self.coeffs) < 1:
            raise ValueError("at least one power coefficient required")
        coeffs = tuple(float(c) for c in self.coeffs)
        if any(c < 0.0 for c in coeffs):
            raise ValueError(f"power coefficients must be nonnegative, got {coeffs}")
        if abs(sum(coeffs) - 1.0) > _COEFF_TOL:
            raise ValueError(f"power coefficients must sum to 1, got sum {sum(coeffs)!r}")
        object.__setattr__(self, "coeffs", coeffs)

    def __len__(self) -> int:
        return len(self.coeffs)


def cr_alpha1(rho, z_t, eps1: float):
    """Power fraction granted to the guaranteed message.

    ``min{1, eps1 (rho z + 1) / (rho (1 + eps1) z)}``: exactly enough power
    that the weakest relevant receiver (channel gain ``z``) decodes the
    first message at threshold ``eps1``, all of it when even that cannot
    help.  Vectorised over ``rho`` and ``z_t``.
    """
    if eps1 <= 0.0:
        raise ValueError(f"eps1 must be positive, got {eps1}")
    rho_a = np.asarray(rho, dtype=float)
    z_a = np.asarray(z_t, dtype=float)
    if np.any(rho_a <= 0.0) or np.any(z_a <= 0.0):
        raise ValueError("rho and z_t must be positive")
    need = eps1 * (rho_a * z_a + 1.0) / (rho_a * (1.0 + eps1) * z_a)
    out = np.minimum(1.0, need)
    return float(out) if out.ndim == 0 else out


def cr_residual_power(rho, z_t, eps1: float):
    """Power fraction left for opportunistic messages, ``1 - cr_alpha1``.

    Equals ``max{0, (rho z - eps1) / (rho (1 + eps1) z)}``.
    """
    out = 1.0 - np.asarray(cr_alpha1(rho, z_t, eps1))
    out = np.maximum(0.0, out)
    return float(out) if out.ndim == 0 else out


def derive_cr_allocation(betas, rho: float, z_t: float, eps1: float) -> PowerAllocation:
    """Full CR-style allocation: guaranteed message plus a split residual.

    ``betas`` are the fractions of the residual power assigned to the
    opportunistic messages (must sum to one).  The result has coefficients
    ``(a1, (1 - a1) betas[0], ..., (1 - a1) betas[-1])``.
    """
    b = tuple(float(x) for x in betas)
    if len(b) < 1:
        raise ValueError("at least one residual fraction required")
    if any(x < 0.0 for x in b):
        raise ValueError(f"residual fractions must be nonnegative, got {b}")
    if abs(sum(b) - 1.0) > _COEFF_TOL:
        raise ValueError(f"residual fractions must sum to 1, got sum {sum(b)!r}")
    a1 = cr_alpha1(rho, z_t, eps1)
    rest = 1.0 - a1
    return PowerAllocation(
        coeffs=(a1,) + tuple(rest * x for x in b),
        mode=MODE_CR_INSPIRED,
    )


@dataclass(frozen=True)
class SicQuantities:
    """Per-stage SIC feasibility quantities for one allocation.

    ``xi`` and ``zeta`` share the value ``coeffs[l] - eps[l] * tail(l)``
    with ``tail(l)`` the power behind stage ``l`` (the last stage has an
    empty tail, so ``zeta[-1] == coeffs[-1]``).  A stage with
    ``zeta <= 0`` can never be decoded regardless of channel quality; such
    stages are reported in ``flags`` and left unclamped so callers can
    apply outage-one semantics.

    ``xibar``/``phi`` describe the residual split in normalised form:
    ``xibar[i] = betas[i] - eps[i+1] * sum_{j>i} betas[j]`` and
    ``phi[i] = min_{l <= i} xibar[l] / eps[l+1]``.

    ``taubar[i] = (min_{l <= i} rho zeta[l] / eps[l])^(-1/alpha)`` is the
    reciprocal decode radius of a fading-free receiver that must pass
    stages ``0..i``; it is ``inf`` when any of those stages is infeasible.
    """

    xi: tuple[float, ...]
    zeta: tuple[float, ...]
    xibar: tuple[float, ...] | None
    phi: tuple[float, ...] | None
    taubar: tuple[float, ...] | None
    flags: tuple[str, ...] = ()

    def all_stages_feasible(self) -> bool:
        return all(z > 0.0 for z in self.zeta)


def sic_quantities(
    alloc: PowerAllocation,
    eps,
    betas=None,
    rho: float | None = None,
    alpha: float | None = None,
) -> SicQuantities:
    """Compute the per-stage SIC quantities for ``alloc`` and thresholds ``eps``.

    Args:
        alloc: the superposition allocation (length M).
        eps: per-stage SINR thresholds, length M, matched to decode order.
        betas: optional residual fractions (length M - 1) describing stages
            ``1..M-1`` in normalised form; enables ``xibar`` and ``phi``.
        rho: optional transmit SNR; together with ``alpha`` enables
            ``taubar``.
        alpha: optional path-loss exponent (> 2).

    Returns:
        SicQuantities with infeasible stages flagged, never clamped.
    """
    coeffs = np.asarray(alloc.coeffs, dtype=float)
    eps_a = np.asarray(tuple(eps), dtype=float)
    if eps_a.shape != coeffs.shape:
        raise ValueError(f"need one threshold per stage: {eps_a.shape} vs {coeffs.shape}")
    if np.any(eps_a <= 0.0):
        raise ValueError("thresholds must be positive")

    tail = np.concatenate([np.cumsum(coeffs[::-1])[::-1][1:], [0.0]])
    zeta = coeffs - eps_a * tail
    flags = tuple(f"zeta[{l}] <= 0: stage undecodable" for l in np.flatnonzero(zeta <= 0.0))

    xibar = phi = None
    if betas is not None:
        b = np.asarray(tuple(betas), dtype=float)
        if len(b) != len(coeffs) - 1:
            raise ValueError(f"betas must cover stages 1..{len(coeffs) - 1}, got {len(b)}")
        bt = np.concatenate([np.cumsum(b[::-1])[::-1][1:], [0.0]])
        xb = b - eps_a[1:] * bt
        xibar = tuple(float(v) for v in xb)
        ratios = xb / eps_a[1:]
        phi = tuple(float(v) for v in np.minimum.accumulate(ratios))
        flags += tuple(f"xibar[{i}] <= 0: residual stage undecodable" for i in np.flatnonzero(xb <= 0.0))

    taubar = None
    if rho is not None:
        if alpha is None or alpha <= 2.0:
            raise ValueError("taubar needs a path-loss exponent alpha > 2")
        if rho <= 0.0:
            raise ValueError(f"rho must be positive, got {rho}")
        margins = np.minimum.accumulate(rho * zeta / eps_a)
        feasible = margins > 0.0
        safe = np.where(feasible, margins, 1.0)
        tb = np.where(feasible, safe ** (-1.0 / alpha), np.inf)
        taubar = tuple(float(v) for v in tb)

    return SicQuantities(
        xi=tuple(float(v) for v in zeta),
        zeta=tuple(float(v) for v in zeta),
        xibar=xibar,
        phi=phi,
        taubar=taubar,
        flags=flags,
    )


def sinr_noma_downlink(own_gain, decode_index: int, alloc: PowerAllocation, interference=0.0, inv_rho: float = 0.0):
    """SINR of SIC stage ``decode_index`` (0-based) at a receiver.

    ``coeffs[i] g / (g sum_{j>i} coeffs[j] + interference + inv_rho)``;
    earlier stages are assumed decoded and subtracted, the last stage sees
    no intra-cluster term.  Vectorised over ``own_gain``/``interference``.
    """
    coeffs = alloc.coeffs
    if not 0 <= decode_index < len(coeffs):
        raise ValueError(f"decode_index {decode_index} outside 0..{len(coeffs) - 1}")
    if inv_rho < 0.0:
        raise ValueError("inv_rho must be nonnegative")
    g = np.asarray(own_gain, dtype=float)
    intra = g * sum(coeffs[decode_index + 1 :])
    out = coeffs[decode_index] * g / (intra + np.asarray(interference, dtype=float) + inv_rho)
    return float(out) if out.ndim == 0 else out


def sic_decode_success(
    own_gain,
    alloc: PowerAllocation,
    eps,
    interference=0.0,
    inv_rho: float = 0.0,
    through_stage: int | None = None,
):
    """Whether SIC succeeds for every stage up to ``through_stage``.

    Success at a stage means SINR >= threshold (equality decodes).  With
    ``through_stage=None`` the full chain is required.  Vectorised over
    ``own_gain`` and ``interference``.
    """
    coeffs = alloc.coeffs
    last = len(coeffs) - 1 if through_stage is None else through_stage
    if not 0 <= last < len(coeffs):
        raise ValueError(f"through_stage {through_stage} outside 0..{len(coeffs) - 1}")
    eps_a = tuple(eps)
    if len(eps_a) != len(coeffs):
        raise ValueError("need one threshold per stage")
    g = np.asarray(own_gain, dtype=float)
    noise = np.asarray(interference, dtype=float) + inv_rho
    ok = np.ones(np.broadcast(g, noise).shape, dtype=bool)
    for l in range(last + 1):
        tail = sum(coeffs[l + 1 :])
        ok &= coeffs[l] * g >= eps_a[l] * (g * tail + noise)
    return bool(ok) if ok.ndim == 0 else ok
