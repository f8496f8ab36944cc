"""Planar point processes behind the caching model.

Cache servers form a homogeneous Poisson field around the base station;
users form clusters (uniform offsets in a disc) around their serving node.
This module samples those fields and evaluates the derived distance laws:
the joint law of the m-th and t-th nearest servers, the marginal law of the
m-th nearest server (optionally outside an exclusion zone), and the law of
the user-to-server distance when the user is uniform in the station's cell.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special as _special

__all__ = [
    "GeometryConfig",
    "DeploymentSample",
    "sample_ordered_distances",
    "joint_pdf_rm_rt",
    "marginal_pdf_rm",
    "marginal_cdf_rm",
    "conditional_pdf_user_bs_distance",
    "sample_cluster_deployment",
    "thinned_density",
]

# Interference outside the simulation window is dropped; the tail fraction
# (relative to a 1 m reference inner radius) must stay below these bounds.
_TAIL_WARN = 1e-4
_TAIL_ERROR = 1e-2
_TAIL_TARGET = 5e-5
_MIN_WINDOW = 5000.0


def _tail_fraction(radius: float, alpha: float) -> float:
    # mean interference beyond `radius` over the mean beyond 1 m, for r^-alpha
    return radius ** (2.0 - alpha)


@dataclass(frozen=True)
class GeometryConfig:
    """Static geometry of one deployment.

    Attributes:
        lambda_c: cache-server density (per m^2), positive.
        Rc: cluster / cell radius (m), positive.
        Rs: near/far split radius (m), strictly inside (0, Rc); defaults
            to Rc / 2 when omitted.
        alpha: path-loss exponent, must exceed 2 so interference has a
            finite mean.
        delta: exclusion-zone scale (> 1); servers closer than delta * Rc
            are kept out of the field in the push-and-deliver setting.
        lambda_u: user density (per m^2) for the D2D extension, >= 0.
        sim_radius: interference window radius (m).  When omitted, a radius
            is chosen so the truncated interference tail stays below 5e-5;
            explicit values are validated (warn above 1e-4, reject above
            1e-2 tail fraction).
    """

    lambda_c: float
    Rc: float
    Rs: float | None = None
    alpha: float = 3.0
    delta: float = 1.1
    lambda_u: float = 0.0
    sim_radius: float | None = None

    def __post_init__(self) -> None:
        if self.lambda_c <= 0.0:
            raise ValueError(f"lambda_c must be positive, got {self.lambda_c}")
        if self.Rc <= 0.0:
            raise ValueError(f"Rc must be positive, got {self.Rc}")
        if self.alpha <= 2.0:
            raise ValueError(f"alpha must exceed 2, got {self.alpha}")
        if self.delta <= 1.0:
            raise ValueError(f"delta must exceed 1, got {self.delta}")
        if self.lambda_u < 0.0:
            raise ValueError(f"lambda_u must be nonnegative, got {self.lambda_u}")
        if self.Rs is None:
            object.__setattr__(self, "Rs", 0.5 * self.Rc)
        if not 0.0 < self.Rs < self.Rc:
            raise ValueError(f"Rs must satisfy 0 < Rs < Rc, got Rs={self.Rs}, Rc={self.Rc}")
        if self.sim_radius is None:
            auto = max(_MIN_WINDOW, _TAIL_TARGET ** (-1.0 / (self.alpha - 2.0)))
            object.__setattr__(self, "sim_radius", float(auto))
        if self.sim_radius <= self.Rc:
            raise ValueError(f"sim_radius must exceed Rc, got {self.sim_radius}")
        tail = _tail_fraction(self.sim_radius, self.alpha)
        if tail > _TAIL_ERROR:
            raise ValueError(
                f"sim_radius={self.sim_radius} truncates {tail:.2e} of the mean "
                f"interference (limit {_TAIL_ERROR:.0e}); enlarge the window"
            )
        if tail > _TAIL_WARN:
            warnings.warn(
                f"sim_radius={self.sim_radius} leaves a {tail:.2e} interference "
                f"tail outside the window (soft limit {_TAIL_WARN:.0e})",
                RuntimeWarning,
                stacklevel=2,
            )

    @property
    def exclusion_radius(self) -> float:
        """Radius delta * Rc of the server exclusion zone."""
        return self.delta * self.Rc

    def truncation_tail(self) -> float:
        """Fraction of mean interference outside the simulation window."""
        return _tail_fraction(self.sim_radius, self.alpha)


@dataclass(frozen=True)
class DeploymentSample:
    """One sampled deployment: a server field plus clustered users.

    ``ordered_server_r`` holds the sorted station-to-server distances,
    ``server_positions`` the planar coordinates (one row per server), and
    ``user_offsets`` the per-cluster user offsets with shape
    ``(n_servers, users_per_cluster, 2)``.  ``fading`` maps ``(tx, rx)``
    link labels to unit-mean exponential power gains for the in-cluster
    and station-to-user links; it is regenerated rather than serialized.
    """

    ordered_server_r: np.ndarray
    server_positions: np.ndarray
    user_offsets: np.ndarray
    fading: dict[tuple[str, str], float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if np.any(np.diff(self.ordered_server_r) < 0.0):
            raise ValueError("ordered_server_r must be nondecreasing")
        if len(self.ordered_server_r) != len(self.server_positions):
            raise ValueError("one ordered distance per server position required")

    def to_text(self) -> str:
        """Serialize positions as ``role,cluster_id,x,y`` lines."""
        lines = ["bs,-1,0.0,0.0"]
        for cid, (x, y) in enumerate(self.server_positions):
            lines.append(f"server,{cid},{float(x)!r},{float(y)!r}")
        for cid, cluster in enumerate(self.user_offsets):
            cx, cy = self.server_positions[cid]
            for ox, oy in cluster:
                lines.append(f"user,{cid},{float(cx + ox)!r},{float(cy + oy)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DeploymentSample":
        """Rebuild a sample from :meth:`to_text` output (fading not restored)."""
        servers: list[tuple[float, float]] = []
        users: dict[int, list[tuple[float, float]]] = {}
        for line in text.strip().splitlines():
            role, cid_s, x_s, y_s = (tok.strip() for tok in line.split(","))
            cid, x, y = int(cid_s), float(x_s), float(y_s)
            if role == "server":
                if cid != len(servers):
                    raise ValueError(f"server rows out of order at cluster {cid}")
                servers.append((x, y))
            elif role == "user":
                users.setdefault(cid, []).append((x, y))
            elif role != "bs":
                raise ValueError(f"unknown role {role!r}")
        pos = np.array(servers, dtype=float).reshape(len(servers), 2)
        per = {cid: len(v) for cid, v in users.items()}
        k = max(per.values()) if per else 0
        offsets = np.zeros((len(servers), k, 2))
        for cid, pts in users.items():
            for j, (x, y) in enumerate(pts):
                offsets[cid, j] = (x - pos[cid, 0], y - pos[cid, 1])
        # rows are written in sorted-distance order, so no re-sorting here
        r = np.hypot(pos[:, 0], pos[:, 1]) if len(servers) else np.zeros(0)
        return cls(ordered_server_r=r, server_positions=pos, user_offsets=offsets)


def _as_generator(rng) -> np.random.Generator:
    if rng is None:
        return np.random.default_rng()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def sample_ordered_distances(
    lambda_c: float,
    count: int,
    inner_exclusion: float = 0.0,
    rng=None,
    trials: int | None = None,
) -> np.ndarray:
    """Sample the first ``count`` ordered distances of a Poisson field.

    Uses the exact squared-distance increment construction: successive
    annulus areas between ordered points are iid Exp(lambda_c * pi), so
    ``r_k^2 = inner_exclusion^2 + sum of k exponentials``.  No rejection or
    windowing is involved, so arbitrarily distant orders stay exact.

    Args:
        lambda_c: field density, positive.
        count: how many ordered distances to return.
        inner_exclusion: all points are conditioned to lie beyond this radius.
        rng: ``numpy.random.Generator`` or a seed.
        trials: when given, return a ``(trials, count)`` batch.

    Returns:
        Sorted distances, shape ``(count,)`` or ``(trials, count)``.
    """
    if lambda_c <= 0.0:
        raise ValueError(f"lambda_c must be positive, got {lambda_c}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if inner_exclusion < 0.0:
        raise ValueError("inner_exclusion must be nonnegative")
    gen = _as_generator(rng)
    shape = (count,) if trials is None else (int(trials), count)
    inc = gen.exponential(scale=1.0 / (lambda_c * math.pi), size=shape)
    sq = inner_exclusion**2 + np.cumsum(inc, axis=-1)
    return np.sqrt(sq)


def joint_pdf_rm_rt(x, y, m: int, t: int, lambda_c: float):
    """Joint density of the m-th and t-th ordered distances (m < t).

    Evaluates
    ``4 y (lambda_c pi)^t e^(-lambda_c pi y^2) x^(2m-1) (y^2 - x^2)^(t-m-1)
    / ((t-m-1)! (m-1)!)`` on ``0 <= x <= y`` and 0 elsewhere.
    Broadcasts over array inputs.
    """
    if m < 1 or t < 1 or m >= t:
        raise ValueError(f"need 1 <= m < t, got m={m}, t={t}")
    if lambda_c <= 0.0:
        raise ValueError(f"lambda_c must be positive, got {lambda_c}")
    xa, ya = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    lp = lambda_c * math.pi
    norm = lp**t / (math.factorial(t - m - 1) * math.factorial(m - 1))
    inside = (xa >= 0.0) & (ya >= xa)
    gap = np.where(inside, ya * ya - xa * xa, 1.0)
    val = 4.0 * norm * ya * np.exp(-lp * ya * ya) * xa ** (2 * m - 1) * gap ** (t - m - 1)
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


def marginal_pdf_rm(x, m: int, lambda_c: float, inner_exclusion: float = 0.0):
    """Density of the m-th ordered distance, field thinned inside a disc.

    With ``mu(x) = lambda_c (pi x^2 - pi e^2)`` for exclusion radius ``e``,
    the density is ``2 pi lambda_c x e^(-mu) mu^(m-1) / (m-1)!`` for
    ``x >= e`` and 0 below the exclusion radius.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if lambda_c <= 0.0:
        raise ValueError(f"lambda_c must be positive, got {lambda_c}")
    if inner_exclusion < 0.0:
        raise ValueError("inner_exclusion must be nonnegative")
    xa = np.asarray(x, dtype=float)
    mu = lambda_c * math.pi * np.clip(xa * xa - inner_exclusion**2, 0.0, None)
    val = 2.0 * math.pi * lambda_c * xa * np.exp(-mu) * mu ** (m - 1) / math.factorial(m - 1)
    out = np.where(xa >= inner_exclusion, val, 0.0)
    return float(out) if out.ndim == 0 else out


def marginal_cdf_rm(x, m: int, lambda_c: float, inner_exclusion: float = 0.0):
    """CDF matching :func:`marginal_pdf_rm`: P(at least m points within x)."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if lambda_c <= 0.0:
        raise ValueError(f"lambda_c must be positive, got {lambda_c}")
    xa = np.asarray(x, dtype=float)
    mu = lambda_c * math.pi * np.clip(xa * xa - inner_exclusion**2, 0.0, None)
    out = _special.gammainc(m, mu)
    return float(out) if out.ndim == 0 else out


def conditional_pdf_user_bs_distance(r, r_m: float, Rc: float):
    """Density of the user-to-server distance given the server offset.

    The user is uniform in the disc of radius ``Rc`` around the station and
    the server sits ``r_m > Rc`` away, so the distance lives on
    ``[r_m - Rc, r_m + Rc]`` with density
    ``2 r arccos((r_m^2 + r^2 - Rc^2) / (2 r_m r)) / (pi Rc^2)``.

    The arccos argument is clamped when within 1e-12 of [-1, 1]; a larger
    excursion means inconsistent geometry and raises.
    """
    if Rc <= 0.0:
        raise ValueError(f"Rc must be positive, got {Rc}")
    if r_m <= Rc:
        raise ValueError(f"requires r_m > Rc, got r_m={r_m}, Rc={Rc}")
    ra = np.asarray(r, dtype=float)
    inside = (ra >= r_m - Rc) & (ra <= r_m + Rc)
    safe_r = np.where(inside, ra, r_m)
    arg = (r_m * r_m + safe_r * safe_r - Rc * Rc) / (2.0 * r_m * safe_r)
    excess = np.max(np.abs(arg[inside]) - 1.0, initial=0.0) if np.any(inside) else 0.0
    if excess > 1e-12:
        raise ValueError(f"arccos argument off by {excess:.3e}: inconsistent r_m/Rc geometry")
    val = 2.0 * safe_r * np.arccos(np.clip(arg, -1.0, 1.0)) / (math.pi * Rc * Rc)
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


def sample_cluster_deployment(
    config: GeometryConfig,
    users_per_cluster: int = 2,
    near_far_split: bool = False,
    rng=None,
) -> DeploymentSample:
    """Sample servers in the window plus uniform cluster users.

    Servers form a Poisson field of density ``config.lambda_c`` in the disc
    of radius ``config.sim_radius``.  Each server gets ``users_per_cluster``
    users; with ``near_far_split`` even-indexed users fall in the inner disc
    ``[0, Rs]`` and odd-indexed ones in the ring ``[Rs, Rc]``, otherwise all
    users are uniform in the full disc of radius ``Rc``.

    The same seed reproduces the identical sample.
    """
    if users_per_cluster < 0:
        raise ValueError("users_per_cluster must be nonnegative")
    gen = _as_generator(rng)
    window = config.sim_radius
    n = gen.poisson(config.lambda_c * math.pi * window * window)
    radii = window * np.sqrt(gen.uniform(size=n))
    angles = gen.uniform(0.0, 2.0 * math.pi, size=n)
    pos = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    order = np.argsort(np.hypot(pos[:, 0], pos[:, 1])) if n else np.arange(0)
    pos = pos[order]
    r_sorted = np.hypot(pos[:, 0], pos[:, 1])

    u = gen.uniform(size=(n, users_per_cluster))
    if near_far_split:
        near = np.arange(users_per_cluster) % 2 == 0
        lo2 = np.where(near, 0.0, config.Rs**2)
        hi2 = np.where(near, config.Rs**2, config.Rc**2)
        user_r = np.sqrt(lo2 + u * (hi2 - lo2))
    else:
        user_r = config.Rc * np.sqrt(u)
    theta = gen.uniform(0.0, 2.0 * math.pi, size=(n, users_per_cluster))
    offsets = np.stack([user_r * np.cos(theta), user_r * np.sin(theta)], axis=-1)

    fading: dict[tuple[str, str], float] = {}
    for cid in range(n):
        for j in range(users_per_cluster):
            rx = f"user:{cid}:{j}"
            fading[("bs", rx)] = float(gen.exponential())
            fading[(f"server:{cid}", rx)] = float(gen.exponential())
    return DeploymentSample(
        ordered_server_r=r_sorted,
        server_positions=pos,
        user_offsets=offsets,
        fading=fading,
    )


def thinned_density(r, retain_prob, lambda_u: float):
    """Intensity of an independently thinned user field.

    ``retain_prob`` may depend on position (array-valued); every value must
    be a probability.  Returns ``retain_prob * lambda_u`` elementwise.
    """
    if lambda_u < 0.0:
        raise ValueError(f"lambda_u must be nonnegative, got {lambda_u}")
    p = np.asarray(retain_prob, dtype=float)
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("retain_prob must lie in [0, 1]")
    out = p * lambda_u
    return float(out) if out.ndim == 0 else out
