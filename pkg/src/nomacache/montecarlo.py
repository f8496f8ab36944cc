"""Monte Carlo oracle for every closed-form probability in the package.

Each ``simulate_*`` function samples deployments, fading, and interference
from scratch and measures the same events the analysis modules compute:
pushing-phase outages and cache hits, delivery-phase near/far outages,
push-and-deliver server/user outages, and D2D miss probabilities.  The
baselines reuse the identical random draws as NOMA (common random numbers),
so per-draw indicator comparisons are exact rather than statistical.

Determinism: trials are processed in fixed-size chunks and chunk ``k`` draws
from ``SeedSequence((root_seed, k))``, so results depend only on the plan,
never on the worker count; aggregation sums integer success counts, which is
order-independent.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .estimates import ProbEstimate, mc_estimate
from .pad import D2DScenario, PadScenario
from .ptd import DeliveryScenario, PushScenario

__all__ = [
    "TrialPlan",
    "simulate_push",
    "simulate_delivery",
    "simulate_pad",
    "simulate_d2d",
]

# chunk sizes are part of the determinism contract: changing them reshuffles
# which generator produces which trial, so they are fixed per engine
_CHUNK = 4096
_CHUNK_DELIVERY = 512
_CHUNK_D2D = 1024

# fraction of the mean interference allowed outside the effective window
_WINDOW_TAIL_BOUND = 1e-2

_SCENARIO_TYPES = (PushScenario, DeliveryScenario, PadScenario, D2DScenario)


@dataclass(frozen=True)
class TrialPlan:
    """One simulation request: scenario, trial count, seed, and targets.

    Attributes:
        trials: number of independent trials, >= 1.
        root_seed: 64-bit seed; the single source of randomness.
        scenario: a push, delivery, push-and-deliver, or D2D configuration.
        targets: names of the estimates to return; empty means every
            estimate the engine defines.  Unknown names are rejected by the
            engine so that each target provably maps to an event predicate.
    """

    trials: int
    root_seed: int
    scenario: PushScenario | DeliveryScenario | PadScenario | D2DScenario
    targets: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.root_seed < 2**64:
            raise ValueError(f"root_seed must fit in 64 bits, got {self.root_seed}")
        if not isinstance(self.scenario, _SCENARIO_TYPES):
            raise TypeError(f"unsupported scenario type {type(self.scenario).__name__}")
        object.__setattr__(self, "targets", tuple(dict.fromkeys(self.targets)))


def _chunk_layout(trials: int, chunk: int) -> list[tuple[int, int]]:
    full, rest = divmod(trials, chunk)
    out = [(k, chunk) for k in range(full)]
    if rest:
        out.append((full, rest))
    return out


def _run_chunks(plan, chunk_fn, chunk_size, workers, event_log):
    layout = _chunk_layout(plan.trials, chunk_size)
    log = event_log is not None

    def one(item):
        idx, size = item
        rng = np.random.default_rng(np.random.SeedSequence((plan.root_seed, idx)))
        return idx, chunk_fn(rng, size, log)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, layout))
    else:
        results = [one(item) for item in layout]

    totals: dict[str, int] = {}
    for idx, (counts, events) in results:
        for key, val in counts.items():
            totals[key] = totals.get(key, 0) + int(val)
        if log:
            event_log.append({"chunk": idx, **events})
    return totals


def _finalize(plan, counts, per_key_flags=None):
    flags = per_key_flags or {}
    wanted = plan.targets or tuple(counts)
    unknown = [t for t in wanted if t not in counts]
    if unknown:
        raise ValueError(f"unknown targets {unknown}; available: {sorted(counts)}")
    return {k: mc_estimate(counts[k], plan.trials, flags.get(k, ())) for k in wanted}


def _sample_requests(rng, library, size: int) -> np.ndarray:
    # 1-based file ids drawn from the request popularity law
    cum = np.cumsum(library.popularity)
    idx = np.searchsorted(cum, rng.random(size), side="right")
    return np.minimum(idx, library.file_count - 1) + 1


def _require(plan: TrialPlan, kind) -> None:
    if not isinstance(plan.scenario, kind):
        raise TypeError(
            f"plan.scenario must be {kind.__name__}, got {type(plan.scenario).__name__}"
        )


# --------------------------------------------------------------------------
# pushing phase


def simulate_push(
    plan: TrialPlan, *, workers: int = 1, event_log: list | None = None
) -> dict[str, ProbEstimate]:
    """Empirical pushing-phase outages and cache hit probabilities.

    Per trial: ordered server distances are sampled exactly, the guaranteed
    power share is sized for the sampled gain of the t-th server, and the
    SIC chain runs at the m-th and t-th servers.  Cache hits draw a request
    from the popularity law.  Emitted estimates::

        outage_f1_cs_m / outage_f1_cs_t   guaranteed file at CS_m / CS_t
        outage_f1_cs_m_oma                single-file baseline at CS_m
        outage_f{i}_cs_m / outage_f{i}_cs_t  opportunistic files, i = 2..M_s
        hit_noma / hit_oma                request served from the push
        f1_predicate_disagreement         draws where the baseline and the
                                          guaranteed-share indicators differ
        hit_dominance_violation           draws where only the baseline hits

    The last two are almost-sure-zero diagnostics: the guaranteed share is
    sized so its decode event coincides with full-power decoding, and the
    factored, order-preserving evaluation keeps that exact in floats.
    """
    _require(plan, PushScenario)
    scn: PushScenario = plan.scenario
    g = scn.geometry
    eps = np.asarray(scn.eps)
    eps1, rho, alpha, t = scn.eps1, scn.rho, g.alpha, scn.t
    lam_pi = g.lambda_c * math.pi
    betas = np.asarray(scn.betas)
    beta_tails = np.concatenate([np.cumsum(betas[::-1])[::-1][1:], [0.0]]) if betas.size else betas
    c1 = eps1 / (1.0 + eps1)
    pop_cum = np.cumsum(scn.library.popularity)
    file_count = scn.library.file_count

    def chunk(rng, size, log):
        sq = np.cumsum(rng.exponential(scale=1.0 / lam_pi, size=(size, t)), axis=1)
        req = np.minimum(np.searchsorted(pop_cum, rng.random(size), side="right"), file_count - 1) + 1

        rho_z_m = rho * sq[:, scn.m - 1] ** (-alpha / 2.0)
        rho_z_t = rho * sq[:, t - 1] ** (-alpha / 2.0)
        # factored form: every step is a single monotone rounded op, so the
        # order u(z_m) <= u(z_t) survives in floats and the per-draw equality
        # of the guaranteed-share and full-power indicators is exact
        u_m = c1 * (1.0 + 1.0 / rho_z_m)
        u_t = c1 * (1.0 + 1.0 / rho_z_t)
        a1 = np.minimum(1.0, u_t)

        f1_m = u_m <= a1
        f1_t = u_t <= 1.0
        f1_m_oma = u_m <= 1.0

        counts = {
            "outage_f1_cs_m": size - int(f1_m.sum()),
            "outage_f1_cs_t": size - int(f1_t.sum()),
            "outage_f1_cs_m_oma": size - int(f1_m_oma.sum()),
            "f1_predicate_disagreement": int((f1_m != f1_m_oma).sum()),
        }

        # residual power split over the opportunistic files, decoded in order
        residual = 1.0 - a1
        ok_m = np.column_stack([f1_m] + [np.zeros(size, bool)] * (scn.M_s - 1))
        chain_m, chain_t = f1_m.copy(), f1_t.copy()
        for j in range(scn.M_s - 1):
            share, tail, epsj = betas[j], beta_tails[j], eps[j + 1]
            chain_m &= share * residual * rho_z_m >= epsj * (tail * residual * rho_z_m + 1.0)
            chain_t &= share * residual * rho_z_t >= epsj * (tail * residual * rho_z_t + 1.0)
            counts[f"outage_f{j + 2}_cs_m"] = size - int(chain_m.sum())
            counts[f"outage_f{j + 2}_cs_t"] = size - int(chain_t.sum())
            ok_m[:, j + 1] = chain_m

        pushed = req <= scn.M_s
        hit_noma = pushed & ok_m[np.arange(size), np.where(pushed, req, 1) - 1]
        hit_oma = (req == 1) & f1_m_oma
        counts["hit_noma"] = int(hit_noma.sum())
        counts["hit_oma"] = int(hit_oma.sum())
        counts["hit_dominance_violation"] = int((hit_oma & ~hit_noma).sum())

        events = {"hit_noma": hit_noma, "hit_oma": hit_oma, "request": req} if log else {}
        return counts, events

    return _finalize(plan, _run_chunks(plan, chunk, _CHUNK, workers, event_log))


# --------------------------------------------------------------------------
# delivery phase


def simulate_delivery(
    plan: TrialPlan,
    *,
    workers: int = 1,
    interferer_activity: float = 1.0,
    event_log: list | None = None,
) -> dict[str, ProbEstimate]:
    """Empirical near/far delivery outages for NOMA and the baseline.

    Per trial: the near user falls uniformly in the inner disc, the far user
    in the outer ring, both with Rayleigh fading; co-channel servers form a
    Poisson field in the geometry's simulation window and interfere with
    unit total power and independent Rayleigh marks (``interferer_activity``
    thins them, worst case 1).  The baseline reuses the same draws and
    schedules one user per slot.  Emitted estimates: ``outage_near_noma``,
    ``outage_far_noma``, ``outage_near_oma``, ``outage_far_oma``, each
    flagged with the window radius and its interference tail fraction.

    Raises:
        ValueError: the window minus the cell radius leaves more than the
            allowed fraction of the mean interference outside.
    """
    _require(plan, DeliveryScenario)
    if not 0.0 <= interferer_activity <= 1.0:
        raise ValueError(f"interferer_activity must lie in [0, 1], got {interferer_activity}")
    scn: DeliveryScenario = plan.scenario
    g = scn.geometry
    coverage = g.sim_radius - g.Rc
    tail = coverage ** (2.0 - g.alpha)
    if tail > _WINDOW_TAIL_BOUND:
        raise ValueError(
            f"window radius {g.sim_radius} covers only {coverage} m around the "
            f"users, leaving a {tail:.2e} interference tail (bound "
            f"{_WINDOW_TAIL_BOUND:.0e}); enlarge geometry.sim_radius"
        )
    meta = (f"window_radius={g.sim_radius:g}", f"window_tail_fraction={tail:.3g}")

    a1, a2 = scn.alloc.coeffs
    eps1, eps2, rho, alpha = scn.eps1, scn.eps2, scn.rho, g.alpha
    eps_far_oma = 2.0 ** (scn.oma_far_rate_scale * scn.R1) - 1.0
    eps_near_oma = 2.0 ** (scn.oma_near_rate_scale * scn.R2) - 1.0
    mean_pts = g.lambda_c * math.pi * g.sim_radius**2

    def chunk(rng, size, log):
        # 1 - U keeps the radius strictly positive (same law), so the
        # path-loss gain stays finite and SIC comparisons never see inf
        r_near = g.Rs * np.sqrt(1.0 - rng.random(size))
        h_near = rng.exponential(size=size)
        r_far = np.sqrt(g.Rs**2 + (g.Rc**2 - g.Rs**2) * rng.random(size))
        h_far = rng.exponential(size=size)

        n_pts = rng.poisson(mean_pts, size=size)
        total = int(n_pts.sum())
        owner = np.repeat(np.arange(size), n_pts)
        rad = g.sim_radius * np.sqrt(rng.random(total))
        theta = rng.uniform(0.0, 2.0 * math.pi, size=total)
        gains = rng.exponential(size=total)
        if interferer_activity < 1.0:
            gains = gains * (rng.random(total) < interferer_activity)

        def interference(r_user):
            d_sq = rad**2 + r_user[owner] ** 2 - 2.0 * rad * r_user[owner] * np.cos(theta)
            contrib = gains * d_sq ** (-alpha / 2.0)
            return np.bincount(owner, weights=contrib, minlength=size)

        x_near = h_near * r_near**-alpha
        x_far = h_far * r_far**-alpha
        den_near = interference(r_near) + 1.0 / rho
        den_far = interference(r_far) + 1.0 / rho

        near_ok = (a1 * x_near >= eps1 * (a2 * x_near + den_near)) & (
            a2 * x_near >= eps2 * den_near
        )
        far_ok = a1 * x_far >= eps1 * (a2 * x_far + den_far)
        # baseline slots reuse the same fading, positions, and interference
        coin_far = rng.random(size) < scn.oma_far_serve_prob
        coin_near = rng.random(size) < scn.oma_near_serve_prob
        far_oma_ok = coin_far & (x_far >= eps_far_oma * den_far)
        near_oma_ok = coin_near & (x_near >= eps_near_oma * den_near)

        counts = {
            "outage_near_noma": size - int(near_ok.sum()),
            "outage_far_noma": size - int(far_ok.sum()),
            "outage_near_oma": size - int(near_oma_ok.sum()),
            "outage_far_oma": size - int(far_oma_ok.sum()),
        }
        events = {"interferer_count": n_pts, "near_ok": near_ok, "far_ok": far_ok} if log else {}
        return counts, events

    counts = _run_chunks(plan, chunk, _CHUNK_DELIVERY, workers, event_log)
    return _finalize(plan, counts, {k: meta for k in counts})


# --------------------------------------------------------------------------
# push-and-deliver


def simulate_pad(
    plan: TrialPlan, *, workers: int = 1, event_log: list | None = None
) -> dict[str, ProbEstimate]:
    """Empirical push-and-deliver outages and hit probabilities.

    Per trial: ordered server distances are sampled outside the exclusion
    zone; the fading-free tagged server runs the SIC chain on the push
    superposition, the fading user (uniform in the tagged server's cell)
    decodes the delivery message, and a popularity-drawn request decides the
    cache hit.  The dedicated-slot baseline reuses the same draws.  Emitted
    estimates::

        outage_f{i}_cs_noma / outage_f{i}_cs_oma   pushed file i at CS_m
        outage_user_noma / outage_user_oma         delivery message
        hit_noma / hit_oma_time_sliced / hit_oma_naive
        server_sic_monotonicity_violation          draws where a later SIC
                                                   stage succeeds after an
                                                   earlier one failed
    """
    _require(plan, PadScenario)
    scn: PadScenario = plan.scenario
    g = scn.geometry
    excl = g.exclusion_radius
    lam_pi = g.lambda_c * math.pi
    coeffs = np.asarray(scn.alloc.coeffs)
    tails = np.concatenate([np.cumsum(coeffs[::-1])[::-1][1:], [0.0]])
    eps = scn.slot_eps
    eps_oma = scn.oma_slot_eps()
    rho, alpha, m = scn.rho, g.alpha, scn.m
    slots = np.asarray(scn.file_slots, dtype=int)
    pop_cum = np.cumsum(scn.library.popularity)
    file_count = scn.library.file_count
    naive_flag = ("naive baseline never pushes",)

    def chunk(rng, size, log):
        sq = excl**2 + np.cumsum(rng.exponential(scale=1.0 / lam_pi, size=(size, m)), axis=1)
        r_m = np.sqrt(sq[:, m - 1])
        req = np.minimum(np.searchsorted(pop_cum, rng.random(size), side="right"), file_count - 1) + 1
        theta = rng.uniform(0.0, 2.0 * math.pi, size=size)
        r_off = g.Rc * np.sqrt(rng.random(size))
        h_user = rng.exponential(size=size)

        # fading-free station-to-server SIC chain over all slots
        xs = rho * r_m**-alpha
        slot_ok = np.empty((len(coeffs), size), dtype=bool)
        ok = np.ones(size, dtype=bool)
        mono_bad = np.zeros(size, dtype=bool)
        for l in range(len(coeffs)):
            stage = coeffs[l] * xs >= eps[l] * (tails[l] * xs + 1.0)
            mono_bad |= stage & ~ok
            ok = ok & stage
            slot_ok[l] = ok
        slot_ok_oma = xs[None, :] >= eps_oma[:, None]

        counts = {"server_sic_monotonicity_violation": int(mono_bad.sum())}
        for i in range(1, scn.M_s + 1):
            counts[f"outage_f{i}_cs_noma"] = size - int(slot_ok[slots[i - 1]].sum())
            counts[f"outage_f{i}_cs_oma"] = size - int(slot_ok_oma[slots[i - 1]].sum())

        if scn.M_s:
            pushed = req <= scn.M_s
            req_slot = slots[np.where(pushed, req, 1) - 1]
            hit_noma = pushed & slot_ok[req_slot, np.arange(size)]
            hit_oma = pushed & slot_ok_oma[req_slot, np.arange(size)]
        else:
            hit_noma = np.zeros(size, dtype=bool)
            hit_oma = hit_noma
        counts["hit_noma"] = int(hit_noma.sum())
        counts["hit_oma_time_sliced"] = int(hit_oma.sum())
        counts["hit_oma_naive"] = 0

        # user uniform in the tagged server's cell, distance to the station
        r_user = np.sqrt(r_m**2 + r_off**2 + 2.0 * r_m * r_off * np.cos(theta))
        xu = rho * h_user * r_user**-alpha
        user_ok = coeffs[0] * xu >= eps[0] * (tails[0] * xu + 1.0)
        user_ok_oma = xu >= eps_oma[0]
        counts["outage_user_noma"] = size - int(user_ok.sum())
        counts["outage_user_oma"] = size - int(user_ok_oma.sum())

        events = {"r_m": r_m, "r_user": r_user, "hit_noma": hit_noma} if log else {}
        return counts, events

    counts = _run_chunks(plan, chunk, _CHUNK, workers, event_log)
    return _finalize(plan, counts, {"hit_oma_naive": naive_flag})


# --------------------------------------------------------------------------
# D2D extension


def simulate_d2d(
    plan: TrialPlan,
    *,
    workers: int = 1,
    window_radius: float | None = None,
    event_log: list | None = None,
) -> dict[str, ProbEstimate]:
    """Empirical D2D miss/hit probabilities per pushed file.

    Per trial: listening users form a Poisson field in a window around the
    station that covers the requester's search disc; each user gets one
    fading draw on its station link and caches every file its SIC chain
    decodes.  A request misses when no user inside the search disc holds the
    file.  Emitted estimates: ``miss_f{i}_noma``, ``miss_f{i}_oma``,
    ``hit_f{i}_noma``, ``hit_f{i}_oma`` for ``i = 1..M_s``.

    Raises:
        ValueError: ``window_radius`` does not cover the search disc, i.e.
            is below ``bs_distance + radius``.
    """
    _require(plan, D2DScenario)
    scn: D2DScenario = plan.scenario
    needed = scn.bs_distance + scn.radius
    if window_radius is None:
        window_radius = needed
    if window_radius < needed:
        raise ValueError(
            f"window_radius {window_radius} cannot cover the search disc; "
            f"need at least bs_distance + radius = {needed}"
        )
    coeffs = np.asarray(scn.alloc.coeffs)
    tails = np.concatenate([np.cumsum(coeffs[::-1])[::-1][1:], [0.0]])
    eps = scn.eps
    scale = scn.oma_rate_scale if scn.oma_rate_scale is not None else scn.M_s + 1.0
    eps_oma = np.exp2(scale * np.asarray(scn.rates)) - 1.0
    rho, alpha, r0, d = scn.rho, scn.alpha, scn.bs_distance, scn.radius
    mean_pts = scn.lambda_u * math.pi * window_radius**2

    def chunk(rng, size, log):
        n_pts = rng.poisson(mean_pts, size=size)
        total = int(n_pts.sum())
        owner = np.repeat(np.arange(size), n_pts)
        # 1 - U keeps user-to-station distances strictly positive
        s = window_radius * np.sqrt(1.0 - rng.random(total))
        theta = rng.uniform(0.0, 2.0 * math.pi, size=total)
        h = rng.exponential(size=total)

        in_disc = s**2 + r0**2 - 2.0 * s * r0 * np.cos(theta) <= d * d
        x = rho * h * s**-alpha
        counts = {}
        ok = np.ones(total, dtype=bool)
        decoded = {}
        for l in range(len(coeffs)):
            ok = ok & (coeffs[l] * x >= eps[l] * (tails[l] * x + 1.0))
            if l == 0:
                continue
            holders = np.bincount(owner[in_disc & ok], minlength=size)
            hits = int((holders > 0).sum())
            counts[f"hit_f{l}_noma"] = hits
            counts[f"miss_f{l}_noma"] = size - hits
            if log:
                decoded[f"decoded_f{l}_noma"] = ok.copy()
        for l in range(1, len(coeffs)):
            ok_oma = x >= eps_oma[l]
            holders = np.bincount(owner[in_disc & ok_oma], minlength=size)
            hits = int((holders > 0).sum())
            counts[f"hit_f{l}_oma"] = hits
            counts[f"miss_f{l}_oma"] = size - hits
        events = (
            {"user_bs_distance": s, "user_trial": owner, "in_search_disc": in_disc, **decoded}
            if log
            else {}
        )
        return counts, events

    return _finalize(plan, _run_chunks(plan, chunk, _CHUNK_D2D, workers, event_log))
