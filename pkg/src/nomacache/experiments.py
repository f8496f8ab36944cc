"""Declarative experiment sweeps over the caching scenarios.

A sweep is described by a small INI file (sections ``[experiment]``,
``[sweep]``, ``[scenario]`` and optionally ``[variants]``) fixing one
strategy, one swept scenario parameter and the full flat scenario record;
named variants override record keys to produce the multi-curve figures.
``run`` executes the sweep with the closed-form analysis, the Monte Carlo
engine, or both, and returns a CSV-serialisable table whose leading comment
block records the fully resolved configuration: identical spec and seed
give byte-identical output whatever the worker count.  ``compare`` replays
a ``both`` run as an analysis-versus-simulation discrepancy report with the
tolerance ``ci_mult * ci_halfwidth + slack`` per point.
"""

from __future__ import annotations

import configparser
import csv
import io
import math
import os
from collections.abc import Callable, Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .content import FileLibrary
from .estimates import SOURCE_CLOSED_FORM, ProbEstimate
from .montecarlo import (
    TrialPlan,
    simulate_d2d,
    simulate_delivery,
    simulate_pad,
    simulate_push,
)
from .noma import PowerAllocation
from .numerics import QuadratureRule, chebyshev_nodes
from .pad import (
    D2DScenario,
    PadScenario,
    d2d_hit_probability,
    d2d_miss_probability,
    pad_cs_outage,
    pad_hit_probability,
    pad_oma_benchmark,
    pad_user_outage,
)
from .point_fields import GeometryConfig
from .ptd import (
    DeliveryScenario,
    PushScenario,
    delivery_outage_far,
    delivery_outage_near,
    delivery_outage_oma,
    outage_f1_at_cs,
    outage_fi_at_cs_m,
    outage_fi_at_target,
    push_hit_probability,
)

__all__ = [
    "STRATEGIES",
    "ENGINES",
    "DESK_TRIALS",
    "ExperimentSpec",
    "ExperimentTable",
    "ComparisonEntry",
    "ComparisonReport",
    "bundled_config_names",
    "build_scenario",
    "compare",
    "load_spec",
    "metric_registry",
    "parse_spec",
    "plot_table",
    "point_record",
    "run",
]

STRATEGY_PUSH = "push_then_deliver_pushing"
STRATEGY_DELIVERY = "push_then_deliver_delivery"
STRATEGY_PAD = "push_and_deliver"
STRATEGY_D2D = "d2d"
STRATEGIES = (STRATEGY_PUSH, STRATEGY_DELIVERY, STRATEGY_PAD, STRATEGY_D2D)

ENGINES = ("analysis", "mc", "both")
_ENGINE_ALIASES = {"monte_carlo": "mc"}

# smoke-run default; acceptance runs use 1e5 per point
DESK_TRIALS = 20_000

_GEOMETRY_KEYS = frozenset(
    {
        "cluster_radius",
        "mean_servers_per_cell",
        "server_density",
        "path_loss_exponent",
        "sim_radius",
    }
)

# flat scenario-record vocabulary per strategy; sweep parameters and variant
# overrides are validated against these sets
_SCENARIO_KEYS: dict[str, frozenset[str]] = {
    STRATEGY_PUSH: _GEOMETRY_KEYS
    | {
        "file_count",
        "zipf_exponent",
        "file_rates",
        "pushed_files",
        "tagged_server",
        "design_server",
        "residual_shares",
        "bs_power_dbm",
        "noise_dbm",
    },
    STRATEGY_DELIVERY: _GEOMETRY_KEYS
    | {
        "inner_radius",
        "power_coeffs",
        "far_rate_bpcu",
        "near_rate_bpcu",
        "cs_power_dbm",
        "noise_dbm",
        "oma_far_rate_scale",
        "oma_far_serve_prob",
        "oma_near_rate_scale",
        "oma_near_serve_prob",
    },
    STRATEGY_PAD: _GEOMETRY_KEYS
    | {
        "file_count",
        "zipf_exponent",
        "file_rates",
        "power_coeffs",
        "slot_rates",
        "tagged_server",
        "file_slots",
        "exclusion_factor",
        "oma_rate_scale",
        "bs_power_dbm",
        "noise_dbm",
    },
    STRATEGY_D2D: {
        "power_coeffs",
        "message_rates",
        "user_density",
        "search_radius",
        "user_position",
        "bs_distance",
        "path_loss_exponent",
        "oma_rate_scale",
        "bs_power_dbm",
        "noise_dbm",
    },
}


def _tokens(text: str) -> list[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


def _as_float(text: str, key: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"{key}: expected a number, got {text!r}") from None


def _as_int(text: str, key: str) -> int:
    value = _as_float(text, key)
    if value != int(value):
        raise ValueError(f"{key}: expected an integer, got {text!r}")
    return int(value)


def _as_floats(text: str, key: str) -> tuple[float, ...]:
    return tuple(_as_float(tok, key) for tok in _tokens(text))


class _Rec:
    """Consume-checking typed view of one flat scenario record."""

    def __init__(self, strategy: str, record: Mapping[str, str]) -> None:
        self._strategy = strategy
        self._left = dict(record)

    def _pop(self, key: str) -> str:
        if key not in self._left:
            raise ValueError(f"{self._strategy}: missing scenario key {key!r}")
        return self._left.pop(key)

    def has(self, key: str) -> bool:
        return key in self._left

    def num(self, key: str, default: float | None = None) -> float:
        if default is not None and key not in self._left:
            return default
        return _as_float(self._pop(key), key)

    def intval(self, key: str) -> int:
        return _as_int(self._pop(key), key)

    def nums(self, key: str, default: tuple[float, ...] | None = None) -> tuple[float, ...]:
        if default is not None and key not in self._left:
            return default
        return _as_floats(self._pop(key), key)

    def ints(self, key: str) -> tuple[int, ...]:
        return tuple(_as_int(tok, key) for tok in _tokens(self._pop(key)))

    def finish(self) -> None:
        if self._left:
            raise ValueError(
                f"{self._strategy}: unused scenario keys {sorted(self._left)}"
            )


def _transmit_snr(rec: _Rec, power_key: str) -> float:
    power_dbm = rec.num(power_key)
    noise_dbm = rec.num("noise_dbm")
    return 10.0 ** ((power_dbm - noise_dbm) / 10.0)


def _server_geometry(rec: _Rec, *, inner: bool = False, exclusion: bool = False) -> GeometryConfig:
    Rc = rec.num("cluster_radius")
    alpha = rec.num("path_loss_exponent", 3.0)
    has_per_cell = rec.has("mean_servers_per_cell")
    if has_per_cell == rec.has("server_density"):
        raise ValueError(
            "give exactly one of mean_servers_per_cell / server_density"
        )
    if has_per_cell:
        lambda_c = rec.num("mean_servers_per_cell") / (math.pi * Rc**2)
    else:
        lambda_c = rec.num("server_density")
    kwargs: dict[str, float] = {}
    if inner and rec.has("inner_radius"):
        kwargs["Rs"] = rec.num("inner_radius")
    if exclusion:
        kwargs["delta"] = rec.num("exclusion_factor", 1.1)
    if rec.has("sim_radius"):
        kwargs["sim_radius"] = rec.num("sim_radius")
    return GeometryConfig(lambda_c=lambda_c, Rc=Rc, alpha=alpha, **kwargs)


def _file_library(rec: _Rec) -> FileLibrary:
    count = rec.intval("file_count")
    gamma = rec.num("zipf_exponent")
    rates = rec.nums("file_rates", (1.0,))
    if len(rates) == 1:
        rates = rates * count
    if len(rates) != count:
        raise ValueError(
            f"file_rates needs 1 or {count} entries, got {len(rates)}"
        )
    return FileLibrary(file_count=count, gamma=gamma, rates=rates)


def _build_push(record: Mapping[str, str]) -> PushScenario:
    rec = _Rec(STRATEGY_PUSH, record)
    library = _file_library(rec)
    m = rec.intval("tagged_server")
    t = rec.intval("design_server")
    pushed = rec.intval("pushed_files")
    betas = rec.nums("residual_shares", ())
    rho = _transmit_snr(rec, "bs_power_dbm")
    geometry = _server_geometry(rec)
    rec.finish()
    return PushScenario(
        library=library, m=m, t=t, M_s=pushed, betas=betas, rho=rho, geometry=geometry
    )


def _build_delivery(record: Mapping[str, str]) -> DeliveryScenario:
    rec = _Rec(STRATEGY_DELIVERY, record)
    alloc = PowerAllocation(rec.nums("power_coeffs"))
    R1 = rec.num("far_rate_bpcu")
    R2 = rec.num("near_rate_bpcu")
    rho = _transmit_snr(rec, "cs_power_dbm")
    geometry = _server_geometry(rec, inner=True)
    extras = {
        key: rec.num(key)
        for key in (
            "oma_far_rate_scale",
            "oma_far_serve_prob",
            "oma_near_rate_scale",
            "oma_near_serve_prob",
        )
        if rec.has(key)
    }
    rec.finish()
    return DeliveryScenario(alloc=alloc, R1=R1, R2=R2, rho=rho, geometry=geometry, **extras)


def _build_pad(record: Mapping[str, str]) -> PadScenario:
    rec = _Rec(STRATEGY_PAD, record)
    library = _file_library(rec)
    alloc = PowerAllocation(rec.nums("power_coeffs"))
    slot_rates = rec.nums("slot_rates")
    m = rec.intval("tagged_server")
    file_slots = rec.ints("file_slots") if rec.has("file_slots") else None
    oma_scale = rec.num("oma_rate_scale") if rec.has("oma_rate_scale") else None
    rho = _transmit_snr(rec, "bs_power_dbm")
    geometry = _server_geometry(rec, exclusion=True)
    rec.finish()
    return PadScenario(
        library=library,
        alloc=alloc,
        slot_rates=slot_rates,
        m=m,
        rho=rho,
        geometry=geometry,
        file_slots=file_slots,
        oma_rate_scale=oma_scale,
    )


def _build_d2d(record: Mapping[str, str]) -> D2DScenario:
    rec = _Rec(STRATEGY_D2D, record)
    alloc = PowerAllocation(rec.nums("power_coeffs"))
    rates = rec.nums("message_rates")
    lambda_u = rec.num("user_density")
    radius = rec.num("search_radius")
    has_position = rec.has("user_position")
    if has_position == rec.has("bs_distance"):
        raise ValueError("give exactly one of user_position / bs_distance")
    if has_position:
        position = rec.nums("user_position")
        if len(position) != 2:
            raise ValueError(f"user_position needs two coordinates, got {position}")
        bs_distance = math.hypot(*position)
    else:
        bs_distance = rec.num("bs_distance")
    alpha = rec.num("path_loss_exponent", 3.0)
    oma_scale = rec.num("oma_rate_scale") if rec.has("oma_rate_scale") else None
    rho = _transmit_snr(rec, "bs_power_dbm")
    rec.finish()
    return D2DScenario(
        alloc=alloc,
        rates=rates,
        rho=rho,
        alpha=alpha,
        lambda_u=lambda_u,
        bs_distance=bs_distance,
        radius=radius,
        oma_rate_scale=oma_scale,
    )


_BUILDERS: dict[str, Callable[[Mapping[str, str]], object]] = {
    STRATEGY_PUSH: _build_push,
    STRATEGY_DELIVERY: _build_delivery,
    STRATEGY_PAD: _build_pad,
    STRATEGY_D2D: _build_d2d,
}

_SIMULATORS = {
    STRATEGY_PUSH: simulate_push,
    STRATEGY_DELIVERY: simulate_delivery,
    STRATEGY_PAD: simulate_pad,
    STRATEGY_D2D: simulate_d2d,
}


def build_scenario(strategy: str, record: Mapping[str, str]):
    """Turn one flat key/value record into the strategy's scenario object."""
    if strategy not in _BUILDERS:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    return _BUILDERS[strategy](record)


_MetricFn = Callable[[QuadratureRule | None], ProbEstimate]


def _zero_metric(rule: QuadratureRule | None) -> ProbEstimate:
    # almost-sure-zero diagnostics (per-draw dominance and indicator equality)
    del rule
    return ProbEstimate(0.0, SOURCE_CLOSED_FORM)


def metric_registry(strategy: str, scenario) -> dict[str, _MetricFn]:
    """Closed-form evaluator per metric name.

    The names coincide with the estimate keys of the matching Monte Carlo
    engine, so one metric name addresses both engines.
    """
    if strategy == STRATEGY_PUSH:
        s: PushScenario = scenario
        reg: dict[str, _MetricFn] = {
            "outage_f1_cs_m": lambda rule: outage_f1_at_cs(s.m, s),
            "outage_f1_cs_t": lambda rule: outage_f1_at_cs(s.t, s),
            # the guaranteed share is sized so both predicates coincide
            "outage_f1_cs_m_oma": lambda rule: outage_f1_at_cs(s.m, s),
        }
        for i in range(2, s.M_s + 1):
            reg[f"outage_f{i}_cs_m"] = lambda rule, i=i: outage_fi_at_cs_m(s.m, i, s, rule)
            reg[f"outage_f{i}_cs_t"] = lambda rule, i=i: outage_fi_at_target(i, s)
        reg["hit_noma"] = lambda rule: push_hit_probability(s.m, s, "noma", rule)
        reg["hit_oma"] = lambda rule: push_hit_probability(s.m, s, "oma", rule)
        reg["f1_predicate_disagreement"] = _zero_metric
        reg["hit_dominance_violation"] = _zero_metric
        return reg
    if strategy == STRATEGY_DELIVERY:
        d: DeliveryScenario = scenario
        return {
            "outage_near_noma": lambda rule: delivery_outage_near(d, rule),
            "outage_far_noma": lambda rule: delivery_outage_far(d, rule),
            "outage_near_oma": lambda rule: delivery_outage_oma(d, "near", rule),
            "outage_far_oma": lambda rule: delivery_outage_oma(d, "far", rule),
        }
    if strategy == STRATEGY_PAD:
        p: PadScenario = scenario
        reg = {}
        for i in range(1, p.M_s + 1):
            reg[f"outage_f{i}_cs_noma"] = lambda rule, i=i: pad_cs_outage(i, p, "noma")
            reg[f"outage_f{i}_cs_oma"] = lambda rule, i=i: pad_cs_outage(i, p, "oma")
        reg["outage_user_noma"] = lambda rule: pad_user_outage(p, "noma", rule)
        reg["outage_user_oma"] = lambda rule: pad_user_outage(p, "oma", rule)
        reg["hit_noma"] = lambda rule: pad_hit_probability(p, "noma", rule)
        reg["hit_oma_time_sliced"] = lambda rule: pad_oma_benchmark("time_sliced", p, rule)
        reg["hit_oma_naive"] = lambda rule: pad_oma_benchmark("naive", p, rule)
        reg["server_sic_monotonicity_violation"] = _zero_metric
        return reg
    if strategy == STRATEGY_D2D:
        dd: D2DScenario = scenario
        reg = {}
        for i in range(1, dd.M_s + 1):
            reg[f"miss_f{i}_noma"] = lambda rule, i=i: d2d_miss_probability(i, dd, "noma", rule)
            reg[f"miss_f{i}_oma"] = lambda rule, i=i: d2d_miss_probability(i, dd, "oma", rule)
            reg[f"hit_f{i}_noma"] = lambda rule, i=i: d2d_hit_probability(i, dd, "noma", rule)
            reg[f"hit_f{i}_oma"] = lambda rule, i=i: d2d_hit_probability(i, dd, "oma", rule)
        return reg
    raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")


def _default_metrics(strategy: str, scenario) -> tuple[str, ...]:
    if strategy == STRATEGY_PUSH:
        return ("hit_noma", "hit_oma")
    if strategy == STRATEGY_DELIVERY:
        return ("outage_near_noma", "outage_far_noma", "outage_near_oma", "outage_far_oma")
    if strategy == STRATEGY_PAD:
        return ("hit_noma", "hit_oma_time_sliced")
    return tuple(
        f"miss_f{i}_{mode}"
        for i in range(1, scenario.M_s + 1)
        for mode in ("noma", "oma")
    )


@dataclass(frozen=True)
class ExperimentSpec:
    """One declarative sweep: strategy, axis, scenario record, execution knobs.

    Attributes:
        name: experiment label (CSV header, plot title, default out stem).
        strategy: one of :data:`STRATEGIES`.
        sweep_parameter: swept scenario key; must appear in ``scenario``.
        sweep_values: finite sweep points, normalised to sorted and unique.
        scenario: flat key -> value record (strings, as written in the INI).
        variants: ordered ``(label, overrides)`` pairs; each override key
            must exist in the record and must not be the swept parameter.
        engines: ``analysis``, ``mc`` or ``both``.
        trials: Monte Carlo trials per sweep point.
        seed: root seed; per-point seeds are derived from it and the point's
            (variant, sweep) position.
        metrics: metric names to emit; ``None`` selects the strategy's
            defaults.
        out: default CSV path used by the command line.
        quadrature_order: fixed Chebyshev-Gauss order for the analysis
            engine; ``None`` keeps the library default.
        compare_ci_mult / compare_slack: tolerance policy of
            :func:`compare`: ``|analysis - mc| <= ci_mult * ci + slack``.
    """

    name: str
    strategy: str
    sweep_parameter: str
    sweep_values: tuple[float, ...]
    scenario: dict[str, str]
    variants: tuple[tuple[str, dict[str, str]], ...] = ()
    engines: str = "both"
    trials: int = DESK_TRIALS
    seed: int = 0
    metrics: tuple[str, ...] | None = None
    out: str | None = None
    quadrature_order: int | None = None
    compare_ci_mult: float = 3.0
    compare_slack: float = 0.005

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("experiment name must not be empty")
        if self.strategy not in _SCENARIO_KEYS:
            raise ValueError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")
        engines = _ENGINE_ALIASES.get(self.engines, self.engines)
        if engines not in ENGINES:
            raise ValueError(f"engines must be one of {ENGINES}, got {self.engines!r}")
        object.__setattr__(self, "engines", engines)
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")

        allowed = _SCENARIO_KEYS[self.strategy]
        record = {str(k): str(v) for k, v in self.scenario.items()}
        unknown = sorted(set(record) - allowed)
        if unknown:
            raise ValueError(
                f"{self.strategy}: unknown scenario keys {unknown}; "
                f"known keys: {sorted(allowed)}"
            )
        object.__setattr__(self, "scenario", record)

        if self.sweep_parameter not in allowed:
            raise ValueError(
                f"sweep parameter {self.sweep_parameter!r} is not a "
                f"{self.strategy} scenario key"
            )
        if self.sweep_parameter not in record:
            raise ValueError(
                f"sweep parameter {self.sweep_parameter!r} missing from the scenario record"
            )
        values = tuple(float(v) for v in self.sweep_values)
        if any(not math.isfinite(v) for v in values):
            raise ValueError(f"sweep values must be finite, got {values}")
        object.__setattr__(self, "sweep_values", tuple(dict.fromkeys(sorted(values))))

        seen: set[str] = set()
        variants = []
        for label, overrides in self.variants:
            label = str(label)
            if not label or label in seen:
                raise ValueError(f"variant labels must be unique and nonempty, got {label!r}")
            seen.add(label)
            merged = {str(k): str(v) for k, v in dict(overrides).items()}
            bad = sorted(set(merged) - allowed)
            if bad:
                raise ValueError(f"variant {label!r}: unknown scenario keys {bad}")
            if self.sweep_parameter in merged:
                raise ValueError(
                    f"variant {label!r} must not override the swept parameter"
                )
            absent = sorted(k for k in merged if k not in record)
            if absent:
                raise ValueError(
                    f"variant {label!r} overrides keys absent from the scenario "
                    f"record: {absent}"
                )
            variants.append((label, merged))
        object.__setattr__(self, "variants", tuple(variants))

        if self.metrics is not None:
            metrics = tuple(dict.fromkeys(str(mt) for mt in self.metrics))
            if not metrics:
                raise ValueError("metrics list must not be empty")
            object.__setattr__(self, "metrics", metrics)
        if self.quadrature_order is not None:
            order = self.quadrature_order
            if int(order) != order or order < 1:
                raise ValueError(f"quadrature_order must be a positive integer, got {order!r}")
            object.__setattr__(self, "quadrature_order", int(order))
        if self.compare_ci_mult < 0.0 or self.compare_slack < 0.0:
            raise ValueError("comparison tolerances must be nonnegative")


def point_record(
    spec: ExperimentSpec, variant: str | None = None, sweep_value: float | None = None
) -> dict[str, str]:
    """Fully resolved scenario record for one (variant, sweep value) point."""
    record = dict(spec.scenario)
    if variant:
        table = dict(spec.variants)
        if variant not in table:
            raise ValueError(f"unknown variant {variant!r}; have {[v for v, _ in spec.variants]}")
        record.update(table[variant])
    if sweep_value is not None:
        record[spec.sweep_parameter] = repr(float(sweep_value))
    return record


_EXPERIMENT_KEYS = frozenset(
    {
        "name",
        "strategy",
        "engines",
        "trials",
        "seed",
        "metrics",
        "out",
        "quadrature_order",
        "compare_ci_mult",
        "compare_slack",
    }
)


def _parse_overrides(label: str, text: str) -> dict[str, str]:
    overrides: dict[str, str] = {}
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        key, sep, value = part.partition("=")
        if not sep or not key.strip():
            raise ValueError(f"variant {label!r}: override {part!r} is not key=value")
        overrides[key.strip()] = value.strip()
    return overrides


def parse_spec(text: str, *, default_name: str = "experiment") -> ExperimentSpec:
    """Parse the INI experiment format into an :class:`ExperimentSpec`."""
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    cp.optionxform = str  # keep scenario keys and variant labels as written
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ValueError(f"invalid config: {exc}") from None

    sections = set(cp.sections())
    missing = sorted({"experiment", "sweep", "scenario"} - sections)
    if missing:
        raise ValueError(f"config missing sections: {missing}")
    unknown = sorted(sections - {"experiment", "sweep", "scenario", "variants"})
    if unknown:
        raise ValueError(f"unknown config sections: {unknown}")

    exp = dict(cp["experiment"])
    bad = sorted(set(exp) - _EXPERIMENT_KEYS)
    if bad:
        raise ValueError(f"unknown [experiment] keys: {bad}")
    sweep = dict(cp["sweep"])
    bad = sorted(set(sweep) - {"parameter", "values"})
    if bad:
        raise ValueError(f"unknown [sweep] keys: {bad}")
    if "parameter" not in sweep:
        raise ValueError("[sweep] needs a 'parameter' key")

    kwargs: dict[str, object] = {}
    if "engines" in exp:
        kwargs["engines"] = exp["engines"].strip()
    if "trials" in exp:
        kwargs["trials"] = _as_int(exp["trials"], "trials")
    if "seed" in exp:
        kwargs["seed"] = _as_int(exp["seed"], "seed")
    if "metrics" in exp:
        kwargs["metrics"] = tuple(_tokens(exp["metrics"]))
    if "out" in exp:
        kwargs["out"] = exp["out"].strip()
    if "quadrature_order" in exp:
        kwargs["quadrature_order"] = _as_int(exp["quadrature_order"], "quadrature_order")
    if "compare_ci_mult" in exp:
        kwargs["compare_ci_mult"] = _as_float(exp["compare_ci_mult"], "compare_ci_mult")
    if "compare_slack" in exp:
        kwargs["compare_slack"] = _as_float(exp["compare_slack"], "compare_slack")

    variants: tuple[tuple[str, dict[str, str]], ...] = ()
    if cp.has_section("variants"):
        variants = tuple(
            (label, _parse_overrides(label, text)) for label, text in cp["variants"].items()
        )

    return ExperimentSpec(
        name=exp.get("name", default_name).strip(),
        strategy=exp.get("strategy", "").strip(),
        sweep_parameter=sweep["parameter"].strip(),
        sweep_values=_as_floats(sweep.get("values", ""), "[sweep] values"),
        scenario=dict(cp["scenario"]),
        variants=variants,
        **kwargs,
    )


def bundled_config_names() -> tuple[str, ...]:
    """Names of the configs shipped inside the package."""
    root = resources.files(__package__) / "configs"
    return tuple(sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini")))


def load_spec(source: str | os.PathLike) -> ExperimentSpec:
    """Load a sweep description from a file path or a bundled config name."""
    path = os.fspath(source)
    if os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        stem = os.path.splitext(os.path.basename(path))[0]
        return parse_spec(text, default_name=stem)
    name = path[:-4] if path.endswith(".ini") else path
    candidate = resources.files(__package__) / "configs" / f"{name}.ini"
    if candidate.is_file():
        return parse_spec(candidate.read_text(encoding="utf-8"), default_name=name)
    raise ValueError(
        f"no config file or bundled config named {source!r}; "
        f"bundled: {', '.join(bundled_config_names())}"
    )


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class ExperimentTable:
    """Rows of one sweep run plus the resolved-config comment block."""

    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    comments: tuple[str, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        for line in self.comments:
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_cell(v) for v in row])
        return buf.getvalue()

    def write(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())


def _comment_lines(spec: ExperimentSpec, metrics: tuple[str, ...]) -> tuple[str, ...]:
    lines = [
        "nomacache experiment",
        f"name = {spec.name}",
        f"strategy = {spec.strategy}",
        f"engines = {spec.engines}",
        f"trials = {spec.trials}",
        f"seed = {spec.seed}",
        f"metrics = {', '.join(metrics)}",
    ]
    if spec.quadrature_order is not None:
        lines.append(f"quadrature_order = {spec.quadrature_order}")
    lines.append(f"compare_ci_mult = {spec.compare_ci_mult!r}")
    lines.append(f"compare_slack = {spec.compare_slack!r}")
    lines.append(f"sweep.parameter = {spec.sweep_parameter}")
    lines.append("sweep.values = " + ", ".join(repr(v) for v in spec.sweep_values))
    for key, value in spec.scenario.items():
        lines.append(f"scenario.{key} = {value}")
    for label, overrides in spec.variants:
        body = "; ".join(f"{k}={v}" for k, v in overrides.items())
        lines.append(f"variant.{label} = {body}")
    return tuple(lines)


def _point_seed(seed: int, variant_index: int, point_index: int) -> int:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(variant_index, point_index))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class _PointResult:
    variant: str
    sweep_value: float
    metric: str
    analysis: ProbEstimate | None
    mc: ProbEstimate | None


def _resolve_metrics(spec: ExperimentSpec) -> tuple[str, ...]:
    base = build_scenario(spec.strategy, point_record(spec))
    registry = metric_registry(spec.strategy, base)
    wanted = spec.metrics if spec.metrics is not None else _default_metrics(spec.strategy, base)
    unknown = sorted(set(wanted) - set(registry))
    if unknown:
        raise ValueError(f"unknown metrics {unknown}; available: {sorted(registry)}")
    return tuple(wanted)


def _run_points(spec: ExperimentSpec, workers: int) -> tuple[tuple[str, ...], list[_PointResult]]:
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    metrics = _resolve_metrics(spec)
    rule = chebyshev_nodes(spec.quadrature_order) if spec.quadrature_order else None
    variant_list = spec.variants if spec.variants else (("", {}),)

    jobs = []
    for vi, (label, _) in enumerate(variant_list):
        for pi, value in enumerate(spec.sweep_values):
            scenario = build_scenario(spec.strategy, point_record(spec, label or None, value))
            jobs.append((vi, pi, label, value, scenario))

    mc_maps: list[dict[str, ProbEstimate] | None] = [None] * len(jobs)
    if spec.engines in ("mc", "both") and jobs:
        simulate = _SIMULATORS[spec.strategy]

        def run_job(job):
            vi, pi, _, _, scenario = job
            plan = TrialPlan(
                trials=spec.trials,
                root_seed=_point_seed(spec.seed, vi, pi),
                scenario=scenario,
                targets=metrics,
            )
            return simulate(plan)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                mc_maps = list(pool.map(run_job, jobs))
        else:
            mc_maps = [run_job(job) for job in jobs]

    results: list[_PointResult] = []
    for idx, (vi, pi, label, value, scenario) in enumerate(jobs):
        registry = metric_registry(spec.strategy, scenario)
        for metric in metrics:
            if metric not in registry:
                raise ValueError(
                    f"variant {label!r}: metric {metric!r} undefined for its scenario"
                )
            analysis = registry[metric](rule) if spec.engines in ("analysis", "both") else None
            mc = mc_maps[idx][metric] if mc_maps[idx] is not None else None
            results.append(_PointResult(label, value, metric, analysis, mc))
    return metrics, results


def run(spec: ExperimentSpec, *, workers: int = 1) -> ExperimentTable:
    """Execute the sweep: one row per (variant x sweep value x metric x engine).

    Infeasible points come back flagged (never silently dropped).  Sweep
    points are dispatched to a worker pool when ``workers > 1``; assembly is
    ordered by (variant, sweep index), so the table is identical for any
    worker count.
    """
    metrics, results = _run_points(spec, workers)
    columns = (
        "variant",
        spec.sweep_parameter,
        "metric",
        "engine",
        "value",
        "ci_halfwidth",
        "trials",
        "source",
        "flags",
    )
    rows: list[tuple] = []
    for res in results:
        if res.analysis is not None:
            rows.append(
                (
                    res.variant,
                    res.sweep_value,
                    res.metric,
                    "analysis",
                    res.analysis.value,
                    None,
                    None,
                    res.analysis.source,
                    "; ".join(res.analysis.flags),
                )
            )
        if res.mc is not None:
            rows.append(
                (
                    res.variant,
                    res.sweep_value,
                    res.metric,
                    "mc",
                    res.mc.value,
                    res.mc.ci_halfwidth,
                    res.mc.trials,
                    res.mc.source,
                    "; ".join(res.mc.flags),
                )
            )
    return ExperimentTable(
        columns=columns, rows=tuple(rows), comments=_comment_lines(spec, metrics)
    )


@dataclass(frozen=True)
class ComparisonEntry:
    """One (variant, sweep value, metric) analysis-versus-simulation check."""

    variant: str
    sweep_value: float
    metric: str
    analysis_value: float
    mc_value: float
    ci_halfwidth: float
    tolerance: float | None
    gap: float | None
    status: str  # "ok" | "violation" | "skipped"
    reason: str = ""


@dataclass(frozen=True)
class ComparisonReport:
    """Discrepancy report of one ``both``-engines sweep."""

    parameter: str
    ci_mult: float
    slack: float
    entries: tuple[ComparisonEntry, ...]

    @property
    def violations(self) -> tuple[ComparisonEntry, ...]:
        return tuple(e for e in self.entries if e.status == "violation")

    @property
    def skipped(self) -> tuple[ComparisonEntry, ...]:
        return tuple(e for e in self.entries if e.status == "skipped")

    @property
    def checked(self) -> int:
        return sum(e.status != "skipped" for e in self.entries)

    @property
    def ok(self) -> bool:
        return not self.violations

    def lines(self) -> list[str]:
        out = []
        for e in self.violations:
            where = f"variant={e.variant}" if e.variant else "base"
            out.append(
                f"violation: {where} {self.parameter}={e.sweep_value:g} {e.metric}: "
                f"analysis={e.analysis_value:.6g} mc={e.mc_value:.6g} "
                f"gap={e.gap:.3g} tol={e.tolerance:.3g}"
            )
        for e in self.skipped:
            where = f"variant={e.variant}" if e.variant else "base"
            out.append(
                f"skipped: {where} {self.parameter}={e.sweep_value:g} {e.metric}: {e.reason}"
            )
        out.append(
            f"{self.checked} point-metrics compared "
            f"(tolerance {self.ci_mult:g}*ci + {self.slack:g}), "
            f"{len(self.skipped)} skipped as flagged, {len(self.violations)} violations"
        )
        return out


def compare(spec: ExperimentSpec, *, workers: int = 1) -> ComparisonReport:
    """Cross-check the engines on every sweep point of a ``both`` spec.

    Points whose closed form comes back flagged (infeasible splits,
    degenerate baselines) are excluded from the tolerance check and
    reported as skipped.
    """
    if spec.engines != "both":
        raise ValueError(f"compare requires engines = both, got {spec.engines!r}")
    _, results = _run_points(spec, workers)
    entries: list[ComparisonEntry] = []
    for res in results:
        analysis, mc = res.analysis, res.mc
        if analysis.flags:
            entries.append(
                ComparisonEntry(
                    variant=res.variant,
                    sweep_value=res.sweep_value,
                    metric=res.metric,
                    analysis_value=analysis.value,
                    mc_value=mc.value,
                    ci_halfwidth=mc.ci_halfwidth,
                    tolerance=None,
                    gap=None,
                    status="skipped",
                    reason="; ".join(analysis.flags),
                )
            )
            continue
        tolerance = spec.compare_ci_mult * mc.ci_halfwidth + spec.compare_slack
        gap = abs(analysis.value - mc.value)
        entries.append(
            ComparisonEntry(
                variant=res.variant,
                sweep_value=res.sweep_value,
                metric=res.metric,
                analysis_value=analysis.value,
                mc_value=mc.value,
                ci_halfwidth=mc.ci_halfwidth,
                tolerance=tolerance,
                gap=gap,
                status="ok" if gap <= tolerance else "violation",
            )
        )
    return ComparisonReport(
        parameter=spec.sweep_parameter,
        ci_mult=spec.compare_ci_mult,
        slack=spec.compare_slack,
        entries=tuple(entries),
    )


def _read_csv(path: str | os.PathLike) -> tuple[dict[str, str], list[str], list[list[str]]]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    meta: dict[str, str] = {}
    data_lines = []
    for line in lines:
        if line.startswith("#"):
            body = line[1:].strip()
            key, sep, value = body.partition("=")
            if sep:
                meta[key.strip()] = value.strip()
        elif line.strip():
            data_lines.append(line)
    if not data_lines:
        raise ValueError(f"{path}: no header row found")
    parsed = list(csv.reader(data_lines))
    return meta, parsed[0], parsed[1:]


def plot_table(csv_path: str | os.PathLike, out_path: str | os.PathLike | None = None) -> str:
    """Render one run CSV as a static SVG figure; returns the written path.

    Analysis rows become lines, Monte Carlo rows become error-bar markers in
    the matching color.  The y axis switches to log scale when every metric
    is an outage or miss probability.
    """
    import matplotlib

    matplotlib.use("Agg")
    from matplotlib import pyplot as plt

    meta, header, rows = _read_csv(csv_path)
    if not rows:
        raise ValueError(f"{csv_path}: no data rows to plot")
    col = {name: idx for idx, name in enumerate(header)}
    x_name = header[1]
    groups: dict[tuple[str, str], dict[str, list]] = {}
    for row in rows:
        key = (row[col["metric"]], row[col["variant"]])
        series = groups.setdefault(key, {"analysis": [], "mc": []})
        x = float(row[col[x_name]])
        value = float(row[col["value"]])
        if row[col["engine"]] == "analysis":
            series["analysis"].append((x, value))
        else:
            ci = float(row[col["ci_halfwidth"]] or 0.0)
            series["mc"].append((x, value, ci))

    metrics = {metric for metric, _ in groups}
    log_y = all(m.startswith(("outage", "miss")) for m in metrics)

    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    for (metric, variant), series in groups.items():
        label = f"{metric} [{variant}]" if variant else metric
        color = None
        if series["analysis"]:
            xs, ys = zip(*sorted(series["analysis"]))
            if log_y:
                ys = [y if y > 0.0 else float("nan") for y in ys]
            (line,) = ax.plot(xs, ys, "-", label=label)
            color = line.get_color()
        if series["mc"]:
            xs, ys, cis = zip(*sorted(series["mc"]))
            if log_y:
                ys = [y if y > 0.0 else float("nan") for y in ys]
            ax.errorbar(
                xs,
                ys,
                yerr=cis,
                fmt="o",
                markersize=4,
                capsize=2,
                color=color,
                label="_nolegend_" if color else f"{label} (mc)",
            )
    if log_y:
        ax.set_yscale("log")
    ax.set_xlabel(x_name)
    ax.set_ylabel("probability")
    ax.set_title(meta.get("name", os.path.basename(os.fspath(csv_path))))
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    out = os.fspath(out_path) if out_path else os.path.splitext(os.fspath(csv_path))[0] + ".svg"
    fig.savefig(out, format="svg", bbox_inches="tight")
    plt.close(fig)
    return out
