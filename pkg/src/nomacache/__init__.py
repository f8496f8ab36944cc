"""Stochastic-geometry analysis and Monte Carlo simulation of NOMA-assisted
wireless content caching.

The package covers three delivery strategies over a Poisson field of cache
servers: a push-then-deliver scheme (content pushing to servers, then NOMA
pair delivery to users), a push-and-deliver scheme that serves a user while
pushing to servers in the same slot, and a D2D extension where nearby users
cache for each other.  Every closed-form expression ships next to an
independent Monte Carlo estimator so the two can be cross-checked.
"""

from __future__ import annotations

from .content import FileLibrary, zipf_popularity
from .estimates import ProbEstimate
from .experiments import ExperimentSpec, compare, load_spec, plot_table, run
from .montecarlo import (
    TrialPlan,
    simulate_d2d,
    simulate_delivery,
    simulate_pad,
    simulate_push,
)
from .noma import PowerAllocation
from .numerics import QuadratureRule, chebyshev_nodes, integrate_cg
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

__version__ = "0.1.0"

__all__ = [
    "D2DScenario",
    "DeliveryScenario",
    "ExperimentSpec",
    "FileLibrary",
    "GeometryConfig",
    "PadScenario",
    "PowerAllocation",
    "ProbEstimate",
    "PushScenario",
    "QuadratureRule",
    "TrialPlan",
    "chebyshev_nodes",
    "compare",
    "d2d_hit_probability",
    "d2d_miss_probability",
    "delivery_outage_far",
    "delivery_outage_near",
    "delivery_outage_oma",
    "integrate_cg",
    "load_spec",
    "outage_f1_at_cs",
    "outage_fi_at_cs_m",
    "outage_fi_at_target",
    "pad_cs_outage",
    "pad_hit_probability",
    "pad_oma_benchmark",
    "pad_user_outage",
    "plot_table",
    "push_hit_probability",
    "run",
    "simulate_d2d",
    "simulate_delivery",
    "simulate_pad",
    "simulate_push",
    "zipf_popularity",
    "__version__",
]
