"""Cross-validate every closed form against the simulator, one point each.

Builds one scenario per strategy (push, delivery, joint push-and-deliver,
device-to-device), evaluates each analysis metric, runs the matching Monte
Carlo estimate at the same parameters, and prints both with the binomial
confidence half width.  Then runs the bundled ``fig7a`` experiment through
the sweep-level comparator, which applies the release tolerance
(3 x CI + 0.005) at every sweep point.

Usage:
    python3 demos/engine_cross_check.py [--trials 20000] [--seed 7]
"""

from __future__ import annotations

import argparse
from dataclasses import replace

from nomacache import TrialPlan, compare, load_spec
from nomacache.experiments import build_scenario, metric_registry, point_record
from nomacache.montecarlo import simulate_d2d, simulate_delivery, simulate_pad, simulate_push

SIMULATORS = {
    "push_then_deliver_pushing": simulate_push,
    "push_then_deliver_delivery": simulate_delivery,
    "push_and_deliver": simulate_pad,
    "d2d": simulate_d2d,
}

# one representative operating point per strategy, from the bundled sweeps
POINTS = (
    ("fig5b", "gamma_0.5", 40.0),
    ("fig7a", None, 20.0),
    ("fig8case2", "m_5", 40.0),
    ("fig10a", "d_150", 40.0),
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=20000, help="Monte Carlo trials per point")
    parser.add_argument("--seed", type=int, default=7, help="root seed for the simulator")
    args = parser.parse_args()

    for config, variant, sweep_value in POINTS:
        spec = load_spec(config)
        record = point_record(spec, variant, sweep_value)
        scenario = build_scenario(spec.strategy, record)
        metrics = metric_registry(spec.strategy, scenario)
        names = spec.metrics or tuple(metrics)
        estimates = SIMULATORS[spec.strategy](
            TrialPlan(args.trials, args.seed, scenario, targets=names)
        )
        point = f"{spec.sweep_parameter}={sweep_value:g}" + (f", {variant}" if variant else "")
        print(f"\n{config} ({spec.strategy}; {point})")
        for name in names:
            analysis = metrics[name](None)
            sampled = estimates[name]
            flag = f"  [{', '.join(analysis.flags)}]" if analysis.flags else ""
            print(
                f"  {name:<24} analysis {analysis.value:.5f}   "
                f"mc {sampled.value:.5f} +- {sampled.ci_halfwidth:.5f}{flag}"
            )

    # the comparator automates exactly this check across a whole sweep
    spec = replace(load_spec("fig7a"), trials=args.trials, seed=args.seed)
    report = compare(spec, workers=4)
    print()
    for line in report.lines():
        print(line)
    return 0 if report.ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
