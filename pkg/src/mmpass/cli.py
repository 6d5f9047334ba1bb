"""Command-line entry point: ``python -m mmpass <subcommand> [options]``.

Exit status is 0 on success, 2 when no record is feasible and 1 on error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .harness import ExperimentSpec, default_schemes, emit_results, run_experiment, summarize
from .metaheuristics import InitMode
from .scenario import Regime, ScenarioConfig, watt_to_dbm

log = logging.getLogger("mmpass")

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2

SUBCOMMANDS = {
    "leakage-sweep": "leakage_sweep",
    "two-pa": "rate_vs_pmax_2pa",
    "multi-pa": "rate_vs_pmax_multipa",
    "sweep-pmax": None,  # two-PA or multi-PA depending on --pas
    "sweep-users": "rate_vs_users",
    "sweep-antennas": "rate_vs_antennas",
    "convergence": None,  # by --regime
}

HELP = {
    "leakage-sweep": "unmatched-PA power leakage versus phase mismatch",
    "two-pa": "two-PA schemes at the scenario's transmit power",
    "multi-pa": "multi-PA schemes at the scenario's transmit power",
    "sweep-pmax": "sum rate versus transmit power",
    "sweep-users": "sum rate versus user spread",
    "sweep-antennas": "sum rate versus number of PAs/antennas",
    "convergence": "PSO-ZF convergence traces",
}


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="master seed (u64)")
    p.add_argument("--trials", type=int, default=None, help="Monte-Carlo trials (default 20)")
    p.add_argument("--regime", choices=["nl", "wl"], default=None, help="restrict PASS schemes to one leakage regime")
    p.add_argument("--init", choices=["rand", "topt"], default=None, help="swarm initialization for PSO/DE schemes")
    p.add_argument("--out", default=None, help="output path (default <experiment>.<format>)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--config", default=None, help="scenario JSON file")
    p.add_argument("--pas", type=int, default=None, help="number of PAs for multi-PA experiments (default 12)")
    p.add_argument("--particles", type=int, default=None, help="swarm/population size override")
    p.add_argument("--iterations", type=int, default=None, help="PSO/DE iteration override")
    p.add_argument("--sweep", type=float, nargs="+", default=None, help="override the sweep grid")
    p.add_argument("--workers", type=int, default=1, help="parallel trials")
    p.add_argument("--no-timing", action="store_true", help="write wall_time_s as 0 for byte-stable output")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmpass", description="Multi-mode pinching-antenna system experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=HELP[name])
    return parser


def _experiment_for(args) -> str:
    exp = SUBCOMMANDS[args.command]
    if args.command == "sweep-pmax":
        return "rate_vs_pmax_2pa" if (args.pas or 2) == 2 else "rate_vs_pmax_multipa"
    if args.command == "convergence":
        return "convergence_wl" if args.regime == "wl" else "convergence_nl"
    return exp


def _schemes_for(args, experiment: str):
    if args.regime is None or experiment.startswith("convergence") or experiment == "leakage_sweep":
        return None
    drop = "mm_wl" if Regime.parse(args.regime) is Regime.NON_LEAKAGE else "mm_nl"
    return tuple(s for s in default_schemes(experiment) if s != drop)


def spec_from_args(args) -> ExperimentSpec:
    experiment = _experiment_for(args)
    base = ScenarioConfig.load(args.config) if args.config else None
    sweep = tuple(args.sweep) if args.sweep else None
    if args.command in ("two-pa", "multi-pa") and sweep is None:
        sweep = (float(watt_to_dbm(base.power.max_power)),) if base is not None else (27.0,)
    kw = dict(
        experiment=experiment,
        seed=args.seed,
        schemes=_schemes_for(args, experiment),
        sweep_values=sweep,
        pa_count=args.pas if experiment != "rate_vs_pmax_2pa" else None,
        particles=args.particles,
        iterations=args.iterations,
        init=InitMode.parse(args.init).value if args.init else None,
        workers=args.workers,
        base=base,
    )
    if args.trials is not None:
        kw["trials"] = args.trials
    return ExperimentSpec(**kw)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        spec = spec_from_args(args)
        log.info("running %s with %d trials (seed %d)", spec.experiment, spec.trials, spec.seed)
        result = run_experiment(spec)
        out = args.out or f"{spec.experiment}.{args.format}"
        written = emit_results(result, args.format, out, timing=not args.no_timing)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(summarize(result))
    print("wrote " + ", ".join(str(p) for p in written))
    if result.all_errors:
        return EXIT_ERROR
    if not result.any_feasible:
        return EXIT_INFEASIBLE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
