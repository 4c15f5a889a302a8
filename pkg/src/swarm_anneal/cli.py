"""Command-line entry point: ``swarm-anneal {run,init-sample,validate,aggregate}``.

Exit codes: 0 success, 2 configuration error, 1 runtime error. ``validate``
exits 1 when any check fails.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, apply_overrides, load_config

log = logging.getLogger("swarm_anneal")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML run configuration")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int, help="worker processes (capped by SWARM_ANNEAL_WORKERS)")
    p.add_argument("--method", choices=("csg", "csa", "uncontrolled_swarm", "langevin"))
    p.add_argument("--potential", choices=("double_well", "six_hump_camel"))
    p.add_argument("--m", type=float)
    p.add_argument("--kappa", type=int)
    p.add_argument("--n-runs", dest="n_runs", type=int)
    p.add_argument("--n-particles", dest="n_particles", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--T", dest="T", type=float)
    p.add_argument("--record-every", dest="record_every", type=int)
    p.add_argument("--init", dest="init.kind", choices=("swarm", "langevin", "mixture", "uniform", "file"))
    p.add_argument("--init-path", dest="init.path")
    p.add_argument("--burn-in-steps", dest="init.burn_in_steps", type=int)
    p.add_argument("--reference-size", dest="init.reference_size", type=int)
    p.add_argument("--schedule", dest="schedule.kind", choices=("constant", "linear", "quadratic", "polynomial"))
    p.add_argument("--beta0", dest="schedule.beta0", type=float)
    p.add_argument("--rate", dest="schedule.rate", type=float)


_OVERRIDE_KEYS = (
    "seed", "out", "method", "potential", "m", "kappa", "n_runs", "n_particles", "dt", "k", "T", "record_every",
    "init.kind", "init.path", "init.burn_in_steps", "init.reference_size",
    "schedule.kind", "schedule.beta0", "schedule.rate",
)


def _config_from_args(args):
    cfg = load_config(args.config)
    overrides = {k: getattr(args, k) for k in _OVERRIDE_KEYS if getattr(args, k, None) is not None}
    return apply_overrides(cfg, overrides) if overrides else cfg


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="swarm-anneal", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="simulate n_runs ensembles and write CSV outputs")
    _add_run_flags(run)
    run.add_argument("--t-bins", type=int, default=None, help="time bins of the heatmap (default: every snapshot)")
    run.add_argument("--x-bins", type=int, default=60)

    init = sub.add_parser("init-sample", help="draw one initial sample and write it as CSV")
    _add_run_flags(init)
    init.add_argument("--size", type=int, help="sample size (default: n_particles)")

    val = sub.add_parser("validate", help="numerical self-checks")
    val.add_argument("suite", nargs="?", default="all",
                     help="lambert | weak-convergence | c-prime | gibbs-limit | transport | fixed-point | acceptance | all")
    val.add_argument("--workers", type=int)

    agg = sub.add_parser("aggregate", help="rebuild heatmap and median curve from trajectory CSVs")
    agg.add_argument("inputs", nargs="+", help="run_*.csv files or directories holding them")
    agg.add_argument("--out", required=True)
    agg.add_argument("--axis", type=int, default=0)
    agg.add_argument("--t-bins", type=int, default=None)
    agg.add_argument("--x-bins", type=int, default=60)
    agg.add_argument("--subset-size", type=int, default=None)
    return parser


def _write_aggregates(out: Path, trajectories, axis=0, t_bins=None, x_bins=60, subset_size=None, x_range=None):
    from .experiments import aggregate_heatmap, median_min_u_curve
    from .outputs import write_curve_csv, write_heatmap_csv

    hm = aggregate_heatmap(trajectories, axis=axis, t_bins=t_bins, x_bins=x_bins, x_range=x_range)
    write_heatmap_csv(out / "heatmap.csv", hm)
    times, med = median_min_u_curve(trajectories, subset_size)
    write_curve_csv(out / "median_min_u.csv", times, med)


def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    from .experiments import resolve_workers, run_experiment
    from .outputs import write_diagnostics_csv, write_trajectory_csv
    from .potentials import get_potential

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.toml").write_text(cfg.to_toml(), encoding="utf-8")
    workers = resolve_workers(args.workers)
    log.info("running %d %s runs on %s with %d worker(s)", cfg.n_runs, cfg.method, cfg.potential, workers)
    trajs = run_experiment(cfg, workers=workers)
    for tr in trajs:
        write_trajectory_csv(out / f"run_{tr.run_index:03d}.csv", tr)
    write_diagnostics_csv(out / "diagnostics.csv", trajs)
    box = get_potential(cfg.potential).domain_box[0]
    _write_aggregates(out, trajs, t_bins=args.t_bins, x_bins=args.x_bins, x_range=tuple(box))
    print(f"wrote {len(trajs)} runs to {out}")
    return EXIT_OK


def cmd_init_sample(args) -> int:
    cfg = _config_from_args(args)
    from .experiments import draw_initial, _fit_C0
    from .outputs import write_sample_csv

    size = args.size or cfg.n_particles
    e = draw_initial(cfg, size, cfg.seed)
    C0 = _fit_C0(cfg, e)
    out = Path(cfg.out)
    path = out if out.suffix == ".csv" else out / "sample.csv"
    write_sample_csv(path, e.positions, C0 if C0 is not None else float("nan"))
    print(f"wrote {size} points to {path}")
    return EXIT_OK


def cmd_validate(args) -> int:
    from .experiments import resolve_workers
    from .validation import SUITES, format_report, run_suite

    if args.suite not in SUITES and args.suite != "all":
        raise ConfigError(f"unknown suite {args.suite!r}; choose from {sorted(SUITES) + ['all']}")
    kwargs = {"workers": resolve_workers(args.workers)} if args.suite == "acceptance" else {}
    checks = run_suite(args.suite, **kwargs)
    print(format_report(checks))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_RUNTIME


def cmd_aggregate(args) -> int:
    from .outputs import read_trajectory_csv

    files = []
    for item in args.inputs:
        p = Path(item)
        if p.is_dir():
            files.extend(sorted(p.glob("run_*.csv")))
        elif p.exists():
            files.append(p)
        else:
            raise ConfigError(f"no such input: {p}")
    if not files:
        raise ConfigError("no run_*.csv files found")
    trajs = [tr for f in files for tr in read_trajectory_csv(f)]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_aggregates(out, trajs, axis=args.axis, t_bins=args.t_bins, x_bins=args.x_bins, subset_size=args.subset_size)
    print(f"aggregated {len(trajs)} runs into {out}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "init-sample": cmd_init_sample, "validate": cmd_validate, "aggregate": cmd_aggregate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    logging.captureWarnings(True)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        log.debug("failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
