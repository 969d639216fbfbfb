"""Command-line entry point: ``waapml <subcommand> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..errors import WaapmlError
from .config import NAMED_CONFIGURATIONS, PATH_ALIASES, PRESETS, ExperimentConfig, preset
from .experiment import (ResultCache, code_version, convergence_study, provenance_lines,
                         run_reflection_experiment, source_fingerprint, sweep_sigma_max)
from .reports import memory_report, operation_count_report, write_rows_csv

log = logging.getLogger("waapml")


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI file (lengths in cm, times in ps)")
    common.add_argument("--preset", choices=sorted(PRESETS), default="paper",
                        help="base parameter set the config file and flags override")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--pml-path", choices=["ec", "direct", "waa"])
    common.add_argument("--mesh", choices=["paved", "layered"])
    common.add_argument("--order", type=int, help="polynomial order p")
    common.add_argument("--configuration", choices=sorted(NAMED_CONFIGURATIONS),
                        help="one of the named configurations; applied before --pml-path/--mesh")
    common.add_argument("--cache", type=Path, help="reuse results stored in this directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="waapml", description=(
        "DGTD Maxwell solver with stretched-coordinate PML: reflection benchmarks "
        "and cost reports"))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="single reflection experiment")
    p.add_argument("--sigma", type=float, help="sigma_max in S/m (default from config)")

    p = sub.add_parser("sweep", parents=[common], help="scan sigma_max")
    p.add_argument("--sigmas", type=_float_list, help="comma-separated sigma_max values")
    p.add_argument("--traces", action="store_true", help="also write each run's trace CSV")

    p = sub.add_parser("report-memory", parents=[common], help="PML operator storage counts")
    p.add_argument("--dry-run", action="store_true", help="analytic counts only, build nothing")

    p = sub.add_parser("report-ops", parents=[common], help="per-element operation counts")
    p.add_argument("--orders", type=_int_list, default=[1, 2, 3, 4, 5])

    p = sub.add_parser("converge", parents=[common], help="best reflection per order")
    p.add_argument("--orders", type=_int_list, default=[2, 3, 4])
    p.add_argument("--sigmas", type=_float_list)
    p.add_argument("--configurations", type=lambda s: s.split(","),
                   default=list(NAMED_CONFIGURATIONS))
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = preset(args.preset)
    if args.config is not None:
        cfg = ExperimentConfig.load(args.config, base=cfg)
    if args.configuration:
        cfg = cfg.named(args.configuration)
    kw = {}
    if args.pml_path:
        kw["pml_path"] = PATH_ALIASES[args.pml_path]
    if args.mesh:
        kw["mesh_style"] = args.mesh
    if args.pml_path or args.mesh:
        # let the sampling follow the new path/mesh combination
        kw["sampling"] = None
    if args.order is not None:
        kw["order"] = args.order
    if args.out is not None:
        kw["output_dir"] = str(args.out)
    return cfg.with_(**kw) if kw else cfg


def _cmd_run(cfg, args, cache):
    r = run_reflection_experiment(cfg, args.sigma, cache=cache)
    print(f"{r.label} p={r.order} sigma_max={r.sigma_max:g} S/m: "
          f"reflection {r.reflection_db:.2f} dB (peak {r.peak_amplitude:.4e} V/m "
          f"at {r.peak_time:.4e} s), {r.n_steps} steps")
    if r.trace_path:
        print(f"trace: {r.trace_path}")


def _cmd_sweep(cfg, args, cache):
    sweep = sweep_sigma_max(cfg, args.sigmas, out_dir=cfg.output_dir, cache=cache,
                            write_traces=args.traces)
    print(f"{'sigma_max':>10s} {'dB':>9s}")
    for r in sweep.results:
        print(f"{r.sigma_max:10g} {r.reflection_db:9.2f}")
    best = sweep.best
    print(f"argmin sigma_max = {best.sigma_max:g} S/m ({best.reflection_db:.2f} dB)")


def _cmd_memory(cfg, args, cache):
    report = memory_report(cfg, build=not args.dry_run)
    print(report.format())
    path = write_rows_csv(Path(cfg.output_dir) / f"memory_p{cfg.order}.csv", [report],
                          provenance_lines(cfg))
    print(f"written: {path}")


def _cmd_ops(cfg, args, cache):
    rows = [operation_count_report(p) for p in args.orders]
    print(f"{'p':>2s} {'Np':>4s} {'Nq':>4s} {'direct mul':>11s} {'waa mul':>9s} "
          f"{'direct add':>11s} {'waa add':>8s} {'aux mul d/w':>14s}")
    for r in rows:
        print(f"{r.order:2d} {r.n_nodes:4d} {r.n_quad:4d} {r.direct_field_mults:11d} "
              f"{r.waa_field_mults:9d} {r.direct_field_adds:11d} {r.waa_field_adds:8d} "
              f"{r.direct_aux_mults:>6d}/{r.waa_aux_mults:<7d}")
    path = write_rows_csv(Path(cfg.output_dir) / "operation_counts.csv", rows,
                          [f"waapml {code_version()} source {source_fingerprint()}"])
    print(f"written: {path}")


def _cmd_converge(cfg, args, cache):
    rows = convergence_study(cfg, args.orders, args.configurations, sigma_values=args.sigmas,
                             out_dir=cfg.output_dir, cache=cache)
    for name, p, s, db in rows:
        print(f"{name:14s} p={p} best sigma_max={s:g}: {db:.2f} dB")


COMMANDS = {"run": _cmd_run, "sweep": _cmd_sweep, "report-memory": _cmd_memory,
            "report-ops": _cmd_ops, "converge": _cmd_converge}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        cache = ResultCache(args.cache) if args.cache else None
        COMMANDS[args.command](cfg, args, cache)
    except WaapmlError as exc:
        print(f"waapml: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"waapml: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
