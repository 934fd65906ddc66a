"""Command line entry point: ``brinkve {run,sweep,diag,nondim}``.

Exit status: 0 on success, 1 on bad input (usage, config, file format), 2 when
a solver fails or a sweep ends with partial results.
"""
import argparse
import logging
import os
import sys

from .config import ExperimentConfig, load_config
from .errors import (ContractViolation, FormatError, ParameterError, SolverError, StepRejected,
                     ValidationError)
from .experiments import diagnose_run, diagnose_sweep, gamma_sweep, run_single

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config file")
    common.add_argument("--output", help="output directory (overrides the config)")
    common.add_argument("--model", choices=("btp", "bve"), help="model for 'run'")
    common.add_argument("--gamma", type=float, help="aspect ratio override")
    common.add_argument("--quiet", action="store_true", help="only report errors")

    parser = _Parser(prog="brinkve", description="Brinkman two-phase / vertical-equilibrium "
                     "simulator and gamma-convergence harness.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("run", parents=[common], help="integrate one model")
    sub.add_parser("sweep", parents=[common], help="gamma convergence study")
    sub.add_parser("diag", parents=[common], help="recompute diagnostics from stored snapshots")
    sub.add_parser("nondim", parents=[common], help="print dimensionless parameters")
    return parser


def _config(args):
    return load_config(args.config) if args.config else ExperimentConfig()


def _say(args, text):
    if not args.quiet:
        print(text)


def cmd_run(args):
    cfg = _config(args)
    model = args.model or ("btp" if cfg.model == "both" else cfg.model)
    out = args.output or cfg.output_dir
    traj = run_single(cfg, model, args.gamma, out)
    last = traj.reports[-1]
    _say(args, f"{model}: {len(traj.records)} steps to t={last.time!r}, "
               f"energy={last.energy_E:.6g}, max mass residual={traj.mass_residual_max:.3g}")
    return EXIT_OK


def cmd_sweep(args):
    cfg = _config(args)
    if cfg.model != "both":
        raise ValidationError("sweep needs model = both", key="model")
    out = args.output or cfg.output_dir
    result = gamma_sweep(cfg, out)
    for row in result.rows:
        _say(args, f"gamma={row['gamma']:.6g} e={row['e_gamma']:.6g} "
                   f"|dz p|={row['grad_pz_norm']:.6g}")
    _say(args, f"monotone={int(result.monotone)} partial={int(result.partial)}")
    if result.partial:
        print(f"sweep incomplete: {result.error}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_diag(args):
    out = args.output or _config(args).output_dir
    if not os.path.isdir(out):
        raise ValidationError(f"no such output directory: {out}", key="output")
    if os.path.exists(os.path.join(out, "params.ini")):
        rows = diagnose_run(out)
        _say(args, f"{out}: {len(rows)} snapshots re-evaluated")
        return EXIT_OK
    result, stored = diagnose_sweep(out)
    if not result.rows:
        for name in sorted(os.listdir(out)):
            if os.path.exists(os.path.join(out, name, "params.ini")):
                _say(args, f"{name}: snapshots re-evaluated")
        return EXIT_OK
    for row in result.rows:
        _say(args, f"gamma={row['gamma']:.6g} e={row['e_gamma']:.6g}")
    _say(args, f"monotone={int(result.monotone)} stored={'-' if stored is None else int(stored)}")
    if stored is not None and stored != result.monotone:
        print("monotonicity flag disagrees with the stored convergence table", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def cmd_nondim(args):
    cfg = _config(args)
    p = cfg.params(cfg.single_run_gamma(args.gamma))
    print(f"gamma={p.gamma:.6g} beta1={p.beta1:.6g} beta2={p.beta2:.6g}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "diag": cmd_diag, "nondim": cmd_nondim}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_INPUT
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ValidationError, ParameterError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, StepRejected, ContractViolation) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
