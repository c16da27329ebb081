"""Command line interface: `cpdetect {simulate,detect,compare,presets}`"""
from typing import List, Optional
import argparse
import json
import logging
import os
import sys
from .baselines import CusumConfig, PELT_COSTS, PeltConfig
from .exceptions import (
    CpdetectError, DomainError, InvalidInputError, SingularityError,
    UsageError)
from .genetic import CROSSOVER_MODES, GAConfig, MUTATION_MODES
from .intensity import IntensityFamily
from .objective import Hyperparams
from .report import (
    METHODS, SPEC_VERSION, compare_methods, detect, detection_to_dict,
    dumps_json, write_json, write_plot_csv)
from .series import (
    mean_threshold, read_series_csv, write_series_csv)
from .simulate import gen_lognormal_series, get_setting, preset_settings

logger = logging.getLogger(__name__)

WORKERS_ENV = "CPDETECT_WORKERS"
NORM37 = 37.0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text: str, sizes) -> List[float]:
    try:
        values = [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"expected comma separated numbers, got '{text}'")
    if len(values) not in sizes:
        raise UsageError(
            f"expected {' or '.join(map(str, sizes))} numbers, got "
            f"{len(values)}")
    return values


def parse_threshold(text: str, series) -> float:
    """A number, `mean` (series mean) or `norm37` (37 ug/m3)"""
    key = text.strip().lower()
    if key == "mean":
        return mean_threshold(series)
    if key == "norm37":
        return NORM37
    try:
        return float(key)
    except ValueError:
        raise UsageError(
            f"threshold must be a number, 'mean' or 'norm37', got '{text}'")


def workers_from_env() -> int:
    text = os.environ.get(WORKERS_ENV)
    if text is None or text.strip() == "":
        return 1
    try:
        workers = int(text)
    except ValueError:
        workers = 0
    if workers < 1:
        raise UsageError(
            f"{WORKERS_ENV} must be a positive integer, got '{text}'")
    return workers


def _ga_config(args) -> GAConfig:
    return GAConfig(
        population_size=args.pop,
        generations=args.generations,
        init_prob=args.init_prob,
        mutation_probs=tuple(_floats(args.mutation, (3,))),
        seed=args.seed,
        elitism=args.elitism == "on",
        mutation_mode=args.mutation_mode,
        patience=args.patience,
        crossover_mode=args.crossover_mode,
        jump_prob=args.jump_prob)


def _hyper(args) -> Hyperparams:
    if args.hyper is None:
        return Hyperparams()
    return Hyperparams.from_sequence(_floats(args.hyper, (4, 6)))


def _cmd_simulate(args):
    setting = get_setting(args.setting, args.seed)
    series = gen_lognormal_series(setting)
    write_series_csv(series, args.out)
    logger.info("wrote %d values of '%s' to %s",
                series.horizon, setting.name, args.out)


def _cmd_detect(args):
    series = read_series_csv(args.infile)
    result = detect(
        series,
        threshold=parse_threshold(args.threshold, series),
        family=IntensityFamily.parse(args.family),
        hyper=_hyper(args),
        cfg=_ga_config(args),
        workers=workers_from_env(),
        source=args.infile)
    write_json(detection_to_dict(result), args.out)
    if args.plot_out:
        write_plot_csv(result, args.plot_out)
    logger.info("best change-points %s, bmdl %.6g",
                list(result.config.tau), result.bmdl)


def _cmd_compare(args):
    series = read_series_csv(args.infile)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    threshold = parse_threshold(args.threshold, series)
    results = compare_methods(
        series, methods,
        threshold=threshold,
        family=IntensityFamily.parse(args.family),
        hyper=_hyper(args),
        cfg=_ga_config(args),
        pelt_cfg=PeltConfig(cost=args.pelt_cost),
        cusum_cfg=CusumConfig(shift=args.cusum_shift,
                              reference=args.cusum_reference),
        workers=workers_from_env())
    write_json({
        "spec_version": SPEC_VERSION,
        "input": {"source": args.infile, "horizon": series.horizon,
                  "threshold": threshold},
        "methods": results}, args.out)


def _cmd_presets(args):
    rows = [{"name": s.name, "horizon": s.horizon,
             "change_points": s.change_points,
             "mu": [r.mu for r in s.regimes],
             "sigma": s.regimes[0].sigma,
             "seed": s.seed,
             "description": s.description}
            for s in preset_settings()]
    if args.out:
        write_json(rows, args.out)
    else:
        sys.stdout.write(dumps_json(rows))


def _add_ga_flags(p):
    p.add_argument("--threshold", default="mean",
                   help="number, 'mean' or 'norm37' (default: mean)")
    p.add_argument("--family", default="weibull",
                   choices=[f.long_name for f in IntensityFamily])
    p.add_argument("--generations", type=int, default=50)
    p.add_argument("--pop", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init-prob", type=float, default=0.06)
    p.add_argument("--mutation", default="0.4,0.3,0.4",
                   help="weights of the shifts -1,0,+1")
    p.add_argument("--mutation-mode", default="shift",
                   choices=MUTATION_MODES)
    p.add_argument("--crossover-mode", default="balanced",
                   choices=CROSSOVER_MODES)
    p.add_argument("--jump-prob", type=float, default=0.2,
                   help="probability of adding or removing one point")
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--elitism", default="on", choices=("on", "off"))
    p.add_argument("--hyper", default=None,
                   help="phi11,phi12,phi21,phi22[,phi31,phi32]")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(
        prog="cpdetect",
        description="Change-point detection for threshold exceedances")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("simulate", parents=[common],
                       help="write a simulated series as CSV")
    p.add_argument("--setting", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("detect", parents=[common],
                       help="Bayesian-MDL genetic search")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--plot-out", default=None)
    _add_ga_flags(p)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("compare", parents=[common],
                       help="run several detectors side by side")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--methods", default=",".join(METHODS))
    p.add_argument("--cusum-shift", type=float, default=1.0)
    p.add_argument("--cusum-reference", type=int, default=None,
                   help="leading in-control observations for mu0, sigma")
    p.add_argument("--pelt-cost", default="log", choices=PELT_COSTS)
    _add_ga_flags(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("presets", parents=[common],
                       help="list the bundled simulation settings")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_presets)
    return parser


def _error_kind(err: Exception) -> str:
    if isinstance(err, UsageError):
        return "usage"
    if isinstance(err, SingularityError):
        return "singularity"
    if isinstance(err, DomainError):
        return "domain"
    if isinstance(err, InvalidInputError):
        return "invalid-input"
    if isinstance(err, OSError):
        return "io"
    return "runtime"


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(
            stream=sys.stderr,
            level=logging.DEBUG if args.verbose else logging.WARNING,
            format="%(asctime)s %(name)s %(levelname)s %(message)s")
        args.func(args)
    except (CpdetectError, OSError, ValueError) as err:
        print(json.dumps({"error": _error_kind(err), "message": str(err)}),
              file=sys.stderr)
        return 2 if isinstance(err, UsageError) else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
