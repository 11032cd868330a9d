"""Command-line front end: ``hccn <command> ...``.

Exit status is 0 on success, 1 for invalid parameters and 2 for numeric
failures, in which case the failing module is named on stderr.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import traceback

from . import mcsim
from .coverage import CoverageContext, coverage_detail
from .errors import HccnError, NoServingBSError, NumericError, ParameterError
from .moments import ap_aggregates
from .params import DEFAULT_CONFIG, NetworkParams, advisories, check, db_to_linear, validate
from .rate import RateContext, rate_detail
from .report import emit, make_metadata
from .sweep import ENGINES, METRICS, PRESETS, SWEEPABLE, SweepSpec, parse_grid, preset_spec, run_sweep

NATS_TO_BITS = 1.4426950408889634


def _load_base(args) -> dict:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    else:
        cfg = dict(DEFAULT_CONFIG)
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ParameterError(f"--set expects KEY=VALUE (got {item!r})")
        cfg[key.strip()] = float(value) if key.strip() not in ("N_B", "N_A") else int(value)
    NetworkParams.from_config(cfg)  # surface missing/unknown keys early
    return cfg


def _params(args, require_cells=True) -> NetworkParams:
    p = NetworkParams.from_config(_load_base(args))
    check(p, allow_no_aps=True, require_cells=require_cells)
    for msg in advisories(p):
        print(f"warning: {msg}", file=sys.stderr)
    return p


def cmd_validate(args) -> int:
    p = NetworkParams.from_config(_load_base(args))
    problems = validate(p, allow_no_aps=args.allow_no_aps)
    if problems:
        for msg in problems:
            print(msg, file=sys.stderr)
        return 1
    for msg in advisories(p):
        print(f"warning: {msg}", file=sys.stderr)
    print("OK")
    return 0


def cmd_coverage(args) -> int:
    res = coverage_detail(CoverageContext.build(_params(args), db_to_linear(args.T_dB)))
    print(repr(res.value))
    if args.verbose:
        print(f"k_S0 in [{res.k_min:.4g}, {res.k_max:.4g}], paths: {', '.join(res.paths)}",
              file=sys.stderr)
    return 0


def cmd_rate(args) -> int:
    res = rate_detail(RateContext.build(_params(args)))
    print(repr(res.value * NATS_TO_BITS if args.bits else res.value))
    return 0


def _show(name: str, e: mcsim.Estimate) -> str:
    line = f"{name} {e.mean!r} +/- {e.ci_half_width!r} ({e.trials} trials, seed {e.seed}"
    if e.resampled:
        line += f", {e.resampled} redrawn"
    return line + ")"


def cmd_mc_coverage(args) -> int:
    e = mcsim.estimate_coverage(_params(args), db_to_linear(args.T_dB), args.trials, args.seed,
                                threads=args.threads)
    print(_show("p_c", e))
    print(_show("p_c_exact", e.secondary))
    return 0


def cmd_mc_rate(args) -> int:
    e = mcsim.estimate_rate(_params(args), args.trials, args.seed, threads=args.threads)
    print(_show("rate", e))
    print(_show("rate_exact", e.secondary))
    return 0


def cmd_ap_terms(args) -> int:
    p = _params(args, require_cells=False)
    ag = ap_aggregates(p)
    sig, ia = mcsim.estimate_ap_terms(p, args.trials, args.seed, threads=args.threads)
    print(f"L_A analytic {ag.L_A!r}")
    print(_show("L_A mc", sig))
    print(f"I_A analytic {ag.I_A_bar!r}")
    print(_show("I_A mc", ia))
    return 0


def cmd_sweep(args) -> int:
    base = _load_base(args)
    if args.preset:
        spec = preset_spec(
            args.preset, base,
            param=args.param, metric=args.metric, T_dB=args.T_dB,
            values=parse_grid(args.values) if args.values is not None else None,
            engines=args.engines, trials=args.trials, seed=args.seed, threads=args.threads,
        )
    else:
        if not args.param or args.values is None:
            raise ParameterError("sweep needs --param and --values (or --preset)")
        spec = SweepSpec(base=base, param=args.param, values=tuple(parse_grid(args.values)),
                         metric=args.metric or "coverage", engines=args.engines,
                         trials=args.trials, seed=args.seed, T_dB=args.T_dB,
                         threads=args.threads)
    result = run_sweep(spec)
    uses_mc = spec.engines != "analytic"
    result.metadata = make_metadata(
        base, spec.seed if uses_mc else None, param=spec.param, metric=spec.metric,
        engines=spec.engines, trials=spec.trials if uses_mc else 0, T_dB=spec.T_dB,
    )
    if args.out:
        path = emit(result, args.out, args.format)
        print(f"wrote {len(result.rows)} rows to {path}")
    else:
        from .report import to_csv, to_json
        sys.stdout.write(to_csv(result) if args.format == "csv" else to_json(result))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hccn", description="Coverage and rate of hybrid cellular/cell-free networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, mc=False):
        sp.add_argument("--config", help="JSON config (defaults to the built-in operating point)")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one config key; repeatable")
        if mc:
            sp.add_argument("--trials", type=int, default=2500)
            sp.add_argument("--seed", type=int, default=0)
            sp.add_argument("--threads", type=int, default=None,
                            help="worker threads (default: HCCN_THREADS or CPU count)")
        return sp

    sp = common(sub.add_parser("validate", help="check a config"))
    sp.add_argument("--allow-no-aps", action="store_true")
    sp.set_defaults(func=cmd_validate)

    sp = common(sub.add_parser("coverage", help="analytic coverage probability"))
    sp.add_argument("--T-dB", dest="T_dB", type=float, required=True)
    sp.add_argument("-v", "--verbose", action="store_true")
    sp.set_defaults(func=cmd_coverage)

    sp = common(sub.add_parser("rate", help="analytic average rate (nats/s/Hz)"))
    sp.add_argument("--bits", action="store_true", help="report bits/s/Hz")
    sp.set_defaults(func=cmd_rate)

    sp = common(sub.add_parser("mc-coverage", help="Monte Carlo coverage"), mc=True)
    sp.add_argument("--T-dB", dest="T_dB", type=float, required=True)
    sp.set_defaults(func=cmd_mc_coverage)

    sp = common(sub.add_parser("mc-rate", help="Monte Carlo average rate"), mc=True)
    sp.set_defaults(func=cmd_mc_rate)

    sp = common(sub.add_parser("ap-terms", help="AP signal and interference means"), mc=True)
    sp.set_defaults(func=cmd_ap_terms)

    sp = common(sub.add_parser("sweep", help="sweep one parameter"), mc=True)
    sp.add_argument("--preset", choices=sorted(PRESETS))
    sp.add_argument("--param", choices=SWEEPABLE)
    sp.add_argument("--values", help="start:step:stop or a comma list")
    sp.add_argument("--metric", choices=METRICS)
    sp.add_argument("--T-dB", dest="T_dB", type=float, default=None,
                    help="fixed threshold when sweeping a network parameter")
    sp.add_argument("--engines", choices=ENGINES, default="analytic")
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(func=cmd_sweep)
    return parser


def _module_of(exc: BaseException) -> str:
    """Innermost package module in the traceback, e.g. ``mathkit`` or ``coverage``."""
    name = getattr(exc, "module", None)
    for frame, _ in traceback.walk_tb(exc.__traceback__):
        mod = frame.f_globals.get("__name__", "")
        if mod.startswith("hccn.") and mod != "hccn.cli":
            name = mod.split(".")[1]
    return name or "unknown"


_NEGATIVE_GRID = re.compile(r"^-\d")


def _join_negative_grids(argv: list[str]) -> list[str]:
    # argparse takes "--values -10:2:20" for two options; glue such grids on.
    out = []
    it = iter(argv)
    for tok in it:
        if tok == "--values":
            nxt = next(it, None)
            if nxt is not None and _NEGATIVE_GRID.match(nxt):
                out.append(f"--values={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
            continue
        out.append(tok)
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_negative_grids(argv))
    try:
        return args.func(args)
    except ParameterError as exc:
        for msg in exc.violations:
            print(f"hccn: invalid parameters: {msg}", file=sys.stderr)
        return 1
    except (NumericError, NoServingBSError) as exc:
        print(f"hccn: numeric failure in module {_module_of(exc)}: {exc}", file=sys.stderr)
        return 2
    except HccnError as exc:
        print(f"hccn: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"hccn: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
