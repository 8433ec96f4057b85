"""Command-line entry point: ``spinflow <subcommand> [flags]``.

Exit codes: 0 success, 1 a check or integration failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import io
import json
import sys

import numpy as np

from . import entropyflow, fourtop, homogeneous, verification
from .reports import dumps

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _positive(name):
    def conv(text):
        try:
            val = float(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"{name} must be a number") from exc
        if not val > 0 or not np.isfinite(val):
            raise argparse.ArgumentTypeError(f"{name} must be positive")
        return val
    return conv


def _positive_int(name):
    def conv(text):
        try:
            val = int(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"{name} must be an integer") from exc
        if val < 1:
            raise argparse.ArgumentTypeError(f"{name} must be at least 1")
        return val
    return conv


def _nonneg_int(name):
    def conv(text):
        try:
            val = int(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"{name} must be an integer") from exc
        if val < 0:
            raise argparse.ArgumentTypeError(f"{name} must be non-negative")
        return val
    return conv


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def cmd_berger_flow(args) -> int:
    m0 = homogeneous.LeftInvariantMetric3.berger(args.kappa)
    try:
        traj = homogeneous.normalized_ricci_flow(m0, args.t_end, args.dt,
                                                 search_bound=args.search_bound)
    except homogeneous.IntegratorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    buf = io.StringIO()
    traj.to_csv(buf)
    _emit(buf.getvalue(), args.output)
    return EXIT_OK


def cmd_entropy_flow(args) -> int:
    if args.flat:
        g0 = entropyflow.ConformalTorusMetric.flat(args.n, tuple(args.lengths))
    else:
        g0 = entropyflow.ConformalTorusMetric.cosine_bump(args.n, args.amplitude,
                                                         tuple(args.lengths), args.mode)
    try:
        traj = entropyflow.ricci_flow_2d(g0, args.t_end, args.dt, normalized=args.normalized)
    except (entropyflow.EigensolverError, entropyflow.CFLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    buf = io.StringIO()
    entropyflow.write_trajectory_csv(traj, buf)
    _emit(buf.getvalue(), args.output)
    column = [s.normalized_lambda if args.normalized else s.entropy.lam for s in traj]
    drops = np.diff(column)
    monotone = bool(np.all(drops >= -args.monotone_slack))
    rep = {"samples": len(traj), "monotone": monotone,
           "max_decrease": float(max(0.0, -float(np.min(drops)))) if len(drops) else 0.0}
    ok = monotone
    if len(traj) >= 3 and not args.normalized:
        chk = entropyflow.perelman_derivative_check(traj)
        mid = len(chk.times) // 2
        rep.update({
            "derivative_max_rel_error": chk.max_rel_error,
            "derivative_mid_rel_error": float(chk.rel_error[mid]),
            "derivative_max_abs_error": chk.max_abs_error,
            "derivative_rtol": args.rtol,
        })
        ok = ok and chk.max_rel_error <= args.rtol
    rep["pass"] = bool(ok)
    text = dumps(rep)
    if args.report:
        _emit(text, args.report)
    else:
        sys.stderr.write(text)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(args) -> int:
    seeds = range(args.seed_base, args.seed_base + args.seeds)
    try:
        threads = verification.thread_count()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    result = verification.run_suite(seeds, args.t2_n, args.t4_n,
                                    coupling=args.coupling_override, threads=threads)
    _emit(dumps(result), args.output)
    if not result["pass"]:
        print("failing checks: " + ", ".join(result["failing"]), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_fourtop(args) -> int:
    topo = fourtop.SpinTopology(args.p, args.q)
    alex = None
    if args.braid is not None:
        try:
            word = fourtop.parse_braid(args.braid)
            alex = fourtop.alexander_from_braid(word, args.strands)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    _emit(dumps(fourtop.report(topo, alex)), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file of defaults; explicit flags win")
        p.add_argument("--output", "-o", help="output file (default: stdout)")

    p = sub.add_parser("berger-flow", help="volume-normalised Ricci flow from a Berger sphere")
    common(p)
    p.add_argument("--kappa", type=_positive("kappa"), default=16.0)
    p.add_argument("--t-end", type=_positive("t-end"), default=3.0)
    p.add_argument("--dt", type=_positive("dt"), default=1e-3)
    p.add_argument("--search-bound", type=_positive_int("search-bound"), default=64)
    p.set_defaults(func=cmd_berger_flow)

    p = sub.add_parser("entropy-flow", help="2D Ricci flow with the lambda-entropy along it")
    common(p)
    p.add_argument("--n", type=_positive_int("n"), default=64)
    p.add_argument("--lengths", type=_positive("lengths"), nargs=2, default=[1.0, 1.0])
    p.add_argument("--amplitude", type=float, default=0.2)
    p.add_argument("--mode", choices=("x", "xy"), default="x")
    p.add_argument("--flat", action="store_true", help="start from the flat metric")
    p.add_argument("--t-end", type=_positive("t-end"), default=0.01)
    p.add_argument("--dt", type=_positive("dt"), default=1e-4)
    p.add_argument("--normalized", action="store_true")
    p.add_argument("--rtol", type=_positive("rtol"), default=0.02)
    p.add_argument("--monotone-slack", type=float, default=1e-12)
    p.add_argument("--report", help="write the JSON check report here (default: stderr)")
    p.set_defaults(func=cmd_entropy_flow)

    p = sub.add_parser("verify", help="seeded identity suite")
    common(p)
    p.add_argument("--seeds", type=_positive_int("seeds"), default=10)
    p.add_argument("--seed-base", type=_nonneg_int("seed-base"), default=0)
    p.add_argument("--t2-n", type=_positive_int("t2-n"), default=64)
    p.add_argument("--t4-n", type=_positive_int("t4-n"), default=16)
    # negative control for the test harness: wrong spinor/line-bundle coupling
    p.add_argument("--coupling-override", type=float, default=0.5, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fourtop", help="spin 4-manifold invariants and flow verdicts")
    common(p)
    p.add_argument("--p", type=_nonneg_int("p"), required=True)
    p.add_argument("--q", type=_nonneg_int("q"), required=True)
    p.add_argument("--braid", help='surgery knot as a braid word, e.g. "1 1 1"')
    p.add_argument("--strands", type=_positive_int("strands"), default=2)
    p.set_defaults(func=cmd_fourtop)
    return parser


def _config_path(argv: list[str]) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config":
            if i + 1 >= len(argv):
                raise UsageError("--config needs a file argument")
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _config_args(path: str) -> list[str]:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    out = []
    for key, val in cfg.items():
        flag = "--" + str(key).replace("_", "-")
        if isinstance(val, bool):
            if val:
                out.append(flag)
        elif isinstance(val, list):
            out.append(flag)
            out.extend(str(v) for v in val)
        else:
            out.extend([flag, str(val)])
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        path = _config_path(argv)
        if path is not None and argv and not argv[0].startswith("-"):
            # config values go first so explicit flags override them
            argv = [argv[0]] + _config_args(path) + argv[1:]
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
        return args.func(args)
    except UsageError as exc:
        print(f"spinflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
