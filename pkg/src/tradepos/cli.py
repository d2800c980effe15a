"""Command-line front end.

Every run writes a metadata record (tool version, command line, resolved
parameters, seed, numeric mode) ahead of its data: a ``metadata`` object in
JSON output, a single ``# {...}`` comment line in CSV output.  A JSON
result can be re-run with ``--replay FILE``.

Exit codes: 0 analysis completed, 1 validation error, 2 horizon-cap
refusal, 3 a ``--fail-on-*`` condition triggered.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from fractions import Fraction
from typing import List, Optional

from . import __version__
from .closed_form import closed_form_state, oscillation_report, polar_constants, spectral_data, Form
from .exact import EXACT_CAP, RationalParams, verify_exhaustive_exact
from .model import (AdmissibilityError, ExtremePath, MarketBounds, TradingParams,
                    decode_extreme, distinguished_path, simulate)
from .multiasset import (MultiAssetParams, distinguished_paths, oscillation_condition,
                         simulate_multi, verify_multi)
from .search import (DEFAULT_CAP, DEFAULT_SPLIT_DEPTH, HorizonCapError, Mode,
                     alpha_max_bisect, extreme_fan, gap_scan, observation_check, verify)
from .thresholds import classify, compute_thresholds, threshold_surface

EXIT_OK, EXIT_INVALID, EXIT_CAP, EXIT_FLAGGED = 0, 1, 2, 3
# options whose values may start with '-'
_GLUE = {"--path", "--vmin-grid", "--vmin", "--vmax"}


class CliError(Exception):
    def __init__(self, msg, code=EXIT_INVALID):
        super().__init__(msg)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(f"{self.prog}: {message}")


def _num(s, exact: bool = False):
    try:
        return Fraction(str(s)) if exact else float(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise CliError(f"not a number: {s!r}") from exc


def _fmt(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)
    if x is None:
        return None
    return x


# ---------------------------------------------------------------- output

class Output:
    def __init__(self, fmt: str, meta: dict):
        self.fmt = fmt
        self.meta = meta

    def render(self, result: dict, columns: Optional[List[str]] = None, rows=None) -> str:
        if self.fmt == "json":
            doc = {"metadata": self.meta, "result": result}
            return json.dumps(doc, indent=2, default=_fmt) + "\n"
        buf = io.StringIO()
        buf.write("# " + json.dumps(self.meta, default=_fmt) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        if rows is None:
            columns = list(result)
            rows = [[result[c] for c in columns]]
        w.writerow(columns)
        for r in rows:
            w.writerow(["" if v is None else _fmt(v) for v in r])
        return buf.getvalue()


def _params(args) -> TradingParams:
    for name in ("alpha", "vmin", "vmax"):
        if getattr(args, name, None) is None:
            raise CliError(f"--{name} is required")
    return TradingParams(args.alpha, args.x0, MarketBounds(args.vmin, args.vmax))


def _witness_json(w):
    if w is None:
        return None
    return {"mask": w.path.hex, "horizon": w.path.horizon, "stage": w.stage, "value": w.value}


def _verification_json(res) -> dict:
    m = res.min_state
    return {
        "horizon": res.horizon,
        "mode": res.mode.value,
        "all_positive": res.all_positive,
        "paths_examined": res.paths_examined,
        "count": res.count,
        "seed": res.seed,
        "indeterminate": res.indeterminate,
        "witness": _witness_json(res.witness),
        "min_state": {"value": m.value, "mask": m.path.hex, "stage": m.stage},
        "forced_paths": [p.hex for p in res.forced_paths],
    }


# ---------------------------------------------------------------- commands

def cmd_thresholds(args, out: Output) -> int:
    t = compute_thresholds(MarketBounds(args.vmin, args.vmax))
    d = t.as_dict()
    result = {"v_min": args.vmin, "v_max": args.vmax, **d}
    _emit(args, out.render(result))
    return EXIT_OK


def cmd_simulate(args, out: Output) -> int:
    params = _params(args)
    b = params.bounds
    if args.path is not None:
        path = [_num(s, args.exact) for s in args.path.split(",") if s.strip()]
    elif args.distinguished is not None:
        path = distinguished_path(b, args.distinguished)
    elif args.extreme_mask is not None:
        if args.horizon is None:
            raise CliError("--extreme-mask needs --horizon")
        try:
            ep = ExtremePath(int(args.extreme_mask, 16), args.horizon)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
        path = decode_extreme(ep, b)
    else:
        raise CliError("one of --path, --distinguished, --extreme-mask is required")
    traj = simulate(params, path)
    n = traj.horizon
    rows = []
    for k in range(n + 1):
        u = traj.controls[k] if k < n else None
        lev = traj.leverage[k] if k < n else None
        rows.append([k, traj.states[k], u, lev])
    result = {
        "states": list(traj.states), "controls": list(traj.controls),
        "leverage": list(traj.leverage), "first_nonpositive": traj.first_nonpositive,
        "indeterminate": traj.indeterminate,
    }
    _emit(args, out.render(result, ["k", "X", "u", "L"], rows))
    if args.fail_on_bankruptcy and traj.first_nonpositive is not None:
        return EXIT_FLAGGED
    return EXIT_OK


def cmd_verify(args, out: Output) -> int:
    params = _params(args)
    if args.exact:
        if args.mode != "exhaustive":
            raise CliError("--exact supports exhaustive mode only")
        res = verify_exhaustive_exact(RationalParams.from_params(params), args.horizon,
                                      cap=min(args.cap, EXACT_CAP))
    else:
        res = verify(params, args.horizon, Mode(args.mode), count=args.count, seed=args.seed,
                     **_exh_kw(args, args.mode))
    result = _verification_json(res)
    result["classification"] = classify(params).value
    if args.observation:
        rep = observation_check(params, args.horizon, Mode(args.mode), count=args.count,
                                seed=args.seed, **_exh_kw(args, args.mode))
        result["observation"] = {"outcome": rep.outcome.value, "antecedent": rep.antecedent,
                                 "consequent": rep.consequent,
                                 "counterexample": _witness_json(rep.witness)}
    if out.fmt == "csv":
        w = res.witness
        row = {"horizon": res.horizon, "mode": res.mode.value, "all_positive": res.all_positive,
               "paths_examined": res.paths_examined,
               "witness_mask": w.path.hex if w else None, "witness_stage": w.stage if w else None,
               "min_state": res.min_state.value, "min_mask": res.min_state.path.hex,
               "min_stage": res.min_state.stage}
        _emit(args, out.render(row))
    else:
        _emit(args, out.render(result))
    if args.fail_on_failure and not res.all_positive:
        return EXIT_FLAGGED
    return EXIT_OK


def _exh_kw(args, mode):
    kw = {"workers": args.threads}
    if mode == "exhaustive":
        kw.update(cap=args.cap, split_depth=args.split_depth)
        if getattr(args, "stop_at_first", False):
            kw["stop_at_first"] = True
    return kw


def cmd_gap_scan(args, out: Output) -> int:
    b = MarketBounds(args.vmin, args.vmax)
    if args.figure2:
        if args.alpha is None:
            raise CliError("--figure2 needs --alpha")
        masks, states = extreme_fan(TradingParams(args.alpha, args.x0, b), args.horizon,
                                    cap=min(args.cap, 20))
        rows = [[hex(int(m)), k, float(states[i, k])]
                for i, m in enumerate(masks) for k in range(args.horizon + 1)]
        if out.fmt == "json":
            _emit(args, out.render({"fan": [dict(zip(("mask", "k", "X"), r)) for r in rows]}))
        else:
            _emit(args, out.render({}, ["mask", "k", "X"], rows))
        return EXIT_OK
    scan = gap_scan(b, args.horizon, args.n, Mode(args.mode), x0=args.x0, count=args.count,
                    seed=args.seed, **_exh_kw(args, args.mode))
    rows = [[r.alpha, r.all_positive, r.min_state] for r in scan]
    if out.fmt == "json":
        _emit(args, out.render({"rows": [{"alpha": a, "all_positive": p, "min_state": m}
                                         for a, p, m in rows]}))
    else:
        _emit(args, out.render({}, ["alpha", "all_positive", "min_state"], rows))
    if args.fail_on_failure and not all(r.all_positive for r in scan):
        return EXIT_FLAGGED
    return EXIT_OK


def _int_range(spec: str) -> List[int]:
    if ":" in spec:
        lo, hi = (int(s) for s in spec.split(":"))
        return list(range(lo, hi + 1))
    return [int(spec)]


def cmd_alphamax(args, out: Output) -> int:
    b = MarketBounds(args.vmin, args.vmax)
    try:
        horizons = _int_range(args.horizon)
    except ValueError as exc:
        raise CliError(f"bad --horizon {args.horizon!r}") from exc
    ests = [alpha_max_bisect(b, args.x0, n, args.tol, cap=args.cap,
                             split_depth=args.split_depth, workers=args.threads)
            for n in horizons]
    t = compute_thresholds(b)
    rows = [[e.horizon, e.lower, e.upper, e.tolerance, "; ".join(e.anomalies)] for e in ests]
    if out.fmt == "json":
        _emit(args, out.render({
            "alpha_minus": t.alpha_minus, "alpha_plus": t.alpha_plus,
            "estimates": [{"horizon": e.horizon, "lower": e.lower, "upper": e.upper,
                           "tolerance": e.tolerance, "anomalies": e.anomalies,
                           "history": [[a, ok] for a, ok in e.history]} for e in ests]}))
    else:
        _emit(args, out.render({}, ["N", "lower", "upper", "tol", "anomalies"], rows))
    return EXIT_OK


def _grid(spec: str) -> List[float]:
    try:
        start, stop, step = (float(s) for s in spec.split(":"))
    except ValueError as exc:
        raise CliError(f"grid must be start:stop:step, got {spec!r}") from exc
    if step <= 0 or stop < start:
        raise CliError("grid needs step > 0 and stop >= start")
    n = int(round((stop - start) / step))
    return [round(start + i * step, 12) for i in range(n + 1)]


def cmd_surface(args, out: Output) -> int:
    rows = threshold_surface(args.vmax, _grid(args.vmin_grid))
    cols = ["v_min", "v_max", "alpha_minus", "alpha_plus", "regime"]
    table = [[r.v_min, r.v_max, r.alpha_minus, r.alpha_plus, r.regime.value] for r in rows]
    if out.fmt == "json":
        _emit(args, out.render({"rows": [dict(zip(cols, r)) for r in table]}))
    else:
        _emit(args, out.render({}, cols, table))
    return EXIT_OK


def cmd_closed_form(args, out: Output) -> int:
    params = _params(args)
    rows = [[k, closed_form_state(params, k)] for k in range(args.kmax + 1)]
    if out.fmt == "json":
        sd = spectral_data(params)
        rep = oscillation_report(params)
        spectral = {"theta": sd.theta, "q": sd.q, "form": sd.form.value,
                    "lambda_plus": _cplx(sd.lambda_plus), "lambda_minus": _cplx(sd.lambda_minus),
                    "g_plus": _cplx(sd.g_plus), "g_minus": _cplx(sd.g_minus),
                    "r": sd.r, "omega": sd.omega}
        if sd.form is Form.OSCILLATORY:
            spectral["B"], spectral["phi"] = polar_constants(params)
        _emit(args, out.render({
            "spectral": spectral,
            "oscillation": {"case": rep.case.value,
                            "predicted_sign_failure": rep.predicted_sign_failure,
                            "searched_to": rep.searched_to},
            "rows": [{"k": k, "X": x} for k, x in rows]}))
    else:
        _emit(args, out.render({}, ["k", "X"], rows))
    return EXIT_OK


def _cplx(z):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def cmd_multi(args, out: Output) -> int:
    if args.params is None:
        raise CliError("multi needs --params FILE")
    doc = _load_json(args.params)
    try:
        mp = MultiAssetParams.from_dict(doc)
    except (KeyError, TypeError) as exc:
        raise CliError(f"malformed multi-asset parameter file: {exc}") from exc
    paths = doc.get("paths") or distinguished_paths(mp, args.horizon)
    traj = simulate_multi(mp, paths)
    cond = oscillation_condition(mp)
    if out.fmt == "json":
        result = {"m": mp.m, "oscillation": {"holds": cond.holds, "lhs": cond.lhs},
                  "states": list(traj.states), "first_nonpositive": traj.first_nonpositive}
        if args.mode:
            ver = verify_multi(mp, args.horizon, Mode(args.mode), count=args.count, seed=args.seed)
            result["verification"] = {
                "mode": ver.mode.value, "all_positive": ver.all_positive,
                "paths_examined": ver.paths_examined, "min_state": ver.min_value,
                "witness": None if ver.witness is None else {
                    "masks": [hex(m) for m in ver.witness[0]], "stage": ver.witness[1],
                    "value": ver.witness[2]}}
        _emit(args, out.render(result))
    else:
        _emit(args, out.render({}, ["k", "X"], list(enumerate(traj.states))))
    return EXIT_OK


# ---------------------------------------------------------------- plumbing

def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc


def _emit(args, text: str):
    if args.output and args.output != "-":
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


COMMANDS = {
    "thresholds": (cmd_thresholds, "json"),
    "simulate": (cmd_simulate, "csv"),
    "verify": (cmd_verify, "json"),
    "gap-scan": (cmd_gap_scan, "csv"),
    "alphamax": (cmd_alphamax, "csv"),
    "surface": (cmd_surface, "csv"),
    "closed-form": (cmd_closed_form, "csv"),
    "multi": (cmd_multi, "json"),
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("-o", "--output", help="output file (default: stdout)")
    common.add_argument("--format", choices=["csv", "json"], help="output format")
    common.add_argument("--params", help="JSON parameter file; flags override its values")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--cap", type=int, default=DEFAULT_CAP, help="exhaustive horizon cap")
    common.add_argument("--split-depth", type=int, default=DEFAULT_SPLIT_DEPTH)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--exact", action="store_true", help="exact rational arithmetic")
    common.add_argument("-v", "--verbose", action="store_true")

    def bounds(p, alpha=False, vmax_only=False):
        if not vmax_only:
            p.add_argument("--vmin")
        p.add_argument("--vmax")
        if alpha:
            p.add_argument("--alpha")
        p.add_argument("--x0")

    parser = _Parser(prog="tradepos", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"tradepos {__version__}")
    parser.add_argument("--replay", help="re-run the command recorded in a JSON result")
    parser.add_argument("-o", "--output", help="output file for --replay")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("thresholds", parents=[common], help="critical gains for given bounds")
    bounds(p)

    p = sub.add_parser("simulate", parents=[common], help="trajectory along one path")
    bounds(p, alpha=True)
    p.add_argument("--path", help="comma separated returns v0,v1,...")
    p.add_argument("--distinguished", type=int, metavar="N")
    p.add_argument("--extreme-mask", metavar="HEX")
    p.add_argument("--horizon", type=int)
    p.add_argument("--fail-on-bankruptcy", action="store_true")

    p = sub.add_parser("verify", parents=[common], help="positivity over extreme paths")
    bounds(p, alpha=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--mode", choices=["exhaustive", "sampled"], default="exhaustive")
    p.add_argument("--count", type=int, default=200_000)
    p.add_argument("--stop-at-first", action="store_true")
    p.add_argument("--observation", action="store_true",
                   help="also test whether positivity along v* implied positivity")
    p.add_argument("--fail-on-failure", action="store_true")

    p = sub.add_parser("gap-scan", parents=[common], help="verify across the gap interval")
    bounds(p, alpha=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--mode", choices=["exhaustive", "sampled"], default="exhaustive")
    p.add_argument("--count", type=int, default=200_000)
    p.add_argument("--figure2", action="store_true",
                   help="emit every extreme trajectory at --alpha as (mask, k, X)")
    p.add_argument("--fail-on-failure", action="store_true")

    p = sub.add_parser("alphamax", parents=[common], help="bisect the finite-horizon threshold")
    bounds(p)
    p.add_argument("--horizon", required=True, help="N or an inclusive range LO:HI")
    p.add_argument("--tol", type=float, default=1e-6)

    p = sub.add_parser("surface", parents=[common], help="alpha_minus/alpha_plus over a v_min grid")
    bounds(p, vmax_only=True)
    p.add_argument("--vmin-grid", required=True, metavar="START:STOP:STEP")

    p = sub.add_parser("closed-form", parents=[common], help="X(v*, k) from the closed form")
    bounds(p, alpha=True)
    p.add_argument("--kmax", type=int, default=20)

    p = sub.add_parser("multi", parents=[common], help="multi-asset recursion")
    p.add_argument("--horizon", type=int, default=20)
    p.add_argument("--mode", choices=["exhaustive", "sampled"])
    p.add_argument("--count", type=int, default=10_000)
    return parser


def _glue(argv: List[str]) -> List[str]:
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _GLUE and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


_FILE_KEYS = {"alpha": "alpha", "v_min": "vmin", "v_max": "vmax", "x0": "x0"}


def _resolve(args):
    """Fill unset flags from --params and defaults."""
    if args.params and args.command != "multi":
        doc = _load_json(args.params)
        for key, dest in _FILE_KEYS.items():
            if key in doc and getattr(args, dest, None) is None:
                setattr(args, dest, doc[key])
    if hasattr(args, "x0") and args.x0 is None:
        args.x0 = 1
    for dest in _FILE_KEYS.values():
        if getattr(args, dest, None) is not None:
            setattr(args, dest, _num(getattr(args, dest), args.exact))
    if args.format is None:
        args.format = COMMANDS[args.command][1]
    if args.command in ("thresholds", "surface") and args.vmax is None:
        raise CliError("--vmax is required")
    if args.command == "thresholds" and args.vmin is None:
        raise CliError("--vmin is required")


SAMPLING_POLICY = ("v*, all-v_min and all-v_max examined first, then count uniform extreme "
                   "paths; block i of 2**14 draws uses SeedSequence(seed).spawn(...)[i]")


def _metadata(args, argv) -> dict:
    skip = {"output", "replay", "verbose", "params"}
    params = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    if params.get("mode") == "sampled":
        params["sampling"] = SAMPLING_POLICY
    return {
        "tool": "tradepos",
        "version": __version__,
        "command": args.command,
        "argv": argv,
        "parameters": params,
        "seed": args.seed,
        "numeric_mode": "exact" if args.exact else "float",
    }


def _strip_output(argv: List[str]) -> List[str]:
    out, skip = [], False
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok in ("-o", "--output"):
            skip = True
            continue
        if tok.startswith("--output="):
            continue
        out.append(tok)
    return out


def run(argv: List[str]) -> int:
    argv = _glue(list(argv))
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.replay:
        doc = _load_json(args.replay)
        try:
            recorded = list(doc["metadata"]["argv"])
        except (KeyError, TypeError) as exc:
            raise CliError(f"{args.replay} carries no replayable metadata") from exc
        extra = ["--output", args.output] if getattr(args, "output", None) else []
        return run(recorded + extra)
    if not args.command:
        raise CliError("a subcommand is required (see --help)")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    _resolve(args)
    out = Output(args.format, _metadata(args, _strip_output(argv)))
    return COMMANDS[args.command][0](args, out)


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        return run(argv)
    except HorizonCapError as exc:
        print(f"tradepos: refused: {exc}", file=sys.stderr)
        return EXIT_CAP
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    except (AdmissibilityError, ValueError) as exc:
        print(f"tradepos: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
