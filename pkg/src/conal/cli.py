"""Command line front end.

Exit codes: 0 success / ordered / member, 1 negative verdict, 2 usage error,
3 runtime or domain failure.
"""

import argparse
import ast
import json
import math
import os
import re
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .cones import ConeSpec, cone_margin
from .consensus import (OscillatorNetwork, contraction_report, phase_lock_detect,
                        phi_ratio, simulate, variational)
from .diffpos import (MapSpec, counterexample_search, diff_positivity_check,
                      monotone_scan_stats)
from .errors import BarrierBreach, ConalError
from .order import order_axiom_probe, spd_order, spd_order_via_geodesic

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- parsing

_NAMES = {"e": math.e, "pi": math.pi}
_FUNCS = {"exp": math.exp, "log": math.log, "sqrt": math.sqrt}
_BINOPS = {ast.Add: lambda a, b: a + b, ast.Sub: lambda a, b: a - b,
           ast.Mult: lambda a, b: a * b, ast.Div: lambda a, b: a / b,
           ast.Pow: lambda a, b: a ** b}


def eval_scalar(text) -> float:
    """Evaluate a numeric literal such as ``1/e`` or ``exp(2)`` without ``eval``."""
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise UsageError(f"unsupported expression {text!r}")

    try:
        return ev(ast.parse(str(text).strip(), mode="eval"))
    except (SyntaxError, ZeroDivisionError, ValueError, OverflowError) as exc:
        raise UsageError(f"bad number {text!r}: {exc}") from None


def _split_args(body):
    parts, depth, cur = [], 0, ""
    for ch in body:
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
            continue
        depth += ch == "("
        depth -= ch == ")"
        cur += ch
    parts.append(cur)
    return [p for p in (x.strip() for x in parts) if p]


def _matrix_from_obj(obj):
    if isinstance(obj, dict) and "matrix" in obj:
        obj = obj["matrix"]
    if isinstance(obj, str):
        return parse_matrix(obj)
    rows = [[eval_scalar(x) if isinstance(x, str) else float(x) for x in row] for row in obj]
    M = np.array(rows, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise UsageError(f"matrix must be square, got shape {M.shape}")
    return M


def parse_matrix(token) -> np.ndarray:
    """Matrix from ``I<n>``, ``diag(...)``, a JSON array, or a JSON file path."""
    if not isinstance(token, str):
        return _matrix_from_obj(token)
    tok = token.strip()
    m = re.fullmatch(r"I(\d+)", tok)
    if m:
        n = int(m.group(1))
        if n < 1:
            raise UsageError("identity dimension must be >= 1")
        return np.eye(n)
    m = re.fullmatch(r"diag\((.*)\)", tok, flags=re.S)
    if m:
        vals = [eval_scalar(x) for x in _split_args(m.group(1))]
        if not vals:
            raise UsageError("diag() needs at least one entry")
        return np.diag(vals)
    if tok.startswith("["):
        try:
            return _matrix_from_obj(json.loads(tok))
        except json.JSONDecodeError as exc:
            raise UsageError(f"malformed matrix literal: {exc}") from None
    path = Path(tok)
    if path.is_file():
        try:
            return _matrix_from_obj(json.loads(path.read_text()))
        except (json.JSONDecodeError, TypeError, ValueError) as exc:
            raise UsageError(f"malformed matrix file {path}: {exc}") from None
    raise UsageError(f"cannot parse matrix {token!r}")


def _cone(args, n):
    if args.cone == "loewner":
        return ConeSpec.loewner(n)
    if args.mu is None:
        raise UsageError("--cone quad requires --mu")
    try:
        return ConeSpec.quadratic(args.mu, n)
    except ConalError as exc:
        raise UsageError(str(exc)) from None


def _load_config(path):
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None


def _dump(obj):
    return json.dumps(obj, indent=2, default=_json_default, allow_nan=False)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not serializable: {type(o)}")


def _finite(x):
    x = float(x)
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else "-inf" if x < 0 else "nan"


def _atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _report(command, config, **body):
    return {"command": command, "version": __version__, "config": config, **body}


def _threads():
    try:
        return max(1, int(os.environ.get("CONAL_THREADS", "0")) or (os.cpu_count() or 1))
    except ValueError:
        raise UsageError("CONAL_THREADS must be an integer") from None


# ---------------------------------------------------------------- commands

def cmd_order(args):
    A, B = parse_matrix(args.a), parse_matrix(args.b)
    if A.shape != B.shape:
        raise UsageError(f"--a is {A.shape}, --b is {B.shape}")
    spec = _cone(args, A.shape[0])
    v = spd_order(spec, A, B)
    body = {"verdict": v.as_dict()}
    if args.geodesic_samples:
        body["geodesic_check"] = spd_order_via_geodesic(spec, A, B,
                                                        args.geodesic_samples).as_dict()
    config = {"cone": spec.describe(), "a": A, "b": B,
              "geodesic_samples": args.geodesic_samples}
    print(_dump(_report("order", config, **body)))
    return EXIT_OK if v.ordered else EXIT_NEGATIVE


def cmd_cone_check(args):
    X = parse_matrix(args.x)
    at = parse_matrix(args.at) if args.at else np.eye(X.shape[0])
    spec = _cone(args, X.shape[0])
    m = cone_margin(spec, X, at=at)
    config = {"cone": spec.describe(), "at": at, "x": X}
    print(_dump(_report("cone-check", config, result=m.as_dict())))
    return EXIT_OK if m.member else EXIT_NEGATIVE


def _map_spec(args, n):
    if args.map == "power":
        if args.r is None:
            raise UsageError("--map power requires --r")
        return MapSpec.power(args.r)
    if args.map == "inversion":
        return MapSpec.inversion()
    A = parse_matrix(args.A) if args.A else None
    if A is None or A.shape != (n, n):
        raise UsageError("--map congruence requires --A with an n x n matrix")
    return MapSpec.congruence(A)


def cmd_monotone(args):
    spec = _cone(args, args.n)
    F = _map_spec(args, args.n)
    viol, worst = monotone_scan_stats(F, spec, args.samples, args.seed, args.threshold)
    pos = diff_positivity_check(F, spec, args.points, args.dirs, args.seed)
    config = {"cone": spec.describe(), "map": F.describe(), "n": args.n,
              "pairs": args.samples, "points": args.points, "dirs": args.dirs,
              "seed": args.seed, "threshold": args.threshold}
    out = {
        "violations": len(viol),
        "min_scaled_margin": _finite(worst),
        "witnesses": [v.as_dict() for v in viol[:args.keep]],
        "differential": {"min_post_margin": _finite(pos.min_post_margin),
                         "samples": pos.samples},
    }
    print(_dump(_report("monotone", config, **out)))
    return EXIT_OK if not viol else EXIT_NEGATIVE


LH_DEFAULTS = {
    "r_grid": [0.25, 0.5, 0.75, 1.0, 2.0],
    "mu_grid": [0.5, 1.0, 1.5],
    "n_list": [2],
    "include_loewner": False,
    "pairs": 500,
    "budget": 10000,
    "threshold": 1e-7,
    "keep_witnesses": 3,
    "seed": 0,
}


def _lh_cells(cfg):
    cells = []
    for n in cfg["n_list"]:
        cones = [("quadratic", float(mu)) for mu in cfg["mu_grid"] if 0 < mu < n]
        if cfg["include_loewner"]:
            cones.append(("loewner", None))
        for kind, mu in cones:
            for r in cfg["r_grid"]:
                cells.append({"n": int(n), "cone": kind, "mu": mu, "r": float(r)})
    return cells


def _lh_run_cell(index, cell, cfg, out_dir):
    ss = np.random.SeedSequence([int(cfg["seed"]), index])
    scan_seed, search_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
    n = cell["n"]
    spec = ConeSpec.loewner(n) if cell["cone"] == "loewner" else ConeSpec.quadratic(cell["mu"], n)
    F = MapSpec.power(cell["r"])
    viol, worst = monotone_scan_stats(F, spec, cfg["pairs"], scan_seed, cfg["threshold"])
    result = dict(cell, violations=len(viol), min_margin=_finite(worst),
                  witnesses=[v.as_dict() for v in viol[:cfg["keep_witnesses"]]],
                  counterexample=None)
    if cell["r"] > 1 and n >= 2:
        ce = counterexample_search(cell["r"], spec, cfg["budget"], search_seed, cfg["threshold"])
        result["counterexample"] = ce.as_dict() if ce is not None else None
    if out_dir is not None:
        _atomic_write(out_dir / "cells" / f"cell_{index:04d}.json", _dump(result))
    return result


def cmd_loewner_heinz(args):
    cfg = dict(LH_DEFAULTS)
    cfg.update(_load_config(args.config))
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.samples is not None:
        cfg["pairs"] = args.samples
    unknown = set(cfg) - set(LH_DEFAULTS)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    out_dir = Path(args.out) if args.out else None
    cells = _lh_cells(cfg)
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(lambda ic: _lh_run_cell(ic[0], ic[1], cfg, out_dir),
                                enumerate(cells)))
    header = "n,cone,mu,r,violations,min_margin,counterexample_found\n"
    rows = "".join(
        f"{c['n']},{c['cone']},{'' if c['mu'] is None else format(c['mu'], '.17g')},"
        f"{c['r']:.17g},{c['violations']},"
        f"{c['min_margin'] if isinstance(c['min_margin'], str) else format(c['min_margin'], '.17g')},"
        f"{int(c['counterexample'] is not None)}\n"
        for c in results)
    report = _report("loewner-heinz", cfg, cells=results)
    text = _dump(report)
    if out_dir is not None:
        _atomic_write(out_dir / "table.csv", header + rows)
        _atomic_write(out_dir / "report.json", text)
    print(header + rows, end="")
    return EXIT_OK


CONSENSUS_DEFAULTS = {
    "N": 10,
    "chords": [[0, 5], [2, 7]],
    "edges": None,
    "bidirectional": True,
    "coupling": "barrier-tan",
    "gain": 1.0,
    "omega": None,
    "omega_uniform": [-0.2, 0.2],
    "theta0": None,
    "theta0_spread": 1.0,
    "T": 200.0,
    "dt": 0.01,
    "tau": 1.0,
    "phi_vectors": 20,
    "lock_window": None,
    "lock_tol": 1e-6,
    "sign": 1,
    "seed": 0,
}


def _build_network(cfg, rng):
    N = int(cfg["N"])
    omega = (np.asarray(cfg["omega"], dtype=float) if cfg["omega"] is not None
             else rng.uniform(*cfg["omega_uniform"], N))
    if omega.size != N:
        raise UsageError(f"omega has {omega.size} entries, N={N}")
    theta0 = (np.asarray(cfg["theta0"], dtype=float) if cfg["theta0"] is not None
              else rng.uniform(-0.5, 0.5, N) * cfg["theta0_spread"])
    if float(cfg["gain"]) == 0.0:
        net = OscillatorNetwork(omega, np.zeros((0, 2), int), 1.0, (), cfg["sign"],
                                require_connected=False)
    elif cfg["edges"] is not None:
        edges = [tuple(e) for e in cfg["edges"]]
        if cfg["bidirectional"]:
            edges += [(i, k) for k, i in edges if (i, k) not in edges]
        net = OscillatorNetwork(omega, edges, cfg["gain"], cfg["coupling"], cfg["sign"])
    else:
        net = OscillatorNetwork.ring(omega, cfg["chords"], cfg["gain"], cfg["coupling"],
                                     cfg["bidirectional"], cfg["sign"])
    return net, theta0


def cmd_consensus(args):
    cfg = dict(CONSENSUS_DEFAULTS)
    cfg.update(_load_config(args.config))
    if args.seed is not None:
        cfg["seed"] = args.seed
    unknown = set(cfg) - set(CONSENSUS_DEFAULTS)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    rng = np.random.default_rng(cfg["seed"])
    try:
        net, theta0 = _build_network(cfg, rng)
    except (ValueError, ConalError) as exc:
        raise UsageError(str(exc)) from None
    out_dir = Path(args.out) if args.out else None
    resolved = dict(cfg, network=net.describe(), theta0=theta0)
    try:
        traj = simulate(net, theta0, cfg["T"], cfg["dt"])
    except BarrierBreach as exc:
        report = _report("consensus", resolved, error=exc.to_dict())
        if out_dir is not None:
            _atomic_write(out_dir / "diagnostics.json", _dump(report))
        print(_dump(report))
        return EXIT_RUNTIME
    flow = variational(net, traj)
    lock = phase_lock_detect(traj, cfg["lock_window"], cfg["lock_tol"])
    contraction = contraction_report(flow, cfg["tau"]) if traj.horizon >= cfg["tau"] else None
    half = len(flow.times) // 2
    phis = []
    for _ in range(int(cfg["phi_vectors"])):
        series = phi_ratio(flow, rng.uniform(0.0, 1.0, net.N))
        tail = np.diff(series[half:])
        phis.append({"initial": float(series[0]), "final": float(series[-1]),
                     "max_increase_trailing_half": float(tail.max()) if tail.size else 0.0})
    report = _report(
        "consensus", resolved,
        max_edge_gap=traj.max_gap,
        lock=lock.as_dict(),
        contraction=None if contraction is None else contraction.as_dict(),
        invariant_error=flow.invariant_error,
        psi_min_entry=float(flow.Psi.min()),
        phi=phis,
    )
    text = _dump(report)
    if out_dir is not None:
        _atomic_write(out_dir / "trajectory.csv", traj.to_csv())
        _atomic_write(out_dir / "diagnostics.json", text)
    print(text)
    return EXIT_OK


def cmd_probe_axioms(args):
    spec = _cone(args, args.n)
    rep = order_axiom_probe(spec, args.n, args.samples, args.seed)
    config = {"cone": spec.describe(), "n": args.n, "trials": args.samples, "seed": args.seed}
    print(_dump(_report("probe-axioms", config, report=rep.as_dict())))
    failures = rep.reflexive_failures + rep.transitive_failures + rep.antisymmetry_failures
    return EXIT_OK if failures == 0 else EXIT_NEGATIVE


# ---------------------------------------------------------------- entry point

def build_parser():
    p = argparse.ArgumentParser(prog="conal", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"conal {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def cone_flags(sp, need_n=False):
        sp.add_argument("--cone", choices=("loewner", "quad"), default="loewner")
        sp.add_argument("--mu", type=float)
        if need_n:
            sp.add_argument("--n", type=int, default=2)

    sp = sub.add_parser("order", help="decide Sigma_a <= Sigma_b")
    cone_flags(sp)
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    sp.add_argument("--geodesic-samples", type=int, default=0)
    sp.set_defaults(func=cmd_order)

    sp = sub.add_parser("cone-check", help="cone membership of a tangent vector")
    cone_flags(sp)
    sp.add_argument("--x", required=True)
    sp.add_argument("--at")
    sp.set_defaults(func=cmd_cone_check)

    sp = sub.add_parser("monotone", help="monotonicity scan of a map")
    cone_flags(sp, need_n=True)
    sp.add_argument("--map", choices=("power", "inversion", "congruence"), default="power")
    sp.add_argument("--r", type=float)
    sp.add_argument("--A")
    sp.add_argument("--samples", type=int, default=500)
    sp.add_argument("--points", type=int, default=50)
    sp.add_argument("--dirs", type=int, default=10)
    sp.add_argument("--threshold", type=float, default=1e-7)
    sp.add_argument("--keep", type=int, default=3)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_monotone)

    sp = sub.add_parser("loewner-heinz", help="power-map monotonicity sweep")
    sp.add_argument("--config")
    sp.add_argument("--out")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--samples", type=int)
    sp.set_defaults(func=cmd_loewner_heinz)

    sp = sub.add_parser("consensus", help="oscillator network run and diagnostics")
    sp.add_argument("--config")
    sp.add_argument("--out")
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_consensus)

    sp = sub.add_parser("probe-axioms", help="partial order axiom probe")
    cone_flags(sp, need_n=True)
    sp.add_argument("--samples", type=int, default=500)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_probe_axioms)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"conal {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConalError as exc:
        print(f"conal {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE if args.command in ("order", "cone-check") else EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
