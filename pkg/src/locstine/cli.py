"""Command line interface.

Exit codes: 0 when every check passes, 1 on a mathematical failure, 2 on
I/O or malformed input.  ``rn`` uses 1 for a failed domination test and 2
for an inconsistent certificate.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import serialize
from .errors import (
    ConstructionError,
    InconsistencyError,
    LocstineError,
    NotAdmissibleError,
    OrderError,
    PreconditionError,
)
from .multilinear import (
    FAIL,
    PASS,
    MapCheckReport,
    MultilinearMap,
    check_local_contractivity,
    check_local_positivity,
    is_invariant,
    is_symmetric,
)
from .stinespring import StinespringTriple, dilate, gram_matrix, verify_dilation
from .radon_nikodym import domination_report, rn_derivative
from .workbench import KINDS, InstanceSpec, build_instance

EXIT_OK, EXIT_MATH, EXIT_IO = 0, 1, 2


class _IOFailure(Exception):
    pass


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _read(path) -> dict:
    try:
        return serialize.load(path)
    except (OSError, ValueError) as exc:
        raise _IOFailure(f"cannot read {path}: {exc}") from exc


def _load_map(path, key="map") -> MultilinearMap:
    obj = _read(path)
    if "values" not in obj:
        obj = obj.get(key) or obj.get("map")
        if obj is None:
            raise _IOFailure(f"{path} holds no map")
    try:
        return MultilinearMap.from_json(obj)
    except (KeyError, TypeError) as exc:
        raise _IOFailure(f"malformed map in {path}: {exc}") from exc


def _load_triple(path) -> StinespringTriple:
    obj = _read(path)
    if "reps" not in obj:
        obj = obj.get("triple") or obj.get("ground_truth")
        if obj is None:
            raise _IOFailure(f"{path} holds no triple")
    try:
        return StinespringTriple.from_json(obj)
    except (KeyError, TypeError) as exc:
        raise _IOFailure(f"malformed triple in {path}: {exc}") from exc


def _emit(obj, out):
    text = serialize.dumps(obj)
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        try:
            Path(out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise _IOFailure(f"cannot write {out}: {exc}") from exc


def _report(name, ok, residual, witness=None, **params) -> MapCheckReport:
    if ok:
        return MapCheckReport(name, PASS, residual, None, params)
    return MapCheckReport(name, FAIL, residual, witness or {}, params)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_gen(args) -> int:
    spec = InstanceSpec(seed=args.seed, k=args.k, blocks=args.blocks, flag=args.flag,
                        alpha_of=args.alpha_of, kind=args.kind, copies=args.copies,
                        isometric=args.isometric)
    _emit(build_instance(spec), args.out)
    return EXIT_OK


def map_checks(phi, n_max=2, trials=50, tol=1e-9, seed=0) -> list[MapCheckReport]:
    scale = max(1.0, phi.max_norm())
    reports = [is_symmetric(phi, tol * scale), is_invariant(phi, tol * scale)]
    gd = gram_matrix(phi, tol=tol, check=False)
    reports.append(_report("gram_psd", gd.psd, max(0.0, -gd.min_eigenvalue),
                           {"min_eigenvalue": gd.min_eigenvalue}, scale=gd.scale))
    reports.append(check_local_positivity(phi, n_max=n_max, trials=trials, seed=seed, tol=tol))
    reports.append(check_local_contractivity(phi, n_max=n_max, trials=trials, seed=seed, tol=tol))
    return reports


def _print_lines(reports):
    for rep in reports:
        print(rep.line(), file=sys.stderr)


def cmd_check(args) -> int:
    phi = _load_map(args.instance)
    reports = map_checks(phi, args.nmax, args.trials, args.tol, args.seed)
    _print_lines(reports)
    _emit({"instance": str(args.instance), "checks": [r.to_json() for r in reports]}, args.out)
    return EXIT_OK if all(r.ok for r in reports) else EXIT_MATH


def cmd_dilate(args) -> int:
    phi = _load_map(args.instance)
    try:
        triple = dilate(phi, tol=args.tol, tol_rank=args.tol_rank)
    except (NotAdmissibleError, ConstructionError) as exc:
        print(f"CHECK dilate fail {getattr(exc, 'residual', None) or 0.0:.3e}", file=sys.stderr)
        print(f"witness: {exc}", file=sys.stderr)
        return EXIT_MATH
    print(f"CHECK dilate pass {triple.residuals['reconstruction']:.3e}", file=sys.stderr)
    print(f"dilation space dim {triple.r}, flag {list(triple.space.flag)}", file=sys.stderr)
    _emit(triple.to_json(), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    phi = _load_map(args.phi)
    triple = _load_triple(args.triple)
    residual = verify_dilation(phi, triple)
    ok = residual <= args.tol * max(1.0, phi.max_norm())
    rep = _report("verify_dilation", ok, residual, {"residual": residual})
    _print_lines([rep])
    _emit(rep.to_json(), args.out)
    return EXIT_OK if ok else EXIT_MATH


def cmd_rn(args) -> int:
    phi = _load_map(args.phi, "map")
    psi = _load_map(args.psi, "psi")
    try:
        cert = rn_derivative(phi, psi, tol=args.tol)
    except OrderError:
        rep = domination_report(phi, psi)
        print(f"CHECK dominates fail {max(-rep.min_eigenvalue, rep.symmetric, rep.invariant):.3e}",
              file=sys.stderr)
        return EXIT_MATH
    except (InconsistencyError, NotAdmissibleError, ConstructionError) as exc:
        print(f"CHECK rn_derivative inconsistent {getattr(exc, 'residual', None) or 0.0:.3e}", file=sys.stderr)
        print(f"witness: {exc}", file=sys.stderr)
        return EXIT_IO
    worst = max(cert.residuals[k] for k in ("reconstruction", "commutant", "contraction"))
    print(f"CHECK rn_derivative pass {worst:.3e}", file=sys.stderr)
    _emit(cert.to_json(), args.out)
    return EXIT_OK


def _summarise(path: Path, obj) -> list[tuple[str, str, float]]:
    rows = []
    name = path.name
    if isinstance(obj, dict) and "checks" in obj:
        for c in obj["checks"]:
            rows.append((f"{name}:{c['property']}", c["verdict"], float(c["residual"])))
    elif isinstance(obj, dict) and "property" in obj:
        rows.append((f"{name}:{obj['property']}", obj["verdict"], float(obj["residual"])))
    elif isinstance(obj, dict) and "Delta" in obj:
        res = obj["residuals"]
        rows.append((f"{name}:rn_derivative", PASS, max(float(v) for v in res.values())))
    elif isinstance(obj, dict) and "reps" in obj:
        res = obj.get("residuals", {})
        rows.append((f"{name}:triple", PASS, float(res.get("reconstruction", 0.0))))
    elif isinstance(obj, dict) and ("map" in obj or "values" in obj):
        phi = MultilinearMap.from_json(obj.get("map", obj))
        for rep in map_checks(phi, trials=10):
            rows.append((f"{name}:{rep.property}", rep.verdict, rep.residual))
    return rows


def cmd_report(args) -> int:
    root = Path(args.dir)
    if not root.is_dir():
        raise _IOFailure(f"{root} is not a directory")
    rows = []
    for path in sorted(root.glob("*.json")):
        rows.extend(_summarise(path, _read(path)))
    if args.format == "json":
        _emit({"checks": [{"name": n, "verdict": v, "residual": r} for n, v, r in rows]}, args.out)
    else:
        text = "".join(f"CHECK {n} {v} {r:.3e}\n" for n, v, r in rows)
        if args.out in (None, "-"):
            sys.stdout.write(text)
        else:
            Path(args.out).write_text(text, encoding="utf-8")
    return EXIT_OK if all(v != FAIL for _, v, _ in rows) else EXIT_MATH


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="locstine", description="local Stinespring workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a seeded instance")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--blocks", type=_ints, default=[1, 1])
    g.add_argument("--flag", type=_ints, default=[1, 2])
    g.add_argument("--alpha-of", type=_ints, default=None)
    g.add_argument("--kind", choices=KINDS, default="dilated")
    g.add_argument("--copies", type=int, default=2)
    g.add_argument("--isometric", action="store_true")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("check", help="run the map property checks")
    c.add_argument("instance")
    c.add_argument("--nmax", type=int, default=2)
    c.add_argument("--trials", type=int, default=50)
    c.add_argument("--tol", type=float, default=1e-9)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out")
    c.set_defaults(func=cmd_check)

    d = sub.add_parser("dilate", help="build the minimal dilation")
    d.add_argument("instance")
    d.add_argument("--tol", type=float, default=1e-9)
    d.add_argument("--tol-rank", type=float, default=1e-10)
    d.add_argument("--out")
    d.set_defaults(func=cmd_dilate)

    r = sub.add_parser("rn", help="Radon-Nikodym derivative of psi with respect to phi")
    r.add_argument("--phi", required=True)
    r.add_argument("--psi", required=True)
    r.add_argument("--tol", type=float, default=1e-8)
    r.add_argument("--out")
    r.set_defaults(func=cmd_rn)

    v = sub.add_parser("verify", help="check a triple against a map")
    v.add_argument("--phi", required=True)
    v.add_argument("--triple", required=True)
    v.add_argument("--tol", type=float, default=1e-8)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="summarise the JSON files of a directory")
    p.add_argument("--dir", required=True)
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_IO if exc.code else EXIT_OK
    try:
        return args.func(args)
    except _IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MATH
    except (LocstineError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
