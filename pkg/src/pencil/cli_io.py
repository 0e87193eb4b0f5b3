"""Command line front end: tuple loading, JSON/CSV serialization and run manifests.

Every JSON document written here is validated against the schema files shipped in
``pencil/schemas``. Exit codes: 0 success, 1 verification failure, 2 input error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .appendix_lab import SUITES, run_suite
from .bc_matrices import ContextFactory, det_m
from .config import DEFAULT
from .core_types import (
    AngleConfig,
    BoundaryCondition,
    EllipticTuple,
    make_elliptic_tuple,
    tuple_from_standard_root,
)
from .ellipticity import classify
from .errors import InputError, Mismatch, PencilError
from .exponent_solver import SearchRegion, find_roots, verify_bounds
from .matfun import numerical_range_boundary, spectrum
from .ode_oracle import ShootingOracle, cross_check
from .presets import PRESETS, branch_family

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
BC_CHOICES = [b.value for b in BoundaryCondition]


# ---------------------------------------------------------------- schemas


def load_schema(name: str) -> dict:
    text = resources.files("pencil").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate(doc, name: str):
    jsonschema.validate(doc, load_schema(name))
    return doc


# ---------------------------------------------------------------- serialization


def _plain(obj):
    """Recursively convert numpy scalars/arrays and complex numbers to JSON types."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"re": _plain(obj.real.tolist()), "im": _plain(obj.imag.tolist())}
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _plain(obj.real), "im": _plain(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(obj, BoundaryCondition):
        return obj.value
    return obj


def dumps(doc) -> str:
    return json.dumps(_plain(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


def fmt(x: float) -> str:
    """17 significant digits: enough to round-trip any double."""
    return format(float(x), ".17g")


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def read_csv(path: Path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@dataclass
class RunManifest:
    command: str
    tuple_source: Optional[str] = None
    parameters: dict = field(default_factory=dict)
    tool_version: str = __version__
    seed: Optional[int] = None
    started: str = ""
    finished: str = ""
    outputs: list = field(default_factory=list)

    def start(self):
        self.started = _now()
        return self

    def finish(self):
        self.finished = _now()
        return self

    def to_dict(self) -> dict:
        return validate(
            _plain(
                {
                    "command": self.command,
                    "tuple_source": self.tuple_source,
                    "parameters": self.parameters,
                    "tool_version": self.tool_version,
                    "seed": self.seed,
                    "started": self.started,
                    "finished": self.finished,
                    "outputs": list(self.outputs),
                }
            ),
            "manifest",
        )

    def write(self, path: Path) -> None:
        Path(path).write_text(dumps(self.to_dict()))


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


# ---------------------------------------------------------------- input


def tuple_from_json(doc: dict) -> EllipticTuple:
    try:
        validate(doc, "tuple")
    except jsonschema.ValidationError as exc:
        raise InputError(f"tuple file does not match the tuple schema: {exc.message}") from None
    if "standard_root" in doc:
        return tuple_from_standard_root(doc["standard_root"]["S"], doc["standard_root"]["D"])
    t = make_elliptic_tuple(doc["A11"], doc["A12"], doc["A22"])
    if t.ell != doc["ell"]:
        from .errors import DimensionMismatch

        raise DimensionMismatch(f"ell = {doc['ell']} but the matrices are {t.ell} x {t.ell}")
    return t


def load_tuple(path) -> EllipticTuple:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None
    return tuple_from_json(doc)


def tuple_to_json(t: EllipticTuple) -> dict:
    return {"ell": t.ell, "A11": t.a11.tolist(), "A12": t.a12.tolist(), "A22": t.a22.tolist()}


def _threads() -> Optional[int]:
    raw = os.environ.get("PENCIL_THREADS")
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"PENCIL_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise InputError(f"PENCIL_THREADS must be a positive integer, got {raw!r}")
    return n


# ---------------------------------------------------------------- commands


def _emit(doc, schema: str, args, manifest: RunManifest):
    doc = validate(_plain(doc), schema)
    text = dumps(doc)
    if getattr(args, "out", None):
        out = Path(args.out)
        out.write_text(text)
        manifest.outputs.append(str(out))
        manifest.finish().write(manifest_path(out))
    else:
        sys.stdout.write(text)
    return doc


def _region(args) -> SearchRegion:
    return SearchRegion(args.re_min, args.re_max, args.im_min, args.im_max)


def cmd_classify(args, manifest):
    t = load_tuple(args.tuple)
    _emit(classify(t).to_dict(), "classify", args, manifest)
    return EXIT_OK


def cmd_root(args, manifest):
    t = load_tuple(args.tuple)
    root = ContextFactory(t).root
    doc = {
        "V": root.v,
        "C": root.c,
        "D": root.d,
        "S": root.s,
        "residual": root.residual,
        "spectrum": sorted(spectrum(root.v).tolist(), key=lambda z: (z.real, z.imag)),
        "method": root.method,
        "cond_x": root.cond_x,
    }
    _emit(doc, "root", args, manifest)
    return EXIT_OK


def cmd_det(args, manifest):
    t = load_tuple(args.tuple)
    ctx = ContextFactory(t)(args.alpha, args.bc)
    lam = complex(args.re, args.im)
    logabs, arg = det_m(ctx, lam)
    doc = {"bc": args.bc, "alpha": args.alpha, "lambda": lam, "log_abs_det": logabs, "arg_det": arg}
    _emit(doc, "det", args, manifest)
    return EXIT_OK


def cmd_exponents(args, manifest):
    t = load_tuple(args.tuple)
    region = _region(args)
    roots = find_roots(ContextFactory(t), region, args.alpha, args.bc)
    doc = {
        "bc": args.bc,
        "alpha": args.alpha,
        "region": [region.re_min, region.re_max, region.im_min, region.im_max],
        "count": int(sum(r.multiplicity for r in roots)),
        "roots": [r.to_dict() for r in roots],
    }
    _emit(doc, "exponents", args, manifest)
    return EXIT_OK


def cmd_verify(args, manifest):
    t = load_tuple(args.tuple)
    report = verify_bounds(ContextFactory(t), args.bc, args.alpha, _region(args))
    _emit(report.to_dict(), "verify", args, manifest)
    return EXIT_OK if report.ok else EXIT_VERIFY


def cmd_oracle(args, manifest):
    t = load_tuple(args.tuple)
    lam = complex(args.re, args.im)
    d = ShootingOracle(t, args.alpha, args.bc).det(lam)
    doc = {"bc": args.bc, "alpha": args.alpha, "lambda": lam, "det": d, "abs_det": abs(d)}
    _emit(doc, "oracle", args, manifest)
    return EXIT_OK


def cmd_crosscheck(args, manifest):
    t = load_tuple(args.tuple)
    region = _region(args)
    roots = find_roots(ContextFactory(t), region, args.alpha, args.bc)
    box = (region.re_min, region.re_max, region.im_min, region.im_max)
    report = cross_check(t, args.bc, args.alpha, roots, box, raise_on_mismatch=False)
    doc = {"bc": args.bc, "alpha": args.alpha, "region": list(box), **report.to_dict()}
    _emit(doc, "crosscheck", args, manifest)
    return EXIT_OK if report.ok else EXIT_VERIFY


def cmd_lab(args, manifest):
    manifest.seed = args.seed
    res = run_suite(args.suite, args.seed, args.count)
    _emit(res.to_dict(), "lab", args, manifest)
    return EXIT_OK if res.failed == 0 else EXIT_VERIFY


def _branch_rows(branches, start_id: int = 0):
    for i, b in enumerate(branches):
        for (a, lam), res in zip(b.points, b.residuals):
            yield start_id + i, float(a), float(lam.real), float(lam.imag), float(res)


CSV_HEADER = ["branch_id", "alpha", "re_lambda", "im_lambda", "residual"]


def cmd_trace(args, manifest):
    t = load_tuple(args.tuple)
    fam = branch_family(
        t, args.bc, args.alpha_start, args.alpha_end, steps=args.steps, re_max=args.re_max, im_max=args.im_max
    )
    out = Path(args.out)
    write_csv(out, CSV_HEADER, _branch_rows(fam.branches))
    manifest.outputs.append(str(out))
    doc = {
        "bc": args.bc,
        "alpha_start": args.alpha_start,
        "alpha_end": args.alpha_end,
        "steps": args.steps,
        "csv": str(out),
        "branches": [{"branch_id": i, "status": b.status, "points": len(b.points)} for i, b in enumerate(fam.branches)],
    }
    doc = validate(_plain(doc), "trace")
    sys.stdout.write(dumps(doc))
    manifest.finish().write(manifest_path(out))
    return EXIT_OK


def run_figure(preset: str, out_dir, steps: int = 256, checkpoint: int = 16) -> dict:
    """Trace every boundary condition of a built-in preset; one CSV per branch."""
    if preset not in PRESETS:
        raise InputError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    p = PRESETS[preset]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t = p.tuple_factory()
    factory = ContextFactory(t)
    families = []
    files = []
    for bc in p.bcs:
        fam = branch_family(
            t, bc, p.alpha_start, p.alpha_end, steps=steps, re_max=p.re_max, im_max=p.im_max,
            checkpoint=checkpoint, factory=factory,
        )
        entries = []
        for i, b in enumerate(fam.branches):
            path = out_dir / f"{preset}_{bc.value}_branch{i:03d}.csv"
            write_csv(path, CSV_HEADER, _branch_rows([b], i))
            files.append(str(path))
            entries.append({"branch_id": i, "status": b.status, "points": len(b.points), "csv": str(path)})
        families.append({"bc": bc.value, "alpha_start": p.alpha_start, "alpha_end": p.alpha_end, "branches": entries})
    (out_dir / f"{preset}_tuple.json").write_text(dumps(tuple_to_json(t)))
    files.append(str(out_dir / f"{preset}_tuple.json"))
    doc = validate(_plain({"preset": preset, "families": families}), "figure")
    return {"summary": doc, "files": files}


def cmd_figure(args, manifest):
    res = run_figure(args.preset, args.out_dir, args.steps, args.checkpoint)
    out_dir = Path(args.out_dir)
    summary = out_dir / f"{args.preset}_summary.json"
    summary.write_text(dumps(res["summary"]))
    manifest.outputs.extend(res["files"] + [str(summary)])
    manifest.finish().write(out_dir / f"{args.preset}_manifest.json")
    sys.stdout.write(dumps(res["summary"]))
    return EXIT_OK


def cmd_numrange(args, manifest):
    t = load_tuple(args.tuple)
    z = ContextFactory(t)(args.alpha, "dirichlet").z_alpha
    w = numerical_range_boundary(z, args.n)
    out = Path(args.out)
    write_csv(out, ["re", "im"], ((float(p.real), float(p.imag)) for p in w.points))
    manifest.outputs.append(str(out))
    manifest.finish().write(manifest_path(out))
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _tuple_arg(p):
    p.add_argument("tuple", help="tuple JSON file")


def _bc_alpha(p, alpha=True):
    p.add_argument("--bc", required=True, choices=BC_CHOICES)
    if alpha:
        p.add_argument("--alpha", required=True, type=float)


def _region_args(p, re_min=0.02, re_max=4.0, im_min=-5.0, im_max=5.0):
    p.add_argument("--re-min", type=float, default=re_min)
    p.add_argument("--re-max", type=float, default=re_max)
    p.add_argument("--im-min", type=float, default=im_min)
    p.add_argument("--im-max", type=float, default=im_max)


def _out(p, required=False):
    p.add_argument("--out", required=required, help="output file (a manifest is written next to it)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pencil", description="Singular exponents of elliptic systems in plane angles.")
    ap.add_argument("--version", action="version", version=f"pencil {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="ellipticity ladder report")
    _tuple_arg(p), _out(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("root", help="standard root V = C + iD and S = C D^-1")
    _tuple_arg(p), _out(p)
    p.set_defaults(func=cmd_root)

    p = sub.add_parser("det", help="log|det M| and arg det M at one exponent")
    _tuple_arg(p), _bc_alpha(p), _out(p)
    p.add_argument("--re", required=True, type=float)
    p.add_argument("--im", type=float, default=0.0)
    p.set_defaults(func=cmd_det)

    p = sub.add_parser("exponents", help="all exponents in a rectangle")
    _tuple_arg(p), _bc_alpha(p), _region_args(p), _out(p)
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser("trace", help="branches lambda(alpha) as CSV")
    _tuple_arg(p)
    p.add_argument("--bc", required=True, choices=BC_CHOICES)
    p.add_argument("--alpha-start", required=True, type=float)
    p.add_argument("--alpha-end", required=True, type=float)
    p.add_argument("--steps", type=int, default=256)
    p.add_argument("--re-max", type=float, default=4.0)
    p.add_argument("--im-max", type=float, default=3.0)
    p.add_argument("--out", default="branches.csv")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("verify", help="check the exponent bounds that apply to (bc, alpha)")
    _tuple_arg(p), _bc_alpha(p), _region_args(p, -3.0, 3.0, -10.0, 10.0), _out(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="shooting boundary determinant at one exponent")
    _tuple_arg(p), _bc_alpha(p), _out(p)
    p.add_argument("--re", required=True, type=float)
    p.add_argument("--im", type=float, default=0.0)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("crosscheck", help="algebraic exponents against the shooting oracle")
    _tuple_arg(p), _bc_alpha(p), _region_args(p, 0.05, 3.5, -2.0, 2.0), _out(p)
    p.set_defaults(func=cmd_crosscheck)

    p = sub.add_parser("lab", help="randomized matrix-inequality suites")
    p.add_argument("--suite", required=True, choices=sorted(SUITES))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=100)
    _out(p)
    p.set_defaults(func=cmd_lab)

    p = sub.add_parser("figure", help="branch families of a built-in preset")
    p.add_argument("preset", choices=sorted(PRESETS))
    p.add_argument("--out-dir", default=".")
    p.add_argument("--steps", type=int, default=256)
    p.add_argument("--checkpoint", type=int, default=16)
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("numrange", help="boundary samples of the numerical range of Z_alpha as CSV")
    _tuple_arg(p)
    p.add_argument("--alpha", required=True, type=float)
    p.add_argument("--n", type=int, default=DEFAULT.n_range)
    _out(p, required=True)
    p.set_defaults(func=cmd_numrange)
    return ap


def _error(exc: Exception, code: int) -> int:
    doc = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, Mismatch):
        doc["offending"] = [[z.real, z.imag] for z in exc.offending]
    sys.stderr.write(dumps(validate(_plain(doc), "error")))
    return code


def _parameters(args) -> dict:
    skip = {"func", "command", "tuple"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    manifest = RunManifest(args.command, getattr(args, "tuple", None), _parameters(args)).start()
    try:
        if getattr(args, "alpha", None) is not None:
            AngleConfig.make(args.alpha)
        with threadpool_limits(limits=_threads()):
            return args.func(args, manifest)
    except InputError as exc:
        return _error(exc, EXIT_INPUT)
    except PencilError as exc:
        return _error(exc, exc.exit_code)
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        return _error(exc, EXIT_NUMERIC)
    except (ValueError, KeyError, OSError) as exc:
        return _error(exc, EXIT_INPUT)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
