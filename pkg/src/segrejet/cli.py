"""Command-line front end.

Reports go to stdout (or ``--out``); diagnostics go to stderr.  Exit codes are
0 on success, 2 when a result is computed but negative (a residual that does
not vanish, a recovered map that is not an automorphism) and 1 on errors.

Every flag can also be set through an environment variable named
``SEGREJET_<FLAG>``, for example ``SEGREJET_DEGREE=10``.  Flags win over the
environment.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .cr_geometry import ManifoldError, analyze, normal_form_from_complex, normal_form_from_graph
from .cr_geometry import segre_map, segre_pair_on_complexification
from .dsl import DimensionError, InputDocument, ParseError, constant_matrix, degree_bound, parse_input
from .jet_param import PipelineError, prepare, reconstruct_from_jet
from .linalg_homog import ReductionError
from .series_core import Series, compose, linear_part_matrix, matvec
from .singular_solve import compose_matrix, solve_linear, solve_linear_composed, solve_nonlinear

ENV_PREFIX = "SEGREJET_"
DEFAULTS = {"degree": 8, "kmax": 6, "seed": 0, "format": "json", "threads": 1}


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def series_json(S: Series):
    return {"num_vars": S.nvars, "trunc": S.trunc, "series": S.to_json_obj()}


def series_from_json(obj) -> Series:
    return Series.from_json_obj(obj["series"], obj["num_vars"], obj["trunc"])


# --------------------------------------------------------------------------
# manifolds


def build_manifold(doc: InputDocument, D: int):
    if doc.mode == "graph":
        return normal_form_from_graph(doc.graph_phi(D), doc.n, doc.d, D)
    if doc.mode == "complex":
        M = normal_form_from_complex(doc.complex_q(D), doc.n, doc.d)
        M.validate()
        return M
    raise CliError("dimension_error", f"a manifold needs a graph or complex document, got {doc.mode}")


def _opt(doc, args, key):
    if getattr(args, f"{key}_given") or key not in doc.options:
        return getattr(args, key)
    return doc.options[key]


# --------------------------------------------------------------------------
# commands; each returns (report dict, negative verdict)


def cmd_analyze(doc, args):
    D = _opt(doc, args, "degree")
    M = build_manifold(doc, D)
    rep = analyze(M, kmax=_opt(doc, args, "kmax"), D=D, seed=_opt(doc, args, "seed"))
    return rep.to_json_obj(), False


def cmd_solve(doc, args):
    D = _opt(doc, args, "degree")
    seed = _opt(doc, args, "seed")
    maps = doc.maps(D + 4)
    b, u0 = maps.get("b"), maps.get("u0")
    if "A" in maps:
        A = maps["A"]
        if not isinstance(A, Series):
            raise CliError("dimension_error", "A must be a map [a1, ..., an]")
        if b is None:
            if u0 is None:
                raise CliError("dimension_error", "give b or u0")
            b = compose(A, u0)
        if "lam" in maps:
            lam = constant_matrix(maps["lam"])
        elif u0 is not None:
            lam = linear_part_matrix(u0)
        else:
            raise CliError("dimension_error", "give lam or u0")
        res = solve_nonlinear(A, b, lam, D, seed=seed)
        kind = "nonlinear"
    elif "Theta" in maps:
        Theta = maps["Theta"]
        if isinstance(Theta, Series):
            raise CliError("dimension_error", "Theta must be a matrix [[...], ...]")
        c = maps.get("c")
        if b is None:
            if u0 is None:
                raise CliError("dimension_error", "give b or u0")
            b = matvec(Theta if c is None else compose_matrix(Theta, c), u0)
        if c is None:
            res = solve_linear(Theta, b, D, seed=seed)
            kind = "linear"
        else:
            res = solve_linear_composed(Theta, c, b, D, seed=seed)
            kind = "linear_composed"
    else:
        raise CliError("dimension_error", "a solve document defines A or Theta")
    out = res.to_json_obj()
    out["trunc"] = res.u.trunc
    out["kind"] = kind
    return out, not res.residual_zero


def cmd_segre(doc, args):
    D = _opt(doc, args, "degree")
    M = build_manifold(doc, D)
    v = segre_map(M, args.j, D)
    out = series_json(v)
    out["j"] = args.j
    out["complexification_identity"] = segre_pair_on_complexification(M, args.j, D) if args.j >= 1 else None
    return out, False


def read_jet(text: str, n: int, d: int, order: int) -> Series:
    """Jet from a JSON series or a ``jet`` document.

    In a document, unwritten terms are zero through ``degree=`` if the header
    sets it and through ``order`` otherwise."""
    N = n + d
    if text.lstrip().startswith("{"):
        S = series_from_json(json.loads(text))
        if S.nvars != N or S.ncomps != N:
            raise CliError("dimension_error", f"jet must map C^{N} to C^{N}")
        return S
    jdoc = parse_input(text)
    if jdoc.mode != "jet" or (jdoc.n, jdoc.d) != (n, d):
        raise CliError("dimension_error", f"jet document must read 'jet n={n} d={d}: H = [...]'")
    H = jdoc.get("H")
    if H is None:
        raise CliError("dimension_error", "jet document must define H")
    order = jdoc.options.get("degree", max(order, degree_bound(H)))
    S = jdoc.maps(order)["H"]
    if not isinstance(S, Series) or S.ncomps != N:
        raise CliError("dimension_error", f"H must have {N} components")
    return S


def cmd_reconstruct(doc, args, jet_text):
    E = _opt(doc, args, "degree")
    kmax, seed = _opt(doc, args, "kmax"), _opt(doc, args, "seed")
    jH = read_jet(jet_text, doc.n, doc.d, 2 * kmax)
    M0 = build_manifold(doc, max(2 * kmax + 2, 8))
    plan = prepare(M0, kmax, seed)
    need = plan.degrees(E)["manifold_degree"]
    M = build_manifold(doc, need)
    plan = prepare(M, kmax, seed)
    rep = reconstruct_from_jet(M, jH, E, kmax=kmax, seed=seed, plan=plan)
    out = rep.to_json_obj()
    out["trunc"] = rep.H.trunc
    negative = not (rep.is_automorphism and rep.jet_agreement and rep.residual_zero)
    return out, negative


# --------------------------------------------------------------------------
# output


def to_text(obj, indent=0) -> str:
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict) and "series" in obj and "num_vars" in obj:
        S = series_from_json({k: obj[k] for k in ("series", "num_vars", "trunc")})
        lines.append(f"{pad}map (through degree {S.trunc}):")
        for c in range(S.ncomps):
            lines.append(f"{pad}  [{c + 1}] {str(S.component(c)) or '0'}")
        obj = {k: v for k, v in obj.items() if k not in ("series", "num_vars", "trunc")}
    for k in sorted(obj):
        v = obj[k]
        if isinstance(v, dict) and v:
            lines.append(f"{pad}{k}:")
            lines.append(to_text(v, indent + 1))
        else:
            lines.append(f"{pad}{k}: {json.dumps(v, sort_keys=True)}")
    return "\n".join(lines)


def render(obj, fmt) -> str:
    if fmt == "json":
        return json.dumps(obj, sort_keys=True, indent=2) + "\n"
    return to_text(obj) + "\n"


# --------------------------------------------------------------------------
# entry point


def _env_default(key, conv):
    raw = os.environ.get(ENV_PREFIX + key.upper())
    if raw is None:
        return DEFAULTS[key]
    try:
        return conv(raw)
    except ValueError:
        raise CliError("usage_error", f"bad value for {ENV_PREFIX}{key.upper()}: {raw!r}") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", help="document file, or - for stdin")
    common.add_argument("--degree", type=int, help="truncation degree / target certified degree (default 8)")
    common.add_argument("--kmax", type=int, help="largest Segre-jet order scanned (default 6)")
    common.add_argument("--seed", type=int, help="seed for generic-rank sampling (default 0)")
    common.add_argument("--format", choices=("json", "text"), help="report format (default json)")
    common.add_argument("--out", help="write the report to this path")
    common.add_argument("--threads", type=int, help="worker threads (default 1)")
    p = argparse.ArgumentParser(prog="segrejet", description="Segre-set jet parametrization toolkit")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="invariants of a manifold")
    sub.add_parser("solve", parents=[common], help="solve a singular analytic system")
    sp = sub.add_parser("segre", parents=[common], help="Segre map v^j")
    sp.add_argument("--j", type=int, default=2, help="Segre set index (default 2)")
    rp = sub.add_parser("reconstruct", parents=[common], help="recover an automorphism from its jet")
    rp.add_argument("--jet", required=True, help="jet document or JSON series file")
    return p


def _resolve(args):
    for key, conv in (("degree", int), ("kmax", int), ("seed", int), ("format", str), ("threads", int)):
        val = getattr(args, key)
        given = val is not None or (ENV_PREFIX + key.upper()) in os.environ
        if val is None:
            val = _env_default(key, conv)
        setattr(args, key, val)
        setattr(args, f"{key}_given", given)
    if args.format not in ("json", "text"):
        raise CliError("usage_error", f"unknown format {args.format!r}")
    if args.degree < 1 or args.kmax < 1 or args.threads < 1:
        raise CliError("usage_error", "--degree, --kmax and --threads must be positive")


def _read(path):
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise CliError("io_error", str(e)) from None


_ERROR_CODES = (
    (ParseError, "parse_error"),
    (DimensionError, "dimension_error"),
    (ManifoldError, "manifold_error"),
    (PipelineError, "pipeline_error"),
    (ReductionError, "reduction_error"),
    (ValueError, "value_error"),
)


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2, which is reserved for negative verdicts
        return 0 if e.code in (0, None) else 1
    fmt = "json"
    try:
        _resolve(args)
        fmt = args.format
        doc = parse_input(_read(args.input))
        if args.command == "analyze":
            report, negative = cmd_analyze(doc, args)
        elif args.command == "solve":
            report, negative = cmd_solve(doc, args)
        elif args.command == "segre":
            report, negative = cmd_segre(doc, args)
        else:
            report, negative = cmd_reconstruct(doc, args, _read(args.jet))
        text = render(report, fmt)
        if args.out:
            try:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write(text)
            except OSError as e:
                raise CliError("io_error", str(e)) from None
        else:
            stdout.write(text)
        if negative:
            stderr.write("segrejet: negative verdict\n")
        return 2 if negative else 0
    except CliError as e:
        return _fail(stderr, e.code, str(e), fmt)
    except tuple(c for c, _ in _ERROR_CODES) as e:
        code = next(name for cls, name in _ERROR_CODES if isinstance(e, cls))
        return _fail(stderr, code, str(e), fmt)


def _fail(stderr, code, message, fmt):
    if fmt == "json":
        stderr.write(json.dumps({"error": {"code": code, "message": message}}, sort_keys=True) + "\n")
    else:
        stderr.write(f"segrejet: error [{code}]: {message}\n")
    return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
