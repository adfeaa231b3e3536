"""Command-line front end.

Algebra files are line oriented with ``#`` comments::

    [algebra]
    dim = 4
    (1,2) -> a*e2
    (3,4) -> b*e4
    [complex]          # optional; default I e1 = e2, I e3 = e4, ...
    I e1 = e2
    I e3 = e4
    [omega]            # optional override, coefficients of u^ij
    (1,2) = 1
    [deviance]         # optional cubic coefficients c1..cN
    c2 = 3/2
    [lambda]           # optional potential
    u2 = -1/sqrt(2)

Coefficients are expressions in numbers, + - * / **, sqrt() and parameters
bound with ``--param name=value``.
"""
from __future__ import annotations

import argparse
import ast
import re
import sys
from dataclasses import dataclass, field
from math import comb
from typing import Optional, Sequence

import numpy as np
import sympy as sp

from . import classify4d as c4
from .conic_lift import LiftPreconditionError, build_lift, lift_report
from .deviance import cubic_to_eta
from .formatting import document, fmt, linear
from .lie_kahler import (
    KahlerStructure,
    LieAlgebraData,
    curvature,
    jacobi_residual,
    kahler_check,
    levi_civita,
    ricci_scalar,
    standard_complex_structure,
)
from .psk_verify import verify
from .tensor_core import TOL, AlternatingForm, basis

EXIT_OK, EXIT_VALIDATION, EXIT_ASSERTION, EXIT_USAGE = 0, 1, 2, 3


class AlgebraSyntaxError(ValueError):
    def __init__(self, line: int, col: int, msg: str):
        super().__init__(f"line {line}, column {col}: {msg}")
        self.line, self.col = line, col


class UnboundParameterError(ValueError):
    pass


class ValidationError(ValueError):
    def __init__(self, msg: str, report: Optional[dict] = None):
        super().__init__(msg)
        self.report = report or {}


# ---------------------------------------------------------------- expressions

_BINOPS = {ast.Add: sp.Add, ast.Sub: lambda a, b: a - b, ast.Mult: sp.Mul,
           ast.Div: lambda a, b: a / b, ast.Pow: sp.Pow}


def parse_expr(text: str, params: dict, symbols: Optional[dict] = None, line: int = 0, col0: int = 0):
    """Exact sympy value of an arithmetic expression over params and symbols."""
    symbols = symbols or {}
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as e:
        raise AlgebraSyntaxError(line, col0 + (e.offset or 1), f"cannot parse {text.strip()!r}") from None

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return sp.Rational(str(node.value)) if isinstance(node.value, float) else sp.Integer(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == "sqrt" \
                and len(node.args) == 1 and not node.keywords:
            return sp.sqrt(ev(node.args[0]))
        if isinstance(node, ast.Name):
            if node.id in symbols:
                return symbols[node.id]
            if node.id in params:
                return params[node.id]
            raise UnboundParameterError(f"line {line}: unbound parameter {node.id!r}")
        raise AlgebraSyntaxError(line, col0 + getattr(node, "col_offset", 0) + 1,
                                 f"unsupported syntax in {text.strip()!r}")

    return sp.simplify(ev(tree))


def parse_params(items: Sequence[str]) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ValueError(f"--param expects name=value, got {item!r}")
        name, value = item.split("=", 1)
        name = name.strip()
        if not name.isidentifier():
            raise ValueError(f"bad parameter name {name!r}")
        out[name] = parse_expr(value, out)
    return out


# -------------------------------------------------------------- algebra files


@dataclass
class ParsedAlgebra:
    ks: KahlerStructure
    cubic: Optional[list] = None
    lam: Optional[list] = None
    params: dict = field(default_factory=dict)


_PAIR = re.compile(r"^\(\s*(\d+)\s*,\s*(\d+)\s*\)\s*(->|=)\s*(.*)$")
_CPLX = re.compile(r"^I\s+e(\d+)\s*=\s*(.*)$")
_ASSIGN = re.compile(r"^([A-Za-z_]\w*)\s*=\s*(.*)$")


def _vector(expr, D: int, line: int, col: int) -> dict:
    es = sp.symbols(f"e1:{D + 1}")
    expr = sp.expand(expr)
    out = {}
    rest = expr
    for k, e in enumerate(es, 1):
        coef = sp.simplify(expr.coeff(e))
        if coef.free_symbols:
            raise AlgebraSyntaxError(line, col, "right-hand side must be linear in e1..eD")
        if coef != 0:
            out[k] = coef
        rest = rest - coef * e
    if sp.simplify(rest) != 0:
        raise AlgebraSyntaxError(line, col, "right-hand side must be a combination of e1..eD")
    return out


def parse_algebra(text: str, params: Optional[dict] = None, validate: bool = True,
                  tol: float = TOL) -> ParsedAlgebra:
    params = dict(params or {})
    section = None
    dim = None
    brackets, cplx, omega, dev, lam = {}, {}, {}, {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        stripped = line.strip()
        if not stripped:
            continue
        col = len(line) - len(line.lstrip()) + 1
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise AlgebraSyntaxError(lineno, col, "unterminated section header")
            section = stripped[1:-1].strip()
            if section not in ("algebra", "complex", "omega", "deviance", "lambda"):
                raise AlgebraSyntaxError(lineno, col + 1, f"unknown section {section!r}")
            continue
        if section is None:
            raise AlgebraSyntaxError(lineno, col, "content before the first section")
        syms = {f"e{k}": sp.Symbol(f"e{k}") for k in range(1, (dim or 0) + 1)}
        if section == "algebra":
            m = _ASSIGN.match(stripped)
            if m and m.group(1) == "dim":
                try:
                    dim = int(m.group(2))
                except ValueError:
                    raise AlgebraSyntaxError(lineno, col, "dim must be an integer") from None
                if dim < 2 or dim % 2:
                    raise AlgebraSyntaxError(lineno, col, "dim must be a positive even integer")
                continue
            m = _PAIR.match(stripped)
            if not m or m.group(3) != "->":
                raise AlgebraSyntaxError(lineno, col, "expected '(i,j) -> expression'")
            if dim is None:
                raise AlgebraSyntaxError(lineno, col, "dim must be declared before brackets")
            i, j = int(m.group(1)), int(m.group(2))
            if not (1 <= i <= dim and 1 <= j <= dim) or i == j:
                raise AlgebraSyntaxError(lineno, col + 1, f"bad index pair ({i},{j})")
            rhs_col = col + stripped.index(m.group(4))
            vec = _vector(parse_expr(m.group(4), params, syms, lineno, rhs_col), dim, lineno, rhs_col)
            key, sign = ((i, j), 1) if i < j else ((j, i), -1)
            if key in brackets:
                raise AlgebraSyntaxError(lineno, col, f"bracket {key} given twice")
            brackets[key] = {k: sign * v for k, v in vec.items()}
        elif section == "complex":
            m = _CPLX.match(stripped)
            if not m:
                raise AlgebraSyntaxError(lineno, col, "expected 'I eK = expression'")
            if dim is None:
                raise AlgebraSyntaxError(lineno, col, "complex structure needs dim")
            k = int(m.group(1))
            if not 1 <= k <= dim:
                raise AlgebraSyntaxError(lineno, col + 3, f"bad index e{k}")
            rhs_col = col + stripped.index(m.group(2))
            cplx[k] = _vector(parse_expr(m.group(2), params, syms, lineno, rhs_col), dim, lineno, rhs_col)
        elif section == "omega":
            m = _PAIR.match(stripped)
            if not m or m.group(3) != "=":
                raise AlgebraSyntaxError(lineno, col, "expected '(i,j) = expression'")
            i, j = int(m.group(1)), int(m.group(2))
            if dim is None or not (1 <= i <= dim and 1 <= j <= dim) or i == j:
                raise AlgebraSyntaxError(lineno, col + 1, f"bad index pair ({i},{j})")
            v = parse_expr(m.group(4), params, None, lineno, col + stripped.index(m.group(4)))
            omega[(min(i, j) - 1, max(i, j) - 1)] = v if i < j else -v
        else:
            m = _ASSIGN.match(stripped)
            if not m:
                raise AlgebraSyntaxError(lineno, col, "expected 'name = expression'")
            name, rhs = m.group(1), m.group(2)
            prefix = "c" if section == "deviance" else "u"
            if not (name.startswith(prefix) and name[1:].isdigit()):
                raise AlgebraSyntaxError(lineno, col, f"expected {prefix}1, {prefix}2, ... in [{section}]")
            target = dev if section == "deviance" else lam
            target[int(name[1:])] = parse_expr(rhs, params, None, lineno, col + stripped.index(rhs))
    if dim is None:
        raise AlgebraSyntaxError(1, 1, "missing [algebra] section with dim")
    numeric = {ij: {k: complex(v) for k, v in rhs.items()} for ij, rhs in brackets.items()}
    for ij, rhs in numeric.items():
        for k, v in rhs.items():
            if abs(v.imag) > 0:
                raise ValidationError(f"bracket {ij} has a non-real coefficient")
    alg = LieAlgebraData.from_brackets(dim, {ij: {k: v.real for k, v in rhs.items()} for ij, rhs in numeric.items()},
                                       brackets)
    if cplx:
        I = np.zeros((dim, dim))
        for k, vec in cplx.items():
            for i, v in vec.items():
                I[i - 1, k - 1] = float(v)
        # I e_k = v e_i with e_i unassigned implies I e_i = -e_k / v
        for k, vec in cplx.items():
            if len(vec) == 1:
                (i, v), = vec.items()
                if i not in cplx:
                    I[k - 1, i - 1] = -1 / float(v)
    else:
        I = standard_complex_structure(dim)
    om = None
    if omega:
        om = AlternatingForm(dim, 2, [complex(omega.get(ij, 0)) for ij in basis(dim, 2)])
    ks = KahlerStructure(alg, I, om)
    n = dim // 2
    cubic = None
    if dev:
        count = comb(n + 2, 3)
        if max(dev) > count:
            raise ValidationError(f"deviance has {count} coefficients for dim {dim}")
        cubic = [dev.get(k, sp.Integer(0)) for k in range(1, count + 1)]
    lam_list = None
    if lam:
        if max(lam) > dim:
            raise ValidationError(f"lambda index beyond dim {dim}")
        lam_list = [lam.get(k, sp.Integer(0)) for k in range(1, dim + 1)]
    parsed = ParsedAlgebra(ks, cubic, lam_list, params)
    if validate:
        rep = validation_report(ks)
        if not rep["ok"]:
            raise ValidationError("structure failed Jacobi/Kähler validation", rep)
    return parsed


def validation_report(ks: KahlerStructure, tol: float = TOL) -> dict:
    jac = jacobi_residual(ks.alg)
    k = kahler_check(ks, tol)
    return {"jacobi": jac, "d_omega": k.dOmega, "nijenhuis": k.nijenhuis, "compatibility": k.compat,
            "ok": bool(jac < tol and k.ok)}


# ------------------------------------------------------------------ commands


def _u_names(D: int) -> list[str]:
    return [f"u{i + 1}" for i in range(D)]


def _numeric_cubic(parsed: ParsedAlgebra):
    if parsed.cubic is None:
        return None
    return cubic_to_eta([complex(c) for c in parsed.cubic], parsed.ks.n)


def cmd_check(parsed: ParsedAlgebra, args) -> tuple[int, str, dict]:
    rep = validation_report(parsed.ks, args.tolerance)
    lines = [f"jacobi residual      {fmt(rep['jacobi'])}",
             f"d omega residual     {fmt(rep['d_omega'])}",
             f"nijenhuis residual   {fmt(rep['nijenhuis'])}",
             f"compatibility        {fmt(rep['compatibility'])}",
             f"kahler               {'yes' if rep['ok'] else 'no'}"]
    return (EXIT_OK if rep["ok"] else EXIT_VALIDATION), "\n".join(lines), rep


def cmd_curvature(parsed: ParsedAlgebra, args) -> tuple[int, str, dict]:
    ks = parsed.ks
    R = curvature(levi_civita(ks), ks.alg)
    Ric, scal = ricci_scalar(R, ks)
    lines = ["Ricci tensor:"]
    lines += ["  " + "  ".join(fmt(x).rjust(16) for x in row) for row in Ric]
    lines.append(f"scal(normalised) = {fmt(scal)}")
    lines.append(f"scal(trace convention) = {fmt(scal * ks.dim)}")
    body = {"ricci": Ric, "scal_normalised": scal, "scal_trace": scal * ks.dim}
    if ks.dim == 4:
        fit = c4.fit_curvature(R)
        lines.append(f"curvature = {c4.render_curvature(fit)}   (fit residual {fmt(fit.residual)})")
        body["decomposition"] = {"H1": fit.h1, "H2": fit.h2, "Omega_P": fit.proj, "residual": fit.residual}
    lines.append("curvature 2-forms R^l_k (nonzero entries):")
    comps = []
    for l in range(ks.dim):
        for k in range(ks.dim):
            f = R.real[l, k]
            if f.max_abs() > 1e-12:
                pairs = basis(ks.dim, 2)
                txt = linear(f.coeffs, [f"u{i + 1}{j + 1}" for i, j in pairs])
                lines.append(f"  R[{l + 1},{k + 1}] = {txt}")
                comps.append({"row": l + 1, "col": k + 1, "form": txt})
    body["curvature"] = comps
    return EXIT_OK, "\n".join(lines), body


def cmd_verify(parsed: ParsedAlgebra, args) -> tuple[int, str, dict]:
    ks = parsed.ks
    d = _numeric_cubic(parsed)
    v = verify(ks, d, args.tolerance)
    lam = linear(v.d2_lambda.coeffs, _u_names(ks.dim)) if v.d2_lambda is not None else "none"
    lines = [f"D1 residual          {fmt(v.d1_residual)}",
             f"D2 feasible          {'yes' if v.d2_feasible else 'no'} (residual {fmt(v.d2_residual)})",
             f"lambda               {lam}",
             f"ricci identity       {fmt(v.ricci_residual)}",
             f"scalar identity      {fmt(v.scalar_residual)}",
             f"scal(normalised)     {fmt(v.scal)}",
             f"verdict              {'accepted' if v.accepted else 'rejected'}"]
    body = {"d1_residual": v.d1_residual, "d2_feasible": v.d2_feasible, "d2_residual": v.d2_residual,
            "lambda": list(v.d2_lambda.coeffs.real) if v.d2_lambda is not None else None,
            "ricci_residual": v.ricci_residual, "scalar_residual": v.scalar_residual, "scal": v.scal,
            "accepted": v.accepted}
    return (EXIT_OK if v.accepted else EXIT_ASSERTION), "\n".join(lines), body


def cmd_lift(parsed: ParsedAlgebra, args) -> tuple[int, str, dict]:
    try:
        L = build_lift(parsed.ks, parsed.cubic, parsed.lam)
    except LiftPreconditionError as e:
        return EXIT_ASSERTION, f"lift unavailable: {e}", {"error": str(e)}
    rep = lift_report(L)
    inv = rep.invariants
    rows = [("torsion", rep.torsion), ("curvature identity", rep.curvature),
            ("flatness", rep.flatness.flat), ("bracket identity", rep.flatness.bracket_identity),
            ("derivative identity", rep.flatness.derivative_identity)]
    rows += list(inv.residuals().items())
    lines = [f"lambda = {' + '.join(f'({x})*u{i + 1}' for i, x in enumerate(L.lam) if x != 0) or '0'}"]
    lines += [f"{name:<22}{fmt(v)}" for name, v in rows]
    lines.append(f"{'eta degree (2,2)':<22}{'yes' if inv.eta_degree_ok else 'no'}")
    lines.append(f"{'signature':<22}{inv.signature}")
    lines.append(f"exact zero            {'yes' if rep.exact_zero else 'no'}")
    body = {"lambda": [str(x) for x in L.lam], "residuals": dict(rows), "eta_degree_ok": inv.eta_degree_ok,
            "signature": list(inv.signature), "exact_zero": rep.exact_zero}
    return (EXIT_OK if rep.exact_zero else EXIT_ASSERTION), "\n".join(lines), body


def _grid(text: Optional[str]) -> list:
    if not text:
        return [sp.Rational(1, 2), sp.Integer(1), sp.Integer(2)]
    vals = [parse_expr(t, {}) for t in text.split(",") if t.strip()]
    for v in vals:
        if not float(v) > 0:
            raise ValueError("grid values must be positive")
    return vals


def cmd_classify4(args) -> tuple[int, str, dict]:
    rows = c4.classify(_grid(args.grid), args.tolerance)
    ok = True
    for r in rows:
        cubic = cubic_to_eta(r.cubic) if r.cubic is not None else None
        v = verify(r.structure, cubic, args.tolerance) if cubic is not None else None
        if r.status == "accepted" and not (v and v.accepted):
            ok = False
    return (EXIT_OK if ok else EXIT_ASSERTION), c4.classification_text(rows).rstrip("\n"), c4.classification_body(rows)


def render_algebra(case: str, params: dict) -> str:
    """Algebra file for a built-in family, with tables data as comments."""
    br = c4.family_brackets(case, **params)
    ks = c4.builtin_family(case, **params)
    lines = [f"# === case {case} [{c4.render_params(params)}] ===", "[algebra]", "dim = 4"]
    for (i, j), rhs in sorted(br.items()):
        terms = " + ".join(f"({v})*e{k}" for k, v in sorted(rhs.items()))
        lines.append(f"({i},{j}) -> {terms}")
    lines += ["[complex]", "I e1 = e2", "I e3 = e4"]
    R = curvature(levi_civita(ks), ks.alg)
    fit = c4.fit_curvature(R)
    lines.append(f"# curvature: {c4.render_curvature(fit)}")
    lines.append(f"# reference form: {linear(c4.reference_curvature(case, **params), ['H1', 'H2', 'Omega_P'])}")
    D = ks.dim
    du = ks.alg.d_matrix(1)
    pairs = basis(D, 2)
    for k in range(D):
        txt = linear(du[:, k], [f"u{i + 1}{j + 1}" for i, j in pairs])
        if txt != "0":
            lines.append(f"# d u{k + 1} = {txt}")
    conn = levi_civita(ks)
    for i in range(D):
        row = [linear(conn[i, j].coeffs, _u_names(D)) for j in range(D)]
        lines.append(f"# levi-civita row {i + 1}: " + " | ".join(row))
    return "\n".join(lines)


def tables_text(deltas=None) -> str:
    samples = c4.default_samples(deltas or (sp.Rational(1, 2), 1, 2))
    blocks = []
    for case in c4.CASES:
        for p in samples[case]:
            blocks.append(render_algebra(case, p))
    return "\n\n".join(blocks) + "\n"


def split_tables(text: str) -> list[tuple[str, str]]:
    """Split `tables` output into (header, algebra file text) pairs."""
    out = []
    for chunk in re.split(r"\n(?=# === case )", text.strip()):
        header = chunk.splitlines()[0]
        out.append((header, chunk))
    return out


def cmd_tables(args) -> tuple[int, str, dict]:
    text = tables_text(_grid(args.grid))
    rows = c4.curvature_table(c4.default_samples(_grid(args.grid)))
    ok = all(r.matches for r in rows)
    body = {"tables": text, "curvature_fits_match": ok}
    return (EXIT_OK if ok else EXIT_ASSERTION), text.rstrip("\n"), body


# ---------------------------------------------------------------------- main


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--param", action="append", default=[], metavar="NAME=VALUE",
                        help="bind a parameter used in coefficient expressions")
    common.add_argument("--tolerance", type=float, default=TOL)
    common.add_argument("--format", choices=["text", "json-like"], default="text")
    common.add_argument("--grid", default=None, help="comma-separated delta samples")
    p = _Parser(prog="psklie", description="Kähler Lie algebras and projective special Kähler checks")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, needs_file in (("check", True), ("curvature", True), ("verify", True), ("lift", True),
                             ("classify4", False), ("tables", False)):
        sp_ = sub.add_parser(name, parents=[common])
        if needs_file:
            sp_.add_argument("file")
    return p


_FILE_COMMANDS = {"check": cmd_check, "curvature": cmd_curvature, "verify": cmd_verify, "lift": cmd_lift}


def run(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        params = parse_params(args.param)
    except (ValueError, AlgebraSyntaxError, UnboundParameterError) as e:
        print(f"error: {e}", file=err)
        return EXIT_USAGE
    try:
        if args.command in _FILE_COMMANDS:
            try:
                with open(args.file, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as e:
                print(f"error: {e}", file=err)
                return EXIT_USAGE
            parsed = parse_algebra(text, params, validate=args.command != "check", tol=args.tolerance)
            code, txt, body = _FILE_COMMANDS[args.command](parsed, args)
        elif args.command == "classify4":
            code, txt, body = cmd_classify4(args)
        else:
            code, txt, body = cmd_tables(args)
    except ValidationError as e:
        msg = str(e)
        if e.report:
            msg += " (" + ", ".join(f"{k}={fmt(v) if not isinstance(v, bool) else v}"
                                    for k, v in e.report.items()) + ")"
        print(f"error: {msg}", file=err)
        return EXIT_VALIDATION
    except (AlgebraSyntaxError, UnboundParameterError) as e:
        print(f"error: {e}", file=err)
        return EXIT_VALIDATION
    except ValueError as e:
        print(f"error: {e}", file=err)
        return EXIT_USAGE
    if args.format == "json-like":
        print(document(args.command, body), file=out)
    else:
        print(txt, file=out)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
