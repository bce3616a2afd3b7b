"""Command-line front end: every verification as a subcommand with a JSON report."""

from __future__ import annotations

import ast
import json
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import click
import numpy as np

from . import __version__
from .adjoint import adjoint_equation, check_strict_self_adjointness, check_substitution
from .conslaw import (
    conserved_vector_raw,
    eliminate_nonlocal,
    is_trivial,
    reduce_vector,
    restrict_vector,
    verify_divergence,
)
from .fixtures import NOVIKOV_BASIS_TEXT, EQUATIONS, equation, field_from_text, novikov_basis
from .pdesolver import SCHEMES, Grid, simulate
from .reductions import (
    STANDARD_SPECS,
    ReductionError,
    SingularityError,
    StepUnderflowError,
    integrate_ode,
    mp_profile,
    radical_profiles,
    reduce,
    verify_exact,
)
from .symcore import SymbolicError, parse, set_max_jet_order
from .symmetry import ClosureError, VectorField, check_symmetry, closure_check, determining_system

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

ANCHORS = {
    "verify-symmetries": ["five-dimensional point symmetry algebra"],
    "determining-system": ["determining equations for point symmetries"],
    "bracket-table": ["five-dimensional point symmetry algebra"],
    "adjoint": ["adjoint equation", "strict self-adjointness"],
    "conslaw": ["conserved vectors from symmetries", "H1 density and flux", "divergence multiplier"],
    "reduce": ["invariant solutions and reduced ODEs"],
    "simulate": ["conservation of the H1 functional"],
    "verify-exact": ["exact solutions"],
}


X5_NOTE = ("X5 is taken as -2t d/dt + u d/du; the form 2t d/dt - u d/du that also circulates "
           "differs by overall sign and generates the same group with reversed parameter")


class Context:
    def __init__(self, as_json: bool, out: Path | None):
        self.as_json = as_json
        self.out = out


def _fail_usage(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_USAGE)


def _emit(ctx: Context, command: str, inputs: dict, results: dict, status: str, lines: list[str]) -> None:
    report = {
        "artifact_version": __version__,
        "anchors": ANCHORS[command],
        "command": command,
        "inputs": inputs,
        "results": results,
        "status": status,
    }
    payload = json.dumps(report, indent=2, sort_keys=True, default=_jsonable)
    if ctx.out is not None:
        ctx.out.mkdir(parents=True, exist_ok=True)
        (ctx.out / f"{command}.json").write_text(payload + "\n")
    if ctx.as_json:
        click.echo(payload)
    else:
        for line in lines:
            click.echo(line)
        click.echo(f"status: {status}")
    sys.exit(EXIT_PASS if status in ("pass", "info") else EXIT_FAIL)


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return str(obj)


def _guard(fn: Callable) -> Callable:
    """Map parse and symbolic errors onto the usage exit code."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (SymbolicError, ValueError) as exc:
            _fail_usage(str(exc))

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _parse_field(text: str, name: str) -> VectorField:
    parts = [p.strip() for p in text.split(";")]
    if len(parts) != 3:
        raise ValueError(f"generator {text!r} must be 'xi_t; xi_x; eta'")
    return field_from_text(*parts, name=name)


def _load_generators(spec: str) -> list[VectorField]:
    if spec == "novikov-basis":
        return novikov_basis()
    if spec == "none":
        return []
    path = Path(spec)
    if not path.exists():
        raise ValueError(f"generator file {spec!r} not found")
    fields = []
    for i, raw in enumerate(path.read_text().splitlines()):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, body = line.partition(":")
        if not sep:
            name, body = f"G{i + 1}", line
        fields.append(_parse_field(body, name.strip()))
    return fields


def _generator(spec: str) -> VectorField:
    if spec in NOVIKOV_BASIS_TEXT:
        return field_from_text(*NOVIKOV_BASIS_TEXT[spec], name=spec)
    return _parse_field(spec, "X")


def _number(text: str | None) -> Fraction | float | None:
    if text is None:
        return None
    try:
        return Fraction(text)
    except ValueError:
        return float(text)


_SAFE = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "tanh": np.tanh, "cosh": np.cosh, "sinh": np.sinh, "pi": math.pi}


def numeric_field(text: str) -> Callable[[np.ndarray], np.ndarray]:
    """A whitelisted arithmetic expression in x, evaluated with numpy."""
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse initial field {text!r}: {exc.msg}") from None
    allowed = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Constant, ast.Load,
               ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd)
    for node in ast.walk(tree):
        if not isinstance(node, allowed):
            raise ValueError(f"unsupported construct in initial field: {type(node).__name__}")
        if isinstance(node, ast.Name) and node.id not in _SAFE and node.id != "x":
            raise ValueError(f"unknown name {node.id!r} in initial field")
    code = compile(tree, "<u0>", "eval")
    return lambda x: np.broadcast_to(eval(code, {"__builtins__": {}}, {**_SAFE, "x": x}), x.shape).astype(float)


@click.group()
@click.option("--json", "as_json", is_flag=True, help="Emit the report as JSON.")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None, help="Directory for artifacts.")
@click.option("--max-jet-order", type=click.IntRange(min=1), default=None, help="Maximum jet order.")
@click.version_option(__version__)
@click.pass_context
def main(ctx: click.Context, as_json: bool, out: Path | None, max_jet_order: int | None) -> None:
    """Symbolic and numerical verification of the Novikov equation."""
    if max_jet_order is not None:
        set_max_jet_order(max_jet_order)
    ctx.obj = Context(as_json, out)


eq_option = click.option("--equation", "eq_text", default="novikov", show_default=True,
                         help=f"Built-in ({', '.join(EQUATIONS)}) or residual text.")


@main.command("verify-symmetries")
@eq_option
@click.option("--generators", default="novikov-basis", show_default=True,
              help="'novikov-basis', 'none', or a file of 'name: xi_t; xi_x; eta' lines.")
@click.option("--extra", multiple=True, help="Additional generator 'xi_t; xi_x; eta'.")
@click.pass_obj
@_guard
def verify_symmetries(obj: Context, eq_text: str, generators: str, extra: tuple[str, ...]) -> None:
    eq = equation(eq_text)
    fields = _load_generators(generators) + [_parse_field(t, f"E{i + 1}") for i, t in enumerate(extra)]
    inputs = {"equation": str(eq.lhs), "generators": [str(f) for f in fields]}
    if not fields:
        _emit(obj, "verify-symmetries", inputs, {"checked": 0}, "info", ["no generators given"])
    per, lines = [], []
    for f in fields:
        rep = check_symmetry(f, eq)
        per.append({"name": f.name, "field": str(f), "symmetry": rep.is_symmetry,
                    "on_shell_residual": str(rep.on_shell_residual),
                    "multiplier": None if rep.off_shell_multiplier is None else str(rep.off_shell_multiplier)})
        lines.append(f"{f.name}: {'symmetry' if rep.is_symmetry else 'NOT a symmetry'} "
                     f"(residual {rep.on_shell_residual})")
    ok = all(p["symmetry"] for p in per)
    closure: dict[str, Any] = {"closed": None}
    if ok:
        try:
            table = closure_check(fields)
            closure = {"closed": True, "brackets": _table_dict(table)}
            lines.append(f"algebra closes, dimension {len(fields)}")
        except ClosureError as exc:
            closure = {"closed": False, "obstruction": str(exc)}
            lines.append(f"algebra does not close: {exc}")
            ok = False
    results = {"symmetries": per, "passed": sum(p["symmetry"] for p in per), "total": len(per), "closure": closure}
    if any(f.name == "X5" for f in fields):
        results["conventions"] = [X5_NOTE]
    lines.insert(0, f"{results['passed']}/{len(per)} symmetries")
    _emit(obj, "verify-symmetries", inputs, results, "pass" if ok else "fail", lines)


def _table_dict(table) -> dict[str, str]:
    out = {}
    n = len(table.names)
    for i in range(n):
        for j in range(i + 1, n):
            out[f"[{table.names[i]},{table.names[j]}]"] = table.as_text(i, j)
    return out


@main.command("bracket-table")
@click.option("--generators", default="novikov-basis", show_default=True)
@click.pass_obj
@_guard
def bracket_table(obj: Context, generators: str) -> None:
    fields = _load_generators(generators)
    inputs = {"generators": [str(f) for f in fields]}
    try:
        table = closure_check(fields)
    except ClosureError as exc:
        _emit(obj, "bracket-table", inputs, {"closed": False, "obstruction": str(exc)}, "fail", [str(exc)])
    brackets = _table_dict(table)
    lines = [f"{k} = {v}" for k, v in brackets.items()]
    _emit(obj, "bracket-table", inputs, {"closed": True, "brackets": brackets}, "pass", lines)


@main.command("determining-system")
@eq_option
@click.option("--check", "checks", multiple=True, help="Candidate 'xi_t; xi_x; eta' to test against the system.")
@click.option("--basis/--no-basis", default=True, help="Also test the built-in generator basis.")
@click.pass_obj
@_guard
def determining(obj: Context, eq_text: str, checks: tuple[str, ...], basis: bool) -> None:
    eq = equation(eq_text)
    system = determining_system(eq)
    cands = (novikov_basis() if basis else []) + [_parse_field(t, f"C{i + 1}") for i, t in enumerate(checks)]
    verdicts = {}
    for f in cands:
        violated = [str(r) for r in system.evaluate(f) if not r.is_zero()]
        verdicts[f.name] = {"field": str(f), "satisfied": not violated, "violations": violated[:3]}
    results = {"constraints": [str(c) for c in system.constraints], "count": len(system), "candidates": verdicts}
    lines = [f"{len(system)} constraints"] + [
        f"{n}: {'satisfies' if v['satisfied'] else 'violates'} the system" for n, v in verdicts.items()
    ]
    status = "info"
    if cands:
        status = "pass" if all(v["satisfied"] for v in verdicts.values()) else "fail"
    _emit(obj, "determining-system", {"equation": str(eq.lhs), "checks": list(checks), "basis": basis},
          results, status, lines)


@main.command("adjoint")
@eq_option
@click.option("--subst", "substs", multiple=True, help="Test v = phi(u) for nonlinear self-adjointness.")
@click.pass_obj
@_guard
def adjoint(obj: Context, eq_text: str, substs: tuple[str, ...]) -> None:
    eq = equation(eq_text)
    fstar = adjoint_equation(eq)
    strict = check_strict_self_adjointness(eq)
    lines = [f"F* = {fstar}", f"strictly self-adjoint: {strict.holds}"
             + (f" (lambda = {strict.factor})" if strict.holds else "")]
    subs = []
    for text in substs:
        res = check_substitution(eq, parse(text))
        subs.append({"phi": text, "holds": res.holds, "degenerate": res.degenerate, "residual": str(res.residual)})
        lines.append(f"v = {text}: {'holds' if res.holds else 'fails'}" + (" (degenerate)" if res.degenerate else ""))
    results = {
        "adjoint": str(fstar),
        "strict": strict.holds,
        "factor": None if strict.factor is None else str(strict.factor),
        "substitutions": subs,
    }
    ok = strict.holds and all(s["holds"] and not s["degenerate"] for s in subs)
    _emit(obj, "adjoint", {"equation": str(eq.lhs), "subst": list(substs)}, results, "pass" if ok else "fail", lines)


@main.command("conslaw")
@eq_option
@click.option("--generator", "gen", required=True, help="X1..X5 or 'xi_t; xi_x; eta'.")
@click.pass_obj
@_guard
def conslaw(obj: Context, eq_text: str, gen: str) -> None:
    eq = equation(eq_text)
    X = _generator(gen)
    inputs = {"equation": str(eq.lhs), "generator": str(X)}
    rep = check_symmetry(X, eq)
    if not rep.is_symmetry:
        _emit(obj, "conslaw", inputs, {"generator": X.name, "symmetry": False,
                                        "residual": str(rep.on_shell_residual)},
              "fail", [f"{X.name} is not a symmetry: residual {rep.on_shell_residual}"])
    raw = conserved_vector_raw(X, eq)
    local = eliminate_nonlocal(raw)
    restricted = restrict_vector(local, eq)
    red = reduce_vector(local, eq)
    trivial = is_trivial(local, eq)
    multiplier = None
    if not trivial:
        multiplier = str(verify_divergence(red, eq))
    results = {
        "generator": X.name,
        "raw": {"C0": str(raw.c_t), "C1": str(raw.c_x)},
        "restricted": {"C0": str(restricted.c_t), "C1": str(restricted.c_x)},
        "C0": str(red.c_t),
        "C1": str(red.c_x),
        "multiplier": multiplier,
        "trivial": trivial,
    }
    if X.name == "X5":
        results["conventions"] = [X5_NOTE]
    lines = [f"C0 = {red.c_t}", f"C1 = {red.c_x}", f"trivial: {trivial}"]
    if multiplier is not None:
        lines.append(f"D_t C0 + D_x C1 = ({multiplier}) * F")
    _emit(obj, "conslaw", inputs, results, "pass", lines)


def _params(**vals: str | None) -> dict[str, Fraction | float]:
    return {k: v for k, v in ((k, _number(s)) for k, s in vals.items()) if v is not None}


@main.command("reduce")
@click.argument("ansatz", type=click.Choice(sorted(STANDARD_SPECS)))
@eq_option
@click.option("--A", "A", default=None, help="Integration constant of the steady reduction.")
@click.option("--c", "c", default=None, help="Wave speed (travelling).")
@click.option("--k", "k", default=None, help="Separation constant.")
@click.option("--verify", "candidate", default=None, help="Closed-form profile to substitute.")
@click.option("--ic", default=None, help="Comma-separated initial values at the left end of the domain.")
@click.option("--domain", default="0,1", show_default=True)
@click.option("--step", default=1e-3, show_default=True, type=float)
@click.option("--method", type=click.Choice(["rk4", "adaptive"]), default="rk4", show_default=True)
@click.pass_obj
@_guard
def reduce_cmd(obj: Context, ansatz: str, eq_text: str, A, c, k, candidate, ic, domain, step, method) -> None:
    eq = equation(eq_text)
    params = _params(A=A, c=c, k=k)
    inputs = {"ansatz": ansatz, "equation": str(eq.lhs), "params": params, "verify": candidate, "ic": ic,
              "domain": domain, "step": step, "method": method}
    try:
        red = reduce(STANDARD_SPECS[ansatz], eq)
    except ReductionError as exc:
        _emit(obj, "reduce", inputs, {"error": str(exc)}, "fail", [str(exc)])
    results: dict[str, Any] = {"ode": red.residual_text(), "identically_zero": red.identically_zero}
    lines = [f"reduced: {red.residual_text()}"]
    status = "info"
    if candidate is not None:
        target = eq if red.identically_zero else red.ode
        chk = verify_exact(target, parse(candidate), params=params)
        results["verify"] = chk.as_dict()
        lines.append(f"{candidate}: {'symbolic zero' if chk.symbolic_zero else 'residual ' + str(chk.residual)}")
        status = "pass" if chk.symbolic_zero else "fail"
    if ic is not None:
        lo, hi = (float(v) for v in domain.split(","))
        prob = red.ode.with_initial([float(v) for v in ic.split(",")], (lo, hi))
        try:
            sol = integrate_ode(prob, step, method, params={n: float(v) for n, v in params.items()})
        except (SingularityError, StepUnderflowError) as exc:
            results["integration"] = {"error": str(exc)}
            _emit(obj, "reduce", inputs, results, "fail", lines + [str(exc)])
        results["integration"] = {"samples": len(sol.grid), "error_estimate": sol.error_estimate,
                                  "final": [float(v) for v in sol.values[-1]]}
        lines.append(f"integrated {len(sol.grid)} samples, error estimate {sol.error_estimate:.3g}")
        if obj.out is not None:
            _write_profile(obj.out / f"reduce-{ansatz}.csv", red.ode.variable, sol)
    _emit(obj, "reduce", inputs, results, status, lines)


def _write_profile(path: Path, var: str, sol) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    order = sol.values.shape[1]
    names = ["u", "u'", "u''", "u'''"][:order]
    with open(path, "w") as fh:
        fh.write(",".join([var] + names) + "\n")
        for x, row in zip(sol.grid, sol.values):
            fh.write(",".join(repr(float(v)) for v in [x, *row]) + "\n")


@main.command("simulate")
@click.option("--u0", default="2+sin(x)", show_default=True, help="Initial field as an expression in x.")
@click.option("--n", default=256, show_default=True, type=int)
@click.option("--dt", default=1e-3, show_default=True, type=float)
@click.option("--t-end", default=1.0, show_default=True, type=float)
@click.option("--scheme", type=click.Choice(SCHEMES), default="spectral", show_default=True)
@click.option("--integrator", type=click.Choice(["rk4", "dop853"]), default="rk4", show_default=True)
@click.option("--tolerance", default=1e-8, show_default=True, type=float, help="Allowed relative H1 drift.")
@click.pass_obj
@_guard
def simulate_cmd(obj: Context, u0: str, n: int, dt: float, t_end: float, scheme: str, integrator: str,
                 tolerance: float) -> None:
    import warnings

    grid = Grid(n)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        traj = simulate(numeric_field(u0), grid, t_end, dt, scheme, integrator=integrator)
    summary = traj.summary()
    summary["warnings"] = [str(w.message) for w in caught]
    inputs = {"u0": u0, "n": n, "dt": dt, "t_end": t_end, "scheme": scheme, "integrator": integrator,
              "tolerance": tolerance}
    if obj.out is not None:
        obj.out.mkdir(parents=True, exist_ok=True)
        traj.write_csv(obj.out / "trajectory.csv")
        traj.write_summary(obj.out / "summary.json")
    ok = traj.blowup_time is None and summary["h1_max_drift_rel"] <= tolerance
    lines = [f"H1 initial {summary['h1_initial']!r}", f"H1 final {summary['h1_final']!r}",
             f"max relative drift {summary['h1_max_drift_rel']:.3e} (tolerance {tolerance:g})"]
    if traj.blowup_time is not None:
        lines.append(f"blow-up at t = {traj.blowup_time}")
    _emit(obj, "simulate", inputs, summary, "pass" if ok else "fail", lines)


@main.command("verify-exact")
@eq_option
@click.option("--candidate", default=None, help="Closed form u(t,x) substituted into the equation.")
@click.option("--radicals", is_flag=True, help="Check the radical steady profiles numerically.")
@click.option("--samples", "param_samples", default="1,0,0;0.5,1,0.2;2,-1,0.3;0.25,2,-0.1;1.5,0.5,0.5",
              show_default=True, help="';'-separated A,c1,c2 triples for --radicals.")
@click.option("--tolerance", default=1e-9, show_default=True, type=float)
@click.option("--param", "param_kv", multiple=True, help="Constant binding name=value.")
@click.pass_obj
@_guard
def verify_exact_cmd(obj: Context, eq_text: str, candidate, radicals: bool, param_samples: str, tolerance: float,
                     param_kv: tuple[str, ...]) -> None:
    eq = equation(eq_text)
    params = {}
    for kv in param_kv:
        name, _, val = kv.partition("=")
        params[name.strip()] = _number(val.strip())
    inputs = {"equation": str(eq.lhs), "candidate": candidate, "radicals": radicals, "params": params,
              "samples": param_samples if radicals else None, "tolerance": tolerance}
    if candidate is None and not radicals:
        raise ValueError("give --candidate or --radicals")
    results: dict[str, Any] = {}
    lines: list[str] = []
    ok = True
    if candidate is not None:
        chk = verify_exact(eq, parse(candidate), params=params)
        results["candidate"] = chk.as_dict()
        ok = bool(chk.symbolic_zero)
        lines.append(f"{candidate}: {'symbolic zero' if chk.symbolic_zero else 'residual ' + str(chk.residual)}")
    if radicals:
        steady = reduce(STANDARD_SPECS["steady"], eq).ode
        rows = []
        for triple in param_samples.split(";"):
            A, c1, c2 = (float(v) for v in triple.split(","))
            for name, fn in radical_profiles(A, c1, c2).items():
                worst = verify_exact(steady, mp_profile(fn, 2), params={"A": A}).max_numeric_residual
                rows.append({"profile": name, "A": A, "c1": c1, "c2": c2, "max_residual": worst,
                             "within_tolerance": worst <= tolerance})
                if worst > tolerance:
                    ok = False
                    lines.append(f"DISCREPANCY {name} at A={A}, c1={c1}, c2={c2}: residual {worst:.3e}")
        results["radicals"] = rows
        lines.append(f"radical profiles: {sum(r['within_tolerance'] for r in rows)}/{len(rows)} within {tolerance:g}")
    _emit(obj, "verify-exact", inputs, results, "pass" if ok else "fail", lines)


if __name__ == "__main__":
    main()
