"""Command line interface.

    python -m residue_engine pair --model p1pow:3 --class 1
    python -m residue_engine residue --betas "e1,e2,e1+e2" --lambda "3,1"
    python -m residue_engine verify --model projN:5

Exit codes: 0 ok, 1 I/O failure, 2 model or regularity error, 3 parse error,
4 non-generic ray or non-admissible cone.
"""
from __future__ import annotations

import argparse
import itertools
import json
import sys
from dataclasses import dataclass, field
from typing import Sequence

from . import __version__
from .cone_calculus import PiecewisePolynomial
from .errors import (
    DimensionError,
    EngineError,
    HalfSpaceError,
    InsufficientTruncationError,
    NonAdmissibleError,
    NonGenericError,
    NonSpanningError,
    ParseError,
    PiLedgerError,
    RegularityError,
    WallError,
)
from .exact_algebra import (
    LinearForm,
    MultiPoly,
    Scalar,
    default_names,
    parse_form_expr,
    parse_polynomial,
    parse_vector,
)
from .localization_model import (
    LocalizationModel,
    UniformClass,
    critical_values,
    dh_function,
    fit_decay_slope,
    pairing_general,
    pairing_rank1,
    pairing_with_theta,
    witten_decay_check,
)
from .model_io import model_to_dict, resolve_model
from .model_library import (
    P1PowerFixedPoints,
    binomial_vanishing,
    example1_names,
    example2_monomials,
    relation_generators_example1,
    relation_generators_example2,
    restrict_class_example1,
    restrict_class_example2,
)
from .residue_core import ConeSpec, MeromorphicTerm, jk_residue, jk_residue_via_h

COMMANDS = ("pair", "residue", "dh", "verify", "witten", "critical", "export")
DEFAULT_EPS = (0.2, 0.1, 0.05, 0.02)


@dataclass
class JobSpec:
    command: str
    model: str | None = None
    class_expr: str | None = None
    cone: str | None = None
    ray: str | None = None
    epsilon: tuple = DEFAULT_EPS
    order: int | None = None
    output: str = "text"
    threads: int = 1
    betas: str | None = None
    lam: str | None = None
    method: str = "contour"


@dataclass
class Report:
    text: str
    data: dict = field(default_factory=dict)
    code: int = 0


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------


def parse_cone(text: str, dim: int) -> ConeSpec:
    gens = [parse_vector(part) for part in text.split(";") if part.strip()]
    if any(g.dim != dim for g in gens):
        raise ParseError(f"cone generators must have length {dim}")
    return ConeSpec(gens)


def parse_ray(text: str, dim: int) -> LinearForm:
    rho = parse_vector(text)
    if rho.dim != dim:
        raise ParseError(f"ray must have length {dim}")
    return rho


def class_for_model(m: LocalizationModel, expr: str | None):
    """Interpret --class in the variables natural to the model."""
    if expr is None:
        return None
    if isinstance(m.fixed_points, P1PowerFixedPoints):
        return restrict_class_example1(m.fixed_points.N, expr)
    if m.name.startswith("projN:"):
        N = int(m.name.split(":")[1])
        return restrict_class_example2(N, expr)
    return UniformClass(parse_polynomial(expr, default_names(m.rank)))


def _fmt(x: Scalar) -> str:
    return str(x)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_pair(job: JobSpec) -> Report:
    m = resolve_model(job.model)
    eta = class_for_model(m, job.class_expr)
    cone = parse_cone(job.cone, m.rank) if job.cone else None
    ray = parse_ray(job.ray, m.rank) if job.ray else None
    label = "eta e^{i omega}[X_red]"
    if job.order is not None:
        poly = pairing_with_theta(m, eta, job.order, cone, ray)
        text = poly.to_text(["eps"])
        return Report(text, {"command": "pair", "model": m.name, "class": job.class_expr or "1",
                             "order": job.order, "quantity": label + " with e^{eps Theta}", "value": text})
    if m.rank == 1 and cone is None and ray is None:
        value = pairing_rank1(m, eta, threads=job.threads)
    else:
        value = pairing_general(m, eta, cone, ray)
    return Report(_fmt(value), {"command": "pair", "model": m.name, "class": job.class_expr or "1",
                                "quantity": label, "value": _fmt(value)})


def cmd_residue(job: JobSpec) -> Report:
    if not job.betas or not job.lam:
        raise ParseError("residue needs --betas and --lambda")
    lam = parse_vector(job.lam)
    l = lam.dim
    forms = [parse_form_expr(part, l) for part in _split_forms(job.betas)]
    names = default_names(l)
    num = parse_polynomial(job.class_expr, names) if job.class_expr else MultiPoly.one(l)
    term = MeromorphicTerm(num, forms, lam)
    cone = parse_cone(job.cone, l) if job.cone else ConeSpec.orthant(l)
    ray = parse_ray(job.ray, l) if job.ray else None
    if job.method == "h":
        value = jk_residue_via_h([term], cone, ray)
    else:
        value = jk_residue([term], cone, ray)
    return Report(_fmt(value), {"command": "residue", "betas": [f.to_text() for f in forms],
                                "lambda": lam.to_text(), "numerator": num.to_text(names),
                                "method": job.method, "value": _fmt(value)})


def _split_forms(text: str) -> list[str]:
    # "e1,e2,e1+e2" splits on commas; "1,0;0,1" splits on semicolons
    if ";" in text:
        return [p for p in text.split(";") if p.strip()]
    return [p for p in text.split(",") if p.strip()]


def cmd_dh(job: JobSpec) -> Report:
    m = resolve_model(job.model)
    cone = parse_cone(job.cone, m.rank) if job.cone else None
    R = dh_function(m, cone)
    names = [f"y{k + 1}" for k in range(m.rank)]
    text = R.to_text(names)
    if m.rank == 1:
        rows = []
        for lo, hi, poly in R.intervals():
            lo_s = "-inf" if lo is None else str(lo)
            hi_s = "inf" if hi is None else str(hi)
            rows.append(f"({lo_s}, {hi_s}) : {poly.to_text(names)}")
        text = "\n".join(rows)
    return Report(text, {"command": "dh", "model": m.name, "pieces": R.to_json(names)})


def cmd_critical(job: JobSpec) -> Report:
    m = resolve_model(job.model)
    B = critical_values(m)
    rows = [f"{b.to_text()}  |beta|^2 = {n}" for b, n in zip(B.betas, B.norms)]
    return Report("\n".join(rows), {"command": "critical", "model": m.name,
                                    "betas": B.as_text(), "norms": [str(n) for n in B.norms]})


def cmd_witten(job: JobSpec) -> Report:
    m = resolve_model(job.model)
    cone = parse_cone(job.cone, m.rank) if job.cone else None
    samples = witten_decay_check(m, job.epsilon, cone)
    slope = fit_decay_slope(samples) if len(samples) >= 2 else float("nan")
    B = critical_values(m)
    b2 = B.min_nonzero_norm()
    rows = [f"eps={e:.6g}  |I - I0|={d:.12e}" for e, d in samples]
    rows.append(f"fitted slope={slope:.6f}  expected b^2={b2}")
    return Report("\n".join(rows), {"command": "witten", "model": m.name,
                                    "samples": [[e, d] for e, d in samples],
                                    "slope": slope, "expected": str(b2)})


def cmd_verify(job: JobSpec) -> Report:
    m = resolve_model(job.model)
    rows: list[str] = []
    checks: list[dict] = []
    if isinstance(m.fixed_points, P1PowerFixedPoints):
        N = m.fixed_points.N
        for Q, q, value in verify_example1(N):
            qs = q.to_text(example1_names(N))
            rows.append(f"Q={{{','.join(map(str, Q))}}} q={qs} : {value}")
            checks.append({"Q": list(Q), "q": qs, "value": str(value)})
    elif m.name.startswith("projN:"):
        N = int(m.name.split(":")[1])
        for kind, R, value in verify_example2(N):
            rs = R.to_text(["xi", "alpha"])
            rows.append(f"{kind} R={rs} : {value}")
            checks.append({"generator": kind, "R": rs, "value": str(value)})
    else:
        raise ParseError("verify supports the p1pow:N and projN:N presets")
    ok = all(c["value"] == "0" for c in checks)
    if not checks:
        rows.append("no relations of degree N-3 (nothing to check)")
    rows.append("PASS" if ok else "FAIL")
    return Report("\n".join(rows), {"command": "verify", "model": m.name, "checks": checks,
                                    "result": "PASS" if ok else "FAIL"}, 0 if ok else 5)


def verify_example1(N: int):
    """Yield (Q, q, pairing) over all relation generators of degree N-3."""
    m = resolve_model(f"p1pow:{N}")
    n = N + 1
    for size in range((N + 1) // 2, N + 1):
        qdeg = N - 2 - size
        if qdeg < 0:
            continue
        for Q in itertools.combinations(range(1, N + 1), size):
            for e in _monomial_exponents(qdeg, n):
                q = MultiPoly.monomial(e)
                rel = relation_generators_example1(N, Q, q)
                yield Q, q, pairing_rank1(m, restrict_class_example1(N, rel))


def _monomial_exponents(degree: int, nvars: int):
    if nvars == 1:
        yield (degree,)
        return
    for first in range(degree, -1, -1):
        for rest in _monomial_exponents(degree - first, nvars - 1):
            yield (first,) + rest


def verify_example2(N: int):
    """Yield (generator, R, pairing) for R * P_+ and R * P_-/alpha of degree N-3."""
    m = resolve_model(f"projN:{N}")
    plus, minus = relation_generators_example2(N)
    for kind, gen in (("P+", plus), ("P-/alpha", minus)):
        rdeg = N - 3 - gen.degree()
        if rdeg < 0:
            continue
        for R in example2_monomials(rdeg):
            yield kind, R, pairing_rank1(m, restrict_class_example2(N, R * gen))


def cmd_export(job: JobSpec) -> Report:
    m = resolve_model(job.model)
    data = model_to_dict(m)
    return Report(json.dumps(data, indent=2), data)


HANDLERS = {
    "pair": cmd_pair,
    "residue": cmd_residue,
    "dh": cmd_dh,
    "verify": cmd_verify,
    "witten": cmd_witten,
    "critical": cmd_critical,
    "export": cmd_export,
}


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ParseError):
        return 3
    if isinstance(exc, (NonGenericError, NonAdmissibleError, WallError)):
        return 4
    if isinstance(exc, (RegularityError, DimensionError, HalfSpaceError, NonSpanningError,
                        PiLedgerError, InsufficientTruncationError, EngineError)):
        return 2
    if isinstance(exc, (OSError,)):
        return 1
    if isinstance(exc, ValueError):
        return 2
    return 1


def run(job: JobSpec) -> Report:
    """Execute one job; errors are mapped to exit codes, never raised."""
    if job.command not in HANDLERS:
        return Report(f"error: unknown command {job.command!r}", {"error": "unknown command"}, 3)
    if job.command not in ("residue",) and not job.model:
        return Report("error: --model is required", {"error": "--model is required"}, 3)
    try:
        return HANDLERS[job.command](job)
    except Exception as exc:  # mapped to the exit-code taxonomy
        code = exit_code_for(exc)
        if code == 1 and not isinstance(exc, OSError):
            raise
        msg = f"error: {type(exc).__name__}: {exc}"
        return Report(msg, {"error": type(exc).__name__, "message": str(exc)}, code)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="residue-engine", description="Exact localization pairings and residues.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model_required=True):
        p.add_argument("--model", required=model_required, help="p1pow:N, projN:N, su3demo or a JSON file")
        p.add_argument("--format", dest="output", choices=("text", "json"), default="text")

    p = sub.add_parser("pair", help="intersection pairing on the reduced space")
    common(p)
    p.add_argument("--class", dest="class_expr", help="class polynomial (xi1..xiN, alpha for p1pow; xi, alpha for projN; psi1.. otherwise)")
    p.add_argument("--cone", help="cone generators, e.g. '1,0;0,1'")
    p.add_argument("--ray", help="regularising ray, e.g. '1,2'")
    p.add_argument("--order", type=int, help="include e^{eps Theta} through this order")
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("residue", help="residue of one term over a cone")
    common(p, model_required=False)
    p.add_argument("--betas", required=True, help="denominator forms, e.g. 'e1,e2,e1+e2' or '1,0;0,1'")
    p.add_argument("--lambda", dest="lam", required=True, help="exponent, e.g. '3,1'")
    p.add_argument("--class", dest="class_expr", help="numerator polynomial in psi1..psil")
    p.add_argument("--cone", help="cone generators (default: positive orthant)")
    p.add_argument("--ray", help="regularising ray")
    p.add_argument("--method", choices=("contour", "h"), default="contour")

    p = sub.add_parser("dh", help="Duistermaat-Heckman piecewise polynomial")
    common(p)
    p.add_argument("--cone", help="cone whose interior point orients the weights")

    p = sub.add_parser("verify", help="check the relation pairings vanish")
    common(p)

    p = sub.add_parser("witten", help="Gaussian decay experiment (rank one)")
    common(p)
    p.add_argument("--epsilon", help="comma-separated eps values", default=",".join(map(str, DEFAULT_EPS)))
    p.add_argument("--cone")

    p = sub.add_parser("critical", help="critical values B")
    common(p)

    p = sub.add_parser("export", help="write the model as JSON")
    p.add_argument("--model", required=True)
    p.add_argument("--format", dest="output", choices=("text", "json"), default="json")
    return parser


def job_from_args(ns: argparse.Namespace) -> JobSpec:
    eps = getattr(ns, "epsilon", None)
    if isinstance(eps, str):
        try:
            eps = tuple(float(x) for x in eps.split(",") if x.strip())
        except ValueError as exc:
            raise ParseError(f"bad --epsilon list {eps!r}") from exc
        if any(e <= 0 for e in eps):
            raise ParseError("epsilon values must be positive")
    return JobSpec(
        command=ns.command,
        model=getattr(ns, "model", None),
        class_expr=getattr(ns, "class_expr", None),
        cone=getattr(ns, "cone", None),
        ray=getattr(ns, "ray", None),
        epsilon=eps or DEFAULT_EPS,
        order=getattr(ns, "order", None),
        output=getattr(ns, "output", "text"),
        threads=getattr(ns, "threads", 1) or 1,
        betas=getattr(ns, "betas", None),
        lam=getattr(ns, "lam", None),
        method=getattr(ns, "method", "contour"),
    )


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        job = job_from_args(ns)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    report = run(job)
    if report.code and "error" in report.data:
        if job.output == "json":
            print(json.dumps(report.data, indent=2, sort_keys=True))
        else:
            print(report.text, file=sys.stderr)
        return report.code
    if job.output == "json" and job.command != "export":
        print(json.dumps(report.data, indent=2))
    else:
        print(report.text)
    return report.code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
