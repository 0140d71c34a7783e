"""Residues of rational-times-exponential integrands.

``jk_residue`` evaluates the cone-regularised residue by eliminating one
variable at a time: for each variable the real contour is closed in the
half-plane where the exponential decays, and the poles enclosed are those of
denominator forms that the shifted contour passes below (upper closure) or
above (lower closure).  ``jk_residue_via_h`` computes the same quantity from
the vector-partition density and is kept as an independent cross-check.
"""
from __future__ import annotations

import math
from itertools import combinations
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from .cone_calculus import WeightSystem, h_function, probe_directions
from .errors import (
    DimensionError,
    NonAdmissibleError,
    NonGenericError,
    NonSpanningError,
    RegularityError,
    WallError,
)
from .exact_algebra import (
    ONE,
    ZERO,
    LinearForm,
    MultiPoly,
    Scalar,
    as_form,
    as_fraction,
    i_power,
    rank,
    rational_solve,
)


class MeromorphicTerm:
    """``numerator(psi) * exp(i*lambda(psi)) / prod beta_j(psi)**n_j``."""

    __slots__ = ("numerator", "denominator", "exponent")

    def __init__(self, numerator, denominator: Iterable = (), exponent=None):
        den = []
        for item in denominator:
            if isinstance(item, tuple) and len(item) == 2 and isinstance(item[1], int):
                form, power = as_form(item[0]), item[1]
            else:
                form, power = as_form(item), 1
            if form.is_zero():
                raise ValueError("denominator forms must be nonzero")
            if power < 1:
                raise ValueError("denominator powers must be positive")
            den.append((form, power))
        if isinstance(numerator, MultiPoly):
            l = numerator.nvars
        elif den:
            l = den[0][0].dim
        elif exponent is not None:
            l = as_form(exponent).dim
        else:
            raise DimensionError("cannot infer the rank of a constant term")
        if not isinstance(numerator, MultiPoly):
            numerator = MultiPoly.constant(numerator, l)
        exponent = LinearForm.zero(l) if exponent is None else as_form(exponent)
        if exponent.dim != l or any(f.dim != l for f, _ in den):
            raise DimensionError("numerator, denominator and exponent ranks differ")
        self.numerator = numerator
        self.denominator = tuple(den)
        self.exponent = exponent

    @property
    def rank(self) -> int:
        return self.numerator.nvars

    def pole_order(self) -> int:
        return sum(n for _, n in self.denominator)

    def with_numerator(self, num: MultiPoly) -> "MeromorphicTerm":
        return MeromorphicTerm(num, self.denominator, self.exponent)

    def with_exponent(self, lam) -> "MeromorphicTerm":
        return MeromorphicTerm(self.numerator, self.denominator, lam)

    def scale(self, c) -> "MeromorphicTerm":
        return self.with_numerator(self.numerator.scale(c))

    def __repr__(self) -> str:
        den = " * ".join(f"({f.to_text()})^{n}" for f, n in self.denominator) or "1"
        return f"MeromorphicTerm(({self.numerator.to_text()}) e^(i<{self.exponent.to_text()},psi>) / {den})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MeromorphicTerm)
            and self.numerator == other.numerator
            and self.denominator == other.denominator
            and self.exponent == other.exponent
        )

    def __hash__(self) -> int:
        return hash((self.numerator, self.denominator, self.exponent))

    def __reduce__(self):
        return (MeromorphicTerm, (self.numerator, self.denominator, self.exponent))


@dataclass(frozen=True)
class ConeSpec:
    """A proper cone in the torus Lie algebra and a point of its interior."""

    generators: tuple
    interior_point: LinearForm

    def __init__(self, generators: Iterable, interior_point=None):
        gens = tuple(as_form(g) for g in generators)
        if not gens:
            raise DimensionError("a cone needs generators")
        dim = gens[0].dim
        if any(g.dim != dim for g in gens):
            raise DimensionError("cone generators of different lengths")
        if rank([g.coeffs for g in gens]) != dim:
            raise NonAdmissibleError("cone generators must span the Lie algebra")
        if interior_point is None:
            xi = gens[0]
            for g in gens[1:]:
                xi = xi + g
        else:
            xi = as_form(interior_point)
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "interior_point", xi)

    @classmethod
    def orthant(cls, dim: int) -> "ConeSpec":
        return cls([LinearForm.basis(k, dim) for k in range(dim)])

    @property
    def dim(self) -> int:
        return self.generators[0].dim

    def candidate_points(self) -> list[LinearForm]:
        """The interior point first, then further deterministic interior points."""
        pts = [self.interior_point]
        n = len(self.generators)
        for shift in range(1, 12):
            weights = [Fraction(1 + ((j * shift) % (n + 3)), 1 + shift) + j * Fraction(1, 7 + shift) for j in range(n)]
            xi = LinearForm.zero(self.dim)
            for w, g in zip(weights, self.generators):
                xi = xi + g.scale(w)
            pts.append(xi)
        return pts

    def text(self) -> str:
        return "; ".join(g.to_text() for g in self.generators)


@dataclass(frozen=True)
class RaySpec:
    """Perturbation direction rho: the residue is read at lambda + t*rho, t -> 0+."""

    rho: LinearForm

    def __init__(self, rho):
        rho = as_form(rho)
        if rho.is_zero():
            raise ValueError("the regularising ray must be nonzero")
        object.__setattr__(self, "rho", rho)


def _as_ray(ray) -> LinearForm | None:
    if ray is None:
        return None
    if isinstance(ray, RaySpec):
        return ray.rho
    return RaySpec(ray).rho


# ---------------------------------------------------------------------------
# rank one
# ---------------------------------------------------------------------------


def residue_rank1(term: MeromorphicTerm) -> Scalar:
    """Coefficient of 1/psi picked up by the contour closed on the side where
    ``exp(i*mu*psi)`` decays (zero for mu < 0)."""
    if term.rank != 1:
        raise DimensionError("residue_rank1 needs a rank-one term")
    mu = term.exponent[0]
    n = term.pole_order()
    denom_const = Fraction(1)
    for f, p in term.denominator:
        denom_const *= f[0] ** p
    coeffs = {e[0]: c for e, c in term.numerator.terms.items()}
    return rank1_residue_from_coeffs(coeffs, mu, n, denom_const)


def rank1_residue_from_coeffs(coeffs: dict, mu: Fraction, n: int, denom_const) -> Scalar:
    """Residue of ``sum_d c_d psi^d * exp(i mu psi) / (denom_const * psi^n)``."""
    has_pole = any(d < n for d, c in coeffs.items() if c)
    if not has_pole:
        return ZERO
    if mu == 0:
        raise RegularityError(
            "moment image zero: 0 is not a regular value for this term "
            "(hypothesis: 0 is a regular value of the moment map)"
        )
    if mu < 0:
        return ZERO
    total = ZERO
    for d, c in coeffs.items():
        m = n - d - 1
        if m < 0 or not c:
            continue
        total = total + c * i_power(m) * (Fraction(mu) ** m / math.factorial(m))
    return total / denom_const if denom_const != 1 else total


# ---------------------------------------------------------------------------
# admissibility
# ---------------------------------------------------------------------------


def admissible(terms: Iterable[MeromorphicTerm], cone: ConeSpec) -> bool:
    """True iff every denominator form is sign-definite on the open cone."""
    for t in terms:
        for form, _ in t.denominator:
            if not _form_definite(form, cone):
                return False
    return True


def _form_definite(form: LinearForm, cone: ConeSpec) -> bool:
    vals = [form.dot(g.coeffs) for g in cone.generators]
    return (all(v >= 0 for v in vals) or all(v <= 0 for v in vals)) and any(vals)


def check_ray_generic(terms: Iterable[MeromorphicTerm], ray) -> bool:
    """rho is not in the span of any l-1 denominator forms of a term."""
    rho = _as_ray(ray)
    for t in terms:
        forms = [f.coeffs for f, _ in t.denominator]
        l = t.rank
        for sub in combinations(forms, max(l - 1, 0)):
            if rank(list(sub) + [rho.coeffs]) <= max(l - 1, 0) and (l == 1 or rank(list(sub)) == l - 1):
                return False
    return True


# ---------------------------------------------------------------------------
# iterated contour residue
# ---------------------------------------------------------------------------


def on_wall(lam: LinearForm, forms: Sequence[LinearForm]) -> bool:
    """Is lam in a cone spanned by l-1 linearly independent forms?"""
    l = lam.dim
    if l == 1:
        return lam.is_zero()
    distinct = sorted({f.canonical()[1] if f.canonical()[0] > 0 else -f.canonical()[1] for f in forms})
    for sub in combinations(distinct, l - 1):
        rows = [f.coeffs for f in sub]
        if rank(rows) != l - 1 or rank(rows + [lam.coeffs]) != l - 1:
            continue
        # coefficients of lam in the basis sub (least-squares normal equations are exact here)
        gram = [[_fdot(a, b) for b in rows] for a in rows]
        rhs = [_fdot(a, lam.coeffs) for a in rows]
        coef = rational_solve(gram, rhs)
        if all(c >= 0 for c in coef):
            return True
    return False


def _fdot(a, b) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def _require_off_walls(term: MeromorphicTerm, cone: ConeSpec) -> None:
    xi = cone.interior_point.coeffs
    flipped = [f if f.dot(xi) > 0 else -f for f, _ in term.denominator]
    if flipped and term.pole_order() >= term.rank and on_wall(term.exponent, flipped):
        raise NonGenericError(
            f"exponent {term.exponent.to_text()} lies on a wall of the denominator "
            "family; a regularising ray is required"
        )


class _Degenerate(Exception):
    """A pole landed on the shifted contour; retry with another interior point."""


def _canonical_denominator(num: MultiPoly, den: Iterable) -> tuple[MultiPoly, tuple]:
    merged: dict = {}
    scale = Fraction(1)
    for form, power in den:
        coeffs = form.coeffs if isinstance(form, LinearForm) else tuple(form)
        lead = next(c for c in coeffs if c)
        canon = tuple(c / lead for c in coeffs)
        scale *= lead ** power
        merged[canon] = merged.get(canon, 0) + power
    if scale != 1:
        num = num.scale(Scalar(1 / scale))
    return num, tuple(sorted(merged.items()))


def _side(k: int, lam, rho, num: MultiPoly, den) -> int:
    if lam[k]:
        return 1 if lam[k] > 0 else -1
    if rho is not None and rho[k]:
        return 1 if rho[k] > 0 else -1
    degree = num.degree_in(k) - sum(p for f, p in den if f[k])
    if degree <= -2:
        return 1
    raise NonGenericError(
        f"exponent coefficient of psi{k + 1} vanishes and no ray decides the contour; "
        "supply a generic ray (the residue is only defined off the walls)"
    )


def _binom_neg(m: int, j: int) -> int:
    """C(-m, j)."""
    return (-1) ** j * math.comb(m + j - 1, j)


def _eliminate(k: int, num, den, lam, rho, xi, out: dict) -> None:
    side = _side(k, lam, rho, num, den)
    poles = [(f, p) for f, p in den if f[k]]
    if not poles:
        return
    for f, n in poles:
        val = sum((a * b for a, b in zip(f, xi)), Fraction(0)) / f[k]
        if val == 0:
            raise _Degenerate()
        if (val > 0) != (side > 0):
            continue
        # pole at psi_k = P(psi), P has zero k-th coefficient
        P = tuple(Fraction(0) if j == k else -f[j] / f[k] for j in range(len(f)))
        subs = [MultiPoly.variable(j, num.nvars) for j in range(num.nvars)]
        subs[k] = LinearForm(P).as_poly()
        taylor = []
        deriv = num
        for a in range(n):
            if deriv.is_zero():
                break
            taylor.append(deriv.compose(subs).scale(Scalar(Fraction(1, math.factorial(a)))))
            deriv = deriv.diff(k)
        moving = []
        fixed = []
        for g, m in den:
            if g == f:
                continue
            if g[k]:
                g2 = tuple(Fraction(0) if j == k else g[j] + g[k] * P[j] for j in range(len(g)))
                moving.append((g2, g[k], m))
            else:
                fixed.append((g, m))
        lam2 = tuple(Fraction(0) if j == k else lam[j] + lam[k] * P[j] for j in range(len(lam)))
        rho2 = None
        if rho is not None:
            rho2 = tuple(Fraction(0) if j == k else rho[j] + rho[k] * P[j] for j in range(len(rho)))
        ilk = Scalar(0, lam[k])
        scale = Scalar(1 / f[k] ** n) * side
        target = n - 1
        for a, tpoly in enumerate(taylor):
            rem = target - a
            for js in _distribute(rem, len(moving) + 1):
                b = js[0]
                coef = (ilk ** b) * Fraction(1, math.factorial(b)) * scale
                new_den = list(fixed)
                for (g2, gk, m), j in zip(moving, js[1:]):
                    coef = coef * (_binom_neg(m, j) * gk ** j)
                    new_den.append((g2, m + j))
                if not coef:
                    continue
                num2, den2 = _canonical_denominator(tpoly.scale(coef), new_den)
                key = (den2, lam2, rho2)
                out[key] = out[key] + num2 if key in out else num2


def _distribute(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _distribute(total - first, parts - 1):
            yield (first,) + rest


def _term_residue(term: MeromorphicTerm, order: Sequence[int], xi, rho) -> Scalar:
    num, den = _canonical_denominator(term.numerator, term.denominator)
    lam = term.exponent.coeffs
    rho_t = rho.coeffs if rho is not None else None
    current = {(den, lam, rho_t): num}
    for k in order:
        nxt: dict = {}
        for (d, lm, rh), p in current.items():
            if p.is_zero():
                continue
            _eliminate(k, p, d, lm, rh, xi, nxt)
        current = nxt
        if not current:
            return ZERO
    total = ZERO
    for (d, _, _), p in current.items():
        if d:
            raise AssertionError("denominator survived full elimination")
        total = total + p.constant_term()
    return total


def jk_residue(
    terms: Iterable[MeromorphicTerm],
    cone: ConeSpec,
    ray=None,
    order: Sequence[int] | None = None,
) -> Scalar:
    """Cone-regularised iterated residue, normalised by 1/(2 pi i)^l."""
    terms = list(terms)
    if not terms:
        return ZERO
    l = terms[0].rank
    if cone.dim != l or any(t.rank != l for t in terms):
        raise DimensionError("terms and cone have different ranks")
    if not admissible(terms, cone):
        raise NonAdmissibleError(
            "a denominator form vanishes inside the cone (hypothesis: the integrand "
            "is holomorphic on the shifted cone interior)"
        )
    order = list(range(l)) if order is None else list(order)
    if sorted(order) != list(range(l)):
        raise ValueError(f"order must be a permutation of 0..{l - 1}")
    rho = _as_ray(ray)
    if rho is not None and rho.dim != l:
        raise DimensionError("ray has the wrong length")
    total = ZERO
    candidates = cone.candidate_points()
    for term in terms:
        if rho is None:
            _require_off_walls(term, cone)
        for xi in candidates:
            try:
                total = total + _term_residue(term, order, xi.coeffs, rho)
                break
            except _Degenerate:
                continue
        else:  # pragma: no cover - requires a pathological cone
            raise NonGenericError("every trial contour passes through a pole")
    return total


# ---------------------------------------------------------------------------
# the same residue from H functions
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def calibration_constant(l: int) -> Scalar:
    """c_l with residue = c_l * i^(N-l) * H(lambda); fixed on the identity basis."""
    basis = [LinearForm.basis(k, l) for k in range(l)]
    lam = LinearForm([1] * l)
    term = MeromorphicTerm(MultiPoly.one(l), basis, lam)
    contour = jk_residue([term], ConeSpec.orthant(l))
    h = h_function(WeightSystem(basis)).evaluate(lam.coeffs)
    return contour / h


def jk_residue_via_h(
    terms: Iterable[MeromorphicTerm],
    cone: ConeSpec,
    ray=None,
) -> Scalar:
    """Residue computed as c_l * i^(N-l) * (-i d/dlambda)^J H(lambda)."""
    terms = list(terms)
    if not terms:
        return ZERO
    l = terms[0].rank
    if not admissible(terms, cone):
        raise NonAdmissibleError(
            "a denominator form vanishes inside the cone (hypothesis: the integrand "
            "is holomorphic on the shifted cone interior)"
        )
    rho = _as_ray(ray)
    if rho is None:
        for term in terms:
            _require_off_walls(term, cone)
    kappa = calibration_constant(l)
    xi = cone.interior_point
    total = ZERO
    for term in terms:
        flips = 1
        betas = []
        for form, n in term.denominator:
            s = form.dot(xi.coeffs)
            if s == 0:
                raise NonGenericError("cone interior point lies on a denominator hyperplane")
            if s < 0:
                form = -form
                flips *= (-1) ** n
            betas.append((form, n))
        N = term.pole_order()
        ws = WeightSystem(betas) if betas else None
        if ws is None or N < l or not ws.is_spanning():
            # lower-dimensional measure: the regularised value is zero
            continue
        H = h_function(ws)
        lam = term.exponent.coeffs
        for e, c in term.numerator.terms.items():
            d = sum(e)
            if d > N - l:
                # derivative of order above the degree kills the polynomial
                continue
            value = _derivative_value(H, e, lam, rho)
            total = total + c * i_power(-d) * value * i_power(N - l) * kappa * flips
    return total


def _derivative_value(H, e, lam, rho) -> Scalar:
    D = H.map_polys(lambda p: p.diff_multi(e))
    if rho is not None:
        try:
            return D.evaluate(lam, rho.coeffs)
        except WallError as exc:
            raise NonGenericError(f"ray runs along a wall of the chamber complex: {exc}") from exc
    try:
        return D.evaluate(lam)
    except WallError as exc:
        raise NonGenericError(
            f"lambda lies on a wall and no ray was given: {exc}"
        ) from exc
