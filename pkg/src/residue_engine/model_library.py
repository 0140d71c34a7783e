"""Worked example models: products of projective lines, projective space
under SU(2), the three-weight rank-two residue and a flag-manifold torus model,
with restriction maps and relation generators for the SU(2) examples."""
from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction

from .errors import RegularityError
from .exact_algebra import (
    ONE,
    LinearForm,
    MultiPoly,
    Scalar,
    parse_polynomial,
)
from .localization_model import (
    FixedPointComponent,
    GroupData,
    LocalizationModel,
)
from .residue_core import MeromorphicTerm


def _require_odd(N: int) -> None:
    if N < 1 or N % 2 == 0:
        raise RegularityError(
            f"N={N}: 0 is a regular value only for odd N >= 1 "
            "(hypothesis: 0 is a regular value of the moment map)"
        )


# ---------------------------------------------------------------------------
# products of projective lines
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SignVector:
    entries: tuple

    def __post_init__(self):
        if any(e not in (1, -1) for e in self.entries):
            raise ValueError("sign vector entries must be +1 or -1")

    def __len__(self) -> int:
        return len(self.entries)

    def total(self) -> int:
        return sum(self.entries)

    def is_positive(self) -> bool:
        return self.total() > 0

    def label(self) -> str:
        return "e(" + ",".join("+" if e > 0 else "-" for e in self.entries) + ")"


def sign_vector(N: int, idx: int) -> SignVector:
    """Index -> signs, most significant bit first, 0 -> +1."""
    return SignVector(tuple(-1 if (idx >> (N - 1 - j)) & 1 else 1 for j in range(N)))


class P1PowerFixedPoints(Sequence):
    """The 2^N fixed points of (P^1)^N, generated on demand."""

    def __init__(self, N: int):
        self.N = N

    def __len__(self) -> int:
        return 1 << self.N

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return [self[i] for i in range(*idx.indices(len(self)))]
        if idx < 0:
            idx += len(self)
        if not 0 <= idx < len(self):
            raise IndexError(idx)
        sv = sign_vector(self.N, idx)
        plus = sum(1 for e in sv.entries if e > 0)
        minus = self.N - plus
        weights = []
        if plus:
            weights.append((LinearForm([1]), plus))
        if minus:
            weights.append((LinearForm([-1]), minus))
        return FixedPointComponent(
            label=sv.label(),
            moment_image=LinearForm([sv.total()]),
            weights=tuple(weights),
            key=sv.entries,
        )

    def __reduce__(self):
        return (P1PowerFixedPoints, (self.N,))


def build_p1_power(N: int) -> LocalizationModel:
    """(P^1)^N with the diagonal circle: mu(e_n) = sum n_j, weights {n_j}."""
    _require_odd(N)
    return LocalizationModel(GroupData.su2(), P1PowerFixedPoints(N), 2 * N, name=f"p1pow:{N}", check=False)


def example1_names(N: int) -> list[str]:
    return [f"xi{j + 1}" for j in range(N)] + ["alpha"]


def _as_example1_poly(N: int, expr) -> MultiPoly:
    if isinstance(expr, MultiPoly):
        if expr.nvars != N + 1:
            raise ValueError(f"expected a polynomial in {N + 1} variables")
        return expr
    names = example1_names(N)
    text = str(expr)
    # psi is accepted for alpha since both restrict to psi
    return parse_polynomial(text.replace("psi", "alpha"), names)


class Example1Restriction:
    """xi_j -> n_j psi, alpha -> psi at the fixed point e_n."""

    def __init__(self, N: int, poly: MultiPoly):
        self.N = N
        self.poly = poly
        # precompute (degree, coefficient, exponents of xi) per monomial
        self._monos = [(sum(e), c, e[:N]) for e, c in poly.terms.items()]

    def at(self, signs) -> MultiPoly:
        entries = signs.entries if isinstance(signs, SignVector) else tuple(signs)
        out: dict = {}
        for deg, c, ex in self._monos:
            neg = sum(k for k, s in zip(ex, entries) if s < 0)
            v = -c if neg % 2 else c
            out[(deg,)] = out[(deg,)] + v if (deg,) in out else v
        return MultiPoly(1, out)

    def restrict(self, fp: FixedPointComponent) -> MultiPoly:
        return self.at(fp.key)


def restrict_class_example1(N: int, expr) -> Example1Restriction:
    return Example1Restriction(N, _as_example1_poly(N, expr))


def relation_generators_example1(N: int, Q, q=1) -> MultiPoly:
    """(1/alpha) (q(xi, alpha) prod_{i in Q}(xi_i + alpha) - q(xi, -alpha) prod(xi_i - alpha))."""
    Q = sorted(set(Q))
    if any(not 1 <= i <= N for i in Q):
        raise ValueError(f"Q must be a subset of 1..{N}")
    if 2 * len(Q) < N + 1:
        raise ValueError(f"|Q| = {len(Q)} < (N+1)/2: not a relation")
    n = N + 1
    if not isinstance(q, MultiPoly):
        q = _as_example1_poly(N, q) if isinstance(q, str) else MultiPoly.constant(q, n)
    xs = [MultiPoly.variable(j, n) for j in range(N)]
    alpha = MultiPoly.variable(N, n)
    plus = MultiPoly.one(n)
    minus = MultiPoly.one(n)
    for i in Q:
        plus = plus * (xs[i - 1] + alpha)
        minus = minus * (xs[i - 1] - alpha)
    flip = xs + [-alpha]
    diff = q * plus - q.compose(flip) * minus
    return _divide_by_variable(diff, N)


def _divide_by_variable(p: MultiPoly, k: int) -> MultiPoly:
    out = {}
    for e, c in p.terms.items():
        if e[k] == 0:
            raise ArithmeticError("division by alpha is not exact")
        ne = list(e)
        ne[k] -= 1
        out[tuple(ne)] = c
    return MultiPoly(p.nvars, out)


# ---------------------------------------------------------------------------
# projective space under SU(2)
# ---------------------------------------------------------------------------


def build_projective_space(N: int) -> LocalizationModel:
    """P_N = P(S^N C^2): fixed points e_k with mu = N - 2k, weights 2(j - k)."""
    _require_odd(N)
    pts = []
    for k in range(N + 1):
        weights = tuple((LinearForm([2 * (j - k)]), 1) for j in range(N + 1) if j != k)
        pts.append(
            FixedPointComponent(
                label=f"e{k}",
                moment_image=LinearForm([N - 2 * k]),
                weights=weights,
                key=(k,),
            )
        )
    return LocalizationModel(GroupData.su2(), pts, 2 * N, name=f"projN:{N}")


EXAMPLE2_NAMES = ["xi", "alpha"]


class Example2Restriction:
    """xi -> mu_k psi, alpha -> psi at e_k."""

    def __init__(self, N: int, poly: MultiPoly):
        self.N = N
        self.poly = poly

    def at(self, k: int) -> MultiPoly:
        mu = self.N - 2 * k
        out: dict = {}
        for (a, b), c in self.poly.terms.items():
            v = c * Fraction(mu) ** a
            key = (a + b,)
            out[key] = out[key] + v if key in out else v
        return MultiPoly(1, out)

    def restrict(self, fp: FixedPointComponent) -> MultiPoly:
        return self.at(fp.key[0])


def restrict_class_example2(N: int, expr) -> Example2Restriction:
    if not isinstance(expr, MultiPoly):
        expr = parse_polynomial(str(expr).replace("psi", "alpha"), EXAMPLE2_NAMES)
    return Example2Restriction(N, expr)


def relation_generators_example2(N: int) -> tuple[MultiPoly, MultiPoly]:
    """(P_+, P_-/alpha) with P = prod_{k > N/2} (xi + mu_k alpha)."""
    _require_odd(N)
    xi = MultiPoly.variable(0, 2)
    alpha = MultiPoly.variable(1, 2)
    P = MultiPoly.one(2)
    for k in range(N + 1):
        if 2 * k > N:
            P = P * (xi + alpha.scale(N - 2 * k))
    Pneg = P.compose([xi, -alpha])
    return P + Pneg, _divide_by_variable(P - Pneg, 1)


def example2_monomials(degree: int) -> list[MultiPoly]:
    """Monomials xi^a alpha^(2b) of the given total degree."""
    out = []
    for b in range(degree // 2 + 1):
        a = degree - 2 * b
        out.append(MultiPoly.monomial((a, 2 * b)))
    return out


def binomial_vanishing(r: int, s: int) -> Scalar:
    """sum_{k=0}^r k^s (-1)^k C(r, k) with 0^0 = 1."""
    if r < 0 or s < 0:
        raise ValueError("r and s must be nonnegative")
    return Scalar(sum((k ** s) * (-1) ** k * math.comb(r, k) for k in range(r + 1)))


# ---------------------------------------------------------------------------
# rank two examples
# ---------------------------------------------------------------------------


def build_su3_example_terms(lam=(3, 1)) -> list[MeromorphicTerm]:
    """exp(i lambda(psi)) / (psi1 psi2 (psi1 + psi2))."""
    return [MeromorphicTerm(MultiPoly.one(2), [[1, 0], [0, 1], [1, 1]], lam)]


SU3_DEMO_LAMBDA = (4, 1, -5)


def _to_coords(x) -> LinearForm:
    # functional on diag(t1,t2,t3) -> values on h1 = diag(1,0,-1), h2 = diag(0,1,-1)
    return LinearForm([x[0] - x[2], x[1] - x[2]])


def build_su3_demo(lam=SU3_DEMO_LAMBDA) -> LocalizationModel:
    """Full flag manifold of SU(3) through the orbit of lam, as a T^2 model."""
    lam = tuple(Fraction(x) for x in lam)
    if sum(lam) != 0 or len(set(lam)) != 3:
        raise ValueError("lambda must be regular with zero trace")
    positive = [(0, 1), (0, 2), (1, 2)]
    pts = []
    for perm in itertools.permutations(range(3)):
        wl = tuple(lam[perm.index(j)] for j in range(3))
        weights = []
        for a, b in positive:
            root = [0, 0, 0]
            root[perm[a]] += 1
            root[perm[b]] -= 1
            weights.append((_to_coords(root), 1))
        label = "w" + "".join(str(p + 1) for p in perm)
        pts.append(FixedPointComponent(label=label, moment_image=_to_coords(wl), weights=tuple(weights), key=perm))
    return LocalizationModel(GroupData.torus(2), pts, 6, name="su3demo")
