"""Piecewise polynomials on cones.

The central object is :class:`PiecewisePolynomial`, a formal sum of
polynomials each supported on a closed simplicial cone (a :class:`Chamber`,
possibly with a shifted apex).  ``h_function`` builds the vector-partition
density of a weight system by repeated ray convolution, computing the
polynomial on each chamber by exact interpolation.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import mpmath

from .errors import (
    DimensionError,
    HalfSpaceError,
    NonSpanningError,
    WallError,
)
from .exact_algebra import (
    I,
    ONE,
    ZERO,
    LinearForm,
    MultiPoly,
    Scalar,
    as_form,
    as_fraction,
    i_power,
    rank,
    rational_det,
    rational_solve,
)


# ---------------------------------------------------------------------------
# small exact geometry helpers
# ---------------------------------------------------------------------------


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def _dot(a: Sequence, b: Sequence) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def _inverse(cols: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    """Inverse of the matrix whose *columns* are ``cols``."""
    n = len(cols)
    m = [[cols[j][i] for j in range(n)] + [Fraction(int(i == k)) for k in range(n)] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col]), None)
        if piv is None:
            raise ZeroDivisionError("dependent generators")
        m[col], m[piv] = m[piv], m[col]
        inv = 1 / m[col][col]
        m[col] = [x * inv for x in m[col]]
        for r in range(n):
            if r != col and m[r][col]:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [row[n:] for row in m]


def normal_vector(vectors: Sequence[Sequence[Fraction]], dim: int) -> tuple[Fraction, ...]:
    """A nonzero vector orthogonal to ``vectors`` (which span a hyperplane).

    Computed by cofactor expansion so it is exact and deterministic; the
    result is scaled to have first nonzero entry 1.
    """
    if len(vectors) != dim - 1:
        raise DimensionError("need dim-1 vectors for a hyperplane normal")
    normal = []
    for k in range(dim):
        minor = [[v[j] for j in range(dim) if j != k] for v in vectors]
        normal.append((-1) ** k * rational_det(minor) if minor else Fraction(1))
    lead = next((x for x in normal if x), None)
    if lead is None:
        raise NonSpanningError("vectors do not span a hyperplane")
    return tuple(x / lead for x in normal)


def closest_point_of_hull(points: Sequence[Sequence]) -> tuple[Fraction, ...]:
    """Exact closest point to the origin of the convex hull of ``points``.

    The minimiser lies in the relative interior of a face spanned by an
    affinely independent subset of at most dim+1 points, so enumerating those
    subsets and keeping feasible affine-hull minimisers is exact.
    """
    pts = sorted({tuple(as_fraction(x) for x in p) for p in points})
    if not pts:
        raise ValueError("empty point set")
    best = None
    for cand in hull_face_minimisers(pts):
        n2 = _dot(cand, cand)
        if best is None or n2 < best[0] or (n2 == best[0] and cand < best[1]):
            best = (n2, cand)
    return best[1]


def hull_face_minimisers(pts: Sequence[tuple]) -> Iterable[tuple[Fraction, ...]]:
    """Yield the closest point to 0 of conv(S) for every affinely independent
    subset S whose affine-hull minimiser has nonnegative barycentric weights."""
    dim = len(pts[0])
    for size in range(1, min(dim + 1, len(pts)) + 1):
        for sub in itertools.combinations(pts, size):
            sol = _affine_minimiser(sub)
            if sol is not None:
                yield sol


def _affine_minimiser(sub: Sequence[tuple]) -> tuple[Fraction, ...] | None:
    # minimise |sum w_i a_i|^2 subject to sum w_i = 1:
    # Gram system [G 1; 1^T 0][w; nu] = [0; 1]
    k = len(sub)
    if k == 1:
        return sub[0]
    base = sub[0]
    diffs = [tuple(a - b for a, b in zip(p, base)) for p in sub[1:]]
    if rank(diffs) < k - 1:
        return None
    mat = [[_dot(a, b) for b in sub] + [Fraction(1)] for a in sub]
    mat.append([Fraction(1)] * k + [Fraction(0)])
    rhs = [Fraction(0)] * k + [Fraction(1)]
    try:
        w = rational_solve(mat, rhs)[:k]
    except ZeroDivisionError:
        return None
    if any(x < 0 for x in w):
        return None
    dim = len(base)
    return tuple(sum((w[i] * sub[i][j] for i in range(k)), Fraction(0)) for j in range(dim))


def probe_directions(dim: int) -> list[tuple[Fraction, ...]]:
    """Deterministic, generic-looking directions for one-sided limits."""
    if dim == 1:
        return [(Fraction(1),), (Fraction(-1),)]
    bases = [
        [Fraction(1), Fraction(31, 17), Fraction(53, 29), Fraction(71, 41), Fraction(97, 59)],
        [Fraction(43, 37), Fraction(1), Fraction(19, 23), Fraction(61, 67), Fraction(13, 11)],
    ]
    out = []
    for base in bases:
        b = (base * ((dim // len(base)) + 1))[:dim]
        for signs in itertools.product((1, -1), repeat=dim):
            out.append(tuple(s * x for s, x in zip(signs, b)))
    return out


# ---------------------------------------------------------------------------
# Chambers and piecewise polynomials
# ---------------------------------------------------------------------------


class Chamber:
    """Closed simplicial cone ``apex + cone(generators)``."""

    __slots__ = ("generators", "apex", "_inv")

    def __init__(self, generators: Sequence, apex: Sequence | None = None):
        gens = tuple(tuple(as_fraction(x) for x in as_form(g)) for g in generators)
        dim = len(gens)
        if dim == 0 or any(len(g) != dim for g in gens):
            raise DimensionError("a chamber needs dim generators of length dim")
        self.generators = gens
        self.apex = tuple(as_fraction(x) for x in apex) if apex is not None else (Fraction(0),) * dim
        if len(self.apex) != dim:
            raise DimensionError("apex has the wrong length")
        try:
            self._inv = _inverse(gens)
        except ZeroDivisionError as exc:
            raise NonSpanningError("chamber generators are linearly dependent") from exc

    @property
    def dim(self) -> int:
        return len(self.generators)

    def coords(self, y: Sequence) -> list[Fraction]:
        d = [as_fraction(a) - b for a, b in zip(y, self.apex)]
        return [_dot(row, d) for row in self._inv]

    def direction_coords(self, v: Sequence) -> list[Fraction]:
        return [_dot(row, [as_fraction(x) for x in v]) for row in self._inv]

    def contains(self, y: Sequence) -> bool:
        return all(c >= 0 for c in self.coords(y))

    def contains_interior(self, y: Sequence) -> bool:
        return all(c > 0 for c in self.coords(y))

    def contains_toward(self, y: Sequence, direction: Sequence) -> bool | None:
        """Does ``y + t*direction`` lie in the chamber for all small t > 0?

        ``None`` means the answer depends on higher-order information (the
        direction runs along a face through ``y``).
        """
        c = self.coords(y)
        if any(x < 0 for x in c):
            return False
        if all(x > 0 for x in c):
            return True
        e = self.direction_coords(direction)
        ambiguous = False
        for ci, ei in zip(c, e):
            if ci == 0:
                if ei < 0:
                    return False
                if ei == 0:
                    ambiguous = True
        return None if ambiguous else True

    def key(self) -> tuple:
        return (self.generators, self.apex)

    def __eq__(self, other) -> bool:
        return isinstance(other, Chamber) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"Chamber(generators={[list(map(str, g)) for g in self.generators]}, apex={list(map(str, self.apex))})"

    def __reduce__(self):
        return (Chamber, (self.generators, self.apex))


class PiecewisePolynomial:
    """Formal sum of (chamber, polynomial) pieces in ``dim`` variables.

    The value at a point is the sum of the polynomials of all pieces whose
    closed chamber contains the point; on a chamber boundary the one-sided
    limits are compared and must agree.
    """

    def __init__(self, dim: int, pieces: Iterable = (), betas: tuple | None = None):
        self.dim = dim
        plist = []
        for ch, poly in pieces:
            if ch.dim != dim or poly.nvars != dim:
                raise DimensionError("piece does not match the ambient dimension")
            if not poly.is_zero():
                plist.append((ch, poly))
        self.pieces = tuple(plist)
        # weight system this was built from, when it is an H function
        self.betas = betas

    # -- evaluation ------------------------------------------------------
    def evaluate(self, y: Sequence, direction: Sequence | None = None) -> Scalar:
        y = [as_fraction(x) for x in y]
        if len(y) != self.dim:
            raise DimensionError(f"point has length {len(y)}, expected {self.dim}")
        if direction is not None:
            return self._value_toward(y, direction)
        total = ZERO
        on_boundary = False
        for ch, poly in self.pieces:
            c = ch.coords(y)
            if any(x < 0 for x in c):
                continue
            if all(x > 0 for x in c):
                total = total + poly.evaluate(y)
            else:
                on_boundary = True
                break
        if not on_boundary:
            return total
        values = set()
        for d in probe_directions(self.dim):
            try:
                values.add(self._value_toward(y, d))
            except WallError:
                continue
        if len(values) != 1:
            raise WallError(
                f"point {[str(x) for x in y]} lies on a wall where the pieces disagree"
            )
        return values.pop()

    __call__ = evaluate

    def _pieces_toward(self, y, direction) -> list:
        out = []
        for ch, poly in self.pieces:
            inside = ch.contains_toward(y, direction)
            if inside is None:
                raise WallError("direction runs along a wall; choose a generic direction")
            if inside:
                out.append(poly)
        return out

    def _value_toward(self, y, direction) -> Scalar:
        total = ZERO
        for poly in self._pieces_toward(y, direction):
            total = total + poly.evaluate(y)
        return total

    def local_polynomial(self, y: Sequence, direction: Sequence) -> MultiPoly:
        """The polynomial that represents the function on ``y + t*direction``, small t > 0."""
        y = [as_fraction(x) for x in y]
        total = MultiPoly.zero(self.dim)
        for poly in self._pieces_toward(y, direction):
            total = total + poly
        return total

    def germ_along(self, y: Sequence, direction: Sequence) -> MultiPoly:
        """Univariate polynomial ``t -> f(y + t*direction)`` for small t > 0."""
        local = self.local_polynomial(y, direction)
        subs = [
            MultiPoly(1, {(0,): as_fraction(a), (1,): as_fraction(b)})
            for a, b in zip(y, direction)
        ]
        return local.compose(subs)

    # -- algebra --------------------------------------------------------
    def __add__(self, other: "PiecewisePolynomial") -> "PiecewisePolynomial":
        if other.dim != self.dim:
            raise DimensionError("piecewise polynomials of different dimension")
        return PiecewisePolynomial(self.dim, self.pieces + other.pieces)

    def __neg__(self) -> "PiecewisePolynomial":
        return self.scale(-ONE)

    def __sub__(self, other: "PiecewisePolynomial") -> "PiecewisePolynomial":
        return self + (-other)

    def scale(self, c) -> "PiecewisePolynomial":
        c = Scalar.coerce(c)
        return PiecewisePolynomial(self.dim, [(ch, p.scale(c)) for ch, p in self.pieces], self.betas if c == ONE else None)

    def map_polys(self, fn) -> "PiecewisePolynomial":
        return PiecewisePolynomial(self.dim, [(ch, fn(p)) for ch, p in self.pieces])

    def multiply_poly(self, q: MultiPoly) -> "PiecewisePolynomial":
        return self.map_polys(lambda p: p * q)

    @classmethod
    def polynomial_everywhere(cls, poly: MultiPoly) -> "PiecewisePolynomial":
        """A global polynomial as a sum over the orthants (walls have measure zero)."""
        dim = poly.nvars
        pieces = []
        for signs in itertools.product((1, -1), repeat=dim):
            gens = [[s if j == k else 0 for j in range(dim)] for k, s in enumerate(signs)]
            pieces.append((Chamber(gens), poly))
        return cls(dim, pieces)

    # -- rank one helpers ----------------------------------------------
    def intervals(self) -> list[tuple[Fraction | None, Fraction | None, MultiPoly]]:
        """Rank one: ``(lo, hi, poly)`` on maximal open intervals (None = infinite)."""
        if self.dim != 1:
            raise DimensionError("intervals() needs a rank-one piecewise polynomial")
        cuts = sorted({ch.apex[0] for ch, _ in self.pieces})
        if not cuts:
            return []
        bounds = [None] + cuts + [None]
        out = []
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            if lo is None:
                mid = hi - 1
            elif hi is None:
                mid = lo + 1
            else:
                mid = (lo + hi) / 2
            poly = MultiPoly.zero(1)
            for ch, p in self.pieces:
                if ch.contains_interior((mid,)):
                    poly = poly + p
            if poly.is_zero():
                continue
            if out and out[-1][1] == lo and out[-1][2] == poly:
                out[-1] = (out[-1][0], hi, poly)
            else:
                out.append((lo, hi, poly))
        return out

    @classmethod
    def from_intervals(cls, items: Iterable) -> "PiecewisePolynomial":
        """Rank one constructor from ``(lo, hi, poly)`` with None for infinite ends."""
        pieces = []
        for lo, hi, poly in items:
            if lo is None and hi is None:
                pieces.append((Chamber([[1]]), poly))
                pieces.append((Chamber([[-1]]), poly))
            elif lo is None:
                pieces.append((Chamber([[-1]], [hi]), poly))
            elif hi is None:
                pieces.append((Chamber([[1]], [lo]), poly))
            else:
                if as_fraction(hi) <= as_fraction(lo):
                    continue
                pieces.append((Chamber([[1]], [lo]), poly))
                pieces.append((Chamber([[1]], [hi]), -poly))
        return cls(1, pieces)

    # -- text -----------------------------------------------------------
    def sorted_pieces(self) -> list:
        return sorted(self.pieces, key=lambda cp: (cp[0].generators, cp[0].apex, cp[1].to_text()))

    def to_text(self, names: Sequence[str] | None = None) -> str:
        if names is None:
            names = [f"y{k + 1}" for k in range(self.dim)]
        lines = []
        for ch, poly in self.sorted_pieces():
            gens = "; ".join(",".join(_q(x) for x in g) for g in ch.generators)
            apex = ",".join(_q(x) for x in ch.apex)
            lines.append(f"apex [{apex}] generators [{gens}] : {poly.to_text(names)}")
        return "\n".join(lines)

    def to_json(self, names: Sequence[str] | None = None) -> list:
        if names is None:
            names = [f"y{k + 1}" for k in range(self.dim)]
        return [
            {
                "apex": [_q(x) for x in ch.apex],
                "generators": [[_q(x) for x in g] for g in ch.generators],
                "polynomial": poly.to_text(names),
            }
            for ch, poly in self.sorted_pieces()
        ]

    def __repr__(self) -> str:
        return f"PiecewisePolynomial(dim={self.dim}, pieces={len(self.pieces)})"


def _q(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


# ---------------------------------------------------------------------------
# Weight systems and the H function
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightSystem:
    """Weights with multiplicities, all expected in one open half-space."""

    betas: tuple = field(default_factory=tuple)

    def __init__(self, betas: Iterable):
        items = []
        for b in betas:
            if isinstance(b, tuple) and len(b) == 2 and isinstance(b[1], int) and not isinstance(b[0], (int, Fraction)):
                form, mult = as_form(b[0]), b[1]
            else:
                form, mult = as_form(b), 1
            if mult < 1:
                raise ValueError("multiplicities must be positive")
            items.append((form, mult))
        dims = {f.dim for f, _ in items}
        if len(dims) > 1:
            raise DimensionError("weights of different lengths")
        object.__setattr__(self, "betas", tuple(items))

    @property
    def dim(self) -> int:
        if not self.betas:
            raise DimensionError("empty weight system has no dimension")
        return self.betas[0][0].dim

    def expanded(self) -> list[LinearForm]:
        return [f for f, m in self.betas for _ in range(m)]

    def half_space_point(self) -> LinearForm:
        """A point xi with beta(xi) > 0 for every weight, or HalfSpaceError."""
        forms = self.expanded()
        if any(f.is_zero() for f in forms):
            raise HalfSpaceError("a zero weight lies in no open half-space")
        xi = closest_point_of_hull([f.coeffs for f in forms])
        if not any(xi):
            raise HalfSpaceError("weights are not contained in an open half-space")
        return LinearForm(xi)

    def is_spanning(self) -> bool:
        return rank([f.coeffs for f in self.expanded()]) == self.dim


def h_function(ws: WeightSystem | Iterable) -> PiecewisePolynomial:
    """Density of the pushforward of Lebesgue measure on the orthant under
    ``s -> sum s_j beta_j`` (the volume of the fiber polytope)."""
    if not isinstance(ws, WeightSystem):
        ws = WeightSystem(ws)
    forms = ws.expanded()
    dim = ws.dim
    if len(forms) < dim:
        raise NonSpanningError(
            f"{len(forms)} weights in rank {dim}: the measure is not a function (need N >= l)"
        )
    if not ws.is_spanning():
        raise NonSpanningError("non-spanning system: the measure has no density")
    ws.half_space_point()
    key = tuple(sorted(f.coeffs for f in forms))
    return _h_cached(key)


@lru_cache(maxsize=256)
def _h_cached(key: tuple) -> PiecewisePolynomial:
    dim = len(key[0])
    vectors = list(key)
    basis: list = []
    rest: list = []
    for v in vectors:
        if len(basis) < dim and rank(basis + [v]) == len(basis) + 1:
            basis.append(v)
        else:
            rest.append(v)
    det = abs(rational_det([list(b) for b in basis]))
    current = PiecewisePolynomial(dim, [(Chamber(basis), MultiPoly.constant(1 / det, dim))])
    used = list(basis)
    for beta in rest:
        used.append(beta)
        current = _ray_convolve_h(current, beta, used)
    return PiecewisePolynomial(dim, current.pieces, betas=key)


def _chamber_simplices(vectors: list[tuple]) -> list[tuple]:
    """Simplicial cones refining the chamber complex of cone(vectors)."""
    dim = len(vectors[0])
    normals = set()
    for sub in itertools.combinations(sorted(set(vectors)), dim - 1):
        if dim == 1 or rank(list(sub)) == dim - 1:
            normals.add(normal_vector(list(sub), dim) if dim > 1 else (Fraction(1),))
    simplices = triangulate_cone(sorted(set(vectors)))
    for a in sorted(normals):
        nxt = []
        for simp in simplices:
            nxt.extend(_split_simplex(simp, a))
        simplices = nxt
    return simplices


def triangulate_cone(rays: Sequence[tuple]) -> list[tuple]:
    """Placing triangulation of the pointed cone spanned by ``rays``."""
    dim = len(rays[0])
    init: list = []
    for r in rays:
        if len(init) < dim and rank(init + [r]) == len(init) + 1:
            init.append(r)
    if len(init) < dim:
        raise NonSpanningError("rays do not span")
    simplices = [tuple(init)]
    for r in rays:
        if r in init:
            continue
        counts: dict = {}
        for simp in simplices:
            for i in range(dim):
                facet = simp[:i] + simp[i + 1:]
                k = frozenset(facet)
                counts.setdefault(k, []).append((facet, simp[i]))
        new = []
        for entries in counts.values():
            if len(entries) != 1:
                continue
            facet, opp = entries[0]
            s_opp = _sign(rational_det(list(facet) + [opp]))
            s_r = _sign(rational_det(list(facet) + [r]))
            if s_r != 0 and s_r == -s_opp:
                new.append(tuple(facet) + (r,))
        simplices.extend(new)
    return simplices


def _split_simplex(simp: tuple, a: tuple) -> list[tuple]:
    vals = [_dot(a, g) for g in simp]
    if all(v >= 0 for v in vals) or all(v <= 0 for v in vals):
        return [simp]
    cuts = []
    for gp, vp in zip(simp, vals):
        if vp <= 0:
            continue
        for gm, vm in zip(simp, vals):
            if vm >= 0:
                continue
            x = tuple(vp * m - vm * p for p, m in zip(gp, gm))
            cuts.append(_primitive(x))
    pos = [g for g, v in zip(simp, vals) if v >= 0] + cuts
    neg = [g for g, v in zip(simp, vals) if v <= 0] + cuts
    return triangulate_cone(_dedupe(pos)) + triangulate_cone(_dedupe(neg))


def _primitive(x: tuple) -> tuple:
    """Positive rescaling making the ray representative canonical."""
    lead = max(abs(c) for c in x)
    return tuple(c / lead for c in x)


def _dedupe(rays: list) -> list:
    seen = []
    for r in rays:
        r = _primitive(r)
        if r not in seen:
            seen.append(r)
    return seen


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _facet_normals(pp: PiecewisePolynomial) -> list[tuple]:
    out = set()
    for ch, _ in pp.pieces:
        gens = ch.generators
        dim = len(gens)
        if dim == 1:
            continue
        for i in range(dim):
            out.add(normal_vector(list(gens[:i] + gens[i + 1:]), dim))
    return sorted(out)


def _ray_convolve_h(prev: PiecewisePolynomial, beta: tuple, used: list) -> PiecewisePolynomial:
    """Q(y) = integral_0^inf prev(y - t*beta) dt, as a new H-type piecewise polynomial."""
    dim = prev.dim
    degree = len(used) - dim
    bad_normals = [a for a in _facet_normals(prev) if _dot(a, beta) == 0]
    monomials = [e for e in _compositions(degree, dim)]
    pieces = []
    for simp in _chamber_simplices(used):
        chamber = Chamber(simp)
        for shift in range(64):
            offs = [1 + Fraction(shift * (j + 1), 7 * (j + 2)) for j in range(dim)]
            pts = []
            for k in _compositions(degree, dim):
                c = [ki + oi for ki, oi in zip(k, offs)]
                y = tuple(sum((c[i] * simp[i][j] for i in range(dim)), Fraction(0)) for j in range(dim))
                pts.append(y)
            if not any(_dot(a, y) == 0 for a in bad_normals for y in pts):
                break
        else:  # pragma: no cover - 64 shifts always suffice in practice
            raise WallError("could not place interpolation points off the walls")
        matrix = [[_monomial_value(e, y) for e in monomials] for y in pts]
        rhs = [_line_integral(prev, y, beta) for y in pts]
        coeffs = rational_solve(matrix, rhs)
        poly = MultiPoly(dim, {e: c for e, c in zip(monomials, coeffs)})
        pieces.append((chamber, poly))
    return PiecewisePolynomial(dim, pieces)


def _monomial_value(e: tuple, y: tuple) -> Fraction:
    v = Fraction(1)
    for yi, ei in zip(y, e):
        if ei:
            v *= yi ** ei
    return v


def _line_integral(pp: PiecewisePolynomial, y: tuple, beta: tuple) -> Scalar:
    """Exact integral over t >= 0 of pp(y - t*beta)."""
    total = ZERO
    nb = tuple(-b for b in beta)
    for ch, poly in pp.pieces:
        c0 = ch.coords(y)
        d = ch.direction_coords(nb)
        lo, hi = Fraction(0), None
        empty = False
        for ci, di in zip(c0, d):
            if di == 0:
                if ci < 0:
                    empty = True
                    break
            elif di > 0:
                lo = max(lo, -ci / di)
            else:
                bound = -ci / di
                hi = bound if hi is None else min(hi, bound)
        if empty or hi is None or hi <= lo:
            continue
        line = [MultiPoly(1, {(0,): yi, (1,): -bi}) for yi, bi in zip(y, beta)]
        uni = poly.compose(line)
        for (k,), coef in uni.terms.items():
            total = total + coef * ((hi ** (k + 1) - lo ** (k + 1)) / (k + 1))
    return total


# ---------------------------------------------------------------------------
# Convolution
# ---------------------------------------------------------------------------


class ConeMeasure:
    """H of a possibly non-spanning weight system, kept as a lazy measure.

    Convolution of cone measures is union of weight lists; ``density()``
    returns the piecewise polynomial when the weights span.
    """

    def __init__(self, betas: Iterable):
        self.weights = WeightSystem(betas)

    @property
    def dim(self) -> int:
        return self.weights.dim

    def density(self) -> PiecewisePolynomial:
        return h_function(self.weights)

    def __repr__(self) -> str:
        return f"ConeMeasure({[f.to_text() for f in self.weights.expanded()]})"


def convolve(a, b):
    """Convolution of H-type measures or rank-one piecewise polynomials."""
    da, db = a.dim, b.dim
    if da != db:
        raise DimensionError("convolution of objects of different rank")
    wa, wb = _weights_of(a), _weights_of(b)
    if wa is not None and wb is not None:
        combined = WeightSystem(wa + wb)
        combined.half_space_point()
        if isinstance(a, ConeMeasure) and isinstance(b, ConeMeasure) and not combined.is_spanning():
            return ConeMeasure(wa + wb)
        if len(combined.expanded()) < combined.dim or not combined.is_spanning():
            return ConeMeasure(wa + wb)
        return h_function(combined)
    if da == 1:
        pa = a.density() if isinstance(a, ConeMeasure) else a
        pb = b.density() if isinstance(b, ConeMeasure) else b
        return _convolve_rank1(pa, pb)
    raise NotImplementedError(
        "convolution in rank >= 2 is supported for H functions and cone measures only"
    )


def _weights_of(x) -> list | None:
    if isinstance(x, ConeMeasure):
        return [f for f in x.weights.expanded()]
    if isinstance(x, PiecewisePolynomial) and x.betas is not None:
        return [LinearForm(v) for v in x.betas]
    return None


def _convolve_rank1(a: PiecewisePolynomial, b: PiecewisePolynomial) -> PiecewisePolynomial:
    ia, ib = a.intervals(), b.intervals()
    if not ia or not ib:
        return PiecewisePolynomial(1, [])
    a_lo = any(lo is None for lo, _, _ in ia)
    a_hi = any(hi is None for _, hi, _ in ia)
    b_lo = any(lo is None for lo, _, _ in ib)
    b_hi = any(hi is None for _, hi, _ in ib)
    if (a_lo and b_hi) or (a_hi and b_lo):
        raise HalfSpaceError("supports are not contained in a common half-line")
    x = MultiPoly.variable(0, 2)
    yv = MultiPoly.variable(1, 2)
    total = PiecewisePolynomial(1, [])
    for lo1, hi1, f in ia:
        for lo2, hi2, g in ib:
            # integrand f(x) g(y - x) as a polynomial in (x, y)
            prod = f.compose([x]) * g.compose([yv - x])
            anti = _antiderivative(prod, 0)
            total = total + _interval_convolution(anti, lo1, hi1, lo2, hi2)
    return total


def _antiderivative(p: MultiPoly, k: int) -> MultiPoly:
    out = {}
    for e, c in p.terms.items():
        ne = list(e)
        ne[k] += 1
        out[tuple(ne)] = c / ne[k]
    return MultiPoly(p.nvars, out)


def _interval_convolution(anti, lo1, hi1, lo2, hi2) -> PiecewisePolynomial:
    """Rank one: y -> integral over x in [lo1,hi1] with y-x in [lo2,hi2]."""
    inf = None
    cands = []
    for u in (lo1, hi1):
        for v in (lo2, hi2):
            if u is not None and v is not None:
                cands.append(u + v)
    cuts = sorted(set(cands))
    bounds = [inf] + cuts + [inf]
    items = []
    yv = MultiPoly.variable(0, 1)
    for left, right in zip(bounds[:-1], bounds[1:]):
        if left is None and right is None:
            mid = Fraction(0)
        elif left is None:
            mid = right - 1
        elif right is None:
            mid = left + 1
        else:
            mid = (left + right) / 2
        # x range: max(lo1, y - hi2) .. min(hi1, y - lo2)
        lower = _pick_bound(lo1, hi2, mid, True)
        upper = _pick_bound(hi1, lo2, mid, False)
        if lower is None or upper is None:
            # one infinite end would make the region unbounded: excluded by
            # the half-line check unless the region is empty
            lo_val = _bound_value(lower, mid)
            up_val = _bound_value(upper, mid)
            if lo_val is not None and up_val is not None and lo_val >= up_val:
                continue
            raise HalfSpaceError("convolution integral diverges")
        if _bound_value(lower, mid) >= _bound_value(upper, mid):
            continue
        poly = _eval_bound(anti, upper, yv) - _eval_bound(anti, lower, yv)
        items.append((left, right, poly))
    return PiecewisePolynomial.from_intervals(items)


def _pick_bound(fixed, other, mid, lower: bool):
    """Return the active bound as ("const", c) or ("shift", c) meaning y - c."""
    opts = []
    if fixed is not None:
        opts.append(("const", fixed))
    if other is not None:
        opts.append(("shift", other))
    if not opts:
        return None
    vals = [(_bound_value(o, mid), o) for o in opts]
    return (max if lower else min)(vals, key=lambda t: t[0])[1]


def _bound_value(bound, y):
    if bound is None:
        return None
    kind, c = bound
    return c if kind == "const" else y - c


def _eval_bound(anti: MultiPoly, bound, yv: MultiPoly) -> MultiPoly:
    kind, c = bound
    xsub = MultiPoly.constant(c, 1) if kind == "const" else yv - c
    return anti.compose([xsub, yv])


# ---------------------------------------------------------------------------
# Differential operators and germs
# ---------------------------------------------------------------------------


def apply_operator(op_forms: Iterable, p: PiecewisePolynomial) -> PiecewisePolynomial:
    """Apply prod (i * gamma(d/dy))^n chamber-wise."""
    ops = []
    for item in op_forms:
        if isinstance(item, tuple) and len(item) == 2 and isinstance(item[1], int):
            ops.append((as_form(item[0]), item[1]))
        else:
            ops.append((as_form(item), 1))

    def act(poly: MultiPoly) -> MultiPoly:
        for form, power in ops:
            if form.dim != poly.nvars:
                raise DimensionError("operator form has the wrong length")
            for _ in range(power):
                acc = MultiPoly.zero(poly.nvars)
                for k, g in enumerate(form.coeffs):
                    if g:
                        acc = acc + poly.diff(k).scale(Scalar(0, g))
                poly = acc
        return poly

    return p.map_polys(act)


def germ_at_zero(p: PiecewisePolynomial) -> MultiPoly:
    """The polynomial agreeing with ``p`` on a neighbourhood of the origin."""
    origin = [Fraction(0)] * p.dim
    germs = []
    for d in probe_directions(p.dim):
        try:
            germs.append(p.local_polynomial(origin, d))
        except WallError:
            continue
    if not germs or any(g != germs[0] for g in germs[1:]):
        raise WallError("0 is not a regular value: the pieces meeting the origin disagree")
    return germs[0]


# ---------------------------------------------------------------------------
# Gaussian integrals
# ---------------------------------------------------------------------------


class GaussianSeries:
    """``sqrt(2*pi)**sqrt2pi_exp * sum_q coeffs[q] * eps**q`` with q in (1/2)Z.

    Keeps the half-integer powers of pi and eps produced by Gaussian moments
    exact; integer powers of pi can still live inside the Scalar coefficients.
    """

    __slots__ = ("sqrt2pi_exp", "coeffs")

    def __init__(self, sqrt2pi_exp: int, coeffs: dict):
        self.sqrt2pi_exp = int(sqrt2pi_exp)
        self.coeffs = {Fraction(q): Scalar.coerce(c) for q, c in coeffs.items() if Scalar.coerce(c)}

    def coefficient(self, q) -> Scalar:
        return self.coeffs.get(Fraction(q), ZERO)

    def scale(self, c) -> "GaussianSeries":
        c = Scalar.coerce(c)
        return GaussianSeries(self.sqrt2pi_exp, {q: v * c for q, v in self.coeffs.items()})

    def shift_eps(self, q) -> "GaussianSeries":
        q = Fraction(q)
        return GaussianSeries(self.sqrt2pi_exp, {k + q: v for k, v in self.coeffs.items()})

    def times_sqrt2pi(self, k: int) -> "GaussianSeries":
        return GaussianSeries(self.sqrt2pi_exp + k, self.coeffs)

    def normalized(self) -> "GaussianSeries":
        """Fold even powers of sqrt(2*pi) into the Scalar pi ledger."""
        k = self.sqrt2pi_exp
        extra = k - (k % 2)
        factor = Scalar(Fraction(2) ** (extra // 2), 0, extra // 2)
        return GaussianSeries(k % 2, {q: v * factor for q, v in self.coeffs.items()})

    def __add__(self, other: "GaussianSeries") -> "GaussianSeries":
        if other.sqrt2pi_exp != self.sqrt2pi_exp:
            a, b = self.normalized(), other.normalized()
            if a.sqrt2pi_exp != b.sqrt2pi_exp:
                raise ValueError("cannot add series with different sqrt(2 pi) parity")
            return a + b
        out = dict(self.coeffs)
        for q, v in other.coeffs.items():
            out[q] = out.get(q, ZERO) + v
        return GaussianSeries(self.sqrt2pi_exp, out)

    def __mul__(self, other: "GaussianSeries") -> "GaussianSeries":
        out: dict = {}
        for q1, v1 in self.coeffs.items():
            for q2, v2 in other.coeffs.items():
                out[q1 + q2] = out.get(q1 + q2, ZERO) + v1 * v2
        return GaussianSeries(self.sqrt2pi_exp + other.sqrt2pi_exp, out)

    def evaluate(self, eps: float) -> complex:
        total = 0j
        for q, v in self.coeffs.items():
            total += v.to_complex() * eps ** float(q)
        return total * math.sqrt(2 * math.pi) ** self.sqrt2pi_exp

    def __eq__(self, other) -> bool:
        if not isinstance(other, GaussianSeries):
            return NotImplemented
        a, b = self.normalized(), other.normalized()
        return a.sqrt2pi_exp == b.sqrt2pi_exp and a.coeffs == b.coeffs

    def to_text(self) -> str:
        if not self.coeffs:
            return "0"
        body = " + ".join(f"({v})*eps^{_q(q)}" for q, v in sorted(self.coeffs.items()))
        if self.sqrt2pi_exp:
            return f"sqrt(2*pi)^{self.sqrt2pi_exp} * [{body}]"
        return body

    __str__ = to_text

    def __repr__(self) -> str:
        return f"GaussianSeries({self.to_text()})"


def _double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def gaussian_integral_polynomial(p: MultiPoly) -> GaussianSeries:
    """Exact integral of ``exp(-|y|^2/(2 eps)) * p(y)`` over R^l as a series in eps."""
    l = p.nvars
    coeffs: dict = {}
    for e, c in p.terms.items():
        if any(k % 2 for k in e):
            continue
        w = 1
        for k in e:
            w *= _double_factorial(k - 1)
        q = Fraction(sum(e), 2) + Fraction(l, 2)
        coeffs[q] = coeffs.get(q, ZERO) + c * w
    return GaussianSeries(l, coeffs)


def gaussian_integral_piecewise_rank1(p: PiecewisePolynomial, eps: float) -> float:
    """Numeric integral of ``exp(-y^2/(2 eps)) * p(y)`` for a rank-one piecewise polynomial."""
    if p.dim != 1:
        raise DimensionError("gaussian_integral_piecewise_rank1 needs rank one")
    if eps <= 0:
        raise ValueError("eps must be positive")
    total = mpmath.mpf(0)
    with mpmath.workdps(40):
        e = mpmath.mpf(eps)
        for lo, hi, poly in p.intervals():
            if any(c.im or c.pi_exp for _, c in poly.terms.items()):
                raise ValueError("numeric Gaussian integration needs real rational coefficients")
            deg = poly.degree()
            moments = _interval_moments(lo, hi, e, deg)
            for (k,), c in poly.terms.items():
                total += mpmath.mpf(c.re.numerator) / c.re.denominator * moments[k]
        return float(total)


def _interval_moments(lo, hi, eps, deg: int) -> list:
    """J_k = integral_lo^hi y^k exp(-y^2/(2 eps)) dy for k = 0..deg."""
    s = mpmath.sqrt(2 * eps)
    a = None if lo is None else mpmath.mpf(lo.numerator) / lo.denominator
    b = None if hi is None else mpmath.mpf(hi.numerator) / hi.denominator

    def gauss(x):
        return mpmath.mpf(0) if x is None else mpmath.exp(-x * x / (2 * eps))

    def powx(x, k):
        return mpmath.mpf(0) if x is None else x ** k

    half = mpmath.sqrt(mpmath.pi * eps / 2)
    if a is not None and a >= 0:
        j0 = half * (mpmath.erfc(a / s) - (mpmath.erfc(b / s) if b is not None else 0))
    elif b is not None and b <= 0:
        j0 = half * (mpmath.erfc(-b / s) - (mpmath.erfc(-a / s) if a is not None else 0))
    else:
        upper = 1 if b is None else mpmath.erf(b / s)
        lower = -1 if a is None else mpmath.erf(a / s)
        j0 = half * (upper - lower)
    out = [j0]
    if deg >= 1:
        out.append(eps * (gauss(a) - gauss(b)))
    for k in range(2, deg + 1):
        boundary = eps * (powx(a, k - 1) * gauss(a) - powx(b, k - 1) * gauss(b))
        out.append(boundary + (k - 1) * eps * out[k - 2])
    return out
