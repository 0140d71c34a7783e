"""Fixed-point data and the pipelines built on it: abelian pushforward,
residue-formula pairings, Duistermaat-Heckman functions, the Witten
integrand Q, critical values and the Gaussian decay check."""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .cone_calculus import (
    Chamber,
    GaussianSeries,
    PiecewisePolynomial,
    WeightSystem,
    apply_operator,
    gaussian_integral_piecewise_rank1,
    gaussian_integral_polynomial,
    germ_at_zero,
    h_function,
    hull_face_minimisers,
    probe_directions,
)
from .errors import (
    DimensionError,
    NonGenericError,
    RegularityError,
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
)
from .residue_core import (
    ConeSpec,
    MeromorphicTerm,
    jk_residue,
    rank1_residue_from_coeffs,
)


class Normalization(enum.Enum):
    RANK1_UNIT_VOLUME = "rank1_unit_volume"
    GENERAL = "general"


@dataclass(frozen=True)
class GroupData:
    rank: int
    dim: int
    positive_roots: tuple = ()
    weyl_order: int = 1
    normalization: Normalization = Normalization.GENERAL
    vol_T: Scalar = ONE

    def __post_init__(self):
        roots = tuple(as_form(r) for r in self.positive_roots)
        object.__setattr__(self, "positive_roots", roots)
        object.__setattr__(self, "vol_T", Scalar.coerce(self.vol_T))
        if any(r.dim != self.rank for r in roots):
            raise DimensionError("positive roots must have length rank")
        if self.dim - self.rank != 2 * len(roots):
            raise DimensionError("dim - rank must equal twice the number of positive roots")
        if self.weyl_order < 1:
            raise ValueError("Weyl group order must be >= 1")

    @property
    def n_plus(self) -> int:
        return len(self.positive_roots)

    @classmethod
    def su2(cls) -> "GroupData":
        return cls(1, 3, (LinearForm([1]),), 2, Normalization.RANK1_UNIT_VOLUME)

    @classmethod
    def torus(cls, rank: int) -> "GroupData":
        return cls(rank, rank, (), 1, Normalization.GENERAL)

    def varpi(self) -> MultiPoly:
        """Product of positive roots as a polynomial in psi."""
        p = MultiPoly.one(self.rank)
        for r in self.positive_roots:
            p = p * r.as_poly()
        return p

    def prefactor(self) -> Scalar:
        """(-1)^{n+} / ((2 pi)^{s-l} |W| vol T), with the 2 pi absorbed into the
        roots in the unit-volume rank-one convention."""
        sign = (-1) ** self.n_plus
        if self.normalization is Normalization.RANK1_UNIT_VOLUME:
            return Scalar(Fraction(sign, self.weyl_order))
        k = self.dim - self.rank
        return Scalar(Fraction(sign, 2 ** k * self.weyl_order), 0, -k) / self.vol_T


@dataclass(frozen=True)
class FixedPointComponent:
    """One component F of the torus-fixed set.

    ``class_terms`` lists the terms of the expansion of the restricted class
    over 1/e_F: each is (numerator polynomial, ((weight index, extra power), ...)).
    Isolated points use the default single term (1, ()).
    """

    label: str
    moment_image: LinearForm
    weights: tuple
    class_restriction: MultiPoly | None = None
    class_terms: tuple | None = None
    point_integral: Scalar = ONE
    key: tuple | None = None

    def __post_init__(self):
        mu = as_form(self.moment_image)
        l = mu.dim
        ws = []
        for item in self.weights:
            if isinstance(item, tuple) and len(item) == 2 and isinstance(item[1], int):
                f, m = as_form(item[0]), item[1]
            else:
                f, m = as_form(item), 1
            if f.is_zero():
                raise RegularityError(f"fixed point {self.label}: zero weight in the normal bundle")
            if f.dim != l or m < 1:
                raise DimensionError(f"fixed point {self.label}: bad weight {f.to_text()}^{m}")
            ws.append((f, m))
        cls_r = self.class_restriction
        if cls_r is None:
            cls_r = MultiPoly.one(l)
        terms = self.class_terms
        if terms is None:
            terms = ((MultiPoly.one(l), ()),)
        else:
            terms = tuple((t if isinstance(t, MultiPoly) else MultiPoly.constant(t, l), tuple(tuple(x) for x in extra)) for t, extra in terms)
        object.__setattr__(self, "moment_image", mu)
        object.__setattr__(self, "weights", tuple(ws))
        object.__setattr__(self, "class_restriction", cls_r)
        object.__setattr__(self, "class_terms", terms)
        object.__setattr__(self, "point_integral", Scalar.coerce(self.point_integral))

    @property
    def rank(self) -> int:
        return self.moment_image.dim

    def weight_count(self) -> int:
        return sum(m for _, m in self.weights)


class LocalizationModel:
    """Group data, fixed points (any sequence, possibly lazy) and dim X."""

    def __init__(self, group: GroupData, fixed_points: Sequence[FixedPointComponent], dim_X: int, name: str = "", check: bool = True):
        self.group = group
        self.fixed_points = fixed_points
        self.dim_X = int(dim_X)
        self.name = name
        if check:
            for fp in fixed_points:
                if fp.rank != group.rank:
                    raise DimensionError(f"fixed point {fp.label} has rank {fp.rank}, group rank {group.rank}")
                if fp.moment_image.is_zero():
                    raise RegularityError(
                        f"fixed point {fp.label} has moment image 0: 0 is not a regular value "
                        "(hypothesis: 0 is a regular value of the moment map)"
                    )

    @property
    def rank(self) -> int:
        return self.group.rank

    @property
    def dim_reduced(self) -> int:
        return self.dim_X - 2 * self.group.dim

    def materialize(self) -> list[FixedPointComponent]:
        return list(self.fixed_points)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LocalizationModel)
            and self.group == other.group
            and self.dim_X == other.dim_X
            and len(self.fixed_points) == len(other.fixed_points)
            and all(_same_point(a, b) for a, b in zip(self.fixed_points, other.fixed_points))
        )

    def __repr__(self) -> str:
        return f"LocalizationModel({self.name or 'custom'}, rank={self.rank}, points={len(self.fixed_points)})"


def _same_point(a: FixedPointComponent, b: FixedPointComponent) -> bool:
    return (
        a.label == b.label
        and a.moment_image == b.moment_image
        and a.weights == b.weights
        and a.class_restriction == b.class_restriction
        and a.class_terms == b.class_terms
        and a.point_integral == b.point_integral
    )


# ---------------------------------------------------------------------------
# restricted classes
# ---------------------------------------------------------------------------


class UniformClass:
    """The same polynomial in psi at every fixed point (a class pulled back from a point)."""

    def __init__(self, poly: MultiPoly):
        self.poly = poly

    def restrict(self, fp: FixedPointComponent) -> MultiPoly:
        return self.poly


class StoredClass:
    """Use each fixed point's own ``class_restriction``."""

    def restrict(self, fp: FixedPointComponent) -> MultiPoly:
        return fp.class_restriction


class ListClass:
    """One polynomial per fixed point, in fixed-point order."""

    def __init__(self, polys: Sequence[MultiPoly]):
        self.polys = list(polys)


def resolve_eta(eta):
    """Normalise the accepted eta forms to an object with ``restrict(fp)``
    or a positional list."""
    if eta is None:
        return StoredClass()
    if isinstance(eta, ListClass):
        return eta
    if isinstance(eta, MultiPoly):
        return UniformClass(eta)
    if isinstance(eta, (int, Fraction, Scalar)):
        return _ConstantClass(Scalar.coerce(eta))
    if hasattr(eta, "restrict"):
        return eta
    if isinstance(eta, (list, tuple)):
        return ListClass(eta)
    raise TypeError(f"cannot interpret {type(eta).__name__} as a restricted class")


class _ConstantClass:
    def __init__(self, c: Scalar):
        self.c = c

    def restrict(self, fp: FixedPointComponent) -> MultiPoly:
        return MultiPoly.constant(self.c, fp.rank)


def _restrictions(m: LocalizationModel, eta):
    eta = resolve_eta(eta)
    if isinstance(eta, ListClass):
        if len(eta.polys) != len(m.fixed_points):
            raise ValueError(
                f"missing restriction: {len(eta.polys)} classes for {len(m.fixed_points)} fixed points"
            )
        return lambda idx, fp: eta.polys[idx]
    return lambda idx, fp: eta.restrict(fp)


# ---------------------------------------------------------------------------
# abelian pushforward and pairings
# ---------------------------------------------------------------------------


def _fp_terms(fp: FixedPointComponent, eta_poly: MultiPoly, with_exponent: bool) -> list[MeromorphicTerm]:
    out = []
    lam = fp.moment_image if with_exponent else LinearForm.zero(fp.rank)
    for numer, extra in fp.class_terms:
        powers = [m for _, m in fp.weights]
        for idx, e in extra:
            powers[idx] += e
        den = [(f, p) for (f, _), p in zip(fp.weights, powers)]
        num = (eta_poly * numer).scale(fp.point_integral)
        out.append(MeromorphicTerm(num, den, lam))
    return out


def pushforward_terms(m: LocalizationModel, eta=None, with_symplectic_exponent: bool = True) -> list[MeromorphicTerm]:
    """One term per fixed point per class term: eta|_F * c / prod beta^n * e^{i mu(psi)}."""
    restrict = _restrictions(m, eta)
    out = []
    for idx, fp in enumerate(m.fixed_points):
        poly = restrict(idx, fp)
        if poly is None:
            raise ValueError(f"missing restriction for fixed point {fp.label}")
        out.extend(_fp_terms(fp, poly, with_symplectic_exponent))
    return out


def _rank1_partial(m: LocalizationModel, eta, start: int, stop: int) -> Scalar:
    restrict = _restrictions(m, eta)
    total = ZERO
    pts = m.fixed_points
    for idx in range(start, stop):
        fp = pts[idx]
        mu = fp.moment_image.coeffs[0]
        if mu == 0:
            raise RegularityError(
                f"fixed point {fp.label} has moment image 0: 0 is not a regular value"
            )
        if mu < 0:
            continue
        eta_poly = restrict(idx, fp)
        for numer, extra in fp.class_terms:
            powers = [p for _, p in fp.weights]
            for j, e in extra:
                powers[j] += e
            n = sum(powers)
            denom = Fraction(1)
            for (f, _), p in zip(fp.weights, powers):
                denom *= f.coeffs[0] ** p
            full = eta_poly * numer
            coeffs: dict = {}
            for (d,), c in full.terms.items():
                coeffs[d + 2] = c * fp.point_integral
            total = total + rank1_residue_from_coeffs(coeffs, mu, n, denom)
    return total


def pairing_rank1(m: LocalizationModel, eta=None, threads: int = 1) -> Scalar:
    """-1/2 * sum over mu_F > 0 of the coefficient of 1/psi of psi^2 r_F(psi)."""
    if m.rank != 1:
        raise DimensionError("pairing_rank1 needs a rank-one group")
    if m.group.normalization is not Normalization.RANK1_UNIT_VOLUME:
        raise ValueError("pairing_rank1 uses the unit-volume rank-one normalization")
    count = len(m.fixed_points)
    if threads > 1 and count >= 4096:
        bounds = np.linspace(0, count, threads + 1).astype(int)
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_rank1_partial, m, eta, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]
            parts = [f.result() for f in futures]
        total = ZERO
        for p in parts:
            total = total + p
    else:
        total = _rank1_partial(m, eta, 0, count)
    return total * m.group.prefactor()


def default_cone(m: LocalizationModel) -> ConeSpec:
    """R+ in rank one; otherwise a thin simplicial cone around a generic
    direction, narrow enough that every weight keeps one sign on it."""
    if m.rank == 1:
        return ConeSpec([[1]])
    xi = LinearForm(probe_directions(m.rank)[0])
    forms = {f for fp in m.fixed_points for f, _ in fp.weights}
    return narrow_cone(xi, forms)


def _complement_basis(xi: LinearForm) -> list[LinearForm]:
    """Rational Gram-Schmidt basis of the hyperplane orthogonal to xi."""
    basis = [xi]
    for k in range(xi.dim):
        v = LinearForm.basis(k, xi.dim)
        for b in basis:
            v = v - b.scale(v.dot(b.coeffs) / b.norm2())
        if not v.is_zero():
            basis.append(v)
    return basis[1:]


def narrow_cone(xi: LinearForm, forms: Iterable[LinearForm]) -> ConeSpec:
    """A simplicial cone with barycentre xi, thin enough that every form
    keeps the sign it has at xi."""
    if xi.is_zero():
        raise ValueError("cone direction must be nonzero")
    vs = _complement_basis(xi)
    if not vs:
        for f in forms:
            if f.dot(xi.coeffs) == 0:
                raise NonGenericError(f"weight {f.to_text()} vanishes on the default cone direction")
        return ConeSpec([xi])
    delta = Fraction(1)
    for f in forms:
        v = abs(f.dot(xi.coeffs))
        if v == 0:
            raise NonGenericError(f"weight {f.to_text()} vanishes on the default cone direction")
        spread = sum((abs(f.dot(w.coeffs)) for w in vs), Fraction(0))
        if spread:
            delta = min(delta, v / (2 * spread))
    # simplex vertices delta*e_j and -delta*(1,...,1) in the complement coordinates
    gens = [xi + w.scale(delta) for w in vs]
    back = LinearForm.zero(xi.dim)
    for w in vs:
        back = back + w
    gens.append(xi - back.scale(delta))
    return ConeSpec(gens)


def pairing_general(m: LocalizationModel, eta=None, cone: ConeSpec | None = None, ray=None, extra_numerator: MultiPoly | None = None) -> Scalar:
    """Prefactor times the cone residue of varpi^2 * sum_F r_F."""
    cone = default_cone(m) if cone is None else cone
    varpi2 = m.group.varpi() ** 2
    if extra_numerator is not None:
        varpi2 = varpi2 * extra_numerator
    terms = [t.with_numerator(t.numerator * varpi2) for t in pushforward_terms(m, eta, True)]
    return m.group.prefactor() * jk_residue(terms, cone, ray)


def _norm2_poly(l: int) -> MultiPoly:
    p = MultiPoly.zero(l)
    for k in range(l):
        v = MultiPoly.variable(k, l)
        p = p + v * v
    return p


def pairing_with_theta(m: LocalizationModel, eta=None, order: int = 0, cone: ConeSpec | None = None, ray=None) -> MultiPoly:
    """sum_{k <= order} eps^k / k! * pairing with extra numerator (-|psi|^2/2)^k,
    returned as a polynomial in the single variable eps."""
    if order < 0:
        raise ValueError("order must be >= 0")
    l = m.rank
    q = _norm2_poly(l).scale(Scalar(Fraction(-1, 2)))
    rank1 = l == 1 and m.group.normalization is Normalization.RANK1_UNIT_VOLUME and cone is None
    restrict = _restrictions(m, eta)
    coeffs = {}
    for k in range(order + 1):
        extra = q ** k
        if rank1:
            polys = [restrict(idx, fp) * extra for idx, fp in enumerate(m.fixed_points)]
            value = pairing_rank1(m, ListClass(polys))
        else:
            value = pairing_general(m, eta, cone, ray, extra_numerator=extra)
        coeffs[(k,)] = value * Fraction(1, math.factorial(k))
    return MultiPoly(1, coeffs)


# ---------------------------------------------------------------------------
# DH function and Q
# ---------------------------------------------------------------------------


def _default_xi(m: LocalizationModel, cone: ConeSpec | None) -> LinearForm:
    if cone is not None:
        return cone.interior_point
    return default_cone(m).interior_point


def dh_function(m: LocalizationModel, cone: ConeSpec | None = None, calibrate: bool = True) -> PiecewisePolynomial:
    """Sum over F of (-1)^{k_F} c * H_{flipped weights}(mu_F - y), sign-calibrated."""
    xi = _default_xi(m, cone)
    l = m.rank
    groups: dict = {}
    for fp in m.fixed_points:
        for numer, extra in fp.class_terms:
            if not numer.is_constant():
                raise ValueError("dh_function supports constant class-term numerators only")
            c = numer.constant_term() * fp.point_integral
            powers = [p for _, p in fp.weights]
            for j, e in extra:
                powers[j] += e
            sign = 1
            flipped = []
            for (f, _), p in zip(fp.weights, powers):
                s = f.dot(xi.coeffs)
                if s == 0:
                    raise NonGenericError(
                        f"weight {f.to_text()} at {fp.label} vanishes on the cone direction; choose a generic cone"
                    )
                if s < 0:
                    f = -f
                    sign *= (-1) ** p
                flipped.append((f, p))
            key = (fp.moment_image.coeffs, tuple(sorted((f.coeffs, p) for f, p in flipped)))
            groups[key] = groups.get(key, ZERO) + c * sign
    pieces = []
    ys = [MultiPoly.variable(k, l) for k in range(l)]
    for (mu, wkey), c in sorted(groups.items(), key=lambda kv: kv[0]):
        if not c:
            continue
        H = h_function(WeightSystem([(LinearForm(f), p) for f, p in wkey]))
        refl = [MultiPoly.constant(mu[k], l) - ys[k] for k in range(l)]
        for ch, poly in H.pieces:
            gens = [tuple(-x for x in g) for g in ch.generators]
            pieces.append((Chamber(gens, mu), poly.compose(refl).scale(c)))
    R = PiecewisePolynomial(l, pieces)
    if calibrate:
        R = R.scale(dh_sign(m, R))
    return R


def dh_sign(m: LocalizationModel, R: PiecewisePolynomial) -> int:
    """+1 or -1 making R nonnegative next to an extreme moment image."""
    images = sorted({fp.moment_image.coeffs for fp in m.fixed_points})
    vertex = images[-1]
    l = m.rank
    centroid = tuple(sum((p[k] for p in images), Fraction(0)) / len(images) for k in range(l))
    base = tuple(c - v for c, v in zip(centroid, vertex))
    if not any(base):
        base = tuple(-x for x in probe_directions(l)[0])
    trials = [base] + [
        tuple(b + Fraction(1, 97) * d for b, d in zip(base, p)) for p in probe_directions(l)
    ]
    for d in trials:
        try:
            germ = R.germ_along(vertex, d)
        except WallError:
            continue
        if germ.is_zero():
            continue
        low = min(germ.terms)
        c = germ.terms[low]
        if c.im or c.pi_exp:
            raise ValueError("DH germ has a non-real leading coefficient")
        return 1 if c.re > 0 else -1
    raise WallError("could not determine the DH sign near an extreme moment image")


def witten_q(m: LocalizationModel, cone: ConeSpec | None = None) -> PiecewisePolynomial:
    """Q = varpi(y) * D_varpi R with D_varpi = prod (i gamma(d/dy))."""
    R = dh_function(m, cone)
    roots = m.group.positive_roots
    if not roots:
        return R
    DR = apply_operator([(r, 1) for r in roots], R)
    return DR.multiply_poly(m.group.varpi())


# ---------------------------------------------------------------------------
# critical values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CriticalValueSet:
    betas: tuple
    norms: tuple

    def as_text(self) -> list[str]:
        return [b.to_text() for b in self.betas]

    def min_nonzero_norm(self) -> Fraction | None:
        vals = [n for n in self.norms if n]
        return min(vals) if vals else None


def fold_to_positive_chamber(v: tuple, roots: Sequence[LinearForm]) -> tuple:
    v = tuple(v)
    for _ in range(1000):
        for r in roots:
            d = sum((a * b for a, b in zip(v, r.coeffs)), Fraction(0))
            if d < 0:
                n2 = r.norm2()
                v = tuple(a - 2 * d / n2 * b for a, b in zip(v, r.coeffs))
                break
        else:
            return v
    raise RuntimeError("reflection folding did not terminate")


def critical_values(m: LocalizationModel) -> CriticalValueSet:
    images = sorted({fp.moment_image.coeffs for fp in m.fixed_points})
    found = set()
    for x in hull_face_minimisers(images):
        found.add(fold_to_positive_chamber(x, m.group.positive_roots))
    items = sorted(found, key=lambda v: (sum(a * a for a in v), v))
    return CriticalValueSet(
        tuple(LinearForm(v) for v in items),
        tuple(sum((a * a for a in v), Fraction(0)) for v in items),
    )


# ---------------------------------------------------------------------------
# Gaussian paths
# ---------------------------------------------------------------------------


def gaussian_prefactor(m: LocalizationModel) -> GaussianSeries:
    """eps^{-s/2} / ((2 pi i)^s |W| vol T) * i^{dim_C X} as a GaussianSeries."""
    s = m.group.dim
    c = i_power(-s) * i_power(m.dim_X // 2) / (m.group.weyl_order) / m.group.vol_T
    return GaussianSeries(-2 * s, {Fraction(-s, 2): c})


def gaussian_localization_integral(m: LocalizationModel, cone: ConeSpec | None = None) -> GaussianSeries:
    """The Gaussian integral of the germ Q_0 with its prefactor (uncalibrated)."""
    Q0 = germ_at_zero(witten_q(m, cone))
    return gaussian_prefactor(m) * gaussian_integral_polynomial(Q0)


def witten_decay_check(m: LocalizationModel, eps_list: Iterable[float], cone: ConeSpec | None = None) -> list[tuple[float, float]]:
    """(eps, |I^eps - I^eps_0|) with both integrals taken over y in R."""
    if m.rank != 1:
        raise DimensionError("the decay check is implemented in rank one")
    Q = witten_q(m, cone)
    Q0 = germ_at_zero(Q)
    diff = Q - PiecewisePolynomial.polynomial_everywhere(Q0)
    s = m.group.dim
    scale = 1.0 / ((2 * math.pi) ** s * m.group.weyl_order)
    re_part = diff.map_polys(_real_part)
    im_part = diff.map_polys(_imag_part)
    out = []
    for eps in eps_list:
        v = complex(
            gaussian_integral_piecewise_rank1(re_part, eps),
            gaussian_integral_piecewise_rank1(im_part, eps),
        )
        out.append((eps, abs(v) * scale * eps ** (-s / 2)))
    return out


def _real_part(p: MultiPoly) -> MultiPoly:
    if any(c.pi_exp for c in p.terms.values()):
        raise ValueError("numeric integration needs pi-free coefficients")
    return MultiPoly(p.nvars, {e: Scalar(c.re) for e, c in p.terms.items()})


def _imag_part(p: MultiPoly) -> MultiPoly:
    return MultiPoly(p.nvars, {e: Scalar(c.im) for e, c in p.terms.items()})


def fit_decay_slope(samples: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of log|diff| against -1/(2 eps)."""
    x = np.array([-1.0 / (2 * e) for e, _ in samples])
    y = np.log(np.array([d for _, d in samples]))
    A = np.vstack([x, np.ones_like(x)]).T
    slope, _ = np.linalg.lstsq(A, y, rcond=None)[0]
    return float(slope)
