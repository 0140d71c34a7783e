"""Exact arithmetic: Gaussian rationals with a pi ledger, linear forms,
sparse multivariate polynomials and truncated Laurent series.

Nothing in here ever touches a float except the explicit ``to_complex``
conversions used for numeric reporting.
"""
from __future__ import annotations

import ast
import math
import re
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import (
    DimensionError,
    InsufficientTruncationError,
    ParseError,
    PiLedgerError,
)

Exponent = tuple  # tuple[int, ...]


def as_fraction(x) -> Fraction:
    """Coerce int / Fraction / ``"p/q"`` text to a Fraction (floats rejected)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"not a rational: {x!r}") from exc
    if isinstance(x, Scalar):
        if x.im or x.pi_exp:
            raise TypeError(f"{x} is not a rational")
        return x.re
    raise TypeError(f"cannot use {type(x).__name__} as an exact rational")


_ZERO = Fraction(0)
_ONE = Fraction(1)


class Scalar:
    """``(re + i*im) * pi**pi_exp`` with exact rational ``re`` and ``im``.

    Zero is pi-neutral (0 * pi^k == 0); any other sum across different pi
    powers raises :class:`PiLedgerError`.
    """

    __slots__ = ("re", "im", "pi_exp")

    def __init__(self, re=0, im=0, pi_exp: int = 0):
        self.re = as_fraction(re)
        self.im = as_fraction(im)
        self.pi_exp = int(pi_exp) if (self.re or self.im) else 0

    @classmethod
    def _raw(cls, re: Fraction, im: Fraction, pi_exp: int) -> "Scalar":
        s = object.__new__(cls)
        s.re = re
        s.im = im
        s.pi_exp = pi_exp if (re or im) else 0
        return s

    @classmethod
    def coerce(cls, x) -> "Scalar":
        if isinstance(x, Scalar):
            return x
        return cls._raw(as_fraction(x), _ZERO, 0)

    # -- predicates -----------------------------------------------------
    def is_zero(self) -> bool:
        return not self.re and not self.im

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def is_real(self) -> bool:
        return not self.im

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other) -> "Scalar":
        if not isinstance(other, Scalar):
            try:
                other = Scalar.coerce(other)
            except TypeError:
                return NotImplemented
        if not (other.re or other.im):
            return self
        if not (self.re or self.im):
            return other
        if self.pi_exp != other.pi_exp:
            raise PiLedgerError(
                f"cannot add pi^{self.pi_exp} and pi^{other.pi_exp} quantities"
            )
        return Scalar._raw(self.re + other.re, self.im + other.im, self.pi_exp)

    __radd__ = __add__

    def __neg__(self) -> "Scalar":
        return Scalar._raw(-self.re, -self.im, self.pi_exp)

    def __sub__(self, other) -> "Scalar":
        if not isinstance(other, Scalar):
            try:
                other = Scalar.coerce(other)
            except TypeError:
                return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "Scalar":
        return Scalar.coerce(other) - self

    def __mul__(self, other) -> "Scalar":
        if isinstance(other, Scalar):
            a, b, c, d = self.re, self.im, other.re, other.im
            if not b and not d:
                return Scalar._raw(a * c, _ZERO, self.pi_exp + other.pi_exp)
            return Scalar._raw(a * c - b * d, a * d + b * c, self.pi_exp + other.pi_exp)
        if isinstance(other, (int, Fraction)):
            return Scalar._raw(self.re * other, self.im * other, self.pi_exp)
        return NotImplemented

    __rmul__ = __mul__

    def inverse(self) -> "Scalar":
        n = self.re * self.re + self.im * self.im
        if not n:
            raise ZeroDivisionError("division by zero scalar")
        return Scalar._raw(self.re / n, -self.im / n, -self.pi_exp)

    def __truediv__(self, other) -> "Scalar":
        if isinstance(other, (int, Fraction)):
            if not other:
                raise ZeroDivisionError("division by zero")
            return Scalar._raw(self.re / other, self.im / other, self.pi_exp)
        if isinstance(other, Scalar):
            return self * other.inverse()
        return NotImplemented

    def __rtruediv__(self, other) -> "Scalar":
        return Scalar.coerce(other) * self.inverse()

    def __pow__(self, k: int) -> "Scalar":
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        result = ONE
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def conjugate(self) -> "Scalar":
        return Scalar._raw(self.re, -self.im, self.pi_exp)

    # -- comparison -----------------------------------------------------
    def __eq__(self, other) -> bool:
        if not isinstance(other, Scalar):
            try:
                other = Scalar.coerce(other)
            except TypeError:
                return NotImplemented
        return (
            self.re == other.re and self.im == other.im and self.pi_exp == other.pi_exp
        )

    def __hash__(self) -> int:
        return hash((self.re, self.im, self.pi_exp))

    # -- conversion -----------------------------------------------------
    def to_complex(self) -> complex:
        f = math.pi ** self.pi_exp
        return complex(float(self.re) * f, float(self.im) * f)

    def __repr__(self) -> str:
        return f"Scalar({self})"

    def __str__(self) -> str:
        body = _gauss_text(self.re, self.im)
        if self.pi_exp == 0:
            return body
        if self.im and self.re:
            body = f"({body})"
        return f"{body}*pi^{self.pi_exp}"

    def __reduce__(self):
        return (Scalar._raw, (self.re, self.im, self.pi_exp))


def _rat_text(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _gauss_text(re: Fraction, im: Fraction) -> str:
    if not im:
        return _rat_text(re)
    if im == 1:
        imag = "i"
    elif im == -1:
        imag = "-i"
    else:
        imag = f"{_rat_text(im)} i"
    if not re:
        return imag
    if imag.startswith("-"):
        return f"{_rat_text(re)} - {imag[1:]}"
    return f"{_rat_text(re)} + {imag}"


ZERO = Scalar._raw(_ZERO, _ZERO, 0)
ONE = Scalar._raw(_ONE, _ZERO, 0)
I = Scalar._raw(_ZERO, _ONE, 0)
PI = Scalar._raw(_ONE, _ZERO, 1)


def i_power(k: int) -> Scalar:
    """i**k without repeated multiplication."""
    return (ONE, I, -ONE, -I)[k % 4]


# ---------------------------------------------------------------------------
# Linear forms
# ---------------------------------------------------------------------------


class LinearForm:
    """A rational vector of fixed length (an element of the dual Lie algebra,
    or a point/direction in it -- the engine identifies the two by coordinates)."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable):
        self.coeffs = tuple(as_fraction(c) for c in coeffs)

    @classmethod
    def basis(cls, k: int, dim: int) -> "LinearForm":
        return cls(1 if j == k else 0 for j in range(dim))

    @classmethod
    def zero(cls, dim: int) -> "LinearForm":
        return cls([0] * dim)

    @property
    def dim(self) -> int:
        return len(self.coeffs)

    def __len__(self) -> int:
        return len(self.coeffs)

    def __getitem__(self, k):
        return self.coeffs[k]

    def __iter__(self) -> Iterator[Fraction]:
        return iter(self.coeffs)

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def _check(self, other: "LinearForm") -> None:
        if len(other.coeffs) != len(self.coeffs):
            raise DimensionError(f"rank {len(self.coeffs)} vs rank {len(other.coeffs)}")

    def __add__(self, other: "LinearForm") -> "LinearForm":
        self._check(other)
        return LinearForm(a + b for a, b in zip(self.coeffs, other.coeffs))

    def __sub__(self, other: "LinearForm") -> "LinearForm":
        self._check(other)
        return LinearForm(a - b for a, b in zip(self.coeffs, other.coeffs))

    def __neg__(self) -> "LinearForm":
        return LinearForm(-a for a in self.coeffs)

    def scale(self, r) -> "LinearForm":
        r = as_fraction(r)
        return LinearForm(a * r for a in self.coeffs)

    def __mul__(self, r) -> "LinearForm":
        return self.scale(r)

    __rmul__ = __mul__

    def dot(self, vec: Sequence) -> Fraction:
        if len(vec) != len(self.coeffs):
            raise DimensionError(f"rank {len(self.coeffs)} vs rank {len(vec)}")
        return sum((a * as_fraction(b) for a, b in zip(self.coeffs, vec)), _ZERO)

    __call__ = dot

    def norm2(self) -> Fraction:
        return sum((a * a for a in self.coeffs), _ZERO)

    def canonical(self) -> tuple[Fraction, "LinearForm"]:
        """Return ``(c, f)`` with ``self == c * f`` and the first nonzero entry of f equal to 1."""
        for a in self.coeffs:
            if a:
                return a, LinearForm(b / a for b in self.coeffs)
        raise ValueError("zero form has no canonical representative")

    def as_poly(self) -> "MultiPoly":
        n = len(self.coeffs)
        terms = {}
        for k, a in enumerate(self.coeffs):
            if a:
                e = [0] * n
                e[k] = 1
                terms[tuple(e)] = Scalar._raw(a, _ZERO, 0)
        return MultiPoly._raw(n, terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, LinearForm) and self.coeffs == other.coeffs

    def __lt__(self, other: "LinearForm") -> bool:
        return self.coeffs < other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return f"LinearForm([{', '.join(_rat_text(c) for c in self.coeffs)}])"

    def to_text(self) -> str:
        return ",".join(_rat_text(c) for c in self.coeffs)


def as_form(x) -> LinearForm:
    if isinstance(x, LinearForm):
        return x
    if isinstance(x, (int, Fraction, str)):
        return LinearForm([x])
    return LinearForm(x)


# ---------------------------------------------------------------------------
# Sparse multivariate polynomials
# ---------------------------------------------------------------------------


class MultiPoly:
    """Sparse polynomial in ``nvars`` variables with :class:`Scalar` coefficients."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping | None = None):
        self.nvars = nvars
        clean = {}
        for e, c in (terms or {}).items():
            e = tuple(int(x) for x in e)
            if len(e) != nvars or any(x < 0 for x in e):
                raise DimensionError(f"bad exponent {e} for {nvars} variables")
            c = Scalar.coerce(c)
            if c:
                clean[e] = clean[e] + c if e in clean else c
                if not clean[e]:
                    del clean[e]
        self.terms = clean

    @classmethod
    def _raw(cls, nvars: int, terms: dict) -> "MultiPoly":
        p = object.__new__(cls)
        p.nvars = nvars
        p.terms = terms
        return p

    @classmethod
    def constant(cls, c, nvars: int) -> "MultiPoly":
        c = Scalar.coerce(c)
        return cls._raw(nvars, {(0,) * nvars: c} if c else {})

    @classmethod
    def zero(cls, nvars: int) -> "MultiPoly":
        return cls._raw(nvars, {})

    @classmethod
    def one(cls, nvars: int) -> "MultiPoly":
        return cls.constant(ONE, nvars)

    @classmethod
    def variable(cls, k: int, nvars: int) -> "MultiPoly":
        e = [0] * nvars
        e[k] = 1
        return cls._raw(nvars, {tuple(e): ONE})

    @classmethod
    def monomial(cls, exponent: Sequence[int], coeff=ONE) -> "MultiPoly":
        return cls(len(exponent), {tuple(exponent): coeff})

    # -- inspection -----------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=-1)

    def min_degree(self) -> int:
        return min((sum(e) for e in self.terms), default=-1)

    def degree_in(self, k: int) -> int:
        return max((e[k] for e in self.terms), default=-1)

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_term(self) -> Scalar:
        return self.terms.get((0,) * self.nvars, ZERO)

    def coefficient(self, exponent: Sequence[int]) -> Scalar:
        return self.terms.get(tuple(exponent), ZERO)

    def is_homogeneous(self) -> bool:
        return len({sum(e) for e in self.terms}) <= 1

    def homogeneous_part(self, d: int) -> "MultiPoly":
        return MultiPoly._raw(self.nvars, {e: c for e, c in self.terms.items() if sum(e) == d})

    def items(self):
        return sorted(self.terms.items())

    # -- ring operations ------------------------------------------------
    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.nvars != self.nvars:
                raise DimensionError(f"{self.nvars} vs {other.nvars} variables")
            return other
        return MultiPoly.constant(other, self.nvars)

    def __add__(self, other) -> "MultiPoly":
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        out = dict(self.terms)
        for e, c in other.terms.items():
            if e in out:
                s = out[e] + c
                if s:
                    out[e] = s
                else:
                    del out[e]
            else:
                out[e] = c
        return MultiPoly._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> "MultiPoly":
        return MultiPoly._raw(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "MultiPoly":
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "MultiPoly":
        return self._coerce(other) - self

    def scale(self, c) -> "MultiPoly":
        c = Scalar.coerce(c)
        if not c:
            return MultiPoly.zero(self.nvars)
        return MultiPoly._raw(self.nvars, {e: v * c for e, v in self.terms.items()})

    def __mul__(self, other) -> "MultiPoly":
        if not isinstance(other, MultiPoly):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        if other.nvars != self.nvars:
            raise DimensionError(f"{self.nvars} vs {other.nvars} variables")
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                c = c1 * c2
                if e in out:
                    s = out[e] + c
                    if s:
                        out[e] = s
                    else:
                        del out[e]
                else:
                    out[e] = c
        return MultiPoly._raw(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "MultiPoly":
        if not isinstance(k, int) or k < 0:
            raise ValueError("polynomial powers must be nonnegative integers")
        result = MultiPoly.one(self.nvars)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __truediv__(self, c) -> "MultiPoly":
        c = Scalar.coerce(c)
        return self.scale(c.inverse())

    # -- calculus and evaluation ---------------------------------------
    def diff(self, k: int, times: int = 1) -> "MultiPoly":
        out = {}
        for e, c in self.terms.items():
            if e[k] < times:
                continue
            f = 1
            for j in range(times):
                f *= e[k] - j
            ne = list(e)
            ne[k] -= times
            out[tuple(ne)] = c * f
        return MultiPoly._raw(self.nvars, out)

    def diff_multi(self, orders: Sequence[int]) -> "MultiPoly":
        p = self
        for k, m in enumerate(orders):
            if m:
                p = p.diff(k, m)
        return p

    def __call__(self, *point) -> Scalar:
        return self.evaluate(point)

    def evaluate(self, point: Sequence) -> Scalar:
        if len(point) != self.nvars:
            raise DimensionError(f"need {self.nvars} coordinates, got {len(point)}")
        pts = [Scalar.coerce(x) for x in point]
        cache: dict = {}
        total = ZERO
        for e, c in self.terms.items():
            v = c
            for k, m in enumerate(e):
                if m:
                    key = (k, m)
                    if key not in cache:
                        cache[key] = pts[k] ** m
                    v = v * cache[key]
            total = total + v
        return total

    def compose(self, polys: Sequence["MultiPoly"]) -> "MultiPoly":
        """Substitute variable k by ``polys[k]`` (all in a common ring)."""
        if len(polys) != self.nvars:
            raise DimensionError(f"need {self.nvars} substitutions, got {len(polys)}")
        if not polys:
            return self
        m = polys[0].nvars
        if any(p.nvars != m for p in polys):
            raise DimensionError("substituted polynomials live in different rings")
        powers: list[list[MultiPoly]] = [[MultiPoly.one(m)] for _ in polys]
        result = MultiPoly.zero(m)
        for e, c in self.terms.items():
            term = MultiPoly.constant(c, m)
            for k, d in enumerate(e):
                if d:
                    pk = powers[k]
                    while len(pk) <= d:
                        pk.append(pk[-1] * polys[k])
                    term = term * pk[d]
            result = result + term
        return result

    def substitute(self, k: int, value: "MultiPoly") -> "MultiPoly":
        subs = [MultiPoly.variable(j, self.nvars) for j in range(self.nvars)]
        subs[k] = value
        return self.compose(subs)

    # -- comparison / text ----------------------------------------------
    def __eq__(self, other) -> bool:
        if isinstance(other, MultiPoly):
            return self.nvars == other.nvars and self.terms == other.terms
        try:
            return self == MultiPoly.constant(other, self.nvars)
        except TypeError:
            return NotImplemented

    def __hash__(self) -> int:
        return hash((self.nvars, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        return f"MultiPoly({self.nvars}, {self.to_text()!r})"

    def to_text(self, names: Sequence[str] | None = None) -> str:
        """Canonical text: graded-lex order, highest degree first."""
        if names is None:
            names = default_names(self.nvars)
        if not self.terms:
            return "0"
        order = sorted(self.terms, key=lambda e: (-sum(e), tuple(-x for x in e)))
        parts = []
        for e in order:
            c = self.terms[e]
            mono = "*".join(
                names[k] if m == 1 else f"{names[k]}^{m}" for k, m in enumerate(e) if m
            )
            if not mono:
                parts.append(("", f"({c})" if _compound(c) else str(c)))
                continue
            if c == ONE:
                parts.append(("", mono))
            elif c == -ONE:
                parts.append(("-", mono))
            elif c.pi_exp == 0 and not c.im and c.re < 0:
                parts.append(("-", f"{_rat_text(-c.re)}*{mono}"))
            elif _compound(c):
                parts.append(("", f"({c})*{mono}"))
            else:
                parts.append(("", f"{c}*{mono}"))
        text = ""
        for idx, (sign, body) in enumerate(parts):
            if idx == 0:
                text = f"-{body}" if sign else body
            elif sign or body.startswith("-"):
                text += f" - {body.lstrip('-')}" if not sign else f" - {body}"
            else:
                text += f" + {body}"
        return text

    __str__ = to_text

    def __reduce__(self):
        return (MultiPoly._raw, (self.nvars, self.terms))


def _compound(c: Scalar) -> bool:
    return " " in str(c)


def default_names(nvars: int) -> list[str]:
    return [f"psi{k + 1}" for k in range(nvars)]


def poly_substitute_linear(p: MultiPoly, forms: Sequence[LinearForm]) -> MultiPoly:
    """Replace variable k of ``p`` by the linear form ``forms[k]``."""
    forms = [as_form(f) for f in forms]
    if len(forms) != p.nvars:
        raise DimensionError(f"polynomial has {p.nvars} variables, got {len(forms)} forms")
    if not forms:
        return p
    m = forms[0].dim
    if any(f.dim != m for f in forms):
        raise DimensionError("substitution forms have different lengths")
    return p.compose([f.as_poly() for f in forms])


def linear_form_poly(coeffs: Sequence, const=0) -> MultiPoly:
    """Affine polynomial ``const + sum coeffs[k] * x_k``."""
    n = len(coeffs)
    p = LinearForm(coeffs).as_poly()
    return p + MultiPoly.constant(const, n)


# ---------------------------------------------------------------------------
# Laurent series in one variable
# ---------------------------------------------------------------------------


class LaurentSeries1D:
    """``sum_k coeffs[k] * psi**(min_deg + k)``, exact below ``precision``.

    ``precision`` is the first exponent whose coefficient is *not* known;
    ``None`` marks a finite (exact) Laurent polynomial.
    """

    __slots__ = ("min_deg", "coeffs", "precision")

    def __init__(self, min_deg: int, coeffs: Sequence, precision: int | None = None):
        self.min_deg = int(min_deg)
        self.coeffs = tuple(Scalar.coerce(c) for c in coeffs)
        if precision is not None and precision < self.min_deg:
            raise ValueError("precision below the leading exponent")
        self.precision = precision

    def coefficient(self, k: int) -> Scalar:
        return laurent_coefficient(self, k)

    def __mul__(self, other) -> "LaurentSeries1D":
        if isinstance(other, MultiPoly):
            other = poly_to_series(other)
        if not isinstance(other, LaurentSeries1D):
            c = Scalar.coerce(other)
            return LaurentSeries1D(self.min_deg, [a * c for a in self.coeffs], self.precision)
        lo = self.min_deg + other.min_deg
        precs = []
        if self.precision is not None:
            precs.append(self.precision + other.min_deg)
        if other.precision is not None:
            precs.append(other.precision + self.min_deg)
        prec = min(precs) if precs else None
        n = len(self.coeffs) + len(other.coeffs) - 1
        if prec is not None:
            n = min(n, prec - lo)
        out = [ZERO] * max(n, 0)
        for a_idx, a in enumerate(self.coeffs):
            if not a:
                continue
            for b_idx, b in enumerate(other.coeffs):
                k = a_idx + b_idx
                if k >= len(out):
                    break
                out[k] = out[k] + a * b
        return LaurentSeries1D(lo, out, prec)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        body = " + ".join(
            f"({c})*psi^{self.min_deg + k}" for k, c in enumerate(self.coeffs) if c
        )
        tail = "" if self.precision is None else f" + O(psi^{self.precision})"
        return f"LaurentSeries1D({body or '0'}{tail})"


def poly_to_series(p: MultiPoly) -> LaurentSeries1D:
    if p.nvars != 1:
        raise DimensionError("only univariate polynomials convert to Laurent series")
    if p.is_zero():
        return LaurentSeries1D(0, [], None)
    d = p.degree()
    return LaurentSeries1D(0, [p.coefficient((k,)) for k in range(d + 1)], None)


def series_of_term(c, mu, pole_order: int, trunc: int) -> LaurentSeries1D:
    """Expansion of ``c * exp(i*mu*psi) / psi**pole_order`` through ``exp``'s
    degree-``trunc`` term."""
    if trunc < 0:
        raise ValueError("truncation order must be >= 0")
    c = Scalar.coerce(c)
    mu = as_fraction(mu)
    if not mu:
        return LaurentSeries1D(-pole_order, [c], None)
    imu = Scalar._raw(_ZERO, mu, 0)
    coeffs = []
    term = c
    for k in range(trunc + 1):
        if k:
            term = term * imu / k
        coeffs.append(term)
    return LaurentSeries1D(-pole_order, coeffs, trunc + 1 - pole_order)


def laurent_coefficient(s: LaurentSeries1D, k: int) -> Scalar:
    if k < s.min_deg:
        return ZERO
    if s.precision is not None and k >= s.precision:
        raise InsufficientTruncationError(
            f"insufficient truncation: coefficient of psi^{k} requested, "
            f"series known below psi^{s.precision}"
        )
    idx = k - s.min_deg
    return s.coeffs[idx] if idx < len(s.coeffs) else ZERO


# ---------------------------------------------------------------------------
# Exact linear algebra helpers
# ---------------------------------------------------------------------------


def rational_det(rows: Sequence[Sequence]) -> Fraction:
    m = [[as_fraction(x) for x in r] for r in rows]
    n = len(m)
    if any(len(r) != n for r in m):
        raise DimensionError("determinant of a non-square matrix")
    det = _ONE
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col]), None)
        if piv is None:
            return _ZERO
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        p = m[col][col]
        det *= p
        for r in range(col + 1, n):
            f = m[r][col] / p
            if f:
                m[r] = [a - f * b for a, b in zip(m[r], m[col])]
    return det


def rational_solve(matrix: Sequence[Sequence], rhs: Sequence) -> list:
    """Solve ``matrix @ x = rhs`` exactly; ``rhs`` entries may be Scalars or
    anything supporting ``+`` and multiplication by a Fraction."""
    a = [[as_fraction(x) for x in r] for r in matrix]
    b = list(rhs)
    n = len(a)
    if any(len(r) != n for r in a) or len(b) != n:
        raise DimensionError("rational_solve needs a square system")
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col]), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        a[col], a[piv] = a[piv], a[col]
        b[col], b[piv] = b[piv], b[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        b[col] = b[col] * inv
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
                b[r] = b[r] - b[col] * f
    return b


def rank(rows: Sequence[Sequence]) -> int:
    m = [[as_fraction(x) for x in r] for r in rows]
    if not m:
        return 0
    ncol = len(m[0])
    rk = 0
    for col in range(ncol):
        piv = next((r for r in range(rk, len(m)) if m[r][col]), None)
        if piv is None:
            continue
        m[rk], m[piv] = m[piv], m[rk]
        for r in range(len(m)):
            if r != rk and m[r][col]:
                f = m[r][col] / m[rk][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[rk])]
        rk += 1
    return rk


# ---------------------------------------------------------------------------
# Text grammar
# ---------------------------------------------------------------------------

_ALLOWED = set("0123456789+-*/^() \t\n_.abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")


def parse_polynomial(text: str, names: Sequence[str]) -> MultiPoly:
    """Parse ``+ - * / ^`` expressions over rationals, ``i``, ``pi`` and ``names``.

    Division is only allowed by a nonzero constant.
    """
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty expression")
    if not set(text) <= _ALLOWED:
        bad = sorted(set(text) - _ALLOWED)
        raise ParseError(f"unexpected character(s) {''.join(bad)!r} in {text!r}")
    # printed scalars look like "3/4 i"; read the juxtaposition as a product
    src = re.sub(r"(?<=[0-9)])\s*i\b", "*i", " ".join(text.split())).replace("^", "**")
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"cannot parse {text!r}: {exc.msg}") from exc
    nvars = len(names)
    index = {n: k for k, n in enumerate(names)}
    if nvars == 1 and names[0].endswith("1") and names[0][:-1] not in index:
        index[names[0][:-1]] = 0  # 'psi' for 'psi1' at rank 1

    def walk(node) -> MultiPoly:
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, int):
                raise ParseError(f"only integer literals are allowed, got {node.value!r}")
            return MultiPoly.constant(node.value, nvars)
        if isinstance(node, ast.Name):
            if node.id in index:
                return MultiPoly.variable(index[node.id], nvars)
            if node.id == "i":
                return MultiPoly.constant(I, nvars)
            if node.id == "pi":
                return MultiPoly.constant(PI, nvars)
            raise ParseError(f"unknown symbol {node.id!r} (expected one of {list(names)})")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = walk(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            left = walk(node.left)
            if isinstance(node.op, ast.Pow):
                exp = walk(node.right)
                if not exp.is_constant():
                    raise ParseError("exponents must be constant")
                e = exp.constant_term()
                if e.im or e.pi_exp or e.re.denominator != 1:
                    raise ParseError(f"exponent must be an integer, got {e}")
                if e.re < 0:
                    if not left.is_constant() or left.is_zero():
                        raise ParseError("negative powers only of nonzero constants")
                    return MultiPoly.constant(left.constant_term() ** int(e.re), nvars)
                return left ** int(e.re)
            right = walk(node.right)
            if isinstance(node.op, ast.Add):
                return left + right
            if isinstance(node.op, ast.Sub):
                return left - right
            if isinstance(node.op, ast.Mult):
                return left * right
            if isinstance(node.op, ast.Div):
                if not right.is_constant() or right.is_zero():
                    raise ParseError("division only by a nonzero constant")
                return left / right.constant_term()
        raise ParseError(f"unsupported syntax in {text!r}")

    try:
        return walk(tree)
    except PiLedgerError as exc:
        raise ParseError(f"{text!r}: {exc}") from exc


def parse_scalar(text: str) -> Scalar:
    if isinstance(text, (int, Fraction, Scalar)):
        return Scalar.coerce(text)
    p = parse_polynomial(str(text), [])
    return p.constant_term()


def parse_vector(text: str) -> LinearForm:
    """``"1,-2,3/4"`` -> LinearForm."""
    parts = [t for t in text.replace(" ", "").split(",") if t != ""]
    if not parts:
        raise ParseError(f"empty vector {text!r}")
    return LinearForm(as_fraction(t) for t in parts)


def parse_form_expr(text: str, dim: int) -> LinearForm:
    """``"e1+e2"`` / ``"2*e1-e3"`` / ``"1,1"`` -> LinearForm of length ``dim``."""
    text = text.strip()
    if "e" not in text:
        form = parse_vector(text)
        if form.dim != dim:
            raise ParseError(f"{text!r} has length {form.dim}, expected {dim}")
        return form
    p = parse_polynomial(text, [f"e{k + 1}" for k in range(dim)])
    if p.degree() > 1 or p.constant_term():
        raise ParseError(f"{text!r} is not a linear combination of e1..e{dim}")
    coeffs = []
    for k in range(dim):
        e = [0] * dim
        e[k] = 1
        c = p.coefficient(e)
        if c.im or c.pi_exp:
            raise ParseError(f"{text!r} must have rational coefficients")
        coeffs.append(c.re)
    return LinearForm(coeffs)
