"""Hypothesis strategies for exact values."""
from fractions import Fraction


from hypothesis import strategies as st

from residue_engine.exact_algebra import MultiPoly, Scalar, rational_det

small_fractions = st.fractions(min_value=-20, max_value=20, max_denominator=12)
nonzero_fractions = small_fractions.filter(lambda q: q != 0)


@st.composite
def scalars(draw, pi_exp: int | None = 0):
    re = draw(small_fractions)
    im = draw(small_fractions)
    k = draw(st.integers(-3, 3)) if pi_exp is None else pi_exp
    return Scalar(re, im, k)


@st.composite
def polys(draw, nvars: int = 2, max_terms: int = 4, max_deg: int = 3):
    n = draw(st.integers(0, max_terms))
    terms = {}
    for _ in range(n):
        e = tuple(draw(st.integers(0, max_deg)) for _ in range(nvars))
        terms[e] = draw(scalars())
    return MultiPoly(nvars, terms)


@st.composite
def points(draw, dim: int):
    return tuple(draw(small_fractions) for _ in range(dim))


def frac(x) -> Fraction:
    return Fraction(x)


# plain-random samplers for weight systems


def random_system(rng, l, N):
    xi = [Fraction(rng.randint(1, 9), rng.randint(1, 4)) for _ in range(l)]
    if l == 2:
        xi[1] *= rng.choice([1, -1])
    while True:
        betas = []
        while len(betas) < N:
            b = tuple(Fraction(rng.randint(-4, 4), rng.choice([1, 1, 2, 3])) for _ in range(l))
            s = sum(x * y for x, y in zip(b, xi))
            if s == 0:
                continue
            betas.append(b if s > 0 else tuple(-x for x in b))
        if l == 1 or any(rational_det([a, b]) for a in betas for b in betas):
            return betas


def regular_point(rng, betas):
    """A point of the support cone off every wall, or outside the support."""
    l = len(betas[0])
    while True:
        if rng.random() < 0.8:
            s = [Fraction(rng.randint(1, 60), rng.randint(1, 7)) for _ in betas]
            y = tuple(sum(c * b[k] for c, b in zip(s, betas)) for k in range(l))
        else:
            y = tuple(Fraction(rng.randint(-40, 40), rng.randint(1, 7)) for _ in range(l))
        if l == 1:
            if y[0] != 0:
                return y
        elif all(rational_det([y, b]) != 0 for b in betas) and any(y):
            return y
