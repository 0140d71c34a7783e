import math
import random
from fractions import Fraction

import pytest

from residue_engine.cone_calculus import germ_at_zero, PiecewisePolynomial
from residue_engine.errors import DimensionError, RegularityError
from residue_engine.exact_algebra import I, ONE, ZERO, LinearForm, MultiPoly, Scalar
from residue_engine.localization_model import (
    FixedPointComponent,
    GroupData,
    ListClass,
    LocalizationModel,
    Normalization,
    UniformClass,
    critical_values,
    dh_function,
    fit_decay_slope,
    gaussian_localization_integral,
    pairing_general,
    pairing_rank1,
    pairing_with_theta,
    pushforward_terms,
    witten_decay_check,
    witten_q,
)
from residue_engine.model_library import (
    build_p1_power,
    build_projective_space,
    build_su3_demo,
    restrict_class_example1,
    restrict_class_example2,
)
from residue_engine.residue_core import ConeSpec, RaySpec, jk_residue_via_h

from oracles import (
    critical_values_rank1_oracle,
    p1_power_points,
    projective_points,
    rank1_pairing_oracle,
)

PSI = MultiPoly.variable(0, 1)
R_MINUS = ConeSpec([[-1]])


def psi_power(k):
    return PSI ** k


# ---------------------------------------------------------------------------
# data model
# ---------------------------------------------------------------------------


def test_group_data_invariants():
    g = GroupData.su2()
    assert (g.rank, g.dim, g.n_plus, g.weyl_order) == (1, 3, 1, 2)
    with pytest.raises(DimensionError):
        GroupData(1, 4, ([1],), 2)
    with pytest.raises(ValueError):
        GroupData(1, 1, (), 0)


def test_zero_moment_image_is_rejected():
    fp = FixedPointComponent("F", LinearForm([0]), ((LinearForm([1]), 1),))
    with pytest.raises(RegularityError):
        LocalizationModel(GroupData.su2(), [fp], 2)


def test_zero_weight_is_rejected():
    with pytest.raises(RegularityError):
        FixedPointComponent("F", LinearForm([1]), ((LinearForm([0]), 1),))


def test_pushforward_terms_projective_space():
    m = build_projective_space(3)
    terms = pushforward_terms(m)
    assert len(terms) == 4
    t0 = terms[0]
    assert t0.exponent == LinearForm([3])
    assert math.prod(f[0] ** p for f, p in t0.denominator) == 48
    assert t0.pole_order() == 3 and t0.numerator == MultiPoly.one(1)


def test_pushforward_terms_p1_cube():
    m = build_p1_power(3)
    terms = pushforward_terms(m)
    assert len(terms) == 8
    t = terms[0]
    assert t.exponent == LinearForm([3])
    assert t.denominator == ((LinearForm([1]), 3),)
    flat = pushforward_terms(m, with_symplectic_exponent=False)
    assert all(s.exponent.is_zero() for s in flat)


def test_missing_restriction_is_an_error():
    m = build_projective_space(3)
    with pytest.raises(ValueError):
        pushforward_terms(m, ListClass([MultiPoly.one(1)]))


# ---------------------------------------------------------------------------
# pairings
# ---------------------------------------------------------------------------


def test_pairing_examples():
    assert pairing_rank1(build_p1_power(3)) == ONE
    assert pairing_rank1(build_projective_space(3)) == Scalar(Fraction(1, 48))


def random_example1_class(rng, N, max_deg):
    names = [f"xi{j + 1}" for j in range(N)] + ["alpha"]
    terms = []
    for _ in range(rng.randint(1, 4)):
        deg = rng.randint(0, max_deg)
        mono = "*".join(rng.choice(names) for _ in range(deg)) or "1"
        terms.append(f"{rng.randint(-5, 5)}/{rng.randint(1, 4)}*{mono}")
    return " + ".join(terms)


@pytest.mark.parametrize("N", [3, 5])
def test_pairing_rank1_matches_laurent_oracle(N):
    from oracles import restrict_example1_oracle

    rng = random.Random(N)
    m = build_p1_power(N)
    names = [f"xi{j + 1}" for j in range(N)] + ["alpha"]
    from residue_engine.exact_algebra import parse_polynomial

    for _ in range(10):
        text = random_example1_class(rng, N, N)
        poly = parse_polynomial(text, names)
        pts = list(p1_power_points(N))
        restricted = [restrict_example1_oracle(poly, signs) for signs, _ in pts]
        expected = rank1_pairing_oracle([data for _, data in pts], restricted)
        assert pairing_rank1(m, restrict_class_example1(N, poly)) == expected


def test_general_path_matches_rank1_and_cone_independence():
    for m in (build_p1_power(3), build_p1_power(5), build_projective_space(5)):
        a = pairing_rank1(m)
        assert pairing_general(m) == a
        assert pairing_general(m, cone=R_MINUS) == a


def test_cone_independence_with_classes():
    m = build_projective_space(5)
    for k in range(0, 6):
        eta = UniformClass(psi_power(k))
        assert pairing_general(m, eta) == pairing_general(m, eta, cone=R_MINUS) == pairing_rank1(m, eta)


def test_degree_selection():
    # classes above the top degree have no 1/psi coefficient left
    m = build_p1_power(5)
    rng = random.Random(3)
    names = [f"xi{j + 1}" for j in range(5)] + ["alpha"]
    for _ in range(20):
        deg = rng.choice([3, 4, 5, 6])
        mono = "*".join(rng.choice(names) for _ in range(deg)) or "1"
        assert pairing_rank1(m, restrict_class_example1(5, mono)) == ZERO


def test_weyl_antisymmetry():
    rng = random.Random(8)
    for N in (3, 5):
        m = build_projective_space(N)
        eta = MultiPoly(2, {(a, b): Scalar(rng.randint(-3, 3)) for a in range(N) for b in range(N - a)})
        restriction = restrict_class_example2(N, eta)
        polys = [restriction.restrict(fp) for fp in m.fixed_points]
        mirrored = LocalizationModel(
            m.group,
            [
                FixedPointComponent(fp.label, -fp.moment_image, tuple((-f, n) for f, n in fp.weights))
                for fp in m.fixed_points
            ],
            m.dim_X,
        )
        flipped = [p.compose([-PSI]) for p in polys]
        assert pairing_rank1(mirrored, ListClass(flipped)) == pairing_rank1(m, ListClass(polys))


def test_point_integral_and_components():
    # merge the three (+,+,-)-type points of (P1)^3 into one component with integral 3
    base = build_p1_power(3)
    groups = {}
    for fp in base.fixed_points:
        key = (fp.moment_image, fp.weights)
        groups.setdefault(key, []).append(fp)
    merged = [
        FixedPointComponent(f"G{k}", mu, w, point_integral=len(v))
        for k, ((mu, w), v) in enumerate(sorted(groups.items(), key=lambda kv: kv[0][0].coeffs))
    ]
    m = LocalizationModel(GroupData.su2(), merged, 6)
    assert len(merged) == 4
    assert pairing_rank1(m) == pairing_general(m) == ONE


def test_class_terms_with_extra_powers():
    # a class term with an extra weight power equals dividing the class by that weight
    base = build_projective_space(3)
    pts = []
    for fp in base.fixed_points:
        pts.append(FixedPointComponent(fp.label, fp.moment_image, fp.weights, class_terms=((PSI ** 2, ((0, 1),)),)))
    m = LocalizationModel(base.group, pts, base.dim_X)
    eta = ListClass([PSI.scale(Scalar(1) / fp.weights[0][0][0]) for fp in base.fixed_points])
    assert pairing_rank1(m) == pairing_rank1(base, eta)
    assert pairing_general(m) == pairing_rank1(m)


def test_pairing_with_theta():
    m = build_p1_power(5)
    series = pairing_with_theta(m, None, 3)
    assert series.coefficient((0,)) == pairing_rank1(m) == Scalar(Fraction(-5, 2))
    pts = list(p1_power_points(5))
    eps1 = rank1_pairing_oracle([d for _, d in pts], [PSI * PSI * Scalar(Fraction(-1, 2))] * len(pts))
    assert series.coefficient((1,)) == eps1 == Scalar(Fraction(3, 2))
    # 4m > dim X_red: m = 2, 3 vanish
    assert series.coefficient((2,)) == ZERO and series.coefficient((3,)) == ZERO
    assert pairing_with_theta(m, None, 0) == MultiPoly.constant(pairing_general(m), 1)


def test_su3_demo_pairing_paths_agree():
    m = build_su3_demo()
    value = pairing_general(m)
    assert value == I
    assert pairing_general(m, ray=RaySpec([1, 3])) == value
    other = ConeSpec([[1, 1], [1, 3]])
    assert pairing_general(m, cone=other) == value
    from residue_engine.localization_model import default_cone

    varpi2 = m.group.varpi() ** 2
    terms = [t.with_numerator(t.numerator * varpi2) for t in pushforward_terms(m)]
    assert m.group.prefactor() * jk_residue_via_h(terms, default_cone(m)) == value


def test_abelian_pairing_is_i_power_times_volume():
    # for a torus, e^{i omega}[X_red] = i^d vol(X_red) and vol(X_red) = DH(0)
    m = build_su3_demo()
    d = m.dim_X // 2 - m.rank
    assert pairing_general(m) == I ** d * dh_function(m).evaluate([0, 0])


# ---------------------------------------------------------------------------
# DH and Q
# ---------------------------------------------------------------------------


def irwin_hall_dh(N: int, y: Fraction) -> Fraction:
    """Density of sum of N points of [-1, 1] with Lebesgue measure (mass 2^N)."""
    total = Fraction(0)
    for k in range(N + 1):
        x = y + N - 2 * k
        if x > 0:
            total += (-1) ** k * math.comb(N, k) * x ** (N - 1)
    return total / math.factorial(N - 1)


def bspline(knots, order, y):
    """Normalised B-spline (integral 1) by the Cox-de Boor recursion."""
    knots = sorted(knots)

    def B(i, k):
        if k == 1:
            return Fraction(1) if knots[i] <= y < knots[i + 1] else Fraction(0)
        out = Fraction(0)
        if knots[i + k - 1] != knots[i]:
            out += (y - knots[i]) / (knots[i + k - 1] - knots[i]) * B(i, k - 1)
        if knots[i + k] != knots[i + 1]:
            out += (knots[i + k] - y) / (knots[i + k] - knots[i + 1]) * B(i + 1, k - 1)
        return out

    return B(0, order) * order / (knots[-1] - knots[0])


def total_mass(R: PiecewisePolynomial) -> Fraction:
    mass = Fraction(0)
    for lo, hi, poly in R.intervals():
        anti = {(d + 1,): c / (d + 1) for (d,), c in poly.terms.items()}
        F = MultiPoly(1, anti)
        mass += (F.evaluate([hi]) - F.evaluate([lo])).re
    return mass


def test_dh_circle_on_p1():
    R = dh_function(build_p1_power(1))
    assert R.intervals() == [(Fraction(-1), Fraction(1), MultiPoly.one(1))]


@pytest.mark.parametrize("N", [3, 5, 7])
def test_dh_p1_power_matches_irwin_hall(N):
    R = dh_function(build_p1_power(N))
    for k in range(-4 * N, 4 * N + 1):
        y = Fraction(k, 3) + Fraction(1, 7)
        assert R.evaluate([y]) == Scalar(irwin_hall_dh(N, y))


@pytest.mark.parametrize("N", [3, 5])
def test_dh_projective_space_is_a_bspline(N):
    R = dh_function(build_projective_space(N))
    mass = total_mass(R)
    assert mass > 0
    knots = [N - 2 * k for k in range(N + 1)]
    for k in range(-3 * N, 3 * N + 1):
        y = Fraction(k, 2) + Fraction(1, 5)
        assert R.evaluate([y]) == Scalar(mass * bspline(knots, N, y))


def test_dh_support_and_positivity_rank1():
    for m in (build_p1_power(5), build_projective_space(7)):
        R = dh_function(m)
        images = [fp.moment_image[0] for fp in m.fixed_points]
        for lo, hi, poly in R.intervals():
            assert lo >= min(images) and hi <= max(images)
        assert total_mass(R) > 0


def test_dh_germ_for_point_quotient():
    # (P1)^3 // SU(2) is a point: the germ of R at 0 is a polynomial, Q's germ is -2i y^2
    m = build_p1_power(3)
    Q = witten_q(m)
    assert germ_at_zero(Q) == (PSI * PSI).scale(Scalar(0, -2))


def test_witten_q_is_y_times_i_derivative():
    m = build_p1_power(3)
    R, Q = dh_function(m), witten_q(m)
    for lo, hi, poly in R.intervals():
        mid = [(lo + hi) / 2]
        assert Q.evaluate(mid) == (PSI * poly.diff(0).scale(I)).evaluate(mid)


def test_witten_q_abelian_equals_dh():
    m = build_su3_demo()
    R, Q = dh_function(m), witten_q(m)
    for y in [(Fraction(1, 3), Fraction(2, 7)), (Fraction(-2), Fraction(1, 5)), (Fraction(4), Fraction(-3, 2))]:
        assert R.evaluate(y) == Q.evaluate(y)


def test_q_smooth_at_zero_for_regular_models():
    for m in (build_p1_power(5), build_projective_space(5), build_su3_demo()):
        germ_at_zero(witten_q(m))


# ---------------------------------------------------------------------------
# critical values and decay
# ---------------------------------------------------------------------------


def test_critical_values_examples():
    assert [str(n) for n in critical_values(build_p1_power(3)).norms] == ["0", "1", "9"]
    assert critical_values(build_p1_power(3)).as_text() == ["0", "1", "3"]
    assert critical_values(build_projective_space(5)).as_text() == ["0", "1", "3", "5"]
    single = LocalizationModel(GroupData.su2(), [FixedPointComponent("F", LinearForm([2]), ((LinearForm([1]), 1),))], 2)
    assert critical_values(single).as_text() == ["2"]


def test_critical_values_rank1_oracle():
    rng = random.Random(4)
    for _ in range(30):
        images = {Fraction(rng.choice([-1, 1]) * rng.randint(1, 12), rng.randint(1, 3)) for _ in range(rng.randint(1, 6))}
        pts = [FixedPointComponent(f"F{k}", LinearForm([mu]), ((LinearForm([1]), 1),)) for k, mu in enumerate(sorted(images))]
        m = LocalizationModel(GroupData.su2(), pts, 2)
        found = {b[0] for b in critical_values(m).betas}
        assert found == critical_values_rank1_oracle(images)


def test_critical_values_rank2_contain_singletons_and_origin():
    m = build_su3_demo()
    B = critical_values(m)
    texts = set(B.as_text())
    assert "0,0" in texts
    for fp in m.fixed_points:
        assert fp.moment_image.to_text() in texts
    assert list(B.norms) == sorted(B.norms)


def test_decay_samples_shrink():
    samples = witten_decay_check(build_p1_power(3), [0.2, 0.1, 0.05, 0.02])
    diffs = [d for _, d in samples]
    assert all(math.isfinite(d) and d > 0 for d in diffs)
    assert diffs == sorted(diffs, reverse=True)
    assert abs(fit_decay_slope(samples) - 1) < 0.1


def test_gaussian_path_theta_terms():
    # after calibration on (P1)^3 every eps^k coefficient reproduces pairing_with_theta
    ref = gaussian_localization_integral(build_p1_power(3)).normalized()
    kappa = Scalar(1) / ref.coefficient(0)
    for N in (5, 7):
        G = gaussian_localization_integral(build_p1_power(N)).normalized()
        assert G.sqrt2pi_exp == ref.sqrt2pi_exp
        theta = pairing_with_theta(build_p1_power(N), None, 3)
        for k in range(4):
            assert G.coefficient(k) * kappa == theta.coefficient((k,))


def test_narrow_cone_contains_direction_and_keeps_signs():
    from residue_engine.localization_model import narrow_cone

    rng = random.Random(17)
    for _ in range(50):
        l = rng.randint(1, 3)
        xi = LinearForm([Fraction(rng.randint(-9, 9), rng.randint(1, 4)) or 1 for _ in range(l)])
        forms = []
        while len(forms) < 5:
            f = LinearForm([rng.randint(-4, 4) for _ in range(l)])
            if f.dot(xi.coeffs):
                forms.append(f)
        cone = narrow_cone(xi, forms)
        assert len(cone.generators) == l
        assert cone.interior_point == xi.scale(l)
        for f in forms:
            side = f.dot(xi.coeffs) > 0
            assert all((f.dot(g.coeffs) > 0) == side and f.dot(g.coeffs) != 0 for g in cone.generators)
    # mixed signs used to collapse the cone
    cone = narrow_cone(LinearForm([2, -3]), [LinearForm([1, 0]), LinearForm([0, 1])])
    assert len(cone.generators) == 2
