import math

import numpy as np
import pytest
from scipy import integrate

from onebit.core import ParamError, gray_bits
from onebit.distributions import (Gaussian, PointMass, ScaledStudentT, TwoPoint, Uniform,
                                  exact_region_quantities, family_check, make_hard_instance,
                                  spec_from_dict)
from onebit.schedule import Moment, SubGaussian, Variance, build_regions
from oracles import atoms, density, oracle_region

FIXTURES = [
    PointMass(0.37),
    TwoPoint(-1.0, 1.0, 0.5),
    TwoPoint(-0.5, 2.0, 0.8),
    Uniform(-math.sqrt(3), math.sqrt(3)),
    Gaussian(0.3, 1.0),
    ScaledStudentT(0.2, 1 / math.sqrt(3), 6.0),
    make_hard_instance(3, 1, 10.0, 1.0, 0.2),
]


def test_mean_and_variance_closed_forms():
    assert Uniform(0, 4).variance() == pytest.approx(16 / 12)
    assert TwoPoint(-1, 1, 0.5).variance() == 1.0
    assert ScaledStudentT(0, 1, 6).variance() == pytest.approx(1.5)
    assert Uniform(-math.sqrt(3), math.sqrt(3)).variance() == pytest.approx(1.0)


def test_sampling_examples():
    rng = np.random.default_rng(0)
    assert PointMass(3).sample(rng) == 3
    assert abs(TwoPoint(-0.5, 0.5, 0.5).sample(rng, 10**6).mean()) < 3e-3
    assert abs((Uniform(0, 4).sample(rng, 10**6) <= 2).mean() - 0.5) < 3e-3


@pytest.mark.parametrize("spec", FIXTURES, ids=lambda s: type(s).__name__)
def test_sample_mean_matches_mean(spec):
    x = spec.sample(np.random.default_rng(1), 200_000)
    se = math.sqrt(spec.variance() / x.size) + 1e-12
    assert abs(x.mean() - spec.mean()) < 5 * se


@pytest.mark.parametrize("spec", [s for s in FIXTURES if density(s) is not None], ids=lambda s: type(s).__name__)
@pytest.mark.parametrize("a, b", [(-3.0, -1.0), (-1.0, 0.5), (0.0, 2.0), (1.7, 9.0)])
def test_cdf_integral_matches_quadrature(spec, a, b):
    kinks = [k for k in (getattr(spec, "a", None), getattr(spec, "b", None)) if k is not None and a < k < b]
    want = integrate.quad(lambda t: float(spec.cdf(t)), a, b, points=kinks or None, epsabs=1e-13, limit=200)[0]
    assert spec.cdf_integral(a, b) == pytest.approx(want, abs=1e-10)


def test_region_quantity_examples():
    assert exact_region_quantities(Uniform(0, 4), 0, 2) == pytest.approx((0.25, 0.25, 0.5))
    assert exact_region_quantities(PointMass(1), 0, 2) == pytest.approx((0.5, 0.5, 1.0))
    assert exact_region_quantities(PointMass(5), 0, 2) == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("x, lc, rc, want", [
    (0.0, True, False, (1.0, 0.0, 0.0)),   # atom at the closed left end
    (2.0, True, False, (0.0, 0.0, 0.0)),   # atom at the open right end
    (2.0, False, True, (0.0, 1.0, 2.0)),   # atom at the closed right end
    (0.0, False, True, (0.0, 0.0, 0.0)),
])
def test_region_quantities_atoms_on_endpoints(x, lc, rc, want):
    assert exact_region_quantities(PointMass(x), 0.0, 2.0, lc, rc) == pytest.approx(want)


def _regions():
    out = []
    for tail in (Variance(), Moment(4.0), SubGaussian()):
        out += [(r.a, r.b, r.left_closed, r.right_closed) for r in build_regions(0.3, 1.0, tail, 5)]
    out += [(-0.5, 0.5, True, False), (-1.0, 1.0, False, True), (0.37, 1.0, True, False)]
    return sorted(set(out))


@pytest.mark.parametrize("spec", FIXTURES, ids=lambda s: type(s).__name__)
def test_identity_against_independent_oracle(spec):
    for a, b, lc, rc in _regions():
        p_a, p_b, mu = exact_region_quantities(spec, a, b, lc, rc)
        o_a, o_b, o_mu = oracle_region(spec, a, b, lc, rc)
        assert p_a == pytest.approx(o_a, abs=1e-9)
        assert p_b == pytest.approx(o_b, abs=1e-9)
        assert mu == pytest.approx(o_mu, abs=1e-8)
        assert a * p_a + b * p_b == pytest.approx(o_mu, abs=1e-8)


def test_region_quantities_reject_bad_regions():
    with pytest.raises(ParamError):
        exact_region_quantities(Gaussian(0, 1), 0, math.inf)
    with pytest.raises(ParamError):
        exact_region_quantities(Gaussian(0, 1), 1, 1)


@pytest.mark.parametrize("spec", FIXTURES, ids=lambda s: type(s).__name__)
@pytest.mark.parametrize("level", [1, 2, 3, 5])
def test_gray_prob_against_sampling(spec, level):
    lam = 4.0
    x = spec.sample(np.random.default_rng(level), 400_000)
    emp = gray_bits(x, level, lam).mean()
    p = spec.gray_prob(level, lam)
    se = math.sqrt(max(p * (1 - p), 1e-12) / x.size)
    assert abs(emp - p) <= 5 * se + 1e-12


def test_gray_prob_point_masses_exact():
    # atoms are evaluated directly with the Gray function
    for x in [-5.0, -4.0, -1.3, 0.0, 0.9, 2.0, 3.99, 4.0, 7.0]:
        for k in range(1, 7):
            assert PointMass(x).gray_prob(k, 4.0) == int(gray_bits(np.array([x]), k, 4.0)[0])


def test_hard_instance_examples():
    h = make_hard_instance(3, 1, 10, 1, 0.2)
    (x1, p1), (x2, p2) = sorted(atoms(h))
    assert (x1, x2) == (-4.5, -3.5) and (p1, p2) == pytest.approx((0.3, 0.7))
    assert h.mean() == pytest.approx(-3.8)
    h2 = make_hard_instance(1, -1, 4, 1, 0.1)
    assert h2.center == -2 and h2.mean() == pytest.approx(-2.1)
    x = h.sample(np.random.default_rng(0), 10**5)
    assert set(np.unique(x)) == {-4.5, -3.5}


@pytest.mark.parametrize("args, msg", [
    ((0, 1, 10, 1, 0.2), "j out of range"),
    ((10, 1, 10, 1, 0.2), "j out of range"),
    ((3, 0, 10, 1, 0.2), "sign"),
    ((3, 1, 10, 1, 0.5), "eps"),
])
def test_hard_instance_errors(args, msg):
    with pytest.raises(ParamError, match=msg):
        make_hard_instance(*args)


@pytest.mark.parametrize("spec, lam, sigma, ok", [
    (Gaussian(0.3, 1), 64, 1, True),
    (Gaussian(100, 1), 64, 1, False),
    (Uniform(0, 4), 10, 1, False),
    (TwoPoint(-1, 1, 0.5), 16, 1, True),
    (make_hard_instance(3, 1, 10, 1, 0.2), 10, 1, True),
])
def test_family_check(spec, lam, sigma, ok):
    res = family_check(spec, lam, sigma)
    assert res.in_family is ok
    assert (res.witness is None) is ok


@pytest.mark.parametrize("spec", FIXTURES, ids=lambda s: type(s).__name__)
def test_dict_roundtrip(spec):
    assert spec_from_dict(spec.to_dict()) == spec


def test_moment_bounds():
    # E|Z|^4 = 3 for a standard normal; Student-t with 6 dof has E|T|^4 = 3 * 36 / (4 * 2)
    assert Gaussian(0, 1).kth_moment_ub(4) == pytest.approx(3.0)
    assert ScaledStudentT(0, 1, 6).kth_moment_ub(4) == pytest.approx(13.5)
    assert ScaledStudentT(0, 1, 6).kth_moment_ub(6) == math.inf
