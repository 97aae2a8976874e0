import numpy as np
import pytest

from ldg2d import manifold, potential as pt, qtensor as qt

from conftest import random_tensors

RNG = np.random.default_rng(77)


def test_derive_params_unit_material(params_unit):
    p = params_unit
    assert p.s_star == pytest.approx(1.5, abs=1e-15)  # (1 + sqrt(25)) / 4
    assert p.t == pytest.approx(1.0)
    assert p.sigma == pytest.approx(1.0 / 12.0, abs=1e-15)
    assert p.mu1 == pytest.approx(7.0 / 24.0, abs=1e-12)
    assert p.mu2 == pytest.approx(1.25, abs=1e-12)
    assert p.defect_energy_rate == pytest.approx(0.75 * np.pi)


def test_derive_params_small_b_limit():
    p = pt.derive_params(1.0, 1e-9, 1.0)
    assert p.s_star == pytest.approx(np.sqrt(1.5), rel=1e-6)


def test_derive_params_rejects_nonpositive():
    for bad in [(0, 1, 1), (1, -2, 1), (1, 1, float("nan")), (1, 1, 0)]:
        with pytest.raises(pt.NonPositiveCoefficient):
            pt.derive_params(*bad)


def test_sandwich_constants_t100(params_t100):
    # proof-line formulas: mu1 = a(36t + sqrt(1+24t) + 1)/(144t),
    # sigma = a(1 + sqrt(1+24t))/(72t)
    p = params_t100
    t = p.t
    assert t == pytest.approx(100.0)
    assert p.mu1 == pytest.approx((36 * t + np.sqrt(1 + 24 * t) + 1) / (144 * t), rel=1e-12)
    assert p.sigma == pytest.approx((1 + np.sqrt(1 + 24 * t)) / (72 * t), rel=1e-12)
    assert p.sigma == pytest.approx(0.0069444444, rel=1e-6)
    assert p.mu1 == pytest.approx(0.2534722222, rel=1e-6)


def test_sandwich_large_t_trend():
    # sigma/a decays like 1/sqrt(t); mu1/a stays in a narrow band
    vals = []
    for t in (1.0, 10.0, 100.0, 1000.0):
        p = pt.derive_params(1.0, 1.0 / np.sqrt(t), 1.0)
        assert p.t == pytest.approx(t, rel=1e-12)
        vals.append((p.sigma * np.sqrt(t), p.mu1))
    scaled_sigma = [v[0] for v in vals]
    assert 0.05 < min(scaled_sigma) and max(scaled_sigma) < 0.12
    assert all(0.25 <= v[1] <= 0.30 for v in vals)


def test_bulk_potential_on_vacuum(params_unit):
    n = RNG.standard_normal((500, 3))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    vac = manifold.vacuum_tensor(n)
    assert np.abs(pt.bulk_potential(vac, params_unit)).max() < 1e-12


def test_bulk_potential_at_origin(params_unit):
    # f'(0) = k', the negated minimum of the uniaxial branch
    p = params_unit
    s = np.sqrt(1.5)
    branch_min = -(p.a_star / 3) * s**2 - (2 * p.b_star / 27) * s**3 + (p.c_star / 9) * s**4
    assert p.k_star == pytest.approx(-branch_min, rel=1e-14)
    assert pt.bulk_potential(np.zeros(5), p) == pytest.approx(p.k_star, rel=1e-14)
    assert p.k_star > 0


def test_bulk_potential_nonnegative_sampled(params_unit):
    q = random_tensors(RNG, 50_000, high=3.0)
    assert pt.bulk_potential(q, params_unit).min() > -1e-12


def test_maximally_biaxial_unit_norm_floor(params_unit):
    # |Q| = 1, beta = 1 tensors cost at least sigma
    n = np.array([1.0, 0.0, 0.0])
    m = np.array([0.0, 1.0, 0.0])
    s = np.sqrt(1.5 / (0.25 - 0.5 + 1.0))  # unit norm at r = 1/2
    q = qt.compose(np.array(s), np.array(0.5), n, m)
    assert qt.norm(q) == pytest.approx(1.0, abs=1e-12)
    assert qt.biaxiality(q) == pytest.approx(1.0, abs=1e-12)
    assert pt.bulk_potential(q, params_unit) >= params_unit.sigma - 1e-12


def test_gradient_zero_points(params_unit):
    n = RNG.standard_normal((200, 3))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    vac = manifold.vacuum_tensor(n)
    assert np.abs(pt.bulk_potential_grad(vac, params_unit)).max() < 1e-10
    assert np.all(pt.bulk_potential_grad(np.zeros(5), params_unit) == 0.0)


def test_gradient_matches_finite_differences(params_unit):
    q = random_tensors(RNG, 1000, low=0.01, high=2.0)
    grad = pt.bulk_potential_grad(q, params_unit)
    step = 1e-6
    fd = np.empty_like(grad)
    for k in range(5):
        e = np.zeros(5)
        e[k] = step
        fd[:, k] = (
            pt.bulk_potential(q + e, params_unit)
            - pt.bulk_potential(q - e, params_unit)
        ) / (2 * step)
    scale = np.abs(grad).max()
    assert np.abs(fd - grad).max() / scale < 1e-6


def test_gradient_matches_matrix_route(params_unit):
    # the coefficient-space fast path against the literal matrix formula
    p = params_unit
    q = random_tensors(RNG, 500, high=2.0)
    m = qt.to_matrix(q)
    m2 = np.einsum("nij,njk->nik", m, m)
    t2 = qt.trace2(q)[:, None, None]
    literal = -p.a_star * m - p.b_star * (m2 - t2 / 3 * np.eye(3)) + p.c_star * t2 * m
    assert np.abs(pt.bulk_potential_grad(q, p) - qt.from_matrix(literal)).max() < 1e-12


def test_sandwich_lower_bound_unit_ball(params_unit):
    p = params_unit
    q = random_tensors(RNG, 100_000, high=1.0)
    f = pt.bulk_potential(q, p)
    absq = qt.norm(q)
    beta = qt.biaxiality(q)
    lower = p.mu1 * (1 - absq) ** 2 + p.sigma * beta * absq**3
    assert (f - lower).min() > -1e-9


def test_sandwich_upper_bound_prolate_branch(params_unit):
    # The upper bound holds where the proof's inequality applies: tr Q^3 >= 0
    # (on the oblate branch it fails; see the acceptance suite and the
    # decisions ledger for the counterexample).
    p = params_unit
    q = random_tensors(RNG, 200_000, high=1.0)
    q = q[qt.trace3(q) >= 0.0]
    assert len(q) > 50_000
    f = pt.bulk_potential(q, p)
    absq = qt.norm(q)
    beta = qt.biaxiality(q)
    upper = p.mu2 * (1 - absq) ** 2 + 2 * p.sigma * beta * absq**3
    assert (upper - f).min() > -1e-9


def test_validate_hypotheses_unit_material(params_unit):
    consts, report = pt.validate_hypotheses(params_unit, samples=2000, seed=3)
    assert report["passed"]
    assert 0 < consts.m0 <= consts.M0
    assert 0 < consts.delta0 <= 0.5
    # critical points: the normal derivative vanishes on the manifold itself
    n = RNG.standard_normal((50, 3))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    vac = manifold.vacuum_tensor(n)
    grad = pt.bulk_potential_grad(vac, params_unit)
    assert np.abs(grad).max() < 1e-10


def test_validate_hypotheses_rejects_small_sample(params_unit):
    with pytest.raises(ValueError):
        pt.validate_hypotheses(params_unit, samples=10)


def test_validate_hypotheses_t100(params_t100):
    consts, report = pt.validate_hypotheses(params_t100, samples=1000, seed=1)
    assert report["passed"]
    assert consts.m0 > 0
