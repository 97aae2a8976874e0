import numpy as np
import pytest
from scipy import optimize

from ldg2d import manifold as mf, potential as pt, qtensor as qt

from conftest import random_tensors

RNG = np.random.default_rng(2718)


def exact_offset(q, target):
    return np.sqrt(np.sum((q - target) ** 2, axis=-1))


def test_vacuum_tensor_axis():
    v = mf.vacuum_tensor(np.array([0.0, 0.0, 1.0]))
    expected = np.sqrt(1.5) * np.diag([-1 / 3, -1 / 3, 2 / 3])
    assert np.abs(qt.to_matrix(v) - expected).max() < 1e-15
    assert qt.norm(v) == pytest.approx(1.0, abs=1e-12)


def test_vacuum_tensor_head_tail_symmetry():
    n = RNG.standard_normal((100, 3))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    assert np.array_equal(mf.vacuum_tensor(n), mf.vacuum_tensor(-n))


def test_vacuum_tensor_lies_in_potential_well(params_unit):
    n = RNG.standard_normal((200, 3))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    assert np.abs(pt.bulk_potential(mf.vacuum_tensor(n), params_unit)).max() < 1e-12


def test_vacuum_tensor_rejects_non_unit():
    with pytest.raises(mf.NonUnitVector):
        mf.vacuum_tensor(np.array([1.0, 1.0, 0.0]))


def test_projection_fixed_point_and_scaling():
    v = mf.vacuum_tensor(np.array([1.0, 0.0, 0.0]))
    assert exact_offset(mf.project_to_vacuum(v), v) < 1e-12
    assert exact_offset(mf.project_to_vacuum(2.0 * v), v) < 1e-12


def test_projection_idempotent():
    q = random_tensors(RNG, 2000, low=0.05, high=3.0)
    proj = mf.project_to_vacuum(q)
    assert exact_offset(mf.project_to_vacuum(proj), proj).max() < 1e-12


def test_projection_undefined_on_medial_axis():
    oblate = -mf.vacuum_tensor(np.array([0.0, 0.0, 1.0]))  # lam1 = lam2
    with pytest.raises(mf.ProjectionUndefined):
        mf.project_to_vacuum(oblate)


def test_projection_beats_sphere_sampling():
    q = random_tensors(RNG, 1000, low=0.05, high=3.0)
    proj = mf.project_to_vacuum(q)
    best = exact_offset(q, proj)
    n = RNG.standard_normal((10_000, 3))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    candidates = mf.vacuum_tensor(n)
    sampled = np.min(
        np.linalg.norm(q[:, None, :] - candidates[None, :, :], axis=-1), axis=1
    )
    assert (sampled - best).min() > -1e-12


def test_distance_landmarks():
    v = mf.vacuum_tensor(np.array([0.0, 1.0, 0.0]))
    assert mf.vacuum_distance(v) == pytest.approx(0.0, abs=1e-7)
    assert mf.vacuum_distance(np.zeros(5)) == pytest.approx(1.0, abs=1e-14)


def test_distance_closed_form_against_refined_oracle():
    # coarse sphere sampling then local descent over the director angles;
    # validates the closed form the hot path relies on
    q = random_tensors(RNG, 50, low=0.05, high=1.5)
    n = RNG.standard_normal((20_000, 3))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    candidates = mf.vacuum_tensor(n)
    dists = np.linalg.norm(q[:, None, :] - candidates[None, :, :], axis=-1)
    closed = mf.vacuum_distance(q)
    assert np.abs(dists.min(axis=1) - closed).max() < 1e-3

    for k in range(q.shape[0]):
        i0 = int(np.argmin(dists[k]))
        th0 = np.arccos(np.clip(n[i0, 2], -1, 1))
        ph0 = np.arctan2(n[i0, 1], n[i0, 0])

        def offset(angles, qk=q[k]):
            th, ph = angles
            d = np.array(
                [np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)]
            )
            return float(np.sum((qk - mf.vacuum_tensor(d)) ** 2))

        res = optimize.minimize(offset, [th0, ph0], method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": 1e-24})
        assert abs(np.sqrt(res.fun) - closed[k]) < 1e-8


def test_distance_realized_by_projection():
    q = random_tensors(RNG, 5000, low=0.05, high=3.0)
    proj = mf.project_to_vacuum(q)
    assert np.abs(exact_offset(q, proj) - mf.vacuum_distance(q)).max() < 1e-10


def test_geodesic_loop_endpoints_and_closure():
    start = mf.geodesic_loop(0.0)
    assert exact_offset(start, mf.vacuum_tensor(np.array([1.0, 0, 0]))) < 1e-15
    assert np.array_equal(mf.geodesic_loop(0.0), mf.geodesic_loop(2.0 * np.pi))


def test_geodesic_loop_speed():
    theta = np.linspace(0.0, 2 * np.pi, 2001)
    h = 1e-6
    speed2 = qt.trace2((mf.geodesic_loop(theta + h) - mf.geodesic_loop(theta - h)) / (2 * h))
    assert np.abs(speed2 - 0.75).max() < 1e-8
    analytic = qt.trace2(mf.geodesic_loop_velocity(theta))
    assert np.abs(analytic - 0.75).max() < 1e-14


def test_defect_energy_rate_value_and_quadrature():
    assert mf.defect_energy_rate() == pytest.approx(2.356194490192345, abs=1e-12)
    quad = mf.defect_energy_rate_quadrature(nodes=10_001)
    assert abs(quad - 0.75 * np.pi) < 1e-10


def test_min_loop_length_from_energy_rate():
    # constant-speed loop: length^2 = 2 * (2 pi) * energy
    assert mf.min_loop_length() == pytest.approx(
        np.sqrt(4 * np.pi * mf.defect_energy_rate()), rel=1e-14
    )
    assert mf.min_loop_length() == pytest.approx(np.pi * np.sqrt(3.0), rel=1e-14)


def sample_loop(winding, count=128, jitter=None):
    theta = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
    loop = mf.geodesic_loop(winding * theta)
    if jitter is not None:
        loop = loop + jitter
    return loop


def test_homotopy_canonical_loops():
    assert mf.homotopy_class(sample_loop(1)) == "nontrivial"
    assert mf.homotopy_class(sample_loop(2)) == "trivial"
    constant = np.repeat(mf.vacuum_tensor(np.array([0.0, 0, 1]))[None, :], 64, axis=0)
    assert mf.homotopy_class(constant) == "trivial"


def test_homotopy_reparameterization_invariance():
    theta = np.sort(RNG.uniform(0.0, 2 * np.pi, 200))
    assert mf.homotopy_class(mf.geodesic_loop(theta)) == "nontrivial"


def test_homotopy_perturbation_invariance():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        jitter = rng.uniform(-1, 1, (128, 5))
        jitter *= 0.09 / np.abs(jitter).max()
        assert mf.homotopy_class(sample_loop(1, jitter=jitter)) == "nontrivial"
        assert mf.homotopy_class(sample_loop(2, jitter=jitter)) == "trivial"


def test_homotopy_error_cases():
    with pytest.raises(mf.TooFarFromManifold):
        mf.homotopy_class(0.2 * sample_loop(1))
    with pytest.raises(mf.SamplingTooCoarse):
        mf.homotopy_class(sample_loop(1, count=3))


def test_projection_gradient_comparison():
    # fields at uniform distance s from the manifold: the projected field's
    # Dirichlet energy obeys (1 - M s) E[proj] <= E[raw] with one fitted M
    from ldg2d import grid as gridmod
    from ldg2d.solver import energy

    dom = gridmod.Domain(kind="disk", radius=1.0)
    g = gridmod.build_grid(dom, 64)
    theta = np.arctan2(g.site_y, g.site_x)
    n0 = np.stack(
        [np.cos(theta / 2), np.sin(theta / 2), np.zeros_like(theta)], axis=-1
    )
    m0 = np.stack(
        [-np.sin(theta / 2), np.cos(theta / 2), np.zeros_like(theta)], axis=-1
    )
    base = mf.vacuum_tensor(n0)
    # unit normal at each site: the balanced biaxial direction at the frame
    p0 = np.cross(n0, m0)
    normal = (
        qt.from_matrix(m0[..., :, None] * m0[..., None, :])
        - qt.from_matrix(p0[..., :, None] * p0[..., None, :])
    ) / np.sqrt(2.0)

    def dirichlet_energy(values):
        params = pt.derive_params(1, 1, 1)
        f = gridmod.Field(grid=g, values=values, epsilon=1.0, params=params)
        return energy(f).dirichlet

    e_proj = dirichlet_energy(base)
    fit_s = 0.05
    e_fit = dirichlet_energy(base + fit_s * normal)
    m_fit = max(0.0, (e_proj - e_fit) / (fit_s * e_proj)) + 0.05
    for s in (0.01, 0.02, 0.1, 0.2):
        e_raw = dirichlet_energy(base + s * normal)
        proj = mf.project_to_vacuum(base + s * normal)
        assert exact_offset(proj, base).max() < 1e-10
        assert (1.0 - m_fit * s) * e_proj <= e_raw + 1e-9
