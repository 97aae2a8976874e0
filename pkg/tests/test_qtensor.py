import numpy as np
import pytest

from ldg2d import qtensor as qt

from conftest import random_tensors

RNG = np.random.default_rng(20240601)


def from_diag(*diag):
    return qt.from_matrix(np.diag(diag).astype(float))


def test_basis_is_orthonormal_and_traceless():
    eye = np.eye(5)
    mats = qt.to_matrix(eye)
    for i in range(5):
        assert abs(np.trace(mats[i])) == 0.0
        assert np.allclose(mats[i], mats[i].T)
        for j in range(5):
            assert np.sum(mats[i] * mats[j]) == pytest.approx(
                float(i == j), abs=1e-15
            )


def test_matrix_roundtrip():
    q = RNG.standard_normal((100, 5))
    assert np.abs(qt.from_matrix(qt.to_matrix(q)) - q).max() < 1e-14


def test_norm_matches_frobenius():
    q = RNG.standard_normal((1000, 5))
    frob = np.sqrt(np.sum(qt.to_matrix(q) ** 2, axis=(-2, -1)))
    assert np.abs(qt.norm(q) / frob - 1.0).max() < 1e-14


def test_trace2_zero_tensor():
    assert qt.trace2(np.zeros(5)) == 0.0


def test_trace2_vacuum_normalization():
    n = np.array([1.0, 0.0, 0.0])
    vac = qt.from_matrix(np.sqrt(1.5) * (np.outer(n, n) - np.eye(3) / 3))
    assert qt.trace2(vac) == pytest.approx(1.0, abs=1e-14)


def test_traces_match_dense_eigensolver():
    q = random_tensors(RNG, 2000)
    w = np.linalg.eigvalsh(qt.to_matrix(q))
    scale = np.maximum(qt.norm(q), 1.0)
    assert np.abs(qt.trace2(q) - (w**2).sum(-1)).max() < 1e-11
    assert (np.abs(qt.trace3(q) - (w**3).sum(-1)) / scale**3).max() < 1e-13


def test_trace3_odd_symmetric_cases():
    assert qt.trace3(from_diag(1, -1, 0) / np.sqrt(2)) == pytest.approx(0.0, abs=1e-15)
    assert qt.trace3(from_diag(2 / 3, -1 / 3, -1 / 3)) == pytest.approx(2 / 9, abs=1e-15)


def test_biaxiality_landmarks():
    uniaxial = from_diag(2 / 3, -1 / 3, -1 / 3)
    assert qt.biaxiality(uniaxial) == pytest.approx(0.0, abs=1e-12)
    balanced = from_diag(1, -1, 0) / np.sqrt(2)
    assert qt.biaxiality(balanced) == pytest.approx(1.0, abs=1e-12)
    assert qt.biaxiality(np.zeros(5)) == 0.0


def test_biaxiality_is_one_at_half_ratio():
    # r = 1/2 is the maximally biaxial ray
    n = np.array([1.0, 0.0, 0.0])
    m = np.array([0.0, 1.0, 0.0])
    q = qt.compose(np.array(2.3), np.array(0.5), n, m)
    assert qt.biaxiality(q) == pytest.approx(1.0, abs=1e-12)


def test_biaxiality_bounds_bulk_random():
    q = random_tensors(RNG, 100_000, low=qt.TOL_ZERO, high=10.0)
    beta = qt.biaxiality(q)
    assert beta.min() >= 0.0 and beta.max() <= 1.0


def test_biaxiality_ratio_identity():
    q = random_tensors(RNG, 100_000, low=1e-3, high=10.0)
    rep = qt.represent(q)
    r = rep.biaxial_ratio
    predicted = 27 * r**2 * (1 - r) ** 2 / (4 * (r**2 - r + 1) ** 3)
    assert np.abs(qt.biaxiality(q) - predicted).max() < 1e-9


def test_eigensystem_zero_tensor_flagged():
    lam, vecs, degenerate = qt.eigensystem(np.zeros(5))
    assert np.all(lam == 0.0)
    assert degenerate
    assert np.allclose(vecs @ vecs.T, np.eye(3), atol=1e-14)


def test_eigensystem_axis_tensor():
    q = np.sqrt(1.5) * from_diag(-1 / 3, -1 / 3, 2 / 3)
    lam, vecs, degenerate = qt.eigensystem(q)
    assert lam[0] == pytest.approx(np.sqrt(2 / 3), abs=1e-14)
    assert lam[1] == pytest.approx(-np.sqrt(1 / 6), abs=1e-14)
    assert lam[2] == pytest.approx(-np.sqrt(1 / 6), abs=1e-14)
    assert abs(abs(vecs[2, 0]) - 1.0) < 1e-12  # leading vector is +-e3
    assert degenerate  # repeated lower pair


def test_eigensystem_residuals_random():
    q = random_tensors(RNG, 5000, low=1e-6, high=10.0)
    lam, vecs, _ = qt.eigensystem(q)
    nq = qt.norm(q)
    assert (np.abs(lam.sum(-1)) / np.maximum(nq, 1e-300)).max() < 1e-12
    res = np.einsum("nij,njk->nik", qt.to_matrix(q), vecs) - lam[:, None, :] * vecs
    assert (np.abs(res).max(axis=(1, 2)) / nq).max() < 1e-10
    gram = np.einsum("nij,nik->njk", vecs, vecs)
    assert np.abs(gram - np.eye(3)).max() < 1e-10


def test_eigensystem_near_degenerate_routing():
    # tensors a hair off the uniaxial ray still satisfy the residual contract
    base = from_diag(2 / 3, -1 / 3, -1 / 3)
    bumps = 10.0 ** -RNG.uniform(6, 14, size=(200, 1)) * RNG.standard_normal((200, 5))
    q = base + bumps
    lam, vecs, _ = qt.eigensystem(q)
    res = np.einsum("nij,njk->nik", qt.to_matrix(q), vecs) - lam[:, None, :] * vecs
    assert (np.abs(res).max(axis=(1, 2)) / qt.norm(q)).max() < 1e-10


def test_represent_uniaxial_example():
    rep = qt.represent(from_diag(2 / 3, -1 / 3, -1 / 3))
    assert rep.scalar_order == pytest.approx(1.0, abs=1e-14)
    assert rep.biaxial_ratio == pytest.approx(0.0, abs=1e-14)
    assert abs(abs(rep.director[0]) - 1.0) < 1e-12


def test_represent_rejects_zero():
    with pytest.raises(qt.ZeroTensor):
        qt.represent(np.zeros(5))


def test_represent_norm_identity():
    q = random_tensors(RNG, 20_000, low=1e-3, high=10.0)
    rep = qt.represent(q)
    s, r = rep.scalar_order, rep.biaxial_ratio
    assert np.abs(qt.trace2(q) - (2 / 3) * s**2 * (r**2 - r + 1)).max() < 1e-10
    # scalar order dominates sqrt(3/2) |Q|
    assert (s - np.sqrt(1.5) * qt.norm(q)).min() > -1e-12


def test_compose_zero_order():
    q = qt.compose(
        np.array(0.0), np.array(0.3), np.array([1.0, 0, 0]), np.array([0, 1.0, 0])
    )
    assert np.all(q == 0.0)


def test_compose_rejects_bad_frame():
    n = np.array([1.0, 0.0, 0.0])
    with pytest.raises(qt.InvalidFrame):
        qt.compose(np.array(1.0), np.array(0.0), n, n)
    with pytest.raises(qt.InvalidFrame):
        qt.compose(np.array(1.0), np.array(0.0), 2.0 * n, np.array([0, 1.0, 0]))


def test_compose_represent_roundtrip_bulk():
    q = random_tensors(RNG, 100_000, low=1e-3, high=10.0)
    rep = qt.represent(q)
    back = qt.compose(
        rep.scalar_order, rep.biaxial_ratio, rep.director, rep.second_director
    )
    rel = np.abs(back - q).max(axis=1) / qt.norm(q)
    assert rel.max() < 1e-10


def test_roundtrip_from_representation():
    # definition roundtrip at r = 1/2 (second director enters at half weight)
    count = 1000
    n = RNG.standard_normal((count, 3))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    helper = RNG.standard_normal((count, 3))
    m = np.cross(n, helper)
    m /= np.linalg.norm(m, axis=1, keepdims=True)
    s = RNG.uniform(0.5, 3.0, count)
    r = np.full(count, 0.5)
    q = qt.compose(s, r, n, m)
    rep = qt.represent(q)
    assert np.abs(rep.scalar_order - s).max() < 1e-10
    assert np.abs(rep.biaxial_ratio - 0.5).max() < 1e-10
