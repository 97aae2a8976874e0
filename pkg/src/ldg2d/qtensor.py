"""Algebra of traceless symmetric 3x3 tensors (the configuration space).

A Q-tensor is stored as five real coefficients in a fixed orthonormal basis
of the space of traceless symmetric matrices, so that symmetry and zero trace
hold structurally and the Euclidean norm of the coefficients equals the
Frobenius norm of the matrix.  The basis used throughout is

    E0 = diag(-1, -1, 2) / sqrt(6)
    E1 = diag(1, -1, 0) / sqrt(2)
    E2 = (e1 x e2 + e2 x e1) / sqrt(2)
    E3 = (e1 x e3 + e3 x e1) / sqrt(2)
    E4 = (e2 x e3 + e3 x e2) / sqrt(2)

All functions are vectorized: a "tensor" argument is an ndarray of shape
(..., 5) and operations broadcast over the leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Below this Frobenius norm a tensor is treated as isotropic (exactly zero).
TOL_ZERO = 1e-12
# Eigenvalue gaps below this fraction of |Q| are flagged as degenerate.
TOL_DEGENERATE_REL = 1e-8

# Gaps below this fraction of |Q| are routed to LAPACK instead of the
# cross-product eigenvector construction, whose error grows like 1/gap.
_EIGH_FALLBACK_REL = 1e-4

_SQRT6 = np.sqrt(6.0)
_SQRT2 = np.sqrt(2.0)


class ZeroTensor(ValueError):
    """Operation undefined on the (numerically) zero tensor."""


class InvalidFrame(ValueError):
    """Director pair is not orthonormal."""


def to_matrix(q):
    """Matrix view of coefficient array(s) ``q`` of shape (..., 5).

    The result has shape (..., 3, 3), is exactly symmetric and has exactly
    zero trace by construction of the basis.
    """
    q = np.asarray(q, dtype=float)
    m = np.empty(q.shape[:-1] + (3, 3))
    d0 = q[..., 0] / _SQRT6
    d1 = q[..., 1] / _SQRT2
    m[..., 0, 0] = -d0 + d1
    m[..., 1, 1] = -d0 - d1
    m[..., 2, 2] = 2.0 * d0
    m[..., 0, 1] = m[..., 1, 0] = q[..., 2] / _SQRT2
    m[..., 0, 2] = m[..., 2, 0] = q[..., 3] / _SQRT2
    m[..., 1, 2] = m[..., 2, 1] = q[..., 4] / _SQRT2
    return m


def from_matrix(m):
    """Coefficients of the traceless-symmetric part of matrix array(s) ``m``.

    For input already in the space this inverts :func:`to_matrix` exactly;
    otherwise it is the orthogonal (Frobenius) projection onto it.
    """
    m = np.asarray(m, dtype=float)
    q = np.empty(m.shape[:-2] + (5,))
    q[..., 0] = (2.0 * m[..., 2, 2] - m[..., 0, 0] - m[..., 1, 1]) / _SQRT6
    q[..., 1] = (m[..., 0, 0] - m[..., 1, 1]) / _SQRT2
    q[..., 2] = (m[..., 0, 1] + m[..., 1, 0]) / _SQRT2
    q[..., 3] = (m[..., 0, 2] + m[..., 2, 0]) / _SQRT2
    q[..., 4] = (m[..., 1, 2] + m[..., 2, 1]) / _SQRT2
    return q


def trace2(q):
    """tr Q^2, the squared Frobenius norm."""
    q = np.asarray(q, dtype=float)
    return np.sum(q * q, axis=-1)


def norm(q):
    """Frobenius norm |Q|."""
    return np.sqrt(trace2(q))


def _entries(q):
    # the six independent matrix entries, without materializing (..., 3, 3)
    d0 = q[..., 0] / _SQRT6
    d1 = q[..., 1] / _SQRT2
    xx = -d0 + d1
    yy = -d0 - d1
    zz = 2.0 * d0
    xy = q[..., 2] / _SQRT2
    xz = q[..., 3] / _SQRT2
    yz = q[..., 4] / _SQRT2
    return xx, yy, zz, xy, xz, yz


def trace3(q):
    """tr Q^3, computed as 3 det Q (valid because tr Q = 0)."""
    q = np.asarray(q, dtype=float)
    xx, yy, zz, xy, xz, yz = _entries(q)
    det = (
        xx * (yy * zz - yz * yz)
        - xy * (xy * zz - yz * xz)
        + xz * (xy * yz - yy * xz)
    )
    return 3.0 * det


def sym_square(q):
    """Coefficients of the traceless part of Q^2 (the projected square)."""
    q = np.asarray(q, dtype=float)
    xx, yy, zz, xy, xz, yz = _entries(q)
    sxx = xx * xx + xy * xy + xz * xz
    syy = xy * xy + yy * yy + yz * yz
    szz = xz * xz + yz * yz + zz * zz
    out = np.empty(q.shape)
    out[..., 0] = (2.0 * szz - sxx - syy) / _SQRT6
    out[..., 1] = (sxx - syy) / _SQRT2
    out[..., 2] = _SQRT2 * (xy * (xx + yy) + xz * yz)
    out[..., 3] = _SQRT2 * (xz * (xx + zz) + xy * yz)
    out[..., 4] = _SQRT2 * (yz * (yy + zz) + xy * xz)
    return out


def biaxiality(q):
    """Biaxiality parameter in [0, 1]: 1 - 6 (tr Q^3)^2 / (tr Q^2)^3.

    Zero on uniaxial tensors, one where tr Q^3 = 0.  Defined as 0 on tensors
    with |Q| <= TOL_ZERO (isotropic convention).
    """
    t2 = trace2(q)
    t3 = trace3(q)
    safe = np.maximum(t2, TOL_ZERO**2)
    beta = 1.0 - 6.0 * t3 * t3 / safe**3
    beta = np.clip(beta, 0.0, 1.0)
    return np.where(t2 > TOL_ZERO**2, beta, 0.0)


def eigenvalues(q):
    """Eigenvalues of Q, shape (..., 3), sorted descending.

    Trigonometric closed form for traceless symmetric matrices; the acos
    argument is clamped to [-1, 1] so the computation is branch-free.
    """
    t2 = trace2(q)
    t3 = trace3(q)
    p = np.sqrt(np.maximum(t2, 0.0) / 6.0)
    p3 = np.maximum(p, TOL_ZERO) ** 3
    arg = np.clip(t3 / (6.0 * p3), -1.0, 1.0)
    phi = np.arccos(arg) / 3.0
    lam = np.empty(np.shape(t2) + (3,))
    lam[..., 0] = 2.0 * p * np.cos(phi)
    lam[..., 1] = 2.0 * p * np.cos(phi - 2.0 * np.pi / 3.0)
    lam[..., 2] = 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    return lam


def _fix_signs(vecs):
    # First component of magnitude > 1e-12 is made positive; deterministic
    # and stable for unit vectors.
    comp = np.moveaxis(vecs, -2, -1)  # (..., 3 vectors, 3 components)
    significant = np.abs(comp) > 1e-12
    first = np.argmax(significant, axis=-1)
    lead = np.take_along_axis(comp, first[..., None], axis=-1)[..., 0]
    sign = np.where(lead < 0.0, -1.0, 1.0)
    return vecs * sign[..., None, :]


def eigensystem(q):
    """Full eigensystem of Q.

    Returns ``(lam, vecs, degenerate)`` where ``lam`` has shape (..., 3) with
    lam[..., 0] >= lam[..., 1] >= lam[..., 2], ``vecs[..., :, k]`` is the unit
    eigenvector of lam[..., k], and ``degenerate`` flags entries whose minimal
    eigenvalue gap is below TOL_DEGENERATE_REL * |Q| (for those an arbitrary
    orthonormal basis of the eigenspaces is returned).

    Eigenvectors for well-separated spectra come from cross products of rows
    of Q - lam*I; near-degenerate entries fall back to LAPACK.
    """
    q = np.asarray(q, dtype=float)
    scalar_input = q.ndim == 1
    q = np.atleast_2d(q)

    lam = eigenvalues(q)
    m = to_matrix(q)
    nq = norm(q)
    scale = np.maximum(nq, TOL_ZERO)

    gap = np.minimum(lam[..., 0] - lam[..., 1], lam[..., 1] - lam[..., 2])
    degenerate = gap <= TOL_DEGENERATE_REL * nq
    needs_lapack = gap <= _EIGH_FALLBACK_REL * scale

    vecs = np.empty(q.shape[:-1] + (3, 3))

    analytic = ~needs_lapack
    if np.any(analytic):
        ma = m[analytic]
        la = lam[analytic]
        v1 = _null_direction(ma - la[..., 0, None, None] * np.eye(3))
        v3 = _null_direction(ma - la[..., 2, None, None] * np.eye(3))
        v3 = v3 - np.sum(v3 * v1, axis=-1, keepdims=True) * v1
        v3 /= np.linalg.norm(v3, axis=-1, keepdims=True)
        v2 = np.cross(v3, v1)
        vecs[analytic] = np.stack([v1, v2, v3], axis=-1)

    if np.any(needs_lapack):
        w, v = np.linalg.eigh(to_matrix(q[needs_lapack]))
        # LAPACK sorts ascending; flip to the descending convention.
        lam[needs_lapack] = w[..., ::-1]
        vecs[needs_lapack] = v[..., ::-1]

    vecs = _fix_signs(vecs)
    if scalar_input:
        return lam[0], vecs[0], bool(degenerate[0])
    return lam, vecs, degenerate


def _null_direction(a):
    # Cross products of row pairs of a (near-)singular symmetric matrix;
    # the largest one spans the null direction.
    r0, r1, r2 = a[..., 0, :], a[..., 1, :], a[..., 2, :]
    cands = np.stack(
        [np.cross(r0, r1), np.cross(r0, r2), np.cross(r1, r2)], axis=-2
    )
    norms = np.linalg.norm(cands, axis=-1)
    best = np.argmax(norms, axis=-1)
    v = np.take_along_axis(cands, best[..., None, None], axis=-2)[..., 0, :]
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


@dataclass(frozen=True)
class Representation:
    """(s, r, n, m) coordinates: Q = s{(n x n - Id/3) + r (m x m - Id/3)}.

    ``scalar_order`` s >= 0, ``biaxial_ratio`` r in [0, 1]; ``director`` and
    ``second_director`` are the orthonormal eigenvectors of the two leading
    eigenvalues (sign convention: first significant component positive).
    """

    scalar_order: np.ndarray
    biaxial_ratio: np.ndarray
    director: np.ndarray
    second_director: np.ndarray
    eigvals: np.ndarray


def represent(q):
    """Decompose Q into its (s, r, n, m) representation.

    Uses s = 2*lam1 + lam2 and r = (lam1 + 2*lam2) / (2*lam1 + lam2) for the
    descending eigenvalues.  Raises :class:`ZeroTensor` when |Q| <= TOL_ZERO.
    """
    q = np.asarray(q, dtype=float)
    if np.any(norm(q) <= TOL_ZERO):
        raise ZeroTensor("representation undefined for |Q| <= %g" % TOL_ZERO)
    lam, vecs, _ = eigensystem(q)
    s = 2.0 * lam[..., 0] + lam[..., 1]
    r = np.clip((lam[..., 0] + 2.0 * lam[..., 1]) / s, 0.0, 1.0)
    return Representation(
        scalar_order=s,
        biaxial_ratio=r,
        director=vecs[..., :, 0],
        second_director=vecs[..., :, 1],
        eigvals=lam,
    )


def compose(s, r, n, m):
    """Assemble Q = s{(n x n - Id/3) + r (m x m - Id/3)}.

    ``n`` and ``m`` must be an orthonormal pair (checked to 1e-8, else
    :class:`InvalidFrame`).  Broadcasts over leading axes.
    """
    s = np.asarray(s, dtype=float)
    r = np.asarray(r, dtype=float)
    n = np.asarray(n, dtype=float)
    m = np.asarray(m, dtype=float)
    bad_unit = np.abs(np.sum(n * n, axis=-1) - 1.0) > 2e-8
    bad_unit |= np.abs(np.sum(m * m, axis=-1) - 1.0) > 2e-8
    bad_dot = np.abs(np.sum(n * m, axis=-1)) > 1e-8
    if np.any(bad_unit | bad_dot):
        raise InvalidFrame("directors must be unit length and orthogonal")
    nn = n[..., :, None] * n[..., None, :]
    mm = m[..., :, None] * m[..., None, :]
    eye = np.eye(3)
    mat = s[..., None, None] * (
        nn - eye / 3.0 + r[..., None, None] * (mm - eye / 3.0)
    )
    return from_matrix(mat)
