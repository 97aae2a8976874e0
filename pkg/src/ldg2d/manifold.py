"""Geometry of the vacuum manifold (rescaled units).

In the rescaled problem the bulk potential vanishes exactly on the set of
prolate uniaxial tensors of unit Frobenius norm,

    V = { sqrt(3/2) (n x n - Id/3) : |n| = 1 },

a copy of the real projective plane sitting on the unit sphere of the
coefficient space (antipodal directors give the same tensor).  This module
provides the covering map from directors, nearest-point projection, distance,
the minimizing geodesic loop, its energy rate, and a homotopy-class detector
for sampled loops.
"""

from __future__ import annotations

import numpy as np

from . import qtensor
from .qtensor import TOL_DEGENERATE_REL, compose, eigensystem, eigenvalues, trace2

#: Scalar order of vacuum tensors in rescaled units.
VACUUM_SCALAR_ORDER = np.sqrt(1.5)

#: Energy of the minimizing non-contractible loop per unit |log eps|:
#: half the integral of |c'|^2 = 3/4 over one period.
DEFECT_ENERGY_RATE = 0.75 * np.pi

#: Length of the minimizing non-contractible geodesic loop.
MIN_LOOP_LENGTH = np.pi * np.sqrt(3.0)


class NonUnitVector(ValueError):
    """Director is not unit length."""


class ProjectionUndefined(ValueError):
    """Leading eigenvalue is degenerate: no unique nearest vacuum tensor."""


class TooFarFromManifold(ValueError):
    """Loop sample too far from the vacuum manifold to lift."""


class SamplingTooCoarse(ValueError):
    """Consecutive loop frames overlap too little for sign continuation."""


def vacuum_tensor(director):
    """Unit-norm uniaxial tensor sqrt(3/2)(n x n - Id/3) for unit n.

    Invariant under n -> -n.  Raises :class:`NonUnitVector` if |n| deviates
    from 1 by more than 1e-10.
    """
    n = np.asarray(director, dtype=float)
    if np.any(np.abs(np.sum(n * n, axis=-1) - 1.0) > 2.1e-10):
        raise NonUnitVector("director must be unit length")
    nn = n[..., :, None] * n[..., None, :]
    return qtensor.from_matrix(VACUUM_SCALAR_ORDER * (nn - np.eye(3) / 3.0))


def vacuum_distance(q):
    """Distance of Q to the vacuum manifold: sqrt(|Q|^2 + 1 - sqrt(6) lam1).

    Defined for every Q (including degenerate spectra); the radicand is
    clamped at zero against roundoff on the manifold itself.
    """
    lam1 = eigenvalues(q)[..., 0]
    return np.sqrt(np.maximum(trace2(q) + 1.0 - np.sqrt(6.0) * lam1, 0.0))


def project_to_vacuum(q):
    """Nearest vacuum tensor, realized by the leading eigenvector.

    Requires a simple leading eigenvalue (gap > TOL_DEGENERATE_REL * |Q|);
    otherwise Q sits on the medial axis and :class:`ProjectionUndefined` is
    raised.
    """
    lam, vecs, _ = eigensystem(q)
    gap = lam[..., 0] - lam[..., 1]
    if np.any(gap <= TOL_DEGENERATE_REL * np.sqrt(trace2(q))):
        raise ProjectionUndefined("leading eigenvalue is degenerate")
    return vacuum_tensor(vecs[..., :, 0])


def geodesic_director(theta):
    """Director n(theta) = (cos th/2, sin th/2, 0) of the minimizing loop."""
    theta = np.asarray(theta, dtype=float)
    half = 0.5 * theta
    return np.stack(
        [np.cos(half), np.sin(half), np.zeros_like(half)], axis=-1
    )


def geodesic_loop(theta):
    """Minimizing non-contractible loop, traversed once over theta in [0, 2pi].

    The director makes half a turn in the plane, so the loop closes through
    the double cover.  The angle is reduced mod 2pi (an exact symmetry of the
    tensor loop) so the value at 2pi equals the value at 0 bit for bit.
    """
    theta = np.mod(np.asarray(theta, dtype=float), 2.0 * np.pi)
    return vacuum_tensor(geodesic_director(theta))


def geodesic_loop_velocity(theta):
    """Analytic theta-derivative of :func:`geodesic_loop` (|.|^2 = 3/4)."""
    theta = np.mod(np.asarray(theta, dtype=float), 2.0 * np.pi)
    n = geodesic_director(theta)
    half = 0.5 * theta
    dn = 0.5 * np.stack(
        [-np.sin(half), np.cos(half), np.zeros_like(half)], axis=-1
    )
    outer = n[..., :, None] * dn[..., None, :] + dn[..., :, None] * n[..., None, :]
    return qtensor.from_matrix(VACUUM_SCALAR_ORDER * outer)


def defect_energy_rate():
    """Minimal loop energy (1/2) int |c'|^2 dtheta over non-trivial loops."""
    return DEFECT_ENERGY_RATE


def defect_energy_rate_quadrature(nodes=10001):
    """Trapezoid evaluation of the loop energy from the analytic velocity.

    Cross-checks the closed-form rate; agrees with it to quadrature roundoff
    because the speed is constant.
    """
    theta = np.linspace(0.0, 2.0 * np.pi, nodes)
    speed2 = trace2(geodesic_loop_velocity(theta))
    return 0.5 * np.trapezoid(speed2, theta)


def min_loop_length():
    """Length of the shortest non-contractible loop, pi*sqrt(3)."""
    return MIN_LOOP_LENGTH


def homotopy_class(loop, delta0=0.5, min_overlap=0.7):
    """Classify a sampled loop of tensors as 'trivial' or 'nontrivial'.

    ``loop`` is an (N, 5) array of samples along a closed loop (the closing
    edge from the last sample back to the first is implicit).  The projected
    loop is lifted through the director double cover by sign continuation of
    the leading eigenvector; the class is nontrivial exactly when the lift
    ends antipodal to its start.

    Preconditions: every sample must satisfy vacuum_distance < ``delta0``
    (else :class:`TooFarFromManifold`) and consecutive leading eigenvectors
    must overlap with |dot| > ``min_overlap`` (else
    :class:`SamplingTooCoarse`).
    """
    loop = np.asarray(loop, dtype=float)
    if loop.ndim != 2 or loop.shape[0] < 3:
        raise ValueError("loop must be an (N, 5) array with N >= 3")
    dist = vacuum_distance(loop)
    if np.any(dist >= delta0):
        k = int(np.argmax(dist))
        raise TooFarFromManifold(
            f"sample {k} has distance {dist[k]:.3g} >= delta0 = {delta0:.3g}"
        )
    lam, vecs, _ = eigensystem(loop)
    gap = lam[:, 0] - lam[:, 1]
    if np.any(gap <= TOL_DEGENERATE_REL * np.sqrt(trace2(loop))):
        raise ProjectionUndefined("degenerate leading eigenvalue along loop")
    heads = vecs[:, :, 0]

    # Cyclic sign continuation; the product of edge signs is the holonomy.
    overlaps = np.sum(heads * np.roll(heads, -1, axis=0), axis=1)
    if np.any(np.abs(overlaps) <= min_overlap):
        k = int(np.argmin(np.abs(overlaps)))
        raise SamplingTooCoarse(
            f"frame overlap {abs(overlaps[k]):.3g} <= {min_overlap:.3g} "
            f"between samples {k} and {(k + 1) % len(loop)}"
        )
    holonomy = np.prod(np.sign(overlaps))
    return "nontrivial" if holonomy < 0 else "trivial"
