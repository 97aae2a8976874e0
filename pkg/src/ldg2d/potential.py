"""Bulk potential of the quartic Q-tensor model and derived constants.

Physical form (positive coefficients a, b, c; a grows as the temperature
drops below the supercooling point):

    f(Q) = k - (a/2) tr Q^2 - (b/3) tr Q^3 + (c/4) (tr Q^2)^2

minimized on uniaxial tensors of scalar order s* = (b + sqrt(b^2+24ac))/(4c).
All solver-facing quantities use the rescaled potential obtained by the
substitution Q = sqrt(2/3) s* Q', which places the minimizing set on the unit
sphere (scalar order sqrt(3/2)) and multiplies energies by 2 s*^2 / 3:

    f'(Q) = k' - (a'/2) tr Q^2 - (b'/3) tr Q^3 + (c'/4) (tr Q^2)^2,
    a' = a,  b' = sqrt(2/3) s* b,  c' = (2/3) s*^2 c.

The shifts k, k' make the respective minima exactly zero.  The module also
provides the uniaxiality/biaxiality sandwich constants (mu1, mu2, sigma) with

    mu1 (1-|Q|)^2 + sigma beta |Q|^3  <=  f'(Q)  <=  mu2 (1-|Q|)^2 + 2 sigma beta |Q|^3

for |Q| <= 1, and a numerical validation of the structural hypotheses the
asymptotic analysis rests on (normal non-degeneracy, quadratic growth near
the vacuum manifold, radial monotonicity outside the unit ball).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import manifold, qtensor
from .qtensor import from_matrix, to_matrix, trace2, trace3


class NonPositiveCoefficient(ValueError):
    """Material coefficients must be positive and finite."""


class HypothesisViolated(RuntimeError):
    """A structural hypothesis failed at a sampled configuration."""


@dataclass(frozen=True)
class MaterialParams:
    """Physical coefficients plus every derived constant the solver needs.

    Immutable; shared freely across workers.  Energies in rescaled units are
    converted to physical units by ``physical_scale``.
    """

    a: float
    b: float
    c: float
    #: dimensionless temperature parameter a*c/b^2
    t: float
    #: equilibrium scalar order of the physical potential
    s_star: float
    # rescaled coefficients (unit-sphere vacuum normalization)
    a_star: float
    b_star: float
    c_star: float
    #: shifts making min f = 0 (physical) and min f' = 0 (rescaled)
    k_phys: float
    k_star: float
    # sandwich constants, rescaled energy units
    mu1: float
    mu2: float
    sigma: float
    #: minimal defect energy per |log eps|, rescaled units
    defect_energy_rate: float = manifold.DEFECT_ENERGY_RATE

    @property
    def physical_scale(self):
        """Multiply rescaled energies by this to get physical units."""
        return 2.0 * self.s_star**2 / 3.0

    @property
    def core_scale(self):
        """sigma^(-1/2): the biaxial core radius in units of eps."""
        return 1.0 / np.sqrt(self.sigma)


def _uniaxial_branch_min(a, b, c):
    # min over s of the uniaxial section -(a/3)s^2 - (2b/27)s^3 + (c/9)s^4,
    # attained at the positive root of 2cs^2 - bs - 3a = 0.
    s = (b + np.sqrt(b * b + 24.0 * a * c)) / (4.0 * c)
    val = -(a / 3.0) * s**2 - (2.0 * b / 27.0) * s**3 + (c / 9.0) * s**4
    return s, val


def derive_params(a, b, c):
    """Build :class:`MaterialParams` from the physical coefficients.

    Raises :class:`NonPositiveCoefficient` unless a, b, c are positive finite
    reals.
    """
    coeffs = [float(a), float(b), float(c)]
    if not all(np.isfinite(v) and v > 0.0 for v in coeffs):
        raise NonPositiveCoefficient(f"need a, b, c > 0, got {coeffs}")
    a, b, c = coeffs

    s_star, g_min = _uniaxial_branch_min(a, b, c)
    k_phys = -g_min

    a_star = a
    b_star = np.sqrt(2.0 / 3.0) * s_star * b
    c_star = (2.0 / 3.0) * s_star**2 * c
    s_check, g_star_min = _uniaxial_branch_min(a_star, b_star, c_star)
    # the rescaled branch bottoms out at sqrt(3/2) by construction
    assert abs(s_check - np.sqrt(1.5)) < 1e-12 * np.sqrt(1.5)
    k_star = -g_star_min

    mu1, mu2, sigma = sandwich_constants(a, b, c)
    return MaterialParams(
        a=a, b=b, c=c, t=a * c / b**2, s_star=s_star,
        a_star=a_star, b_star=b_star, c_star=c_star,
        k_phys=k_phys, k_star=k_star, mu1=mu1, mu2=mu2, sigma=sigma,
    )


def sandwich_constants(a, b, c):
    """(mu1, mu2, sigma) of the uniaxiality/biaxiality sandwich bounds.

    With X = 1 - |Q| the quadratic factor is phi(X) = A + B X + C X^2 where
    A = a/2 + s*^2 c/3, B = b s*/9 - 2 s*^2 c/3, C = s*^2 c/6; mu1 and mu2
    are its min and max over [0, 1], and sigma = b s*/18.
    """
    s, _ = _uniaxial_branch_min(float(a), float(b), float(c))
    A = a / 2.0 + s * s * c / 3.0
    B = b * s / 9.0 - 2.0 * s * s * c / 3.0
    C = s * s * c / 6.0
    phi = lambda x: A + B * x + C * x * x
    xv = min(max(-B / (2.0 * C), 0.0), 1.0)
    mu1 = min(phi(0.0), phi(1.0), phi(xv))
    mu2 = max(phi(0.0), phi(1.0))
    sigma = b * s / 18.0
    return mu1, mu2, sigma


def bulk_potential(q, params):
    """Rescaled bulk potential, >= 0 and zero exactly on the vacuum manifold."""
    t2 = trace2(q)
    t3 = trace3(q)
    return (
        params.k_star
        - 0.5 * params.a_star * t2
        - params.b_star / 3.0 * t3
        + 0.25 * params.c_star * t2 * t2
    )


def bulk_potential_grad(q, params):
    """Intrinsic gradient of :func:`bulk_potential` on the traceless space.

    Equals -a' Q - b' (Q^2 - (tr Q^2/3) Id) + c' Q tr Q^2; the multiplier in
    the middle term keeps the result traceless and is applied structurally
    through the basis projection.
    """
    q = np.asarray(q, dtype=float)
    t2 = trace2(q)[..., None]
    return (
        -params.a_star * q
        - params.b_star * qtensor.sym_square(q)
        + params.c_star * t2 * q
    )


@dataclass(frozen=True)
class ManifoldConstants:
    """Quadratic growth constants near the vacuum manifold.

    (1/2) m0 dist^2 <= f' <= (1/2) M0 dist^2 holds on the delta0-neighborhood,
    within which the nearest-point projection is single-valued.
    """

    m0: float
    M0: float
    delta0: float


def _normal_frame(directors, rng):
    """Unit normals to the vacuum manifold at vacuum_tensor(directors).

    The tangent plane at v(n) is spanned by the (normalized) images of the
    covering map differential; a Gaussian 5-vector projected off it and
    normalized is a uniformly generic unit normal.
    """
    n = directors
    k = n.shape[0]
    # orthonormal complement of each director in R^3
    seed_axis = np.where(np.abs(n[:, :1]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
    u1 = np.cross(n, seed_axis)
    u1 /= np.linalg.norm(u1, axis=1, keepdims=True)
    u2 = np.cross(n, u1)
    tangents = []
    for u in (u1, u2):
        outer = n[:, :, None] * u[:, None, :] + u[:, :, None] * n[:, None, :]
        tq = from_matrix(manifold.VACUUM_SCALAR_ORDER * outer)
        tangents.append(tq / np.linalg.norm(tq, axis=1, keepdims=True))
    t1, t2 = tangents
    g = rng.standard_normal((k, 5))
    g -= np.sum(g * t1, axis=1, keepdims=True) * t1
    g -= np.sum(g * t2, axis=1, keepdims=True) * t2
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def validate_hypotheses(params, samples=2000, seed=0):
    """Numerically check the structural hypotheses on the concrete potential.

    Checks, on ``samples`` random vacuum points v, unit normals nu and offsets
    t in (0, delta0]:

    * Df'(v + t nu) . nu >= m0 t for some m0 > 0 (normal non-degeneracy);
    * (1/2) m0 dist^2 <= f' <= (1/2) M0 dist^2 in the delta0-neighborhood;
    * the nearest point of v + t nu stays v (projection single-valued);
    * f'(u) > f'(u/|u|) for random u with |u| in (1, 3].

    Returns ``(ManifoldConstants, report)`` with the estimated m0, M0 and the
    largest delta0 <= 0.5 passing every check; raises
    :class:`HypothesisViolated` (with the failing sample) otherwise.
    """
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    rng = np.random.default_rng(seed)

    n = rng.standard_normal((samples, 3))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    v = manifold.vacuum_tensor(n)
    nu = _normal_frame(n, rng)

    # radial monotonicity outside the unit ball
    u = rng.standard_normal((samples, 5))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    radii = rng.uniform(1.0, 3.0, size=samples) + 1e-9
    outside = u * radii[:, None]
    excess = bulk_potential(outside, params) - bulk_potential(u, params)
    if np.any(excess <= 0.0):
        k = int(np.argmin(excess))
        raise HypothesisViolated(
            f"radial growth fails at |v| = {radii[k]:.6g}: excess {excess[k]:.3g}"
        )

    t_fracs = np.linspace(0.1, 1.0, 10)
    report = {"samples": samples, "seed": seed, "h3_min_excess": float(excess.min())}
    last_failure = "no delta0 candidate tried"
    for delta0 in np.arange(0.50, 0.049, -0.05):
        ok = True
        m0_h2 = np.inf
        m0_rf = np.inf
        M0 = 0.0
        for frac in t_fracs:
            t = frac * delta0
            qoff = v + t * nu
            slope = np.sum(bulk_potential_grad(qoff, params) * nu, axis=1) / t
            growth = 2.0 * bulk_potential(qoff, params) / t**2
            dist = manifold.vacuum_distance(qoff)
            if np.any(slope <= 0.0) or np.any(growth <= 0.0):
                last_failure = f"nonpositive normal slope/growth at t = {t:.3g}"
                ok = False
                break
            if np.any(dist < t * (1.0 - 1e-6)):
                last_failure = f"projection not single-valued at t = {t:.3g}"
                ok = False
                break
            m0_h2 = min(m0_h2, float(slope.min()))
            m0_rf = min(m0_rf, float(growth.min()))
            M0 = max(M0, float(growth.max()))
        if ok:
            consts = ManifoldConstants(m0=min(m0_h2, m0_rf), M0=M0, delta0=float(delta0))
            report.update(
                delta0=consts.delta0, m0=consts.m0, M0=consts.M0,
                h2_min_slope=m0_h2, quadratic_growth=(m0_rf, M0), passed=True,
            )
            return consts, report
    raise HypothesisViolated(last_failure)
