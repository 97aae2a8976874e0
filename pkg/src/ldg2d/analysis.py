"""Post-hoc diagnostics for converged fields.

Everything here reads a frozen field: defect localization (connected regions
far from the vacuum manifold), biaxiality extrema, circle diagnostics around
a defect (tangential energy rate, radial energy rate, loop length, homotopy
class) and the Pohozaev identity residual, which vanishes on solutions of the
Euler-Lagrange equation and is O(1) on generic fields.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy import ndimage

from . import manifold, qtensor
from .grid import OutOfDomain, interpolate
from .potential import bulk_potential, validate_hypotheses


class CircleOutsideDomain(ValueError):
    """Diagnostic circle (or its radial stencil) leaves the domain."""


class CircleMeetsDefect(ValueError):
    """Diagnostic circle crosses a defect component."""


class BallOutsideDomain(ValueError):
    """Pohozaev ball leaves the domain."""


@dataclass(frozen=True)
class DefectComponent:
    centroid: tuple
    radius: float  # minimal covering ball (plus half-diagonal padding)
    cell_count: int

    def as_dict(self):
        return {
            "centroid": list(self.centroid),
            "radius": self.radius,
            "cell_count": self.cell_count,
        }


@dataclass(frozen=True)
class DefectReport:
    delta: float
    components: tuple
    lambda0: float
    mu0: float
    grad_sup_eps: float  # measured sup of eps |grad Q|

    @property
    def count(self):
        return len(self.components)

    def as_dict(self):
        return {
            "delta": self.delta,
            "count": self.count,
            "components": [c.as_dict() for c in self.components],
            "clearing_out": {
                "lambda0": self.lambda0,
                "mu0": self.mu0,
                "grad_sup_eps": self.grad_sup_eps,
            },
        }


def _enclosing_circle(points):
    # Badoiu-Clarkson iterations: deterministic near-minimal enclosing circle.
    center = points.mean(axis=0)
    for k in range(1, 201):
        offsets = points - center
        far = int(np.argmax(np.sum(offsets * offsets, axis=1)))
        center = center + (points[far] - center) / (k + 1.0)
    radius = float(np.sqrt(np.max(np.sum((points - center) ** 2, axis=1))))
    return center, radius


def _measured_grad_sup(field):
    v = field.values
    g = field.grid
    dx2 = np.sum((v[:, 1:, :] - v[:, :-1, :]) ** 2, axis=-1)
    dy2 = np.sum((v[1:, :, :] - v[:-1, :, :]) ** 2, axis=-1)
    sup2 = max(
        float(dx2[g.edge_x].max()) if g.edge_x.any() else 0.0,
        float(dy2[g.edge_y].max()) if g.edge_y.any() else 0.0,
    )
    return np.sqrt(sup2) / g.h


def _potential_floor(params, delta, samples=4000, seed=0):
    # min of the potential over sampled {|Q| <= 1, dist >= delta}
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((samples, 5))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    radii = rng.uniform(0.0, 1.0, samples) ** 0.2
    q = g * radii[:, None]
    far = manifold.vacuum_distance(q) >= delta
    if not far.any():
        return float("nan")
    return float(bulk_potential(q[far], params).min())


def detect_defects(field, delta=0.3, manifold_constants=None):
    """Connected components (4-connectivity) of {dist to vacuum > delta}.

    Reports per component the centroid, a covering-ball radius (minimal
    enclosing circle of the site positions padded by h/sqrt(2)) and the site
    count, ordered by centroid for determinism.  The clearing-out constants
    lambda0 = delta / (2 sup eps|grad Q|) and mu0 are echoed for context;
    ``manifold_constants`` supplies the quadratic-growth constant (estimated
    on the fly when omitted).
    """
    g = field.grid
    far = (manifold.vacuum_distance(field.values) > delta) & g.interior
    labels, count = ndimage.label(far)  # default structure = 4-connectivity
    comps = []
    for index in range(1, count + 1):
        iy, ix = np.nonzero(labels == index)
        points = np.stack([g.xs[ix], g.ys[iy]], axis=1)
        center, radius = _enclosing_circle(points)
        comps.append(
            DefectComponent(
                centroid=(float(center[0]), float(center[1])),
                radius=radius + g.h / np.sqrt(2.0),
                cell_count=int(points.shape[0]),
            )
        )
    comps.sort(key=lambda comp: comp.centroid)

    grad_sup_eps = field.epsilon * _measured_grad_sup(field)
    lambda0 = delta / (2.0 * grad_sup_eps) if grad_sup_eps > 0.0 else float("inf")
    if manifold_constants is None:
        manifold_constants, _ = validate_hypotheses(field.params, samples=1000)
    floor = _potential_floor(field.params, delta)
    mu0 = (
        0.5
        * np.pi
        * lambda0**2
        * min(floor, manifold_constants.m0 * delta**2 / 8.0)
    )
    return DefectReport(
        delta=delta,
        components=tuple(comps),
        lambda0=float(lambda0),
        mu0=float(mu0),
        grad_sup_eps=float(grad_sup_eps),
    )


def dominant_defect(report):
    """Largest component of a defect report (None when empty)."""
    if not report.components:
        return None
    return max(report.components, key=lambda comp: comp.cell_count)


def biaxiality_stats(field, tol_beta=1e-3):
    """Extrema of biaxiality and order norm over active sites.

    ``maximal_biaxial`` is set when max beta >= 1 - tol_beta.
    """
    g = field.grid
    active = g.active
    beta = qtensor.biaxiality(field.values)
    absq = qtensor.norm(field.values)
    beta_masked = np.where(active, beta, -1.0)
    absq_masked = np.where(active, absq, np.inf)
    imax = np.unravel_index(np.argmax(beta_masked), beta.shape)
    imin = np.unravel_index(np.argmin(absq_masked), absq.shape)
    max_beta = float(beta[imax])
    return {
        "max_beta": max_beta,
        "argmax_beta": [float(g.xs[imax[1]]), float(g.ys[imax[0]])],
        "min_absq": float(absq[imin]),
        "argmin_absq": [float(g.xs[imin[1]]), float(g.ys[imin[0]])],
        "maximal_biaxial": bool(max_beta >= 1.0 - tol_beta),
    }


@dataclass(frozen=True)
class RadialProfile:
    """Circle diagnostics around a center, one row per radius."""

    center: tuple
    rows: tuple  # dicts: rho, S, S_projected, R, length, speed_variance
    reference_rate: float = manifold.DEFECT_ENERGY_RATE

    def as_dict(self):
        return {
            "center": list(self.center),
            "reference_rate": self.reference_rate,
            "rows": list(self.rows),
        }


def _circle_samples(field, center, rho, nodes):
    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    points = np.stack(
        [
            center[0] + rho * np.cos(theta),
            center[1] + rho * np.sin(theta),
        ],
        axis=-1,
    )
    try:
        return theta, interpolate(field, points)
    except OutOfDomain as err:
        raise CircleOutsideDomain(
            f"circle of radius {rho:.6g} leaves the domain"
        ) from err


def _check_defect_clearance(field, center, rho, samples, defect_report, delta):
    if defect_report is not None:
        for comp in defect_report.components:
            d = np.hypot(
                center[0] - comp.centroid[0], center[1] - comp.centroid[1]
            )
            if abs(d - rho) <= comp.radius:
                raise CircleMeetsDefect(
                    f"circle of radius {rho:.6g} meets the defect at "
                    f"{comp.centroid}"
                )
    else:
        worst = float(manifold.vacuum_distance(samples).max())
        if worst > delta:
            raise CircleMeetsDefect(
                f"circle of radius {rho:.6g} reaches distance {worst:.3g} "
                f"from the vacuum manifold"
            )


def _loop_rates(theta, samples):
    dtheta = theta[1] - theta[0]
    dc = (np.roll(samples, -1, axis=0) - np.roll(samples, 1, axis=0)) / (
        2.0 * dtheta
    )
    speed2 = np.sum(dc * dc, axis=-1)
    speed = np.sqrt(speed2)
    S = 0.5 * float(np.sum(speed2)) * dtheta
    length = float(np.sum(speed)) * dtheta
    variance = float(np.var(speed))
    return S, length, variance


def radial_profile(
    field,
    center,
    rho_list,
    nodes=512,
    radial_step=None,
    defect_report=None,
    delta=0.3,
):
    """Tangential and radial energy rates on circles around ``center``.

    For each radius: S = (1/2) int |d_theta c|^2 dtheta (scale-invariant
    tangential rate, bounded below by the minimal loop energy for loops of
    nontrivial class), R = (1/2) int |du/dnu|^2 dH^1 with the radial
    derivative taken by central differences across the circle, plus the raw
    loop length and speed variance.  Circles must stay inside the domain
    (:class:`CircleOutsideDomain`) and clear of defect components
    (:class:`CircleMeetsDefect`).
    """
    if nodes < 256:
        raise ValueError("need at least 256 circle nodes")
    step = field.grid.h if radial_step is None else float(radial_step)
    rows = []
    for rho in sorted(float(r) for r in rho_list):
        if rho <= step:
            raise ValueError(f"radius {rho:.6g} below the radial stencil step")
        theta, samples = _circle_samples(field, center, rho, nodes)
        _check_defect_clearance(
            field, center, rho, samples, defect_report, delta
        )
        S, length, variance = _loop_rates(theta, samples)
        # the limit map lives on the vacuum manifold; the projected rate
        # removes the O((eps/rho)^2) norm-relaxation deficit of raw samples
        S_proj, _, _ = _loop_rates(theta, manifold.project_to_vacuum(samples))
        _, outer = _circle_samples(field, center, rho + step, nodes)
        _, inner = _circle_samples(field, center, rho - step, nodes)
        dnu = (outer - inner) / (2.0 * step)
        R = 0.5 * float(np.sum(dnu * dnu)) * (theta[1] - theta[0]) * rho
        rows.append(
            {
                "rho": rho,
                "S": S,
                "S_projected": S_proj,
                "R": R,
                "length": length,
                "speed_variance": variance,
            }
        )
    return RadialProfile(
        center=(float(center[0]), float(center[1])), rows=tuple(rows)
    )


def circle_loop_diagnostics(
    field,
    center,
    rho,
    nodes=512,
    defect_report=None,
    delta=0.3,
    delta0=0.5,
):
    """Length, speed variance and homotopy class of the projected circle loop.

    The sampled loop is projected onto the vacuum manifold before measuring;
    geodesics have length pi*sqrt(3) and zero speed variance in the
    nontrivial class.  Projection failures propagate as
    :class:`~ldg2d.manifold.ProjectionUndefined`.
    """
    theta, samples = _circle_samples(field, center, rho, nodes)
    _check_defect_clearance(field, center, rho, samples, defect_report, delta)
    projected = manifold.project_to_vacuum(samples)
    _, length, variance = _loop_rates(theta, projected)
    loop_class = manifold.homotopy_class(projected, delta0=delta0)
    return {
        "rho": float(rho),
        "length": length,
        "speed_variance": variance,
        "homotopy_class": loop_class,
    }


def pohozaev_residual(field, center, radius, nodes=1024, radial_step=None):
    """Relative defect of the Pohozaev identity on a ball.

    Both sides of the identity are evaluated on B(center, radius) with the
    ball's center as base point: the interior potential integral plus the
    normal-derivative boundary term against the tangential and potential
    boundary terms (the tangential moment vanishes on circles).  Solutions of
    the Euler-Lagrange equation give a small residual (quadrature plus solver
    tolerance); generic fields give O(1).
    """
    g = field.grid
    step = g.h if radial_step is None else float(radial_step)
    if radius <= 2.0 * step:
        raise BallOutsideDomain("ball too small for the radial stencil")
    try:
        theta, on = _circle_samples(field, center, radius, nodes)
        _, outer = _circle_samples(field, center, radius + step, nodes)
        _, inner = _circle_samples(field, center, radius - step, nodes)
    except CircleOutsideDomain as err:
        raise BallOutsideDomain(str(err)) from err
    dtheta = theta[1] - theta[0]
    darc = radius * dtheta

    dnu = (outer - inner) / (2.0 * step)
    dtau = (np.roll(on, -1, axis=0) - np.roll(on, 1, axis=0)) / (
        2.0 * dtheta * radius
    )
    fb = bulk_potential(on, field.params)

    inside = g.interior & (
        (g.site_x - center[0]) ** 2 + (g.site_y - center[1]) ** 2 < radius**2
    )
    f_interior = bulk_potential(field.values[inside], field.params)
    eps2 = field.epsilon**2

    # identity: (2/eps^2) int_B f + (R/2) oint |du/dnu|^2
    #         = (R/2) oint |du/dtau|^2 + (R/eps^2) oint f
    # (interior-to-boundary potential weight 2:1 = the space dimension; the
    # relative weight against the gradient terms re-derived and confirmed
    # numerically on converged solutions)
    lhs = 2.0 * float(np.sum(f_interior)) * g.h**2 / eps2 + 0.5 * radius * float(
        np.sum(np.sum(dnu * dnu, axis=-1))
    ) * darc
    rhs = (
        0.5 * radius * float(np.sum(np.sum(dtau * dtau, axis=-1))) * darc
        + radius / eps2 * float(np.sum(fb)) * darc
    )
    return abs(lhs - rhs) / (abs(lhs) + abs(rhs) + 1e-12)
