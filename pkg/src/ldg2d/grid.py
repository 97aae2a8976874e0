"""Domain geometry, uniform lattice, boundary data and field storage.

The domain (disk or annulus) is discretized by a uniform lattice of sites
with spacing h = (bounding box width)/n, laid out so that a site falls on the
domain center (defect-core constructions evaluate there).  Sites are
classified Interior (strictly inside the domain: the unknowns), Dirichlet
(outside-or-on the boundary but 4-adjacent to an Interior site: frozen at the
boundary datum evaluated at the nearest boundary point) or Exterior (stored
as zeros, never touched).  Every Interior site keeps its full 5-point stencil
inside Interior + Dirichlet by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from functools import cached_property

import numpy as np

from . import manifold, qtensor

EXTERIOR, INTERIOR, DIRICHLET = 0, 1, 2


class DomainTooThin(ValueError):
    """Discretization leaves no usable interior sites."""


class InvalidSpec(ValueError):
    """Malformed boundary specification."""


class OutOfDomain(ValueError):
    """Interpolation point is outside the covered region."""


@dataclass(frozen=True)
class Domain:
    """Disk or annulus in the plane (length units)."""

    kind: str
    radius: float
    center: tuple = (0.0, 0.0)
    inner_radius: float = 0.0

    def __post_init__(self):
        if self.kind not in ("disk", "annulus"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if not (np.isfinite(self.radius) and self.radius > 0.0):
            raise ValueError("outer radius must be positive")
        if self.kind == "annulus" and not (0.0 < self.inner_radius < self.radius):
            raise ValueError("annulus needs 0 < inner_radius < radius")

    def contains(self, x, y):
        """Strict membership of points, vectorized."""
        d2 = (np.asarray(x) - self.center[0]) ** 2 + (np.asarray(y) - self.center[1]) ** 2
        inside = d2 < self.radius**2
        if self.kind == "annulus":
            inside &= d2 > self.inner_radius**2
        return inside


@dataclass
class Grid:
    """Uniform lattice over the domain bounding box with site classification."""

    domain: Domain
    n: int  # subdivisions per axis; the lattice carries n+1 sites per axis
    h: float
    x0: float  # coordinates of site [0, 0]
    y0: float
    kind: np.ndarray  # (ny, nx) int8 of EXTERIOR/INTERIOR/DIRICHLET

    @property
    def nx(self):
        return self.kind.shape[1]

    @property
    def ny(self):
        return self.kind.shape[0]

    @cached_property
    def xs(self):
        return self.x0 + self.h * np.arange(self.nx)

    @cached_property
    def ys(self):
        return self.y0 + self.h * np.arange(self.ny)

    @cached_property
    def site_x(self):
        return np.broadcast_to(self.xs[None, :], self.kind.shape)

    @cached_property
    def site_y(self):
        return np.broadcast_to(self.ys[:, None], self.kind.shape)

    @cached_property
    def interior(self):
        return self.kind == INTERIOR

    @cached_property
    def dirichlet(self):
        return self.kind == DIRICHLET

    @cached_property
    def active(self):
        return self.kind != EXTERIOR

    @cached_property
    def edge_x(self):
        # horizontal edges (iy, ix)-(iy, ix+1) with an Interior endpoint
        return self.interior[:, :-1] | self.interior[:, 1:]

    @cached_property
    def edge_y(self):
        return self.interior[:-1, :] | self.interior[1:, :]


def build_grid(domain, n):
    """Lattice of (n+1)^2 sites over the domain bounding box, classified.

    ``n`` must be >= 16 and even (so a site lands on the domain center).
    Raises :class:`DomainTooThin` when classification leaves no interior
    sites (annulus gap below the resolution).
    """
    if n < 16:
        raise ValueError("need n >= 16 subdivisions per axis")
    if n % 2:
        raise ValueError("n must be even so a site lands on the domain center")
    cx, cy = domain.center
    R = domain.radius
    h = 2.0 * R / n
    x0, y0 = cx - R, cy - R

    xs = x0 + h * np.arange(n + 1)
    ys = y0 + h * np.arange(n + 1)
    inside = domain.contains(xs[None, :], ys[:, None])

    adjacent = np.zeros_like(inside)
    adjacent[:-1, :] |= inside[1:, :]
    adjacent[1:, :] |= inside[:-1, :]
    adjacent[:, :-1] |= inside[:, 1:]
    adjacent[:, 1:] |= inside[:, :-1]

    kind = np.full(inside.shape, EXTERIOR, dtype=np.int8)
    kind[adjacent & ~inside] = DIRICHLET
    kind[inside] = INTERIOR

    if not inside.any():
        raise DomainTooThin("no interior sites at this resolution")
    # interior sites stay off the array edge (strict inclusion in the bbox),
    # so the 5-point stencil below never leaves the array
    iy, ix = np.nonzero(inside)
    assert iy.min() > 0 and ix.min() > 0
    assert iy.max() < n and ix.max() < n
    for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        if np.any(kind[iy + dy, ix + dx] == EXTERIOR):
            raise DomainTooThin("interior site with a dangling stencil arm")
    return Grid(domain=domain, n=n, h=h, x0=x0, y0=y0, kind=kind)


def loop_evaluator(spec):
    """Turn one boundary-component spec into a map theta -> tensors."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise InvalidSpec("boundary spec must be a dict with a 'kind'")
    kind = spec["kind"]
    keys = set(spec)
    if kind == "geodesic":
        if keys - {"kind", "winding"}:
            raise InvalidSpec(f"unknown keys in geodesic spec: {keys}")
        w = int(spec.get("winding", 1))
        return lambda theta: manifold.geodesic_loop(w * theta)
    if kind == "constant":
        if keys - {"kind", "director"}:
            raise InvalidSpec(f"unknown keys in constant spec: {keys}")
        director = np.asarray(spec.get("director", (1.0, 0.0, 0.0)), dtype=float)
        if director.shape != (3,):
            raise InvalidSpec("director must be a 3-vector")
        nrm = np.linalg.norm(director)
        if nrm == 0.0:
            raise InvalidSpec("director must be nonzero")
        value = manifold.vacuum_tensor(director / nrm)
        return lambda theta: np.broadcast_to(
            value, np.shape(theta) + (5,)
        ).copy()
    if kind == "custom":
        if keys - {"kind", "samples"}:
            raise InvalidSpec(f"unknown keys in custom spec: {keys}")
        samples = np.asarray(spec.get("samples"), dtype=float)
        if samples.ndim != 2 or samples.shape[1] != 5 or samples.shape[0] < 8:
            raise InvalidSpec("custom samples must be an (N>=8, 5) array")

        def evaluate(theta, samples=samples):
            # uniformly spaced closed loop: linear interpolation between
            # neighbors, re-projected so values land exactly on the manifold
            m = samples.shape[0]
            pos = np.asarray(theta) % (2.0 * np.pi) / (2.0 * np.pi) * m
            j0 = np.floor(pos).astype(int) % m
            frac = (pos - np.floor(pos))[..., None]
            mixed = (1.0 - frac) * samples[j0] + frac * samples[(j0 + 1) % m]
            return manifold.project_to_vacuum(mixed)

        return evaluate
    raise InvalidSpec(f"unknown boundary kind {kind!r}")


def boundary_data(grid, spec):
    """Dirichlet values for a boundary spec, shape (ny, nx, 5).

    Disk specs are a single dict ({'kind': 'geodesic', 'winding': k},
    {'kind': 'constant', 'director': n0} or {'kind': 'custom', 'samples': S});
    annulus specs carry one dict per component under 'outer'/'inner'.  Each
    Dirichlet site receives the loop value at the polar angle of its nearest
    boundary point.  Sites off the Dirichlet layer are zero.
    """
    dom = grid.domain
    if dom.kind == "annulus":
        if not isinstance(spec, dict) or set(spec) != {"outer", "inner"}:
            raise InvalidSpec("annulus spec needs exactly 'outer' and 'inner'")
        evaluators = (loop_evaluator(spec["outer"]), loop_evaluator(spec["inner"]))
    else:
        evaluators = (loop_evaluator(spec),)

    values = np.zeros(grid.kind.shape + (5,))
    mask = grid.dirichlet
    dx = grid.site_x[mask] - dom.center[0]
    dy = grid.site_y[mask] - dom.center[1]
    theta = np.mod(np.arctan2(dy, dx), 2.0 * np.pi)
    if dom.kind == "annulus":
        rho = np.hypot(dx, dy)
        outer = np.abs(rho - dom.radius) <= np.abs(rho - dom.inner_radius)
        vals = np.empty((mask.sum(), 5))
        vals[outer] = evaluators[0](theta[outer])
        vals[~outer] = evaluators[1](theta[~outer])
    else:
        vals = evaluators[0](theta)
    values[mask] = vals
    return values


@dataclass
class Field:
    """Solver state: per-site tensors plus the coupling constants."""

    grid: Grid
    values: np.ndarray  # (ny, nx, 5)
    epsilon: float
    params: object  # MaterialParams

    def copy(self):
        return Field(self.grid, self.values.copy(), self.epsilon, self.params)


def assemble_field(grid, dirichlet_values, interior_values, epsilon, params):
    """Combine frozen boundary values and an interior initialization."""
    values = np.where(
        grid.dirichlet[..., None], dirichlet_values, interior_values
    )
    values[~grid.active] = 0.0
    return Field(grid=grid, values=values, epsilon=float(epsilon), params=params)


def validate_field(field):
    """Check the field invariants: finite values, boundary on the manifold."""
    if not np.all(np.isfinite(field.values)):
        raise ValueError("field contains non-finite values")
    bnd = field.values[field.grid.dirichlet]
    if bnd.size:
        # |Q - project(Q)| instead of the closed-form distance: the latter
        # bottoms out at sqrt(machine eps) near the manifold by cancellation
        offset = bnd - manifold.project_to_vacuum(bnd)
        worst = np.sqrt(np.sum(offset * offset, axis=-1)).max()
        if worst > 1e-10:
            raise ValueError(
                f"Dirichlet values off the vacuum manifold by {worst:.3g}"
            )


def interpolate(field, points):
    """Bilinear interpolation of the five coefficients at ``points``.

    ``points`` has shape (..., 2); all four surrounding sites must exist and
    be non-Exterior, else :class:`OutOfDomain`.
    """
    pts = np.asarray(points, dtype=float)
    g = field.grid
    fx = (pts[..., 0] - g.x0) / g.h
    fy = (pts[..., 1] - g.y0) / g.h
    ix = np.floor(fx).astype(int)
    iy = np.floor(fy).astype(int)
    if np.any((ix < 0) | (ix + 1 >= g.nx) | (iy < 0) | (iy + 1 >= g.ny)):
        raise OutOfDomain("point outside the lattice")
    corners_ok = (
        (g.kind[iy, ix] != EXTERIOR)
        & (g.kind[iy, ix + 1] != EXTERIOR)
        & (g.kind[iy + 1, ix] != EXTERIOR)
        & (g.kind[iy + 1, ix + 1] != EXTERIOR)
    )
    if not np.all(corners_ok):
        raise OutOfDomain("point not surrounded by active sites")
    tx = (fx - ix)[..., None]
    ty = (fy - iy)[..., None]
    v = field.values
    return (
        (1 - ty) * ((1 - tx) * v[iy, ix] + tx * v[iy, ix + 1])
        + ty * ((1 - tx) * v[iy + 1, ix] + tx * v[iy + 1, ix + 1])
    )
