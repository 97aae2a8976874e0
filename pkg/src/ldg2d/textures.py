"""Closed-form comparison configurations and solver warm starts.

Two explicit defect-core textures on the disk, both matching the minimizing
geodesic texture away from the core:

* the biaxial-escape core: the second director grows linearly toward the
  center, where the tensor becomes oblate uniaxial of full norm (no isotropic
  melting); its traversal of the biaxiality ridge reaches beta = 1 exactly
  where the growth profile crosses 1/2,
* the isotropic-melting core: the norm drops linearly to zero at the center
  while the texture stays (scaled) uniaxial everywhere.

Their discrete energies realize the two asymptotic energy laws whose gap
makes biaxial escape win at low temperature; the Dirichlet part of the
biaxial core also has a closed form used as an exactness check of the
discretization.
"""

from __future__ import annotations

import numpy as np

from . import manifold, qtensor
from .grid import Field, loop_evaluator
from .solver import energy


class EpsilonTooLarge(ValueError):
    """Core radius would exceed the domain: need eps < R * sqrt(sigma)."""


def _polar(grid):
    cx, cy = grid.domain.center
    dx = grid.site_x - cx
    dy = grid.site_y - cy
    return np.hypot(dx, dy), np.mod(np.arctan2(dy, dx), 2.0 * np.pi)


def _rotating_frame(theta, winding=1):
    """Orthonormal director pair advancing by half the winding angle."""
    half = 0.5 * winding * theta
    zeros = np.zeros_like(half)
    n = np.stack([np.cos(half), np.sin(half), zeros], axis=-1)
    m = np.stack([-np.sin(half), np.cos(half), zeros], axis=-1)
    return n, m


def core_profile(rho, eps, sigma):
    """Linear biaxial-growth profile: 1 at the center, 0 past eps/sqrt(sigma)."""
    return np.maximum(0.0, 1.0 - np.sqrt(sigma) * rho / eps)


def biaxial_core(grid, eps, params, winding=1):
    """Biaxial-escape comparison field on a disk grid.

    Raises :class:`EpsilonTooLarge` unless eps < R * sqrt(sigma) (the core
    must fit inside the disk).  The center site carries the oblate uniaxial
    tensor of unit norm; past the core the field equals the pure geodesic
    texture, hence sits on the vacuum manifold.
    """
    if grid.domain.kind != "disk":
        raise ValueError("biaxial core is constructed on disk domains")
    if eps >= grid.domain.radius * np.sqrt(params.sigma):
        raise EpsilonTooLarge(
            f"need eps < R * sqrt(sigma) = "
            f"{grid.domain.radius * np.sqrt(params.sigma):.6g}, got {eps:.6g}"
        )
    rho, theta = _polar(grid)
    n, m = _rotating_frame(theta, winding)
    s = np.full(rho.shape, manifold.VACUUM_SCALAR_ORDER)
    values = qtensor.compose(s, core_profile(rho, eps, params.sigma), n, m)
    values[~grid.active] = 0.0
    return Field(grid=grid, values=values, epsilon=float(eps), params=params)


def biaxial_core_energy_closed_form(R, eps, params):
    """(dirichlet, potential upper bound) of the biaxial core, continuum form.

    The radial integral of the linear profile gives

        dirichlet = pi * (7/8 + (3/4) log(R/eps) + (3/8) log sigma),

    while the potential part is below 2*pi independent of every parameter
    (the sandwich upper bound integrates to 2*sigma over the core disk of
    radius eps/sqrt(sigma)).
    """
    sigma = params.sigma
    if eps >= R * np.sqrt(sigma):
        raise EpsilonTooLarge("need eps < R * sqrt(sigma)")
    dirichlet = np.pi * (
        7.0 / 8.0 + 0.75 * np.log(R / eps) + 0.375 * np.log(sigma)
    )
    return float(dirichlet), 2.0 * np.pi


def uniaxial_defect(grid, eps_core, params, eps=None, winding=1):
    """Isotropic-melting comparison field: min(rho/eps_core, 1) * geodesic.

    Purely (scaled) uniaxial, vanishing at the center site.  ``eps`` sets the
    coupling stored on the field (defaults to ``eps_core``).
    """
    if grid.domain.kind != "disk":
        raise ValueError("melting core is constructed on disk domains")
    if not 0.0 < eps_core < grid.domain.radius:
        raise ValueError("need 0 < eps_core < R")
    rho, theta = _polar(grid)
    melt = np.minimum(rho / eps_core, 1.0)
    values = melt[..., None] * manifold.geodesic_loop(winding * theta)
    values[~grid.active] = 0.0
    return Field(
        grid=grid,
        values=values,
        epsilon=float(eps_core if eps is None else eps),
        params=params,
    )


def compare_cores(grid, eps, params, winding=1):
    """Discrete energy comparison of the two core constructions.

    The melting-core radius is optimized over a geometric candidate set
    around eps/sqrt(mu1) (where the analytic trade-off between melting cost
    and texture cost balances).  Reports the energy gap next to the predicted
    low-temperature value (rate/2) * log(mu1/sigma); a positive gap means the
    biaxial escape wins.
    """
    bfield = biaxial_core(grid, eps, params, winding)
    b_energy = energy(bfield)
    closed_dirichlet, potential_bound = biaxial_core_energy_closed_form(
        grid.domain.radius, eps, params
    )

    candidates = []
    for factor in (0.5, 1.0, 2.0, 4.0, 8.0, 16.0):
        eps_core = factor * eps / np.sqrt(params.mu1)
        if eps_core >= 0.999 * grid.domain.radius:
            continue
        ufield = uniaxial_defect(grid, eps_core, params, eps=eps, winding=winding)
        u_energy = energy(ufield)
        candidates.append(
            {"core_radius": float(eps_core), "energy": u_energy.as_dict()}
        )
    if not candidates:
        raise ValueError("no admissible melting-core radius below R")
    best = min(candidates, key=lambda entry: entry["energy"]["total"])

    rate = params.defect_energy_rate
    gap = best["energy"]["total"] - b_energy.total
    return {
        "epsilon": float(eps),
        "t": params.t,
        "winding": winding,
        "biaxial": b_energy.as_dict(),
        "biaxial_closed_form": {
            "dirichlet": closed_dirichlet,
            "potential_upper_bound": potential_bound,
        },
        "uniaxial_best": best,
        "uniaxial_candidates": candidates,
        "gap": float(gap),
        "predicted_gap": float(0.5 * rate * np.log(params.mu1 / params.sigma)),
    }


def warm_start(grid, bspec, eps, params, seed=0, noise=0.01):
    """Interior initialization for the solver.

    Geodesic boundary data on a disk get the biaxial-core texture (the
    expected minimizer's basin); when the core does not fit
    (eps >= R * sqrt(sigma)) the initialization falls back to the plain
    radial extension of the boundary datum and the returned flag is True.
    Constant data get the constant field; annulus and custom data get the
    radial extension of the (outer) datum.  Seeded noise of the given
    amplitude is added on interior sites.
    """
    fallback = False
    geodesic_disk = (
        grid.domain.kind == "disk"
        and isinstance(bspec, dict)
        and bspec.get("kind") == "geodesic"
    )
    core_fits = eps < grid.domain.radius * np.sqrt(params.sigma)
    if geodesic_disk and core_fits:
        winding = int(bspec.get("winding", 1))
        values = biaxial_core(grid, eps, params, winding).values.copy()
    else:
        # radial extension of the (outer) boundary datum
        fallback = geodesic_disk
        outer = bspec["outer"] if "outer" in bspec else bspec
        _, theta = _polar(grid)
        values = loop_evaluator(outer)(theta)

    if noise:
        rng = np.random.default_rng(seed)
        jitter = noise * rng.standard_normal(values.shape)
        values = values + jitter * grid.interior[..., None]
    values[~grid.active] = 0.0
    return values, fallback
