import numpy as np
import pytest

from ldg2d import grid as gridmod
from ldg2d import potential, solver, textures


@pytest.fixture(scope="session")
def params_unit():
    return potential.derive_params(1.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def params_t100():
    return potential.derive_params(1.0, 0.1, 1.0)


@pytest.fixture(scope="session")
def unit_disk():
    return gridmod.Domain(kind="disk", radius=1.0)


def random_tensors(rng, count, low=0.0, high=10.0):
    """Random coefficient vectors with norms uniform in [low, high]."""
    g = rng.standard_normal((count, 5))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.uniform(low, high, count)[:, None]


def solve_geodesic(domain, n, eps, params, grad_tol=1e-4, max_iters=4000, seed=0):
    """Small converged geodesic-boundary minimizer for diagnostics tests."""
    g = gridmod.build_grid(domain, n)
    bspec = {"kind": "geodesic", "winding": 1}
    bvals = gridmod.boundary_data(g, bspec)
    start, _ = textures.warm_start(g, bspec, eps, params, seed=seed, noise=0.01)
    field0 = gridmod.assemble_field(g, bvals, start, eps, params)
    field, log = solver.minimize(
        field0, solver.SolveOptions(max_iters=max_iters, grad_tol=grad_tol, seed=seed)
    )
    return solver.truncate(field), log


@pytest.fixture(scope="session")
def small_minimizer(unit_disk, params_unit):
    """Converged n=96, eps=0.15 geodesic field, shared across test modules."""
    field, log = solve_geodesic(unit_disk, 96, 0.15, params_unit, grad_tol=5e-5)
    return field, log
