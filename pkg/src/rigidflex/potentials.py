"""Edge potential families.

Each family supplies three evaluators over the squared distance error
e = ||z||^2 - dbar^2 on the domain e > -dbar^2:

    phi(e, dbar)  -- nonnegative edge energy, zero iff e == 0
    g(e, dbar)    -- d phi / d e, strictly increasing, sign(g) == sign(e)
    rho(e, dbar)  -- d g / d e, strictly positive

All evaluators accept scalars or numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


class PotentialDomainError(ValueError):
    """Squared error below -dbar^2, outside any family's domain."""


def check_domain(e, dbar):
    """Reject squared errors below -dbar^2.

    The boundary e == -dbar^2 (coincident agents) is admitted: coincidence
    equilibria live there, and the zero edge vector annihilates the force
    contribution even when a family's g diverges at the boundary.
    """
    e = np.asarray(e, dtype=float)
    lo = -np.asarray(dbar, dtype=float) ** 2
    if np.any(e < lo):
        raise PotentialDomainError(f"squared error below -dbar^2: e={e}, bound={lo}")


@dataclass(frozen=True)
class PotentialFamily:
    name: str
    phi: Callable
    g: Callable
    rho: Callable


QUADRATIC = PotentialFamily(
    name="quadratic",
    phi=lambda e, dbar: 0.5 * np.asarray(e, dtype=float) ** 2,
    g=lambda e, dbar: np.asarray(e, dtype=float),
    rho=lambda e, dbar: np.ones_like(np.asarray(e, dtype=float)),
)

# phi = e^2 / (e + dbar^2); g and rho are its exact derivatives.
RATIONAL = PotentialFamily(
    name="rational",
    phi=lambda e, dbar: np.asarray(e, dtype=float) ** 2
    / (np.asarray(e, dtype=float) + np.asarray(dbar, dtype=float) ** 2),
    g=lambda e, dbar: 1.0
    - np.asarray(dbar, dtype=float) ** 4
    / (np.asarray(e, dtype=float) + np.asarray(dbar, dtype=float) ** 2) ** 2,
    rho=lambda e, dbar: 2.0
    * np.asarray(dbar, dtype=float) ** 4
    / (np.asarray(e, dtype=float) + np.asarray(dbar, dtype=float) ** 2) ** 3,
)

FAMILIES = {f.name: f for f in (QUADRATIC, RATIONAL)}


def get_family(tag: str) -> PotentialFamily:
    try:
        return FAMILIES[tag]
    except KeyError:
        raise KeyError(f"unknown potential family {tag!r}; known: {sorted(FAMILIES)}")


def validate_family(family: PotentialFamily, dbar: float, grid=None) -> list[str]:
    """Check the potential-family conditions on a sample grid.

    Verifies phi >= 0 with phi = 0 only at e = 0, g strictly increasing with
    sign(g) = sign(e), and rho > 0, over ``grid`` (default: a grid spanning
    (-dbar^2, large)).  Analyticity near 0 cannot be checked from point
    evaluations and is not attempted.  Returns a list of violation messages;
    empty means the family passed.
    """
    dbar = float(dbar)
    if grid is None:
        lo = -(dbar**2) * (1 - 1e-3)
        grid = np.concatenate(
            [np.linspace(lo, -1e-6, 400), [0.0], np.linspace(1e-6, 100.0 * dbar**2, 400)]
        )
    grid = np.sort(np.asarray(grid, dtype=float))
    if grid.min() <= -(dbar**2):
        raise PotentialDomainError("validation grid leaves the domain e > -dbar^2")

    phi = np.asarray(family.phi(grid, dbar), dtype=float)
    g = np.asarray(family.g(grid, dbar), dtype=float)
    rho = np.asarray(family.rho(grid, dbar), dtype=float)

    problems = []
    if np.any(phi < 0):
        problems.append("phi takes negative values")
    at_zero = np.isclose(grid, 0.0)
    if np.any(at_zero) and np.any(np.abs(phi[at_zero]) > 1e-12):
        problems.append("phi(0) != 0")
    off_zero = np.abs(grid) > 1e-9
    if np.any(phi[off_zero] <= 0):
        problems.append("phi vanishes away from e = 0")
    if np.any(np.diff(g) <= 0):
        problems.append("g is not strictly increasing over the grid")
    if np.any(np.sign(g[off_zero]) != np.sign(grid[off_zero])):
        problems.append("sign(g) != sign(e) somewhere on the grid")
    if np.any(rho <= 0):
        problems.append("rho is not strictly positive over the grid")
    return problems
