"""CNF encoding of ray-set colourability, solved with pycosat.

This is the second, independent route to the colourability verdict: it
recomputes orthogonality from the coordinates, writes one clause per
constraint and hands the formula to a SAT solver.  Nothing here is shared
with the backtracking search in :mod:`nogo.valuation`.

Variable ``i + 1`` is true iff ray ``i`` gets value 1.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np
import pycosat

from .operators import DEFAULT_TOL, Ray


def _orthogonal(u: Ray, v: Ray, tol: float) -> bool:
    if u.exact and v.exact:
        total = 0
        for x, y in zip(u.coords, v.coords):
            total = x.conjugate() * y + total
        return total.is_zero()
    return abs(np.vdot(u.numeric, v.numeric)) <= tol * np.linalg.norm(u.numeric) * np.linalg.norm(v.numeric)


def encode(rays: list[Ray], dim: int, tol: float = DEFAULT_TOL) -> list[list[int]]:
    """Clauses: not both of an orthogonal pair; at least one of each basis."""
    n = len(rays)
    orth = {i: set() for i in range(n)}
    clauses = []
    for i, j in combinations(range(n), 2):
        if _orthogonal(rays[i], rays[j], tol):
            orth[i].add(j)
            orth[j].add(i)
            clauses.append([-(i + 1), -(j + 1)])

    def grow(clique, cands):
        if len(clique) == dim:
            clauses.append([x + 1 for x in clique])
            return
        for k, c in enumerate(cands):
            grow(clique + [c], [x for x in cands[k + 1:] if x in orth[c]])

    for i in range(n):
        grow([i], sorted(x for x in orth[i] if x > i))
    return clauses


def sat_colorable(rays: list[Ray], dim: int, tol: float = DEFAULT_TOL):
    """Return a 0/1 list if the ray set is colourable, else None."""
    clauses = encode(rays, dim, tol)
    n = len(rays)
    if not clauses:
        return [0] * n
    model = pycosat.solve(clauses, vars=n)
    if model == "UNSAT":
        return None
    if model == "UNKNOWN":
        raise RuntimeError("SAT solver gave up")
    return [1 if lit > 0 else 0 for lit in model[:n]]
