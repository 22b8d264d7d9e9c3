"""Moving no-go witnesses between dimensions.

Downward: an expectation-representation candidate on C^d' restricts to
C^d by looking up embedded states and projections in its tables.

Upward: an uncolourable ray set in C^d is lifted to C^d' one dimension at
a time.  Going from m to m + 1 takes the padded set together with copies
whose coordinates are permuted so the original subspace is rotated onto
other coordinate subspaces, plus the coordinate vectors completing each
copy to the full space.  With two copies (identity and the swap of the last
two coordinates) neither e_m nor e_{m+1} can be 0, and they are orthogonal,
so the union is uncolourable.  Every output is certified by the solver
before it is returned; if a certification fails more swapped copies are
added.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .falsifier import CandidateRepresentation
from .operators import DEFAULT_TOL, DensityMatrix, Observable, Ray, embed, exact_zeros, kron_identity
from .scalars import Exact
from .valuation import (
    DEFAULT_BUDGET,
    RaySet,
    SearchCertificate,
    find_valuation,
    find_valuation_general,
)

LIFT_BUDGET = 10**8


class LiftError(RuntimeError):
    def __init__(self, message: str, certificate: SearchCertificate | None = None):
        super().__init__(message)
        self.certificate = certificate


# -- restriction ------------------------------------------------------------


class _RestrictedExtension:
    def __init__(self, parent, dim_parent: int):
        self.parent = parent
        self.dim_parent = dim_parent

    def mu(self, rho):
        return self.parent.mu(embed(rho, self.dim_parent))

    def F(self, ray, label):
        return self.parent.F(embed(ray, self.dim_parent), label)


def _supported_in(m: np.ndarray, d: int, tol: float) -> bool:
    mask = np.ones(m.shape, dtype=bool)
    mask[tuple(slice(0, d) for _ in m.shape)] = False
    return not np.any(np.abs(m[mask]) > tol)


def restrict_expectation_rep(
    c: CandidateRepresentation,
    d: int,
    states: list[DensityMatrix] | None = None,
    effects: list[Ray] | None = None,
    tol: float = 1e-12,
) -> CandidateRepresentation:
    """Restrict a candidate on C^d' to the subspace spanned by the first d coordinates.

    Without explicit ``states``/``effects`` every table entry supported in
    the subspace is kept.  Requested objects must appear (after embedding)
    in the parent's tables.  Rows are copied, not recomputed.
    """
    if d > c.dim or d < 1:
        raise ValueError(f"cannot restrict dimension {c.dim} to {d}")
    if states is None:
        s_idx = [k for k, s in enumerate(c.states) if _supported_in(s.matrix, d, tol)]
        new_states = [DensityMatrix(c.states[k].matrix[:d, :d]) for k in s_idx]
    else:
        s_idx = []
        for n, s in enumerate(states):
            big = embed(s, c.dim).matrix
            hit = next((k for k, t in enumerate(c.states) if np.max(np.abs(t.matrix - big)) <= tol), None)
            if hit is None:
                raise KeyError(f"requested state {n} is not in the candidate's table")
            s_idx.append(hit)
        new_states = list(states)
    if effects is None:
        e_idx = [k for k, e in enumerate(c.effects) if _supported_in(e.unit, d, tol)]
        new_effects = [Ray(c.effects[k].numeric[:d]) for k in e_idx]
    else:
        e_idx = []
        for n, e in enumerate(effects):
            big = embed(e, c.dim)
            hit = next((k for k, t in enumerate(c.effects) if t.equivalent(big, tol)), None)
            if hit is None:
                raise KeyError(f"requested effect {n} is not in the candidate's table")
            e_idx.append(hit)
        new_effects = list(effects)
    pos = {k: n for n, k in enumerate(s_idx)}
    triples = [(p, pos[i], pos[j], pos[k]) for p, i, j, k in c.triples if {i, j, k} <= pos.keys()]
    mixtures = [[(p, pos[k]) for p, k in m] for m in c.mixtures if all(k in pos for _, k in m)]
    ext = None if c.extension is None else _RestrictedExtension(c.extension, c.dim)
    return CandidateRepresentation(
        d,
        list(c.labels),
        new_states,
        c.mu[s_idx].copy() if s_idx else np.zeros((0, len(c.labels))),
        new_effects,
        c.F[e_idx].copy() if e_idx else np.zeros((0, len(c.labels))),
        triples,
        mixtures,
        ext,
    )


# -- lifting ray sets -------------------------------------------------------


def _ray_key(r: Ray):
    """Hashable normal form of an exact ray (first nonzero coordinate = 1)."""
    lead = next(x for x in r.coords if not x.is_zero())
    return tuple(tuple((x / lead).to_quad()) for x in r.coords)


def _permute(r: Ray, perm: list[int]) -> Ray:
    """Coordinate k of the result is coordinate perm[k] of ``r``."""
    return Ray(r.coords[perm])


def _basis_vector(dim: int, k: int, exact: bool) -> Ray:
    if exact:
        v = exact_zeros((dim,))
        v[k] = Exact(1)
    else:
        v = np.zeros(dim, dtype=complex)
        v[k] = 1.0
    return Ray(v)


class _RayCollector:
    def __init__(self, exact: bool, tol: float):
        self.exact = exact
        self.tol = tol
        self.rays: list[Ray] = []
        self.keys: set = set()

    def add(self, r: Ray):
        if self.exact:
            key = _ray_key(r)
            if key in self.keys:
                return
            self.keys.add(key)
        elif any(r.equivalent(s, self.tol) for s in self.rays):
            return
        self.rays.append(r)


def _lift_step(rays: list[Ray], m: int, copies: int, exact: bool, tol: float) -> tuple[list[Ray], list]:
    """Rays in C^m -> candidate rays in C^(m+1) using ``copies`` permuted copies."""
    col = _RayCollector(exact, tol)
    padded = [embed(r, m + 1) for r in rays]
    recipe = []
    for j in range(copies):
        perm = list(range(m + 1))
        if j > 0:
            # swap coordinate m - j with the new coordinate m
            perm[m - j], perm[m] = perm[m], perm[m - j]
        for r in padded:
            col.add(_permute(r, perm))
        # the coordinate left out of this copy's subspace completes its bases
        missing = m if j == 0 else m - j
        col.add(_basis_vector(m + 1, missing, exact))
        recipe.append({"permutation": perm, "complement": missing})
    return col.rays, recipe


def lift_rayset(
    rs: RaySet,
    dim: int,
    *,
    budget: int | None = LIFT_BUDGET,
    threads: int = 1,
    check_input: bool = True,
) -> RaySet:
    """Uncolourable ray set in C^dim containing the padded ``rs``.

    Raises ValueError when ``rs`` is not certified uncolourable and
    :class:`LiftError` when a constructed set cannot be certified.
    """
    if dim <= rs.dim:
        raise ValueError(f"target dimension {dim} must exceed {rs.dim}")
    if check_input:
        pre = find_valuation(rs, budget=budget, threads=threads)
        if pre.outcome != "exhausted":
            raise ValueError(f"input ray set is not certified uncolorable (solver outcome: {pre.outcome})")
    exact = rs.exact
    rays = list(rs.rays)
    recipe = []
    cert = None
    for m in range(rs.dim, dim):
        for copies in range(2, m + 2):
            candidate, steps = _lift_step(rays, m, copies, exact, rs.tol)
            out = RaySet(m + 1, candidate, tol=rs.tol)
            cert = find_valuation(out, budget=budget, threads=threads)
            if cert.outcome == "exhausted":
                break
            if cert.outcome == "budget":
                raise LiftError(f"verification budget exhausted lifting to dimension {m + 1}", cert)
        else:
            raise LiftError(f"no certified lift to dimension {m + 1}; last counterexample attached", cert)
        rays = candidate
        recipe.append({"from_dim": m, "to_dim": m + 1, "copies": steps, "rays": len(candidate)})
    return RaySet(
        dim,
        rays,
        name=f"{rs.name or 'rayset'}-lift{dim}",
        provenance=f"lifted from {rs.name or 'input'} (dim {rs.dim}) by permuted copies",
        expected="uncolorable",
        tol=rs.tol,
        meta={"verified": True, "recipe": recipe, "certificate": cert.to_json()},
    )


# -- projections modulo identity --------------------------------------------


@dataclass
class TensorLift:
    observables: list[Observable]
    certificate: SearchCertificate | None
    k: int

    @property
    def verified(self) -> bool:
        return self.certificate is not None and self.certificate.exhausted


def tensor_modulo_identity(
    rs: RaySet,
    k: int,
    *,
    verify: bool = True,
    check_input: bool = True,
    budget: int | None = DEFAULT_BUDGET,
    tol: float = DEFAULT_TOL,
) -> TensorLift:
    """{P (x) I_k : P a projection of ``rs``}, certified valuation-free."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if check_input:
        pre = find_valuation(rs, budget=budget)
        if pre.outcome != "exhausted":
            raise ValueError(f"input ray set is not certified uncolorable (solver outcome: {pre.outcome})")
    ops = [kron_identity(p, k) for p in rs.projections()]
    cert = None
    if verify:
        cert = find_valuation_general(ops, tol=tol, budget=budget)
        if cert.outcome == "found":
            raise LiftError("tensor set admits a valuation", cert)
        if cert.outcome == "budget":
            raise LiftError("verification budget exhausted", cert)
    return TensorLift(ops, cert, k)
