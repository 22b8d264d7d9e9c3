"""Valuations on finite sets of observables.

A valuation picks a spectrum point for every observable so that the values
of each commuting family form a point of the family's joint spectrum.  For
rank-1 projections given as rays this reduces to the familiar colouring
rules: values are 0/1, orthogonal rays are never both 1, and every complete
orthogonal basis contains exactly one 1.

Two searches live here: :func:`find_valuation` for ray sets (backtracking
with unit propagation) and :func:`find_valuation_general` for arbitrary
Hermitian matrices (table constraints over maximal commuting cliques).
:func:`verify_valuation` re-derives all constraints from the raw data and
does not share code with either search.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import networkx as nx
import numpy as np

from . import fileio
from .fileio import InputError
from .operators import (
    DEFAULT_TOL,
    Observable,
    Ray,
    commutes,
    distinct_eigenvalues,
    joint_spectrum,
)

Valuation = dict[int, float]

DEFAULT_BUDGET = 10**7


@dataclass
class RaySet:
    dim: int
    rays: list[Ray]
    name: str = ""
    provenance: str = ""
    expected: str | None = None
    tol: float = DEFAULT_TOL
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for k, r in enumerate(self.rays):
            if r.dim != self.dim:
                raise ValueError(f"ray {k} has dimension {r.dim}, expected {self.dim}")
        for i, j in combinations(range(len(self.rays)), 2):
            if self.rays[i].equivalent(self.rays[j], self.tol):
                raise ValueError(f"rays {i} and {j} are equivalent")

    @property
    def exact(self) -> bool:
        return all(r.exact for r in self.rays)

    def __len__(self):
        return len(self.rays)

    def projections(self) -> list[Observable]:
        return [r.projection() for r in self.rays]

    def to_json(self) -> dict:
        exact = self.exact
        out = {
            "dim": self.dim,
            "scalars": "exact" if exact else "float",
            "name": self.name,
            "rays": [fileio.encode_ray(r, exact) for r in self.rays],
            "expected": self.expected,
        }
        if self.provenance:
            out["provenance"] = self.provenance
        out.update(self.meta)
        return out

    @classmethod
    def from_json(cls, data: dict) -> RaySet:
        dim = fileio.require(data, "dim", int)
        if dim < 1:
            raise InputError("must be positive", "dim")
        mode = fileio.scalar_mode(data)
        rays = []
        for k, row in enumerate(fileio.require(data, "rays", list)):
            v = fileio.decode_vector(row, mode, f"rays[{k}]")
            if len(v) != dim:
                raise InputError(f"has {len(v)} coordinates, expected {dim}", f"rays[{k}]")
            try:
                rays.append(Ray(v))
            except ValueError as exc:
                raise InputError(str(exc), f"rays[{k}]") from exc
        expected = data.get("expected")
        if expected not in (None, "colorable", "uncolorable"):
            raise InputError("must be 'colorable', 'uncolorable' or null", "expected")
        known = {"dim", "scalars", "name", "rays", "expected", "provenance"}
        try:
            return cls(
                dim,
                rays,
                name=str(data.get("name", "")),
                provenance=str(data.get("provenance", "")),
                expected=expected,
                meta={k: v for k, v in data.items() if k not in known},
            )
        except ValueError as exc:
            raise InputError(str(exc), "rays") from exc

    @classmethod
    def load(cls, path) -> RaySet:
        return cls.from_json(fileio.load_json(path))


@dataclass(frozen=True)
class ContextSystem:
    pairs: tuple[tuple[int, int], ...]
    bases: tuple[tuple[int, ...], ...]

    def neighbors(self, n: int) -> list[list[int]]:
        adj = [[] for _ in range(n)]
        for i, j in self.pairs:
            adj[i].append(j)
            adj[j].append(i)
        return adj


@dataclass
class SearchCertificate:
    outcome: str  # "found" | "exhausted" | "budget"
    valuation: Valuation | None = None
    nodes: int = 0
    propagations: int = 0
    elapsed: float = 0.0
    tol: float = DEFAULT_TOL
    threads: int = 1

    @property
    def found(self) -> bool:
        return self.outcome == "found"

    @property
    def exhausted(self) -> bool:
        return self.outcome == "exhausted"

    def to_json(self) -> dict:
        return {
            "outcome": self.outcome,
            "valuation": None if self.valuation is None else {str(k): v for k, v in sorted(self.valuation.items())},
            "nodes": self.nodes,
            "propagations": self.propagations,
            "elapsed": round(self.elapsed, 6),
            "tol": self.tol,
            "threads": self.threads,
            "counts_approximate": self.threads > 1,
        }


class BudgetExceeded(Exception):
    pass


def default_threads() -> int:
    env = os.environ.get("NOGO_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def build_contexts(rs: RaySet, tol: float | None = None) -> ContextSystem:
    """All orthogonal pairs and all complete orthogonal bases of ``rs``."""
    tol = rs.tol if tol is None else tol
    n = len(rs.rays)
    pairs = tuple((i, j) for i, j in combinations(range(n), 2) if rs.rays[i].is_orthogonal(rs.rays[j], tol))
    adj = [set() for _ in range(n)]
    for i, j in pairs:
        adj[i].add(j)
        adj[j].add(i)
    bases = []

    def extend(clique: list[int], candidates: list[int]):
        if len(clique) == rs.dim:
            bases.append(tuple(clique))
            return
        for k, c in enumerate(candidates):
            extend(clique + [c], [x for x in candidates[k + 1:] if x in adj[c]])

    for i in range(n):
        extend([i], sorted(x for x in adj[i] if x > i))
    return ContextSystem(pairs, tuple(bases))


# -- ray-set search ---------------------------------------------------------


class _RaySearch:
    """Backtracking over 0/1 assignments with unit propagation."""

    def __init__(self, n: int, dim: int, neighbors, bases, budget: int | None):
        self.n = n
        self.dim = dim
        self.neighbors = neighbors
        self.bases = bases
        self.var_bases = [[] for _ in range(n)]
        for b, basis in enumerate(bases):
            for x in basis:
                self.var_bases[x].append(b)
        degree = [len(neighbors[x]) + len(self.var_bases[x]) for x in range(n)]
        self.order = sorted(range(n), key=lambda x: (-degree[x], x))
        self.budget = budget
        self.val = [-1] * n
        self.zeros = [0] * len(bases)
        self.ones = [0] * len(bases)
        self.trail: list[int] = []
        self.nodes = 0
        self.propagations = 0

    def _set(self, x: int, v: int, queue: list) -> bool:
        """Assign and enqueue consequences; False on conflict."""
        self.val[x] = v
        self.trail.append(x)
        d = self.dim
        if v == 1:
            for b in self.var_bases[x]:
                self.ones[b] += 1
            for y in self.neighbors[x]:
                if self.val[y] == 1:
                    return False
                if self.val[y] == -1:
                    queue.append((y, 0))
        else:
            for b in self.var_bases[x]:
                self.zeros[b] += 1
                if self.ones[b] == 0:
                    z = self.zeros[b]
                    if z == d:
                        return False
                    if z == d - 1:
                        for y in self.bases[b]:
                            if self.val[y] == -1:
                                queue.append((y, 1))
                                break
        return True

    def assign(self, x: int, v: int) -> bool:
        queue = [(x, v)]
        first = True
        while queue:
            y, w = queue.pop()
            cur = self.val[y]
            if cur == w:
                continue
            if cur != -1:
                return False
            if not first:
                self.propagations += 1
            first = False
            if not self._set(y, w, queue):
                return False
        return True

    def undo(self, mark: int):
        while len(self.trail) > mark:
            x = self.trail.pop()
            if self.val[x] == 1:
                for b in self.var_bases[x]:
                    self.ones[b] -= 1
            else:
                for b in self.var_bases[x]:
                    self.zeros[b] -= 1
            self.val[x] = -1

    def _next_var(self) -> int:
        for x in self.order:
            if self.val[x] == -1:
                return x
        return -1

    def _tick(self):
        self.nodes += 1
        if self.budget is not None and self.nodes > self.budget:
            raise BudgetExceeded

    def replay(self, prefix) -> bool:
        for x, v in prefix:
            self._tick()
            if not self.assign(x, v):
                return False
        return True

    def dfs(self) -> list[int] | None:
        x = self._next_var()
        if x == -1:
            return list(self.val)
        for v in (1, 0):
            self._tick()
            mark = len(self.trail)
            if self.assign(x, v):
                found = self.dfs()
                if found is not None:
                    return found
            self.undo(mark)
        return None

    def frontier(self, depth: int, prefix=()) -> list[tuple]:
        """Decision prefixes at ``depth`` in DFS order (dead branches pruned)."""
        x = self._next_var()
        if x == -1 or depth == 0:
            return [prefix]
        out = []
        for v in (1, 0):
            mark = len(self.trail)
            if self.assign(x, v):
                out.extend(self.frontier(depth - 1, prefix + ((x, v),)))
            self.undo(mark)
        return out


def _solve_prefix(args):
    n, dim, neighbors, bases, budget, prefix = args
    s = _RaySearch(n, dim, neighbors, bases, budget)
    try:
        if not s.replay(prefix):
            return None, s.nodes, s.propagations, False
        return s.dfs(), s.nodes, s.propagations, False
    except BudgetExceeded:
        return None, s.nodes, s.propagations, True


def find_valuation(
    rs: RaySet,
    *,
    budget: int | None = None,
    threads: int = 1,
    contexts: ContextSystem | None = None,
) -> SearchCertificate:
    """Search for a 0/1 colouring of ``rs``; exhaustive unless ``budget`` is hit.

    With ``threads > 1`` the top of the search tree is split into decision
    prefixes solved in worker processes; prefixes are consumed in DFS order,
    so the returned valuation is the one a single-threaded run returns.
    """
    start = time.perf_counter()
    ctx = build_contexts(rs) if contexts is None else contexts
    n = len(rs.rays)
    neighbors = ctx.neighbors(n)
    bases = [tuple(b) for b in ctx.bases]

    if threads <= 1 or n < 8:
        s = _RaySearch(n, rs.dim, neighbors, bases, budget)
        try:
            sol = s.dfs()
            outcome = "found" if sol is not None else "exhausted"
        except BudgetExceeded:
            sol, outcome = None, "budget"
        return SearchCertificate(
            outcome,
            None if sol is None else {i: float(v) for i, v in enumerate(sol)},
            s.nodes,
            s.propagations,
            time.perf_counter() - start,
            rs.tol,
            1,
        )

    depth = max(1, int(np.ceil(np.log2(4 * threads))))
    prefixes = _RaySearch(n, rs.dim, neighbors, bases, None).frontier(depth)
    tasks = [(n, rs.dim, neighbors, bases, budget, p) for p in prefixes]
    nodes = props = 0
    sol, outcome = None, "exhausted"
    with ProcessPoolExecutor(max_workers=threads) as pool:
        for found, k, p, over in pool.map(_solve_prefix, tasks):
            nodes += k
            props += p
            if sol is not None:
                continue
            if found is not None and outcome != "budget":
                sol, outcome = found, "found"
            elif over and outcome == "exhausted":
                outcome = "budget"
    return SearchCertificate(
        outcome,
        None if sol is None else {i: float(v) for i, v in enumerate(sol)},
        nodes,
        props,
        time.perf_counter() - start,
        rs.tol,
        threads,
    )


# -- general observables ----------------------------------------------------


@dataclass
class CommutationStructure:
    domains: list[list[float]]
    cliques: list[tuple[int, ...]]
    allowed: list[list[tuple[int, ...]]]


def commutation_structure(obs: Sequence[Observable], tol: float = DEFAULT_TOL) -> CommutationStructure:
    """Spectra, maximal commuting cliques, and per-clique joint-spectrum tables."""
    if not obs:
        return CommutationStructure([], [], [])
    dim = obs[0].dim
    if any(o.dim != dim for o in obs):
        raise ValueError("observables must share one dimension")
    domains = [distinct_eigenvalues(o, tol) for o in obs]
    g = nx.Graph()
    g.add_nodes_from(range(len(obs)))
    g.add_edges_from((i, j) for i, j in combinations(range(len(obs)), 2) if commutes(obs[i], obs[j], tol))
    cliques = sorted(tuple(sorted(c)) for c in nx.find_cliques(g))
    allowed = []
    for c in cliques:
        js = joint_spectrum([obs[i] for i in c], tol)
        rows = []
        for p in js.points:
            row = []
            for k, i in enumerate(c):
                dom = np.asarray(domains[i])
                j = int(np.argmin(np.abs(dom - p[k])))
                if abs(dom[j] - p[k]) > 1e3 * tol * max(1.0, abs(dom[j])):
                    raise RuntimeError(f"joint spectrum value {p[k]} not in spectrum of observable {i}")
                row.append(j)
            rows.append(tuple(row))
        allowed.append(sorted(set(rows)))
    return CommutationStructure(domains, cliques, allowed)


class _TableSearch:
    """Backtracking with generalized arc consistency over table constraints."""

    def __init__(self, struct: CommutationStructure, budget: int | None):
        self.struct = struct
        self.n = len(struct.domains)
        self.budget = budget
        self.nodes = 0
        self.propagations = 0
        self.cons_of = [[] for _ in range(self.n)]
        for c, clique in enumerate(struct.cliques):
            if len(clique) > 1:
                for x in clique:
                    self.cons_of[x].append(c)

    def propagate(self, dom: list[int], queue: list[int]) -> bool:
        cliques, allowed = self.struct.cliques, self.struct.allowed
        pending = set(queue)
        while queue:
            c = queue.pop()
            pending.discard(c)
            vars_ = cliques[c]
            support = [0] * len(vars_)
            for t in allowed[c]:
                if all(dom[x] >> t[k] & 1 for k, x in enumerate(vars_)):
                    for k in range(len(vars_)):
                        support[k] |= 1 << t[k]
            for k, x in enumerate(vars_):
                new = dom[x] & support[k]
                if new != dom[x]:
                    if new == 0:
                        return False
                    dom[x] = new
                    self.propagations += 1
                    for c2 in self.cons_of[x]:
                        if c2 != c and c2 not in pending:
                            pending.add(c2)
                            queue.append(c2)
        return True

    def solve(self) -> list[int] | None:
        dom = [(1 << len(d)) - 1 for d in self.struct.domains]
        constrained = [c for c, cl in enumerate(self.struct.cliques) if len(cl) > 1]
        if not self.propagate(dom, list(constrained)):
            return None
        return self._dfs(dom)

    def _dfs(self, dom: list[int]) -> list[int] | None:
        best, key = -1, None
        for x in range(self.n):
            size = bin(dom[x]).count("1")
            if size > 1:
                k = (size, -len(self.cons_of[x]), x)
                if key is None or k < key:
                    best, key = x, k
        if best == -1:
            return [d.bit_length() - 1 for d in dom]
        x = best
        for v in range(len(self.struct.domains[x])):
            if not dom[x] >> v & 1:
                continue
            self.nodes += 1
            if self.budget is not None and self.nodes > self.budget:
                raise BudgetExceeded
            child = list(dom)
            child[x] = 1 << v
            if self.propagate(child, list(self.cons_of[x])):
                found = self._dfs(child)
                if found is not None:
                    return found
        return None


def find_valuation_general(
    obs: Sequence[Observable],
    *,
    tol: float = DEFAULT_TOL,
    budget: int | None = DEFAULT_BUDGET,
    structure: CommutationStructure | None = None,
) -> SearchCertificate:
    """Exhaustive search for a valuation of arbitrary observables.

    Joint-spectrum constraints are imposed on maximal commuting cliques only;
    constraints on sub-cliques follow from them.  Returns outcome "budget"
    when more than ``budget`` search nodes would be needed.
    """
    start = time.perf_counter()
    struct = commutation_structure(obs, tol) if structure is None else structure
    s = _TableSearch(struct, budget)
    try:
        sol = s.solve()
        outcome = "found" if sol is not None else "exhausted"
    except BudgetExceeded:
        sol, outcome = None, "budget"
    valuation = None
    if sol is not None:
        valuation = {i: struct.domains[i][k] for i, k in enumerate(sol)}
    return SearchCertificate(outcome, valuation, s.nodes, s.propagations, time.perf_counter() - start, tol, 1)


# -- certificate checking ---------------------------------------------------


@dataclass
class VerificationResult:
    ok: bool
    failure: dict | None = None

    def __bool__(self):
        return self.ok


def _maximal_cliques(adj: list[set[int]]) -> list[list[int]]:
    """Bron-Kerbosch with pivoting."""
    out = []

    def bk(r, p, x):
        if not p and not x:
            out.append(sorted(r))
            return
        pivot = max(p | x, key=lambda u: len(adj[u] & p))
        for v in sorted(p - adj[pivot]):
            bk(r | {v}, p & adj[v], x & adj[v])
            p = p - {v}
            x = x | {v}

    bk(set(), set(range(len(adj))), set())
    return out


def verify_valuation(target, v: Valuation, tol: float = DEFAULT_TOL) -> VerificationResult:
    """Check a valuation against a RaySet or a list of observables."""
    n = len(target.rays) if isinstance(target, RaySet) else len(target)
    missing = [i for i in range(n) if i not in v]
    if missing:
        raise ValueError(f"valuation is missing indices {missing}")
    if isinstance(target, RaySet):
        return _verify_rays(target, v, tol)
    return _verify_observables(list(target), v, tol)


def _verify_rays(rs: RaySet, v: Valuation, tol: float) -> VerificationResult:
    rays = rs.rays
    n = len(rays)
    for i in range(n):
        if v[i] not in (0, 1):
            return VerificationResult(False, {"kind": "spectrum", "indices": [i], "values": [v[i]]})
    orth = [[False] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            ip = rays[i].inner(rays[j])
            if hasattr(ip, "is_zero"):
                z = ip.is_zero()
            else:
                z = abs(ip) <= tol * np.linalg.norm(rays[i].numeric) * np.linalg.norm(rays[j].numeric)
            orth[i][j] = orth[j][i] = z
            if z and v[i] == 1 and v[j] == 1:
                return VerificationResult(False, {"kind": "orthogonal-pair", "indices": [i, j], "values": [1, 1]})
    # complete bases: orthogonal sets of size dim
    stack = [([i], [j for j in range(i + 1, n) if orth[i][j]]) for i in range(n)]
    while stack:
        clique, cand = stack.pop()
        if len(clique) == rs.dim:
            ones = sum(v[i] for i in clique)
            if ones != 1:
                return VerificationResult(
                    False, {"kind": "basis", "indices": clique, "values": [v[i] for i in clique]}
                )
            continue
        for k, c in enumerate(cand):
            stack.append((clique + [c], [x for x in cand[k + 1:] if orth[c][x]]))
    return VerificationResult(True)


def _verify_observables(obs: list[Observable], v: Valuation, tol: float) -> VerificationResult:
    n = len(obs)
    mats = [o.numeric for o in obs]
    for i, m in enumerate(mats):
        w = np.linalg.eigvalsh(m)
        if np.min(np.abs(w - v[i])) > tol * max(1.0, np.max(np.abs(w))):
            return VerificationResult(False, {"kind": "spectrum", "indices": [i], "values": [v[i]]})
    adj = [set() for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if obs[i].exact and obs[j].exact:
                c = obs[i].matrix @ obs[j].matrix - obs[j].matrix @ obs[i].matrix
                ok = all(x.is_zero() for x in c.ravel())
            else:
                c = mats[i] @ mats[j] - mats[j] @ mats[i]
                ok = np.linalg.norm(c) <= tol * (1 + np.linalg.norm(mats[i]) * np.linalg.norm(mats[j]))
            if ok:
                adj[i].add(j)
                adj[j].add(i)
    dim = obs[0].dim if obs else 0
    for clique in _maximal_cliques(adj):
        if len(clique) < 2:
            continue
        # (v_1..v_k) is a joint eigenvalue iff the stacked A_i - v_i I has a kernel
        stacked = np.vstack([mats[i] - v[i] * np.eye(dim) for i in clique])
        smin = np.linalg.svd(stacked, compute_uv=False)[-1]
        if smin > tol * max(1.0, np.linalg.norm(stacked, 2)):
            return VerificationResult(
                False, {"kind": "joint-spectrum", "indices": clique, "values": [v[i] for i in clique]}
            )
    return VerificationResult(True)
