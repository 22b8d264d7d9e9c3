"""Finite candidate expectation representations and their refutation.

A candidate has a finite hidden-variable space (a list of labels), a table
of probability rows mu(rho) for listed states, and a table of response rows
F(E) in [0, 1] for listed rank-1 projections.  Integrals over the hidden
variable are weighted sums.  Three checks look for a broken constraint:

* ``check_eq1``: Tr(rho E) == sum_lam F(E)(lam) mu(rho)(lam);
* ``check_convex``: mu of a claimed mixture equals the mixture of the mu rows;
* ``check_mixture_consistency``: two decompositions of the same density
  matrix must lead to the same mu row.

A finite table can satisfy all three on its own entries.  :func:`falsify`
therefore also probes the candidate beyond its table through an *extension*
object that answers mu(rho) and F(E)(lam) for arbitrary inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Protocol, Sequence

import numpy as np

from . import fileio
from .fileio import InputError
from .operators import DEFAULT_TOL, DensityMatrix, Ray, random_ray, random_unitary


@dataclass
class Violation:
    kind: str  # "eq1" | "convexity" | "mixture-consistency"
    objects: dict
    lhs: object
    rhs: object
    gap: float
    tol: float = DEFAULT_TOL
    note: str = ""

    def to_json(self) -> dict:
        out = {
            "kind": self.kind,
            "objects": self.objects,
            "lhs": _jsonable(self.lhs),
            "rhs": _jsonable(self.rhs),
            "gap": self.gap,
            "tol": self.tol,
        }
        if self.note:
            out["note"] = self.note
        return out

    @classmethod
    def from_json(cls, data: dict) -> Violation:
        return cls(data["kind"], data["objects"], data["lhs"], data["rhs"], data["gap"], data["tol"], data.get("note", ""))


@dataclass
class BudgetReport:
    probes: int
    seed: int
    note: str = "no violation found within the probe budget"

    def to_json(self) -> dict:
        return {"outcome": "budget", "probes": self.probes, "seed": self.seed, "note": self.note}


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (list, tuple)):
        return [_jsonable(y) for y in x]
    if isinstance(x, np.floating):
        return float(x)
    return x


def _enc_matrix(m: np.ndarray) -> list:
    return fileio.encode_matrix(np.asarray(m, dtype=complex))


def _dec_matrix(rows) -> np.ndarray:
    return np.array([[complex(z["re"], z["im"]) for z in row] for row in rows])


def _enc_vector(v: np.ndarray) -> list:
    return fileio.encode_vector(np.asarray(v, dtype=complex))


def _dec_vector(row) -> np.ndarray:
    return np.array([complex(z["re"], z["im"]) for z in row])


class Extension(Protocol):
    """Answers the candidate's maps on objects outside its table."""

    def mu(self, rho: DensityMatrix) -> dict[str, float]: ...

    def F(self, ray: Ray, label: str) -> float: ...


@dataclass
class CandidateRepresentation:
    dim: int
    labels: list[str]
    states: list[DensityMatrix]
    mu: np.ndarray
    effects: list[Ray]
    F: np.ndarray
    triples: list[tuple[float, int, int, int]] = field(default_factory=list)
    mixtures: list[list[tuple[float, int]]] = field(default_factory=list)
    extension: Extension | None = None
    extension_spec: dict | None = None
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        n_lam = len(self.labels)
        if len(set(self.labels)) != n_lam:
            raise ValueError("hidden-variable labels must be distinct")
        self.mu = np.asarray(self.mu, dtype=float).reshape(len(self.states), n_lam)
        self.F = np.asarray(self.F, dtype=float).reshape(len(self.effects), n_lam)
        for k, s in enumerate(self.states):
            if s.dim != self.dim:
                raise ValueError(f"state {k} has dimension {s.dim}, expected {self.dim}")
        for k, e in enumerate(self.effects):
            if e.dim != self.dim:
                raise ValueError(f"effect {k} has dimension {e.dim}, expected {self.dim}")
        for k, row in enumerate(self.mu):
            if np.any(row < -self.tol) or abs(row.sum() - 1.0) > self.tol:
                raise ValueError(f"mu row {k} is not a probability vector")
        if np.any(self.F < -self.tol) or np.any(self.F > 1 + self.tol):
            raise ValueError("F entries must lie in [0, 1]")

    def to_json(self) -> dict:
        out = {
            "dim": self.dim,
            "lambda": list(self.labels),
            "states": [{"rho": _enc_matrix(s.matrix), "mu": row.tolist()} for s, row in zip(self.states, self.mu)],
            "effects": [{"ray": _enc_vector(e.numeric), "F": row.tolist()} for e, row in zip(self.effects, self.F)],
        }
        if self.triples:
            out["triples"] = [list(t) for t in self.triples]
        if self.mixtures:
            out["mixtures"] = [[list(t) for t in m] for m in self.mixtures]
        if self.extension_spec:
            out["extension"] = self.extension_spec
        return out

    @classmethod
    def from_json(cls, data: dict) -> CandidateRepresentation:
        dim = fileio.require(data, "dim", int)
        labels = [str(x) for x in fileio.require(data, "lambda", list)]
        n_lam = len(labels)
        states, mu, effects, F = [], [], [], []
        for k, s in enumerate(fileio.require(data, "states", list)):
            where = f"states[{k}]"
            if not isinstance(s, dict):
                raise InputError("expected an object", where)
            m = fileio.decode_matrix(fileio.require(s, "rho", list, where + "."), "float", where + ".rho", dim)
            try:
                states.append(DensityMatrix(m))
            except ValueError as exc:
                raise InputError(str(exc), where + ".rho") from exc
            mu.append(_row(s, "mu", n_lam, where))
        for k, e in enumerate(fileio.require(data, "effects", list)):
            where = f"effects[{k}]"
            if not isinstance(e, dict):
                raise InputError("expected an object", where)
            v = fileio.decode_vector(fileio.require(e, "ray", list, where + "."), "float", where + ".ray")
            if len(v) != dim:
                raise InputError(f"has {len(v)} coordinates, expected {dim}", where + ".ray")
            try:
                effects.append(Ray(v))
            except ValueError as exc:
                raise InputError(str(exc), where + ".ray") from exc
            F.append(_row(e, "F", n_lam, where))
        triples = []
        for k, t in enumerate(data.get("triples", [])):
            if not (isinstance(t, list) and len(t) == 4):
                raise InputError("expected [p, i, j, k]", f"triples[{k}]")
            triples.append((float(t[0]), int(t[1]), int(t[2]), int(t[3])))
        mixtures = []
        for k, m in enumerate(data.get("mixtures", [])):
            try:
                mixtures.append([(float(p), int(i)) for p, i in m])
            except (TypeError, ValueError) as exc:
                raise InputError("expected a list of [weight, state index]", f"mixtures[{k}]") from exc
        spec = data.get("extension")
        ext = None
        if spec is not None:
            try:
                ext = builtin_extension(spec, dim, labels, states)
            except ValueError as exc:
                raise InputError(str(exc), "extension") from exc
        try:
            return cls(
                dim,
                labels,
                states,
                np.array(mu).reshape(len(states), n_lam),
                effects,
                np.array(F).reshape(len(effects), n_lam),
                triples,
                mixtures,
                ext,
                spec,
            )
        except ValueError as exc:
            raise InputError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> CandidateRepresentation:
        return cls.from_json(fileio.load_json(path))


def _row(obj: dict, key: str, n: int, where: str) -> list[float]:
    row = fileio.require(obj, key, list, where + ".")
    if len(row) != n:
        raise InputError(f"has {len(row)} entries, expected {n}", f"{where}.{key}")
    try:
        return [float(x) for x in row]
    except (TypeError, ValueError) as exc:
        raise InputError("entries must be numbers", f"{where}.{key}") from exc


# -- table checks -----------------------------------------------------------


def eq1_residuals(c: CandidateRepresentation) -> np.ndarray:
    """Tr(rho_s E_e) - sum F_e mu_s, indexed [state, effect]."""
    quantum = np.array([[s.expectation(e) for e in c.effects] for s in c.states]).reshape(len(c.states), len(c.effects))
    return quantum - c.mu @ c.F.T


def _eq1_violation(rho: np.ndarray, ray: np.ndarray, labels, mu_row, F_row, tol, extra=None) -> Violation | None:
    u = ray / np.linalg.norm(ray)
    lhs = float(np.real(np.vdot(u, rho @ u)))
    rhs = float(np.dot(F_row, mu_row))
    gap = abs(lhs - rhs)
    if gap <= tol:
        return None
    objects = {
        "rho": _enc_matrix(rho),
        "ray": _enc_vector(ray),
        "lambda": [str(x) for x in labels],
        "mu": [float(x) for x in mu_row],
        "F": [float(x) for x in F_row],
    }
    if extra:
        objects.update(extra)
    return Violation("eq1", objects, lhs, rhs, gap, tol)


def check_eq1(c: CandidateRepresentation, tol: float = DEFAULT_TOL) -> list[Violation]:
    out = []
    for s, (state, mu_row) in enumerate(zip(c.states, c.mu)):
        for e, (effect, F_row) in enumerate(zip(c.effects, c.F)):
            v = _eq1_violation(state.matrix, effect.numeric, c.labels, mu_row, F_row, tol, {"state": s, "effect": e})
            if v is not None:
                out.append(v)
    return out


def check_convex(c: CandidateRepresentation, triples=None, tol: float = DEFAULT_TOL) -> list[Violation]:
    """Each triple (p, i, j, k) claims rho_k = p rho_i + (1 - p) rho_j."""
    triples = c.triples if triples is None else triples
    out = []
    for p, i, j, k in triples:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"weight {p} outside [0, 1]")
        ri, rj, rk = (c.states[x].matrix for x in (i, j, k))
        if np.linalg.norm(rk - p * ri - (1 - p) * rj) > 1e-9:
            raise ValueError(f"ill-posed triple {(p, i, j, k)}: rho_{k} is not that mixture")
        lhs = c.mu[k]
        rhs = p * c.mu[i] + (1 - p) * c.mu[j]
        gap = float(np.max(np.abs(lhs - rhs)))
        if gap > tol:
            objects = {
                "triple": [p, i, j, k],
                "p": p,
                "rho": [_enc_matrix(x) for x in (ri, rj, rk)],
                "lambda": list(c.labels),
                "mu": [c.mu[x].tolist() for x in (i, j, k)],
            }
            out.append(Violation("convexity", objects, lhs.tolist(), rhs.tolist(), gap, tol))
    return out


def _pure_vector(rho: np.ndarray, tol: float) -> np.ndarray | None:
    w, v = np.linalg.eigh(rho)
    if abs(w[-1] - 1.0) <= tol:
        return v[:, -1]
    return None


def listed_decompositions(c: CandidateRepresentation, tol: float = DEFAULT_TOL) -> list[list[tuple[float, int]]]:
    """Each listed state on its own, the explicit mixtures, and uniform
    mixtures over every complete orthonormal basis of listed pure states."""
    decs = [[(1.0, k)] for k in range(len(c.states))]
    decs += [list(m) for m in c.mixtures]
    pure = {k: u for k, s in enumerate(c.states) if (u := _pure_vector(s.matrix, tol)) is not None}
    keys = sorted(pure)
    adj = {k: {j for j in keys if j != k and abs(np.vdot(pure[k], pure[j])) <= tol} for k in keys}

    def grow(clique, cands):
        if len(clique) == c.dim:
            decs.append([(1.0 / c.dim, k) for k in clique])
            return
        for n, x in enumerate(cands):
            grow(clique + [x], [y for y in cands[n + 1:] if y in adj[x]])

    if c.dim > 1:
        for k in keys:
            grow([k], [j for j in keys if j > k and j in adj[k]])
    return decs


def check_mixture_consistency(c: CandidateRepresentation, tol: float = DEFAULT_TOL) -> list[Violation]:
    decs = listed_decompositions(c, tol)
    mats = [sum(p * c.states[k].matrix for p, k in d) for d in decs]
    rows = [sum(p * c.mu[k] for p, k in d) for d in decs]
    groups: list[list[int]] = []
    for n, m in enumerate(mats):
        for g in groups:
            if np.linalg.norm(mats[g[0]] - m) <= 1e-9:
                g.append(n)
                break
        else:
            groups.append([n])
    out = []
    for g in groups:
        for a, b in combinations(g, 2):
            gap = float(np.max(np.abs(rows[a] - rows[b])))
            if gap > tol:
                objects = {
                    "lambda": list(c.labels),
                    "decompositions": [_dec_record(decs[x], c) for x in (a, b)],
                }
                out.append(Violation("mixture-consistency", objects, rows[a].tolist(), rows[b].tolist(), gap, tol))
    return out


def _dec_record(dec, c: CandidateRepresentation) -> dict:
    return {
        "weights": [p for p, _ in dec],
        "states": [k for _, k in dec],
        "rho": [_enc_matrix(c.states[k].matrix) for _, k in dec],
        "mu": [c.mu[k].tolist() for _, k in dec],
    }


# -- re-checking certificates -----------------------------------------------


def recheck(v: Violation) -> float:
    """Recompute a violation's gap from the data recorded in it."""
    o = v.objects
    if v.kind == "eq1":
        rho = _dec_matrix(o["rho"])
        u = _dec_vector(o["ray"])
        u = u / np.linalg.norm(u)
        lhs = float(np.real(np.vdot(u, rho @ u)))
        rhs = float(np.dot(o["F"], o["mu"]))
        return abs(lhs - rhs)
    if v.kind == "convexity":
        p = o["p"]
        ri, rj, rk = (_dec_matrix(m) for m in o["rho"])
        if np.linalg.norm(rk - p * ri - (1 - p) * rj) > 1e-9:
            raise ValueError("recorded states do not form the claimed mixture")
        mi, mj, mk = (np.asarray(r) for r in o["mu"])
        return float(np.max(np.abs(mk - p * mi - (1 - p) * mj)))
    if v.kind == "mixture-consistency":
        combined, targets = [], []
        for d in o["decompositions"]:
            w = np.asarray(d["weights"])
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
                raise ValueError("decomposition weights are not a probability vector")
            targets.append(sum(p * _dec_matrix(m) for p, m in zip(w, d["rho"])))
            combined.append(sum(p * np.asarray(r) for p, r in zip(w, d["mu"])))
        if np.linalg.norm(targets[0] - targets[1]) > 1e-9:
            raise ValueError("recorded decompositions describe different states")
        return float(np.max(np.abs(combined[0] - combined[1])))
    raise ValueError(f"unknown violation kind {v.kind!r}")


# -- probing through an extension -------------------------------------------


def _align(rows: Sequence[dict]) -> tuple[list[str], list[np.ndarray]]:
    labels = sorted({lab for r in rows for lab in r}, key=str)
    return labels, [np.array([r.get(lab, 0.0) for lab in labels]) for r in rows]


def _probe_eq1(ext: Extension, rho: DensityMatrix, ray: Ray, tol: float, tag: str) -> Violation | None:
    mu = ext.mu(rho)
    labels = sorted(mu, key=str)
    mu_row = np.array([mu[lab] for lab in labels])
    F_row = np.array([ext.F(ray, lab) for lab in labels])
    return _eq1_violation(rho.matrix, ray.numeric, labels, mu_row, F_row, tol, {"probe": tag})


def _probe_mixture(ext: Extension, decs: list[tuple[np.ndarray, list[DensityMatrix]]], tol: float) -> list[Violation]:
    """decs: (weights, states) pairs all describing the same density matrix."""
    combined = []
    for w, sts in decs:
        rows = [ext.mu(s) for s in sts]
        combined.append((w, sts, rows))
    out = []
    for (wa, sa, ra), (wb, sb, rb) in combinations(combined, 2):
        labels, aligned = _align(ra + rb)
        A = sum(p * r for p, r in zip(wa, aligned[: len(ra)]))
        B = sum(p * r for p, r in zip(wb, aligned[len(ra):]))
        gap = float(np.max(np.abs(A - B)))
        if gap > tol:
            objects = {
                "lambda": [str(x) for x in labels],
                "decompositions": [
                    {"weights": list(map(float, w)), "rho": [_enc_matrix(s.matrix) for s in sts], "mu": [r.tolist() for r in rows]}
                    for w, sts, rows in ((wa, sa, aligned[: len(ra)]), (wb, sb, aligned[len(ra):]))
                ],
                "probe": "maximally-mixed",
            }
            out.append(Violation("mixture-consistency", objects, A.tolist(), B.tolist(), gap, tol))
    return out


def falsify(
    c: CandidateRepresentation,
    budget: int = 100,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    extension: Extension | None = None,
) -> Violation | BudgetReport:
    """Look for a violated constraint; the largest-gap violation is returned.

    The table checks run first.  If they pass, each of ``budget`` probe
    rounds draws a Haar-random pure state psi, uses psi, its orthogonal
    complement and a random rank-1 projection as expectation probes, and compares
    the maximally mixed state's mu with the uniform mixture over a random
    orthonormal basis.  Probes are answered by the candidate's extension.
    """
    if c.dim < 2:
        raise ValueError("no violation can exist below dimension 2")
    found = check_eq1(c, tol) + check_convex(c, None, tol) + check_mixture_consistency(c, tol)
    if found:
        return max(found, key=lambda v: v.gap)
    ext = extension if extension is not None else c.extension
    if ext is None:
        raise ValueError("table checks passed and no extension hook is available for probing")
    rng = np.random.default_rng(seed)
    d = c.dim
    mixed = DensityMatrix.maximally_mixed(d)
    for r in range(budget):
        psi = random_ray(d, rng)
        u = random_unitary(d, rng)
        # a vector orthogonal to psi: Gram-Schmidt on a random vector
        z = random_ray(d, rng).numeric
        z = z - np.vdot(psi.unit, z) * psi.unit
        perp = Ray(z / np.linalg.norm(z))
        effect = random_ray(d, rng)
        viols = []
        for tag, rho, e in (
            ("psi/psi", psi, psi),
            ("perp/psi", perp, psi),
            ("psi/random", psi, effect),
            ("perp/random", perp, effect),
        ):
            v = _probe_eq1(ext, DensityMatrix.pure(rho), e, tol, f"round {r}: {tag}")
            if v is not None:
                viols.append(v)
        basis = [DensityMatrix.pure(Ray(u[:, k])) for k in range(d)]
        w = np.full(d, 1.0 / d)
        viols += _probe_mixture(ext, [(np.array([1.0]), [mixed]), (w, basis)], tol)
        if viols:
            return max(viols, key=lambda v: v.gap)
    return BudgetReport(budget, seed)


# -- constructions ----------------------------------------------------------


def _ray_label(u: np.ndarray) -> str:
    u = u / np.linalg.norm(u)
    k = int(np.argmax(np.abs(u) > 1e-9))
    u = u * (abs(u[k]) / u[k])
    return "ray(" + ",".join(f"{z.real:.12f}{z.imag:+.12f}j" for z in u) + ")"


class TrivialPureExtension:
    """The state itself as hidden variable.

    Pure states map to a point mass at their own label.  A mixed state is
    sent to the mixture of point masses over its eigenvectors, as returned by
    the eigensolver; this is the naive extension a hidden-variable theorist
    would try, and it depends on the eigenbasis chosen.
    """

    def __init__(self, dim: int, seeds: Sequence[tuple[str, np.ndarray]] = ()):
        self.dim = dim
        self.vectors: dict[str, np.ndarray] = {}
        self._known: list[tuple[str, np.ndarray]] = []
        for label, v in seeds:
            u = np.asarray(v, dtype=complex)
            u = u / np.linalg.norm(u)
            self.vectors[label] = u
            self._known.append((label, u))

    def _label(self, u: np.ndarray) -> str:
        for label, w in self._known:
            if abs(abs(np.vdot(w, u)) - 1.0) <= 1e-12:
                return label
        label = _ray_label(u)
        self.vectors[label] = u
        self._known.append((label, u))
        return label

    def mu(self, rho: DensityMatrix) -> dict[str, float]:
        w, v = np.linalg.eigh(rho.matrix)
        out: dict[str, float] = {}
        for k in range(len(w)):
            if w[k] > 1e-12:
                lab = self._label(v[:, k])
                out[lab] = out.get(lab, 0.0) + float(w[k])
        return out

    def F(self, ray: Ray, label: str) -> float:
        return float(abs(np.vdot(ray.unit, self.vectors[label])) ** 2)


class ConstantExtension:
    """State-independent uniform mu with a constant response function."""

    def __init__(self, labels: Sequence[str], value: float):
        self.labels = list(labels) or ["lambda0"]
        self.value = float(value)

    def mu(self, rho: DensityMatrix) -> dict[str, float]:
        return {lab: 1.0 / len(self.labels) for lab in self.labels}

    def F(self, ray: Ray, label: str) -> float:
        return self.value


def trivial_pure_theory(dim: int, pure_states: Sequence[Ray], effects: Sequence[Ray] | None = None) -> CandidateRepresentation:
    """Hidden variable = the pure state; F(E)(psi) = <psi|E|psi>."""
    if dim < 1:
        raise ValueError("dimension must be positive")
    for i, j in combinations(range(len(pure_states)), 2):
        if pure_states[i].equivalent(pure_states[j]):
            raise ValueError(f"states {i} and {j} coincide")
    effects = list(pure_states) if effects is None else list(effects)
    labels = [f"psi{k}" for k in range(len(pure_states))]
    states = [DensityMatrix.pure(r) for r in pure_states]
    mu = np.eye(len(pure_states))
    F = np.array([[abs(np.vdot(psi.unit, e.unit)) ** 2 for psi in pure_states] for e in effects]).reshape(len(effects), len(labels))
    ext = TrivialPureExtension(dim, [(lab, r.unit) for lab, r in zip(labels, pure_states)])
    return CandidateRepresentation(
        dim, labels, states, mu, list(effects), F, extension=ext, extension_spec={"kind": "trivial-pure"}
    )


def constant_candidate(dim: int, states: Sequence[DensityMatrix], effects: Sequence[Ray], value: float = 0.5, n_lambda: int = 1) -> CandidateRepresentation:
    """Adversarial candidate with F == value everywhere."""
    labels = [f"lambda{k}" for k in range(n_lambda)]
    mu = np.full((len(states), n_lambda), 1.0 / n_lambda)
    F = np.full((len(effects), n_lambda), value)
    return CandidateRepresentation(
        dim, labels, list(states), mu, list(effects), F,
        extension=ConstantExtension(labels, value),
        extension_spec={"kind": "constant", "value": value},
    )


def builtin_extension(spec: dict, dim: int, labels: list[str], states: list[DensityMatrix]) -> Extension:
    """Extension named in a candidate file: trivial-pure, constant or bell."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValueError("extension must be an object with a 'kind'")
    kind = spec["kind"]
    if kind == "trivial-pure":
        seeds = []
        for lab, s in zip(labels, states):
            u = _pure_vector(s.matrix, 1e-9)
            if u is not None:
                seeds.append((lab, u))
        return TrivialPureExtension(dim, seeds)
    if kind == "constant":
        return ConstantExtension(labels, float(spec.get("value", 0.5)))
    if kind == "bell":
        from .bell import BellExtension

        if dim != 2:
            raise ValueError("the bell extension is defined for dimension 2 only")
        return BellExtension(int(spec.get("grid", len(labels) or 64)))
    raise ValueError(f"unknown extension kind {kind!r}")
