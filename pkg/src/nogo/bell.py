"""Hidden-variable value model for a single qubit.

States are Bloch vectors n, observables are written A = a0 I + a.sigma, and
the hidden variable lam is uniform on [-1, 1].  The value assigned to A is

    a0 + |a| * sign0(a_hat.n + c(a_hat) * lam)

where c is a fixed antisymmetric orientation (sign of the first nonzero
component of a_hat) and sign0(0) = c(a_hat).  Averaging over lam gives
a0 + a.n = <psi|A|psi> exactly, and the antisymmetry of c makes the model
respect functional relations v(f(A)) = f(v(A)) at every lam, ties included.

Floating-point ties: |x| <= TIE_TOL counts as x = 0 and components with
magnitude <= TIE_TOL count as zero in the orientation rule.  Without this,
f(A) computed as a matrix polynomial lands 1e-16 away from the exact tie
and the rule would not be reproducible.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .falsifier import Violation
from .operators import Observable, Polynomial

TIE_TOL = 1e-10

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)


@dataclass(frozen=True)
class BlochState:
    n: tuple[float, float, float]

    def __post_init__(self):
        n = np.asarray(self.n, dtype=float)
        if n.shape != (3,):
            raise ValueError("Bloch vector must have 3 components")
        if abs(np.linalg.norm(n) - 1.0) > 1e-12:
            raise ValueError(f"Bloch vector must be a unit vector, |n| = {np.linalg.norm(n)}")
        object.__setattr__(self, "n", tuple(float(x) for x in n))

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> BlochState:
        return cls((np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)))

    @classmethod
    def normalized(cls, v) -> BlochState:
        v = np.asarray(v, dtype=float)
        return cls(tuple(v / np.linalg.norm(v)))

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.n)

    def density(self) -> np.ndarray:
        """|psi><psi| = (I + n.sigma) / 2."""
        return (np.eye(2) + sum(c * s for c, s in zip(self.n, PAULIS))) / 2

    def ket(self) -> np.ndarray:
        w, v = np.linalg.eigh(self.density())
        return v[:, -1]


@dataclass(frozen=True)
class PauliDecomposition:
    a0: float
    a: tuple[float, float, float]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.a))

    def matrix(self) -> np.ndarray:
        return self.a0 * np.eye(2) + sum(c * s for c, s in zip(self.a, PAULIS))

    def eigenvalues(self) -> tuple[float, float]:
        return self.a0 - self.norm, self.a0 + self.norm


def _as_matrix(A) -> np.ndarray:
    if isinstance(A, PauliDecomposition):
        return A.matrix()
    if isinstance(A, Observable):
        return A.numeric
    return np.asarray(A, dtype=complex)


def decompose(A) -> PauliDecomposition:
    """a0 = Tr(A)/2, a_k = Tr(A sigma_k)/2 for Hermitian 2x2 A."""
    if isinstance(A, PauliDecomposition):
        return A
    m = _as_matrix(A)
    if m.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
    if np.linalg.norm(m - m.conj().T) > 1e-12 * (1 + np.linalg.norm(m)):
        raise ValueError("matrix is not Hermitian")
    a0 = float(np.trace(m).real / 2)
    a = tuple(float(np.trace(m @ s).real / 2) for s in PAULIS)
    return PauliDecomposition(a0, a)


def observable(a0: float, a) -> np.ndarray:
    return PauliDecomposition(float(a0), tuple(float(x) for x in a)).matrix()


def orientation(direction) -> int:
    """Sign of the first component of ``direction`` that is not (numerically) zero."""
    for x in direction:
        if x > TIE_TOL:
            return 1
        if x < -TIE_TOL:
            return -1
    raise ValueError("orientation of the zero vector is undefined")


def _sign0(x: float, c: int) -> int:
    if x > TIE_TOL:
        return 1
    if x < -TIE_TOL:
        return -1
    return c


def assign_value(state: BlochState, lam: float, A) -> float:
    """Value of A in the hidden state (psi, lam); always an eigenvalue of A."""
    if not -1.0 <= lam <= 1.0:
        raise ValueError(f"hidden variable {lam} outside [-1, 1]")
    d = decompose(A)
    r = d.norm
    if r == 0.0:
        return d.a0
    ahat = np.array(d.a) / r
    c = orientation(ahat)
    return d.a0 + r * _sign0(float(ahat @ state.vector) + c * lam, c)


def expectation_exact(state: BlochState, A, check_tol: float = 1e-12) -> float:
    """Average of :func:`assign_value` over lam ~ U[-1, 1], in closed form.

    For c = +1 the value is +|a| on lam > -x and for c = -1 on lam < x, an
    interval of length 1 + x either way, so P(+) = (1 + x) / 2.  The result is
    compared with Tr(rho A) and a mismatch raises.
    """
    d = decompose(A)
    r = d.norm
    if r == 0.0:
        value = d.a0
    else:
        x = float(np.array(d.a) @ state.vector) / r
        p_plus = min(1.0, max(0.0, (1.0 + x) / 2.0))
        value = d.a0 + r * (2.0 * p_plus - 1.0)
    quantum = float(np.trace(state.density() @ _as_matrix(A)).real)
    if abs(value - quantum) > check_tol * max(1.0, abs(d.a0) + r):
        raise RuntimeError(f"model expectation {value} differs from Tr(rho A) = {quantum}")
    return value


def _signs(state: BlochState, d: PauliDecomposition, lam: np.ndarray) -> np.ndarray:
    r = d.norm
    ahat = np.array(d.a) / r
    c = orientation(ahat)
    x = float(ahat @ state.vector) + c * lam
    return np.where(x > TIE_TOL, 1, np.where(x < -TIE_TOL, -1, c))


def expectation_mc(state: BlochState, A, N: int, seed: int, threads: int = 1) -> tuple[float, float]:
    """Monte Carlo estimate of the lam-average and its standard error.

    Draws are split over ``threads`` substreams spawned from ``SeedSequence(seed)``;
    chunk k gets N // threads draws plus one if k < N % threads.  The estimate
    is reproducible for a fixed (seed, threads) pair.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    threads = max(1, min(int(threads), N))
    d = decompose(A)
    r = d.norm
    if r == 0.0:
        return d.a0, 0.0
    children = np.random.SeedSequence(seed).spawn(threads)
    sizes = [N // threads + (1 if k < N % threads else 0) for k in range(threads)]

    def chunk(k):
        rng = np.random.default_rng(children[k])
        s = _signs(state, d, rng.uniform(-1.0, 1.0, sizes[k]))
        return int(s.sum()), int((s == 1).sum())

    if threads == 1:
        parts = [chunk(0)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(chunk, range(threads)))
    total = sum(p[0] for p in parts)
    plus = sum(p[1] for p in parts)
    mean_s = total / N
    # s is +-1, so its sample variance is determined by the fraction of +1s
    frac = plus / N
    var_s = 4.0 * frac * (1.0 - frac) * N / (N - 1) if N > 1 else 0.0
    return d.a0 + r * mean_s, r * float(np.sqrt(var_s / N))


def check_functional_consistency(state: BlochState, lam: float, A, f: Polynomial, tol: float = 1e-9) -> bool:
    """v(f(A)) == f(v(A)) within ``tol``."""
    m = _as_matrix(A)
    fa = f.at_matrices([m])
    fa = (fa + fa.conj().T) / 2
    lhs = assign_value(state, lam, fa)
    rhs = f(assign_value(state, lam, m))
    return abs(lhs - rhs) <= tol * max(1.0, abs(rhs))


def tie_point(state: BlochState, A) -> float:
    """The lam at which a_hat.n + c(a_hat) lam vanishes (A must be non-scalar)."""
    d = decompose(A)
    ahat = np.array(d.a) / d.norm
    return -float(ahat @ state.vector) / orientation(ahat)


def convex_extension_certificate(effect=None, states=None) -> Violation:
    """Why the qubit model does not extend to an expectation representation.

    The model's measure on the hidden variable is the same uniform measure for
    every pure state.  Any response function F(E) that depends on lam alone
    therefore integrates to one common number for all states, while the Born
    rule asks for Tr(rho E), which differs between states.  The gap reported
    is the spread of those Born values; no common number can match both.
    """
    if effect is None:
        effect = np.array([1.0, 0.0], dtype=complex)
    if states is None:
        states = [np.array([1.0, 0.0], dtype=complex), np.array([1.0, 1.0], dtype=complex) / np.sqrt(2)]
    e = np.asarray(effect, dtype=complex)
    e = e / np.linalg.norm(e)
    kets = [np.asarray(s, dtype=complex) / np.linalg.norm(s) for s in states]
    born = [float(abs(np.vdot(e, k)) ** 2) for k in kets]
    objects = {
        "effect": [{"re": float(z.real), "im": float(z.imag)} for z in e],
        "states": [[{"re": float(z.real), "im": float(z.imag)} for z in k] for k in kets],
        "mu": "uniform on [-1, 1], identical for every state",
    }
    gap = max(born) - min(born)
    return Violation(
        kind="eq1",
        objects=objects,
        lhs=born,
        rhs="one common value for all states",
        gap=gap,
        tol=1e-9,
        note="state-independent measure forces equal expectations",
    )


def recheck_convex_extension(v: Violation) -> float:
    """Recompute the gap of a :func:`convex_extension_certificate` from its fields."""
    e = np.array([complex(z["re"], z["im"]) for z in v.objects["effect"]])
    kets = [np.array([complex(z["re"], z["im"]) for z in s]) for s in v.objects["states"]]
    born = [float(abs(np.vdot(e, k)) ** 2) for k in kets]
    return max(born) - min(born)


class BellExtension:
    """The qubit model forced into the expectation-representation mould.

    mu is the same uniform measure on a midpoint grid of [-1, 1] for every
    state, and F(E)(lam) is the 0/1 value the model assigns to E at lam for a
    fixed reference state (+z).  F cannot depend on the state, which is
    exactly what breaks the expectation identity.
    """

    def __init__(self, grid: int = 64, reference=(0.0, 0.0, 1.0)):
        if grid < 1:
            raise ValueError("grid must be positive")
        self.grid = grid
        self.reference = BlochState(tuple(reference))
        self.points = {f"lam{k}": -1.0 + (2 * k + 1) / grid for k in range(grid)}

    @property
    def labels(self) -> list[str]:
        return list(self.points)

    def mu(self, rho) -> dict[str, float]:
        return {lab: 1.0 / self.grid for lab in self.points}

    def F(self, ray, label: str) -> float:
        u = ray.unit if hasattr(ray, "unit") else np.asarray(ray) / np.linalg.norm(ray)
        return assign_value(self.reference, self.points[label], np.outer(u, u.conj()))


def bell_candidate(states, effects, grid: int = 64):
    """Finite candidate built from the qubit model (state-independent mu)."""
    from .falsifier import CandidateRepresentation

    ext = BellExtension(grid)
    labels = ext.labels
    mu = np.full((len(states), grid), 1.0 / grid)
    F = np.array([[ext.F(e, lab) for lab in labels] for e in effects]).reshape(len(effects), grid)
    return CandidateRepresentation(
        2, labels, list(states), mu, list(effects), F, extension=ext, extension_spec={"kind": "bell", "grid": grid}
    )
