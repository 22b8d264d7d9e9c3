"""Small-dimensional Hilbert space objects: observables, rays, density matrices.

Matrices are numpy arrays.  A complex128 array is the float backend; an
object array of :class:`~nogo.scalars.Exact` entries is the exact backend.
Anything spectral (eigenvalues, joint spectra) is computed in floating point;
exact arrays are only used where a decision must be made without tolerance
(commutation, orthogonality, equivalence of rays).

Joint spectra are implemented for simultaneously diagonalizable families
only, i.e. finite dimension.  The approximate-eigenvector definition that
covers general commuting families in infinite dimension is not attempted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Sequence

import numpy as np

from .scalars import Exact, Surd, is_exact

DEFAULT_TOL = 1e-9


class NonCommutingError(ValueError):
    def __init__(self, i: int, j: int):
        super().__init__(f"operators {i} and {j} do not commute")
        self.pair = (i, j)


# -- array helpers ----------------------------------------------------------


def as_array(entries) -> np.ndarray:
    """Coerce nested lists to complex128, or to an Exact object array when any
    entry is exact."""
    if isinstance(entries, np.ndarray) and entries.dtype != object:
        return entries.astype(complex)
    arr = np.array(entries, dtype=object)
    flat = arr.ravel()
    if any(is_exact(x) for x in flat):
        out = np.empty(arr.shape, dtype=object)
        for idx, x in np.ndenumerate(arr):
            out[idx] = Exact.coerce(x) if not isinstance(x, (float, complex)) else _reject_float(x)
        return out
    return arr.astype(complex)


def _reject_float(x):
    raise TypeError(f"float {x!r} mixed into an exact array")


def is_exact_array(m: np.ndarray) -> bool:
    return m.dtype == object


def numeric(m: np.ndarray) -> np.ndarray:
    if is_exact_array(m):
        return np.vectorize(complex, otypes=[complex])(m)
    return np.asarray(m, dtype=complex)


def dagger(m: np.ndarray) -> np.ndarray:
    if is_exact_array(m):
        out = np.empty((m.shape[1], m.shape[0]), dtype=object)
        for (i, j), x in np.ndenumerate(m):
            out[j, i] = x.conjugate()
        return out
    return m.conj().T


def exact_zero(m: np.ndarray) -> bool:
    return all(x.is_zero() for x in m.ravel())


def exact_identity(n: int) -> np.ndarray:
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            out[i, j] = Exact(1 if i == j else 0)
    return out


def exact_zeros(shape) -> np.ndarray:
    out = np.empty(shape, dtype=object)
    for idx in np.ndindex(*shape):
        out[idx] = Exact(0)
    return out


def _matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if is_exact_array(a) != is_exact_array(b):
        a, b = numeric(a), numeric(b)
    return a @ b


# -- domain types -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian d x d matrix."""

    matrix: np.ndarray
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        m = as_array(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ValueError(f"observable must be a non-empty square matrix, got shape {m.shape}")
        object.__setattr__(self, "matrix", m)
        if is_exact_array(m):
            if not exact_zero(m - dagger(m)):
                raise ValueError("matrix is not Hermitian")
        else:
            scale = 1.0 + np.linalg.norm(m)
            if np.linalg.norm(m - m.conj().T) > self.tol * scale:
                raise ValueError("matrix is not Hermitian")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def exact(self) -> bool:
        return is_exact_array(self.matrix)

    @cached_property
    def numeric(self) -> np.ndarray:
        m = numeric(self.matrix)
        return (m + m.conj().T) / 2

    @cached_property
    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linalg.eigh(self.numeric)

    def __matmul__(self, other: Observable) -> np.ndarray:
        return _matmul(self.matrix, other.matrix)

    def __repr__(self):
        kind = "exact" if self.exact else "float"
        return f"Observable(dim={self.dim}, {kind})"


@dataclass(frozen=True, eq=False)
class Ray:
    """Nonzero vector taken up to a scalar factor."""

    coords: np.ndarray

    def __post_init__(self):
        v = as_array(self.coords)
        if v.ndim != 1 or v.shape[0] == 0:
            raise ValueError("ray coordinates must be a non-empty 1-d sequence")
        if is_exact_array(v):
            if all(x.is_zero() for x in v):
                raise ValueError("ray coordinates are all zero")
        elif not np.any(v != 0):
            raise ValueError("ray coordinates are all zero")
        object.__setattr__(self, "coords", v)

    @property
    def dim(self) -> int:
        return self.coords.shape[0]

    @property
    def exact(self) -> bool:
        return is_exact_array(self.coords)

    @cached_property
    def numeric(self) -> np.ndarray:
        return numeric(self.coords)

    @cached_property
    def unit(self) -> np.ndarray:
        v = self.numeric
        return v / np.linalg.norm(v)

    def inner(self, other: Ray):
        """<self|other>; exact when both rays are exact."""
        if self.exact and other.exact:
            total = Exact(0)
            for x, y in zip(self.coords, other.coords):
                total = total + x.conjugate() * y
            return total
        return complex(np.vdot(self.numeric, other.numeric))

    def is_orthogonal(self, other: Ray, tol: float = DEFAULT_TOL) -> bool:
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        ip = self.inner(other)
        if isinstance(ip, Exact):
            return ip.is_zero()
        return abs(ip) <= tol * np.linalg.norm(self.numeric) * np.linalg.norm(other.numeric)

    def equivalent(self, other: Ray, tol: float = DEFAULT_TOL) -> bool:
        """True iff the rays are proportional."""
        if self.dim != other.dim:
            return False
        if self.exact and other.exact:
            u, v = self.coords, other.coords
            return all(
                (u[i] * v[j] - u[j] * v[i]).is_zero() for i, j in combinations(range(self.dim), 2)
            )
        u, v = self.unit, other.unit
        ip = np.vdot(v, u)
        phase = ip / abs(ip) if abs(ip) > 0 else 1.0
        return float(np.linalg.norm(u - phase * v)) <= tol

    def projection(self) -> Observable:
        """Rank-1 projection v v* / <v, v>."""
        if self.exact:
            norm2 = self.inner(self)
            d = self.dim
            m = np.empty((d, d), dtype=object)
            for i in range(d):
                for j in range(d):
                    m[i, j] = self.coords[i] * self.coords[j].conjugate() / norm2
            return Observable(m)
        u = self.unit
        return Observable(np.outer(u, u.conj()))

    def to_float(self) -> Ray:
        return Ray(self.numeric)

    def __repr__(self):
        return f"Ray({[str(x) if self.exact else x for x in self.coords]})"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Positive semidefinite, unit-trace Hermitian matrix (float backend)."""

    matrix: np.ndarray
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        m = numeric(as_array(self.matrix))
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if np.linalg.norm(m - m.conj().T) > self.tol * (1 + np.linalg.norm(m)):
            raise ValueError("density matrix is not Hermitian")
        m = (m + m.conj().T) / 2
        if abs(np.trace(m).real - 1.0) > self.tol:
            raise ValueError(f"density matrix trace {np.trace(m).real} != 1")
        if np.linalg.eigvalsh(m)[0] < -self.tol:
            raise ValueError("density matrix is not positive semidefinite")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def pure(cls, ray: Ray) -> DensityMatrix:
        u = ray.unit
        return cls(np.outer(u, u.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> DensityMatrix:
        return cls(np.eye(dim, dtype=complex) / dim)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def expectation(self, effect) -> float:
        """Tr(rho E) for a Ray (its projection) or an Observable."""
        if isinstance(effect, Ray):
            u = effect.unit
            return float(np.real(np.vdot(u, self.matrix @ u)))
        return float(np.real(np.trace(self.matrix @ effect.numeric)))

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim})"


@dataclass(frozen=True)
class JointSpectrumSet:
    """Finite set of simultaneous eigenvalue tuples of a commuting family."""

    n: int
    points: tuple[tuple[float, ...], ...]
    tol: float = DEFAULT_TOL
    multiplicities: tuple[int, ...] = ()
    reconstruction_error: float = 0.0

    def contains(self, point: Sequence[float], tol: float | None = None) -> bool:
        tol = self.tol if tol is None else tol
        p = np.asarray(point, dtype=float)
        return any(np.max(np.abs(p - np.asarray(q))) <= tol * max(1.0, np.max(np.abs(q), initial=0)) for q in self.points)

    def rounded(self, digits: int = 9) -> set[tuple[float, ...]]:
        return {tuple(round(x, digits) + 0.0 for x in p) for p in self.points}

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


# -- operations -------------------------------------------------------------


def commutes(a: Observable, b: Observable, tol: float = DEFAULT_TOL) -> bool:
    """Decide AB == BA; exactly for exact inputs, else relative to the norms."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    x, y = a.numeric, b.numeric
    c = np.linalg.norm(x @ y - y @ x)
    if a.exact and b.exact:
        # float roundoff is ~1e-15 here, so a large float commutator is decisive
        if c > 1e-6 * (1.0 + np.linalg.norm(x) * np.linalg.norm(y)):
            return False
        return exact_zero(a.matrix @ b.matrix - b.matrix @ a.matrix)
    return c <= tol * (1.0 + np.linalg.norm(x) * np.linalg.norm(y))


def spectrum(a: Observable, tol: float = DEFAULT_TOL) -> list[float]:
    """Eigenvalues with multiplicity, nondecreasing."""
    w, u = a.eigh
    err = np.linalg.norm(a.numeric - (u * w) @ u.conj().T)
    if err > tol * max(1.0, np.linalg.norm(a.numeric)):
        raise np.linalg.LinAlgError(f"eigendecomposition reconstruction error {err:.3g}")
    return [float(x) for x in w]


def distinct_eigenvalues(a: Observable, tol: float = DEFAULT_TOL) -> list[float]:
    w = spectrum(a, tol)
    return [float(np.mean(g)) for g in _group(np.asarray(w), tol * max(1.0, np.max(np.abs(w))))]


def _group(values: np.ndarray, tol: float) -> list[np.ndarray]:
    """Split sorted values into runs whose consecutive gaps are <= tol."""
    groups, start = [], 0
    for k in range(1, len(values) + 1):
        if k == len(values) or values[k] - values[k - 1] > tol:
            groups.append(values[start:k])
            start = k
    return groups


def check_commuting(ops: Sequence[Observable], tol: float = DEFAULT_TOL) -> None:
    for i, j in combinations(range(len(ops)), 2):
        if not commutes(ops[i], ops[j], tol):
            raise NonCommutingError(i, j)


def simultaneous_blocks(ops: Sequence[Observable], tol: float = DEFAULT_TOL):
    """Common eigenspaces of a commuting family by eigenspace refinement.

    Diagonalize the first operator, compress the rest onto each eigenspace,
    recurse.  Returns a list of (point, basis) where basis is a d x k matrix
    with orthonormal columns spanning the joint eigenspace for ``point``.
    """
    if not ops:
        raise ValueError("need at least one operator")
    dim = ops[0].dim
    if any(op.dim != dim for op in ops):
        raise ValueError("dimension mismatch")
    check_commuting(ops, tol)
    mats = [op.numeric for op in ops]
    scales = [max(1.0, np.linalg.norm(m, 2)) for m in mats]
    out = []

    def refine(basis: np.ndarray, i: int, prefix: tuple):
        if i == len(mats):
            out.append((prefix, basis))
            return
        sub = basis.conj().T @ mats[i] @ basis
        sub = (sub + sub.conj().T) / 2
        w, v = np.linalg.eigh(sub)
        start = 0
        for group in _group(w, tol * scales[i]):
            k = len(group)
            refine(basis @ v[:, start:start + k], i + 1, prefix + (float(np.mean(group)),))
            start += k

    refine(np.eye(dim, dtype=complex), 0, ())
    return out


def joint_spectrum(ops: Sequence[Observable], tol: float = DEFAULT_TOL) -> JointSpectrumSet:
    """Joint spectrum of a pairwise commuting family (finite dimension only)."""
    blocks = simultaneous_blocks(ops, tol)
    mats = [op.numeric for op in ops]
    err = 0.0
    for i, m in enumerate(mats):
        recon = sum(p[i] * (b @ b.conj().T) for p, b in blocks)
        err = max(err, float(np.linalg.norm(m - recon)))

    points: list[tuple[float, ...]] = []
    mult: list[int] = []
    for p, b in blocks:
        for k, q in enumerate(points):
            if max(abs(x - y) for x, y in zip(p, q)) <= tol * max(1.0, max(map(abs, q))):
                mult[k] += b.shape[1]
                break
        else:
            points.append(p)
            mult.append(b.shape[1])
    order = sorted(range(len(points)), key=lambda k: points[k])
    return JointSpectrumSet(
        n=len(ops),
        points=tuple(points[k] for k in order),
        tol=tol,
        multiplicities=tuple(mult[k] for k in order),
        reconstruction_error=err,
    )


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial: mapping from exponent tuples to coefficients.

    >>> f = Polynomial({(2,): 1.0, (1,): -1.0})   # x^2 - x
    >>> f(3.0)
    6.0
    """

    terms: dict = field(default_factory=dict)
    nvars: int = 1

    def __post_init__(self):
        terms = {tuple(int(e) for e in k): float(c) for k, c in dict(self.terms).items() if c != 0}
        nv = max([self.nvars] + [len(k) for k in terms])
        terms = {k + (0,) * (nv - len(k)): c for k, c in terms.items()}
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "nvars", nv)

    @classmethod
    def univariate(cls, coeffs: Sequence[float]) -> Polynomial:
        """From coefficients c0, c1, ... of 1, x, x^2, ..."""
        return cls({(k,): c for k, c in enumerate(coeffs)}, 1)

    @property
    def degree(self) -> int:
        return max((sum(k) for k in self.terms), default=0)

    def __call__(self, *xs: float) -> float:
        if len(xs) != self.nvars:
            raise ValueError(f"expected {self.nvars} arguments, got {len(xs)}")
        return float(sum(c * np.prod([x**e for x, e in zip(xs, k)]) for k, c in self.terms.items()))

    def at_matrices(self, mats: Sequence[np.ndarray]) -> np.ndarray:
        """f(A_1, ..., A_n) for commuting matrices (order of factors irrelevant)."""
        if len(mats) != self.nvars:
            raise ValueError(f"expected {self.nvars} matrices, got {len(mats)}")
        dim = mats[0].shape[0]
        out = np.zeros((dim, dim), dtype=complex)
        for k, c in self.terms.items():
            term = np.eye(dim, dtype=complex)
            for m, e in zip(mats, k):
                if e:
                    term = term @ np.linalg.matrix_power(m, e)
            out += c * term
        return out


def check_vanishing(f: Polynomial, ops: Sequence[Observable], tol: float = DEFAULT_TOL) -> tuple[bool, bool]:
    """Evaluate "f(A) = 0" and "f = 0 on the joint spectrum" independently.

    For a commuting family these two must agree; both flags are returned so
    callers can compare them.
    """
    js = joint_spectrum(ops, tol)
    lhs = np.linalg.norm(f.at_matrices([op.numeric for op in ops])) <= tol
    rhs = all(abs(f(*p)) <= tol for p in js.points)
    return bool(lhs), bool(rhs)


def embed(obj, dim: int):
    """Include an object of C^d into C^dim by zero padding (rho -> rho + 0)."""
    src = obj.coords if isinstance(obj, Ray) else obj.matrix
    d = src.shape[0]
    if dim < d:
        raise ValueError(f"cannot embed dimension {d} into {dim}")
    exact = is_exact_array(src)
    if isinstance(obj, Ray):
        v = exact_zeros((dim,)) if exact else np.zeros(dim, dtype=complex)
        v[:d] = src
        return Ray(v)
    m = exact_zeros((dim, dim)) if exact else np.zeros((dim, dim), dtype=complex)
    m[:d, :d] = src
    if isinstance(obj, DensityMatrix):
        return DensityMatrix(m, obj.tol)
    if isinstance(obj, Observable):
        return Observable(m, obj.tol)
    raise TypeError(f"cannot embed {type(obj).__name__}")


def kron_identity(op: Observable, k: int) -> Observable:
    """P (x) I_k."""
    if op.exact:
        return Observable(np.kron(op.matrix, exact_identity(k)))
    return Observable(np.kron(op.numeric, np.eye(k)))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_ray(dim: int, rng: np.random.Generator) -> Ray:
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return Ray(z / np.linalg.norm(z))


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real)

