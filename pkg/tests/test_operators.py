import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nogo.operators import (
    DensityMatrix,
    NonCommutingError,
    Observable,
    Polynomial,
    Ray,
    check_vanishing,
    commutes,
    embed,
    joint_spectrum,
    random_density,
    random_ray,
    simultaneous_blocks,
    spectrum,
)
from nogo.scalars import Exact

from .conftest import random_hermitian, random_poly

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0, -1.0]).astype(complex)


def test_commutes_examples():
    assert commutes(Observable(SX), Observable(SX))
    assert not commutes(Observable(SX), Observable(SZ))
    assert commutes(Observable(np.diag([1.0, 2, 3])), Observable(np.diag([4.0, 5, 6])))


def test_commutes_rejects_bad_input():
    with pytest.raises(ValueError):
        commutes(Observable(SX), Observable(np.eye(3)))
    with pytest.raises(ValueError):
        Observable(np.array([[0, 1], [0, 0]]))


def test_exact_commutation_is_exact():
    a = Ray([Exact(1), Exact(1), Exact(0)]).projection()
    b = Ray([Exact(1), Exact(-1), Exact(0)]).projection()
    c = Ray([Exact(1), Exact(0), Exact(0)]).projection()
    assert a.exact and commutes(a, b)
    assert not commutes(a, c)


def test_spectrum_examples():
    v = Ray([1, 2, 2])
    assert np.allclose(spectrum(v.projection()), [0, 0, 1])
    assert np.allclose(spectrum(Observable(np.eye(3))), [1, 1, 1])
    assert np.allclose(spectrum(Observable(np.diag([3.0, 1.0]))), [1, 3])


def test_joint_spectrum_examples():
    js = joint_spectrum([Observable(np.diag([1.0, 1, 0])), Observable(np.diag([1.0, 0, 0]))])
    assert js.rounded() == {(1, 1), (1, 0), (0, 0)}
    P = Ray([0.6, 0.8j]).projection()
    Q = Observable(np.eye(2) - P.numeric)
    assert joint_spectrum([P, Q]).rounded() == {(1, 0), (0, 1)}
    assert joint_spectrum([Observable(SZ)]).rounded() == {(1,), (-1,)}


def test_joint_spectrum_rejects_noncommuting():
    with pytest.raises(NonCommutingError) as exc:
        joint_spectrum([Observable(SZ), Observable(SZ), Observable(SX)])
    assert exc.value.pair == (0, 2)


def test_check_vanishing_examples():
    P = Ray([1, 1j, 0]).projection()
    assert check_vanishing(Polynomial({(2,): 1, (1,): -1}), [P]) == (True, True)
    Q = Observable(np.eye(3) - P.numeric)
    assert check_vanishing(Polynomial({(1, 1): 1}), [P, Q]) == (True, True)
    assert check_vanishing(Polynomial({(1,): 1, (0,): -1}), [Observable(SZ)]) == (False, False)


def test_embed_examples(rng):
    r = embed(Ray([1, 0]), 3)
    assert np.allclose(r.numeric, [1, 0, 0])
    assert np.allclose(embed(Observable(np.eye(2)), 3).numeric, np.diag([1, 1, 0]))
    for _ in range(20):
        rho, e = random_density(2, rng), random_ray(2, rng)
        assert abs(rho.expectation(e) - embed(rho, 3).expectation(embed(e, 3))) <= 1e-12
    with pytest.raises(ValueError):
        embed(Ray([1, 0, 0]), 2)


def test_embed_keeps_exactness():
    r = embed(Ray([Exact(1), Exact(1)]), 4)
    assert r.exact and r.dim == 4


def test_embed_preserves_commutation(rng):
    A = Observable(random_hermitian(3, rng))
    B = Observable(A.numeric @ A.numeric)
    C = Observable(random_hermitian(3, rng))
    assert commutes(embed(A, 5), embed(B, 5))
    assert not commutes(embed(A, 5), embed(C, 5))


def test_density_validation():
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([0.7, 0.7]))
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([1.5, -0.5]))
    assert DensityMatrix.maximally_mixed(3).dim == 3


def test_ray_equivalence():
    assert Ray([1, 1j]).equivalent(Ray([1j, -1]))
    assert not Ray([1, 0]).equivalent(Ray([1, 1e-3]))
    assert Ray([Exact(1), Exact(2)]).equivalent(Ray([Exact(-2), Exact(-4)]))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_eigendecomposition_reconstructs(dim, seed):
    rng = np.random.default_rng(seed)
    A = Observable(random_hermitian(dim, rng))
    w, U = np.linalg.eigh(A.numeric)
    assert np.linalg.norm(U.conj().T @ U - np.eye(dim)) <= 1e-9
    assert np.linalg.norm(A.numeric - (U * np.array(spectrum(A))) @ U.conj().T) <= 1e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_single_operator_joint_spectrum_is_spectrum(dim, seed):
    rng = np.random.default_rng(seed)
    # integer eigenvalues with repeats, in a random basis
    vals = rng.integers(-2, 3, dim).astype(float)
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    A = Observable(q @ np.diag(vals) @ q.conj().T)
    js = joint_spectrum([A])
    assert {round(p[0], 9) for p in js.points} == {float(v) for v in vals}
    assert sum(js.multiplicities) == dim


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_vanishing_flags_agree(dim, seed):
    rng = np.random.default_rng(seed)
    H = random_hermitian(dim, rng)
    p = random_poly(rng)
    A = Observable(H)
    B = Observable(p.at_matrices([H]))
    relation = Polynomial({(0, 1): 1.0, **{(k[0], 0): -c for k, c in p.terms.items()}}, 2)
    assert check_vanishing(relation, [A, B]) == (True, True)
    g = random_poly(rng, nvars=2)
    lhs, rhs = check_vanishing(g, [A, B])
    assert lhs == rhs


def test_blocks_handle_degeneracy(rng):
    H = random_hermitian(5, rng)
    w, U = np.linalg.eigh(H)
    # projector onto the two lowest eigenvectors is degenerate; refine with H
    P = Observable(U[:, :2] @ U[:, :2].conj().T)
    blocks = simultaneous_blocks([P, Observable(H)])
    assert len(blocks) == 5
    assert all(b.shape[1] == 1 for _, b in blocks)
    js = joint_spectrum([P, Observable(H)])
    assert js.reconstruction_error <= 1e-9
    assert sorted(round(p[0]) for p in js.points) == [0, 0, 0, 1, 1]


def test_float_and_exact_orthogonality_agree(peres33):
    rays = peres33.rays
    for i in range(len(rays)):
        for j in range(i + 1, len(rays)):
            assert rays[i].is_orthogonal(rays[j]) == rays[i].to_float().is_orthogonal(rays[j].to_float())


def test_projection_is_rank_one(peres33):
    for r in peres33.rays[:10]:
        P = r.projection()
        m = P.numeric
        assert np.allclose(m @ m, m) and np.allclose(m, m.conj().T)
        assert abs(np.trace(m) - 1) < 1e-12
        assert r.exact and P.exact
