import numpy as np
import pytest

from nogo.bootstrap import LiftError, lift_rayset, restrict_expectation_rep, tensor_modulo_identity
from nogo.falsifier import check_eq1, eq1_residuals, trivial_pure_theory
from nogo.operators import DensityMatrix, Ray, commutes, embed, random_density, random_ray
from nogo.valuation import RaySet, find_valuation

from .conftest import random_candidate


def test_restrict_trivial_theory_keeps_eq1():
    rays = [Ray([1, 0, 0]), Ray([0, 1, 0]), Ray([1, 1, 0]), Ray([1, -1j, 0]), Ray([0, 0, 1])]
    parent = trivial_pure_theory(3, rays)
    child = restrict_expectation_rep(parent, 2)
    assert child.dim == 2 and len(child.states) == 4 and len(child.effects) == 4
    # both sides are <psi|E|psi>, computed along different float paths
    assert np.max(np.abs(eq1_residuals(child))) <= 1e-15
    assert np.array_equal(eq1_residuals(child), eq1_residuals(parent)[:4, :4])
    assert check_eq1(child) == []


def test_restrict_copies_rows_bitwise(rng):
    small_states = [random_density(2, rng) for _ in range(3)]
    small_effects = [random_ray(2, rng) for _ in range(3)]
    parent = random_candidate(
        3,
        [embed(s, 3) for s in small_states] + [random_density(3, rng)],
        [embed(e, 3) for e in small_effects] + [random_ray(3, rng)],
        rng,
    )
    child = restrict_expectation_rep(parent, 2, small_states, small_effects)
    assert np.array_equal(child.mu, parent.mu[:3])
    assert np.array_equal(child.F, parent.F[:3])


def test_restrict_preserves_residuals(rng):
    small_states = [random_density(2, rng) for _ in range(20)]
    small_effects = [random_ray(2, rng) for _ in range(20)]
    parent = random_candidate(3, [embed(s, 3) for s in small_states], [embed(e, 3) for e in small_effects], rng)
    child = restrict_expectation_rep(parent, 2, small_states, small_effects)
    diff = np.abs(eq1_residuals(child) - eq1_residuals(parent))
    assert diff.max() <= 1e-12


def test_restrict_missing_object(rng):
    parent = trivial_pure_theory(3, [Ray([1, 0, 0])])
    with pytest.raises(KeyError):
        restrict_expectation_rep(parent, 2, states=[DensityMatrix.pure(Ray([0, 1]))])
    with pytest.raises(KeyError):
        restrict_expectation_rep(parent, 2, effects=[Ray([0, 1])])
    with pytest.raises(ValueError):
        restrict_expectation_rep(parent, 4)


def test_restricted_extension_answers_probes():
    parent = trivial_pure_theory(3, [Ray([1, 0, 0]), Ray([0, 1, 0])])
    child = restrict_expectation_rep(parent, 2)
    rho = DensityMatrix.pure(Ray([1, 1]))
    mu = child.extension.mu(rho)
    assert sum(mu.values()) == pytest.approx(1.0)
    (label,) = mu
    assert child.extension.F(Ray([1, 0]), label) == pytest.approx(0.5)


def test_lift_to_dim4(peres33):
    out = lift_rayset(peres33, 4)
    assert out.dim == 4 and out.meta["verified"] is True
    assert out.meta["certificate"]["outcome"] == "exhausted"
    assert find_valuation(out).exhausted
    padded = [embed(r, 4) for r in peres33.rays]
    for p in padded:
        assert any(p.equivalent(q) for q in out.rays)
    # restricted to the first three coordinates, the lift contains rs
    heads = [Ray(r.numeric[:3]) for r in out.rays if np.allclose(r.numeric[3:], 0)]
    for r in peres33.rays:
        assert any(r.to_float().equivalent(h) for h in heads)


def test_lift_rejects_colorable_input():
    rs = RaySet(3, [Ray([1, 0, 0]), Ray([0, 1, 0]), Ray([0, 0, 1])])
    with pytest.raises(ValueError):
        lift_rayset(rs, 4)
    with pytest.raises(ValueError):
        tensor_modulo_identity(rs, 2)


def test_lift_rejects_lower_dimension(peres33):
    with pytest.raises(ValueError):
        lift_rayset(peres33, 3)


def test_lift_budget_failure(peres33):
    with pytest.raises(LiftError):
        lift_rayset(peres33, 4, budget=5, check_input=False)


def test_tensor_k1_is_unchanged(peres33):
    t = tensor_modulo_identity(peres33, 1, verify=False)
    for o, p in zip(t.observables, peres33.projections()):
        assert np.array_equal(o.numeric, p.numeric)


def test_tensor_outputs_are_projections_of_rank_k(peres33):
    t = tensor_modulo_identity(peres33, 2, verify=False)
    assert len(t.observables) == 33 and not t.verified
    for o in t.observables:
        m = o.numeric
        assert o.dim == 6
        assert np.allclose(m @ m, m)
        assert np.trace(m).real == pytest.approx(2.0)


def test_tensor_commutation_matches_orthogonality(peres33):
    t = tensor_modulo_identity(peres33, 2, verify=False)
    rays = peres33.rays
    for i in range(0, 33, 3):
        for j in range(33):
            expected = i == j or rays[i].is_orthogonal(rays[j])
            assert commutes(t.observables[i], t.observables[j]) == expected
