import numpy as np
import pytest

from nogo.cli import data_path
from nogo.operators import Polynomial, Ray
from nogo.valuation import RaySet

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


@pytest.fixture(scope="session")
def peres33() -> RaySet:
    return RaySet.load(data_path("peres33.json"))


@pytest.fixture(scope="session")
def peres_mermin_path():
    return data_path("peres_mermin.json")


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def random_hermitian(dim: int, rng) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (g + g.conj().T) / 2


def random_poly(rng, degree: int = 3, nvars: int = 1) -> Polynomial:
    terms = {}
    for _ in range(degree + 2):
        e = tuple(int(x) for x in rng.integers(0, degree + 1, nvars))
        if sum(e) <= degree:
            terms[e] = float(rng.standard_normal())
    return Polynomial(terms or {(0,) * nvars: 1.0}, nvars)


def random_dim2_rayset(rng, size: int) -> RaySet:
    """Random qubit rays; roughly half come in orthogonal pairs."""
    rays = []
    while len(rays) < size:
        z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        z /= np.linalg.norm(z)
        rays.append(Ray(z))
        if len(rays) < size and rng.random() < 0.5:
            rays.append(Ray(np.array([-np.conj(z[1]), np.conj(z[0])])))
    return RaySet(2, rays)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


def random_candidate(dim: int, states, effects, rng, n_lambda: int = 4):
    """Candidate with arbitrary (generally wrong) mu and F tables."""
    from nogo.falsifier import CandidateRepresentation

    mu = rng.dirichlet(np.ones(n_lambda), size=len(states))
    F = rng.random((len(effects), n_lambda))
    labels = [f"l{k}" for k in range(n_lambda)]
    return CandidateRepresentation(dim, labels, list(states), mu, list(effects), F)
