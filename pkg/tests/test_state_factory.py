import numpy as np
import pytest
from hypothesis import given, strategies as st

from gaussrep import gaussian_state as gs
from gaussrep import state_factory as sf
from conftest import cmat

seeds = st.integers(0, 2**32 - 1)


def sym(rng, M, scale):
    x = cmat(rng, M, scale)
    return x + x.T


def test_squeezed_vacuum_single_mode():
    r, th = 0.5, 0.7
    g = sf.squeezed_vacuum([[r * np.exp(1j * th)]])
    assert abs(g.n[0, 0] - np.sinh(r) ** 2) < 1e-14
    assert abs(g.m[0, 0] + np.exp(1j * th) * np.sinh(r) * np.cosh(r)) < 1e-14


@given(seeds, st.integers(1, 3))
def test_squeezed_vacuum_saturates_bound(seed, M):
    rng = np.random.default_rng(seed)
    if M == 1:
        g = sf.squeezed_vacuum(sym(rng, 1, 0.4))
        assert abs(g.n[0, 0] - (np.sqrt(abs(g.m[0, 0]) ** 2 + 0.25) - 0.5)) < 1e-10
    g = sf.squeezed_vacuum(sym(rng, M, 0.3))
    assert gs.check_physical(g, tol=1e-9).physical


@given(seeds, st.integers(1, 3))
def test_det_sigma_is_det_mu_squared(seed, M):
    rng = np.random.default_rng(seed)
    spec = sf.SqueezeSpec(sym(rng, M, 0.3))
    mu, _, _ = spec.matrices()
    g = sf.squeezed_vacuum(spec)
    assert abs(gs.covariance_det(g) - np.linalg.det(mu) ** 2) < 1e-10


@given(seeds, st.integers(1, 3))
def test_squeezed_thermal_two_routes(seed, M):
    rng = np.random.default_rng(seed)
    spec = sf.SqueezeSpec(sym(rng, M, 0.3))
    h = cmat(rng, M, 0.3)
    nbar = h @ h.conj().T
    g = sf.squeezed_thermal(spec, nbar)
    assert np.abs(gs.assemble_covariance(g) - sf.squeezed_thermal_compact(spec, nbar)).max() < 1e-12
    assert gs.check_physical(g, tol=1e-9).physical


@given(seeds, st.integers(1, 3))
def test_squeezed_thermal_zero_temperature_limit(seed, M):
    spec = sf.SqueezeSpec(sym(np.random.default_rng(seed), M, 0.3))
    a = sf.squeezed_thermal(spec, np.zeros((M, M)))
    b = sf.squeezed_vacuum(spec)
    assert a.allclose(b, atol=1e-12)


def test_bose_einstein():
    assert abs(sf.bose_einstein(np.log(2)) - 1) < 1e-15
    th = sf.ThermalSpec.from_phi([1.0, 2.0])
    assert np.allclose(th.nbar.diagonal(), 1 / np.expm1([1.0, 2.0]))


def test_classical_basis_table():
    for kind, n in (("wigner", -0.5), ("q", -1.0), ("p", 0.0), ("plus_p", 0.0)):
        assert sf.classical_basis(kind, [0.2]).n[0, 0] == n
    assert sf.classical_basis("s_ordered", [0.0], s=0.0).n[0, 0] == -0.5
    with pytest.raises(ValueError):
        sf.classical_basis("s_ordered", [0.0])
    with pytest.raises(ValueError):
        sf.classical_basis("glauber", [0.0])


def test_coherent_projector_nonconjugate():
    g = sf.coherent_projector([0.7], [0.2])
    assert g.alpha_plus[0] == 0.2 and not gs.check_physical(g).hermitian


@pytest.mark.parametrize("n0", [0, 1, 2, 5])
def test_number_ensemble_exact_against_aliases(n0):
    K, r = 16, 1.0
    e = sf.number_state_ensemble(n0, r, K)
    w = sf.number_ensemble_alias_weights(n0, r, K, 400)
    assert abs(e.total_weight - w.sum()) < 1e-12
    n = np.arange(w.size)
    expected_n = (w * n).sum() / w.sum()
    assert abs(gs.ensemble_moments(e).normal[0, 0] - expected_n) < 1e-12


def test_number_ensemble_validation():
    with pytest.raises(ValueError):
        sf.number_state_ensemble(1.5)
    with pytest.raises(ValueError):
        sf.number_state_ensemble(1, r=0)
