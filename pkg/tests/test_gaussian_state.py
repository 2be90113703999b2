import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gaussrep import gaussian_state as gs
from gaussrep import linalg_kernels as lk
from gaussrep import state_factory as sf
from conftest import cmat, cvec

seeds = st.integers(0, 2**32 - 1)


def random_params(rng, M, scale=0.3):
    m, mp = cmat(rng, M, scale), cmat(rng, M, scale)
    return gs.GaussianParams(1 + 0.2j, cvec(rng, M), cvec(rng, M), cmat(rng, M, scale),
                             m + m.T, mp + mp.T)


def test_vacuum_covariance_is_identity():
    g = sf.vacuum(3)
    assert np.array_equal(gs.assemble_covariance(g), np.eye(6))
    assert gs.trace(g) == 1


def test_param_count():
    for M in range(1, 5):
        assert sf.vacuum(M).param_count == M * (2 + 3 * M)


def test_asymmetric_m_rejected():
    with pytest.raises(ValueError, match="symmetric"):
        gs.GaussianParams(1, [0, 0], [0, 0], np.zeros((2, 2)), [[0, 1], [0, 0]], np.zeros((2, 2)))


def test_arrays_are_read_only():
    g = sf.vacuum(1)
    with pytest.raises(ValueError):
        g.n[0, 0] = 1.0


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        gs.GaussianParams(1, [0, 0, 0], [0, 0], np.zeros((2, 2)), None, None)


@given(seeds, st.integers(1, 3))
def test_covariance_roundtrip_and_dagger_symmetry(seed, M):
    g = random_params(np.random.default_rng(seed), M)
    s = gs.assemble_covariance(g)
    assert np.allclose(s, lk.generalized_dagger(s), atol=1e-14)
    back = gs.GaussianParams.from_extended(g.omega, g.alpha_ext, s)
    assert back.allclose(g, atol=1e-14)


def test_single_mode_determinant():
    g = gs.GaussianParams(1, [0], [0], [[0.3 + 0.1j]], [[0.2]], [[0.1j]])
    n, m, mp = 0.3 + 0.1j, 0.2, 0.1j
    assert abs(gs.covariance_det(g) - ((1 + n) ** 2 - m * mp)) < 1e-12


@given(seeds, st.integers(1, 3))
def test_sqrt_det_branch(seed, M):
    g = random_params(np.random.default_rng(seed), M, 0.2)
    root = gs.sqrt_det_sigma(g)
    assert abs(root**2 - gs.covariance_det(g)) < 1e-10 * max(1, abs(root) ** 2)


def test_trace_warns_outside_validity():
    g = sf.classical_basis("q", [0.0])  # sigma = 0
    with pytest.warns(gs.GaussianValidityWarning):
        gs.trace(g)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert gs.trace(sf.classical_basis("wigner", [0.3])) == 1


def test_moments_coherent_and_thermal():
    g = sf.coherent_projector([0.5 + 0.3j])
    mo = gs.moments(g)
    assert mo.a[0] == 0.5 + 0.3j and mo.adag[0] == 0.5 - 0.3j
    assert abs(mo.normal[0, 0] - 0.34) < 1e-15
    th = gs.moments(sf.thermal([[2.0]]))
    assert th.normal[0, 0] == 2 and th.aa[0, 0] == 0


def test_ensemble_weights():
    e = gs.WeightedEnsemble((sf.thermal([[1.0]], omega=0.25), sf.thermal([[3.0]], omega=0.75)))
    assert abs(gs.ensemble_moments(e).normal[0, 0] - 2.5) < 1e-15
    with pytest.raises(gs.ZeroTotalWeightError):
        gs.WeightedEnsemble((sf.vacuum(1), sf.vacuum(1).replace(omega=-1)))
    with pytest.raises(ValueError):
        gs.WeightedEnsemble(())


def test_physicality_classification():
    assert gs.check_physical(sf.squeezed_thermal(sf.SqueezeSpec([[0.4]]), [[0.3]])).physical
    rep = gs.check_physical(sf.classical_basis("wigner", [0.1]))
    assert rep.hermitian and not rep.physical
    assert "n_nonnegative" in rep.failures()
    rep = gs.check_physical(sf.coherent_projector([0.1], [0.5]))
    assert not rep.hermitian
    assert all(line.startswith(("PASS", "FAIL")) for line in rep.lines())


def test_bound_violation_detected():
    g = gs.GaussianParams(1, [0], [0], [[0.1]], [[0.5]], [[0.5]])
    assert "single_mode_bound" in gs.check_physical(g).failures()


def test_from_covariance_rejects_inconsistent_blocks():
    sigma = np.diag([1.2, 1.5]).astype(complex)
    with pytest.raises(ValueError, match="dagger"):
        gs.GaussianParams.from_covariance(1, [0], [0], sigma)
