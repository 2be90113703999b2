import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaussrep import fock_oracle as fo
from gaussrep import gaussian_state as gs
from gaussrep import quadratic_master_equation as qme
from gaussrep import state_factory as sf
from conftest import cmat, cvec

seeds = st.integers(0, 2**32 - 1)


def test_ladder_matrix_elements():
    sp = fo.FockSpace(1, 6)
    a = sp.a[0].toarray()
    assert np.allclose(np.diag(a, 1), np.sqrt(np.arange(1, 7)))
    comm = a @ a.conj().T - a.conj().T @ a
    assert np.allclose(comm[:6, :6], np.eye(6))


def test_two_mode_operators_commute():
    sp = fo.FockSpace(2, 4)
    a0, a1 = sp.a
    assert abs(a0 @ a1 - a1 @ a0).max() == 0
    assert sp.index((1, 2)) == 7 and tuple(sp.occupations[7]) == (1, 2)


def test_vacuum_state():
    rho = fo.build_state("vacuum", fo.FockSpace(1, 5)).rho
    assert rho[0, 0] == 1 and np.count_nonzero(rho) == 1


def test_thermal_state_diagonal():
    rho = fo.build_state("thermal", fo.FockSpace(1, 60), nbar=[2.0]).rho
    k = np.arange(61)
    assert np.allclose(np.diag(rho), (1 / 3) * (2 / 3) ** k, atol=1e-15, rtol=0)


def test_squeezed_state_occupation():
    mo = fo.moments_fock(fo.build_state("squeezed", fo.FockSpace(1, 60), xi=[[0.5]]))
    assert abs(mo.normal[0, 0] - np.sinh(0.5) ** 2) < 1e-8


def test_truncation_error_reports_tail():
    with pytest.raises(fo.TruncationError) as exc:
        fo.build_state("coherent", fo.FockSpace(1, 5), alpha=[2.0])
    assert exc.value.measured > 1e-3


def test_moments_fock_examples():
    assert np.allclose(fo.moments_fock(fo.build_state("vacuum", fo.FockSpace(1, 5))).as_tuple()[2], 0)
    mo = fo.moments_fock(fo.build_state("coherent", fo.FockSpace(1, 40), alpha=[0.8 - 0.3j]))
    assert abs(mo.a[0] - (0.8 - 0.3j)) < 1e-10
    mo = fo.moments_fock(fo.build_state("thermal", fo.FockSpace(1, 80), nbar=[2.0]), )
    assert abs(mo.normal[0, 0] - 2) < 1e-8


@pytest.mark.parametrize("kind,params", [
    ("coherent", {"alpha": [0.5 + 0.2j]}),
    ("thermal", {"nbar": [0.7]}),
    ("squeezed", {"xi": [[0.4j]], "alpha": [0.3]}),
    ("squeezed_thermal", {"xi": [[0.3]], "nbar": [0.4], "alpha": [0.2 - 0.1j]}),
])
def test_physical_states_match_gaussian_moments(kind, params):
    sp = fo.FockSpace(1, 60)
    rho = fo.build_state(kind, sp, **params)
    xi = params.get("xi", [[0.0]])
    nbar = np.diag(params.get("nbar", [0.0]))
    g = sf.squeezed_thermal(sf.SqueezeSpec(xi), nbar, alpha=params.get("alpha", [0.0]))
    assert fo.moments_fock(rho).max_abs_diff(gs.moments(g)) < 1e-8
    assert all(rho.checks().values())


def test_two_mode_squeezed_thermal_dual_route():
    sp = fo.FockSpace(2, 12)
    xi = np.array([[0.15, 0.1], [0.1, -0.05j]])
    nbar = [0.1, 0.2]
    alpha = [0.2, 0.1j]
    rho = fo.build_state("squeezed_thermal", sp, tail_tol=1e-8, xi=xi, nbar=nbar, alpha=alpha)
    lam = fo.build_kernel(sf.squeezed_thermal(sf.SqueezeSpec(xi), np.diag(nbar), alpha=alpha), sp)
    mask = np.all(sp.occupations <= 8, axis=1)
    assert np.abs((rho.rho - lam.rho)[np.ix_(mask, mask)]).max() < 1e-9


@settings(max_examples=12)
@given(seeds, st.integers(1, 2))
def test_build_kernel_trace_and_moments(seed, M):
    # non-Hermitian kernels near the physical region, where the truncated
    # trace converges fast enough for 1e-8 agreement
    rng = np.random.default_rng(seed)
    m, mp, h = cmat(rng, M, 0.05), cmat(rng, M, 0.05), cmat(rng, M, 0.2)
    n = h @ h.conj().T + cmat(rng, M, 0.02)
    g = gs.GaussianParams(0.7 - 0.2j, cvec(rng, M, 0.3), cvec(rng, M, 0.3), n, m + m.T, mp + mp.T)
    lam = fo.build_kernel(g, fo.FockSpace(M, 60 if M == 1 else 24))
    assert abs(lam.trace - g.omega) < 1e-8
    assert fo.moments_fock(lam).max_abs_diff(gs.moments(g)) < 1e-8


def test_complex_thermal_kernel_diagonal():
    phi = 1 + 0.5j * np.pi
    sp = fo.FockSpace(1, 50)
    lam = fo.build_kernel(sf.thermal([[sf.bose_einstein(phi)]]), sp).rho
    n = np.arange(51)
    assert np.allclose(np.diag(lam), (1 - np.exp(-phi)) * np.exp(-n * phi), atol=1e-14)
    assert np.count_nonzero(np.abs(lam - np.diag(np.diag(lam))) > 1e-14) == 0


def test_number_ensemble_reproduces_fock_weights():
    n0, r, K = 2, 1.0, 8
    sp = fo.FockSpace(1, 30)
    rho = fo.build_ensemble(sf.number_state_ensemble(n0, r, K), sp).rho
    assert np.allclose(np.diag(rho).real, sf.number_ensemble_alias_weights(n0, r, K, 30), atol=1e-12)
    assert np.abs(rho - np.diag(np.diag(rho))).max() < 1e-12


def test_decay_of_coherent_state():
    gam = 0.4
    spec = qme.lossy_trap([[0.0]], [[gam]])
    sp = fo.FockSpace(1, 25)
    alpha = np.exp(0.6j)
    states = fo.evolve_lindblad(spec, fo.build_state("coherent", sp, alpha=[alpha]), [0, 1, 3])
    for t, s in zip([0, 1, 3], states):
        assert abs(fo.moments_fock(s).a[0] - alpha * np.exp(-gam * t / 2)) < 1e-8
        assert abs(s.trace - 1) < 1e-8


def test_parametric_amplifier_long_time():
    sp = fo.FockSpace(1, 40)
    spec = qme.parametric_amplifier(0.25, 1.0)
    s = fo.evolve_lindblad(spec, fo.build_state("vacuum", sp), [10.0])[0]
    exact = gs.moments(qme.propagate_closed_form(qme.lindblad_to_qme(spec), sf.vacuum(1), 10.0))
    assert abs(fo.moments_fock(s).normal[0, 0] - exact.normal[0, 0]) < 1e-4
    # still 1.7e-3 short of 1/6: the slowest covariance rate is 1/2
    assert abs(exact.normal[0, 0] - (1 / 6 - np.exp(-5.0) / 4 + np.exp(-15.0) / 12)) < 1e-12


def test_thermal_state_stationary_under_number_hamiltonian():
    sp = fo.FockSpace(1, 40)
    rho = fo.build_state("thermal", sp, nbar=[0.5])
    s = fo.evolve_lindblad(qme.number_hamiltonian([[2.0]]), rho, [3.0])[0]
    assert np.abs(s.rho - rho.rho).max() < 1e-10


def test_edge_population_overflow():
    sp = fo.FockSpace(1, 10)
    with pytest.raises(fo.TruncationError):
        fo.evolve_lindblad(qme.bogoliubov(1.0), fo.build_state("vacuum", sp), [0.5, 2.0])


def test_coherent_identity_examples():
    sp = fo.FockSpace(1, 30)
    rep = fo.verify_coherent_identities(0.0, 0.0, sp)
    assert rep.residuals["a0 Lambda"] == 0
    for a, b in ((0.7, 0.2), (0.5 + 0.3j, 0.5 - 0.3j)):
        assert fo.verify_coherent_identities(a, b, sp).passed(1e-6)


@pytest.mark.parametrize("nbar", [1.0, 2 + 0.5j, 1e-3])
def test_thermal_identity_examples(nbar):
    assert fo.verify_thermal_identities(nbar, fo.FockSpace(1, 40)).passed(1e-6)


def test_identity_residuals_scale_as_h_squared():
    sp = fo.FockSpace(1, 30)
    coarse = fo.verify_thermal_identities(0.8, sp, h=1e-3).max_residual
    fine = fo.verify_thermal_identities(0.8, sp, h=1e-4).max_residual
    assert 50 < coarse / fine < 200
    coarse = fo.verify_coherent_identities([0.4], [0.3j], sp, h=1e-3).max_residual
    fine = fo.verify_coherent_identities([0.4], [0.3j], sp, h=1e-4).max_residual
    assert 50 < coarse / fine < 200


def test_gaussian_integral_examples():
    num, ana = fo.verify_gaussian_integral(np.eye(2))
    assert abs(num - np.pi) < 1e-8
    num, ana = fo.verify_gaussian_integral(1.5 * np.eye(2))
    assert abs(num - 1.5 * np.pi) < 1e-8
    sigma = np.array([[1.3, 0.2], [0.1j, 1.3]])
    num, ana = fo.verify_gaussian_integral(sigma, 0.4, 0.1)
    assert abs(num - ana) <= 1e-3 * abs(ana)


def test_gaussian_integral_validity():
    with pytest.raises(fo.IntegralValidityError):
        fo.verify_gaussian_integral(-np.eye(2))


def test_imaginary_time_oracle_where_converged():
    taus = np.linspace(0.2, 5, 10)
    Z, nb = fo.imaginary_time_oracle([1.0, 2.0], taus, 200)
    gs_ = qme.propagate_imaginary_time([1.0, 2.0], taus)
    assert np.allclose(Z, [g.omega.real for g in gs_], rtol=1e-10, atol=0)
    assert np.allclose(nb[:, 0], 1 / np.expm1(taus), atol=1e-10)


def test_edge_monitor_sees_parity_conserving_growth():
    # squeezing populates only even levels; odd nmax leaves the top level empty
    sp = fo.FockSpace(1, 15)
    with pytest.raises(fo.TruncationError):
        fo.evolve_lindblad(qme.bogoliubov(0.5), fo.build_state("vacuum", sp), [2.5])
