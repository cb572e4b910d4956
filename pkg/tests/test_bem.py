import numpy as np
import pytest

from cylbem import bem
from cylbem.bem import Formulation, QuadratureConvergenceError, SingularModeError
from cylbem.discretization import discrete_eigenvalue, gram_eigenvalue
from cylbem.excitation import Field
from cylbem.spectra import Operator, OperatorKind, ProblemConfig, Wavenumber, filter_cutoff, kind
from dense_oracle import dense_system, matched_gap

BASE = [OperatorKind(t, w) for t in (Operator.SingleLayer, Operator.DoubleLayer, Operator.Hypersingular)
        for w in Wavenumber]


def test_identity_row_is_analytic():
    row = bem.assemble(kind("Identity"), ProblemConfig(k=2.0, N=9)).first_row
    np.testing.assert_allclose(row.real, [2 / 3, 1 / 6, 0, 0, 0, 0, 0, 0, 1 / 6], atol=1e-15)


def test_gram_eigenvalues_closed_form():
    cfg = ProblemConfig(k=2.0, N=9)
    mat = bem.assemble(kind("Identity"), cfg)
    np.testing.assert_allclose(mat.dft_eigenvalues.real, gram_eigenvalue(cfg.modes, cfg.N), atol=1e-15)
    lam = gram_eigenvalue(cfg.modes, cfg.N)
    assert bem.condition_number(kind("Identity"), cfg, engine="numerical") == pytest.approx(lam.max() / lam.min())


@pytest.mark.parametrize("op", BASE, ids=str)
@pytest.mark.parametrize("ka,N", [(3.75, 15), (10.0, 41)])
def test_row_path_matches_dense_assembly(op, ka, N):
    cfg = ProblemConfig(k=ka, N=N)
    row = bem.assemble(op, cfg)
    dense = bem.assemble_dense(op, cfg)
    assert np.max(np.abs(dense - row.dense())) / np.max(np.abs(dense)) < 1e-10


def test_circulant_consistency_of_dense_assembly():
    cfg = ProblemConfig(k=6.5, N=27)
    A = bem.assemble_dense(kind("Hypersingular"), cfg)
    for m in (0, 9, 20):
        shifted = np.roll(A[m], -m)
        assert np.max(np.abs(shifted - A[0])) / np.max(np.abs(A[0])) < 1e-10


@pytest.mark.parametrize("tag", [Operator.SingleLayer, Operator.Hypersingular, Operator.Identity])
def test_reciprocity_symmetry(tag):
    cfg = ProblemConfig(k=10.0, N=41)
    row = bem.assemble(kind(tag), cfg).first_row
    scale = np.max(np.abs(row))
    for m in range(1, cfg.N):
        assert abs(row[m] - row[cfg.N - m]) < 1e-10 * scale


@pytest.mark.parametrize("op", BASE, ids=str)
def test_dft_eigenvalues_match_dense_eigensolver(op):
    cfg = ProblemConfig(k=3.75, N=15)
    dense = bem.assemble_dense(op, cfg)
    eig = np.linalg.eigvals(dense)
    mat = bem.assemble(op, cfg)
    assert matched_gap(eig, mat.dft_eigenvalues) < 1e-8 * np.max(np.abs(eig))


def test_eigenvalue_accessor_and_matvec():
    cfg = ProblemConfig(k=4.0, N=17)
    mat = bem.assemble(kind("SingleLayer"), cfg)
    x = np.random.default_rng(0).normal(size=17) + 0j
    np.testing.assert_allclose(mat.matvec(x), mat.dense() @ x, atol=1e-13)
    np.testing.assert_allclose(mat.eigenvalue(-3), mat.dft_eigenvalues[cfg.half_band - 3])


def test_single_layer_against_predicted_spectrum():
    cfg = ProblemConfig.from_ka(10.0)
    mat = bem.assemble(kind("SingleLayer"), cfg)
    pred = discrete_eigenvalue(kind("SingleLayer"), cfg.modes, cfg, harmonics=2)
    assert np.max(np.abs(mat.dft_eigenvalues - pred) / np.abs(pred)) < 2e-2


def test_quadrature_refinement_check_fires():
    with pytest.raises(QuadratureConvergenceError):
        bem.assemble(kind("Hypersingular"), ProblemConfig(k=10.0, N=41, quadrature=3))


def test_dense_assembly_needs_five_elements():
    with pytest.raises(ValueError):
        bem.assemble_dense(kind("SingleLayer"), ProblemConfig(k=0.5, N=3))


def test_dft_round_trip():
    x = np.random.default_rng(1).normal(size=21) + 1j
    np.testing.assert_allclose(bem.from_modes(bem.dft_modes(x)), x)


def test_efie_diagonal_solve_residual():
    cfg = ProblemConfig(k=10.0, N=41)
    cur = bem.solve(Formulation.TM_EFIE, cfg)
    lam = bem.assemble(kind("SingleLayer"), cfg).dft_eigenvalues
    rhs = bem.dft_modes(bem.rhs_vector(Field.E_z, cfg)) / (1j * cfg.eta)
    assert np.max(np.abs(cur.modes * lam - rhs)) < 1e-12 * np.max(np.abs(rhs))


@pytest.mark.parametrize("form", bem.UNFILTERED, ids=lambda f: f.value)
@pytest.mark.parametrize("ka,N", [(3.75, 15), (10.0, 41)])
def test_spectral_solve_matches_dense_lu(form, ka, N):
    cfg = ProblemConfig(k=ka, N=N)
    A, b = dense_system(form, cfg)
    ref = np.linalg.solve(A, b)
    got = bem.solve(form, cfg).coefficients
    assert np.max(np.abs(got - ref)) / np.max(np.abs(ref)) < 1e-10


@pytest.mark.parametrize("form", [f for f in Formulation if f.filtered], ids=lambda f: f.value)
def test_filtered_solve_matches_lu_of_circulant(form):
    cfg = ProblemConfig(k=10.0, N=41)
    A = bem.system_matrix(form, cfg)
    b = bem.system_rhs(form, cfg)
    got = bem.solve(form, cfg).coefficients
    np.testing.assert_allclose(A @ got, b, atol=1e-10 * np.max(np.abs(b)))


def test_filtered_efie_drops_modes_beyond_cutoff():
    cfg = ProblemConfig(k=20.0, N=41)  # about two points per wavelength, so q_lim < (N-1)/2
    qlim = filter_cutoff(cfg)
    assert qlim < cfg.half_band
    modes = bem.solve(Formulation.TE_EFIE_F, cfg).modes
    scale = np.max(np.abs(modes))
    assert scale > 0
    # zero up to the round trip through element coefficients
    assert np.all(np.abs(modes[np.abs(cfg.modes) > qlim]) < 1e-14 * scale)


def test_far_field_follows_current_modes():
    cfg = ProblemConfig.from_ka(8.0)
    cur = bem.solve(Formulation.TM_MFIE, cfg)
    from cylbem.analysis import discrete_modes
    from cylbem.discretization import pyramid_fourier_coeff
    from cylbem.excitation import mie_scattering_coeff

    rhat = bem.far_field(cur, cfg)
    R = mie_scattering_coeff(cur.polarization, cfg.modes, cfg)
    ups = discrete_modes(Formulation.TM_MFIE, cfg, "numerical")
    np.testing.assert_allclose(rhat, R * pyramid_fourier_coeff(cfg.modes, cfg.N) * (ups + 1), rtol=1e-12)


def test_singular_mode_is_reported():
    lam = np.array([1.0, 0.0, 2.0])
    with pytest.raises(SingularModeError):
        bem._check_singular(lam, ProblemConfig(k=1.0, N=3), "test")


def test_formulation_parsing():
    assert Formulation.parse("te-ccfie_f") is Formulation.TE_CCFIE_F
    assert Formulation.parse("TM_EFIE") is Formulation.TM_EFIE
    with pytest.raises(ValueError):
        Formulation.parse("XX")


def test_condition_number_engines_agree_roughly():
    cfg = ProblemConfig.from_ka(10.3)
    p = bem.condition_number(Formulation.TM_CCFIE, cfg)
    n = bem.condition_number(Formulation.TM_CCFIE, cfg, engine="numerical")
    assert abs(p - n) / n < 0.05


def test_condition_number_excluding_resonant_modes_is_smaller():
    cfg = ProblemConfig.from_ka(100.3)
    full = bem.condition_number(Formulation.TM_EFIE, cfg)
    env = bem.condition_number(Formulation.TM_EFIE, cfg, exclude_resonant=0.5)
    assert env <= full
