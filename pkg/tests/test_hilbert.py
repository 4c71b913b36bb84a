import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgqed.hilbert import (
    DensityMatrix,
    PureState,
    atom_ops,
    build_space,
    coherent_amplitudes,
    coherent_state,
    dressed_ops,
    expectation,
    field_ops,
    jc_hamiltonian,
    quadrature_op,
    top_level_population,
    vacuum_ground,
)

UP = np.array([1.0, 1.0]) / np.sqrt(2.0)
DOWN_STATE = np.array([0.0, 1.0])  # |->


@pytest.mark.parametrize("cutoff,dim", [(35, 72), (20, 42), (1, 4)])
def test_build_space_dimensions(cutoff, dim):
    space = build_space(cutoff)
    assert space.composite_dim == dim
    assert space.ordering == "field-major"


def test_build_space_rejects_zero():
    with pytest.raises(ValueError):
        build_space(0)


def test_vacuum_number_expectation(space20):
    a, adag = field_ops(space20)
    vac = vacuum_ground(space20)
    assert abs(expectation(vac, adag @ a)) == 0.0


def test_commutator_truncation_artifact(space20):
    a, adag = field_ops(space20)
    comm = a @ adag - adag @ a
    d = space20.composite_dim
    # identity everywhere except the top Fock block, whose diagonal is -n_max
    assert np.allclose(comm[: d - 2, : d - 2], np.eye(d - 2), atol=1e-13)
    assert np.allclose(np.diag(comm)[-2:], -space20.fock_cutoff, atol=1e-13)


def test_coherent_state_eigenrelation(space20):
    beta = 0.5
    a, _ = field_ops(space20)
    psi = coherent_state(space20, beta, DOWN_STATE).amplitudes
    assert np.max(np.abs(a @ psi - beta * psi)) < 1e-8


def test_atom_ops_algebra(space20):
    sm, sp, sz = atom_ops(space20)
    ground = vacuum_ground(space20)
    assert np.max(np.abs(sm @ ground.amplitudes)) == 0.0
    d = space20.composite_dim
    assert np.allclose(sp @ sm + sm @ sp, np.eye(d), atol=1e-14)
    assert expectation(ground, sz) == pytest.approx(-1.0)


def test_quadrature_theta_zero(space20):
    a, adag = field_ops(space20)
    assert np.allclose(quadrature_op(space20, 0.0), (a + adag) / 2, atol=1e-15)


def test_quadrature_coherent_expectation(space20):
    beta = 1.0 + 0.3j
    psi = coherent_state(space20, beta, DOWN_STATE)
    val = expectation(psi, quadrature_op(space20, np.pi / 2))
    assert val.real == pytest.approx(0.3, abs=1e-8)
    assert val.imag == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(theta=st.floats(0.0, np.pi, allow_nan=False))
def test_quadrature_hermitian_for_any_phase(theta):
    space = build_space(6)
    q = quadrature_op(space, theta)
    assert np.max(np.abs(q - q.conj().T)) < 1e-14


def test_quadratures_reassemble_annihilator(space20):
    a, _ = field_ops(space20)
    q0 = quadrature_op(space20, 0.0)
    q90 = quadrature_op(space20, np.pi / 2)
    assert np.max(np.abs(q0 + 1j * q90 - a)) < 1e-14


def test_hamiltonian_zero_when_uncoupled(space20):
    assert np.max(np.abs(jc_hamiltonian(space20, 0.0, 0.0))) == 0.0


def test_hamiltonian_drive_only_spectrum(space20):
    eps = 2.5
    evals = np.linalg.eigvalsh(jc_hamiltonian(space20, 0.0, eps))
    evals = np.sort(evals)
    n = space20.n_levels
    assert np.allclose(evals[:n], -eps, atol=1e-12)
    assert np.allclose(evals[n:], eps, atol=1e-12)


def test_hamiltonian_hermitian_strong_drive(space35):
    h = jc_hamiltonian(space35, 7.0, 300.0)
    assert np.max(np.abs(h - h.conj().T)) < 1e-12


def test_dressed_z_eigenstate(space20):
    dz, _, _ = dressed_ops(space20)
    up = coherent_state(space20, 0.0, UP)
    assert np.max(np.abs(dz @ up.amplitudes - up.amplitudes)) < 1e-14


def test_dressed_operators_in_bare_basis(space20):
    sm, sp, sz = atom_ops(space20)
    dz, dp, dm = dressed_ops(space20)
    assert np.max(np.abs(dz - (sp + sm))) < 1e-14
    assert np.max(np.abs(sz - (dp + dm))) < 1e-14


def test_dressed_basis_operator_identity(space35):
    """The interaction rewritten in dressed operators is an exact algebraic
    identity on the truncated space."""
    g, eps = 7.0, 300.0
    a, adag = field_ops(space35)
    sm, sp, _ = atom_ops(space35)
    dz, dp, dm = dressed_ops(space35)
    lhs = -1j * eps * (sp + sm) + g * (adag @ sm - a @ sp)
    rhs = -1j * eps * dz + (g / 2) * dz @ (adag - a) + (g / 2) * (dp - dm) @ (adag + a)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_field_and_atom_ops_commute(space20):
    a, _ = field_ops(space20)
    sm, _, _ = atom_ops(space20)
    assert np.max(np.abs(a @ sm - sm @ a)) < 1e-14


def test_expectation_dressed_sigma_minus(space20):
    sm, _, _ = atom_ops(space20)
    up = coherent_state(space20, 0.0, UP)
    assert expectation(up, sm) == pytest.approx(0.5, abs=1e-12)


def test_expectation_trace_identity(rng):
    space = build_space(4)
    d = space.composite_dim
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = m @ m.conj().T
    rho /= np.trace(rho).real
    assert expectation(DensityMatrix(rho), np.eye(d)) == pytest.approx(1.0, abs=1e-12)


def test_expectation_dimension_mismatch(space20):
    with pytest.raises(ValueError, match="dimension"):
        expectation(vacuum_ground(space20), np.eye(4))


def test_pure_state_normalize():
    psi = PureState(np.array([3.0, 4.0], dtype=complex))
    normed = psi.normalize()
    assert abs(normed.norm() - 1.0) < 1e-12
    assert normed.norm_log == pytest.approx(np.log(5.0))


def test_density_matrix_validation_catches_bad_trace():
    with pytest.raises(ValueError, match="trace"):
        DensityMatrix(np.eye(4, dtype=complex)).validate()


def test_density_matrix_validation_catches_non_hermitian():
    m = np.diag([1.0, 0.0]).astype(complex)
    m[0, 1] = 0.1
    with pytest.raises(ValueError, match="Hermitian"):
        DensityMatrix(m).validate()


def test_top_level_population_flags_coherent_tail():
    space = build_space(6)
    st_ = coherent_state(space, 2.0, DOWN_STATE)
    assert top_level_population(st_, space) > 1e-3
    assert top_level_population(vacuum_ground(space), space) == 0.0


def test_coherent_amplitudes_normalized():
    amps = coherent_amplitudes(30, 1.7 - 0.4j)
    assert np.linalg.norm(amps) == pytest.approx(1.0, abs=1e-14)
