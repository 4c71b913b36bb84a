"""Truncated Fock x qubit Hilbert space: operators, states, expectation values.

Conventions used throughout the package:

* hbar = 1 and kappa = 1; every rate is quoted in units of kappa and every
  time in units of 1/kappa.
* Tensor ordering is *field-major*: the composite index is ``2*m + s`` where
  ``m`` is the Fock level and ``s`` the atomic index, with ``s = 0`` the
  excited state ``|+>`` and ``s = 1`` the ground state ``|->``.
* Operators are dense ``complex128`` matrices.  At the dimensions used here
  (<= 82 x 82) dense algebra is both fastest and simplest.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SpaceDescriptor",
    "PureState",
    "DensityMatrix",
    "build_space",
    "field_ops",
    "atom_ops",
    "quadrature_op",
    "jc_hamiltonian",
    "dressed_ops",
    "drift_generator",
    "expectation",
    "coherent_amplitudes",
    "coherent_state",
    "vacuum_ground",
    "top_level_population",
]

ORDERING = "field-major"

#: Atomic basis indices within each Fock block.
ATOM_UP = 0   # |+>, excited
ATOM_DOWN = 1  # |->, ground


@dataclass(frozen=True)
class SpaceDescriptor:
    """Truncated composite space: Fock levels 0..fock_cutoff tensor a qubit."""

    fock_cutoff: int
    n_levels: int
    composite_dim: int
    ordering: str = ORDERING

    def __post_init__(self):
        if self.fock_cutoff < 1:
            raise ValueError(f"fock_cutoff must be >= 1, got {self.fock_cutoff}")
        if self.n_levels != self.fock_cutoff + 1:
            raise ValueError("n_levels must equal fock_cutoff + 1")
        if self.composite_dim != 2 * self.n_levels:
            raise ValueError("composite_dim must equal 2 * (fock_cutoff + 1)")


def build_space(fock_cutoff: int) -> SpaceDescriptor:
    """Build the descriptor for a space truncated at Fock level `fock_cutoff`."""
    return SpaceDescriptor(
        fock_cutoff=int(fock_cutoff),
        n_levels=int(fock_cutoff) + 1,
        composite_dim=2 * (int(fock_cutoff) + 1),
    )


@dataclass
class PureState:
    """Conditioned wavefunction on the composite space.

    ``norm_log`` accumulates the log-norm discarded by renormalization steps;
    it is diagnostic only and never feeds back into the dynamics.
    """

    amplitudes: np.ndarray
    norm_log: float = 0.0

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "PureState":
        """Return the unit-norm state, folding the discarded norm into norm_log."""
        n = self.norm()
        if n < 1e-300:
            raise ValueError("cannot normalize a zero state vector")
        return PureState(self.amplitudes / n, self.norm_log + float(np.log(n)))

    def density_matrix(self) -> "DensityMatrix":
        psi = self.amplitudes / self.norm()
        return DensityMatrix(np.outer(psi, psi.conj()))


@dataclass
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix (within tolerances)."""

    matrix: np.ndarray

    HERMITICITY_TOL = 1e-10
    TRACE_TOL = 1e-10
    NEGATIVITY_TOL = 1e-8

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def validate(self) -> "DensityMatrix":
        m = self.matrix
        herm = np.max(np.abs(m - m.conj().T))
        if herm > self.HERMITICITY_TOL:
            raise ValueError(f"density matrix not Hermitian: max |rho - rho^dag| = {herm:.3e}")
        tr = np.trace(m)
        if abs(tr - 1.0) > self.TRACE_TOL:
            raise ValueError(f"density matrix trace {tr} deviates from 1 beyond tolerance")
        evals = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
        if evals.min() < -self.NEGATIVITY_TOL:
            raise ValueError(f"density matrix has negative eigenvalue {evals.min():.3e}")
        return self


def _field_annihilator(n_levels: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_levels, dtype=float)), 1).astype(complex)


def field_ops(space: SpaceDescriptor) -> tuple[np.ndarray, np.ndarray]:
    """Annihilation and creation operators of the cavity mode on the composite space."""
    a_f = _field_annihilator(space.n_levels)
    a = np.kron(a_f, np.eye(2, dtype=complex))
    return a, a.conj().T


def atom_ops(space: SpaceDescriptor) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(sigma_minus, sigma_plus, sigma_z) tensored with the field identity.

    sigma_plus = |+><-|, sigma_minus its adjoint, and
    sigma_z = |+><+| - |-><-|.
    """
    sp2 = np.zeros((2, 2), dtype=complex)
    sp2[ATOM_UP, ATOM_DOWN] = 1.0
    sm2 = sp2.conj().T
    sz2 = np.diag([1.0, -1.0]).astype(complex)
    eye_f = np.eye(space.n_levels, dtype=complex)
    return np.kron(eye_f, sm2), np.kron(eye_f, sp2), np.kron(eye_f, sz2)


def quadrature_op(space: SpaceDescriptor, theta: float) -> np.ndarray:
    """Field quadrature (a e^{-i theta} + a^dag e^{i theta}) / 2."""
    a, adag = field_ops(space)
    return 0.5 * (a * np.exp(-1j * theta) + adag * np.exp(1j * theta))


def jc_hamiltonian(space: SpaceDescriptor, g: float, epsilon: float) -> np.ndarray:
    """Resonantly driven Jaynes-Cummings Hamiltonian in the rotating frame.

    H = i g (a^dag sigma_- - a sigma_+) + epsilon (sigma_+ + sigma_-),
    with the drive resonant with both the transition and the cavity mode.
    """
    a, adag = field_ops(space)
    sm, sp, _ = atom_ops(space)
    return 1j * g * (adag @ sm - a @ sp) + epsilon * (sp + sm)


def dressed_ops(space: SpaceDescriptor) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(d_z, d_plus, d_minus) built from the drive eigenstates.

    The "spin" states are |up> = (|+> + |->)/sqrt(2) and
    |down> = (|+> - |->)/sqrt(2); d_z = |up><up| - |down><down|,
    d_plus = |up><down|, d_minus its adjoint.  Each is tensored with the
    field identity.
    """
    up = np.array([1.0, 1.0]) / np.sqrt(2.0)
    down = np.array([1.0, -1.0]) / np.sqrt(2.0)
    dz2 = np.outer(up, up) - np.outer(down, down)
    dp2 = np.outer(up, down)
    eye_f = np.eye(space.n_levels, dtype=complex)
    return (
        np.kron(eye_f, dz2.astype(complex)),
        np.kron(eye_f, dp2.astype(complex)),
        np.kron(eye_f, dp2.conj().T.astype(complex)),
    )


def drift_generator(space: SpaceDescriptor, g: float, kappa: float, gamma: float,
                    epsilon: float) -> np.ndarray:
    """Deterministic generator of the conditioned evolution between records.

    Returns -kappa a^dag a - (gamma/2) sigma_+ sigma_- - i H, i.e. the
    non-Hermitian drift whose ensemble average, together with the record
    coupling and atomic collapses, reproduces the master equation.  The
    cavity collapse operator is sqrt(2 kappa) a and the atomic one
    sqrt(gamma) sigma_-, so each contributes minus one half of xi^dag xi.
    """
    a, adag = field_ops(space)
    sm, sp, _ = atom_ops(space)
    h = jc_hamiltonian(space, g, epsilon)
    return -kappa * (adag @ a) - 0.5 * gamma * (sp @ sm) - 1j * h


def expectation(state, op: np.ndarray) -> complex:
    """<psi|O|psi> for a PureState (assumed normalized) or Tr[rho O] for a DensityMatrix."""
    if isinstance(state, PureState):
        psi = state.amplitudes
        if psi.shape[0] != op.shape[0]:
            raise ValueError(f"dimension mismatch: state {psi.shape[0]}, operator {op.shape[0]}")
        return complex(np.vdot(psi, op @ psi))
    if isinstance(state, DensityMatrix):
        rho = state.matrix
        if rho.shape[0] != op.shape[0]:
            raise ValueError(f"dimension mismatch: state {rho.shape[0]}, operator {op.shape[0]}")
        return complex(np.trace(rho @ op))
    raise TypeError(f"expected PureState or DensityMatrix, got {type(state).__name__}")


def coherent_amplitudes(n_levels: int, alpha: complex) -> np.ndarray:
    """Normalized truncated coherent-state expansion on the bare field space."""
    n = np.arange(n_levels)
    log_fact = np.cumsum(np.concatenate(([0.0], np.log(np.arange(1, n_levels, dtype=float)))))
    with np.errstate(divide="ignore"):
        log_mag = n * np.log(np.abs(alpha)) if alpha != 0 else np.where(n == 0, 0.0, -np.inf)
    amps = np.exp(log_mag - 0.5 * log_fact) * np.exp(1j * n * np.angle(alpha))
    amps /= np.linalg.norm(amps)
    return amps.astype(complex)


def coherent_state(space: SpaceDescriptor, alpha: complex, atom: np.ndarray) -> PureState:
    """Product state |alpha> tensor |atom>, normalized on the truncated space."""
    atom = np.asarray(atom, dtype=complex)
    atom = atom / np.linalg.norm(atom)
    return PureState(np.kron(coherent_amplitudes(space.n_levels, alpha), atom))


def vacuum_ground(space: SpaceDescriptor) -> PureState:
    """|0> tensor |->, the initial state of every simulation."""
    psi = np.zeros(space.composite_dim, dtype=complex)
    psi[ATOM_DOWN] = 1.0
    return PureState(psi)


def top_level_population(state: PureState | DensityMatrix, space: SpaceDescriptor) -> float:
    """Population of the highest retained Fock level; must stay below 1e-6."""
    i0 = 2 * space.fock_cutoff
    if isinstance(state, PureState):
        psi = state.amplitudes
        return float(np.abs(psi[i0]) ** 2 + np.abs(psi[i0 + 1]) ** 2)
    rho = state.matrix
    return float(np.real(rho[i0, i0] + rho[i0 + 1, i0 + 1]))
