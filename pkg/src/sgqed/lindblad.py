"""Ensemble-level dynamics: Liouvillian, steady state, master-equation
integration and waiting-time densities from the regression formula.

Vectorization is column-stacking throughout: vec(A rho B) = (B^T kron A) vec(rho).
The superoperator matrix is stored sparse (it has a few nonzeros per row);
everything exposed to callers is dense operators and density matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .config import SimParams, max_stable_dt
from .hilbert import (
    DensityMatrix,
    SpaceDescriptor,
    atom_ops,
    field_ops,
    jc_hamiltonian,
)

__all__ = [
    "Superoperator",
    "WaitingTimeDensity",
    "liouvillian",
    "lindblad_rhs",
    "steady_state",
    "evolve_me",
    "evolve_me_expectations",
    "waiting_time_density",
    "rf_reference_wtd",
]


@dataclass
class Superoperator:
    """Liouvillian acting on column-stacked density matrices.

    ``matrix`` is kept sparse (CSR); ``toarray()`` gives the dense form for
    small spaces.  The trace functional is a left null vector: applying the
    superoperator and then tracing gives zero for any operator.
    """

    matrix: sp.csr_matrix
    space: SpaceDescriptor

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Apply to a density matrix given in operator form."""
        d = self.space.composite_dim
        return (self.matrix @ rho.reshape(d * d, order="F")).reshape(d, d, order="F")


def _dissipator_super(xi: np.ndarray) -> sp.csr_matrix:
    """vec form of L[xi] rho = xi rho xi^dag - (xi^dag xi rho + rho xi^dag xi)/2."""
    d = xi.shape[0]
    xis = sp.csr_matrix(xi)
    xd_x = sp.csr_matrix(xi.conj().T @ xi)
    eye = sp.identity(d, dtype=complex, format="csr")
    return (sp.kron(xis.conj(), xis, format="csr")
            - 0.5 * sp.kron(eye, xd_x, format="csr")
            - 0.5 * sp.kron(xd_x.T, eye, format="csr"))


def liouvillian(space: SpaceDescriptor, g: float, kappa: float, gamma: float,
                epsilon: float) -> Superoperator:
    """Generator of d rho/dt = -i[H, rho] + L[sqrt(2 kappa) a] rho + L[sqrt(gamma) sigma_-] rho."""
    for name, v in (("g", g), ("kappa", kappa), ("gamma", gamma), ("epsilon", epsilon)):
        if v < 0:
            raise ValueError(f"{name} must be >= 0, got {v}")
    h = sp.csr_matrix(jc_hamiltonian(space, g, epsilon))
    eye = sp.identity(space.composite_dim, dtype=complex, format="csr")
    mat = -1j * (sp.kron(eye, h, format="csr") - sp.kron(h.T, eye, format="csr"))
    a, _ = field_ops(space)
    mat = mat + _dissipator_super(np.sqrt(2.0 * kappa) * a)
    if gamma > 0:
        sm, _, _ = atom_ops(space)
        mat = mat + _dissipator_super(np.sqrt(gamma) * sm)
    return Superoperator(matrix=mat.tocsr(), space=space)


def lindblad_rhs(rho: np.ndarray, h: np.ndarray, collapse_ops: list[np.ndarray]) -> np.ndarray:
    """Direct operator-space evaluation of the master-equation right-hand side.

    Independent of the vectorized Liouvillian; used both as its cross-check
    and as the memory-light propagation route for regression quantities.
    """
    out = -1j * (h @ rho - rho @ h)
    for xi in collapse_ops:
        xd = xi.conj().T
        xdx = xd @ xi
        out += xi @ rho @ xd - 0.5 * (xdx @ rho + rho @ xdx)
    return out


def _trace_indices(d: int) -> np.ndarray:
    return np.arange(d) * (d + 1)


def steady_state(liou: Superoperator) -> DensityMatrix:
    """Null vector of the Liouvillian, Hermitized and trace-normalized.

    The singular system L x = 0, Tr x = 1 is solved by replacing the row of a
    diagonal entry with the trace functional; that row is linearly dependent
    on the others (the trace functional is a left null vector), so the
    replacement is exact for a one-dimensional null space.  A degenerate null
    space or failed extraction surfaces as a singular factorization or a
    large residual, both raised as errors.
    """
    d = liou.space.composite_dim
    n = liou.dim
    mat = liou.matrix.tolil(copy=True)
    tr_idx = _trace_indices(d)
    row = np.zeros(n, dtype=complex)
    row[tr_idx] = 1.0
    mat[0, :] = row
    rhs = np.zeros(n, dtype=complex)
    rhs[0] = 1.0

    import warnings

    with np.errstate(all="ignore"), warnings.catch_warnings():
        # a singular factorization is how a degenerate null space shows up;
        # it is converted to the explicit error below
        warnings.simplefilter("ignore", spla.MatrixRankWarning)
        vec = spla.spsolve(mat.tocsc(), rhs)
    if not np.all(np.isfinite(vec)):
        raise ValueError(
            "steady-state extraction failed (singular system): the null space "
            "is degenerate or the Liouvillian has no unique stationary state"
        )
    rho = vec.reshape(d, d, order="F")
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real

    residual = np.max(np.abs(liou.matrix @ rho.reshape(n, order="F")))
    if residual > 1e-8:
        raise ValueError(
            f"steady-state residual {residual:.3e} exceeds 1e-8: degenerate or "
            "ill-conditioned null-space extraction"
        )
    return DensityMatrix(rho).validate()


def _rk4_step(rho: np.ndarray, rhs, dt: float) -> np.ndarray:
    k1 = rhs(rho)
    k2 = rhs(rho + 0.5 * dt * k1)
    k3 = rhs(rho + 0.5 * dt * k2)
    k4 = rhs(rho + dt * k3)
    return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def evolve_me(liou: Superoperator, rho0: DensityMatrix, t_final: float,
              dt: float) -> DensityMatrix:
    """Fixed-step classical RK4 integration of the vectorized master equation."""
    if t_final < 0 or dt <= 0:
        raise ValueError("t_final must be >= 0 and dt > 0")
    n_steps = int(round(t_final / dt))
    d = liou.space.composite_dim
    tr_idx = _trace_indices(d)
    vec = rho0.matrix.reshape(d * d, order="F").astype(complex)
    mat = liou.matrix

    def rhs(v):
        return mat @ v

    for k in range(n_steps):
        vec = _rk4_step(vec, rhs, dt)
        drift = abs(vec[tr_idx].sum() - 1.0)
        if drift > 1e-8:
            raise ValueError(f"trace drift {drift:.3e} exceeded 1e-8 at t = {(k + 1) * dt:.6f}")
    rho = vec.reshape(d, d, order="F")
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho).validate()


def evolve_me_expectations(liou: Superoperator, rho0: DensityMatrix, dt: float,
                           times: np.ndarray, operators: list[np.ndarray]) -> np.ndarray:
    """Expectation values Tr[rho(t) O_i] on a grid of times (multiples of dt)."""
    times = np.asarray(times, dtype=float)
    steps = np.round(times / dt).astype(int)
    if not np.allclose(steps * dt, times, atol=1e-9):
        raise ValueError("every requested time must be an integer multiple of dt")
    d = liou.space.composite_dim
    vec = rho0.matrix.reshape(d * d, order="F").astype(complex)
    mat = liou.matrix
    op_vecs = [op.conj().T.reshape(d * d, order="F") for op in operators]

    out = np.empty((len(times), len(operators)), dtype=complex)
    order = np.argsort(steps)
    current = 0
    for rank in order:
        target = steps[rank]
        while current < target:
            vec = _rk4_step(vec, lambda v: mat @ v, dt)
            current += 1
        # Tr[rho O] = vec(O^dag)^dag vec(rho) under column stacking
        out[rank] = [np.vdot(ov, vec) for ov in op_vecs]
    return out


@dataclass
class WaitingTimeDensity:
    """Exclusive waiting-time density of the side-channel emissions.

    ``tau_grid`` is in units of 1/kappa.  ``norm_captured`` is the integral
    of the density over the grid; it approaches 1 from below as the grid
    extends.
    """

    tau_grid: np.ndarray
    values: np.ndarray
    norm_captured: float
    tau_unit: str = "1/kappa"

    def mean_waiting_time(self) -> float:
        """First moment of the density over the captured grid."""
        return float(np.trapezoid(self.tau_grid * self.values, self.tau_grid))


def waiting_time_density(space: SpaceDescriptor, params: SimParams,
                         tau_grid: np.ndarray, rho_ss: DensityMatrix | None = None,
                         dt: float | None = None) -> WaitingTimeDensity:
    """w(tau) of the atomic-emission channel from the stationary state.

    w(tau) = gamma Tr[sigma_+ sigma_- exp(L_nj tau) (sigma_- rho_ss sigma_+)]
             / Tr[sigma_+ sigma_- rho_ss],
    where L_nj is the full Liouvillian with the atomic recycling term
    gamma sigma_- . sigma_+ removed; the cavity channel stays fully traced
    because its output is monitored continuously rather than counted.  The
    conditioned operator is stepped with the same fixed-step RK4 scheme as
    the master equation, in operator space to keep memory flat.
    """
    if params.gamma <= 0:
        raise ValueError("waiting_time_density requires gamma > 0")
    tau_grid = np.asarray(tau_grid, dtype=float)
    if tau_grid.ndim != 1 or tau_grid[0] != 0.0 or np.any(np.diff(tau_grid) <= 0):
        raise ValueError("tau_grid must be increasing and start at 0")

    if rho_ss is None:
        liou = liouvillian(space, params.g, params.kappa, params.gamma, params.epsilon)
        rho_ss = steady_state(liou)
    sm, sp_, _ = atom_ops(space)
    sp_sm = sp_ @ sm
    emission = float(np.real(np.trace(sp_sm @ rho_ss.matrix)))
    if emission <= 1e-14:
        raise ValueError("no emission: Tr[sigma_+ sigma_- rho_ss] = 0")

    h = jc_hamiltonian(space, params.g, params.epsilon)
    a, adag = field_ops(space)
    # full Liouvillian minus the atomic recycling term, in effective-
    # Hamiltonian form: -i(H_eff mu - mu H_eff^dag) + 2 kappa a mu a^dag
    h_eff = h - 1j * params.kappa * (adag @ a) - 0.5j * params.gamma * sp_sm
    h_eff_dag = h_eff.conj().T
    two_kappa = 2.0 * params.kappa

    def rhs_nj(mu):
        return (-1j * (h_eff @ mu - mu @ h_eff_dag)
                + two_kappa * (a @ mu @ adag))

    if dt is None:
        dt = max_stable_dt(params.epsilon, params.gamma, params.kappa)
    mu = (sm @ rho_ss.matrix @ sp_) / emission
    values = np.empty_like(tau_grid)
    values[0] = params.gamma * float(np.real(np.trace(sp_sm @ mu)))
    steps = np.round(np.diff(tau_grid) / dt).astype(int)
    for i, (n_sub, d_tau) in enumerate(zip(steps, np.diff(tau_grid))):
        n_sub = max(int(n_sub), 1)
        h_sub = d_tau / n_sub
        for _ in range(n_sub):
            mu = _rk4_step(mu, rhs_nj, h_sub)
        values[i + 1] = params.gamma * float(np.real(np.trace(sp_sm @ mu)))

    floor = values.min()
    if floor < -1e-6:
        raise ValueError(f"waiting-time density reached {floor:.3e} < -1e-6: implementation bug")
    values = np.clip(values, -1e-10, None)
    norm = float(np.trapezoid(values, tau_grid))
    return WaitingTimeDensity(tau_grid=tau_grid, values=values, norm_captured=norm)


def rf_reference_wtd(gamma: float, epsilon: float, tau_grid: np.ndarray) -> WaitingTimeDensity:
    """Resonance-fluorescence reference density for the uncoupled atom.

    w(tau) = N exp(-gamma tau / 2) sin^2(tau sqrt(16 eps^2 - gamma^2) / 4)
    with N = 16 gamma eps^2 / (16 eps^2 - gamma^2) fixing unit integral on
    [0, infinity).  Only the underdamped regime 16 eps^2 > gamma^2 is covered.
    """
    if 16.0 * epsilon**2 <= gamma**2:
        raise ValueError("overdamped regime 16 eps^2 <= gamma^2 is out of scope")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    tau_grid = np.asarray(tau_grid, dtype=float)
    b = np.sqrt(16.0 * epsilon**2 - gamma**2) / 4.0
    norm_const = 16.0 * gamma * epsilon**2 / (16.0 * epsilon**2 - gamma**2)
    values = norm_const * np.exp(-gamma * tau_grid / 2.0) * np.sin(b * tau_grid) ** 2
    captured = float(np.trapezoid(values, tau_grid))
    return WaitingTimeDensity(tau_grid=tau_grid, values=values, norm_captured=captured)
