"""Phase-space and Bloch-sphere observables.

Wigner convention: W(alpha) = (2/pi) Tr[rho D(alpha) Pi D(-alpha)] with Pi the
field parity operator, so the vacuum peaks at 2/pi and the integral over the
alpha = x + i y plane is 1.  Pointwise |W| <= 2/pi.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .hilbert import ATOM_DOWN, ATOM_UP, DensityMatrix, PureState

__all__ = [
    "WignerGrid",
    "reduced_field",
    "reduced_atom",
    "wigner",
    "cat_reference",
    "bloch_coords",
    "histogram",
    "locate_peaks",
]


@dataclass
class WignerGrid:
    """Sampled Wigner function on a rectangular quadrature grid.

    values[i, j] = W(x_axis[j] + 1i * y_axis[i]).  ``boundary_warning`` is set
    when the function has not decayed at the grid edge (largest edge value
    above 1e-4 of the peak), signalling that the grid clips the state.
    """

    x_axis: np.ndarray
    y_axis: np.ndarray
    values: np.ndarray
    dx: float
    dy: float
    boundary_warning: bool = False

    def integral(self) -> float:
        return float(self.values.sum() * self.dx * self.dy)

    def moment_alpha(self) -> complex:
        """First moment integral of alpha W(alpha), the symmetric-order <a>."""
        mx = float((self.values * self.x_axis[None, :]).sum() * self.dx * self.dy)
        my = float((self.values * self.y_axis[:, None]).sum() * self.dx * self.dy)
        return complex(mx, my)


def _composite_parts(state) -> np.ndarray:
    if isinstance(state, PureState):
        psi = state.amplitudes / state.norm()
        return np.outer(psi, psi.conj())
    if isinstance(state, DensityMatrix):
        return state.matrix
    raise TypeError(f"expected PureState or DensityMatrix, got {type(state).__name__}")


def reduced_field(state) -> DensityMatrix:
    """Partial trace over the atom; field-major ordering means summing the
    2x2 atomic blocks along their diagonal."""
    rho = _composite_parts(state)
    d = rho.shape[0]
    if d % 2:
        raise ValueError("composite dimension must be even")
    n = d // 2
    blocks = rho.reshape(n, 2, n, 2)
    return DensityMatrix(blocks[:, 0, :, 0] + blocks[:, 1, :, 1])


def reduced_atom(state) -> DensityMatrix:
    """Partial trace over the field, leaving the 2x2 atomic state."""
    rho = _composite_parts(state)
    n = rho.shape[0] // 2
    blocks = rho.reshape(n, 2, n, 2)
    return DensityMatrix(np.einsum("nsnt->st", blocks))


def wigner(rho_field: DensityMatrix, x_axis: np.ndarray, y_axis: np.ndarray) -> WignerGrid:
    """Wigner function of a field density matrix on an (x, y) grid.

    Evaluates the displaced-parity form through
    W = (2/pi) sum_{mn} rho_mn (-1)^m <n|D(2 alpha)|m>, with the displacement
    matrix elements in their associated-Laguerre closed form.  For every
    superdiagonal k = n - m the Laguerre values are generated by the upward
    three-term recurrence in the degree, vectorized over the grid; rho's
    Hermiticity folds the k and -k contributions into one real term.
    """
    x = np.asarray(x_axis, dtype=float)
    y = np.asarray(y_axis, dtype=float)
    if x.ndim != 1 or y.ndim != 1 or len(x) < 2 or len(y) < 2:
        raise ValueError("x_axis and y_axis must be 1-D with at least two points")
    rho_f = rho_field.matrix
    n_lev = rho_f.shape[0]
    beta = 2.0 * (x[None, :] + 1j * y[:, None])
    babs2 = np.abs(beta) ** 2

    lg = gammaln(np.arange(1, n_lev + 1, dtype=float))
    signs = (-1.0) ** np.arange(n_lev)
    total = np.zeros(beta.shape, dtype=complex)
    for k in range(n_lev):
        diag = np.diagonal(rho_f, offset=k)
        if not np.any(diag):
            continue
        m_max = n_lev - k
        pref = np.exp(0.5 * (lg[:m_max] - lg[k:k + m_max]))
        coef = diag * signs[:m_max] * pref
        weight = 1.0 if k == 0 else 2.0
        lm2 = np.ones_like(babs2)
        acc = coef[0] * lm2
        if m_max > 1:
            lm1 = 1.0 + k - babs2
            acc = acc + coef[1] * lm1
            for m in range(2, m_max):
                lm = ((2.0 * m - 1.0 + k - babs2) * lm1 - (m - 1.0 + k) * lm2) / m
                acc = acc + coef[m] * lm
                lm2, lm1 = lm1, lm
        total += weight * (beta ** k if k else 1.0) * acc

    values = (2.0 / np.pi) * np.real(np.exp(-0.5 * babs2) * total)
    dx = float(x[1] - x[0])
    dy = float(y[1] - y[0])
    edge = max(
        np.abs(values[0, :]).max(),
        np.abs(values[-1, :]).max(),
        np.abs(values[:, 0]).max(),
        np.abs(values[:, -1]).max(),
    )
    warn = bool(edge > 1e-4 * max(np.abs(values).max(), 1e-300))
    return WignerGrid(x_axis=x, y_axis=y, values=values, dx=dx, dy=dy, boundary_warning=warn)


def _coherent_cross_wigner(z: np.ndarray, alpha: complex, beta: complex) -> np.ndarray:
    """(2/pi) Tr[|alpha><beta| D(2z) Pi], the cross term of coherent projectors.

    Closed form from D(2z)|{-alpha}> overlap with <beta|; reduces to the
    Gaussian (2/pi) exp(-2|z - alpha|^2) when beta = alpha.
    """
    expo = (np.conj(z) * alpha - z * np.conj(alpha)
            - 0.5 * abs(beta) ** 2
            - 0.5 * np.abs(2.0 * z - alpha) ** 2
            + np.conj(beta) * (2.0 * z - alpha))
    return (2.0 / np.pi) * np.exp(expo)


def cat_reference(alpha_plus: complex, alpha_minus: complex, phi: float,
                  x_axis: np.ndarray, y_axis: np.ndarray,
                  include_interference: bool = True) -> WignerGrid:
    """Analytic Wigner function of N (|alpha_+> + e^{i phi} |alpha_->).

    With ``include_interference=False`` the cross terms are dropped and the
    result is the equal-weight incoherent mixture of the two coherent states,
    the dephased ensemble limit.
    """
    x = np.asarray(x_axis, dtype=float)
    y = np.asarray(y_axis, dtype=float)
    if x.ndim != 1 or y.ndim != 1 or len(x) < 2 or len(y) < 2:
        raise ValueError("x_axis and y_axis must be 1-D with at least two points")
    z = x[None, :] + 1j * y[:, None]
    overlap = np.exp(-0.5 * abs(alpha_plus) ** 2 - 0.5 * abs(alpha_minus) ** 2
                     + np.conj(alpha_plus) * alpha_minus)
    if include_interference:
        norm2 = 2.0 + 2.0 * np.real(np.exp(1j * phi) * overlap)
        w = (_coherent_cross_wigner(z, alpha_plus, alpha_plus).real
             + _coherent_cross_wigner(z, alpha_minus, alpha_minus).real
             + 2.0 * np.real(np.exp(-1j * phi)
                             * _coherent_cross_wigner(z, alpha_plus, alpha_minus)))
    else:
        norm2 = 2.0
        w = (_coherent_cross_wigner(z, alpha_plus, alpha_plus).real
             + _coherent_cross_wigner(z, alpha_minus, alpha_minus).real)
    values = w / norm2
    dx = float(x[1] - x[0])
    dy = float(y[1] - y[0])
    return WignerGrid(x_axis=x, y_axis=y, values=values, dx=dx, dy=dy)


def bloch_coords(state) -> tuple[float, float, float]:
    """Bloch coordinates with X - iY = 2 <sigma_-> and Z = <sigma_z>.

    Accepts a bare two-level state or a composite state, which is reduced
    over the field first.
    """
    if isinstance(state, PureState) and state.dim == 2:
        psi = state.amplitudes / state.norm()
        rho_a = np.outer(psi, psi.conj())
    elif isinstance(state, DensityMatrix) and state.dim == 2:
        rho_a = state.matrix
    else:
        rho_a = reduced_atom(state).matrix
    # <sigma_-> = Tr[rho |-><+|] = rho[+,-] entry
    sm_exp = complex(rho_a[ATOM_UP, ATOM_DOWN])
    x = 2.0 * sm_exp.real
    y = -2.0 * sm_exp.imag
    z = float(np.real(rho_a[ATOM_UP, ATOM_UP] - rho_a[ATOM_DOWN, ATOM_DOWN]))
    return x, y, z


def histogram(samples: np.ndarray, bin_width: float, value_range: tuple[float, float]
              ) -> tuple[np.ndarray, np.ndarray]:
    """Density-normalized histogram (unit integral over the range)."""
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    lo, hi = value_range
    if hi <= lo:
        raise ValueError("empty range")
    n_bins = max(1, int(round((hi - lo) / bin_width)))
    edges = lo + bin_width * np.arange(n_bins + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        return centers, np.zeros(n_bins)
    counts, _ = np.histogram(samples, bins=edges)
    total = counts.sum()
    if total == 0:
        return centers, np.zeros(n_bins)
    return centers, counts / (total * bin_width)


def locate_peaks(grid: WignerGrid, n_peaks: int = 2, min_separation: float = 1.0
                 ) -> list[complex]:
    """Locations of the n largest local maxima, highest first.

    Greedy selection on the sampled grid with an exclusion radius, adequate
    for locating well-separated lobes of a bimodal distribution.
    """
    vals = grid.values.copy()
    xs, ys = grid.x_axis, grid.y_axis
    peaks: list[complex] = []
    for _ in range(n_peaks):
        idx = np.unravel_index(np.argmax(vals), vals.shape)
        peaks.append(complex(xs[idx[1]], ys[idx[0]]))
        yy, xx = np.meshgrid(ys, xs, indexing="ij")
        mask = (xx - xs[idx[1]]) ** 2 + (yy - ys[idx[0]]) ** 2 < min_separation ** 2
        vals[mask] = -np.inf
    return peaks
