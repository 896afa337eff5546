"""Floquet analysis of time-periodic Hamiltonians.

Computes the one-period propagator (monodromy matrix), quasienergies and
Floquet modes from its eigendecomposition, a uniform time grid of modes and
propagators over one period, and the Fourier coefficients of system
operators expressed in the Floquet mode basis.
"""

from dataclasses import dataclass, field

import numpy as np

from .integrate import OdeTol, integrate_adaptive
from .qops import unitarity_defect

__all__ = [
    "FloquetBasis",
    "FourierOperator",
    "BASIS_TOL",
    "brillouin_fold",
    "monodromy",
    "floquet_decompose",
    "mode_grid",
    "compute_basis",
    "fourier_coefficients",
]

# Basis construction feeds every downstream quantity, so it defaults to a
# tighter tolerance than ordinary state propagation.
BASIS_TOL = OdeTol(rtol=1e-10, atol=1e-12)

_UNITARY_TOL = 1e-9
_REUNITARIZE_TOL = 1e-6
_DEGENERACY_REL_TOL = 1e-10


def brillouin_fold(value, omega):
    """Fold a frequency into the first Brillouin zone (-omega/2, omega/2]."""
    folded = value - omega * np.round(np.asarray(value, dtype=float) / omega)
    folded = np.where(folded <= -0.5 * omega, folded + omega, folded)
    return folded if np.ndim(value) else float(folded)


@dataclass(frozen=True, eq=False)
class FloquetBasis:
    """Quasienergies, Floquet modes on a one-period grid, and propagators.

    Attributes
    ----------
    quasienergies : ndarray, shape (N,)
        Sorted quasienergies in (-omega/2, omega/2].
    modes0 : ndarray, shape (N, N)
        Columns are the orthonormal Floquet modes at t = 0.
    grid_times : ndarray, shape (n_samples,)
        Uniform samples of [0, T).
    mode_grid : ndarray, shape (n_samples, N, N)
        Mode matrices at each grid time (columns are modes).
    propagators : ndarray, shape (n_samples, N, N)
        One-period propagator samples U(t_j, 0).
    closure_defect : float
        max |phi(T) - phi(0)| from the continuous integration pass.
    """

    omega: float
    quasienergies: np.ndarray
    modes0: np.ndarray
    grid_times: np.ndarray
    mode_grid: np.ndarray
    propagators: np.ndarray
    closure_defect: float = 0.0
    _mode_coeffs: np.ndarray = field(init=False, repr=False)
    _coeff_freqs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n_samples = self.mode_grid.shape[0]
        coeffs = np.fft.fft(self.mode_grid, axis=0) / n_samples
        freqs = np.fft.fftfreq(n_samples, d=1.0 / n_samples)
        object.__setattr__(self, "_mode_coeffs", coeffs)
        object.__setattr__(self, "_coeff_freqs", freqs)

    @property
    def dim(self):
        return self.modes0.shape[0]

    @property
    def period(self):
        return 2.0 * np.pi / self.omega

    @property
    def n_samples(self):
        return self.grid_times.size

    def modes_at(self, t):
        """Mode matrix at arbitrary time by trigonometric interpolation."""
        return self.modes_at_many([float(t)])[0]

    def modes_at_many(self, times):
        """Mode matrices at an array of times, shape (len(times), N, N)."""
        times = np.asarray(times, dtype=float)
        tau = np.mod(times, self.period)
        phases = np.exp(1j * self.omega * np.outer(tau, self._coeff_freqs))
        n = self.dim
        flat = phases @ self._mode_coeffs.reshape(self.n_samples, n * n)
        return flat.reshape(times.size, n, n)

    def floquet_states_at(self, t):
        """Floquet state matrix W(t), columns |phi_b(t)> exp(-1j*eps_b*t)."""
        t = float(t)
        return self.modes_at_many([t])[0] * np.exp(-1j * self.quasienergies * t)


@dataclass(frozen=True, eq=False)
class FourierOperator:
    """Fourier coefficients of a system operator in the Floquet mode basis.

    ``coeffs[a, b, j]`` is the coefficient of ``exp(1j*k*omega*t)`` in
    ``<phi_a(t)|source|phi_b(t)>`` for ``k = k_values[j]``.
    """

    source: np.ndarray
    omega: float
    k_max: int
    coeffs: np.ndarray

    @property
    def k_values(self):
        return np.arange(-self.k_max, self.k_max + 1)

    @property
    def tail(self):
        """Largest coefficient magnitude at |k| = k_max (truncation diagnostic)."""
        return float(max(np.max(np.abs(self.coeffs[:, :, 0])),
                         np.max(np.abs(self.coeffs[:, :, -1]))))

    def coeff(self, alpha, beta, k):
        return self.coeffs[alpha, beta, k + self.k_max]

    def element_at(self, alpha, beta, t):
        """Reconstruct <phi_a(t)|source|phi_b(t)> from the truncated series."""
        return np.sum(self.coeffs[alpha, beta, :] * np.exp(1j * self.k_values * self.omega * t))


def _propagator_rhs(hamiltonian):
    n = hamiltonian.dim

    def rhs(t, y):
        return (-1j * hamiltonian(t) @ y.reshape(n, n)).ravel()

    return rhs


def monodromy(hamiltonian, tol=BASIS_TOL):
    """One-period propagator U(T, 0) of a periodic Hamiltonian.

    Integrates dU/dt = -1j H(t) U from the identity.  A unitarity defect in
    [1e-9, 1e-6] is repaired by polar decomposition; beyond that the
    integration is considered failed.
    """
    n = hamiltonian.dim
    period = hamiltonian.period
    y0 = np.eye(n, dtype=complex).ravel()
    out, _ = integrate_adaptive(_propagator_rhs(hamiltonian), 0.0, y0, [period],
                                rtol=tol.rtol, atol=tol.atol)
    u = out[0].reshape(n, n)
    defect = unitarity_defect(u)
    if defect > _REUNITARIZE_TOL:
        raise ValueError(f"monodromy unitarity defect {defect:.3e} exceeds {_REUNITARIZE_TOL:.0e}")
    if defect > _UNITARY_TOL:
        w, _, vh = np.linalg.svd(u)
        u = w @ vh
    return u


def floquet_decompose(u_period, omega):
    """Quasienergies and t=0 Floquet modes from the monodromy matrix.

    Eigenphases are folded into (-omega/2, omega/2] and sorted; each
    eigenvector's largest-magnitude component is made real positive so the
    output is deterministic.  Degenerate quasienergy clusters are
    re-orthonormalized within their subspace.
    """
    u_period = np.asarray(u_period, dtype=complex)
    defect = unitarity_defect(u_period)
    if defect > _UNITARY_TOL:
        raise ValueError(f"input is not unitary (defect {defect:.3e})")
    period = 2.0 * np.pi / omega
    evals, evecs = np.linalg.eig(u_period)
    if np.any(np.abs(np.abs(evals) - 1.0) > 1e-8):
        raise ValueError("monodromy eigenvalues are not on the unit circle")
    eps = brillouin_fold(-np.angle(evals) / period, omega)
    order = np.argsort(eps)
    eps = eps[order]
    modes = evecs[:, order]

    # Re-orthonormalize clusters of (circularly) degenerate quasienergies.
    tol = _DEGENERACY_REL_TOL * omega
    n = eps.size
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and abs(brillouin_fold(eps[stop] - eps[stop - 1], omega)) < tol:
            stop += 1
        if stop - start > 1:
            block = modes[:, start:stop]
            gram_defect = np.max(np.abs(block.conj().T @ block - np.eye(stop - start)))
            if gram_defect > 1e-12:
                q, _ = np.linalg.qr(block)
                modes[:, start:stop] = q
        start = stop

    modes /= np.linalg.norm(modes, axis=0)
    anchor = np.argmax(np.abs(modes), axis=0)
    phases = modes[anchor, np.arange(n)]
    modes = modes * (np.abs(phases) / phases)

    residual = np.max(np.abs(modes.conj().T @ modes - np.eye(n)))
    if residual > 1e-8:
        raise ValueError(f"defective eigenbasis, orthonormalization residual {residual:.3e}")
    return eps, modes


def mode_grid(hamiltonian, quasienergies, modes0, n_samples=256, tol=BASIS_TOL):
    """Floquet modes and propagators on a uniform grid over one period.

    One continuous integration pass fills ``n_samples`` (a power of two)
    grid points and continues to T to measure the periodicity defect.
    """
    if n_samples < 2 or (n_samples & (n_samples - 1)) != 0:
        raise ValueError("n_samples must be a power of two (and at least 2)")
    n = hamiltonian.dim
    period = hamiltonian.period
    times = np.arange(n_samples) * (period / n_samples)
    y0 = np.eye(n, dtype=complex).ravel()
    out, _ = integrate_adaptive(_propagator_rhs(hamiltonian), 0.0, y0,
                                np.append(times, period), rtol=tol.rtol, atol=tol.atol)
    propagators = out[:-1].reshape(n_samples, n, n)
    u_final = out[-1].reshape(n, n)

    phases = np.exp(1j * np.outer(times, quasienergies))
    modes = np.einsum("tij,jb,tb->tib", propagators, modes0, phases)
    closing = (u_final @ modes0) * np.exp(1j * quasienergies * period)
    closure = float(np.max(np.abs(closing - modes0)))
    return FloquetBasis(
        omega=hamiltonian.omega,
        quasienergies=np.asarray(quasienergies, dtype=float),
        modes0=np.asarray(modes0, dtype=complex),
        grid_times=times,
        mode_grid=modes,
        propagators=propagators,
        closure_defect=closure,
    )


def compute_basis(hamiltonian, n_samples=256, tol=BASIS_TOL):
    """Monodromy, eigendecomposition and mode grid in one call."""
    u_period = monodromy(hamiltonian, tol=tol)
    eps, modes0 = floquet_decompose(u_period, hamiltonian.omega)
    return mode_grid(hamiltonian, eps, modes0, n_samples=n_samples, tol=tol)


def fourier_coefficients(basis, operator, k_max):
    """Fourier coefficients of ``<phi_a(t)|operator|phi_b(t)>`` over the grid.

    Discrete Fourier analysis on the mode grid; requires
    ``k_max < n_samples / 2``.
    """
    operator = np.asarray(operator, dtype=complex)
    if operator.shape != (basis.dim, basis.dim):
        raise ValueError(f"operator shape {operator.shape} does not match basis dim {basis.dim}")
    if not 0 <= k_max < basis.n_samples / 2:
        raise ValueError(f"k_max must satisfy 0 <= k_max < n_samples/2 = {basis.n_samples / 2}")
    elements = np.einsum("tia,ij,tjb->tab", basis.mode_grid.conj(), operator, basis.mode_grid)
    spectrum = np.fft.fft(elements, axis=0) / basis.n_samples
    idx = [k % basis.n_samples for k in range(-k_max, k_max + 1)]
    coeffs = np.moveaxis(spectrum[idx], 0, -1)
    return FourierOperator(source=operator, omega=basis.omega, k_max=int(k_max), coeffs=coeffs)
