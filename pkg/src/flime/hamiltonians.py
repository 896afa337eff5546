"""Time-periodic Hamiltonians as finite harmonic series, plus system builders.

A Hamiltonian is represented as a Hermitian static part plus a finite list of
harmonic terms ``amplitude * exp(1j*k*omega*t) * matrix``.  Restricting input
to harmonics keeps the periodicity exact and gives the Fourier structure that
the rate-matrix construction needs anyway.

All frequencies and rates in a run are expressed in a single angular
frequency unit declared by a :class:`TimeUnit`; tagged inputs in laboratory
units (GHz, THz, micro-eV, lifetimes in ps or ns) are converted at ingestion.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .qops import hermiticity_defect, sigma_x

__all__ = [
    "HarmonicTerm",
    "PeriodicHamiltonian",
    "TimeUnit",
    "DEFAULT_TIME_UNIT",
    "angular_frequency",
    "lifetime_to_rate",
    "build_driven_2ls_rwa",
    "build_driven_2ls_full",
    "build_bichromatic",
    "build_pulse_train",
    "build_rotating_frame_2ls",
]

_HERM_TOL = 1e-12

# rad/ns carried by one unit of each supported input tag.
_HBAR_J_S = 1.054571817e-34
_EV_J = 1.602176634e-19
_RAD_PER_NS = {
    "rad/ns": 1.0,
    "1/ns": 1.0,
    "1/ps": 1e3,
    "GHz": 2.0 * np.pi,            # cyclic frequency
    "THz": 2.0 * np.pi * 1e3,
    "ueV": _EV_J * 1e-6 / _HBAR_J_S * 1e-9,   # E / hbar
}
_LIFETIME_NS = {"ns": 1.0, "ps": 1e-3, "s": 1e9}


@dataclass(frozen=True)
class TimeUnit:
    """Declared inverse-time unit for all frequencies and rates in a run.

    ``scale`` is the number of rad/ns represented by one internal unit.
    """

    label: str = "rad/ns"
    scale: float = 1.0

    def __post_init__(self):
        if self.scale <= 0.0:
            raise ValueError("TimeUnit scale must be positive")


DEFAULT_TIME_UNIT = TimeUnit()


def angular_frequency(value, unit, base=DEFAULT_TIME_UNIT):
    """Convert a tagged frequency/energy/rate to the run's angular unit."""
    if unit not in _RAD_PER_NS:
        raise ValueError(f"unknown frequency unit {unit!r}; expected one of {sorted(_RAD_PER_NS)}")
    return value * _RAD_PER_NS[unit] / base.scale


def lifetime_to_rate(value, unit, base=DEFAULT_TIME_UNIT):
    """Convert a lifetime (e.g. 455 ps) to a decay rate 1/lifetime."""
    if unit not in _LIFETIME_NS:
        raise ValueError(f"unknown lifetime unit {unit!r}; expected one of {sorted(_LIFETIME_NS)}")
    if value <= 0.0:
        raise ValueError("lifetime must be positive")
    return 1.0 / (value * _LIFETIME_NS[unit]) / base.scale


@dataclass(frozen=True, eq=False)
class HarmonicTerm:
    """One harmonic contribution ``amplitude * exp(1j*harmonic*omega*t) * matrix``."""

    matrix: np.ndarray
    harmonic: int
    amplitude: complex

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"harmonic matrix must be square, got shape {mat.shape}")
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "harmonic", int(self.harmonic))
        object.__setattr__(self, "amplitude", complex(self.amplitude))


@dataclass(frozen=True, eq=False)
class PeriodicHamiltonian:
    """H(t) = static_part + sum_j amplitude_j exp(1j*k_j*omega*t) matrix_j.

    Construction enforces Hermiticity of H(t) at every time: the harmonic
    content at ``+k`` must be the conjugate transpose of the content at
    ``-k`` (within 1e-12, relative to the largest coefficient).
    """

    omega: float
    static_part: np.ndarray
    terms: tuple = ()
    _harmonics: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.omega <= 0.0:
            raise ValueError("base angular frequency must be positive")
        static = np.asarray(self.static_part, dtype=complex)
        if static.ndim != 2 or static.shape[0] != static.shape[1]:
            raise ValueError("static part must be a square matrix")
        object.__setattr__(self, "static_part", static)
        object.__setattr__(self, "terms", tuple(self.terms))

        n = static.shape[0]
        harmonics = {}
        for term in self.terms:
            if term.matrix.shape != (n, n):
                raise ValueError("all harmonic terms must share the static part's dimension")
            agg = harmonics.setdefault(term.harmonic, np.zeros((n, n), dtype=complex))
            agg += term.amplitude * term.matrix
        scale = max(1.0, float(np.max(np.abs(static))) if static.size else 1.0)
        for agg in harmonics.values():
            scale = max(scale, float(np.max(np.abs(agg))))
        tol = _HERM_TOL * scale
        if hermiticity_defect(static) > tol:
            raise ValueError("static part is not Hermitian")
        for k, agg in harmonics.items():
            partner = harmonics.get(-k)
            if partner is None or np.max(np.abs(agg.conj().T - partner)) > tol:
                raise ValueError(
                    f"harmonic {k} lacks a conjugate-transpose partner at {-k}; H(t) would not be Hermitian")
        object.__setattr__(self, "_harmonics", harmonics)

    @property
    def dim(self):
        return self.static_part.shape[0]

    @property
    def period(self):
        return 2.0 * np.pi / self.omega

    def __call__(self, t):
        """Evaluate H(t)."""
        h = self.static_part.copy()
        for k, agg in self._harmonics.items():
            h += np.exp(1j * k * self.omega * t) * agg
        return h

    def harmonic_matrix(self, k):
        """Aggregated coefficient matrix of exp(1j*k*omega*t), zero if absent."""
        agg = self._harmonics.get(int(k))
        if agg is None:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return agg.copy()


def build_driven_2ls_rwa(omega0, omega, rabi):
    """Two-level system driven at ``omega`` with counter-rotating terms dropped.

    Static part diag(-omega0/2, +omega0/2); the forward-rotating drive
    couples (rabi/2)|0><1| at harmonic +1 with its conjugate partner at -1.
    """
    rabi = complex(rabi)
    static = 0.5 * np.diag([-omega0, omega0]).astype(complex)
    terms = (
        HarmonicTerm(np.array([[0.0, 1.0], [0.0, 0.0]]), +1, 0.5 * rabi),
        HarmonicTerm(np.array([[0.0, 0.0], [1.0, 0.0]]), -1, 0.5 * rabi.conjugate()),
    )
    return PeriodicHamiltonian(omega, static, terms)


def build_driven_2ls_full(omega0, omega, rabi, rabi_counter):
    """Driven two-level system keeping the counter-rotating coupling.

    The harmonic +1 coefficient matrix is
    ``0.5 * [[0, rabi], [conj(rabi_counter), 0]]`` and harmonic -1 its
    conjugate transpose.  ``rabi_counter == rabi`` gives a pure cosine drive
    ``rabi * cos(omega t) * sigma_x`` for real ``rabi``.
    """
    rabi = complex(rabi)
    rabi_counter = complex(rabi_counter)
    static = 0.5 * np.diag([-omega0, omega0]).astype(complex)
    plus = 0.5 * np.array([[0.0, rabi], [rabi_counter.conjugate(), 0.0]])
    terms = (
        HarmonicTerm(plus, +1, 1.0),
        HarmonicTerm(plus.conj().T, -1, 1.0),
    )
    return PeriodicHamiltonian(omega, static, terms)


def build_bichromatic(delta_bar, beat, rabi1, rabi2):
    """Two-level system driven by two lasers, in the frame rotating at their
    mean frequency.

    ``delta_bar`` is the detuning of the transition from the mean laser
    frequency and ``beat`` the laser frequency difference; the base frequency
    of the result is ``|beat|/2``.
    """
    if beat == 0.0:
        raise ValueError("beat frequency must be nonzero")
    rabi1 = complex(rabi1)
    rabi2 = complex(rabi2)
    sgn = 1 if beat > 0 else -1
    static = 0.5 * delta_bar * np.diag([-1.0, 1.0]).astype(complex)
    h_plus = -0.5 * np.array([[0.0, rabi2], [rabi1.conjugate(), 0.0]])
    h_minus = -0.5 * np.array([[0.0, rabi1], [rabi2.conjugate(), 0.0]])
    terms = (
        HarmonicTerm(h_plus, +sgn, 1.0),
        HarmonicTerm(h_minus, -sgn, 1.0),
    )
    return PeriodicHamiltonian(abs(beat) / 2.0, static, terms)


def build_pulse_train(delta, period, sigma=None, n_harmonics=40, pulse_area=np.pi):
    """Two-level system driven by a periodic train of Gaussian pulses.

    The drive is ``0.5 * sigma_x * f(t)`` with ``f`` the truncated Fourier
    series of a Gaussian comb of standard deviation ``sigma`` (default
    ``period / 16``), scaled so each pulse carries rotation angle
    ``pulse_area``.  The coefficients are
    ``c_k = (pulse_area / period) * exp(-(k * omega * sigma)**2 / 2)``.
    """
    if period <= 0.0:
        raise ValueError("pulse period must be positive")
    if sigma is None:
        sigma = period / 16.0
    if sigma <= 0.0:
        raise ValueError("pulse width sigma must be positive")
    if n_harmonics < 1:
        raise ValueError("n_harmonics must be at least 1")
    omega = 2.0 * np.pi / period
    ks = np.arange(1, n_harmonics + 1)
    c0 = pulse_area / period
    ck = c0 * np.exp(-0.5 * (ks * omega * sigma) ** 2)
    if ck[-1] / c0 > 1e-3:
        warnings.warn(
            f"pulse train truncated at {n_harmonics} harmonics resolves the pulse poorly "
            f"(c_max/c_0 = {ck[-1] / c0:.2e}); increase n_harmonics or sigma",
            stacklevel=2)
    half_sx = 0.5 * np.asarray(sigma_x)
    static = 0.5 * np.diag([-delta, delta]).astype(complex) + c0 * half_sx
    terms = []
    for k, c in zip(ks, ck):
        terms.append(HarmonicTerm(half_sx, int(k), c))
        terms.append(HarmonicTerm(half_sx, -int(k), c))
    return PeriodicHamiltonian(omega, static, tuple(terms))


def build_rotating_frame_2ls(detuning, rabi, omega):
    """Time-independent rotating-frame counterpart of the monochromatic
    driven two-level system: ``0.5 * [[detuning, rabi], [conj(rabi), -detuning]]``.

    Used for emission spectra, where detunings are measured from the drive
    frequency.  ``omega`` only sets the bookkeeping period.
    """
    rabi = complex(rabi)
    static = 0.5 * np.array([[detuning, rabi], [rabi.conjugate(), -detuning]])
    return PeriodicHamiltonian(omega, static, ())
