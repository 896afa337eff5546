"""Adaptive Dormand-Prince 5(4) integration for complex-valued linear ODEs.

One integrator backs every propagation in the package (monodromy matrices,
rate-matrix evolution and the direct reference solver) so that timing
comparisons between formulations measure the formulation, not the stepper.

The stepper lands on every requested output time exactly by clamping the
step size, rather than evaluating an interpolation polynomial, so solution
values at output points carry no interpolation error.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["OdeTol", "IntegratorStats", "IntegrationError", "integrate_adaptive"]


@dataclass(frozen=True)
class OdeTol:
    """Error control settings for the adaptive integrator.

    ``max_step`` is expressed as a fraction of the driving period and is
    converted to an absolute step bound by the caller.
    """

    rtol: float = 1e-8
    atol: float = 1e-10
    max_step: float | None = None

    def __post_init__(self):
        if self.rtol <= 0.0 or self.atol <= 0.0:
            raise ValueError("rtol and atol must be positive")
        if self.max_step is not None and self.max_step <= 0.0:
            raise ValueError("max_step must be positive when given")


@dataclass
class IntegratorStats:
    steps_accepted: int = 0
    steps_rejected: int = 0
    rhs_evals: int = 0
    last_step: float = 0.0


class IntegrationError(RuntimeError):
    """Raised on step-size underflow; carries the last time reached."""

    def __init__(self, message, t_reached):
        super().__init__(f"{message} (time reached: {t_reached!r})")
        self.t_reached = t_reached


# Dormand-Prince 5(4) tableau.  Seven stages, first-same-as-last.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# Difference between the 5th and embedded 4th order weights.
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


def _error_norm(err, y0, y1, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    with np.errstate(invalid="ignore"):
        return float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))


def _initial_step(rhs, t0, y0, f0, rtol, atol, max_step):
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean(np.abs(y0 / scale) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = rhs(t0 + h0, y1)
    d2 = np.sqrt(np.mean(np.abs((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, max_step)


def integrate_adaptive(rhs, t0, y0, t_out, rtol=1e-8, atol=1e-10,
                       max_step=np.inf, first_step=None):
    """Integrate dy/dt = rhs(t, y) from ``t0``, sampling at ``t_out``.

    Parameters
    ----------
    rhs : callable(t, y) -> ndarray
        Right-hand side; may return complex values.
    t_out : array_like
        Strictly increasing output times, all >= ``t0``.  The stepper hits
        each one exactly.

    Returns
    -------
    (ndarray of shape (len(t_out), len(y0)), IntegratorStats)
    """
    t_out = np.atleast_1d(np.asarray(t_out, dtype=float))
    if t_out.size == 0:
        raise ValueError("no output times requested")
    if np.any(np.diff(t_out) <= 0.0):
        raise ValueError("output times must be strictly increasing")
    if t_out[0] < t0:
        raise ValueError(f"first output time {t_out[0]} precedes start time {t0}")

    y = np.asarray(y0, dtype=complex).copy()
    t = float(t0)
    stats = IntegratorStats()
    out = np.empty((t_out.size, y.size), dtype=complex)

    i_out = 0
    if t_out[0] == t0:
        out[0] = y
        i_out = 1
        if i_out == t_out.size:
            return out, stats

    f = rhs(t, y)
    stats.rhs_evals += 1
    if first_step is not None:
        h = min(float(first_step), max_step)
    else:
        h = _initial_step(rhs, t, y, f, rtol, atol, max_step)
        stats.rhs_evals += 1

    K = np.empty((7, y.size), dtype=complex)
    while i_out < t_out.size:
        t_target = t_out[i_out]
        h_min = 16 * np.finfo(float).eps * max(abs(t), 1.0)
        hit_target = False
        # snap onto the target when the step reaches or lands within one
        # minimum step of it, so no sub-epsilon sliver remains
        if t + h + h_min >= t_target:
            h = t_target - t
            hit_target = True
        if h <= h_min and not hit_target:
            raise IntegrationError("step size underflow", t)

        K[0] = f
        for s in range(1, 7):
            ys = y + h * (_A[s] @ K[:s])
            K[s] = rhs(t + _C[s] * h, ys)
        stats.rhs_evals += 6
        y_new = y + h * (_B5 @ K)
        err = h * (_E @ K)
        norm = _error_norm(err, y, y_new, rtol, atol)

        if norm <= 1.0:
            t = t_target if hit_target else t + h
            y = y_new
            f = K[6].copy()  # first-same-as-last
            stats.steps_accepted += 1
            stats.last_step = h
            if hit_target:
                out[i_out] = y
                i_out += 1
            factor = _MAX_FACTOR if norm == 0.0 else min(
                _MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * norm ** -0.2))
            h = min(h * factor, max_step)
        else:
            stats.steps_rejected += 1
            if np.isfinite(norm):
                h *= max(_MIN_FACTOR, min(1.0, _SAFETY * norm ** -0.2))
            else:
                h *= _MIN_FACTOR

    return out, stats
