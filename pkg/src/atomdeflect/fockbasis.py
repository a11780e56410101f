"""Truncated Fock-space scalars: coherent-state coefficients and overlaps of
number states with quadrature eigenstates and phase states.

All functions here are pure. Array-valued helpers (``*_vector``) return the
overlaps for ``n = 0 .. n_max`` in one pass and are what the grid code uses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, pdtrc

TWO_PI = 2.0 * math.pi
_QUAD_NORM = TWO_PI ** -0.25
_PHASE_NORM = TWO_PI ** -0.5


@dataclass(frozen=True)
class FockTruncation:
    """Inclusive photon-number cutoff per mode."""

    n_max: int
    tail_tolerance: float = 1e-12

    def __post_init__(self):
        if self.n_max < 0:
            raise ValueError(f"n_max must be >= 0, got {self.n_max}")
        if not self.tail_tolerance > 0:
            raise ValueError("tail_tolerance must be positive")


@dataclass(frozen=True)
class TwoModeCoherent:
    alpha1: complex
    alpha2: complex

    def __post_init__(self):
        for a in (self.alpha1, self.alpha2):
            if not np.isfinite(complex(a)):
                raise ValueError(f"coherent amplitude must be finite, got {a}")

    @property
    def mean_photons(self) -> tuple[float, float]:
        return abs(self.alpha1) ** 2, abs(self.alpha2) ** 2

    def coefficients(self, n_max: int, m_max: int | None = None) -> np.ndarray:
        """Matrix ``C[n, m]`` for ``n <= n_max`` and ``m <= m_max``."""
        m_max = n_max if m_max is None else m_max
        return np.outer(
            coherent_vector(self.alpha1, n_max), coherent_vector(self.alpha2, m_max)
        )

    def retained_mass(self, n_max: int, m_max: int | None = None) -> float:
        """``sum |C[n, m]|^2`` over the truncated block."""
        m_max = n_max if m_max is None else m_max
        p1 = 1.0 - pdtrc(n_max, abs(self.alpha1) ** 2)
        p2 = 1.0 - pdtrc(m_max, abs(self.alpha2) ** 2)
        return float(p1 * p2)


@dataclass(frozen=True)
class QuadratureOutcome:
    """Quadrature measurement angle ``theta`` and eigenvalue ``chi``."""

    theta: float
    chi: float

    def __post_init__(self):
        # normalize the angle into [0, 2pi)
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)
        object.__setattr__(self, "chi", float(self.chi))


@dataclass(frozen=True)
class PhaseOutcome:
    phi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)


def _check_index(*idx: int) -> None:
    for k in idx:
        if k < 0:
            raise ValueError(f"Fock index must be non-negative, got {k}")


def _log_power(alpha: complex, n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(log|alpha^n|, arg(alpha^n))`` with ``0**0 == 1``."""
    r = abs(alpha)
    if r == 0.0:
        logmag = np.where(n == 0, 0.0, -np.inf)
        return logmag, np.zeros_like(logmag)
    return n * math.log(r), n * math.atan2(alpha.imag, alpha.real)


def coherent_vector(alpha: complex, n_max: int) -> np.ndarray:
    """Single-mode coherent coefficients ``e^{-|a|^2/2} a^n / sqrt(n!)``."""
    _check_index(n_max)
    alpha = complex(alpha)
    n = np.arange(n_max + 1, dtype=float)
    logmag, phase = _log_power(alpha, n)
    logmag = logmag - 0.5 * abs(alpha) ** 2 - 0.5 * gammaln(n + 1)
    return np.exp(logmag) * np.exp(1j * phase)


def coherent_coeff(alpha1: complex, alpha2: complex, n: int, m: int) -> complex:
    """Two-mode coherent coefficient ``C_{n,m}``.

    Factorials and powers are handled in log space so that indices in the
    hundreds stay finite; the complex phase is carried separately.
    """
    _check_index(n, m)
    alpha1, alpha2 = complex(alpha1), complex(alpha2)
    l1, p1 = _log_power(alpha1, np.float64(n))
    l2, p2 = _log_power(alpha2, np.float64(m))
    logmag = (
        l1 + l2
        - 0.5 * (abs(alpha1) ** 2 + abs(alpha2) ** 2)
        - 0.5 * (gammaln(n + 1) + gammaln(m + 1))
    )
    if logmag == -np.inf:
        return 0j
    return complex(np.exp(logmag) * np.exp(1j * (p1 + p2)))


def hermite_functions(u, n_max: int) -> np.ndarray:
    """Orthonormal Hermite functions ``psi_k(u)`` for ``k = 0 .. n_max``.

    Uses the three-term recurrence on the normalized functions, with the
    Gaussian folded into the seed, so nothing grows factorially. The order
    index is the leading axis of the result.
    """
    _check_index(n_max)
    u = np.asarray(u, dtype=float)
    out = np.empty((n_max + 1,) + u.shape)
    out[0] = math.pi ** -0.25 * np.exp(-0.5 * u * u)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * u * out[0]
    for k in range(1, n_max):
        out[k + 1] = (
            math.sqrt(2.0 / (k + 1)) * u * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
        )
    return out


def quadrature_vector(outcome: QuadratureOutcome, n_max: int) -> np.ndarray:
    """``<chi_theta|n>`` for ``n = 0 .. n_max``.

    Closed form ``(2pi)^{-1/4} e^{-i n theta} e^{-chi^2/4} H_n(chi/sqrt2) /
    sqrt(2^n n!)``, which equals ``2^{-1/4} psi_n(chi/sqrt2) e^{-i n theta}``.
    """
    psi = hermite_functions(outcome.chi / math.sqrt(2.0), n_max)
    n = np.arange(n_max + 1)
    return 2.0 ** -0.25 * psi * np.exp(-1j * n * outcome.theta)


def quadrature_overlap(outcome: QuadratureOutcome, n: int) -> complex:
    _check_index(n)
    return complex(quadrature_vector(outcome, n)[n])


def phase_vector(outcome: PhaseOutcome, n_max: int) -> np.ndarray:
    """``<phi|n> = e^{i phi n} / sqrt(2pi)`` for ``n = 0 .. n_max``."""
    _check_index(n_max)
    n = np.arange(n_max + 1)
    return _PHASE_NORM * np.exp(1j * outcome.phi * n)


def phase_overlap(outcome: PhaseOutcome, n: int) -> complex:
    _check_index(n)
    return complex(_PHASE_NORM * np.exp(1j * outcome.phi * n))


def poisson_tail(alpha: complex, n_max: int) -> float:
    """Probability mass of a coherent state above ``n_max`` photons."""
    return float(pdtrc(n_max, abs(alpha) ** 2))


def truncation_for(alpha: complex, tail_tolerance: float = 1e-12) -> FockTruncation:
    """Smallest cutoff whose discarded Poisson mass is below ``tail_tolerance``."""
    alpha = complex(alpha)
    if not np.isfinite(alpha):
        raise ValueError(f"alpha must be finite, got {alpha}")
    if not 0.0 < tail_tolerance < 1.0:
        raise ValueError("tail_tolerance must lie in (0, 1)")
    mean = abs(alpha) ** 2
    n = 0
    while pdtrc(n, mean) >= tail_tolerance:
        n += 1
    return FockTruncation(n_max=n, tail_tolerance=tail_tolerance)


def truncation_for_field(field: TwoModeCoherent, tail_tolerance: float = 1e-12) -> FockTruncation:
    """Common cutoff for both modes; each mode gets half the tolerance."""
    half = 0.5 * tail_tolerance
    n = max(
        truncation_for(field.alpha1, half).n_max,
        truncation_for(field.alpha2, half).n_max,
    )
    return FockTruncation(n_max=n, tail_tolerance=tail_tolerance)
