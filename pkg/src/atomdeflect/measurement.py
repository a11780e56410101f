"""Conditional position and momentum distributions of the deflected atom.

The field modes are projected onto reference states (quadrature eigenstates
or phase states); what remains is a density over the transverse plane.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import AmplitudeField, SpatialGrid
from .fockbasis import (
    PhaseOutcome,
    QuadratureOutcome,
    phase_vector,
    quadrature_vector,
)

TWO_PI = 2.0 * math.pi
TRUNCATION_TAIL_LIMIT = 1e-8
BOUNDARY_MASS_LIMIT = 1e-6


class TruncationWarning(UserWarning):
    """The Fock cutoff discards a non-negligible part of the projected state."""


class BoundaryMassWarning(UserWarning):
    """The distribution is not negligible at the edge of its grid."""


class AliasingError(RuntimeError):
    """The momentum grid does not contain the momentum distribution."""


class Normalization(str, enum.Enum):
    RAW = "raw"
    UNIT_MASS = "unit"


def _trapz2(values: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    return float(np.trapezoid(np.trapezoid(values, y, axis=1), x))


@dataclass
class DistributionGrid:
    """Non-negative density on a rectangular grid.

    ``kind`` is ``"position"`` (axes in units of the mode-1 wavelength) or
    ``"momentum"`` (axes in units of hbar k1). ``values[ix, iy]``.
    """

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    kind: str = "position"
    normalization: Normalization = Normalization.RAW

    def __post_init__(self):
        if self.values.shape != (self.x.size, self.y.size):
            raise ValueError("values shape does not match axes")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("distribution contains non-finite values")
        if np.any(self.values < 0):
            raise ValueError("distribution contains negative values")

    @property
    def axis_names(self) -> tuple[str, str]:
        return ("x", "y") if self.kind == "position" else ("p_x", "p_y")

    def mass(self) -> float:
        return _trapz2(self.values, self.x, self.y)

    def normalized(self) -> "DistributionGrid":
        total = self.mass()
        if total <= 0:
            raise ValueError("cannot normalize a distribution with zero mass")
        return replace(self, values=self.values / total, normalization=Normalization.UNIT_MASS)

    def with_normalization(self, norm: Normalization | str) -> "DistributionGrid":
        norm = Normalization(norm)
        return self.normalized() if norm is Normalization.UNIT_MASS else self

    def boundary_fraction(self) -> float:
        """Share of the (Riemann) mass sitting on the outermost grid lines."""
        v = self.values
        edge = v[0].sum() + v[-1].sum() + v[1:-1, 0].sum() + v[1:-1, -1].sum()
        total = v.sum()
        return float(edge / total) if total > 0 else 0.0

    def marginal_x(self) -> np.ndarray:
        return np.trapezoid(self.values, self.y, axis=1)

    def marginal_y(self) -> np.ndarray:
        return np.trapezoid(self.values, self.x, axis=0)

    def crop(self, keep: float = 1.0 - 1e-10) -> "DistributionGrid":
        """Smallest centered window holding at least ``keep`` of the mass."""
        v = self.values
        total = v.sum()
        cx, cy = v.shape[0] // 2, v.shape[1] // 2
        r = 0
        while r < max(cx, cy):
            sub = v[max(cx - r, 0): cx + r + 1, max(cy - r, 0): cy + r + 1]
            if sub.sum() >= keep * total:
                break
            r += 1
        sx = slice(max(cx - r, 0), cx + r + 1)
        sy = slice(max(cy - r, 0), cy + r + 1)
        return replace(self, x=self.x[sx], y=self.y[sy], values=v[sx, sy])


def check_boundary(dist: DistributionGrid) -> None:
    frac = dist.boundary_fraction()
    if frac > BOUNDARY_MASS_LIMIT:
        warnings.warn(
            f"{frac:.2e} of the {dist.kind} mass lies on the grid edge; widen the grid",
            BoundaryMassWarning,
            stacklevel=3,
        )


def check_tail(amps: AmplitudeField, w1: np.ndarray, w2: np.ndarray, c1: np.ndarray | None,
                c2: np.ndarray | None) -> float:
    """Largest ``|w1[n] w2[m] C[n,m]|`` on the outer edge of the Fock box."""
    if c1 is None or c2 is None:
        return 0.0
    t1 = np.abs(w1 * c1)
    t2 = np.abs(w2 * c2)
    tail = max(t1[-1] * t2.max(), t2[-1] * t1.max())
    if tail > TRUNCATION_TAIL_LIMIT:
        warnings.warn(
            f"Fock cutoff n_max={amps.n_max} leaves an edge term of {tail:.2e} "
            f"(> {TRUNCATION_TAIL_LIMIT:g}); raise --nmax",
            TruncationWarning,
            stacklevel=3,
        )
    return float(tail)


def conditioned_amplitude(amps: AmplitudeField, w1: np.ndarray, w2: np.ndarray) -> np.ndarray:
    """Channel amplitudes ``sum_{n,m} Phi[i,n,m] w1[n] w2[m]``."""
    return amps.contract(w1, w2)


def quadrature_weights(amps: AmplitudeField, out1: QuadratureOutcome,
                       out2: QuadratureOutcome) -> tuple[np.ndarray, np.ndarray]:
    return quadrature_vector(out1, amps.n_max), quadrature_vector(out2, amps.m_max)


def phase_weights(amps: AmplitudeField, phi1: PhaseOutcome,
                  phi2: PhaseOutcome) -> tuple[np.ndarray, np.ndarray]:
    return phase_vector(phi1, amps.n_max), phase_vector(phi2, amps.m_max)


def _position(amps: AmplitudeField, w1, w2, coeffs) -> DistributionGrid:
    if coeffs is not None:
        check_tail(amps, w1, w2, *coeffs)
    psi = amps.contract(w1, w2)
    dist = DistributionGrid(amps.grid.x, amps.grid.y, np.sum(np.abs(psi) ** 2, axis=0))
    check_boundary(dist)
    return dist


def position_distribution_quadrature(amps: AmplitudeField, out1: QuadratureOutcome,
                                     out2: QuadratureOutcome, *, coeffs=None,
                                     normalization: Normalization | str = Normalization.RAW,
                                     ) -> DistributionGrid:
    """``W(x, y) = sum_i |sum_{n,m} Phi[i,n,m] <chi1|n> <chi2|m>|^2``.

    ``coeffs`` optionally passes the single-mode coherent vectors so the
    Fock-cutoff tail can be checked.
    """
    w1, w2 = quadrature_weights(amps, out1, out2)
    return _position(amps, w1, w2, coeffs).with_normalization(normalization)


def position_distribution_phase(amps: AmplitudeField, phi1: PhaseOutcome = PhaseOutcome(0.0),
                                phi2: PhaseOutcome = PhaseOutcome(0.0), *, coeffs=None,
                                normalization: Normalization | str = Normalization.RAW,
                                ) -> DistributionGrid:
    """Position density conditioned on both modes being found in phase states.

    The projection carries ``<phi1|n><phi2|m> = e^{i(n phi1 + m phi2)}/(2 pi)``,
    so the overall ``(2 pi)^-2`` prefactor is included.
    """
    w1, w2 = phase_weights(amps, phi1, phi2)
    return _position(amps, w1, w2, coeffs).with_normalization(normalization)


@dataclass(frozen=True)
class MomentumGrid:
    """Momentum axes conjugate to a (zero-padded) position grid.

    ``px``/``py`` are in hbar = 1 units, i.e. radians per wavelength.
    """

    px: np.ndarray
    py: np.ndarray
    k_unit: float = TWO_PI

    @classmethod
    def for_grid(cls, grid: SpatialGrid, pad: int = 4, k_unit: float = TWO_PI) -> "MomentumGrid":
        npx, npy = pad * grid.nx, pad * grid.ny
        px = np.fft.fftshift(np.fft.fftfreq(npx, d=grid.dx)) * TWO_PI
        py = np.fft.fftshift(np.fft.fftfreq(npy, d=grid.dy)) * TWO_PI
        return cls(px, py, k_unit)

    @property
    def dpx(self) -> float:
        return float(self.px[1] - self.px[0])

    @property
    def dpy(self) -> float:
        return float(self.py[1] - self.py[0])


def fourier_amplitude(psi: np.ndarray, grid: SpatialGrid, pad: int = 4) -> tuple[np.ndarray, MomentumGrid]:
    """``(1/2pi) iint psi(x, y) e^{-i(p_x x + p_y y)} dx dy`` on the conjugate grid.

    ``psi`` has the grid on its last two axes. Zero padding by ``pad`` per
    axis refines the momentum spacing to ``2 pi / (pad * extent)``.
    """
    mgrid = MomentumGrid.for_grid(grid, pad)
    npx, npy = mgrid.px.size, mgrid.py.size
    spec = np.fft.fftshift(np.fft.fft2(psi, s=(npx, npy), axes=(-2, -1)), axes=(-2, -1))
    # the FFT assumes the first sample sits at the origin
    shift = np.exp(-1j * mgrid.px * grid.x_min)[:, None] * np.exp(-1j * mgrid.py * grid.y_min)[None, :]
    return spec * shift * (grid.dx * grid.dy / TWO_PI), mgrid


def momentum_distribution(amps: AmplitudeField, out1: QuadratureOutcome, out2: QuadratureOutcome,
                          *, pad: int = 4, coeffs=None,
                          normalization: Normalization | str = Normalization.RAW,
                          alias_limit: float = 1e-6) -> DistributionGrid:
    """Conditional momentum density for quadrature outcomes.

    The Fourier transform is applied to the two conditioned channel
    amplitudes rather than to each ``Phi[i,n,m]``; by linearity the result is
    the same. Axes and density are both in hbar k1 units, so the mass of the
    result equals the mass of the matching position distribution.
    """
    w1, w2 = quadrature_weights(amps, out1, out2)
    if coeffs is not None:
        check_tail(amps, w1, w2, *coeffs)
    psi = amps.contract(w1, w2)
    return momentum_from_conditioned(psi, amps.grid, pad=pad, normalization=normalization,
                                     alias_limit=alias_limit)


def momentum_from_conditioned(psi: np.ndarray, grid: SpatialGrid, *, pad: int = 4,
                              normalization: Normalization | str = Normalization.RAW,
                              alias_limit: float = 1e-6) -> DistributionGrid:
    spec, mgrid = fourier_amplitude(psi, grid, pad)
    # density per (hbar k1)^2
    values = np.sum(np.abs(spec) ** 2, axis=0) * mgrid.k_unit ** 2
    _check_aliasing(values, alias_limit)
    dist = DistributionGrid(mgrid.px / mgrid.k_unit, mgrid.py / mgrid.k_unit, values, kind="momentum")
    return dist.with_normalization(normalization)


def _check_aliasing(values: np.ndarray, limit: float) -> None:
    """Reject spectra with appreciable weight in the outer tenth of the band."""
    nx, ny = values.shape
    bx, by = max(1, nx // 20), max(1, ny // 20)
    inner = values[bx:nx - bx, by:ny - by].sum()
    total = values.sum()
    if total > 0 and (total - inner) / total > limit:
        raise AliasingError(
            f"{(total - inner) / total:.2e} of the momentum density lies near the band edge; "
            "refine the position grid spacing"
        )


@dataclass(frozen=True)
class Orientation:
    angle: float
    isotropic: bool
    eigenvalues: tuple[float, float]


def orientation(dist: DistributionGrid, rel_tol: float = 1e-9) -> Orientation:
    """Principal axis of the second-moment matrix about the centroid.

    The angle of the major axis is returned in ``(-pi/2, pi/2]``. When the
    two eigenvalues agree to ``rel_tol`` the axis is undefined; the angle is
    then 0 and ``isotropic`` is set.
    """
    w = dist.values
    total = w.sum()
    if total <= 0:
        raise ValueError("distribution has no mass")
    X, Y = np.meshgrid(dist.x, dist.y, indexing="ij")
    mx = (w * X).sum() / total
    my = (w * Y).sum() / total
    sxx = (w * (X - mx) ** 2).sum() / total
    syy = (w * (Y - my) ** 2).sum() / total
    sxy = (w * (X - mx) * (Y - my)).sum() / total
    lam, vec = np.linalg.eigh(np.array([[sxx, sxy], [sxy, syy]]))
    evals = (float(lam[1]), float(lam[0]))
    if lam[1] - lam[0] <= rel_tol * max(abs(lam[1]), 1e-300):
        return Orientation(0.0, True, evals)
    vx, vy = vec[:, 1]
    angle = math.atan2(vy, vx)
    if angle <= -math.pi / 2:
        angle += math.pi
    elif angle > math.pi / 2:
        angle -= math.pi
    return Orientation(angle, False, evals)


def orientation_angle(dist: DistributionGrid) -> float:
    return orientation(dist).angle


def axis_separation(a: float, b: float) -> float:
    """Acute angle between two undirected axes, in ``[0, pi/2]``."""
    d = (a - b) % math.pi
    return min(d, math.pi - d)
