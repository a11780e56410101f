"""Free flight of the transverse wavefunction to the detection plane.

Free evolution over time ``t`` for a particle of mass ``M`` depends only on
``beta = hbar t / M`` (units of wavelength squared here). In momentum space it
multiplies by ``exp(-i beta p^2 / 2)``; in position space it is the Fresnel
convolution with kernel ``exp(i |r - r'|^2 / (2 beta)) / (2 pi i beta)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants

from .dynamics import AmplitudeField, SpatialGrid

TWO_PI = 2.0 * math.pi


class SamplingError(ValueError):
    """Grid too coarse for the Fresnel kernel at the requested flight time."""


@dataclass(frozen=True)
class PropagationParams:
    """``fresnel_scale`` is ``hbar t_free / M`` in units of ``lambda1^2``."""

    fresnel_scale: float

    def __post_init__(self):
        if not (math.isfinite(self.fresnel_scale) and self.fresnel_scale >= 0):
            raise ValueError("fresnel_scale must be finite and non-negative")

    @classmethod
    def from_flight(cls, length: float, speed: float, mass: float, wavelength: float
                    ) -> "PropagationParams":
        """From flight length and speed (SI), atomic mass (kg) and ``lambda1`` (m)."""
        t_free = length / speed
        return cls(constants.hbar * t_free / mass / wavelength ** 2)


def check_sampling(grid: SpatialGrid, params: PropagationParams) -> None:
    """Require ``spacing^2 / (2 beta) < pi/4`` on both axes."""
    beta = params.fresnel_scale
    if beta == 0:
        return
    h = max(grid.dx, grid.dy)
    if h * h / (2 * beta) >= math.pi / 4:
        need = math.sqrt(math.pi * beta / 2)
        raise SamplingError(
            f"grid spacing {h:.4g} too coarse for fresnel_scale {beta:.4g}; "
            f"use spacing below {need:.4g}"
        )


def output_grid(grid: SpatialGrid) -> SpatialGrid:
    """Same spacing, extent doubled, the input grid embedded at its center."""
    ox, oy = (grid.nx - 1) // 2, (grid.ny - 1) // 2
    return SpatialGrid(
        2 * grid.nx - 1, 2 * grid.ny - 1,
        grid.x_min - ox * grid.dx, grid.x_max + (grid.nx - 1 - ox) * grid.dx,
        grid.y_min - oy * grid.dy, grid.y_max + (grid.ny - 1 - oy) * grid.dy,
    )


def _embed(psi: np.ndarray, grid: SpatialGrid, shape: tuple[int, int]) -> np.ndarray:
    ox, oy = (grid.nx - 1) // 2, (grid.ny - 1) // 2
    out = np.zeros(psi.shape[:-2] + shape, dtype=complex)
    out[..., ox:ox + grid.nx, oy:oy + grid.ny] = psi
    return out


def propagate_array(psi: np.ndarray, grid: SpatialGrid, params: PropagationParams
                    ) -> tuple[np.ndarray, SpatialGrid]:
    """Free-propagate arrays with the grid on their last two axes.

    Angular-spectrum evaluation: the field is placed on the doubled output
    grid, zero-padded by a further factor of two against wrap-around,
    multiplied by the free-particle phase in Fourier space and cropped back.
    """
    out = output_grid(grid)
    field = _embed(np.asarray(psi), grid, out.shape)
    beta = params.fresnel_scale
    if beta == 0:
        return field, out
    check_sampling(grid, params)
    nfx, nfy = 2 * out.nx, 2 * out.ny
    px = np.fft.fftfreq(nfx, d=out.dx) * TWO_PI
    py = np.fft.fftfreq(nfy, d=out.dy) * TWO_PI
    transfer = np.exp(-0.5j * beta * px ** 2)[:, None] * np.exp(-0.5j * beta * py ** 2)[None, :]
    spec = np.fft.fft2(field, s=(nfx, nfy), axes=(-2, -1))
    result = np.fft.ifft2(spec * transfer, axes=(-2, -1))
    return result[..., : out.nx, : out.ny], out


def propagate_far_field(amps: AmplitudeField, params: PropagationParams) -> AmplitudeField:
    """Propagate every ``Phi[i, n, m]`` over the free flight.

    The result is row-backed like its input; rows are propagated on demand.
    """
    check_sampling(amps.grid, params)
    out = output_grid(amps.grid)

    def row(n: int) -> np.ndarray:
        return propagate_array(amps.row(n), amps.grid, params)[0]

    result = AmplitudeField(out, amps.n_max, amps.m_max, row_fn=row, threads=amps.threads)
    if amps.materialized:
        result.data  # noqa: B018 - keep materialized inputs materialized
    return result


def fresnel_direct(psi: np.ndarray, grid: SpatialGrid, params: PropagationParams,
                   x_out: np.ndarray, y_out: np.ndarray) -> np.ndarray:
    """Direct quadrature of the Fresnel integral at the given output points.

    ``O(N_in * N_out)``; meant for checking :func:`propagate_array` on coarse
    grids. The kernel factorizes over x and y, so each axis is a matrix.
    """
    beta = params.fresnel_scale
    if beta == 0:
        raise ValueError("direct Fresnel quadrature needs fresnel_scale > 0")
    kx = np.exp(1j * (x_out[:, None] - grid.x[None, :]) ** 2 / (2 * beta))
    ky = np.exp(1j * (y_out[:, None] - grid.y[None, :]) ** 2 / (2 * beta))
    pref = grid.dx * grid.dy / (2j * math.pi * beta)
    return pref * np.einsum("ai,...ij,bj->...ab", kx, psi, ky)
