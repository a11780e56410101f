"""Atom-field amplitudes after the dispersive interaction.

Lengths are in units of the mode-1 wavelength (so ``k1 = 2 pi``), hbar = 1.
Amplitudes live on a (channel, n, m, ix, iy) array; channel 0 is atomic
level |1>, channel 1 is level |2>.

Under the Raman-resonant Hamiltonian the pair ``|1,n,m>, |2,n-1,m+1>`` forms
a closed two-level block with rank-one generator ``v v^T / Delta`` where
``v = (g1 sqrt(n), g2 sqrt(m+1))``. The evolution is therefore
``1 + (e^{-i t Omega/Delta} - 1) v v^T / Omega``, which is what
:func:`amplitudes_raman` evaluates. :func:`integrate_schrodinger` integrates
the same truncated Hamiltonian numerically and is kept as an oracle.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Callable, Iterator

import numba
import numpy as np

from .fockbasis import FockTruncation, TwoModeCoherent, coherent_vector

TWO_PI = 2.0 * math.pi


class Regime(str, enum.Enum):
    RAMAN = "raman"
    OFF_RESONANT = "off_resonant"


@dataclass(frozen=True)
class AtomSuperposition:
    """Initial internal state ``a|1> + b|2>``."""

    a: complex
    b: complex

    def __post_init__(self):
        norm = abs(self.a) ** 2 + abs(self.b) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"|a|^2 + |b|^2 must be 1, got {norm!r}")

    @classmethod
    def normalized(cls, a: complex, b: complex) -> "AtomSuperposition":
        s = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
        return cls(complex(a) / s, complex(b) / s)


@dataclass(frozen=True)
class CouplingField:
    """Standing-wave couplings ``g1(x) = g01 sin(k1 x)``, ``g2(y) = g02 sin(k2 y)``."""

    g01: float = 1.0
    g02: float = 1.0
    k1: float = TWO_PI
    k2: float = TWO_PI

    def __post_init__(self):
        if self.g01 < 0 or self.g02 < 0:
            raise ValueError("peak couplings must be non-negative")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("wave numbers must be positive")

    def g1(self, x):
        return self.g01 * np.sin(self.k1 * np.asarray(x, dtype=float))

    def g2(self, y):
        return self.g02 * np.sin(self.k2 * np.asarray(y, dtype=float))


@dataclass(frozen=True)
class InteractionParams:
    regime: Regime
    tau: float
    delta: float = 1.0
    delta1: float = 1.0
    delta2: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        if not self.tau > 0:
            raise ValueError("interaction time tau must be positive")
        if self.regime is Regime.RAMAN and self.delta == 0:
            raise ValueError("Raman-resonant regime requires delta != 0")
        if self.regime is Regime.OFF_RESONANT and (self.delta1 == 0 or self.delta2 == 0):
            raise ValueError("off-resonant regime requires delta1 != 0 and delta2 != 0")

    @property
    def detunings(self) -> tuple[float, float]:
        if self.regime is Regime.RAMAN:
            return self.delta, self.delta
        return self.delta1, self.delta2

    def phases(self, coupling: CouplingField) -> tuple[float, float]:
        """Peak interaction phases ``g0i^2 tau / Delta_i``."""
        d1, d2 = self.detunings
        return coupling.g01 ** 2 * self.tau / d1, coupling.g02 ** 2 * self.tau / d2

    @classmethod
    def from_phases(
        cls, regime: Regime | str, eta1: float, eta2: float, coupling: CouplingField,
        tau: float = 1.0,
    ) -> "InteractionParams":
        """Pick detunings so that the peak phases equal ``eta1``, ``eta2``.

        In the Raman regime a single detuning is shared, so ``eta1/eta2`` must
        match ``g01^2/g02^2``.
        """
        regime = Regime(regime)
        d1 = coupling.g01 ** 2 * tau / eta1
        d2 = coupling.g02 ** 2 * tau / eta2
        if regime is Regime.RAMAN:
            if not math.isclose(d1, d2, rel_tol=1e-12):
                raise ValueError("Raman regime shares one detuning; eta ratio must match g0 ratio")
            return cls(regime, tau=tau, delta=d1)
        return cls(regime, tau=tau, delta1=d1, delta2=d2)


@dataclass(frozen=True)
class GaussianBeam:
    """Initial transverse wavefunction, a real Gaussian with the given widths.

    ``sigma_x``/``sigma_y`` are standard deviations of ``|f|^2``.
    """

    sigma_x: float = 0.2
    sigma_y: float = 0.2
    center_x: float = 0.0
    center_y: float = 0.0

    def __post_init__(self):
        if not (self.sigma_x > 0 and self.sigma_y > 0):
            raise ValueError("beam widths must be positive")

    def amplitude(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        fx = (TWO_PI * self.sigma_x ** 2) ** -0.25 * np.exp(
            -((x - self.center_x) ** 2) / (4 * self.sigma_x ** 2)
        )
        fy = (TWO_PI * self.sigma_y ** 2) ** -0.25 * np.exp(
            -((y - self.center_y) ** 2) / (4 * self.sigma_y ** 2)
        )
        return fx * fy

    def density(self, x, y) -> np.ndarray:
        return self.amplitude(x, y) ** 2


@dataclass(frozen=True)
class SpatialGrid:
    nx: int = 201
    ny: int = 201
    x_min: float = -1.0
    x_max: float = 1.0
    y_min: float = -1.0
    y_max: float = 1.0

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError("grid needs at least two points per axis")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("grid bounds must be increasing")

    @classmethod
    def symmetric(cls, half_width: float, n: int = 201, half_height: float | None = None,
                  ny: int | None = None) -> "SpatialGrid":
        hh = half_width if half_height is None else half_height
        return cls(n, n if ny is None else ny, -half_width, half_width, -hh, hh)

    @classmethod
    def covering(cls, beam: GaussianBeam, n: int = 201, n_sigma: float = 5.0) -> "SpatialGrid":
        """Centered grid spanning ``n_sigma`` standard deviations of the beam."""
        hx, hy = n_sigma * beam.sigma_x, n_sigma * beam.sigma_y
        return cls(n, n, beam.center_x - hx, beam.center_x + hx,
                   beam.center_y - hy, beam.center_y + hy)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.ny)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / (self.ny - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return self.nx, self.ny

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def covers(self, beam: GaussianBeam, n_sigma: float = 4.0) -> bool:
        return (
            self.x_min <= beam.center_x - n_sigma * beam.sigma_x
            and self.x_max >= beam.center_x + n_sigma * beam.sigma_x
            and self.y_min <= beam.center_y - n_sigma * beam.sigma_y
            and self.y_max >= beam.center_y + n_sigma * beam.sigma_y
        )


RowFn = Callable[[int], np.ndarray]


@dataclass
class AmplitudeField:
    """Amplitudes ``Phi[i, n, m, ix, iy]``.

    Either backed by a materialized ``data`` array, or by a row function
    returning ``Phi[:, n]`` (shape ``(2, m_max+1, nx, ny)``) on demand. Large
    grids should stay row-backed; consumers iterate with :meth:`rows`.
    """

    grid: SpatialGrid
    n_max: int
    m_max: int
    row_fn: RowFn | None = None
    _data: np.ndarray | None = dc_field(default=None, repr=False)
    threads: int = 1

    @property
    def data(self) -> np.ndarray:
        if self._data is None:
            self._data = np.stack([row for _, row in self.rows()], axis=1)
        return self._data

    @property
    def materialized(self) -> bool:
        return self._data is not None

    def row(self, n: int) -> np.ndarray:
        if self._data is not None:
            return self._data[:, n]
        return self.row_fn(n)

    def rows(self) -> Iterator[tuple[int, np.ndarray]]:
        """Yield ``(n, Phi[:, n])`` in ascending ``n``.

        With ``threads > 1`` rows are computed concurrently but still yielded
        in order, so any reduction over them is order-stable.
        """
        ns = range(self.n_max + 1)
        if self._data is not None or self.threads <= 1:
            for n in ns:
                yield n, self.row(n)
            return
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            # bounded lookahead keeps peak memory near threads * row size
            pending = []
            it = iter(ns)
            for n in it:
                pending.append((n, pool.submit(self.row_fn, n)))
                if len(pending) >= self.threads:
                    break
            while pending:
                n, fut = pending.pop(0)
                nxt = next(it, None)
                if nxt is not None:
                    pending.append((nxt, pool.submit(self.row_fn, nxt)))
                yield n, fut.result()

    def contract(self, w1: np.ndarray, w2: np.ndarray) -> np.ndarray:
        """``psi[i] = sum_{n,m} Phi[i,n,m] w1[n] w2[m]``, shape ``(2, nx, ny)``.

        Summation runs over ascending ``n`` with a fixed-order reduction over
        ``m``, independent of thread count.
        """
        w1 = np.asarray(w1)[: self.n_max + 1]
        w2 = np.asarray(w2)[: self.m_max + 1]
        out = np.zeros((2,) + self.grid.shape, dtype=complex)
        # explicit loops instead of tensordot: BLAS may reorder the reduction
        for n, row in self.rows():
            acc = np.zeros_like(out)
            for m in range(self.m_max + 1):
                acc += w2[m] * row[:, m]
            out += w1[n] * acc
        return out

    def density(self) -> np.ndarray:
        """``sum_{i,n,m} |Phi|^2`` at every grid point."""
        out = np.zeros(self.grid.shape)
        for _, row in self.rows():
            out += np.sum(np.abs(row) ** 2, axis=(0, 1))
        return out

    def norm(self) -> float:
        return float(np.sum(self.density()) * self.grid.dx * self.grid.dy)


def rabi(n, m, g1, g2):
    """Position-dependent Rabi frequency ``g1^2 n + g2^2 m``."""
    return np.asarray(g1) ** 2 * n + np.asarray(g2) ** 2 * m


def _phase_step(omega: np.ndarray, t_over_delta: float) -> np.ndarray:
    """``(exp(-i s omega) - 1) / omega`` with ``s = t/Delta``.

    Written as ``-i s sinc(s omega / 2) e^{-i s omega / 2}`` which is exact at
    ``omega = 0`` (limit ``-i s``) and free of cancellation near it.
    """
    half = 0.5 * t_over_delta * omega
    return -1j * t_over_delta * np.sinc(half / math.pi) * np.exp(-1j * half)


def _check_regime(params: InteractionParams, expected: Regime) -> None:
    if params.regime is not expected:
        raise ValueError(f"expected {expected.value} parameters, got {params.regime.value}")


def _setup(atom, field, coupling, beam, grid, trunc):
    xg, yg = grid.mesh()
    g1 = coupling.g1(xg)
    g2 = coupling.g2(yg)
    f = beam.amplitude(xg, yg)
    n_max = trunc.n_max
    # one extra index so the Raman partners C_{n-1,m+1}, C_{n+1,m-1} exist at the edge
    c1 = coherent_vector(field.alpha1, n_max + 1)
    c2 = coherent_vector(field.alpha2, n_max + 1)
    return g1, g2, f, n_max, c1, c2


def raman_row_fn(atom: AtomSuperposition, field: TwoModeCoherent, coupling: CouplingField,
                 params: InteractionParams, beam: GaussianBeam, grid: SpatialGrid,
                 trunc: FockTruncation) -> RowFn:
    """Row generator for the Raman-resonant closed form."""
    _check_regime(params, Regime.RAMAN)
    g1, g2, f, n_max, c1, c2 = _setup(atom, field, coupling, beam, grid, trunc)
    s = params.tau / params.delta
    a, b = complex(atom.a), complex(atom.b)
    g1sq, g2sq, g12 = g1 * g1, g2 * g2, g1 * g2
    m = np.arange(n_max + 1)
    mb = m[:, None, None]  # broadcast against the grid

    def row(n: int) -> np.ndarray:
        c_nm = (c1[n] * c2[: n_max + 1])[:, None, None]
        # channel |1>: partner |2, n-1, m+1>
        c_part1 = (c1[n - 1] * c2[1: n_max + 2])[:, None, None] if n > 0 else 0.0
        omega1 = g1sq * n + g2sq * (mb + 1)
        w1 = g1sq * n * c_nm * a + g12 * np.sqrt(n * (mb + 1)) * c_part1 * b
        phi1 = a * c_nm + w1 * _phase_step(omega1, s)
        # channel |2>: partner |1, n+1, m-1>
        c_part2 = np.zeros_like(c_nm)
        c_part2[1:] = (c1[n + 1] * c2[:n_max])[:, None, None]
        omega2 = g1sq * (n + 1) + g2sq * mb
        w2 = g12 * np.sqrt((n + 1) * mb) * c_part2 * a + g2sq * mb * c_nm * b
        phi2 = b * c_nm + w2 * _phase_step(omega2, s)
        return np.stack([phi1 * f, phi2 * f])

    return row


def offresonant_row_fn(atom: AtomSuperposition, field: TwoModeCoherent, coupling: CouplingField,
                       params: InteractionParams, beam: GaussianBeam, grid: SpatialGrid,
                       trunc: FockTruncation) -> RowFn:
    """Row generator for the off-resonant case: pure phase per channel."""
    _check_regime(params, Regime.OFF_RESONANT)
    g1, g2, f, n_max, c1, c2 = _setup(atom, field, coupling, beam, grid, trunc)
    p1 = params.tau * g1 * g1 / params.delta1
    p2 = params.tau * g2 * g2 / params.delta2
    a, b = complex(atom.a), complex(atom.b)
    m = np.arange(n_max + 1)[:, None, None]
    chan2 = b * np.exp(-1j * p2 * m) * f  # independent of n

    def row(n: int) -> np.ndarray:
        c_nm = (c1[n] * c2[: n_max + 1])[:, None, None]
        phi1 = a * c_nm * np.exp(-1j * p1 * n) * f
        phi2 = c_nm * chan2
        return np.stack([np.broadcast_to(phi1, phi2.shape), phi2])

    return row


def _build(row_fn: RowFn, grid, trunc, materialize, threads) -> AmplitudeField:
    amps = AmplitudeField(grid, trunc.n_max, trunc.n_max, row_fn=row_fn, threads=threads)
    if materialize:
        amps.data  # noqa: B018 - forces evaluation
    return amps


def amplitudes_raman(atom, field, coupling, params, beam, grid, trunc, *,
                     materialize: bool = True, threads: int = 1) -> AmplitudeField:
    """Closed-form amplitudes for the two-photon resonant Hamiltonian."""
    return _build(raman_row_fn(atom, field, coupling, params, beam, grid, trunc),
                  grid, trunc, materialize, threads)


def amplitudes_offresonant(atom, field, coupling, params, beam, grid, trunc, *,
                           materialize: bool = True, threads: int = 1) -> AmplitudeField:
    """Closed-form amplitudes when Raman transitions are suppressed."""
    return _build(offresonant_row_fn(atom, field, coupling, params, beam, grid, trunc),
                  grid, trunc, materialize, threads)


def amplitudes(atom, field, coupling, params, beam, grid, trunc, **kw) -> AmplitudeField:
    if params.regime is Regime.RAMAN:
        return amplitudes_raman(atom, field, coupling, params, beam, grid, trunc, **kw)
    return amplitudes_offresonant(atom, field, coupling, params, beam, grid, trunc, **kw)


class OracleError(RuntimeError):
    pass


@numba.njit(cache=True)
def _apply_h(psi, k, c, out, e1, e2, kx, up, down, raman, scale):
    """``out = scale * H (psi + c k)`` at one position, without temporaries.

    ``psi[i, n, m]`` lives on an ``N x N`` box; ``up``/``down`` hold the
    ladder-operator square roots for the Raman cross terms.
    """
    N = psi.shape[1]
    for n in range(N):
        for m in range(N):
            v1 = psi[0, n, m] + c * k[0, n, m]
            v2 = psi[1, n, m] + c * k[1, n, m]
            out[0, n, m] = scale * (e1 * n) * v1
            out[1, n, m] = scale * (e2 * m) * v2
    if raman:
        for n in range(N):
            for m in range(N):
                # a1^dag a2 sigma_12 : |2, n-1, m+1> -> sqrt(n (m+1)) |1, n, m>
                if n >= 1 and m + 1 < N:
                    v = psi[1, n - 1, m + 1] + c * k[1, n - 1, m + 1]
                    out[0, n, m] += scale * kx * up[n, m] * v
                # a1 a2^dag sigma_21 : |1, n+1, m-1> -> sqrt((n+1) m) |2, n, m>
                if m >= 1 and n + 1 < N:
                    v = psi[0, n + 1, m - 1] + c * k[0, n + 1, m - 1]
                    out[1, n, m] += scale * kx * down[n, m] * v


@numba.njit(cache=True)
def _rk4(psi0, g1, g2, raman, d1, d2, tau, nsteps):
    """Classic RK4 for ``psi' = -i H psi``; positions along the leading axis."""
    P, _, N, _ = psi0.shape
    up = np.zeros((N, N))
    down = np.zeros((N, N))
    for n in range(N):
        for m in range(N):
            up[n, m] = math.sqrt(n * (m + 1.0))
            down[n, m] = math.sqrt((n + 1.0) * m)
    out = np.empty_like(psi0)
    h = tau / nsteps
    mih = -1j * h
    k1 = np.empty((2, N, N), dtype=np.complex128)
    k2 = np.empty_like(k1)
    k3 = np.empty_like(k1)
    k4 = np.empty_like(k1)
    for p in range(P):
        psi = psi0[p].copy()
        e1 = g1[p] * g1[p] / d1
        e2 = g2[p] * g2[p] / d2
        kx = g1[p] * g2[p] / d1
        for _ in range(nsteps):
            _apply_h(psi, psi, 0.0, k1, e1, e2, kx, up, down, raman, mih)
            _apply_h(psi, k1, 0.5, k2, e1, e2, kx, up, down, raman, mih)
            _apply_h(psi, k2, 0.5, k3, e1, e2, kx, up, down, raman, mih)
            _apply_h(psi, k3, 1.0, k4, e1, e2, kx, up, down, raman, mih)
            for i in range(2):
                for n in range(N):
                    for m in range(N):
                        psi[i, n, m] += (
                            k1[i, n, m] + 2.0 * (k2[i, n, m] + k3[i, n, m]) + k4[i, n, m]
                        ) / 6.0
        out[p] = psi
    return out


def integrate_schrodinger(atom, field, coupling, params, x, y, steps: int | None = None, *,
                          n_max: int = 20, tol: float = 1e-10, max_doublings: int = 8,
                          ) -> np.ndarray:
    """RK4 integration of the truncated Schrodinger equation at fixed ``(x, y)``.

    Independent of the closed form: it only applies the Hamiltonian. The box
    is one photon larger than ``n_max`` so every block touching the returned
    indices is complete. Starting from ``steps`` (default: about fifteen per
    radian of the largest phase in the box at that point), the step count is
    doubled until two successive results agree to ``tol``. ``x``, ``y`` may
    be arrays; each point is integrated and converged separately.

    Returns ``psi[i, n, m, ...]`` for ``n, m <= n_max``, without the beam
    envelope ``f(x, y)``.
    """
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    shape = x.shape
    g1 = np.ascontiguousarray(coupling.g1(x).ravel())
    g2 = np.ascontiguousarray(coupling.g2(y).ravel())
    N = n_max + 2
    raman = params.regime is Regime.RAMAN
    d1, d2 = (float(d) for d in params.detunings)
    c = np.outer(coherent_vector(field.alpha1, N - 1), coherent_vector(field.alpha2, N - 1))
    psi0 = np.empty((g1.size, 2, N, N), dtype=complex)
    psi0[:, 0] = complex(atom.a) * c
    psi0[:, 1] = complex(atom.b) * c

    def finish(psi):
        psi = psi[:, :, : n_max + 1, : n_max + 1]
        return np.moveaxis(psi, 0, -1).reshape((2, n_max + 1, n_max + 1) + shape)

    out = np.empty_like(psi0)
    for p in range(g1.size):
        out[p] = _integrate_point(psi0[p:p + 1], g1[p:p + 1], g2[p:p + 1], raman, d1, d2,
                                  float(params.tau), steps, n_max, tol, max_doublings)
    return finish(out)


def _integrate_point(psi0, g1, g2, raman, d1, d2, tau, steps, n_max, tol, max_doublings):
    N = psi0.shape[-1]
    bound = (g1[0] ** 2 / abs(d1) + g2[0] ** 2 / abs(d2)) * (N - 1)
    if bound == 0.0:
        return psi0[0]
    if steps is None:
        steps = max(16, math.ceil(15 * bound * tau))
    prev = _rk4(psi0, g1, g2, raman, d1, d2, tau, steps)
    err = np.inf
    for _ in range(max_doublings):
        steps *= 2
        cur = _rk4(psi0, g1, g2, raman, d1, d2, tau, steps)
        err = np.max(np.abs(cur - prev)[..., : n_max + 1, : n_max + 1])
        if err < tol:
            return cur[0]
        prev = cur
    raise OracleError(f"RK4 did not converge to {tol} after {steps} steps (last change {err:.3e})")
