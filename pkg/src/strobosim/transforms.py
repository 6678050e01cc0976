"""Elementary evolutions: representation change, nonlinear kick, rotation, damping.

Every transform is a pure function returning a fresh object.

Two representations of the same state are used:

* the Wigner function ``W(x, p)`` on the square grid;
* the position density matrix ``<u|rho|v>`` on a padded axis with the same
  spacing (``DENSITY_PAD`` times the extent, so that coherences of states that
  fill the Wigner grid are not clipped).

Conversions follow ``W(x, p) = 1/(2 pi) int exp(-i p y) <x+y|rho|x-y> dy`` evaluated
by quadrature on the grid.  The protocol never goes through the position grid:
:func:`kick_wigner` applies the same phase to ``rho(x+y, x-y)`` directly, using
the y-grid conjugate to the p-axis, which is exact and norm preserving.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft

from .errors import HermiticityError, ValidationError
from .grid import GridSpec
from .states import WignerState

__all__ = [
    "DENSITY_PAD",
    "PositionDensityMatrix",
    "ThermalKernelParams",
    "AliasingWarning",
    "wigner_to_density",
    "density_to_wigner",
    "nonlinear_kick",
    "kick_wigner",
    "kick_phase",
    "rotate",
    "damp",
]

DENSITY_PAD = 2
HERMITICITY_TOL = 1e-8


class AliasingWarning(RuntimeWarning):
    """A kick's phase gradient is under-resolved at the grid edge."""


@dataclass(frozen=True, eq=False)
class PositionDensityMatrix:
    """``<u|rho|v>`` sampled on ``grid.padded(pad).axis`` in both indices.

    ``grid`` is the phase-space grid of the state this matrix represents.
    """

    grid: GridSpec
    values: np.ndarray
    pad: int = DENSITY_PAD

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        m = self.grid.n_points * self.pad
        if self.pad < 1 or int(self.pad) != self.pad:
            raise ValidationError(f"pad must be a positive integer, got {self.pad}")
        if values.shape != (m, m):
            raise ValidationError(f"density values shape {values.shape} does not match ({m}, {m})")
        values = values.copy() if values is self.values else values
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def axis(self) -> np.ndarray:
        return self.grid.padded(self.pad).axis

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.values)) * self.grid.spacing)

    @property
    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.values - self.values.conj().T)))

    @property
    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.values)).copy()


@dataclass(frozen=True)
class ThermalKernelParams:
    """Per-period Gaussian smoothing of the Wigner function.

    ``kernel_variance`` is the full noise variance added to each quadrature in
    one mechanical period.  When built with :meth:`from_bath` it equals
    ``(2 n_th + 1) * 2 pi * eta_m / Omega_m``.
    """

    kernel_variance: float = 0.0
    n_th: float | None = None
    eta_over_omega: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.kernel_variance) or self.kernel_variance < 0:
            raise ValidationError(f"kernel_variance must be >= 0, got {self.kernel_variance}")

    @classmethod
    def from_bath(cls, n_th: float, eta_over_omega: float) -> "ThermalKernelParams":
        if n_th < 0 or eta_over_omega < 0:
            raise ValidationError("n_th and eta_over_omega must be >= 0")
        variance = (2 * n_th + 1) * 2 * math.pi * eta_over_omega
        return cls(variance, n_th, eta_over_omega)


# --------------------------------------------------------------------------
# Wigner <-> position density matrix


@lru_cache(maxsize=8)
def _chord_kernels(grid: GridSpec, pad: int) -> tuple[np.ndarray, np.ndarray]:
    """``exp(i p_j y)`` for y on integer and half-integer multiples of the spacing."""
    m = grid.n_points * pad
    d = grid.spacing
    n = np.arange(m) - m // 2
    p = grid.axis[:, None]
    whole = np.exp(1j * p * (n * d)[None, :])
    half = np.exp(1j * p * ((n + 0.5) * d)[None, :])
    whole.setflags(write=False)
    half.setflags(write=False)
    return whole, half


def _shift_half_sample(values: np.ndarray, spacing: float) -> np.ndarray:
    """Band-limited ``W(x + d/2, p)`` along axis 0."""
    n = values.shape[0]
    k = 2 * math.pi * fft.rfftfreq(n, spacing)
    spectrum = fft.rfft(values, axis=0) * np.exp(0.5j * k * spacing)[:, None]
    return fft.irfft(spectrum, n=n, axis=0)


def wigner_to_density(state: WignerState, pad: int = DENSITY_PAD) -> PositionDensityMatrix:
    """Position density matrix from ``<x+y|rho|x-y> = int exp(i p y) W(x, p) dp``.

    Entries whose centre ``(u+v)/2`` falls between grid rows use the
    band-limited half-sample interpolation of ``W`` along x.  Entries whose
    centre lies outside the Wigner grid are zero.
    """
    grid = state.grid
    n, d = grid.n_points, grid.spacing
    m = n * pad
    whole, half = _chord_kernels(grid, pad)
    w = state.values
    w_half = _shift_half_sample(w, d)
    chord_whole = d * (w @ whole)
    chord_half = d * (w_half @ half)

    a = np.arange(m)[:, None]
    b = np.arange(m)[None, :]
    s = a + b
    row = s // 2 - (pad - 1) * n // 2
    col = (a - b) // 2 + m // 2
    inside = (row >= 0) & (row < n)
    row_c = np.clip(row, 0, n - 1)
    values = np.where(s % 2 == 0, chord_whole[row_c, col], chord_half[row_c, col])
    values = np.where(inside, values, 0.0)
    values = 0.5 * (values + values.conj().T)
    return PositionDensityMatrix(grid, values, pad)


def density_to_wigner(rho: PositionDensityMatrix) -> WignerState:
    """Wigner function ``1/(2 pi) sum_n d exp(-i p n d) rho(x + n d, x - n d)``.

    Raises:
        HermiticityError: if the input deviates from Hermitian by more than 1e-8.
    """
    defect = rho.hermiticity_defect
    if defect > HERMITICITY_TOL:
        raise HermiticityError(f"density matrix Hermiticity defect {defect:.3e} exceeds {HERMITICITY_TOL:g}")
    grid, pad = rho.grid, rho.pad
    n, d = grid.n_points, grid.spacing
    m = n * pad
    whole, _ = _chord_kernels(grid, pad)

    centre = np.arange(n)[:, None] + (pad - 1) * n // 2
    chord = (np.arange(m) - m // 2)[None, :]
    a = centre + chord
    b = centre - chord
    valid = (a >= 0) & (a < m) & (b >= 0) & (b < m)
    gathered = np.where(valid, rho.values[np.clip(a, 0, m - 1), np.clip(b, 0, m - 1)], 0.0)
    w = (d / (2 * math.pi)) * (gathered @ whole.conj().T)
    residue = float(np.max(np.abs(w.imag)))
    return WignerState(grid, w.real, f"density_to_wigner imag_residue={residue:.3e}")


# --------------------------------------------------------------------------
# nonlinear kick


def _check_kick_resolution(grid: GridSpec, pulse_gain: float, order: int) -> None:
    # phase change per sample of exp(i g/2 x^k) at the grid edge
    gradient = 0.5 * abs(pulse_gain) * order * grid.half_extent ** (order - 1) * grid.spacing
    if gradient > math.pi / 2:
        warnings.warn(
            f"kick phase gradient {gradient:.3g} rad/sample exceeds pi/2 at the grid edge",
            AliasingWarning,
            stacklevel=3,
        )


def _check_order(order: int) -> int:
    if int(order) != order or order < 3:
        raise ValidationError(f"order must be an integer >= 3, got {order}")
    return int(order)


def kick_phase(u, v, pulse_gain: float, order: int = 3):
    """Phase ``g/2 (u^k - v^k)`` picked up by ``<u|rho|v>`` under a kick."""
    return 0.5 * pulse_gain * (u ** order - v ** order)


def nonlinear_kick(rho: PositionDensityMatrix, pulse_gain: float, order: int = 3) -> PositionDensityMatrix:
    """Instantaneous nonlinear pulse in the position basis.

    ``rho[u, v] *= exp(i g/2 (u^k - v^k))``; diagonal and trace are untouched.
    """
    order = _check_order(order)
    if pulse_gain == 0:
        return PositionDensityMatrix(rho.grid, rho.values, rho.pad)
    _check_kick_resolution(rho.grid, pulse_gain, order)
    x = rho.axis
    phase = kick_phase(x[:, None], x[None, :], pulse_gain, order)
    return PositionDensityMatrix(rho.grid, rho.values * np.exp(1j * phase), rho.pad)


@lru_cache(maxsize=32)
def _chord_phase_factor(grid: GridSpec, pulse_gain: float, order: int) -> np.ndarray:
    x = grid.axis[:, None]
    # rfft along p samples rho(x - y, x + y) at y_k = k pi / L
    y = (math.pi / grid.half_extent) * np.arange(grid.n_points // 2 + 1)[None, :]
    factor = np.exp(-1j * kick_phase(x + y, x - y, pulse_gain, order))
    factor.setflags(write=False)
    return factor


def kick_wigner(state: WignerState, pulse_gain: float, order: int = 3) -> WignerState:
    """The nonlinear kick applied directly to a Wigner function.

    Equivalent to ``density_to_wigner(nonlinear_kick(wigner_to_density(W)))`` but
    computed in the chord representation on the DFT grid conjugate to p, so it
    is exactly invertible and kicks compose by adding gains.
    """
    order = _check_order(order)
    if pulse_gain == 0:
        return state.with_values(state.values)
    _check_kick_resolution(state.grid, pulse_gain, order)
    n = state.grid.n_points
    spectrum = fft.rfft(state.values, axis=1)
    spectrum *= _chord_phase_factor(state.grid, float(pulse_gain), order)
    return state.with_values(fft.irfft(spectrum, n=n, axis=1))


# --------------------------------------------------------------------------
# rotation


@lru_cache(maxsize=8)
def _wavenumbers(grid: GridSpec) -> np.ndarray:
    k = 2 * math.pi * fft.rfftfreq(grid.n_points, grid.spacing)
    k.setflags(write=False)
    return k


@lru_cache(maxsize=16)
def _shear_factor(grid: GridSpec, c: float) -> np.ndarray:
    # rows: wavenumber along the sheared axis; columns: the other coordinate
    factor = np.exp(1j * _wavenumbers(grid)[:, None] * (c * grid.axis[None, :]))
    factor.setflags(write=False)
    return factor


def _shear_x(values: np.ndarray, grid: GridSpec, c: float) -> np.ndarray:
    """``W(x + c p, p)``."""
    spectrum = fft.rfft(values, axis=0) * _shear_factor(grid, c)
    return fft.irfft(spectrum, n=grid.n_points, axis=0)


def _shear_p(values: np.ndarray, grid: GridSpec, c: float) -> np.ndarray:
    """``W(x, p + c x)``."""
    spectrum = fft.rfft(values, axis=1) * _shear_factor(grid, c).T
    return fft.irfft(spectrum, n=grid.n_points, axis=1)


def _quarter_turns(values: np.ndarray, turns: int) -> np.ndarray:
    """Exact rotation by ``turns * pi/2``: ``W_f(x, p) = W_i(-p, x)`` per turn."""
    n = values.shape[0]
    mirror = (-np.arange(n)) % n  # index of -x on the half-open grid
    for _ in range(turns % 4):
        values = values.T[:, mirror]
    return values


def rotate(state: WignerState, angle: float) -> WignerState:
    """``W_f(x, p) = W_i(x cos a - p sin a, p cos a + x sin a)``.

    Quarter turns are exact index permutations; the residual angle in
    ``[-pi/4, pi/4]`` is applied as three FFT shears (x, p, x).
    """
    if not math.isfinite(angle):
        raise ValidationError(f"angle must be finite, got {angle}")
    angle = math.remainder(angle, 2 * math.pi)
    turns = round(angle / (math.pi / 2))
    residual = angle - turns * (math.pi / 2)
    values = _quarter_turns(state.values, turns)
    if residual != 0.0:
        t = math.tan(residual / 2)
        grid = state.grid
        values = _shear_x(values, grid, -t)
        values = _shear_p(values, grid, math.sin(residual))
        values = _shear_x(values, grid, -t)
    elif turns % 4 == 0:
        values = values.copy()
    return state.with_values(values)


# --------------------------------------------------------------------------
# damping


@lru_cache(maxsize=32)
def _gaussian_filter(grid: GridSpec, variance: float) -> np.ndarray:
    kx = 2 * math.pi * fft.fftfreq(grid.n_points, grid.spacing)[:, None]
    kp = _wavenumbers(grid)[None, :]
    filt = np.exp(-0.5 * variance * (kx ** 2 + kp ** 2))
    filt.setflags(write=False)
    return filt


def damp(state: WignerState, kernel: ThermalKernelParams | float) -> WignerState:
    """Convolve ``W`` with the isotropic Gaussian of variance ``kernel_variance``.

    Done as a product with the kernel's characteristic function, so narrow
    kernels (far below the grid spacing) are handled without sampling them.
    """
    variance = kernel.kernel_variance if isinstance(kernel, ThermalKernelParams) else float(kernel)
    if not math.isfinite(variance) or variance < 0:
        raise ValidationError(f"kernel_variance must be >= 0, got {variance}")
    if variance == 0:
        return state.with_values(state.values)
    grid = state.grid
    spectrum = fft.rfft2(state.values) * _gaussian_filter(grid, variance)
    return state.with_values(fft.irfft2(spectrum, s=(grid.n_points, grid.n_points)))
