"""
    flist.grid
    ----------

    This module provides the numeric substrate shared by every other module:
    uniform spatial grids, sampled complex fields, the spectral cross contour
    and discretised Sobolev-type norms. Spectral (FFT) helpers for derivatives,
    sub-cell shifts and antiderivatives live here too.
"""
from collections.abc import Callable
from dataclasses import dataclass, field
import logging
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid
from scipy.linalg import lstsq

from flist.config import ValidationError

logger = logging.getLogger("flist")

DECAY_TOL = 1e-8


class NumericalError(Exception):
    """Base class of every numerical failure raised by flist."""


class GridSpecError(ValidationError):
    """Raised when a grid or contour is specified inconsistently."""


class DecayError(NumericalError):
    """Raised when a field does not decay at the grid ends."""


def _frozen_array(values, dtype=complex) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class SpatialGrid:
    """A uniform grid on ``[x_min, x_max]`` including both end points."""
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise GridSpecError("Grid bounds must be finite")
        if self.x_min >= self.x_max:
            raise GridSpecError(f"Inverted grid bounds: [{self.x_min}, {self.x_max}]")
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise GridSpecError(f"Grid needs at least 2 points, got {self.n_points}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers of the discrete Fourier transform over the grid."""
        return 2 * np.pi * np.fft.fftfreq(self.n_points, self.dx)

    def index_nearest(self, x: float) -> int:
        """Return the index of the node closest to ``x``."""
        return int(np.clip(round((x - self.x_min) / self.dx), 0, self.n_points - 1))

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "n_points": self.n_points}


def make_grid(x_min: float, x_max: float, n: int) -> SpatialGrid:
    """Construct a uniform grid.

    :param x_min: The left end point.
    :param x_max: The right end point, included in the grid.
    :param n: The number of nodes, at least 2.

    :raise flist.grid.GridSpecError: Raised on inverted bounds or ``n < 2``.

    :return: The grid.
    """
    grid = SpatialGrid(float(x_min), float(x_max), int(n))
    logger.debug("Grid [%s, %s] with %s points, dx=%.6g", x_min, x_max, n, grid.dx)
    return grid


@dataclass(frozen=True, eq=False)
class SampledPotential:
    """A complex field ``u`` sampled on a uniform grid, optionally with ``u_x``."""
    grid: SpatialGrid
    values: np.ndarray
    derivative_values: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        values = _frozen_array(self.values)
        if values.shape != (self.grid.n_points,):
            raise GridSpecError(
                f"Field has shape {values.shape}, grid has {self.grid.n_points} points"
            )
        object.__setattr__(self, "values", values)
        if self.derivative_values is not None:
            derivative = _frozen_array(self.derivative_values)
            if derivative.shape != values.shape:
                raise GridSpecError("Derivative samples do not match the field samples")
            object.__setattr__(self, "derivative_values", derivative)

    @classmethod
    def from_function(
            cls, grid: SpatialGrid, func: Callable[[np.ndarray], np.ndarray],
            derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None
    ) -> 'SampledPotential':
        """Sample ``func`` (and optionally its derivative) on ``grid``."""
        x = grid.nodes
        return cls(grid, func(x), None if derivative is None else derivative(x))

    @classmethod
    def zeros(cls, grid: SpatialGrid) -> 'SampledPotential':
        return cls(grid, np.zeros(grid.n_points, dtype=complex),
                   np.zeros(grid.n_points, dtype=complex))

    def with_derivative(self, method: str = "spectral") -> 'SampledPotential':
        """Return this field with ``derivative_values`` filled, computing them if needed."""
        if self.derivative_values is not None:
            return self
        return SampledPotential(
            self.grid, self.values, spectral_derivative(self.values, self.grid, method=method)
        )

    def ux(self, method: str = "spectral") -> np.ndarray:
        """The samples of ``u_x``, computed on the fly when absent."""
        if self.derivative_values is not None:
            return self.derivative_values
        return spectral_derivative(self.values, self.grid, method=method)


@dataclass(frozen=True, eq=False)
class SpectralContour:
    """Nodes on the cross ``R ∪ iR``. ``imag_nodes`` holds ``s`` for ``k = i s``."""
    real_nodes: np.ndarray
    imag_nodes: np.ndarray

    def __post_init__(self):
        for name in ("real_nodes", "imag_nodes"):
            nodes = np.sort(_frozen_array(getattr(self, name), float))
            nodes.setflags(write=False)
            if np.any(nodes == 0):
                raise GridSpecError(f"Contour {name} must exclude k = 0")
            atol = 1e-14 * (1 + np.abs(nodes).max(initial=0))
            if not np.allclose(nodes, -nodes[::-1], rtol=0, atol=atol):
                raise GridSpecError(f"Contour {name} must be symmetric under k -> -k")
            object.__setattr__(self, name, nodes)

    @property
    def nodes(self) -> np.ndarray:
        """All nodes as complex ``k``, real axis first."""
        return np.concatenate([self.real_nodes.astype(complex), 1j * self.imag_nodes])

    @property
    def on_real_axis(self) -> np.ndarray:
        """Boolean mask aligned with :attr:`nodes`."""
        return np.concatenate([np.ones(self.real_nodes.size, bool),
                               np.zeros(self.imag_nodes.size, bool)])

    def __len__(self):
        return self.real_nodes.size + self.imag_nodes.size


@dataclass(frozen=True)
class SobolevReport:
    l2_norm: float
    h1_norm: float
    weighted_h33_estimate: float


def check_decay(u: SampledPotential, decay_tol: float = DECAY_TOL) -> None:
    """Raise :class:`DecayError` when ``|u|`` at either grid end is not below ``decay_tol``."""
    ends = (abs(u.values[0]), abs(u.values[-1]))
    if max(ends) >= decay_tol:
        raise DecayError(
            f"Field does not decay at the grid ends: |u|={ends[0]:.3g}, {ends[1]:.3g} "
            f"(decay_tol={decay_tol:.3g})"
        )


def _spectral_multiplier(grid: SpatialGrid, order: int) -> np.ndarray:
    kappa = grid.wavenumbers
    multiplier = (1j * kappa) ** order
    if grid.n_points % 2 == 0:
        multiplier[grid.n_points // 2] = 0
    return multiplier


def spectral_derivative(
        values: np.ndarray, grid: SpatialGrid, order: int = 1,
        method: str = "spectral") -> np.ndarray:
    """Differentiate samples ``order`` times.

    The spectral branch treats the samples as one period of a band-limited
    field and zeroes the Nyquist mode. ``method="finite_difference"`` uses
    second-order central differences instead.
    """
    values = np.asarray(values, dtype=complex)
    if method == "finite_difference":
        result = values
        for _ in range(order):
            result = np.gradient(result, grid.dx, edge_order=2)
        return result
    if method != "spectral":
        raise GridSpecError(f"Unknown derivative method: {method}")
    return np.fft.ifft(_spectral_multiplier(grid, order) * np.fft.fft(values))


def derivative(u: SampledPotential, method: str = "spectral") -> SampledPotential:
    """Return ``u_x`` as a new field on the same grid."""
    return SampledPotential(u.grid, spectral_derivative(u.values, u.grid, method=method))


def shifted(values: np.ndarray, grid: SpatialGrid, shift: float) -> np.ndarray:
    """Evaluate the band-limited interpolant of ``values`` at ``x + shift``."""
    phase = np.exp(1j * grid.wavenumbers * shift)
    if grid.n_points % 2 == 0:
        phase[grid.n_points // 2] = 0
    return np.fft.ifft(phase * np.fft.fft(np.asarray(values, dtype=complex)))


def antiderivative(values: np.ndarray, grid: SpatialGrid, shift: float = 0.0) -> np.ndarray:
    """Return ``∫_{x_min}^{x + shift} v`` at every node.

    The mean of ``v`` integrates to a linear ramp; the zero-mean remainder is
    integrated spectrally.
    """
    spectrum = np.fft.fft(np.asarray(values, dtype=complex))
    n = grid.n_points
    mean = spectrum[0] / n
    kappa = grid.wavenumbers
    inverse = np.zeros(n, dtype=complex)
    nonzero = kappa != 0
    inverse[nonzero] = 1 / (1j * kappa[nonzero])
    if n % 2 == 0:
        inverse[n // 2] = 0
    periodic_part = np.fft.ifft(spectrum * inverse)
    base = periodic_part[0]
    if shift:
        periodic_part = np.fft.ifft(spectrum * inverse * np.exp(1j * kappa * shift))
    return mean * (grid.nodes + shift - grid.x_min) + periodic_part - base


def resample(u: SampledPotential, grid: SpatialGrid, chunk: int = 512) -> SampledPotential:
    """Band-limited (trigonometric) interpolation of ``u`` onto another uniform grid.

    Points of ``grid`` outside the original domain are set to zero.
    """
    spectrum = np.fft.fft(u.values) / u.grid.n_points
    kappa = u.grid.wavenumbers
    if u.grid.n_points % 2 == 0:
        spectrum[u.grid.n_points // 2] = 0
    target = grid.nodes
    result = np.zeros(target.size, dtype=complex)
    inside = (target >= u.grid.x_min - 1e-12) & (target <= u.grid.x_max + 1e-12)
    offsets = target[inside] - u.grid.x_min
    evaluated = np.empty(offsets.size, dtype=complex)
    for start in range(0, offsets.size, chunk):
        block = offsets[start:start + chunk]
        evaluated[start:start + chunk] = np.exp(1j * np.outer(block, kappa)) @ spectrum
    result[inside] = evaluated
    logger.debug("Resampled field from %s to %s points", u.grid.n_points, grid.n_points)
    return SampledPotential(grid, result)


def fit_uniform(x: np.ndarray, values: np.ndarray, grid: SpatialGrid,
                band: float = 2 / 3) -> SampledPotential:
    """Band-limited least-squares fit of samples at non-uniform nodes ``x``.

    The field is expanded in the Fourier modes of ``grid`` with
    ``|kappa| <= band * max|kappa|`` and the expansion is evaluated on the
    grid nodes. The nodes must lie inside the grid's domain.

    :raise flist.grid.GridSpecError: Raised if the fit has more modes than samples.
    """
    x = np.asarray(x, dtype=float)
    kappa = grid.wavenumbers
    kept = kappa[np.abs(kappa) <= band * np.max(np.abs(kappa))]
    if kept.size > x.size:
        raise GridSpecError(f"{kept.size} modes cannot be fitted from {x.size} samples")
    design = np.exp(1j * np.outer(x - grid.x_min, kept))
    coefficients, _, rank, _ = lstsq(design, np.asarray(values, dtype=complex))
    if rank < kept.size:
        logger.warning("Rank-deficient fit: %s of %s modes determined", rank, kept.size)
    fitted = np.exp(1j * np.outer(grid.nodes - grid.x_min, kept)) @ coefficients
    logger.debug("Fitted %s non-uniform samples with %s modes", x.size, kept.size)
    return SampledPotential(grid, fitted)


def sobolev_report(u: SampledPotential, decay_tol: float = DECAY_TOL) -> SobolevReport:
    """Trapezoid-rule proxies for the L2, H1 and weighted H^{3,3} norms of ``u``.

    :raise flist.grid.DecayError: Raised if ``u`` does not decay at the grid ends.
    """
    check_decay(u, decay_tol)
    x = u.grid.nodes
    derivatives = [u.values] + [
        spectral_derivative(u.values, u.grid, order) for order in (1, 2, 3)
    ]
    squares = [trapezoid(np.abs(d) ** 2, x) for d in derivatives]
    weight = (1 + x**2) ** 3
    weighted = trapezoid(weight * np.abs(u.values) ** 2, x)
    return SobolevReport(
        l2_norm=float(np.sqrt(squares[0])),
        h1_norm=float(np.sqrt(squares[0] + squares[1])),
        weighted_h33_estimate=float(np.sqrt(sum(squares) + weighted)),
    )
