"""
    flist.spectrum
    --------------

    This module provides the discrete spectrum: locating the zeros of a(k) in
    D⁺ = {Im k² > 0} by the argument principle, the norming constants attached
    to them, the reflectionless trace formula and its partial Blaschke
    products, and the Cauchy-integral exponentials built from reflection data.
"""
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass
import logging
from typing import Optional

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from flist.grid import NumericalError, GridSpecError, SampledPotential
from flist.scattering import ScatteringData, connection_coefficient, evaluate_a

logger = logging.getLogger("flist")

SIMPLE_TOL = 1e-8
NEWTON_TOL = 1e-10

AnalyticFunction = Callable[[np.ndarray], np.ndarray]


class WindingMismatch(NumericalError):
    """Raised when the winding count and the zeros found disagree."""


class MultipleZero(NumericalError):
    """Raised when a zero of a is not simple."""


class PoleHit(NumericalError):
    """Raised when the trace formula is evaluated at one of its poles."""


class ContourProximity(NumericalError):
    """Raised when a Cauchy integral is evaluated too close to its contour."""


@dataclass(frozen=True, eq=False)
class SolitonEnsemble:
    """Reflectionless discrete data.

    Only the N first-quadrant poles are stored; the partner ``-k_j`` carrying
    the same norming constant is generated by :attr:`poles` and
    :attr:`constants`.
    """
    k: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        k = np.atleast_1d(np.asarray(self.k, dtype=complex)).copy()
        c = np.atleast_1d(np.asarray(self.c, dtype=complex)).copy()
        if k.shape != c.shape or k.ndim != 1:
            raise GridSpecError("Poles and norming constants must be matching 1-d arrays")
        if np.any((k.real <= 0) | (k.imag <= 0)):
            raise GridSpecError("Ensemble poles must lie in the open first quadrant")
        if np.any(c == 0) or not np.all(np.isfinite(c)):
            raise GridSpecError("Norming constants must be finite and nonzero")
        if k.size > 1 and np.min(np.abs(k[:, None] - k[None, :]) + np.eye(k.size)) < 1e-12:
            raise GridSpecError("Ensemble poles must be distinct")
        order = np.lexsort((k.imag, k.real))
        k, c = k[order], c[order]
        k.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "c", c)

    @classmethod
    def empty(cls) -> 'SolitonEnsemble':
        return cls(np.zeros(0, complex), np.zeros(0, complex))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[complex, complex]]) -> 'SolitonEnsemble':
        pairs = list(pairs)
        return cls(np.array([p[0] for p in pairs], complex),
                   np.array([p[1] for p in pairs], complex))

    @property
    def n_solitons(self) -> int:
        return self.k.size

    def __len__(self):
        return self.k.size

    @property
    def poles(self) -> np.ndarray:
        """All 2N zeros of a: the stored poles followed by their partners."""
        return np.concatenate([self.k, -self.k])

    @property
    def constants(self) -> np.ndarray:
        return np.concatenate([self.c, self.c])

    @property
    def rho(self) -> float:
        """Distance from the poles (and their conjugates) to the contour R ∪ iR."""
        if not self.k.size:
            return float("inf")
        return float(np.min(np.minimum(self.k.real, self.k.imag)))

    def subset(self, indices: Sequence[int]) -> 'SolitonEnsemble':
        """The ensemble restricted to the stored poles at ``indices``."""
        indices = list(indices)
        return SolitonEnsemble(self.k[indices], self.c[indices])

    def with_constants(self, c: np.ndarray) -> 'SolitonEnsemble':
        return SolitonEnsemble(self.k, c)


def _blaschke_factors(zeros: np.ndarray, k: np.ndarray) -> np.ndarray:
    """(k - z)/(k - z̄) for each zero along the last axis."""
    k = np.asarray(k, dtype=complex)[..., None]
    denominator = k - np.conj(zeros)
    hit = np.abs(denominator) < 1e-14 * (1 + np.abs(k))
    if np.any(hit):
        raise PoleHit("Trace formula evaluated at a conjugate pole k̄_j")
    return (k - zeros) / denominator


def trace_formula_a(ens: SolitonEnsemble, k) -> np.ndarray:
    """a(k) = Π_j (k - k_j)/(k - k̄_j) over all 2N zeros.

    :raise flist.spectrum.PoleHit: Raised if ``k`` is one of the k̄_j.
    """
    return np.prod(_blaschke_factors(ens.poles, k), axis=-1)


@dataclass(frozen=True, eq=False)
class BlaschkeSplit:
    """a = a_Δ · a_Δᶜ for an index set Δ of the 2N zeros."""
    delta_set: frozenset
    zeros: np.ndarray
    complement: np.ndarray

    def __call__(self, k) -> np.ndarray:
        return np.prod(_blaschke_factors(self.zeros, k), axis=-1)

    def complement_value(self, k) -> np.ndarray:
        return np.prod(_blaschke_factors(self.complement, k), axis=-1)

    def derivative(self, k) -> np.ndarray:
        """a_Δ'(k) through the logarithmic derivative; exact at the zeros of a_Δ."""
        k = np.asarray(k, dtype=complex)
        factors = _blaschke_factors(self.zeros, k)
        kk = k[..., None]
        conj = np.conj(self.zeros)
        # d/dk of (k - z)/(k - z̄) is (z - z̄)/(k - z̄)²
        slopes = (self.zeros - conj) / (kk - conj) ** 2
        total = np.zeros(k.shape, dtype=complex)
        for i in range(self.zeros.size):
            others = np.prod(np.delete(factors, i, axis=-1), axis=-1)
            total = total + slopes[..., i] * others
        return total


def blaschke_split(ens: SolitonEnsemble, delta: Iterable[int]) -> BlaschkeSplit:
    """Split the trace formula over ``delta`` ⊆ {0, …, 2N-1}, indices into
    :attr:`SolitonEnsemble.poles`.
    """
    delta = frozenset(int(j) for j in delta)
    poles = ens.poles
    if any(j < 0 or j >= poles.size for j in delta):
        raise GridSpecError(f"Blaschke index set {sorted(delta)} outside 0..{poles.size - 1}")
    inside = np.array(sorted(delta), dtype=int)
    outside = np.array([j for j in range(poles.size) if j not in delta], dtype=int)
    return BlaschkeSplit(delta, poles[inside], poles[outside])


def cauchy_derivative(func: AnalyticFunction, k: complex, radius: Optional[float] = None,
                      points: int = 8) -> complex:
    """f'(k) from ``points`` samples on a circle of ``radius`` about ``k``."""
    if radius is None:
        radius = max(1e-3 * abs(k), 1e-6)
    angles = 2 * np.pi * np.arange(points) / points
    samples = np.asarray(func(k + radius * np.exp(1j * angles)), dtype=complex)
    return complex(np.mean(samples * np.exp(-1j * angles)) / radius)


def winding_number(values: np.ndarray) -> float:
    """Total phase change of ``values`` around a closed path, in turns."""
    values = np.asarray(values, dtype=complex)
    closed = np.append(values, values[0])
    return float(np.sum(np.diff(np.unwrap(np.angle(closed)))) / (2 * np.pi))


Box = tuple[float, float, float, float]


def _boundary(box: Box, per_edge: int) -> np.ndarray:
    x0, x1, y0, y1 = box
    t = np.linspace(0, 1, per_edge, endpoint=False)
    return np.concatenate([
        x0 + (x1 - x0) * t + 1j * y0,
        x1 + 1j * (y0 + (y1 - y0) * t),
        x1 - (x1 - x0) * t + 1j * y1,
        x0 + 1j * (y1 - (y1 - y0) * t),
    ])


def _count_zeros(func: AnalyticFunction, box: Box, per_edge: int = 32,
                 max_points: int = 4096) -> int:
    """Argument-principle count with adaptive boundary refinement."""
    while True:
        path = _boundary(box, per_edge)
        values = np.asarray(func(path), dtype=complex)
        if np.min(np.abs(values)) == 0:
            raise WindingMismatch(f"Zero of a on the boundary of box {box}")
        jumps = np.abs(np.diff(np.unwrap(np.angle(np.append(values, values[0])))))
        winding = winding_number(values)
        settled = jumps.max() < np.pi / 4 and abs(winding - round(winding)) < 0.1
        if settled or 4 * per_edge >= max_points:
            if abs(winding - round(winding)) >= 0.1:
                raise WindingMismatch(
                    f"Winding number {winding:.3f} over box {box} is not near an integer"
                )
            return int(round(winding))
        per_edge *= 2


def _newton(func: AnalyticFunction, start: complex, tol: float, max_iter: int = 60):
    k = complex(start)
    for _ in range(max_iter):
        value = complex(np.asarray(func(np.array([k])))[0])
        if abs(value) < tol:
            return k
        slope = cauchy_derivative(func, k)
        if slope == 0 or not np.isfinite(slope):
            return None
        k = k - value / slope
        if not np.isfinite(k):
            return None
    return None


def _inside(k: complex, box: Box, margin: float = 0.0) -> bool:
    x0, x1, y0, y1 = box
    return x0 - margin <= k.real <= x1 + margin and y0 - margin <= k.imag <= y1 + margin


def locate_zeros(func: AnalyticFunction, box: Box, newton_tol: float = NEWTON_TOL,
                 simple_tol: float = SIMPLE_TOL, max_depth: int = 10) -> list[complex]:
    """Find every zero of the analytic ``func`` inside the rectangle ``box``.

    ``box`` is ``(re_min, re_max, im_min, im_max)``. Boxes are subdivided into
    quarters until each holds at most one zero, which is then refined by
    Newton's method until ``|func| < newton_tol``.

    :raise flist.spectrum.WindingMismatch: Raised if the zeros found do not
        account for the winding number of ``box``.
    :raise flist.spectrum.MultipleZero: Raised if a zero has ``|func'| < simple_tol``.

    :return: The zeros, sorted by (real, imaginary) part.
    """
    expected = _count_zeros(func, box)
    logger.debug("Winding number %s over box %s", expected, box)
    found = _search(func, box, expected, newton_tol, max_depth)
    unique: list[complex] = []
    for zero in found:
        if all(abs(zero - other) > 1e-8 * max(1, abs(zero)) for other in unique):
            unique.append(zero)
    if len(unique) != expected:
        raise WindingMismatch(f"Winding number {expected} but found {len(unique)} zeros")
    for zero in unique:
        if abs(cauchy_derivative(func, zero)) < simple_tol:
            raise MultipleZero(f"|a'(k)| below {simple_tol:.1g} at k = {zero}")
    return sorted(unique, key=lambda z: (z.real, z.imag))


def _search(func, box, count, newton_tol, depth) -> list[complex]:
    if count == 0:
        return []
    x0, x1, y0, y1 = box
    size = max(x1 - x0, y1 - y0)
    if count == 1:
        zero = _newton(func, complex((x0 + x1) / 2, (y0 + y1) / 2), newton_tol)
        if zero is not None and _inside(zero, box, 1e-9 * max(1, size)):
            return [zero]
    if depth == 0:
        if count > 1:
            raise MultipleZero(f"{count} zeros do not separate within box {box}")
        raise WindingMismatch(f"Could not isolate the zero in box {box}")
    xm, ym = (x0 + x1) / 2, (y0 + y1) / 2
    result = []
    for quarter in ((x0, xm, y0, ym), (xm, x1, y0, ym), (x0, xm, ym, y1), (xm, x1, ym, y1)):
        sub = _count_zeros(func, quarter)
        result.extend(_search(func, quarter, sub, newton_tol, depth - 1))
    return result


def default_search_box(sd: ScatteringData) -> Box:
    """A first-quadrant box reaching the contour's largest node, clear of both axes."""
    nodes = np.abs(sd.contour.nodes)
    reach = float(nodes.max()) if nodes.size else 3.0
    margin = max(float(nodes.min()) if nodes.size else 0.05, 1e-3)
    return (margin, reach, margin, reach)


def find_discrete_spectrum(sd: ScatteringData, u: SampledPotential,
                           search_box: Optional[Box] = None,
                           newton_tol: float = NEWTON_TOL, simple_tol: float = SIMPLE_TOL,
                           decay_tol: Optional[float] = None) -> SolitonEnsemble:
    """Locate the zeros of a in the first quadrant and their norming constants.

    a is continued off the contour through :func:`flist.scattering.evaluate_a`;
    c_j = β_j / a'(k_j) with β_j the connection coefficient at k_j.

    :raise flist.spectrum.WindingMismatch: see :func:`locate_zeros`.
    :raise flist.spectrum.MultipleZero: see :func:`locate_zeros`.
    """
    box = search_box or default_search_box(sd)
    if box[0] <= 0 or box[2] <= 0:
        raise GridSpecError(f"Search box {box} must lie in the open first quadrant")
    extra = {} if decay_tol is None else {"decay_tol": decay_tol}

    def a_func(ks):
        return evaluate_a(u, ks, **extra)

    zeros = locate_zeros(a_func, box, newton_tol, simple_tol)
    constants = []
    for zero in zeros:
        slope = cauchy_derivative(a_func, zero)
        beta = connection_coefficient(u, zero, **extra)
        constants.append(beta / slope)
        logger.info("Discrete eigenvalue k=%.10g%+.10gj, c=%.6g%+.6gj",
                    zero.real, zero.imag, constants[-1].real, constants[-1].imag)
    return SolitonEnsemble(np.array(zeros, complex), np.array(constants, complex))


@dataclass(frozen=True)
class ContourPiece:
    """A signed real segment [start, stop] of a Cauchy-integral contour."""
    start: float
    stop: float
    sign: int = 1


def delta_exponential(zeta: np.ndarray, r_values: np.ndarray,
                      pieces: Sequence[ContourPiece], k: complex,
                      proximity: float = 3.0, fine_factor: int = 8) -> complex:
    """exp(Σ ± (1/πi) ∫_I log(1 + |r(ζ)|²)/(ζ - k) dζ) over the signed pieces.

    ``zeta`` are sorted real nodes carrying ``r_values``; log(1 + |r|²) is
    spline-interpolated onto a fine odd grid per piece and integrated by
    Simpson's rule.

    :raise flist.spectrum.ContourProximity: Raised if ``k`` is closer to a piece
        than ``proximity`` node spacings.
    """
    zeta = np.asarray(zeta, dtype=float)
    weight = np.log1p(np.abs(np.asarray(r_values)) ** 2)
    if not np.any(weight):
        return 1.0 + 0j
    spline = CubicSpline(zeta, weight)
    total = 0j
    for piece in pieces:
        lo, hi = sorted((piece.start, piece.stop))
        lo, hi = max(lo, zeta[0]), min(hi, zeta[-1])
        if hi <= lo:
            continue
        inner = zeta[(zeta >= lo) & (zeta <= hi)]
        spacing = float(np.max(np.diff(inner))) if inner.size > 1 else hi - lo
        distance = abs(k.imag) if lo <= k.real <= hi else min(abs(k - lo), abs(k - hi))
        if distance < proximity * spacing:
            raise ContourProximity(
                f"k = {k} lies {distance:.3g} from [{lo}, {hi}] (node spacing {spacing:.3g})"
            )
        count = max(2049, fine_factor * inner.size) | 1
        fine = np.linspace(lo, hi, count)
        integral = simpson(spline(fine) / (fine - k), x=fine)
        total += piece.sign * integral / (np.pi * 1j)
    return complex(np.exp(total))
