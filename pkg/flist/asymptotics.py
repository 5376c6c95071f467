"""
    flist.asymptotics
    -----------------

    This module provides the long-time picture inside a space-time cone: the
    phase θ(k) = k²x/t + η(k)² and its four stationary points, the selection
    of the solitons whose velocities lie in the cone together with their
    modified norming constants, the parabolic-cylinder coefficients that set
    the size of the t^{-1/2} radiation term, and least-squares rate fits that
    compare all of it against the time integrator.
"""
from collections.abc import Sequence
from dataclasses import dataclass, replace
import logging
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import rgamma

from flist.evolve import EvolverConfig, evolve
from flist.grid import NumericalError, SampledPotential
from flist.rhp import ALPHA, BETA, reconstruct, solve_reflectionless
from flist.scattering import ScatteringData
from flist.spectrum import ContourPiece, SolitonEnsemble, blaschke_split, delta_exponential

logger = logging.getLogger("flist")

T_MIN = 10.0
K0_FLOOR = 1e-3
NU_MAX = 50.0
OFFSET_SPACINGS = 4

# ±k₀ on ℝ, ±ik₀ on iℝ, in the order z₁..z₄
_POINT_DIRECTIONS = np.array([1, 1j, -1, -1j])
# displacement of each z_n into D⁺ when δ(z_n) is sampled
_OFFSET_DIRECTIONS = np.array([1j, 1, -1j, -1])

Cone = tuple[float, float, float, float]


class OriginSingularity(NumericalError):
    """Raised when the phase is evaluated at k = 0."""


class DegenerateCone(NumericalError):
    """Raised when a cone or velocity leaves the range -α < v < 0."""


class GammaOverflow(NumericalError):
    """Raised when ν is too large for the Gamma factors to be representable."""


class OutsideCone(NumericalError):
    """Raised when a point (x, t) is not inside the requested cone."""


class InsufficientSamples(NumericalError):
    """Raised when a rate fit has too few or unusable samples."""


@dataclass(frozen=True, eq=False)
class PhaseGeometry:
    alpha: float
    beta: float
    xi: float
    k0: float
    stationary_points: np.ndarray
    theta_second: np.ndarray
    nu: np.ndarray


@dataclass(frozen=True, eq=False)
class ConeSelection:
    """Partition of the discrete spectrum by the annulus f(v₂) ≤ |k| ≤ f(v₁).

    ``k_plus``, ``k_in`` and ``k_minus`` index ``ensemble.k``; ``c_modified``
    holds the renormalised constants of the ``k_in`` poles.
    """
    x1: float
    x2: float
    v1: float
    v2: float
    inner_radius: float
    outer_radius: float
    ensemble: SolitonEnsemble
    k_plus: np.ndarray
    k_in: np.ndarray
    k_minus: np.ndarray
    c_modified: np.ndarray

    @property
    def n_in(self) -> int:
        return int(self.k_in.size)

    @property
    def leading_ensemble(self) -> SolitonEnsemble:
        if self.n_in == 0:
            return SolitonEnsemble.empty()
        return SolitonEnsemble(self.ensemble.k[self.k_in], self.c_modified)

    def contains(self, x, t: float):
        """True where x lies in [x₁ + v₁t, x₂ + v₂t]."""
        x = np.asarray(x)
        return (x >= self.x1 + self.v1 * t) & (x <= self.x2 + self.v2 * t)


@dataclass(frozen=True)
class PCCoefficients:
    r0: complex
    nu: float
    beta12: complex
    beta21: complex

    @property
    def m1_norm(self) -> float:
        """Spectral norm of [[0, -iβ₁₂], [iβ₂₁, 0]]."""
        return max(abs(self.beta12), abs(self.beta21))


@dataclass(frozen=True, eq=False)
class LeadingOrder:
    u_lead: complex
    correction_bound: float
    pre_asymptotic: bool
    geometry: PhaseGeometry
    selection: ConeSelection


@dataclass(frozen=True)
class RateRow:
    t: float
    residual_sup: float
    bound: float
    slope_running: float


def phase(k, geo: PhaseGeometry):
    """θ(k) = k²ξ - αβ + αβ²/(4k²), ξ = x/t + α.

    :raise flist.asymptotics.OriginSingularity: Raised at k = 0.
    """
    k = np.asarray(k, dtype=complex)
    if np.any(k == 0):
        raise OriginSingularity("θ(k) has a pole at k = 0")
    k2 = k * k
    return k2 * geo.xi - geo.alpha * geo.beta + geo.alpha * geo.beta**2 / (4 * k2)


def phase_derivative(k, geo: PhaseGeometry):
    k = np.asarray(k, dtype=complex)
    if np.any(k == 0):
        raise OriginSingularity("θ'(k) has a pole at k = 0")
    return 2 * k * geo.xi - geo.alpha * geo.beta**2 / (2 * k**3)


def stationary_points(alpha: float, beta: float, xi: float,
                      k0_floor: float = K0_FLOOR) -> PhaseGeometry:
    """The roots of k⁴ = αβ²/(4ξ) as z₁..z₄ = k₀, ik₀, -k₀, -ik₀.

    ``nu`` is left at zero; :func:`stationary_nu` fills it from reflection data.

    :raise flist.asymptotics.DegenerateCone: Raised if ξ ≤ 0 or k₀ < ``k0_floor``.
    """
    if xi <= 0:
        raise DegenerateCone(f"ξ = {xi} ≤ 0: the stationary points leave ℝ ∪ iℝ")
    k0 = (alpha * beta**2 / (4 * xi)) ** 0.25
    if k0 < k0_floor:
        raise DegenerateCone(f"k₀ = {k0:.3g} below {k0_floor}: stationary points merge at 0")
    points = k0 * _POINT_DIRECTIONS
    theta_second = 2 * xi + 3 * alpha * beta**2 / (2 * points**4)
    return PhaseGeometry(alpha, beta, xi, k0, points, theta_second, np.zeros(4))


def f_of_v(v, alpha: float = ALPHA, beta: float = BETA):
    """f(v) = (αβ²/(4(v + α)))^{1/4}, the modulus |k| moving with velocity v."""
    v = np.asarray(v, dtype=float)
    if np.any(v <= -alpha):
        raise DegenerateCone(f"Velocity {v} at or below -α = {-alpha}")
    return (alpha * beta**2 / (4 * (v + alpha))) ** 0.25


def _check_cone(cone: Cone, alpha: float) -> Cone:
    x1, x2, v1, v2 = (float(value) for value in cone)
    if not -alpha < v1 <= v2 < 0:
        raise DegenerateCone(f"Cone velocities need -α < v₁ ≤ v₂ < 0, got {v1}, {v2}")
    if x1 > x2:
        raise DegenerateCone(f"Cone offsets need x₁ ≤ x₂, got {x1} > {x2}")
    return x1, x2, v1, v2


def _real_reflection(sd: Optional[ScatteringData]):
    if sd is None:
        return None
    zeta, r = sd.real_axis()
    if not np.any(r):
        return None
    return zeta, r


def _delta_plus(sd: Optional[ScatteringData], k0: float, k: complex,
                proximity: float = 3.0) -> complex:
    """δ-exponential over I₊ = {|ζ| > k₀} at ``k``."""
    data = _real_reflection(sd)
    if data is None:
        return 1.0 + 0j
    zeta, r = data
    edge = float(np.max(np.abs(zeta)))
    pieces = [ContourPiece(-edge, -k0), ContourPiece(k0, edge)]
    return delta_exponential(zeta, r, pieces, k, proximity=proximity)


def cone_select(ens: SolitonEnsemble, sd: Optional[ScatteringData], cone: Cone,
                alpha: float = ALPHA, beta: float = BETA) -> ConeSelection:
    """Split the poles into those faster, inside and slower than the cone.

    Poles with |k| = f(v) exactly belong to the cone. The surviving constants
    are c_j a_{K₋}(k_j)² δ(k_j), where a_{K₋} is the Blaschke product over
    the poles with |k| < f(v₂) and δ is the I₊ exponential taken with k₀ at
    the cone's mid velocity. ``sd=None`` stands for r ≡ 0.

    :raise flist.asymptotics.DegenerateCone: Raised unless -α < v₁ ≤ v₂ < 0.
    """
    x1, x2, v1, v2 = _check_cone(cone, alpha)
    outer = float(f_of_v(v1, alpha, beta))
    inner = float(f_of_v(v2, alpha, beta))
    moduli = np.abs(ens.k)
    k_plus = np.nonzero(moduli > outer)[0]
    k_minus = np.nonzero(moduli < inner)[0]
    k_in = np.nonzero((moduli >= inner) & (moduli <= outer))[0]

    n = len(ens)
    delta = list(k_minus) + [j + n for j in k_minus]
    split = blaschke_split(ens, delta)
    k0 = float(f_of_v(0.5 * (v1 + v2), alpha, beta))
    c_modified = np.array([
        ens.c[j] * complex(split(ens.k[j])) ** 2 * _delta_plus(sd, k0, ens.k[j])
        for j in k_in
    ], dtype=complex)
    logger.debug("Cone %s selects %s of %s solitons", (x1, x2, v1, v2), k_in.size, n)
    return ConeSelection(x1, x2, v1, v2, inner, outer, ens, k_plus, k_in, k_minus, c_modified)


def _spline_value(nodes: np.ndarray, values: np.ndarray, at: float) -> complex:
    at = float(np.clip(at, nodes[0], nodes[-1]))
    return complex(CubicSpline(nodes, values.real)(at) + 1j * CubicSpline(nodes, values.imag)(at))


def reflection_at(sd: ScatteringData, z: complex) -> complex:
    """r at a point of ℝ or iℝ by spline interpolation of the contour samples."""
    if abs(z.imag) <= abs(z.real):
        nodes, r = sd.real_axis()
        return _spline_value(nodes, r, z.real)
    nodes, r = sd.imag_axis()
    return _spline_value(nodes, r, z.imag)


def stationary_nu(geo: PhaseGeometry, sd: ScatteringData) -> PhaseGeometry:
    """Fill ν(z_n): -log(1 + |r|²)/2π on ℝ and -log(1 - |r|²)/2π on iℝ."""
    r = np.array([reflection_at(sd, z) for z in geo.stationary_points])
    modulus2 = np.abs(r) ** 2
    on_real = np.array([True, False, True, False])
    nu = np.where(on_real, -np.log1p(modulus2), -np.log1p(-np.minimum(modulus2, 1 - 1e-15)))
    return PhaseGeometry(geo.alpha, geo.beta, geo.xi, geo.k0, geo.stationary_points,
                         geo.theta_second, nu / (2 * np.pi))


def pc_coefficients(r_at_z: complex, nu: float, delta_at_z: complex, k0: float, t: float,
                    alpha: float = ALPHA, beta: float = BETA,
                    nu_max: float = NU_MAX) -> PCCoefficients:
    """Leading coefficients β₁₂, β₂₁ of the parabolic-cylinder model at one point.

    :param r_at_z: Reflection coefficient at the stationary point.
    :param nu: ν at the stationary point.
    :param delta_at_z: δ sampled next to the stationary point.
    :raise flist.asymptotics.GammaOverflow: Raised if |ν| exceeds ``nu_max``.
    """
    if abs(nu) > nu_max:
        raise GammaOverflow(f"|ν| = {abs(nu):.3g} exceeds {nu_max}")
    r0 = r_at_z * delta_at_z ** -2 \
        * np.exp(1j * nu * (np.log(k0**4) - np.log(4 * alpha * beta**2 * t))) \
        * np.exp(2j * t * (alpha * beta**2 / (2 * k0**2) - alpha * beta))
    if r0 == 0:
        return PCCoefficients(0j, float(nu), 0j, 0j)
    scale = np.sqrt(2 * np.pi) * np.exp(-np.pi * nu / 2)
    beta12 = scale * np.exp(1j * np.pi / 4) * rgamma(-1j * nu) / r0
    beta21 = -scale * np.exp(-1j * np.pi / 4) * rgamma(1j * nu) / np.conj(r0)
    return PCCoefficients(complex(r0), float(nu), complex(beta12), complex(beta21))


def _node_spacing(sd: ScatteringData, k0: float) -> float:
    nodes = np.unique(np.abs(sd.real_axis()[0]))
    i = int(np.clip(np.searchsorted(nodes, k0), 1, nodes.size - 1))
    return float(nodes[i] - nodes[i - 1])


def correction_bound(sd: Optional[ScatteringData], geo: PhaseGeometry, t: float,
                     nu_max: float = NU_MAX) -> float:
    """(k₀²/(2β√(αt))) Σₙ ‖M₁^pc(z_n)‖₂ over the four stationary points."""
    if _real_reflection(sd) is None:
        return 0.0
    if not np.any(geo.nu):
        geo = stationary_nu(geo, sd)
    offset = OFFSET_SPACINGS * _node_spacing(sd, geo.k0)
    total = 0.0
    for z, direction, nu in zip(geo.stationary_points, _OFFSET_DIRECTIONS, geo.nu):
        delta = _delta_plus(sd, geo.k0, z + offset * direction, proximity=0.0)
        pc = pc_coefficients(reflection_at(sd, z), nu, delta, geo.k0, t, geo.alpha, geo.beta,
                             nu_max)
        total += pc.m1_norm
    return geo.k0**2 / (2 * geo.beta * np.sqrt(geo.alpha * t)) * total


def _lead_value(selection: ConeSelection, x: float, t: float, alpha: float,
                beta: float) -> tuple[complex, complex]:
    ens = selection.leading_ensemble
    if len(ens) == 0:
        return 0j, 0j
    field = reconstruct(solve_reflectionless(ens, None, x, t, alpha, beta), ens)
    return field.u_value, field.u_x_value


def leading_asymptotic(ens: SolitonEnsemble, sd: Optional[ScatteringData], cone: Cone,
                       x: float, t: float, alpha: float = ALPHA, beta: float = BETA,
                       t_min: float = T_MIN, k0_floor: float = K0_FLOOR,
                       nu_max: float = NU_MAX) -> LeadingOrder:
    """The cone's N(𝓘)-soliton at (x, t) and the size of the t^{-1/2} correction.

    :raise flist.asymptotics.OutsideCone: Raised if (x, t) is not in the cone.
    :raise flist.asymptotics.DegenerateCone: Raised for an invalid cone or ξ ≤ 0.
    """
    selection = cone_select(ens, sd, cone, alpha, beta)
    if t <= 0 or not selection.contains(x, t):
        raise OutsideCone(f"(x, t) = ({x}, {t}) is outside cone {cone}")
    geo = stationary_points(alpha, beta, x / t + alpha, k0_floor)
    pre_asymptotic = t < t_min
    if pre_asymptotic:
        logger.warning("t = %s is below t_min = %s; the estimate is pre-asymptotic", t, t_min)
    u_lead, _ = _lead_value(selection, x, t, alpha, beta)
    bound = correction_bound(sd, geo, t, nu_max)
    return LeadingOrder(u_lead, float(bound), pre_asymptotic, geo, selection)


def fit_decay_rate(samples: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Ordinary least squares of log(residual) against log(t).

    :return: ``(slope, intercept)``.
    :raise flist.asymptotics.InsufficientSamples: Raised for fewer than four
        samples, non-positive residuals or non-increasing times.
    """
    if len(samples) < 4:
        raise InsufficientSamples(f"Need at least 4 samples, got {len(samples)}")
    t, residual = (np.asarray(column, dtype=float) for column in zip(*samples))
    if np.any(residual <= 0) or np.any(t <= 0):
        raise InsufficientSamples("Rate fits need positive times and residuals")
    if np.any(np.diff(t) <= 0):
        raise InsufficientSamples("Sample times must be strictly increasing")
    slope, intercept = np.polyfit(np.log(t), np.log(residual), 1)
    return float(slope), float(intercept)


def rate_study(u0: SampledPotential, ens: SolitonEnsemble, sd: Optional[ScatteringData],
               cone: Cone, times: Sequence[float], cfg: EvolverConfig,
               bound_points: int = 9, k0_floor: float = K0_FLOOR,
               nu_max: float = NU_MAX) -> list[RateRow]:
    """Compare the integrator against the cone's leading term over a t-sweep.

    Each row holds the sup-norm residual over the grid points inside the cone,
    the largest correction bound over ``bound_points`` points of that slice and
    the slope fitted to all rows so far (NaN until four rows exist).
    """
    times = sorted(float(t) for t in times)
    selection = cone_select(ens, sd, cone, cfg.alpha, cfg.beta)
    run = evolve(u0, replace(cfg, t_end=times[-1], snapshot_times=tuple(times)))
    snapshots = dict(run.snapshots)
    rows: list[RateRow] = []
    for t in times:
        field = snapshots[t]
        inside = selection.contains(field.grid.nodes, t)
        xs = field.grid.nodes[inside]
        if xs.size == 0:
            raise OutsideCone(f"The cone slice at t = {t} holds no grid points")
        lead = np.array([_lead_value(selection, x, t, cfg.alpha, cfg.beta)[0] for x in xs])
        residual = float(np.max(np.abs(field.values[inside] - lead)))
        positions = np.linspace(xs[0], xs[-1], min(bound_points, xs.size))
        bound = max(
            correction_bound(sd, stationary_points(cfg.alpha, cfg.beta, x / t + cfg.alpha,
                                                   k0_floor), t, nu_max)
            for x in positions
        )
        samples = [(row.t, row.residual_sup) for row in rows] + [(t, residual)]
        slope = fit_decay_rate(samples)[0] if len(samples) >= 4 else float("nan")
        rows.append(RateRow(t, residual, float(bound), slope))
        logger.info("t = %s: residual %.3e, bound %.3e", t, residual, bound)
    return rows

