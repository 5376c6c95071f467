"""
    flist.verify
    ------------

    This module provides the verification suites behind ``fl-ist verify``.
    Each suite returns one :class:`CheckRecord` per criterion, holding the
    measured value, its threshold and whether it passed. Every random sample
    is drawn from a generator seeded with the run's ``seed`` and the suite's
    position, so reports are reproducible.
"""
from collections.abc import Callable
from dataclasses import dataclass
import logging
import operator
from typing import Optional, Union

import numpy as np
from scipy.special import rgamma

from flist.asymptotics import (
    cone_select, f_of_v, fit_decay_rate, pc_coefficients, phase_derivative, rate_study,
    stationary_points,
)
from flist.config import Namespace, ValidationError
from flist.evolve import evolve, isospectral_drift
from flist.grid import SampledPotential, make_grid
from flist.loader import SUITES, default_settings, evolver_config
from flist.rhp import (
    nsoliton_field, one_soliton_envelope, reconstruct, solve_reflectionless, velocity,
)
from flist.scattering import (
    check_asymptotics, default_contour, jost_solve, jost_solve_large_k, scattering_coefficients,
)
from flist.spectrum import SolitonEnsemble, find_discrete_spectrum, trace_formula_a

logger = logging.getLogger("flist")

K1 = np.exp(1j * np.pi / 4)
ROUNDTRIP_TOL = 1e-4
GAUGE_TOL = 1e-10
ENVELOPE_TOL = 1e-8
FORMULATION_TOL = 1e-6
PDE_TOL = 1e-3
DRIFT_TOL = 1e-6
GAMMA_TOL = 1e-10
RATE_WINDOW = (-0.75, -0.40)
BOUND_SLACK = 3.0
# soliton plus radiation whose soliton moves with v ≈ -0.177 for α = 1, β = 2
RATES_POLE = 1.05 * K1
RATES_RADIATION = 0.2
RATES_BOX = (-160.0, 160.0, 4096)
MOVING_POLE = 1.2 * K1

_RELATIONS = {"<": operator.lt, "<=": operator.le, ">=": operator.ge, "==": operator.eq}


@dataclass(frozen=True)
class CheckRecord:
    suite: str
    criterion: str
    measured: float
    threshold: Union[float, tuple[float, float]]
    relation: str
    passed: bool

    def to_dict(self) -> dict:
        threshold = list(self.threshold) if isinstance(self.threshold, tuple) else self.threshold
        return {
            "suite": self.suite, "criterion": self.criterion, "measured": self.measured,
            "threshold": threshold, "relation": self.relation, "passed": self.passed,
        }


def check(suite: str, criterion: str, measured: float,
          threshold: Union[float, tuple[float, float]], relation: str = "<") -> CheckRecord:
    """Compare ``measured`` against ``threshold``; ``relation`` is one of
    ``<``, ``<=``, ``>=``, ``==`` or ``in`` (closed interval).
    """
    measured = float(measured)
    if relation == "in":
        low, high = threshold
        passed = low <= measured <= high
    elif relation in _RELATIONS:
        passed = _RELATIONS[relation](measured, threshold)
    else:
        raise ValidationError(f"Unknown relation: {relation}")
    if not passed:
        logger.warning("%s/%s failed: %r %s %r", suite, criterion, measured, relation, threshold)
    return CheckRecord(suite, criterion, measured, threshold, relation, bool(passed))


def _axis_points(rng: np.random.Generator, low: float, high: float, count: int) -> np.ndarray:
    """Random moduli in [low, high] placed on random half axes of ℝ ∪ iℝ."""
    directions = np.array([1, 1j, -1, -1j])
    return rng.uniform(low, high, count) * directions[rng.integers(0, 4, count)]


def suite_trivial(settings: Namespace, rng: np.random.Generator) -> list[CheckRecord]:
    """Identities of the zero potential across every module."""
    name = "trivial"
    contour = default_contour(0.05, 20.0, 100)
    u = SampledPotential.zeros(make_grid(-8, 8, 10001))
    sd = scattering_coefficients(u, contour, settings.scatter.k_switch,
                                 settings.scatter.a_floor, settings.decay_tol)
    empty = SolitonEnsemble.empty()
    small = make_grid(-10, 10, 256)
    run = evolve(SampledPotential.zeros(small), evolver_config(settings, t_end=1.0))
    return [
        check(name, "zero.a_minus_one", np.max(np.abs(sd.a_values - 1)), 1e-10),
        check(name, "zero.b", np.max(np.abs(sd.b_values)), 1e-10),
        check(name, "zero.a0", abs(sd.a0 - 1), 1e-10),
        check(name, "zero.trace_formula",
              np.max(np.abs(trace_formula_a(empty, contour.nodes) - 1)), 0.0, "=="),
        check(name, "zero.nsoliton",
              np.max(np.abs(nsoliton_field(empty, None, small, 1.0).values)), 0.0, "=="),
        check(name, "zero.evolve", np.max(np.abs(run.final.values)), 0.0, "=="),
        check(name, "zero.pc_norm", pc_coefficients(0j, 0.1, 1.0, 1.0, 20.0).m1_norm, 0.0, "=="),
    ]


def _radiation(x: np.ndarray) -> np.ndarray:
    return 0.2 * (1 + 0.5j * x) * np.exp(-x**2 / 2)


def _tilted_bump(x: np.ndarray) -> np.ndarray:
    return 0.25 * (1 - 1j * (x - 1)) * np.exp(-(x - 1) ** 2 / 2)


def _chirped_bump(x: np.ndarray) -> np.ndarray:
    return 0.3 * np.exp(-x**2 / 3 + 0.4j * x)


GENERIC_PROFILES = (_radiation, _tilted_bump, _chirped_bump)
SIGMA2 = np.array([[0, -1j], [1j, 0]])
SIGMA3 = np.diag([1.0, -1.0])


def _jost_symmetry_gaps(u: SampledPotential, points: np.ndarray, rows: np.ndarray,
                        decay_tol: float) -> tuple[float, float]:
    """Largest defects of ω(k) = σ₂ conj(ω(k̄)) σ₂ and ω(k) = σ₃ ω(-k) σ₃."""
    conjugation = parity = 0.0
    for k, row in zip(points, rows):
        at_k, at_conj, at_minus_k = (
            jost_solve(u, q, side="minus", decay_tol=decay_tol).omega_minus[row]
            for q in (k, np.conj(k), -k)
        )
        conjugation = max(conjugation,
                          float(np.max(np.abs(at_k - SIGMA2 @ np.conj(at_conj) @ SIGMA2))))
        parity = max(parity, float(np.max(np.abs(at_k - SIGMA3 @ at_minus_k @ SIGMA3))))
    return conjugation, parity


def suite_roundtrip(settings: Namespace, rng: np.random.Generator) -> list[CheckRecord]:
    """Planted-soliton recovery and the scattering invariants of generic potentials."""
    name = "roundtrip"
    tol = settings.scatter
    ens = SolitonEnsemble([K1], [1.0])
    soliton = nsoliton_field(ens, None, make_grid(-12, 12, 2401), 0.0)
    sd = scattering_coefficients(soliton, default_contour(0.05, 3.0, 20), tol.k_switch,
                                 tol.a_floor, settings.decay_tol, tol.wronskian_tol)
    found = find_discrete_spectrum(sd, soliton, (0.1, 2.0, 0.1, 2.0),
                                   settings.spectrum.newton_tol, settings.spectrum.simple_tol)
    k_error = abs(found.k[0] - K1) if len(found) == 1 else float("inf")
    trace_error = np.max(np.abs(trace_formula_a(found, sd.nodes) - sd.a_values))
    records = [
        check(name, "soliton.count", len(found), 1, "=="),
        check(name, "soliton.k_error", k_error, ROUNDTRIP_TOL),
        check(name, "soliton.reflection", np.max(np.abs(sd.r_values)), ROUNDTRIP_TOL),
        check(name, "soliton.trace_formula", trace_error, ROUNDTRIP_TOL),
    ]
    for key, threshold in (("unitarity_real", tol.unitarity_tol),
                           ("unitarity_imag", tol.unitarity_tol),
                           ("a_even", tol.symmetry_tol), ("b_odd", tol.symmetry_tol)):
        records.append(check(name, f"soliton.{key}", sd.report[key], threshold))

    generic = SampledPotential.from_function(make_grid(-12, 12, 4801), _radiation)
    points = _axis_points(rng, 0.8, 1.2, 5)
    gap = det = 0.0
    for k in points:
        small = jost_solve(generic, k, side="both", decay_tol=settings.decay_tol)
        large = jost_solve_large_k(generic, k, side="minus", k_switch=0.5,
                                   decay_tol=settings.decay_tol)
        gap = max(gap, float(np.max(np.abs(small.omega_minus - large.omega_minus))))
        det = max(det, float(np.max(np.abs(small.determinant("minus") - 1))),
                  float(np.max(np.abs(small.determinant("plus") - 1))))
    records += [
        check(name, "jost.formulation_agreement", gap, FORMULATION_TOL),
        check(name, "jost.determinant", det, tol.det_tol),
    ]

    coarse = SampledPotential.from_function(make_grid(-10, 10, 1001), _radiation)
    conjugation, parity = _jost_symmetry_gaps(coarse, _axis_points(rng, 0.2, 1.5, 20),
                                              rng.integers(0, coarse.grid.n_points, 20),
                                              settings.decay_tol)
    unitarity = 0.0
    for profile in GENERIC_PROFILES:
        report = scattering_coefficients(
            SampledPotential.from_function(make_grid(-12, 12, 4801), profile),
            default_contour(0.05, 3.0, 20), tol.k_switch, tol.a_floor, settings.decay_tol,
            tol.wronskian_tol,
        ).report
        unitarity = max(unitarity, report["unitarity_real"], report["unitarity_imag"])
    records += [
        check(name, "jost.sigma2_symmetry", conjugation, tol.symmetry_tol),
        check(name, "jost.sigma3_symmetry", parity, tol.symmetry_tol),
        check(name, "generic.unitarity", unitarity, tol.unitarity_tol),
    ]

    wide = SampledPotential.from_function(make_grid(-8, 8, 10001), _radiation)
    report = check_asymptotics(
        scattering_coefficients(wide, default_contour(0.05, 20.0, 24), tol.k_switch,
                                tol.a_floor, settings.decay_tol, tol.wronskian_tol),
        wide,
    )
    records += [
        check(name, "asymptotics.b_small_k_slope", report.small_k_slope, 2.7, ">="),
        check(name, "asymptotics.a0_modulus", report.a0_modulus_error, tol.unitarity_tol),
        check(name, "asymptotics.d0_relative", report.d0_relative_error, 1e-3),
    ]
    return records


def suite_soliton(settings: Namespace, rng: np.random.Generator) -> list[CheckRecord]:
    """Reflectionless RHP identities and the integrator against an exact soliton."""
    name = "soliton"
    alpha, beta = settings.alpha, settings.beta
    single = SolitonEnsemble([K1], [1.0])
    grid = make_grid(-6, 6, 241)
    field = nsoliton_field(single, None, grid, 0.0, alpha, beta)
    envelope = one_soliton_envelope(single, grid.nodes, 0.0, alpha, beta)
    envelope_error = np.max(np.abs(np.abs(field.derivative_values) - envelope) / envelope)

    pair = SolitonEnsemble([K1, 0.4 + 1.2j], [1.0, 0.5 - 0.5j])
    det = gauge = 0.0
    for x in rng.uniform(-3, 3, 4):
        solution = solve_reflectionless(pair, None, x, 0.1, alpha, beta)
        for k in rng.uniform(-2, 2, 3) + 1j * rng.uniform(-2, 2, 3):
            det = max(det, abs(np.linalg.det(solution.evaluate(k)) - 1))
        reference = abs(reconstruct(solution, pair).u_value)
        for delta in ([], [0, 2], [1], [0, 1, 2, 3]):
            other = reconstruct(solve_reflectionless(pair, delta, x, 0.1, alpha, beta), pair)
            gauge = max(gauge, abs(abs(other.u_value) - reference))

    records = [
        check(name, "rhp.envelope_relative", envelope_error, ENVELOPE_TOL),
        check(name, "rhp.determinant", det, settings.scatter.det_tol),
        check(name, "rhp.gauge_invariance", gauge, GAUGE_TOL),
        check(name, "rhp.stationary_velocity", abs(velocity(K1, 1.0, 2.0)), 1e-12),
    ]

    box = make_grid(-20, 20, 1024)
    t_end = settings.evolve.t_end
    start = nsoliton_field(single, None, box, 0.0, alpha, beta)
    run = evolve(start, evolver_config(settings, t_end=t_end, snapshot_interval=None,
                                       snapshot_times=(), zero_mode_policy="analytic_limit"))
    exact = nsoliton_field(single, None, box, t_end, alpha, beta)
    coarse = default_contour(0.2, 3.0, 10).nodes
    records += [
        check(name, "pde.exact_sup", np.max(np.abs(run.final.values - exact.values)), PDE_TOL),
        check(name, "pde.d0_drift", run.conserved_drift, DRIFT_TOL),
        check(name, "pde.isospectral", isospectral_drift(start, run.final, coarse), PDE_TOL),
    ]

    moving = SolitonEnsemble([MOVING_POLE], [1.0])
    track = make_grid(-30, 30, 1536)
    launched = nsoliton_field(moving, None, track, 0.0, alpha, beta)
    arrived = evolve(launched, evolver_config(settings, t_end=t_end, snapshot_interval=None,
                                              snapshot_times=(),
                                              zero_mode_policy="analytic_limit")).final
    shift = (track.nodes[np.argmax(np.abs(arrived.values))]
             - track.nodes[np.argmax(np.abs(launched.values))])
    lag = abs(shift - velocity(MOVING_POLE, alpha, beta) * t_end) / track.dx
    records.append(check(name, "pde.moving_peak", lag, 2.0, "<="))
    return records


def suite_pc(settings: Namespace, rng: np.random.Generator) -> list[CheckRecord]:
    """Phase geometry and parabolic-cylinder coefficient identities."""
    name = "pc"
    alpha, beta = settings.alpha, settings.beta
    z = rng.uniform(-5, 5, 100) + 1j * rng.uniform(-10, 10, 100)
    recurrence = np.max(np.abs(rgamma(z) - z * rgamma(z + 1)) / np.abs(rgamma(z)))

    identity = 0.0
    for nu, r in zip(rng.uniform(-0.5, 0.5, 10), rng.uniform(0.1, 1.5, 10) * np.exp(
            2j * np.pi * rng.uniform(0, 1, 10))):
        pc = pc_coefficients(r, nu, 1.0, 1.0, 20.0, alpha, beta, settings.asymptote.gamma_nu_max)
        expected = 2 * nu * np.sinh(np.pi * nu) * np.exp(-np.pi * nu) / abs(pc.r0) ** 2
        identity = max(identity, abs(abs(pc.beta12 * pc.beta21) - expected))

    geo = stationary_points(alpha, beta, float(rng.uniform(0.2, 3.0)), settings.asymptote.k0_floor)
    ks = rng.uniform(0.5, 2.0, 8) * np.exp(1j * rng.uniform(0.1, np.pi / 2 - 0.1, 8))
    inverse = np.max(np.abs(f_of_v(velocity(ks, alpha, beta), alpha, beta) - np.abs(ks)),
                     initial=0.0)
    return [
        check(name, "gamma.recurrence", recurrence, GAMMA_TOL),
        check(name, "pc.reflection_identity", identity, GAMMA_TOL),
        check(name, "pc.modulus_nu_0.1", abs(abs(pc_coefficients(1.0, 0.1, 1.0, 1.0, 20.0).beta12)
                                              - 0.2160), 1e-4),
        check(name, "pc.small_nu", pc_coefficients(0.5, 1e-12, 1.0, 1.0, 20.0).m1_norm, 1e-10),
        check(name, "geometry.stationary", np.max(np.abs(phase_derivative(
            geo.stationary_points, geo))), 1e-12),
        check(name, "geometry.velocity_inverse", inverse, 1e-12),
    ]


def _rates_case(grid, ens: SolitonEnsemble, alpha: float, beta: float) -> SampledPotential:
    soliton = nsoliton_field(ens, None, grid, 0.0, alpha, beta)
    return SampledPotential(grid, soliton.values
                            + RATES_RADIATION * np.exp(-grid.nodes**2))


def suite_rates(settings: Namespace, rng: np.random.Generator) -> list[CheckRecord]:
    """Residual decay of the integrator against the cone's leading term."""
    name = "rates"
    alpha, beta = settings.alpha, settings.beta
    planted = SolitonEnsemble([RATES_POLE], [1.0])
    fine = _rates_case(make_grid(-20, 20, 4001), planted, alpha, beta)
    sd = scattering_coefficients(fine, default_contour(0.05, 2.5, 40),
                                 settings.scatter.k_switch, settings.scatter.a_floor,
                                 settings.decay_tol, settings.scatter.wronskian_tol)
    ens = find_discrete_spectrum(sd, fine, (0.1, 2.0, 0.1, 2.0),
                                 settings.spectrum.newton_tol, settings.spectrum.simple_tol)
    cone = settings.asymptote.cone
    selection = cone_select(ens, sd, cone, alpha, beta)
    u0 = _rates_case(make_grid(*RATES_BOX), planted, alpha, beta)
    cfg = evolver_config(settings, zero_mode_policy="analytic_limit",
                         snapshot_interval=None, snapshot_times=())
    rows = rate_study(u0, ens, sd, cone, settings.asymptote.t_sweep, cfg,
                      settings.asymptote.bound_points, settings.asymptote.k0_floor,
                      settings.asymptote.gamma_nu_max)
    slope = fit_decay_rate([(row.t, row.residual_sup) for row in rows])[0] \
        if len(rows) >= 4 else float("nan")
    ratio = max(row.residual_sup / row.bound if row.bound > 0 else float("inf") for row in rows)
    return [
        check(name, "cone.solitons_inside", selection.n_in, 1, "=="),
        check(name, "residual.slope", slope, RATE_WINDOW, "in"),
        check(name, "residual.bound_ratio", ratio, BOUND_SLACK, "<="),
    ]


SUITE_RUNNERS: dict[str, Callable[[Namespace, np.random.Generator], list[CheckRecord]]] = {
    "trivial": suite_trivial,
    "roundtrip": suite_roundtrip,
    "soliton": suite_soliton,
    "pc": suite_pc,
    "rates": suite_rates,
}


def run_suite(suite: str, settings: Optional[Namespace] = None) -> list[CheckRecord]:
    """Run ``suite`` (or every suite for ``"all"``) and return its records.

    :raise flist.config.ValidationError: Raised for an unknown suite.
    """
    if suite not in SUITES:
        raise ValidationError(f"Unknown suite {suite!r}, choices are {list(SUITES)}")
    settings = settings if settings is not None else default_settings()
    names = list(SUITE_RUNNERS) if suite == "all" else [suite]
    records: list[CheckRecord] = []
    for name in names:
        position = list(SUITE_RUNNERS).index(name)
        logger.info("Running suite %s with seed %s", name, settings.seed)
        rng = np.random.default_rng([settings.seed, position])
        records.extend(SUITE_RUNNERS[name](settings, rng))
    failed = sum(not record.passed for record in records)
    logger.info("%s of %s checks passed", len(records) - failed, len(records))
    return records
