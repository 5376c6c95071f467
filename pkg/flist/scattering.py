"""
    flist.scattering
    ----------------

    This module solves the Jost problem of the Fokas-Lenells x-equation and
    turns its solutions into scattering data on the cross contour.

    The Jost matrices are written in the gauge that makes them tend to the
    identity as k grows::

        ω_x + ik²[σ₃, ω] = V₁ω,
        V₁ = [[ (i/2)|u_x|²,      k u_x e^{ip} ],
              [ -k ū_x e^{-ip},  -(i/2)|u_x|² ]],   p(x) = ∫_{-∞}^x |u_x|².

    Two integrators are provided. The small-k solver steps ``ω e^{-ik²xσ₃}``
    with a fourth-order Magnus scheme. The large-k solver steps the first
    column after subtracting its leading large-k behaviour, which turns the
    problem into an affine system driven by the source returned by
    :func:`u_tilde`; the second column follows from the conjugation symmetry.
"""
from dataclasses import dataclass, field
import logging
from typing import Optional, TYPE_CHECKING

import numpy as np
from scipy.integrate import trapezoid

from flist.grid import (
    DECAY_TOL, DecayError, GridSpecError, NumericalError, SampledPotential,
    SpectralContour, antiderivative, check_decay, shifted, spectral_derivative,
)

if TYPE_CHECKING:
    from flist.spectrum import SolitonEnsemble

logger = logging.getLogger("flist")

K_SWITCH = 1.0
A_FLOOR = 1e-6
WRONSKIAN_TOL = 1e-6
UNITARITY_TOL = 1e-6
SYMMETRY_TOL = 1e-8
DET_TOL = 1e-8

# exponent beyond which e^{...} is no longer representable
_EXP_LIMIT = 700.0
_SMALL_Q = 1e-4


class NonDecayingPotential(DecayError):
    """Raised when a potential handed to the Jost solvers does not decay."""


class IllConditioned(NumericalError):
    """Raised when the grid cannot resolve the oscillation or growth at k."""


class DerivativeUnavailable(NumericalError):
    """Raised when the field is too rough for the large-k source term."""


class SpectralSingularity(NumericalError):
    """Raised when |a(k)| falls below the floor at a contour node."""


class InsufficientRange(NumericalError):
    """Raised when the contour does not reach far enough for the asymptotic fits."""


@dataclass(frozen=True, eq=False)
class LargeKAuxiliary:
    """The subtracted large-k unknowns of the first Jost column and their source."""
    eta11: np.ndarray
    eta21: np.ndarray
    u_tilde: np.ndarray


@dataclass(frozen=True, eq=False)
class JostSolution:
    """Jost matrices at one ``k``; arrays have shape ``(n_points, 2, 2)``.

    Only the requested sides are filled; an unrequested one is ``None``.
    """
    k: complex
    x: np.ndarray
    omega_plus: Optional[np.ndarray]
    omega_minus: Optional[np.ndarray]
    formulation_used: str
    auxiliary: Optional[LargeKAuxiliary] = None

    def omega(self, side: str) -> np.ndarray:
        value = self.omega_plus if side == "plus" else self.omega_minus
        if value is None:
            raise ValueError(f"Jost solution was not computed for side '{side}'")
        return value

    def determinant(self, side: str) -> np.ndarray:
        return np.linalg.det(self.omega(side))


@dataclass(frozen=True, eq=False)
class ScatteringData:
    """a, b and r = b/a on the contour nodes (ordered as ``contour.nodes``)."""
    contour: SpectralContour
    a_values: np.ndarray
    b_values: np.ndarray
    r_values: np.ndarray
    a0: complex
    discrete: Optional['SolitonEnsemble'] = None
    report: dict = field(default_factory=dict)

    @property
    def nodes(self) -> np.ndarray:
        return self.contour.nodes

    def real_axis(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(k, r)`` on the real-axis nodes."""
        mask = self.contour.on_real_axis
        return self.contour.real_nodes, self.r_values[mask]

    def imag_axis(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(s, r)`` on the imaginary-axis nodes ``k = i s``."""
        mask = ~self.contour.on_real_axis
        return self.contour.imag_nodes, self.r_values[mask]


@dataclass(frozen=True)
class AsymptoticsReport:
    large_k_slope: float
    small_k_slope: float
    a0_modulus_error: float
    d0_estimate: float
    d0_integral: Optional[float] = None
    d0_relative_error: Optional[float] = None

    @property
    def passed(self) -> bool:
        checks = [
            self.large_k_slope >= 0.8,
            self.small_k_slope >= 2.7,
            self.a0_modulus_error < 1e-6,
        ]
        if self.d0_relative_error is not None:
            checks.append(self.d0_relative_error < 1e-3)
        return all(checks)


def default_contour(k_min: float = 0.05, k_max: float = 20.0, n: int = 100) -> SpectralContour:
    """Log-spaced nodes in ``[k_min, k_max]`` mirrored to both half axes.

    ``n`` nodes per half axis, so the contour holds ``4 n`` nodes.
    """
    if not 0 < k_min < k_max or n < 1:
        raise GridSpecError(f"Bad contour range [{k_min}, {k_max}] with {n} nodes")
    half = np.geomspace(k_min, k_max, n)
    nodes = np.concatenate([-half[::-1], half])
    return SpectralContour(nodes, nodes.copy())


class _GaugeFields:
    """u_x and the gauge phase p at the nodes and at the step midpoints."""
    def __init__(self, u: SampledPotential, derivative_method: str = "spectral"):
        grid = u.grid
        half = grid.dx / 2
        ux = u.ux(derivative_method)
        density = np.abs(ux) ** 2
        self.grid = grid
        self.h = grid.dx
        self.x = grid.nodes
        self.ux = ux
        self.p = antiderivative(density, grid).real
        self.ux_mid = shifted(ux, grid, half)[:-1]
        self.p_mid = antiderivative(density, grid, shift=half).real[:-1]
        self.diag = 0.5j * density
        self.diag_mid = 0.5j * np.abs(self.ux_mid) ** 2
        self.coupling = ux * np.exp(1j * self.p)
        self.coupling_mid = self.ux_mid * np.exp(1j * self.p_mid)
        self._u = u
        self._source = None

    def source(self, derivative_method: str = "spectral") -> tuple[np.ndarray, np.ndarray]:
        """The large-k source (ū_xx - (i/2)|u_x|² ū_x) e^{-ip} at nodes and midpoints."""
        if self._source is None:
            uxx = spectral_derivative(self.ux, self.grid, method=derivative_method)
            _check_resolved(self.ux, self.grid)
            uxx_mid = shifted(uxx, self.grid, self.h / 2)[:-1]
            nodes = (np.conj(uxx) - self.diag * np.conj(self.ux)) * np.exp(-1j * self.p)
            mids = (np.conj(uxx_mid) - self.diag_mid * np.conj(self.ux_mid)) \
                * np.exp(-1j * self.p_mid)
            self._source = (nodes, mids)
        return self._source


def _check_resolved(ux: np.ndarray, grid) -> None:
    spectrum = np.abs(np.fft.fft(ux))
    peak = spectrum.max()
    if peak == 0:
        return
    kappa = np.abs(grid.wavenumbers)
    tail = spectrum[kappa > (2.0 / 3.0) * kappa.max()]
    if grid.n_points < 8 or (tail.size and tail.max() > 1e-6 * peak):
        raise DerivativeUnavailable(
            "Field is under-resolved on the grid; second derivative of u is unreliable"
        )


def _generator(k: np.ndarray, diag, coupling) -> np.ndarray:
    """G = V₁ - ik²σ₃ for every k at one x."""
    k2 = k * k
    g = np.empty(k.shape + (2, 2), dtype=complex)
    g[:, 0, 0] = diag - 1j * k2
    g[:, 1, 1] = -(diag - 1j * k2)
    g[:, 0, 1] = k * coupling
    g[:, 1, 0] = -k * np.conj(coupling)
    return g


def _magnus(g0: np.ndarray, gm: np.ndarray, g1: np.ndarray, h: float) -> np.ndarray:
    return h / 6 * (g0 + 4 * gm + g1) - h * h / 12 * (g0 @ g1 - g1 @ g0)


def _half_spread(omega: np.ndarray) -> np.ndarray:
    """q with ±q the eigenvalues of a traceless 2x2 matrix."""
    return np.sqrt(omega[..., 0, 0] ** 2 + omega[..., 0, 1] * omega[..., 1, 0])


def _sinhc(q: np.ndarray) -> np.ndarray:
    small = np.abs(q) < _SMALL_Q
    safe = np.where(small, 1.0, q)
    return np.where(small, 1 + q * q / 6 + q**4 / 120, np.sinh(safe) / safe)


def _expm_traceless(omega: np.ndarray, sign: float = 1.0) -> np.ndarray:
    """exp(sign·Ω) for traceless 2x2 Ω."""
    q = _half_spread(omega)
    result = (sign * _sinhc(q))[..., None, None] * omega
    cosh = np.cosh(q)
    result[..., 0, 0] += cosh
    result[..., 1, 1] += cosh
    return result


def _phi1(z: np.ndarray) -> np.ndarray:
    small = np.abs(z) < 1e-3
    safe = np.where(small, 1.0, z)
    series = 1 + z / 2 + z**2 / 6 + z**3 / 24 + z**4 / 120
    return np.where(small, series, (np.exp(safe) - 1) / safe)


def _phi1_prime(z: np.ndarray) -> np.ndarray:
    small = np.abs(z) < 1e-3
    safe = np.where(small, 1.0, z)
    series = 0.5 + z / 3 + z**2 / 8 + z**3 / 30
    return np.where(small, series, (np.exp(safe) * (safe - 1) + 1) / safe**2)


def _guard(k: np.ndarray, grid, growth: bool = False) -> None:
    if k.size == 0:
        return
    if np.any(k == 0):
        raise IllConditioned("k = 0 is a singular point of the Lax pair")
    worst = np.max(np.abs(k) ** 2) * grid.dx
    if worst >= np.pi / 4:
        raise IllConditioned(
            f"|k|²dx = {worst:.3g} exceeds π/4; refine the grid or shrink the contour"
        )
    if growth:
        span = grid.x_max - grid.x_min
        if np.max(2 * np.abs((k * k).imag)) * span > _EXP_LIMIT:
            raise IllConditioned("Exponential growth across the domain overflows; shrink it")


def _propagate(fields: _GaugeFields, ks: np.ndarray, columns: tuple[int, ...],
               direction: str, record: np.ndarray) -> np.ndarray:
    """Step the chosen Jost columns across the grid with the Magnus scheme.

    :return: Array ``(len(ks), len(record), 2, len(columns))`` of ω at the
        recorded node indices.
    """
    h = fields.h
    n = fields.grid.n_points
    k2h = ks * ks * h
    signs = np.array([1.0 if c == 0 else -1.0 for c in columns])
    forward = direction == "forward"
    phase = np.exp((1j if forward else -1j) * k2h[:, None] * signs[None, :])[:, None, :]
    state = np.zeros((ks.size, 2, len(columns)), dtype=complex)
    for i, c in enumerate(columns):
        state[:, c, i] = 1
    slot = {int(j): i for i, j in enumerate(record)}
    out = np.empty((ks.size, len(record), 2, len(columns)), dtype=complex)

    start = 0 if forward else n - 1
    if start in slot:
        out[:, slot[start]] = state
    steps = range(n - 1) if forward else range(n - 2, -1, -1)
    cached = _generator(ks, fields.diag[start], fields.coupling[start])
    for j in steps:
        # interval [x_j, x_{j+1}]
        gm = _generator(ks, fields.diag_mid[j], fields.coupling_mid[j])
        if forward:
            g0 = cached
            g1 = cached = _generator(ks, fields.diag[j + 1], fields.coupling[j + 1])
            state = _expm_traceless(_magnus(g0, gm, g1, h)) @ state * phase
            landed = j + 1
        else:
            g1 = cached
            g0 = cached = _generator(ks, fields.diag[j], fields.coupling[j])
            state = _expm_traceless(_magnus(g0, gm, g1, h), -1.0) @ state * phase
            landed = j
        if landed in slot:
            out[:, slot[landed]] = state
    return out


def _apply_function(values_plus, values_minus, divided, omega_g, vector):
    """f(μI + Ω_G) v, given f(μ ± q) and the divided difference."""
    mean = 0.5 * (values_plus + values_minus)
    return mean[:, None] * vector + divided[:, None] * np.einsum("kij,kj->ki", omega_g, vector)


def _propagate_large_k(fields: _GaugeFields, ks: np.ndarray, direction: str,
                       record: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Step the subtracted first column (η₁₁, η₂₁) with an affine Magnus scheme.

    :return: ``(omega_column, eta)``, each of shape ``(len(ks), len(record), 2)``.
    """
    h = fields.h
    n = fields.grid.n_points
    src_nodes, src_mid = fields.source()
    forward = direction == "forward"
    sign = 1.0 if forward else -1.0
    k2 = ks * ks
    mu = sign * 1j * k2 * h
    slot = {int(j): i for i, j in enumerate(record)}
    eta = np.zeros((ks.size, 2), dtype=complex)
    out = np.zeros((ks.size, len(record), 2), dtype=complex)

    def source(value):
        s = np.zeros((ks.size, 2), dtype=complex)
        s[:, 1] = 0.5j / ks * value
        return s

    steps = range(n - 1) if forward else range(n - 2, -1, -1)
    for j in steps:
        g0 = _generator(ks, fields.diag[j], fields.coupling[j])
        gm = _generator(ks, fields.diag_mid[j], fields.coupling_mid[j])
        g1 = _generator(ks, fields.diag[j + 1], fields.coupling[j + 1])
        s0, sm, s1 = source(src_nodes[j]), source(src_mid[j]), source(src_nodes[j + 1])
        omega_g = sign * _magnus(g0, gm, g1, h)
        c = h / 6 * (s0 + 4 * sm + s1) - h * h / 12 * (
            np.einsum("kij,kj->ki", g0, s1) - np.einsum("kij,kj->ki", g1, s0)
            + 1j * k2[:, None] * (s1 - s0)
        )
        q = _half_spread(omega_g)
        exp_mu = np.exp(mu)
        propagated = exp_mu[:, None] * (
            np.cosh(q)[:, None] * eta
            + _sinhc(q)[:, None] * np.einsum("kij,kj->ki", omega_g, eta)
        )
        phi_plus, phi_minus = _phi1(mu + q), _phi1(mu - q)
        small = np.abs(q) < _SMALL_Q
        safe = np.where(small, 1.0, q)
        divided = np.where(small, _phi1_prime(mu), (phi_plus - phi_minus) / (2 * safe))
        eta = propagated + sign * _apply_function(phi_plus, phi_minus, divided, omega_g, c)
        landed = j + 1 if forward else j
        if landed in slot:
            out[:, slot[landed]] = eta
    start = 0 if forward else n - 1
    if start in slot:
        out[:, slot[start]] = 0

    g = np.conj(fields.ux[record]) * np.exp(-1j * fields.p[record])
    omega = np.empty_like(out)
    omega[..., 0] = 1 + out[..., 0]
    omega[..., 1] = out[..., 1] - 0.5j / ks[:, None] * g[None, :]
    return omega, out


def _conjugate_partner(column1_at_conj_k: np.ndarray) -> np.ndarray:
    """Second Jost column at k from the first column at k̄ (σ₂ symmetry)."""
    result = np.empty_like(column1_at_conj_k)
    result[..., 0] = -np.conj(column1_at_conj_k[..., 1])
    result[..., 1] = np.conj(column1_at_conj_k[..., 0])
    return result


def _prepare(u: SampledPotential, decay_tol: float) -> None:
    try:
        check_decay(u, decay_tol)
    except DecayError as exc:
        raise NonDecayingPotential(str(exc)) from exc


def u_tilde(u: SampledPotential, derivative_method: str = "spectral") -> np.ndarray:
    """The source field of the large-k system, ``(ū_xx - (i/2)|u_x|²ū_x) e^{-ip}``.

    :raise flist.scattering.DerivativeUnavailable: Raised if ``u`` is too rough
        on its grid for a reliable second derivative.
    """
    return _GaugeFields(u, derivative_method).source(derivative_method)[0]


def jost_solve(u: SampledPotential, k: complex, side: str = "minus",
               decay_tol: float = DECAY_TOL,
               derivative_method: str = "spectral") -> JostSolution:
    """Solve for ω^± at every grid node with the Magnus integrator.

    ``side`` is ``"minus"`` (normalised at x_min, stepped forward), ``"plus"``
    (normalised at x_max, stepped backward) or ``"both"``.

    :raise flist.scattering.NonDecayingPotential: Raised if ``u`` does not decay.
    :raise flist.scattering.IllConditioned: Raised if the grid cannot resolve ``k``.
    """
    _prepare(u, decay_tol)
    ks = np.array([complex(k)])
    _guard(ks, u.grid, growth=True)
    fields = _GaugeFields(u, derivative_method)
    every = np.arange(u.grid.n_points)
    minus = plus = None
    if side in ("minus", "both"):
        minus = _propagate(fields, ks, (0, 1), "forward", every)[0]
    if side in ("plus", "both"):
        plus = _propagate(fields, ks, (0, 1), "backward", every)[0]
    if minus is None and plus is None:
        raise ValueError(f"Unknown side: {side}")
    logger.debug("Small-k Jost solve at k=%s, side=%s", k, side)
    return JostSolution(complex(k), fields.x, plus, minus, "small_k")


def jost_solve_large_k(u: SampledPotential, k: complex, side: str = "minus",
                       k_switch: float = K_SWITCH, decay_tol: float = DECAY_TOL,
                       derivative_method: str = "spectral") -> JostSolution:
    """Solve for ω^± through the subtracted large-k system.

    The first column is integrated at ``k`` and at ``k̄``; the second column
    at ``k`` is the σ₂-conjugate of the first column at ``k̄``. ``side`` is
    ``"minus"``, ``"plus"`` or ``"both"``; with ``"both"`` the auxiliary
    functions are those of the minus side.

    :raise flist.scattering.DerivativeUnavailable: Raised if ``u`` is too rough.
    :raise flist.scattering.IllConditioned: Raised if ``|k| < k_switch`` or the
        grid cannot resolve ``k``.
    """
    _prepare(u, decay_tol)
    if abs(k) < k_switch:
        raise IllConditioned(f"|k| = {abs(k):.3g} is below k_switch = {k_switch}")
    pair = np.array([complex(k), complex(k).conjugate()])
    _guard(pair, u.grid, growth=True)
    fields = _GaugeFields(u, derivative_method)
    every = np.arange(u.grid.n_points)
    omegas, auxiliary = {}, None
    for name, direction in (("minus", "forward"), ("plus", "backward")):
        if side not in (name, "both"):
            continue
        columns, eta = _propagate_large_k(fields, pair, direction, every)
        omegas[name] = np.stack([columns[0], _conjugate_partner(columns[1])], axis=-1)
        if auxiliary is None:
            auxiliary = LargeKAuxiliary(eta[0, :, 0], eta[0, :, 1], fields.source()[0])
    if not omegas:
        raise ValueError(f"Unknown side: {side}")
    logger.debug("Large-k Jost solve at k=%s, side=%s", k, side)
    return JostSolution(complex(k), fields.x, omegas.get("plus"), omegas.get("minus"),
                        "large_k", auxiliary)


def _wronskian(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    return first[..., 0] * second[..., 1] - first[..., 1] * second[..., 0]


def _columns_small_k(fields, ks, record):
    minus = _propagate(fields, ks, (0, 1), "forward", record)
    plus2 = _propagate(fields, ks, (1,), "backward", record)[..., 0]
    return minus[..., 0], minus[..., 1], plus2


def _columns_large_k(fields, ks, record):
    pair = np.concatenate([ks, np.conj(ks)])
    forward, _ = _propagate_large_k(fields, pair, "forward", record)
    backward, _ = _propagate_large_k(fields, np.conj(ks), "backward", record)
    n = ks.size
    return forward[:n], _conjugate_partner(forward[n:]), _conjugate_partner(backward)


def scattering_coefficients(u: SampledPotential, contour: SpectralContour,
                            k_switch: float = K_SWITCH, a_floor: float = A_FLOOR,
                            decay_tol: float = DECAY_TOL,
                            wronskian_tol: float = WRONSKIAN_TOL,
                            derivative_method: str = "spectral") -> ScatteringData:
    """Compute a, b and r on every contour node.

    a = det(ω₁⁻, ω₂⁺) and b = det(ω₂⁻, ω₂⁺) e^{2ik²x} are evaluated at the node
    nearest x = 0 and re-evaluated at the quarter points of the grid to check
    that both are x-independent.

    :raise flist.scattering.NonDecayingPotential: Raised if ``u`` does not decay.
    :raise flist.scattering.IllConditioned: Raised if the grid cannot resolve
        the largest contour node.
    :raise flist.scattering.SpectralSingularity: Raised if |a| < ``a_floor``
        anywhere on the contour.
    """
    _prepare(u, decay_tol)
    ks = contour.nodes
    _guard(ks, u.grid)
    fields = _GaugeFields(u, derivative_method)
    n = u.grid.n_points
    centre = u.grid.index_nearest(0.0)
    checks = sorted({n // 4, n // 2, (3 * n) // 4})
    record = np.array(sorted({centre, *checks}))
    at = {int(j): i for i, j in enumerate(record)}

    small = np.abs(ks) < k_switch
    minus1 = np.empty((ks.size, record.size, 2), dtype=complex)
    minus2 = np.empty_like(minus1)
    plus2 = np.empty_like(minus1)
    for mask, solver in ((small, _columns_small_k), (~small, _columns_large_k)):
        if np.any(mask):
            m1, m2, p2 = solver(fields, ks[mask], record)
            minus1[mask], minus2[mask], plus2[mask] = m1, m2, p2
    logger.info(
        "Scattered %s contour nodes (%s small-k, %s large-k)",
        ks.size, int(small.sum()), int((~small).sum()),
    )

    x_rec = fields.x[record]
    a_all = _wronskian(minus1, plus2)
    b_all = _wronskian(minus2, plus2) * np.exp(2j * (ks * ks)[:, None] * x_rec[None, :])
    a = a_all[:, at[centre]]
    b = b_all[:, at[centre]]
    drift = max(
        float(np.max(np.abs(a_all - a[:, None]))),
        float(np.max(np.abs(b_all - b[:, None]))),
    )

    weakest = int(np.argmin(np.abs(a)))
    if abs(a[weakest]) < a_floor:
        raise SpectralSingularity(
            f"|a(k)| = {abs(a[weakest]):.3g} < {a_floor:.3g} at k = {ks[weakest]}"
        )
    r = b / a
    a0 = _extrapolate_a0(contour, a)
    report = _invariant_report(contour, a, b, r, drift)
    if drift > wronskian_tol:
        logger.warning("Wronskian varies with x by %.3g (tolerance %.3g)", drift, wronskian_tol)
    return ScatteringData(contour, a, b, r, complex(a0), None, report)


def _extrapolate_a0(contour: SpectralContour, a: np.ndarray) -> complex:
    """Quadratic interpolation of a in k² through the three smallest real nodes."""
    real = contour.real_nodes
    positive = np.nonzero(real > 0)[0]
    if positive.size == 0:
        return complex(a[np.argmin(np.abs(contour.nodes))])
    chosen = positive[np.argsort(real[positive])[:3]]
    k2 = real[chosen] ** 2
    a0 = 0j
    for i, node in enumerate(chosen):
        others = np.delete(k2, i)
        a0 += a[node] * np.prod(others / (others - k2[i]))
    return complex(a0)


def _invariant_report(contour, a, b, r, drift) -> dict:
    real = contour.on_real_axis
    n_real = contour.real_nodes.size
    mod2 = np.abs(a) ** 2
    unit_real = np.abs(mod2[real] * (1 + np.abs(r[real]) ** 2) - 1)
    unit_imag = np.abs(mod2[~real] * (1 - np.abs(r[~real]) ** 2) - 1)
    parts = [(a[:n_real], b[:n_real]), (a[n_real:], b[n_real:])]
    even = max((float(np.max(np.abs(pa - pa[::-1]), initial=0)) for pa, _ in parts), default=0)
    odd = max((float(np.max(np.abs(pb + pb[::-1]), initial=0)) for _, pb in parts), default=0)
    modulus = np.abs(a)
    return {
        "unitarity_real": float(np.max(unit_real, initial=0)),
        "unitarity_imag": float(np.max(unit_imag, initial=0)),
        "a_even": even,
        "b_odd": odd,
        "wronskian_drift": drift,
        "c_observed": float(min(modulus.min(), (1 / modulus).min())),
    }


def _slope(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def check_asymptotics(sd: ScatteringData, u: Optional[SampledPotential] = None,
                      k_low: float = 0.05, k_high: float = 20.0) -> AsymptoticsReport:
    """Fit the decay of |a - 1| at large k and of |b| at small k, and check a(0).

    When ``u`` is given, 2·arg a(0), unwrapped along the positive real nodes
    from the largest k down, is compared against ∫|u_x|².

    :raise flist.scattering.InsufficientRange: Raised if the real nodes do not
        reach below ``k_low`` and above ``k_high``.
    """
    real = sd.contour.real_nodes
    mask = sd.contour.on_real_axis
    positive = real > 0
    k = real[positive]
    a = sd.a_values[mask][positive]
    b = sd.b_values[mask][positive]
    if k.size == 0 or k.min() > k_low or k.max() < k_high:
        raise InsufficientRange(
            f"Real nodes must span [{k_low}, {k_high}] for the asymptotic fits"
        )
    order = np.argsort(k)
    k, a, b = k[order], a[order], b[order]
    high = k >= k.max() / 4
    low = k <= 4 * k.min()
    if high.sum() < 3 or low.sum() < 3:
        raise InsufficientRange("Need at least three nodes at each end of the real axis")

    gap = np.abs(a[high] - 1)
    large_slope = float("inf") if gap.max() < 1e-10 else _slope(1 / k[high], gap)
    small = np.abs(b[low])
    small_slope = float("inf") if small.max() < 1e-10 else _slope(k[low], small)

    phases = np.unwrap(np.angle(a[::-1]))
    step = np.angle(sd.a0 / a[0])
    d0_estimate = float(2 * (phases[-1] + step))
    integral = relative = None
    if u is not None:
        integral = float(trapezoid(np.abs(u.ux()) ** 2, u.grid.nodes))
        relative = abs(d0_estimate - integral) / integral if integral > 0 else abs(d0_estimate)
    return AsymptoticsReport(
        large_k_slope=large_slope,
        small_k_slope=small_slope,
        a0_modulus_error=abs(abs(sd.a0) - 1),
        d0_estimate=d0_estimate,
        d0_integral=integral,
        d0_relative_error=relative,
    )


def evaluate_a(u: SampledPotential, ks, decay_tol: float = DECAY_TOL,
               derivative_method: str = "spectral") -> np.ndarray:
    """a(k) = det(ω₁⁻, ω₂⁺) at arbitrary k in the closure of D⁺ = {Im k² > 0}.

    Both columns are stepped in their stable directions, so the result is the
    analytic continuation of a off the contour.
    """
    _prepare(u, decay_tol)
    ks = np.atleast_1d(np.asarray(ks, dtype=complex))
    _guard(ks, u.grid)
    fields = _GaugeFields(u, derivative_method)
    record = np.array([u.grid.index_nearest(0.0)])
    minus1 = _propagate(fields, ks, (0,), "forward", record)[:, 0, :, 0]
    plus2 = _propagate(fields, ks, (1,), "backward", record)[:, 0, :, 0]
    return _wronskian(minus1, plus2)


def connection_coefficient(u: SampledPotential, k: complex, decay_tol: float = DECAY_TOL,
                           derivative_method: str = "spectral") -> complex:
    """β with ω₁⁻(x, k) = β e^{2ik²x} ω₂⁺(x, k), valid at a zero k of a.

    β is the least-squares ratio of the two columns at the node nearest x = 0.
    """
    _prepare(u, decay_tol)
    ks = np.array([complex(k)])
    _guard(ks, u.grid)
    fields = _GaugeFields(u, derivative_method)
    centre = u.grid.index_nearest(0.0)
    record = np.array([centre])
    minus1 = _propagate(fields, ks, (0,), "forward", record)[0, 0, :, 0]
    plus2 = _propagate(fields, ks, (1,), "backward", record)[0, 0, :, 0]
    ratio = np.vdot(plus2, minus1) / np.vdot(plus2, plus2)
    return complex(ratio * np.exp(-2j * k * k * fields.x[centre]))
