"""
    flist.rhp
    ---------

    This module solves the reflectionless Riemann-Hilbert problem through its
    partial-fraction ansatz and reconstructs u and u_x from the expansion of
    the solution at k = 0. It also provides the closed-form one-soliton
    envelope used as an independent check.

    For a Blaschke index set Δ the unknown is ``m = M a_Δ^{σ₃}``, whose poles
    at the zeros k_j sit in the first column for j ∉ Δ and in the second
    column for j ∈ Δ. The poles at k̄_j follow from the symmetry
    ``m(k) = σ₂ conj(m(k̄)) σ₂``, so only the residues at the k_j are unknown.
"""
from collections.abc import Iterable
from dataclasses import dataclass
import logging
from typing import Optional, Union
import warnings

import numpy as np
from scipy.linalg import LinAlgError, LinAlgWarning, lu_factor, lu_solve

from flist.grid import NumericalError, SampledPotential, SpatialGrid
from flist.spectrum import BlaschkeSplit, SolitonEnsemble, blaschke_split, trace_formula_a

logger = logging.getLogger("flist")

ALPHA = 1.0
BETA = 2.0
GAMMA_CLAMP = 700.0

# column map of the conjugate residue: B = K conj(A)
_K_OUTSIDE = np.array([[0, -1], [1, 0]], dtype=complex)
_K_INSIDE = -_K_OUTSIDE

Delta = Optional[Iterable[int]]


class SingularSystem(NumericalError):
    """Raised when the residue system cannot be solved reliably."""


class WrongSolitonCount(NumericalError):
    """Raised when a one-soliton formula is given another number of poles."""


def eta_squared(k, alpha: float = ALPHA, beta: float = BETA):
    """η(k)² = α(k - β/(2k))² = α(k² - β + β²/(4k²))."""
    k2 = np.asarray(k, dtype=complex) ** 2
    return alpha * (k2 - beta + beta**2 / (4 * k2))


def velocity(k, alpha: float = ALPHA, beta: float = BETA):
    """Soliton velocity -α(1 - β²/(4|k|⁴))."""
    return -alpha * (1 - beta**2 / (4 * np.abs(k) ** 4))


def log_gamma(ens: SolitonEnsemble, x: float, t: float, alpha: float = ALPHA,
              beta: float = BETA, clamp: float = GAMMA_CLAMP) -> np.ndarray:
    """log γ_j = log c_j + 2i(k_j²x + η(k_j)²t) for all 2N poles, real part clamped."""
    poles = ens.poles
    value = np.log(ens.constants) + 2j * (poles**2 * x + eta_squared(poles, alpha, beta) * t)
    return np.clip(value.real, -clamp, clamp) + 1j * value.imag


@dataclass(frozen=True, eq=False)
class MeromorphicSolution:
    """The solved partial-fraction ansatz at one (x, t).

    ``nu_coeffs[j]`` is the residue at k_j and ``zeta_coeffs[j]`` the residue
    at k̄_j; ``in_delta[j]`` selects which column they occupy. The ``*_dx``
    arrays are their x-derivatives.
    """
    poles: np.ndarray
    in_delta: np.ndarray
    gamma: np.ndarray
    nu_coeffs: np.ndarray
    zeta_coeffs: np.ndarray
    nu_dx: np.ndarray
    zeta_dx: np.ndarray
    split: BlaschkeSplit
    x: float
    t: float
    residual: float

    def _columns(self):
        own = np.where(self.in_delta, 1, 0)
        return own, 1 - own

    def _partial_fractions(self, k: complex, nu, zeta, power: int = 1) -> np.ndarray:
        """Σ residues/(k - pole)^power, each residue placed in its column."""
        own, other = self._columns()
        total = np.zeros((2, 2), dtype=complex)
        for j in range(self.poles.size):
            total[:, own[j]] += nu[j] / (k - self.poles[j]) ** power
            total[:, other[j]] += zeta[j] / (k - np.conj(self.poles[j])) ** power
        return total

    def renormalised(self, k: complex) -> np.ndarray:
        """m(k) = M(k) a_Δ(k)^{σ₃}."""
        return np.eye(2) + self._partial_fractions(k, self.nu_coeffs, self.zeta_coeffs)

    def evaluate(self, k: complex) -> np.ndarray:
        """M(k) away from the poles."""
        a_delta = complex(self.split(k))
        return self.renormalised(k) @ np.diag([1 / a_delta, a_delta])

    def derivative_at_zero(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(M(0), M_k(0), ∂_x M(0), ∂_x M_k(0))``."""
        m0 = np.eye(2) + self._partial_fractions(0, self.nu_coeffs, self.zeta_coeffs)
        m1 = -self._partial_fractions(0, self.nu_coeffs, self.zeta_coeffs, power=2)
        m0_x = self._partial_fractions(0, self.nu_dx, self.zeta_dx)
        m1_x = -self._partial_fractions(0, self.nu_dx, self.zeta_dx, power=2)
        a0 = complex(self.split(0.0))
        a0_k = complex(self.split.derivative(0.0))
        d0 = np.diag([1 / a0, a0])
        d1 = np.diag([-a0_k / a0**2, a0_k])
        return m0 @ d0, m1 @ d0 + m0 @ d1, m0_x @ d0, m1_x @ d0 + m0_x @ d1


@dataclass(frozen=True)
class ReconstructedField:
    u_value: complex
    u_x_value: complex
    d0: float
    phase_ambiguity: bool


def adaptive_delta(ens: SolitonEnsemble, x: float, t: float, alpha: float = ALPHA,
                   beta: float = BETA) -> list[int]:
    """Δ = {j : |γ_j| > 1}, which keeps every coefficient of the system bounded."""
    return [int(j) for j in np.nonzero(log_gamma(ens, x, t, alpha, beta).real > 0)[0]]


def _conjugate_residues(nu: np.ndarray, in_delta: np.ndarray) -> np.ndarray:
    maps = np.where(in_delta[:, None, None], _K_INSIDE, _K_OUTSIDE)
    return np.einsum("jab,jb->ja", maps, np.conj(nu))


def solve_reflectionless(ens: SolitonEnsemble, delta: Delta, x: float, t: float,
                         alpha: float = ALPHA, beta: float = BETA,
                         clamp: float = GAMMA_CLAMP) -> MeromorphicSolution:
    """Impose the residue conditions at every k_j and solve for the residues.

    :param ens: The (nonempty) reflectionless data.
    :param delta: Indices into ``ens.poles`` whose poles are moved to the
        second column, or ``None`` for the adaptive choice.
    :param x: The spatial coordinate.
    :param t: The time.

    :raise flist.rhp.SingularSystem: Raised if the system is numerically singular.
    """
    if len(ens) == 0:
        raise SingularSystem("The residue system needs at least one pole")
    if delta is None:
        delta = adaptive_delta(ens, x, t, alpha, beta)
    split = blaschke_split(ens, delta)
    poles = ens.poles
    n = poles.size
    in_delta = np.zeros(n, dtype=bool)
    in_delta[list(split.delta_set)] = True

    log_g = log_gamma(ens, x, t, alpha, beta, clamp)
    outside = ~in_delta
    coef = np.empty(n, dtype=complex)
    if np.any(outside):
        coef[outside] = np.exp(log_g[outside] + 2 * np.log(split(poles[outside])))
    if np.any(in_delta):
        coef[in_delta] = np.exp(-log_g[in_delta] - 2 * np.log(split.derivative(poles[in_delta])))
    rate = np.where(in_delta, -2j, 2j) * poles**2

    with np.errstate(divide="ignore", invalid="ignore"):
        own = -coef[:, None] / (poles[:, None] - poles[None, :])
    cross = in_delta[:, None] != in_delta[None, :]
    p_blocks = np.where(cross, own, 0)
    sign = np.where(in_delta, -1.0, 1.0)[None, :]
    same = ~cross
    q_blocks = np.where(same, -coef[:, None] / (poles[:, None] - np.conj(poles)[None, :]), 0) * sign

    p_matrix = np.eye(2 * n, dtype=complex) + np.kron(p_blocks, np.eye(2))
    q_matrix = np.kron(q_blocks, _K_OUTSIDE)
    rhs = np.zeros(2 * n, dtype=complex)
    rhs[0::2] = np.where(in_delta, coef, 0)
    rhs[1::2] = np.where(in_delta, 0, coef)

    scale = np.repeat(1 / (1 + np.abs(coef)), 2)
    p_matrix *= scale[:, None]
    q_matrix *= scale[:, None]
    rhs *= scale

    real_system = np.block([
        [p_matrix.real + q_matrix.real, q_matrix.imag - p_matrix.imag],
        [p_matrix.imag + q_matrix.imag, p_matrix.real - q_matrix.real],
    ])
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", LinAlgWarning)
            factors = lu_factor(real_system)
    except (LinAlgError, LinAlgWarning, ValueError) as exc:
        raise SingularSystem(f"Residue system is singular at x={x}, t={t}") from exc

    def solve(vector):
        solution = lu_solve(factors, np.concatenate([vector.real, vector.imag]))
        return solution[:2 * n] + 1j * solution[2 * n:]

    z = solve(rhs)
    residual = np.linalg.norm(p_matrix @ z + q_matrix @ np.conj(z) - rhs) \
        / (np.linalg.norm(rhs) + np.linalg.norm(z) + 1e-300)
    if not np.all(np.isfinite(z)) or residual > 1e-8:
        raise SingularSystem(
            f"Residue system is ill-conditioned at x={x}, t={t} (residual {residual:.3g})"
        )
    # every coefficient varies as exp(rate x), so ∂_x z solves the same system with S z
    z_dx = solve(scale * np.repeat(rate, 2) * z)
    nu = z.reshape(n, 2)
    nu_dx = z_dx.reshape(n, 2)
    return MeromorphicSolution(
        poles=poles, in_delta=in_delta, gamma=np.exp(log_g),
        nu_coeffs=nu, zeta_coeffs=_conjugate_residues(nu, in_delta),
        nu_dx=nu_dx, zeta_dx=_conjugate_residues(nu_dx, in_delta),
        split=split, x=float(x), t=float(t), residual=float(residual),
    )


def reconstruct(ms: MeromorphicSolution, ens: SolitonEnsemble) -> ReconstructedField:
    """Recover u and u_x from M(0)⁻¹ M_k(0), whose (1,2) entry is a(0)² u."""
    m0, m1, m0_x, m1_x = ms.derivative_at_zero()
    inverse = np.linalg.inv(m0)
    q = inverse @ m1
    q_x = inverse @ m1_x - inverse @ m0_x @ q
    a_zero = complex(trace_formula_a(ens, 0.0))
    return ReconstructedField(
        u_value=complex(q[0, 1] / a_zero**2),
        u_x_value=complex(q_x[0, 1] / a_zero**2),
        d0=float(np.mod(2 * np.angle(a_zero), 4 * np.pi)),
        phase_ambiguity=len(ens) > 0,
    )


def nsoliton_field(ens: SolitonEnsemble, delta: Delta, grid: SpatialGrid, t: float,
                   alpha: float = ALPHA, beta: float = BETA,
                   clamp: float = GAMMA_CLAMP) -> SampledPotential:
    """Sample the reflectionless solution and its x-derivative on ``grid`` at time ``t``."""
    if len(ens) == 0:
        return SampledPotential.zeros(grid)
    values = np.empty(grid.n_points, dtype=complex)
    slopes = np.empty(grid.n_points, dtype=complex)
    for i, x in enumerate(grid.nodes):
        field = reconstruct(solve_reflectionless(ens, delta, x, t, alpha, beta, clamp), ens)
        values[i], slopes[i] = field.u_value, field.u_x_value
    logger.debug("Built %s-soliton field on %s points at t=%s", len(ens), grid.n_points, t)
    return SampledPotential(grid, values, slopes)


def one_soliton_envelope(ens: SolitonEnsemble, x: Union[float, np.ndarray], t: float,
                         alpha: float = ALPHA, beta: float = BETA):
    """|u_x| of the one-soliton solution in closed form.

    With k₁² = ρ + iσ and R = |k₁|²::

        |u_x| = 2√2 σ / sqrt(R cosh(4σ(x - vt) - δ₀) + ρ),
        δ₀ = 2 log|c₁| + log(R/σ²),

    which peaks at 4 Im k₁ and travels with :func:`velocity`. Also |u| = |u_x|/(2R).

    :raise flist.rhp.WrongSolitonCount: Raised unless the ensemble has one pole.
    """
    if len(ens) != 1:
        raise WrongSolitonCount(f"Envelope needs exactly one soliton, got {len(ens)}")
    k, c = ens.k[0], ens.c[0]
    k2 = k * k
    rho, sigma, modulus = k2.real, k2.imag, abs(k2)
    shift = 2 * np.log(abs(c)) + np.log(modulus / sigma**2)
    phase = 4 * sigma * (np.asarray(x) - velocity(k, alpha, beta) * t) - shift
    return 2 * np.sqrt(2) * sigma / np.sqrt(modulus * np.cosh(phase) + rho)
