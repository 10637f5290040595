"""Per-mode radial Dirac system on (0, pi/2).

For a fixed angular mode with kappa = l + 1/2 and reduced mass m, the
hamiltonian acts on four radial profiles (u1, u2, u3, u4) as

    H (u1,u2,u3,u4) = ( i u3' + (kappa/sin x) u4 - (m/cos x) u1,
                       -i u4' + (kappa/sin x) u3 - (m/cos x) u2,
                        i u1' + (kappa/sin x) u2 + (m/cos x) u3,
                       -i u2' + (kappa/sin x) u1 + (m/cos x) u4 ).

Near x = 0 regular solutions scale like x^kappa. Near x = pi/2 (tau :=
pi/2 - x) the two Frobenius branches scale like tau^(-m) and tau^(+m) with
locked polarizations: the combinations

    (u1 + i u3)/2,  (u2 - i u4)/2    carry the tau^(-m) amplitudes (a-, b-),
    (u1 - i u3)/2,  (u2 + i u4)/2    carry the tau^(+m) amplitudes (a+, b+).

For 0 < m < 1/2 both branches are square integrable and the quadruple
(a-, b-, a+, b+) is the per-mode boundary data; for m >= 1/2 the growing
branch leaves L^2 and the boundary map is identically zero.

Orientation of the boundary pairing: with the inner product <f, g> =
integral conj(f) g, the Green formula reads

    <H a, b> - <a, H b> = 2 [ conj(a-) b+ - conj(a+) b- ]-type pairing,

i.e. 2 <Gamma(a), (gamma0 gamma5) Gamma(b)> on stacked amplitudes. Note the
sign: the pairing matrix that makes the identity hold is +gamma0 gamma5,
the negative of the block matrix printed next to the amplitude map in the
source material; the sign is fixed here by direct quadrature of the
commutator side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import roots_jacobi

from .angular import ModeIndex
from .errors import ConfigurationError, NumericError, RegimeError, ResolutionError
from .gammas import PhysicalParams

__all__ = [
    "RadialGrid",
    "RadialModeState",
    "AsymptoticData",
    "apply_Hm",
    "charge_norm",
    "state_inner",
    "extract_asymptotics",
    "fit_boundary_amplitudes",
    "synthesize_from_asymptotics",
    "green_pairing",
    "green_commutator",
    "boundary_decay_check",
    "kernel_profile_state",
]

HALF_PI = np.pi / 2.0


@lru_cache(maxsize=64)
def _cheb_gauss_data(n: int):
    i = np.arange(n)
    theta = (2 * i + 1) * np.pi / (2 * n)
    t = -np.cos(theta)  # ascending in (-1, 1)
    lam = (-1.0) ** i * np.sin(theta)  # barycentric weights (ascending order keeps the pattern)
    # Fejer-1 weights on (-1, 1)
    mvals = np.arange(1, n // 2 + 1)
    corr = 2.0 * np.sum(np.cos(2.0 * np.outer(theta, mvals)) / (4.0 * mvals**2 - 1.0), axis=1)
    w = (2.0 / n) * (1.0 - corr)
    w = w[::-1].copy()  # match ascending node order
    x = HALF_PI * (t + 1.0) / 2.0
    diff = np.empty((n, n))
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    diff[:] = (lam[None, :] / lam[:, None]) / dx
    np.fill_diagonal(diff, 0.0)
    np.fill_diagonal(diff, -np.sum(diff, axis=1))
    wq = w * (HALF_PI / 2.0)
    return x, diff, wq


@dataclass(frozen=True)
class RadialGrid:
    """Mapped Chebyshev-Gauss collocation grid, strictly interior to (0, pi/2).

    Interior nodes avoid evaluating 1/sin x and 1/cos x at the singular
    endpoints. Differentiation is barycentric-spectral, quadrature is the
    Fejer rule belonging to the same nodes (all weights positive).
    """

    n_nodes: int

    def __post_init__(self):
        if self.n_nodes < 4:
            raise ConfigurationError(f"grid needs at least 4 nodes, got {self.n_nodes}")

    @property
    def nodes(self) -> np.ndarray:
        return _cheb_gauss_data(self.n_nodes)[0]

    @property
    def diff(self) -> np.ndarray:
        return _cheb_gauss_data(self.n_nodes)[1]

    @property
    def weights(self) -> np.ndarray:
        return _cheb_gauss_data(self.n_nodes)[2]


@dataclass
class RadialModeState:
    """Four complex radial profiles of one angular mode, sampled on a grid.

    ``profile``/``profile_deriv``, when present, evaluate the same state (and
    its x-derivative) at arbitrary interior points; synthesized states carry
    them so that integral checks can use quadratures adapted to the boundary
    exponents instead of the collocation grid.
    """

    mode: ModeIndex
    params: PhysicalParams
    grid: RadialGrid
    u: np.ndarray
    profile: Callable[[np.ndarray], np.ndarray] | None = None
    profile_deriv: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=complex)
        if self.u.shape != (4, self.grid.n_nodes):
            raise ConfigurationError(
                f"state shape {self.u.shape} does not match (4, {self.grid.n_nodes})"
            )

    def scaled(self, c: complex) -> "RadialModeState":
        return RadialModeState(self.mode, self.params, self.grid, c * self.u,
                               None if self.profile is None else (lambda x: c * self.profile(x)),
                               None if self.profile_deriv is None else (lambda x: c * self.profile_deriv(x)))


def _coefficients(state: RadialModeState, x: np.ndarray):
    kappa = state.mode.kappa
    m = state.params.m
    return kappa / np.sin(x), m / np.cos(x)


def _apply_system(u: np.ndarray, du: np.ndarray, w_kappa: np.ndarray, w_m: np.ndarray) -> np.ndarray:
    f = np.empty_like(u)
    f[0] = 1j * du[2] + w_kappa * u[3] - w_m * u[0]
    f[1] = -1j * du[3] + w_kappa * u[2] - w_m * u[1]
    f[2] = 1j * du[0] + w_kappa * u[1] + w_m * u[2]
    f[3] = -1j * du[1] + w_kappa * u[0] + w_m * u[3]
    return f


def apply_Hm(state: RadialModeState) -> RadialModeState:
    """Collocation application of the per-mode hamiltonian on the state's grid."""
    x = state.grid.nodes
    du = state.u @ state.grid.diff.T
    w_kappa, w_m = _coefficients(state, x)
    f = _apply_system(state.u, du, w_kappa, w_m)
    return RadialModeState(state.mode, state.params, state.grid, f)


def charge_norm(state: RadialModeState) -> float:
    """Quadrature of sum_j |u_j|^2 over (0, pi/2) (the squared charge)."""
    return float(np.sum(state.grid.weights * np.sum(np.abs(state.u) ** 2, axis=0)))


def state_inner(a: RadialModeState, b: RadialModeState) -> complex:
    """<a, b> = sum_j int conj(a_j) b_j dx on the shared grid."""
    if a.grid.n_nodes != b.grid.n_nodes:
        raise ConfigurationError("states live on different grids")
    return complex(np.sum(a.grid.weights * np.sum(np.conj(a.u) * b.u, axis=0)))


def kernel_profile_state(mode: ModeIndex, params: PhysicalParams, grid: RadialGrid) -> RadialModeState:
    """The massless single-mode zero mode tan(x/2)^kappa (1, -i, 0, 0)."""
    x = grid.nodes
    prof = np.tan(x / 2.0) ** mode.kappa
    u = np.zeros((4, grid.n_nodes), dtype=complex)
    u[0] = prof
    u[1] = -1j * prof
    return RadialModeState(mode, params, grid, u)


# --------------------------------------------------------------------------
# Boundary asymptotics


@dataclass(frozen=True)
class AsymptoticData:
    """Per-mode boundary amplitudes (a-, b-, a+, b+) and the fit residual.

    Identically zero in the heavy regime |m| >= 1/2, where the domain admits
    no boundary freedom.
    """

    a_minus: complex
    b_minus: complex
    a_plus: complex
    b_plus: complex
    fit_residual: float = 0.0

    def stacked(self) -> np.ndarray:
        return np.array([self.a_minus, self.b_minus, self.a_plus, self.b_plus])

    def norm(self) -> float:
        return float(np.linalg.norm(self.stacked()))


def _branch_combos(u: np.ndarray):
    minus = np.stack([(u[0] + 1j * u[2]) / 2.0, (u[1] - 1j * u[3]) / 2.0])
    plus = np.stack([(u[0] - 1j * u[2]) / 2.0, (u[1] + 1j * u[3]) / 2.0])
    return minus, plus


def fit_boundary_amplitudes(
    state: RadialModeState,
    exponent: float,
    n_fit: int | None = None,
    correction_orders: int = 0,
):
    """Least-squares fit of the branch combinations on the outermost nodes.

    Fits each combination against {tau^-exponent, tau^+exponent, sqrt(tau)}
    (tau = pi/2 - x); the sqrt term absorbs the leading remainder so the
    power amplitudes are unbiased for generic domain states.
    ``correction_orders`` = k > 0 additionally models the local-series
    corrections tau^(j -+ exponent), j = 1..k, which is what unbiases the
    fit on converged eigenvectors (their remainders are series in tau, not
    generic o(sqrt(tau)) noise). Returns (amplitudes(4,), residual, cond).
    """
    n = state.grid.n_nodes
    n_fit = n_fit or max(8, n // 8)
    if n_fit < 4:
        raise ResolutionError("need at least 4 boundary nodes for the asymptotic fit")
    x = state.grid.nodes[-n_fit:]
    tau = HALF_PI - x
    cols = [tau**-exponent, tau**exponent, np.sqrt(tau)]
    for j in range(1, correction_orders + 1):
        cols.append(tau ** (j - exponent))
        cols.append(tau ** (j + exponent))
    basis = np.stack(cols, axis=1)
    col_scale = np.linalg.norm(basis, axis=0)
    cond = np.linalg.cond(basis / col_scale)
    if cond > 1e8:
        raise NumericError(
            f"asymptotic fit basis is ill conditioned (cond={cond:.3g}); "
            "the two branch exponents are too close"
        )
    minus, plus = _branch_combos(state.u[:, -n_fit:])
    amps = np.zeros(4, dtype=complex)
    resid = 0.0
    scale = math.sqrt(max(charge_norm(state), 1e-300))
    for row, combo in enumerate([minus[0], minus[1], plus[0], plus[1]]):
        coef, *_ = np.linalg.lstsq(basis / col_scale, combo, rcond=None)
        coef /= col_scale
        r = float(np.linalg.norm(basis @ coef - combo))
        resid = max(resid, r / max(scale, 1e-300))
        amps[row] = coef[0 if row < 2 else 1]
    return amps, resid, cond


def extract_asymptotics(
    state: RadialModeState, n_fit: int | None = None, correction_orders: int = 0
) -> AsymptoticData:
    """The per-mode boundary map: amplitudes of the tau^(-+m) profiles.

    Heavy regime returns all-zero amplitudes by definition. The light regime
    requires |m| bounded away from 1/2 (the fit basis degenerates there) and
    from 0. Negative m is handled by the chiral exchange (u1,u2) <-> (u3,u4),
    which maps the problem onto |m| > 0; the returned amplitudes are those of
    the exchanged state, which is the convention used consistently by the
    boundary-condition machinery.
    """
    m = state.params.m
    if abs(m) >= 0.5:
        return AsymptoticData(0.0, 0.0, 0.0, 0.0, 0.0)
    if m == 0.0:
        raise RegimeError("the massless problem has no boundary amplitude map")
    if abs(abs(m) - 0.5) < 0.02:
        raise RegimeError(
            f"|m| = {abs(m)} is within 0.02 of the critical value 1/2; "
            "the asymptotic fit basis degenerates"
        )
    work = state if m > 0 else _chiral_flip(state)
    amps, resid, _ = fit_boundary_amplitudes(work, abs(m), n_fit, correction_orders)
    return AsymptoticData(amps[0], amps[1], amps[2], amps[3], resid)


def _chiral_flip(state: RadialModeState) -> RadialModeState:
    flipped = PhysicalParams(state.params.Lambda, -state.params.M)
    return RadialModeState(state.mode, flipped, state.grid, state.u[[2, 3, 0, 1]])


def _h(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def _h_deriv(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos]) / s[pos] ** 2
    return out


def _bump(t: np.ndarray) -> np.ndarray:
    """Smooth plateau cutoff: identically 1 on |t| <= 1/2, 0 beyond |t| = 1.

    The flat plateau means synthesized states coincide exactly with the pure
    boundary powers near tau = 0, so amplitude extraction is unbiased; any
    smooth cutoff with value 1 at the boundary would do analytically.
    """
    t = np.abs(t)
    a = _h(2.0 * (1.0 - t))
    b = _h(2.0 * (t - 0.5))
    with np.errstate(invalid="ignore"):
        out = np.where(t >= 1.0, 0.0, np.where(t <= 0.5, 1.0, a / (a + b)))
    return out


def _bump_deriv(t: np.ndarray) -> np.ndarray:
    sign = np.sign(t)
    t = np.abs(t)
    a = _h(2.0 * (1.0 - t))
    b = _h(2.0 * (t - 0.5))
    da = -2.0 * _h_deriv(2.0 * (1.0 - t))
    db = 2.0 * _h_deriv(2.0 * (t - 0.5))
    with np.errstate(invalid="ignore", divide="ignore"):
        mid = (da * b - a * db) / (a + b) ** 2
    out = np.where((t >= 1.0) | (t <= 0.5), 0.0, mid)
    return sign * out


_POL_MINUS = np.array([1.0, 1.0, -1j, 1j])  # multiplies (a-, b-, a-, b-)
_POL_PLUS = np.array([1.0, 1.0, 1j, -1j])


def synthesize_from_asymptotics(
    mode: ModeIndex,
    params: PhysicalParams,
    a_minus: complex,
    b_minus: complex,
    a_plus: complex,
    b_plus: complex,
    cutoff_width: float = 1.0,
    grid: RadialGrid | None = None,
) -> RadialModeState:
    """Build a domain state with prescribed boundary amplitudes.

    The state is tau^(-m) (a-, b-, -i a-, i b-) + tau^(+m) (a+, b+, i a+, -i b+)
    times a smooth bump in tau/cutoff_width with unit value at the boundary;
    the polarizations cancel the tau^(-m-1) terms of the hamiltonian, so the
    image stays square integrable. Only the light regime is supported.
    """
    m = params.m
    if not 0.0 < abs(m) < 0.5:
        raise RegimeError(f"synthesis needs 0 < |m| < 1/2, got m = {m}")
    if not 0.0 < cutoff_width <= HALF_PI:
        raise ConfigurationError(f"cutoff_width must lie in (0, pi/2], got {cutoff_width}")
    if m < 0:
        flipped = synthesize_from_asymptotics(
            mode, PhysicalParams(params.Lambda, -params.M),
            a_minus, b_minus, a_plus, b_plus, cutoff_width, grid,
        )
        out = _chiral_flip(flipped)
        return RadialModeState(
            mode, params, out.grid, out.u,
            None if flipped.profile is None else (lambda x: flipped.profile(x)[[2, 3, 0, 1]]),
            None if flipped.profile_deriv is None else (lambda x: flipped.profile_deriv(x)[[2, 3, 0, 1]]),
        )

    grid = grid or RadialGrid(128)
    head_m = _POL_MINUS * np.array([a_minus, b_minus, a_minus, b_minus])
    head_p = _POL_PLUS * np.array([a_plus, b_plus, a_plus, b_plus])

    def profile(x):
        x = np.asarray(x, dtype=float)
        tau = HALF_PI - x
        cut = _bump(tau / cutoff_width)
        return (tau**-m * cut) * head_m[:, None] + (tau**m * cut) * head_p[:, None]

    def profile_deriv(x):
        x = np.asarray(x, dtype=float)
        tau = HALF_PI - x
        cut = _bump(tau / cutoff_width)
        dcut = _bump_deriv(tau / cutoff_width) / cutoff_width
        # d/dx = -d/dtau
        gm = -(-m * tau ** (-m - 1) * cut + tau**-m * dcut)
        gp = -(m * tau ** (m - 1) * cut + tau**m * dcut)
        return gm * head_m[:, None] + gp * head_p[:, None]

    return RadialModeState(mode, params, grid, profile(grid.nodes), profile, profile_deriv)


# --------------------------------------------------------------------------
# Green formula


def green_pairing(state_a: RadialModeState, state_b: RadialModeState) -> complex:
    """Boundary pairing 2 <Gamma(a), (gamma0 gamma5) Gamma(b)> of two states.

    Equals <H a, b> - <a, H b> for states in the numerical domain (see the
    module docstring for the sign convention). Identically zero for
    |m| >= 1/2 where the boundary map vanishes.
    """
    if state_a.mode != state_b.mode:
        raise ConfigurationError("green pairing requires matching modes")
    if abs(state_a.params.m) >= 0.5:
        return 0.0 + 0.0j
    ga = extract_asymptotics(state_a).stacked()
    gb = extract_asymptotics(state_b).stacked()
    return 2.0 * complex(
        np.conj(ga[0]) * gb[2] + np.conj(ga[1]) * gb[3]
        - np.conj(ga[2]) * gb[0] - np.conj(ga[3]) * gb[1]
    )


def green_commutator(state_a: RadialModeState, state_b: RadialModeState, n_quad: int = 600) -> complex:
    """<H a, b> - <a, H b> by direct quadrature, independent of the boundary map.

    Requires both states to carry analytic profiles (synthesized states do).
    The product of two light-regime domain states can be as singular as
    tau^(-2|m|) at the boundary, so the rule is Gauss-Jacobi with that exact
    endpoint weight; heavy-regime states are boundary-regular.
    """
    if state_a.profile is None or state_b.profile is None or state_a.profile_deriv is None:
        raise ConfigurationError("commutator quadrature needs states with analytic profiles")
    m = abs(state_a.params.m)
    alpha = -2.0 * m if 0.0 < m < 0.5 else 0.0
    t, w = roots_jacobi(n_quad, alpha, 0.0)
    # map t in (-1, 1) to x in (0, pi/2) with tau = pi/2 - x = (pi/4)(1 - t)
    x = HALF_PI - HALF_PI * (1.0 - t) / 2.0
    scale = (HALF_PI / 2.0) ** (alpha + 1.0)
    tau = HALF_PI - x
    rel = tau**-alpha  # integrand / weight, recombined below

    ua, dua = state_a.profile(x), state_a.profile_deriv(x)
    ub, dub = state_b.profile(x), state_b.profile_deriv(x)
    w_kappa = state_a.mode.kappa / np.sin(x)
    w_m = state_a.params.m / np.cos(x)
    ha = _apply_system(ua, dua, w_kappa, w_m)
    hb = _apply_system(ub, dub, w_kappa, w_m)
    integrand = np.sum(np.conj(ha) * ub - np.conj(ua) * hb, axis=0)
    return complex(np.sum(w * scale * rel * integrand))


# --------------------------------------------------------------------------
# Decay diagnostics


def boundary_decay_check(
    state: RadialModeState,
    where: str = "boundary",
    combo: str = "full",
    n_window: int | None = None,
) -> float:
    """Signed power-law exponent of the state near an endpoint.

    Fits log(quantity) against log(distance) over the outermost nodes (by
    default max(6, n/16) of them, roughly the last decade-and-a-half of the
    quadratically clustered grid distances); ``combo`` selects the full
    spinor magnitude or one branch combination ('minus' carries the
    tau^(-m) amplitudes, 'plus' the tau^(+m) ones). A growing profile
    returns a negative exponent.
    """
    x = state.grid.nodes
    n = state.grid.n_nodes
    k = n_window or max(6, n // 16)
    if where == "boundary":
        dist = (HALF_PI - x)[-k:]
        u = state.u[:, -k:]
    elif where == "center":
        dist = x[:k]
        u = state.u[:, :k]
    else:
        raise ConfigurationError(f"where must be 'boundary' or 'center', got {where!r}")
    if combo == "full":
        q = np.sqrt(np.sum(np.abs(u) ** 2, axis=0))
    elif combo in ("minus", "plus"):
        mn, pl = _branch_combos(u)
        q = np.linalg.norm(mn if combo == "minus" else pl, axis=0)
    else:
        raise ConfigurationError(f"combo must be 'full', 'minus' or 'plus', got {combo!r}")
    if len(q) < 5:
        raise ResolutionError("fewer than 5 nodes in the fit window; refine the grid")
    mask = q > 1e-280
    if np.count_nonzero(mask) < 5:
        raise ResolutionError("profile underflows in the fit window")
    slope, _ = np.polyfit(np.log(dist[mask]), np.log(q[mask]), 1)
    return float(slope)


def heavy_domain_state(
    mode: ModeIndex,
    params: PhysicalParams,
    grid: RadialGrid,
    rng: np.random.Generator | None = None,
    degree: int = 6,
) -> RadialModeState:
    """A random smooth state of the heavy-regime numerical domain.

    Profiles sin(x)^kappa cos(x) p_j(x) with random low-degree polynomials:
    the cos factor decays one full power at the boundary, which keeps the
    hamiltonian image square integrable for any |m| without boundary terms.
    Carries analytic profile closures.
    """
    rng = rng or np.random.default_rng(0)
    coefs = rng.standard_normal((4, degree)) + 1j * rng.standard_normal((4, degree))
    kappa = mode.kappa
    cheb = np.polynomial.chebyshev

    def _poly(x):
        xi = 4.0 * x / np.pi - 1.0
        return np.stack([cheb.chebval(xi, c) for c in coefs])

    def _poly_deriv(x):
        xi = 4.0 * x / np.pi - 1.0
        return (4.0 / np.pi) * np.stack([cheb.chebval(xi, cheb.chebder(c)) for c in coefs])

    def profile(x):
        x = np.asarray(x, dtype=float)
        return np.sin(x) ** kappa * np.cos(x) * _poly(x)

    def profile_deriv(x):
        x = np.asarray(x, dtype=float)
        w = np.sin(x) ** kappa * np.cos(x)
        dw = kappa * np.sin(x) ** (kappa - 1) * np.cos(x) ** 2 - np.sin(x) ** (kappa + 1)
        return dw * _poly(x) + w * _poly_deriv(x)

    return RadialModeState(mode, params, grid, profile(grid.nodes), profile, profile_deriv)
