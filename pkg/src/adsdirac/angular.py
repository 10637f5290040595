"""Spinoidal spherical harmonics and the angular Dirac action.

The half-integer basis functions

    T^l_{s,n}(theta, phi) = e^{-i n phi} P^l_{s,n}(cos theta),   s = +-1/2,

are indexed by the set I = {(l, n): l in N + 1/2, n in Z + 1/2, |n| <= l}.
They are anti-periodic in phi with period 2 pi and diagonalize the angular
part of the Dirac hamiltonian: on spinor coefficient vectors (u1, u2, u3, u4)
the angular operator acts per mode as (l + 1/2) times the component reversal
(u4, u3, u2, u1), so its spectrum consists of the integers +-kappa, kappa >= 1.

P^l_{s,n} is a normalized generalized Jacobi function. Numerically it is
evaluated through real reduced functions d^l_{s,n} defined by

    P^l_{s,n} = i^(s-n) sqrt((2l+1)/(4 pi)) d^l_{s,n}(theta),

computed by an upward three-term recurrence in l from closed-form seeds at
l = |n| (the Rodrigues-type derivative formula cancels catastrophically for
large l and is kept only as a low-l cross-check oracle).

Half-integer labels are stored as doubled integers throughout so that index
arithmetic stays exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterator

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "ModeIndex",
    "mode_range",
    "AngularCoefficients",
    "eval_P",
    "eval_T",
    "eval_Y",
    "rodrigues_P",
    "apply_equT",
    "angular_D_apply",
    "projector_K",
    "ws_norm",
    "sphere_quadrature",
    "scalar_coefficients",
    "wshs_crosscheck",
]


def _as_two_spin(spin) -> int:
    if spin in (1, -1):
        return int(spin)
    if spin in (0.5, -0.5):
        return int(round(2 * spin))
    if spin in ("+1/2", "-1/2"):
        return 1 if spin == "+1/2" else -1
    raise ConfigurationError(f"spin must be +-1/2, got {spin!r}")


@dataclass(frozen=True, order=True)
class ModeIndex:
    """Half-integer pair (l, n) stored as doubled integers."""

    two_l: int
    two_n: int

    def __post_init__(self):
        if self.two_l < 1 or self.two_l % 2 == 0:
            raise ConfigurationError(f"two_l must be a positive odd integer, got {self.two_l}")
        if self.two_n % 2 == 0 or abs(self.two_n) > self.two_l:
            raise ConfigurationError(
                f"two_n must be odd with |two_n| <= two_l, got {self.two_n} (two_l={self.two_l})"
            )

    @property
    def l(self) -> float:
        return self.two_l / 2.0

    @property
    def n(self) -> float:
        return self.two_n / 2.0

    @property
    def kappa(self) -> int:
        """l + 1/2, a positive integer."""
        return (self.two_l + 1) // 2


def mode_range(two_l_max: int) -> Iterator[ModeIndex]:
    """All modes of I with two_l <= two_l_max, in lexicographic order."""
    if two_l_max < 1:
        raise ConfigurationError(f"two_l_max must be >= 1, got {two_l_max}")
    for two_l in range(1, two_l_max + 1, 2):
        for two_n in range(-two_l, two_l + 1, 2):
            yield ModeIndex(two_l, two_n)


# --------------------------------------------------------------------------
# Reduced Wigner-type functions


def _seed(two_m: int, two_k: int, half: np.ndarray, chalf: np.ndarray) -> np.ndarray:
    """Closed-form d^{j0}_{m,k} at j0 = max(|m|, |k|).

    For k = j0 > 0 the value is binomial-normalized sin/cos half-angle
    powers with positive sign; the remaining index placements follow from
    d^j_{m,k} = (-1)^(m-k) d^j_{k,m} and d^j_{m,k} = (-1)^(m-k) d^j_{-m,-k},
    both exact in this phase convention.
    """
    m, k = two_m / 2.0, two_k / 2.0
    sign = 1.0
    if abs(two_k) < abs(two_m):
        m, k = k, m
        sign *= (-1.0) ** int(round(m - k))
    if k < 0:
        m, k = -m, -k
        sign *= (-1.0) ** int(round(m - k))
    j = k
    c = math.sqrt(math.comb(int(round(2 * j)), int(round(j - m))))
    return sign * c * half ** (j - m) * chalf ** (j + m)


def _wigner_d_tower(two_m: int, two_k: int, two_l_max: int, ct: np.ndarray) -> dict[int, np.ndarray]:
    """d^j_{m,k}(theta) for j = max(|m|,|k|), ..., l_max; vectorized in theta.

    ``ct`` is cos(theta). Upward three-term recurrence

      j sqrt(((j+1)^2-m^2)((j+1)^2-k^2)) d^{j+1}
        = (2j+1)(j(j+1) ct - m k) d^j - (j+1) sqrt((j^2-m^2)(j^2-k^2)) d^{j-1};

    the d^{j-1} coefficient vanishes at the seed level, so the tower starts
    two-term. Stable upward for the moderate j used here.
    """
    m, k = two_m / 2.0, two_k / 2.0
    two_j0 = max(abs(two_m), abs(two_k))
    half = np.sqrt(np.clip((1.0 - ct) / 2.0, 0.0, 1.0))  # sin(theta/2)
    chalf = np.sqrt(np.clip((1.0 + ct) / 2.0, 0.0, 1.0))  # cos(theta/2)
    seed = _seed(two_m, two_k, half, chalf)
    tower = {two_j0: seed}

    prev = np.zeros_like(seed)
    cur = seed
    two_j = two_j0
    while two_j < two_l_max:
        j = two_j / 2.0
        if two_j == 0:
            # degenerate first step (m = k = 0): d^1_{00} = cos(theta) d^0_{00}
            nxt = ct * cur
        else:
            c_next = j * math.sqrt(((j + 1) ** 2 - m * m) * ((j + 1) ** 2 - k * k))
            c_mid = (2 * j + 1) * (j * (j + 1) * ct - m * k)
            c_prev = (j + 1) * math.sqrt((j * j - m * m) * (j * j - k * k))
            nxt = (c_mid * cur - c_prev * prev) / c_next
        two_j += 2
        tower[two_j] = nxt
        prev, cur = cur, nxt
    return tower


def _d_value(two_m: int, two_k: int, two_l: int, ct: np.ndarray) -> np.ndarray:
    return _wigner_d_tower(two_m, two_k, two_l, ct)[two_l]


def eval_P(mode: ModeIndex, spin, X) -> np.ndarray:
    """P^l_{s,n}(X), normalized so that T^l_{s,n} is orthonormal on S^2."""
    two_s = _as_two_spin(spin)
    X = np.asarray(X, dtype=float)
    d = _d_value(two_s, mode.two_n, mode.two_l, X)
    phase = 1j ** ((two_s - mode.two_n) // 2)
    return phase * math.sqrt((mode.two_l + 1) / (4.0 * np.pi)) * d


def eval_T(mode: ModeIndex, spin, theta, phi) -> np.ndarray:
    """T^l_{s,n}(theta, phi) = e^{-i n phi} P^l_{s,n}(cos theta).

    Anti-periodic in phi with period 2 pi; phi in [0, 4 pi) is accepted.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return np.exp(-0.5j * mode.two_n * phi) * eval_P(mode, spin, np.cos(theta))


def eval_Y(l: int, m: int, theta, phi) -> np.ndarray:
    """Integer-index harmonic e^{-i m phi} P^l_{m,0}(cos theta), same phase family.

    Out-of-range |m| > l returns zero, which is the convenient convention for
    the recombination sums below.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    shape = np.broadcast(theta, phi).shape
    if abs(m) > l:
        return np.zeros(shape, dtype=complex)
    d = _d_value(2 * m, 0, 2 * l, np.cos(theta))
    return (1j**m) * math.sqrt((2 * l + 1) / (4.0 * np.pi)) * np.exp(-1j * m * phi) * d


def rodrigues_P(mode: ModeIndex, spin, X) -> np.ndarray:
    """Derivative-formula evaluation of P^l_{s,n}; a low-l cross-check oracle.

    The inner bracket (1-X)^(l -+ 1/2) (1+X)^(l +- 1/2) has integer exponents
    for half-integer l, so its l-n derivatives are exact polynomial algebra.
    Cancellation grows quickly with l; keep l <= ~8.
    """
    two_s = _as_two_spin(spin)
    X = np.asarray(X, dtype=float)
    l, n = mode.l, mode.n
    a = int(round(l - two_s * 0.5))  # bracket exponent of (1-X)
    b = int(round(l + two_s * 0.5))  # bracket exponent of (1+X)
    # (1-X)^a (1+X)^b = (-1)^a prod (X-1)^a (X+1)^b
    poly = np.polynomial.Polynomial.fromroots([1.0] * a + [-1.0] * b) * (-1.0) ** a
    poly = poly.deriv(int(round(l - n)))
    fac = math.factorial
    amp = (
        (-1.0) ** a
        * (1j ** ((mode.two_n - two_s) // 2))
        / (2.0**l * fac(a))
        * math.sqrt(fac(a) * fac(int(round(l + n))) / (fac(b) * fac(int(round(l - n)))))
        * math.sqrt((mode.two_l + 1) / (4.0 * np.pi))
    )
    exp_minus = (two_s - mode.two_n) / 4.0
    exp_plus = (-two_s - mode.two_n) / 4.0
    return amp * (1.0 - X) ** exp_minus * (1.0 + X) ** exp_plus * poly(X)


# --------------------------------------------------------------------------
# Coefficient containers and the angular operator


@dataclass
class AngularCoefficients:
    """Spinor coefficients u^l_{j,n}; components 1,3 ride the s=-1/2 basis, 2,4 the s=+1/2 one."""

    two_l_max: int
    data: dict[ModeIndex, np.ndarray] = field(default_factory=dict)

    def set(self, mode: ModeIndex, values) -> "AngularCoefficients":
        if mode.two_l > self.two_l_max:
            raise ConfigurationError(
                f"mode two_l={mode.two_l} exceeds truncation two_l_max={self.two_l_max}"
            )
        values = np.asarray(values, dtype=complex)
        if values.shape != (4,):
            raise ConfigurationError(f"expected 4 spinor components, got shape {values.shape}")
        self.data[mode] = values
        return self

    def get(self, mode: ModeIndex) -> np.ndarray:
        return self.data.get(mode, np.zeros(4, dtype=complex))

    def modes(self):
        return sorted(self.data.keys())

    def norm_sq(self) -> float:
        return sum(float(np.sum(np.abs(v) ** 2)) for v in self.data.values())


def angular_D_apply(coeffs: AngularCoefficients) -> AngularCoefficients:
    """Angular Dirac action: per mode, (u1,u2,u3,u4) -> (l+1/2)(u4,u3,u2,u1)."""
    out = AngularCoefficients(coeffs.two_l_max)
    for mode, u in coeffs.data.items():
        out.set(mode, mode.kappa * u[::-1])
    return out


def projector_K(sign: int, coeffs: AngularCoefficients) -> AngularCoefficients:
    """Orthogonal projector onto the +-kappa subspaces of the angular action.

    Per mode, K_+- = (1/2)[[1,0,0,+-1],[0,1,+-1,0],[0,+-1,1,0],[+-1,0,0,1]]
    on (u1,u2,u3,u4); the spin-weight exchange behind it is an isometry that
    acts as the identity on mode labels.
    """
    if sign not in (1, -1):
        raise ConfigurationError(f"sign must be +1 or -1, got {sign}")
    k = 0.5 * np.array(
        [[1, 0, 0, sign], [0, 1, sign, 0], [0, sign, 1, 0], [sign, 0, 0, 1]], dtype=complex
    )
    out = AngularCoefficients(coeffs.two_l_max)
    for mode, u in coeffs.data.items():
        out.set(mode, k @ u)
    return out


def ws_norm(coeffs: AngularCoefficients, s: float) -> float:
    """Sobolev-scale norm sqrt(sum_j sum_(l,n) (l+1/2)^(2s) |u^l_{j,n}|^2)."""
    total = 0.0
    for mode, u in coeffs.data.items():
        total += mode.kappa ** (2.0 * s) * float(np.sum(np.abs(u) ** 2))
    return math.sqrt(total)


# --------------------------------------------------------------------------
# Quadrature over S^2 for half-integer weights


@lru_cache(maxsize=32)
def _sphere_rule(n_theta: int, n_phi: int, cover: int = 2):
    ct, w_ct = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(ct)
    # cover=2: phi spans [0, 4 pi) so half-integer Fourier modes stay exactly
    # orthogonal under the discrete sum, and the result is halved. cover=1 is
    # the geometric sphere, needed when the integrand itself carries a bare
    # half-integer frequency (e.g. projecting a 2 pi periodic function).
    span = cover * 2.0 * np.pi
    phi = span * np.arange(n_phi) / n_phi
    w_phi = span / n_phi
    return theta, w_ct, phi, w_phi / cover


def sphere_quadrature(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray], n_theta: int = 40, n_phi: int = 80
) -> complex:
    """Integrate f(theta, phi) over S^2, tolerating anti-periodic integrands.

    Gauss-Legendre in cos(theta) x uniform phi on the doubled interval;
    spectrally exact for products of harmonics once n_theta exceeds the total
    polynomial degree and n_phi the total Fourier bandwidth.
    """
    theta, w_ct, phi, w_phi = _sphere_rule(n_theta, n_phi)
    TH, PH = np.meshgrid(theta, phi, indexing="ij")
    vals = np.asarray(f(TH, PH), dtype=complex)
    return complex(w_phi * np.sum(w_ct @ vals))


def scalar_coefficients(
    f, two_l_max: int, spin, n_theta: int = 64, n_phi: int = 128
) -> dict[ModeIndex, complex]:
    """Expansion coefficients u^l_{s,n}(f) = <f, T^l_{s,n}>_{L^2(S^2)} by quadrature."""
    theta, w_ct, phi, w_phi = _sphere_rule(n_theta, n_phi, cover=1)
    TH, PH = np.meshgrid(theta, phi, indexing="ij")
    vals = np.asarray(f(TH, PH), dtype=complex)
    out = {}
    for mode in mode_range(two_l_max):
        t = eval_T(mode, spin, TH, PH)
        out[mode] = complex(w_phi * np.sum(w_ct @ (vals * np.conj(t))))
    return out


# --------------------------------------------------------------------------
# Identity checks


def apply_equT(mode: ModeIndex, spin, theta_samples, phi: float = 0.7, step: float = 1e-5) -> float:
    """Residual of the first-order identity satisfied by the basis functions:

      (d_theta + 1/(2 tan theta)) T^l_{+-1/2,n}
          = +-(n/sin theta) T^l_{+-1/2,n} - i (l+1/2) T^l_{-+1/2,n},

    with d_theta realized by central differences of width ``step``. Returns
    the max pointwise residual over the samples.
    """
    two_s = _as_two_spin(spin)
    theta = np.asarray(theta_samples, dtype=float)
    if np.any(theta < 1e-3) or np.any(theta > np.pi - 1e-3):
        raise ConfigurationError("theta samples must stay 1e-3 away from the poles")
    t0 = eval_T(mode, two_s, theta, phi)
    tp = eval_T(mode, two_s, theta + step, phi)
    tm = eval_T(mode, two_s, theta - step, phi)
    lhs = (tp - tm) / (2.0 * step) + t0 / (2.0 * np.tan(theta))
    rhs = two_s * (mode.n / np.sin(theta)) * t0 - 1j * mode.kappa * eval_T(mode, -two_s, theta, phi)
    return float(np.max(np.abs(lhs - rhs)))


def wshs_crosscheck(l: int, m: int, n_theta: int = 24, n_phi: int = 24) -> float:
    """Pointwise residual of the four half-angle recombination identities.

    They express e^{-+ i phi/2} cos(theta/2) T^(l+1/2)_{-+1/2, m-1/2} and the
    sin(theta/2) partners through the integer harmonics Y^l_m, Y^l_{m-1} with
    coefficients proportional to sqrt((l-m+1)/(l+1)) and sqrt((l+m)/(l+1)).
    Because both families are L^2-normalized here, each coefficient carries
    the extra ratio sqrt((2l+2)/(2l+1)), and the relative phases are those of
    this Y convention. Valid for -l <= m <= l+1; out-of-range Y terms drop
    out through their vanishing coefficients.
    """
    if l < 0 or not (-l <= m <= l + 1):
        raise ConfigurationError(f"need -l <= m <= l+1, got l={l}, m={m}")
    theta = np.linspace(0.05, np.pi - 0.05, n_theta)
    phi = np.linspace(0.1, 4.0 * np.pi, n_phi, endpoint=False)
    TH, PH = np.meshgrid(theta, phi, indexing="ij")
    x1 = np.sin(TH) * np.cos(PH)
    x2 = np.sin(TH) * np.sin(PH)
    x3 = np.cos(TH)
    c, s = np.cos(TH / 2.0), np.sin(TH / 2.0)
    em, ep = np.exp(-0.5j * PH), np.exp(0.5j * PH)

    mode = ModeIndex(2 * l + 1, 2 * m - 1)
    t_minus = eval_T(mode, -1, TH, PH)
    t_plus = eval_T(mode, +1, TH, PH)
    # g accounts for the normalization ratio between the half-integer and
    # integer families: sqrt((2l+2)/(2l+1)).
    g = math.sqrt((2 * l + 2) / (2 * l + 1))
    c_hi = g * math.sqrt((l - m + 1) / (l + 1))
    c_lo = g * math.sqrt(max(l + m, 0) / (l + 1))
    y_m = eval_Y(l, m, TH, PH)
    y_m1 = eval_Y(l, m - 1, TH, PH)

    checks = [
        (em * c * t_minus, c_hi * (x3 + 1.0) / 2.0 * y_m - 1j * c_lo * (x1 - 1j * x2) / 2.0 * y_m1),
        (ep * s * t_minus, c_hi * (x1 + 1j * x2) / 2.0 * y_m - 1j * c_lo * (1.0 - x3) / 2.0 * y_m1),
        (ep * c * t_plus, -1j * c_hi * (x1 + 1j * x2) / 2.0 * y_m + c_lo * (x3 + 1.0) / 2.0 * y_m1),
        (em * s * t_plus, -1j * c_hi * (1.0 - x3) / 2.0 * y_m + c_lo * (x1 - 1j * x2) / 2.0 * y_m1),
    ]
    return max(float(np.max(np.abs(lhs - rhs))) for lhs, rhs in checks)
