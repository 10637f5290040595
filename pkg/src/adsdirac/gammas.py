"""Dirac matrices, frame-change matrix, coordinate maps and weight transforms.

Everything here is fixed algebraic data for the covering anti-de Sitter
background: the Pauli-Dirac representation with signature (+,-,-,-), the
block frame-change matrix S(theta, phi) relating spherical and cartesian
spinor components, and the three radial coordinates

    r in [0, inf)   (area radius),
    rho in [0, 1)   (Poincare-ball radius),
    x in [0, pi/2)  (conformal angle),  x = arctan(sqrt(Lambda/3) r) = 2 arctan(rho).

The reduced mass is m = M sqrt(3/Lambda); |m| = 1/2 is the critical value
separating the unique-dynamics (heavy) regime from the light one.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, RegimeError, ResolutionError

__all__ = [
    "GammaRep",
    "PhysicalParams",
    "gamma_rep",
    "coordinate_map",
    "spinor_weight_transform",
    "s_matrix",
    "BallSpinor",
    "default_test_family",
    "verify_cartesian_identity",
]


def _pauli() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # sigma^1 is diagonal in this representation (not the usual ordering).
    s1 = np.array([[1, 0], [0, -1]], dtype=complex)
    s2 = np.array([[0, 1], [1, 0]], dtype=complex)
    s3 = np.array([[0, -1j], [1j, 0]], dtype=complex)
    return s1, s2, s3


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GammaRep:
    """The fixed 4x4 matrices of the Pauli-Dirac representation.

    ``q_pairing`` is the real block matrix -gamma0 @ gamma5 used to express
    the boundary pairing of asymptotic amplitudes.
    """

    gamma0: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    gamma3: np.ndarray
    gamma5: np.ndarray
    q_pairing: np.ndarray

    @property
    def gammas(self) -> tuple[np.ndarray, ...]:
        return (self.gamma0, self.gamma1, self.gamma2, self.gamma3)

    def b_alpha(self, alpha: float) -> np.ndarray:
        """Generalized bag boundary operator gamma1 + i exp(i alpha gamma5).

        alpha = 0 gives the MIT-bag operator gamma1 + i, alpha = pi the
        chiral one gamma1 - i; (gamma5)^2 = 1 makes the exponential a
        two-term closed form.
        """
        eye = np.eye(4, dtype=complex)
        return self.gamma1 + 1j * (np.cos(alpha) * eye + 1j * np.sin(alpha) * self.gamma5)


@lru_cache(maxsize=1)
def gamma_rep() -> GammaRep:
    s1, s2, s3 = _pauli()
    zero = np.zeros((2, 2), dtype=complex)
    eye2 = np.eye(2, dtype=complex)
    g0 = np.block([[eye2, zero], [zero, -eye2]])
    g1 = np.block([[zero, s1], [-s1, zero]])
    g2 = np.block([[zero, s2], [-s2, zero]])
    g3 = np.block([[zero, s3], [-s3, zero]])
    # The off-diagonal identity-block matrix; equals +i g0 g1 g2 g3 here.
    g5 = np.block([[zero, eye2], [eye2, zero]])
    q = -(g0 @ g5)
    return GammaRep(*(map(_frozen, (g0, g1, g2, g3, g5, q.real))))


@dataclass(frozen=True)
class PhysicalParams:
    """Cosmological constant and field mass.

    The reduced mass m = M sqrt(3/Lambda) is always recomputed from the two
    stored fields; heavy means M^2 >= Lambda/12, i.e. |m| >= 1/2.
    """

    Lambda: float = 3.0
    M: float = 0.25

    def __post_init__(self):
        if not self.Lambda > 0:
            raise ConfigurationError(f"Lambda must be positive, got {self.Lambda}")

    @property
    def m(self) -> float:
        return self.M * np.sqrt(3.0 / self.Lambda)

    @property
    def bf_threshold(self) -> float:
        """The critical squared mass Lambda/12."""
        return self.Lambda / 12.0

    @property
    def heavy(self) -> bool:
        return abs(self.m) >= 0.5

    @property
    def time_scale(self) -> float:
        """sqrt(Lambda/3): converts H_m eigenvalues into angular frequencies."""
        return np.sqrt(self.Lambda / 3.0)


_COORDS = ("r", "rho", "x")


def _to_x(value: float, frm: str, lam: float) -> float:
    if frm == "x":
        if not 0.0 <= value < np.pi / 2:
            raise ConfigurationError(f"x must lie in [0, pi/2), got {value}")
        return value
    if frm == "rho":
        if not 0.0 <= value < 1.0:
            raise ConfigurationError(f"rho must lie in [0, 1), got {value}")
        return 2.0 * np.arctan(value)
    if frm == "r":
        if not value >= 0.0:
            raise ConfigurationError(f"r must lie in [0, inf), got {value}")
        return np.arctan(np.sqrt(lam / 3.0) * value)
    raise ConfigurationError(f"unknown coordinate {frm!r}; expected one of {_COORDS}")


def coordinate_map(value: float, frm: str, to: str, params: PhysicalParams | None = None) -> float:
    """Convert between the r, rho and x radial coordinates."""
    params = params or PhysicalParams()
    x = _to_x(float(value), frm, params.Lambda)
    if to == "x":
        return x
    if to == "rho":
        return np.tan(x / 2.0)
    if to == "r":
        return np.tan(x) / np.sqrt(params.Lambda / 3.0)
    raise ConfigurationError(f"unknown coordinate {to!r}; expected one of {_COORDS}")


def spinor_weight_transform(
    psi_value: np.ndarray,
    r: float,
    params: PhysicalParams | None = None,
    direction: str = "forward",
) -> np.ndarray:
    """Apply the scalar weight r (1 + Lambda r^2 / 3)^(1/4) to a spinor value.

    ``forward`` maps the raw field to the reduced one, ``inverse`` undoes it
    (r = 0 has no inverse: the weight vanishes there).
    """
    params = params or PhysicalParams()
    weight = r * (1.0 + params.Lambda * r * r / 3.0) ** 0.25
    psi_value = np.asarray(psi_value, dtype=complex)
    if direction == "forward":
        return weight * psi_value
    if direction == "inverse":
        if r == 0.0:
            raise ConfigurationError("weight is singular at r = 0; inverse undefined")
        return psi_value / weight
    raise ConfigurationError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def s_matrix(theta: float, phi: float) -> np.ndarray:
    """Frame-change matrix S(theta, phi) = e^{(phi/2) g1 g2} e^{(theta/2) g3 g1} a.

    Both bivectors square to -1, so the exponentials reduce to cos/sin pairs
    and the result is exact to rounding. S is unitary and block-diagonal
    (equal 2x2 blocks), which is what lets it commute with gamma0 gamma5.
    """
    rep = gamma_rep()
    eye = np.eye(4, dtype=complex)
    g12 = rep.gamma1 @ rep.gamma2
    g23 = rep.gamma2 @ rep.gamma3
    g31 = rep.gamma3 @ rep.gamma1
    a = 0.5 * (eye - g12 - g23 - g31)
    e_phi = np.cos(phi / 2.0) * eye + np.sin(phi / 2.0) * g12
    e_theta = np.cos(theta / 2.0) * eye + np.sin(theta / 2.0) * g31
    return e_phi @ e_theta @ a


def s_upper_block(theta: float, phi: float) -> np.ndarray:
    """Closed form of the repeated 2x2 diagonal block of S."""
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    em, ep = np.exp(-1j * phi / 2.0), np.exp(1j * phi / 2.0)
    return 0.5 * np.array(
        [
            [(1 + 1j) * (em * c + ep * s), (1 + 1j) * (ep * c - em * s)],
            [(1 - 1j) * (-em * c + ep * s), (1 - 1j) * (ep * c + em * s)],
        ]
    )


# --------------------------------------------------------------------------
# Cartesian-side integral checks (elliptic estimate and ball Hardy bound)


@dataclass(frozen=True)
class BallSpinor:
    """A smooth spinor field on the unit ball with an analytic gradient.

    ``psi(X)`` maps points of shape (3, n) to values of shape (4, n);
    ``grad(X)`` returns shape (3, 4, n) with the j-th entry d_j psi.
    """

    psi: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    label: str = ""


def _radial_bump(power: int, direction: np.ndarray) -> BallSpinor:
    direction = np.asarray(direction, dtype=complex).reshape(4, 1)

    def psi(X):
        rho2 = np.sum(X * X, axis=0)
        return (1.0 - rho2) ** power * direction

    def grad(X):
        rho2 = np.sum(X * X, axis=0)
        radial = -2.0 * power * (1.0 - rho2) ** (power - 1)
        return radial[None, None, :] * X[:, None, :] * direction[None, :, :]

    return BallSpinor(psi, grad, label=f"(1-rho^2)^{power} e{np.argmax(np.abs(direction)) + 1}")


def default_test_family() -> list[BallSpinor]:
    fields = []
    for power, k in [(2, 0), (2, 2), (3, 1), (4, 3)]:
        e = np.zeros(4)
        e[k] = 1.0
        fields.append(_radial_bump(power, e))
    mixed = np.array([0.5, -0.5j, 1.0, 0.25j])
    fields.append(_radial_bump(3, mixed / np.linalg.norm(mixed)))
    return fields


def _ball_rule(n_rho: int, n_ang: int):
    rho, w_rho = np.polynomial.legendre.leggauss(n_rho)
    rho = 0.5 * (rho + 1.0)
    w_rho = 0.5 * w_rho
    ct, w_ct = np.polynomial.legendre.leggauss(n_ang)
    phi = 2.0 * np.pi * (np.arange(2 * n_ang) + 0.5) / (2 * n_ang)
    w_phi = 2.0 * np.pi / (2 * n_ang)
    st = np.sqrt(1.0 - ct * ct)
    R, CT, PH = np.meshgrid(rho, ct, phi, indexing="ij")
    ST = np.sqrt(1.0 - CT * CT)
    X = np.stack([R * ST * np.cos(PH), R * ST * np.sin(PH), R * CT]).reshape(3, -1)
    W = (w_rho[:, None, None] * (R**2) * w_ct[None, :, None] * w_phi).reshape(-1)
    del st
    return X, W


def _identity_margins(field: BallSpinor, params: PhysicalParams, n_rho: int, n_ang: int):
    rep = gamma_rep()
    X, W = _ball_rule(n_rho, n_ang)
    rho2 = np.sum(X * X, axis=0)
    psi = field.psi(X)
    grad = field.grad(X)

    slash = np.zeros_like(psi)
    for j, g in enumerate((rep.gamma1, rep.gamma2, rep.gamma3)):
        slash += g @ grad[j]
    mass = 2j * params.M * np.sqrt(3.0 / params.Lambda) / (1.0 - rho2)
    h_psi = 1j * ((1.0 + rho2) / 2.0) * (rep.gamma0 @ (slash + mass * psi))

    w_l2 = W * 2.0 / (1.0 + rho2)
    norm_h = np.sqrt(np.sum(np.abs(h_psi) ** 2 * w_l2))
    norm_grad = np.sqrt(np.sum(np.abs(grad) ** 2 * w_l2))
    lhs = np.sqrt(params.bf_threshold) * norm_h
    rhs = (abs(params.M) - np.sqrt(params.bf_threshold)) * norm_grad

    hardy_lhs = np.sum(np.abs(psi) ** 2 / (1.0 - rho2) ** 2 * W)
    hardy_rhs = np.sum(np.abs(grad) ** 2 * W)
    return lhs, rhs, hardy_lhs, hardy_rhs


def verify_cartesian_identity(
    test_spinor_family: Sequence[BallSpinor] | None = None,
    quadrature_resolution: int = 48,
    params: PhysicalParams | None = None,
    rel_tol: float = 1e-8,
) -> dict:
    """Quadrature check of the elliptic estimate and the ball Hardy bound.

    Requires the strictly heavy regime M > sqrt(Lambda/12). The two-sided
    report carries the worst relative margin over the family; a margin below
    -rel_tol means a numerical violation. Each integral is recomputed on a
    refined rule and must agree to 1%, otherwise the resolution is deemed
    insufficient.
    """
    params = params or PhysicalParams(Lambda=3.0, M=2.0)
    if abs(params.M) <= np.sqrt(params.bf_threshold):
        raise RegimeError(
            f"elliptic estimate needs M^2 > Lambda/12 = {params.bf_threshold:.6g}; "
            f"got M = {params.M}"
        )
    family = list(test_spinor_family) if test_spinor_family is not None else default_test_family()

    rows = []
    worst = np.inf
    for field in family:
        lhs, rhs, h_lhs, h_rhs = _identity_margins(field, params, quadrature_resolution, quadrature_resolution // 2)
        lhs2, rhs2, h_lhs2, h_rhs2 = _identity_margins(
            field, params, quadrature_resolution + 16, quadrature_resolution // 2 + 8
        )
        for a, b in [(lhs, lhs2), (rhs, rhs2), (h_lhs, h_lhs2), (h_rhs, h_rhs2)]:
            if b != 0 and abs(a / b - 1.0) > 0.01:
                raise ResolutionError(
                    f"ball quadrature did not settle for {field.label!r}: {a:.6g} vs {b:.6g}"
                )
        scale = max(lhs2, rhs2, 1e-300)
        margin = (lhs2 - rhs2) / scale
        hardy_margin = (h_rhs2 - h_lhs2) / max(h_rhs2, h_lhs2, 1e-300)
        worst = min(worst, margin, hardy_margin)
        rows.append(
            {
                "label": field.label,
                "lhs": lhs2,
                "rhs": rhs2,
                "hardy_lhs": h_lhs2,
                "hardy_rhs": h_rhs2,
                "margin": margin,
                "hardy_margin": hardy_margin,
            }
        )
    return {"rows": rows, "worst_margin": worst, "passed": bool(worst >= -rel_tol)}
