"""Boundary-condition taxonomy and per-mode linear amplitude constraints.

In the light regime 0 < |m| < 1/2 the per-mode boundary data is the
amplitude quadruple (a-, b-, a+, b+) defined in :mod:`adsdirac.radial`.
Every admissible reflecting condition becomes a pair of homogeneous linear
relations on it:

    mit      a+ = 0,  b+ = 0          (only the leading branch survives)
    chiral   a- = 0,  b- = 0
    aps      a- + i b- = 0,  a+ - i b+ = 0
    genA+    (a-, b-) = A (a+, b+),   A a fixed hermitian 2x2 matrix
    genA-    (a+, b+) = A (a-, b-)

``genA-`` with A = 0 reduces to mit, ``genA+`` with A = 0 to chiral. In the
heavy regime |m| >= 1/2 the amplitude map vanishes identically and the only
valid tag is ``dirichlet`` (no constraint: self-adjointness is automatic).
Negative m is routed through the chiral exchange, which swaps mit <-> chiral
and genA+ <-> genA- and fixes aps.

Restriction: the generalized conditions act mode-diagonally with a constant
2x2 matrix; sphere-dependent matrices would couple distinct (l, n) modes
and are out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .angular import ModeIndex
from .errors import ConfigurationError, RegimeError
from .gammas import PhysicalParams
from .radial import RadialGrid, green_pairing, synthesize_from_asymptotics

__all__ = [
    "BoundaryCondition",
    "ConstraintRows",
    "parse_bc",
    "chiral_partner",
    "constraint_rows",
    "maps_rows",
    "constraint_null_basis",
    "symmetry_check",
]

_TAGS = ("dirichlet", "mit", "chiral", "aps", "genA+", "genA-")


@dataclass(frozen=True)
class BoundaryCondition:
    """Tagged boundary condition; A is only meaningful for the genA tags."""

    tag: str
    A: tuple | None = None

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise ConfigurationError(f"unknown boundary condition tag {self.tag!r}; expected {_TAGS}")
        if self.tag in ("genA+", "genA-"):
            if self.A is None:
                raise ConfigurationError(f"{self.tag} requires a 2x2 matrix")
            if np.asarray(self.A, dtype=complex).shape != (2, 2):
                raise ConfigurationError("A must be a 2x2 matrix")
        elif self.A is not None:
            raise ConfigurationError(f"tag {self.tag!r} does not take a matrix")

    @property
    def a_matrix(self) -> np.ndarray | None:
        return None if self.A is None else np.asarray(self.A, dtype=complex)

    def hermiticity_defect(self) -> float:
        if self.A is None:
            return 0.0
        a = self.a_matrix
        return float(np.max(np.abs(a - a.conj().T)))

    def label(self) -> str:
        if self.A is None:
            return self.tag
        a = self.a_matrix
        return f"{self.tag}:{a[0,0]:.3g},{a[0,1]:.3g},{a[1,1]:.3g}"


def parse_bc(spec: str) -> BoundaryCondition:
    """Parse the CLI grammar: dirichlet | mit | chiral | aps | genA+:a11,a12re,a12im,a22.

    The four reals parametrize the hermitian matrix [[a11, a12], [conj(a12), a22]].
    """
    spec = spec.strip()
    if ":" not in spec:
        if spec.lower() in ("dirichlet", "mit", "chiral", "aps"):
            return BoundaryCondition(spec.lower())
        raise ConfigurationError(f"cannot parse boundary condition {spec!r}")
    head, _, body = spec.partition(":")
    if head not in ("genA+", "genA-"):
        raise ConfigurationError(f"cannot parse boundary condition {spec!r}")
    try:
        a11, a12re, a12im, a22 = (float(v) for v in body.split(","))
    except ValueError as exc:
        raise ConfigurationError(f"expected 4 comma-separated reals after {head}:, got {body!r}") from exc
    a12 = a12re + 1j * a12im
    return BoundaryCondition(head, ((a11, a12), (np.conj(a12), a22)))


def chiral_partner(bc: BoundaryCondition) -> BoundaryCondition:
    """The condition obtained under the chiral exchange m -> -m."""
    mapping = {"mit": "chiral", "chiral": "mit", "aps": "aps", "dirichlet": "dirichlet"}
    if bc.tag in mapping:
        return BoundaryCondition(mapping[bc.tag], bc.A)
    return BoundaryCondition("genA-" if bc.tag == "genA+" else "genA+", bc.A)


def validate_regime(bc: BoundaryCondition, params: PhysicalParams, hermitian: bool = True) -> None:
    m = abs(params.m)
    if bc.tag == "dirichlet":
        if m < 0.5:
            raise RegimeError(
                "dirichlet (no boundary constraint) is only self-adjoint for "
                f"M^2 >= Lambda/12 = {params.bf_threshold:.6g}; got M = {params.M} "
                f"(|m| = {m:.4g} < 1/2)"
            )
        return
    if not 0.0 < m < 0.5:
        raise RegimeError(
            f"{bc.tag} requires the light regime 0 < M^2 < Lambda/12 = "
            f"{params.bf_threshold:.6g}; got M = {params.M} (|m| = {m:.4g})"
        )
    if hermitian and bc.A is not None and bc.hermiticity_defect() > 1e-13:
        raise ConfigurationError(
            f"generalized boundary matrix is not hermitian (defect {bc.hermiticity_defect():.3g})"
        )


@dataclass(frozen=True)
class ConstraintRows:
    """Homogeneous relations rows @ (a-, b-, a+, b+) = 0; rank 2 except dirichlet."""

    rows: tuple

    def matrix(self) -> np.ndarray:
        if not self.rows:
            return np.zeros((0, 4), dtype=complex)
        return np.asarray(self.rows, dtype=complex)

    def rank(self) -> int:
        m = self.matrix()
        return 0 if m.size == 0 else int(np.linalg.matrix_rank(m))


def constraint_rows(bc: BoundaryCondition, mode: ModeIndex, params: PhysicalParams) -> ConstraintRows:
    """The per-mode amplitude relations realizing the boundary condition.

    Mode-diagonal: the rows do not depend on (l, n) for the conditions
    implemented here (aps acts through the angular-eigenspace projectors,
    but its amplitude form is mode-independent).
    """
    validate_regime(bc, params, hermitian=False)
    if params.m < 0:
        return constraint_rows(
            chiral_partner(bc), mode, PhysicalParams(params.Lambda, -params.M)
        )
    if bc.tag == "dirichlet":
        return ConstraintRows(())
    if bc.tag == "mit":
        rows = ((0, 0, 1, 0), (0, 0, 0, 1))
    elif bc.tag == "chiral":
        rows = ((1, 0, 0, 0), (0, 1, 0, 0))
    elif bc.tag == "aps":
        rows = ((1, 1j, 0, 0), (0, 0, 1, -1j))
    elif bc.tag == "genA+":
        a = bc.a_matrix
        rows = ((1, 0, -a[0, 0], -a[0, 1]), (0, 1, -a[1, 0], -a[1, 1]))
    else:  # genA-
        a = bc.a_matrix
        rows = ((-a[0, 0], -a[0, 1], 1, 0), (-a[1, 0], -a[1, 1], 0, 1))
    return ConstraintRows(tuple(tuple(complex(v) for v in r) for r in rows))


def maps_rows() -> ConstraintRows:
    """Amplitude relations generated by the modified nonlocal condition.

    Scaled copies of the plain nonlocal rows (prefactors 1-i and 1+i from
    the extra Id + gamma1 factor), hence row-equivalent to them.
    """
    return ConstraintRows(
        (
            tuple((1 - 1j) * v for v in (1, 1j, 0, 0)),
            tuple((1 + 1j) * v for v in (0, 0, 1, -1j)),
        )
    )


def constraint_null_basis(bc: BoundaryCondition, mode: ModeIndex, params: PhysicalParams) -> np.ndarray:
    """Orthonormal basis (4, k) of the amplitude space allowed by the condition."""
    rows = constraint_rows(bc, mode, params).matrix()
    if rows.size == 0:
        return np.eye(4, dtype=complex)
    from scipy.linalg import null_space

    basis = null_space(rows)
    return basis.astype(complex)


def symmetry_check(
    bc: BoundaryCondition,
    mode: ModeIndex,
    params: PhysicalParams,
    n_samples: int = 100,
    seed: int = 20240601,
    grid: RadialGrid | None = None,
) -> float:
    """Worst normalized boundary pairing over random constrained state pairs.

    Draws amplitude pairs satisfying the constraint rows, synthesizes domain
    states and evaluates the Green boundary pairing; for a self-adjoint
    condition the result vanishes to fit accuracy. A non-hermitian genA
    matrix is accepted on purpose: it serves as the negative control and
    produces pairings of order its hermiticity defect.
    """
    validate_regime(bc, params, hermitian=False)
    if abs(params.m) >= 0.5:
        return 0.0
    grid = grid or RadialGrid(96)
    basis = constraint_null_basis(bc, mode, params)
    k = basis.shape[1]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_samples):
        ca = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        cb = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        amp_a = basis @ ca
        amp_b = basis @ cb
        sa = synthesize_from_asymptotics(mode, params, *amp_a, grid=grid)
        sb = synthesize_from_asymptotics(mode, params, *amp_b, grid=grid)
        pairing = green_pairing(sa, sb)
        scale = 2.0 * float(np.linalg.norm(amp_a) * np.linalg.norm(amp_b))
        worst = max(worst, abs(pairing) / scale)
    return worst
