"""Discretized per-mode hamiltonians, eigen-solution and mode sweeps.

The per-mode system splits into two 2x2 blocks. With the constant unitary
that sends (u1,u2,u3,u4) to block coordinates (alpha, beta),

    block s = +1:  u = (alpha, -i alpha, beta,  i beta) / sqrt(2),
    block s = -1:  u = (alpha,  i alpha, beta, -i beta) / sqrt(2),

the hamiltonian acts per block as

    h_s = [[ -m/cos x,  i(d/dx + s kappa/sin x) ],
           [ i(d/dx - s kappa/sin x),  m/cos x  ]].

The solver is a weighted spectral Galerkin method: trial functions are
w(x) p(xi) with w = sin(x)^kappa cos(x)^sigma and p Chebyshev polynomials
in xi = 4x/pi - 1. The center factor enforces the regular x^kappa scaling;
the boundary exponent sigma and an endpoint polarization constraint encode
the boundary condition exactly, so converged eigenfunctions are captured
with spectral accuracy:

    * mit      sigma = -m, endpoint (p, q) parallel to (1, -i), both blocks;
    * chiral   sigma = +m, endpoint (1, +i), both blocks;
    * aps      block +1 chiral-like, block -1 mit-like (the amplitude
      relations decouple exactly this way);
    * dirichlet (heavy regime) sigma = m, no endpoint constraint; the
      'augmented' variant adds a second full family with decay exponent 1
      to demonstrate that the spectrum ignores the extra boundary freedom;
    * genA+-   both branch families in both blocks, with the four boundary
      heads linearly combined so the amplitude relations hold (the heads
      couple the two blocks).

First-order collocation is notorious for spectral pollution; the cure here
is the exact-exponent basis recombination plus a residual filter evaluated
on an independent quadrature and an optional two-grid agreement check. All
Galerkin integrals use Gauss-Jacobi rules whose endpoint weights match the
known singularity exponents, so matrix entries are spectrally accurate and
the assembled pencils are hermitian to rounding (the defect is measured
before symmetrization and kept as a diagnostic).

Negative m is routed through the chiral exchange: assembly happens at |m|
with the partner condition and eigenvectors are mapped back by the
(u1,u2) <-> (u3,u4) swap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.linalg import eigh
from scipy.special import roots_jacobi

from .angular import ModeIndex
from .boundary import BoundaryCondition, chiral_partner, constraint_rows, validate_regime
from .errors import ConfigurationError, InstabilityError, NumericError, PollutionError
from .gammas import PhysicalParams
from .radial import RadialGrid, RadialModeState

__all__ = [
    "Family",
    "ModeMatrix",
    "SpectralResult",
    "assemble_mode_matrix",
    "eigen_solve",
    "spectrum_sweep",
    "convergence_study",
    "raw_collocation_matrix",
]

HALF_PI = np.pi / 2.0
_QUAD_MARGIN = 48


@dataclass(frozen=True)
class Family:
    """One weighted polynomial family inside a block.

    ``head_pol`` is the boundary polarization ratio q/p (None for an
    unconstrained family); a constrained family contributes one head
    function w*(1, head_pol) plus endpoint-vanishing bubbles, an
    unconstrained one two free Chebyshev ladders. ``n_poly_cap`` truncates
    the family's own ladder (used by augmentation families, which exist to
    probe boundary freedom, not to resolve the interior).
    """

    sigma: float
    head_pol: complex | None
    n_poly_cap: int | None = None

    def eff_poly(self, n_poly: int) -> int:
        return n_poly if self.n_poly_cap is None else min(n_poly, self.n_poly_cap)

    def n_funcs(self, n_poly: int) -> int:
        n_poly = self.eff_poly(n_poly)
        return 1 + 2 * (n_poly - 1) if self.head_pol is not None else 2 * n_poly


# --------------------------------------------------------------------------
# Node sets and family evaluation (closed trigonometric forms, vectorized)


@lru_cache(maxsize=512)
def _rule_nodes(key: tuple):
    kind = key[0]
    if kind == "jacobi":
        _, n, alpha, beta = key
        t, w = roots_jacobi(n, alpha, beta)
        return t, w
    if kind == "grid":
        _, n = key
        x = RadialGrid(n).nodes
        return 4.0 * x / np.pi - 1.0, None
    raise ConfigurationError(f"unknown node key {key!r}")

def _jacobi_tower(a: float, b: float, n: int, xi: np.ndarray):
    """Orthonormal-scaled Jacobi polynomials for weight (1-xi)^a (1+xi)^b.

    Returns (vals, ders, divided, at_one): the scaled polynomials, their
    xi-derivatives, the endpoint divided differences
    (P_k(xi) - P_k(1))/(xi - 1), and the values at xi = 1. The divided
    values satisfy the same three-term recurrence as the polynomials with
    an inhomogeneous P_{k-1}(1) source, so no cancellation occurs near the
    boundary.
    """
    from scipy.special import gammaln

    nq = xi.size
    vals = np.empty((n, nq))
    ders = np.zeros((n, nq))
    divd = np.zeros((n, nq))
    at1 = np.empty(n)
    vals[0] = 1.0
    at1[0] = 1.0
    if n > 1:
        vals[1] = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * xi
        ders[1] = 0.5 * (a + b + 2.0)
        divd[1] = 0.5 * (a + b + 2.0)
        at1[1] = a + 1.0
    for k in range(2, n):
        c0 = 2.0 * k * (k + a + b) * (2.0 * k + a + b - 2.0)
        c1 = (2.0 * k + a + b - 1.0) * (2.0 * k + a + b) * (2.0 * k + a + b - 2.0)
        c2 = (2.0 * k + a + b - 1.0) * (a * a - b * b)
        c3 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * (2.0 * k + a + b)
        vals[k] = ((c1 * xi + c2) * vals[k - 1] - c3 * vals[k - 2]) / c0
        ders[k] = ((c1 * xi + c2) * ders[k - 1] + c1 * vals[k - 1] - c3 * ders[k - 2]) / c0
        # xi P(xi) - P(1) = xi (P(xi) - P(1)) + (xi - 1) P(1)
        divd[k] = ((c1 * xi + c2) * divd[k - 1] + c1 * at1[k - 1] - c3 * divd[k - 2]) / c0
        at1[k] = ((c1 + c2) * at1[k - 1] - c3 * at1[k - 2]) / c0
    k_arr = np.arange(n, dtype=float)
    log_h = (
        (a + b + 1.0) * math.log(2.0)
        + gammaln(k_arr + a + 1.0)
        + gammaln(k_arr + b + 1.0)
        - gammaln(k_arr + a + b + 1.0)
        - gammaln(k_arr + 1.0)
        - np.log(2.0 * k_arr + a + b + 1.0)
    )
    scale = np.exp(-0.5 * log_h)
    return vals * scale[:, None], ders * scale[:, None], divd * scale[:, None], at1 * scale


@lru_cache(maxsize=48)
def _eval_family(fam: Family, s: int, kappa: int, m: float, n_poly: int, key: tuple):
    """Values/reduced-H images of every family function at the keyed nodes.

    Returns (vals, hvals) of shape (n_funcs, 2, nq): the polynomial parts
    (p, q) and the two components of H(w phi)/w. The polynomial ladder is
    Jacobi-orthonormal for the family's own boundary/center weight, which
    keeps the Gram matrices well conditioned at any order; constrained
    families use consecutive-difference bubbles (exactly zero at the
    boundary end, divided differences via the recurrence itself) plus the
    constant head (1, head_pol).
    """
    n_poly = fam.eff_poly(n_poly)
    xi = _rule_nodes(key)[0]
    nq = xi.size
    x = HALF_PI * (xi + 1.0) / 2.0
    tau = HALF_PI * (1.0 - xi) / 2.0
    sinx = np.sin(x)
    cosx = np.sin(tau)  # cos(x) with full relative accuracy at the boundary
    dxi = 4.0 / np.pi
    cot_half = (cosx + 1.0) / sinx
    tan_half = sinx / (1.0 + cosx)
    c_q = kappa * cot_half if s == 1 else -kappa * tan_half
    c_p = -kappa * tan_half if s == 1 else kappa * cot_half
    tanb_half = cosx / (1.0 + sinx)  # tan(tau/2)
    sigma = fam.sigma
    p_vals, p_ders, p_divd, p_at1 = _jacobi_tower(2.0 * sigma, 2.0 * kappa - 1.0, n_poly, xi)

    n_funcs = fam.n_funcs(n_poly)
    vals = np.zeros((n_funcs, 2, nq), dtype=complex)
    hvals = np.zeros((n_funcs, 2, nq), dtype=complex)

    if fam.head_pol is not None:
        pol = fam.head_pol
        vals[0, 0] = 1.0
        vals[0, 1] = pol
        hvals[0, 0] = 1j * c_q * pol - m * tanb_half
        hvals[0, 1] = 1j * c_p + pol * m * tanb_half
        # bubbles P_k - (P_k(1)/P_{k-1}(1)) P_{k-1}: zero at xi = 1
        c_k = (p_at1[1:] / p_at1[:-1])[:, None]
        nrm = 1.0 / np.sqrt(1.0 + c_k**2)
        b_vals = (p_vals[1:] - c_k * p_vals[:-1]) * nrm
        b_ders = (p_ders[1:] - c_k * p_ders[:-1]) * nrm
        b_divd = (p_divd[1:] - c_k * p_divd[:-1]) * nrm
        over_cos = b_divd * ((xi - 1.0) / cosx)[None, :]  # B_k / cos(x)
        idx_p = 1 + 2 * np.arange(n_poly - 1)
        idx_q = idx_p + 1
        vals[idx_p, 0] = b_vals
        vals[idx_q, 1] = b_vals
        hvals[idx_p, 0] = -m * over_cos
        hvals[idx_p, 1] = 1j * (dxi * b_ders + c_p * b_vals) - 1j * sigma * sinx * over_cos
        hvals[idx_q, 0] = 1j * (dxi * b_ders + c_q * b_vals) - 1j * sigma * sinx * over_cos
        hvals[idx_q, 1] = m * over_cos
    else:
        over_cos = p_vals / cosx[None, :]
        idx_p = 2 * np.arange(n_poly)
        idx_q = idx_p + 1
        vals[idx_p, 0] = p_vals
        vals[idx_q, 1] = p_vals
        hvals[idx_p, 0] = -m * over_cos
        hvals[idx_p, 1] = 1j * (dxi * p_ders + c_p * p_vals) - 1j * sigma * sinx * over_cos
        hvals[idx_q, 0] = 1j * (dxi * p_ders + c_q * p_vals) - 1j * sigma * sinx * over_cos
        hvals[idx_q, 1] = m * over_cos
    return vals, hvals


def _pair_rule_key(fam_f: Family, fam_g: Family, kappa: int, n_quad: int):
    constrained = fam_f.head_pol is not None and fam_g.head_pol is not None
    sig_sum = fam_f.sigma + fam_g.sigma
    alpha_j = sig_sum if constrained else sig_sum - 1.0
    beta_j = 2.0 * kappa - 1.0
    if alpha_j <= -1.0:
        raise NumericError(f"quadrature exponent alpha={alpha_j} out of range")
    return ("jacobi", n_quad, alpha_j, beta_j), alpha_j, beta_j, sig_sum


def _pair_factors(xi: np.ndarray, kappa: int, sig_sum: float, alpha_j: float, beta_j: float):
    """Smooth part of w_f w_g dx / ((1-xi)^alpha (1+xi)^beta dxi)."""
    x = HALF_PI * (xi + 1.0) / 2.0
    tau = HALF_PI * (1.0 - xi) / 2.0
    s_c = np.sin(x) / ((np.pi / 4.0) * (1.0 + xi))
    c_c = np.sin(tau) / ((np.pi / 4.0) * (1.0 - xi))
    return (
        s_c ** (2 * kappa)
        * c_c**sig_sum
        * (np.pi / 4.0) ** (2 * kappa + sig_sum + 1.0)
        * (1.0 + xi) ** (2 * kappa - beta_j)
        * (1.0 - xi) ** (sig_sum - alpha_j)
    )


def _assemble_block(s, kappa, m, families, n_poly, n_quad):
    """Raw pencil (A, B) over the concatenated family bases, plus slices."""
    sizes = [f.n_funcs(n_poly) for f in families]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    ntot = offsets[-1]
    a_mat = np.zeros((ntot, ntot), dtype=complex)
    b_mat = np.zeros((ntot, ntot), dtype=complex)
    for fi, fam_f in enumerate(families):
        for gi, fam_g in enumerate(families):
            key, alpha_j, beta_j, sig_sum = _pair_rule_key(fam_f, fam_g, kappa, n_quad)
            xi, w = _rule_nodes(key)
            fac = w * _pair_factors(xi, kappa, sig_sum, alpha_j, beta_j)
            vf, _ = _eval_family(fam_f, s, kappa, m, n_poly, key)
            vg, hg = _eval_family(fam_g, s, kappa, m, n_poly, key)
            nf, ng = vf.shape[0], vg.shape[0]
            lhs = (vf.conj() * fac).reshape(nf, -1)
            a_mat[offsets[fi]:offsets[fi + 1], offsets[gi]:offsets[gi + 1]] = lhs @ hg.reshape(ng, -1).T
            b_mat[offsets[fi]:offsets[fi + 1], offsets[gi]:offsets[gi + 1]] = lhs @ vg.reshape(ng, -1).T
    return a_mat, b_mat, offsets


def _block_apply(families, s, kappa, m, n_poly, coefs, key, lam=None):
    """(values, H-values or residual-values) of a coefficient vector at keyed nodes."""
    sizes = [f.n_funcs(n_poly) for f in families]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    xi = _rule_nodes(key)[0]
    x = HALF_PI * (xi + 1.0) / 2.0
    sinx, cosx = np.sin(x), np.sin(HALF_PI - x)
    val = np.zeros((2, xi.size), dtype=complex)
    hval = np.zeros((2, xi.size), dtype=complex)
    for fi, fam in enumerate(families):
        c = coefs[offsets[fi]:offsets[fi + 1]]
        vf, hf = _eval_family(fam, s, kappa, m, n_poly, key)
        w = sinx**kappa * cosx**fam.sigma
        val += w * np.tensordot(c, vf, axes=1)
        hval += w * np.tensordot(c, hf, axes=1)
    if lam is not None:
        hval -= lam * val
    return val, hval


# --------------------------------------------------------------------------
# Mode matrices


@dataclass
class BlockPencil:
    """Assembled Galerkin pencil of one block (or of the coupled genA system)."""

    s: int
    families: tuple
    n_poly: int
    a_mat: np.ndarray
    b_mat: np.ndarray
    hermiticity_defect: float
    head_reduction: np.ndarray | None = None


@dataclass
class ModeMatrix:
    """Per-mode discretization; ``matrix`` exposes the hermitized direct sum."""

    mode: ModeIndex
    params: PhysicalParams
    bc: BoundaryCondition
    n_nodes: int
    blocks: list
    boundary_basis: str
    chiral_flipped: bool
    coupled: bool = False
    genA_meta: tuple | None = None

    @property
    def n_dof(self) -> int:
        return sum(b.a_mat.shape[0] for b in self.blocks)

    @property
    def matrix(self) -> np.ndarray:
        mats = [b.a_mat for b in self.blocks]
        total = sum(mm.shape[0] for mm in mats)
        out = np.zeros((total, total), dtype=complex)
        k = 0
        for mm in mats:
            out[k : k + mm.shape[0], k : k + mm.shape[0]] = mm
            k += mm.shape[0]
        return out

    @property
    def hermiticity_defect(self) -> float:
        return max(b.hermiticity_defect for b in self.blocks)


def _block_families(bc: BoundaryCondition, m: float, boundary_basis: str) -> dict[int, tuple]:
    if bc.tag == "mit":
        fam = (Family(-m, -1j),)
        return {1: fam, -1: fam}
    if bc.tag == "chiral":
        fam = (Family(m, 1j),)
        return {1: fam, -1: fam}
    if bc.tag == "aps":
        return {1: (Family(m, 1j),), -1: (Family(-m, -1j),)}
    if bc.tag == "dirichlet":
        if boundary_basis == "natural":
            fams = (Family(m, None),)
        elif boundary_basis == "augmented":
            # a thin ladder of tau^(1/2)-decay probes: extra boundary freedom
            # that must leave the spectrum unmoved in the heavy regime
            fams = (Family(m, None), Family(0.5, None, 12))
        elif boundary_basis.startswith("decay:"):
            fams = (Family(float(boundary_basis.split(":", 1)[1]), None),)
        else:
            raise ConfigurationError(f"unknown boundary_basis {boundary_basis!r}")
        return {1: fams, -1: fams}
    fams = (Family(-m, -1j), Family(m, 1j))
    return {1: fams, -1: fams}


def _genA_head_reduction(bc, mode, params) -> np.ndarray:
    """(4, 2) combinations of the raw branch heads allowed by the constraint.

    Raw head order: (block+ minus, block- minus, block+ plus, block- plus);
    their amplitudes map to (a-, b-, a+, b+) through b = -i a in block +1
    and b = +i a in block -1.
    """
    trans = np.array(
        [[1, 1, 0, 0], [-1j, 1j, 0, 0], [0, 0, 1, 1], [0, 0, -1j, 1j]], dtype=complex
    )
    rows = constraint_rows(bc, mode, params).matrix()
    from scipy.linalg import null_space

    reduced = null_space(rows @ trans)
    if reduced.shape[1] != 2:
        raise NumericError("generalized boundary constraint did not leave a rank-2 head space")
    return reduced.astype(complex)


def assemble_mode_matrix(
    mode: ModeIndex,
    params: PhysicalParams,
    bc: BoundaryCondition,
    grid: RadialGrid | int,
    boundary_basis: str = "natural",
    n_quad: int | None = None,
) -> ModeMatrix:
    """Assemble the per-mode pencils for the given boundary condition.

    ``grid`` (or its node count) fixes the polynomial order of the trial
    spaces; quadrature adds a fixed margin. The hermiticity defect of each
    pencil is measured before symmetrization and kept as a diagnostic.
    """
    n = grid.n_nodes if isinstance(grid, RadialGrid) else int(grid)
    if n < 16:
        raise ConfigurationError(f"need at least 16 nodes/polynomials, got {n}")
    validate_regime(bc, params)
    if params.m < 0:
        inner = assemble_mode_matrix(
            mode, PhysicalParams(params.Lambda, -params.M), chiral_partner(bc),
            n, boundary_basis, n_quad,
        )
        return ModeMatrix(
            mode, params, bc, n, inner.blocks, boundary_basis, True, inner.coupled, inner.genA_meta
        )

    m = params.m
    kappa = mode.kappa
    n_quad = n_quad or n + _QUAD_MARGIN
    fams = _block_families(bc, m, boundary_basis)

    if bc.tag not in ("genA+", "genA-"):
        blocks = []
        for s in (1, -1):
            a_mat, b_mat, _ = _assemble_block(s, kappa, m, fams[s], n, n_quad)
            defect = float(np.max(np.abs(a_mat - a_mat.conj().T))) / max(
                float(np.max(np.abs(a_mat))), 1e-300
            )
            a_mat = 0.5 * (a_mat + a_mat.conj().T)
            b_mat = 0.5 * (b_mat + b_mat.conj().T)
            blocks.append(BlockPencil(s, fams[s], n, a_mat, b_mat, defect))
        return ModeMatrix(mode, params, bc, n, blocks, boundary_basis, False)

    # genA: raw blocks, then reduce the four heads onto the constraint space
    raw = {s: _assemble_block(s, kappa, m, fams[s], n, n_quad) for s in (1, -1)}
    per_block = raw[1][0].shape[0]
    ntot_raw = 2 * per_block
    a_ext = np.zeros((ntot_raw, ntot_raw), dtype=complex)
    b_ext = np.zeros((ntot_raw, ntot_raw), dtype=complex)
    offs = {1: 0, -1: per_block}
    for s in (1, -1):
        sl = slice(offs[s], offs[s] + per_block)
        a_ext[sl, sl] = raw[s][0]
        b_ext[sl, sl] = raw[s][1]
    fam_off = raw[1][2]  # family offsets inside one block
    head_cols = [offs[1] + fam_off[0], offs[-1] + fam_off[0],
                 offs[1] + fam_off[1], offs[-1] + fam_off[1]]
    bubble_cols = [j for j in range(ntot_raw) if j not in head_cols]
    red = _genA_head_reduction(bc, mode, params)
    c_mat = np.zeros((ntot_raw, len(bubble_cols) + 2), dtype=complex)
    for i, j in enumerate(bubble_cols):
        c_mat[j, i] = 1.0
    for i in range(2):
        for k, j in enumerate(head_cols):
            c_mat[j, len(bubble_cols) + i] = red[k, i]
    a_red = c_mat.conj().T @ a_ext @ c_mat
    b_red = c_mat.conj().T @ b_ext @ c_mat
    defect = float(np.max(np.abs(a_red - a_red.conj().T))) / max(float(np.max(np.abs(a_red))), 1e-300)
    a_red = 0.5 * (a_red + a_red.conj().T)
    b_red = 0.5 * (b_red + b_red.conj().T)
    blocks = [BlockPencil(0, fams[1], n, a_red, b_red, defect, red)]
    meta = (per_block, head_cols, bubble_cols)
    return ModeMatrix(mode, params, bc, n, blocks, boundary_basis, False, True, meta)


# --------------------------------------------------------------------------
# Eigen-solution


def _solve_pencil(a_mat: np.ndarray, b_mat: np.ndarray, whiten_cut: float = 1e-10):
    """Hermitian generalized eigensolve with graph-norm balancing.

    The pencil is first rescaled by the column norms of A (a similarity, so
    eigenvalues are untouched): this shrinks the coefficients that multiply
    basis functions with large hamiltonian images, which is what keeps the
    recomputed residuals of converged pairs near rounding level. Metric
    directions below ``whiten_cut`` (possible when power families are
    mixed) carry no independent information and are projected out.
    """
    d = 1.0 / np.maximum(np.linalg.norm(a_mat, axis=0), 1.0)
    a_s = a_mat * d[:, None] * d[None, :]
    b_s = b_mat * d[:, None] * d[None, :]
    evals = np.linalg.eigvalsh(b_s)
    if evals.min() > 1e-13 * evals.max():
        lam, vecs = eigh(a_s, b_s)
        return lam, vecs * d[:, None]
    evals, evecs = np.linalg.eigh(b_s)
    keep = evals > whiten_cut * evals.max()
    w_half = evecs[:, keep] / np.sqrt(evals[keep])
    a_w = w_half.conj().T @ a_s @ w_half
    lam, c_w = np.linalg.eigh(0.5 * (a_w + a_w.conj().T))
    return lam, (w_half @ c_w) * d[:, None]


def _genA_full_coefs(mm: ModeMatrix, coefs: np.ndarray) -> np.ndarray:
    per_block, head_cols, bubble_cols = mm.genA_meta
    red = mm.blocks[0].head_reduction
    full = np.zeros(2 * per_block, dtype=complex)
    for i, j in enumerate(bubble_cols):
        full[j] = coefs[i]
    head_c = red @ coefs[len(bubble_cols):]
    for k, j in enumerate(head_cols):
        full[j] += head_c[k]
    return full


def _residual(mm: ModeMatrix, s: int, coefs: np.ndarray, lam: float, n_quad: int) -> float:
    """||(h - lam) u|| / ||u|| on an independent quadrature rule."""
    m_abs = abs(mm.params.m)
    kappa = mm.mode.kappa
    bc_eff = mm.bc if not mm.chiral_flipped else chiral_partner(mm.bc)
    fams_all = _block_families(bc_eff, m_abs, mm.boundary_basis)
    num = den = 0.0
    if mm.coupled:
        per_block, _, _ = mm.genA_meta
        full = _genA_full_coefs(mm, coefs)
        parts = [(1, full[:per_block]), (-1, full[per_block:])]
    else:
        parts = [(s, coefs)]
    for s_eff, c in parts:
        fams = fams_all[s_eff]
        worst = min(f.sigma for f in fams)
        alpha_j = 2.0 * worst
        beta_j = 2.0 * kappa - 1.0
        key = ("jacobi", n_quad, alpha_j, beta_j)
        xi, w = _rule_nodes(key)
        val, rval = _block_apply(fams, s_eff, kappa, m_abs, mm.n_nodes, c, key, lam)
        tau = HALF_PI * (1.0 - xi) / 2.0
        x = HALF_PI * (xi + 1.0) / 2.0
        # strip the rule weight: integrand = |...|^2 ~ tau^(2 worst) x^(2 kappa)
        rel = (
            (np.sin(x) / ((np.pi / 4) * (1 + xi))) ** (2 * kappa)
            * (np.sin(tau) / ((np.pi / 4) * (1 - xi))) ** (2.0 * worst)
            * (np.pi / 4.0) ** (2 * kappa + 2.0 * worst + 1.0)
            * (1.0 + xi) ** (2 * kappa - beta_j)
        )
        wx = np.sin(x) ** kappa
        strip = (np.sin(tau) ** worst * wx)
        good = strip > 0
        num += float(np.sum(w[good] * rel[good] * np.sum(np.abs(rval[:, good] / strip[good]) ** 2, axis=0)))
        den += float(np.sum(w[good] * rel[good] * np.sum(np.abs(val[:, good] / strip[good]) ** 2, axis=0)))
    if den <= 0:
        return np.inf
    return math.sqrt(max(num, 0.0) / den)


@dataclass
class SpectralResult:
    """Filtered per-mode eigenpairs, sorted by |lambda| then sign."""

    mode: ModeIndex
    params: PhysicalParams
    bc: BoundaryCondition
    eigenvalues: np.ndarray
    residuals: np.ndarray
    block_labels: np.ndarray
    converged: np.ndarray
    states: list
    n_nodes: int
    n_multiplicity: int

    def smallest_positive(self) -> float:
        pos = self.eigenvalues[self.eigenvalues > 0]
        return float(pos.min()) if pos.size else math.nan


def _candidate_pairs(mm: ModeMatrix, n_quad_res: int):
    out = []
    for blk in mm.blocks:
        lam, vecs = _solve_pencil(blk.a_mat, blk.b_mat)
        for j in range(len(lam)):
            resid = _residual(mm, blk.s, vecs[:, j], float(lam[j]), n_quad_res)
            out.append((float(lam[j]), blk.s, vecs[:, j], resid))
    return out


def _reconstruct(mm: ModeMatrix, s: int, coefs: np.ndarray, grid: RadialGrid) -> RadialModeState:
    m_abs = abs(mm.params.m)
    kappa = mm.mode.kappa
    bc_eff = mm.bc if not mm.chiral_flipped else chiral_partner(mm.bc)
    fams_all = _block_families(bc_eff, m_abs, mm.boundary_basis)
    key = ("grid", grid.n_nodes)
    root = 1.0 / math.sqrt(2.0)
    u = np.zeros((4, grid.n_nodes), dtype=complex)
    if mm.coupled:
        per_block, _, _ = mm.genA_meta
        full = _genA_full_coefs(mm, coefs)
        parts = [(1, full[:per_block]), (-1, full[per_block:])]
    else:
        parts = [(s, coefs)]
    for s_eff, c in parts:
        val, _ = _block_apply(fams_all[s_eff], s_eff, kappa, m_abs, mm.n_nodes, c, key)
        alpha, beta = val
        u += np.stack([alpha, -1j * s_eff * alpha, beta, 1j * s_eff * beta]) * root
    if mm.chiral_flipped:
        u = u[[2, 3, 0, 1]]
    nrm = math.sqrt(float(np.sum(grid.weights * np.sum(np.abs(u) ** 2, axis=0))))
    return RadialModeState(mm.mode, mm.params, grid, u / max(nrm, 1e-300))


def eigen_solve(
    mm: ModeMatrix,
    n_want: int = 10,
    accept_tol: float = 1e-8,
    gap_tol: float = 1e-6,
    rel_tol: float = 1e-9,
    grid: RadialGrid | None = None,
    check_two_grid: bool = True,
) -> SpectralResult:
    """Dense solve of the assembled pencils with residual and two-grid filters.

    Residuals are recomputed on an independent Gauss-Jacobi rule; a pair is
    reported when its residual passes ``accept_tol`` and |lambda| exceeds
    ``gap_tol`` (zero is never an eigenvalue of the massive problem). With
    ``check_two_grid`` a refined assembly at 4/3 the order must reproduce
    each eigenvalue to ``rel_tol`` for its converged flag.
    """
    n_quad_res = mm.n_nodes + _QUAD_MARGIN + 29
    cands = _candidate_pairs(mm, n_quad_res)
    kept = [c for c in cands if c[3] < accept_tol and abs(c[0]) > gap_tol]
    if not kept:
        raise PollutionError(
            "all eigenpair candidates were rejected by the residual filter; "
            "increase the grid size"
        )
    # |lambda| rounded to 9 significant digits so that exact +-pairs order
    # deterministically (positive member first) across grids and runs
    kept.sort(key=lambda c: (float(f"{abs(c[0]):.9e}"), -np.sign(c[0])))
    kept = kept[: max(n_want, 0)]

    converged = np.ones(len(kept), dtype=bool)
    if check_two_grid:
        n_ref = mm.n_nodes + max(mm.n_nodes // 3, 8)
        mm_ref = assemble_mode_matrix(mm.mode, mm.params, mm.bc, n_ref, mm.boundary_basis)
        ref = _candidate_pairs(mm_ref, n_ref + _QUAD_MARGIN + 29)
        ref_lams = np.array([c[0] for c in ref if c[3] < accept_tol]) if ref else np.array([])
        for i, c in enumerate(kept):
            if ref_lams.size == 0:
                converged[i] = False
            else:
                converged[i] = np.min(np.abs(ref_lams - c[0])) <= max(rel_tol * abs(c[0]), rel_tol)

    grid = grid or RadialGrid(max(mm.n_nodes, 64))
    states = [_reconstruct(mm, s, coefs, grid) for _, s, coefs, _ in kept]
    labels = np.array([(-s if mm.chiral_flipped else s) for _, s, _, _ in kept])
    return SpectralResult(
        mm.mode,
        mm.params,
        mm.bc,
        np.array([c[0] for c in kept]),
        np.array([c[3] for c in kept]),
        labels,
        converged,
        states,
        mm.n_nodes,
        mm.mode.two_l + 1,
    )


# --------------------------------------------------------------------------
# Sweeps and studies


def spectrum_sweep(
    params: PhysicalParams,
    bc: BoundaryCondition,
    two_l_max: int,
    n_per_mode: int = 96,
    n_eigs: int = 8,
    boundary_basis: str = "natural",
    check_two_grid: bool = False,
) -> list[SpectralResult]:
    """Assemble and solve every radial problem with kappa <= (two_l_max+1)/2.

    The 2l+1 values of n share one radial problem; results carry that
    multiplicity instead of recomputing. Deterministic by construction.
    """
    if two_l_max < 1:
        raise ConfigurationError(f"two_l_max must be >= 1, got {two_l_max}")
    results = []
    for two_l in range(1, two_l_max + 1, 2):
        mode = ModeIndex(two_l, 1)
        mm = assemble_mode_matrix(mode, params, bc, n_per_mode, boundary_basis)
        results.append(eigen_solve(mm, n_eigs, check_two_grid=check_two_grid))
    return results


def convergence_study(
    mode: ModeIndex,
    params: PhysicalParams,
    bc: BoundaryCondition,
    grids: Sequence[int],
    n_eigs: int = 5,
    boundary_basis: str = "natural",
) -> dict:
    """Cauchy differences of the low eigenvalues across a grid sequence.

    Reports the observed decay; raises only on consistent divergence."""
    if len(grids) < 3:
        raise ConfigurationError("need at least 3 grid sizes")
    lams = []
    for n in grids:
        mm = assemble_mode_matrix(mode, params, bc, int(n), boundary_basis)
        res = eigen_solve(mm, n_eigs, check_two_grid=False)
        lams.append(res.eigenvalues[:n_eigs])
    k_min = min(len(l) for l in lams)
    rows, diffs = [], []
    for i in range(1, len(grids)):
        d = float(np.max(np.abs(lams[i][:k_min] - lams[i - 1][:k_min])))
        diffs.append(d)
        rows.append({"n": int(grids[i]), "lambdas": lams[i][:k_min].tolist(), "cauchy_diff": d})
    grew = sum(1 for i in range(1, len(diffs)) if diffs[i] > 4.0 * diffs[i - 1] + 1e-14)
    if diffs and grew >= max(len(diffs) - 1, 1) and diffs[-1] > 1e-6:
        raise InstabilityError(f"eigenvalues diverge under refinement: diffs={diffs}")
    return {
        "grids": [int(g) for g in grids],
        "rows": rows,
        "diffs": diffs,
        "first": lams[0][:k_min].tolist(),
    }


def raw_collocation_matrix(mode: ModeIndex, params: PhysicalParams, grid: RadialGrid) -> np.ndarray:
    """Unconstrained 4n x 4n collocation matrix of the per-mode system.

    Used for structural identities (the chiral conjugation by the
    (u1,u2) <-> (u3,u4) swap maps it entrywise to the matrix built with -m);
    it is not part of the production eigen-path.
    """
    n = grid.n_nodes
    x = grid.nodes
    d = grid.diff
    wk = np.diag(mode.kappa / np.sin(x))
    wm = np.diag(params.m / np.cos(x))
    out = np.zeros((4 * n, 4 * n), dtype=complex)
    spec = {
        (0, 2): 1j * d, (0, 3): wk, (0, 0): -wm,
        (1, 3): -1j * d, (1, 2): wk, (1, 1): -wm,
        (2, 0): 1j * d, (2, 1): wk, (2, 2): wm,
        (3, 1): -1j * d, (3, 0): wk, (3, 3): wm,
    }
    for (r, c), bmat in spec.items():
        out[r * n : (r + 1) * n, c * n : (c + 1) * n] += bmat
    return out
