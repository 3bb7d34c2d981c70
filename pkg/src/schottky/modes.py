"""Mode-matrix route to the weight-N kernels and the boson partition sum.

The orbit sum for the weight-N kernel can be resummed as a resolvent: the
seed's expansion data around the isometric-disc centers assemble into a
pole-basis vector p, a seed-moment vector q, and a coupling matrix R whose
Neumann series reproduces the word shells,

    psi_N(x, y) = seed(x, y) + p(x)^T (I - R)^{-1} q(y),

with p^T R^{k-1} q summing exactly the length-k words.  Everything is
truncated at M modes per signed handle in the fixed layout (handle-major,
signed order 1, -1, 2, -2, ..., mode index ascending), so vectors have
2*g*M entries and R is square of that size.

The coupling entries carry half-integer powers of the handle parameters
rho through s_h = sqrt(rho_h) (principal branch).  The branch choice is a
gauge: flipping the sign of any s_h conjugates the system by a diagonal
sign matrix and leaves every assembled quantity (kernel values, Fredholm
determinant) unchanged; ``branch_signs`` exposes the flip for testing.

At weight 1 the Fredholm determinant gives the free-boson (Heisenberg)
oscillator partition function det(I - R)^{-1/2}, principal square root.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from schottky.forms import (
    ConfigurationError,
    ConvergenceError,
    FormValue,
    kernel_seed,
    select_seed_points,
)
from schottky.group import (
    InvalidParameterError,
    SchottkyParams,
    in_fundamental_domain,
    ordered_fixed_points,
    validate,
)

__all__ = [
    "PartitionValue",
    "pole_basis",
    "seed_moments",
    "mode_coupling_matrix",
    "kernel_via_modes",
    "heisenberg_partition",
]

# Resolvent solves refuse condition numbers above this.
MAX_CONDITION = 1e8

# Power-iteration count for the spectral-radius precheck.
POWER_ITERATIONS = 50


@dataclass(frozen=True)
class PartitionValue:
    """Partition-function value with convergence diagnostics.

    ``tail`` is the drift against the half-cutoff recomputation;
    ``spectral_radius`` the power-iteration estimate for the coupling
    matrix (must be below 1 for the mode expansion to mean anything).
    """

    value: complex
    tail: float
    spectral_radius: float


def _require_valid(sp: SchottkyParams) -> None:
    report = validate(sp)
    if not report.ok:
        raise InvalidParameterError(
            "parameters violate the disc condition: "
            + "; ".join(
                f"pair ({v.index_a},{v.index_b})" for v in report.violations
            )
        )


def _require_exterior(sp: SchottkyParams, z: complex, name: str) -> complex:
    z = complex(z)
    if not in_fundamental_domain(sp, z):
        raise InvalidParameterError(f"{name} = {z} lies inside an isometric disc")
    return z


def _sqrt_rho(
    sp: SchottkyParams, branch_signs: Sequence[int] | None
) -> list[complex]:
    """Principal square roots of the handle parameters, one per handle.

    branch_signs, when given, flips individual roots; the flip is a gauge
    transformation of the mode system (see module docstring).
    """
    if branch_signs is None:
        signs = (1,) * sp.genus
    else:
        signs = tuple(branch_signs)
        if len(signs) != sp.genus or any(s not in (-1, 1) for s in signs):
            raise InvalidParameterError(
                f"branch_signs must be {sp.genus} entries of +-1"
            )
    return [signs[h] * cmath.sqrt(sp.rho[h]) for h in range(sp.genus)]


def _check_mode_args(sp: SchottkyParams, weight: int, modes: int) -> None:
    if weight < 1:
        raise InvalidParameterError("weight must be >= 1")
    if modes < 1:
        raise InvalidParameterError("mode cutoff must be >= 1")


def pole_basis(
    sp: SchottkyParams,
    weight: int,
    modes: int,
    x: complex,
    branch_signs: Sequence[int] | None = None,
) -> np.ndarray:
    """Pole-basis vector p at x: entries s_b^{n+2N-1} / (x - w_b)^{n+2N}.

    Layout: signed handles in the order 1, -1, 2, -2, ... (outer), mode
    index n = 0..modes-1 (inner); length 2 * genus * modes.
    """
    _require_valid(sp)
    _check_mode_args(sp, weight, modes)
    x = _require_exterior(sp, x, "x")
    roots = _sqrt_rho(sp, branch_signs)
    out = np.empty(2 * sp.genus * modes, dtype=np.complex128)
    n = np.arange(modes)
    for i, b in enumerate(sp.signed_indices):
        s = roots[abs(b) - 1]
        d = x - sp.center(b)
        out[i * modes:(i + 1) * modes] = s ** (n + 2 * weight - 1) / d ** (
            n + 2 * weight
        )
    return out


def _lagrange_values(points: tuple[complex, ...], y: complex) -> list[complex]:
    vals = []
    for i, Ai in enumerate(points):
        v = 1.0 + 0.0j
        for j, Aj in enumerate(points):
            if j != i:
                v *= (y - Aj) / (Ai - Aj)
        vals.append(v)
    return vals


def seed_moments(
    sp: SchottkyParams,
    weight: int,
    modes: int,
    y: complex,
    limit_points: Sequence[complex] | None = None,
    branch_signs: Sequence[int] | None = None,
) -> np.ndarray:
    """Seed-moment vector q at y (same layout as the pole basis).

    Entry (a, m) is (-1)^N s_a^{m+1} times the m-th Taylor coefficient of
    the seed's first argument at the partner center w_{-a}:

        (-1)^m [ (w_{-a} - y)^{-m-1}
                 - sum_i L_i(y) (w_{-a} - A_i)^{-m-1} ],

    where the A_i are the seed's pole-basis points and L_i the Lagrange
    polynomials on them (at weight 1 the single point 0 with L = 1).
    """
    _require_valid(sp)
    _check_mode_args(sp, weight, modes)
    y = _require_exterior(sp, y, "y")
    pts = ordered_fixed_points(sp) if limit_points is None else tuple(
        complex(p) for p in limit_points
    )
    A = select_seed_points(pts, weight, sp.genus)
    L = _lagrange_values(A, y)
    roots = _sqrt_rho(sp, branch_signs)
    sign_n = -1.0 if weight % 2 else 1.0
    out = np.empty(2 * sp.genus * modes, dtype=np.complex128)
    m = np.arange(modes)
    alt = (-1.0) ** m
    for i, a in enumerate(sp.signed_indices):
        s = roots[abs(a) - 1]
        wma = sp.center(-a)
        taylor = (wma - y) ** (-m - 1.0)
        for Li, Ai in zip(L, A):
            taylor = taylor - Li * (wma - Ai) ** (-m - 1.0)
        out[i * modes:(i + 1) * modes] = sign_n * s ** (m + 1) * alt * taylor
    return out


def mode_coupling_matrix(
    sp: SchottkyParams,
    weight: int,
    modes: int,
    branch_signs: Sequence[int] | None = None,
) -> np.ndarray:
    """Coupling matrix R of the mode system (square, 2*genus*modes).

    Block (a, b) vanishes when b = -a (a word may not continue with the
    inverse letter); otherwise

        R[(a,m),(b,n)] = (-1)^N s_a^{m+1} s_b^{n+2N-1} (-1)^m
                         C(m+n+2N-1, m) (w_{-a} - w_b)^{-(m+n+2N)},

    the m-th Taylor coefficient at w_{-a} of the pole-basis entry (b, n)
    dressed with the same s-weights as the moment vector.
    """
    _require_valid(sp)
    _check_mode_args(sp, weight, modes)
    roots = _sqrt_rho(sp, branch_signs)
    idx = list(sp.signed_indices)
    dim = 2 * sp.genus * modes
    R = np.zeros((dim, dim), dtype=np.complex128)
    sign_n = -1.0 if weight % 2 else 1.0
    m = np.arange(modes)
    n = np.arange(modes)
    # Binomial table C(m + n + 2N - 1, m), shared by every block.
    binom = np.empty((modes, modes))
    for mi in range(modes):
        for ni in range(modes):
            binom[mi, ni] = float(math.comb(mi + ni + 2 * weight - 1, mi))
    for i, a in enumerate(idx):
        sa = roots[abs(a) - 1]
        wma = sp.center(-a)
        row_w = sign_n * sa ** (m + 1) * (-1.0) ** m
        for j, b in enumerate(idx):
            if b == -a:
                continue
            sb = roots[abs(b) - 1]
            d = wma - sp.center(b)
            col_w = sb ** (n + 2 * weight - 1)
            power = d ** (-(m[:, None] + n[None, :] + 2.0 * weight))
            R[
                i * modes:(i + 1) * modes, j * modes:(j + 1) * modes
            ] = row_w[:, None] * col_w[None, :] * binom * power
    return R


def _spectral_radius_estimate(R: np.ndarray) -> float:
    """Power-iteration estimate of the spectral radius (fixed seed)."""
    dim = R.shape[0]
    rng = np.random.default_rng(0)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    radius = 0.0
    for _ in range(POWER_ITERATIONS):
        w = R @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        radius = norm
        v = w / norm
    return float(radius)


def kernel_via_modes(
    sp: SchottkyParams,
    weight: int,
    modes: int,
    x: complex,
    y: complex,
    limit_points: Sequence[complex] | None = None,
    branch_signs: Sequence[int] | None = None,
) -> FormValue:
    """Weight-N kernel evaluated through the mode resolvent.

    seed(x, y) + p(x)^T (I - R)^{-1} q(y), solved by LU factorization
    with a condition-number precheck.  The reported tail is the drift
    against the same assembly at half the mode cutoff.
    """
    _require_valid(sp)
    _check_mode_args(sp, weight, modes)
    x = _require_exterior(sp, x, "x")
    y = _require_exterior(sp, y, "y")
    pts = ordered_fixed_points(sp) if limit_points is None else tuple(
        complex(p) for p in limit_points
    )
    A = select_seed_points(pts, weight, sp.genus)

    def assemble(mm: int) -> complex:
        p = pole_basis(sp, weight, mm, x, branch_signs)
        q = seed_moments(sp, weight, mm, y, pts, branch_signs)
        R = mode_coupling_matrix(sp, weight, mm, branch_signs)
        system = np.eye(R.shape[0], dtype=np.complex128) - R
        cond = np.linalg.cond(system)
        if not cond < MAX_CONDITION:
            raise ConvergenceError(
                f"mode system ill-conditioned (cond {cond:.3g}); the "
                "expansion does not converge for these parameters"
            )
        solved = lu_solve(lu_factor(system), q)
        return complex(p @ solved)

    correction = assemble(modes)
    half = assemble(max(1, modes // 2))
    value = kernel_seed(x, y, A) + correction
    return FormValue(value, weight, 1 - weight, abs(correction - half))


def heisenberg_partition(
    sp: SchottkyParams,
    modes: int,
    branch_signs: Sequence[int] | None = None,
) -> PartitionValue:
    """Oscillator partition function det(I - R)^{-1/2} at weight 1.

    The principal square root is taken; for admissible parameters the
    determinant sits near 1.  A power-iteration estimate of the spectral
    radius of R must come out below 1, otherwise the mode expansion is
    meaningless and the computation refuses to report a number.
    """
    _require_valid(sp)
    _check_mode_args(sp, 1, modes)

    def det_at(mm: int) -> tuple[complex, float]:
        R = mode_coupling_matrix(sp, 1, mm, branch_signs)
        radius = _spectral_radius_estimate(R)
        if radius >= 1.0:
            raise ConvergenceError(
                f"coupling-matrix spectral radius estimate {radius:.3f} "
                ">= 1; the oscillator sum diverges for these parameters"
            )
        system = np.eye(R.shape[0], dtype=np.complex128) - R
        lu, piv = lu_factor(system)
        det = complex(np.prod(np.diag(lu)))
        swaps = int(np.sum(piv != np.arange(len(piv))))
        if swaps % 2:
            det = -det
        return det, radius

    det_full, radius = det_at(modes)
    det_half, _ = det_at(max(1, modes // 2))
    value = 1.0 / cmath.sqrt(det_full)
    half_value = 1.0 / cmath.sqrt(det_half)
    return PartitionValue(value, abs(value - half_value), radius)
