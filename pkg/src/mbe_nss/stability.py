"""Companion-matrix analysis of the three-level recurrence.

With the nonlinearity switched off, each Fourier mode of the BDF3/EP3
iteration obeys

    h_new = s * (18 h_curr - 9 h_prev + 2 h_prev2),

where s is the mode's diagonal implicit multiplier, 0 < s <= 1/11.  The
stacked history therefore evolves by the companion matrix

    M(s) = [[18 s, -9 s, 2 s],
            [   1,    0,   0],
            [   0,    1,   0]],

whose characteristic polynomial is x^3 - 18 s x^2 + 9 s x - 2 s.  This
module computes the roots both in closed (Cardano) form and from the
eigenvalues of M(s), verifies the classical bounds on them, measures decay
of the matrix powers, and diagonalizes M(s) near the neutral limit
s = 1/11 where M has the fixed vector (1, 1, 1).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

S_LIMIT = 1.0 / 11.0
PAIR_MODULUS_CAP = np.sqrt(2.0 / 2.1)


def companion_matrix(s: float) -> np.ndarray:
    """The 3x3 companion matrix M(s) of the three-level recurrence."""
    return np.array([[18.0 * s, -9.0 * s, 2.0 * s],
                     [1.0, 0.0, 0.0],
                     [0.0, 1.0, 0.0]])


def companion_matrices(s_values: np.ndarray) -> np.ndarray:
    """Stack of companion matrices, shape (n, 3, 3)."""
    s = np.asarray(s_values, dtype=float)
    out = np.zeros(s.shape + (3, 3))
    out[..., 0, 0] = 18.0 * s
    out[..., 0, 1] = -9.0 * s
    out[..., 0, 2] = 2.0 * s
    out[..., 1, 0] = 1.0
    out[..., 2, 1] = 1.0
    return out


def characteristic_residual(lam, s) -> np.ndarray:
    """|p(lam)| / max(1, |lam|^3) for p(x) = x^3 - 18 s x^2 + 9 s x - 2 s."""
    lam = np.asarray(lam, dtype=complex)
    s = np.asarray(s, dtype=float)
    value = lam**3 - 18.0 * s * lam**2 + 9.0 * s * lam - 2.0 * s
    return np.abs(value) / np.maximum(1.0, np.abs(lam) ** 3)


@dataclass(frozen=True)
class RootTriple:
    """Roots of the characteristic cubic at one s.

    ``lambda1`` is the real root; ``lambda2`` and ``lambda3`` are the
    complex-conjugate pair with ``lambda2.imag >= 0``.
    """

    s: float
    lambda1: float
    lambda2: complex
    lambda3: complex


def _closed_form_roots(s) -> tuple[np.ndarray, np.ndarray]:
    """Cardano roots (real root, upper complex root), vectorized over s.

    The cube-root radicand is positive on (0, 1/11], so the principal real
    branch is taken throughout.
    """
    s = np.asarray(s, dtype=float)
    a = 27.0 * s - 324.0 * s**2
    sqrt_rad = np.sqrt(s**2 - 27.0 * s**3 + 189.0 * s**4)
    cube_rad = s - 27.0 * s**2 + 216.0 * s**3 + sqrt_rad
    if np.any(cube_rad <= 0.0):
        raise ValueError("cube-root radicand not positive; s outside (0, 1/11]?")
    b = np.cbrt(cube_rad)
    lam1 = 6.0 * s - a / (9.0 * b) + b
    lam2 = 6.0 * s + (1.0 + 1j * np.sqrt(3.0)) / 18.0 * (a / b) \
        - (1.0 - 1j * np.sqrt(3.0)) / 2.0 * b
    return lam1, lam2


def _eigen_roots(s: float) -> tuple[float, complex]:
    """(real root, upper complex root) from the eigenvalues of M(s)."""
    eigvals = np.linalg.eigvals(companion_matrix(s))
    order = np.argsort(np.abs(eigvals.imag))
    real_root = eigvals[order[0]]
    pair = eigvals[order[1:]]
    upper = pair[np.argmax(pair.imag)]
    return float(real_root.real), complex(upper)


def cubic_roots(s: float, cross_check_tol: float = 1e-9) -> RootTriple:
    """Roots of x^3 - 18 s x^2 + 9 s x - 2 s for 0 < s <= 1/11.

    The roots are computed both in closed form and from an eigenvalue
    solve on the companion matrix; the two must agree to
    ``cross_check_tol`` (after conjugate-pair matching) and the
    eigenvalue-solve values are returned.
    """
    if not 0.0 < s <= S_LIMIT:
        raise ValueError(f"s must lie in (0, 1/11], got {s}")
    lam1_cf, lam2_cf = _closed_form_roots(s)
    lam1, lam2 = _eigen_roots(s)
    gap = max(abs(lam1 - float(lam1_cf)), abs(lam2 - complex(lam2_cf)))
    if gap > cross_check_tol:
        raise ArithmeticError(
            f"closed-form and eigenvalue roots disagree by {gap:.3e} at s={s}")
    return RootTriple(s=s, lambda1=lam1, lambda2=lam2, lambda3=np.conj(lam2))


@dataclass(frozen=True)
class RootSweepReport:
    """Outcome of :func:`verify_root_bounds` over an s sweep."""

    s_values: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    max_cross_check_gap: float
    max_pair_modulus: float
    max_product_defect: float
    realized_cap: float          # lambda1 at the top of the sweep
    passed: bool
    failures: tuple[str, ...]


def verify_root_bounds(s0: float, n_samples: int = 10_000) -> RootSweepReport:
    """Sweep s over n_samples points in (0, s0] and check the root bounds.

    Checked properties:

    * closed form and eigenvalue solve agree to 1e-9,
    * 2.1 s < lambda1(s) <= lambda1(s0) < 1,
    * lambda1 and lambda1 - 2.1 s are nondecreasing along the sweep,
    * |lambda2| <= sqrt(2/2.1) + 1e-12,
    * |lambda2|^2 * lambda1 = 2 s to 1e-10.
    """
    if not 0.0 < s0 < S_LIMIT:
        raise ValueError(f"s0 must lie in (0, 1/11), got {s0}")
    s = s0 * np.arange(1, n_samples + 1) / n_samples
    lam1_cf, lam2_cf = _closed_form_roots(s)
    eig = np.linalg.eigvals(companion_matrices(s))
    is_real = np.abs(eig.imag) == np.min(np.abs(eig.imag), axis=1, keepdims=True)
    lam1 = np.where(is_real, eig, 0.0).sum(axis=1).real / is_real.sum(axis=1)
    lam2 = np.where(eig.imag > 0, eig, 0.0).sum(axis=1)
    no_pair = ~(eig.imag > 0).any(axis=1)
    lam2[no_pair] = lam2_cf[no_pair]

    gap = np.maximum(np.abs(lam1 - lam1_cf), np.abs(lam2 - lam2_cf))
    product_defect = np.abs(np.abs(lam2) ** 2 - 2.0 * s / lam1)

    failures = []

    def check(mask: np.ndarray, label: str) -> None:
        if mask.any():
            failures.append(f"{label} at s={s[int(np.argmax(mask))]:.12g}")

    check(gap > 1e-9, "closed-form vs eigenvalue gap > 1e-9")
    check(lam1 <= 2.1 * s, "lambda1 <= 2.1 s")
    check(lam1 > lam1[-1] + 1e-14, "lambda1 above its sweep-top value")
    if not lam1[-1] < 1.0:
        failures.append(f"lambda1(s0)={lam1[-1]} not below 1")
    check(np.diff(lam1) < -1e-13, "lambda1 not nondecreasing")
    check(np.diff(lam1 - 2.1 * s) < -1e-13, "lambda1 - 2.1 s not nondecreasing")
    check(np.abs(lam2) > PAIR_MODULUS_CAP + 1e-12, "|lambda2| above sqrt(2/2.1)")
    check(product_defect > 1e-10, "|lambda2|^2 != 2 s / lambda1")

    return RootSweepReport(
        s_values=s, lambda1=lam1, lambda2=lam2,
        max_cross_check_gap=float(gap.max()),
        max_pair_modulus=float(np.abs(lam2).max()),
        max_product_defect=float(product_defect.max()),
        realized_cap=float(lam1[-1]),
        passed=not failures, failures=tuple(failures),
    )


def _sym3_eigvals(gram: np.ndarray) -> np.ndarray:
    """Eigenvalues of symmetric 3x3 matrices via the trigonometric cubic.

    ``gram`` has shape (..., 3, 3).  Closed form; no iteration.
    """
    g = np.asarray(gram, dtype=float)
    q = np.trace(g, axis1=-2, axis2=-1) / 3.0
    ident = np.eye(3)
    b = g - q[..., None, None] * ident
    p_sq = np.einsum("...ij,...ij->...", b, b) / 6.0
    p = np.sqrt(np.maximum(p_sq, 0.0))
    safe_p = np.where(p > 0.0, p, 1.0)
    det_b = np.linalg.det(b)
    cos_arg = np.clip(det_b / (2.0 * safe_p**3), -1.0, 1.0)
    phi = np.arccos(cos_arg) / 3.0
    shifts = np.stack([np.cos(phi),
                       np.cos(phi + 2.0 * np.pi / 3.0),
                       np.cos(phi + 4.0 * np.pi / 3.0)], axis=-1)
    return q[..., None] + 2.0 * p[..., None] * shifts


def spectral_norms(matrices: np.ndarray) -> np.ndarray:
    """Operator 2-norms of a (..., 3, 3) stack, via Gram-matrix eigenvalues."""
    m = np.asarray(matrices, dtype=float)
    gram = np.swapaxes(m, -1, -2) @ m
    return np.sqrt(np.maximum(_sym3_eigvals(gram).max(axis=-1), 0.0))


def matrix_power_norms(s: float, n_max: int) -> np.ndarray:
    """Spectral norms of M(s)^n for n = 1 .. n_max, by repeated multiplication."""
    if not 0.0 < s <= S_LIMIT:
        raise ValueError(f"s must lie in (0, 1/11], got {s}")
    m = companion_matrix(s)
    power = m.copy()
    norms = np.empty(n_max)
    for n in range(n_max):
        norms[n] = spectral_norms(power)
        if n + 1 < n_max:
            power = power @ m
    return norms


def find_contraction_exponent(s0: float, grid_points: int = 400,
                              n_cap: int = 10_000) -> tuple[int, float]:
    """Smallest n with max over the s grid of ||M(s)^n|| below 1.

    The grid is ``s0 * j / grid_points`` for j = 1 .. grid_points.  Returns
    ``(n, eps)`` where eps < 1 is the realized maximum norm.  Raises
    ``ArithmeticError`` if no exponent up to ``n_cap`` works, which signals
    s0 too close to 1/11 for the grid resolution.
    """
    if not 0.0 < s0 < S_LIMIT:
        raise ValueError(f"s0 must lie in (0, 1/11), got {s0}")
    s = s0 * np.arange(1, grid_points + 1) / grid_points
    mats = companion_matrices(s)
    power = mats.copy()
    for n in range(1, n_cap + 1):
        worst = float(spectral_norms(power).max())
        if worst < 1.0:
            return n, worst
        power = power @ mats
    raise ArithmeticError(
        f"no contraction exponent found up to n={n_cap} for s0={s0}; "
        "s0 is too close to 1/11 for this grid resolution")


@dataclass(frozen=True)
class DiagonalizationData:
    """Eigendecomposition M(s) = n_inverse @ diag(eigenvalues) @ n_matrix."""

    s: float
    kappa: float
    eigenvalues: np.ndarray
    n_matrix: np.ndarray
    n_inverse: np.ndarray
    max_abs_eigenvalue: float
    condition: float
    reconstruction_error: float


def diagonalize_near_limit(kappa: float, tol: float = 1e-10) -> DiagonalizationData:
    """Diagonalize M(s) at s = (1 - kappa)/11 for 0 < kappa < 1.

    The reconstruction must match M(s) to ``tol``; a breach (an effectively
    defective matrix, not expected for kappa > 0) raises ArithmeticError.
    """
    if not 0.0 < kappa < 1.0:
        raise ValueError(f"kappa must lie in (0, 1), got {kappa}")
    s = (1.0 - kappa) / 11.0
    m = companion_matrix(s)
    eigenvalues, vectors = np.linalg.eig(m)
    n_inverse = vectors
    n_matrix = np.linalg.inv(vectors)
    reconstruction = (n_inverse * eigenvalues) @ n_matrix
    err = float(np.abs(reconstruction - m).max())
    if err > tol:
        raise ArithmeticError(
            f"diagonalization reconstruction error {err:.3e} exceeds {tol} at kappa={kappa}")
    return DiagonalizationData(
        s=s, kappa=kappa, eigenvalues=eigenvalues,
        n_matrix=n_matrix, n_inverse=n_inverse,
        max_abs_eigenvalue=float(np.abs(eigenvalues).max()),
        condition=float(spectral_norms(n_matrix) * spectral_norms(n_inverse)),
        reconstruction_error=err,
    )


@dataclass(frozen=True)
class LimitSweepReport:
    """Diagonalization sweep over kappa near the neutral limit."""

    kappas: np.ndarray
    max_abs_eigenvalues: np.ndarray
    conditions: np.ndarray
    margin_rate: float      # min over the sweep of (1 - max|lambda|) / kappa
    transform_bound: float  # max over the sweep of ||N|| + ||N^-1||


def sweep_diagonalization(kappa_lo: float = 1e-4, kappa_hi: float = 0.1,
                          n_samples: int = 60) -> LimitSweepReport:
    """Log-spaced kappa sweep reporting spectral margins and conditioning."""
    kappas = np.geomspace(kappa_lo, kappa_hi, n_samples)
    rows = [diagonalize_near_limit(k) for k in kappas]
    max_abs = np.array([r.max_abs_eigenvalue for r in rows])
    conds = np.array([r.condition for r in rows])
    bound = max(spectral_norms(r.n_matrix) + spectral_norms(r.n_inverse) for r in rows)
    return LimitSweepReport(
        kappas=kappas, max_abs_eigenvalues=max_abs, conditions=conds,
        margin_rate=float(((1.0 - max_abs) / kappas).min()),
        transform_bound=float(bound),
    )


def write_root_sweep_csv(path, report: RootSweepReport,
                         include_limit_row: bool = True) -> None:
    """Emit the root sweep as CSV; optionally append the s = 1/11 limit row."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["s", "lambda1", "re_lambda2", "im_lambda2", "abs_lambda2"])
        rows = zip(report.s_values, report.lambda1, report.lambda2)
        for s, l1, l2 in rows:
            writer.writerow([f"{s:.17g}", f"{l1:.17g}", f"{l2.real:.17g}",
                             f"{l2.imag:.17g}", f"{abs(l2):.17g}"])
        if include_limit_row:
            limit = cubic_roots(S_LIMIT)
            writer.writerow([f"{S_LIMIT:.17g}", f"{limit.lambda1:.17g}",
                             f"{limit.lambda2.real:.17g}", f"{limit.lambda2.imag:.17g}",
                             f"{abs(limit.lambda2):.17g}"])


def write_power_norms_csv(path, s_values, n_max: int) -> None:
    """CSV of ||M(s)^n|| with one norm column per n."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["s"] + [f"norm_M{n}" for n in range(1, n_max + 1)])
        for s in s_values:
            norms = matrix_power_norms(float(s), n_max)
            writer.writerow([f"{s:.17g}"] + [f"{v:.17g}" for v in norms])


def write_diagonalization_csv(path, report: LimitSweepReport) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kappa", "s", "max_abs_lambda", "condition"])
        for k, lam, cond in zip(report.kappas, report.max_abs_eigenvalues,
                                report.conditions):
            writer.writerow([f"{k:.17g}", f"{(1 - k) / 11:.17g}",
                             f"{lam:.17g}", f"{cond:.17g}"])
