"""Preconditioned conjugate gradients with spectral condition estimation.

Convergence is declared on the true recomputed residual ||A u - f||, which
is also the recorded per-iteration quantity (relative to the initial
residual).  Two safeguards handle the attainable-accuracy limit of finite
precision: when the recursive residual drifts away from the true one it is
replaced by the true residual (van der Vorst/Ye style), and a stagnation
monitor stops the iteration once the true residual has stopped improving.

The alpha/beta coefficients of the recurrence populate the Lanczos
tridiagonal matrix whose extreme eigenvalues estimate the condition number
of the preconditioned operator; coefficient collection stops at the first
residual replacement, which only ever happens after the estimate has
converged for practical purposes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

__all__ = [
    "MatrixNotSpdError",
    "PreconditionerNotSpdError",
    "PcgReport",
    "pcg",
    "kappa_from_coefficients",
]

# Replace the recursive residual once it deviates from the true residual by
# this fraction; declare stagnation when the best true residual improved by
# less than 0.1% over STAGNATION_WINDOW iterations.
RESIDUAL_REPLACEMENT_FRACTION = 0.1
STAGNATION_WINDOW = 200
STAGNATION_IMPROVEMENT = 0.999


class MatrixNotSpdError(RuntimeError):
    """p^T A p <= 0 encountered: the system matrix is not SPD."""


class PreconditionerNotSpdError(RuntimeError):
    """z^T r <= 0 encountered: the preconditioner is not SPD."""


@dataclass
class PcgReport:
    """Outcome of one PCG solve.

    ``relative_residuals[n]`` is ||A u^(n) - f|| / ||A u^(0) - f|| with
    u^(0) = 0; entry 0 is always 1.  ``kappa_estimate`` is the Lanczos
    estimate of the spectral condition number of the preconditioned
    operator (an estimate, not a bound).  ``stagnated`` reports that the
    solve stopped at its finite-precision floor instead of the tolerance.
    """

    iterations: int
    relative_residuals: np.ndarray
    kappa_estimate: float
    converged: bool
    solution: np.ndarray
    stagnated: bool = False
    replacements: int = 0
    alphas: np.ndarray = field(default=None, repr=False)
    betas: np.ndarray = field(default=None, repr=False)


def kappa_from_coefficients(alphas, betas) -> float:
    """Condition estimate from the CG coefficients via the Lanczos matrix.

    The tridiagonal has diagonal 1/alpha_n + beta_{n-1}/alpha_{n-1} and
    off-diagonal sqrt(beta_n)/alpha_n; eigen-extremes are computed by
    bisection (Sturm counts).
    """
    alphas = np.asarray(alphas, dtype=float)
    betas = np.asarray(betas, dtype=float)
    k = alphas.size
    if k == 0:
        return 1.0
    diag = np.empty(k)
    diag[0] = 1.0 / alphas[0]
    if k > 1:
        diag[1:] = 1.0 / alphas[1:] + betas[: k - 1] / alphas[: k - 1]
        off = np.sqrt(betas[: k - 1]) / alphas[: k - 1]
        w = scipy.linalg.eigvalsh_tridiagonal(diag, off, lapack_driver="stebz")
    else:
        w = diag
    lam_min, lam_max = float(w[0]), float(w[-1])
    if lam_min <= 0:
        return np.inf
    return max(lam_max / lam_min, 1.0)


def pcg(A, M, f, tol: float = 1e-8, max_iters: int = 2000, callback=None) -> PcgReport:
    """Solve A u = f from u = 0 with preconditioner M.

    Parameters
    ----------
    A : sparse matrix, ndarray, or object supporting ``@``
        SPD system matrix.
    M : None, callable, or object with ``apply``
        Symmetric positive preconditioner; None means identity.
    tol : float
        Convergence threshold on the true relative residual.
    callback : callable, optional
        Called with the current iterate after every iteration.

    Raises
    ------
    MatrixNotSpdError, PreconditionerNotSpdError
        On nonpositive curvature p^T A p or inner product z^T r.
    """
    if M is None:
        precond = lambda r: r
    elif callable(getattr(M, "apply", None)):
        precond = M.apply
    else:
        precond = M
    f = np.asarray(f, dtype=float)

    u = np.zeros_like(f)
    r = f.copy()
    r0_norm = np.linalg.norm(f)
    if r0_norm == 0.0:
        return PcgReport(0, np.array([1.0]), 1.0, True, u,
                         alphas=np.array([]), betas=np.array([]))

    relres = [1.0]
    alphas: list[float] = []
    betas: list[float] = []
    collect = True  # Lanczos coefficients are clean until a replacement
    replacements = 0
    best = 1.0
    window_best = 1.0
    window_start = 0

    z = precond(r)
    rz = float(r @ z)
    if rz <= 0:
        raise PreconditionerNotSpdError(
            f"preconditioner not SPD: z^T r = {rz:.6e} at iteration 0"
        )
    p = z.copy()
    converged = False
    stagnated = False
    iterations = 0

    for n in range(1, max_iters + 1):
        Ap = A @ p
        pAp = float(p @ Ap)
        if pAp <= 0:
            raise MatrixNotSpdError(
                f"matrix not SPD: p^T A p = {pAp:.6e} at iteration {n}"
            )
        alpha = rz / pAp
        if collect:
            alphas.append(alpha)
        u += alpha * p
        r -= alpha * Ap
        iterations = n

        r_true = f - A @ u
        true_norm = float(np.linalg.norm(r_true))
        relres.append(true_norm / r0_norm)
        best = min(best, relres[-1])
        if callback is not None:
            callback(u.copy())
        if relres[-1] <= tol:
            converged = True
            break

        # Finite-precision safeguards: re-sync the recursion with the true
        # residual when they drift apart, and stop once the true residual
        # has stopped improving for a whole window.
        if np.linalg.norm(r_true - r) > RESIDUAL_REPLACEMENT_FRACTION * true_norm:
            r = r_true.copy()
            replacements += 1
            collect = False
        if n - window_start >= STAGNATION_WINDOW:
            if best > STAGNATION_IMPROVEMENT * window_best:
                stagnated = True
                break
            window_best = best
            window_start = n

        z = precond(r)
        rz_new = float(r @ z)
        if rz_new <= 0:
            raise PreconditionerNotSpdError(
                f"preconditioner not SPD: z^T r = {rz_new:.6e} at iteration {n}"
            )
        if collect:
            betas.append(rz_new / rz)
        p = z + (rz_new / rz) * p
        rz = rz_new

    kappa = kappa_from_coefficients(alphas, betas[: max(len(alphas) - 1, 0)])
    return PcgReport(
        iterations,
        np.asarray(relres),
        kappa,
        converged,
        u,
        stagnated=stagnated,
        replacements=replacements,
        alphas=np.asarray(alphas),
        betas=np.asarray(betas),
    )
