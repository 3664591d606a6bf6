"""Linear-rate constants, their empirical counterparts, and conditioning tools.

Calculators for the geometric contraction factors of the randomized
feasible-descent frameworks, the iteration bound that drives the duality gap
of the SVM dual below a target, quadratic-growth (weak strong convexity)
estimation from traces, and a toy-scale combinatorial evaluation of the
Hoffman polyhedral conditioning constant.

The framework theorems bound expectations; empirical comparisons should
always aggregate means over many seeds, never single trajectories.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import check_weights, weighted_norm_sq
from .problems import Problem, QuadraticProblem
from .solvers import Trace


@dataclass(frozen=True)
class RateConstants:
    """Per-iteration contraction descriptor of a convergence bound.

    ``factor`` is the geometric ratio of the bound right-hand side:
    ``c / (1 + c)`` for the full-expectation framework and ``1 - c`` for the
    coordinate frameworks.
    """

    framework: str
    c: float
    factor: float
    inputs: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"framework": self.framework, "c": self.c,
                "factor": self.factor, "inputs": self.inputs}


def _require_positive(**kwargs) -> None:
    for name, val in kwargs.items():
        if not val > 0:
            raise ValueError(f"{name} must be positive, got {val}")


def rate_rfdm(kappa_f: float, zeta: float, beta: float, omega_bar: float,
              l_f_w: float) -> RateConstants:
    """Expectation-framework contraction: factor (c/(1+c))^k with
    c = (2/(kappa_f zeta)) [(L_f^W + 1/omega_bar)^2 + beta^2]."""
    _require_positive(kappa_f=kappa_f, zeta=zeta, omega_bar=omega_bar, l_f_w=l_f_w)
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    c = (2.0 / (kappa_f * zeta)) * ((l_f_w + 1.0 / omega_bar) ** 2 + beta**2)
    return RateConstants(
        framework="rfdm", c=c, factor=c / (1.0 + c),
        inputs={"kappa_f": kappa_f, "zeta": zeta, "beta": beta,
                "omega_bar": omega_bar, "l_f_w": l_f_w},
    )


def rate_rcfdm_zero_z(kappa: float, omega_bar: float, n: int) -> RateConstants:
    """Coordinate framework with zero correction: factor (1-c)^k with
    c = 2 omega_bar kappa / (n (2 omega_bar kappa + 1)).

    The bound's right-hand side carries the additive start-distance term
    ``||x_0 - xbar_0||_W^2 / (2 omega_bar)``; its coefficient is echoed in
    ``inputs['initial_penalty_coeff']``.
    """
    _require_positive(kappa=kappa, omega_bar=omega_bar)
    if n < 1:
        raise ValueError("n must be >= 1")
    t = 2.0 * omega_bar * kappa
    c = t / (n * (t + 1.0))
    return RateConstants(
        framework="rcfdm-zero", c=c, factor=1.0 - c,
        inputs={"kappa": kappa, "omega_bar": omega_bar, "n": n,
                "initial_penalty_coeff": 1.0 / (2.0 * omega_bar)},
    )


def rate_rcfdm_general(kappa_f: float, zeta: float, beta: float,
                       omega_bar: float, n: int,
                       printed_low_branch: bool = False) -> RateConstants:
    """Coordinate framework with nonzero correction, two-branch factor.

    The branch is selected by whether ``omega_bar kappa_f / (omega_bar + 1)``
    reaches 1 (the clipped minimizer of the inner line search):

    * below 1:  factor = 1 - (1/2n) * (omega_bar kappa_f/(omega_bar+1))
                             * 2 zeta / (2 zeta + 2 beta + beta^2)
    * at/above: factor = 1 - zeta / (n (2 zeta + 2 beta + beta^2))

    The quadratic denominator is used in both branches, which makes the
    factor continuous at the branch boundary.  ``printed_low_branch=True``
    switches the low branch to the linear-in-beta denominator
    ``2 zeta + 2 beta + beta`` for side-by-side comparison.
    """
    _require_positive(kappa_f=kappa_f, zeta=zeta, omega_bar=omega_bar)
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    if n < 1:
        raise ValueError("n must be >= 1")
    lam_arg = omega_bar * kappa_f / (omega_bar + 1.0)
    denom = 2.0 * zeta + 2.0 * beta + beta**2
    if lam_arg < 1.0:
        if printed_low_branch:
            denom = 2.0 * zeta + 2.0 * beta + beta
        c = (0.5 / n) * lam_arg * (2.0 * zeta / denom)
        branch = "clip-inactive"
    else:
        c = zeta / (n * denom)
        branch = "clip-active"
    return RateConstants(
        framework="rcfdm-general", c=c, factor=1.0 - c,
        inputs={"kappa_f": kappa_f, "zeta": zeta, "beta": beta,
                "omega_bar": omega_bar, "n": n, "branch": branch,
                "printed_low_branch": printed_low_branch},
    )


@dataclass
class GapReport:
    """Duality-gap iteration bound and (optionally) its observed counterpart."""

    epsilon: float
    s: float
    sigma_sq: float
    iteration_bound: int
    kappa_f: float
    initial_bound: float
    observed_iteration: Optional[int] = None
    mean_gap_at_bound: Optional[float] = None
    n_seeds: Optional[int] = None

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon, "s": self.s, "sigma_sq": self.sigma_sq,
            "iteration_bound": self.iteration_bound, "kappa_f": self.kappa_f,
            "initial_bound": self.initial_bound,
            "observed_iteration": self.observed_iteration,
            "mean_gap_at_bound": self.mean_gap_at_bound,
            "n_seeds": self.n_seeds,
        }


def sdca_iteration_bound(epsilon: float, lam: float, sigma_sq: float, n: int,
                         kappa_f: float, initial_bound: float) -> GapReport:
    """Iterations after which the expected duality gap is below ``epsilon``.

    With s = min{1, epsilon lam / sigma_sq},

        K = ceil( n (1 + 1/(2 kappa_f)) log( 2 initial_bound / (s epsilon) ) )

    where ``initial_bound = f(0) - f* + ||x*||_L^2`` comes from a
    high-precision reference solve.  A nonpositive log argument gives K = 0.
    """
    _require_positive(epsilon=epsilon, lam=lam, sigma_sq=sigma_sq,
                      kappa_f=kappa_f)
    if n < 1:
        raise ValueError("n must be >= 1")
    if initial_bound <= 0:
        raise ValueError("initial_bound must be positive")
    s = min(1.0, epsilon * lam / sigma_sq)
    arg = 2.0 * initial_bound / (s * epsilon)
    k = 0 if arg <= 1.0 else math.ceil(n * (1.0 + 0.5 / kappa_f) * math.log(arg))
    return GapReport(epsilon=float(epsilon), s=float(s), sigma_sq=float(sigma_sq),
                     iteration_bound=int(k), kappa_f=float(kappa_f),
                     initial_bound=float(initial_bound))


# ---------------------------------------------------------------------------
# conditioning estimates


def spectral_norm(mat, rtol: float = 1e-8, max_iter: int = 100_000,
                  seed: int = 0) -> float:
    """Largest singular value via power iteration on the Gram matrix."""
    mat = np.asarray(mat, dtype=float)
    gram = mat.T @ mat if mat.shape[0] >= mat.shape[1] else mat @ mat.T
    m = gram.shape[0]
    rng = np.random.Generator(np.random.Philox(key=seed))
    v = rng.standard_normal(m)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        gv = gram @ v
        lam_new = float(v @ gv)
        nrm = np.linalg.norm(gv)
        if nrm == 0.0:
            return 0.0
        v = gv / nrm
        if abs(lam_new - lam) <= rtol * max(1.0, abs(lam_new)):
            return float(np.sqrt(max(lam_new, 0.0)))
        lam = lam_new
    return float(np.sqrt(max(lam, 0.0)))


def svm_sigma_sq(p, rtol: float = 1e-8) -> float:
    """Gap-bound constant sigma^2 = ||A|| / n for the label-scaled data matrix."""
    return spectral_norm(p.ya.T, rtol=rtol) / p.n


def quadratic_lipschitz_w(p: QuadraticProblem, w, rtol: float = 1e-8) -> float:
    """Tight W-norm gradient Lipschitz constant of a quadratic,
    ||W^{-1/2} H W^{-1/2}||, via power iteration."""
    w = check_weights(w, p.n)
    s = 1.0 / np.sqrt(w)
    return spectral_norm(s[:, None] * p.hessian * s[None, :], rtol=rtol)


def _solution_set_projection(p: QuadraticProblem, x: np.ndarray, x_star,
                             w: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """W-projection of x onto the affine solution set of a singular
    unconstrained quadratic (x* + null(H))."""
    evals, evecs = np.linalg.eigh(p.hessian)
    scale = float(np.max(np.abs(evals))) or 1.0
    null = evecs[:, np.abs(evals) <= tol * scale]
    if null.shape[1] == 0:
        return np.asarray(x_star, dtype=float)
    d = x - x_star
    wn = w[:, None] * null
    coef = np.linalg.solve(null.T @ wn, wn.T @ d)
    return x_star + null @ coef


def estimate_kappa_f(p: Problem, trace: Trace, x_star, f_star: float, w,
                     denom_floor: float = 1e-16,
                     solution_set: str = "auto") -> float:
    """Empirical quadratic-growth modulus along a trace.

    Returns the minimum of ``(f(x_k) - f*) / ||x_k - xbar_k||_W^2`` over the
    trace, skipping points whose denominator falls below ``denom_floor`` or
    whose objective excess falls below float resolution (the ratio cannot be
    measured there).  ``xbar_k`` is ``x_star`` under the default
    unique-minimizer assumption; for an unconstrained quadratic with singular
    Hessian (``solution_set='auto'`` or ``'projection'``) it is the
    W-projection of x_k onto the affine solution set.

    Raises ``ValueError`` when the trace sits entirely at the optimum.
    """
    w = check_weights(w, p.n)
    x_star = np.asarray(x_star, dtype=float)
    use_projection = False
    if solution_set == "projection":
        use_projection = True
    elif solution_set == "auto":
        if isinstance(p, QuadraticProblem) and p.box.is_free():
            evals = np.linalg.eigvalsh(p.hessian)
            use_projection = bool(evals[0] <= 1e-10 * max(evals[-1], 1.0))
    elif solution_set != "point":
        raise ValueError("solution_set must be 'point', 'projection' or 'auto'")
    if use_projection and not isinstance(p, QuadraticProblem):
        raise ValueError("solution-set projection is implemented for quadratics only")

    f_noise = 32.0 * np.finfo(float).eps * max(1.0, abs(f_star))
    best = np.inf
    for k in sorted(trace._snapshots):
        x = trace.iterate(k)
        xbar = (_solution_set_projection(p, x, x_star, w)
                if use_projection else x_star)
        denom = weighted_norm_sq(x - xbar, w)
        if denom < denom_floor:
            continue
        excess = p.value(x) - f_star
        if excess <= f_noise:
            continue
        best = min(best, excess / denom)
    if not np.isfinite(best):
        raise ValueError("trace is entirely at the optimum; kappa_f is undefined")
    return float(best)


def measured_rate(trace: Trace, f_star: float, tail: float = 0.5,
                  min_points: int = 10) -> float:
    """Empirical per-iteration geometric factor of f(x_k) - f*.

    Least-squares slope of log(f(x_k) - f*) against k over the trailing
    ``tail`` fraction of iterations with a positive objective excess;
    returns exp(slope).
    """
    if not 0 < tail <= 1:
        raise ValueError("tail must be in (0, 1]")
    f = trace.f
    ks = trace.ks
    pos = f > f_star
    ks, excess = ks[pos], f[pos] - f_star
    start = int(np.floor(len(ks) * (1.0 - tail)))
    ks, excess = ks[start:], excess[start:]
    if len(ks) < min_points:
        raise ValueError(
            f"need at least {min_points} trace points above f_star, got {len(ks)}")
    slope = np.polyfit(ks, np.log(excess), 1)[0]
    return float(np.exp(slope))


# ---------------------------------------------------------------------------
# Hoffman constant (toy scale)


def hoffman_theta_bruteforce(a_rows, b_rows=None, q=None,
                             max_rows: int = 12) -> float:
    """Hoffman conditioning constant by exhaustive support enumeration.

    Maximizes ``||(u, v)||`` subject to ``||B'u + [A; q']' v|| = 1`` with
    ``u >= 0`` and the selected rows linearly independent, where u ranges
    over rows of B and v over rows of the stacked matrix [A; q'].  For each
    linearly independent support the maximizer is the reciprocal smallest
    singular value of the selected-row matrix; supports whose maximizer
    violates the sign constraint on u (for both signs) are discarded.

    Enumeration is exponential in the row count, hence the hard cap.
    """
    A = np.atleast_2d(np.asarray(a_rows, dtype=float))
    ncols = A.shape[1]
    if b_rows is None or len(b_rows) == 0:
        B = np.zeros((0, ncols))
    else:
        B = np.atleast_2d(np.asarray(b_rows, dtype=float))
        if B.shape[1] != ncols:
            raise ValueError("B rows must match the column count of A")
    q = np.zeros(ncols) if q is None else np.asarray(q, dtype=float)
    if q.shape != (ncols,):
        raise ValueError("q must match the column count of A")
    M = np.vstack([A, q[None, :]])
    n_b, n_m = B.shape[0], M.shape[0]
    total = n_b + n_m
    if total > max_rows:
        raise ValueError(f"{total} rows exceeds the enumeration cap {max_rows}")

    rows = np.vstack([B, M]) if n_b else M
    best = 0.0
    indices = list(range(total))
    for size in range(1, min(total, ncols) + 1):
        for support in itertools.combinations(indices, size):
            sel = rows[list(support)]
            if np.linalg.matrix_rank(sel, tol=1e-12) < size:
                continue
            # columns of C are the selected rows; ||C t|| = 1, maximize ||t||
            u_mat, s, vt = np.linalg.svd(sel.T, full_matrices=False)
            sigma_min = s[-1]
            if sigma_min <= 1e-300:
                continue
            t = vt[-1] / sigma_min
            u_positions = [j for j, r in enumerate(support) if r < n_b]
            if u_positions:
                u_part = t[u_positions]
                if np.all(u_part >= 0.0):
                    pass
                elif np.all(-u_part >= 0.0):
                    t = -t
                else:
                    continue
            best = max(best, float(np.linalg.norm(t)))
    return best


def kappa_from_theta(sigma_h: float, theta: float) -> float:
    """Quadratic-growth modulus from the Hoffman constant: sigma_h / (2 theta^2)."""
    _require_positive(sigma_h=sigma_h, theta=theta)
    return sigma_h / (2.0 * theta**2)


def kappa_from_eta(l_f_w: float, eta_f: float) -> float:
    """Quadratic-growth modulus from the global error bound: L_f^W / (2 eta_f^2).

    Note the error-bound route scales like theta^4 where the direct route
    ``kappa_from_theta`` scales like theta^2, so the latter is the sharper
    estimate when both apply.
    """
    _require_positive(l_f_w=l_f_w, eta_f=eta_f)
    return l_f_w / (2.0 * eta_f**2)


def error_bound_eta(theta: float, l_f_w: float, sigma_h: float,
                    grad_h_norm_at_opt: float, level: float,
                    grad_f_norm_at_opt: float) -> float:
    """Global error-bound constant of a polyhedrally constrained composite:

        eta_f = theta^2 (1 + L_f^W) ((1 + 2 ||grad h(A xbar)||^2)/sigma_h
                                      + 4 M) + 2 theta ||grad f(xbar)||

    evaluated for supplied ingredients (``level`` is the sublevel constant M).
    """
    _require_positive(theta=theta, l_f_w=l_f_w, sigma_h=sigma_h)
    if grad_h_norm_at_opt < 0 or grad_f_norm_at_opt < 0 or level < 0:
        raise ValueError("norms and the level constant must be nonnegative")
    return (theta**2 * (1.0 + l_f_w)
            * ((1.0 + 2.0 * grad_h_norm_at_opt**2) / sigma_h + 4.0 * level)
            + 2.0 * theta * grad_f_norm_at_opt)
