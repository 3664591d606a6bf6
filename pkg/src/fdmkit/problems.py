"""Smooth box-constrained problems with coordinate-gradient oracles.

Every problem exposes its dimension, feasible :class:`~fdmkit.geometry.Box`,
per-coordinate gradient Lipschitz constants ``L_i`` and, where the coordinate
slice is an exact quadratic, a closed-form coordinate minimizer (otherwise a
safeguarded 1-D Newton solve is used).

Problem instances are immutable after construction and shareable across
concurrent runs; the incremental caches used by the solvers live in the
mutable state objects returned by :meth:`Problem.start_state`, one per run.
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np
from scipy.special import expit

from .geometry import Box, check_weights, _check_vector

SLICE_DERIV_TOL = 1e-12
SLICE_MAX_ITER = 50


class SliceMinError(RuntimeError):
    """1-D coordinate minimization failed to reach the derivative tolerance."""

    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"coordinate slice solve: |derivative|={residual:.3e} after "
            f"{iterations} iterations (tolerance {SLICE_DERIV_TOL:.0e})"
        )


def minimize_slice(deriv, curv, t0: float, lo: float, hi: float,
                   tol: float = SLICE_DERIV_TOL,
                   max_iter: int = SLICE_MAX_ITER,
                   deriv_and_curv=None) -> float:
    """Minimize a strictly convex differentiable slice over ``[lo, hi]``.

    ``deriv``/``curv`` evaluate the first and second derivative at a point;
    when both are cheap to obtain together, pass ``deriv_and_curv`` returning
    the pair and it will be used inside the Newton loop.  Newton steps are
    safeguarded by bisection on a sign-change bracket, so the iteration
    cannot leave the bracket even for poorly scaled slices.
    """
    if deriv_and_curv is None:
        def deriv_and_curv(t):
            return deriv(t), curv(t)

    if lo > -np.inf and deriv(lo) >= 0.0:
        return lo
    if hi < np.inf and deriv(hi) <= 0.0:
        return hi

    t = min(max(t0, lo), hi)
    d0 = deriv(t)
    if abs(d0) <= tol:
        return t

    # Bracket a sign change; strict convexity makes the derivative increasing,
    # so geometric expansion in the descent direction must cross zero.
    step = max(1.0, abs(t)) * 0.5
    if d0 > 0.0:
        b = t
        a = t
        for _ in range(200):
            a = max(lo, a - step)
            da = deriv(a)
            if da <= 0.0:
                break
            step *= 2.0
        else:
            raise SliceMinError(200, da)
    else:
        a = t
        b = t
        for _ in range(200):
            b = min(hi, b + step)
            db = deriv(b)
            if db >= 0.0:
                break
            step *= 2.0
        else:
            raise SliceMinError(200, db)

    t = 0.5 * (a + b)
    for _ in range(max_iter):
        d, c = deriv_and_curv(t)
        if abs(d) <= tol:
            return t
        if d > 0.0:
            b = t
        else:
            a = t
        t_new = t - d / c if c > 0.0 else 0.5 * (a + b)
        if not (a < t_new < b):
            t_new = 0.5 * (a + b)
        if t_new == t:
            # Bracket has collapsed to float resolution.
            return t
        t = t_new
    raise SliceMinError(max_iter, abs(d))


class ProblemState(ABC):
    """Mutable per-run cache owning the current iterate.

    ``objective`` / ``coord_grad`` are exact functions of the cached
    quantities, so consecutive objective values recorded by a solver are
    mutually consistent (monotone descent is preserved to rounding).
    """

    x: np.ndarray

    @abstractmethod
    def objective(self) -> float: ...

    @abstractmethod
    def coord_grad(self, i: int) -> float: ...

    @abstractmethod
    def gradient(self) -> np.ndarray: ...

    @abstractmethod
    def set_coord(self, i: int, new: float) -> None: ...

    @abstractmethod
    def exact_coord_min(self, i: int) -> float:
        """Minimizer of the i-th coordinate slice over X_i (does not mutate)."""

    def set_x(self, x_new: np.ndarray) -> None:
        """Replace the whole iterate (full-vector methods); rebuilds caches."""
        self._rebuild(np.ascontiguousarray(x_new, dtype=float).copy())

    @abstractmethod
    def _rebuild(self, x: np.ndarray) -> None: ...


class Problem(ABC):
    """Abstract smooth problem over a coordinate box."""

    n: int
    box: Box
    lipschitz: np.ndarray

    @abstractmethod
    def value(self, x) -> float: ...

    @abstractmethod
    def gradient(self, x) -> np.ndarray: ...

    @abstractmethod
    def coord_gradient(self, x, i: int) -> float: ...

    @abstractmethod
    def start_state(self, x0) -> ProblemState: ...

    @abstractmethod
    def coord_curvature_floor(self) -> np.ndarray:
        """Per-coordinate lower bound on the slice curvature, valid on all of X."""

    def gamma(self, w) -> float:
        """Coordinate strong-convexity modulus wrt ``||.||_W``: min_i floor_i/(2 w_i)."""
        w = check_weights(w, self.n)
        return float(np.min(self.coord_curvature_floor() / (2.0 * w)))

    def exact_coord_min(self, x, i: int) -> float:
        """One-off exact coordinate minimizer (builds a throwaway state)."""
        st = self.start_state(np.array(x, dtype=float))
        return st.exact_coord_min(i)

    def _check_point(self, x) -> np.ndarray:
        x = _check_vector(x, self.n)
        if not np.all(np.isfinite(x)):
            raise ValueError("point has non-finite entries")
        return x


def global_lipschitz_bound(lipschitz, w) -> float:
    """Upper bound ``sum_i L_i / w_i`` on the gradient Lipschitz constant
    with respect to ``||.||_W``."""
    lipschitz = _check_vector(lipschitz, name="lipschitz")
    w = check_weights(w, lipschitz.shape[0])
    return float(np.sum(lipschitz / w))


# ---------------------------------------------------------------------------
# quadratics


class QuadraticProblem(Problem):
    """f(x) = 0.5 x'Hx + c'x over a box, H symmetric PSD with H_ii > 0."""

    def __init__(self, hessian, linear, box: Box | None = None):
        H = np.ascontiguousarray(hessian, dtype=float)
        c = _check_vector(linear, name="linear")
        n = c.shape[0]
        if H.shape != (n, n):
            raise ValueError(f"hessian shape {H.shape} does not match linear term {n}")
        if not np.allclose(H, H.T, atol=1e-12):
            raise ValueError("hessian must be symmetric")
        d = np.diag(H)
        if np.any(d <= 0.0):
            raise ValueError("hessian must have strictly positive diagonal")
        self.n = n
        self.hessian = H.copy()
        self.linear = c.copy()
        self.box = box if box is not None else Box.free(n)
        if self.box.n != n:
            raise ValueError("box dimension mismatch")
        self.lipschitz = d.copy()

    def value(self, x) -> float:
        x = self._check_point(x)
        return float(0.5 * x @ self.hessian @ x + self.linear @ x)

    def gradient(self, x) -> np.ndarray:
        x = self._check_point(x)
        return self.hessian @ x + self.linear

    def coord_gradient(self, x, i: int) -> float:
        x = self._check_point(x)
        return float(self.hessian[i] @ x + self.linear[i])

    def coord_curvature_floor(self) -> np.ndarray:
        return np.diag(self.hessian).copy()

    def start_state(self, x0) -> "QuadraticState":
        return QuadraticState(self, self._check_point(x0).copy())


class QuadraticState(ProblemState):
    __slots__ = ("p", "x", "g", "f")

    def __init__(self, p: QuadraticProblem, x: np.ndarray):
        self.p = p
        self._rebuild(x)

    def _rebuild(self, x: np.ndarray) -> None:
        self.x = x
        self.g = self.p.hessian @ x + self.p.linear
        self.f = float(0.5 * x @ self.p.hessian @ x + self.p.linear @ x)

    def objective(self) -> float:
        return self.f

    def coord_grad(self, i: int) -> float:
        return float(self.g[i])

    def gradient(self) -> np.ndarray:
        return self.g.copy()

    def set_coord(self, i: int, new: float) -> None:
        delta = new - self.x[i]
        if delta == 0.0:
            return
        gi = self.g[i]
        self.f += gi * delta + 0.5 * self.p.hessian[i, i] * delta * delta
        self.g += delta * self.p.hessian[:, i]
        self.x[i] = new

    def exact_coord_min(self, i: int) -> float:
        # Slice curvature is exactly H_ii, so the minimizer is the clipped
        # Newton point.
        t = self.x[i] - self.g[i] / self.p.hessian[i, i]
        return self.p.box.clip_coord(t, i)


# ---------------------------------------------------------------------------
# SVM dual


class SvmDualProblem(Problem):
    """Dual of the hinge-loss linear SVM.

    Given rows ``a_i`` and labels ``y_i`` in {-1, +1}:

        f(x) = (1 / (2 lam n^2)) x'Qx - (1/n) 1'x,   Q_ij = y_i y_j <a_i, a_j>

    over the unit cube, with ``L_i = ||a_i||^2 / (lam n^2)``.  The gradient is
    evaluated through the primal-weight representation (the label-scaled data
    combination), never by materializing Q, so memory stays O(nd).
    """

    def __init__(self, features, labels, lam: float):
        A = np.ascontiguousarray(features, dtype=float)
        if A.ndim != 2:
            raise ValueError("features must be a 2-d array of row examples")
        y = _check_vector(labels, A.shape[0], "labels")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        if lam <= 0:
            raise ValueError("regularizer lam must be positive")
        row_sq = np.einsum("ij,ij->i", A, A)
        if np.any(row_sq <= 0.0):
            raise ValueError("every example must have a nonzero feature row")
        self.n, self.d = A.shape
        self.lam = float(lam)
        self.features = A.copy()
        self.labels = y.copy()
        # rows scaled by their labels; the dual Hessian is (ya)(ya)'/(lam n^2)
        self.ya = A * y[:, None]
        self.box = Box.unit(self.n)
        self.lipschitz = row_sq / (self.lam * self.n**2)

    def _require_feasible(self, x: np.ndarray) -> None:
        if not self.box.contains(x):
            raise ValueError("dual point is outside [0, 1]^n")

    def value(self, x) -> float:
        x = self._check_point(x)
        self._require_feasible(x)
        pw = self.ya.T @ x
        return float(pw @ pw / (2.0 * self.lam * self.n**2) - np.sum(x) / self.n)

    def gradient(self, x) -> np.ndarray:
        x = self._check_point(x)
        pw = self.ya.T @ x
        return (self.ya @ pw) / (self.lam * self.n**2) - 1.0 / self.n

    def coord_gradient(self, x, i: int) -> float:
        x = self._check_point(x)
        pw = self.ya.T @ x
        return float(self.ya[i] @ pw / (self.lam * self.n**2) - 1.0 / self.n)

    def coord_curvature_floor(self) -> np.ndarray:
        # Slices are exact quadratics with curvature Q_ii/(lam n^2) = L_i.
        return self.lipschitz.copy()

    def primal_weights(self, x) -> np.ndarray:
        """Primal point w(x) = (1/(lam n)) sum_i x_i y_i a_i."""
        x = self._check_point(x)
        self._require_feasible(x)
        return (self.ya.T @ x) / (self.lam * self.n)

    def primal_value(self, weights) -> float:
        """Hinge-loss primal objective at a weight vector."""
        weights = _check_vector(weights, self.d, "weights")
        margins = self.ya @ weights
        hinge = np.maximum(0.0, 1.0 - margins)
        return float(np.mean(hinge) + 0.5 * self.lam * weights @ weights)

    def duality_gap(self, x) -> float:
        """Duality gap G(x) = P(w(x)) + f(x); zero exactly at optimality."""
        return self.primal_value(self.primal_weights(x)) + self.value(x)

    def start_state(self, x0) -> "SvmDualState":
        x0 = self._check_point(x0).copy()
        self._require_feasible(x0)
        return SvmDualState(self, x0)


class SvmDualState(ProblemState):
    __slots__ = ("p", "x", "pw", "sum_x", "f", "scale")

    def __init__(self, p: SvmDualProblem, x: np.ndarray):
        self.p = p
        self._rebuild(x)

    def _rebuild(self, x: np.ndarray) -> None:
        self.x = x
        self.pw = self.p.ya.T @ x  # unnormalized primal combination
        self.sum_x = float(np.sum(x))
        self.scale = 1.0 / (self.p.lam * self.p.n**2)
        self.f = float(self.pw @ self.pw * 0.5 * self.scale - self.sum_x / self.p.n)

    def objective(self) -> float:
        return self.f

    def coord_grad(self, i: int) -> float:
        return float(self.p.ya[i] @ self.pw * self.scale - 1.0 / self.p.n)

    def gradient(self) -> np.ndarray:
        return (self.p.ya @ self.pw) * self.scale - 1.0 / self.p.n

    def set_coord(self, i: int, new: float) -> None:
        delta = new - self.x[i]
        if delta == 0.0:
            return
        gi = self.coord_grad(i)
        self.f += gi * delta + 0.5 * self.p.lipschitz[i] * delta * delta
        self.pw += delta * self.p.ya[i]
        self.sum_x += delta
        self.x[i] = new

    def exact_coord_min(self, i: int) -> float:
        t = self.x[i] - self.coord_grad(i) / self.p.lipschitz[i]
        return self.p.box.clip_coord(t, i)

    def duality_gap(self) -> float:
        w = self.pw / (self.p.lam * self.p.n)
        margins = self.p.ya @ w
        primal = float(np.mean(np.maximum(0.0, 1.0 - margins))
                       + 0.5 * self.p.lam * w @ w)
        return primal + self.f


# ---------------------------------------------------------------------------
# l2-regularized empirical risk minimization


class _Logistic:
    curv_max = 0.25

    @staticmethod
    def values(u, y):
        return np.logaddexp(0.0, -y * u)

    @staticmethod
    def deriv(u, y):
        return -y * expit(-y * u)

    @staticmethod
    def deriv_pair(u, y):
        s = expit(-y * u)
        return -y * s, s * (1.0 - s)  # curvature sigma(m) sigma(-m) <= 1/4


class _Squared:
    curv_max = 2.0

    @staticmethod
    def values(u, y):
        r = u - y
        return r * r

    @staticmethod
    def deriv(u, y):
        return 2.0 * (u - y)

    @staticmethod
    def deriv_pair(u, y):
        return 2.0 * (u - y), np.full_like(u, 2.0)


class _SquaredHinge:
    curv_max = 2.0

    @staticmethod
    def values(u, y):
        act = np.maximum(0.0, 1.0 - y * u)
        return act * act

    @staticmethod
    def deriv(u, y):
        return -2.0 * y * np.maximum(0.0, 1.0 - y * u)

    @staticmethod
    def deriv_pair(u, y):
        m = 1.0 - y * u
        act = np.maximum(0.0, m)
        return -2.0 * y * act, np.where(m > 0.0, 2.0, 0.0)


_LOSSES = {
    "logistic": _Logistic,
    "squared": _Squared,
    "squared_hinge": _SquaredHinge,
}


class ErmProblem(Problem):
    """Unconstrained l2-regularized empirical loss over the weight vector.

    f(x) = (1/N) sum_j loss(a_j'x; y_j) + (lam/2) x'x.

    Coordinate Lipschitz constants: the loss curvature is bounded by 1/4
    (logistic) or 2 (squared, squared hinge), so L_c = c_max/N * sum_j
    a_{j,c}^2 + lam.  The regularizer makes every slice lam-strongly convex.
    """

    def __init__(self, points, labels, lam: float, loss: str = "logistic"):
        A = np.ascontiguousarray(points, dtype=float)
        if A.ndim != 2:
            raise ValueError("points must be a 2-d array of row examples")
        y = _check_vector(labels, A.shape[0], "labels")
        if loss not in _LOSSES:
            raise ValueError(f"unknown loss {loss!r}; expected one of {sorted(_LOSSES)}")
        if loss in ("logistic", "squared_hinge") and not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError(f"{loss} loss requires labels in {{-1, +1}}")
        if lam <= 0:
            raise ValueError("regularizer lam must be positive")
        self.points = A.copy()
        self.labels = y.copy()
        self.lam = float(lam)
        self.loss = loss
        self._lo = _LOSSES[loss]
        self.n_points = A.shape[0]
        self.n = A.shape[1]
        self.box = Box.free(self.n)
        self._points_sq = A * A
        col_sq = self._points_sq.sum(axis=0)
        self.lipschitz = self._lo.curv_max * col_sq / self.n_points + self.lam

    def value(self, x) -> float:
        x = self._check_point(x)
        u = self.points @ x
        return float(np.mean(self._lo.values(u, self.labels))
                     + 0.5 * self.lam * x @ x)

    def gradient(self, x) -> np.ndarray:
        x = self._check_point(x)
        u = self.points @ x
        d1 = self._lo.deriv(u, self.labels)
        return self.points.T @ d1 / self.n_points + self.lam * x

    def coord_gradient(self, x, i: int) -> float:
        x = self._check_point(x)
        u = self.points @ x
        d1 = self._lo.deriv(u, self.labels)
        return float(d1 @ self.points[:, i] / self.n_points + self.lam * x[i])

    def coord_curvature_floor(self) -> np.ndarray:
        # Loss curvature is nonnegative, so lam is a uniform floor.
        return np.full(self.n, self.lam)

    def start_state(self, x0) -> "ErmState":
        return ErmState(self, self._check_point(x0).copy())


class ErmState(ProblemState):
    __slots__ = ("p", "x", "u", "sq_x")

    def __init__(self, p: ErmProblem, x: np.ndarray):
        self.p = p
        self._rebuild(x)

    def _rebuild(self, x: np.ndarray) -> None:
        self.x = x
        self.u = self.p.points @ x
        self.sq_x = float(x @ x)

    def objective(self) -> float:
        return float(np.mean(self.p._lo.values(self.u, self.p.labels))
                     + 0.5 * self.p.lam * self.sq_x)

    def coord_grad(self, i: int) -> float:
        d1 = self.p._lo.deriv(self.u, self.p.labels)
        return float(d1 @ self.p.points[:, i] / self.p.n_points
                     + self.p.lam * self.x[i])

    def gradient(self) -> np.ndarray:
        d1 = self.p._lo.deriv(self.u, self.p.labels)
        return self.p.points.T @ d1 / self.p.n_points + self.p.lam * self.x

    def set_coord(self, i: int, new: float) -> None:
        delta = new - self.x[i]
        if delta == 0.0:
            return
        self.sq_x += 2.0 * self.x[i] * delta + delta * delta
        self.u += delta * self.p.points[:, i]
        self.x[i] = new

    def exact_coord_min(self, i: int) -> float:
        p = self.p
        col = p.points[:, i]
        xi = self.x[i]
        if p.loss == "squared":
            # Squared-loss slices are exact quadratics.
            curv = 2.0 * col @ col / p.n_points + p.lam
            return xi - self.coord_grad(i) / curv
        if abs(self.coord_grad(i)) <= SLICE_DERIV_TOL:
            return xi
        col_sq = p._points_sq[:, i]
        y, inv_n, lam = p.labels, 1.0 / p.n_points, p.lam

        def deriv(t):
            d1 = p._lo.deriv(self.u + (t - xi) * col, y)
            return float(d1 @ col) * inv_n + lam * t

        def curv(t):
            _, d2 = p._lo.deriv_pair(self.u + (t - xi) * col, y)
            return float(d2 @ col_sq) * inv_n + lam

        def deriv_and_curv(t):
            d1, d2 = p._lo.deriv_pair(self.u + (t - xi) * col, y)
            return (float(d1 @ col) * inv_n + lam * t,
                    float(d2 @ col_sq) * inv_n + lam)

        return minimize_slice(deriv, curv, xi, -np.inf, np.inf,
                              deriv_and_curv=deriv_and_curv)


# ---------------------------------------------------------------------------
# Lasso via the doubled-variable box reformulation


def lasso_lift(x) -> np.ndarray:
    """Split ``x`` into nonnegative parts ``[x+; x-]`` (doubled dimension)."""
    x = _check_vector(x)
    return np.concatenate([np.maximum(x, 0.0), np.maximum(-x, 0.0)])


def lasso_project_back(z) -> np.ndarray:
    """Recover ``x = x+ - x-`` from a lifted pair; rejects negative entries."""
    z = _check_vector(z, name="z")
    if z.shape[0] % 2 != 0:
        raise ValueError("lifted vector must have even length")
    if np.any(z < 0.0):
        raise ValueError("lifted pair has negative entries")
    half = z.shape[0] // 2
    return z[:half] - z[half:]


class LassoBoxProblem(Problem):
    """l1-penalized smooth composite, reformulated over the doubled orthant.

    The original objective ``h(A v) + q'v + l1 ||v||_1`` in dimension d becomes

        f([x+; x-]) = h(A (x+ - x-)) + q'(x+ - x-) + l1 1'x+ + l1 1'x-

    over ``[0, inf)^{2d}``.  Default inner function: least squares
    ``h(u) = 0.5 ||u - b||^2`` (strong convexity modulus 1).  A custom
    strongly convex ``h`` can be supplied via value/gradient/curvature
    callables plus curvature bounds.
    """

    def __init__(self, design, target=None, q=None, l1: float = 0.0,
                 h_value=None, h_grad=None, h_curv=None,
                 h_curv_max: float = 1.0, sigma_h: float = 1.0):
        A = np.ascontiguousarray(design, dtype=float)
        if A.ndim != 2:
            raise ValueError("design must be a 2-d matrix")
        m, d = A.shape
        if l1 < 0:
            raise ValueError("l1 weight must be nonnegative")
        self.design = A.copy()
        self.d_orig = d
        self.q = np.zeros(d) if q is None else _check_vector(q, d, "q")
        self.l1 = float(l1)
        custom = [h_value, h_grad, h_curv]
        if any(fn is not None for fn in custom):
            if any(fn is None for fn in custom):
                raise ValueError("custom h requires h_value, h_grad and h_curv")
            self.target = None
            self._custom_h = (h_value, h_grad, h_curv)
            self._h_quadratic = False
        else:
            b = np.zeros(m) if target is None else _check_vector(target, m, "target")
            self.target = b.copy()
            self._custom_h = None
            self._h_quadratic = True
            h_curv_max = 1.0
            sigma_h = 1.0
        self.h_curv_max = float(h_curv_max)
        self.sigma_h = float(sigma_h)
        col_sq = np.einsum("ij,ij->j", A, A)
        if np.any(col_sq <= 0.0):
            raise ValueError("design has a zero column; drop unused variables")
        self._col_sq = col_sq
        self.n = 2 * d
        self.box = Box.nonneg(self.n)
        self.lipschitz = np.tile(self.h_curv_max * col_sq, 2)

    def _split(self, z: np.ndarray):
        return z[:self.d_orig], z[self.d_orig:]

    def _h_value(self, u) -> float:
        if self._custom_h is not None:
            return float(self._custom_h[0](u))
        r = u - self.target
        return 0.5 * float(r @ r)

    def _h_grad(self, u) -> np.ndarray:
        if self._custom_h is not None:
            return self._custom_h[1](u)
        return u - self.target

    def _h_curv(self, u) -> np.ndarray:
        if self._custom_h is not None:
            return self._custom_h[2](u)
        return np.ones(u.shape[0])

    def inner_value(self, v) -> float:
        """Original-space smooth part ``h(Av) + q'v`` plus the l1 term."""
        v = _check_vector(v, self.d_orig, "v")
        return float(self._h_value(self.design @ v) + self.q @ v
                     + self.l1 * np.sum(np.abs(v)))

    def value(self, z) -> float:
        z = self._check_point(z)
        xp, xm = self._split(z)
        v = xp - xm
        return float(self._h_value(self.design @ v) + self.q @ v
                     + self.l1 * (np.sum(xp) + np.sum(xm)))

    def gradient(self, z) -> np.ndarray:
        z = self._check_point(z)
        xp, xm = self._split(z)
        r = self._h_grad(self.design @ (xp - xm))
        g = self.design.T @ r + self.q
        return np.concatenate([g + self.l1, -g + self.l1])

    def coord_gradient(self, z, i: int) -> float:
        z = self._check_point(z)
        xp, xm = self._split(z)
        r = self._h_grad(self.design @ (xp - xm))
        j, sign = (i, 1.0) if i < self.d_orig else (i - self.d_orig, -1.0)
        return float(sign * (self.design[:, j] @ r + self.q[j]) + self.l1)

    def coord_curvature_floor(self) -> np.ndarray:
        return np.tile(self.sigma_h * self._col_sq, 2)

    def start_state(self, x0) -> "LassoState":
        x0 = self._check_point(x0).copy()
        if not self.box.contains(x0):
            raise ValueError("lifted start point must be nonnegative")
        return LassoState(self, x0)


class LassoState(ProblemState):
    __slots__ = ("p", "x", "u")

    def __init__(self, p: LassoBoxProblem, x: np.ndarray):
        self.p = p
        self._rebuild(x)

    def _rebuild(self, x: np.ndarray) -> None:
        self.x = x
        xp, xm = self.p._split(x)
        self.u = self.p.design @ (xp - xm)

    def _col(self, i: int):
        if i < self.p.d_orig:
            return i, 1.0
        return i - self.p.d_orig, -1.0

    def objective(self) -> float:
        xp, xm = self.p._split(self.x)
        return float(self.p._h_value(self.u) + self.p.q @ (xp - xm)
                     + self.p.l1 * np.sum(self.x))

    def coord_grad(self, i: int) -> float:
        j, sign = self._col(i)
        r = self.p._h_grad(self.u)
        return float(sign * (self.p.design[:, j] @ r + self.p.q[j]) + self.p.l1)

    def gradient(self) -> np.ndarray:
        r = self.p._h_grad(self.u)
        g = self.p.design.T @ r + self.p.q
        return np.concatenate([g + self.p.l1, -g + self.p.l1])

    def set_coord(self, i: int, new: float) -> None:
        delta = new - self.x[i]
        if delta == 0.0:
            return
        j, sign = self._col(i)
        self.u += sign * delta * self.p.design[:, j]
        self.x[i] = new

    def exact_coord_min(self, i: int) -> float:
        p = self.p
        j, sign = self._col(i)
        xi = self.x[i]
        if p._h_quadratic:
            # Least-squares slices are exact quadratics with curvature
            # ||A[:, j]||^2.
            t = xi - self.coord_grad(i) / p._col_sq[j]
            return max(t, 0.0)
        col = sign * p.design[:, j]

        def deriv(t):
            r = p._h_grad(self.u + (t - xi) * col)
            return float(col @ r + sign * p.q[j] + p.l1)

        def curv(t):
            c = p._h_curv(self.u + (t - xi) * col)
            return float(c @ (col * col))

        return minimize_slice(deriv, curv, xi, 0.0, np.inf)


# ---------------------------------------------------------------------------
# sampled verification of coordinate strong convexity


def check_coord_strong_convexity(p: Problem, gamma: float, w,
                                 samples: int = 1000, seed: int = 0,
                                 rtol: float = 1e-9):
    """Sampled test of the coordinate strong-convexity inequality.

    Draws ``samples`` triples (x, i, xi) with x feasible and xi in X_i and
    checks that the slice gap  f(x with xi at i) - f(x) + grad_i f(x)(x_i - xi)
    dominates ``gamma * w_i (xi - x_i)^2``.  Sampling (seeded) stands in for
    the universal statement, which is not desk-checkable.

    Returns ``(ok, witness)`` where witness describes the first violation.
    """
    w = check_weights(w, p.n)
    rng = np.random.Generator(np.random.Philox(key=seed))
    lo = np.where(np.isinf(p.box.lower), -10.0, p.box.lower)
    hi = np.where(np.isinf(p.box.upper), 10.0, p.box.upper)
    for _ in range(samples):
        x = rng.uniform(lo, hi)
        i = int(rng.integers(p.n))
        xi = rng.uniform(lo[i], hi[i])
        fx = p.value(x)
        gi = p.coord_gradient(x, i)
        x_mod = x.copy()
        x_mod[i] = xi
        lhs = p.value(x_mod) - fx + gi * (x[i] - xi)
        rhs = gamma * w[i] * (xi - x[i]) ** 2
        slack = rtol * max(1.0, abs(lhs), rhs)
        if lhs < rhs - slack:
            return False, {"x": x, "i": i, "xi": xi, "lhs": lhs, "rhs": rhs}
    return True, None
