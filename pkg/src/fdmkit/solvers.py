"""Solvers emitting verifiable iterate traces.

Methods: stochastic coordinate descent with exact coordinate minimization
(Option I) or a projected coordinate-gradient step (Option II), cyclic
coordinate descent, and full projected gradient descent.

Coordinate choices are drawn from a counter-based Philox generator keyed by
the run seed, so runs are reproducible bit-for-bit and independent of how
often the trace snapshots full iterates.
"""

from __future__ import annotations

import bisect
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .geometry import Box, check_weights
from .problems import Problem, ProblemState, global_lipschitz_bound

OPTION_I = "I"
OPTION_II = "II"


class DivergenceError(RuntimeError):
    """Projected gradient increased the objective on consecutive iterations."""

    def __init__(self, k: int, f_values):
        self.k = k
        self.f_values = list(f_values)
        super().__init__(
            f"objective increased at iterations {k - 1} and {k}: {self.f_values}"
        )


@dataclass
class SolverConfig:
    """Run parameters shared by all solvers.

    ``w`` is the diagonal step geometry (``None`` selects the coordinate
    Lipschitz constants, the natural scaling for Option II).  ``omega`` is a
    constant step size; a per-iteration schedule may be supplied instead, in
    which case ``omega_bar`` must give its positive floor.  Coordinate
    sampling is uniform over the ``n`` coordinates.
    """

    w: Optional[np.ndarray] = None
    omega: Optional[float] = None
    omega_schedule: Optional[Callable[[int], float]] = None
    omega_bar: Optional[float] = None
    max_iters: int = 1000
    seed: int = 0
    record_every: Optional[int] = None
    x0: Optional[np.ndarray] = None
    gap_tol: Optional[float] = None
    gap_every: Optional[int] = None
    stall_tol: Optional[float] = None
    stall_window: Optional[int] = None

    def resolve_w(self, p: Problem) -> np.ndarray:
        w = p.lipschitz if self.w is None else self.w
        return check_weights(w, p.n)

    def resolve_omega(self, default: float) -> tuple[Callable[[int], float], float]:
        """Return (per-iteration step size, floor omega_bar)."""
        if self.omega_schedule is not None:
            if self.omega_bar is None or self.omega_bar <= 0:
                raise ValueError("omega_schedule requires a positive omega_bar floor")
            return self.omega_schedule, float(self.omega_bar)
        omega = default if self.omega is None else float(self.omega)
        if omega <= 0:
            raise ValueError("step size omega must be positive")
        bar = omega if self.omega_bar is None else float(self.omega_bar)
        if bar <= 0 or bar > omega:
            raise ValueError("omega_bar must satisfy 0 < omega_bar <= omega")
        return (lambda k: omega), bar

    def resolve_x0(self, p: Problem) -> np.ndarray:
        if self.x0 is None:
            return p.box.clip(np.zeros(p.n))
        x0 = np.ascontiguousarray(self.x0, dtype=float).copy()
        if x0.shape != (p.n,):
            raise ValueError("x0 dimension mismatch")
        if not p.box.contains(x0):
            raise ValueError("x0 is infeasible")
        return x0

    def validate(self) -> None:
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.record_every is not None and self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.gap_tol is not None and self.gap_tol <= 0:
            raise ValueError("gap_tol must be positive")


class Trace:
    """Per-iteration record of a solver run.

    Scalars (objective, squared W-displacement, chosen coordinate, step size,
    cumulative wall time) are stored for every iteration.  For coordinate
    methods the iterates are delta-encoded: full snapshots are kept every
    ``record_every`` iterations and single-coordinate deltas in between, so
    ``iterate(k)`` reconstructs any x_k exactly (assignment, no arithmetic).
    Full-step methods snapshot every iterate.

    Wall-clock fields are excluded from the reproducibility contract; all
    other fields are bitwise-identical across runs with equal seed, config
    and data.
    """

    def __init__(self, x0: np.ndarray, w: np.ndarray, method: str,
                 option: Optional[str], seed: Optional[int],
                 record_every: int, capacity: int):
        self.n = x0.shape[0]
        self.x0 = x0.copy()
        self.w = np.array(w, dtype=float)
        self.method = method
        self.option = option
        self.seed = seed
        self.record_every = record_every
        self.stop_reason = "budget"
        self.wall_time_s = 0.0
        self.gaps: dict[int, float] = {}
        self._coords = np.full(capacity, -1, dtype=np.int64)
        self._new_values = np.full(capacity, np.nan)
        self._f = np.full(capacity + 1, np.nan)
        self._disp = np.full(capacity, np.nan)
        self._omegas = np.full(capacity, np.nan)
        self._times = np.zeros(capacity + 1)
        self._snapshots: dict[int, np.ndarray] = {0: x0.copy()}
        self._snap_keys = [0]
        self._k = 0
        self._finalized = False

    # -- recording (used by the runners) ------------------------------------

    def _record_f0(self, f0: float) -> None:
        self._f[0] = f0

    def _append(self, i: int, new_value: float, f_next: float, disp: float,
                omega: float, x_next: Optional[np.ndarray], t: float) -> None:
        k = self._k
        self._coords[k] = i
        self._new_values[k] = new_value
        self._f[k + 1] = f_next
        self._disp[k] = disp
        self._omegas[k] = omega
        self._times[k + 1] = t
        self._k = k + 1
        if x_next is not None:
            self._snapshots[self._k] = x_next.copy()
            self._snap_keys.append(self._k)

    def _append_coord(self, i: int, new_value: float, f_next: float,
                      disp: float, omega: float, t: float,
                      x: Optional[np.ndarray]) -> None:
        self._append(i, new_value, f_next, disp, omega, None, t)
        if x is not None and self._k % self.record_every == 0:
            self._snapshots[self._k] = x.copy()
            self._snap_keys.append(self._k)

    def _finalize(self, x_final: np.ndarray, stop_reason: str,
                  wall_time: float) -> None:
        k = self._k
        self._coords = self._coords[:k]
        self._new_values = self._new_values[:k]
        self._f = self._f[:k + 1]
        self._disp = self._disp[:k]
        self._omegas = self._omegas[:k]
        self._times = self._times[:k + 1]
        if k not in self._snapshots:
            self._snapshots[k] = x_final.copy()
            self._snap_keys.append(k)
        self.stop_reason = stop_reason
        self.wall_time_s = wall_time
        self._finalized = True

    # -- read access ---------------------------------------------------------

    def __len__(self) -> int:
        """Number of iterations (trace holds len(trace) + 1 iterates)."""
        return self._k

    @property
    def f(self) -> np.ndarray:
        """Objective values f(x_k), k = 0..K."""
        return self._f

    @property
    def disp_w_sq(self) -> np.ndarray:
        """Squared W-displacements ||x_k - x_{k+1}||_W^2, k = 0..K-1."""
        return self._disp

    @property
    def coords(self) -> np.ndarray:
        """Chosen coordinate per iteration (-1 for full-vector steps)."""
        return self._coords

    @property
    def new_values(self) -> np.ndarray:
        return self._new_values

    @property
    def omegas(self) -> np.ndarray:
        return self._omegas

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self._k + 1)

    def iterate(self, k: int) -> np.ndarray:
        """Exact reconstruction of x_k."""
        if not 0 <= k <= self._k:
            raise IndexError(f"iteration {k} outside trace of length {self._k}")
        if k in self._snapshots:
            return self._snapshots[k].copy()
        pos = bisect.bisect_right(self._snap_keys, k) - 1
        base = self._snap_keys[pos]
        x = self._snapshots[base].copy()
        for j in range(base, k):
            i = self._coords[j]
            if i < 0:
                raise ValueError(f"iterate {k} is not reconstructible from deltas")
            x[i] = self._new_values[j]
        return x

    @property
    def final_x(self) -> np.ndarray:
        return self.iterate(self._k)

    def iter_steps(self):
        """Yield (k, x_k, i_k, old, new) for every coordinate step.

        The yielded array is a reused buffer that advances with the walk; copy
        it if it must outlive the iteration step.
        """
        x = self.x0.copy()
        for k in range(self._k):
            i = int(self._coords[k])
            if i < 0:
                raise ValueError("trace contains full-vector steps; walk snapshots instead")
            new = float(self._new_values[k])
            yield k, x, i, float(x[i]), new
            x[i] = new

    @classmethod
    def from_objectives(cls, f_values, seed: Optional[int] = None) -> "Trace":
        """Build a bare trace carrying only an objective sequence.

        Useful for rate analysis of externally produced runs; iterates are
        not available on such traces.
        """
        f_values = np.asarray(f_values, dtype=float)
        if f_values.ndim != 1 or f_values.shape[0] < 1:
            raise ValueError("need a 1-d, nonempty objective sequence")
        tr = cls(np.zeros(1), np.ones(1), "synthetic", None, seed,
                 record_every=1, capacity=0)
        tr._f = f_values.copy()
        tr._k = f_values.shape[0] - 1
        tr._coords = np.full(tr._k, -1, dtype=np.int64)
        tr._new_values = np.full(tr._k, np.nan)
        tr._disp = np.full(tr._k, np.nan)
        tr._omegas = np.full(tr._k, np.nan)
        tr._times = np.zeros(tr._k + 1)
        tr._snapshots = {}
        tr._snap_keys = []
        tr._finalized = True
        return tr


# ---------------------------------------------------------------------------
# single steps (pure; used directly by the equivalence tests)


def scdm_step_option1(p: Problem, x, i: int) -> np.ndarray:
    """Replace coordinate ``i`` of ``x`` by the exact slice minimizer."""
    out = np.array(x, dtype=float)
    out[i] = p.exact_coord_min(out, i)
    return out


def scdm_step_option2(p: Problem, x, i: int, omega: float, w) -> np.ndarray:
    """Projected coordinate-gradient step on coordinate ``i``."""
    w = check_weights(w, p.n)
    if omega <= 0:
        raise ValueError("omega must be positive")
    out = np.array(x, dtype=float)
    g = p.coord_gradient(out, i)
    out[i] = p.box.clip_coord(out[i] - (omega / w[i]) * g, i)
    return out


# ---------------------------------------------------------------------------
# runners


def _maybe_gap(p: Problem, state: ProblemState) -> Optional[float]:
    if hasattr(state, "duality_gap"):
        return state.duality_gap()
    if hasattr(p, "duality_gap"):
        return p.duality_gap(state.x)
    return None


def run_scdm(p: Problem, cfg: SolverConfig, option: str = OPTION_I) -> Trace:
    """Stochastic coordinate descent, uniform coordinate sampling.

    Option I minimizes the chosen coordinate slice exactly; Option II takes
    the projected coordinate-gradient step with step size omega_k / w_i.
    Start point defaults to the projection of the origin onto the box.
    """
    if option not in (OPTION_I, OPTION_II):
        raise ValueError(f"option must be 'I' or 'II', got {option!r}")
    cfg.validate()
    w = cfg.resolve_w(p)
    omega_of, omega_bar = cfg.resolve_omega(default=1.0)
    if option == OPTION_II:
        safe = float(np.min(w / p.lipschitz))
        if omega_of(0) > safe * (1.0 + 1e-12):
            warnings.warn(
                "Option II step size exceeds min_i w_i/L_i; descent and the "
                "zero-correction rate guarantee no longer apply",
                stacklevel=2,
            )
    x0 = cfg.resolve_x0(p)
    record_every = cfg.record_every or p.n
    gap_every = cfg.gap_every or record_every
    stall_window = cfg.stall_window or p.n
    rng = np.random.Generator(np.random.Philox(key=cfg.seed))
    draws = rng.integers(p.n, size=cfg.max_iters) if cfg.max_iters else []
    state = p.start_state(x0)
    trace = Trace(x0, w, "scdm", option, cfg.seed, record_every, cfg.max_iters)
    trace._record_f0(state.objective())
    t_start = time.perf_counter()
    stop = "budget"
    for k in range(cfg.max_iters):
        i = int(draws[k])
        omega_k = omega_of(k)
        if omega_k < omega_bar:
            raise ValueError(f"omega schedule dropped below its floor at k={k}")
        old = float(state.x[i])
        if option == OPTION_I:
            new = state.exact_coord_min(i)
        else:
            g = state.coord_grad(i)
            new = p.box.clip_coord(old - (omega_k / w[i]) * g, i)
        state.set_coord(i, new)
        delta = new - old
        disp = w[i] * delta * delta
        trace._append_coord(i, new, state.objective(), disp, omega_k,
                            time.perf_counter() - t_start, state.x)
        kk = k + 1
        if cfg.gap_tol is not None and kk % gap_every == 0:
            gap = _maybe_gap(p, state)
            if gap is not None:
                trace.gaps[kk] = gap
                if gap <= cfg.gap_tol:
                    stop = "gap"
                    break
        if cfg.stall_tol is not None and kk >= stall_window:
            if trace._f[kk - stall_window] - trace._f[kk] <= cfg.stall_tol:
                stop = "stall"
                break
    trace._finalize(state.x, stop, time.perf_counter() - t_start)
    return trace


def run_cyclic_cd(p: Problem, cfg: SolverConfig) -> Trace:
    """Cyclic coordinate descent with exact coordinate minimization.

    One trace record covers a full pass over the coordinates in order
    1..n, so a cyclic record costs n coordinate updates.
    """
    cfg.validate()
    w = cfg.resolve_w(p)
    x0 = cfg.resolve_x0(p)
    stall_window = cfg.stall_window or 1
    state = p.start_state(x0)
    trace = Trace(x0, w, "cyclic", None, cfg.seed, 1, cfg.max_iters)
    trace._record_f0(state.objective())
    t_start = time.perf_counter()
    stop = "budget"
    gap_every = cfg.gap_every or 1
    for k in range(cfg.max_iters):
        disp = 0.0
        for i in range(p.n):
            old = float(state.x[i])
            new = state.exact_coord_min(i)
            state.set_coord(i, new)
            disp += w[i] * (new - old) ** 2
        trace._append(-1, np.nan, state.objective(), disp, 1.0, state.x,
                      time.perf_counter() - t_start)
        kk = k + 1
        if cfg.gap_tol is not None and kk % gap_every == 0:
            gap = _maybe_gap(p, state)
            if gap is not None:
                trace.gaps[kk] = gap
                if gap <= cfg.gap_tol:
                    stop = "gap"
                    break
        if cfg.stall_tol is not None and kk >= stall_window:
            if trace._f[kk - stall_window] - trace._f[kk] <= cfg.stall_tol:
                stop = "stall"
                break
    trace._finalize(state.x, stop, time.perf_counter() - t_start)
    return trace


def run_projected_gradient(p: Problem, cfg: SolverConfig) -> Trace:
    """Full projected-gradient iteration x+ = proj(x - omega W^{-1} grad f(x)).

    The default step size is the reciprocal of the ``sum_i L_i / w_i`` bound,
    which guarantees monotone descent.  Two consecutive objective increases
    abort the run with a diagnostic.
    """
    cfg.validate()
    w = cfg.resolve_w(p)
    omega_of, omega_bar = cfg.resolve_omega(
        default=1.0 / global_lipschitz_bound(p.lipschitz, w))
    x0 = cfg.resolve_x0(p)
    stall_window = cfg.stall_window or 1
    state = p.start_state(x0)
    trace = Trace(x0, w, "pgd", None, cfg.seed, 1, cfg.max_iters)
    trace._record_f0(state.objective())
    t_start = time.perf_counter()
    stop = "budget"
    gap_every = cfg.gap_every or 1
    increases = 0
    for k in range(cfg.max_iters):
        omega_k = omega_of(k)
        if omega_k < omega_bar:
            raise ValueError(f"omega schedule dropped below its floor at k={k}")
        x = state.x
        g = state.gradient()
        x_next = p.box.clip(x - omega_k * (g / w))
        disp = float(np.dot(w, (x - x_next) ** 2))
        state.set_x(x_next)
        f_next = state.objective()
        f_prev = trace._f[k]
        # increases above a few ulps of f signal a bad step size
        if f_next > f_prev + 32.0 * np.finfo(float).eps * max(1.0, abs(f_prev)):
            increases += 1
            if increases >= 2:
                raise DivergenceError(k + 1, trace._f[max(0, k - 1):k + 1].tolist()
                                      + [f_next])
        else:
            increases = 0
        trace._append(-1, np.nan, f_next, disp, omega_k, state.x,
                      time.perf_counter() - t_start)
        kk = k + 1
        if cfg.gap_tol is not None and kk % gap_every == 0:
            gap = _maybe_gap(p, state)
            if gap is not None:
                trace.gaps[kk] = gap
                if gap <= cfg.gap_tol:
                    stop = "gap"
                    break
        if cfg.stall_tol is not None and kk >= stall_window:
            if trace._f[kk - stall_window] - trace._f[kk] <= cfg.stall_tol:
                stop = "stall"
                break
    trace._finalize(state.x, stop, time.perf_counter() - t_start)
    return trace
