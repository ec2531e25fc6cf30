"""Minimization of the average-age objective over transmit probabilities.

The objective is convex over the box [0, 1]^n, so the projected-gradient
solver finds the global optimum; the fixed-point solver iterates the interior
stationarity map q_l <- A_l / (p_l (A_l + B_l)) instead and must agree with
it. Closed forms cover d-regular graphs and (hub, leaf) star networks, and a
brute-force grid scan serves as a model-free verification oracle.

Boundary handling: coordinates are clamped to [epsilon_lo, 1]; the interior
stationarity formula is applied only to non-clamped coordinates, and clamped
ones are accepted when the objective derivative points out of the box
(&le; 0 at the upper bound, &ge; 0 at the lower).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .analysis import Evaluator, ObjectiveKind
from .graph import Topology

_REL_OBJ_TOL = 1e-12  # relative objective stall threshold (second stop test)
_ARMIJO_C1 = 1e-4
_ARMIJO_SHRINK = 0.5


@dataclass(frozen=True)
class SolveOptions:
    max_iters: int = 10_000
    tol_grad: float = 1e-6
    tol_fp: float = 1e-10
    damping: float = 0.5
    epsilon_lo: float = 1e-9
    initial_q: np.ndarray | None = None

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol_grad <= 0 or self.tol_fp <= 0:
            raise ValueError("tolerances must be positive")
        if not (0.0 < self.damping <= 1.0):
            raise ValueError("damping must lie in (0, 1]")
        if not (0.0 < self.epsilon_lo < 0.5):
            raise ValueError("epsilon_lo must lie in (0, 0.5)")


@dataclass(frozen=True)
class SolveResult:
    q_star: np.ndarray
    objective_value: float
    grad_residual: float
    fp_residual: float
    iterations: int
    converged: bool


class StarSolution(NamedTuple):
    q1: float  # hub transmit probability
    q2: float  # leaf transmit probability


def _as_p_vector(p, n: int) -> np.ndarray:
    vec = np.asarray(p, dtype=np.float64)
    if vec.ndim == 0:
        vec = np.full(n, float(vec))
    if vec.shape != (n,):
        raise ValueError(f"p must be a scalar or a length-{n} vector")
    if np.any((vec < 0.0) | (vec > 1.0)):
        raise ValueError("p entries must lie in [0, 1]")
    return vec


def _check_generators_alive(t: Topology, p: np.ndarray) -> None:
    degs = np.array(t.degrees())
    dead = (p == 0.0) & (degs > 0)
    if np.any(dead):
        raise ValueError(
            f"node(s) {np.nonzero(dead)[0].tolist()} never generate updates "
            "(p=0) but have neighbors; the objective is infinite for every q")


def _default_start(t: Topology, p: np.ndarray, cap: float) -> np.ndarray:
    # degree-based closed form applied nodewise; near-optimal on regular-ish
    # graphs and always interior
    degs = np.array(t.degrees(), dtype=np.float64)
    q = np.zeros(t.n)
    act = degs > 0
    q[act] = np.minimum(1.0 / (p[act] * (degs[act] + 1.0)), cap)
    return q


def _trivial_result(t: Topology) -> SolveResult:
    return SolveResult(q_star=np.zeros(t.n), objective_value=0.0,
                       grad_residual=0.0, fp_residual=0.0,
                       iterations=0, converged=True)


def _projected_grad(q, grad, active, lo, hi) -> np.ndarray:
    """First-order optimality residual for the box [lo, hi] on active coords."""
    pg = np.where(q <= lo, np.minimum(grad, 0.0),
                  np.where(q >= hi, np.maximum(grad, 0.0), grad))
    return np.where(active, pg, 0.0)


def _fp_residual(ev: Evaluator, q: np.ndarray, lo: float) -> float:
    """Max gap |q_l - A_l/(p_l(A_l+B_l))| over non-clamped active coords."""
    act = ev.active
    if not np.any(act):
        return 0.0
    a, b = ev.aggregates_all(q)
    target = np.zeros(ev.t.n)
    target[act] = a[act] / (ev.p[act] * (a[act] + b[act]))
    interior = act & (target > lo) & (target < 1.0) & (q > lo) & (q < 1.0)
    if not np.any(interior):
        return 0.0
    return float(np.max(np.abs(q[interior] - target[interior])))


def solve_projected_gradient(t: Topology, p, kind: ObjectiveKind = ObjectiveKind.TOTAL,
                             opts: SolveOptions = SolveOptions()) -> SolveResult:
    """Projected gradient descent with Armijo backtracking over [eps, 1]^n.

    Convexity makes any point with a small projected-gradient norm the global
    minimum up to tolerance. Steps that land on an infinite objective fail the
    sufficient-decrease test and are backtracked. Isolated nodes are pinned to
    q = 0 (they contribute nothing).
    """
    p = _as_p_vector(p, t.n)
    if not t.edges:
        return _trivial_result(t)
    _check_generators_alive(t, p)
    ev = Evaluator(t, p, kind)
    act = ev.active
    lo, hi = opts.epsilon_lo, 1.0
    if opts.initial_q is not None:
        q = np.asarray(opts.initial_q, dtype=np.float64).copy()
        if q.shape != (t.n,):
            raise ValueError(f"initial_q must have length {t.n}")
        q[act] = np.clip(q[act], lo, hi)
    else:
        q = _default_start(t, p, cap=1.0 - 1e-6)
    q[~act] = 0.0
    f = ev.value(q)
    if math.isinf(f):
        raise ValueError("initial point has infinite objective")

    grad = ev.gradient(q)
    pg_norm = float(np.linalg.norm(_projected_grad(q, grad, act, lo, hi)))
    rel_change = math.inf
    iters = 0
    converged = pg_norm <= opts.tol_grad
    q_prev = grad_prev = None
    while iters < opts.max_iters:
        if pg_norm <= opts.tol_grad and rel_change <= _REL_OBJ_TOL:
            converged = True
            break
        iters += 1
        step = _spectral_step(q, grad, q_prev, grad_prev)
        f_new, q_new = f, q
        while True:
            trial = q.copy()
            trial[act] = np.clip(q[act] - step * grad[act], lo, hi)
            f_trial = ev.value(trial)
            decrease = float(grad @ (trial - q))
            if f_trial <= f + _ARMIJO_C1 * decrease and f_trial < math.inf:
                f_new, q_new = f_trial, trial
                break
            step *= _ARMIJO_SHRINK
            if step < 1e-20:
                break
        if step < 1e-20:  # no descent direction left at float precision
            converged = pg_norm <= opts.tol_grad
            break
        if np.array_equal(q_new, q):  # progress below float resolution
            converged = pg_norm <= opts.tol_grad
            break
        rel_change = abs(f - f_new) / max(1.0, abs(f_new))
        q_prev, grad_prev = q, grad
        q, f = q_new, f_new
        grad = ev.gradient(q)
        pg_norm = float(np.linalg.norm(_projected_grad(q, grad, act, lo, hi)))
        converged = pg_norm <= opts.tol_grad
    return SolveResult(q_star=q, objective_value=f, grad_residual=pg_norm,
                       fp_residual=_fp_residual(ev, q, lo), iterations=iters,
                       converged=bool(converged))


def _spectral_step(q, grad, q_prev, grad_prev) -> float:
    """Barzilai-Borwein starting step for the Armijo line search.

    Plain descent with a unit starting step crawls on these objectives (their
    curvature is in the 1e3..1e5 range), so the line search opens at the
    spectral estimate <s,s>/<s,y> instead and backtracking keeps it safe.
    """
    if q_prev is None:
        return 1.0
    s = q - q_prev
    y = grad - grad_prev
    sy = float(s @ y)
    if sy <= 0.0:
        return 1.0
    return float(np.clip((s @ s) / sy, 1e-12, 1e3))


def solve_fixed_point(t: Topology, p, kind: ObjectiveKind = ObjectiveKind.TOTAL,
                      opts: SolveOptions = SolveOptions()) -> SolveResult:
    """Damped iteration of the interior stationarity map
    q_l <- A_l / (p_l (A_l + B_l)), clamped to [epsilon_lo, 1].

    Converges when every non-clamped coordinate sits within ``tol_fp`` of its
    stationarity target and every clamped coordinate passes the derivative
    sign check. Returns the last iterate with ``converged=False`` if the
    iteration oscillates past ``max_iters``.
    """
    p = _as_p_vector(p, t.n)
    if not t.edges:
        return _trivial_result(t)
    _check_generators_alive(t, p)
    ev = Evaluator(t, p, kind)
    act = ev.active
    lo = opts.epsilon_lo
    if opts.initial_q is not None:
        q = np.asarray(opts.initial_q, dtype=np.float64).copy()
        if q.shape != (t.n,):
            raise ValueError(f"initial_q must have length {t.n}")
        q[act] = np.clip(q[act], lo, 1.0)
    else:
        q = _default_start(t, p, cap=1.0)
    q[~act] = 0.0

    residual = math.inf
    converged = False
    iters = 0
    for iters in range(1, opts.max_iters + 1):
        a, b = ev.aggregates_all(q)
        target = np.zeros(t.n)
        target[act] = a[act] / (p[act] * (a[act] + b[act]))
        clamped = np.clip(target, lo, 1.0)
        interior = act & (target == clamped)
        residual = float(np.max(np.abs(q[interior] - target[interior]))) \
            if np.any(interior) else 0.0
        if residual <= opts.tol_fp and _clamps_pass_sign_check(ev, q, act, interior, lo):
            converged = True
            break
        q_next = q.copy()
        q_next[act] = (1.0 - opts.damping) * q[act] + opts.damping * clamped[act]
        q = q_next
    f = ev.value(q)
    grad = ev.gradient(q)
    pg_norm = float(np.linalg.norm(_projected_grad(q, grad, act, lo, 1.0)))
    return SolveResult(q_star=q, objective_value=f, grad_residual=pg_norm,
                       fp_residual=residual, iterations=iters,
                       converged=converged)


def _clamps_pass_sign_check(ev, q, act, interior, lo) -> bool:
    clamped = act & ~interior
    if not np.any(clamped):
        return True
    grad = ev.gradient(q)
    at_hi = clamped & (q >= 1.0 - 1e-12)
    at_lo = clamped & (q <= lo * (1.0 + 1e-9))
    ok_hi = np.all(grad[at_hi] <= 1e-9) if np.any(at_hi) else True
    ok_lo = np.all(grad[at_lo] >= -1e-9) if np.any(at_lo) else True
    # a clamped coordinate still away from its bound has not settled yet
    settled = np.all(at_hi | at_lo | ~clamped)
    return bool(ok_hi and ok_lo and settled)


def d_regular_closed_form(d: int, p: float) -> float:
    """Optimal common transmit probability on a d-regular graph:
    min(1/(p(d+1)), 1).

    The clamp at 1 only activates when p(d+1) <= 1, which keeps p*q <= 1/(d+1)
    strictly below 1, so a clamped solution never silences a receiver.
    """
    if d < 1:
        raise ValueError(f"degree must be >= 1, got {d}")
    if not (0.0 < p <= 1.0):
        raise ValueError(f"p must lie in (0, 1], got {p}")
    return min(1.0 / (p * (d + 1)), 1.0)


def _leaf_equation(n: int, q2: float) -> float:
    """Residual of the leaf-node optimality condition for a star of size n:
    1 - (n-1) q2 - q2^{3/2} (1-q2)^{(n-3)/2}."""
    return 1.0 - (n - 1) * q2 - q2 ** 1.5 * (1.0 - q2) ** ((n - 3) / 2.0)


def _hub_from_leaf(n: int, q2: float) -> float:
    """Hub probability implied by the hub-leaf optimality relation
    q1^2 = q2 (1-q1)^2 (1-q2)^{n-3}, rearranged to q1 = r/(1+r) with
    r = sqrt(q2) (1-q2)^{(n-3)/2}."""
    r = math.sqrt(q2) * (1.0 - q2) ** ((n - 3) / 2.0)
    return r / (1.0 + r)


def star_solve(n: int) -> StarSolution:
    """Optimal (hub, leaf) transmit probabilities for a star of n nodes with
    every node generating each slot (p = 1).

    n=2 is the single-link network with optimum (1/2, 1/2); n=3 degenerates to
    a 3-node path with both probabilities (3 - sqrt(5))/2. For n > 3 the leaf
    probability is the unique root of the leaf optimality condition in
    (0, 1/(n-1)) - the left side 1-(n-1)q2 is positive only there while the
    right side is nonnegative - found by bisection, and the hub probability
    follows from the hub-leaf relation.
    """
    if n < 2:
        raise ValueError(f"star needs n >= 2, got {n}")
    if n == 2:
        return StarSolution(0.5, 0.5)
    if n == 3:
        v = (3.0 - math.sqrt(5.0)) / 2.0
        return StarSolution(v, v)
    lo, hi = 0.0, 1.0 / (n - 1)
    # f(lo+) = +1, f(hi) < 0; bisect to float resolution
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _leaf_equation(n, mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16:
            break
    q2 = 0.5 * (lo + hi)
    return StarSolution(_hub_from_leaf(n, q2), q2)


def star_polynomial_check(n: int, q2: float) -> float:
    """Residual of the squared-and-expanded leaf condition,
    sum_k C(n-3,k) (-1)^k q2^{k+3} + 2(n-1) q2 - (n-1)^2 q2^2 - 1.

    Zero (to rounding) at the star optimum; used as an independent
    consistency check on the bisection root.
    """
    if n <= 3:
        raise ValueError(f"polynomial form needs n > 3, got {n}")
    if not (0.0 <= q2 < 1.0):
        raise ValueError(f"q2 must lie in [0, 1), got {q2}")
    total = 0.0
    for k in range(n - 2):
        total += math.comb(n - 3, k) * (-1.0) ** k * q2 ** (k + 3)
    return total + 2.0 * (n - 1) * q2 - float(n - 1) ** 2 * q2 ** 2 - 1.0


def brute_force_grid(t: Topology, p, kind: ObjectiveKind = ObjectiveKind.TOTAL,
                     resolution: int = 100, cell_budget: int = 2 ** 32,
                     backend: str | None = None) -> tuple[np.ndarray, float]:
    """Exhaustive objective scan over a per-coordinate grid; verification
    oracle for the solvers.

    The grid per node is {1/res, ..., (res-1)/res}, plus 1.0 when that node's
    p < 1 (q=0 always diverges; q=1 diverges only for p=1 senders/receivers).
    Isolated nodes are pinned to q=0 and excluded from the scan. Ties go to
    the lexicographically first grid point, regardless of backend or internal
    parallelism. Refuses scans above ``cell_budget`` cells.
    """
    if resolution < 3:
        raise ValueError(f"resolution must be >= 3, got {resolution}")
    p = _as_p_vector(p, t.n)
    if not t.edges:
        return np.zeros(t.n), 0.0
    _check_generators_alive(t, p)

    degs = np.array(t.degrees())
    axis_nodes = [v for v in range(t.n) if degs[v] > 0]
    values = []
    for v in axis_nodes:
        vals = [k / resolution for k in range(1, resolution)]
        if p[v] < 1.0:
            vals.append(1.0)
        values.append(np.array(vals))
    cells = math.prod(len(v) for v in values)
    if cells > cell_budget:
        raise ValueError(
            f"grid of {cells} cells exceeds the budget of {cell_budget}; "
            "lower the resolution or raise cell_budget")

    n_axes = len(axis_nodes)
    axis_of = {v: a for a, v in enumerate(axis_nodes)}
    max_len = max(len(v) for v in values)
    axis_len = np.array([len(v) for v in values], dtype=np.int32)
    u_tab = np.zeros((n_axes, max_len))
    w_tab = np.zeros((n_axes, max_len))
    for a, v in enumerate(axis_nodes):
        x = p[v] * values[a]
        u_tab[a, : len(x)] = 1.0 - x
        w_tab[a, : len(x)] = (1.0 - x) / x

    if kind is ObjectiveKind.NEIGHBOR_NORMALIZED:
        wrecv = np.array([1.0 / (t.n * degs[v]) for v in axis_nodes])
    else:
        wrecv = np.ones(n_axes)
    closed_ptr = [0]
    closed_idx: list[int] = []
    nbr_ptr = [0]
    nbr_idx: list[int] = []
    for v in axis_nodes:
        nbrs = t.neighbors(v)
        closed = sorted(nbrs + [v])
        closed_idx.extend(axis_of[k] for k in closed)
        closed_ptr.append(len(closed_idx))
        nbr_idx.extend(axis_of[k] for k in nbrs)
        nbr_ptr.append(len(nbr_idx))

    best_flat, best_f = _kernels.grid_scan(
        u_tab, w_tab, axis_len,
        np.array(closed_ptr, dtype=np.int32), np.array(closed_idx, dtype=np.int32),
        np.array(nbr_ptr, dtype=np.int32), np.array(nbr_idx, dtype=np.int32),
        wrecv, backend=backend,
    )

    q_best = np.zeros(t.n)
    rem = int(best_flat)
    for a in range(n_axes - 1, -1, -1):
        rem, k = divmod(rem, len(values[a]))
        q_best[axis_nodes[a]] = values[a][k]
    return q_best, float(best_f)
