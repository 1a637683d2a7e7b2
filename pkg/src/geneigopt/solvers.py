"""Optimization engines for the eigenvalue topology problems.

Three routes to a minimizer:

* projected subgradient on the epsilon-regularized objective (the default
  step rule is an adaptive Polyak level scheme, which exploits sharpness of
  the max-eigenvalue objectives and reaches far tighter accuracy than a
  1/sqrt(k) schedule);
* an accelerated projected gradient method on a log-sum-exp smoothing of the
  objective, with a decreasing smoothing parameter and optional restarts;
* global bisection on the objective level alpha, deciding feasibility of the
  convex sublevel set {x : alpha*B(x) - A(x) >= 0} by minimizing the maximum
  eigenvalue of the affine map A(x) - alpha*B(x) over the feasible set.

An epsilon-continuation driver chains solves over a decreasing epsilon
schedule, warm starting each from the last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import problems as probs
from .errors import BracketError
from .geneig import AffinePencil, _pencil_value_grad, _smoothed_value_grad
from .problems import FeasibleSet, ProblemSpec

#: Bars below this fraction of the largest area count as removed.
DISPLAY_THRESHOLD = 1e-6

STEP_DIMINISHING = "diminishing_over_sqrt_k"
STEP_CONSTANT = "constant_over_norm"
STEP_POLYAK = "polyak_level"
MU_FIXED = "fixed"
MU_ONE_OVER_K = "one_over_k"


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 5000
    step_rule: str = STEP_POLYAK
    initial_step: float = 1.0
    smoothing_mu0: float = 1e-2
    mu_decay: str = MU_ONE_OVER_K
    restart: bool = True
    tol_obj: float = 1e-10
    seed: int = 0
    bisect_tol: float = 1e-8
    history_stride: int = 1

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if min(self.initial_step, self.smoothing_mu0, self.tol_obj,
               self.bisect_tol) <= 0:
            raise ValueError("steps and tolerances must be positive")


@dataclass
class SolveReport:
    x_final: np.ndarray
    obj_final: float
    obj_exact: float
    history: list[tuple[int, float]] = field(repr=False)
    eps_used: float = 0.0
    iterations: int = 0
    termination: str = "max_iters"
    active_bars: int = 0


def _count_active(x: np.ndarray) -> int:
    top = float(np.max(x)) if len(x) else 0.0
    if top <= 0:
        return 0
    return int(np.sum(x >= DISPLAY_THRESHOLD * top))


def project_feasible(y, fs: FeasibleSet) -> np.ndarray:
    """Euclidean projection onto {x >= lower_bound, l'x <= V0 (or = V0)}."""
    y = np.asarray(y, dtype=float)
    l = fs.l
    lb = fs.lower_bound
    clamped = np.maximum(y, lb)
    vol = float(l @ clamped)
    if fs.kind == probs.VOLUME_LE and vol <= fs.v0:
        return clamped

    # Solve sum_j l_j * max(lb, y_j - tau * l_j) = V0 for the multiplier tau;
    # the left side is a nonincreasing piecewise linear function of tau.
    def h(tau):
        return float(l @ np.maximum(y - tau * l, lb))

    lo, hi = 0.0, 1.0
    if h(0.0) < fs.v0:
        while h(-hi) < fs.v0:
            hi *= 2.0
        lo, hi = -hi, 0.0
    else:
        while h(hi) > fs.v0:
            hi *= 2.0
    while hi - lo > 1e-12 * (1.0 + abs(hi) + abs(lo)):
        mid = 0.5 * (lo + hi)
        if h(mid) > fs.v0:
            lo = mid
        else:
            hi = mid
    # Exact multiplier from the active set at the bisected tau.
    tau = 0.5 * (lo + hi)
    free = y - tau * l > lb
    denom = float(l[free] @ l[free])
    if denom > 0:
        fixed_vol = lb * float(np.sum(l[~free]))
        tau = (float(l[free] @ y[free]) - (fs.v0 - fixed_vol)) / denom
    return np.maximum(y - tau * l, lb)


def _value_grad(spec: ProblemSpec):
    """Objective evaluator for the (possibly regularized) problem."""
    pa, pb = spec.objective_pencils()

    def vg(x):
        value, grad, _ = _pencil_value_grad(pa, pb, x, spec.eps)
        return value, grad

    return vg


def _exact_objective(spec: ProblemSpec, x) -> float:
    if spec.kind == probs.ROBUST_COMPLIANCE:
        return probs.psi_exact(spec.model, x)
    return probs.phi_exact(spec.model, x)


def _start_point(spec: ProblemSpec, x0) -> np.ndarray:
    if x0 is None:
        m = spec.model.k_pencil.nvars
        total = float(spec.feasible.l @ np.ones(m))
        x0 = np.full(m, spec.feasible.v0 / total)
    return project_feasible(np.asarray(x0, dtype=float), spec.feasible)


def projected_subgradient(spec: ProblemSpec, x0=None,
                          opts: SolverOptions = SolverOptions()) -> SolveReport:
    """Projected subgradient descent; returns the best iterate seen."""
    vg = _value_grad(spec)
    fs = spec.feasible
    x = _start_point(spec, x0)
    best_x = x.copy()
    best_f = math.inf
    history: list[tuple[int, float]] = []
    termination = "max_iters"

    # Adaptive Polyak level state: the level delta below the record is
    # halved whenever the record fails to drop by a fraction of delta
    # within a patience window.
    delta = None
    anchor_f = math.inf
    stall = 0
    iters = 0
    for k in range(opts.max_iters):
        iters = k + 1
        f, g = vg(x)
        if k % opts.history_stride == 0:
            history.append((k, min(f, best_f)))
        if f < best_f:
            best_f = f
            best_x = x.copy()
        gnorm = float(np.linalg.norm(g))
        if gnorm <= 1e-16:
            termination = "obj_tol"
            break

        if opts.step_rule == STEP_DIMINISHING:
            t = opts.initial_step / (math.sqrt(k + 1.0) * gnorm)
        elif opts.step_rule == STEP_CONSTANT:
            t = opts.initial_step / gnorm
        elif opts.step_rule == STEP_POLYAK:
            if delta is None:
                delta = max(0.1 * (abs(f) + 1.0), opts.tol_obj)
                anchor_f = best_f
            floor = opts.tol_obj * (1.0 + abs(best_f))
            if best_f <= anchor_f - 0.2 * delta:
                anchor_f = best_f
                stall = 0
            else:
                stall += 1
            if stall > 60:
                stall = 0
                anchor_f = best_f
                if delta <= floor:
                    termination = "obj_tol"
                    break
                delta = max(0.5 * delta, floor)
            target = best_f - delta
            t = max(f - target, 0.0) / (gnorm * gnorm)
        else:
            raise ValueError(f"unknown step rule {opts.step_rule!r}")
        x = project_feasible(x - t * g, fs)

    report = SolveReport(
        x_final=best_x,
        obj_final=best_f,
        obj_exact=_exact_objective(spec, best_x),
        history=history,
        eps_used=spec.eps,
        iterations=iters,
        termination=termination,
        active_bars=_count_active(best_x),
    )
    return report


def smoothed_apg(spec: ProblemSpec, x0=None,
                 opts: SolverOptions = SolverOptions()) -> SolveReport:
    """Accelerated projected gradient on the log-sum-exp smoothed objective.

    The smoothing parameter follows opts.mu_decay; the best iterate is
    tracked by the true (unsmoothed) regularized objective.
    """
    pa, pb = spec.objective_pencils()
    vg = _value_grad(spec)
    fs = spec.feasible
    x = _start_point(spec, x0)
    y = x.copy()
    theta = 1.0
    lips = 1.0
    best_x = x.copy()
    best_f = vg(x)[0]
    prev_f = best_f
    history: list[tuple[int, float]] = [(0, best_f)]

    iters = 0
    for k in range(opts.max_iters):
        iters = k + 1
        if opts.mu_decay == MU_ONE_OVER_K:
            mu = opts.smoothing_mu0 / (k + 1.0)
        else:
            mu = opts.smoothing_mu0
        fy, gy = _smoothed_value_grad(pa, pb, y, spec.eps, mu)
        # Backtracking on the smoothed model.
        for _ in range(60):
            x_new = project_feasible(y - gy / lips, fs)
            d = x_new - y
            fx_new = _smoothed_value_grad(pa, pb, x_new, spec.eps, mu)[0]
            if fx_new <= fy + float(gy @ d) + 0.5 * lips * float(d @ d) + 1e-15:
                break
            lips *= 2.0
        lips = max(lips * 0.9, 1e-12)

        f_true = vg(x_new)[0]
        if k % opts.history_stride == 0:
            history.append((k + 1, min(f_true, best_f)))
        if f_true < best_f:
            best_f = f_true
            best_x = x_new.copy()

        if opts.restart and f_true > prev_f:
            theta = 1.0
            y = x_new.copy()
        else:
            theta_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * theta * theta))
            y = x_new + ((theta - 1.0) / theta_new) * (x_new - x)
            y = project_feasible(y, fs)
            theta = theta_new
        x = x_new
        prev_f = f_true

    return SolveReport(
        x_final=best_x,
        obj_final=best_f,
        obj_exact=_exact_objective(spec, best_x),
        history=history,
        eps_used=spec.eps,
        iterations=iters,
        termination="max_iters",
        active_bars=_count_active(best_x),
    )


def _sublevel_feasible(c0: np.ndarray, c_coeffs: np.ndarray, fs: FeasibleSet,
                       x_start: np.ndarray, slack: float, max_iters: int):
    """Search the feasible set for x with lmax(C(x)) <= slack.

    Polyak steps toward the zero level of the convex function
    h(x) = lmax(C0 + sum_j x_j C_j).  Returns (found, witness, best_value).
    """
    x = project_feasible(x_start, fs)
    best_h = math.inf
    best_x = x.copy()
    since_improve = 0
    for _ in range(max_iters):
        c = c0 + np.tensordot(x, c_coeffs, axes=1)
        w, vecs = np.linalg.eigh(c)
        h = float(w[-1])
        if math.isinf(best_h) or h < best_h - 1e-14 * (1.0 + abs(best_h)):
            best_h = h
            best_x = x.copy()
            since_improve = 0
        else:
            since_improve += 1
        if h <= slack:
            return True, x, h
        if since_improve > 300:
            break
        v = vecs[:, -1]
        g = np.einsum("j,mjk,k->m", v, c_coeffs, v)
        gnorm2 = float(g @ g)
        if gnorm2 <= 1e-30:
            break
        x = project_feasible(x - (h / gnorm2) * g, fs)
    return best_h <= slack, best_x, best_h


def bisection_global(spec: ProblemSpec, alpha_lo: float = 0.0,
                     alpha_hi: float | None = None,
                     opts: SolverOptions = SolverOptions(),
                     x0=None) -> SolveReport:
    """Global solve of the quasiconvex problem by bisection on the level.

    A level alpha is feasible iff some feasible x satisfies
    alpha * B(x) - A(x) >= 0, i.e. min over the feasible set of
    lmax(A(x) - alpha * B(x)) is (numerically) nonpositive.  Requires affine
    pencils; returns the smallest feasible level found and its witness.

    Unless ``x0`` is given, a short regularized subgradient solve provides
    the initial witness and upper level; starting the feasibility searches
    near an optimizer matters on larger instances, where the convex search
    from a cold start can fail to certify feasible levels.
    """
    pa, pb = spec.objective_pencils()
    fs = spec.feasible
    n = pa.dim
    b0 = pb.constant + spec.eps * np.eye(n)

    warm_obj = None
    if x0 is None:
        warm = projected_subgradient(
            replace(spec, eps=max(spec.eps, 1e-6)), None,
            replace(opts, max_iters=min(4000, opts.max_iters)))
        x0 = warm.x_final
        warm_obj = warm.obj_final
    x_start = project_feasible(np.asarray(x0, dtype=float), fs)

    scale_a = float(np.max(np.abs(pa.constant))) + (
        float(np.max(np.abs(pa.coeffs))) if pa.nvars else 0.0)
    scale_b = float(np.max(np.abs(b0))) + (
        float(np.max(np.abs(pb.coeffs))) if pb.nvars else 0.0)

    def feasible(alpha, x_from):
        c0 = pa.constant - alpha * b0
        c_coeffs = pa.coeffs - alpha * pb.coeffs
        # an unbounded objective shows up as a margin that ignores alpha;
        # the doubling loop aborts on that before the slack can grow enough
        # to absorb it
        slack = 1e-9 * (1.0 + scale_a + alpha * scale_b)
        # warm-started searches settle quickly; a tight budget keeps the
        # many infeasible-side probes from dominating the run time
        return _sublevel_feasible(c0, c_coeffs, fs, x_from, slack,
                                  min(opts.max_iters, 1000))

    ok, x_w, _ = feasible(alpha_lo, x_start)
    if ok:
        return SolveReport(
            x_final=x_w, obj_final=alpha_lo,
            obj_exact=_exact_objective(spec, x_w), history=[],
            eps_used=spec.eps, iterations=0, termination="bisected",
            active_bars=_count_active(x_w))

    if alpha_hi is None:
        if warm_obj is None or not math.isfinite(warm_obj):
            reg = max(spec.eps, 1e-6)
            warm_obj, _, _ = _pencil_value_grad(pa, pb, x_start, reg)
        alpha_hi = max(warm_obj * (1.0 + 1e-3), 10.0 * opts.bisect_tol)
    ok, x_w, h_prev = feasible(alpha_hi, x_start)
    doublings = 0
    stagnant = 0
    while not ok:
        alpha_hi *= 2.0
        doublings += 1
        if doublings > 60:
            raise BracketError("no feasible level found while doubling")
        ok, x_w, h = feasible(alpha_hi, x_start)
        if not ok:
            # raising the level must shrink the infeasibility margin unless
            # the objective is infinite on the whole feasible set
            if h >= h_prev - 1e-9 * (1.0 + abs(h_prev)):
                stagnant += 1
                if stagnant >= 3:
                    raise BracketError(
                        "infeasibility margin does not improve with the "
                        "level; the objective appears unbounded")
            else:
                stagnant = 0
            h_prev = h
    witness = x_w

    lo, hi = alpha_lo, alpha_hi
    history = []
    tol = opts.bisect_tol * (1.0 + alpha_hi)
    it = 0
    while hi - lo > tol:
        it += 1
        mid = 0.5 * (lo + hi)
        ok, x_w, _ = feasible(mid, witness)
        history.append((it, hi))
        if ok:
            hi = mid
            witness = x_w
        else:
            lo = mid

    return SolveReport(
        x_final=witness,
        obj_final=hi,
        obj_exact=_exact_objective(spec, witness),
        history=history,
        eps_used=spec.eps,
        iterations=it,
        termination="bisected",
        active_bars=_count_active(witness),
    )


def eps_continuation(spec: ProblemSpec, eps_schedule,
                     opts: SolverOptions = SolverOptions(),
                     method: str = "subgradient") -> list[SolveReport]:
    """Solve the regularized problem along a decreasing epsilon schedule.

    Each solve warm-starts from the previous solution projected into the new
    feasible set.  Returns one report per epsilon, in schedule order.
    """
    eps_schedule = [float(e) for e in eps_schedule]
    if any(e <= 0 for e in eps_schedule) or \
            any(b >= a for a, b in zip(eps_schedule, eps_schedule[1:])):
        raise ValueError("eps schedule must be strictly decreasing and positive")
    solve = {"subgradient": projected_subgradient,
             "smoothed_apg": smoothed_apg}[method]
    reports = []
    x = None
    for eps in eps_schedule:
        sub = replace(spec, eps=eps)
        report = solve(sub, x, opts)
        reports.append(report)
        x = report.x_final
    return reports
