"""Tests for the projection, subgradient, smoothed-gradient and bisection solvers."""

import math

import numpy as np
import pytest

from geneigopt import problems, solvers, truss
from geneigopt.errors import BracketError
from geneigopt.geneig import AffinePencil
from geneigopt.problems import (
    EIGENFREQUENCY,
    ROBUST_COMPLIANCE,
    FeasibleSet,
    PencilModel,
    ProblemSpec,
    demo_model_with_mass,
    demo_model_without_mass,
    robust_two_bar_model,
)
from geneigopt.solvers import (
    STEP_CONSTANT,
    STEP_DIMINISHING,
    SolverOptions,
    bisection_global,
    eps_continuation,
    project_feasible,
    projected_subgradient,
    smoothed_apg,
)

TWO_BAR_EQ = FeasibleSet(l=np.array([1.0, 1.0]), v0=2.0,
                         kind=problems.VOLUME_EQ)
TWO_BAR_LE = FeasibleSet(l=np.array([1.0, 1.0]), v0=2.0,
                         kind=problems.VOLUME_LE)


def eps_minimizer_no_mass(eps):
    """Crossing point of x1/(x1+e) and 2(2-x1)/(2-x1+e) on the volume line."""
    x1 = 0.5 * ((2.0 - 3.0 * eps) + math.sqrt(9.0 * eps * eps + 4.0 * eps + 4.0))
    return np.array([x1, 2.0 - x1])


# ------------------------------------------------------------------ projection

def test_projection_examples():
    fs = TWO_BAR_EQ
    assert np.allclose(project_feasible([2.0, 2.0], fs), [1.0, 1.0])
    assert np.allclose(project_feasible([3.0, -1.0], fs), [2.0, 0.0], atol=1e-9)
    le = TWO_BAR_LE
    assert np.allclose(project_feasible([0.5, -0.3], le), [0.5, 0.0])


def test_projection_respects_lower_bound():
    fs = FeasibleSet(l=np.array([1.0, 1.0]), v0=2.0,
                     kind=problems.VOLUME_EQ, lower_bound=0.25)
    p = project_feasible([3.0, -1.0], fs)
    assert np.all(p >= 0.25 - 1e-12)
    assert abs(float(fs.l @ p) - 2.0) < 1e-9


def test_projection_is_nearest_point():
    rng = np.random.default_rng(12)
    for _ in range(40):
        m = int(rng.integers(2, 7))
        l = rng.uniform(0.5, 2.0, m)
        kind = problems.VOLUME_EQ if rng.random() < 0.5 else problems.VOLUME_LE
        fs = FeasibleSet(l=l, v0=float(rng.uniform(1.0, 3.0)), kind=kind)
        y = rng.standard_normal(m) * 2.0
        p = project_feasible(y, fs)
        assert fs.contains(p)
        # optimality via the variational inequality against random feasible z
        for _ in range(50):
            z = rng.uniform(0.0, 1.0, m)
            z = z * fs.v0 / float(l @ z)
            assert float((y - p) @ (z - p)) <= 1e-7 * (1 + np.linalg.norm(y))


# ----------------------------------------------------------- subgradient solve

def test_subgradient_two_bar_minimizer():
    spec = ProblemSpec(EIGENFREQUENCY, demo_model_without_mass(),
                       TWO_BAR_EQ, eps=0.01)
    rep = projected_subgradient(spec, None, SolverOptions(max_iters=20000,
                                                          tol_obj=1e-12))
    assert np.max(np.abs(rep.x_final - eps_minimizer_no_mass(0.01))) <= 1e-4
    x1 = rep.x_final[0]
    assert abs(rep.obj_final - x1 / (x1 + 0.01)) < 1e-9


def test_subgradient_two_bar_with_mass():
    spec = ProblemSpec(EIGENFREQUENCY, demo_model_with_mass(),
                       TWO_BAR_EQ, eps=0.01)
    rep = projected_subgradient(spec, None, SolverOptions(max_iters=20000))
    assert np.max(np.abs(rep.x_final - [2.0, 0.0])) <= 1e-3
    assert abs(rep.obj_final - 3.0 / 2.01) < 1e-6


def test_subgradient_two_bar_robust():
    spec = ProblemSpec(ROBUST_COMPLIANCE, robust_two_bar_model(),
                       TWO_BAR_LE, eps=1e-6)
    rep = projected_subgradient(spec, None, SolverOptions(max_iters=20000))
    assert np.max(np.abs(rep.x_final - [2.0, 0.0])) <= 1e-3
    assert abs(rep.obj_final - 0.5) <= 1e-3


def test_subgradient_alternative_step_rules_make_progress():
    spec = ProblemSpec(EIGENFREQUENCY, demo_model_without_mass(),
                       TWO_BAR_EQ, eps=0.01)
    start = np.array([0.5, 1.5])
    f0 = 2.0 * 1.5 / 1.51
    for rule in (STEP_DIMINISHING, STEP_CONSTANT):
        rep = projected_subgradient(
            spec, start, SolverOptions(max_iters=2000, step_rule=rule,
                                       initial_step=0.1))
        assert rep.obj_final < f0 - 0.1


def test_subgradient_history_is_monotone_best():
    spec = ProblemSpec(EIGENFREQUENCY, demo_model_without_mass(),
                       TWO_BAR_EQ, eps=0.05)
    rep = projected_subgradient(spec, [0.2, 1.8], SolverOptions(max_iters=500))
    objs = [f for _, f in rep.history]
    assert all(b <= a + 1e-12 for a, b in zip(objs, objs[1:]))


def test_subgradient_reports_exact_objective():
    spec = ProblemSpec(EIGENFREQUENCY, demo_model_without_mass(),
                       TWO_BAR_EQ, eps=1e-6)
    rep = projected_subgradient(spec, None, SolverOptions(max_iters=20000))
    # the exact extended value at the regularized minimizer
    assert rep.obj_exact >= rep.obj_final - 1e-9


# -------------------------------------------------------------- smoothed solve

def test_apg_agrees_with_subgradient_on_two_bar():
    spec = ProblemSpec(EIGENFREQUENCY, demo_model_without_mass(),
                       TWO_BAR_EQ, eps=0.01)
    sub = projected_subgradient(spec, None, SolverOptions(max_iters=20000))
    apg = smoothed_apg(spec, None, SolverOptions(max_iters=3000))
    assert abs(apg.obj_final - sub.obj_final) <= 1e-4


def test_apg_single_bar_is_trivial():
    k = AffinePencil(np.zeros((1, 1)), [np.ones((1, 1))])
    m = AffinePencil(np.zeros((1, 1)), [2.0 * np.ones((1, 1))])
    model = PencilModel(k_pencil=k, m_pencil=m, volumes=np.array([1.0]))
    fs = FeasibleSet(l=np.array([2.0]), v0=3.0, kind=problems.VOLUME_EQ)
    rep = smoothed_apg(ProblemSpec(EIGENFREQUENCY, model, fs, eps=0.1),
                       None, SolverOptions(max_iters=5))
    assert np.allclose(rep.x_final, [1.5])


def test_apg_fixed_mu_stays_within_smoothing_gap():
    spec = ProblemSpec(EIGENFREQUENCY, demo_model_without_mass(),
                       TWO_BAR_EQ, eps=0.01)
    mu = 1e-3
    rep = smoothed_apg(spec, None, SolverOptions(
        max_iters=2000, smoothing_mu0=mu, mu_decay=solvers.MU_FIXED))
    best = eps_minimizer_no_mass(0.01)
    f_star = best[0] / (best[0] + 0.01)
    assert rep.obj_final <= f_star + mu * math.log(2) + 1e-6


# ------------------------------------------------------------------- bisection

def test_bisection_two_bar_no_mass():
    spec = ProblemSpec(EIGENFREQUENCY, demo_model_without_mass(),
                       TWO_BAR_EQ, eps=0.0)
    rep = bisection_global(spec, opts=SolverOptions(max_iters=20000))
    assert abs(rep.obj_final - 1.0) <= 1e-6
    assert np.max(np.abs(rep.x_final - [2.0, 0.0])) <= 1e-6
    assert rep.termination == "bisected"


def test_bisection_two_bar_with_mass():
    # the exact optimal value on the volume line is 1.5, attained only at
    # (2, 0): the 2-eigenvalue branch needs x2 > 0 and drops away on the edge
    spec = ProblemSpec(EIGENFREQUENCY, demo_model_with_mass(),
                       TWO_BAR_EQ, eps=0.0)
    rep = bisection_global(spec, opts=SolverOptions(max_iters=20000))
    assert abs(rep.obj_final - 1.5) <= 1e-6
    assert np.max(np.abs(rep.x_final - [2.0, 0.0])) <= 1e-6


def test_bisection_two_bar_robust():
    spec = ProblemSpec(ROBUST_COMPLIANCE, robust_two_bar_model(),
                       TWO_BAR_LE, eps=0.0)
    rep = bisection_global(spec, opts=SolverOptions(max_iters=20000))
    assert abs(rep.obj_final - 0.5) <= 1e-6
    assert np.max(np.abs(rep.x_final - [2.0, 0.0])) <= 1e-5


def test_bisection_zero_level_shortcut():
    # a zero numerator makes level 0 immediately feasible
    model = PencilModel(
        k_pencil=AffinePencil(np.zeros((2, 2)),
                              [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]),
        q_matrix=np.zeros((2, 1)))
    spec = ProblemSpec(ROBUST_COMPLIANCE, model, TWO_BAR_LE, eps=0.0)
    rep = bisection_global(spec)
    assert rep.obj_final == 0.0


def test_bisection_unbounded_objective_raises():
    # mass with no stiffness anywhere: every level is infeasible
    model = PencilModel(
        k_pencil=AffinePencil(np.zeros((2, 2)),
                              [np.zeros((2, 2)), np.zeros((2, 2))]),
        m_pencil=AffinePencil(np.eye(2), [np.zeros((2, 2)), np.zeros((2, 2))]),
        volumes=np.array([1.0, 1.0]))
    spec = ProblemSpec(EIGENFREQUENCY, model, TWO_BAR_EQ, eps=0.0)
    with pytest.raises(BracketError):
        bisection_global(spec, opts=SolverOptions(max_iters=200))


# ---------------------------------------------------------------- continuation

def test_continuation_two_bar_tracks_closed_form():
    spec = ProblemSpec(EIGENFREQUENCY, demo_model_without_mass(),
                       TWO_BAR_EQ, eps=0.1)
    schedule = [10.0 ** (-p) for p in range(1, 7)]
    reps = eps_continuation(spec, schedule,
                            SolverOptions(max_iters=20000, tol_obj=1e-12))
    values = [r.obj_final for r in reps]
    for a, b in zip(values, values[1:]):
        assert b >= a - 1e-9  # regularized optimal values rise toward 1
    assert abs(values[-1] - 1.0) <= 1e-3
    for eps, rep in zip(schedule, reps):
        assert np.max(np.abs(rep.x_final - eps_minimizer_no_mass(eps))) <= 1e-4
    assert np.max(np.abs(reps[-1].x_final - [2.0, 0.0])) <= 1e-3


def test_continuation_robust_values_increase_to_limit():
    spec = ProblemSpec(ROBUST_COMPLIANCE, robust_two_bar_model(),
                       TWO_BAR_LE, eps=0.1)
    schedule = [10.0 ** (-p) for p in range(1, 7)]
    reps = eps_continuation(spec, schedule, SolverOptions(max_iters=20000))
    values = [r.obj_final for r in reps]
    for eps, v in zip(schedule, values):
        assert abs(v - 1.0 / (2.0 + eps)) <= 1e-6
    for a, b in zip(values, values[1:]):
        assert b >= a - 1e-9
    assert values[-1] <= 0.5 + 1e-9


def test_continuation_rejects_bad_schedules():
    spec = ProblemSpec(EIGENFREQUENCY, demo_model_without_mass(),
                       TWO_BAR_EQ, eps=0.1)
    with pytest.raises(ValueError):
        eps_continuation(spec, [0.1, 0.2])
    with pytest.raises(ValueError):
        eps_continuation(spec, [0.1, 0.0])


def test_continuation_smoothed_method():
    spec = ProblemSpec(EIGENFREQUENCY, demo_model_without_mass(),
                       TWO_BAR_EQ, eps=0.1)
    reps = eps_continuation(spec, [0.1, 0.01],
                            SolverOptions(max_iters=1500),
                            method="smoothed_apg")
    assert abs(reps[-1].obj_final
               - eps_minimizer_no_mass(0.01)[0] / (eps_minimizer_no_mass(0.01)[0] + 0.01)) <= 1e-4


# ------------------------------------------------------------------- reporting

def test_active_bar_count():
    spec = ProblemSpec(ROBUST_COMPLIANCE, robust_two_bar_model(),
                       TWO_BAR_LE, eps=1e-6)
    rep = projected_subgradient(spec, None, SolverOptions(max_iters=20000))
    assert rep.active_bars == 1


def test_solver_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(max_iters=0)
    with pytest.raises(ValueError):
        SolverOptions(initial_step=-1.0)
