import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import default_weights, enumerate_box_qp, random_inner_problems, stacked_system
from tailsitter_indi import effectiveness as eff
from tailsitter_indi.allocation import AllocationProblem, check_kkt, wls_allocate

BIG = 1e9


def hover_G():
    return eff.build_inner_G(0.0, 0.0, (0.0, 0.0, 4800.0, 4800.0), False)


def test_zero_demand_gives_zero_increment():
    p = AllocationProblem(hover_G(), np.zeros(4), -np.full(4, 100.0), np.full(4, 100.0))
    s = wls_allocate(p)
    assert np.array_equal(s.du, np.zeros(4)) and s.converged
    assert check_kkt(p, s).ok


def test_unconstrained_matches_pseudo_inverse():
    # [DERIVED] uniform weights and gamma -> 0 give G^+ dnu
    rng = np.random.default_rng(3)
    G = rng.normal(size=(4, 4))
    dnu = rng.normal(size=4)
    p = AllocationProblem(G, dnu, -np.full(4, BIG), np.full(4, BIG), Wv=np.ones(4), gamma=0.0, u_scale=1.0)
    s = wls_allocate(p)
    assert np.allclose(s.du, np.linalg.pinv(G) @ dnu, rtol=1e-9, atol=1e-12)
    assert check_kkt(p, s).ok


def test_unconstrained_weighted_matches_normal_equations():
    G = hover_G()
    dnu = np.array([1.0, -3.0, 2.0, 0.5])
    p = AllocationProblem(G, dnu, -np.full(4, BIG), np.full(4, BIG))
    s = wls_allocate(p)
    A, b = p.system()
    assert np.allclose(s.du, np.linalg.solve(A.T @ A, A.T @ b), rtol=1e-8)


def test_regularizer_barely_moves_a_full_rank_solution():
    G = eff.build_inner_G(0.0, 0.0, (0.0, 0.0, 4800.0, 4800.0), False)
    dnu = np.array([2.0, 5.0, -1.0, 0.3])
    du0 = np.linalg.solve(G, dnu)
    p = AllocationProblem(G, dnu, -np.full(4, BIG), np.full(4, BIG))
    assert np.allclose(wls_allocate(p).du, du0, rtol=1e-3)


def test_pitch_priority_against_flap_box_grid():
    # [DERIVED] brute-force grid over the 2-D flap box, motors pinned
    G = hover_G()
    dnu = np.array([0.0, 10.0, 10.0, 0.0])  # each alone fits, together not
    lo = np.array([-3000.0, -3000.0, 0.0, 0.0])
    hi = np.array([3000.0, 3000.0, 0.0, 0.0])
    p = AllocationProblem(G, dnu, lo, hi)
    s = wls_allocate(p)
    res = np.abs(s.achieved - dnu) / np.abs(np.where(dnu == 0, 1, dnu))
    assert res[1] < 0.05 * res[2]
    g = np.linspace(-3000.0, 3000.0, 601)
    U0, U1 = np.meshgrid(g, g)
    du = np.stack([U0.ravel(), U1.ravel(), 0 * U0.ravel(), 0 * U0.ravel()], axis=1)
    A, b = p.system()
    f = np.sum((du @ A.T - b) ** 2, axis=1)
    assert p.objective(s.du) <= f.min() + 1e-9
    assert check_kkt(p, s).ok


def test_pitch_priority_randomized():
    rng = np.random.default_rng(11)
    for _ in range(100):
        theta = rng.uniform(-np.pi / 2, 0.0)
        G = eff.build_inner_G(theta, 0.0, (0.0, 0.0, 5000.0, 5000.0), False)
        lim = rng.uniform(500.0, 3000.0)
        dq = rng.choice([-1, 1]) * rng.uniform(1.5, 3.0) * lim * 2 * abs(G[1, 0])
        dr = rng.choice([-1, 1]) * rng.uniform(1.5, 3.0) * lim * 2 * abs(G[2, 0])
        dnu = np.array([0.0, dq, dr, 0.0])
        p = AllocationProblem(G, dnu, [-lim, -lim, 0.0, 0.0], [lim, lim, 0.0, 0.0])
        s = wls_allocate(p)
        e = np.abs(s.achieved - dnu) / np.abs(dnu + (dnu == 0))
        assert e[1] < e[2]


def test_solution_respects_bounds_exactly_and_reports_active_set():
    G = hover_G()
    lo = np.array([-100.0, -100.0, -50.0, -50.0])
    hi = -lo
    p = AllocationProblem(G, np.array([10.0, 50.0, 20.0, 2.0]), lo, hi)
    s = wls_allocate(p)
    assert np.all(s.du >= lo) and np.all(s.du <= hi)
    assert np.all(s.du[s.active_set == 1] == hi[s.active_set == 1])
    assert np.all(s.du[s.active_set == -1] == lo[s.active_set == -1])
    assert check_kkt(p, s).ok


def test_iteration_cap_returns_feasible_unconverged():
    G = hover_G()
    lo = np.array([-100.0, -100.0, -50.0, -50.0])
    p = AllocationProblem(G, np.array([10.0, 50.0, 20.0, 2.0]), lo, -lo, imax=1)
    s = wls_allocate(p)
    assert s.unconverged
    assert np.all(s.du >= lo) and np.all(s.du <= -lo)


def test_kkt_detects_a_wrong_answer():
    G = hover_G()
    p = AllocationProblem(G, np.array([0.0, 5.0, 0.0, 0.0]), -np.full(4, 1e4), np.full(4, 1e4))
    s = wls_allocate(p)
    s.du = s.du * 0.9
    assert not check_kkt(p, s).ok


def test_problem_validation():
    with pytest.raises(ValueError):
        AllocationProblem(hover_G(), np.zeros(4), np.ones(4), np.full(4, 2.0))
    with pytest.raises(ValueError):
        AllocationProblem(hover_G(), np.zeros(4), -np.ones(4), np.ones(4), Wv=np.zeros(4))
    G = hover_G()
    G[0, 0] = np.nan
    with pytest.raises(ValueError):
        AllocationProblem(G, np.zeros(4), -np.ones(4), np.ones(4))


def test_matches_enumeration_oracle():
    rng = np.random.default_rng(2024)
    N = 1000
    G, dnu, lo, hi = random_inner_problems(rng, N)
    A, b = stacked_system(G, dnu, default_weights(N), 1e-4, 9600.0)
    f_or, _ = enumerate_box_qp(A, b, lo, hi)
    for k in range(N):
        p = AllocationProblem(G[k], dnu[k], lo[k], hi[k])
        s = wls_allocate(p)
        assert p.objective(s.du) <= f_or[k] + 1e-6
        if s.converged:
            assert check_kkt(p, s).ok


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100.0))
def test_positive_homogeneity(seed, alpha):
    rng = np.random.default_rng(seed)
    G, dnu, lo, hi = random_inner_problems(rng, 1)
    s1 = wls_allocate(AllocationProblem(G[0], dnu[0], lo[0], hi[0]))
    s2 = wls_allocate(AllocationProblem(G[0], alpha * dnu[0], alpha * lo[0], alpha * hi[0]))
    assert np.allclose(s2.du, alpha * s1.du, rtol=1e-7, atol=1e-9 * alpha * 9600)
