"""Weighted least-squares control allocation with box constraints.

The allocator minimizes

    || diag(Wv) (G du - dnu) ||^2 + gamma * sum_i Wu_i (du_i / u_scale)^2

subject to du_min <= du <= du_max. ``Wv`` multiplies the output error
before squaring, so a priority of 1000 on pitch outweighs 0.1 on yaw by
1e8 in the cost. The regularizer acts on inputs normalized by the command
span; with ``u_scale = 9600`` and ``gamma = 1e-4`` it only matters where G
is rank deficient (e.g. zero motor-roll effectiveness at zero thrust).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._accel import njit

DEFAULT_WV = np.array([100.0, 1000.0, 0.1, 10.0])
DEFAULT_GAMMA = 1e-4
DEFAULT_U_SCALE = 9600.0
DEFAULT_IMAX = 16
KKT_TOL = 1e-8


@njit
def k_wls_system(G, dnu, Wv, Wu, gamma, u_scale):
    """Stack the weighted output rows over the regularizer rows."""
    m, n = G.shape
    A = np.zeros((m + n, n))
    b = np.zeros(m + n)
    for i in range(m):
        for j in range(n):
            A[i, j] = Wv[i] * G[i, j]
        b[i] = Wv[i] * dnu[i]
    for j in range(n):
        A[m + j, j] = math.sqrt(gamma * Wu[j]) / u_scale
    return A, b


@njit
def k_allocate(G, dnu, du_min, du_max, Wv, Wu, gamma, u_scale, imax):
    A, b = k_wls_system(G, dnu, Wv, Wu, gamma, u_scale)
    return kernels.wls_active_set(A, b, du_min, du_max, imax)


@dataclass
class AllocationProblem:
    G: np.ndarray
    dnu: np.ndarray
    du_min: np.ndarray
    du_max: np.ndarray
    Wv: np.ndarray = field(default_factory=lambda: DEFAULT_WV.copy())
    Wu: np.ndarray = field(default_factory=lambda: np.ones(4))
    gamma: float = DEFAULT_GAMMA
    u_scale: float = DEFAULT_U_SCALE
    imax: int = DEFAULT_IMAX

    def __post_init__(self):
        self.G = np.ascontiguousarray(self.G, dtype=float)
        n = self.G.shape[1]
        self.dnu = np.asarray(self.dnu, dtype=float).reshape(self.G.shape[0])
        self.du_min = np.asarray(self.du_min, dtype=float).reshape(n)
        self.du_max = np.asarray(self.du_max, dtype=float).reshape(n)
        self.Wv = np.asarray(self.Wv, dtype=float).reshape(self.G.shape[0])
        self.Wu = np.asarray(self.Wu, dtype=float).reshape(n)
        if np.any(self.du_min > 0.0) or np.any(self.du_max < 0.0):
            raise ValueError("bounds must bracket zero (the current input is always feasible)")
        if np.any(self.Wv <= 0.0) or np.any(self.Wu <= 0.0) or self.gamma < 0.0:
            raise ValueError("weights must be positive")
        if not np.all(np.isfinite(self.G)):
            raise ValueError("non-finite effectiveness matrix")

    def system(self) -> tuple[np.ndarray, np.ndarray]:
        return k_wls_system(self.G, self.dnu, self.Wv, self.Wu, float(self.gamma), float(self.u_scale))

    def objective(self, du) -> float:
        A, b = self.system()
        r = A @ np.asarray(du, dtype=float) - b
        return float(r @ r)


@dataclass
class AllocationSolution:
    du: np.ndarray
    active_set: np.ndarray  # -1 at lower bound, +1 at upper, 0 free
    iterations: int
    converged: bool
    achieved: np.ndarray

    @property
    def unconverged(self) -> bool:
        return not self.converged


def wls_allocate(p: AllocationProblem) -> AllocationSolution:
    """Solve the allocation QP by a primal active-set method started at du = 0.

    If the iteration cap is hit, the current (feasible, lowest-cost so far)
    iterate is returned with ``converged = False``.
    """
    du, ws, it, ok = k_allocate(
        p.G, p.dnu, p.du_min, p.du_max, p.Wv, p.Wu, float(p.gamma), float(p.u_scale), int(p.imax)
    )
    return AllocationSolution(du, ws, int(it), bool(ok), p.G @ du)


@dataclass
class KKTReport:
    ok: bool
    stationarity: float
    sign_violation: float
    bound_violation: float


def check_kkt(p: AllocationProblem, sol: AllocationSolution, tol: float = KKT_TOL) -> KKTReport:
    """First-order optimality check of an allocation solution.

    Residuals are divided by the problem scale max(|A^T b|, |A^T A| |du|) so
    the tolerance is independent of command units.
    """
    A, b = p.system()
    du = sol.du
    g = A.T @ (A @ du - b)
    scale = max(np.max(np.abs(A.T @ b)), np.max(np.abs(A.T @ A)) * np.max(np.abs(du)), 1e-300)
    span = np.maximum(p.du_max - p.du_min, 1e-300)
    at_lo = du <= p.du_min + 1e-12 * span
    at_hi = du >= p.du_max - 1e-12 * span
    fixed = at_lo & at_hi
    free = ~(at_lo | at_hi)
    stat = float(np.max(np.abs(g[free]), initial=0.0)) / scale
    # at a lower bound the cost may only grow upward: g >= 0; upper: g <= 0
    sign = np.concatenate((np.maximum(-g[at_lo & ~fixed], 0.0), np.maximum(g[at_hi & ~fixed], 0.0)))
    sign_v = float(np.max(sign, initial=0.0)) / scale
    bound_v = float(np.max(np.concatenate((p.du_min - du, du - p.du_max)), initial=0.0))
    return KKTReport(stat < tol and sign_v < tol and bound_v <= 0.0, stat, sign_v, bound_v)
