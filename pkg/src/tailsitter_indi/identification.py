"""Offline least-squares fits on flight logs.

* control effectiveness: slope of changes in filtered angular acceleration
  against changes in filtered inputs, per steady segment, plus an a + b V^2
  law across segments;
* sideslip: beta against lateral specific force in three model forms;
* flap lift: body-X acceleration with and without the flap inputs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .filters import Butter2Lowpass

COND_LIMIT = 1e10


class InsufficientExcitation(ValueError):
    """The regressors do not vary enough to determine the coefficients."""


class RankWarning(UserWarning):
    pass


def lstsq(A, b, cond_limit: float = COND_LIMIT):
    """Solve min ||A x - b|| by normal equations, or by SVD when A^T A is ill conditioned.

    Returns (x, cond, method) with ``cond`` the condition number of A^T A.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    AtA = A.T @ A
    cond = float(np.linalg.cond(AtA)) if AtA.size else math.inf
    if math.isfinite(cond) and cond < cond_limit:
        return np.linalg.solve(AtA, A.T @ b), cond, "normal"
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    return x, cond, "svd"


def split_train_test(n: int, train_fraction: float = 0.8) -> tuple[slice, slice]:
    """First 80 % for training, the rest held out."""
    k = int(math.floor(train_fraction * n))
    return slice(0, k), slice(k, n)


def _rms(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sqrt(np.mean(x * x))) if x.size else float("nan")


@dataclass
class FitReport:
    name: str
    regressors: tuple
    coefficients: np.ndarray
    train_rms: float
    test_rms: float
    train: slice
    test: slice
    cond: float
    method: str
    warnings: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "coefficients": {r: float(c) for r, c in zip(self.regressors, self.coefficients)},
            "train_rms": self.train_rms,
            "test_rms": self.test_rms,
            "train": [self.train.start, self.train.stop],
            "test": [self.test.start, self.test.stop],
            "cond": self.cond,
            "method": self.method,
            "warnings": list(self.warnings),
        }


def fit_linear(name: str, A, y, regressors, train_fraction: float = 0.8) -> FitReport:
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    train, test = split_train_test(len(y), train_fraction)
    x, cond, method = lstsq(A[train], y[train])
    notes = []
    if method != "normal":
        msg = f"{name}: regressors nearly collinear (cond {cond:.3g}); minimum-norm solution used"
        warnings.warn(msg, RankWarning, stacklevel=3)
        notes.append(msg)
    return FitReport(name, tuple(regressors), x, _rms(A[train] @ x - y[train]), _rms(A[test] @ x - y[test]),
                     train, test, cond, method, notes)


# ---------------------------------------------------------------- segments


@dataclass
class LogSegment:
    """A slice of a log with the signals the fits need (all filtered, aligned)."""

    t: np.ndarray
    omega_dot: np.ndarray  # (n, 3)
    u: np.ndarray  # (n, 4)
    theta: np.ndarray
    V: np.ndarray
    q: np.ndarray | None = None
    acc_bx: np.ndarray | None = None
    f_y: np.ndarray | None = None
    beta: np.ndarray | None = None

    @classmethod
    def from_columns(cls, cols: dict, start: int = 0, stop: int | None = None) -> "LogSegment":
        s = slice(start, stop)

        def get(name):
            return None if name not in cols else np.asarray(cols[name], dtype=float)[s]

        return cls(
            t=get("t"),
            omega_dot=np.column_stack([get(f"omega_dot_f_{a}") for a in "pqr"]),
            u=np.column_stack([get(f"u_f{i}") for i in range(4)]),
            theta=get("theta"),
            V=get("V"),
            q=get("omega_f_q"),
            acc_bx=get("acc_bx_f"),
            f_y=get("f_y_f"),
            beta=get("beta"),
        )


def select_segments(t, theta, V, window: float = 10.0, theta_std_max_deg: float = 5.0,
                    V_std_max: float = 1.0) -> list[tuple[int, int]]:
    """Non-overlapping windows of ``window`` seconds in which pitch and airspeed are roughly constant."""
    t = np.asarray(t, dtype=float)
    theta = np.asarray(theta, dtype=float)
    V = np.asarray(V, dtype=float)
    if len(t) < 2:
        return []
    dt = float(np.median(np.diff(t)))
    n = max(2, int(round(window / dt)))
    out = []
    i = 0
    lim = math.radians(theta_std_max_deg)
    while i + n <= len(t):
        if np.std(theta[i:i + n]) < lim and np.std(V[i:i + n]) < V_std_max:
            out.append((i, i + n))
            i += n
        else:
            i += max(1, n // 10)
    return out


# ---------------------------------------------------------------- effectiveness


@dataclass
class EffectivenessFit:
    value: np.ndarray  # one entry per input column
    report: FitReport
    V_mean: float = float("nan")


def fit_effectiveness(omega_dot, u, combine=None, min_excitation: float = 1e-9, V=None) -> EffectivenessFit:
    """Least-squares slope of changes in angular acceleration against changes in inputs.

    ``omega_dot`` is one axis, shape (n,); ``u`` is (n,) or (n, k). With
    ``combine`` (length k) the inputs are first reduced to the single
    regressor ``u @ combine``, e.g. (1, -1) for the antisymmetric flap pair.
    """
    y = np.asarray(omega_dot, dtype=float)
    U = np.asarray(u, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    if combine is not None:
        U = (U @ np.asarray(combine, dtype=float))[:, None]
    dy = np.diff(y)
    dU = np.diff(U, axis=0)
    scale = np.max(np.abs(U)) if U.size else 0.0
    for j in range(dU.shape[1]):
        if not np.any(np.abs(dU[:, j]) > min_excitation * max(scale, 1.0)):
            raise InsufficientExcitation(f"insufficient excitation: input column {j} does not change")
    if dU.shape[1] > 1 and np.linalg.matrix_rank(dU) < dU.shape[1]:
        raise InsufficientExcitation("insufficient excitation: input changes are collinear")
    names = tuple(f"du{j}" for j in range(dU.shape[1]))
    rep = fit_linear("effectiveness", dU, dy, names)
    V_mean = float(np.mean(V)) if V is not None else float("nan")
    return EffectivenessFit(rep.coefficients.copy(), rep, V_mean)


def fit_airspeed_law(values, V) -> tuple[float, float]:
    """Fit G(V) = a + b V^2 across segment estimates; returns (a, b)."""
    V = np.asarray(V, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(np.unique(np.round(V * V, 9))) < 2:
        raise InsufficientExcitation("insufficient excitation: need segments at two or more airspeeds")
    A = np.column_stack([np.ones_like(V), V * V])
    x, _, _ = lstsq(A, values)
    return float(x[0]), float(x[1])


# ---------------------------------------------------------------- sideslip


@dataclass
class SideslipReport:
    v_squared: FitReport  # beta = c1 f_y / V^2 + b1
    linear: FitReport  # beta = c2 f_y + b2
    over_v: FitReport  # beta = c f_y / V + b

    @property
    def c2(self) -> float:
        return float(self.linear.coefficients[0])

    @property
    def b2(self) -> float:
        return float(self.linear.coefficients[1])

    def ranking(self) -> list[str]:
        """Model forms from lowest to highest held-out RMS."""
        fits = [self.v_squared, self.linear, self.over_v]
        return [f.name for f in sorted(fits, key=lambda f: f.test_rms)]

    def as_dict(self) -> dict:
        return {f.name: f.as_dict() for f in (self.v_squared, self.linear, self.over_v)} | {"ranking": self.ranking()}


def fit_sideslip(f_y, V, beta, train_fraction: float = 0.8) -> SideslipReport:
    f_y = np.asarray(f_y, dtype=float)
    V = np.asarray(V, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if np.any(V <= 0.0):
        raise ValueError("sideslip fits need positive airspeed samples")
    ones = np.ones_like(f_y)
    r1 = fit_linear("v_squared", np.column_stack([f_y / (V * V), ones]), beta, ("c1", "b1"), train_fraction)
    r2 = fit_linear("linear", np.column_stack([f_y, ones]), beta, ("c2", "b2"), train_fraction)
    r3 = fit_linear("over_v", np.column_stack([f_y / V, ones]), beta, ("c", "b"), train_fraction)
    return SideslipReport(r1, r2, r3)


# ---------------------------------------------------------------- flap lift


@dataclass
class FlapLiftReport:
    simple: FitReport  # [1 q theta]
    with_flaps: FitReport  # [1 q theta u_f0 u_f1]

    @property
    def G_flap(self) -> float:
        """Effectiveness of (-u_f0 + u_f1) on body-X acceleration."""
        c = self.with_flaps.coefficients
        return float(0.5 * (c[4] - c[3]))

    @property
    def residual_ratio(self) -> float:
        return self.simple.train_rms / self.with_flaps.train_rms if self.with_flaps.train_rms > 0 else math.inf

    def as_dict(self) -> dict:
        return {"simple": self.simple.as_dict(), "with_flaps": self.with_flaps.as_dict(),
                "G_flap": self.G_flap, "residual_ratio": self.residual_ratio}


def fit_flap_lift(acc_bx, q, theta, u_f0, u_f1, train_fraction: float = 0.8) -> FlapLiftReport:
    acc_bx = np.asarray(acc_bx, dtype=float)
    ones = np.ones_like(acc_bx)
    base = [ones, np.asarray(q, dtype=float), np.asarray(theta, dtype=float)]
    A1 = np.column_stack(base)
    A2 = np.column_stack(base + [np.asarray(u_f0, dtype=float), np.asarray(u_f1, dtype=float)])
    r1 = fit_linear("simple", A1, acc_bx, ("1", "q", "theta"), train_fraction)
    r2 = fit_linear("with_flaps", A2, acc_bx, ("1", "q", "theta", "u_f0", "u_f1"), train_fraction)
    return FlapLiftReport(r1, r2)


# ---------------------------------------------------------------- synthetic generators


def _excitation(rng, n: int, amplitude: float, hold: int = 50) -> np.ndarray:
    """Piecewise-constant random steps, each held ``hold`` samples."""
    steps = rng.uniform(-amplitude, amplitude, size=n // hold + 1)
    return np.repeat(steps, hold)[:n]


def synthetic_effectiveness_log(G: float, n: int = 5000, dt: float = 0.002, gyro_sigma: float = 0.0,
                                amplitude: float = 3000.0, seed: int = 0, lowpass_hz: float = 5.0):
    """Pitch-axis log generated by omega_dot = G (u0 - u1), through the controller's filter chain.

    Returns (omega_dot_f, u_f) with u_f of shape (n, 2). With ``gyro_sigma = 0``
    the relation is exact up to rounding.
    """
    rng = np.random.default_rng(seed)
    u0 = _excitation(rng, n + 1, amplitude)
    u1 = -u0 + _excitation(rng, n + 1, 0.1 * amplitude)
    # start from rest so the warm-started filters agree with the integrated rate
    u0[:50] = 0.0
    u1[:50] = 0.0
    omega = np.concatenate([[0.0], np.cumsum(dt * G * (u0 - u1))[:-1]])
    gyro = omega + gyro_sigma * rng.standard_normal(n + 1)
    lp = Butter2Lowpass(lowpass_hz, 1.0 / dt, n_channels=3)
    filt = lp.process(np.column_stack([gyro, u0, u1]))
    omega_dot_f = np.diff(filt[:, 0]) / dt
    u_f = filt[:-1, 1:3]
    return omega_dot_f, u_f


def synthetic_sideslip_log(c2: float, b2: float, n: int = 20000, dt: float = 0.002, accel_sigma: float = 0.0,
                           seed: int = 0, V_range=(12.0, 20.0)):
    """beta and a lateral specific force with beta = c2 f_y + b2 exactly (before noise)."""
    rng = np.random.default_rng(seed)
    beta = np.repeat(rng.uniform(-0.15, 0.15, size=n // 200 + 1), 200)[:n]
    f_true = (beta - b2) / c2
    f_y = f_true + accel_sigma * rng.standard_normal(n)
    V = np.repeat(rng.uniform(*V_range, size=n // 200 + 1), 200)[:n]
    return f_y, V, beta


def synthetic_flap_log(G_flap: float, B=(0.3, -0.4, 2.0), n: int = 20000, dt: float = 0.002,
                       accel_sigma: float = 0.0, seed: int = 0):
    """Body-X acceleration = [1 q theta] B + G_flap (-u0 + u1) (+ noise)."""
    rng = np.random.default_rng(seed)
    q = np.repeat(rng.uniform(-1.0, 1.0, size=n // 100 + 1), 100)[:n]
    theta = np.repeat(rng.uniform(-0.3, 0.3, size=n // 150 + 1), 150)[:n]
    u0 = np.repeat(rng.uniform(-4000, 4000, size=n // 60 + 1), 60)[:n]
    u1 = np.repeat(rng.uniform(-4000, 4000, size=n // 70 + 1), 70)[:n]
    acc = B[0] + B[1] * q + B[2] * theta + G_flap * (-u0 + u1) + accel_sigma * rng.standard_normal(n)
    return acc, q, theta, u0, u1


# ---------------------------------------------------------------- whole-log pipeline


def identify_log(cols: dict, window: float = 10.0, theta_std_max_deg: float = 5.0, V_std_max: float = 1.0,
                 cruise_V_min: float = 12.0, hover_V_max: float = 6.0) -> dict:
    """Run every fit the log supports. ``cols`` maps CSV column names to arrays.

    Returns a plain dict (JSON-ready) with one entry per fit; fits the log
    cannot support carry an ``error`` string instead of coefficients.
    """
    t = np.asarray(cols["t"], dtype=float)
    theta = np.asarray(cols["theta"], dtype=float)
    V = np.asarray(cols["V"], dtype=float)
    out: dict = {"n_samples": int(len(t)), "segments": []}

    segs = select_segments(t, theta, V, window, theta_std_max_deg, V_std_max)
    pitch_vals, pitch_V = [], []
    for a, b in segs:
        seg = LogSegment.from_columns(cols, a, b)
        entry = {"t0": float(seg.t[0]), "t1": float(seg.t[-1]), "theta_mean_deg": float(np.degrees(seg.theta.mean())),
                 "V_mean": float(seg.V.mean())}
        for key, axis, combine in (("G21", 1, (1.0, -1.0)), ("G31", 2, (1.0, 1.0))):
            try:
                fit = fit_effectiveness(seg.omega_dot[:, axis], seg.u[:, :2], combine=combine, V=seg.V)
                entry[key] = float(fit.value[0])
                entry[f"{key}_test_rms"] = fit.report.test_rms
            except InsufficientExcitation as exc:
                entry[key] = None
                entry[f"{key}_error"] = str(exc)
        if entry.get("G21") is not None:
            pitch_vals.append(entry["G21"])
            pitch_V.append(entry["V_mean"])
        out["segments"].append(entry)
    try:
        a, b = fit_airspeed_law(pitch_vals, pitch_V)
        out["G21_airspeed_law"] = {"a": a, "b": b}
    except InsufficientExcitation as exc:
        out["G21_airspeed_law"] = {"error": str(exc)}

    valid = np.asarray(cols.get("V_valid", np.ones_like(V)), dtype=float) > 0.5
    cruise = valid & (V > cruise_V_min)
    if cruise.sum() > 10 and "f_y_f" in cols and np.ptp(np.asarray(cols["f_y_f"])[cruise]) > 0.0:
        rep = fit_sideslip(np.asarray(cols["f_y_f"])[cruise], V[cruise], np.asarray(cols["beta"])[cruise])
        out["sideslip"] = rep.as_dict() | {"c2": rep.c2, "b2": rep.b2, "n": int(cruise.sum())}
    else:
        out["sideslip"] = {"error": "no cruise samples with varying lateral specific force"}

    hover = V < hover_V_max
    if hover.sum() > 10 and "acc_bx_f" in cols:
        try:
            rep = fit_flap_lift(np.asarray(cols["acc_bx_f"])[hover], np.asarray(cols["omega_f_q"])[hover],
                                theta[hover], np.asarray(cols["u_f0"])[hover], np.asarray(cols["u_f1"])[hover])
            out["flap_lift"] = rep.as_dict() | {"n": int(hover.sum())}
        except np.linalg.LinAlgError as exc:
            out["flap_lift"] = {"error": str(exc)}
    else:
        out["flap_lift"] = {"error": "no hover samples"}
    return out
