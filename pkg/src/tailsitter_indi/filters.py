"""Butterworth filters and the actuator lag model used for INDI synchronization.

Every signal that enters an INDI increment passes through the same
low-pass instance type, so measured accelerations and the actuator states
they are compared with carry identical delay.
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels
from .errors import SensorCorruptError

FLAP_RANGE = 9600.0
FLAP_DEFLECTION_DEG = 30.0


def butter2_lowpass_sos(cutoff_hz: float, sample_hz: float) -> np.ndarray:
    """Second-order Butterworth low-pass by the pre-warped bilinear transform."""
    _check_cutoff(cutoff_hz, sample_hz)
    k = math.tan(math.pi * cutoff_hz / sample_hz)
    norm = 1.0 / (1.0 + math.sqrt(2.0) * k + k * k)
    b0 = k * k * norm
    a1 = 2.0 * (k * k - 1.0) * norm
    a2 = (1.0 - math.sqrt(2.0) * k + k * k) * norm
    return np.array([[b0, 2.0 * b0, b0, 1.0, a1, a2]])


def butter4_highpass_sos(cutoff_hz: float, sample_hz: float) -> np.ndarray:
    """Fourth-order Butterworth high-pass as two biquads."""
    _check_cutoff(cutoff_hz, sample_hz)
    k = math.tan(math.pi * cutoff_hz / sample_hz)
    rows = []
    for m in (1, 2):
        # analog pole pair angle for section m of an order-4 Butterworth
        c = 2.0 * math.cos(math.pi * (2 * m - 1) / 8.0)
        norm = 1.0 / (1.0 + c * k + k * k)
        rows.append(
            [norm, -2.0 * norm, norm, 1.0, 2.0 * (k * k - 1.0) * norm, (1.0 - c * k + k * k) * norm]
        )
    return np.array(rows)


def _check_cutoff(cutoff_hz, sample_hz):
    if not 0.0 < cutoff_hz < 0.5 * sample_hz:
        raise ValueError(f"cutoff {cutoff_hz} Hz must lie in (0, {0.5 * sample_hz}) Hz")


class SosFilter:
    """Multichannel cascade of biquads with warm-start initialization.

    The first sample loads the state with the steady state for that input,
    so a constant signal passes without a start-up transient.
    """

    def __init__(self, sos: np.ndarray, n_channels: int = 1):
        self.sos = np.ascontiguousarray(sos, dtype=float)
        self.n_channels = int(n_channels)
        self.zi = np.zeros((self.sos.shape[0], 2, self.n_channels))
        self.initialized = False
        self._y = np.zeros(self.n_channels)

    def reset(self, x0=None) -> None:
        if x0 is None:
            self.zi[:] = 0.0
            self.initialized = False
            return
        level = self._as_channels(x0)
        kernels.sos_steady_state(self.sos, self.zi, level)
        self.initialized = True

    def _as_channels(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=float).reshape(-1)
        if arr.shape[0] == 1 and self.n_channels > 1:
            arr = np.full(self.n_channels, arr[0])
        if arr.shape[0] != self.n_channels:
            raise ValueError(f"expected {self.n_channels} channels, got {arr.shape[0]}")
        if not np.all(np.isfinite(arr)):
            raise SensorCorruptError("sensor corrupt: non-finite filter input")
        return arr

    def step(self, x):
        """Filter one sample; returns a float for 1 channel, else an array."""
        arr = self._as_channels(x)
        if not self.initialized:
            self.reset(arr)
        y = self._y
        kernels.sos_step(self.sos, self.zi, arr, y)
        if self.n_channels == 1:
            return float(y[0])
        return y.copy()

    def process(self, xs) -> np.ndarray:
        """Filter a block of samples shaped (n,) or (n, n_channels)."""
        xs = np.asarray(xs, dtype=float)
        squeeze = xs.ndim == 1
        block = xs.reshape(xs.shape[0], -1)
        if block.shape[1] != self.n_channels:
            raise ValueError(f"expected {self.n_channels} channels, got {block.shape[1]}")
        if block.shape[0] == 0:
            return xs.copy()
        if not np.all(np.isfinite(block)):
            raise SensorCorruptError("sensor corrupt: non-finite filter input")
        if not self.initialized:
            self.reset(block[0])
        out = np.empty_like(block)
        kernels.sos_block(self.sos, self.zi, np.ascontiguousarray(block), out)
        return out[:, 0] if squeeze else out


class Butter2Lowpass(SosFilter):
    def __init__(self, cutoff_hz: float = 5.0, sample_hz: float = 500.0, n_channels: int = 1):
        super().__init__(butter2_lowpass_sos(cutoff_hz, sample_hz), n_channels)
        self.cutoff_hz = cutoff_hz
        self.sample_hz = sample_hz


class Butter4Highpass(SosFilter):
    def __init__(self, cutoff_hz: float = 0.5, sample_hz: float = 500.0, n_channels: int = 1):
        super().__init__(butter4_highpass_sos(cutoff_hz, sample_hz), n_channels)
        self.cutoff_hz = cutoff_hz
        self.sample_hz = sample_hz


def lowpass2_step(filt: Butter2Lowpass, x):
    return filt.step(x)


def highpass4_step(filt: Butter4Highpass, x):
    return filt.step(x)


def flap_rate_limit_units(deg_per_s: float = 272.0) -> float:
    """Flap rate limit in command units per second (9600 units = 30 deg)."""
    return deg_per_s / FLAP_DEFLECTION_DEG * FLAP_RANGE


class ActuatorModel:
    """Discrete first-order actuator lag A(z) = a / (z - (1 - a)) with rate limit.

    ``a`` and ``rate_limit`` (command units per second, ``inf`` for none)
    are per channel.
    """

    def __init__(self, a, rate_limit, sample_hz: float = 500.0, u0=None):
        self.a = np.atleast_1d(np.asarray(a, dtype=float)).copy()
        n = self.a.shape[0]
        rate = np.broadcast_to(np.asarray(rate_limit, dtype=float), (n,))
        self.rate_limit = rate.copy()
        self.sample_hz = float(sample_hz)
        self.max_step = self.rate_limit / self.sample_hz
        self.u = np.zeros(n) if u0 is None else np.asarray(u0, dtype=float).reshape(n).copy()

    @classmethod
    def tailsitter(cls, sample_hz: float = 500.0, u0=None) -> "ActuatorModel":
        """Two rate-limited flaps (a = 0.1) and two motors (a = 0.045)."""
        flap = flap_rate_limit_units()
        return cls([0.1, 0.1, 0.045, 0.045], [flap, flap, np.inf, np.inf], sample_hz, u0)

    def step(self, u_c) -> np.ndarray:
        u_c = np.asarray(u_c, dtype=float).reshape(self.u.shape)
        kernels.actuator_step(self.u, u_c, self.a, self.max_step)
        return self.u.copy()


def actuator_step(model: ActuatorModel, u_c):
    return model.step(u_c)
