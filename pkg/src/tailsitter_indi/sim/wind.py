"""Wind field: constant component plus an optional 1-cosine gust."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def wind_from(speed: float, from_deg: float) -> np.ndarray:
    """NED air velocity for wind of ``speed`` blowing from bearing ``from_deg``."""
    a = math.radians(from_deg)
    return np.array([-speed * math.cos(a), -speed * math.sin(a), 0.0])


@dataclass
class WindConfig:
    speed: float = 0.0
    from_deg: float = 0.0
    gust_peak: float = 0.0  # m/s
    gust_start: float = 0.0
    gust_length: float = 0.0  # s
    gust_from_deg: float = 0.0

    @classmethod
    def preset(cls, name: str) -> "WindConfig":
        presets = {
            "calm": cls(),
            "constant_6_7_from_-70": cls(speed=6.7, from_deg=-70.0),
            "constant_5_from_north": cls(speed=5.0, from_deg=0.0),
            "gust_5": cls(gust_peak=5.0, gust_start=5.0, gust_length=2.0),
        }
        if name not in presets:
            raise KeyError(f"unknown wind preset {name!r}; known: {sorted(presets)}")
        return presets[name]


def gust_profile(t, peak: float, start: float, length: float) -> np.ndarray:
    """(peak/2)(1 - cos(2 pi (t - start)/length)) inside the gust window, else 0."""
    t = np.asarray(t, dtype=float)
    if length <= 0.0 or peak == 0.0:
        return np.zeros_like(t)
    tau = (t - start) / length
    inside = (tau >= 0.0) & (tau <= 1.0)
    return np.where(inside, 0.5 * peak * (1.0 - np.cos(2.0 * np.pi * tau)), 0.0)


def wind_field(t, config: WindConfig | None = None) -> np.ndarray:
    """NED wind at time(s) ``t``; shape (3,) for a scalar, (n, 3) for an array."""
    config = config or WindConfig()
    scalar = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    w = np.tile(wind_from(config.speed, config.from_deg), (tt.shape[0], 1))
    if config.gust_peak != 0.0 and config.gust_length > 0.0:
        g = gust_profile(tt, config.gust_peak, config.gust_start, config.gust_length)
        w += g[:, None] * wind_from(1.0, config.gust_from_deg)[None, :]
    return w[0] if scalar else w
