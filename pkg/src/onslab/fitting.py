"""Small least-squares helpers shared by the decay and sweep harnesses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LineFit", "loglog_fit", "linear_fit"]


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    r_squared: float

    @property
    def reliable(self):
        return self.r_squared >= 0.9


def linear_fit(x, y) -> LineFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two samples to fit a line")
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return LineFit(float(slope), float(intercept), r2)


def loglog_fit(x, y) -> LineFit:
    """Least-squares line through (log x, log y); requires positive data."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive samples")
    return linear_fit(np.log(x), np.log(y))
