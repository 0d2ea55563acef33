"""Exact Riemann fans for the two convective families.

Family 1 has flux +alpha u^2/2 (shock when ul > ur); family 3 has flux
-alpha u^2/2 and is the x-reflection of family 1 (shock when ul < ur).
Evaluation on the shock line itself returns the right state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RiemannFan:
    family: int
    alpha: float
    ul: float
    ur: float

    def __post_init__(self):
        if self.family not in (1, 3):
            raise ValueError(f"family must be 1 or 3, got {self.family}")
        if self.alpha <= 0.0:
            raise ValueError("alpha must be positive")

    @property
    def is_shock(self) -> bool:
        if self.family == 1:
            return self.ul > self.ur
        return self.ul < self.ur

    @property
    def shock_speed(self) -> float:
        if not self.is_shock:
            raise ValueError("not a shock")
        s = 0.5 * self.alpha * (self.ul + self.ur)
        return s if self.family == 1 else -s

    def edge_speeds(self) -> tuple[float, float]:
        """Leftmost and rightmost signal speeds of the fan."""
        if self.is_shock:
            s = self.shock_speed
            return s, s
        if self.family == 1:
            return self.alpha * self.ul, self.alpha * self.ur
        return -self.alpha * self.ul, -self.alpha * self.ur


def riemann_eval(fan: RiemannFan, xi):
    """Self-similar solution at xi = x/t."""
    xi = np.asarray(xi, dtype=float)
    a, ul, ur = fan.alpha, fan.ul, fan.ur
    if fan.family == 1:
        if ul > ur:
            s = 0.5 * a * (ul + ur)
            return np.where(xi < s, ul, ur)
        lo, hi = a * ul, a * ur
        return np.where(xi <= lo, ul, np.where(xi >= hi, ur, xi / a))
    if ul < ur:
        s = -0.5 * a * (ul + ur)
        return np.where(xi < s, ul, ur)
    lo, hi = -a * ul, -a * ur
    return np.where(xi <= lo, ul, np.where(xi >= hi, ur, -xi / a))


def sample_fans(family: int, alpha: float, ul, ur, xi: float) -> np.ndarray:
    """Vectorized riemann_eval over arrays of adjacent states at one xi."""
    ul = np.asarray(ul, dtype=float)
    ur = np.asarray(ur, dtype=float)
    if family == 1:
        shock = ul > ur
        s = 0.5 * alpha * (ul + ur)
        shock_val = np.where(xi < s, ul, ur)
        interior = xi / alpha
        rare_val = np.where(
            xi <= alpha * ul, ul, np.where(xi >= alpha * ur, ur, interior)
        )
        return np.where(shock, shock_val, rare_val)
    shock = ul < ur
    s = -0.5 * alpha * (ul + ur)
    shock_val = np.where(xi < s, ul, ur)
    interior = -xi / alpha
    rare_val = np.where(
        xi <= -alpha * ul, ul, np.where(xi >= -alpha * ur, ur, interior)
    )
    return np.where(shock, shock_val, rare_val)


def max_wave_speed(alpha: float, sup1: float, sup3: float) -> float:
    """Upper bound for every signal speed of both families."""
    return alpha * max(sup1, sup3)
