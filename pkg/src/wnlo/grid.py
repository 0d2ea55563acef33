"""Staggered periodic grid on [0, 1) and piecewise-constant profiles.

Cell centers alternate between odd and even multiples of dx from one
time level to the next. A level with parity p (level index mod 2) has
2^(N-1) cells of width 2*dx centered at (2j + 1 - p)*dx.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Mesh constants shared by every profile of a run.

    Attributes:
        N: refinement level; dx = 2**-N.
        lam: grid speed dx/dt (must dominate all wave speeds).
        alpha: convective coefficient, > 0.
        beta: coupling coefficient, >= 0.
    """

    N: int
    lam: float
    alpha: float
    beta: float

    def __post_init__(self):
        if self.N < 2:
            raise ValueError(f"N must be >= 2, got {self.N}")
        if self.lam <= 0.0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if self.alpha <= 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.beta < 0.0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")

    @property
    def dx(self) -> float:
        return 2.0 ** (-self.N)

    @property
    def dt(self) -> float:
        return self.dx / self.lam

    @property
    def cells(self) -> int:
        return 2 ** (self.N - 1)


@dataclass
class PeriodicProfile:
    """One field at one time level: 2^(N-1) cell averages on [0, 1).

    level_parity selects the staggering: parity 0 centers sit at odd
    multiples of dx, parity 1 centers at even multiples.
    """

    N: int
    level_parity: int
    values: np.ndarray

    def __post_init__(self):
        if self.level_parity not in (0, 1):
            raise ValueError(f"level_parity must be 0 or 1, got {self.level_parity}")
        self.values = np.asarray(self.values, dtype=float)
        m = 2 ** (self.N - 1)
        if self.values.shape != (m,):
            raise ValueError(
                f"values must have shape ({m},) for N={self.N}, got {self.values.shape}"
            )

    @property
    def dx(self) -> float:
        return 2.0 ** (-self.N)

    def center_indices(self) -> np.ndarray:
        """Integer cell centers m_j = 2j + 1 - parity."""
        m = 2 ** (self.N - 1)
        return 2 * np.arange(m) + (1 - self.level_parity)

    def centers(self) -> np.ndarray:
        return self.center_indices() * self.dx

    def eval_at(self, x) -> np.ndarray:
        """Step-function value at arbitrary points (periodic in x).

        Parity-p cell j covers [(2j - p) dx, (2j - p + 2) dx).
        """
        x = np.asarray(x, dtype=float)
        m = self.values.size
        j = np.floor((x / self.dx + self.level_parity) / 2.0).astype(int) % m
        return self.values[j]


def total_variation(profile: PeriodicProfile) -> float:
    """Periodic total variation, wrap jump included."""
    v = profile.values
    return float(np.sum(np.abs(np.roll(v, -1) - v)))


def sup_norm(profile: PeriodicProfile) -> float:
    return float(np.max(np.abs(profile.values))) if profile.values.size else 0.0


def period_mean(profile: PeriodicProfile) -> float:
    """Integral over the period (period length is 1, so also the mean)."""
    return float(2.0 * profile.dx * np.sum(profile.values))


def l1_distance(a: PeriodicProfile, b: PeriodicProfile) -> float:
    """L1 distance of the two step functions over [0, 1).

    Profiles on opposite parities have cells offset by dx; each cell of
    one overlaps two cells of the other on intervals of width dx.
    """
    if a.N != b.N:
        raise ValueError(f"profiles live on different grids: N={a.N} vs N={b.N}")
    dx = a.dx
    if a.level_parity == b.level_parity:
        return float(2.0 * dx * np.sum(np.abs(a.values - b.values)))
    if a.level_parity == 1:
        a, b = b, a
    # a has parity 0 (centers 2j+1), b parity 1 (centers 2j);
    # a-cell j overlaps b-cells j and j+1.
    av, bv = a.values, b.values
    return float(dx * (np.sum(np.abs(av - bv)) + np.sum(np.abs(av - np.roll(bv, -1)))))
