"""Coupling kernel derived from the fixed entropy-wave profile.

The profile sigma2 has period 1/2; the kernel is K(x) =
(beta/4) * sigma2'(x/2), period 1. Discrete cell values are exact
integrals of K over cells of width 2*dx, so each parity class of
cells telescopes to a zero sum and its absolute sum approaches
(beta/2) * E, where E is the L1 norm of sigma2' over one period.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import PeriodicProfile


@dataclass(frozen=True)
class EntropyWaveSpec:
    """The fixed profile sigma2 on [0, 1/2).

    kinds:
        trig_polynomial: cos_coeffs/sin_coeffs for modes cos(4 pi k x),
            sin(4 pi k x), index k-1 holding mode k.
        piecewise_linear: breaks (in [0, 1/2), starting at 0, increasing)
            and values; linear between, wrapping periodically.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("trig_polynomial", "piecewise_linear"):
            raise ValueError(f"unknown entropy wave kind {self.kind!r}")
        if self.kind == "piecewise_linear":
            br = np.asarray(self.params["breaks"], dtype=float)
            vals = np.asarray(self.params["values"], dtype=float)
            if br.ndim != 1 or br.size != vals.size or br.size < 2:
                raise ValueError("piecewise_linear needs matching breaks/values, >= 2")
            if br[0] != 0.0 or np.any(np.diff(br) <= 0) or br[-1] >= 0.5:
                raise ValueError("breaks must start at 0, increase, stay below 1/2")

    def value(self, x):
        x = np.asarray(x, dtype=float)
        y = x - 0.5 * np.floor(2.0 * x)
        if self.kind == "trig_polynomial":
            out = np.zeros_like(y)
            for i, a in enumerate(self.params.get("cos_coeffs", ())):
                out += a * np.cos(4.0 * np.pi * (i + 1) * y)
            for i, b in enumerate(self.params.get("sin_coeffs", ())):
                out += b * np.sin(4.0 * np.pi * (i + 1) * y)
            return out
        br = np.asarray(self.params["breaks"], dtype=float)
        vals = np.asarray(self.params["values"], dtype=float)
        bx = np.append(br, 0.5)
        bv = np.append(vals, vals[0])
        idx = np.searchsorted(bx, y, side="right") - 1
        idx = np.clip(idx, 0, br.size - 1)
        t = (y - bx[idx]) / (bx[idx + 1] - bx[idx])
        return bv[idx] * (1.0 - t) + bv[idx + 1] * t

    def derivative(self, x):
        """sigma2'; the right-hand slope at piecewise-linear kinks."""
        x = np.asarray(x, dtype=float)
        y = x - 0.5 * np.floor(2.0 * x)
        if self.kind == "trig_polynomial":
            out = np.zeros_like(y)
            for i, a in enumerate(self.params.get("cos_coeffs", ())):
                w = 4.0 * np.pi * (i + 1)
                out += -a * w * np.sin(w * y)
            for i, b in enumerate(self.params.get("sin_coeffs", ())):
                w = 4.0 * np.pi * (i + 1)
                out += b * w * np.cos(w * y)
            return out
        br = np.asarray(self.params["breaks"], dtype=float)
        vals = np.asarray(self.params["values"], dtype=float)
        bx = np.append(br, 0.5)
        bv = np.append(vals, vals[0])
        slopes = np.diff(bv) / np.diff(bx)
        idx = np.searchsorted(bx, y, side="right") - 1
        idx = np.clip(idx, 0, br.size - 1)
        return slopes[idx]

    def l1_mass(self) -> float:
        """E: integral of |sigma2'| over one period, computed exactly as
        the total variation of sigma2 between derivative sign changes."""
        if self.kind == "piecewise_linear":
            vals = np.asarray(self.params["values"], dtype=float)
            return float(np.sum(np.abs(np.roll(vals, -1) - vals)))
        kmax = max(
            len(self.params.get("cos_coeffs", ())),
            len(self.params.get("sin_coeffs", ())),
            1,
        )
        q = 4096 * kmax
        xs = np.linspace(0.0, 0.5, q, endpoint=False)
        d = self.derivative(xs)
        zeros = []
        for i in range(q):
            a, b = d[i], d[(i + 1) % q]
            if a == 0.0:
                zeros.append(xs[i])
            elif (a < 0.0) != (b < 0.0) and b != 0.0:
                lo, hi = xs[i], xs[i] + 0.5 / q
                for _ in range(80):
                    mid = 0.5 * (lo + hi)
                    if (float(self.derivative(mid)) < 0.0) == (a < 0.0):
                        lo = mid
                    else:
                        hi = mid
                zeros.append(0.5 * (lo + hi))
        if not zeros:
            return abs(float(self.value(0.5 - 1e-12)) - float(self.value(0.0)))
        pts = np.sort(np.asarray(zeros))
        segs = np.append(pts, pts[0] + 0.5)
        v = self.value(segs)
        return float(np.sum(np.abs(np.diff(v))))

    def sup_derivative(self) -> float:
        """E tilde: max of |sigma2'| over a period."""
        if self.kind == "piecewise_linear":
            br = np.asarray(self.params["breaks"], dtype=float)
            vals = np.asarray(self.params["values"], dtype=float)
            bx = np.append(br, 0.5)
            bv = np.append(vals, vals[0])
            return float(np.max(np.abs(np.diff(bv) / np.diff(bx))))
        kmax = max(
            len(self.params.get("cos_coeffs", ())),
            len(self.params.get("sin_coeffs", ())),
            1,
        )
        q = 8192 * kmax
        xs = np.linspace(0.0, 0.5, q, endpoint=False)
        d = np.abs(self.derivative(xs))
        j = int(np.argmax(d))
        h = 0.5 / q
        # parabolic refinement around the grid maximum
        xm = xs[j]
        fm1 = float(np.abs(self.derivative(xm - h)))
        f0 = float(d[j])
        fp1 = float(np.abs(self.derivative(xm + h)))
        denom = fm1 - 2.0 * f0 + fp1
        if denom < 0.0:
            t = 0.5 * (fm1 - fp1) / denom
            t = float(np.clip(t, -1.0, 1.0))
            cand = float(np.abs(self.derivative(xm + t * h)))
            return max(f0, cand)
        return f0


def kernel_value(spec: EntropyWaveSpec, beta: float, x):
    """Pointwise K(x) = (beta/4) sigma2'(x/2)."""
    return 0.25 * beta * spec.derivative(np.asarray(x, dtype=float) / 2.0)


@dataclass
class KernelTable:
    """Cell integrals of K on the dx-grid plus the coupling constants.

    Kcells[m] holds the integral of K over [(m-1)dx, (m+1)dx]; only one
    parity class of cells ever enters the evolution at a given level.
    """

    N: int
    Kcells: np.ndarray
    E: float
    Etilde: float
    alpha: float
    beta: float

    @property
    def dx(self) -> float:
        return 2.0 ** (-self.N)

    def even_cells(self) -> np.ndarray:
        return self.Kcells[0::2]

    def parity_sum(self, parity: int) -> float:
        import math

        return math.fsum(self.Kcells[parity::2].tolist())

    def parity_abs_sum(self, parity: int) -> float:
        return float(np.sum(np.abs(self.Kcells[parity::2])))

    def coupling_rate(self) -> float:
        """Two-period absolute kernel mass; the discrete growth rate."""
        return float(2.0 * np.sum(np.abs(self.Kcells[0::2])))


def build_kernel_table(
    spec: EntropyWaveSpec, alpha: float, beta: float, N: int
) -> KernelTable:
    """Exact cell integrals via the antiderivative of K, which is
    (beta/2) sigma2(x/2). Shared endpoint samples make each parity
    class telescope to zero at machine precision."""
    n_cells = 2**N
    r = np.arange(n_cells)
    samples = spec.value(r * (2.0 ** (-N - 1)))  # sigma2(r dx / 2)
    plus = samples[(r + 1) % n_cells]
    minus = samples[(r - 1) % n_cells]
    kc = 0.5 * beta * (plus - minus)
    return KernelTable(
        N=N,
        Kcells=kc,
        E=spec.l1_mass(),
        Etilde=spec.sup_derivative(),
        alpha=alpha,
        beta=beta,
    )


def convolve(
    table: KernelTable,
    profile: PeriodicProfile,
    sign: int,
    method: str = "fft",
) -> np.ndarray:
    """Nonlocal source values on the profile's own cells.

    g_i = sign * 2 * sum_j Kev[(i + j + c) mod M] h_j with c chosen so
    cell-center offsets line up; the factor 2 is the two periods of the
    integration range. Only even-index kernel cells appear because the
    two center indices always share parity.
    """
    if table.N != profile.N:
        raise ValueError(f"kernel table N={table.N} does not match profile N={profile.N}")
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    kev = table.even_cells()
    c = 1 - profile.level_parity
    b = np.roll(kev, -c)
    h = profile.values
    m = h.size
    if method == "fft":
        g = np.fft.ifft(np.conj(np.fft.fft(h)) * np.fft.fft(b)).real
    elif method == "direct":
        g = np.empty(m)
        for i in range(m):
            g[i] = np.sum(np.roll(b, -i) * h)
    else:
        raise ValueError(f"unknown method {method!r}")
    return (2.0 * sign) * g
