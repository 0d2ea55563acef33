"""Analytic 1-periodic field specifications used as initial data.

Each spec can evaluate itself, its derivative (smooth kinds only), and
its antiderivative from 0, and knows its exact total variation, sup
norm, and mean. Jump kinds are right-continuous at their jumps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_SMOOTH_KINDS = ("zero", "constant", "sine", "cosine", "trig")
_KINDS = _SMOOTH_KINDS + ("square", "sawtooth", "steps")


@dataclass(frozen=True)
class FieldSpec:
    """One analytic periodic field on [0, 1).

    kind / params:
        zero
        constant: value
        sine:     amplitude, mode (u = amplitude * sin(2 pi mode x))
        cosine:   amplitude, mode
        trig:     cos_coeffs, sin_coeffs (tuples, index k-1 is mode k)
        square:   amplitude, shift (u = +A on [shift, shift+1/2))
        sawtooth: slope, period (u = slope*((x mod p) - p/2))
        steps:    breaks, levels (value levels[i] on [breaks[i], breaks[i+1]))
    offset is added everywhere (used by mean centering).
    """

    kind: str
    params: dict = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}")
        if self.kind == "steps":
            br = np.asarray(self.params["breaks"], dtype=float)
            lv = np.asarray(self.params["levels"], dtype=float)
            if br.ndim != 1 or br.size != lv.size or br.size == 0:
                raise ValueError("steps needs equal-length nonempty breaks/levels")
            if br[0] != 0.0 or np.any(np.diff(br) <= 0) or br[-1] >= 1.0:
                raise ValueError("breaks must start at 0, increase, stay below 1")

    @property
    def is_smooth(self) -> bool:
        return self.kind in _SMOOTH_KINDS

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        y = x - np.floor(x)
        k = self.kind
        if k == "zero":
            out = np.zeros_like(y)
        elif k == "constant":
            out = np.full_like(y, self.params["value"])
        elif k == "sine":
            out = self.params["amplitude"] * np.sin(
                2.0 * np.pi * self.params.get("mode", 1) * y
            )
        elif k == "cosine":
            out = self.params["amplitude"] * np.cos(
                2.0 * np.pi * self.params.get("mode", 1) * y
            )
        elif k == "trig":
            out = np.zeros_like(y)
            for i, a in enumerate(self.params.get("cos_coeffs", ())):
                out += a * np.cos(2.0 * np.pi * (i + 1) * y)
            for i, b in enumerate(self.params.get("sin_coeffs", ())):
                out += b * np.sin(2.0 * np.pi * (i + 1) * y)
        elif k == "square":
            a = self.params["amplitude"]
            s = self.params.get("shift", 0.0)
            z = y - s - np.floor(y - s)
            out = np.where(z < 0.5, a, -a)
        elif k == "sawtooth":
            s0 = self.params["slope"]
            p = self.params.get("period", 1.0)
            z = y / p - np.floor(y / p)
            out = s0 * p * (z - 0.5)
        else:  # steps
            br = np.asarray(self.params["breaks"], dtype=float)
            lv = np.asarray(self.params["levels"], dtype=float)
            idx = np.searchsorted(br, y, side="right") - 1
            out = lv[idx]
        return out + self.offset

    def derivative(self, x):
        if not self.is_smooth:
            raise ValueError(f"kind {self.kind!r} has no classical derivative")
        x = np.asarray(x, dtype=float)
        y = x - np.floor(x)
        k = self.kind
        if k in ("zero", "constant"):
            return np.zeros_like(y)
        if k == "sine":
            w = 2.0 * np.pi * self.params.get("mode", 1)
            return self.params["amplitude"] * w * np.cos(w * y)
        if k == "cosine":
            w = 2.0 * np.pi * self.params.get("mode", 1)
            return -self.params["amplitude"] * w * np.sin(w * y)
        out = np.zeros_like(y)
        for i, a in enumerate(self.params.get("cos_coeffs", ())):
            w = 2.0 * np.pi * (i + 1)
            out += -a * w * np.sin(w * y)
        for i, b in enumerate(self.params.get("sin_coeffs", ())):
            w = 2.0 * np.pi * (i + 1)
            out += b * w * np.cos(w * y)
        return out

    def antiderivative(self, x):
        """Integral from 0 to x. Periodic only when the mean is zero."""
        x = np.asarray(x, dtype=float)
        per = np.floor(x)
        y = x - per
        m = self.mean()
        k = self.kind
        if k == "zero":
            base = np.zeros_like(y)
        elif k == "constant":
            base = self.params["value"] * y
        elif k == "sine":
            w = 2.0 * np.pi * self.params.get("mode", 1)
            base = self.params["amplitude"] * (1.0 - np.cos(w * y)) / w
        elif k == "cosine":
            w = 2.0 * np.pi * self.params.get("mode", 1)
            base = self.params["amplitude"] * np.sin(w * y) / w
        elif k == "trig":
            base = np.zeros_like(y)
            for i, a in enumerate(self.params.get("cos_coeffs", ())):
                w = 2.0 * np.pi * (i + 1)
                base += a * np.sin(w * y) / w
            for i, b in enumerate(self.params.get("sin_coeffs", ())):
                w = 2.0 * np.pi * (i + 1)
                base += b * (1.0 - np.cos(w * y)) / w
        elif k == "square":
            a = self.params["amplitude"]
            s = self.params.get("shift", 0.0)
            base = self._square_anti(y, a, s)
        elif k == "sawtooth":
            s0 = self.params["slope"]
            p = self.params.get("period", 1.0)
            z = y / p - np.floor(y / p)
            base = s0 * p * p * (0.5 * z * z - 0.5 * z)  # zero at each ramp end
        else:  # steps
            br = np.asarray(self.params["breaks"], dtype=float)
            lv = np.asarray(self.params["levels"], dtype=float)
            widths = np.diff(np.append(br, 1.0))
            cum = np.concatenate(([0.0], np.cumsum(lv * widths)))[:-1]
            idx = np.searchsorted(br, y, side="right") - 1
            base = cum[idx] + lv[idx] * (y - br[idx])
        # base covers one period of the offset-free field; whole periods
        # contribute its per-period mass, the offset contributes linearly.
        return base + per * (m - self.offset) + self.offset * x

    @staticmethod
    def _square_anti(y, a, s):
        # antiderivative of the shifted square wave, zero at x = 0
        def tri(z):
            # antiderivative of unshifted square from 0: A*min(z, 1-z)
            return a * np.minimum(z, 1.0 - z)

        zs = (y - s) - np.floor(y - s)
        z0 = (-s) - np.floor(-s)
        return tri(zs) - tri(z0)

    def mean(self) -> float:
        k = self.kind
        if k == "constant":
            base = self.params["value"]
        elif k == "steps":
            br = np.asarray(self.params["breaks"], dtype=float)
            lv = np.asarray(self.params["levels"], dtype=float)
            widths = np.diff(np.append(br, 1.0))
            base = float(np.sum(lv * widths))
        else:
            base = 0.0
        return base + self.offset

    def total_variation(self) -> float:
        k = self.kind
        if k in ("zero", "constant"):
            return 0.0
        if k in ("sine", "cosine"):
            return 4.0 * abs(self.params["amplitude"]) * self.params.get("mode", 1)
        if k == "trig":
            xs = np.linspace(0.0, 1.0, 1 << 14, endpoint=False)
            v = self(xs)
            return float(np.sum(np.abs(np.roll(v, -1) - v)))
        if k == "square":
            return 4.0 * abs(self.params["amplitude"])
        if k == "sawtooth":
            return 2.0 * abs(self.params["slope"]) * 1.0
        lv = np.asarray(self.params["levels"], dtype=float)
        return float(np.sum(np.abs(np.roll(lv, -1) - lv)))

    def sup(self) -> float:
        k = self.kind
        if k == "zero":
            base = 0.0
        elif k == "constant":
            base = abs(self.params["value"])
        elif k in ("sine", "cosine"):
            base = abs(self.params["amplitude"])
        elif k == "square":
            base = abs(self.params["amplitude"])
        elif k == "sawtooth":
            base = abs(self.params["slope"]) * self.params.get("period", 1.0) / 2.0
        elif k == "steps":
            base = float(np.max(np.abs(self.params["levels"])))
        else:
            xs = np.linspace(0.0, 1.0, 1 << 14, endpoint=False)
            return float(np.max(np.abs(self(xs))))
        if self.offset == 0.0:
            return base
        xs = np.linspace(0.0, 1.0, 1 << 14, endpoint=False)
        return float(np.max(np.abs(self(xs))))

    def centered(self) -> "FieldSpec":
        return FieldSpec(self.kind, self.params, self.offset - self.mean())


def random_steps(seed: int, n_jumps: int = 8, amplitude: float = 0.5) -> FieldSpec:
    """Seeded zero-mean piecewise-constant data for fuzz runs."""
    rng = np.random.default_rng(seed)
    n = max(2, n_jumps)
    breaks = np.sort(rng.uniform(0.0, 1.0, size=n - 1))
    breaks = np.concatenate(([0.0], breaks))
    levels = rng.uniform(-amplitude, amplitude, size=n)
    spec = FieldSpec("steps", {"breaks": breaks, "levels": levels})
    return spec.centered()
