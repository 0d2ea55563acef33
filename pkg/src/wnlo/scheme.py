"""Random-choice evolution of the coupled pair of convective fields.

One step solves exact Riemann fans between adjacent cells, samples each
fan at a common random offset, and then applies the nonlocal source as
an algebraic correction: new = sampled - g * dt. The grid staggers, so
cell centers alternate parity from level to level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .burgers import sample_fans
from .grid import GridSpec, PeriodicProfile, l1_distance, sup_norm, total_variation
from .initial import FieldSpec
from .kernel import EntropyWaveSpec, KernelTable, build_kernel_table, convolve
from .sampling import SamplePlan


class CflViolation(RuntimeError):
    pass


class NonFiniteState(RuntimeError):
    pass


@dataclass
class SchemeConfig:
    """Everything a run needs besides the two initial fields.

    lam=None picks a safe grid speed from the initial data and coupling
    constants; an explicit value is honored but still guarded by the
    per-step speed check.
    """

    N: int
    alpha: float
    beta: float
    sigma2: EntropyWaveSpec | None = None
    lam: float | None = None
    t_final: float | None = None
    n_steps: int | None = None
    plan: SamplePlan = field(default_factory=lambda: SamplePlan("van_der_corput"))
    retain_states: bool = True
    retain_hats: bool = False
    retain_window: tuple[float, float] | None = None
    recenter: bool = False

    def __post_init__(self):
        if self.beta > 0.0 and self.sigma2 is None:
            raise ValueError("beta > 0 requires an entropy wave profile")
        if (self.t_final is None) == (self.n_steps is None):
            raise ValueError("give exactly one of t_final or n_steps")


@dataclass
class RunRecord:
    """Per-level diagnostics plus whatever state retention was asked for.

    states1/states3 hold post-source cell values per retained level;
    hats and gs hold the sampled values and source terms that produced
    each level (None where not retained). Level k has parity k mod 2.
    """

    grid: GridSpec
    thetas: np.ndarray
    t: np.ndarray
    tv1: np.ndarray
    tv3: np.ndarray
    sup1: np.ndarray
    sup3: np.ndarray
    step_l1: np.ndarray
    states1: list
    states3: list
    hats1: list
    hats3: list
    gs1: list
    gs3: list
    init1: FieldSpec
    init3: FieldSpec
    table: KernelTable | None
    coupling_rate: float

    @property
    def n_levels(self) -> int:
        return self.t.size

    def profile(self, family: int, level: int) -> PeriodicProfile:
        vals = (self.states1 if family == 1 else self.states3)[level]
        if vals is None:
            raise ValueError(f"state at level {level} was not retained")
        return PeriodicProfile(
            N=self.grid.N, level_parity=level % 2, values=vals
        )


def auto_grid_speed(
    alpha: float, beta: float, tv0: float, E: float, margin: float = 1.05
) -> float:
    """Safe grid speed from the a priori sup bound on the fields."""
    cap = max(1.25 * tv0, 300.0 * (beta / alpha) * E if beta > 0.0 else 0.0)
    return margin * 2.0 * alpha * (cap + 2.0)


def _source(table, hat1, hat3, parity, dt, beta):
    if beta == 0.0 or table is None:
        z = np.zeros_like(hat1)
        return z, z
    n = table.N
    p1 = PeriodicProfile(N=n, level_parity=parity, values=hat3)
    p3 = PeriodicProfile(N=n, level_parity=parity, values=hat1)
    g1 = convolve(table, p1, sign=1)
    g3 = convolve(table, p3, sign=-1)
    return g1, g3


def step_pair(
    grid: GridSpec,
    table: KernelTable | None,
    v1: np.ndarray,
    v3: np.ndarray,
    parity: int,
    theta: float,
    step_index: int,
):
    """Advance one level. Returns (new1, new3, hat1, hat3, g1, g3).

    parity is the parity of the incoming level; the outgoing level has
    the opposite parity and its cells sit at the fan centers.
    """
    lam = grid.lam
    smax = grid.alpha * max(
        np.max(np.abs(v1)) if v1.size else 0.0,
        np.max(np.abs(v3)) if v3.size else 0.0,
    )
    if smax > lam:
        raise CflViolation(
            f"wave speed {smax:.6g} exceeds grid speed {lam:.6g} at step {step_index}"
        )
    if parity == 0:
        ul1, ur1 = np.roll(v1, 1), v1
        ul3, ur3 = np.roll(v3, 1), v3
    else:
        ul1, ur1 = v1, np.roll(v1, -1)
        ul3, ur3 = v3, np.roll(v3, -1)
    xi = theta * lam
    hat1 = sample_fans(1, grid.alpha, ul1, ur1, xi)
    hat3 = sample_fans(3, grid.alpha, ul3, ur3, xi)
    g1, g3 = _source(table, hat1, hat3, 1 - parity, grid.dt, grid.beta)
    new1 = hat1 - g1 * grid.dt
    new3 = hat3 - g3 * grid.dt
    if not (np.all(np.isfinite(new1)) and np.all(np.isfinite(new3))):
        raise NonFiniteState(f"non-finite state produced at step {step_index}")
    return new1, new3, hat1, hat3, g1, g3


def run(cfg: SchemeConfig, init1: FieldSpec, init3: FieldSpec) -> RunRecord:
    """Evolve the pair of fields and collect diagnostics per level."""
    tv0 = init1.total_variation() + init3.total_variation()
    e_mass = cfg.sigma2.l1_mass() if cfg.sigma2 is not None else 0.0
    lam = cfg.lam if cfg.lam is not None else auto_grid_speed(
        cfg.alpha, cfg.beta, tv0, e_mass
    )
    grid = GridSpec(N=cfg.N, lam=lam, alpha=cfg.alpha, beta=cfg.beta)
    table = (
        build_kernel_table(cfg.sigma2, cfg.alpha, cfg.beta, cfg.N)
        if cfg.beta > 0.0
        else None
    )
    if cfg.n_steps is not None:
        n_steps = cfg.n_steps
    else:
        n_steps = max(1, math.ceil(cfg.t_final / grid.dt - 1e-12))
    thetas = cfg.plan.sequence(n_steps + 1)

    m = grid.cells
    dx = grid.dx
    centers0 = (2 * np.arange(m) + 1) * dx
    x0 = centers0 + thetas[0] * dx
    hat1 = np.asarray(init1(x0), dtype=float)
    hat3 = np.asarray(init3(x0), dtype=float)
    g1, g3 = _source(table, hat1, hat3, 0, grid.dt, grid.beta)
    v1 = hat1 - g1 * grid.dt
    v3 = hat3 - g3 * grid.dt
    if not (np.all(np.isfinite(v1)) and np.all(np.isfinite(v3))):
        raise NonFiniteState("non-finite state produced at level 0")

    def in_window(t: float) -> bool:
        if not cfg.retain_hats:
            return False
        if cfg.retain_window is None:
            return True
        lo, hi = cfg.retain_window
        return lo - 1e-12 <= t <= hi + 1e-12

    n_levels = n_steps + 1
    tv1 = np.empty(n_levels)
    tv3 = np.empty(n_levels)
    sup1 = np.empty(n_levels)
    sup3 = np.empty(n_levels)
    step_l1 = np.zeros(max(n_steps, 0))
    states1: list = [None] * n_levels
    states3: list = [None] * n_levels
    hats1: list = [None] * n_levels
    hats3: list = [None] * n_levels
    gs1: list = [None] * n_levels
    gs3: list = [None] * n_levels

    def record_level(k, v1, v3, h1, h3, gg1, gg3):
        p1 = PeriodicProfile(N=cfg.N, level_parity=k % 2, values=v1)
        p3 = PeriodicProfile(N=cfg.N, level_parity=k % 2, values=v3)
        tv1[k], tv3[k] = total_variation(p1), total_variation(p3)
        sup1[k], sup3[k] = sup_norm(p1), sup_norm(p3)
        if cfg.retain_states or k in (0, n_levels - 1):
            states1[k], states3[k] = v1, v3
        if in_window(k * grid.dt):
            hats1[k], hats3[k] = h1, h3
            gs1[k], gs3[k] = gg1, gg3

    if cfg.recenter:
        v1 = v1 - np.mean(v1)
        v3 = v3 - np.mean(v3)
    record_level(0, v1, v3, hat1, hat3, g1, g3)

    for k in range(n_steps):
        new1, new3, h1, h3, gg1, gg3 = step_pair(
            grid, table, v1, v3, k % 2, thetas[k + 1], k
        )
        if cfg.recenter:
            new1 = new1 - np.mean(new1)
            new3 = new3 - np.mean(new3)
        pa = PeriodicProfile(N=cfg.N, level_parity=k % 2, values=v1)
        pb = PeriodicProfile(N=cfg.N, level_parity=(k + 1) % 2, values=new1)
        qa = PeriodicProfile(N=cfg.N, level_parity=k % 2, values=v3)
        qb = PeriodicProfile(N=cfg.N, level_parity=(k + 1) % 2, values=new3)
        step_l1[k] = l1_distance(pa, pb) + l1_distance(qa, qb)
        v1, v3 = new1, new3
        record_level(k + 1, v1, v3, h1, h3, gg1, gg3)

    rate = table.coupling_rate() if table is not None else 0.0
    return RunRecord(
        grid=grid,
        thetas=thetas,
        t=np.arange(n_levels) * grid.dt,
        tv1=tv1,
        tv3=tv3,
        sup1=sup1,
        sup3=sup3,
        step_l1=step_l1,
        states1=states1,
        states3=states3,
        hats1=hats1,
        hats3=hats3,
        gs1=gs1,
        gs3=gs3,
        init1=init1,
        init3=init3,
        table=table,
        coupling_rate=rate,
    )


def growth_envelope_ok(record: RunRecord, rate: float | None = None) -> bool:
    """Per-step check: (tv1+tv3) and (sup1+sup3) never grow faster than
    the one-step factor (1 + rate*dt), within roundoff."""
    r = record.coupling_rate if rate is None else rate
    dt = record.grid.dt
    tv = record.tv1 + record.tv3
    sp = record.sup1 + record.sup3
    f = 1.0 + r * dt
    tol = 1e-12
    ok_tv = np.all(tv[1:] <= tv[:-1] * f * (1.0 + tol) + tol * max(1.0, tv[0]))
    ok_sp = np.all(sp[1:] <= sp[:-1] * f * (1.0 + tol) + tol * max(1.0, sp[0]))
    return bool(ok_tv and ok_sp)


def _flux(family: int, alpha: float, v: np.ndarray) -> np.ndarray:
    s = 0.5 * alpha * v * v
    return s if family == 1 else -s


def _source_of_states(record: RunRecord, family: int, level: int) -> np.ndarray:
    """Nonlocal term evaluated on the stored post-source states."""
    if record.table is None:
        return np.zeros_like(record.states1[level])
    other = 3 if family == 1 else 1
    prof = record.profile(other, level)
    return convolve(record.table, prof, sign=1 if family == 1 else -1)


def weak_residual(record: RunRecord, family: int, phi, phi_t, phi_x) -> float:
    """Weak-form defect of the stored run against one test function.

    Quadrature is cell centers in x and left endpoints in t; at cell
    centers the continuous kernel convolution of a piecewise-constant
    field coincides with the discrete source sum, so the kernel term
    introduces no extra quadrature error.
    """
    g = record.grid
    dt, dx = g.dt, g.dx
    n_levels = record.n_levels
    tfin = record.t[-1]
    acc = 0.0
    for n in range(n_levels - 1):
        prof = record.profile(family, n)
        x = prof.centers()
        v = prof.values
        gn = _source_of_states(record, family, n)
        tn = record.t[n]
        cell = v * phi_t(x, tn) + _flux(family, g.alpha, v) * phi_x(x, tn) - gn * phi(
            x, tn
        )
        acc += dt * 2.0 * dx * float(np.sum(cell))
    spec = record.init1 if family == 1 else record.init3
    xf = np.linspace(0.0, 1.0, 1 << 13, endpoint=False)
    acc += float(np.mean(spec(xf) * phi(xf, 0.0)))
    last = record.profile(family, n_levels - 1)
    acc -= 2.0 * dx * float(np.sum(last.values * phi(last.centers(), tfin)))
    return acc


def entropy_residual(
    record: RunRecord, family: int, k: float, phi, phi_t, phi_x
) -> float:
    """Kruzhkov-form defect for one constant k and one test function >= 0.
    Nonnegative (within tolerance) for admissible evolutions."""
    g = record.grid
    dt, dx = g.dt, g.dx
    n_levels = record.n_levels
    tfin = record.t[-1]
    acc = 0.0
    for n in range(n_levels - 1):
        prof = record.profile(family, n)
        x = prof.centers()
        v = prof.values
        gn = _source_of_states(record, family, n)
        tn = record.t[n]
        sgn = np.sign(v - k)
        q = sgn * (_flux(family, g.alpha, v) - _flux(family, g.alpha, np.full_like(v, k)))
        cell = np.abs(v - k) * phi_t(x, tn) + q * phi_x(x, tn) - sgn * gn * phi(x, tn)
        acc += dt * 2.0 * dx * float(np.sum(cell))
    spec = record.init1 if family == 1 else record.init3
    xf = np.linspace(0.0, 1.0, 1 << 13, endpoint=False)
    acc += float(np.mean(np.abs(spec(xf) - k) * phi(xf, 0.0)))
    last = record.profile(family, n_levels - 1)
    acc -= 2.0 * dx * float(
        np.sum(np.abs(last.values - k) * phi(last.centers(), tfin))
    )
    return acc


def residual_test_bank(t_final: float, nonneg: bool = False, interior: bool = False):
    """Fixed bank of smooth space-time test functions with derivatives.

    nonneg restricts to nonnegative envelopes (Kruzhkov use); interior
    makes the time window vanish at both ends so endpoint terms drop.
    """
    T = t_final

    if interior:
        # peak-normalized so jump signals are not washed out
        w = lambda t: 16.0 * (t / T) ** 2 * (1.0 - t / T) ** 2
        wd = lambda t: 16.0 * (
            (2.0 * t / T**2) * (1.0 - t / T) ** 2
            - (t / T) ** 2 * (2.0 / T) * (1.0 - t / T)
        )
    else:
        w = lambda t: (1.0 - t / T) ** 2
        wd = lambda t: -(2.0 / T) * (1.0 - t / T)

    def make(fx, fxd):
        return (
            lambda x, t: fx(x) * w(t),
            lambda x, t: fx(x) * wd(t),
            lambda x, t: fxd(x) * w(t),
        )

    two_pi = 2.0 * np.pi
    bank = []
    if nonneg:
        shapes = [
            (lambda x: 0.5 + 0.5 * np.cos(two_pi * x),
             lambda x: -np.pi * np.sin(two_pi * x)),
            (lambda x: 0.5 - 0.5 * np.cos(two_pi * x),
             lambda x: np.pi * np.sin(two_pi * x)),
            (lambda x: np.ones_like(x), lambda x: np.zeros_like(x)),
        ]
    else:
        shapes = [
            (lambda x: np.cos(two_pi * x), lambda x: -two_pi * np.sin(two_pi * x)),
            (lambda x: np.sin(two_pi * x), lambda x: two_pi * np.cos(two_pi * x)),
            (lambda x: np.sin(2 * two_pi * x),
             lambda x: 2 * two_pi * np.cos(2 * two_pi * x)),
        ]
    for fx, fxd in shapes:
        bank.append(make(fx, fxd))
    return bank


def bump_test(center: float, radius: float, t_final: float):
    """Nonnegative test function localized at one point of the circle.

    Space factor is a raised cosine supported on distance < radius from
    center; time window is the peak-normalized interior bump, so both
    endpoint terms vanish and entropy production at a single jump is
    probed without contamination from elsewhere.
    """
    T = t_final
    r = radius
    if not 0.0 < r < 0.5:
        raise ValueError("radius must lie in (0, 0.5)")

    def dist(x):
        d = (np.asarray(x, dtype=float) - center + 0.5) % 1.0 - 0.5
        return d

    def fx(x):
        d = dist(x)
        return np.where(np.abs(d) < r, np.cos(np.pi * d / (2.0 * r)) ** 2, 0.0)

    def fxd(x):
        d = dist(x)
        return np.where(
            np.abs(d) < r, -(np.pi / (2.0 * r)) * np.sin(np.pi * d / r), 0.0
        )

    w = lambda t: 16.0 * (t / T) ** 2 * (1.0 - t / T) ** 2
    wd = lambda t: 16.0 * (
        (2.0 * t / T**2) * (1.0 - t / T) ** 2
        - (t / T) ** 2 * (2.0 / T) * (1.0 - t / T)
    )
    return (
        lambda x, t: fx(x) * w(t),
        lambda x, t: fx(x) * wd(t),
        lambda x, t: fxd(x) * w(t),
    )


def stability_gap(
    cfg: SchemeConfig,
    pair_a: tuple[FieldSpec, FieldSpec],
    pair_b: tuple[FieldSpec, FieldSpec],
):
    """L1 distance between two runs driven by the same offsets, per level."""
    ra = run(cfg, *pair_a)
    rb = run(cfg, *pair_b)
    n = ra.n_levels
    d = np.empty(n)
    for k in range(n):
        d[k] = l1_distance(ra.profile(1, k), rb.profile(1, k)) + l1_distance(
            ra.profile(3, k), rb.profile(3, k)
        )
    return ra.t, d, ra, rb
