"""Wave bookkeeping for random-choice runs.

Every pair of consecutive time levels is tiled by mesh diamonds. The jumps
entering a diamond through its two lower edges and the jump leaving through
the fan on top are the signed wave strengths: positive values are
rarefactions, negative ones shocks, with the family-3 signs mirrored so
that the same convention holds for both families.

On top of the per-diamond records this module builds approximate
characteristics (polylines that ride shocks or fan lines and continue from
diamond centers), splits each crossed diamond into a left and a right half
ledger via a case table on the entering/leaving wave signs, aggregates
balance sheets for regions bounded by mesh lines or characteristics, and
measures the spreading-based decay bound between characteristic pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .scheme import RunRecord

__all__ = [
    "DiamondRecord",
    "StrengthRow",
    "HalfDiamondLedger",
    "SplitResult",
    "PathSegment",
    "CrossedDiamond",
    "CharacteristicPath",
    "RegionLedger",
    "RowBand",
    "DeterminacyRegion",
    "BetweenPaths",
    "cancellation",
    "strength_row",
    "build_diamonds",
    "split_waves",
    "continue_characteristic",
    "trace_characteristic",
    "crossing_check",
    "region_ledger",
    "x1_signed",
    "decay_report",
    "DecayRow",
    "PairReport",
    "write_ledger",
    "write_path",
]


def cancellation(a: float, b: float) -> float:
    """Opposite-sign strength annihilated when waves a and b meet."""
    return 0.5 * (abs(a) + abs(b) - abs(a + b))


# ---------------------------------------------------------------------------
# per-diamond strengths


@dataclass
class StrengthRow:
    """Vectorized strengths for every diamond of one row.

    Index i corresponds to the diamond centered at mesh index m = 2i + p
    where p is the row parity. gdiff is the signed source difference times
    dt, so gamma == alpha + beta - gdiff up to rounding.
    """

    family: int
    n: int
    m: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    gdiff: np.ndarray
    delta: np.ndarray
    c: np.ndarray
    q: np.ndarray


@dataclass
class DiamondRecord:
    """Signed wave strengths of one mesh diamond, both families.

    Per-family values are keyed by 1 and 3. alpha_in enters through the
    southwest edge, beta_in through the southeast edge, gamma_out leaves
    through the top fan. delta is the interfamily influence, c the
    intrafamily cancellation, q1 the family-1 collision potential.
    """

    m: int
    n: int
    alpha_in: dict
    beta_in: dict
    gamma_out: dict
    delta: dict
    c: dict
    q1: float


def _level_arrays(record: RunRecord, n: int):
    if not 1 <= n <= record.n_levels - 1:
        raise ValueError(f"diamond rows live at levels 1..{record.n_levels - 1}")
    h1, h3 = record.hats1[n], record.hats3[n]
    g1, g3 = record.gs1[n], record.gs3[n]
    s1p, s3p = record.states1[n - 1], record.states3[n - 1]
    s1, s3 = record.states1[n], record.states3[n]
    if h1 is None or g1 is None:
        raise ValueError(
            f"sampled values at level {n} were not retained; rerun with retain_hats"
        )
    if s1p is None or s1 is None:
        raise ValueError(f"states at levels {n - 1}..{n} were not retained")
    return h1, h3, g1, g3, s1p, s3p, s1, s3


def strength_row(record: RunRecord, family: int, n: int) -> StrengthRow:
    """All diamond strengths of one family at row n (1 <= n <= last level)."""
    h1, h3, g1, g3, s1p, s3p, s1, s3 = _level_arrays(record, n)
    h, gsrc, sp, s = (h1, g1, s1p, s1) if family == 1 else (h3, g3, s3p, s3)
    p = n % 2
    dt = record.grid.dt
    h_w, h_e = np.roll(h, 1 - p), np.roll(h, -p)
    g_w, g_e = np.roll(gsrc, 1 - p), np.roll(gsrc, -p)
    s_w, s_e = np.roll(s, 1 - p), np.roll(s, -p)
    if family == 1:
        a = sp - h_w
        b = h_e - sp
        gam = s_e - s_w
        gdiff = (g_e - g_w) * dt
    else:
        a = h_w - sp
        b = sp - h_e
        gam = s_w - s_e
        gdiff = (g_w - g_e) * dt
    delta = np.abs(g_e - g_w) * dt
    c = 0.5 * (np.abs(a) + np.abs(b) - np.abs(a + b))
    q = np.maximum(0.0, -a) * np.maximum(0.0, -b)
    ms = 2 * np.arange(record.grid.cells) + p
    return StrengthRow(
        family=family, n=n, m=ms, alpha=a, beta=b, gamma=gam,
        gdiff=gdiff, delta=delta, c=c, q=q,
    )


def build_diamonds(record: RunRecord, n_lo: int = 1, n_hi: int | None = None):
    """Materialize every diamond of the run as a DiamondRecord list.

    Intended for desk-scale runs; large runs should work row by row with
    strength_row instead.
    """
    if n_hi is None:
        n_hi = record.n_levels - 1
    out = []
    for n in range(n_lo, n_hi + 1):
        r1 = strength_row(record, 1, n)
        r3 = strength_row(record, 3, n)
        for i in range(record.grid.cells):
            out.append(
                DiamondRecord(
                    m=int(r1.m[i]),
                    n=n,
                    alpha_in={1: float(r1.alpha[i]), 3: float(r3.alpha[i])},
                    beta_in={1: float(r1.beta[i]), 3: float(r3.beta[i])},
                    gamma_out={1: float(r1.gamma[i]), 3: float(r3.gamma[i])},
                    delta={1: float(r1.delta[i]), 3: float(r3.delta[i])},
                    c={1: float(r1.c[i]), 3: float(r3.c[i])},
                    q1=float(r1.q[i]),
                )
            )
    return out


def _diamond_scalars(record: RunRecord, family: int, n: int, m: int):
    """Strengths and corner states of a single diamond (m may be unwrapped)."""
    h1, h3, g1, g3, s1p, s3p, s1, s3 = _level_arrays(record, n)
    h, gsrc, sp, s = (h1, g1, s1p, s1) if family == 1 else (h3, g3, s3p, s3)
    p = n % 2
    if (m - n) % 2:
        raise ValueError("diamond index parity must match the row parity")
    M = record.grid.cells
    i = ((m - p) // 2) % M
    jw = (i + p - 1) % M
    je = (i + p) % M
    dt = record.grid.dt
    south = float(sp[i])
    h_w, h_e = float(h[jw]), float(h[je])
    ul, ur = float(s[jw]), float(s[je])
    gd = (float(gsrc[je]) - float(gsrc[jw])) * dt
    if family == 1:
        a = south - h_w
        b = h_e - south
        g = ur - ul
    else:
        a = h_w - south
        b = south - h_e
        g = ul - ur
    delta = abs(gd)
    return a, b, g, delta, cancellation(a, b), h_w, h_e, ul, ur


def _fan_states(record: RunRecord, family: int, n: int, m: int):
    """Endpoint states and leaving strength of the fan opening at (m, n)."""
    s = record.states1[n] if family == 1 else record.states3[n]
    if s is None:
        raise ValueError(f"state at level {n} was not retained")
    p = n % 2
    M = record.grid.cells
    i = ((m - p) // 2) % M
    ul = float(s[(i + p - 1) % M])
    ur = float(s[(i + p) % M])
    g = ur - ul if family == 1 else ul - ur
    return ul, ur, g


# ---------------------------------------------------------------------------
# half-diamond split table


@dataclass
class HalfDiamondLedger:
    """Wave budget of the half diamond on one side of a characteristic.

    E_plus/E_minus are the entering rarefaction/shock strengths (the shock
    the path itself rides is excluded), L_plus the leaving rarefaction on
    this side, S the shock strength joining the path. S and E_minus are
    signed (<= 0); C_plus, C_minus and delta are nonnegative amounts.
    """

    side: str
    E_plus: float = 0.0
    E_minus: float = 0.0
    L_plus: float = 0.0
    S: float = 0.0
    C_plus: float = 0.0
    C_minus: float = 0.0
    delta: float = 0.0


@dataclass
class SplitResult:
    """Outcome of resolving a crossed diamond in entry orientation."""

    label: str
    left: HalfDiamondLedger
    right: HalfDiamondLedger
    w: float
    shock: bool
    ambiguous: bool


def split_waves(
    a: float, b: float, g: float, delta_total: float, a_left: float = 0.0
) -> SplitResult:
    """Resolve a diamond crossed by a path entering along its a-side wave.

    All strengths are signed in the family's own convention. a is the wave
    the path rides in on, b the wave entering on the other side, g the
    leaving wave and delta_total the diamond's influence budget. For an
    entering rarefaction (a >= 0), a_left is the part of a the path leaves
    on its entry side; it is clamped into [0, a].

    The continuation is the leaving shock when g < 0 and a fan line
    otherwise; w is the leaving rarefaction strength between the left fan
    edge and the continuation line. ambiguous marks the two sign patterns
    whose tabulated influence split fails the additivity of the two sides
    and is replaced by the complementary assignment.
    """
    L = HalfDiamondLedger(side="L")
    R = HalfDiamondLedger(side="R")
    w = 0.0
    ambiguous = False
    if a >= 0.0:
        a_l = min(max(a_left, 0.0), a)
        a_r = a - a_l
    else:
        a_l = a_r = 0.0

    if g < 0.0:
        shock = True
        if a < 0.0 and b <= 0.0:
            label = "I"
            R.E_minus = b
            R.S = g - a
            R.delta = delta_total
        elif a < 0.0:
            label = "II"
            R.E_plus = b
            R.S = min(0.0, g - a)
            R.C_plus = min(-a, b)
            R.delta = delta_total
        elif b <= 0.0:
            bb = -b
            L.E_plus = a_l
            R.E_plus = a_r
            R.E_minus = b
            R.S = g
            if bb > a:
                label = "III.I"
                L.C_plus = a_l
                R.C_plus = a_r
                R.C_minus = a
                R.delta = delta_total
            elif bb > a_r:
                label = "III.II"
                L.C_plus = bb - a_r
                L.delta = max(0.0, a + b)
                R.C_plus = a_r
                R.C_minus = bb
                R.delta = -g
            else:
                # the listed influence of the right half over-counts the
                # shock; keep side additivity by assigning the complement
                label = "III.III"
                L.delta = a_l
                R.C_plus = bb
                R.C_minus = bb
                R.delta = a_r + b - g
                ambiguous = bb > 0.0
        else:
            label = "IV"
            L.E_plus = a_l
            L.delta = a_l
            R.E_plus = a_r + b
            R.S = g
            R.delta = -g + a_r + b
    else:
        shock = False
        if a < 0.0 and b <= 0.0:
            # whole influence budget sits right of the path
            label = "V"
            R.E_minus = b
            R.L_plus = g
            R.delta = delta_total
            ambiguous = a < 0.0
        elif a < 0.0:
            label = "VI"
            R.E_plus = b
            R.L_plus = g
            R.C_plus = min(-a, b)
            R.delta = delta_total
        elif b <= 0.0:
            bb = -b
            L.E_plus = a_l
            R.E_plus = a_r
            R.E_minus = b
            if bb > a:
                label = "VII.I"
                L.C_plus = a_l
                R.L_plus = g
                R.C_plus = a_r
                R.C_minus = a
                R.delta = delta_total
            elif bb > a_r:
                label = "VII.II"
                w = min(g, a - bb)
                L.L_plus = w
                L.C_plus = bb - a_r
                L.delta = max(0.0, a - bb - g)
                R.L_plus = max(g - a + bb, 0.0)
                R.C_plus = a_r
                R.C_minus = bb
                R.delta = max(0.0, g - a + bb)
            else:
                label = "VII.III"
                w = min(g, a_l)
                L.L_plus = w
                L.delta = max(0.0, a_l - g)
                R.L_plus = max(g - a_l, 0.0)
                R.C_plus = bb
                R.C_minus = bb
                R.delta = max(0.0, delta_total - L.delta)
        else:
            L.E_plus = a_l
            R.E_plus = a_r + b
            if a * g >= a_l * (a + b):
                label = "VIII.I"
                w = a_l
                L.L_plus = a_l
                R.L_plus = g - a_l
                R.delta = delta_total
            else:
                # split the leaving rarefaction in proportion to the
                # entering ones; a + b > 0 is forced by the branch test
                label = "VIII.II"
                w = (a / (a + b)) * g
                L.L_plus = w
                L.delta = max(0.0, a_l - w)
                R.L_plus = (b / (a + b)) * g
                R.delta = a_r + b - R.L_plus
    return SplitResult(
        label=label, left=L, right=R, w=w, shock=shock, ambiguous=ambiguous
    )


# ---------------------------------------------------------------------------
# characteristic continuation


@dataclass
class PathSegment:
    """One time-step piece of an approximate characteristic.

    The segment starts at the center of the fan opening at (m, n) and is
    cut at level n + 1. state is the ridden value on classical pieces and
    None while riding a shock; strength is the signed jump across the path.
    """

    family: int
    n: int
    m: int
    speed: float
    strength: float
    state: float | None


@dataclass
class CrossedDiamond:
    """Half ledgers and context of a diamond split by a characteristic."""

    m: int
    n: int
    entered: str
    label: str
    left: HalfDiamondLedger
    right: HalfDiamondLedger
    c_full: float
    delta_full: float
    w_left: float | None
    ambiguous: bool


def _resolve(record: RunRecord, family: int, n: int, m: int, entered: str,
             u_chi: float | None):
    """Split diamond (m, n) entered from the given side; build the
    continuation segment leaving its fan."""
    a, b, g, delta, c_full, h_w, h_e, ul, ur = _diamond_scalars(
        record, family, n, m
    )
    s_f = 1.0 if family == 1 else -1.0
    if entered == "W":
        aa, other = a, b
        a_left = 0.0
        if u_chi is not None and aa > 0.0:
            a_left = s_f * (u_chi - h_w)
    elif entered == "E":
        aa, other = b, a
        a_left = 0.0
        if u_chi is not None and aa > 0.0:
            a_left = s_f * (h_e - u_chi)
    else:
        raise ValueError("entered must be 'W' or 'E'")
    res = split_waves(aa, other, g, delta, a_left)
    if entered == "W":
        left, right = res.left, res.right
        w_left = res.w
    else:
        left, right = res.right, res.left
        left.side, right.side = "L", "R"
        w_left = g - res.w
    alpha = record.grid.alpha
    if res.shock:
        seg = PathSegment(
            family=family, n=n, m=m,
            speed=s_f * alpha * 0.5 * (ul + ur), strength=g, state=None,
        )
        w_left = None
    else:
        w_left = min(max(w_left, 0.0), max(g, 0.0))
        q = ul + s_f * w_left
        seg = PathSegment(
            family=family, n=n, m=m, speed=s_f * alpha * q, strength=0.0,
            state=q,
        )
    crossed = CrossedDiamond(
        m=m, n=n, entered=entered, label=res.label, left=left, right=right,
        c_full=c_full, delta_full=delta, w_left=w_left,
        ambiguous=res.ambiguous,
    )
    return crossed, seg


def continue_characteristic(d: DiamondRecord, incoming: PathSegment,
                            record: RunRecord):
    """Continue a path segment through the diamond it ends in.

    Returns the outgoing segment and the (left, right) half ledgers of the
    crossed diamond. The diamond must sit one level above the segment and
    one mesh index to its side.
    """
    period = 2 * record.grid.cells
    if d.n != incoming.n + 1:
        raise ValueError("segment does not end in the diamond")
    diff = (d.m - incoming.m) % period
    if diff == 1:
        side = "W"
    elif diff == period - 1:
        side = "E"
    else:
        raise ValueError("segment does not end in the diamond")
    crossed, seg = _resolve(
        record, incoming.family, d.n, d.m, side, incoming.state
    )
    return seg, (crossed.left, crossed.right)


@dataclass
class CharacteristicPath:
    """Approximate characteristic: vertices at diamond centers, one segment
    per time step, and the half ledgers of every crossed diamond."""

    family: int
    n0: int
    m: np.ndarray
    t: np.ndarray
    speeds: np.ndarray
    strengths: np.ndarray
    crossings: list
    ambiguities: int
    grid: object

    @property
    def n_end(self) -> int:
        return self.n0 + self.m.size - 1

    def vertices(self):
        """Time-ordered (t, x) kink points, x wrapped into [0, 1)."""
        period = 2 * self.grid.cells
        xs = (self.m % period) * self.grid.dx
        return list(zip(self.t.tolist(), xs.tolist()))

    def position(self, k: int) -> float:
        """Unwrapped position of the vertex at level n0 + k."""
        return float(self.m[k]) * self.grid.dx


def trace_characteristic(start, family: int, record: RunRecord,
                         n_end: int | None = None) -> CharacteristicPath:
    """Trace an approximate characteristic from a mesh point.

    start is (m0, n0) with m0 + n0 even: the center of the fan opening at
    level n0. The first piece rides the leaving shock there if the fan is
    compressive, otherwise the left fan edge. Later pieces follow the
    sampled remnant into the next diamond and continue from its center.
    """
    m0, n0 = start
    last = record.n_levels - 1 if n_end is None else min(n_end, record.n_levels - 1)
    if not 0 <= n0 < last:
        raise ValueError("start level leaves no room to trace")
    if (m0 + n0) % 2:
        raise ValueError("m0 + n0 must be even")
    lam = record.grid.lam
    s_f = 1.0 if family == 1 else -1.0
    alpha = record.grid.alpha

    ul, ur, g = _fan_states(record, family, n0, m0)
    if g < 0.0:
        seg = PathSegment(family, n0, m0, s_f * alpha * 0.5 * (ul + ur), g, None)
    else:
        seg = PathSegment(family, n0, m0, s_f * alpha * ul, 0.0, ul)

    ms = [m0]
    speeds = []
    strengths = []
    crossings = []
    ambiguities = 0
    m = m0
    for n in range(n0, last):
        speeds.append(seg.speed)
        strengths.append(seg.strength)
        if record.thetas[n + 1] * lam < seg.speed:
            m += 1
            side = "W"
        else:
            m -= 1
            side = "E"
        ms.append(m)
        crossed, seg = _resolve(record, family, n + 1, m, side, seg.state)
        crossings.append(crossed)
        ambiguities += int(crossed.ambiguous)
    return CharacteristicPath(
        family=family,
        n0=n0,
        m=np.array(ms, dtype=np.int64),
        t=np.arange(n0, last + 1) * record.grid.dt,
        speeds=np.array(speeds),
        strengths=np.array(strengths),
        crossings=crossings,
        ambiguities=ambiguities,
        grid=record.grid,
    )


def crossing_check(paths):
    """Report strict order inversions between same-family characteristics.

    Paths are compared on their common levels after shifting each pair so
    the later start sits within one period of the earlier one; a violation
    is any level where the pair swaps sides or drifts past a period copy.
    Touching and coalescing are allowed. Returns a list of
    (i, j, n, m_i, m_j) tuples, empty when no pair crosses.
    """
    out = []
    for i in range(len(paths)):
        for j in range(i + 1, len(paths)):
            p1, p2 = paths[i], paths[j]
            if p1.family != p2.family:
                raise ValueError("paths must belong to one family")
            if p1.grid != p2.grid:
                raise ValueError("paths must come from one run")
            period = 2 * p1.grid.cells
            lo = max(p1.n0, p2.n0)
            hi = min(p1.n_end, p2.n_end)
            if lo > hi:
                continue
            m1 = p1.m[lo - p1.n0: hi - p1.n0 + 1].astype(np.int64)
            m2 = p2.m[lo - p2.n0: hi - p2.n0 + 1].astype(np.int64)
            swapped = False
            if m2[0] < m1[0]:
                m1, m2 = m2, m1
                swapped = True
            m2 = m2 - ((m2[0] - m1[0]) // period) * period
            gaps = m2 - m1
            bad = np.flatnonzero((gaps < 0) | (gaps > period))
            for k in bad:
                n = lo + int(k)
                a, b = int(m1[k]), int(m2[k])
                if swapped:
                    a, b = b, a
                out.append((i, j, n, a, b))
    return out


# ---------------------------------------------------------------------------
# regions


@dataclass
class RowBand:
    """Every diamond of rows n_lo..n_hi (a full band around the circle)."""

    n_lo: int
    n_hi: int


@dataclass
class DeterminacyRegion:
    """Triangle of diamonds above the mesh interval [m_lo, m_hi] at row
    n_lo, shrinking by one diamond per side and row up to n_hi."""

    n_lo: int
    n_hi: int
    m_lo: int
    m_hi: int


@dataclass
class BetweenPaths:
    """Region bounded left/right by two characteristics over rows
    n_lo..n_hi: full diamonds strictly between them plus the inner half of
    each crossed boundary diamond."""

    left: CharacteristicPath
    right: CharacteristicPath
    n_lo: int
    n_hi: int


@dataclass
class RegionLedger:
    """Aggregated wave budget of a diamond region.

    e/l are entering/leaving strengths split by sign (minus parts signed),
    s the total shock strength absorbed by bounding characteristics, c the
    cancellation charged to each sign's balance, delta the influence
    budget, x1 the signed strengths crossing the bottom interval.
    """

    shape: str
    family: int
    n_lo: int
    n_hi: int
    n_full: int
    n_halves: int
    e_plus: float
    e_minus: float
    l_plus: float
    l_minus: float
    s: float
    c_plus: float
    c_minus: float
    delta: float
    x1_plus: float
    x1_minus: float

    def positive_slack(self) -> float:
        """Residual of the rarefaction balance beyond the influence budget."""
        return abs(self.l_plus - self.e_plus + self.c_plus) - self.delta

    def negative_slack(self) -> float:
        """Residual of the shock balance beyond the influence budget."""
        return abs(self.s + self.l_minus - self.e_minus - self.c_minus) - self.delta


def _pos(arr) -> float:
    return float(np.sum(np.maximum(arr, 0.0)))


def _neg(arr) -> float:
    return float(np.sum(np.minimum(arr, 0.0)))


def x1_signed(record: RunRecord, n: int, m_lo: int, m_hi: int,
              family: int = 1):
    """Signed strengths entering the diamonds centered in [m_lo, m_hi].

    Mesh indices may be unwrapped; the interval must not span more than one
    period. Returns (plus, minus) with minus <= 0.
    """
    period = 2 * record.grid.cells
    if m_hi - m_lo > period:
        raise ValueError("interval spans more than one period")
    if m_hi < m_lo:
        return 0.0, 0.0
    row = strength_row(record, family, n)
    p = n % 2
    first = m_lo + (m_lo + p) % 2  # smallest center >= m_lo with row parity
    ms = np.arange(first, m_hi + 1, 2)
    if ms.size == 0:
        return 0.0, 0.0
    idx = ((ms - p) // 2) % record.grid.cells
    ent = np.concatenate([row.alpha[idx], row.beta[idx]])
    return _pos(ent), _neg(ent)


def _band_ledger(record, region, family):
    n_lo, n_hi = region.n_lo, region.n_hi
    bottom = strength_row(record, family, n_lo)
    top = strength_row(record, family, n_hi)
    e_plus = _pos(bottom.alpha) + _pos(bottom.beta)
    e_minus = _neg(bottom.alpha) + _neg(bottom.beta)
    c = delta = 0.0
    count = 0
    for n in range(n_lo, n_hi + 1):
        row = strength_row(record, family, n)
        c += float(np.sum(row.c))
        delta += float(np.sum(row.delta))
        count += row.m.size
    return RegionLedger(
        shape="band", family=family, n_lo=n_lo, n_hi=n_hi,
        n_full=count, n_halves=0,
        e_plus=e_plus, e_minus=e_minus,
        l_plus=_pos(top.gamma), l_minus=_neg(top.gamma),
        s=0.0, c_plus=c, c_minus=c, delta=delta,
        x1_plus=e_plus, x1_minus=e_minus,
    )


def _row_indices(record, n, m_lo, m_hi):
    p = n % 2
    first = m_lo + (m_lo + p) % 2
    ms = np.arange(first, m_hi + 1, 2)
    return ((ms - p) // 2) % record.grid.cells


def _determinacy_ledger(record, region, family):
    n_lo, n_hi, m_lo, m_hi = region.n_lo, region.n_hi, region.m_lo, region.m_hi
    K = n_hi - n_lo
    if (m_lo - n_lo) % 2 or (m_hi - n_lo) % 2:
        raise ValueError("interval endpoints must be diamond centers of the bottom row")
    if m_hi < m_lo:
        raise ValueError("empty interval")
    if m_hi - m_lo > 2 * record.grid.cells:
        raise ValueError("interval spans more than one period")
    bottom = strength_row(record, family, n_lo)
    idx0 = _row_indices(record, n_lo, m_lo, m_hi)
    e_plus = _pos(bottom.alpha[idx0]) + _pos(bottom.beta[idx0])
    e_minus = _neg(bottom.alpha[idx0]) + _neg(bottom.beta[idx0])
    c = delta = 0.0
    l_plus = l_minus = 0.0
    count = 0
    for k in range(K + 1):
        n = n_lo + k
        if m_lo + k > m_hi - k:
            break  # the triangle closed below the requested top row
        row = strength_row(record, family, n)
        idx = _row_indices(record, n, m_lo + k, m_hi - k)
        count += idx.size
        c += float(np.sum(row.c[idx]))
        delta += float(np.sum(row.delta[idx]))
        if k == K:
            l_plus += _pos(row.gamma[idx])
            l_minus += _neg(row.gamma[idx])
        else:
            # split parts of the two boundary fans leave the region sideways
            nxt = strength_row(record, family, n + 1)
            M = record.grid.cells
            p = (n + 1) % 2
            j_out_l = ((m_lo + k - 1 - p) // 2) % M
            j_out_r = ((m_hi - k + 1 - p) // 2) % M
            lateral = np.array([nxt.beta[j_out_l], nxt.alpha[j_out_r]])
            l_plus += _pos(lateral)
            l_minus += _neg(lateral)
    return RegionLedger(
        shape="determinacy", family=family, n_lo=n_lo, n_hi=n_hi,
        n_full=count, n_halves=0,
        e_plus=e_plus, e_minus=e_minus, l_plus=l_plus, l_minus=l_minus,
        s=0.0, c_plus=c, c_minus=c, delta=delta,
        x1_plus=e_plus, x1_minus=e_minus,
    )


def _between_ledger(record, region, family):
    L, R = region.left, region.right
    n_lo, n_hi = region.n_lo, region.n_hi
    if L.family != family or R.family != family:
        raise ValueError("paths must belong to the requested family")
    if n_lo <= max(L.n0, R.n0):
        raise ValueError("bottom row must lie above both path starts")
    if n_hi > min(L.n_end, R.n_end):
        raise ValueError("top row leaves a path")
    period = 2 * record.grid.cells

    def centers(n):
        ml = int(L.m[n - L.n0])
        mr = int(R.m[n - R.n0])
        return ml, mr

    ml0, mr0 = centers(n_lo)
    shift = -((mr0 - ml0 - 1) // period) * period  # put mr0 in (ml0, ml0+period]
    e_plus = e_minus = l_plus = l_minus = 0.0
    s_total = c_plus = c_minus = delta = 0.0
    x1p = x1m = 0.0
    n_full = 0
    n_halves = 0
    for n in range(n_lo, n_hi + 1):
        ml, mr = centers(n)
        mr += shift
        gap = mr - ml
        if gap <= 0 or gap > period:
            raise ValueError(f"paths touch or wrap at level {n}")
        row = strength_row(record, family, n)
        idx = _row_indices(record, n, ml + 2, mr - 2)
        n_full += idx.size
        cdl = L.crossings[n - L.n0 - 1]
        cdr = R.crossings[n - R.n0 - 1]
        hl, hr = cdl.right, cdr.left
        n_halves += 2
        c_plus += float(np.sum(row.c[idx])) + hl.C_plus + hr.C_plus
        c_minus += float(np.sum(row.c[idx])) + hl.C_minus + hr.C_minus
        delta += float(np.sum(row.delta[idx])) + hl.delta + hr.delta
        s_total += hl.S + hr.S
        if n == n_lo:
            x1p = _pos(row.alpha[idx]) + _pos(row.beta[idx])
            x1m = _neg(row.alpha[idx]) + _neg(row.beta[idx])
            e_plus = x1p + hl.E_plus + hr.E_plus
            e_minus = x1m + hl.E_minus + hr.E_minus
        if n == n_hi:
            l_plus = _pos(row.gamma[idx]) + hl.L_plus + hr.L_plus
            l_minus = _neg(row.gamma[idx])
    return RegionLedger(
        shape="between-paths", family=family, n_lo=n_lo, n_hi=n_hi,
        n_full=n_full, n_halves=n_halves,
        e_plus=e_plus, e_minus=e_minus, l_plus=l_plus, l_minus=l_minus,
        s=s_total, c_plus=c_plus, c_minus=c_minus, delta=delta,
        x1_plus=x1p, x1_minus=x1m,
    )


def region_ledger(record: RunRecord, region, family: int = 1) -> RegionLedger:
    """Aggregate the wave budget of a region of diamonds.

    Supported shapes: RowBand, DeterminacyRegion, BetweenPaths. The
    resulting ledger satisfies the two balance laws up to its delta budget
    (see positive_slack / negative_slack).
    """
    if isinstance(region, RowBand):
        return _band_ledger(record, region, family)
    if isinstance(region, DeterminacyRegion):
        return _determinacy_ledger(record, region, family)
    if isinstance(region, BetweenPaths):
        return _between_ledger(record, region, family)
    raise ValueError(f"unsupported region shape: {region!r}")


# ---------------------------------------------------------------------------
# widening / decay measurements


@dataclass
class DecayRow:
    """One sampled time of the spreading bound for a characteristic pair."""

    n: int
    t: float
    D: float
    x1_plus: float
    bound: float
    active: bool
    ok: bool


@dataclass
class PairReport:
    """Spreading-bound history of one traced characteristic pair."""

    m_left: int
    m_right: int
    coalesced: bool
    note: str
    rows: list = field(default_factory=list)
    violations: int = 0


def decay_report(record: RunRecord, t0: float, t_star: float, pairs,
                 family: int = 1, stride: int | None = None,
                 m_b: float | None = None, slack: float = 1e-10):
    """Measure the spreading bound between traced characteristic pairs.

    For each (m_left, m_right) start pair at the level of t0, both
    characteristics are traced across [t0, t0 + t_star] and the positive
    strength crossing the interval between them is compared at sampled
    levels against

        D(t)/(alpha (t - t0)) - X1minus(I(t0)) + Delta(region) + |I(t0)| m_b/400.

    Rows where the first term alone exceeds the initial variation carry
    active=False (the bound holds vacuously there). Pairs whose paths
    coalesce are cut short with a note.
    """
    grid = record.grid
    dt = grid.dt
    n0 = int(round(t0 / dt))
    if abs(n0 * dt - t0) > 1e-9 * max(1.0, abs(t0)) or n0 < 1:
        raise ValueError("t0 must sit on a time level above the first")
    n1 = min(record.n_levels - 1, int(math.floor((t0 + t_star) / dt + 1e-9)))
    if n1 <= n0:
        raise ValueError("the run does not reach past t0")
    if m_b is None:
        m_i = float(record.tv1[0] + record.tv3[0])
        m_b = max(1.25 * m_i, 300.0 * record.coupling_rate / grid.alpha)
    if stride is None:
        stride = max(1, (n1 - n0) // 32)
    tv_start = float(record.tv1[n0] if family == 1 else record.tv3[n0])

    reports = []
    for m_left, m_right in pairs:
        if (m_left + n0) % 2 or (m_right + n0) % 2:
            raise ValueError("pair starts must be diamond centers at the t0 level")
        if not m_left < m_right:
            raise ValueError("pair starts must be ordered left < right")
        if m_right - m_left > 2 * grid.cells:
            raise ValueError("pair starts further apart than one period")
        path_l = trace_characteristic((m_left, n0), family, record, n_end=n1)
        path_r = trace_characteristic((m_right, n0), family, record, n_end=n1)
        width0 = (m_right - m_left) * grid.dx
        _, x1m0 = x1_signed(record, n0, m_left + 2, m_right - 2, family)
        rep = PairReport(m_left=m_left, m_right=m_right, coalesced=False, note="")
        delta_cum = 0.0
        for n in range(n0 + 1, n1 + 1):
            k = n - n0
            ml = int(path_l.m[k])
            mr = int(path_r.m[k])
            if mr - ml <= 0:
                rep.coalesced = True
                rep.note = f"paths coalesced at level {n}"
                break
            row = strength_row(record, family, n)
            if mr - ml <= 2 * grid.cells:
                idx = _row_indices(record, n, ml + 2, mr - 2)
            else:
                # the pair has spread past one period: the interval between
                # them covers the whole circle
                idx = np.arange(grid.cells)
            cdl = path_l.crossings[k - 1]
            cdr = path_r.crossings[k - 1]
            delta_cum += (
                float(np.sum(row.delta[idx])) + cdl.right.delta + cdr.left.delta
            )
            if k % stride == 0 or n == n1:
                t = n * dt
                width = (mr - ml) * grid.dx
                ent = np.concatenate([row.alpha[idx], row.beta[idx]])
                x1p = _pos(ent)
                lead = width / (grid.alpha * (t - t0))
                bound = lead - x1m0 + delta_cum + width0 * m_b / 400.0
                ok = x1p <= bound + slack
                rep.rows.append(
                    DecayRow(
                        n=n, t=t, D=width, x1_plus=x1p, bound=bound,
                        active=lead < tv_start, ok=ok,
                    )
                )
                rep.violations += int(not ok)
        reports.append(rep)
    return reports


# ---------------------------------------------------------------------------
# artifact writers


def write_ledger(path: str, diamonds) -> None:
    """Write diamond records as columnar text, one row per family."""
    lines = ["m,n,family,alpha,beta,gamma,C,Delta,Q1"]
    for d in diamonds:
        for fam in (1, 3):
            a, b = d.alpha_in[fam], d.beta_in[fam]
            q = d.q1 if fam == 1 else max(0.0, -a) * max(0.0, -b)
            vals = (d.gamma_out[fam], d.c[fam], d.delta[fam], q)
            lines.append(
                f"{d.m},{d.n},{fam},{a:.17g},{b:.17g},"
                f"{vals[0]:.17g},{vals[1]:.17g},{vals[2]:.17g},{vals[3]:.17g}"
            )
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def write_path(path: str, cpath: CharacteristicPath) -> None:
    """Write a traced characteristic as columnar text.

    One row per vertex; speed and strength refer to the segment leaving the
    vertex, repeated on the terminal row.
    """
    period = 2 * cpath.grid.cells
    dx = cpath.grid.dx
    lines = ["t,x,speed,strength"]
    k_last = cpath.m.size - 1
    for k in range(cpath.m.size):
        j = min(k, k_last - 1) if k_last > 0 else 0
        x = (int(cpath.m[k]) % period) * dx
        lines.append(
            f"{cpath.t[k]:.17g},{x:.17g},"
            f"{cpath.speeds[j]:.17g},{cpath.strengths[j]:.17g}"
        )
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
