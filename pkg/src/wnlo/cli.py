"""Batch front-end: one config file, one experiment per invocation.

Subcommands: run, converge, ledger, decay, blowup, verify-kernel, plot.
Every report prints machine-parsable `CHECK <name> (PASS|FAIL)` lines;
artifacts land in the output directory (--out beats WNLO_OUTPUT_DIR beats
the config's output.dir) together with a manifest of SHA-256 hashes. Exit
codes: 0 success, 2 config or usage error, 3 grid-speed violation, 4
non-finite state.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import os
import sys

import numpy as np

from .blowup import detect_blowup, write_blowup_report
from .config import ConfigError, ExperimentConfig, load_config
from .kernel import build_kernel_table
from .ledger import (
    build_diamonds,
    crossing_check,
    decay_report,
    strength_row,
    trace_characteristic,
    write_ledger,
)
from .oracle import l1_error
from .plots import PALETTE, Curve, chart_data_csv, line_chart
from .sampling import SamplePlan, rotated_plan
from .scheme import (
    CflViolation,
    NonFiniteState,
    SchemeConfig,
    auto_grid_speed,
    growth_envelope_ok,
    run,
)

__all__ = ["main"]

_G = "%.17g"


def _check(name: str, ok: bool) -> bool:
    print(f"CHECK {name} {'PASS' if ok else 'FAIL'}")
    return ok


def _out_dir(cfg: ExperimentConfig, args) -> str:
    out = getattr(args, "out", None) or os.environ.get("WNLO_OUTPUT_DIR") or cfg.out_dir
    os.makedirs(out, exist_ok=True)
    return out


def _write_manifest(out: str) -> None:
    """Hash everything in the output directory, sorted by name."""
    rows = []
    for name in sorted(os.listdir(out)):
        full = os.path.join(out, name)
        if name == "manifest.txt" or not os.path.isfile(full):
            continue
        digest = hashlib.sha256()
        with open(full, "rb") as fh:
            digest.update(fh.read())
        rows.append(f"{digest.hexdigest()}  {name}\n")
    with open(os.path.join(out, "manifest.txt"), "w", newline="\n") as fh:
        fh.writelines(rows)


def _scheme_config(cfg: ExperimentConfig, retain_hats: bool = False,
                   n: int | None = None, plan: SamplePlan | None = None,
                   retain_window=None, retain_states: bool = True) -> SchemeConfig:
    return SchemeConfig(
        N=n if n is not None else cfg.n,
        alpha=cfg.alpha,
        beta=cfg.beta,
        sigma2=cfg.sigma2,
        lam=cfg.lam,
        t_final=cfg.t_final,
        plan=plan if plan is not None else cfg.plan,
        retain_hats=retain_hats,
        retain_window=retain_window,
        retain_states=retain_states,
    )


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(cfg, args)
    rec = run(_scheme_config(cfg, retain_hats=cfg.retain_ledger), cfg.init1, cfg.init3)

    with open(os.path.join(out, "diagnostics.csv"), "w", newline="\n") as fh:
        fh.write("level,t,tv1,tv3,sup1,sup3,step_l1\n")
        for k in range(rec.n_levels):
            moved = rec.step_l1[k - 1] if k > 0 else 0.0
            fh.write(("%d," + ",".join([_G] * 6) + "\n") % (
                k, rec.t[k], rec.tv1[k], rec.tv3[k], rec.sup1[k],
                rec.sup3[k], moved))

    last = rec.n_levels - 1
    stride = cfg.snapshot_stride
    levels = list(range(0, last + 1, stride)) if stride > 0 else [0]
    if levels[-1] != last:
        levels.append(last)
    with open(os.path.join(out, "snapshots.csv"), "w", newline="\n") as fh:
        fh.write("level,t,family,x,u\n")
        for k in levels:
            for fam in (1, 3):
                prof = rec.profile(fam, k)
                xs = prof.centers()
                for j in range(xs.size):
                    fh.write(("%d," + _G + ",%d," + _G + "," + _G + "\n") % (
                        k, rec.t[k], fam, xs[j], prof.values[j]))

    if cfg.retain_ledger:
        with open(os.path.join(out, "waves.csv"), "w", newline="\n") as fh:
            fh.write("m,n,family,alpha,beta,gamma,C,Delta,Q1\n")
            for n in range(1, rec.n_levels):
                rows = {1: strength_row(rec, 1, n), 3: strength_row(rec, 3, n)}
                for i in range(rec.grid.cells):
                    for fam in (1, 3):
                        r = rows[fam]
                        a, b = r.alpha[i], r.beta[i]
                        q = r.q[i] if fam == 1 else max(0.0, -a) * max(0.0, -b)
                        fh.write(
                            f"{r.m[i]},{n},{fam},{a:.17g},{b:.17g},"
                            f"{r.gamma[i]:.17g},{r.c[i]:.17g},"
                            f"{r.delta[i]:.17g},{q:.17g}\n"
                        )

    _check("run_growth_envelope", growth_envelope_ok(rec))
    if cfg.beta == 0.0:
        flat = (np.all(np.diff(rec.tv1) <= 1e-12)
                and np.all(np.diff(rec.tv3) <= 1e-12))
        _check("run_tv_monotone", bool(flat))
    _write_manifest(out)
    return 0


def _final_errors_oracle(cfg: ExperimentConfig, n: int, plan) -> float:
    rec = run(_scheme_config(cfg, n=n, plan=plan, retain_states=False),
              cfg.init1, cfg.init3)
    last = rec.n_levels - 1
    t = float(rec.t[last])
    err = l1_error(rec.profile(1, last), cfg.init1, cfg.alpha, t, family=1)
    err += l1_error(rec.profile(3, last), cfg.init3, cfg.alpha, t, family=3)
    return err


def cmd_converge(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(cfg, args)
    levels = sorted(int(p) for p in args.levels.split(",")) if args.levels else []
    if len(levels) < 2:
        raise ConfigError("converge needs --levels with at least two entries")
    seeds = max(1, args.seeds)
    n_finest = max(levels) + (0 if cfg.beta == 0.0 else 2)

    def plans():
        if seeds == 1:
            return [cfg.plan]
        lam = cfg.lam if cfg.lam is not None else auto_grid_speed(
            cfg.alpha, cfg.beta,
            cfg.init1.total_variation() + cfg.init3.total_variation(),
            cfg.sigma2.l1_mass() if cfg.sigma2 is not None else 0.0)
        count = math.ceil(cfg.t_final * lam * 2.0 ** n_finest - 1e-12) + 1
        return [rotated_plan(cfg.plan.seed + i, count) for i in range(seeds)]

    rows = []
    medians = []
    if cfg.beta == 0.0:
        for n in levels:
            errs = [_final_errors_oracle(cfg, n, plan) for plan in plans()]
            rows.extend((n, i, e) for i, e in enumerate(errs))
            medians.append(float(np.median(errs)))
        mode = "oracle"
    else:
        n_ref = max(levels) + 2
        fine = np.linspace(0.0, 1.0, 1 << 13, endpoint=False) + 2.0 ** -14
        for i, plan in enumerate(plans()):
            ref = run(_scheme_config(cfg, n=n_ref, plan=plan, retain_states=False),
                      cfg.init1, cfg.init3)
            ref1 = ref.profile(1, ref.n_levels - 1).eval_at(fine)
            ref3 = ref.profile(3, ref.n_levels - 1).eval_at(fine)
            for n in levels:
                rec = run(_scheme_config(cfg, n=n, plan=plan,
                                         retain_states=False),
                          cfg.init1, cfg.init3)
                last = rec.n_levels - 1
                err = float(
                    np.mean(np.abs(rec.profile(1, last).eval_at(fine) - ref1))
                    + np.mean(np.abs(rec.profile(3, last).eval_at(fine) - ref3))
                )
                rows.append((n, i, err))
        for n in levels:
            errs = [e for (m, _, e) in rows if m == n]
            medians.append(float(np.median(errs)))
        mode = "self"

    with open(os.path.join(out, "convergence.csv"), "w", newline="\n") as fh:
        fh.write("N,seed,err\n")
        for n, i, e in sorted(rows):
            fh.write(("%d,%d," + _G + "\n") % (n, i, e))

    if mode == "oracle" and len(levels) >= 4:
        _check("converge_monotone",
               all(b < a for a, b in zip(medians, medians[1:])))
    if mode == "self":
        ratios = [b / a for a, b in zip(medians, medians[1:]) if a > 0]
        _check("converge_halving",
               bool(ratios) and all(0.25 <= r <= 0.75 for r in ratios))
    _write_manifest(out)
    return 0


def cmd_ledger(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(cfg, args)
    rec = run(_scheme_config(cfg, retain_hats=True), cfg.init1, cfg.init3)

    diamonds = build_diamonds(rec)
    write_ledger(os.path.join(out, "waves.csv"), diamonds)

    worst_identity = 0.0
    worst_strength = 0.0
    q_total = 0.0
    delta1_total = 0.0
    scale = 1.0
    for fam in (1, 3):
        for n in range(1, rec.n_levels):
            row = strength_row(rec, fam, n)
            resid = np.abs(row.gamma - (row.alpha + row.beta - row.gdiff))
            worst_identity = max(worst_identity, float(np.max(resid, initial=0.0)))
            over = (np.abs(row.gamma) - (np.abs(row.alpha) + np.abs(row.beta)
                                         + row.delta - 2.0 * row.c))
            worst_strength = max(worst_strength, float(np.max(over, initial=0.0)))
            scale = max(scale, float(np.max(np.abs(row.gamma), initial=0.0)))
            if fam == 1:
                q_total += float(np.sum(row.q))
                delta1_total += float(np.sum(row.delta))
    _check("ledger_identity", worst_identity <= 1e-12 * scale)
    _check("ledger_strength_bound", worst_strength <= 1e-12 * scale)
    cap = (float(rec.tv1[0]) + delta1_total) ** 2
    _check("ledger_interaction_bound", q_total <= cap * (1 + 1e-10) + 1e-12)

    m_cells = rec.grid.cells
    starts = sorted({2 * ((k * m_cells) // 8 % m_cells) for k in range(8)})
    all_ok = True
    with open(os.path.join(out, "paths.csv"), "w", newline="\n") as fh:
        fh.write("id,family,t,x,speed,strength\n")
        pid = 0
        for fam in (1, 3):
            paths = [trace_characteristic((m0, 0), fam, rec) for m0 in starts]
            all_ok = all_ok and crossing_check(paths) == []
            for path in paths:
                verts = path.vertices()
                n_seg = path.speeds.size
                for j, (t, x) in enumerate(verts):
                    jj = min(j, n_seg - 1)
                    fh.write(("%d,%d," + ",".join([_G] * 4) + "\n") % (
                        pid, fam, t, x, path.speeds[jj], path.strengths[jj]))
                pid += 1
    _check("ledger_no_crossing", all_ok)
    _write_manifest(out)
    return 0


def cmd_decay(args) -> int:
    cfg = load_config(args.config)
    if cfg.decay is None:
        raise ConfigError("decay needs a [decay] section (t0, t_star, pairs)")
    out = _out_dir(cfg, args)
    t0 = cfg.decay["t0"]
    t_star = cfg.decay["t_star"]  # duration past t0
    if not (t0 > 0.0 and t_star > 0.0 and t0 + t_star <= cfg.t_final):
        raise ConfigError("decay needs t0 > 0, t_star > 0, t0 + t_star <= t_final")
    margin = 0.02 * cfg.t_final
    rec = run(
        _scheme_config(cfg, retain_hats=True,
                       retain_window=(max(0.0, t0 - margin),
                                      t0 + t_star + margin)),
        cfg.init1, cfg.init3,
    )
    reports = decay_report(rec, t0, t_star, cfg.decay["pairs"],
                           m_b=cfg.decay.get("m_b"))

    violations = 0
    with open(os.path.join(out, "decay.csv"), "w", newline="\n") as fh:
        fh.write("pair,m_left,m_right,n,t,D,x1_plus,bound,active,ok\n")
        for i, rep in enumerate(reports):
            violations += rep.violations
            for row in rep.rows:
                fh.write(("%d,%d,%d,%d," + ",".join([_G] * 4) + ",%d,%d\n") % (
                    i, rep.m_left, rep.m_right, row.n, row.t, row.D,
                    row.x1_plus, row.bound, int(row.active), int(row.ok)))
    _check("decay_violations", violations == 0)
    for i, rep in enumerate(reports):
        if rep.coalesced:
            print(f"pair {i} coalesced: {rep.note}")
    _write_manifest(out)
    return 0


def cmd_blowup(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(cfg, args)
    rep = detect_blowup(cfg.init1, cfg.init3, cfg.alpha, beta=cfg.beta,
                        sigma2=cfg.sigma2, **cfg.blowup)
    write_blowup_report(os.path.join(out, "blowup.csv"), rep)
    print(f"certificate: {rep.certificate}")
    if rep.t_b is not None:
        print(("T_b = " + _G + " (bound " + _G + ")") % (rep.t_b, rep.bound))
    if rep.condition_met:
        if rep.t_b is not None:
            bound_ok = rep.t_b <= rep.bound * (1.0 + 1e-9)
        else:
            # a horizon past the bound with no crossing would contradict it
            bound_ok = rep.horizon < rep.bound
    else:
        bound_ok = True
    _check("blowup_bound", bound_ok)
    _check("blowup_gradient_envelope", rep.gradient_bound_ok())
    _check("blowup_bootstrap_window", rep.bootstrap_ok())
    _write_manifest(out)
    return 0


def cmd_verify_kernel(args) -> int:
    cfg = load_config(args.config)
    if cfg.sigma2 is None or cfg.beta <= 0.0:
        raise ConfigError("verify-kernel needs beta > 0 and a [sigma2] section")
    out = _out_dir(cfg, args)
    table = build_kernel_table(cfg.sigma2, cfg.alpha, cfg.beta, cfg.n)
    with open(os.path.join(out, "kernel.csv"), "w", newline="\n") as fh:
        fh.write("m,k_cell\n")
        for m in range(table.Kcells.size):
            fh.write(("%d," + _G + "\n") % (m, table.Kcells[m]))

    peak = float(np.max(np.abs(table.Kcells)))
    target = 0.5 * cfg.beta * table.E
    zero_ok = all(abs(table.parity_sum(p)) <= 1e-12 * max(peak, 1e-300)
                  for p in (0, 1))
    mass_ok = all(abs(table.parity_abs_sum(p) - target) <= 0.02 * target
                  for p in (0, 1))
    _check("kernel_zero_sum", zero_ok)
    _check("kernel_mass", mass_ok)
    _write_manifest(out)
    return 0


def _read_columns(path: str, needed) -> dict:
    if not os.path.isfile(path):
        raise ConfigError(f"missing artifact {path}; run the producing command first")
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        for col in needed:
            if col not in header:
                raise ConfigError(f"{path} lacks column {col!r}")
        idx = {col: header.index(col) for col in needed}
        out = {col: [] for col in needed}
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if len(parts) < len(header):
                continue  # trailing non-data line (e.g. a certificate)
            try:
                vals = {col: float(parts[idx[col]]) for col in needed}
            except ValueError:
                continue
            for col in needed:
                out[col].append(vals[col])
    return {col: np.asarray(v) for col, v in out.items()}


def cmd_plot(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(cfg, args)
    select = [s for s in (args.select or "").split(",") if s]
    wrote = False
    for name in select:
        if name == "tv":
            cols = _read_columns(os.path.join(out, "diagnostics.csv"),
                                 ("t", "tv1", "tv3"))
            total = cols["tv1"] + cols["tv3"]
            curves = [Curve("tv1 + tv3", cols["t"], total, PALETTE[0])]
            if cfg.beta > 0.0 and cfg.sigma2 is not None:
                rate = cfg.beta * cfg.sigma2.l1_mass()
                env = total[0] * np.exp(rate * cols["t"])
                curves.append(Curve("envelope", cols["t"], env, PALETTE[1], "6,3"))
            line_chart(os.path.join(out, "tv.svg"), curves,
                       title="total variation", x_label="t", y_label="TV")
            chart_data_csv(os.path.join(out, "tv_plot.csv"), curves)
        elif name == "profiles":
            cols = _read_columns(os.path.join(out, "snapshots.csv"),
                                 ("level", "t", "family", "x", "u"))
            for fam in (1, 3):
                curves = []
                sel = cols["family"] == fam
                for i, lev in enumerate(np.unique(cols["level"][sel])):
                    keep = sel & (cols["level"] == lev)
                    t = cols["t"][keep][0]
                    order = np.argsort(cols["x"][keep])
                    curves.append(Curve(
                        f"t={t:.4g}", cols["x"][keep][order],
                        cols["u"][keep][order], PALETTE[i % len(PALETTE)]))
                line_chart(os.path.join(out, f"profiles{fam}.svg"), curves,
                           title=f"family {fam}", x_label="x", y_label="u")
                chart_data_csv(os.path.join(out, f"profiles{fam}_plot.csv"), curves)
        elif name == "fan":
            cols = _read_columns(os.path.join(out, "paths.csv"),
                                 ("id", "family", "t", "x"))
            curves = []
            for i, pid in enumerate(np.unique(cols["id"])):
                keep = cols["id"] == pid
                xs = cols["x"][keep].copy()
                ts = cols["t"][keep]
                # break the polyline at periodic wraps
                jump = np.abs(np.diff(xs)) > 0.5
                xs[1:][jump] = np.nan
                fam = int(cols["family"][keep][0])
                curves.append(Curve(f"path {int(pid)} (f{fam})", xs, ts,
                                    PALETTE[i % len(PALETTE)]))
            line_chart(os.path.join(out, "fan.svg"), curves,
                       title="approximate characteristics", x_label="x",
                       y_label="t")
            chart_data_csv(os.path.join(out, "fan_plot.csv"), curves)
        elif name == "jacobian":
            cols = _read_columns(os.path.join(out, "blowup.csv"),
                                 ("t", "min_jacobian"))
            curves = [Curve("min jacobian", cols["t"], cols["min_jacobian"],
                            PALETTE[0]),
                      Curve("zero", cols["t"], np.zeros_like(cols["t"]),
                            PALETTE[3], "2,3")]
            line_chart(os.path.join(out, "jacobian.svg"), curves,
                       title="label-to-position jacobian", x_label="t",
                       y_label="min jacobian")
            chart_data_csv(os.path.join(out, "jacobian_plot.csv"), curves)
        else:
            raise ConfigError(
                f"unknown plot selection {name!r}; "
                "choose from tv, profiles, fan, jacobian")
        wrote = True
    if wrote:
        _write_manifest(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wnlo",
        description="random-choice experiments for the coupled system",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="INI experiment config")
        p.add_argument("--out", help="output directory (beats WNLO_OUTPUT_DIR)")
        p.set_defaults(func=func)
        return p

    add("run", cmd_run, "run the scheme and write diagnostics + snapshots")
    conv = add("converge", cmd_converge, "refinement study across grid levels")
    conv.add_argument("--levels", required=True, help="comma list, e.g. 6,7,8,9")
    conv.add_argument("--seeds", type=int, default=1,
                      help="median over this many seeded-uniform samplings")
    add("ledger", cmd_ledger, "wave strengths, interaction bounds, paths")
    add("decay", cmd_decay, "spreading-based decay bound between paths")
    add("blowup", cmd_blowup, "smooth characteristic crossing experiment")
    add("verify-kernel", cmd_verify_kernel, "kernel cell-sum properties")
    plot = add("plot", cmd_plot, "SVG charts from existing artifacts")
    plot.add_argument("--select", default="",
                      help="comma list of tv, profiles, fan, jacobian")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CflViolation as exc:
        print(f"grid speed violation: {exc}", file=sys.stderr)
        return 3
    except NonFiniteState as exc:
        print(f"non-finite state: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
