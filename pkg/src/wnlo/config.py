"""INI experiment configs: one sectioned file drives every subcommand.

Sections: grid {n, lambda}, coeffs {alpha, beta}, sigma2 {kind, ...},
init {sigma1, sigma3, center}, sampling {kind, seed}, time {t_final,
snapshot_stride}, output {dir, retain_ledger}, plus the optional command
sections decay {t0, t_star, pairs, m_b} and blowup {labels, horizon, dt}.
Field values use a one-line mini-language: `kind key=value ...` with
comma-separated lists, e.g. `steps breaks=0,0.5 levels=0.8,0.2`.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

from .initial import FieldSpec
from .kernel import EntropyWaveSpec
from .sampling import SamplePlan

__all__ = ["ConfigError", "ExperimentConfig", "parse_field", "load_config"]

MEAN_TOL = 1e-12


class ConfigError(ValueError):
    pass


def _parse_value(text: str):
    text = text.strip()
    if "," in text:
        return tuple(float(p) for p in text.split(","))
    return float(text)


def parse_field(text: str) -> FieldSpec:
    """One-line field spec: `sine amplitude=0.25 mode=1`."""
    tokens = text.split()
    if not tokens:
        raise ConfigError("empty field spec")
    kind = tokens[0]
    params = {}
    for tok in tokens[1:]:
        if "=" not in tok:
            raise ConfigError(f"field parameter {tok!r} is not key=value")
        key, _, val = tok.partition("=")
        try:
            params[key] = _parse_value(val)
        except ValueError:
            raise ConfigError(f"field parameter {tok!r} is not numeric")
    if kind == "sine" or kind == "cosine":
        params.setdefault("mode", 1.0)
        params["mode"] = int(params["mode"])
    try:
        return FieldSpec(kind, params)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad field spec {text!r}: {exc}")


def _parse_sigma2(section) -> EntropyWaveSpec:
    kind = section.get("kind", "").strip()
    params = {}
    for key in section:
        if key == "kind":
            continue
        val = _parse_value(section[key])
        params[key] = val if isinstance(val, tuple) else (val,)
    try:
        return EntropyWaveSpec(kind, params)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad sigma2 section: {exc}")


def _parse_pairs(text: str):
    """Decay pairs as `0:32,32:96` (mesh indices at the window start)."""
    pairs = []
    for part in text.split(","):
        left, sep, right = part.partition(":")
        if not sep:
            raise ConfigError(f"decay pair {part!r} is not left:right")
        try:
            pairs.append((int(left), int(right)))
        except ValueError:
            raise ConfigError(f"decay pair {part!r} is not integer indices")
    if not pairs:
        raise ConfigError("decay pairs list is empty")
    return pairs


@dataclass
class ExperimentConfig:
    n: int
    lam: float | None
    alpha: float
    beta: float
    sigma2: EntropyWaveSpec | None
    init1: FieldSpec
    init3: FieldSpec
    plan: SamplePlan
    t_final: float
    snapshot_stride: int
    out_dir: str
    retain_ledger: bool
    decay: dict | None = None
    blowup: dict = field(default_factory=dict)


def load_config(path: str) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path!r}: {exc}")

    try:
        n = parser.getint("grid", "n")
        alpha = parser.getfloat("coeffs", "alpha")
        beta = parser.getfloat("coeffs", "beta", fallback=0.0)
        t_final = parser.getfloat("time", "t_final")
    except (configparser.Error, ValueError) as exc:
        raise ConfigError(str(exc))
    if n < 2 or n > 24:
        raise ConfigError(f"grid n={n} out of the supported range [2, 24]")
    if alpha <= 0.0:
        raise ConfigError("alpha must be positive")
    if beta < 0.0:
        raise ConfigError("beta must be nonnegative")
    if t_final <= 0.0:
        raise ConfigError("t_final must be positive")

    lam_raw = parser.get("grid", "lambda", fallback="auto").strip()
    if lam_raw == "auto":
        lam = None
    else:
        try:
            lam = float(lam_raw)
        except ValueError:
            raise ConfigError(f"grid lambda={lam_raw!r} is neither a number nor auto")
        if lam <= 0.0:
            raise ConfigError("grid lambda must be positive")

    sigma2 = _parse_sigma2(parser["sigma2"]) if parser.has_section("sigma2") else None
    if beta > 0.0 and sigma2 is None:
        raise ConfigError("beta > 0 needs a [sigma2] section")

    if not parser.has_section("init"):
        raise ConfigError("missing [init] section")
    center = parser.getboolean("init", "center", fallback=False)
    specs = []
    for key in ("sigma1", "sigma3"):
        raw = parser.get("init", key, fallback="zero")
        spec = parse_field(raw)
        if abs(spec.mean()) > MEAN_TOL:
            if not center:
                raise ConfigError(
                    f"init {key} has mean {spec.mean():g}; the fields must be "
                    "zero-mean (set center = true to subtract it)"
                )
            spec = spec.centered()
        specs.append(spec)
    init1, init3 = specs

    kind = parser.get("sampling", "kind", fallback="van_der_corput").strip()
    seed = parser.getint("sampling", "seed", fallback=0)
    try:
        plan = SamplePlan(kind, seed=seed)
    except ValueError as exc:
        raise ConfigError(str(exc))

    stride = parser.getint("time", "snapshot_stride", fallback=0)
    if stride < 0:
        raise ConfigError("snapshot_stride must be >= 0")
    out_dir = parser.get("output", "dir", fallback="out")
    retain = parser.getboolean("output", "retain_ledger", fallback=False)

    decay = None
    if parser.has_section("decay"):
        sec = parser["decay"]
        try:
            decay = {
                "t0": float(sec["t0"]),
                "t_star": float(sec["t_star"]),
                "pairs": _parse_pairs(sec["pairs"]),
            }
        except KeyError as exc:
            raise ConfigError(f"[decay] section needs key {exc}")
        except ValueError as exc:
            raise ConfigError(f"bad [decay] section: {exc}")
        if "m_b" in sec:
            decay["m_b"] = float(sec["m_b"])

    blowup = {}
    if parser.has_section("blowup"):
        sec = parser["blowup"]
        try:
            if "labels" in sec:
                blowup["n_labels"] = int(sec["labels"])
            if "horizon" in sec:
                blowup["horizon"] = float(sec["horizon"])
            if "dt" in sec:
                blowup["dt"] = float(sec["dt"])
        except ValueError as exc:
            raise ConfigError(f"bad [blowup] section: {exc}")

    return ExperimentConfig(
        n=n, lam=lam, alpha=alpha, beta=beta, sigma2=sigma2,
        init1=init1, init3=init3, plan=plan, t_final=t_final,
        snapshot_stride=stride, out_dir=out_dir, retain_ledger=retain,
        decay=decay, blowup=blowup,
    )
