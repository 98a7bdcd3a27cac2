"""Scenario configuration: an INI grammar shared by every subcommand.

Grammar: ``[section]`` headers, ``key = value`` lines, ``#`` comments.
Vectors are comma separated, lists of pairs use ``eta/delta`` items.
Parsing collects every violation before failing; ``print_config`` emits
the effective configuration with 17 significant digits, so
``parse_config(print_config(c)) == c``.
"""

from __future__ import annotations

import configparser
import difflib
import inspect
import math
from dataclasses import dataclass, field, fields

from .collision import ScalingParams
from .quadrature import QuadratureSpec
from .spray.presets import BUILDERS, PRESETS

MODES = ("spray", "thin-spray", "dsmc", "verify-prop1", "verify-prop3", "remainder-scaling", "compare-moments")
SECTIONS = ("run", "params", "grid", "initial", "quadrature", "dsmc", "verify")
# preset arguments supplied from other sections
MANAGED = {"cells", "a", "m_g", "thin", "seed"}


class ConfigError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.violations))


# -- value codecs --------------------------------------------------------------


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def _parse_bool(s: str) -> bool:
    t = s.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_vec(s: str) -> tuple:
    return tuple(float(p) for p in s.split(",") if p.strip())


def _parse_pairs(s: str) -> tuple:
    out = []
    for item in s.split(","):
        if item.strip():
            e, d = item.split("/")
            out.append((float(e), float(d)))
    return tuple(out)


CODECS = {
    "str": (str.strip, str),
    "int": (int, str),
    "float": (float, fmt_float),
    "bool": (_parse_bool, lambda b: "true" if b else "false"),
    "vec": (_parse_vec, lambda v: ", ".join(fmt_float(x) for x in v)),
    "pairs": (_parse_pairs, lambda p: ", ".join(f"{fmt_float(e)}/{fmt_float(d)}" for e, d in p)),
}


def _kind(default) -> str:
    if isinstance(default, bool):
        return "bool"
    if isinstance(default, int):
        return "int"
    if isinstance(default, float):
        return "float"
    if isinstance(default, (tuple, list)):
        return "vec"
    return "str"


# -- key schemas ---------------------------------------------------------------

RUN_KEYS = {"mode": ("str", "spray"), "seed": ("int", 0), "dt": ("float", 0.0), "t_final": ("float", 1.0),
            "output_every": ("int", 1), "remainder_every": ("int", 0)}
PARAM_KEYS = {"eta": ("float", 0.05), "delta": ("float", 0.05), "a": ("float", 0.05), "m_g": ("float", 1.0),
              "m_p": ("float", None)}
GRID_KEYS = {"cells": ("int", 64)}
QUAD_KEYS = {f.name: (_kind(f.default), f.default) for f in fields(QuadratureSpec)}
DSMC_KEYS = {"n_gas": ("int", 10_000), "n_particles": ("int", 500), "gas_T": ("float", 1.0),
             "gas_u": ("vec", (0.0, 0.0, 0.0)), "particle_v": ("vec", (0.0, 0.0, 0.0)),
             "particle_T": ("float", 0.0), "collide_gas": ("bool", True), "collide_cross": ("bool", True)}
VERIFY_KEYS = {"case": ("str", "uniform-slip"), "phi": ("str", "v1"), "eta_list": ("vec", (0.1, 0.05, 0.025)),
               "a_list": ("vec", (0.08, 0.04, 0.02)), "samples": ("int", 1_000_000),
               "scenario": ("str", "sinusoidal-F"), "slip": ("float", 2.0), "particles": ("int", 500),
               "horizons": ("int", 10), "schedule": ("pairs", ((0.1, 0.1), (0.05, 0.05), (0.025, 0.025)))}


def preset_keys(name: str) -> dict:
    sig = inspect.signature(BUILDERS[name])
    return {
        k: (_kind(p.default), p.default)
        for k, p in sig.parameters.items()
        if p.kind is p.POSITIONAL_OR_KEYWORD and k not in MANAGED
    }


# -- the config object ----------------------------------------------------------


@dataclass
class ScenarioConfig:
    mode: str = "spray"
    params: ScalingParams = field(default_factory=lambda: ScalingParams(0.05, 0.05, 0.05))
    cells: int = 64
    dt: float = 0.0  # 0 selects a stable step automatically
    t_final: float = 1.0
    output_every: int = 1
    remainder_every: int = 0
    seed: int = 0
    preset: str = "uniform"
    initial: dict = field(default_factory=dict)
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    dsmc: dict = field(default_factory=lambda: {k: d for k, (_, d) in DSMC_KEYS.items()})
    verify: dict = field(default_factory=lambda: {k: d for k, (_, d) in VERIFY_KEYS.items()})

    @property
    def thin(self) -> bool:
        return self.mode == "thin-spray"

    def preset_kwargs(self) -> dict:
        kw = dict(self.initial)
        allowed = inspect.signature(BUILDERS[self.preset]).parameters
        extra = {"cells": self.cells, "a": self.params.a, "m_g": self.params.m_g, "thin": self.thin, "seed": self.seed}
        kw.update({k: v for k, v in extra.items() if k in allowed})
        return kw


def _suggest(key: str, valid) -> str:
    near = difflib.get_close_matches(key, list(valid), n=1)
    return f"; did you mean {near[0]!r}?" if near else ""


def _read_section(cp, name, schema, errors) -> dict:
    out = {}
    if not cp.has_section(name):
        return out
    for key, raw in cp.items(name):
        if key not in schema:
            errors.append(f"[{name}] unknown key {key!r}{_suggest(key, schema)}")
            continue
        kind = schema[key][0]
        try:
            out[key] = CODECS[kind][0](raw)
        except ValueError as e:
            errors.append(f"[{name}] {key} = {raw!r}: expected {kind} ({e})")
    return out


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate; raises ConfigError listing every violation."""
    cp = configparser.ConfigParser(comment_prefixes=("#",), inline_comment_prefixes=("#",),
                                   interpolation=None, strict=True)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError([f"syntax: {e}"]) from None
    errors = []
    for s in cp.sections():
        if s not in SECTIONS:
            errors.append(f"unknown section [{s}]{_suggest(s, SECTIONS)}")

    run = _read_section(cp, "run", RUN_KEYS, errors)
    par = _read_section(cp, "params", PARAM_KEYS, errors)
    grid = _read_section(cp, "grid", GRID_KEYS, errors)
    quad = _read_section(cp, "quadrature", QUAD_KEYS, errors)
    dsmc = _read_section(cp, "dsmc", DSMC_KEYS, errors)
    ver = _read_section(cp, "verify", VERIFY_KEYS, errors)

    preset = "uniform"
    initial = {}
    if cp.has_section("initial"):
        preset = cp.get("initial", "preset", fallback="uniform").strip()
        if preset not in PRESETS:
            errors.append(f"[initial] unknown preset {preset!r}{_suggest(preset, PRESETS)}")
        else:
            schema = {"preset": ("str", preset), **preset_keys(preset)}
            initial = _read_section(cp, "initial", schema, errors)
            initial.pop("preset", None)

    cfg = ScenarioConfig()
    cfg.mode = run.get("mode", cfg.mode)
    for k in ("seed", "dt", "t_final", "output_every", "remainder_every"):
        if k in run:
            setattr(cfg, k, run[k])
    cfg.cells = grid.get("cells", cfg.cells)
    cfg.preset, cfg.initial = preset, initial
    cfg.dsmc.update(dsmc)
    cfg.verify.update(ver)

    defaults = {k: d for k, (_, d) in PARAM_KEYS.items()}
    defaults.update(par)
    try:
        cfg.params = ScalingParams(**defaults)
    except ValueError as e:
        errors.extend(f"[params] {m}" for m in str(e).split("; "))
    try:
        cfg.quad = QuadratureSpec(**quad)
    except ValueError as e:
        errors.append(f"[quadrature] {e}")

    errors.extend(validate(cfg, params_ok=not any(e.startswith("[params]") for e in errors)))
    if errors:
        raise ConfigError(errors)
    return cfg


def validate(cfg: ScenarioConfig, params_ok: bool = True) -> list[str]:
    """Checks that do not need a run: ranges, CFL for explicit dt, packing of the preset."""
    errs = []
    if cfg.mode not in MODES:
        errs.append(f"[run] unknown mode {cfg.mode!r}{_suggest(cfg.mode, MODES)}")
    if cfg.cells < 3:
        errs.append(f"[grid] cells must be >= 3, got {cfg.cells}")
    if not (math.isfinite(cfg.t_final) and cfg.t_final >= 0):
        errs.append(f"[run] t_final must be finite and >= 0, got {cfg.t_final}")
    if not (math.isfinite(cfg.dt) and cfg.dt >= 0):
        errs.append(f"[run] dt must be finite and >= 0 (0 = automatic), got {cfg.dt}")
    if cfg.output_every < 1:
        errs.append(f"[run] output_every must be >= 1, got {cfg.output_every}")
    if cfg.remainder_every < 0:
        errs.append(f"[run] remainder_every must be >= 0, got {cfg.remainder_every}")
    if cfg.seed < 0 or cfg.seed >= 2**64:
        errs.append(f"[run] seed must be an unsigned 64-bit integer, got {cfg.seed}")
    d = cfg.dsmc
    for k in ("n_gas", "n_particles"):
        if d[k] < 0:
            errs.append(f"[dsmc] {k} must be >= 0, got {d[k]}")
    if d["gas_T"] <= 0 or d["particle_T"] < 0:
        errs.append("[dsmc] gas_T must be > 0 and particle_T >= 0")
    for k in ("gas_u", "particle_v"):
        if len(d[k]) != 3:
            errs.append(f"[dsmc] {k} needs 3 components, got {len(d[k])}")
    v = cfg.verify
    if v["samples"] < 10_000:
        errs.append(f"[verify] samples must be >= 10000, got {v['samples']}")
    for k in ("eta_list", "a_list"):
        vals = v[k]
        if len(vals) < 2 or any(x <= 0 for x in vals) or any(x <= y for x, y in zip(vals, vals[1:])):
            errs.append(f"[verify] {k} must hold >= 2 positive, strictly descending values")
    if cfg.mode == "dsmc" and params_ok and cfg.dt > 0.2 * cfg.params.delta and d["collide_gas"]:
        errs.append(f"[run] dt={cfg.dt} exceeds the DSMC stability bound 0.2*delta={0.2 * cfg.params.delta}")
    if cfg.mode in ("spray", "thin-spray") and params_ok and not errs and cfg.preset in PRESETS:
        errs.extend(_check_spray(cfg))
    return errs


def _check_spray(cfg: ScenarioConfig) -> list[str]:
    from .spray import SolverError, build_preset, stable_dt

    try:
        state = build_preset(cfg.preset, **cfg.preset_kwargs())
    except SolverError as e:
        return [f"[initial] {e}"]
    except (ValueError, TypeError) as e:
        return [f"[initial] preset {cfg.preset!r}: {e}"]
    limit = stable_dt(state.gas)
    if cfg.dt > limit:
        return [f"[run] dt={cfg.dt} violates the CFL bound {limit:.6g} for the initial state"]
    return []


# -- printing -------------------------------------------------------------------


def _emit(lines, section, schema, values):
    lines.append(f"[{section}]")
    for k, val in values.items():
        if val is None:
            continue
        lines.append(f"{k} = {CODECS[schema[k][0]][1](val)}")
    lines.append("")


def print_config(cfg: ScenarioConfig) -> str:
    """Effective configuration as INI text (every key, defaults included)."""
    lines = []
    _emit(lines, "run", RUN_KEYS, {"mode": cfg.mode, "seed": cfg.seed, "dt": cfg.dt, "t_final": cfg.t_final,
                                   "output_every": cfg.output_every, "remainder_every": cfg.remainder_every})
    p = cfg.params
    _emit(lines, "params", PARAM_KEYS, {"eta": p.eta, "delta": p.delta, "a": p.a, "m_g": p.m_g, "m_p": p.m_p})
    _emit(lines, "grid", GRID_KEYS, {"cells": cfg.cells})
    schema = {"preset": ("str", cfg.preset), **preset_keys(cfg.preset)}
    _emit(lines, "initial", schema, {"preset": cfg.preset, **cfg.initial})
    _emit(lines, "quadrature", QUAD_KEYS, {f.name: getattr(cfg.quad, f.name) for f in fields(QuadratureSpec)})
    _emit(lines, "dsmc", DSMC_KEYS, cfg.dsmc)
    _emit(lines, "verify", VERIFY_KEYS, cfg.verify)
    return "\n".join(lines)
