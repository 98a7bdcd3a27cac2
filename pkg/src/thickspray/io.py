"""Time series, JSON reports and binary snapshots."""

from __future__ import annotations

import csv
import json
import math
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .collision import ScalingParams
from .collision.dsmc import KineticEnsemble
from .config import fmt_float
from .spray import CSV_COLUMNS, GasField, ParticlePhase

REPORT_SCHEMA_VERSION = 1
SNAPSHOT_FORMAT = "thickspray-snapshot"
SNAPSHOT_VERSION = 1


class OutputError(OSError):
    def __init__(self, path, cause):
        self.path = str(path)
        super().__init__(f"{path}: {cause}")


def _open(path, mode):
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        return open(path, mode, newline="" if "b" not in mode else None)
    except OSError as e:
        raise OutputError(path, e.strerror or e) from e


# -- CSV -------------------------------------------------------------------------


def _cell(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return fmt_float(x)


def write_timeseries(path, rows) -> Path:
    """CSV with the fixed column order; an empty row list gives a header-only file."""
    with _open(path, "w") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in rows:
            vals = [r[c] for c in CSV_COLUMNS] if isinstance(r, dict) else list(r)
            if len(vals) != len(CSV_COLUMNS):
                raise ValueError(f"row has {len(vals)} fields, expected {len(CSV_COLUMNS)}")
            w.writerow([_cell(v) for v in vals])
    return Path(path)


def read_timeseries(path) -> list[dict]:
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if rd.fieldnames != list(CSV_COLUMNS):
            raise ValueError(f"{path}: unexpected header {rd.fieldnames}")
        return [{k: float(v) for k, v in row.items()} for row in rd]


# -- JSON reports --------------------------------------------------------------------


def report_schema() -> dict:
    return json.loads(resources.files("thickspray").joinpath("schemas/report.schema.json").read_text())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    return obj


def validate_report(report: dict) -> dict:
    jsonschema.validate(report, report_schema())
    return report


def to_report(report: dict) -> dict:
    out = {"schema_version": REPORT_SCHEMA_VERSION, **_jsonable(report)}
    return validate_report(out)


def write_report(path, report: dict) -> Path:
    """Validated JSON; floats use repr, which round-trips doubles exactly."""
    out = to_report(report)
    with _open(path, "w") as fh:
        json.dump(out, fh, indent=2, allow_nan=False)
        fh.write("\n")
    return Path(path)


def read_report(path) -> dict:
    with open(path) as fh:
        return validate_report(json.load(fh))


# -- snapshots ----------------------------------------------------------------------

_GAS = ("alpha", "n", "u", "theta", "vacuum")
_PHASE = ("x", "v", "w")
_ENS = ("gas_x", "gas_w", "particle_x", "particle_v")
_ENS_SCALARS = ("weight", "cell_count", "rng_seed", "step", "time", "collide_gas", "collide_cross", "events_gg", "events_gp")
_PARAMS = ("eta", "delta", "a", "m_g", "m_p")


def save_snapshot(path, t: float = 0.0, gas: GasField | None = None, phase: ParticlePhase | None = None,
                  ensemble: KineticEnsemble | None = None) -> Path:
    """Versioned .npz; every array is tagged '<kind>/<field>'."""
    rec = {"meta/format": np.array(SNAPSHOT_FORMAT), "meta/version": np.array(SNAPSHOT_VERSION), "meta/t": np.array(float(t))}
    kinds = []
    if gas is not None:
        kinds.append("gas")
        rec.update({f"gas/{k}": np.asarray(getattr(gas, k)) for k in _GAS})
        rec["gas/m_g"] = np.array(gas.m_g)
    if phase is not None:
        kinds.append("phase")
        rec.update({f"phase/{k}": np.asarray(getattr(phase, k)) for k in _PHASE})
        rec["phase/a"] = np.array(phase.a)
    if ensemble is not None:
        kinds.append("ensemble")
        rec.update({f"ensemble/{k}": np.asarray(getattr(ensemble, k)) for k in _ENS})
        rec.update({f"ensemble/{k}": np.array(getattr(ensemble, k)) for k in _ENS_SCALARS})
        rec.update({f"ensemble/params/{k}": np.array(float(getattr(ensemble.params, k))) for k in _PARAMS})
    rec["meta/kinds"] = np.array(kinds, dtype=str)
    with _open(path, "wb") as fh:
        np.savez(fh, **rec)
    return Path(path)


def load_snapshot(path) -> dict:
    """Returns {'t', 'gas'?, 'phase'?, 'ensemble'?}."""
    try:
        z = np.load(path, allow_pickle=False)
    except OSError as e:
        raise OutputError(path, e) from e
    with z:
        if "meta/format" not in z.files or str(z["meta/format"]) != SNAPSHOT_FORMAT:
            raise ValueError(f"{path}: not a {SNAPSHOT_FORMAT} file")
        version = int(z["meta/version"])
        if version != SNAPSHOT_VERSION:
            raise ValueError(f"{path}: snapshot version {version} unsupported (expected {SNAPSHOT_VERSION})")
        kinds = [str(k) for k in z["meta/kinds"]]
        out = {"t": float(z["meta/t"])}
        if "gas" in kinds:
            g = {k: z[f"gas/{k}"] for k in _GAS}
            out["gas"] = GasField(g["alpha"], g["n"], g["u"], g["theta"], float(z["gas/m_g"]), g["vacuum"])
        if "phase" in kinds:
            out["phase"] = ParticlePhase(*(z[f"phase/{k}"] for k in _PHASE), float(z["phase/a"]))
        if "ensemble" in kinds:
            p = ScalingParams(**{k: float(z[f"ensemble/params/{k}"]) for k in _PARAMS})
            sc = {k: z[f"ensemble/{k}"].item() for k in _ENS_SCALARS}
            out["ensemble"] = KineticEnsemble(*(z[f"ensemble/{k}"] for k in _ENS), params=p, **sc)
    return out
