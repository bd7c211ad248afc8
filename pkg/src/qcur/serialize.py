"""JSON schemas for matrices, assemblages, channels, measurement sets and wirings.

Complex matrices are stored row-major as two flat lists::

    {"re": [...], "im": [...]}

with the shape carried by the enclosing object. An assemblage reads::

    {"type": "assemblage", "dim": 2, "n_settings": 2, "n_outcomes": [2, 2],
     "members": [[{"re": ..., "im": ...}, ...], ...]}

A channel is ``{"type": "kraus_channel", "dim_in", "dim_out", "kraus": [...]}``
and a measurement set mirrors it as
``{"type": "measurement_set", "dim", "labels", "settings": [[effect, ...], ...]}``.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .channels import KrausChannel, OneWayGIOProtocol, WiringMap
from .qmat import ValidationError
from .steering import Assemblage, MeasurementSet

SIG_DIGITS = 9


def round_sig(obj: Any, digits: int = SIG_DIGITS) -> Any:
    """Recursively round floats to ``digits`` significant digits for output."""
    if isinstance(obj, dict):
        return {str(k): round_sig(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_sig(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return round_sig(obj.tolist(), digits)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
        return float(f"{x:.{digits}g}")
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(round_sig(obj), indent=2, sort_keys=True) + "\n"


def fmt(x: float) -> str:
    return f"{float(x):.{SIG_DIGITS}g}"


def _entries(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"re": m.real.reshape(-1).tolist(), "im": m.imag.reshape(-1).tolist()}


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"rows": m.shape[0], "cols": m.shape[1], **_entries(m)}


def _field(obj: dict, key: str, where: str):
    if not isinstance(obj, dict):
        raise ValidationError(f"{where}: expected an object")
    if key not in obj:
        raise ValidationError(f"{where}: missing field {key!r}")
    return obj[key]


def _matrix(obj: dict, rows: int, cols: int, where: str) -> np.ndarray:
    re = np.asarray(_field(obj, "re", where), dtype=float).reshape(-1)
    im = np.asarray(obj.get("im", np.zeros(re.size)), dtype=float).reshape(-1)
    if re.size != rows * cols or im.size != rows * cols:
        raise ValidationError(f"{where}: expected {rows * cols} entries, got re={re.size}, im={im.size}")
    return (re + 1j * im).reshape(rows, cols)


def matrix_from_json(obj: dict, where: str = "matrix") -> np.ndarray:
    rows = int(_field(obj, "rows", where))
    cols = int(_field(obj, "cols", where))
    return _matrix(obj, rows, cols, where)


def assemblage_to_json(asm: Assemblage) -> dict:
    return {
        "type": "assemblage",
        "dim": asm.dim,
        "n_settings": asm.n_settings,
        "n_outcomes": [asm.n_outcomes(x) for x in range(asm.n_settings)],
        "members": [[_entries(s) for s in m] for m in asm.members],
    }


def assemblage_from_json(obj: dict) -> Assemblage:
    d = int(_field(obj, "dim", "assemblage"))
    members = _field(obj, "members", "assemblage")
    out = []
    for x, row in enumerate(members):
        out.append(np.stack([_matrix(e, d, d, f"members[{x}][{a}]") for a, e in enumerate(row)]))
    if "n_settings" in obj and int(obj["n_settings"]) != len(out):
        raise ValidationError(f"assemblage: n_settings={obj['n_settings']} but {len(out)} settings given")
    return Assemblage(out)


def channel_to_json(ch: KrausChannel) -> dict:
    return {"type": "kraus_channel", "dim_in": ch.dim_in, "dim_out": ch.dim_out,
            "kraus": [_entries(k) for k in ch.kraus]}


def channel_from_json(obj: dict, tol: float | None = None) -> KrausChannel:
    di = int(_field(obj, "dim_in", "channel"))
    do = int(obj.get("dim_out", di))
    ks = np.stack([_matrix(k, do, di, f"kraus[{i}]") for i, k in enumerate(_field(obj, "kraus", "channel"))])
    return KrausChannel(ks) if tol is None else KrausChannel(ks, tol=tol)


def measurement_set_to_json(m: MeasurementSet) -> dict:
    return {"type": "measurement_set", "dim": m.dim, "labels": list(m.labels),
            "settings": [[_entries(e) for e in p.effects] for p in m.settings]}


def measurement_set_from_json(obj: dict) -> MeasurementSet:
    d = int(_field(obj, "dim", "measurement_set"))
    settings = _field(obj, "settings", "measurement_set")
    if not settings:
        raise ValidationError("measurement_set: at least one setting is required")
    eff = [np.stack([_matrix(e, d, d, f"settings[{x}][{a}]") for a, e in enumerate(row)])
           for x, row in enumerate(settings)]
    return MeasurementSet.from_effects(eff, labels=obj.get("labels"))


def wiring_to_json(w: WiringMap) -> dict:
    return {"type": "wiring", "p_x_given_xp": w.p_x_given_xp.tolist(), "p_ap_given": w.p_ap_given.tolist()}


def wiring_from_json(obj: dict) -> WiringMap:
    return WiringMap(np.asarray(_field(obj, "p_x_given_xp", "wiring")), np.asarray(_field(obj, "p_ap_given", "wiring")))


def protocol_to_json(p: OneWayGIOProtocol) -> dict:
    return {"type": "one_way_gio", "seed": p.seed, "branch_probs": p.branch_probs.tolist(),
            "channels": [channel_to_json(c) for c in p.branch_channels],
            "wirings": [wiring_to_json(w) for w in p.branch_wirings]}


_LOADERS = {
    "assemblage": assemblage_from_json,
    "kraus_channel": channel_from_json,
    "measurement_set": measurement_set_from_json,
    "wiring": wiring_from_json,
}


def loads(text: str):
    """Parse any of the schemas above, dispatching on ``type``.

    JSON syntax errors are reported with their line and column.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None
    kind = _field(obj, "type", "document")
    if kind not in _LOADERS:
        raise ValidationError(f"unknown document type {kind!r}; expected one of {sorted(_LOADERS)}")
    try:
        return _LOADERS[kind](obj)
    except (TypeError, ValueError) as e:
        if isinstance(e, ValidationError):
            raise
        raise ValidationError(f"{kind}: {e}") from None
