"""Scenario files and deterministic CSV, JSON and SVG writers."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .model import ExpRadial, RateTable, RunControls, Scenario, Tabulated, make_scenario


class ScenarioError(ValueError):
    """Malformed scenario document; the message names the offending field."""


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# parsing

def _matrix(value: Any, where: str) -> np.ndarray:
    """Square matrix from nested lists whose entries are numbers or ``[re, im]`` pairs."""
    try:
        rows = [[complex(e[0], e[1]) if isinstance(e, (list, tuple)) else complex(e) for e in row]
                for row in value]
        arr = np.array(rows, dtype=complex)
    except (TypeError, ValueError, IndexError) as exc:
        raise ScenarioError(f"field {where!r}: expected a matrix of numbers or [re, im] pairs") from exc
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ScenarioError(f"field {where!r}: matrix must be square, got shape {arr.shape}")
    return arr


def _real_matrix(value: Any, where: str) -> np.ndarray:
    arr = _matrix(value, where)
    if np.any(arr.imag != 0):
        raise ScenarioError(f"field {where!r}: entries must be real")
    return arr.real


def _number(doc: dict, key: str, where: str = "") -> float:
    name = f"{where}{key}"
    if key not in doc:
        raise ScenarioError(f"field {name!r} is missing")
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"field {name!r}: expected a number")
    return float(value)


def _spectral(doc: Any, where: str):
    if not isinstance(doc, dict):
        raise ScenarioError(f"field {where!r}: expected an object")
    try:
        if doc.get("family") == "exp_radial":
            return ExpRadial(c=_number(doc, "c", f"{where}."), a=_number(doc, "a", f"{where}."))
        if "table" in doc:
            tab = doc["table"]
            return Tabulated(x=np.asarray(tab["x"], dtype=float),
                             f_beta=np.asarray(tab["f_beta"], dtype=float))
        if "rates" in doc:
            rates = doc["rates"]
            return RateTable(c=_real_matrix(rates["c"], f"{where}.rates.c"),
                             d=_real_matrix(rates["d"], f"{where}.rates.d"))
    except KeyError as exc:
        raise ScenarioError(f"field {where!r}: missing key {exc}") from exc
    except ScenarioError:
        raise
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"field {where!r}: {exc}") from exc
    raise ScenarioError(f"field {where!r}: unknown coupling family")


def _run(doc: Any) -> RunControls:
    if doc is None:
        return RunControls()
    if not isinstance(doc, dict):
        raise ScenarioError("field 'run': expected an object")
    defaults = RunControls()
    t_max = _number(doc, "t_max", "run.") if "t_max" in doc else defaults.t_max
    dt = None if doc.get("dt") is None else _number(doc, "dt", "run.")
    off = None if doc.get("pump_off_time") is None else _number(doc, "pump_off_time", "run.")
    init = doc.get("initial", "gibbs")
    if not isinstance(init, str):
        init = _matrix(init, "run.initial")
    elif init != "gibbs":
        raise ScenarioError(f"field 'run.initial': unknown selector {init!r}")
    return RunControls(t_max=t_max, dt=dt, pump_off_time=off, initial=init)


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")
    for key in ("H_at", "Q", "coupling", "beta", "lambda", "eta", "h_p"):
        if key not in doc:
            raise ScenarioError(f"field {key!r} is missing")
    if "omega" in doc:
        raise ScenarioError("field 'omega': the pump frequency is derived from H_at")
    h = _matrix(doc["H_at"], "H_at")
    if not isinstance(doc["Q"], list) or not doc["Q"]:
        raise ScenarioError("field 'Q': expected a non-empty list of matrices")
    ops = [_matrix(q, f"Q[{i}]") for i, q in enumerate(doc["Q"])]
    coupling = doc["coupling"]
    if isinstance(coupling, list):
        if len(coupling) != len(ops):
            raise ScenarioError("field 'coupling': need one entry per coupling operator")
        spectral = [_spectral(c, f"coupling[{i}]") for i, c in enumerate(coupling)]
    else:
        spectral = _spectral(coupling, "coupling")
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ScenarioError("field 'seed': expected an integer")
    try:
        return make_scenario(h, ops, spectral, _number(doc, "beta"), _number(doc, "lambda"),
                             _number(doc, "eta"), _matrix(doc["h_p"], "h_p"), run=_run(doc.get("run")),
                             seed=seed)
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"invalid scenario: {exc}") from exc


def load_scenario(path: str | Path) -> Scenario:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return scenario_from_dict(doc)


# ---------------------------------------------------------------------------
# serialization

def complex_pairs(m: np.ndarray) -> list:
    """Nested ``[re, im]`` lists of a matrix."""
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _spectral_dict(spec) -> dict:
    if isinstance(spec, ExpRadial):
        return {"family": "exp_radial", "c": float(spec.c), "a": float(spec.a)}
    if isinstance(spec, Tabulated):
        return {"table": {"x": spec.x.tolist(), "f_beta": spec.f_beta.tolist()}}
    return {"rates": {"c": spec.c.tolist(), "d": spec.d.tolist()}}


def scenario_to_dict(scenario: Scenario) -> dict:
    spectral = [_spectral_dict(s) for s in scenario.coupling.spectral]
    run = scenario.run
    return {
        "H_at": complex_pairs(scenario.atom.hamiltonian),
        "Q": [complex_pairs(q) for q in scenario.coupling.operators],
        "coupling": spectral,
        "beta": float(scenario.beta),
        "lambda": float(scenario.lam),
        "eta": float(scenario.eta),
        "h_p": complex_pairs(scenario.pump.h_p),
        "run": {"t_max": float(run.t_max), "dt": run.dt, "pump_off_time": run.pump_off_time,
                "initial": run.initial if isinstance(run.initial, str) else complex_pairs(run.initial)},
        "seed": int(scenario.seed),
    }


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON text with every float written to 17 significant digits; non-finite floats become null."""
    return _encode(obj, 0, indent) + "\n"


def _flat(v: Any) -> bool:
    return not isinstance(v, (dict, list, tuple, np.ndarray))


def _encode(obj: Any, level: int, indent: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, (complex, np.complexfloating)):
        return _encode([obj.real, obj.imag], level, indent)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), level, indent)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, level + 1, indent)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(_flat(v) or (isinstance(v, (list, tuple)) and all(_flat(w) for w in v)) for v in obj):
            return "[" + ", ".join(_encode(v, level + 1, indent) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, level + 1, indent) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path: str | Path, obj: Any) -> None:
    Path(path).write_bytes(dumps(obj).encode())


def csv_text(header: list[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else _fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path: str | Path, header: list[str], rows) -> None:
    Path(path).write_bytes(csv_text(header, rows).encode())


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def svg_lines(x: np.ndarray, ys: np.ndarray, labels: list[str], xlabel: str = "t") -> str:
    """Minimal SVG 1.1 line chart on an 800x500 view box, one polyline per column of ``ys``."""
    width, height = 800, 500
    left, right, top, bottom = 60, 120, 20, 50
    x = np.asarray(x, dtype=float)
    ys = np.asarray(ys, dtype=float)
    x0, x1 = float(x.min()), float(x.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def sx(v):
        return left + (v - x0) / (x1 - x0) * (width - left - right)

    def sy(v):
        return height - bottom - (v - y0) / (y1 - y0) * (height - top - bottom)

    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="0 0 {width} {height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<line x1="{left}" y1="{height - bottom}" x2="{width - right}" y2="{height - bottom}" stroke="black"/>',
           f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height - bottom}" stroke="black"/>',
           f'<text x="{(width - right + left) / 2:.1f}" y="{height - 15}" text-anchor="middle">{xlabel}</text>',
           f'<text x="{left - 5}" y="{sy(y0):.1f}" text-anchor="end">{y0:.3g}</text>',
           f'<text x="{left - 5}" y="{sy(y1) + 10:.1f}" text-anchor="end">{y1:.3g}</text>',
           f'<text x="{left}" y="{height - bottom + 18}" text-anchor="middle">{x0:.3g}</text>',
           f'<text x="{width - right}" y="{height - bottom + 18}" text-anchor="middle">{x1:.3g}</text>']
    # thin long series so the file stays small
    stride = max(1, len(x) // 2000)
    for i, label in enumerate(labels):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[::stride], ys[::stride, i]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 20 * (i + 1)
        out.append(f'<line x1="{width - right + 10}" y1="{ly}" x2="{width - right + 30}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{width - right + 35}" y="{ly + 4}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
