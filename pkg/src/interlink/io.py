"""File formats: state and scenario JSON, reports, run manifests and CSV series.

Reports are serialized deterministically: keys sorted, floats rounded to 12
significant digits, complex numbers written as ``[re, im]``.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Sequence

import jsonschema
import numpy as np

from .errors import CapError, ParseError
from .scenarios import ScenarioConfig
from .state import MAX_QUBITS, PureState

OUT_DIR_ENV = "INTERLINK_OUT_DIR"
SIGNIFICANT_DIGITS = 12
SERIES_COLUMNS = ("t", "trace_distance", "entanglement_entropy", "thermal_entropy")


def round_float(x: float) -> float | None:
    x = float(x)
    if not math.isfinite(x):
        return None
    x = float(f"{x:.{SIGNIFICANT_DIGITS}g}")
    return 0.0 if x == 0 else x


def to_jsonable(obj: Any) -> Any:
    """Plain JSON types with floats rounded; numpy values and tuples unwrapped."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return round_float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [round_float(obj.real), round_float(obj.imag)]
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_report(report: dict) -> str:
    return json.dumps(to_jsonable(report), sort_keys=True, indent=2) + "\n"


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("interlink").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def _read_json(path: str | os.PathLike) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"{path}: cannot read file ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _validate(data: Any, schema: str, source: str) -> None:
    try:
        jsonschema.validate(data, load_schema(schema))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ParseError(f"{source}: {where}: {exc.message}") from exc


def state_from_dict(data: Any, source: str = "<state>") -> PureState:
    if isinstance(data, dict) and isinstance(data.get("n_qubits"), int) and data["n_qubits"] > MAX_QUBITS:
        # the schema would report this as a parse error; it is a cap violation
        raise CapError(f"{source}: {data['n_qubits']} qubits exceeds the cap of {MAX_QUBITS}")
    _validate(data, "state", source)
    n = data["n_qubits"]
    amps = data["amplitudes"]
    if len(amps) != 2**n:
        raise ParseError(f"{source}: {len(amps)} amplitudes given, expected {2**n} for {n} qubits")
    vec = np.array([complex(re, im) for re, im in amps], dtype=np.complex128)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise ParseError(f"{source}: amplitudes have zero norm")
    return PureState(n, vec / norm)


def parse_state_file(path: str | os.PathLike) -> PureState:
    """Read ``{"n_qubits": n, "amplitudes": [[re, im], ...]}``; the vector is normalized."""
    return state_from_dict(_read_json(path), str(path))


def state_to_dict(state: PureState) -> dict:
    return {
        "n_qubits": state.n_qubits,
        "amplitudes": [[float(a.real), float(a.imag)] for a in state.amplitudes],
    }


def write_state_file(path: str | os.PathLike, state: PureState) -> None:
    Path(path).write_text(json.dumps(state_to_dict(state)) + "\n")


def load_scenario_config(path: str | os.PathLike, **overrides) -> ScenarioConfig:
    """Scenario config from JSON; non-``None`` keyword overrides win."""
    data = _read_json(path)
    _validate(data, "scenario", str(path))
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ScenarioConfig(**data)


@dataclass
class RunManifest:
    """What was run, so a report can be regenerated.

    ``wall_clock_seconds`` stays ``None`` unless timing was requested; a
    measured duration would make otherwise identical reports differ.
    """

    command: str
    config_path: str | None = None
    seed: int | None = None
    tool_version: str = ""
    wall_clock_seconds: float | None = None
    outputs: list[str] = field(default_factory=list)
    arguments: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config_path": self.config_path,
            "seed": self.seed,
            "tool_version": self.tool_version,
            "wall_clock_seconds": self.wall_clock_seconds,
            "outputs": list(self.outputs),
            "arguments": dict(self.arguments),
        }


def write_series_csv(path: str | os.PathLike, rows: Iterable[Sequence[float]]) -> None:
    """Time series with columns ``t, trace_distance, entanglement_entropy, thermal_entropy``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SERIES_COLUMNS)
        for row in rows:
            writer.writerow([f"{float(x):.{SIGNIFICANT_DIGITS}g}" for x in row])


def read_series_csv(path: str | os.PathLike) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != SERIES_COLUMNS:
            raise ParseError(f"{path}: unexpected header {header}")
        return np.array([[float(x) for x in row] for row in reader])


def default_output_dir() -> Path | None:
    value = os.environ.get(OUT_DIR_ENV)
    return Path(value) if value else None
