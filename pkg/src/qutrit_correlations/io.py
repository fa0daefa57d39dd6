"""File formats: JSON configs, records and reports; CSV curves.

Numbers are written with 12 significant digits and matrices as row-major
nested lists of [re, im] pairs. Every output carries a run manifest and is
written through a temporary file plus rename, so a failed run never leaves
a partial file behind.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np

from .correlations import OptimizerConfig
from .nv import NvConfig
from .tomography import PLModel, PLRecord, RECORD_LENGTHS

SIG_DIGITS = 12


class InputError(ValueError):
    """A user-supplied file failed to parse or validate."""


@dataclass
class RunManifest:
    command: str
    seed: int
    output_dir: str
    config_path: str | None = None
    parameters: dict = field(default_factory=dict)
    created: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds")
    )

    def to_dict(self) -> dict:
        return asdict(self)


def round_sig(x: float, digits: int = SIG_DIGITS) -> float:
    return float(f"{x:.{digits}g}")


def quantize(obj: Any) -> Any:
    """Recursively round floats (and numpy scalars/arrays) for output."""
    if isinstance(obj, dict):
        return {k: quantize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [quantize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return quantize(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not np.isfinite(x):
            return None
        return round_sig(x)
    return obj


def matrix_to_pairs(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def pairs_to_matrix(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise InputError("matrix must be a nested list of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def atomic_write(path, data: str | bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def dumps_json(obj: Any) -> str:
    return json.dumps(quantize(obj), indent=2) + "\n"


def write_json(path, obj: Any) -> Path:
    return atomic_write(path, dumps_json(obj))


def curves_csv(manifest: RunManifest, rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    buf.write("# manifest: " + json.dumps(quantize(manifest.to_dict()), sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([f"{row[c]:.{SIG_DIGITS}g}" for c in columns])
    return buf.getvalue()


def read_curves_csv(path) -> tuple[dict, list[dict]]:
    lines = Path(path).read_text().splitlines()
    manifest = {}
    body = []
    for line in lines:
        if line.startswith("# manifest: "):
            manifest = json.loads(line[len("# manifest: "):])
        elif not line.startswith("#"):
            body.append(line)
    reader = csv.DictReader(body)
    return manifest, [{k: float(v) for k, v in row.items()} for row in reader]


# --- parsing ------------------------------------------------------------------------

def _load_json(path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{path}: cannot read file ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _numbers(path, data: dict, key: str) -> list[float]:
    if key not in data:
        raise InputError(f"{path}: missing field '{key}'")
    vals = data[key]
    if not isinstance(vals, list):
        raise InputError(f"{path}: field '{key}' must be a list of numbers")
    for i, v in enumerate(vals):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise InputError(f"{path}: field '{key}[{i}]' is not a number: {v!r}")
    return [float(v) for v in vals]


def load_record(path, expected_kind: str | None = None) -> PLRecord:
    data = _load_json(path)
    if not isinstance(data, dict):
        raise InputError(f"{path}: top level must be an object")
    data = data.get("record", data)
    kind = data.get("kind")
    if kind not in RECORD_LENGTHS:
        raise InputError(
            f"{path}: field 'kind' must be one of {sorted(RECORD_LENGTHS)}, got {kind!r}"
        )
    if expected_kind is not None and kind != expected_kind:
        raise InputError(f"{path}: record kind is '{kind}', expected '{expected_kind}'")
    values = _numbers(path, data, "values")
    sigmas = _numbers(path, data, "sigmas")
    n = RECORD_LENGTHS[kind]
    if len(values) != n:
        raise InputError(f"{path}: field 'values' has {len(values)} entries, kind '{kind}' needs {n}")
    if len(sigmas) != n:
        raise InputError(f"{path}: field 'sigmas' has {len(sigmas)} entries, kind '{kind}' needs {n}")
    for i, s in enumerate(sigmas):
        if not s > 0:
            raise InputError(f"{path}: field 'sigmas[{i}]' must be positive, got {s!r}")
    try:
        return PLRecord(values, sigmas, kind)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def load_model(path) -> PLModel:
    data = _load_json(path)
    if not isinstance(data, dict):
        raise InputError(f"{path}: top level must be an object")
    data = data.get("model", data)
    rates = _numbers(path, data, "rates")
    if len(rates) != 9:
        raise InputError(f"{path}: field 'rates' has {len(rates)} entries, needs 9")
    try:
        return PLModel(rates)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


@dataclass
class RunConfig:
    nv: NvConfig = field(default_factory=NvConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    pl_model: PLModel | None = None

    def to_dict(self) -> dict:
        return {
            "nv": self.nv.to_dict(),
            "optimizer": asdict(self.optimizer),
            "pl_model": None if self.pl_model is None else self.pl_model.to_dict(),
        }


def load_config(path) -> RunConfig:
    """Read a run configuration; every section is optional.

    Layout: {"nv": {...}, "optimizer": {...}, "pl_model": {"rates": [...]}}.
    """
    if path is None:
        return RunConfig()
    data = _load_json(path)
    if not isinstance(data, dict):
        raise InputError(f"{path}: top level must be an object")
    unknown = set(data) - {"nv", "optimizer", "pl_model"}
    if unknown:
        raise InputError(f"{path}: unknown sections {sorted(unknown)}")
    try:
        nv = NvConfig.from_dict(data.get("nv", {}))
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: section 'nv': {exc}") from exc
    try:
        opt = OptimizerConfig(**data.get("optimizer", {}))
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: section 'optimizer': {exc}") from exc
    model = None
    if data.get("pl_model") is not None:
        rates = _numbers(path, data["pl_model"], "rates")
        try:
            model = PLModel(rates)
        except ValueError as exc:
            raise InputError(f"{path}: section 'pl_model': {exc}") from exc
    return RunConfig(nv=nv, optimizer=opt, pl_model=model)
