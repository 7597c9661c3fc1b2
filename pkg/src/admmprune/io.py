"""File formats: binary tensors, problem bundles, JSON configs, reports.

Tensor files are little-endian with an 8-byte magic, a dtype byte (1 =
float32, 2 = float64), the rank, six reserved zero bytes, the dimensions as
u64, then the row-major payload.  Read errors are typed so callers can
distinguish a wrong file from a truncated or oversized one.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, ShapeError, ValidationError
from .masking import StructurePattern
from .report import IterationRecord, PruneReport
from .solver import SolverConfig

MAGIC = b"ADMMTNS1"
_DTYPE_CODES = {"f32": 1, "f64": 2}
_DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
_MAX_RANK = 8
_MAX_ELEMENTS = 1 << 40

CONFIG_KEYS = (
    "rho",
    "lambda",
    "eps",
    "iterations",
    "sparsify_steps",
    "sparsity",
    "structured",
    "mask_rule",
)

REPORT_COLUMNS = ("layer", "iter", "seconds", "objective", "sparsity")
BENCH_COLUMNS = ("updater", "lr", "steps", "seed", "seconds", "objective")


class TensorIOError(Exception):
    """A tensor file could not be parsed (CLI exit code 1)."""


class BadMagicError(TensorIOError):
    pass


class UnknownDtypeError(TensorIOError):
    pass


class TruncatedPayloadError(TensorIOError):
    pass


class DimOverflowError(TensorIOError):
    pass


class InvalidHeaderError(TensorIOError):
    pass


class NonFiniteDataError(TensorIOError):
    pass


def write_tensor(path, array, dtype="f64"):
    """Write an array in the binary tensor format."""
    if dtype not in _DTYPE_CODES:
        raise ValidationError(f"dtype must be one of {sorted(_DTYPE_CODES)}")
    arr = np.ascontiguousarray(array)
    if arr.ndim < 1 or arr.ndim > _MAX_RANK:
        raise ShapeError(f"rank must be between 1 and {_MAX_RANK}")
    code = _DTYPE_CODES[dtype]
    payload = arr.astype(_DTYPES[code], copy=False)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<BB6x", code, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        fh.write(payload.tobytes(order="C"))


def read_tensor(path):
    """Read a tensor file back as a float64 array."""
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
        raise BadMagicError(f"{path}: not a tensor file (bad magic)")
    offset = len(MAGIC)
    if len(data) < offset + 8:
        raise InvalidHeaderError(f"{path}: header is truncated")
    code, ndim = struct.unpack_from("<BB", data, offset)
    offset += 8
    if code not in _DTYPES:
        raise UnknownDtypeError(f"{path}: unknown dtype code {code}")
    if ndim < 1 or ndim > _MAX_RANK:
        raise InvalidHeaderError(f"{path}: rank {ndim} out of range 1..{_MAX_RANK}")
    if len(data) < offset + 8 * ndim:
        raise InvalidHeaderError(f"{path}: header is truncated")
    dims = struct.unpack_from(f"<{ndim}Q", data, offset)
    offset += 8 * ndim
    if any(d == 0 for d in dims):
        raise InvalidHeaderError(f"{path}: zero dimension in {dims}")
    count = 1
    for d in dims:
        count *= d
        if count > _MAX_ELEMENTS:
            raise DimOverflowError(
                f"{path}: {dims} exceeds the element limit 2**40"
            )
    itemsize = _DTYPES[code].itemsize
    expected = offset + count * itemsize
    if len(data) != expected:
        raise TruncatedPayloadError(
            f"{path}: payload is {len(data) - offset} bytes, expected "
            f"{count * itemsize}"
        )
    flat = np.frombuffer(data, dtype=_DTYPES[code], count=count, offset=offset)
    arr = flat.reshape(dims).astype(np.float64)
    if not np.isfinite(arr).all():
        raise NonFiniteDataError(f"{path}: payload contains non-finite values")
    return arr


def read_mask(path):
    """Read a tensor file whose entries must all be 0 or 1, as uint8."""
    arr = read_tensor(path)
    if not np.isin(arr, (0.0, 1.0)).all():
        raise ValidationError(f"{path}: mask entries must be 0 or 1")
    return np.ascontiguousarray(arr.astype(np.uint8))


@dataclass(frozen=True)
class ProblemBundle:
    """A named layer problem: weights, calibration data, optional mask."""

    name: str
    weight_path: Path
    calib_path: Path
    expected_mask_path: Path | None = None

    def load(self):
        """Return (weights, calib, expected_mask or None), shape-checked."""
        w = read_tensor(self.weight_path)
        x = read_tensor(self.calib_path)
        if w.ndim != 2 or x.ndim != 2:
            raise ShapeError(f"bundle {self.name}: tensors must be 2-D")
        if x.shape[1] != w.shape[0]:
            raise ShapeError(
                f"bundle {self.name}: calibration features ({x.shape[1]}) "
                f"must match weight rows ({w.shape[0]})"
            )
        mask = None
        if self.expected_mask_path is not None:
            mask = read_mask(self.expected_mask_path)
            if mask.shape != w.shape:
                raise ShapeError(
                    f"bundle {self.name}: mask shape {mask.shape} must match "
                    f"weights {w.shape}"
                )
        return w, x, mask


def write_bundle(directory, name, w, x, expected_mask=None):
    """Write a bundle directory with a manifest and tensor files."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_tensor(directory / "weight.tns", w)
    write_tensor(directory / "calib.tns", x)
    manifest = {
        "name": name,
        "weight_path": "weight.tns",
        "calib_path": "calib.tns",
    }
    if expected_mask is not None:
        write_tensor(directory / "mask.tns", np.asarray(expected_mask, dtype=np.float64))
        manifest["expected_mask_path"] = "mask.tns"
    with open(directory / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return load_bundle(directory)


def load_bundle(directory):
    """Parse manifest.json in a bundle directory."""
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    try:
        raw = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{manifest_path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ValidationError(f"{manifest_path}: manifest must be a JSON object")
    allowed = {"name", "weight_path", "calib_path", "expected_mask_path"}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ValidationError(f"{manifest_path}: unknown manifest keys {unknown}")
    for key in ("name", "weight_path", "calib_path"):
        if key not in raw or not isinstance(raw[key], str):
            raise ValidationError(f"{manifest_path}: missing string key {key!r}")
    mask_rel = raw.get("expected_mask_path")
    if mask_rel is not None and not isinstance(mask_rel, str):
        raise ValidationError(f"{manifest_path}: expected_mask_path must be a string")
    bundle = ProblemBundle(
        name=raw["name"],
        weight_path=directory / raw["weight_path"],
        calib_path=directory / raw["calib_path"],
        expected_mask_path=directory / mask_rel if mask_rel else None,
    )
    for p in (bundle.weight_path, bundle.calib_path, bundle.expected_mask_path):
        if p is not None and not p.is_file():
            raise FileNotFoundError(f"bundle file does not exist: {p}")
    return bundle


def default_config():
    return SolverConfig()


def parse_structure(text):
    """Parse an N:M pattern like '2:4'; 'none' clears the pattern."""
    if text is None or text == "none":
        return None
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"structured pattern must look like '2:4', got {text!r}")
    try:
        n_keep, m_group = int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise ConfigError(f"structured pattern must be integers, got {text!r}") from exc
    return StructurePattern(n_keep=n_keep, m_group=m_group)


def load_config(path):
    """Read a JSON solver config; missing keys fall back to the defaults."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return config_from_mapping(raw, source=str(path))


def config_from_mapping(raw, source="config"):
    unknown = sorted(set(raw) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"{source}: unknown config keys {unknown}")
    defaults = SolverConfig()
    numbers = {
        "rho": float,
        "lambda": float,
        "eps": float,
        "iterations": int,
        "sparsify_steps": int,
        "sparsity": float,
    }
    values = {}
    for key, kind in numbers.items():
        if key not in raw:
            continue
        value = raw[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{source}: {key} must be a number")
        if isinstance(value, float) and not np.isfinite(value):
            raise ConfigError(f"{source}: {key} must be finite")
        if kind is int and value != int(value):
            raise ConfigError(f"{source}: {key} must be an integer")
        values[key] = kind(value)
    structure = defaults.structure
    if "structured" in raw:
        pattern = raw["structured"]
        if pattern is not None and not isinstance(pattern, str):
            raise ConfigError(f"{source}: structured must be a string like '2:4'")
        structure = parse_structure(pattern)
    mask_rule = raw.get("mask_rule", defaults.mask_rule)
    if not isinstance(mask_rule, str):
        raise ConfigError(f"{source}: mask_rule must be a string")
    config = SolverConfig(
        rho=values.get("rho", defaults.rho),
        lam=values.get("lambda", defaults.lam),
        eps=values.get("eps", defaults.eps),
        iterations=values.get("iterations", defaults.iterations),
        sparsify_steps=values.get("sparsify_steps", defaults.sparsify_steps),
        sparsity=values.get("sparsity", defaults.sparsity),
        structure=structure,
        mask_rule=mask_rule,
    )
    try:
        return config.validate()
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def write_report(path, report, fmt="csv"):
    """Serialize a report as CSV rows or a JSON document."""
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(REPORT_COLUMNS)
            for rec in report.records:
                writer.writerow(
                    [
                        report.layer,
                        rec.iter,
                        repr(rec.seconds),
                        repr(rec.objective),
                        repr(rec.sparsity),
                    ]
                )
    elif fmt == "json":
        doc = {
            "layer": report.layer,
            "final_objective": report.final_objective,
            "final_density": report.final_density,
            "config": report.config,
            "records": [
                {
                    "iter": rec.iter,
                    "seconds": rec.seconds,
                    "objective": rec.objective,
                    "sparsity": rec.sparsity,
                }
                for rec in report.records
            ],
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    else:
        raise ValidationError(f"report format must be csv or json, got {fmt!r}")


def read_report(path):
    """Read a JSON report back; the inverse of write_report(..., fmt='json')."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    records = [
        IterationRecord(
            iter=int(rec["iter"]),
            seconds=float(rec["seconds"]),
            objective=float(rec["objective"]),
            sparsity=float(rec["sparsity"]),
        )
        for rec in doc.get("records", [])
    ]
    report = PruneReport(
        layer=doc.get("layer", "layer"),
        records=records,
        final_objective=float(doc.get("final_objective", 0.0)),
        final_density=float(doc.get("final_density", 1.0)),
        config=doc.get("config", {}),
    )
    return report.validate()


def write_bench_csv(path, rows):
    """Write benchmark rows with the fixed column order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BENCH_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row["updater"],
                    "" if row.get("lr") is None else repr(row["lr"]),
                    "" if row.get("steps") is None else row["steps"],
                    row["seed"],
                    repr(row["seconds"]),
                    repr(row["objective"]),
                ]
            )
