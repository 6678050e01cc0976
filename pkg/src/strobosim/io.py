"""Persistence: binary state files, JSON configs, CSV reports and 16-bit graymaps.

State file layout (always little-endian)::

    b"WIGSTAT1" | uint32 header length | UTF-8 JSON header | float64 payload

The header is canonical JSON (sorted keys, no whitespace) so that loading and
saving a file reproduces it byte for byte.
"""

from __future__ import annotations

import json
import math
import os
import struct
import tempfile
import warnings
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .grid import GridSpec
from .protocol import ProtocolConfig
from .states import SqueezedThermalParams, WignerState
from .transforms import PositionDensityMatrix, ThermalKernelParams

__all__ = [
    "MAGIC",
    "CONVENTION",
    "CSV_HEADER",
    "StateFileError",
    "BadMagicError",
    "TruncatedFileError",
    "HeaderParseError",
    "StateDefectWarning",
    "save_state",
    "load_state",
    "atomic_write_bytes",
    "atomic_write_text",
    "config_from_dict",
    "config_to_dict",
    "load_config",
    "sweep_spec_from_dict",
    "load_sweep_spec",
    "format_float",
    "render_csv",
    "write_csv",
    "read_csv",
    "render_pgm",
    "write_pgm",
    "REPORT_COLUMNS",
    "report_rows",
    "sweep_table_csv",
    "figure2_summary_csv",
    "figure2_curves_csv",
    "figure2_cuts_csv",
    "figureS1_csv",
]

MAGIC = b"WIGSTAT1"
CONVENTION = "var_vac=1"
CSV_HEADER = "# strobosim sweep v1"
_LENGTH = struct.Struct("<I")
_NORM_TOLERANCE = 1e-5
_HERMITICITY_TOLERANCE = 1e-8


class StateFileError(ValidationError):
    """A state file cannot be read."""


class BadMagicError(StateFileError):
    pass


class TruncatedFileError(StateFileError):
    pass


class HeaderParseError(StateFileError):
    pass


class StateDefectWarning(UserWarning):
    """A loaded state violates a physical invariant (kept, since it may be mid-pipeline)."""


# --------------------------------------------------------------------------
# atomic writes


def _default_mode() -> int:
    umask = os.umask(0)
    os.umask(umask)
    return 0o666 & ~umask


def atomic_write_bytes(path, data: bytes) -> None:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        # mkstemp creates 0600 files; give the result the usual permissions
        os.chmod(tmp, _default_mode())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


# --------------------------------------------------------------------------
# state files


def _header_bytes(header: dict) -> bytes:
    return json.dumps(header, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def encode_state(state: WignerState | PositionDensityMatrix) -> bytes:
    if isinstance(state, WignerState):
        header = {"grid": state.grid.to_dict(), "kind": "wigner", "convention": CONVENTION, "provenance": state.metadata}
        payload = np.ascontiguousarray(state.values, dtype="<f8").tobytes()
    elif isinstance(state, PositionDensityMatrix):
        header = {
            "grid": state.grid.to_dict(),
            "kind": "density",
            "pad": state.pad,
            "convention": CONVENTION,
            "provenance": "",
        }
        payload = np.ascontiguousarray(state.values, dtype="<c16").tobytes()
    else:
        raise ValidationError(f"cannot save object of type {type(state).__name__}")
    head = _header_bytes(header)
    return MAGIC + _LENGTH.pack(len(head)) + head + payload


def save_state(state: WignerState | PositionDensityMatrix, path) -> None:
    atomic_write_bytes(path, encode_state(state))


def _parse_header(raw: bytes) -> dict:
    try:
        header = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise HeaderParseError(f"state header is not valid UTF-8 JSON: {exc}") from None
    if not isinstance(header, dict):
        raise HeaderParseError("state header must be a JSON object")
    missing = {"grid", "kind", "convention"} - header.keys()
    if missing:
        raise HeaderParseError(f"state header lacks {sorted(missing)}")
    if header["kind"] not in ("wigner", "density"):
        raise HeaderParseError(f"unknown state kind {header['kind']!r}")
    if header["convention"] != CONVENTION:
        raise HeaderParseError(f"unsupported convention {header['convention']!r}")
    grid = header["grid"]
    if not isinstance(grid, dict) or {"n_points", "half_extent"} - grid.keys():
        raise HeaderParseError("state header grid must hold n_points and half_extent")
    return header


def decode_state(data: bytes) -> WignerState | PositionDensityMatrix:
    if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
        raise BadMagicError(f"not a state file: magic {data[:len(MAGIC)]!r} != {MAGIC!r}")
    offset = len(MAGIC)
    if len(data) < offset + _LENGTH.size:
        raise TruncatedFileError(f"file ends inside the header length ({len(data)} bytes)")
    (length,) = _LENGTH.unpack_from(data, offset)
    offset += _LENGTH.size
    if len(data) < offset + length:
        raise TruncatedFileError(f"header needs {length} bytes, file has {len(data) - offset}")
    header = _parse_header(data[offset : offset + length])
    offset += length

    try:
        grid = GridSpec(header["grid"]["n_points"], header["grid"]["half_extent"])
        pad = int(header.get("pad", 1))
    except (TypeError, ValueError) as exc:
        raise HeaderParseError(f"invalid grid in header: {exc}") from None
    density = header["kind"] == "density"
    side = grid.n_points * pad if density else grid.n_points
    item = 16 if density else 8
    expected = side * side * item
    actual = len(data) - offset
    if actual != expected:
        raise TruncatedFileError(f"payload holds {actual} bytes, expected {expected}")

    payload = np.frombuffer(data, dtype="<c16" if density else "<f8", offset=offset).reshape(side, side)
    if density:
        rho = PositionDensityMatrix(grid, payload.astype(np.complex128), pad=pad)
        if rho.hermiticity_defect > _HERMITICITY_TOLERANCE:
            warnings.warn(f"loaded density matrix has Hermiticity defect {rho.hermiticity_defect:.3e}", StateDefectWarning, stacklevel=3)
        if abs(rho.trace - 1) > _NORM_TOLERANCE:
            warnings.warn(f"loaded density matrix has trace {rho.trace:.8g}", StateDefectWarning, stacklevel=3)
        return rho
    state = WignerState(grid, payload.astype(np.float64), str(header.get("provenance", "")))
    if state.norm_defect > _NORM_TOLERANCE:
        warnings.warn(f"loaded Wigner function has norm {state.norm:.8g}", StateDefectWarning, stacklevel=3)
    return state


def load_state(path) -> WignerState | PositionDensityMatrix:
    """Read a state file; invariant violations are reported as :class:`StateDefectWarning`."""
    return decode_state(Path(path).read_bytes())


# --------------------------------------------------------------------------
# configs

_CONFIG_KEYS = {"total_gain", "periods", "kicks_per_period", "kick_spacing_angle", "order", "initial", "kernel", "grid"}


def _require_mapping(value, what) -> dict:
    if not isinstance(value, dict):
        raise ValidationError(f"{what} must be a JSON object")
    return value


def _check_keys(mapping: dict, allowed: set, what: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ValidationError(f"unknown {what} field(s): {sorted(unknown)}")


def _kernel_from_dict(data) -> ThermalKernelParams:
    if isinstance(data, (int, float)) and not isinstance(data, bool):
        return ThermalKernelParams(float(data))
    data = _require_mapping(data, "kernel")
    _check_keys(data, {"kernel_variance", "n_th", "eta_over_omega"}, "kernel")
    if "n_th" in data or "eta_over_omega" in data:
        if "kernel_variance" in data:
            raise ValidationError("give either kernel_variance or (n_th, eta_over_omega), not both")
        try:
            return ThermalKernelParams.from_bath(float(data["n_th"]), float(data["eta_over_omega"]))
        except KeyError as exc:
            raise ValidationError(f"kernel needs {exc.args[0]}") from None
    return ThermalKernelParams(float(data.get("kernel_variance", 0.0)))


def config_from_dict(data: dict) -> ProtocolConfig:
    """Build a :class:`ProtocolConfig`; absent fields take the library defaults."""
    from .grid import make_grid

    data = _require_mapping(data, "config")
    _check_keys(data, _CONFIG_KEYS, "config")
    kwargs = {}
    try:
        for key in ("total_gain", "kick_spacing_angle"):
            if key in data:
                kwargs[key] = float(data[key])
        for key in ("periods", "kicks_per_period", "order"):
            if key in data:
                value = data[key]
                if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
                    raise ValidationError(f"{key} must be an integer, got {value!r}")
                kwargs[key] = int(value)
        if "initial" in data:
            initial = _require_mapping(data["initial"], "initial")
            _check_keys(initial, {"n0", "s"}, "initial")
            kwargs["initial"] = SqueezedThermalParams(float(initial.get("n0", 0.0)), float(initial.get("s", 1.0)))
        if "kernel" in data:
            kwargs["kernel"] = _kernel_from_dict(data["kernel"])
        if "grid" in data:
            grid = _require_mapping(data["grid"], "grid")
            _check_keys(grid, {"n_points", "half_extent"}, "grid")
            kwargs["grid"] = make_grid(**grid)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"bad config value: {exc}") from None
    return ProtocolConfig(**kwargs)


def config_to_dict(config: ProtocolConfig) -> dict:
    data = config.to_dict()
    if config.kernel.n_th is not None:
        data["kernel"] = {"n_th": config.kernel.n_th, "eta_over_omega": config.kernel.eta_over_omega}
    return data


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"{path} is not valid UTF-8 JSON: {exc}") from None


def load_config(path) -> ProtocolConfig:
    return config_from_dict(_read_json(path))


def _axis_from_json(axis):
    if isinstance(axis, dict):
        _check_keys(axis, {"name", "values"}, "axis")
        try:
            return axis["name"], axis["values"]
        except KeyError as exc:
            raise ValidationError(f"axis needs {exc.args[0]}") from None
    return axis


def sweep_spec_from_dict(data: dict):
    from .experiments import SweepSpec

    data = _require_mapping(data, "sweep spec")
    _check_keys(data, {"base", "axis1", "axis2", "observable"}, "sweep spec")
    if "axis1" not in data:
        raise ValidationError("sweep spec needs axis1")
    axis2 = data.get("axis2")
    return SweepSpec(
        base=config_from_dict(data.get("base", {})),
        axis1=_axis_from_json(data["axis1"]),
        axis2=None if axis2 is None else _axis_from_json(axis2),
        observable=data.get("observable", "sigma3_min"),
    )


def load_sweep_spec(path):
    return sweep_spec_from_dict(_read_json(path))


# --------------------------------------------------------------------------
# CSV


def format_float(value) -> str:
    """Shortest text that round-trips to the same double; ``nan`` for missing values."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    value = float(value)
    if math.isnan(value):
        return "nan"
    return repr(value)


def render_csv(columns, rows, comments=()) -> str:
    """CSV text: version line, column names, rows, then ``# key=value`` trailer comments."""
    lines = [CSV_HEADER, ",".join(columns)]
    for row in rows:
        if len(row) != len(columns):
            raise ValidationError(f"row has {len(row)} fields, expected {len(columns)}")
        lines.append(",".join(format_float(v) for v in row))
    lines.extend(f"# {c}" for c in comments)
    return "\n".join(lines) + "\n"


def write_csv(path, columns, rows, comments=()) -> None:
    atomic_write_text(path, render_csv(columns, rows, comments))


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    """Column names and raw string rows; comment lines are skipped."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValidationError(f"{path} does not start with {CSV_HEADER!r}")
    body = [line for line in lines[1:] if line and not line.startswith("#")]
    if not body:
        raise ValidationError(f"{path} has no column line")
    return body[0].split(","), [line.split(",") for line in body[1:]]


# --------------------------------------------------------------------------
# graymaps


def render_pgm(matrix) -> bytes:
    """Binary 16-bit PGM; values map linearly onto 0..65535, NaN onto 0."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.size == 0:
        raise ValidationError("graymap needs a nonempty 2-D matrix")
    finite = matrix[np.isfinite(matrix)]
    lo = float(finite.min()) if finite.size else 0.0
    hi = float(finite.max()) if finite.size else 0.0
    span = hi - lo
    scaled = np.zeros(matrix.shape) if span == 0 else (matrix - lo) / span * 65535.0
    levels = np.where(np.isfinite(matrix), np.rint(scaled), 0).astype(">u2")
    rows, cols = matrix.shape
    header = (
        f"P5\n# linear: value = {lo!r} + {span!r} * level / 65535; nan -> 0\n{cols} {rows}\n65535\n"
    ).encode("ascii")
    return header + levels.tobytes()


def write_pgm(path, matrix) -> None:
    atomic_write_bytes(path, render_pgm(matrix))


# --------------------------------------------------------------------------
# report tables

REPORT_COLUMNS = ("series", "key", "value")


def report_rows(squeezing, negativity) -> list[tuple]:
    """Long-format rows: scalar summary, then the sigma3 samples, then the W(0, p) cut."""
    rows = [
        ("summary", "lambda_star", squeezing.lambda_star),
        ("summary", "sigma3_min", squeezing.sigma3_min),
        ("summary", "vacuum_threshold_at_star", squeezing.vacuum_threshold_at_star),
        ("summary", "beats_vacuum", squeezing.beats_vacuum),
        ("summary", "beats_shot_noise", squeezing.beats_shot_noise),
        ("summary", "min_value", negativity.min_value),
        ("summary", "negativity_volume", negativity.negativity_volume),
    ]
    rows += [("sigma3", float(lam), float(val)) for lam, val in squeezing.lambda_samples]
    rows += [("cut", float(p), float(w)) for p, w in negativity.cut]
    return rows


def sweep_table_csv(table) -> str:
    comments = [f"observable={table.observable}"]
    comments += [f"failed {cell}: {message}" for cell, message in table.failures.items()]
    return render_csv(tuple(table.names) + (table.observable,), table.rows, comments)


def _series(split) -> str:
    return f"M{split.periods}N{split.kicks_per_period}"


def figure2_summary_csv(result) -> str:
    columns = (
        "periods",
        "kicks_per_period",
        "lambda_star",
        "sigma3_min",
        "vacuum_threshold_at_star",
        "beats_vacuum",
        "beats_shot_noise",
        "min_wigner",
        "cut_min",
        "negativity_volume",
        "cut_l2_to_reference",
    )
    rows = []
    for r in result.splits:
        sq, neg = r.squeezing, r.negativity
        rows.append((
            r.periods, r.kicks_per_period, sq.lambda_star, sq.sigma3_min, sq.vacuum_threshold_at_star,
            sq.beats_vacuum, sq.beats_shot_noise, neg.min_value, float(neg.cut[:, 1].min()),
            neg.negativity_volume, r.cut_distance,
        ))
    sq, neg = result.reference_squeezing, result.reference_negativity
    rows.append((
        0, 0, sq.lambda_star, sq.sigma3_min, sq.vacuum_threshold_at_star, sq.beats_vacuum,
        sq.beats_shot_noise, neg.min_value, float(neg.cut[:, 1].min()), neg.negativity_volume, 0.0,
    ))
    best = result.best_split
    closest = result.closest_cut_split
    comments = [
        "row periods=0 kicks_per_period=0 is the single-gate reference without rotation or damping",
        f"best_split={best[0]}x{best[1]}",
        f"closest_cut_split={closest[0]}x{closest[1]}",
        f"complete={str(result.complete).lower()}",
    ]
    return render_csv(columns, rows, comments)


def figure2_curves_csv(result) -> str:
    rows = []
    for r in result.splits:
        rows += [(_series(r), lam, val) for lam, val in r.squeezing.lambda_samples]
    rows += [("reference", lam, val) for lam, val in result.reference_squeezing.lambda_samples]
    return render_csv(("series", "lambda", "sigma3"), rows)


def figure2_cuts_csv(result) -> str:
    rows = []
    for r in result.splits:
        rows += [(_series(r), p, w) for p, w in r.negativity.cut]
    rows += [("reference", p, w) for p, w in result.reference_negativity.cut]
    return render_csv(("series", "p", "wigner_x0"), rows)


def figureS1_csv(result) -> str:
    rows = [
        (s, n0, result.sigma3_min[i, j])
        for i, s in enumerate(result.s_values)
        for j, n0 in enumerate(result.n0_values)
    ]
    comments = [
        f"split={result.split[0]}x{result.split[1]}",
        f"grid n_points={result.grid.n_points} half_extent={result.grid.half_extent!r}",
    ]
    comments += [f"failed {cell}: {message}" for cell, message in result.failures.items()]
    return render_csv(("s", "n0", "sigma3_min"), rows, comments)
