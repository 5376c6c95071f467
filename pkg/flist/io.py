"""
    flist.io
    --------

    This module provides the on-disk formats: field and rates CSV files with
    a one-line JSON provenance header, scattering and ensemble JSON documents,
    evolution run directories and verification reports.

    A provenance header records the command, its parameters, the package
    version, the sha256 of every input file and a creation timestamp. The
    timestamp is the only part that differs between identical runs.
"""
from collections.abc import Iterable, Mapping, Sequence
import csv
from datetime import datetime, timezone
import hashlib
import json
import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np

from flist import __version__
from flist.config import ValidationError
from flist.grid import SampledPotential, SpatialGrid, SpectralContour, fit_uniform, make_grid
from flist.scattering import ScatteringData
from flist.spectrum import SolitonEnsemble

logger = logging.getLogger("flist")

PathLike = Union[str, Path]
HEADER_PREFIX = "# "
FIELD_COLUMNS = ["x", "re_u", "im_u"]
DERIVATIVE_COLUMNS = ["re_ux", "im_ux"]
RATES_COLUMNS = ["t", "residual_sup", "bound", "slope_running"]


class FormatError(ValidationError):
    """Raised when an input file does not follow its expected format."""


def sha256_file(path: PathLike, chunk_bytes: int = 1 << 20) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as stream:
        for block in iter(lambda: stream.read(chunk_bytes), b""):
            digest.update(block)
    return digest.hexdigest()


def provenance(command: str, parameters: Mapping, inputs: Iterable[PathLike] = (),
               grid: Optional[SpatialGrid] = None) -> dict:
    header = {
        "command": command,
        "parameters": dict(parameters),
        "version": __version__,
        "inputs": {str(path): sha256_file(path) for path in inputs},
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    if grid is not None:
        header["grid"] = grid.to_dict()
    return header


def _number(value: float) -> str:
    return "%.17g" % value


def _complex_pair(value: complex) -> list[float]:
    return [float(np.real(value)), float(np.imag(value))]


def _dump_json(path: PathLike, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_json(path: PathLike) -> dict:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(payload, dict):
        raise FormatError(f"{path}: expected a JSON object at top level")
    return payload


def document_provenance(path: PathLike) -> dict:
    """The provenance header of a JSON document, empty when it has none."""
    header = _load_json(path).get("provenance", {})
    return header if isinstance(header, dict) else {}


def _write_table(path: PathLike, header: dict, columns: Sequence[str],
                 rows: Iterable[Sequence[float]]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as stream:
        stream.write(HEADER_PREFIX + json.dumps(header, sort_keys=True) + "\n")
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_number(value) for value in row])


def _read_table(path: PathLike) -> tuple[dict, list[str], np.ndarray]:
    with Path(path).open(newline="", encoding="utf-8") as stream:
        first = stream.readline()
        if not first.startswith(HEADER_PREFIX):
            raise FormatError(f"{path}: missing provenance header line")
        try:
            header = json.loads(first[len(HEADER_PREFIX):])
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: malformed provenance header ({exc})") from exc
        reader = csv.reader(stream)
        try:
            columns = next(reader)
            body = np.array([[float(cell) for cell in row] for row in reader if row])
        except (StopIteration, ValueError) as exc:
            raise FormatError(f"{path}: malformed CSV body") from exc
    if body.size == 0:
        raise FormatError(f"{path}: no data rows")
    if body.shape[1] != len(columns):
        raise FormatError(f"{path}: {body.shape[1]} values per row for {len(columns)} columns")
    return header, columns, body


def write_field_csv(path: PathLike, u: SampledPotential, header: dict) -> None:
    columns = list(FIELD_COLUMNS)
    data = [u.grid.nodes, u.values.real, u.values.imag]
    if u.derivative_values is not None:
        columns += DERIVATIVE_COLUMNS
        data += [u.derivative_values.real, u.derivative_values.imag]
    _write_table(path, header, columns, zip(*data))


def read_field_csv(path: PathLike) -> tuple[SampledPotential, dict]:
    """Read a field CSV, refitting onto a uniform grid when the nodes are not uniform.

    :raise flist.io.FormatError: Raised if the file does not have the field columns.
    """
    header, columns, body = _read_table(path)
    if columns[:3] != FIELD_COLUMNS:
        raise FormatError(f"{path}: expected columns {FIELD_COLUMNS}, got {columns[:3]}")
    x = body[:, 0]
    if x.size < 3 or np.any(np.diff(x) <= 0):
        raise FormatError(f"{path}: x must be strictly increasing with at least 3 nodes")
    values = body[:, 1] + 1j * body[:, 2]
    slopes = body[:, 3] + 1j * body[:, 4] if columns[3:5] == DERIVATIVE_COLUMNS else None
    grid = make_grid(float(x[0]), float(x[-1]), x.size)
    if not np.allclose(x, grid.nodes, rtol=0, atol=1e-6 * grid.dx):
        logger.info("%s: non-uniform nodes, refitting onto %s uniform points", path, x.size)
        return fit_uniform(x, values, grid), header
    return SampledPotential(grid, values, slopes), header


def write_scattering_json(path: PathLike, sd: ScatteringData, header: dict) -> None:
    on_real = sd.contour.on_real_axis
    nodes = [
        _complex_pair(k) + _complex_pair(a) + _complex_pair(b)
        for k, a, b in zip(sd.nodes, sd.a_values, sd.b_values)
    ]
    payload = {
        "provenance": header,
        "nodes": nodes,
        "axis": ["real" if flag else "imag" for flag in on_real],
        "a0": _complex_pair(sd.a0),
        "report": {key: float(value) for key, value in sd.report.items()},
        "discrete": _ensemble_records(sd.discrete) if sd.discrete is not None else [],
    }
    _dump_json(path, payload)


def read_scattering_json(path: PathLike) -> ScatteringData:
    """Rebuild :class:`flist.scattering.ScatteringData` from its JSON document."""
    payload = _load_json(path)
    try:
        nodes = np.array(payload["nodes"], dtype=float)
        axis = payload["axis"]
        a0 = complex(*payload["a0"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed scattering document ({exc})") from exc
    if nodes.ndim != 2 or nodes.shape[1] != 6 or len(axis) != nodes.shape[0]:
        raise FormatError(f"{path}: nodes must be rows of 6 numbers, one axis tag each")
    real = np.array([tag == "real" for tag in axis])
    contour = SpectralContour(nodes[real, 0], nodes[~real, 1])
    a = nodes[:, 2] + 1j * nodes[:, 3]
    b = nodes[:, 4] + 1j * nodes[:, 5]
    # the contour orders real nodes before imaginary ones
    order = np.concatenate([np.nonzero(real)[0], np.nonzero(~real)[0]])
    discrete = _ensemble_from_records(payload.get("discrete", []), path)
    return ScatteringData(contour, a[order], b[order], b[order] / a[order], a0,
                          discrete if len(discrete) else None, payload.get("report", {}))


def _ensemble_records(ens: SolitonEnsemble) -> list[dict]:
    return [
        {"re_k": float(k.real), "im_k": float(k.imag), "re_c": float(c.real), "im_c": float(c.imag)}
        for k, c in zip(ens.k, ens.c)
    ]


def _ensemble_from_records(records: list, path: PathLike) -> SolitonEnsemble:
    try:
        pairs = [(complex(r["re_k"], r["im_k"]), complex(r["re_c"], r["im_c"])) for r in records]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{path}: malformed pole record ({exc})") from exc
    return SolitonEnsemble.from_pairs(pairs)


def write_ensemble_json(path: PathLike, ens: SolitonEnsemble, header: dict) -> None:
    _dump_json(path, {"provenance": header, "poles": _ensemble_records(ens)})


def read_ensemble_json(path: PathLike) -> SolitonEnsemble:
    payload = _load_json(path)
    if "poles" not in payload:
        raise FormatError(f"{path}: missing 'poles'")
    return _ensemble_from_records(payload["poles"], path)


def write_rates_csv(path: PathLike, rows, header: dict) -> None:
    _write_table(path, header, RATES_COLUMNS,
                 ((row.t, row.residual_sup, row.bound, row.slope_running) for row in rows))


def write_run_dir(path: PathLike, result, header: dict) -> Path:
    """Write ``snap_<index>.csv`` per snapshot and a ``manifest.json``."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    names = []
    for index, (t, snapshot) in enumerate(result.snapshots):
        name = f"snap_{index:04d}.csv"
        write_field_csv(root / name, snapshot, {**header, "t": t})
        names.append(name)
    _dump_json(root / "manifest.json", {
        "provenance": header,
        "snapshots": [{"t": t, "file": name} for (t, _), name in zip(result.snapshots, names)],
        "conserved_drift": result.conserved_drift,
        "energy_log": [list(entry) for entry in result.energy_log],
    })
    return root


def report_body(records: Sequence[Mapping]) -> str:
    """Serialise verification records deterministically."""
    return json.dumps(list(records), indent=2, sort_keys=True)


def write_report(path: PathLike, records: Sequence[Mapping], header: dict) -> None:
    Path(path).write_text(
        HEADER_PREFIX + json.dumps(header, sort_keys=True) + "\n" + report_body(records) + "\n",
        encoding="utf-8",
    )
