"""File formats.

Binary container (``.bin``) for sensing matrices and measurement vectors::

    bytes 0-7    magic b"RISCIBIN"
    bytes 8-11   format version, uint32 little-endian (currently 1)
    bytes 12-15  header length L, uint32 little-endian
    next L bytes UTF-8 JSON header
    remainder    data, C order, little-endian complex ("<c16" or "<c8")

The header holds ``kind`` ("matrix" or "measurement"), ``dtype``, ``shape``
and, for matrices, ``row_meta`` (mask index, frequency in Hz per row; rows are
mask-major, frequency-minor) and ``grid`` (column sample points). Measurement
headers carry ``snr_db``, ``noise_power`` and ``noise_seed``.

Masks are stored as ``.npz`` with arrays ``phases`` (masks, panels, rows,
cols), ``steering``, ``offsets``, ``panel_ids``, ``scan_points`` and a JSON
string ``meta`` holding kinds and seed records.
"""
from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .fields import FieldMap  # noqa: E402
from .masks import Mask, PhaseProfile  # noqa: E402
from .sensing import Measurement, SensingMatrix  # noqa: E402

MAGIC = b"RISCIBIN"
VERSION = 1
_DTYPES = {"complex128": "<c16", "complex64": "<c8"}


class FormatError(ValueError):
    """File does not follow the documented layout."""


def _write_container(path, header: dict, data: np.ndarray, dtype: str) -> Path:
    if dtype not in _DTYPES:
        raise ValueError(f"dtype must be one of {sorted(_DTYPES)}")
    header = dict(header, dtype=dtype, shape=list(data.shape))
    blob = json.dumps(header, sort_keys=True).encode()
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(data, dtype=_DTYPES[dtype]).tobytes())
    return path


def _read_container(path) -> tuple[dict, np.ndarray]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:8] != MAGIC:
        raise FormatError(f"{path}: bad magic")
    version, hlen = struct.unpack("<II", raw[8:16])
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    header = json.loads(raw[16:16 + hlen].decode())
    dt = np.dtype(_DTYPES[header["dtype"]])
    shape = tuple(header["shape"])
    body = raw[16 + hlen:]
    if len(body) != int(np.prod(shape)) * dt.itemsize:
        raise FormatError(f"{path}: payload size does not match header shape {shape}")
    data = np.frombuffer(body, dtype=dt).reshape(shape).astype(np.complex128)
    return header, data


def save_matrix(path, H: SensingMatrix, dtype: str = "complex128") -> Path:
    header = {"kind": "matrix", "row_meta": H.row_meta.tolist(), "grid": H.grid.tolist()}
    return _write_container(path, header, H.entries, dtype)


def load_matrix(path) -> SensingMatrix:
    header, data = _read_container(path)
    if header.get("kind") != "matrix":
        raise FormatError(f"{path}: not a matrix container")
    return SensingMatrix(data, np.array(header["row_meta"]), np.array(header["grid"]))


def save_measurement(path, g: Measurement, dtype: str = "complex128") -> Path:
    header = {
        "kind": "measurement",
        "snr_db": None if np.isinf(g.snr_db) else g.snr_db,
        "noise_power": g.noise_power,
        "noise_seed": g.noise_seed,
    }
    return _write_container(path, header, g.g, dtype)


def load_measurement(path) -> Measurement:
    header, data = _read_container(path)
    if header.get("kind") != "measurement":
        raise FormatError(f"{path}: not a measurement container")
    snr = np.inf if header["snr_db"] is None else header["snr_db"]
    return Measurement(data, snr, header["noise_seed"], header["noise_power"])


def write_matrix_csv(path, H: SensingMatrix) -> Path:
    """Long format, one line per entry: row, mask, frequency_hz, col, x, y, z, re, im."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "mask", "frequency_hz", "col", "x", "y", "z", "re", "im"])
        for i, (mask, freq) in enumerate(H.row_meta):
            for j, (x, y, z) in enumerate(H.grid):
                h = H.entries[i, j]
                w.writerow([i, int(mask), repr(float(freq)), j, repr(float(x)), repr(float(y)),
                            repr(float(z)), repr(float(h.real)), repr(float(h.imag))])
    return Path(path)


def save_masks(path, masks: list[Mask]) -> Path:
    """Store masks for replay; all panels must share one element layout."""
    if not masks:
        raise ValueError("no masks to save")
    phases = np.stack([np.stack([p.phases for p in m.profiles]) for m in masks])
    scan = np.array([
        np.full(3, np.nan) if m.scan_point is None else np.asarray(m.scan_point, float) for m in masks
    ])
    meta = [{"kind": m.kind, "seed_record": m.seed_record} for m in masks]
    np.savez(
        path,
        phases=phases,
        steering=np.stack([m.steering for m in masks]),
        offsets=np.stack([m.offsets for m in masks]),
        panel_ids=np.array([p.panel_id for p in masks[0].profiles]),
        scan_points=scan,
        meta=np.array(json.dumps(meta, sort_keys=True)),
    )
    return Path(path)


def load_masks(path) -> list[Mask]:
    with np.load(path, allow_pickle=False) as z:
        try:
            meta = json.loads(str(z["meta"]))
            phases, steering, offsets = z["phases"], z["steering"], z["offsets"]
            ids, scan = z["panel_ids"], z["scan_points"]
        except KeyError as exc:
            raise FormatError(f"{path}: missing array {exc}") from exc
    out = []
    for i, info in enumerate(meta):
        profiles = tuple(PhaseProfile(int(pid), phases[i, k]) for k, pid in enumerate(ids))
        point = None if np.all(np.isnan(scan[i])) else scan[i]
        out.append(Mask(profiles, steering[i], offsets[i], info["seed_record"], info["kind"], point))
    return out


def write_mask_table(path, masks: list[Mask], sides: list[str]) -> Path:
    """Per-panel summary: mask, panel, side, theta, phi, offset."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mask", "panel_id", "side", "theta_rad", "phi_rad", "offset_rad"])
        for i, m in enumerate(masks):
            for k, prof in enumerate(m.profiles):
                th, ph = m.steering[k]
                w.writerow([i, prof.panel_id, sides[k], repr(float(th)), repr(float(ph)),
                            repr(float(m.offsets[k]))])
    return Path(path)


def write_field_csv(path, fmap: FieldMap) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "z", "re", "im"])
        for (x, y, z), v in zip(fmap.sample_points, fmap.values):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(z)),
                        repr(float(v.real)), repr(float(v.imag))])
    return Path(path)


def read_field_csv(path) -> FieldMap:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return FieldMap(data[:, :3], data[:, 3] + 1j * data[:, 4])


def write_recon_csv(path, sigma, grid) -> Path:
    """Grid CSV: x, y, |sigma|, phase (rad)."""
    sigma = np.asarray(getattr(sigma, "sigma_est", sigma)).reshape(-1)
    grid = np.asarray(grid)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "abs_sigma", "phase_rad"])
        for (x, y, _), s in zip(grid, sigma):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(abs(s))), repr(float(np.angle(s)))])
    return Path(path)


def save_image(path, values, shape, extent, title: str = "", truth=None,
               roi=None) -> Path:
    """Render a max-normalized magnitude map; ``shape`` is (ny, nx)."""
    img = np.abs(np.asarray(values)).reshape(shape)
    peak = img.max()
    if peak > 0:
        img = img / peak
    fig, ax = plt.subplots(figsize=(4.2, 3.6), dpi=100)
    im = ax.imshow(img, origin="lower", extent=extent, cmap="viridis", vmin=0, vmax=1, aspect="equal")
    if truth is not None:
        ax.plot(truth[:, 0], truth[:, 1], "r+", ms=8, mew=1.2)
    for box in roi or ():
        (x0, x1), (y0, y1) = box.x_range, box.y_range
        ax.plot([x0, x1, x1, x0, x0], [y0, y0, y1, y1, y0], "r-", lw=1)
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    if title:
        ax.set_title(title, fontsize=9)
    fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return Path(path)


def extent_of(points) -> list[float]:
    pts = np.asarray(points)
    return [float(pts[:, 0].min()), float(pts[:, 0].max()), float(pts[:, 1].min()), float(pts[:, 1].max())]


def write_singular_csv(path, table: dict[str, np.ndarray]) -> Path:
    """Columns: index (1-based) then one normalized singular-value column per variant."""
    names = list(table)
    n = max(len(v) for v in table.values())
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index"] + names)
        for k in range(n):
            w.writerow([k + 1] + [repr(float(table[v][k])) if k < len(table[v]) else "" for v in names])
    return Path(path)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else str(f)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def ledger_line(record: dict) -> str:
    """Canonical JSON line: sorted keys, non-finite floats as strings."""
    return json.dumps(_plain(record), sort_keys=True, separators=(",", ":"))


def write_ledger(path, records: list[dict]) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(ledger_line(rec) + "\n")
    return path


def read_ledger(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


__all__ = [
    "MAGIC", "FormatError", "save_matrix", "load_matrix", "save_measurement", "load_measurement",
    "write_matrix_csv", "save_masks", "load_masks", "write_mask_table", "write_field_csv",
    "read_field_csv", "write_recon_csv", "save_image", "extent_of", "write_singular_csv",
    "ledger_line", "write_ledger", "read_ledger", "write_json",
]
