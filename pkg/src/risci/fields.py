"""Scalar-wave propagation through phased RIS panels.

Every element is an isotropic point re-radiator. A wave travelling a distance
``d`` picks up ``exp(-1j*k*d)/d``; an element multiplies what it receives by
``exp(1j*phase)``. The source antenna radiates with unit amplitude.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .masks import Mask
from .scene import TX, Scene, wavenumber


@dataclass(frozen=True, eq=False)
class FieldMap:
    sample_points: np.ndarray
    values: np.ndarray
    mask_index: int | None = None
    frequency: float | None = None
    side: str | None = None

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.sample_points, dtype=float))
        vals = np.asarray(self.values, dtype=complex).reshape(-1)
        if len(pts) != len(vals):
            raise ValueError("values must match the number of sample points")
        object.__setattr__(self, "sample_points", pts)
        object.__setattr__(self, "values", vals)

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def normalized_magnitude(self) -> np.ndarray:
        mag = np.abs(self.values)
        peak = mag.max()
        return mag / peak if peak > 0 else mag


def spherical_wave(src, points, frequency: float) -> np.ndarray:
    """``exp(-1j*k*d)/d`` from ``src`` to each of ``points`` (broadcasting)."""
    d = np.linalg.norm(np.asarray(points, dtype=float) - np.asarray(src, dtype=float), axis=-1)
    if np.any(d == 0):
        raise ValueError("observation point coincides with the source")
    return np.exp(-1j * wavenumber(frequency) * d) / d


def element_field(element_pos, applied_phase: float, incident: complex, point, frequency: float) -> complex:
    """Field at ``point`` re-radiated by one element."""
    return complex(incident * np.exp(1j * applied_phase) * spherical_wave(element_pos, point, frequency))


def _weights(positions: np.ndarray, antenna, phases: np.ndarray, frequency: float) -> np.ndarray:
    """Incident wave times element response."""
    return spherical_wave(antenna, positions, frequency) * np.exp(1j * phases)


def _propagate(positions: np.ndarray, points: np.ndarray, weights: np.ndarray, frequency: float,
               chunk: int = 512) -> np.ndarray:
    """Sum of ``weights * exp(-1j*k*d)/d`` over elements, for each point.

    ``weights`` may be ``(n_elements,)`` or ``(n_elements, n_columns)``. Points
    are processed in chunks to bound the element-to-point matrix size.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if len(pts) == 0:
        raise ValueError("points must be non-empty")
    out = np.empty((len(pts),) + weights.shape[1:], dtype=complex)
    for start in range(0, len(pts), chunk):
        sl = slice(start, start + chunk)
        green = spherical_wave(positions[None, :, :], pts[sl, None, :], frequency)
        out[sl] = green @ weights
    return out


def _distances(positions: np.ndarray, points: np.ndarray) -> np.ndarray:
    """``(n_points, n_elements)`` Euclidean distances."""
    d = np.subtract.outer(points[:, 0], positions[:, 0])
    d *= d
    for axis in (1, 2):
        q = np.subtract.outer(points[:, axis], positions[:, axis])
        q *= q
        d += q
    np.sqrt(d, out=d)
    if np.any(d == 0):
        raise ValueError("observation point coincides with the source")
    return d


def propagate_multi(positions: np.ndarray, points, weights, frequencies,
                    max_entries: int = 2**22) -> np.ndarray:
    """Frequency-batched :func:`_propagate`, shape ``(n_freq, n_points, n_columns)``.

    ``weights[i]`` are the element weights at ``frequencies[i]``. Distances are
    computed once per point chunk; for each further frequency the Green matrix
    is advanced by ``exp(-1j*dk*d)``, reusing the step while ``dk`` repeats.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if len(pts) == 0:
        raise ValueError("points must be non-empty")
    ks = [wavenumber(f) for f in frequencies]
    out = np.empty((len(ks), len(pts)) + weights[0].shape[1:], dtype=complex)
    chunk = max(1, max_entries // len(positions))
    for start in range(0, len(pts), chunk):
        sl = slice(start, start + chunk)
        d = _distances(positions, pts[sl])
        green = np.exp(-1j * ks[0] * d)
        green /= d
        out[0, sl] = green @ weights[0]
        step, dk_prev = None, None
        for i in range(1, len(ks)):
            dk = ks[i] - ks[i - 1]
            if step is None or not np.isclose(dk, dk_prev, rtol=1e-12, atol=0.0):
                step, dk_prev = np.exp(-1j * dk * d), dk
            green *= step
            out[i, sl] = green @ weights[i]
    return out


def panel_field(scene: Scene, mask: Mask, panel_id: int, points, frequency: float,
                mask_index: int | None = None) -> FieldMap:
    """Field radiated at ``points`` by a single panel under ``mask``."""
    panel = scene.panels[panel_id]
    pos = panel.element_positions().reshape(-1, 3)
    w = _weights(pos, scene.antenna(panel.side), mask.profiles[panel_id].phases.reshape(-1), frequency)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return FieldMap(pts, _propagate(pos, pts, w, frequency), mask_index, frequency, panel.side)


def aggregate_field(scene: Scene, mask: Mask, side: str, points, frequency: float,
                    mask_index: int | None = None) -> FieldMap:
    """Interference of all panels of ``side``: the speckle pattern."""
    pos = scene.side_element_positions(side)
    w = _weights(pos, scene.antenna(side), mask.side_phases(scene, side), frequency)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return FieldMap(pts, _propagate(pos, pts, w, frequency), mask_index, frequency, side)


def aggregate_fields(scene: Scene, masks, side: str, points, frequency: float) -> np.ndarray:
    """Aggregate fields of many masks at once, ``(n_points, n_masks)``."""
    return aggregate_fields_multi(scene, masks, side, points, [frequency])[0]


def aggregate_fields_multi(scene: Scene, masks, side: str, points, frequencies) -> np.ndarray:
    """Aggregate fields of many masks at several frequencies, ``(n_freq, n_points, n_masks)``."""
    pos = scene.side_element_positions(side)
    resp = np.exp(1j * np.stack([m.side_phases(scene, side) for m in masks], axis=1))
    weights = [spherical_wave(scene.antenna(side), pos, f)[:, None] * resp for f in frequencies]
    return propagate_multi(pos, points, weights, frequencies)


def energy_fraction(values, points, window) -> float:
    """Fraction of ``|values|**2`` falling on points inside ``window`` (a RoiBox)."""
    inten = np.abs(np.asarray(values)) ** 2
    total = inten.sum()
    if total == 0:
        return 0.0
    return float(inten[window.contains(points)].sum() / total)


def energy_centroid(values, points) -> np.ndarray:
    inten = np.abs(np.asarray(values)) ** 2
    return (inten[:, None] * np.asarray(points)).sum(axis=0) / inten.sum()


def normalized_correlation(a, b) -> float:
    """``|<a, b>| / (|a| |b|)`` for complex or real patterns."""
    a = np.asarray(a).reshape(-1)
    b = np.asarray(b).reshape(-1)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(abs(np.vdot(a, b)) / (na * nb))


def plane_grid(center, extent_x: float, extent_y: float, step: float) -> tuple[np.ndarray, tuple[int, int]]:
    """Grid of points in a constant-z plane with roughly ``step`` spacing."""
    nx = int(round(extent_x / step)) + 1
    ny = int(round(extent_y / step)) + 1
    xs = np.linspace(center[0] - extent_x / 2, center[0] + extent_x / 2, nx)
    ys = np.linspace(center[1] - extent_y / 2, center[1] + extent_y / 2, ny)
    X, Y = np.meshgrid(xs, ys)
    pts = np.column_stack([X.ravel(), Y.ravel(), np.full(X.size, center[2])])
    return pts, (ny, nx)


__all__ = [
    "FieldMap", "spherical_wave", "element_field", "panel_field", "aggregate_field",
    "aggregate_fields", "energy_fraction", "energy_centroid", "normalized_correlation",
    "plane_grid", "TX",
]
