"""Linear (first-Born) sensing model and simulated measurements.

Row ``i`` of a sensing matrix corresponds to mask ``i // n_freq`` at frequency
``i % n_freq`` (mask-major, frequency-minor). Entry ``(i, j)`` is the product
of the aggregate Tx and Rx fields at grid point ``j``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fields import aggregate_fields_multi
from .masks import Mask
from .scene import RX, TX, Scene, TargetMap


@dataclass(frozen=True, eq=False)
class SensingMatrix:
    entries: np.ndarray
    row_meta: np.ndarray  # (M, 2): mask index, frequency in Hz
    grid: np.ndarray  # (K, 3)

    def __post_init__(self):
        H = np.asarray(self.entries)
        meta = np.asarray(self.row_meta, dtype=float).reshape(-1, 2)
        grid = np.atleast_2d(np.asarray(self.grid, dtype=float))
        if H.ndim != 2 or H.shape != (len(meta), len(grid)):
            raise ValueError(f"entries shape {H.shape} does not match row_meta/grid ({len(meta)}, {len(grid)})")
        if not np.all(np.isfinite(H)):
            raise ValueError("sensing matrix entries must be finite")
        object.__setattr__(self, "entries", H)
        object.__setattr__(self, "row_meta", meta)
        object.__setattr__(self, "grid", grid)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def n_masks(self) -> int:
        return len(np.unique(self.row_meta[:, 0]))

    @property
    def frequencies(self) -> np.ndarray:
        return np.unique(self.row_meta[:, 1])


@dataclass(frozen=True, eq=False)
class Measurement:
    g: np.ndarray
    snr_db: float
    noise_seed: dict = field(default_factory=dict)
    noise_power: float = 0.0  # per-entry variance actually used

    def __post_init__(self):
        object.__setattr__(self, "g", np.asarray(self.g, dtype=complex).reshape(-1))


def build_sensing_matrix(scene: Scene, masks: Sequence[Mask], grid_points) -> SensingMatrix:
    grid = np.atleast_2d(np.asarray(grid_points, dtype=float))
    if len(grid) == 0:
        raise ValueError("grid_points must be non-empty")
    if len(masks) == 0:
        raise ValueError("at least one mask is required")
    freqs = scene.frequencies
    n_m, n_f = len(masks), len(freqs)
    e_tx = aggregate_fields_multi(scene, masks, TX, grid, freqs)
    e_rx = aggregate_fields_multi(scene, masks, RX, grid, freqs)
    e_tx *= e_rx
    H = e_tx.transpose(2, 0, 1)  # (mask, frequency, point)
    meta = np.column_stack([np.repeat(np.arange(n_m), n_f), np.tile(freqs, n_m)])
    return SensingMatrix(H.reshape(n_m * n_f, len(grid)), meta, grid)


def snap_to_grid(target: TargetMap, grid, max_distance: float = 0.1) -> np.ndarray:
    """Reflectivity vector on ``grid`` with each scatterer moved to its nearest point.

    Scatterers farther than ``max_distance`` from every grid point are dropped
    with a warning; if none remain a ``ValueError`` is raised.
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    d = np.linalg.norm(target.positions[:, None, :] - grid[None, :, :], axis=-1)
    nearest = d.argmin(axis=1)
    dist = d[np.arange(len(target)), nearest]
    keep = dist <= max_distance
    if not np.any(keep):
        raise ValueError("target lies entirely outside the forward grid coverage")
    if not np.all(keep):
        warnings.warn(f"{np.sum(~keep)} scatterer(s) outside forward grid coverage were dropped", stacklevel=2)
    if np.any(dist[keep] > 1e-9):
        warnings.warn("off-grid scatterers snapped to the nearest forward-grid point", stacklevel=2)
    sigma = np.zeros(len(grid), dtype=complex)
    np.add.at(sigma, nearest[keep], target.reflectivities[keep])
    return sigma


def noise_variance(signal, snr_db: float, reference_power: float | None = None) -> float:
    """Per-entry noise variance for the requested SNR.

    SNR is total signal power over expected total noise power across the whole
    measurement vector, i.e. ``mean(|signal|**2) / variance``. A
    ``reference_power`` (mean power per entry) overrides the signal-derived
    value; this fixes one absolute noise floor across several systems. When the
    signal is identically zero and no reference is given, the reference is 1.
    """
    if np.isinf(snr_db) and snr_db > 0:
        return 0.0
    if reference_power is None:
        reference_power = float(np.mean(np.abs(signal) ** 2))
        if reference_power == 0.0:
            reference_power = 1.0
    return reference_power / 10.0 ** (snr_db / 10.0)


def simulate_measurement(H_fwd: SensingMatrix, target: TargetMap | np.ndarray, snr_db: float,
                         rng=None, reference_power: float | None = None,
                         max_snap: float = 0.1) -> Measurement:
    """``g = H sigma + n`` with circular complex Gaussian noise.

    ``target`` may be a :class:`TargetMap` (snapped onto the forward grid) or a
    reflectivity vector already aligned with the grid. ``snr_db = inf``
    disables noise.
    """
    if isinstance(target, TargetMap):
        sigma = snap_to_grid(target, H_fwd.grid, max_snap)
    else:
        sigma = np.asarray(target, dtype=complex).reshape(-1)
        if len(sigma) != H_fwd.shape[1]:
            raise ValueError("reflectivity vector length must match the forward grid")
    signal = H_fwd.entries @ sigma
    var = noise_variance(signal, snr_db, reference_power)
    record = {}
    if var > 0:
        if rng is None or isinstance(rng, (int, np.integer, np.random.SeedSequence)):
            ss = rng if isinstance(rng, np.random.SeedSequence) else np.random.SeedSequence(
                0 if rng is None else int(rng))
            rng = np.random.default_rng(ss)
            record = {"entropy": int(ss.entropy), "spawn_key": [int(k) for k in ss.spawn_key]}
        scale = np.sqrt(var / 2.0)
        n = scale * (rng.standard_normal(len(signal)) + 1j * rng.standard_normal(len(signal)))
        signal = signal + n
    return Measurement(signal, float(snr_db), record, var)


def add_clutter(target: TargetMap, clutter_y: float, x: float = 0.0, z: float = 8.0,
                reflectivity: complex = 1.0) -> TargetMap:
    """Append a clutter scatterer at ``(x, clutter_y, z)``."""
    return TargetMap(
        np.vstack([target.positions, [[x, clutter_y, z]]]),
        np.append(target.reflectivities, reflectivity),
        np.append(target.is_clutter, True),
    )


def remove_clutter(target: TargetMap) -> TargetMap:
    return target.targets_only()


def normalized_singular_values(H) -> np.ndarray:
    """Singular values divided by the largest one."""
    entries = H.entries if isinstance(H, SensingMatrix) else np.asarray(H)
    s = np.linalg.svd(entries, compute_uv=False)
    return s / s[0] if s[0] > 0 else s
