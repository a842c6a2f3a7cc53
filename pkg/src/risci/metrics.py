"""Image-quality metrics for reconstructed reflectivity maps on planar grids."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import maximum_filter
from scipy.optimize import linear_sum_assignment

from .scene import TargetMap


@dataclass(frozen=True)
class ImageMetrics:
    normalized_correlation: float
    peak_localization_error: float
    background_energy_ratio: float
    peaks_matched: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


class PlanarGrid:
    """Regular ``ny x nx`` grid (y slow, x fast) recovered from a point list."""

    def __init__(self, points, decimals: int = 9):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        xs = np.unique(np.round(pts[:, 0], decimals))
        ys = np.unique(np.round(pts[:, 1], decimals))
        if len(xs) * len(ys) != len(pts):
            raise ValueError("points do not form a regular planar grid")
        X, Y = np.meshgrid(xs, ys)
        if not (np.allclose(pts[:, 0], X.ravel()) and np.allclose(pts[:, 1], Y.ravel())):
            raise ValueError("grid points must be ordered row-major with y as the slow axis")
        self.points = pts
        self.shape = (len(ys), len(xs))
        # unrounded axes: first row for x, first column for y
        self.xs = pts[: len(xs), 0].copy()
        self.ys = pts[:: len(xs), 1].copy()
        self.dx = float(np.diff(self.xs).min()) if len(xs) > 1 else np.inf
        self.dy = float(np.diff(self.ys).min()) if len(ys) > 1 else np.inf
        finite = [v for v in (self.dx, self.dy) if np.isfinite(v)]
        self.slack = 1e-6 * min(finite) if finite else 1e-9

    def rasterize(self, truth: TargetMap) -> np.ndarray:
        """Bilinear spread of ``|reflectivity|`` onto the grid; outside points are ignored."""
        img = np.zeros(self.shape)
        for (x, y, _), r in zip(truth.positions, np.abs(truth.reflectivities)):
            if not (self.xs[0] - 1e-9 <= x <= self.xs[-1] + 1e-9 and self.ys[0] - 1e-9 <= y <= self.ys[-1] + 1e-9):
                continue
            ix = int(np.clip(np.searchsorted(self.xs, x) - 1, 0, max(len(self.xs) - 2, 0)))
            iy = int(np.clip(np.searchsorted(self.ys, y) - 1, 0, max(len(self.ys) - 2, 0)))
            if len(self.xs) == 1 or len(self.ys) == 1:
                img[iy, ix] += r
                continue
            tx = np.clip((x - self.xs[ix]) / (self.xs[ix + 1] - self.xs[ix]), 0, 1)
            ty = np.clip((y - self.ys[iy]) / (self.ys[iy + 1] - self.ys[iy]), 0, 1)
            img[iy, ix] += r * (1 - tx) * (1 - ty)
            img[iy, ix + 1] += r * tx * (1 - ty)
            img[iy + 1, ix] += r * (1 - tx) * ty
            img[iy + 1, ix + 1] += r * tx * ty
        return img.reshape(-1)

    def peaks(self, image, count: int) -> np.ndarray:
        """Flat indices of the ``count`` largest local maxima (8-neighbourhood)."""
        img = np.abs(np.asarray(image)).reshape(self.shape)
        local = (maximum_filter(img, size=3, mode="constant", cval=-np.inf) == img) & (img > 0)
        idx = np.flatnonzero(local)
        order = np.argsort(-img.reshape(-1)[idx], kind="stable")
        return idx[order[:count]]

    def snap_offsets(self, positions) -> tuple[np.ndarray, np.ndarray]:
        """Per-axis distance from each position to the nearest grid line."""
        p = np.atleast_2d(positions)
        ox = np.abs(p[:, None, 0] - self.xs[None, :]).min(axis=1)
        oy = np.abs(p[:, None, 1] - self.ys[None, :]).min(axis=1)
        return ox, oy

    def near_any(self, positions) -> np.ndarray:
        """Grid points within one cell (per axis) of any of ``positions``."""
        near = np.zeros(len(self.points), dtype=bool)
        for p in np.atleast_2d(positions):
            near |= (np.abs(self.points[:, 0] - p[0]) <= self.dx + self.slack) & (
                np.abs(self.points[:, 1] - p[1]) <= self.dy + self.slack
            )
        return near


def match_peaks(sigma_est, truth: TargetMap, grid) -> tuple[int, np.ndarray]:
    """Match the top-K local maxima to the K true scatterers one-to-one.

    A peak matches a scatterer when, along both axes, it lies within one grid
    cell of the scatterer's grid-resolution position. For an off-grid
    scatterer that position is its nearest grid coordinate, so the allowed
    offset is one cell plus the snapping distance. Returns the number of
    matched pairs and the peak indices.
    """
    g = grid if isinstance(grid, PlanarGrid) else PlanarGrid(grid)
    truth = truth.targets_only()
    peaks = g.peaks(sigma_est, len(truth))
    if len(peaks) == 0:
        return 0, peaks
    pp = g.points[peaks]
    dx = np.abs(pp[:, None, 0] - truth.positions[None, :, 0])
    dy = np.abs(pp[:, None, 1] - truth.positions[None, :, 1])
    tol_x, tol_y = g.snap_offsets(truth.positions)
    ok = (dx <= g.dx + tol_x[None, :] + g.slack) & (dy <= g.dy + tol_y[None, :] + g.slack)
    rows, cols = linear_sum_assignment(-ok.astype(float))
    return int(ok[rows, cols].sum()), peaks


def image_correlation(sigma_est, truth: TargetMap, grid) -> float:
    g = grid if isinstance(grid, PlanarGrid) else PlanarGrid(grid)
    a = np.abs(np.asarray(sigma_est)).reshape(-1)
    b = g.rasterize(truth.targets_only())
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(a @ b / (na * nb))


def compute_metrics(sigma_est, truth: TargetMap, grid) -> ImageMetrics:
    """Correlation with the rasterized truth, peak localization and background energy.

    * ``normalized_correlation``: cosine similarity between ``|sigma_est|`` and
      the bilinearly rasterized truth magnitude.
    * ``peak_localization_error``: mean distance (m) from each true scatterer to
      the nearest of the top-K local maxima, K the number of scatterers.
    * ``background_energy_ratio``: share of ``|sigma_est|**2`` on grid points
      more than one cell away from every true scatterer.
    """
    g = grid if isinstance(grid, PlanarGrid) else PlanarGrid(grid)
    sigma = np.asarray(sigma_est).reshape(-1)
    if len(sigma) != len(g.points):
        raise ValueError("sigma_est length must match the grid")
    truth = truth.targets_only()
    corr = image_correlation(sigma, truth, g)
    matched, peaks = match_peaks(sigma, truth, g)
    if len(peaks):
        d = np.linalg.norm(truth.positions[:, None, :2] - g.points[peaks][None, :, :2], axis=-1)
        loc_err = float(d.min(axis=1).mean())
    else:
        # no peak at all: report the grid diagonal as the worst-case error
        loc_err = float(np.hypot(np.ptp(g.xs), np.ptp(g.ys)))
    energy = np.abs(sigma) ** 2
    total = energy.sum()
    bg = float(energy[~g.near_any(truth.positions)].sum() / total) if total > 0 else 0.0
    return ImageMetrics(corr, loc_err, bg, matched)
