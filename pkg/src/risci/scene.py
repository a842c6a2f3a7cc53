"""Physical configuration: RIS panels, antennas, region of interest and targets.

All coordinates are in meters in a global frame where the RIS apertures lie in
the ``z = 0`` plane and the region of interest sits at ``z > 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

TX = "tx"
RX = "rx"
SIDES = (TX, RX)


def wavenumber(frequency: float) -> float:
    """Free-space propagation constant ``2*pi*f/c`` in rad/m."""
    return 2.0 * np.pi * frequency / SPEED_OF_LIGHT


class RisElement(NamedTuple):
    position: np.ndarray
    panel_id: int
    local_index: tuple[int, int]


@dataclass(frozen=True)
class RisPanel:
    """Planar, regularly spaced element grid centered on ``origin``.

    Rows run along ``y`` and columns along ``x``. A 1x1 panel has its single
    element at ``origin``.
    """

    rows: int = 20
    cols: int = 20
    element_spacing: float = 0.02
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    side: str = TX
    panel_id: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"panel needs at least one element, got {self.rows}x{self.cols}")
        if not self.element_spacing > 0:
            raise ValueError(f"element_spacing must be positive, got {self.element_spacing}")
        if self.side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}, got {self.side!r}")
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))

    @property
    def n_elements(self) -> int:
        return self.rows * self.cols

    @property
    def extent(self) -> tuple[float, float]:
        """Physical size ``(L_x, L_y)``."""
        return self.cols * self.element_spacing, self.rows * self.element_spacing

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.origin, dtype=float)

    def element_positions(self) -> np.ndarray:
        """Element coordinates with shape ``(rows, cols, 3)``."""
        s = self.element_spacing
        xs = (np.arange(self.cols) - (self.cols - 1) / 2.0) * s
        ys = (np.arange(self.rows) - (self.rows - 1) / 2.0) * s
        pos = np.empty((self.rows, self.cols, 3))
        pos[..., 0] = self.origin[0] + xs[None, :]
        pos[..., 1] = self.origin[1] + ys[:, None]
        pos[..., 2] = self.origin[2]
        return pos

    def elements(self) -> list[RisElement]:
        pos = self.element_positions()
        return [
            RisElement(pos[m, n], self.panel_id, (m, n))
            for m in range(self.rows)
            for n in range(self.cols)
        ]


@dataclass(frozen=True)
class RoiBox:
    """Axis-aligned region of interest.

    With ``extent_z == 0`` the ROI is the rectangle in the plane ``z = center[2]``.
    """

    center: tuple[float, float, float] = (0.0, 1.9, 8.0)
    extent_x: float = 2.0
    extent_y: float = 2.0
    extent_z: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        if not (self.extent_x > 0 and self.extent_y > 0):
            raise ValueError("ROI extents must be strictly positive")
        if self.extent_z < 0:
            raise ValueError("extent_z must be non-negative")

    @property
    def plane_z(self) -> float:
        return self.center[2]

    @property
    def x_range(self) -> tuple[float, float]:
        return self.center[0] - self.extent_x / 2, self.center[0] + self.extent_x / 2

    @property
    def y_range(self) -> tuple[float, float]:
        return self.center[1] - self.extent_y / 2, self.center[1] + self.extent_y / 2

    @property
    def z_range(self) -> tuple[float, float]:
        return self.center[2] - self.extent_z / 2, self.center[2] + self.extent_z / 2

    def contains(self, points, atol: float = 1e-9) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        ok = np.ones(len(p), dtype=bool)
        for axis, (lo, hi) in enumerate((self.x_range, self.y_range, self.z_range)):
            ok &= (p[:, axis] >= lo - atol) & (p[:, axis] <= hi + atol)
        return ok

    def grid(self, nx: int = 31, ny: int = 31) -> np.ndarray:
        """Uniform ``(ny*nx, 3)`` sample grid in the ROI plane, edges included.

        Points are ordered row-major with ``y`` as the slow axis.
        """
        xs = np.linspace(*self.x_range, nx)
        ys = np.linspace(*self.y_range, ny)
        X, Y = np.meshgrid(xs, ys)
        return np.column_stack([X.ravel(), Y.ravel(), np.full(X.size, self.plane_z)])

    def corners(self) -> np.ndarray:
        xs, ys, zs = self.x_range, self.y_range, self.z_range
        return np.array([(x, y, z) for z in zs for y in ys for x in xs], dtype=float)

    def scaled(self, factor: float) -> "RoiBox":
        return RoiBox(self.center, self.extent_x * factor, self.extent_y * factor, self.extent_z * factor)


@dataclass(frozen=True)
class TargetMap:
    """Point scatterers with complex reflectivities.

    ``is_clutter`` marks scatterers placed deliberately outside the ROI.
    """

    positions: np.ndarray
    reflectivities: np.ndarray
    is_clutter: np.ndarray = None

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float)).reshape(-1, 3)
        refl = np.asarray(self.reflectivities, dtype=complex).reshape(-1)
        if len(pos) != len(refl):
            raise ValueError("positions and reflectivities must have equal length")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(refl))):
            raise ValueError("target positions and reflectivities must be finite")
        clutter = (
            np.zeros(len(pos), dtype=bool)
            if self.is_clutter is None
            else np.asarray(self.is_clutter, dtype=bool).reshape(-1)
        )
        if len(clutter) != len(pos):
            raise ValueError("is_clutter must match the number of scatterers")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "reflectivities", refl)
        object.__setattr__(self, "is_clutter", clutter)

    def __len__(self) -> int:
        return len(self.positions)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TargetMap):
            return NotImplemented
        return (
            np.array_equal(self.positions, other.positions)
            and np.array_equal(self.reflectivities, other.reflectivities)
            and np.array_equal(self.is_clutter, other.is_clutter)
        )

    def targets_only(self) -> "TargetMap":
        keep = ~self.is_clutter
        return TargetMap(self.positions[keep], self.reflectivities[keep])


def paper_target(
    center=(0.0, 1.9, 8.0), spacing: float = 0.5, reflectivity: complex = 1.0
) -> TargetMap:
    """3x3 grid of unit scatterers, 50 cm pitch, centered at (0, 1.9, 8) m."""
    cx, cy, cz = center
    offsets = (-spacing, 0.0, spacing)
    pos = [(cx + dx, cy + dy, cz) for dy in offsets for dx in offsets]
    return TargetMap(np.array(pos), np.full(9, reflectivity, dtype=complex))


@dataclass(frozen=True)
class SceneConfig:
    """Declarative scene parameters. Defaults reproduce the published setup."""

    panel_rows: int = 20
    panel_cols: int = 20
    element_spacing: float = 0.02
    n_tx_panels: int = 6
    n_rx_panels: int = 6
    panel_grid: tuple[int, int] = (3, 2)  # (rows, cols) of panels per side
    panel_gap: tuple[float, float] = (0.0, 0.0)
    tx_antenna: tuple[float, float, float] = (0.0, -3.0, 3.0)
    rx_antenna: tuple[float, float, float] = (0.0, -3.0, 3.0)
    roi_center: tuple[float, float, float] = (0.0, 1.9, 8.0)
    roi_extent: tuple[float, float] = (2.0, 2.0)
    roi_extent_z: float = 0.0
    frequencies: tuple[float, ...] = (5.9e9, 5.95e9, 6.0e9, 6.05e9, 6.1e9)
    design_frequency: float = 6.0e9

    @classmethod
    def from_dict(cls, data: dict) -> "SceneConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown scene keys: {sorted(unknown)}")
        kwargs = {}
        for key, value in data.items():
            if isinstance(value, list):
                value = tuple(value)
            kwargs[key] = value
        if "frequencies" in kwargs:
            kwargs["frequencies"] = tuple(float(f) for f in kwargs["frequencies"])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        out = {}
        for key in self.__dataclass_fields__:
            value = getattr(self, key)
            out[key] = list(value) if isinstance(value, tuple) else value
        return out


@dataclass(frozen=True, eq=False)
class Scene:
    tx_panels: tuple[RisPanel, ...]
    rx_panels: tuple[RisPanel, ...]
    tx_antenna: np.ndarray
    rx_antenna: np.ndarray
    roi: RoiBox
    frequencies: np.ndarray
    panel_gap: tuple[float, float] = (0.0, 0.0)
    design_frequency: float = 6.0e9
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def panels(self) -> tuple[RisPanel, ...]:
        """Tx panels followed by Rx panels; index equals ``panel_id``."""
        return self.tx_panels + self.rx_panels

    def side_panels(self, side: str) -> tuple[RisPanel, ...]:
        if side == TX:
            return self.tx_panels
        if side == RX:
            return self.rx_panels
        raise ValueError(f"unknown side {side!r}")

    def antenna(self, side: str) -> np.ndarray:
        return self.tx_antenna if side == TX else self.rx_antenna

    def side_element_positions(self, side: str) -> np.ndarray:
        """All element positions of one side, ``(n_elements, 3)``, panel-major."""
        key = ("pos", side)
        if key not in self._cache:
            pos = np.concatenate(
                [p.element_positions().reshape(-1, 3) for p in self.side_panels(side)]
            )
            pos.setflags(write=False)
            self._cache[key] = pos
        return self._cache[key]

    def with_roi(self, roi: RoiBox) -> "Scene":
        _check_roi(roi, self.panels)
        return Scene(
            self.tx_panels, self.rx_panels, self.tx_antenna, self.rx_antenna,
            roi, self.frequencies, self.panel_gap, self.design_frequency,
        )

    def with_frequencies(self, frequencies: Sequence[float]) -> "Scene":
        return Scene(
            self.tx_panels, self.rx_panels, self.tx_antenna, self.rx_antenna,
            self.roi, _check_frequencies(frequencies), self.panel_gap, self.design_frequency,
        )


def _check_frequencies(frequencies) -> np.ndarray:
    f = np.asarray(frequencies, dtype=float).reshape(-1)
    if f.size == 0:
        raise ValueError("at least one frequency is required")
    if np.any(f <= 0) or not np.all(np.isfinite(f)):
        raise ValueError("frequencies must be positive and finite")
    if np.any(np.diff(f) <= 0):
        raise ValueError("frequencies must be strictly increasing")
    f.setflags(write=False)
    return f


def _check_roi(roi: RoiBox, panels: Sequence[RisPanel]) -> None:
    zlo, zhi = roi.z_range
    for p in panels:
        if zlo <= p.origin[2] <= zhi:
            raise ValueError("ROI overlaps the aperture plane of the RIS panels")
        if zlo < p.origin[2]:
            raise ValueError("ROI must lie in front of the RIS panels (z greater than the aperture)")


def _tile_block(n_panels, grid, spacing_xy, x_offset, side, first_id, cfg) -> list[RisPanel]:
    n_rows, n_cols = grid
    if n_panels > n_rows * n_cols:
        raise ValueError(f"{n_panels} panels do not fit a {n_rows}x{n_cols} panel grid")
    px, py = spacing_xy
    panels = []
    for k in range(n_panels):
        i, j = divmod(k, n_cols)
        x = x_offset + (j - (n_cols - 1) / 2.0) * px
        y = (i - (n_rows - 1) / 2.0) * py
        panels.append(
            RisPanel(cfg.panel_rows, cfg.panel_cols, cfg.element_spacing, (x, y, 0.0), side, first_id + k)
        )
    return panels


def build_scene(config: SceneConfig | None = None) -> Scene:
    """Materialize panels and derived geometry from a :class:`SceneConfig`.

    Tx and Rx panels each form a ``panel_grid`` block in the ``z = 0`` plane;
    the Tx block sits at negative ``x``, the Rx block at positive ``x``, and the
    pair is centered on the origin. Gaps between neighbouring panel edges
    (including between the two blocks) are ``panel_gap``.
    """
    cfg = config or SceneConfig()
    if cfg.panel_rows < 1 or cfg.panel_cols < 1 or cfg.n_tx_panels < 1 or cfg.n_rx_panels < 1:
        raise ValueError("panel and element counts must be positive")
    if not cfg.element_spacing > 0:
        raise ValueError("element_spacing must be positive")
    if cfg.panel_gap[0] < 0 or cfg.panel_gap[1] < 0:
        raise ValueError("panel gaps must be non-negative")
    if not cfg.design_frequency > 0:
        raise ValueError("design_frequency must be positive")
    freqs = _check_frequencies(cfg.frequencies)

    lx = cfg.panel_cols * cfg.element_spacing
    ly = cfg.panel_rows * cfg.element_spacing
    pitch = (lx + cfg.panel_gap[0], ly + cfg.panel_gap[1])
    n_cols = cfg.panel_grid[1]
    # blocks are n_cols panels wide; their centers sit half a block pitch from x = 0
    block_shift = n_cols * pitch[0] / 2.0
    tx = _tile_block(cfg.n_tx_panels, cfg.panel_grid, pitch, -block_shift, TX, 0, cfg)
    rx = _tile_block(cfg.n_rx_panels, cfg.panel_grid, pitch, block_shift, RX, len(tx), cfg)

    roi = RoiBox(cfg.roi_center, cfg.roi_extent[0], cfg.roi_extent[1], cfg.roi_extent_z)
    _check_roi(roi, tx + rx)
    tx_ant = np.array(cfg.tx_antenna, dtype=float)
    rx_ant = np.array(cfg.rx_antenna, dtype=float)
    for ant in (tx_ant, rx_ant):
        ant.setflags(write=False)
        if ant[2] <= 0:
            raise ValueError("antennas must be in front of the aperture plane")
    return Scene(
        tuple(tx), tuple(rx), tx_ant, rx_ant, roi, freqs,
        tuple(float(g) for g in cfg.panel_gap), float(cfg.design_frequency),
    )


# --- steering-angle convention ------------------------------------------------
#
# Element phases act as exp(+1j*phase) on waves propagating as exp(-1j*k*d).
# With the linear gradient k*(x*sin(t)*cos(p) + y*sin(t)*sin(p)) added on top of
# the incidence compensation, the re-radiated beam leaves along the unit vector
# (-sin(t)*cos(p), -sin(t)*sin(p), cos(t)). Steering angles throughout the
# package follow that relation.


def direction_to_angles(direction) -> tuple[np.ndarray, np.ndarray]:
    """Steering angles ``(theta, phi)`` that send a beam along ``direction``."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d, axis=-1, keepdims=True)
    # arctan2 stays accurate near the axis, where arccos(z) cancels
    theta = np.arctan2(np.hypot(d[..., 0], d[..., 1]), d[..., 2])
    phi = np.arctan2(-d[..., 1], -d[..., 0])
    return theta, phi


def angles_to_direction(theta, phi) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack([-st * np.cos(phi), -st * np.sin(phi), np.cos(theta)], axis=-1)


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    w = np.mod(np.asarray(a, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(w == -np.pi, np.pi, w)


class AngleBounds(NamedTuple):
    theta_min: float
    theta_max: float
    phi_min: float
    phi_max: float
    theta_center: float
    phi_center: float

    def contains(self, theta, phi, atol: float = 1e-12) -> np.ndarray:
        """Membership test; ``phi`` is compared modulo 2*pi about the center."""
        theta = np.asarray(theta, dtype=float)
        dphi = wrap_angle(np.asarray(phi, dtype=float) - self.phi_center)
        lo, hi = self.phi_min - self.phi_center, self.phi_max - self.phi_center
        full = (self.phi_max - self.phi_min) >= 2 * np.pi - 1e-12
        in_phi = full | ((dphi >= lo - atol) & (dphi <= hi + atol))
        return (theta >= self.theta_min - atol) & (theta <= self.theta_max + atol) & in_phi


def roi_angles(origin, points) -> tuple[np.ndarray, np.ndarray]:
    """Steering angles from ``origin`` toward each of ``points``."""
    return direction_to_angles(np.atleast_2d(points) - np.asarray(origin, dtype=float))


def angle_bounds(panel: RisPanel, roi: RoiBox) -> AngleBounds:
    """Angular intervals subtended by ``roi`` as seen from the panel center.

    The extremes are evaluated on a finite candidate set that provably contains
    them: the box corners (largest off-axis angle, azimuth extremes of a convex
    region not enclosing the panel axis) and, on each z-face, the point closest
    to the panel axis (smallest off-axis angle). ``phi`` limits are unwrapped
    about the azimuth of the ROI center; if the ROI encloses the panel axis the
    azimuth interval is the full circle.
    """
    c = panel.center
    if roi.z_range[0] <= c[2]:
        raise ValueError("ROI must be in front of the panel")
    corners = roi.corners()
    (xlo, xhi), (ylo, yhi) = roi.x_range, roi.y_range
    foot = np.array(
        [[np.clip(c[0], xlo, xhi), np.clip(c[1], ylo, yhi), z] for z in roi.z_range]
    )
    cand = np.vstack([corners, foot])
    theta, _ = roi_angles(c, cand)
    theta_c, phi_c = roi_angles(c, np.asarray(roi.center)[None, :])
    theta_c, phi_c = float(theta_c[0]), float(phi_c[0])

    axis_inside = xlo <= c[0] <= xhi and ylo <= c[1] <= yhi
    if axis_inside:
        phi_lo, phi_hi = phi_c - np.pi, phi_c + np.pi
    else:
        _, phi = roi_angles(c, corners)
        dphi = wrap_angle(phi - phi_c)
        phi_lo, phi_hi = phi_c + dphi.min(), phi_c + dphi.max()
    t_lo, t_hi = float(theta.min()), float(theta.max())
    if t_hi - t_lo <= 0 or phi_hi - phi_lo <= 0:
        raise ValueError("ROI subtends a degenerate angular interval")
    return AngleBounds(t_lo, t_hi, float(phi_lo), float(phi_hi), theta_c, phi_c)
