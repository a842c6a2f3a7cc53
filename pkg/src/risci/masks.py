"""Phase profiles for the RIS panels.

A *mask* assigns one phase profile to every panel of a scene and defines one
measurement configuration. Three strategies are provided:

``focused``
    incidence compensation + linear steering gradient toward a randomly
    perturbed direction inside the ROI + a random scalar offset per panel.
``raster``
    every panel of both sides steers to the same scan point, with per-panel
    offsets that co-phase the beams there. Masks enumerate a scan grid.
``random``
    i.i.d. uniform element phases, no compensation or gradient.

Profiles are stored wrapped to (-pi, pi] and are designed at the scene's
``design_frequency``; the same profile is applied at every frequency.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .scene import (
    RX,
    TX,
    AngleBounds,
    RisPanel,
    Scene,
    angle_bounds,
    roi_angles,
    wavenumber,
    wrap_angle,
)

FOCUSED = "focused"
RASTER = "raster"
RANDOM = "random"
KINDS = (FOCUSED, RASTER, RANDOM)


@dataclass(frozen=True)
class PhaseProfile:
    panel_id: int
    phases: np.ndarray

    def __post_init__(self):
        ph = np.asarray(self.phases, dtype=float)
        if not np.all(np.isfinite(ph)):
            raise ValueError("phase profile entries must be finite")
        object.__setattr__(self, "phases", ph)


@dataclass(frozen=True)
class MaskStrategy:
    kind: str = FOCUSED
    c_max: float = 0.25
    randomize_angles: bool = True
    randomize_offsets: bool = True
    scan_shape: tuple[int, int] | None = None  # (ny, nx) for raster

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown mask strategy {self.kind!r}; expected one of {KINDS}")
        if not 0.0 <= self.c_max <= 1.0:
            raise ValueError(f"c_max must lie in [0, 1], got {self.c_max}")
        if self.scan_shape is not None:
            object.__setattr__(self, "scan_shape", tuple(int(v) for v in self.scan_shape))


@dataclass(frozen=True, eq=False)
class Mask:
    """One measurement configuration.

    ``steering`` is ``(n_panels, 2)`` of ``(theta, phi)`` (NaN for random
    patterns); ``offsets`` holds the scalar phase added to each panel.
    """

    profiles: tuple[PhaseProfile, ...]
    steering: np.ndarray
    offsets: np.ndarray
    seed_record: dict = field(default_factory=dict)
    kind: str = FOCUSED
    scan_point: np.ndarray | None = None

    def side_phases(self, scene: Scene, side: str) -> np.ndarray:
        """Flattened phases of one side, aligned with ``scene.side_element_positions``."""
        ids = [p.panel_id for p in scene.side_panels(side)]
        return np.concatenate([self.profiles[i].phases.reshape(-1) for i in ids])


def compensation_phase(panel: RisPanel, source, frequency: float) -> PhaseProfile:
    """Phase that cancels the spherical incidence from ``source``: ``+k0*|r_src - r_mn|``."""
    src = np.asarray(source, dtype=float)
    if np.isclose(src[2], panel.origin[2]):
        raise ValueError("source must not lie in the panel plane")
    d = np.linalg.norm(panel.element_positions() - src, axis=-1)
    return PhaseProfile(panel.panel_id, wrap_angle(wavenumber(frequency) * d))


def steering_gradient(panel: RisPanel, theta: float, phi: float, frequency: float) -> PhaseProfile:
    """Linear phase ``k0*(x*sin(theta)*cos(phi) + y*sin(theta)*sin(phi))`` in global coordinates."""
    if not abs(theta) < np.pi / 2:
        raise ValueError("|theta| must be below pi/2")
    pos = panel.element_positions()
    st = np.sin(theta)
    ph = wavenumber(frequency) * (pos[..., 0] * st * np.cos(phi) + pos[..., 1] * st * np.sin(phi))
    return PhaseProfile(panel.panel_id, wrap_angle(ph))


def redirection_perturbation(bounds: AngleBounds, c_max: float, rng, size=None):
    """Signed random components ``(d_theta, d_phi)``.

    Magnitudes are ``C*(max - min)`` with ``C ~ U[0, c_max]`` drawn independently
    per axis; each sign is +/- with equal probability.
    """
    if not 0.0 <= c_max <= 1.0:
        raise ValueError("c_max must lie in [0, 1]")
    c_theta = rng.uniform(0.0, c_max, size)
    c_phi = rng.uniform(0.0, c_max, size)
    s_theta = rng.choice((-1.0, 1.0), size)
    s_phi = rng.choice((-1.0, 1.0), size)
    d_theta = s_theta * c_theta * (bounds.theta_max - bounds.theta_min)
    d_phi = s_phi * c_phi * (bounds.phi_max - bounds.phi_min)
    return d_theta, d_phi


def random_redirection(bounds: AngleBounds, c_max: float, rng, size=None):
    """ROI-center steering perturbed by :func:`redirection_perturbation`.

    The perturbed angles are clipped into ``bounds``; this only engages when
    the ROI center sits close to one edge of the angular interval.
    """
    d_theta, d_phi = redirection_perturbation(bounds, c_max, rng, size)
    theta = np.clip(bounds.theta_center + d_theta, bounds.theta_min, bounds.theta_max)
    phi = np.clip(bounds.phi_center + d_phi, bounds.phi_min, bounds.phi_max)
    if size is None:
        return float(theta), float(phi)
    return theta, phi


def scan_grid(scene: Scene, count: int, shape: tuple[int, int] | None = None) -> np.ndarray:
    """Raster scan points over the ROI plane, ``(count, 3)``."""
    if shape is None:
        ny = max(d for d in range(1, int(np.sqrt(count)) + 1) if count % d == 0)
        shape = (ny, count // ny)
    ny, nx = shape
    if ny * nx != count:
        raise ValueError(f"raster mask count {count} must equal scan-grid size {ny}x{nx}={ny * nx}")
    return scene.roi.grid(nx, ny)


def _child_sequence(seed, index: int) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + (index,))
    return np.random.SeedSequence(int(seed), spawn_key=(index,))


def _seed_record(ss: np.random.SeedSequence) -> dict:
    return {"entropy": int(ss.entropy), "spawn_key": [int(k) for k in ss.spawn_key]}


def _focused_mask(scene: Scene, strategy: MaskStrategy, rng, record) -> Mask:
    f0 = scene.design_frequency
    profiles, steering, offsets = [], [], []
    for panel in scene.panels:
        b = angle_bounds(panel, scene.roi)
        if strategy.randomize_angles:
            theta, phi = random_redirection(b, strategy.c_max, rng)
        else:
            theta, phi = b.theta_center, b.phi_center
        offset = rng.uniform(0.0, 2 * np.pi) if strategy.randomize_offsets else 0.0
        comp = compensation_phase(panel, scene.antenna(panel.side), f0).phases
        grad = steering_gradient(panel, theta, phi, f0).phases
        profiles.append(PhaseProfile(panel.panel_id, wrap_angle(comp + grad + offset)))
        steering.append((theta, phi))
        offsets.append(offset)
    return Mask(tuple(profiles), np.array(steering), np.array(offsets), record, FOCUSED)


def focus_mask(scene: Scene, point, record: dict | None = None) -> Mask:
    """All panels of both sides steer to ``point`` with co-phased beams.

    The per-panel offset zeroes the phase of the panel-center path at ``point``
    so the individual beams add coherently there.
    """
    point = np.asarray(point, dtype=float)
    f0 = scene.design_frequency
    k0 = wavenumber(f0)
    profiles, steering, offsets = [], [], []
    for panel in scene.panels:
        c = panel.center
        theta, phi = (float(a[0]) for a in roi_angles(c, point[None, :]))
        # transverse component of the beam direction: -sin(theta) * (cos phi, sin phi)
        u_t = -np.sin(theta) * np.array([np.cos(phi), np.sin(phi)])
        offset = float(wrap_angle(k0 * (u_t @ c[:2] + np.linalg.norm(point - c))))
        comp = compensation_phase(panel, scene.antenna(panel.side), f0).phases
        grad = steering_gradient(panel, theta, phi, f0).phases
        profiles.append(PhaseProfile(panel.panel_id, wrap_angle(comp + grad + offset)))
        steering.append((theta, phi))
        offsets.append(offset)
    return Mask(tuple(profiles), np.array(steering), np.array(offsets), record or {}, RASTER, point)


def _random_mask(scene: Scene, rng, record) -> Mask:
    profiles = tuple(
        PhaseProfile(p.panel_id, wrap_angle(rng.uniform(0.0, 2 * np.pi, (p.rows, p.cols))))
        for p in scene.panels
    )
    n = len(scene.panels)
    return Mask(profiles, np.full((n, 2), np.nan), np.zeros(n), record, RANDOM)


def make_mask(scene: Scene, strategy: MaskStrategy, seed_record: dict, scan_point=None) -> Mask:
    """Rebuild one mask from its ``seed_record`` (replay)."""
    ss = np.random.SeedSequence(seed_record["entropy"], spawn_key=tuple(seed_record["spawn_key"]))
    rng = np.random.default_rng(ss)
    record = dict(seed_record)
    if strategy.kind == FOCUSED:
        return _focused_mask(scene, strategy, rng, record)
    if strategy.kind == RANDOM:
        return _random_mask(scene, rng, record)
    if scan_point is None:
        raise ValueError("raster masks need a scan point")
    return focus_mask(scene, scan_point, record)


def make_masks(scene: Scene, strategy: MaskStrategy, count: int, seed=0) -> list[Mask]:
    """Generate ``count`` masks. Mask ``i`` draws from its own child seed of ``seed``."""
    if count < 1:
        raise ValueError("count must be at least 1")
    points: Sequence = [None] * count
    if strategy.kind == RASTER:
        points = scan_grid(scene, count, strategy.scan_shape)
    return [
        make_mask(scene, strategy, _seed_record(_child_sequence(seed, i)), points[i])
        for i in range(count)
    ]


def side_steering(masks: Sequence[Mask], scene: Scene, side: str) -> np.ndarray:
    """Steering angles of one side for every mask, ``(n_masks, n_side_panels, 2)``."""
    ids = [p.panel_id for p in scene.side_panels(side)]
    return np.stack([m.steering[ids] for m in masks])


__all__ = [
    "FOCUSED", "RASTER", "RANDOM", "PhaseProfile", "MaskStrategy", "Mask",
    "compensation_phase", "steering_gradient", "redirection_perturbation",
    "random_redirection", "scan_grid", "focus_mask", "make_mask", "make_masks",
    "side_steering", "TX", "RX",
]
