import itertools

import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

from risci.scene import (
    RX,
    TX,
    RisPanel,
    RoiBox,
    SceneConfig,
    TargetMap,
    angle_bounds,
    angles_to_direction,
    build_scene,
    direction_to_angles,
    paper_target,
    roi_angles,
    wavenumber,
    wrap_angle,
)
from risci.sensing import add_clutter, remove_clutter

from oracles import steering_angles


class TestBuildScene:
    def test_default_counts(self, scene):
        assert len(scene.tx_panels) == 6 and len(scene.rx_panels) == 6
        assert scene.side_element_positions(TX).shape == (2400, 3)
        assert scene.side_element_positions(RX).shape == (2400, 3)

    def test_default_reference_values(self, scene):
        p = scene.tx_panels[0]
        assert (p.rows, p.cols, p.element_spacing) == (20, 20, 0.02)
        assert np.allclose(p.extent, (0.4, 0.4))
        np.testing.assert_array_equal(scene.tx_antenna, [0, -3, 3])
        np.testing.assert_array_equal(scene.rx_antenna, [0, -3, 3])
        assert scene.panel_gap == (0.0, 0.0)
        np.testing.assert_allclose(scene.frequencies, [5.9e9, 5.95e9, 6.0e9, 6.05e9, 6.1e9])

    def test_single_element_panel(self):
        p = RisPanel(1, 1, 0.02, (0.3, -0.2, 0.0))
        np.testing.assert_array_equal(p.element_positions().reshape(-1, 3), [[0.3, -0.2, 0.0]])

    def test_two_by_two_pairwise_distances(self):
        s = 0.037
        pos = RisPanel(2, 2, s).element_positions().reshape(-1, 3)
        d = {round(float(np.linalg.norm(a - b)) / s, 9) for a, b in itertools.combinations(pos, 2)}
        assert d == {1.0, round(np.sqrt(2), 9)}

    def test_edge_to_edge_tiling(self, scene):
        # with zero gaps neighbouring panel centers are exactly one panel width apart
        centers = np.array([p.center for p in scene.panels])
        xs = np.unique(np.round(centers[:, 0], 9))
        ys = np.unique(np.round(centers[:, 1], 9))
        np.testing.assert_allclose(np.diff(xs), 0.4)
        np.testing.assert_allclose(np.diff(ys), 0.4)
        assert np.allclose(centers.mean(axis=0), 0.0)
        # no two elements overlap and the element lattice is continuous
        pos = np.concatenate([scene.side_element_positions(TX), scene.side_element_positions(RX)])
        assert len(np.unique(np.round(pos, 9), axis=0)) == len(pos)
        assert np.allclose(np.diff(np.unique(np.round(pos[:, 0], 9))), 0.02)

    def test_tx_block_left_of_rx_block(self, scene):
        assert max(p.center[0] for p in scene.tx_panels) < min(p.center[0] for p in scene.rx_panels)

    def test_gap_increases_pitch(self):
        sc = build_scene(SceneConfig(panel_gap=(0.1, 0.05)))
        c = np.array([p.center for p in sc.tx_panels])
        assert np.isclose(np.diff(np.unique(np.round(c[:, 0], 9)))[0], 0.5)
        assert np.isclose(np.diff(np.unique(np.round(c[:, 1], 9)))[0], 0.45)

    def test_deterministic(self):
        a, b = build_scene(), build_scene()
        np.testing.assert_array_equal(a.side_element_positions(TX), b.side_element_positions(TX))
        np.testing.assert_array_equal(a.side_element_positions(RX), b.side_element_positions(RX))

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"roi_center": (0.0, 1.9, 0.0)},
            {"roi_center": (0.0, 1.9, 0.5), "roi_extent_z": 2.0},
            {"frequencies": (0.0, 6e9)},
            {"frequencies": ()},
            {"frequencies": (6e9, 5.9e9)},
            {"element_spacing": 0.0},
            {"n_tx_panels": 0},
            {"n_tx_panels": 7},
        ],
    )
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            build_scene(SceneConfig(**kwargs))

    def test_config_round_trip(self):
        cfg = SceneConfig(panel_grid=(2, 3), frequencies=(6e9,))
        assert SceneConfig.from_dict(cfg.to_dict()) == cfg
        with pytest.raises(ValueError):
            SceneConfig.from_dict({"bogus": 1})


class TestReferenceTarget:
    def test_layout(self):
        t = paper_target()
        assert len(t) == 9
        assert np.any(np.all(np.isclose(t.positions, [0, 1.9, 8]), axis=1))
        assert set(np.round(t.positions[:, 0], 9)) == {-0.5, 0.0, 0.5}
        assert set(np.round(t.positions[:, 1], 9)) == {1.4, 1.9, 2.4}
        assert np.all(t.positions[:, 2] == 8.0)
        assert np.isclose(np.ptp(t.positions[:, 0]), 1.0)
        assert np.all(t.reflectivities == 1 + 0j)

    def test_inside_default_roi(self, scene):
        assert np.all(scene.roi.contains(paper_target().positions))

    def test_clutter_bookkeeping(self):
        t = paper_target()
        c = add_clutter(t, 3.0)
        assert len(c) == 10
        np.testing.assert_array_equal(c.positions[-1], [0, 3, 8])
        assert c.reflectivities[-1] == 1
        assert remove_clutter(c) == t

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            TargetMap([[0, 0, np.nan]], [1])


class TestAngles:
    def test_convention_matches_oracle(self):
        origin, point = (0.2, -0.4, 0.0), (0.5, 1.7, 8.0)
        th, ph = roi_angles(origin, np.array([point]))
        th_o, ph_o = steering_angles(origin, point)
        assert np.isclose(th[0], th_o) and np.isclose(wrap_angle(ph[0] - ph_o), 0)

    @given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.1, 1))
    @example(0.0, 1e-6, 1.0)  # near-axis precision
    def test_direction_round_trip(self, x, y, z):
        d = np.array([x, y, z]) / np.linalg.norm([x, y, z])
        np.testing.assert_allclose(angles_to_direction(*direction_to_angles(d)), d, atol=1e-12)

    @given(st.floats(-50, 50))
    def test_wrap_range(self, a):
        w = float(wrap_angle(a))
        assert -np.pi < w <= np.pi
        assert np.isclose(np.cos(w), np.cos(a)) and np.isclose(np.sin(w), np.sin(a))

    def test_wavenumber(self):
        assert np.isclose(wavenumber(6e9), 2 * np.pi * 6e9 / 299_792_458.0)


class TestAngleBounds:
    def test_symmetric_phi_on_boresight(self):
        # ROI straight in front of the panel, offset along +y only: phi interval symmetric
        p = RisPanel(4, 4, 0.02, (0.0, 0.0, 0.0))
        b = angle_bounds(p, RoiBox((0.0, 2.0, 8.0), 1.0, 1.0))
        assert np.isclose(b.phi_center - b.phi_min, b.phi_max - b.phi_center)

    def test_point_like_roi(self):
        p = RisPanel(4, 4, 0.02, (0.1, 0.0, 0.0))
        b = angle_bounds(p, RoiBox((0.5, 2.0, 8.0), 1e-7, 1e-7))
        assert b.theta_max - b.theta_min < 1e-7

    def test_brute_force_default_scene(self, scene):
        # dense sample of the ROI including its edges and corners
        roi = scene.roi
        xs = np.linspace(*roi.x_range, 100)
        ys = np.linspace(*roi.y_range, 100)
        X, Y = np.meshgrid(xs, ys)
        pts = np.column_stack([X.ravel(), Y.ravel(), np.full(X.size, roi.plane_z)])
        for panel in scene.panels:
            b = angle_bounds(panel, roi)
            th, ph = roi_angles(panel.center, pts)
            dph = wrap_angle(ph - b.phi_center)
            # sampled extremes sit inside the exact bounds, within sampling resolution
            tol = 1e-4
            assert b.theta_min - 1e-12 <= th.min() <= b.theta_min + tol
            assert b.theta_max - tol <= th.max() <= b.theta_max + 1e-12
            assert b.phi_min - 1e-12 <= dph.min() + b.phi_center <= b.phi_min + tol
            assert b.phi_max - tol <= dph.max() + b.phi_center <= b.phi_max + 1e-12

    def test_full_circle_when_axis_inside(self):
        p = RisPanel(2, 2, 0.02, (0.0, 0.0, 0.0))
        b = angle_bounds(p, RoiBox((0.0, 0.0, 5.0), 1.0, 1.0))
        assert np.isclose(b.theta_min, 0.0)
        assert np.isclose(b.phi_max - b.phi_min, 2 * np.pi)

    def test_roi_behind_panel_rejected(self):
        with pytest.raises(ValueError):
            angle_bounds(RisPanel(), RoiBox((0, 0, -1.0), 1.0, 1.0))

    @settings(max_examples=40, deadline=None)
    @given(
        cx=st.floats(-2, 2), cy=st.floats(-2, 3), cz=st.floats(2, 12),
        ex=st.floats(0.05, 2), ey=st.floats(0.05, 2), grow=st.floats(1.0, 2.0),
        px=st.floats(-1, 1), py=st.floats(-1, 1),
    )
    def test_monotone_and_contains_samples(self, cx, cy, cz, ex, ey, grow, px, py):
        panel = RisPanel(2, 2, 0.02, (px, py, 0.0))
        roi = RoiBox((cx, cy, cz), ex, ey)
        big = roi.scaled(grow)
        b, B = angle_bounds(panel, roi), angle_bounds(panel, big)
        assert B.theta_min <= b.theta_min + 1e-12 and B.theta_max >= b.theta_max - 1e-12
        assert B.phi_max - B.phi_min >= b.phi_max - b.phi_min - 1e-12
        # every ROI sample lies inside the bounds
        rng = np.random.default_rng(0)
        pts = np.column_stack([
            rng.uniform(*roi.x_range, 200), rng.uniform(*roi.y_range, 200), np.full(200, cz)
        ])
        pts = np.vstack([pts, roi.corners()])
        th, ph = roi_angles(panel.center, pts)
        assert np.all(b.contains(th, ph, atol=1e-9))
        # the small ROI's samples are also inside the enlarged bounds
        assert np.all(B.contains(th, ph, atol=1e-9))
