import numpy as np
import pytest

from risci.metrics import PlanarGrid, compute_metrics, image_correlation, match_peaks
from risci.scene import RoiBox, TargetMap, paper_target


@pytest.fixture(scope="module")
def grid():
    # 0.25 m lattice so the 0.5 m target spacing falls on grid points
    return RoiBox((0.0, 1.9, 8.0), 2.0, 2.0).grid(9, 9)


def _truth_image(grid, truth):
    return PlanarGrid(grid).rasterize(truth)


class TestMetrics:
    def test_perfect_reconstruction(self, grid):
        t = paper_target()
        m = compute_metrics(_truth_image(grid, t), t, grid)
        assert np.isclose(m.normalized_correlation, 1.0)
        assert np.isclose(m.peak_localization_error, 0.0)
        assert m.background_energy_ratio == 0.0
        assert m.peaks_matched == 9

    def test_all_zero(self, grid):
        m = compute_metrics(np.zeros(len(grid)), paper_target(), grid)
        assert m.normalized_correlation == 0.0 and m.peaks_matched == 0
        assert m.background_energy_ratio == 0.0

    def test_scale_and_phase_invariance(self, grid, rng):
        t = paper_target()
        img = _truth_image(grid, t) + 0.1 * rng.random(len(grid))
        a = image_correlation(img, t, grid)
        b = image_correlation(-3j * img, t, grid)
        assert np.isclose(a, b)

    def test_shifted_peaks_one_cell_match(self, grid):
        t = paper_target()
        img = _truth_image(grid, t).reshape(9, 9)
        shifted = np.roll(img, 1, axis=1).reshape(-1)
        assert match_peaks(shifted, t, grid)[0] == 9
        far = np.roll(img, 2, axis=1).reshape(-1)
        assert match_peaks(far, t, grid)[0] < 9

    def test_clutter_ignored(self, grid):
        t = paper_target()
        from risci.sensing import add_clutter
        m = compute_metrics(_truth_image(grid, t), add_clutter(t, 2.4), grid)
        assert np.isclose(m.normalized_correlation, 1.0)

    def test_background_ratio(self, grid):
        t = TargetMap([[0.0, 1.9, 8.0]], [1.0])
        img = np.zeros(len(grid))
        img[0] = 1.0  # far corner
        img[40] = 1.0  # center point
        assert np.isclose(compute_metrics(img, t, grid).background_energy_ratio, 0.5)

    def test_rasterize_bilinear(self):
        g = PlanarGrid(RoiBox((0.5, 0.5, 1.0), 1.0, 1.0).grid(2, 2))
        img = g.rasterize(TargetMap([[0.25, 0.5, 1.0]], [4.0]))
        np.testing.assert_allclose(img, [1.5, 0.5, 1.5, 0.5])

    def test_irregular_grid_rejected(self):
        with pytest.raises(ValueError):
            PlanarGrid(np.array([[0, 0, 1], [1, 0, 1], [0.5, 1, 1.0]]))

    def test_length_checked(self, grid):
        with pytest.raises(ValueError):
            compute_metrics(np.zeros(3), paper_target(), grid)
