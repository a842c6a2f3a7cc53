"""End-to-end studies behind the CLI.

Every random draw comes from ``SeedSequence(seed, spawn_key=(case, purpose))``
where ``case`` identifies the imaging system (method or ROI index) and
``purpose`` separates mask draws from noise draws. Results therefore do not
depend on the order in which cases are evaluated.

Each study writes its artifacts under ``<output_dir>/<experiment>/`` and a
``ledger.jsonl`` holding one canonical JSON record per case. Ledgers contain no
timestamps, runtimes or absolute paths, so a rerun with the same seed and
config reproduces them byte for byte; runtimes go to ``report.json``.
"""
from __future__ import annotations

import dataclasses
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import io  # noqa: E402
from .config import ExperimentConfig  # noqa: E402
from .fields import (  # noqa: E402
    aggregate_field,
    energy_centroid,
    energy_fraction,
    normalized_correlation,
    panel_field,
    plane_grid,
)
from .masks import FOCUSED, RANDOM, RASTER, Mask, MaskStrategy, make_masks  # noqa: E402
from .metrics import ImageMetrics, compute_metrics  # noqa: E402
from .recon import ReconResult, _relative_residual, reconstruct_cgs  # noqa: E402
from .scene import TX, RoiBox, Scene, TargetMap, angle_bounds, build_scene, paper_target  # noqa: E402
from .sensing import (  # noqa: E402
    Measurement,
    add_clutter,
    build_sensing_matrix,
    normalized_singular_values,
    simulate_measurement,
)

MASK_STREAM = 0
NOISE_STREAM = 1
METHOD_CASE = {FOCUSED: 0, RASTER: 1, RANDOM: 2}
SVD_CASE = {"offset_only": 10, "offset_angles": 11, "angles_only": 12, "random": 13}
RASTER_READOUT = "RasterReadout"


class ExperimentError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@contextmanager
def _stage(name: str):
    try:
        yield
    except ExperimentError:
        raise
    except Exception as exc:
        raise ExperimentError(name, f"{type(exc).__name__}: {exc}") from exc


def stream(seed: int, case: int, purpose: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed), spawn_key=(int(case), int(purpose)))


@dataclass
class ComparisonReport:
    metrics: dict[str, ImageMetrics]
    results: dict[str, ReconResult]
    runtime_s: float
    case: str = "compare"
    extra: dict = field(default_factory=dict)
    record: dict = field(default_factory=dict)

    def correlation(self, method: str) -> float:
        return self.metrics[method].normalized_correlation


@dataclass
class SvdTable:
    values: dict[str, np.ndarray]
    summary: dict[str, dict]
    runtime_s: float
    record: dict = field(default_factory=dict)


@dataclass
class Gallery:
    """Per-case pattern statistics of the ``fields`` and ``roi-sweep`` studies."""

    entries: list[dict]
    runtime_s: float
    records: list[dict] = field(default_factory=list)


# ---------------------------------------------------------------- helpers

def make_scene(cfg: ExperimentConfig) -> Scene:
    scene = build_scene(cfg.scene)
    if cfg.frequencies is not None:
        scene = scene.with_frequencies(cfg.frequencies)
    return scene


def inverse_grid(scene: Scene, cfg: ExperimentConfig) -> tuple[np.ndarray, tuple[int, int]]:
    nx, ny = cfg.grid_shape
    return scene.roi.grid(nx, ny), (ny, nx)


def method_masks(cfg: ExperimentConfig, scene: Scene, kind: str, count: int, case: int,
                 strategy: MaskStrategy | None = None) -> list[Mask]:
    strategy = strategy or dataclasses.replace(cfg.strategy, kind=kind)
    return make_masks(scene, strategy, count, seed=stream(cfg.rng_seed, case, MASK_STREAM))


def solve(cfg: ExperimentConfig, H_inv, g: Measurement) -> ReconResult:
    """Configured solver; the discrepancy rule uses the known noise variance."""
    s = cfg.solver
    noise_norm = None
    if s.early_stop and g.noise_power > 0:
        noise_norm = float(np.sqrt(len(g.g) * g.noise_power))
    return reconstruct_cgs(H_inv, g, s.tol, s.max_iter, s.solver, s.alpha, noise_norm, s.discrepancy)


def raster_readout(masks: list[Mask], g: Measurement, grid: np.ndarray, n_freq: int,
                   H_inv=None) -> ReconResult:
    """Direct raster image: RMS over frequency of ``|g|`` per scan, shown at the
    nearest scan point."""
    pts = np.array([m.scan_point for m in masks])
    amp = np.sqrt(np.mean(np.abs(g.g.reshape(len(masks), n_freq)) ** 2, axis=1))
    d = np.linalg.norm(grid[:, None, :2] - pts[None, :, :2], axis=-1)
    sigma = amp[d.argmin(axis=1)].astype(complex)
    hist = np.array([_relative_residual(H_inv.entries, g.g, sigma)]) if H_inv is not None else np.array([0.0])
    return ReconResult(sigma, 0, hist, RASTER_READOUT)


def _record(cfg: ExperimentConfig, case: str, metrics: dict, artifacts: list[str], **extra) -> dict:
    rec = {
        "experiment": cfg.name,
        "case": case,
        "config_hash": cfg.config_hash(),
        "seed": cfg.rng_seed,
        "metrics": metrics,
        "artifacts": sorted(artifacts),
    }
    rec.update(extra)
    return rec


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir) / cfg.name
    out.mkdir(parents=True, exist_ok=True)
    return out


def _save_recon(out: Path, stem: str, result: ReconResult, grid, shape, truth: TargetMap | None,
                title: str) -> list[str]:
    io.write_recon_csv(out / f"{stem}.csv", result, grid)
    io.save_image(out / f"{stem}.png", result.sigma_est, shape, io.extent_of(grid), title,
                  None if truth is None else truth.positions)
    return [f"{stem}.csv", f"{stem}.png"]


def _metrics_dict(metrics: dict[str, ImageMetrics]) -> dict:
    return {k: m.to_dict() for k, m in metrics.items()}


def _reference_powers(cfg: ExperimentConfig, powers: dict[str, float]) -> dict[str, float]:
    """Per-method signal power that sets the noise floor."""
    if cfg.noise_reference == "per_method":
        return dict(powers)
    anchor = FOCUSED if FOCUSED in powers else next(iter(powers))
    return {k: powers[anchor] for k in powers}


# ---------------------------------------------------------------- studies

def run_compare(cfg: ExperimentConfig, write: bool = True) -> ComparisonReport:
    """Proposed vs. raster vs. random with the same frequencies, budget, target and SNR."""
    t0 = time.perf_counter()
    with _stage("scene"):
        scene = make_scene(cfg)
        grid, shape = inverse_grid(scene, cfg)
        truth = paper_target()
    systems, powers = {}, {}
    for kind in cfg.methods:
        case = METHOD_CASE[kind]
        with _stage(f"masks:{kind}"):
            masks = method_masks(cfg, scene, kind, cfg.mask_count, case)
        with _stage(f"sensing:{kind}"):
            H_inv = build_sensing_matrix(scene, masks, grid)
            H_fwd = build_sensing_matrix(scene, masks, truth.positions)
        systems[kind] = (masks, H_inv, H_fwd)
        powers[kind] = float(np.mean(np.abs(H_fwd.entries @ truth.reflectivities) ** 2))
    refs = _reference_powers(cfg, powers)

    metrics, results, iters, rows = {}, {}, {}, {}
    n_freq = len(scene.frequencies)
    for kind, (masks, H_inv, H_fwd) in systems.items():
        with _stage(f"measure:{kind}"):
            g = simulate_measurement(H_fwd, truth, cfg.snr_db, stream(cfg.rng_seed, METHOD_CASE[kind], NOISE_STREAM),
                                     reference_power=refs[kind])
        with _stage(f"recon:{kind}"):
            rec = solve(cfg, H_inv, g)
        rows[kind] = H_inv.shape[0]
        if kind == RASTER:
            direct = raster_readout(masks, g, grid, n_freq, H_inv)
            primary, other = (direct, rec) if cfg.raster_readout == "direct" else (rec, direct)
            results[RASTER] = primary
            results["raster_cgs" if cfg.raster_readout == "direct" else "raster_direct"] = other
        else:
            results[kind] = rec
    for key, res in results.items():
        metrics[key] = compute_metrics(res.sigma_est, truth, grid)
        iters[key] = res.iterations
    if len(set(rows.values())) != 1:
        raise ExperimentError("budget", f"methods used different row counts {rows}")

    runtime = time.perf_counter() - t0
    extra = {"rows": rows, "signal_power": powers, "iterations": iters}
    report = ComparisonReport(metrics, results, runtime, "compare", extra)
    artifacts = []
    if write:
        out = _out_dir(cfg)
        for key, res in results.items():
            artifacts += _save_recon(out, key, res, grid, shape, truth, f"{key} ({res.method})")
    report.record = _record(cfg, "compare", _metrics_dict(metrics), artifacts,
                            rows=rows, iterations=iters)
    if write:
        io.write_ledger(out / "ledger.jsonl", [report.record])
        io.write_json(out / "report.json", {"runtime_s": runtime, **report.record, "signal_power": powers})
    return report


def run_clutter_study(cfg: ExperimentConfig, write: bool = True) -> list[ComparisonReport]:
    """Clutter-free baseline followed by one case per clutter position.

    Each method keeps its masks and its noise realization across all cases, and
    its noise floor is set by the clutter-free target signal, so differences
    between cases come from the clutter echo alone. The inverse grid covers
    only the ROI: clutter acts as model mismatch.
    """
    t0 = time.perf_counter()
    with _stage("scene"):
        scene = make_scene(cfg)
        grid, shape = inverse_grid(scene, cfg)
        truth = paper_target()
        full = truth
        for y in cfg.clutter_y:
            full = add_clutter(full, y, reflectivity=cfg.clutter_reflectivity)
    n_t = len(truth)
    systems, powers = {}, {}
    for kind in cfg.methods:
        case = METHOD_CASE[kind]
        with _stage(f"masks:{kind}"):
            masks = method_masks(cfg, scene, kind, cfg.mask_count, case)
        with _stage(f"sensing:{kind}"):
            H_inv = build_sensing_matrix(scene, masks, grid)
            H_fwd = build_sensing_matrix(scene, masks, full.positions)
        systems[kind] = (masks, H_inv, H_fwd)
        powers[kind] = float(np.mean(np.abs(H_fwd.entries[:, :n_t] @ truth.reflectivities) ** 2))
    refs = _reference_powers(cfg, powers)

    cases = [None] + list(cfg.clutter_y)
    out = _out_dir(cfg) if write else None
    reports: list[ComparisonReport] = []
    baseline: dict[str, float] = {}
    for ci, y in enumerate(cases):
        label = "baseline" if y is None else f"clutter_y={y:g}"
        sigma = np.zeros(len(full), dtype=complex)
        sigma[:n_t] = truth.reflectivities
        if y is not None:
            sigma[n_t + ci - 1] = full.reflectivities[n_t + ci - 1]
        metrics, results, iters, clutter_db = {}, {}, {}, {}
        for kind, (masks, H_inv, H_fwd) in systems.items():
            with _stage(f"measure:{kind}:{label}"):
                g = simulate_measurement(H_fwd, sigma, cfg.snr_db,
                                         stream(cfg.rng_seed, METHOD_CASE[kind], NOISE_STREAM),
                                         reference_power=refs[kind])
            with _stage(f"recon:{kind}:{label}"):
                res = solve(cfg, H_inv, g)
            results[kind] = res
            metrics[kind] = compute_metrics(res.sigma_est, truth, grid)
            iters[kind] = res.iterations
            if y is not None:
                echo = np.mean(np.abs(H_fwd.entries[:, n_t + ci - 1] * sigma[n_t + ci - 1]) ** 2)
                clutter_db[kind] = float(10 * np.log10(echo / powers[kind]))
        if y is None:
            baseline = {k: m.normalized_correlation for k, m in metrics.items()}
        drop = {k: baseline[k] - m.normalized_correlation for k, m in metrics.items()}
        extra = {"clutter_y": y, "correlation_drop": drop, "clutter_to_signal_db": clutter_db,
                 "iterations": iters}
        rep = ComparisonReport(metrics, results, 0.0, label, extra)
        artifacts = []
        if write:
            tag = "baseline" if y is None else f"clutter_y{y:g}"
            for kind, res in results.items():
                artifacts += _save_recon(out, f"{tag}_{kind}", res, grid, shape, truth, f"{kind}, {label}")
        rep.record = _record(cfg, label, _metrics_dict(metrics), artifacts, clutter_y=y,
                             correlation_drop=drop, clutter_to_signal_db=clutter_db, iterations=iters)
        reports.append(rep)
    runtime = time.perf_counter() - t0
    for rep in reports:
        rep.runtime_s = runtime
    if write:
        io.write_ledger(out / "ledger.jsonl", [r.record for r in reports])
        io.write_json(out / "report.json", {"runtime_s": runtime, "cases": [r.record for r in reports]})
    return reports


def _svd_strategy(cfg: ExperimentConfig, variant: str) -> MaskStrategy:
    c = cfg.strategy.c_max
    return {
        "offset_only": MaskStrategy(FOCUSED, c, randomize_angles=False, randomize_offsets=True),
        "offset_angles": MaskStrategy(FOCUSED, c, randomize_angles=True, randomize_offsets=True),
        "angles_only": MaskStrategy(FOCUSED, c, randomize_angles=True, randomize_offsets=False),
        "random": MaskStrategy(RANDOM),
    }[variant]


def svd_summary(s: np.ndarray) -> dict:
    """Knee statistics of normalized singular values (1-based labels)."""
    def at(k):
        return float(s[k - 1]) if len(s) >= k else None

    out = {"n": len(s), "numerical_rank": int(np.sum(s > 1e-10)),
           "sigma_30": at(30), "sigma_36": at(36), "sigma_37": at(37), "sigma_40": at(40),
           "sigma_60": at(60)}
    out["ratio_40_30"] = None if len(s) < 40 else float(s[39] / s[29])
    return out


def run_svd_study(cfg: ExperimentConfig, write: bool = True) -> SvdTable:
    """Normalized singular values of ``H`` for several mask variants on one grid."""
    t0 = time.perf_counter()
    with _stage("scene"):
        scene = make_scene(cfg)
        grid, _ = inverse_grid(scene, cfg)
    values, summary = {}, {}
    for variant in cfg.variants:
        with _stage(f"masks:{variant}"):
            masks = method_masks(cfg, scene, variant, cfg.mask_count, SVD_CASE[variant],
                                 _svd_strategy(cfg, variant))
        with _stage(f"svd:{variant}"):
            values[variant] = normalized_singular_values(build_sensing_matrix(scene, masks, grid))
        summary[variant] = svd_summary(values[variant])
    runtime = time.perf_counter() - t0
    table = SvdTable(values, summary, runtime)
    artifacts = []
    if write:
        out = _out_dir(cfg)
        io.write_singular_csv(out / "singular_values.csv", values)
        fig, ax = plt.subplots(figsize=(5, 3.5), dpi=100)
        for name, s in values.items():
            ax.semilogy(np.arange(1, len(s) + 1), np.maximum(s, 1e-17), label=name)
        n_panels = len(scene.tx_panels) * len(scene.rx_panels)
        ax.axvline(n_panels, color="k", ls=":", lw=1)
        ax.set_xlabel("index")
        ax.set_ylabel("normalized singular value")
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(out / "singular_values.png", metadata={"Software": None})
        plt.close(fig)
        artifacts = ["singular_values.csv", "singular_values.png"]
    table.record = _record(cfg, "svd", summary, artifacts,
                           rows=int(cfg.mask_count * len(scene.frequencies)))
    if write:
        io.write_ledger(out / "ledger.jsonl", [table.record])
        io.write_json(out / "report.json", {"runtime_s": runtime, **table.record})
    return table


def _window(rois, scale: float, z: float) -> RoiBox:
    """Box around all ``rois`` padded by ``(scale - 1)/2`` ROI extents per side."""
    xs = [v for r in rois for v in r.x_range]
    ys = [v for r in rois for v in r.y_range]
    pad_x = (scale - 1) / 2 * max(r.extent_x for r in rois)
    pad_y = (scale - 1) / 2 * max(r.extent_y for r in rois)
    x0, x1 = min(xs) - pad_x, max(xs) + pad_x
    y0, y1 = min(ys) - pad_y, max(ys) + pad_y
    return RoiBox(((x0 + x1) / 2, (y0 + y1) / 2, z), x1 - x0, y1 - y0)


def run_roi_sweep(cfg: ExperimentConfig, write: bool = True) -> Gallery:
    """Regenerate masks for each ROI and measure where the Tx speckle energy lands."""
    t0 = time.perf_counter()
    with _stage("scene"):
        base = make_scene(cfg)
        rois = list(cfg.rois)
        win = _window(rois, cfg.window_scale, rois[0].plane_z)
        pts, shape = plane_grid(win.center, win.extent_x, win.extent_y, cfg.field_step)
    f0 = base.design_frequency
    out = _out_dir(cfg) if write else None
    entries, records = [], []
    for i, roi in enumerate(rois):
        with _stage(f"roi:{i}"):
            scene = base.with_roi(roi)
            # same draws for every ROI: only the geometry changes between cases
            masks = method_masks(cfg, scene, FOCUSED, cfg.mask_count, METHOD_CASE[FOCUSED])
            fractions, cross, centroids = [], [], []
            first = None
            for m in masks:
                v = aggregate_field(scene, m, TX, pts, f0).values
                first = v if first is None else first
                fractions.append(energy_fraction(v, pts, roi))
                cross.append([energy_fraction(v, pts, r) for r in rois])
                centroids.append(energy_centroid(v, pts))
        cen = np.array(centroids)
        entry = {
            "roi": {"center": list(map(float, roi.center)), "extent": [roi.extent_x, roi.extent_y]},
            "confinement": float(np.mean(fractions)),
            "confinement_per_roi": np.mean(cross, axis=0).tolist(),
            "centroids": cen.tolist(),
            "centroids_inside": bool(np.all(roi.contains(cen))),
        }
        entries.append(entry)
        artifacts = []
        if write:
            io.save_image(out / f"roi{i}_tx.png", first, shape, io.extent_of(pts),
                          f"ROI {i}, mask 0, Tx |E|", roi=[roi])
            artifacts = [f"roi{i}_tx.png"]
        records.append(_record(cfg, f"roi{i}", entry, artifacts))
    gallery = Gallery(entries, time.perf_counter() - t0, records)
    if write:
        io.write_ledger(out / "ledger.jsonl", records)
        io.write_json(out / "report.json", {"runtime_s": gallery.runtime_s, "cases": records})
    return gallery


def run_fields(cfg: ExperimentConfig, write: bool = True) -> Gallery:
    """Speckle patterns of a few masks: per-panel beams, aggregate, squint and offset diversity."""
    t0 = time.perf_counter()
    with _stage("scene"):
        scene = build_scene(cfg.scene)
        roi = scene.roi
        win = _window([roi], cfg.window_scale, roi.plane_z)
        pts, shape = plane_grid(win.center, win.extent_x, win.extent_y, cfg.field_step)
        freqs = list(cfg.frequencies) if cfg.frequencies else list(scene.frequencies)
    with _stage("masks"):
        masks = method_masks(cfg, scene, cfg.strategy.kind, cfg.mask_count, METHOD_CASE[cfg.strategy.kind])
    out = _out_dir(cfg) if write else None
    artifacts: list[str] = []
    patterns: dict[tuple[int, float], np.ndarray] = {}
    entries = []
    with _stage("fields"):
        for mi, m in enumerate(masks):
            for f in freqs:
                fmap = aggregate_field(scene, m, cfg.side, pts, f, mi)
                patterns[(mi, f)] = fmap.values
                entries.append({"mask": mi, "frequency_hz": f,
                                "roi_energy_fraction": energy_fraction(fmap.values, pts, roi)})
                if write:
                    stem = f"mask{mi}_{cfg.side}_{f / 1e9:.3f}GHz"
                    io.write_field_csv(out / f"{stem}.csv", fmap)
                    io.save_image(out / f"{stem}.png", fmap.values, shape, io.extent_of(pts),
                                  f"mask {mi}, {cfg.side}, {f / 1e9:.3f} GHz", roi=[roi])
                    artifacts += [f"{stem}.csv", f"{stem}.png"]
        f0 = min(freqs, key=lambda f: abs(f - scene.design_frequency))
        if write:
            for p in scene.side_panels(cfg.side):
                fmap = panel_field(scene, masks[0], p.panel_id, pts, f0, 0)
                stem = f"mask0_panel{p.panel_id}"
                io.save_image(out / f"{stem}.png", fmap.values, shape, io.extent_of(pts),
                              f"panel {p.panel_id}, {f0 / 1e9:.3f} GHz", roi=[roi])
                artifacts.append(f"{stem}.png")
    squint = [normalized_correlation(patterns[(mi, freqs[0])], patterns[(mi, freqs[-1])])
              for mi in range(len(masks))]
    diversity = [normalized_correlation(patterns[(a, f0)], patterns[(b, f0)])
                 for a in range(len(masks)) for b in range(a + 1, len(masks))]
    summary = {"patterns": entries, "squint_correlation": squint, "mask_pair_correlation": diversity}
    gallery = Gallery([summary], time.perf_counter() - t0)
    gallery.records = [_record(cfg, "fields", summary, artifacts)]
    if write:
        io.write_ledger(out / "ledger.jsonl", gallery.records)
        io.write_json(out / "report.json", {"runtime_s": gallery.runtime_s, **gallery.records[0]})
    return gallery


def run_masks(cfg: ExperimentConfig, write: bool = True) -> tuple[list[Mask], dict]:
    """Generate masks, export them and check steering against the angle bounds."""
    with _stage("scene"):
        scene = build_scene(cfg.scene)
    kind = cfg.strategy.kind
    with _stage("masks"):
        masks = method_masks(cfg, scene, kind, cfg.mask_count, METHOD_CASE[kind])
    inside = None
    if kind != RANDOM:
        bounds = [angle_bounds(p, scene.roi) for p in scene.panels]
        inside = int(sum(bool(b.contains(*m.steering[k])) for m in masks for k, b in enumerate(bounds)))
    summary = {"count": len(masks), "kind": kind, "profiles_per_mask": len(scene.panels),
               "steering_inside_bounds": inside}
    artifacts = []
    if write:
        out = _out_dir(cfg)
        io.save_masks(out / "masks.npz", masks)
        io.write_mask_table(out / "masks.csv", masks, [p.side for p in scene.panels])
        artifacts = ["masks.csv", "masks.npz"]
    record = _record(cfg, "masks", summary, artifacts)
    if write:
        io.write_ledger(out / "ledger.jsonl", [record])
    return masks, record


def run_image(cfg: ExperimentConfig, write: bool = True) -> ComparisonReport:
    """Single-method imaging run; exports the inverse matrix and measurement container."""
    t0 = time.perf_counter()
    kind = cfg.strategy.kind
    with _stage("scene"):
        scene = make_scene(cfg)
        grid, shape = inverse_grid(scene, cfg)
        truth = paper_target()
        full = truth
        for y in cfg.clutter_y:
            full = add_clutter(full, y, reflectivity=cfg.clutter_reflectivity)
    with _stage("masks"):
        masks = method_masks(cfg, scene, kind, cfg.mask_count, METHOD_CASE[kind])
    with _stage("sensing"):
        H_inv = build_sensing_matrix(scene, masks, grid)
        H_fwd = build_sensing_matrix(scene, masks, full.positions)
        power = float(np.mean(np.abs(H_fwd.entries[:, :len(truth)] @ truth.reflectivities) ** 2))
    with _stage("measure"):
        g = simulate_measurement(H_fwd, full.reflectivities, cfg.snr_db,
                                 stream(cfg.rng_seed, METHOD_CASE[kind], NOISE_STREAM), reference_power=power)
    with _stage("recon"):
        results = {kind: solve(cfg, H_inv, g)}
        if kind == RASTER:
            results["raster_direct"] = raster_readout(masks, g, grid, len(scene.frequencies), H_inv)
    metrics = {k: compute_metrics(r.sigma_est, truth, grid) for k, r in results.items()}
    runtime = time.perf_counter() - t0
    report = ComparisonReport(metrics, results, runtime, "image",
                              {"rows": H_inv.shape[0], "converged": results[kind].converged})
    artifacts = []
    if write:
        out = _out_dir(cfg)
        io.save_matrix(out / "H_inv.bin", H_inv)
        io.save_measurement(out / "g.bin", g)
        artifacts = ["H_inv.bin", "g.bin"]
        for k, r in results.items():
            artifacts += _save_recon(out, k, r, grid, shape, truth, f"{k} ({r.method})")
    report.record = _record(cfg, "image", _metrics_dict(metrics), artifacts,
                            iterations={k: r.iterations for k, r in results.items()},
                            converged={k: r.converged for k, r in results.items()},
                            rows=H_inv.shape[0])
    if write:
        io.write_ledger(out / "ledger.jsonl", [report.record])
        io.write_json(out / "report.json", {"runtime_s": runtime, **report.record})
    return report


RUNNERS = {
    "masks": run_masks,
    "fields": run_fields,
    "svd": run_svd_study,
    "image": run_image,
    "compare": run_compare,
    "clutter": run_clutter_study,
    "roi_sweep": run_roi_sweep,
}
