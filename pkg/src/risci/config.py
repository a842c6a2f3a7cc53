"""Declarative experiment configuration (YAML).

A config file has shared top-level keys (``seed``, ``output_dir``, ``scene``,
``grid``, ``solver``, ``noise_reference``) plus one optional section per CLI
subcommand. A section's keys override the shared ones for that experiment.
Unknown keys are rejected so typos fail loudly.
"""
from __future__ import annotations

import copy
import hashlib
import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from .masks import FOCUSED, KINDS, RANDOM, RASTER, MaskStrategy
from .recon import SOLVERS
from .scene import RX, SIDES, TX, RoiBox, SceneConfig, build_scene


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a sign or dot (``6e9``)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
    |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
    |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
    |[-+]?\.(?:inf|Inf|INF)
    |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."),
)


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


EXPERIMENTS = ("masks", "fields", "svd", "image", "compare", "clutter", "roi_sweep")
NOISE_REFERENCES = ("per_method", "common")
READOUTS = ("direct", "cgs")
SVD_VARIANTS = ("offset_only", "offset_angles", "angles_only", "random")

DEFAULTS: dict = {
    "seed": 0,
    "output_dir": "results",
    "scene": SceneConfig().to_dict(),
    "grid": [31, 31],
    "solver": {
        "solver": "cr",
        "tol": 1.0e-6,
        "max_iter": 200,
        "alpha": 0.0,
        "early_stop": True,
        "discrepancy": 1.0,
    },
    "noise_reference": "per_method",
    "masks": {"kind": FOCUSED, "mask_count": 20, "c_max": 0.25},
    "fields": {
        "kind": FOCUSED,
        "mask_count": 3,
        "frequencies": [5.9e9, 6.0e9, 6.1e9],
        "side": TX,
        "field_step": 0.05,
        "window_scale": 3.0,
    },
    "svd": {
        "mask_count": 60,
        "frequencies": [6.0e9],
        "variants": ["offset_only", "offset_angles", "random"],
    },
    "image": {"kind": FOCUSED, "mask_count": 20, "snr_db": 20.0, "clutter_y": []},
    "compare": {
        "mask_count": 20,
        "snr_db": 20.0,
        "methods": [FOCUSED, RASTER, RANDOM],
        "raster_readout": "direct",
    },
    "clutter": {
        "mask_count": 30,
        "snr_db": 50.0,
        "clutter_y": [3.0, 5.0, 10.0],
        "clutter_reflectivity": 1.0,
        "methods": [FOCUSED, RANDOM],
    },
    "roi_sweep": {
        "mask_count": 3,
        "field_step": 0.05,
        "window_scale": 3.0,
        "rois": [
            {"center": [-1.0, 1.9, 8.0], "extent": [1.0, 1.0]},
            {"center": [0.0, 1.9, 8.0], "extent": [1.0, 1.0]},
            {"center": [1.0, 1.9, 8.0], "extent": [1.0, 1.0]},
        ],
    },
}

_SHARED = ("seed", "output_dir", "scene", "grid", "solver", "noise_reference")
_SECTION_KEYS = {
    "kind", "mask_count", "c_max", "randomize_angles", "randomize_offsets", "scan_shape",
    "snr_db", "clutter_y", "clutter_reflectivity", "methods", "raster_readout",
    "frequencies", "variants", "side", "field_step", "window_scale", "rois",
} | set(_SHARED) - {"seed", "output_dir"}


@dataclass(frozen=True)
class SolverConfig:
    solver: str = "cr"
    tol: float = 1e-6
    max_iter: int = 200
    alpha: float = 0.0
    early_stop: bool = True
    discrepancy: float = 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved settings of one experiment."""

    name: str
    scene: SceneConfig = field(default_factory=SceneConfig)
    strategy: MaskStrategy = field(default_factory=MaskStrategy)
    mask_count: int = 20
    snr_db: float = 20.0
    clutter_y: tuple[float, ...] = ()
    rng_seed: int = 0
    output_dir: str = "results"
    grid_shape: tuple[int, int] = (31, 31)  # (nx, ny)
    solver: SolverConfig = field(default_factory=SolverConfig)
    noise_reference: str = "per_method"
    methods: tuple[str, ...] = (FOCUSED, RASTER, RANDOM)
    raster_readout: str = "direct"
    clutter_reflectivity: float = 1.0
    frequencies: tuple[float, ...] | None = None
    variants: tuple[str, ...] = ()
    side: str = TX
    field_step: float = 0.05
    window_scale: float = 3.0
    rois: tuple[RoiBox, ...] = ()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scene"] = self.scene.to_dict()
        d["rois"] = [
            {"center": [float(c) for c in r.center], "extent": [r.extent_x, r.extent_y]}
            for r in self.rois
        ]
        return json.loads(json.dumps(d, default=list))

    def config_hash(self) -> str:
        """SHA-256 of the canonical settings; ``output_dir`` is excluded."""
        d = self.to_dict()
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def load_config(path: str | Path | None = None) -> dict:
    """Read a YAML config and merge it over :data:`DEFAULTS`."""
    raw = copy.deepcopy(DEFAULTS)
    if path is None:
        return raw
    try:
        with open(path, encoding="utf-8") as fh:
            user = yaml.load(fh, Loader=_Loader) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}") from exc
    if not isinstance(user, dict):
        raise ConfigError("config root must be a mapping")
    unknown = set(user) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    for key, value in user.items():
        if isinstance(raw[key], dict) and key != "scene":
            if not isinstance(value, dict):
                raise ConfigError(f"section {key!r} must be a mapping")
            raw[key].update(value)
        elif key == "scene":
            if not isinstance(value, dict):
                raise ConfigError("section 'scene' must be a mapping")
            raw["scene"].update(value)
        else:
            raw[key] = value
    return raw


def experiment_config(raw: dict, name: str, seed: int | None = None,
                      output_dir: str | None = None) -> ExperimentConfig:
    """Resolve section ``name`` of a merged config into an :class:`ExperimentConfig`."""
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}")
    section = dict(raw.get(name, {}))
    unknown = set(section) - _SECTION_KEYS
    if unknown:
        raise ConfigError(f"unknown keys in section {name!r}: {sorted(unknown)}")
    merged = {k: copy.deepcopy(raw[k]) for k in _SHARED}
    for key in ("scene", "solver"):
        if key in section:
            merged[key].update(section.pop(key))
    merged.update(section)
    if seed is not None:
        merged["seed"] = seed
    if output_dir is not None:
        merged["output_dir"] = output_dir
    try:
        return _build(name, merged)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"section {name!r}: {exc}") from exc


def _build(name: str, m: dict) -> ExperimentConfig:
    scene = SceneConfig.from_dict(m["scene"])
    build_scene(scene)  # geometry errors are configuration errors
    seed = m["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")
    kind = m.get("kind", FOCUSED)
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}, got {kind!r}")
    strategy = MaskStrategy(
        kind,
        float(m.get("c_max", 0.25)),
        bool(m.get("randomize_angles", True)),
        bool(m.get("randomize_offsets", True)),
        m.get("scan_shape"),
    )
    count = m.get("mask_count", 20)
    if not isinstance(count, int) or isinstance(count, bool) or count < 1:
        raise ConfigError(f"mask_count must be an integer >= 1, got {count!r}")
    grid = tuple(int(v) for v in m["grid"])
    if len(grid) != 2 or min(grid) < 2:
        raise ConfigError(f"grid must be [nx, ny] with both >= 2, got {m['grid']!r}")
    solver = SolverConfig(**m["solver"])
    if solver.solver not in SOLVERS:
        raise ConfigError(f"solver must be one of {SOLVERS}, got {solver.solver!r}")
    if not solver.tol > 0 or not int(solver.max_iter) >= 1:
        raise ConfigError("solver tol must be > 0 and max_iter >= 1")
    if m["noise_reference"] not in NOISE_REFERENCES:
        raise ConfigError(f"noise_reference must be one of {NOISE_REFERENCES}")
    methods = tuple(m.get("methods", (FOCUSED, RASTER, RANDOM)))
    bad = [x for x in methods if x not in KINDS]
    if bad or not methods:
        raise ConfigError(f"methods must be a non-empty subset of {KINDS}, got {list(methods)}")
    readout = m.get("raster_readout", "direct")
    if readout not in READOUTS:
        raise ConfigError(f"raster_readout must be one of {READOUTS}")
    variants = tuple(m.get("variants", ()))
    if any(v not in SVD_VARIANTS for v in variants):
        raise ConfigError(f"variants must be drawn from {SVD_VARIANTS}")
    if name == "svd" and len(variants) < 2:
        raise ConfigError("svd needs at least two variants")
    side = m.get("side", TX)
    if side not in SIDES:
        raise ConfigError(f"side must be {TX!r} or {RX!r}")
    clutter = tuple(float(y) for y in (m.get("clutter_y") or ()))
    if name == "clutter" and not clutter:
        raise ConfigError("clutter study needs at least one clutter_y")
    freqs = m.get("frequencies")
    rois = tuple(
        RoiBox(tuple(float(c) for c in r["center"]), float(r["extent"][0]), float(r["extent"][1]))
        for r in m.get("rois", ())
    )
    if name == "roi_sweep" and len(rois) < 2:
        raise ConfigError("roi_sweep needs at least two ROIs")
    return ExperimentConfig(
        name=name,
        scene=scene,
        strategy=strategy,
        mask_count=count,
        snr_db=float(m.get("snr_db", 20.0)),
        clutter_y=clutter,
        rng_seed=seed,
        output_dir=str(m["output_dir"]),
        grid_shape=grid,
        solver=SolverConfig(solver.solver, float(solver.tol), int(solver.max_iter),
                            float(solver.alpha), bool(solver.early_stop), float(solver.discrepancy)),
        noise_reference=m["noise_reference"],
        methods=methods,
        raster_readout=readout,
        clutter_reflectivity=float(m.get("clutter_reflectivity", 1.0)),
        frequencies=None if freqs is None else tuple(float(f) for f in freqs),
        variants=variants,
        side=side,
        field_step=float(m.get("field_step", 0.05)),
        window_scale=float(m.get("window_scale", 3.0)),
        rois=rois,
    )


def dump_defaults() -> str:
    """YAML text of :data:`DEFAULTS`."""
    return yaml.safe_dump(DEFAULTS, sort_keys=False)
