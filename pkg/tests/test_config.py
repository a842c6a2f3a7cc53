from pathlib import Path

import pytest
import yaml

from risci.config import (
    DEFAULTS,
    EXPERIMENTS,
    ConfigError,
    _Loader,
    experiment_config,
    load_config,
)

SHIPPED = Path(__file__).resolve().parents[1] / "configs" / "defaults.yaml"


def _write(tmp_path, text):
    p = tmp_path / "c.yaml"
    p.write_text(text)
    return p


def test_shipped_yaml_equals_defaults():
    with open(SHIPPED) as fh:
        shipped = yaml.load(fh, Loader=_Loader)
    assert shipped == DEFAULTS


def test_exponent_floats_parse():
    assert yaml.load("a: 6e9\nb: 5.9e9\nc: -1e-3", Loader=_Loader) == {"a": 6e9, "b": 5.9e9, "c": -1e-3}


@pytest.mark.parametrize("name", EXPERIMENTS)
def test_every_section_resolves(name):
    cfg = experiment_config(load_config(SHIPPED), name)
    assert cfg.name == name and cfg.rng_seed == 0


def test_section_overrides_and_hash():
    raw = load_config()
    a = experiment_config(raw, "compare")
    assert a.mask_count == 20 and a.snr_db == 20.0
    assert experiment_config(raw, "clutter").snr_db == 50.0
    b = experiment_config(raw, "compare", output_dir="elsewhere")
    assert a.config_hash() == b.config_hash()
    c = experiment_config(raw, "compare", seed=1)
    assert a.config_hash() != c.config_hash()


def test_user_file_merges(tmp_path):
    raw = load_config(_write(tmp_path, "compare:\n  snr_db: 10\nscene:\n  frequencies: [6e9]\n"))
    cfg = experiment_config(raw, "compare")
    assert cfg.snr_db == 10.0 and cfg.scene.frequencies == (6e9,)
    assert cfg.mask_count == 20


@pytest.mark.parametrize("text", [
    "bogus: 1\n",
    "compare:\n  bogus: 1\n",
    "compare: 3\n",
    "scene:\n  bogus: 1\n",
    "seed: -1\n",
    "seed: 1.5\n",
    "compare:\n  mask_count: 0\n",
    "compare:\n  methods: [spiral]\n",
    "compare:\n  raster_readout: fancy\n",
    "solver:\n  solver: gmres\n",
    "solver:\n  tol: 0\n",
    "noise_reference: global\n",
    "grid: [1, 5]\n",
    "scene:\n  frequencies: [6e9, 5.9e9]\n",
    "scene:\n  roi_center: [0, 1.9, -1]\n",
    "clutter:\n  clutter_y: []\n",
    "svd:\n  variants: [offset_only]\n",
    "- a\n- b\n",
    "a: [unclosed\n",
])
def test_invalid_configs(tmp_path, text):
    with pytest.raises(ConfigError):
        name = "svd" if "svd" in text else "clutter" if "clutter" in text else "compare"
        experiment_config(load_config(_write(tmp_path, text)), name)


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/config.yaml")


def test_unknown_experiment():
    with pytest.raises(ConfigError):
        experiment_config(load_config(), "nope")
