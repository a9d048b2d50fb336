import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from wulfflab.config import ExperimentManifest, SolverConfig
from wulfflab.errors import ConfigError


def test_defaults_roundtrip():
    cfg = SolverConfig()
    assert SolverConfig.from_dict(cfg.to_json()) == cfg


@pytest.mark.parametrize("field, value", [("tol", -1.0), ("max_outer", 0), ("relaxation", "spline"),
                                          ("projection_mode", "fast"), ("threads", 0),
                                          ("eps_schedule", [1e-2, 1e-1])])
def test_invalid_fields_named(field, value):
    with pytest.raises(ConfigError) as e:
        SolverConfig.from_dict({field: value})
    assert e.value.field == field


def test_unknown_key():
    with pytest.raises(ConfigError) as e:
        SolverConfig.from_dict({"tolerance": 1e-3})
    assert e.value.field == "tolerance"


@given(st.integers(1, 64))
def test_threads_env_override(n):
    with pytest.MonkeyPatch.context() as mp:
        mp.setenv("WULFFLAB_THREADS", str(n))
        assert SolverConfig().threads == n


def test_manifest_load(tmp_path):
    (tmp_path / "d.json").write_text(json.dumps({"kind": "rectangle", "width": 1, "height": 1, "h": 0.25}))
    (tmp_path / "m.json").write_text(json.dumps({"task": "cheeger1", "domain": "d.json",
                                                 "solver": {"seed": 3}}))
    m = ExperimentManifest.load(tmp_path / "m.json")
    assert m.solver_config().seed == 3
    assert m.domain == str(tmp_path / "d.json")


@pytest.mark.parametrize("raw, field", [
    ('{"task": "cheeger1"}', "domain"),
    ('{"task": "spin"}', "task"),
    ('{"domain": "d.json"}', "task"),
    ('{"task": "cheeger1", "domain": "missing.json"}', "domain"),
    ('{"task": "norm-check", "colour": 1}', "colour"),
    ('{"task": "norm-check", "params": 3}', "params"),
    ('{"task": ', "manifest"),
    ('[1, 2]', "manifest"),
])
def test_manifest_errors_name_field(tmp_path, raw, field):
    (tmp_path / "m.json").write_text(raw)
    with pytest.raises(ConfigError) as e:
        ExperimentManifest.load(tmp_path / "m.json")
    assert e.value.field == field
