import json

import pytest

from forbal.config import (
    BUILTIN_CONFIGS,
    builtin_config_doc,
    load_config,
    spec_from_dict,
    spec_to_dict,
)
from forbal.errors import ConfigError


def test_builtin_configs_load(spec2, spec5):
    assert spec2.uniform
    assert spec2.spatial is None
    assert spec5.spatial is not None
    assert spec5.spatial.ee_motor_mass == pytest.approx(0.102)


def test_units_are_converted_on_load():
    doc = builtin_config_doc("forbal2")
    assert doc["units"] == {"length": "mm", "mass": "g"}
    spec = spec_from_dict(doc)
    assert spec.links["11"].length == pytest.approx(0.230)
    assert spec.links["11"].profile_mass == pytest.approx(0.2928)
    assert spec.base_height == pytest.approx(0.178)


def test_si_units_accepted():
    doc = builtin_config_doc("forbal2")
    si = spec_to_dict(spec_from_dict(doc))
    assert si["units"] == {"length": "m", "mass": "kg"}
    spec = spec_from_dict(si)
    assert spec.links["21"].profile_mass == pytest.approx(0.2913)
    assert spec.joint_limits["q22"] == (0.3, 2.9)


def test_unknown_units_rejected():
    doc = builtin_config_doc("forbal2")
    doc["units"] = {"length": "furlong"}
    with pytest.raises(ConfigError):
        spec_from_dict(doc)


def test_missing_link_rejected():
    doc = builtin_config_doc("forbal2")
    del doc["links"]["21"]
    with pytest.raises(ConfigError):
        spec_from_dict(doc)


def test_load_config_from_file(tmp_path):
    doc = builtin_config_doc("forbal2")
    path = tmp_path / "copy.json"
    path.write_text(json.dumps(doc))
    spec = load_config(path)
    assert spec.name == "forbal2-prototype"
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_roundtrip_through_dict(spec5):
    back = spec_from_dict(spec_to_dict(spec5))
    assert back.links["22"].profile_com == pytest.approx(spec5.links["22"].profile_com)
    assert back.spatial.motor_offset == spec5.spatial.motor_offset
    assert back.floor_z == spec5.floor_z


def test_builtin_names_stable():
    assert BUILTIN_CONFIGS == ("forbal2", "forbal5")
