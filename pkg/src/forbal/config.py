"""Mechanism config files: JSON schema, unit handling, shipped prototypes.

A config document mirrors :class:`~forbal.model.MechanismSpec`.  The optional
``units`` header declares the length/mass units of the numbers in the file
(``m``/``mm`` and ``kg``/``g``); everything is converted to SI on load.  Two
prototype files ship with the package:

* ``forbal2.json`` - planar 2-DOF mechanism, mass data as measured.
* ``forbal5.json`` - spatial 5-DOF variant with the wrist motor payload.

Geometry values that the mass tables do not determine (link length, base
height, floor clearance) are inferred, not measured; see the ``_notes`` field
inside each file.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .model import Forbal5Extension, LinkSpec, MechanismSpec, LINK_KEYS

_LENGTH_FACTOR = {"m": 1.0, "mm": 1e-3}
_MASS_FACTOR = {"kg": 1.0, "g": 1e-3}

BUILTIN_CONFIGS = ("forbal2", "forbal5")


def _link_from_dict(d: dict[str, Any], lf: float, mf: float) -> LinkSpec:
    return LinkSpec(
        length=d["length"] * lf,
        profile_mass=d["profile_mass"] * mf,
        profile_com=d["profile_com"] * lf,
        counter_mass=d.get("counter_mass", 0.0) * mf,
        counter_com=None if d.get("counter_com") is None else d["counter_com"] * lf,
        profile_y=d.get("profile_y", 0.0) * lf,
        counter_y=d.get("counter_y", 0.0) * lf,
        rot_inertia=None if d.get("rot_inertia") is None else d["rot_inertia"] * mf * lf * lf,
    )


def spec_from_dict(doc: dict[str, Any]) -> MechanismSpec:
    """Build a MechanismSpec from a parsed config document."""
    units = doc.get("units", {})
    try:
        lf = _LENGTH_FACTOR[units.get("length", "m")]
        mf = _MASS_FACTOR[units.get("mass", "kg")]
    except KeyError as exc:
        raise ConfigError(f"unsupported unit {exc.args[0]!r}") from None
    try:
        links = {k: _link_from_dict(doc["links"][k], lf, mf) for k in LINK_KEYS}
    except KeyError as exc:
        raise ConfigError(f"config missing link entry {exc.args[0]!r}") from None

    spatial = None
    if doc.get("spatial") is not None:
        sp = doc["spatial"]
        spatial = Forbal5Extension(
            joint0_offset=sp.get("joint0_offset", 0.0) * lf,
            motor_offset=tuple(v * lf for v in sp.get("motor_offset", (0, 0, 0))),
            ee_motor_mass=sp.get("ee_motor_mass", 0.0) * mf,
            ee_motor_com=tuple(v * lf for v in sp.get("ee_motor_com", (0, 0, 0))),
            implement_mass=sp.get("implement_mass", 0.0) * mf,
            implement_com=tuple(v * lf for v in sp.get("implement_com", (0, 0, 0))),
        )

    limits = {k: (float(v[0]), float(v[1]))
              for k, v in doc.get("joint_limits", {}).items()}

    return MechanismSpec(
        links=links,
        base_height=doc.get("base_height", 0.0) * lf,
        base_separation=doc.get("base_separation", 0.0) * lf,
        ee_offset=doc.get("ee_offset", 0.0) * lf,
        ee_payload_mass=doc.get("ee_payload_mass", 0.0) * mf,
        ee_payload_com=doc.get("ee_payload_com", 0.0) * lf,
        ee_payload_y=doc.get("ee_payload_y", 0.0) * lf,
        base_mass=doc.get("base_mass", 0.0) * mf,
        gravity=doc.get("gravity", 9.80665),
        uniform=doc.get("uniform", False),
        spatial=spatial,
        joint_limits=limits,
        floor_z=None if doc.get("floor_z") is None else doc["floor_z"] * lf,
        name=doc.get("name", ""),
    )


def load_config(source: str | Path | dict[str, Any]) -> MechanismSpec:
    """Load a mechanism spec from a file path, builtin name, or parsed dict."""
    if isinstance(source, dict):
        return spec_from_dict(source)
    name = str(source)
    if name in BUILTIN_CONFIGS:
        return spec_from_dict(builtin_config_doc(name))
    path = Path(name)
    if not path.exists():
        raise ConfigError(f"config file not found: {name}")
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
    return spec_from_dict(doc)


def builtin_config_doc(name: str) -> dict[str, Any]:
    """Raw document of a shipped config (forbal2 or forbal5)."""
    if name not in BUILTIN_CONFIGS:
        raise ConfigError(f"unknown builtin config {name!r}; have {BUILTIN_CONFIGS}")
    text = resources.files("forbal.data").joinpath(f"{name}.json").read_text("utf-8")
    return json.loads(text)


def spec_to_dict(spec: MechanismSpec) -> dict[str, Any]:
    """Serialize a spec back to a plain-SI config document."""
    doc: dict[str, Any] = {
        "name": spec.name,
        "units": {"length": "m", "mass": "kg"},
        "base_height": spec.base_height,
        "base_separation": spec.base_separation,
        "ee_offset": spec.ee_offset,
        "ee_payload_mass": spec.ee_payload_mass,
        "ee_payload_com": spec.ee_payload_com,
        "ee_payload_y": spec.ee_payload_y,
        "base_mass": spec.base_mass,
        "gravity": spec.gravity,
        "uniform": spec.uniform,
        "links": {},
        "joint_limits": {k: list(v) for k, v in spec.joint_limits.items()},
    }
    if spec.floor_z is not None:
        doc["floor_z"] = spec.floor_z
    for key, ln in spec.links.items():
        doc["links"][key] = {
            "length": ln.length,
            "profile_mass": ln.profile_mass,
            "profile_com": ln.profile_com,
            "counter_mass": ln.counter_mass,
            "counter_com": ln.counter_offset,
            "profile_y": ln.profile_y,
            "counter_y": ln.counter_y,
        }
        if ln.rot_inertia is not None:
            doc["links"][key]["rot_inertia"] = ln.rot_inertia
    if spec.spatial is not None:
        sp = spec.spatial
        doc["spatial"] = {
            "joint0_offset": sp.joint0_offset,
            "motor_offset": list(sp.motor_offset),
            "ee_motor_mass": sp.ee_motor_mass,
            "ee_motor_com": list(sp.ee_motor_com),
            "implement_mass": sp.implement_mass,
            "implement_com": list(sp.implement_com),
        }
    return doc
