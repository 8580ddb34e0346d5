import copy
from pathlib import Path

import yaml

from itdefense.scenario import config_from_dict, validate

ROOT = Path(__file__).resolve().parent.parent
CANONICAL = ROOT / "docs" / "scenario.yaml"


def base_doc() -> dict:
    return yaml.safe_load(CANONICAL.read_text())


def deep_update(doc: dict, changes: dict) -> dict:
    out = copy.deepcopy(doc)
    for k, v in changes.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_update(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def unit(x, y, v=30.0, theta=0.0, center=None, **extra):
    c = [x, y] if center is None else list(center)
    d = {"patrol_center": c, "initial": {"x": x, "y": y, "v": v, "theta": theta}}
    d.update(extra)
    return d


def make_cfg(changes: dict | None = None, units=None, check=True):
    doc = deep_update(base_doc(), changes or {})
    if units is not None:
        doc["ei"]["units"] = units
    cfg = config_from_dict(doc)
    if check:
        rep = validate(cfg)
        assert not rep, rep.violations
    return cfg
