"""JSON file formats: instances, markets and policies.

Numbers are written with 12 significant digits so files diff cleanly and
re-serializing a file that was read back gives identical bytes.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .core import PersuasionError, PersuasionInstance, PlatformPolicy, SenderPolicy, UtilityReport, validate_instance
from .segmentation import Market


class FileFormatError(PersuasionError):
    """A file parsed as JSON but does not match the expected schema."""


def canonical(x: float) -> Optional[float]:
    x = float(x)
    if not math.isfinite(x):
        return None
    out = float(f"{x:.12g}")
    return 0.0 if out == 0.0 else out


def canonical_list(xs) -> list:
    return [canonical(x) for x in np.asarray(xs, dtype=np.float64).ravel()]


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def read_json(path) -> Any:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})") from exc


def write_json(path, obj: Any) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def _numbers(raw, key: str, where: str) -> list[float]:
    if key not in raw:
        raise FileFormatError(f"{where}: missing field '{key}'")
    value = raw[key]
    if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise FileFormatError(f"{where}: field '{key}' must be an array of numbers")
    return [float(v) for v in value]


def _number(raw, key: str, where: str) -> float:
    if key not in raw:
        raise FileFormatError(f"{where}: missing field '{key}'")
    value = raw[key]
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise FileFormatError(f"{where}: field '{key}' must be a number")
    return float(value)


def instance_from_dict(raw) -> PersuasionInstance:
    if not isinstance(raw, dict):
        raise FileFormatError("instance: top level must be an object")
    theta = _numbers(raw, "theta", "instance")
    prior = _numbers(raw, "prior", "instance")
    if len(theta) != len(prior):
        raise FileFormatError(f"instance: 'theta' has {len(theta)} entries but 'prior' has {len(prior)}")
    data = {"theta": theta, "prior": prior, "mu": _number(raw, "mu", "instance")}
    rep = raw.get("repeated")
    if rep is not None:
        if not isinstance(rep, dict):
            raise FileFormatError("instance: 'repeated' must be an object")
        data["repeated"] = {
            "delta": _number(rep, "delta", "instance.repeated"),
            "u_bar": _number(rep, "u_bar", "instance.repeated"),
        }
    return validate_instance(data)


def instance_to_dict(inst: PersuasionInstance) -> dict:
    out = {"theta": canonical_list(inst.theta), "prior": canonical_list(inst.prior), "mu": canonical(inst.mu)}
    if inst.is_repeated:
        out["repeated"] = {"delta": canonical(inst.delta), "u_bar": canonical(inst.u_bar)}
    return out


def load_instance(path) -> PersuasionInstance:
    return instance_from_dict(read_json(path))


def market_from_dict(raw) -> Market:
    if not isinstance(raw, dict):
        raise FileFormatError("market: top level must be an object")
    return Market(_numbers(raw, "values", "market"), _numbers(raw, "masses", "market"))


def load_market(path) -> Market:
    return market_from_dict(read_json(path))


def utilities_to_dict(report: UtilityReport) -> dict:
    return {
        "sender": canonical(report.sender),
        "platform": canonical(report.platform),
        "per_type": canonical_list(report.per_type),
    }


def policy_to_dict(policy: PlatformPolicy, sender: SenderPolicy, report: UtilityReport) -> dict:
    segments = [
        {
            "weight": canonical(w),
            "posterior": canonical_list(x),
            "lie_prob": canonical(p),
            "truthful": i == policy.truthful_index,
        }
        for i, (w, x, p) in enumerate(zip(policy.weights, policy.posteriors, sender.lies))
    ]
    return {"segments": segments, "utilities": utilities_to_dict(report)}


def policy_from_dict(raw) -> tuple[PlatformPolicy, SenderPolicy, Optional[dict]]:
    if not isinstance(raw, dict) or not isinstance(raw.get("segments"), list) or not raw["segments"]:
        raise FileFormatError("policy: expected an object with a non-empty 'segments' array")
    weights, rows, lies = [], [], []
    truthful = None
    for i, seg in enumerate(raw["segments"]):
        where = f"policy.segments[{i}]"
        if not isinstance(seg, dict):
            raise FileFormatError(f"{where}: must be an object")
        weights.append(_number(seg, "weight", where))
        rows.append(_numbers(seg, "posterior", where))
        lies.append(_number(seg, "lie_prob", where))
        if seg.get("truthful", False):
            if truthful is not None:
                raise FileFormatError("policy: at most one segment may be truthful")
            truthful = i
    if len({len(r) for r in rows}) != 1:
        raise FileFormatError("policy: posteriors must all have the same length")
    policy = PlatformPolicy(np.array(weights), np.array(rows), truthful)
    if policy.m != len(weights):
        raise FileFormatError("policy: segments must have positive weight")
    return policy, SenderPolicy(lies), raw.get("utilities")


def load_policy(path):
    return policy_from_dict(read_json(path))
