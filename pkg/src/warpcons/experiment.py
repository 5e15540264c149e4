"""Experiment files (JSON) and result bundle writing.

Layout of an experiment file::

    {
      "system": {"n": 6, "p": 1, "r": 1, "f": 2, "value_domain": [0, 1, 2]},
      "proposals": {"2": 1, "3": 1, "4": 2, "5": 2},
      "byzantine": {"ids": [0, 1], "strategy": {"kind": "collude", "value": 0},
                    "may_abstain": false},
      "arbitration": {"policy": "adversarial"},
      "seed": 0,
      "output": {"trace": "trace.json", "summary": "summary.json"}
    }

Unknown keys are rejected at every level.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

from . import model
from .adversary import strategy_from_dict
from .arbitration import policy_from_dict
from .errors import ConfigError, InvalidParameter

TOP_KEYS = {"system", "proposals", "byzantine", "arbitration", "seed", "output"}
SYSTEM_KEYS = {"n", "p", "r", "f", "value_domain"}
BYZ_KEYS = {"ids", "strategy", "may_abstain"}
OUTPUT_KEYS = {"trace", "summary"}
DEFAULT_OUTPUT = {"trace": "trace.json", "summary": "summary.json"}


def dumps(obj: Any) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_json(path: Path, obj: Any) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def _reject_unknown(section: Mapping, allowed: set, prefix: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key {prefix}{key!r}", key=f"{prefix}{key}")


def _int(section: Mapping, key: str, prefix: str) -> int:
    if key not in section:
        raise ConfigError(f"missing key {prefix}{key!r}", key=f"{prefix}{key}")
    v = section[key]
    if not isinstance(v, int) or isinstance(v, bool):
        raise ConfigError(f"{prefix}{key} must be an integer, got {v!r}", key=f"{prefix}{key}")
    return v


def config_from_dict(doc: Mapping) -> tuple[model.ValidatedConfig, dict]:
    """Parse and validate an experiment document; returns (config, output section)."""
    if not isinstance(doc, Mapping):
        raise ConfigError("experiment file must hold a JSON object", key="")
    _reject_unknown(doc, TOP_KEYS, "")
    for required in ("system", "proposals"):
        if required not in doc:
            raise ConfigError(f"missing key {required!r}", key=required)

    system = doc["system"]
    if not isinstance(system, Mapping):
        raise ConfigError("'system' must be an object", key="system")
    _reject_unknown(system, SYSTEM_KEYS, "system.")
    n, p, r, f = (_int(system, k, "system.") for k in ("n", "p", "r", "f"))
    domain = system.get("value_domain")
    if not isinstance(domain, list) or not domain:
        raise ConfigError("system.value_domain must be a non-empty list", key="system.value_domain")

    raw_props = doc["proposals"]
    if not isinstance(raw_props, Mapping):
        raise ConfigError("'proposals' must map process ids to values", key="proposals")
    proposals = {}
    for k, v in raw_props.items():
        try:
            proposals[int(k)] = v
        except ValueError:
            raise ConfigError(f"proposal key {k!r} is not a process id", key=f"proposals.{k}") from None

    byz = doc.get("byzantine", {})
    if not isinstance(byz, Mapping):
        raise ConfigError("'byzantine' must be an object", key="byzantine")
    _reject_unknown(byz, BYZ_KEYS, "byzantine.")
    ids = byz.get("ids", [])
    if not isinstance(ids, list) or not all(isinstance(i, int) for i in ids):
        raise ConfigError("byzantine.ids must be a list of integers", key="byzantine.ids")
    strategy = None
    if byz.get("strategy") is not None:
        try:
            strategy = strategy_from_dict(byz["strategy"])
        except InvalidParameter as exc:
            raise ConfigError(str(exc), key="byzantine.strategy") from None
    may_abstain = byz.get("may_abstain", False)
    if not isinstance(may_abstain, bool):
        raise ConfigError("byzantine.may_abstain must be a boolean", key="byzantine.may_abstain")
    if ids and strategy is None:
        raise ConfigError("Byzantine processes need a strategy", key="byzantine.strategy")

    arbitration = None
    if "arbitration" in doc:
        try:
            arbitration = policy_from_dict(doc["arbitration"])
        except InvalidParameter as exc:
            raise ConfigError(str(exc), key="arbitration") from None
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer", key="seed")

    output = dict(DEFAULT_OUTPUT)
    if "output" in doc:
        if not isinstance(doc["output"], Mapping):
            raise ConfigError("'output' must be an object", key="output")
        _reject_unknown(doc["output"], OUTPUT_KEYS, "output.")
        output.update(doc["output"])

    cfg = model.SystemConfig(
        n=n,
        p=p,
        r=r,
        f=f,
        value_domain=tuple(domain),
        proposals=proposals,
        byzantine_ids=frozenset(ids),
        adversary=strategy,
        arbitration=arbitration,
        byzantine_may_abstain=may_abstain,
        seed=seed,
    )
    try:
        return model.validate_config(cfg), output
    except InvalidParameter as exc:
        raise ConfigError(str(exc), key=exc.key or "system") from None


def load_experiment(path) -> tuple[model.ValidatedConfig, dict]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})", key="") from None
    return config_from_dict(doc)


def config_to_dict(cfg: model.ValidatedConfig) -> dict:
    c = cfg.config
    d = {
        "system": {"n": c.n, "p": c.p, "r": c.r, "f": c.f, "value_domain": list(c.value_domain)},
        "proposals": {str(pid): v for pid, v in sorted(c.proposals.items())},
        "byzantine": {
            "ids": sorted(c.byzantine_ids),
            "strategy": c.adversary.to_dict() if c.adversary is not None else None,
            "may_abstain": c.byzantine_may_abstain,
        },
        "seed": c.seed,
    }
    if c.arbitration is not None:
        d["arbitration"] = c.arbitration.to_dict()
    return d
