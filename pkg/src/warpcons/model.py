"""System parameters, derived quantities and configuration validation.

Processes are numbered ``0..n-1`` and grouped into contiguous warps of ``p``
processes (the last warp may be partial).  ``None`` is the NULL value
throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Mapping

from .errors import InvalidParameter

NULL = None

# Observed range of decision_phase_bound(n, p, r) * p^2 * r / n^2 over
# n in [p, 1024], p in {1, 2, 4, 8}, r in {1, 2, 4}.  Recomputed by
# tests/test_model.py; update both together.
RATIO_SWEEP_P = (1, 2, 4, 8)
RATIO_SWEEP_R = (1, 2, 4)
RATIO_BOUNDS = (Fraction(1), Fraction(256, 27))


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def warp_count(n: int, p: int) -> int:
    return ceil_div(n, p)


def warp_of(pid: int, p: int) -> int:
    return pid // p


def warp_members(warp: int, n: int, p: int) -> range:
    return range(warp * p, min(n, (warp + 1) * p))


def resilience_limit(n: int, p: int, vc_size: int) -> int:
    """Largest integer f with f < n / ((vc_size + 1) * p), or 0 if none."""
    if n < 1 or p < 1 or vc_size < 1:
        raise InvalidParameter("resilience_limit needs n, p, vc_size >= 1")
    denom = (vc_size + 1) * p
    # largest integer strictly below n / denom
    return max(0, ceil_div(n, denom) - 1)


def read_phase_cost(n: int, p: int, r: int, length: int) -> int:
    """Phases elapsed while one process reads ``length`` values, r per access."""
    if min(n, p, r, length) < 1 or length > n:
        raise InvalidParameter("read_phase_cost needs all arguments >= 1 and length <= n")
    return warp_count(n, p) * ceil_div(length, r)


def decision_phase_bound(n: int, p: int, r: int) -> int:
    """0-indexed phase at which the last warp decides under round-robin scheduling."""
    if min(n, p, r) < 1:
        raise InvalidParameter("decision_phase_bound needs n, p, r >= 1")
    w = warp_count(n, p)
    return (w - 1) + w * ceil_div(w, r)


def decision_phase_of(pid: int, n: int, p: int, r: int) -> int:
    """Exact phase at which a correct process decides when it starts on its first access."""
    w = warp_count(n, p)
    return warp_of(pid, p) + w * ceil_div(w, r)


def theta_ratio(n: int, p: int, r: int) -> Fraction:
    """decision_phase_bound scaled by p^2 r / n^2."""
    return Fraction(decision_phase_bound(n, p, r) * p * p * r, n * n)


@dataclass(frozen=True)
class SystemConfig:
    n: int
    p: int
    r: int
    f: int
    value_domain: tuple[int, ...]
    proposals: Mapping[int, int]
    byzantine_ids: frozenset[int] = frozenset()
    adversary: Any = None
    arbitration: Any = None
    byzantine_may_abstain: bool = False
    seed: int = 0


@dataclass(frozen=True)
class ValidatedConfig:
    config: SystemConfig
    warp_count: int
    correct_ids: tuple[int, ...]
    correct_values: frozenset[int]
    resilience_limit: int
    within_resilience: bool

    @property
    def n(self) -> int:
        return self.config.n

    @property
    def p(self) -> int:
        return self.config.p

    @property
    def r(self) -> int:
        return self.config.r

    @property
    def f(self) -> int:
        return self.config.f

    @property
    def byzantine_ids(self) -> frozenset[int]:
        return self.config.byzantine_ids

    @property
    def vc_size(self) -> int:
        return len(self.correct_values)

    def is_correct(self, pid: int) -> bool:
        return pid not in self.config.byzantine_ids


def correct_value_set(cfg: SystemConfig) -> frozenset[int]:
    return frozenset(v for pid, v in cfg.proposals.items() if pid not in cfg.byzantine_ids)


def validate_config(cfg: SystemConfig) -> ValidatedConfig:
    if not isinstance(cfg.n, int) or cfg.n < 1:
        raise InvalidParameter(f"n must be >= 1, got {cfg.n!r}", key="system.n")
    if not 1 <= cfg.p <= cfg.n:
        raise InvalidParameter(f"p must satisfy 1 <= p <= n, got p={cfg.p}, n={cfg.n}", key="system.p")
    if not 1 <= cfg.r <= cfg.n:
        raise InvalidParameter(f"r must satisfy 1 <= r <= n, got r={cfg.r}, n={cfg.n}", key="system.r")
    if not 0 <= cfg.f < cfg.n:
        raise InvalidParameter(f"f must satisfy 0 <= f < n, got f={cfg.f}, n={cfg.n}", key="system.f")
    if not cfg.value_domain:
        raise InvalidParameter("value_domain must be non-empty", key="system.value_domain")
    for v in cfg.value_domain:
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            raise InvalidParameter(
                f"value_domain entries must be non-negative integers, got {v!r}", key="system.value_domain"
            )
    if len(cfg.byzantine_ids) != cfg.f:
        raise InvalidParameter(
            f"byzantine_ids has {len(cfg.byzantine_ids)} entries but f={cfg.f}", key="byzantine.ids"
        )
    for pid in cfg.byzantine_ids:
        if not 0 <= pid < cfg.n:
            raise InvalidParameter(f"byzantine id {pid} out of range [0, {cfg.n})", key="byzantine.ids")

    if cfg.f > 0 and cfg.adversary is None:
        raise InvalidParameter("Byzantine processes need a strategy", key="byzantine.strategy")

    domain = set(cfg.value_domain)
    correct_ids = tuple(pid for pid in range(cfg.n) if pid not in cfg.byzantine_ids)
    for pid in cfg.proposals:
        if pid in cfg.byzantine_ids or not 0 <= pid < cfg.n:
            raise InvalidParameter(
                f"proposal given for process {pid}, which is not a correct process", key=f"proposals.{pid}"
            )
    for pid in correct_ids:
        if pid not in cfg.proposals:
            raise InvalidParameter(f"correct process {pid} has no proposal", key=f"proposals.{pid}")
        if cfg.proposals[pid] not in domain:
            raise InvalidParameter(
                f"proposal {cfg.proposals[pid]!r} of process {pid} is outside the value domain",
                key=f"proposals.{pid}",
            )

    vc = correct_value_set(cfg)
    limit = resilience_limit(cfg.n, cfg.p, len(vc))
    validated = ValidatedConfig(
        config=cfg,
        warp_count=warp_count(cfg.n, cfg.p),
        correct_ids=correct_ids,
        correct_values=vc,
        resilience_limit=limit,
        within_resilience=cfg.f <= limit,
    )
    check = getattr(cfg.adversary, "validate", None)
    if check is not None:
        try:
            check(validated)
        except InvalidParameter as exc:
            if exc.key is None:
                exc.key = "byzantine.strategy"
            raise
    return validated


def make_config(
    n: int,
    p: int,
    r: int,
    proposals: Mapping[int, int],
    byzantine_ids=(),
    *,
    value_domain=None,
    adversary=None,
    arbitration=None,
    byzantine_may_abstain: bool = False,
    seed: int = 0,
) -> ValidatedConfig:
    """Build and validate a config; the domain defaults to the proposed values."""
    byz = frozenset(byzantine_ids)
    if value_domain is None:
        value_domain = tuple(sorted(set(proposals.values())))
    return validate_config(
        SystemConfig(
            n=n,
            p=p,
            r=r,
            f=len(byz),
            value_domain=tuple(value_domain),
            proposals=dict(proposals),
            byzantine_ids=byz,
            adversary=adversary,
            arbitration=arbitration,
            byzantine_may_abstain=byzantine_may_abstain,
            seed=seed,
        )
    )

