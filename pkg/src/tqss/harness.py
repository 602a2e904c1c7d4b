"""Monte Carlo trial runner.

Trial i draws from ``make_rng(child_seed(master_seed, i))``, so a plan yields
the same summary whether trials run serially or across a process pool, and
in whatever order they complete. Aggregates are integer sums.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Sequence, TextIO

from .adversary import (
    AttackKind,
    AttackModel,
    AttackOutcome,
    ChannelConfig,
    detection_probability_theoretical,
    dishonest_premature_measure,
    forged_result_attack,
    intercept_resend_attack,
    per_decoy_error_theoretical,
    premature_measure_exact,
    song_baseline_run,
)
from .errors import ConfigError
from .protocol import ProtocolConfig, run_protocol
from .seeding import child_seed, make_rng

DEFAULT_TRIALS = 10_000
SIGMA_TOLERANCE = 3.0

CSV_FIELDS = ["model", "d", "t", "n", "m", "trial", "detected", "recovered", "secret", "match"]


@dataclass(frozen=True)
class TrialPlan:
    base_config: ProtocolConfig | ChannelConfig
    attack: AttackModel = AttackModel()
    trials: int = DEFAULT_TRIALS
    master_seed: int = 0
    subset: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError(f"need at least one trial, got {self.trials}")
        if isinstance(self.base_config, ChannelConfig):
            if self.attack.kind is not AttackKind.INTERCEPT_RESEND:
                raise ConfigError("a channel-only config supports only the intercept-resend model")
            return
        subset = self.base_config.check_subset(self.subset or self.base_config.default_subset())
        object.__setattr__(self, "subset", subset)
        self.attack.validate(self.base_config, subset)

    @property
    def event(self) -> str:
        """What a 'success' counts for this attack model."""
        if self.attack.kind in (AttackKind.INTERCEPT_RESEND, AttackKind.FORGED_RESULT):
            return "detected"
        return "secret_recovered"


@dataclass(frozen=True)
class StatsSummary:
    model: str
    event: str
    trials: int
    successes: int
    detection_count: int
    empirical_rate: float
    confidence_interval_95: tuple[float, float]
    theoretical_rate: float | None
    within_tolerance: bool | None
    decoy_errors: int = 0
    decoys_checked: int = 0
    per_decoy_error_rate: float | None = None
    per_decoy_theoretical: float | None = None

    def to_dict(self) -> dict[str, Any]:
        out = dict(self.__dict__)
        out["confidence_interval_95"] = list(self.confidence_interval_95)
        return out


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    if trials < 1 or not 0 <= successes <= trials:
        raise ValueError(f"invalid counts {successes}/{trials}")
    p = successes / trials
    z2 = z * z
    denom = 1 + z2 / trials
    centre = (p + z2 / (2 * trials)) / denom
    half = z / denom * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials))
    low, high = max(0.0, centre - half), min(1.0, centre + half)
    return min(low, p), max(high, p)


def within_sigma(successes: int, trials: int, p: float, k: float = SIGMA_TOLERANCE) -> bool:
    """|successes/trials - p| <= k binomial sigmas; exact match required when p is 0 or 1."""
    sigma = math.sqrt(p * (1 - p) / trials)
    diff = abs(successes / trials - p)
    if sigma == 0:
        return diff == 0
    return diff <= k * sigma


def theoretical_rate(plan: TrialPlan) -> float | None:
    cfg = plan.base_config
    kind = plan.attack.kind
    if kind is AttackKind.NONE:
        return 1.0
    if kind is AttackKind.INTERCEPT_RESEND:
        return detection_probability_theoretical(cfg.d, cfg.m)
    if kind is AttackKind.SONG_BASELINE:
        return 1.0 / cfg.d
    if kind is AttackKind.FORGED_RESULT:
        return 0.0 if plan.attack.forged == cfg.secret else 1.0
    # dishonest-measure: shadows always sum to the secret, so any split gives the same rate
    shadows = [0] * (cfg.t - 1) + [cfg.secret]
    wire = plan.subset.index(plan.attack.target) if plan.attack.target is not None else cfg.t - 1
    return float(premature_measure_exact(cfg.d, wire, shadows)[cfg.secret])


def run_one(plan: TrialPlan, index: int) -> AttackOutcome:
    rng = make_rng(child_seed(plan.master_seed, index))
    cfg = plan.base_config
    attack = plan.attack
    kind = attack.kind
    if kind is AttackKind.INTERCEPT_RESEND:
        return intercept_resend_attack(cfg, rng, plan.subset, attack.target)
    if kind is AttackKind.DISHONEST_MEASURE:
        j = attack.target if attack.target is not None else plan.subset[-1]
        return dishonest_premature_measure(cfg, j, rng, plan.subset)
    if kind is AttackKind.FORGED_RESULT:
        return forged_result_attack(cfg, attack.forged, rng, plan.subset)
    if kind is AttackKind.SONG_BASELINE:
        return song_baseline_run(cfg, rng, plan.subset)
    _, result = run_protocol(cfg, plan.subset, rng=rng)
    return AttackOutcome(
        detected=not result.hash_ok,
        aborted=result.aborted,
        recovered=None if result.a0_prime is None else result.a0_prime.value,
        secret=cfg.secret,
    )


def _run_chunk(plan: TrialPlan, indices: Sequence[int]) -> list[tuple[int, AttackOutcome]]:
    return [(i, run_one(plan, i)) for i in indices]


def run_outcomes(plan: TrialPlan, workers: int = 1) -> list[AttackOutcome]:
    """All trial outcomes in trial-index order."""
    indices = range(plan.trials)
    if workers <= 1:
        return [run_one(plan, i) for i in indices]
    chunks = [list(indices[w::workers]) for w in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_run_chunk, [plan] * workers, chunks)
        pairs = [p for part in parts for p in part]
    pairs.sort(key=lambda p: p[0])
    return [o for _, o in pairs]


def summarize(plan: TrialPlan, outcomes: Sequence[AttackOutcome]) -> StatsSummary:
    event = plan.event
    if event == "detected":
        successes = sum(o.detected for o in outcomes)
    else:
        successes = sum(o.match and not o.detected for o in outcomes)
    detections = sum(o.detected for o in outcomes)
    n = len(outcomes)
    theo = theoretical_rate(plan)
    errors = sum(o.per_decoy_errors for o in outcomes)
    checked = sum(o.decoys_checked for o in outcomes)
    is_ir = plan.attack.kind is AttackKind.INTERCEPT_RESEND
    return StatsSummary(
        model=plan.attack.kind.value,
        event=event,
        trials=n,
        successes=successes,
        detection_count=detections,
        empirical_rate=successes / n,
        confidence_interval_95=wilson_interval(successes, n),
        theoretical_rate=theo,
        within_tolerance=None if theo is None else within_sigma(successes, n, theo),
        decoy_errors=errors,
        decoys_checked=checked,
        per_decoy_error_rate=errors / checked if checked else None,
        per_decoy_theoretical=per_decoy_error_theoretical(plan.base_config.d) if is_ir else None,
    )


def run_trials(plan: TrialPlan, workers: int = 1) -> StatsSummary:
    return summarize(plan, run_outcomes(plan, workers))


def write_csv(plan: TrialPlan, outcomes: Sequence[AttackOutcome], fh: TextIO) -> None:
    cfg = plan.base_config
    w = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for i, o in enumerate(outcomes):
        w.writerow({
            "model": plan.attack.kind.value,
            "d": cfg.d,
            "t": cfg.t,
            "n": getattr(cfg, "n", ""),
            "m": cfg.m,
            "trial": i,
            "detected": int(o.detected),
            "recovered": "" if o.recovered is None else o.recovered,
            "secret": o.secret if isinstance(cfg, ProtocolConfig) else "",
            "match": int(o.match),
        })
