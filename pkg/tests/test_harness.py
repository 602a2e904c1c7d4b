import io
import random

import pytest

from tqss.adversary import AttackModel, ChannelConfig
from tqss.errors import ConfigError
from tqss.harness import (
    CSV_FIELDS,
    TrialPlan,
    run_outcomes,
    run_trials,
    summarize,
    wilson_interval,
    within_sigma,
    write_csv,
)
from tqss.protocol import ProtocolConfig
from tqss.seeding import child_seed, make_rng


def test_child_seed_stable():
    # frozen: SHA-256("tqss-child|0|0")[:8]
    import hashlib

    assert child_seed(0, 0) == int.from_bytes(hashlib.sha256(b"tqss-child|0|0").digest()[:8], "big")
    assert child_seed(7, 3) == child_seed(7, 3)
    assert len({child_seed(1, i) for i in range(1000)}) == 1000
    assert make_rng(5).integers(0, 1 << 30) == make_rng(5).integers(0, 1 << 30)


def test_wilson_zero_and_full():
    low, high = wilson_interval(0, 100)
    assert low == 0.0 and high == pytest.approx(0.0369948, abs=1e-6)
    low, high = wilson_interval(100, 100)
    assert high == 1.0 and low == pytest.approx(1 - 0.0369948, abs=1e-6)


def test_wilson_symmetric_at_half():
    low, high = wilson_interval(50, 100)
    assert (low + high) / 2 == pytest.approx(0.5, abs=1e-12)
    assert low == pytest.approx(0.4038298, abs=1e-6)


def test_wilson_matches_reference_at_exact_z():
    # frozen from statsmodels proportion_confint(method="wilson"), z = Phi^-1(0.975)
    z = 1.959963984540054
    assert wilson_interval(50, 100, z) == pytest.approx((0.4038315303659956, 0.5961684696340044), abs=1e-12)
    assert wilson_interval(0, 100, z) == pytest.approx((0.0, 0.03699349820698569), abs=1e-12)
    assert wilson_interval(100, 100, z) == pytest.approx((0.9630065017930143, 1.0), abs=1e-12)


def test_wilson_contains_estimate():
    for k in range(0, 31):
        low, high = wilson_interval(k, 30)
        assert low <= k / 30 <= high
    with pytest.raises(ValueError):
        wilson_interval(5, 4)


def test_within_sigma():
    assert within_sigma(100, 100, 1.0)
    assert not within_sigma(99, 100, 1.0)
    assert within_sigma(2050, 10_000, 0.2)
    assert not within_sigma(2200, 10_000, 0.2)


def test_honest_plan():
    plan = TrialPlan(ProtocolConfig(n=3, t=2, secret=4, d=5, m=2), trials=200, master_seed=3)
    s = run_trials(plan)
    assert s.empirical_rate == 1.0 and s.successes == 200
    assert s.confidence_interval_95[1] == 1.0
    assert s.within_tolerance


def test_baseline_plan():
    plan = TrialPlan(ProtocolConfig(n=3, t=2, secret=1, d=5), AttackModel("song-baseline"), trials=2000)
    s = run_trials(plan)
    assert s.theoretical_rate == 0.2
    assert s.within_tolerance


def test_forged_plan_counts_detection():
    plan = TrialPlan(ProtocolConfig(n=3, t=2, secret=1, d=5), AttackModel("forged-result", forged=0), trials=20)
    s = run_trials(plan)
    assert s.event == "detected" and s.successes == 20 and s.theoretical_rate == 1.0


def test_dishonest_plan_theory_is_one_over_d():
    plan = TrialPlan(ProtocolConfig(n=4, t=3, secret=2, d=5), AttackModel("dishonest-measure", target=2), trials=300)
    s = run_trials(plan)
    assert s.theoretical_rate == pytest.approx(0.2, abs=1e-12)


def test_intercept_plan_reports_decoy_errors():
    plan = TrialPlan(ChannelConfig(3, 2), AttackModel("intercept-resend"), trials=500)
    s = run_trials(plan)
    assert s.decoys_checked == 1000
    assert s.per_decoy_theoretical == pytest.approx(1 / 3)
    with pytest.raises(ConfigError):
        TrialPlan(ChannelConfig(3, 2), AttackModel("song-baseline"))


def test_plan_validation():
    with pytest.raises(ConfigError):
        TrialPlan(ProtocolConfig(n=3, t=2, secret=1, d=5), trials=0)
    with pytest.raises(ConfigError):
        TrialPlan(ProtocolConfig(n=3, t=2, secret=1, d=5), subset=(1, 2, 3))


def test_parallel_and_serial_agree():
    plan = TrialPlan(ProtocolConfig(n=3, t=2, secret=1, d=5, m=3), AttackModel("intercept-resend"), trials=60, master_seed=9)
    assert run_trials(plan, workers=1) == run_trials(plan, workers=3)


def test_aggregation_order_independent():
    plan = TrialPlan(ProtocolConfig(n=3, t=2, secret=1, d=5), AttackModel("dishonest-measure"), trials=100, master_seed=4)
    outcomes = run_outcomes(plan)
    shuffled = list(outcomes)
    random.Random(0).shuffle(shuffled)
    assert summarize(plan, outcomes) == summarize(plan, shuffled)


def test_csv_rows():
    plan = TrialPlan(ProtocolConfig(n=3, t=2, secret=1, d=5), AttackModel("song-baseline"), trials=5)
    buf = io.StringIO()
    write_csv(plan, run_outcomes(plan), buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(CSV_FIELDS)
    assert len(lines) == 6
    first = dict(zip(CSV_FIELDS, lines[1].split(",")))
    assert first["model"] == "song-baseline" and first["d"] == "5" and first["trial"] == "0"
    assert first["match"] == str(int(first["recovered"] == first["secret"]))
