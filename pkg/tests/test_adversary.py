import cmath
import math

import numpy as np
import pytest

import oracles
from tqss import qudit
from tqss.adversary import (
    AttackModel,
    ChannelConfig,
    constraint_matrix,
    detection_probability_theoretical,
    dishonest_premature_measure,
    entangle_measure_nullspace,
    forged_result_attack,
    intercept_resend_attack,
    per_decoy_error_theoretical,
    premature_measure_exact,
    song_baseline_run,
    song_baseline_state,
)
from tqss.errors import ConfigError, InvalidArgument
from tqss.protocol import ProtocolConfig, run_protocol
from tqss.seeding import make_rng


def sigma3(p, n):
    return 3 * math.sqrt(p * (1 - p) / n)


# intercept and resend


@pytest.mark.parametrize("d, m, expected", [(3, 1, 1 / 3), (2, 1, 0.25), (3, 10, 1 - (2 / 3) ** 10)])
def test_detection_probability_theoretical(d, m, expected):
    assert detection_probability_theoretical(d, m) == pytest.approx(expected, abs=1e-15)


def test_detection_probability_monotone():
    vals = [detection_probability_theoretical(5, m) for m in range(1, 40)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert detection_probability_theoretical(5, 200) > 1 - 1e-12
    with pytest.raises(InvalidArgument):
        detection_probability_theoretical(3, 0)


def test_per_decoy_error_d3_m1():
    cfg = ProtocolConfig(n=2, t=2, secret=1, d=3, m=1)
    n = 10_000
    errors = 0
    for i in range(n):
        out = intercept_resend_attack(cfg, make_rng(i))
        assert out.decoys_checked == 1
        errors += out.per_decoy_errors
        assert out.detected == (out.per_decoy_errors > 0)
        assert out.aborted == out.detected
    p = per_decoy_error_theoretical(3)
    assert p == pytest.approx(1 / 3)
    assert abs(errors / n - p) <= sigma3(p, n)


def test_intercept_is_logged_and_undetected_runs_reach_reconstruction():
    cfg = ProtocolConfig(n=3, t=3, secret=2, d=5, m=1)
    reached = 0
    for i in range(200):
        out = intercept_resend_attack(cfg, make_rng(i), target=3)
        if not out.detected:
            reached += 1
            assert out.recovered is not None
        else:
            assert out.recovered is None
    assert reached > 0


def test_channel_config_d2():
    n = 4000
    det = sum(intercept_resend_attack(ChannelConfig(2, 2), make_rng(i)).detected for i in range(n))
    p = detection_probability_theoretical(2, 2)
    assert abs(det / n - p) <= sigma3(p, n)
    with pytest.raises(ConfigError):
        ChannelConfig(4, 2)


# entangle and measure


@pytest.mark.parametrize("d", [2, 3, 5, 7, 11, 13])
def test_nullspace_matches_gauss_oracle(d):
    w = cmath.exp(2j * math.pi / d)
    A = [[w ** (((j - p) * k) % d) for k in range(d)] for j in range(d) for p in range(d) if p != j]
    basis = oracles.nullspace_gauss(A)
    assert len(basis) == 1
    v = basis[0] / basis[0][0]
    assert np.allclose(v, np.ones(d), atol=1e-9)

    report = entangle_measure_nullspace(d)
    assert report.nullspace_dimension == 1
    assert report.is_uniform_solution
    assert report.residual < 1e-10
    assert np.allclose(constraint_matrix(d), np.array(A), atol=1e-12)


def test_nullspace_d2_by_hand():
    # rows (1, -1) and (1, -1): v0 = v1
    assert np.allclose(constraint_matrix(2), [[1, -1], [1, -1]])


@pytest.mark.parametrize("d", [4, 17])
def test_nullspace_rejects(d):
    with pytest.raises(InvalidArgument):
        entangle_measure_nullspace(d)


# premature measurement


@pytest.mark.parametrize("d, shadows, wire", [(3, [1, 2], 1), (3, [0, 0], 0), (5, [1, 2, 3], 2), (2, [1, 0], 0)])
def test_premature_exact_matches_kron_oracle(d, shadows, wire):
    dist = premature_measure_exact(d, wire, shadows)
    for a0 in range(d):
        assert dist[a0] == pytest.approx(oracles.premature_success(d, shadows, wire, a0), abs=1e-12)
    assert np.allclose(dist, 1 / d)


def test_premature_d2_t2_joint_distribution_is_product():
    d, shadows = 2, [1, 0]
    ghz = qudit.ghz_state(d, 2)
    for i in range(d):
        branch = qudit.basis_state(d, [i, i])
        assert ghz.marginal(0)[i] == pytest.approx(0.5)
        for w, s in enumerate(shadows):
            branch = qudit.apply_pauli(qudit.apply_qft(branch, w), w, s, 0)
        # product of QFT'd basis states: every joint outcome has probability 1/4
        assert np.allclose(branch.probabilities(), 0.25, atol=1e-15)
        ref = oracles.ket(d, [i, i])
        for w, s in enumerate(shadows):
            ref = oracles.embed(oracles.shift_phase(d, s, 0) @ oracles.qft(d), w, 2, d) @ ref
        assert np.allclose(branch.amplitudes, ref, atol=1e-12)


def test_premature_hash_rejects_every_mismatch():
    cfg = ProtocolConfig(n=2, t=2, secret=1, d=3, m=2)
    matches = 0
    n = 3000
    for i in range(n):
        out = dishonest_premature_measure(cfg, 2, make_rng(i))
        assert out.detected == (out.recovered != cfg.secret)
        matches += out.match
    assert abs(matches / n - 1 / 3) <= sigma3(1 / 3, n)


def test_premature_target_must_reconstruct():
    cfg = ProtocolConfig(n=3, t=2, secret=1, d=5)
    with pytest.raises(ConfigError):
        dishonest_premature_measure(cfg, 3, make_rng(0), subset=[1, 2])


# forged result


def test_forged_result_all_values():
    cfg = ProtocolConfig(n=3, t=2, secret=2, d=5)
    detected = []
    for f in range(5):
        out = forged_result_attack(cfg, f, make_rng(f))
        assert out.recovered == f
        assert out.secret_leaked
        detected.append(out.detected)
    assert detected == [True, True, False, True, True]


def test_forged_value_range():
    with pytest.raises(ConfigError):
        forged_result_attack(ProtocolConfig(n=3, t=2, secret=2, d=5), 5, make_rng(0))


# predecessor scheme


def test_baseline_state_matches_closed_form():
    d = 3
    for shadows in ([0, 0], [1, 2], [2, 2], [1, 0]):
        S = sum(shadows)
        state = song_baseline_state(d, shadows)
        w = cmath.exp(2j * math.pi / d)
        for k1 in range(d):
            for k in range(d):
                expected = w ** (((S - k1) * k) % d) / d
                assert state.amplitude(k1, k) == pytest.approx(expected, abs=1e-12)
        assert np.allclose(state.marginal(0), 1 / d)


def test_baseline_state_stays_entangled():
    state = song_baseline_state(5, [3, 4])
    support = {state.digits(i)[0] for i, a in enumerate(state.amplitudes) if abs(a) > 1e-12}
    assert len(support) > 1
    # reduced state of wire 0 is mixed: purity 1/d
    psi = state.amplitudes.reshape(5, 5)
    rho = psi @ psi.conj().T
    assert np.trace(rho @ rho).real == pytest.approx(1 / 5)


def test_song_baseline_fails_where_proposed_succeeds():
    cfg = ProtocolConfig(n=2, t=2, secret=2, d=3, m=1)
    n = 3000
    hits = sum(song_baseline_run(cfg, make_rng(i)).match for i in range(n))
    assert abs(hits / n - 1 / 3) <= sigma3(1 / 3, n)
    for i in range(200):
        _, res = run_protocol(cfg, rng=make_rng(i))
        assert res.a0_prime.value == 2


def test_attack_model_validation():
    cfg = ProtocolConfig(n=3, t=2, secret=1, d=5)
    with pytest.raises(InvalidArgument):
        AttackModel("forged-result")
    with pytest.raises(ConfigError):
        AttackModel("dishonest-measure", target=3).validate(cfg, (1, 2))
    with pytest.raises(ValueError):
        AttackModel("trojan-horse")
