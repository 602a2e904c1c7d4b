"""Attack models against the scheme, and the predecessor scheme it repairs.

Outsider attacks hook the quantum channel; participant attacks hook the
transform step or the final announcement. The man-in-the-middle case is the
intercept-resend model (a forger who doesn't know the decoy positions is
caught the same way), and collusion of fewer than t participants is a purely
classical question answered in :mod:`tqss.field`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import qudit
from .errors import ConfigError, InvalidArgument
from .field import FieldElement, compute_shadow, distribute_shares, is_prime, sample_polynomial
from .protocol import (
    Adversary,
    CheckResult,
    ParticleMarker,
    ProtocolConfig,
    ProtocolRun,
    SequencePacket,
    actor,
    build_decoy_sequence,
    eavesdrop_check,
    insert_particle,
)
from .qudit import Basis, QuditState


class AttackKind(str, enum.Enum):
    NONE = "none"
    INTERCEPT_RESEND = "intercept-resend"
    DISHONEST_MEASURE = "dishonest-measure"
    FORGED_RESULT = "forged-result"
    SONG_BASELINE = "song-baseline"


@dataclass(frozen=True)
class AttackModel:
    kind: AttackKind = AttackKind.NONE
    target: int | None = None
    forged: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", AttackKind(self.kind))
        if self.kind is AttackKind.FORGED_RESULT and self.forged is None:
            raise InvalidArgument("forged-result attack needs a forged value")

    def validate(self, config: ProtocolConfig, subset: Sequence[int]) -> None:
        if self.target is not None and self.target not in subset:
            raise ConfigError(f"target participant {self.target} is not in reconstruction subset {tuple(subset)}")
        if self.forged is not None and not 0 <= self.forged < config.d:
            raise ConfigError(f"forged value {self.forged} is not in Z_{config.d}")


@dataclass(frozen=True)
class AttackOutcome:
    detected: bool
    aborted: bool
    recovered: int | None
    secret: int
    secret_leaked: bool = False
    per_decoy_errors: int = 0
    decoys_checked: int = 0

    @property
    def match(self) -> bool:
        return self.recovered is not None and self.recovered == self.secret


@dataclass(frozen=True)
class ChannelConfig:
    """Quantum-layer-only setting for the intercept-resend attack.

    Used where no Shamir layer exists (d = 2 leaves a single nonzero
    x-value), since decoy detection never touches the shares.
    """

    d: int
    m: int
    t: int = 2
    error_threshold: float = 0.0

    def __post_init__(self):
        if not is_prime(self.d):
            raise ConfigError(f"d={self.d} is not prime")
        if self.m < 1:
            raise ConfigError(f"need m >= 1, got {self.m}")
        if self.t < 2:
            raise ConfigError(f"need t >= 2, got {self.t}")


@dataclass(frozen=True)
class ConstraintReport:
    d: int
    nullspace_dimension: int
    is_uniform_solution: bool
    residual: float
    singular_values: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "nullspace_dimension": self.nullspace_dimension,
            "is_uniform_solution": self.is_uniform_solution,
            "residual": self.residual,
            "singular_values": list(self.singular_values),
        }


# -- intercept and resend --


def intercept_packet(
    packet: SequencePacket, register: QuditState, rng: np.random.Generator
) -> tuple[SequencePacket, QuditState]:
    """Measure every slot in a random basis and forward the collapsed states."""
    slots = []
    for slot in packet.slots:
        basis = Basis.FOURIER if rng.integers(0, 2) else Basis.COMPUTATIONAL
        if isinstance(slot, ParticleMarker):
            _, register = qudit.measure_in_basis(register, slot.wire, basis, rng)
            slots.append(slot)
        else:
            _, post = qudit.measure_in_basis(slot, 0, basis, rng)
            slots.append(post)
    return replace(packet, slots=tuple(slots)), register


class InterceptResend(Adversary):
    name = AttackKind.INTERCEPT_RESEND.value

    def __init__(self, target: int | None = None):
        self.target = target
        self.intercepted: int | None = None

    def on_transit(self, run: ProtocolRun, packet: SequencePacket) -> SequencePacket:
        target = self.target if self.target is not None else run.subset[1]
        if packet.sequence_id != target:
            return packet
        self.intercepted = target
        packet, run.state = intercept_packet(packet, run.state, run.rng)
        run.transcript.log("Eve", "intercept_resend", "quantum", sequence=target)
        return packet


def intercept_resend_channel(config: ChannelConfig, rng: np.random.Generator) -> AttackOutcome:
    register = qudit.ghz_state(config.d, config.t)
    decoys, recs = build_decoy_sequence(config.d, config.m, rng, sequence_id=2)
    packet, recs = insert_particle(decoys, recs, rng, wire=1)
    packet, register = intercept_packet(packet, register, rng)
    outcomes = [qudit.measure_in_basis(packet.slots[r.position], 0, r.label.kind, rng)[0] for r in recs]
    res = eavesdrop_check(recs, outcomes, config.error_threshold, rng)
    return AttackOutcome(
        detected=not res.passed, aborted=not res.passed, recovered=None, secret=0,
        per_decoy_errors=res.errors, decoys_checked=res.checked,
    )


def intercept_resend_attack(
    config: ProtocolConfig | ChannelConfig,
    rng: np.random.Generator,
    subset: Sequence[int] | None = None,
    target: int | None = None,
) -> AttackOutcome:
    if isinstance(config, ChannelConfig):
        return intercept_resend_channel(config, rng)
    eve = InterceptResend(target)
    run = ProtocolRun(config, subset, eve, rng)
    result = run.execute()
    check: CheckResult = run.checks[eve.intercepted]
    return AttackOutcome(
        detected=not check.passed,
        aborted=result.aborted,
        recovered=None if result.a0_prime is None else result.a0_prime.value,
        secret=config.secret,
        per_decoy_errors=check.errors,
        decoys_checked=check.checked,
    )


def detection_probability_theoretical(d: int, m: int) -> float:
    """1 - ((d+1)/(2d))^m: each decoy survives a random-basis measurement with probability (d+1)/(2d)."""
    if d < 2 or m < 1:
        raise InvalidArgument(f"need d >= 2 and m >= 1, got d={d}, m={m}")
    return 1.0 - ((d + 1) / (2 * d)) ** m


def per_decoy_error_theoretical(d: int) -> float:
    return (d - 1) / (2 * d)


# -- entangle and measure --


def constraint_matrix(d: int) -> np.ndarray:
    """Rows omega^{(j-p)k} over k, one per ordered pair p != j."""
    table = qudit.omega_table(d)
    k = np.arange(d)
    rows = [table[((j - p) * k) % d] for j in range(d) for p in range(d) if p != j]
    return np.array(rows)


def entangle_measure_nullspace(d: int, tol: float = 1e-10) -> ConstraintReport:
    """Solve the homogeneous system Eve faces to keep Fourier-basis decoys error-free.

    Each unknown a_kk|e_kk> is treated as a scalar; the constraints act the
    same way on every ancilla component so that loses nothing.
    """
    if not is_prime(d) or d > 13:
        raise InvalidArgument(f"need a prime d <= 13, got {d}")
    A = constraint_matrix(d)
    _, s, vh = np.linalg.svd(A)
    rank = int(np.sum(s > tol * max(1.0, s[0])))
    null = vh[rank:].conj()
    dim = null.shape[0]
    residual = float(np.max(np.abs(A @ null.T))) if dim else 0.0
    uniform = False
    if dim == 1:
        v = null[0]
        ones = np.ones(d) / np.sqrt(d)
        uniform = bool(abs(abs(np.vdot(ones, v)) - 1.0) < 1e-10)
    return ConstraintReport(d, dim, uniform, residual, tuple(float(x) for x in s))


# -- participant attacks --


class PrematureMeasure(Adversary):
    name = AttackKind.DISHONEST_MEASURE.value

    def __init__(self, participant: int):
        self.participant = participant
        self.observed: int | None = None

    def before_transform(self, run: ProtocolRun) -> None:
        wire = run.wire_of(self.participant)
        outcome, run.state = qudit.measure_computational(run.state, wire, run.rng)
        self.observed = outcome.value
        run.transcript.log(actor(self.participant), "premature_measure", "local", value=outcome.value)


def dishonest_premature_measure(
    config: ProtocolConfig, j: int, rng: np.random.Generator, subset: Sequence[int] | None = None
) -> AttackOutcome:
    subset = config.check_subset(subset if subset is not None else config.default_subset())
    if j not in subset:
        raise ConfigError(f"participant {j} is not in reconstruction subset {subset}")
    run = ProtocolRun(config, subset, PrematureMeasure(j), rng)
    result = run.execute()
    return AttackOutcome(
        detected=not result.hash_ok,
        aborted=result.aborted,
        recovered=None if result.a0_prime is None else result.a0_prime.value,
        secret=config.secret,
    )


def premature_measure_exact(d: int, wire: int, shadows: Sequence[int]) -> np.ndarray:
    """Exact distribution of the recovered value when the particle on ``wire`` is measured early.

    Branches over the early outcome and pushes each collapsed state through
    the honest transforms without sampling.
    """
    t = len(shadows)
    state = qudit.ghz_state(d, t)
    marginal = state.marginal(wire)
    dist = np.zeros(d)
    for i, p in enumerate(marginal):
        if p < 1e-15:
            continue
        psi = state.amplitudes.reshape(d**wire, d, -1).copy()
        mask = np.ones(d, dtype=bool)
        mask[i] = False
        psi[:, mask, :] = 0
        branch = QuditState(d, t, psi / np.sqrt(p))
        for wire, s in enumerate(shadows):
            branch = qudit.apply_qft(branch, wire)
            branch = qudit.apply_pauli(branch, wire, int(s) % d, 0)
        probs = branch.probabilities().reshape((d,) * t)
        for digits in np.ndindex(*probs.shape):
            dist[sum(digits) % d] += p * probs[digits]
    return dist


class ForgedResult(Adversary):
    name = AttackKind.FORGED_RESULT.value

    def __init__(self, forged: int):
        self.forged = forged

    def announce_result(self, run: ProtocolRun, a0_prime: FieldElement) -> FieldElement:
        run.transcript.log(actor(run.initiator), "forge", "local", read=a0_prime.value)
        return run.field(self.forged)


def forged_result_attack(
    config: ProtocolConfig, forged: FieldElement | int, rng: np.random.Generator, subset: Sequence[int] | None = None
) -> AttackOutcome:
    forged = int(forged)
    if not 0 <= forged < config.d:
        raise ConfigError(f"forged value {forged} is not in Z_{config.d}")
    run = ProtocolRun(config, subset, ForgedResult(forged), rng)
    result = run.execute()
    return AttackOutcome(
        detected=not result.hash_ok,
        aborted=result.aborted,
        recovered=None if result.a0_prime is None else result.a0_prime.value,
        secret=config.secret,
        # the forger read the true secret before lying about it
        secret_leaked=run.computed is not None and run.computed.value == config.secret,
    )


# -- predecessor scheme --


def song_baseline_state(d: int, shadows: Sequence[int]) -> QuditState:
    """GHZ, phase gate U_{0,s_r} on every wire, then inverse QFT on wire 0 only."""
    state = qudit.ghz_state(d, len(shadows))
    for wire, s in enumerate(shadows):
        state = qudit.apply_pauli(state, wire, 0, int(s) % d)
    return qudit.apply_inverse_qft(state, 0)


def song_baseline_run(
    config: ProtocolConfig, rng: np.random.Generator, subset: Sequence[int] | None = None
) -> AttackOutcome:
    subset = config.check_subset(subset if subset is not None else config.default_subset())
    poly = sample_polynomial(config.a0, config.t, rng)
    shares = distribute_shares(poly, config.public_xs())
    chosen = [shares[i - 1] for i in subset]
    xs = [sh.x for sh in chosen]
    shadows = [compute_shadow(sh, xs).s.value for sh in chosen]
    state = song_baseline_state(config.d, shadows)
    outcome, _ = qudit.measure_computational(state, 0, rng)
    return AttackOutcome(detected=False, aborted=False, recovered=outcome.value, secret=config.secret)
