"""The (t, n) threshold d-level QSS scheme, end to end.

A run walks through initialization, share distribution and the four
reconstruction steps (decoy-protected particle distribution, eavesdropping
check, local QFT + shift + measurement, classical summation with hash
verification). Every message is appended to a :class:`Transcript`.

The participant transform is QFT followed by the shift U_{s,0}. Applying the
shift first and the QFT second turns the shadows into phases that the
computational-basis measurement cannot see, so the sum of outcomes no longer
equals the secret.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from . import qudit
from .errors import CardinalityError, ConfigError, InvalidArgument, ModulusMismatch, QSSError
from .field import (
    FieldElement,
    PrimeModulus,
    Polynomial,
    Shadow,
    Share,
    compute_shadow,
    distribute_shares,
    is_prime,
    sample_polynomial,
    select_prime,
)
from .qudit import Basis, BasisLabel, MeasurementOutcome, QuditState
from .seeding import make_rng

TRANSCRIPT_SCHEMA = "qss-transcript/1"
DIGEST_SIZE = 32


@dataclass(frozen=True)
class ProtocolConfig:
    n: int
    t: int
    secret: int
    d: int | None = None
    m: int = 4
    error_threshold: float = 0.0
    master_seed: int = 0
    xs: tuple[int, ...] | None = None

    def __post_init__(self):
        if not isinstance(self.n, int) or not isinstance(self.t, int):
            raise ConfigError("n and t must be integers")
        if self.t < 2:
            raise ConfigError(f"threshold t must be >= 2, got {self.t}")
        if self.n < self.t:
            raise ConfigError(f"need t <= n, got t={self.t}, n={self.n}")
        d = self.d
        if isinstance(d, PrimeModulus):
            d = d.d
        if d is None:
            d = select_prime(self.n).d
        if not is_prime(int(d)):
            raise ConfigError(f"d={d} is not prime")
        object.__setattr__(self, "d", int(d))
        if self.n > self.d - 1:
            raise ConfigError(f"n={self.n} participants need d > n, got d={self.d}")
        if self.m < 1:
            raise ConfigError(f"need at least one decoy per sequence, got m={self.m}")
        if not 0.0 <= self.error_threshold <= 1.0:
            raise ConfigError(f"error_threshold must be in [0, 1], got {self.error_threshold}")
        secret = int(self.secret)
        if not 0 <= secret < self.d:
            raise ConfigError(f"secret {secret} is not in Z_{self.d}")
        object.__setattr__(self, "secret", secret)
        if self.xs is not None:
            xs = tuple(int(x) for x in self.xs)
            if len(xs) != self.n:
                raise ConfigError(f"need {self.n} x-values, got {len(xs)}")
            if len(set(x % self.d for x in xs)) != self.n or any(x % self.d == 0 for x in xs):
                raise ConfigError(f"x-values must be distinct and nonzero mod {self.d}: {xs}")
            object.__setattr__(self, "xs", xs)

    @property
    def field(self) -> PrimeModulus:
        return PrimeModulus(self.d)

    @property
    def a0(self) -> FieldElement:
        return self.field(self.secret)

    def public_xs(self) -> list[FieldElement]:
        xs = self.xs if self.xs is not None else range(1, self.n + 1)
        return [self.field(x) for x in xs]

    def default_subset(self) -> tuple[int, ...]:
        return tuple(range(1, self.t + 1))

    def check_subset(self, subset: Sequence[int]) -> tuple[int, ...]:
        subset = tuple(int(i) for i in subset)
        if len(subset) != self.t:
            raise ConfigError(f"reconstruction needs exactly t={self.t} participants, got {len(subset)}")
        if len(set(subset)) != len(subset):
            raise ConfigError(f"duplicate participants in {subset}")
        if not all(1 <= i <= self.n for i in subset):
            raise ConfigError(f"participants must be in 1..{self.n}, got {subset}")
        return subset

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        if out["xs"] is not None:
            out["xs"] = list(out["xs"])
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ProtocolConfig:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        if data.get("xs") is not None:
            data["xs"] = tuple(data["xs"])
        return cls(**data)


@dataclass(frozen=True)
class DecoyRecord:
    sequence_id: int
    position: int
    label: BasisLabel


@dataclass(frozen=True)
class ParticleMarker:
    """Slot holding a particle of the shared entangled register."""

    wire: int


@dataclass(frozen=True)
class SequencePacket:
    sequence_id: int
    slots: tuple[QuditState | ParticleMarker, ...]

    def __post_init__(self):
        markers = sum(isinstance(s, ParticleMarker) for s in self.slots)
        if markers != 1:
            raise InvalidArgument(f"packet must carry exactly one entangled particle, found {markers}")

    @property
    def particle_slot(self) -> int:
        return next(i for i, s in enumerate(self.slots) if isinstance(s, ParticleMarker))


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    error_rate: float
    errors: int
    checked: int
    receiver_declared: tuple[int, ...]
    sender_revealed: tuple[int, ...]


@dataclass
class Event:
    seq: int
    actor: str
    kind: str
    channel: str
    payload: dict[str, Any]


@dataclass
class Transcript:
    events: list[Event] = field(default_factory=list)

    def log(self, actor: str, kind: str, channel: str = "local", **payload) -> Event:
        ev = Event(len(self.events), actor, kind, channel, payload)
        self.events.append(ev)
        return ev

    def of_kind(self, kind: str) -> list[Event]:
        return [e for e in self.events if e.kind == kind]

    def to_dict(self) -> dict[str, Any]:
        return {"schema": TRANSCRIPT_SCHEMA, "events": [asdict(e) for e in self.events]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class ReconstructionResult:
    a0_prime: FieldElement | None
    hash_ok: bool
    aborted: bool
    abort_reason: str | None = None

    def __post_init__(self):
        if self.hash_ok and self.aborted:
            raise InvalidArgument("an aborted run cannot pass hash verification")

    def to_dict(self) -> dict[str, Any]:
        return {
            "a0_prime": None if self.a0_prime is None else self.a0_prime.value,
            "hash_ok": self.hash_ok,
            "aborted": self.aborted,
            "abort_reason": self.abort_reason,
        }


def actor(index: int) -> str:
    return f"Bob_{index}"


def build_decoy_sequence(
    d: int, m: int, rng: np.random.Generator, sequence_id: int = 0
) -> tuple[list[QuditState], list[DecoyRecord]]:
    if m < 1:
        raise InvalidArgument(f"need m >= 1 decoys, got {m}")
    kinds = rng.integers(0, 2, size=m)
    indices = rng.integers(0, d, size=m)
    states, records = [], []
    for pos, (kind, idx) in enumerate(zip(kinds, indices)):
        label = BasisLabel(Basis.FOURIER if kind else Basis.COMPUTATIONAL, int(idx))
        states.append(qudit.prepare_basis_state(d, label))
        records.append(DecoyRecord(sequence_id, pos, label))
    return states, records


def insert_particle(
    decoys: Sequence[QuditState],
    records: Sequence[DecoyRecord],
    rng: np.random.Generator,
    wire: int = 0,
) -> tuple[SequencePacket, list[DecoyRecord]]:
    """Place the entangled particle at a uniform slot among m+1; re-index the decoy records."""
    if not decoys:
        raise InvalidArgument("decoy list is empty")
    if len(decoys) != len(records):
        raise CardinalityError("decoy states and records differ in length")
    slot = int(rng.integers(0, len(decoys) + 1))
    slots = (*decoys[:slot], ParticleMarker(wire), *decoys[slot:])
    new_records = [replace(r, position=i if i < slot else i + 1) for i, r in enumerate(records)]
    seq_id = records[0].sequence_id
    return SequencePacket(seq_id, slots), new_records


def eavesdrop_check(
    records: Sequence[DecoyRecord],
    measured: Sequence[MeasurementOutcome],
    threshold: float,
    rng: np.random.Generator | None = None,
) -> CheckResult:
    """Compare correct-basis decoy outcomes against their prepared labels.

    The receiver declares ceil(m/2) outcomes (positions drawn from ``rng``,
    or the first ones if no rng is given) and the sender reveals the
    prepared states of the rest. All m comparisons feed one error rate.
    """
    m = len(records)
    if len(measured) != m:
        raise CardinalityError(f"{m} decoys but {len(measured)} outcomes")
    if m == 0:
        raise CardinalityError("nothing to check")
    order = rng.permutation(m) if rng is not None else np.arange(m)
    half = math.ceil(m / 2)
    declared = tuple(sorted(records[i].position for i in order[:half]))
    revealed = tuple(sorted(records[i].position for i in order[half:]))
    errors = sum(o.value != r.label.index for r, o in zip(records, measured))
    rate = errors / m
    return CheckResult(rate <= threshold, rate, errors, m, declared, revealed)


def participant_transform_and_measure(
    state: QuditState, wire: int, shadow: Shadow, rng: np.random.Generator
) -> tuple[MeasurementOutcome, QuditState]:
    if shadow.s.d != state.d:
        raise ModulusMismatch(f"shadow in Z_{shadow.s.d}, qudits of dimension {state.d}")
    state = qudit.apply_qft(state, wire)
    state = qudit.apply_pauli(state, wire, shadow.s.value, 0)
    return qudit.measure_computational(state, wire, rng)


def reconstruct_secret(
    measurements: Sequence[MeasurementOutcome | int], d: PrimeModulus | int, t: int | None = None
) -> FieldElement:
    field_ = d if isinstance(d, PrimeModulus) else PrimeModulus(d)
    if t is not None and len(measurements) != t:
        raise CardinalityError(f"need {t} measurement results, got {len(measurements)}")
    if not measurements:
        raise CardinalityError("no measurement results")
    total = sum(m.value if isinstance(m, MeasurementOutcome) else int(m) for m in measurements)
    return field_(total)


def commit_secret(a0: FieldElement | int, d: PrimeModulus | int) -> bytes:
    d = int(d.d if isinstance(d, PrimeModulus) else d)
    value = int(a0)
    if not 0 <= value < d:
        raise InvalidArgument(f"{value} is not in Z_{d}")
    return hashlib.sha256(f"QSS-v1|d={d}|a0={value}".encode("ascii")).digest()


def verify_hash(candidate: FieldElement, digest: bytes) -> bool:
    if len(digest) != DIGEST_SIZE:
        raise InvalidArgument(f"digest must be {DIGEST_SIZE} bytes, got {len(digest)}")
    return commit_secret(candidate, candidate.modulus) == digest


class Adversary:
    """Hook points a run exposes to an attacker. The base class does nothing."""

    name = "none"

    def on_transit(self, run: ProtocolRun, packet: SequencePacket) -> SequencePacket:
        return packet

    def before_transform(self, run: ProtocolRun) -> None:
        pass

    def announce_result(self, run: ProtocolRun, a0_prime: FieldElement) -> FieldElement:
        return a0_prime


class ProtocolRun:
    """One execution of the scheme. Bob_1 is always ``subset[0]``; wire r carries Bob ``subset[r]``'s particle."""

    def __init__(
        self,
        config: ProtocolConfig,
        subset: Sequence[int] | None = None,
        adversary: Adversary | None = None,
        rng: np.random.Generator | None = None,
    ):
        self.config = config
        self.subset = config.check_subset(subset if subset is not None else config.default_subset())
        self.adversary = adversary or Adversary()
        self.rng = rng if rng is not None else make_rng(config.master_seed)
        self.transcript = Transcript()
        self.field = config.field
        self.polynomial: Polynomial | None = None
        self.shares: dict[int, Share] = {}
        self.state: QuditState | None = None
        self.packets: dict[int, SequencePacket] = {}
        self.records: dict[int, list[DecoyRecord]] = {}
        self.checks: dict[int, CheckResult] = {}
        self.outcomes: dict[int, MeasurementOutcome] = {}
        self.computed: FieldElement | None = None

    @property
    def initiator(self) -> int:
        return self.subset[0]

    def wire_of(self, participant: int) -> int:
        return self.subset.index(participant)

    # -- initialization and distribution --

    def initialize(self) -> None:
        cfg = self.config
        self.polynomial = sample_polynomial(cfg.a0, cfg.t, self.rng)
        self.transcript.log("Alice", "init", d=cfg.d, t=cfg.t, n=cfg.n)

    def distribute(self) -> None:
        xs = self.config.public_xs()
        self.transcript.log("Alice", "publish_xs", "public", xs=[x.value for x in xs])
        for i, share in enumerate(distribute_shares(self.polynomial, xs), start=1):
            self.shares[i] = share
            self.transcript.log("Alice", "share", "private", to=actor(i), x=share.x.value, y=share.y.value)

    # -- reconstruction --

    def prepare_sequences(self) -> None:
        cfg = self.config
        self.state = qudit.ghz_state(cfg.d, cfg.t)
        self.transcript.log(actor(self.initiator), "prepare_ghz", qudits=cfg.t)
        for wire, receiver in enumerate(self.subset[1:], start=1):
            decoys, recs = build_decoy_sequence(cfg.d, cfg.m, self.rng, sequence_id=receiver)
            packet, recs = insert_particle(decoys, recs, self.rng, wire=wire)
            self.packets[receiver] = packet
            self.records[receiver] = recs

    def transmit(self) -> None:
        for receiver, packet in self.packets.items():
            self.transcript.log(actor(self.initiator), "send_sequence", "quantum", to=actor(receiver), length=len(packet.slots))
            packet = self.adversary.on_transit(self, packet)
            self.packets[receiver] = packet
            self.transcript.log(actor(receiver), "receive_sequence", "public", length=len(packet.slots))

    def check_sequences(self) -> CheckResult | None:
        """Run the decoy check on every sequence; return the first failing result, if any."""
        failed = None
        for receiver, packet in self.packets.items():
            recs = self.records[receiver]
            self.transcript.log(
                actor(self.initiator), "decoy_positions", "public", to=actor(receiver),
                decoys=[[r.position, r.label.kind.value] for r in recs],
            )
            outcomes = []
            for r in recs:
                o, _ = qudit.measure_in_basis(packet.slots[r.position], 0, r.label.kind, self.rng)
                outcomes.append(o)
            res = eavesdrop_check(recs, outcomes, self.config.error_threshold, self.rng)
            self.checks[receiver] = res
            by_pos = {r.position: (r, o) for r, o in zip(recs, outcomes)}
            self.transcript.log(
                actor(receiver), "declare_outcomes", "public",
                outcomes=[[p, by_pos[p][1].value] for p in res.receiver_declared],
            )
            self.transcript.log(
                actor(self.initiator), "reveal_states", "public",
                states=[[p, by_pos[p][0].label.kind.value, by_pos[p][0].label.index] for p in res.sender_revealed],
            )
            self.transcript.log(
                actor(self.initiator), "check_verdict", "public", sequence=receiver,
                errors=res.errors, checked=res.checked, passed=res.passed,
            )
            if not res.passed and failed is None:
                failed = res
        return failed

    def transform_and_measure(self) -> None:
        xs = [self.shares[i].x for i in self.subset]
        for wire, participant in enumerate(self.subset):
            shadow = compute_shadow(self.shares[participant], xs, participant_index=participant)
            outcome, self.state = participant_transform_and_measure(self.state, wire, shadow, self.rng)
            self.outcomes[participant] = outcome
            self.transcript.log(actor(participant), "announce_M", "public", value=outcome.value)

    def execute(self) -> ReconstructionResult:
        self.initialize()
        self.distribute()
        self.prepare_sequences()
        self.transmit()
        failed = self.check_sequences()
        if failed is not None:
            reason = f"decoy error rate {failed.error_rate:.6g} exceeds threshold {self.config.error_threshold:g}"
            self.transcript.log(actor(self.initiator), "abort", "public", reason=reason)
            return ReconstructionResult(None, False, True, reason)
        self.adversary.before_transform(self)
        self.transform_and_measure()
        self.computed = reconstruct_secret([self.outcomes[i] for i in self.subset], self.field, self.config.t)
        announced = self.adversary.announce_result(self, self.computed)
        self.transcript.log(actor(self.initiator), "announce_secret", "public", value=announced.value)
        digest = commit_secret(self.config.a0, self.field)
        self.transcript.log("Alice", "hash", "public", digest=digest.hex())
        ok = verify_hash(announced, digest)
        self.transcript.log("participants", "hash_verdict", "public", ok=ok)
        return ReconstructionResult(announced, ok, False)


def run_protocol(
    config: ProtocolConfig,
    subset: Sequence[int] | None = None,
    adversary: Adversary | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[Transcript, ReconstructionResult]:
    run = ProtocolRun(config, subset, adversary, rng)
    result = run.execute()
    return run.transcript, result


__all__ = [
    "Adversary",
    "CheckResult",
    "DecoyRecord",
    "Event",
    "ParticleMarker",
    "ProtocolConfig",
    "ProtocolRun",
    "QSSError",
    "ReconstructionResult",
    "SequencePacket",
    "Transcript",
    "build_decoy_sequence",
    "commit_secret",
    "eavesdrop_check",
    "insert_particle",
    "participant_transform_and_measure",
    "reconstruct_secret",
    "run_protocol",
    "verify_hash",
]
