"""Dense state-vector simulation of k qudits of prime dimension d.

Basis index ordering is big-endian in base d: qudit on wire 0 is the most
significant digit. Gates return new states; a QuditState is never mutated
in place after construction.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from functools import lru_cache
from typing import TextIO

import numpy as np

from .errors import InvalidArgument, NormalizationError, StateCapExceeded

DEFAULT_CAP = 2**22
NORM_TOL = 1e-9


class Basis(str, enum.Enum):
    COMPUTATIONAL = "computational"
    FOURIER = "fourier"


@dataclass(frozen=True)
class BasisLabel:
    kind: Basis
    index: int

    def __post_init__(self):
        object.__setattr__(self, "kind", Basis(self.kind))


@dataclass(frozen=True)
class MeasurementOutcome:
    wire: int
    basis: Basis
    value: int


@lru_cache(maxsize=None)
def omega_table(d: int) -> np.ndarray:
    """omega**m for m in 0..d-1 with omega = exp(2 pi i / d)."""
    m = np.arange(d)
    return np.exp(2j * np.pi * m / d)


def omega_power(m: int, d: int) -> complex:
    # exponent reduced mod d before exponentiation
    return complex(omega_table(d)[m % d])


@lru_cache(maxsize=None)
def qft_matrix(d: int) -> np.ndarray:
    x = np.arange(d)
    F = omega_table(d)[np.outer(x, x) % d] / np.sqrt(d)
    F.setflags(write=False)
    return F


@lru_cache(maxsize=None)
def inverse_qft_matrix(d: int) -> np.ndarray:
    x = np.arange(d)
    F = omega_table(d)[(-np.outer(x, x)) % d] / np.sqrt(d)
    F.setflags(write=False)
    return F


@lru_cache(maxsize=None)
def pauli_matrix(d: int, alpha: int, beta: int) -> np.ndarray:
    """U_{alpha,beta} = sum_x omega^{beta x} |x+alpha><x|."""
    U = np.zeros((d, d), dtype=complex)
    x = np.arange(d)
    U[(x + alpha) % d, x] = omega_table(d)[(beta * x) % d]
    U.setflags(write=False)
    return U


class QuditState:
    __slots__ = ("d", "k", "amplitudes")

    def __init__(self, d: int, k: int, amplitudes, *, cap: int = DEFAULT_CAP, check: bool = True):
        if d < 2:
            raise InvalidArgument(f"qudit dimension must be >= 2, got {d}")
        if k < 1:
            raise InvalidArgument(f"need at least one qudit, got {k}")
        if d**k > cap:
            raise StateCapExceeded(f"{d}^{k} amplitudes exceeds cap {cap}")
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if amps.size != d**k:
            raise InvalidArgument(f"expected {d**k} amplitudes, got {amps.size}")
        if check:
            norm = float(np.vdot(amps, amps).real)
            if abs(norm - 1.0) > NORM_TOL:
                raise NormalizationError(f"state norm^2 is {norm}")
        amps.setflags(write=False)
        self.d = d
        self.k = k
        self.amplitudes = amps

    def __repr__(self):
        return f"QuditState(d={self.d}, k={self.k})"

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def digits(self, index: int) -> tuple[int, ...]:
        out = []
        for _ in range(self.k):
            index, r = divmod(index, self.d)
            out.append(r)
        return tuple(reversed(out))

    def index_of(self, digits) -> int:
        idx = 0
        for v in digits:
            idx = idx * self.d + int(v)
        return idx

    def amplitude(self, *digits: int) -> complex:
        return complex(self.amplitudes[self.index_of(digits)])

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def marginal(self, wire: int) -> np.ndarray:
        self._check_wire(wire)
        p = self.probabilities().reshape(self.d**wire, self.d, -1)
        return p.sum(axis=(0, 2))

    def overlap(self, other: QuditState) -> float:
        """|<self|other>|, insensitive to global phase."""
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)))

    def _check_wire(self, wire: int) -> None:
        if not 0 <= wire < self.k:
            raise InvalidArgument(f"wire {wire} out of range for {self.k} qudits")

    def apply(self, U: np.ndarray, wire: int) -> QuditState:
        """Apply a d x d matrix to one wire, identity elsewhere."""
        self._check_wire(wire)
        psi = self.amplitudes.reshape(self.d**wire, self.d, -1)
        out = np.einsum("xy,lyr->lxr", U, psi)
        return QuditState(self.d, self.k, out, check=False)

    def to_csv(self, fh: TextIO | None = None) -> str:
        """Rows of (digits, re, im) with 17 significant digits."""
        buf = fh if fh is not None else io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["digits", "re", "im"])
        for idx, a in enumerate(self.amplitudes):
            w.writerow(["".join(str(v) for v in self.digits(idx)), format(a.real, ".17g"), format(a.imag, ".17g")])
        return buf.getvalue() if fh is None else ""


def basis_state(d: int, digits, cap: int = DEFAULT_CAP) -> QuditState:
    digits = tuple(digits)
    for v in digits:
        if not 0 <= v < d:
            raise InvalidArgument(f"digit {v} out of range for d={d}")
    amps = np.zeros(d ** len(digits), dtype=complex)
    idx = 0
    for v in digits:
        idx = idx * d + v
    amps[idx] = 1.0
    return QuditState(d, len(digits), amps, cap=cap)


def prepare_basis_state(d: int, label: BasisLabel) -> QuditState:
    if not 0 <= label.index < d:
        raise InvalidArgument(f"basis index {label.index} out of range for d={d}")
    if label.kind is Basis.COMPUTATIONAL:
        return basis_state(d, [label.index])
    return QuditState(d, 1, qft_matrix(d)[:, label.index])


def ghz_state(d: int, k: int, cap: int = DEFAULT_CAP) -> QuditState:
    if d**k > cap:
        raise StateCapExceeded(f"{d}^{k} amplitudes exceeds cap {cap}")
    amps = np.zeros(d**k, dtype=complex)
    # index of |j j ... j> is j * (1 + d + ... + d^{k-1})
    stride = sum(d**i for i in range(k))
    amps[np.arange(d) * stride] = 1 / np.sqrt(d)
    return QuditState(d, k, amps, cap=cap)


def tensor(*states: QuditState) -> QuditState:
    d = states[0].d
    amps = states[0].amplitudes
    for s in states[1:]:
        if s.d != d:
            raise InvalidArgument("cannot tensor qudits of different dimension")
        amps = np.kron(amps, s.amplitudes)
    return QuditState(d, sum(s.k for s in states), amps)


def apply_qft(state: QuditState, wire: int) -> QuditState:
    return state.apply(qft_matrix(state.d), wire)


def apply_inverse_qft(state: QuditState, wire: int) -> QuditState:
    return state.apply(inverse_qft_matrix(state.d), wire)


def apply_pauli(state: QuditState, wire: int, alpha: int, beta: int) -> QuditState:
    """|x> -> omega^{beta x} |x + alpha> on one wire."""
    if not (0 <= alpha < state.d and 0 <= beta < state.d):
        raise InvalidArgument(f"Pauli parameters ({alpha}, {beta}) out of range for d={state.d}")
    return state.apply(pauli_matrix(state.d, int(alpha), int(beta)), wire)


def measure_computational(state: QuditState, wire: int, rng: np.random.Generator) -> tuple[MeasurementOutcome, QuditState]:
    probs = state.marginal(wire)
    total = probs.sum()
    if not abs(total - 1.0) <= 1e-6:
        raise NormalizationError(f"pre-measurement norm^2 is {total}")
    cdf = np.cumsum(probs / total)
    v = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    v = min(v, state.d - 1)
    p = probs[v]
    if p <= 0:
        raise NormalizationError(f"outcome {v} has zero probability")
    psi = np.zeros_like(state.amplitudes).reshape(state.d**wire, state.d, -1)
    psi[:, v, :] = state.amplitudes.reshape(state.d**wire, state.d, -1)[:, v, :] / np.sqrt(p)
    return MeasurementOutcome(wire, Basis.COMPUTATIONAL, v), QuditState(state.d, state.k, psi)


def measure_in_basis(
    state: QuditState, wire: int, basis: Basis | str, rng: np.random.Generator
) -> tuple[MeasurementOutcome, QuditState]:
    basis = Basis(basis)
    if basis is Basis.COMPUTATIONAL:
        return measure_computational(state, wire, rng)
    rotated = apply_inverse_qft(state, wire)
    outcome, post = measure_computational(rotated, wire, rng)
    return MeasurementOutcome(wire, Basis.FOURIER, outcome.value), apply_qft(post, wire)


def random_circuit(state: QuditState, length: int, rng: np.random.Generator) -> QuditState:
    """Apply ``length`` random gates (QFT, inverse QFT, Pauli) or measurements."""
    d = state.d
    for _ in range(length):
        wire = int(rng.integers(0, state.k))
        op = int(rng.integers(0, 5))
        if op == 0:
            state = apply_qft(state, wire)
        elif op == 1:
            state = apply_inverse_qft(state, wire)
        elif op == 2:
            state = apply_pauli(state, wire, int(rng.integers(0, d)), int(rng.integers(0, d)))
        elif op == 3:
            _, state = measure_computational(state, wire, rng)
        else:
            _, state = measure_in_basis(state, wire, Basis.FOURIER, rng)
    return state


def gate_checks(d: int, rng: np.random.Generator, trials: int = 20) -> list[tuple[str, float, float, bool]]:
    """Self-test rows of (check, observed error, tolerance, passed) for dimension d."""
    eye = np.eye(d)
    F, Fi = qft_matrix(d), inverse_qft_matrix(d)
    rows = [
        ("qft_unitary", float(np.max(np.abs(F.conj().T @ F - eye))), 1e-12),
        ("qft_inverse", float(np.max(np.abs(F @ Fi - eye))), 1e-12),
    ]
    worst = 0.0
    for a in range(d):
        for b in range(d):
            U = pauli_matrix(d, a, b)
            worst = max(worst, float(np.max(np.abs(U.conj().T @ U - eye))))
    rows.append(("pauli_unitary", worst, 1e-12))
    worst = 0.0
    for a in range(d):
        two = pauli_matrix(d, a, 0) @ pauli_matrix(d, a, 0)
        worst = max(worst, float(np.max(np.abs(two - pauli_matrix(d, 2 * a % d, 0)))))
    rows.append(("pauli_shift_composition", worst, 1e-12))
    k = 1
    while d ** (k + 1) <= 4096 and k < 3:
        k += 1
    worst = 0.0
    for _ in range(trials):
        amps = rng.normal(size=d**k) + 1j * rng.normal(size=d**k)
        state = QuditState(d, k, amps / np.linalg.norm(amps))
        worst = max(worst, abs(random_circuit(state, 50, rng).norm - 1.0))
    rows.append(("normalization_50_gates", worst, 1e-9))
    for t in (2, 3):
        if d**t > 4096:
            continue
        state = ghz_state(d, t)
        for w in range(t):
            state = apply_qft(state, w)
        amps = state.amplitudes.reshape((d,) * t)
        err = 0.0
        for digits in np.ndindex(*amps.shape):
            target = d ** (-(t - 1) / 2) if sum(digits) % d == 0 else 0.0
            err = max(err, abs(amps[digits] - target))
        rows.append((f"ghz_fourier_support_t{t}", err, 1e-10))
    return [(name, val, tol, val < tol) for name, val, tol in rows]
