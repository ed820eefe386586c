"""Measurement programs for the four Deutsch black boxes on a 4-qubit cluster.

Physical qubit 1 carries the query register ``|x>`` and physical qubit 3
carries the answer register ``|y>``.  Qubits 2 and 4 are measured by the
program; qubit 1 is finally read out to decide constant vs balanced.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import qcore
from .cluster import ResourceKind
from .errors import ConfigurationError
from .qcore import MeasurementBasis

OUTPUT_QUBITS = (1, 3)
PI = np.pi


class BlackBox(enum.Enum):
    I_II = "bb1"
    I_X = "bb2"
    CNOT = "bb3"
    X_CNOT = "bb4"

    @property
    def balanced(self) -> bool:
        return self in (BlackBox.CNOT, BlackBox.X_CNOT)

    @property
    def expected(self) -> "Verdict":
        return Verdict.BALANCED if self.balanced else Verdict.CONSTANT

    @classmethod
    def parse(cls, text: str) -> "BlackBox":
        key = text.strip().lower()
        for bb in cls:
            if key in (bb.value, bb.name.lower()):
                return bb
        raise ConfigurationError(f"unknown black box {text!r}")


class Verdict(enum.Enum):
    CONSTANT = "Constant"
    BALANCED = "Balanced"


@dataclass(frozen=True)
class FeedForward:
    """Apply ``pauli`` to ``target`` when ``offset + sum(s_j for j in parity)`` is odd."""

    target: int
    pauli: str
    parity: tuple[int, ...]
    offset: int = 0

    def active(self, outcomes: Mapping[int, int]) -> bool:
        return bool((self.offset + sum(outcomes[j] for j in self.parity)) % 2)


@dataclass(frozen=True, eq=False)
class MeasurementProgram:
    """One row of the measurement table plus its corrections.

    ``steps`` are the non-output measurements in execution order, ``readout``
    the basis used on output qubit 1 to decide the function type.
    ``local_corrections`` map the physical output qubits onto the logical
    ``|x>|y + f(x)>`` frame and are applied after the Pauli feed-forward.
    """

    blackbox: BlackBox
    resource: ResourceKind
    steps: tuple[tuple[int, MeasurementBasis], ...]
    readout: tuple[int, MeasurementBasis]
    ff_rules: tuple[FeedForward, ...]
    local_corrections: tuple[tuple[int, np.ndarray], ...]

    def __post_init__(self):
        measured = [q for q, _ in self.steps]
        if len(set(measured)) != len(measured):
            raise ConfigurationError("a qubit is measured twice")
        for rule in self.ff_rules:
            if rule.target in measured or not set(rule.parity) <= set(measured):
                raise ConfigurationError(f"invalid feed-forward rule {rule}")

    @property
    def measured(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.steps)

    def reordered(self, order: Sequence[int]) -> "MeasurementProgram":
        """Same program with the non-output measurements done in ``order``."""
        lookup = dict(self.steps)
        return MeasurementProgram(
            self.blackbox, self.resource, tuple((q, lookup[q]) for q in order),
            self.readout, self.ff_rules, self.local_corrections,
        )


@dataclass(frozen=True, eq=False)
class RunRecord:
    """Result of one pass through a program.

    ``physical_state`` is the (1,3) density matrix after feed-forward but before
    local corrections; ``output_state`` is in the logical frame.  ``readout``
    holds the sampled qubit-1 outcome, or ``None`` for enumerated branches.
    """

    outcomes: dict[int, int]
    physical_state: np.ndarray
    output_state: np.ndarray
    ff_applied: bool
    readout: int | None = None


@dataclass(frozen=True, eq=False)
class Branch:
    probability: float
    record: RunRecord


_PAULI = {"X": qcore.X, "Y": qcore.Y, "Z": qcore.Z}


def program_for(bb: BlackBox, resource: ResourceKind = ResourceKind.PHI_LIN) -> MeasurementProgram:
    """Measurement program realising black box ``bb`` on the given resource.

    BB(ii) and BB(iv) reuse BB(i) and BB(iii) with an extra logical
    ``sigma_x`` on the answer qubit, supplied by the oracle at the
    correction stage.
    """
    bb = BlackBox(bb)
    resource = ResourceKind(resource)
    rzm = qcore.rz(-PI / 2)
    oracle_cnot = bb in (BlackBox.CNOT, BlackBox.X_CNOT)
    phi_c = resource is ResourceKind.PHI_C

    q2 = MeasurementBasis.equatorial(PI / 2) if oracle_cnot else MeasurementBasis.computational()
    # Phi_c differs from the linear cluster by H on qubits 1 and 4
    q4 = MeasurementBasis.computational(swapped=True) if phi_c else MeasurementBasis.equatorial(PI)

    if oracle_cnot:
        readout = MeasurementBasis.equatorial(3 * PI / 2 if phi_c else PI / 2)
        ff = (FeedForward(1, "Z", (2, 4)), FeedForward(3, "X", (4,)))
        corr1 = rzm @ qcore.H if phi_c else rzm
        corr3 = qcore.H @ rzm
    else:
        readout = MeasurementBasis.computational() if phi_c else MeasurementBasis.equatorial(0.0)
        ff = (FeedForward(1, "X" if phi_c else "Z", (2,)), FeedForward(3, "X", (4,)))
        corr1 = qcore.H if phi_c else qcore.I2
        corr3 = qcore.H
    if bb in (BlackBox.I_X, BlackBox.X_CNOT):
        corr3 = qcore.X @ corr3

    corrections = tuple((q, g) for q, g in ((1, corr1), (3, corr3)) if not np.allclose(g, qcore.I2))
    return MeasurementProgram(bb, resource, ((2, q2), (4, q4)), (1, readout), ff, corrections)


def oracle_unitary(bb: BlackBox) -> np.ndarray:
    """Circuit-model unitary of the black box on ``|x>|y>``."""
    bb = BlackBox(bb)
    ix = qcore.tensor(qcore.I2, qcore.X)
    return {
        BlackBox.I_II: np.eye(4, dtype=complex),
        BlackBox.I_X: ix,
        BlackBox.CNOT: qcore.CNOT.copy(),
        BlackBox.X_CNOT: ix @ qcore.CNOT,
    }[bb]


def ideal_output(bb: BlackBox) -> np.ndarray:
    """Oracle applied to ``|+>|->``."""
    return oracle_unitary(bb) @ qcore.ket("+-")


def _apply(state, gate, pos):
    if state.ndim == 1:
        return qcore.apply(state, gate, [pos])
    return qcore.apply_dm(state, gate, [pos])


def _measure_all(program, state, choose):
    """Measure the program's non-output qubits; ``choose`` picks each outcome."""
    labels = [1, 2, 3, 4]
    outcomes = {}
    weight = 1.0
    for qubit, basis in program.steps:
        pos = labels.index(qubit) + 1
        s, prob, state = choose(state, pos, basis)
        outcomes[qubit] = s
        weight *= prob
        labels.remove(qubit)
    return outcomes, weight, state, labels


def _finish(program, state, labels, outcomes, apply_ff):
    if apply_ff:
        for rule in program.ff_rules:
            if rule.active(outcomes):
                state = _apply(state, _PAULI[rule.pauli], labels.index(rule.target) + 1)
    physical = state
    for qubit, gate in program.local_corrections:
        state = _apply(state, gate, labels.index(qubit) + 1)
    if physical.ndim == 1:
        physical, state = qcore.density(physical), qcore.density(state)
    return physical, state


def _as_state(resource_state) -> np.ndarray:
    state = np.asarray(resource_state, dtype=complex)
    if state.shape not in ((16,), (16, 16)):
        raise ConfigurationError(f"resource must be a 4-qubit state, got shape {state.shape}")
    return state


def execute(program: MeasurementProgram, resource_state, rng=None, apply_ff: bool = True) -> RunRecord:
    """Run ``program`` once with Born-rule sampling of every outcome."""
    rng = np.random.default_rng(rng)
    state = _as_state(resource_state)

    def choose(st, pos, basis):
        s, post = qcore.sample_measure(st, pos, basis, rng)
        return s, 1.0, post

    outcomes, _, state, labels = _measure_all(program, state, choose)
    physical, output = _finish(program, state, labels, outcomes, apply_ff)
    qubit, basis = program.readout
    p0 = qcore.outcome_probability(physical, labels.index(qubit) + 1, basis, 0)
    readout = 0 if rng.random() < p0 else 1
    return RunRecord(outcomes, physical, output, apply_ff, readout)


def enumerate_branches(program: MeasurementProgram, resource_state, apply_ff: bool = True) -> list[Branch]:
    """Every outcome branch of the non-output measurements with exact weights.

    Branches of zero probability are dropped.
    """
    state0 = _as_state(resource_state)
    branches = []
    for bits in itertools.product((0, 1), repeat=len(program.steps)):
        wanted = iter(bits)

        def choose(st, pos, basis):
            s = next(wanted)
            prob = qcore.outcome_probability(st, pos, basis, s)
            if prob <= qcore.ALGEBRA_TOL:
                raise _DeadBranch
            _, post = qcore.project_measure(st, pos, basis, s)
            return s, prob, post

        try:
            outcomes, weight, state, labels = _measure_all(program, state0, choose)
        except _DeadBranch:
            continue
        physical, output = _finish(program, state, labels, outcomes, apply_ff)
        branches.append(Branch(weight, RunRecord(outcomes, physical, output, apply_ff)))
    return branches


class _DeadBranch(Exception):
    pass


def readout_probabilities(program: MeasurementProgram, record: RunRecord) -> tuple[float, float]:
    """Probabilities of readout outcome 0 and 1 on output qubit 1."""
    qubit, basis = program.readout
    pos = OUTPUT_QUBITS.index(qubit) + 1
    p0 = qcore.outcome_probability(record.physical_state, pos, basis, 0)
    return p0, 1.0 - p0


def classify(record: RunRecord) -> Verdict:
    """Constant when the qubit-1 readout found the ``+`` outcome."""
    if record.readout is None:
        raise ConfigurationError("record has no readout; use execute() to sample one")
    return Verdict.CONSTANT if record.readout == 0 else Verdict.BALANCED


def success_probability(bb: BlackBox, resource_state, apply_ff: bool = True,
                        resource: ResourceKind = ResourceKind.PHI_LIN) -> float:
    """Exact probability that one run classifies ``bb`` correctly."""
    bb = BlackBox(bb)
    program = program_for(bb, resource)
    correct = 1 if bb.balanced else 0
    total = 0.0
    for br in enumerate_branches(program, resource_state, apply_ff):
        total += br.probability * readout_probabilities(program, br.record)[correct]
    return float(min(1.0, max(0.0, total)))


def average_output(branches: Sequence[Branch]) -> np.ndarray:
    """Branch-weighted (1,3) output state in the logical frame."""
    return sum(br.probability * br.record.output_state for br in branches)


@dataclass
class BranchRow:
    outcomes: dict[int, int]
    probability: float
    p_constant: float
    fidelity: float


def branch_table(bb: BlackBox, resource_state, apply_ff: bool = True,
                 resource: ResourceKind = ResourceKind.PHI_LIN) -> list[BranchRow]:
    """Per-branch summary used for reporting."""
    program = program_for(bb, resource)
    target = ideal_output(bb)
    rows = []
    for br in enumerate_branches(program, resource_state, apply_ff):
        p0, _ = readout_probabilities(program, br.record)
        rows.append(BranchRow(dict(br.record.outcomes), br.probability, p0,
                              qcore.fidelity(br.record.output_state, target)))
    return rows
