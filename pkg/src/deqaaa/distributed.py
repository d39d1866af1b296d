"""Two-phase distributed exact amplitude amplification.

The ``n`` qubits are split into contiguous slices (nodes). Phase one runs
exact amplification independently on every slice of the shared global
state, each node using the marginal of its slice as the state to amplify
and the slice-projections of the global targets as its local targets.
Phase two runs one global exact amplification from the resulting state
whenever its success probability is still below one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .amplify import (
    BACKENDS,
    ONE_THRESHOLD,
    TargetSpec,
    _join,
    amplification_step,
    apply_target_phase,
    build_phase_oracle,
    build_zero_reflection,
    iterations_eqaaa,
    phase_angle,
    reflect_about_state,
)
from .errors import DomainError, InfeasibleError, NumericError, SizeError
from .prep import AmplitudeSpec, encode_amplitudes, prepare_direct
from .sim import (
    Circuit,
    Distribution,
    Histogram,
    StateVector,
    apply_circuit,
    bits_to_index,
    exact_distribution,
    new_zero_state,
    sample,
    success_probability,
)


@dataclass(frozen=True)
class Partition:
    """Contiguous qubit slices; node ``j`` owns qubits ``offsets[j] .. offsets[j] + node_sizes[j] - 1``."""

    node_sizes: tuple[int, ...]

    def __post_init__(self) -> None:
        sizes = tuple(int(s) for s in self.node_sizes)
        if len(sizes) < 2:
            raise DomainError("a partition needs at least two nodes")
        if any(s < 1 for s in sizes):
            raise DomainError(f"node sizes must be positive, got {sizes}")
        object.__setattr__(self, "node_sizes", sizes)

    @property
    def n_qubits(self) -> int:
        return sum(self.node_sizes)

    @property
    def n_nodes(self) -> int:
        return len(self.node_sizes)

    @property
    def offsets(self) -> tuple[int, ...]:
        out, acc = [], 0
        for s in self.node_sizes:
            out.append(acc)
            acc += s
        return tuple(out)

    def check(self, n: int) -> None:
        if self.n_qubits != n:
            raise SizeError(f"partition {list(self.node_sizes)} covers {self.n_qubits} qubits, state has {n}")

    def node(self, j: int) -> tuple[int, int, int]:
        """``(delta, n_j, sigma)``: qubits before, inside and after slice ``j``."""
        if not 0 <= j < self.n_nodes:
            raise DomainError(f"node index {j} out of range 0..{self.n_nodes - 1}")
        delta = self.offsets[j]
        n_j = self.node_sizes[j]
        return delta, n_j, self.n_qubits - delta - n_j


@dataclass(frozen=True)
class NodePlan:
    index: int
    offset: int
    n_qubits: int
    local_targets: tuple[str, ...]
    substate: AmplitudeSpec
    p: float
    J: int
    phi: float
    prep: Circuit

    @property
    def skipped(self) -> bool:
        return self.p >= 1 - ONE_THRESHOLD

    @property
    def repetitions(self) -> int:
        return 0 if self.skipped else self.J + 1

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "offset": self.offset,
            "n_qubits": self.n_qubits,
            "local_targets": list(self.local_targets),
            "substate": [float(a.real) for a in self.substate.amps],
            "p": self.p,
            "J": self.J,
            "phi": self.phi,
            "repetitions": self.repetitions,
        }


def marginal_distribution(dist: Distribution, partition: Partition, j: int) -> Distribution:
    partition.check(dist.n_bits)
    delta, n_j, sigma = partition.node(j)
    probs = dist.probs.reshape(1 << delta, 1 << n_j, 1 << sigma).sum(axis=(0, 2))
    return Distribution(n_j, probs)


def substate_of(marginal: Distribution) -> AmplitudeSpec:
    amps = np.sqrt(marginal.probs)
    return AmplitudeSpec(marginal.n_bits, amps / np.linalg.norm(amps))


def project_targets(targets: TargetSpec, partition: Partition, j: int) -> tuple[str, ...]:
    partition.check(targets.n_bits)
    delta, n_j, _ = partition.node(j)
    return tuple(dict.fromkeys(t[delta : delta + n_j] for t in targets))


def build_node_plan(
    dist: Distribution,
    targets: TargetSpec,
    partition: Partition,
    j: int,
    prep: Circuit | None = None,
) -> NodePlan:
    marginal = marginal_distribution(dist, partition, j)
    local = project_targets(targets, partition, j)
    p = float(sum(marginal.probs[bits_to_index(x)] for x in local))
    if p <= 0:
        raise InfeasibleError(f"node {j}: local targets {list(local)} have zero marginal probability")
    p = min(p, 1.0)
    J = iterations_eqaaa(p)
    sub = substate_of(marginal)
    if prep is None:
        prep = encode_amplitudes(sub)
    elif prep.n_qubits != marginal.n_bits:
        raise SizeError(f"node {j}: preparation circuit has {prep.n_qubits} qubits, node has {marginal.n_bits}")
    return NodePlan(j, partition.offsets[j], marginal.n_bits, local, sub, p, J, phase_angle(p, J), prep)


def build_node_plans(
    dist: Distribution,
    targets: TargetSpec,
    partition: Partition,
    preps: Sequence[Circuit | None] | None = None,
) -> list[NodePlan]:
    preps = preps or [None] * partition.n_nodes
    if len(preps) != partition.n_nodes:
        raise SizeError("need one node preparation per node")
    return [build_node_plan(dist, targets, partition, j, preps[j]) for j in range(partition.n_nodes)]


# ---------------------------------------------------------------------------
# Phase one
# ---------------------------------------------------------------------------


def _node_step(amps: np.ndarray, n: int, plan: NodePlan, psi_j: np.ndarray) -> None:
    # R_{f_j} on the slice, then the reflection about |phi_j> embedded on it
    delta, sigma = plan.offset, n - plan.offset - plan.n_qubits
    view = amps.reshape(1 << delta, 1 << plan.n_qubits, 1 << sigma)
    phase = np.exp(1j * plan.phi)
    idx = [bits_to_index(x) for x in plan.local_targets]
    view[:, idx, :] *= phase
    overlap = np.einsum("k,akb->ab", psi_j.conj(), view)
    view += (phase - 1) * psi_j[None, :, None] * overlap[:, None, :]


def node_circuit(plan: NodePlan, n_total: int) -> Circuit:
    """``EQ_j`` repeated ``J_j + 1`` times on the node's slice (empty when skipped)."""
    local = Circuit(plan.n_qubits)
    if plan.repetitions:
        step = _join(
            plan.n_qubits,
            [
                build_phase_oracle(plan.local_targets, plan.phi, plan.n_qubits),
                plan.prep.inverse(),
                build_zero_reflection(plan.n_qubits, plan.phi),
                plan.prep,
            ],
        )
        local = _join(plan.n_qubits, [step] * plan.repetitions)
    return local.embedded(plan.offset, n_total)


def phase_one_circuit(prep: Circuit, plans: Sequence[NodePlan]) -> Circuit:
    """``B``: global preparation followed by every node's ``EQ_j`` block in parallel."""
    n = prep.n_qubits
    nodes = Circuit(n)
    for plan in plans:
        nodes.extend(node_circuit(plan, n))
    return _join(n, [prep, nodes])


def phase_one(state: StateVector, plans: Sequence[NodePlan], backend: str = "projector") -> StateVector:
    """Apply every node's ``EQ_j`` (``J_j + 1`` times) to the global state."""
    if backend not in BACKENDS:
        raise DomainError(f"unknown backend {backend!r}")
    n = state.n_qubits
    if sum(p.n_qubits for p in plans) != n:
        raise SizeError("node plans do not cover the state")
    if backend == "circuit":
        nodes = Circuit(n)
        for plan in plans:
            nodes.extend(node_circuit(plan, n))
        return apply_circuit(state, nodes)
    amps = np.array(state.amplitudes)
    for plan in plans:
        psi_j = prepare_direct(plan.substate).amplitudes
        for _ in range(plan.repetitions):
            _node_step(amps, n, plan, psi_j)
    return StateVector(n, amps)


def compute_pg_prime(state: StateVector, targets: TargetSpec) -> float:
    return success_probability(exact_distribution(state), targets)


# ---------------------------------------------------------------------------
# Full run
# ---------------------------------------------------------------------------


@dataclass
class DeqaaaReport:
    n_qubits: int
    targets: tuple[str, ...]
    partition: Partition
    backend: str
    nodes: list[NodePlan]
    p_g_initial: float
    p_g_prime: float
    hat_J: int | None
    hat_phi: float | None
    phase2_executed: bool
    p_final: float
    final_state: StateVector
    circuit: Circuit | None = None
    phase_one: Circuit | None = None
    resources: dict = field(default_factory=dict)
    phase_one_resources: dict = field(default_factory=dict)
    histogram: Histogram | None = None
    seed: int | None = None

    @property
    def iterations(self) -> int:
        return self.hat_J + 1 if self.phase2_executed else 0

    def to_dict(self, histogram_path: str | None = None) -> dict:
        native = self.resources.get("native", {})
        return {
            "algorithm": "deqaaa",
            "n": self.n_qubits,
            "targets": list(self.targets),
            "backend": self.backend,
            "partition": list(self.partition.node_sizes),
            "p_initial": self.p_g_initial,
            "iterations": self.iterations,
            "phase_angle": self.hat_phi,
            "p_final": self.p_final,
            "gate_count": native.get("gate_count"),
            "depth": native.get("depth"),
            "resources": self.resources,
            "phase_one_resources": self.phase_one_resources,
            "p_g_prime": self.p_g_prime,
            "hat_J": self.hat_J,
            "hat_phi": self.hat_phi,
            "phase2_executed": self.phase2_executed,
            "nodes": [p.to_dict() for p in self.nodes],
            "seed": self.seed,
            "histogram_path": histogram_path,
        }


def deqaaa_run(
    initial: AmplitudeSpec,
    targets: TargetSpec,
    partition: Partition | Sequence[int],
    backend: str = "projector",
    *,
    prep: Circuit | None = None,
    node_preps: Sequence[Circuit | None] | None = None,
    shots: int = 0,
    seed: int | None = None,
    decompose: bool = False,
) -> DeqaaaReport:
    from .metrics import decompose_circuit, resource_summary

    if backend not in BACKENDS:
        raise DomainError(f"unknown backend {backend!r}")
    if not isinstance(partition, Partition):
        partition = Partition(tuple(partition))
    n = initial.n_qubits
    partition.check(n)
    if targets.n_bits != n:
        raise SizeError(f"targets have width {targets.n_bits}, state has {n} qubits")

    prep = encode_amplitudes(initial) if prep is None else prep
    psi = apply_circuit(new_zero_state(n), prep) if backend == "circuit" else prepare_direct(initial)
    dist = exact_distribution(psi)
    p_g = success_probability(dist, targets)
    if p_g <= 0:
        raise InfeasibleError("initial state has no overlap with the target set")
    plans = build_node_plans(dist, targets, partition, node_preps)

    b_circ = phase_one_circuit(prep, plans)
    run_b = decompose_circuit(b_circ) if decompose and backend == "circuit" else b_circ
    if backend == "circuit":
        psi1 = apply_circuit(new_zero_state(n), run_b)
    else:
        psi1 = phase_one(psi, plans, backend)
    p_prime = compute_pg_prime(psi1, targets)

    executed = p_prime < 1 - ONE_THRESHOLD
    hat_j = hat_phi = None
    circuit = b_circ
    final = psi1
    if executed:
        hat_j = iterations_eqaaa(p_prime)
        hat_phi = phase_angle(p_prime, hat_j)
        step = amplification_step(b_circ, targets, hat_phi)
        circuit = _join(n, [b_circ] + [step] * (hat_j + 1))
        if backend == "circuit":
            run_step = decompose_circuit(step) if decompose else step
            for _ in range(hat_j + 1):
                final = apply_circuit(final, run_step)
        else:
            for _ in range(hat_j + 1):
                final = apply_target_phase(final, targets, hat_phi)
                final = reflect_about_state(final, psi1, hat_phi)
    p_final = success_probability(exact_distribution(final), targets)
    if not math.isfinite(p_final):
        raise NumericError("non-finite success probability")
    hist = sample(final, shots, seed if seed is not None else 0) if shots else None
    return DeqaaaReport(
        n_qubits=n,
        targets=targets.targets,
        partition=partition,
        backend=backend,
        nodes=plans,
        p_g_initial=p_g,
        p_g_prime=p_prime,
        hat_J=hat_j,
        hat_phi=hat_phi,
        phase2_executed=executed,
        p_final=p_final,
        final_state=final,
        circuit=circuit,
        phase_one=b_circ,
        resources=resource_summary(circuit, decompose=decompose),
        phase_one_resources=resource_summary(b_circ, decompose=decompose),
        histogram=hist,
        seed=seed,
    )
