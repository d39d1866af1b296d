"""Circuit resource analysis: depth, gate counts and multi-controlled gate decomposition.

Depth follows the greedy layering rule: a gate sits one layer above the
deepest gate already placed on any of its qubits, and a multi-qubit gate
(including an MCPS on all qubits) occupies a single layer. ``BARRIER`` ops
synchronise the layers of their qubits without adding a layer, which lets
a composite circuit be measured as the serial sum of its sub-operators.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .amplify import iterations_eqaaa, iterations_qaaa
from .errors import DomainError
from .sim import Circuit, GateOp, global_phase_distance, unitary_of

ONE_THRESHOLD = 1e-9
VERIFY_MAX_CONTROLS = 9


@dataclass(frozen=True)
class DepthReport:
    gate_count: int
    depth: int
    counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"gate_count": self.gate_count, "depth": self.depth, "counts": dict(self.counts)}


def circuit_depth(circuit: Circuit) -> int:
    layer = [0] * circuit.n_qubits
    for op in circuit.ops:
        qs = op.qubits
        top = max(layer[q] for q in qs)
        if op.is_gate:
            top += 1
        for q in qs:
            layer[q] = top
    return max(layer, default=0)


def depth_report(circuit: Circuit) -> DepthReport:
    counts = Counter(op.kind for op in circuit.ops if op.is_gate)
    return DepthReport(sum(counts.values()), circuit_depth(circuit), dict(sorted(counts.items())))


# ---------------------------------------------------------------------------
# Analytic depth formulas (dep(MCPS) = 1 convention)
# ---------------------------------------------------------------------------


def _check_depth_args(dep_a: int, m: int) -> None:
    if dep_a < 0 or m < 1:
        raise DomainError("need dep(A) >= 0 and at least one target")


def analytic_depth_qaaa(dep_a: int, p_g: float, m: int) -> int:
    _check_depth_args(dep_a, m)
    r = iterations_qaaa(p_g)
    return (2 * r + 1) * dep_a + r * (3 * m + 3)


def analytic_depth_eqaaa(dep_a: int, p_g: float, m: int) -> int:
    _check_depth_args(dep_a, m)
    j = iterations_eqaaa(p_g)
    return (2 * j + 3) * dep_a + (j + 1) * (3 * m + 3)


def analytic_depth_deqaaa(
    dep_a: int,
    node_inputs: Sequence[tuple[int, float, int]],
    p_g_prime: float,
    m_global: int,
) -> int:
    """Depth of the two-phase distributed run.

    ``node_inputs`` holds ``(dep(A_j), p_j, |X_j|)`` per node. The second
    phase is included only when ``p_g_prime < 1 - 1e-9``.
    """
    _check_depth_args(dep_a, m_global)
    if not node_inputs:
        raise DomainError("no nodes")
    node_depths = []
    for dep_j, p_j, m_j in node_inputs:
        _check_depth_args(dep_j, m_j)
        node_depths.append((iterations_eqaaa(p_j) + 1) * (3 * m_j + 2 * dep_j + 3))
    first = dep_a + max(node_depths)
    if p_g_prime >= 1 - ONE_THRESHOLD:
        return first
    j_hat = iterations_eqaaa(p_g_prime)
    return first + (j_hat + 1) * (3 * m_global + 2 * first + 3)


# ---------------------------------------------------------------------------
# Decomposition into {PS, RY, CNOT}
# ---------------------------------------------------------------------------


def _gray(i: int) -> int:
    return i ^ (i >> 1)


def _mcps_ops(controls: Sequence[int], target: int, phi: float) -> list[GateOp]:
    # x_1...x_m x_t expands into parities; the parities that include the target
    # are walked in Gray-code order with the target as accumulator, the rest
    # form the same gate one size smaller at half the angle.
    if not controls:
        return [GateOp("PS", (target,), angle=phi)]
    ops = _mcps_ops(controls[:-1], controls[-1], phi / 2)
    m = len(controls)
    scale = phi / (1 << m)
    for i in range(1 << m):
        g = _gray(i)
        if i:
            bit = (g ^ _gray(i - 1)).bit_length() - 1
            ops.append(GateOp("CNOT", (target,), (controls[bit],)))
        sign = -1.0 if bin(g).count("1") % 2 else 1.0
        ops.append(GateOp("PS", (target,), angle=sign * scale))
    last = _gray((1 << m) - 1).bit_length() - 1
    ops.append(GateOp("CNOT", (target,), (controls[last],)))
    return ops


def _mcry_ops(controls: Sequence[int], target: int, theta: float) -> list[GateOp]:
    # uniformly controlled rotation that is nonzero only on the all-ones branch
    if not controls:
        return [GateOp("RY", (target,), angle=theta)]
    m = len(controls)
    scale = theta / (1 << m)
    ops: list[GateOp] = []
    for i in range(1 << m):
        g = _gray(i)
        sign = -1.0 if bin(g).count("1") % 2 else 1.0
        ops.append(GateOp("RY", (target,), angle=sign * scale))
        bit = (g ^ _gray((i + 1) % (1 << m))).bit_length() - 1
        ops.append(GateOp("CNOT", (target,), (controls[bit],)))
    return ops


@dataclass(frozen=True)
class DecompositionResult:
    circuit: Circuit
    source: str
    max_deviation: float


def decompose_mcps(m: int, phi: float, verify: bool = True) -> DecompositionResult:
    """Ancilla-free {PS, CNOT} circuit for a phase gate with ``m`` controls.

    Controls are qubits ``0..m-1`` and the target is qubit ``m``. The
    returned deviation is the max-entry distance (up to global phase) from
    the direct MCPS matrix, or ``nan`` when ``m`` exceeds the dense
    verification bound or ``verify`` is off.
    """
    if m < 0:
        raise DomainError("control count must be nonnegative")
    controls = list(range(m))
    circ = Circuit(m + 1, _mcps_ops(controls, m, phi))
    deviation = math.nan
    if verify and m <= VERIFY_MAX_CONTROLS:
        direct = unitary_of(Circuit(m + 1).mcps(phi, controls, m))
        deviation = global_phase_distance(unitary_of(circ), direct)
    return DecompositionResult(circ, f"MCPS({phi!r}) controls={controls} target={m}", deviation)


def decompose_op(op: GateOp) -> list[GateOp]:
    if op.kind == "MCPS":
        return _mcps_ops(op.controls, op.targets[0], op.angle)
    if op.kind == "MCZ":
        return _mcps_ops(op.controls, op.targets[0], math.pi)
    if op.kind == "MCRY":
        return _mcry_ops(op.controls, op.targets[0], op.angle)
    return [op]


def decompose_circuit(circuit: Circuit) -> Circuit:
    """Expand every MCPS / MCZ / MCRY; other gates and barriers pass through."""
    out: list[GateOp] = []
    for op in circuit.ops:
        out.extend(decompose_op(op))
    return Circuit(circuit.n_qubits, out)


def resource_summary(circuit: Circuit, decompose: bool = True) -> dict:
    """Both depth conventions: native (MCPS depth 1) and fully decomposed."""
    summary = {"native": depth_report(circuit).to_dict()}
    if decompose:
        summary["decomposed"] = depth_report(decompose_circuit(circuit)).to_dict()
    return summary


def max_unitary_deviation(a: Circuit, b: Circuit) -> float:
    return global_phase_distance(unitary_of(a), unitary_of(b))


def is_elementary(circuit: Circuit) -> bool:
    allowed = {"PS", "RY", "RZ", "X", "H", "CNOT", "SWAP", "BARRIER"}
    return all(op.kind in allowed and len(op.controls) <= 1 for op in circuit.ops)


__all__ = [
    "DepthReport",
    "DecompositionResult",
    "analytic_depth_deqaaa",
    "analytic_depth_eqaaa",
    "analytic_depth_qaaa",
    "circuit_depth",
    "decompose_circuit",
    "decompose_mcps",
    "depth_report",
    "is_elementary",
    "max_unitary_deviation",
    "resource_summary",
]
