"""Single-register amplitude amplification (standard and exact).

Both algorithms run on one of two interchangeable backends:

``"circuit"``
    builds the full gate sequence (preparation, oracle blocks, inverse
    preparation, zero-state reflection) and simulates it gate by gate.
``"projector"``
    applies the oracle as a diagonal phase mask and the reflection
    ``A R_0(phi) A^dagger`` as ``I + (e^{i phi} - 1)|psi><psi|`` directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, InfeasibleError, SizeError
from .prep import AmplitudeSpec, encode_amplitudes, prepare_direct
from .sim import (
    Circuit,
    Histogram,
    StateVector,
    apply_circuit,
    bits_to_index,
    exact_distribution,
    index_to_bits,
    new_zero_state,
    sample,
    success_probability,
)

ONE_THRESHOLD = 1e-9
# guards floor() against round-off when the exact value is an integer
_FLOOR_EPS = 1e-12
BACKENDS = ("circuit", "projector")


@dataclass(frozen=True)
class TargetSpec:
    """Target strings ``X_g``; insertion order is kept because oracle blocks follow it."""

    n_bits: int
    targets: tuple[str, ...]

    def __post_init__(self) -> None:
        seen: dict[str, None] = {}
        for t in self.targets:
            t = str(t)
            if len(t) != self.n_bits or set(t) - {"0", "1"}:
                raise DomainError(f"target {t!r} is not a {self.n_bits}-bit string")
            seen.setdefault(t, None)
        if not seen:
            raise DomainError("target set is empty")
        if len(seen) >= (1 << self.n_bits):
            raise DomainError("target set covers every basis state")
        object.__setattr__(self, "targets", tuple(seen))

    @classmethod
    def of(cls, n_bits: int, targets: Iterable[int | str]) -> "TargetSpec":
        """Accept bit strings or basis indices (qubit 0 = most significant bit)."""
        strings = [index_to_bits(t, n_bits) if isinstance(t, (int, np.integer)) else t for t in targets]
        return cls(n_bits, tuple(strings))

    def __len__(self) -> int:
        return len(self.targets)

    def __iter__(self):
        return iter(self.targets)

    @property
    def indices(self) -> list[int]:
        return [bits_to_index(t) for t in self.targets]


# ---------------------------------------------------------------------------
# Parameter formulas
# ---------------------------------------------------------------------------


def _check_probability(p: float) -> None:
    if not (0.0 < p <= 1.0):
        raise DomainError(f"probability must lie in (0, 1], got {p!r}")


def iterations_qaaa(p_g: float) -> int:
    _check_probability(p_g)
    return int(math.floor(math.pi / (4 * math.asin(math.sqrt(p_g))) + _FLOOR_EPS))


def iterations_eqaaa(p: float) -> int:
    _check_probability(p)
    j = math.floor(math.pi / (4 * math.asin(math.sqrt(p))) - 0.5 + _FLOOR_EPS)
    return max(0, int(j))


def phase_angle(p: float, J: int) -> float:
    _check_probability(p)
    if J < 0:
        raise DomainError("iteration parameter must be nonnegative")
    ratio = math.sin(math.pi / (4 * J + 6)) / math.sqrt(p)
    if ratio > 1 + 1e-12:
        raise DomainError(f"no phase angle for p={p!r} with J={J}: arcsin argument {ratio!r} > 1")
    return 2 * math.asin(min(ratio, 1.0))


def predicted_success_qaaa(p_g: float, r: int) -> float:
    _check_probability(p_g)
    if r < 0:
        raise DomainError("r must be nonnegative")
    return math.sin((2 * r + 1) * math.asin(math.sqrt(p_g))) ** 2


@dataclass(frozen=True)
class RotationGeometry:
    alpha: float
    beta: float
    n_x: float
    n_y: float
    n_z: float
    omega: float

    @property
    def axis(self) -> tuple[float, float, float]:
        return (self.n_x, self.n_y, self.n_z)


def rotation_geometry(p_g: float, phi: float) -> RotationGeometry:
    """Rotation angle, axis and total sweep of one exact amplification step."""
    _check_probability(p_g)
    if not (0.0 <= phi <= math.pi):
        raise DomainError("phase angle must lie in [0, pi]")
    theta = math.asin(math.sqrt(p_g))
    half = phi / 2
    beta = math.asin(math.sin(half) * math.sin(theta))
    cos_beta = math.cos(beta)
    if cos_beta < 1e-15:
        raise DomainError("rotation axis undefined at p_g = 1, phi = pi")
    # cos(theta) * tan(theta) written as sin(theta) so that p_g = 1 stays finite
    n_x = math.cos(theta) / cos_beta * math.cos(half)
    n_y = math.cos(theta) / cos_beta * math.sin(half)
    n_z = math.sin(theta) / cos_beta * math.cos(half)
    omega = 2 * (math.pi / 2 - math.asin(math.sin(half) * math.sqrt(p_g)))
    return RotationGeometry(4 * beta, beta, n_x, n_y, n_z, omega)


# ---------------------------------------------------------------------------
# Oracles and reflections
# ---------------------------------------------------------------------------


def _target_strings(targets: TargetSpec | Iterable[str], n: int) -> list[str]:
    strings = list(dict.fromkeys(getattr(targets, "targets", targets)))
    if not strings:
        raise DomainError("empty target set")
    for s in strings:
        if len(s) != n or set(s) - {"0", "1"}:
            raise DomainError(f"target {s!r} is not a {n}-bit string")
    return strings


def build_phase_oracle(targets: TargetSpec | Iterable[str], phi: float, n: int) -> Circuit:
    """``|x> -> e^{i phi}|x>`` for targets, identity elsewhere.

    One block per target: X on the qubits where the target bit is 0, a
    phase gate on all ``n`` qubits, and the same X layer again. Blocks are
    separated by barriers. ``phi == pi`` emits ``MCZ``.
    """
    circ = Circuit(n)
    for k, bits in enumerate(_target_strings(targets, n)):
        if k:
            circ.barrier()
        flips = [q for q, b in enumerate(bits) if b == "0"]
        for q in flips:
            circ.x(q)
        if phi == math.pi:
            circ.mcz(range(n - 1), n - 1)
        else:
            circ.mcps(phi, range(n - 1), n - 1)
        for q in flips:
            circ.x(q)
    return circ


def build_zero_reflection(n: int, phi: float) -> Circuit:
    return build_phase_oracle(["0" * n], phi, n)


def apply_target_phase(state: StateVector, targets: TargetSpec | Iterable[str], phi: float) -> StateVector:
    """Diagonal action of the phase oracle without building gates."""
    idx = [bits_to_index(s) for s in _target_strings(targets, state.n_qubits)]
    amps = np.array(state.amplitudes)
    amps[idx] *= np.exp(1j * phi)
    return StateVector(state.n_qubits, amps)


def reflect_about_state(state: StateVector, psi: StateVector, phi: float) -> StateVector:
    """``(I + (e^{i phi} - 1)|psi><psi|)`` applied to ``state``."""
    if state.n_qubits != psi.n_qubits:
        raise SizeError("state and reflection axis have different sizes")
    overlap = np.vdot(psi.amplitudes, state.amplitudes)
    out = state.amplitudes + (np.exp(1j * phi) - 1) * overlap * psi.amplitudes
    return StateVector(state.n_qubits, out)


def _join(n: int, segments: Sequence[Circuit], qubits: Sequence[int] | None = None) -> Circuit:
    out = Circuit(n)
    for k, seg in enumerate(segments):
        if k:
            out.barrier(qubits)
        out.extend(seg)
    return out


def amplification_step(prep: Circuit, targets: TargetSpec | Iterable[str], phi: float) -> Circuit:
    """``prep . R_0(phi) . prep^dagger . R_f(phi)`` as a circuit (gate order: R_f first)."""
    n = prep.n_qubits
    return _join(
        n,
        [
            build_phase_oracle(targets, phi, n),
            prep.inverse(),
            build_zero_reflection(n, phi),
            prep,
        ],
    )


def amplification_circuit(
    prep: Circuit, targets: TargetSpec | Iterable[str], phi: float, repetitions: int
) -> Circuit:
    """Preparation followed by ``repetitions`` amplification steps, barrier-separated."""
    step = amplification_step(prep, targets, phi)
    return _join(prep.n_qubits, [prep] + [step] * repetitions)


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------


@dataclass
class RunReport:
    algorithm: str
    n_qubits: int
    targets: tuple[str, ...]
    backend: str
    p_initial: float
    iterations: int
    phase_angle: float
    p_final: float
    final_state: StateVector
    circuit: Circuit | None = None
    resources: dict = field(default_factory=dict)
    histogram: Histogram | None = None
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self, histogram_path: str | None = None) -> dict:
        out = {
            "algorithm": self.algorithm,
            "n": self.n_qubits,
            "targets": list(self.targets),
            "backend": self.backend,
            "p_initial": self.p_initial,
            "iterations": self.iterations,
            "phase_angle": self.phase_angle,
            "p_final": self.p_final,
            "gate_count": self.resources.get("native", {}).get("gate_count"),
            "depth": self.resources.get("native", {}).get("depth"),
            "resources": self.resources,
            "seed": self.seed,
            "histogram_path": histogram_path,
        }
        out.update(self.extra)
        return out


def _check_backend(backend: str) -> None:
    if backend not in BACKENDS:
        raise DomainError(f"unknown backend {backend!r}; expected one of {BACKENDS}")


def _resources(circuit: Circuit, decompose: bool) -> dict:
    from .metrics import resource_summary

    return resource_summary(circuit, decompose=decompose)


def _amplify(
    algorithm: str,
    initial: AmplitudeSpec,
    targets: TargetSpec,
    backend: str,
    choose,
    prep: Circuit | None,
    shots: int,
    seed: int | None,
    decompose: bool,
) -> RunReport:
    _check_backend(backend)
    n = initial.n_qubits
    if targets.n_bits != n:
        raise SizeError(f"targets have width {targets.n_bits}, state has {n} qubits")
    prep = encode_amplitudes(initial) if prep is None else prep
    if backend == "circuit":
        psi = apply_circuit(new_zero_state(n), prep)
    else:
        psi = prepare_direct(initial)
    p0 = success_probability(exact_distribution(psi), targets)
    if p0 <= 0:
        raise InfeasibleError("initial state has no overlap with the target set")
    reps, phi, extra = choose(p0)

    circuit = amplification_circuit(prep, targets, phi, reps)
    if backend == "circuit":
        run = circuit
        if decompose:
            from .metrics import decompose_circuit

            run = decompose_circuit(circuit)
        final = apply_circuit(new_zero_state(n), run)
    else:
        final = psi
        for _ in range(reps):
            final = apply_target_phase(final, targets, phi)
            final = reflect_about_state(final, psi, phi)
    p_final = success_probability(exact_distribution(final), targets)
    hist = sample(final, shots, seed if seed is not None else 0) if shots else None
    return RunReport(
        algorithm=algorithm,
        n_qubits=n,
        targets=targets.targets,
        backend=backend,
        p_initial=p0,
        iterations=reps,
        phase_angle=phi,
        p_final=p_final,
        final_state=final,
        circuit=circuit,
        resources=_resources(circuit, decompose),
        histogram=hist,
        seed=seed,
        extra=extra,
    )


def qaaa_run(
    initial: AmplitudeSpec,
    targets: TargetSpec,
    backend: str = "projector",
    *,
    prep: Circuit | None = None,
    shots: int = 0,
    seed: int | None = None,
    decompose: bool = False,
) -> RunReport:
    """Standard amplitude amplification: ``r`` applications of ``Q``."""

    def choose(p0: float):
        r = iterations_qaaa(p0)
        return r, math.pi, {"r": r, "predicted_p_final": predicted_success_qaaa(p0, r)}

    return _amplify("qaaa", initial, targets, backend, choose, prep, shots, seed, decompose)


def eqaaa_run(
    initial: AmplitudeSpec,
    targets: TargetSpec,
    backend: str = "projector",
    *,
    prep: Circuit | None = None,
    shots: int = 0,
    seed: int | None = None,
    decompose: bool = False,
) -> RunReport:
    """Exact amplitude amplification: ``J + 1`` applications of ``EQ`` at angle ``phi``.

    Iterations are skipped when the initial success probability is already
    within ``1e-9`` of one.
    """

    def choose(p0: float):
        j = iterations_eqaaa(p0)
        phi = phase_angle(p0, j)
        if p0 >= 1 - ONE_THRESHOLD:
            return 0, phi, {"J": j, "skipped": True}
        return j + 1, phi, {"J": j, "skipped": False}

    return _amplify("eqaaa", initial, targets, backend, choose, prep, shots, seed, decompose)
