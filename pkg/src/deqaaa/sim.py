"""Dense state-vector simulator.

Conventions
-----------
* Qubit 0 is the most significant bit of a basis index, so the basis state
  ``|x_0 x_1 ... x_{n-1}>`` has index ``int("x_0x_1...x_{n-1}", 2)``.
* Amplitudes are ``complex128`` throughout.
* Gates are applied in place on a private copy of the input amplitudes by
  updating amplitude pairs selected with integer indexing on a
  ``(2,) * n`` view of the vector.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import DomainError, SizeError

MAX_STATE_QUBITS = 24
MAX_UNITARY_QUBITS = 10

#: Gate kinds understood by the simulator. ``BARRIER`` is a scheduling fence
#: with no effect on the state; it is not counted as a gate.
GATE_KINDS = frozenset(
    {"X", "H", "RY", "RZ", "PS", "CNOT", "SWAP", "MCPS", "MCZ", "MCRY", "BARRIER"}
)
_ANGLE_KINDS = frozenset({"RY", "RZ", "PS", "MCPS", "MCRY"})
_SELF_INVERSE = frozenset({"X", "H", "CNOT", "SWAP", "MCZ", "BARRIER"})


def index_to_bits(index: int, n: int) -> str:
    """Bit string of ``index`` with qubit 0 as the leftmost (most significant) bit."""
    if not 0 <= index < (1 << n):
        raise DomainError(f"index {index} out of range for {n} bits")
    return format(index, f"0{n}b") if n else ""


def bits_to_index(bits: str) -> int:
    if not bits or set(bits) - {"0", "1"}:
        raise DomainError(f"not a bit string: {bits!r}")
    return int(bits, 2)


# ---------------------------------------------------------------------------
# Gates and circuits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GateOp:
    """A single gate. ``targets`` and ``controls`` are qubit indices."""

    kind: str
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    angle: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        object.__setattr__(self, "controls", tuple(int(q) for q in self.controls))
        kind = self.kind
        if kind not in GATE_KINDS:
            raise DomainError(f"unknown gate kind {kind!r}")
        if kind in _ANGLE_KINDS:
            if self.angle is None:
                raise DomainError(f"{kind} requires an angle")
            object.__setattr__(self, "angle", float(self.angle))
        elif self.angle is not None:
            raise DomainError(f"{kind} takes no angle")
        qubits = self.targets + self.controls
        if len(set(qubits)) != len(qubits):
            raise DomainError(f"{kind}: repeated qubit in {qubits}")
        if any(q < 0 for q in qubits):
            raise DomainError(f"{kind}: negative qubit index")
        n_t, n_c = len(self.targets), len(self.controls)
        if kind == "BARRIER":
            ok = n_c == 0 and n_t >= 1
        elif kind == "SWAP":
            ok = n_t == 2 and n_c == 0
        elif kind == "CNOT":
            ok = n_t == 1 and n_c == 1
        elif kind in ("MCPS", "MCZ", "MCRY"):
            ok = n_t == 1
        else:
            ok = n_t == 1 and n_c == 0
        if not ok:
            raise DomainError(
                f"{kind}: bad arity (targets={self.targets}, controls={self.controls})"
            )

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.controls + self.targets

    @property
    def is_gate(self) -> bool:
        return self.kind != "BARRIER"

    def inverse(self) -> "GateOp":
        if self.kind in _SELF_INVERSE:
            return self
        return GateOp(self.kind, self.targets, self.controls, -self.angle)

    def shifted(self, offset: int) -> "GateOp":
        return GateOp(
            self.kind,
            tuple(q + offset for q in self.targets),
            tuple(q + offset for q in self.controls),
            self.angle,
        )

    def to_ir(self) -> str:
        parts = ["GATE", self.kind]
        if self.angle is not None:
            parts.append(repr(self.angle))
        parts.append("controls=[" + ",".join(map(str, self.controls)) + "]")
        parts.append("targets=[" + ",".join(map(str, self.targets)) + "]")
        return " ".join(parts)


@dataclass
class Circuit:
    """Ordered gate list over ``n_qubits`` qubits.

    The builder methods append in place and return ``self`` so that small
    circuits can be written fluently; treat a circuit as frozen once it has
    been handed to another component.
    """

    n_qubits: int
    ops: list[GateOp] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise SizeError("a circuit needs at least one qubit")
        self.ops = list(self.ops)
        for op in self.ops:
            self._check(op)

    def _check(self, op: GateOp) -> None:
        if any(q >= self.n_qubits for q in op.qubits):
            raise SizeError(
                f"{op.kind} on qubits {op.qubits} exceeds circuit width {self.n_qubits}"
            )

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self) -> Iterator[GateOp]:
        return iter(self.ops)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise SizeError("cannot concatenate circuits of different widths")
        return Circuit(self.n_qubits, self.ops + other.ops)

    def append(self, op: GateOp) -> "Circuit":
        self._check(op)
        self.ops.append(op)
        return self

    def extend(self, ops: Iterable[GateOp] | "Circuit") -> "Circuit":
        for op in ops:
            self.append(op)
        return self

    def copy(self) -> "Circuit":
        return Circuit(self.n_qubits, list(self.ops))

    # fluent builders
    def x(self, q: int) -> "Circuit":
        return self.append(GateOp("X", (q,)))

    def h(self, q: int) -> "Circuit":
        return self.append(GateOp("H", (q,)))

    def ry(self, theta: float, q: int) -> "Circuit":
        return self.append(GateOp("RY", (q,), angle=theta))

    def rz(self, theta: float, q: int) -> "Circuit":
        return self.append(GateOp("RZ", (q,), angle=theta))

    def ps(self, phi: float, q: int) -> "Circuit":
        return self.append(GateOp("PS", (q,), angle=phi))

    def cnot(self, control: int, target: int) -> "Circuit":
        return self.append(GateOp("CNOT", (target,), (control,)))

    def swap(self, a: int, b: int) -> "Circuit":
        return self.append(GateOp("SWAP", (a, b)))

    def mcps(self, phi: float, controls: Sequence[int], target: int) -> "Circuit":
        return self.append(GateOp("MCPS", (target,), tuple(controls), phi))

    def mcz(self, controls: Sequence[int], target: int) -> "Circuit":
        return self.append(GateOp("MCZ", (target,), tuple(controls)))

    def mcry(self, theta: float, controls: Sequence[int], target: int) -> "Circuit":
        return self.append(GateOp("MCRY", (target,), tuple(controls), theta))

    def barrier(self, qubits: Sequence[int] | None = None) -> "Circuit":
        qs = tuple(range(self.n_qubits)) if qubits is None else tuple(qubits)
        return self.append(GateOp("BARRIER", qs))

    def inverse(self) -> "Circuit":
        return Circuit(self.n_qubits, [op.inverse() for op in reversed(self.ops)])

    def embedded(self, offset: int, n_total: int) -> "Circuit":
        """This circuit acting on qubits ``offset .. offset+n_qubits-1`` of a wider register."""
        if offset < 0 or offset + self.n_qubits > n_total:
            raise SizeError("embedding does not fit in the target register")
        return Circuit(n_total, [op.shifted(offset) for op in self.ops])

    @property
    def gate_ops(self) -> list[GateOp]:
        return [op for op in self.ops if op.is_gate]

    def to_ir(self) -> str:
        lines = [f"# n_qubits={self.n_qubits}"]
        lines.extend(op.to_ir() for op in self.ops)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_ir(cls, text: str, n_qubits: int | None = None) -> "Circuit":
        return parse_ir(text, n_qubits)


_IR_LINE = re.compile(
    r"^GATE\s+(?P<kind>[A-Z]+)(?:\s+(?P<angle>[^\s]+))?\s+"
    r"controls=\[(?P<controls>[\d,\s]*)\]\s+targets=\[(?P<targets>[\d,\s]*)\]\s*$"
)


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.replace(" ", "").split(",") if tok)


def parse_ir(text: str, n_qubits: int | None = None) -> Circuit:
    """Parse the line-oriented text IR produced by :meth:`Circuit.to_ir`."""
    ops: list[GateOp] = []
    width = n_qubits
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = re.match(r"#\s*n_qubits\s*=\s*(\d+)", line)
            if m and width is None:
                width = int(m.group(1))
            continue
        m = _IR_LINE.match(line)
        if not m:
            raise DomainError(f"IR line {lineno}: cannot parse {raw!r}")
        angle = float(m.group("angle")) if m.group("angle") is not None else None
        ops.append(
            GateOp(m.group("kind"), _int_list(m.group("targets")), _int_list(m.group("controls")), angle)
        )
    if width is None:
        width = 1 + max((q for op in ops for q in op.qubits), default=0)
    return Circuit(width, ops)


# ---------------------------------------------------------------------------
# States and distributions
# ---------------------------------------------------------------------------


def _check_qubits(n: int, cap: int) -> None:
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise SizeError(f"qubit count must be an integer, got {n!r}")
    if not 1 <= n <= cap:
        raise SizeError(f"qubit count {n} outside supported range 1..{cap}")


@dataclass(frozen=True)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.shape[0] != (1 << self.n_qubits):
            raise SizeError(
                f"expected {1 << self.n_qubits} amplitudes for {self.n_qubits} qubits, got {amps.shape}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def __len__(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def amplitude(self, bits: str) -> complex:
        return complex(self.amplitudes[bits_to_index(bits)])


@dataclass(frozen=True)
class Distribution:
    n_bits: int
    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.shape[0] != (1 << self.n_bits):
            raise SizeError(f"expected {1 << self.n_bits} probabilities, got {probs.shape}")
        if np.any(probs < 0):
            raise DomainError("probabilities must be nonnegative")
        if abs(probs.sum() - 1.0) > 1e-9:
            raise DomainError(f"probabilities sum to {probs.sum()!r}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    def __getitem__(self, bits: str) -> float:
        return float(self.probs[bits_to_index(bits)])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bitstring", "value"])
            for i, p in enumerate(self.probs):
                w.writerow([index_to_bits(i, self.n_bits), repr(float(p))])


@dataclass(frozen=True)
class Histogram:
    n_bits: int
    shots: int
    counts: Mapping[int, int]

    def __post_init__(self) -> None:
        counts = {int(k): int(v) for k, v in sorted(self.counts.items()) if v}
        if any(v < 0 for v in counts.values()):
            raise DomainError("negative count")
        if sum(counts.values()) != self.shots:
            raise DomainError("counts do not sum to shots")
        object.__setattr__(self, "counts", counts)

    def to_distribution(self) -> Distribution:
        probs = np.zeros(1 << self.n_bits)
        for k, v in self.counts.items():
            probs[k] = v / self.shots
        return Distribution(self.n_bits, probs)

    def to_csv(self, path: str | Path, reverse_bits: bool = False) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bitstring", "count", "probability"])
            for k, v in self.counts.items():
                bits = index_to_bits(k, self.n_bits)
                w.writerow([bits[::-1] if reverse_bits else bits, v, repr(v / self.shots)])


def new_zero_state(n: int, max_qubits: int = MAX_STATE_QUBITS) -> StateVector:
    _check_qubits(n, max_qubits)
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n, amps)


def exact_distribution(state: StateVector) -> Distribution:
    probs = np.abs(state.amplitudes) ** 2
    return Distribution(state.n_qubits, probs / probs.sum())


def success_probability(dist: Distribution, targets: Iterable[str] | "object") -> float:
    """Total probability mass on the target strings.

    ``targets`` may be a :class:`~deqaaa.amplify.TargetSpec` or any iterable
    of bit strings.
    """
    strings = list(getattr(targets, "targets", targets))
    if not strings:
        raise DomainError("empty target set")
    idx = []
    for s in strings:
        if len(s) != dist.n_bits:
            raise DomainError(f"target {s!r} does not have width {dist.n_bits}")
        idx.append(bits_to_index(s))
    return float(dist.probs[sorted(set(idx))].sum())


def sample(state: StateVector, shots: int, seed: int) -> Histogram:
    """Seeded i.i.d. measurement in the computational basis.

    Uses numpy's PCG64 bit generator (``np.random.Generator(PCG64(seed))``)
    and inverse-CDF lookup, drawn sequentially so a given
    ``(state, shots, seed)`` always yields the same histogram.
    """
    if shots < 1:
        raise DomainError("shots must be >= 1")
    probs = exact_distribution(state).probs
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random(shots)
    outcomes = np.searchsorted(cdf, u, side="right")
    # u can land exactly on a trailing flat segment; clamp to the last outcome with mass
    last = int(np.flatnonzero(probs)[-1])
    outcomes = np.minimum(outcomes, last)
    values, counts = np.unique(outcomes, return_counts=True)
    return Histogram(state.n_qubits, shots, dict(zip(values.tolist(), counts.tolist())))


def kl_divergence(approx: Distribution, exact: Distribution) -> float:
    """``sum_x approx(x) * ln(approx(x) / exact(x))``; ``inf`` if supports mismatch."""
    if approx.n_bits != exact.n_bits:
        raise SizeError("distributions have different bit widths")
    p, q = approx.probs, exact.probs
    mask = p > 0
    if np.any(q[mask] == 0):
        return math.inf
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


# ---------------------------------------------------------------------------
# Gate kernels
# ---------------------------------------------------------------------------

_SQRT1_2 = 1.0 / math.sqrt(2.0)
_H = np.array([[_SQRT1_2, _SQRT1_2], [_SQRT1_2, -_SQRT1_2]], dtype=np.complex128)


def _ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def _rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def _index(n: int, fixed: Mapping[int, int]) -> tuple:
    idx: list = [slice(None)] * n
    for q, v in fixed.items():
        idx[q] = v
    return tuple(idx)


def _apply_1q(t: np.ndarray, n: int, mat: np.ndarray, target: int, controls: Sequence[int]) -> None:
    ctrl = {c: 1 for c in controls}
    i0 = _index(n, {**ctrl, target: 0})
    i1 = _index(n, {**ctrl, target: 1})
    a0 = t[i0].copy()
    a1 = t[i1]
    t[i0] = mat[0, 0] * a0 + mat[0, 1] * a1
    t[i1] = mat[1, 0] * a0 + mat[1, 1] * a1


def _apply_x(t: np.ndarray, n: int, target: int, controls: Sequence[int]) -> None:
    ctrl = {c: 1 for c in controls}
    i0 = _index(n, {**ctrl, target: 0})
    i1 = _index(n, {**ctrl, target: 1})
    a0 = t[i0].copy()
    t[i0] = t[i1]
    t[i1] = a0


def _apply_phase(t: np.ndarray, n: int, qubits: Sequence[int], phase: complex) -> None:
    t[_index(n, {q: 1 for q in qubits})] *= phase


def _apply_op(t: np.ndarray, n: int, op: GateOp) -> None:
    kind = op.kind
    if kind == "BARRIER":
        return
    if kind == "X":
        _apply_x(t, n, op.targets[0], ())
    elif kind == "CNOT":
        _apply_x(t, n, op.targets[0], op.controls)
    elif kind == "H":
        _apply_1q(t, n, _H, op.targets[0], ())
    elif kind == "RY":
        _apply_1q(t, n, _ry(op.angle), op.targets[0], ())
    elif kind == "MCRY":
        _apply_1q(t, n, _ry(op.angle), op.targets[0], op.controls)
    elif kind == "RZ":
        _apply_1q(t, n, _rz(op.angle), op.targets[0], ())
    elif kind in ("PS", "MCPS"):
        _apply_phase(t, n, op.qubits, np.exp(1j * op.angle))
    elif kind == "MCZ":
        # identical to MCPS(pi) by construction
        _apply_phase(t, n, op.qubits, np.exp(1j * math.pi))
    elif kind == "SWAP":
        a, b = op.targets
        i01 = _index(n, {a: 0, b: 1})
        i10 = _index(n, {a: 1, b: 0})
        tmp = t[i01].copy()
        t[i01] = t[i10]
        t[i10] = tmp
    else:  # pragma: no cover - guarded by GateOp validation
        raise DomainError(f"unsupported gate {kind}")


def _run_ops(data: np.ndarray, n: int, ops: Iterable[GateOp]) -> None:
    """Apply ``ops`` in place to ``data`` of shape ``(2**n,)`` or ``(2**n, batch)``."""
    t = data.reshape((2,) * n + data.shape[1:])
    for op in ops:
        _apply_op(t, n, op)


def apply_circuit(state: StateVector, circuit: Circuit) -> StateVector:
    if state.n_qubits != circuit.n_qubits:
        raise SizeError(
            f"state has {state.n_qubits} qubits but circuit has {circuit.n_qubits}"
        )
    data = np.array(state.amplitudes, dtype=np.complex128, copy=True)
    _run_ops(data, state.n_qubits, circuit.ops)
    return StateVector(state.n_qubits, data)


def unitary_of(circuit: Circuit, max_qubits: int = MAX_UNITARY_QUBITS) -> np.ndarray:
    """Dense matrix of the circuit; column ``k`` is the image of basis state ``k``."""
    n = circuit.n_qubits
    _check_qubits(n, max_qubits)
    dim = 1 << n
    data = np.eye(dim, dtype=np.complex128)
    _run_ops(data, n, circuit.ops)
    return data


def global_phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Max-entry distance between ``a`` and ``b`` after aligning global phase.

    The phase is taken from the overlap ``<b|a>``, which is the optimal
    alignment whenever the two arrays agree up to a phase.
    """
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.shape != b.shape:
        raise SizeError("shape mismatch")
    overlap = np.vdot(b, a)
    c = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.max(np.abs(a - c * b)))
