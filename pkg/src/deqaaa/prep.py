"""State preparation: rotation-tree circuits and a direct (circuit-free) path."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, SizeError
from .sim import Circuit, StateVector, bits_to_index, index_to_bits

NORM_TOL = 1e-9
_ZERO_AMP = 1e-14
_ANGLE_EPS = 1e-15


@dataclass(frozen=True)
class AmplitudeSpec:
    n_qubits: int
    amps: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amps, dtype=np.complex128)
        if amps.ndim != 1 or amps.shape[0] != (1 << self.n_qubits):
            raise SizeError(
                f"expected {1 << self.n_qubits} amplitudes for {self.n_qubits} qubits"
            )
        norm = np.linalg.norm(amps)
        if not np.isfinite(norm) or norm == 0:
            raise DomainError("amplitude vector is zero or not finite")
        if abs(norm - 1.0) > NORM_TOL:
            raise DomainError(
                f"amplitude norm {norm!r} differs from 1; pass normalize=True to rescale"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @classmethod
    def from_amplitudes(cls, values: Sequence[complex], normalize: bool = False) -> "AmplitudeSpec":
        amps = np.asarray(values, dtype=np.complex128)
        size = amps.shape[0]
        n = size.bit_length() - 1
        if size < 2 or (1 << n) != size:
            raise SizeError(f"amplitude count {size} is not a power of two >= 2")
        if normalize:
            norm = np.linalg.norm(amps)
            if not np.isfinite(norm) or norm == 0:
                raise DomainError("cannot normalize a zero vector")
            amps = amps / norm
        return cls(n, amps)

    @classmethod
    def from_csv(cls, path: str | Path, normalize: bool = False) -> "AmplitudeSpec":
        """Read ``bitstring,real,imag`` rows; missing basis states are zero."""
        rows: dict[str, complex] = {}
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().lower() == "bitstring":
                    continue
                bits = row[0].strip()
                imag = float(row[2]) if len(row) > 2 and row[2].strip() else 0.0
                rows[bits] = complex(float(row[1]), imag)
        if not rows:
            raise DomainError(f"{path}: no amplitudes")
        widths = {len(b) for b in rows}
        if len(widths) != 1:
            raise DomainError(f"{path}: bit strings of mixed width")
        n = widths.pop()
        amps = np.zeros(1 << n, dtype=np.complex128)
        for bits, value in rows.items():
            amps[bits_to_index(bits)] = value
        return cls.from_amplitudes(amps, normalize=normalize)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bitstring", "real", "imag"])
            for i, a in enumerate(self.amps):
                w.writerow([index_to_bits(i, self.n_qubits), repr(float(a.real)), repr(float(a.imag))])


def prepare_direct(spec: AmplitudeSpec) -> StateVector:
    return StateVector(spec.n_qubits, spec.amps / np.linalg.norm(spec.amps))


def _gray(i: int) -> int:
    return i ^ (i >> 1)


def _toggle_to(circ: Circuit, current: int, wanted: int, qubits: Sequence[int]) -> int:
    """Emit X gates so that the flip mask over ``qubits`` goes from ``current`` to ``wanted``.

    Bit ``b`` of a mask refers to ``qubits[len(qubits) - 1 - b]`` (MSB first).
    """
    diff = current ^ wanted
    k = len(qubits)
    for pos, q in enumerate(qubits):
        if diff >> (k - 1 - pos) & 1:
            circ.x(q)
    return wanted


def _branch_blocks(
    circ: Circuit,
    prefixes: Iterable[int],
    controls: Sequence[int],
    emit,
) -> None:
    """Run ``emit(prefix)`` with the control qubits X-conjugated so that ``prefix`` reads as all ones.

    Prefixes are visited in Gray-code order to minimise the X toggles
    between consecutive branches.
    """
    k = len(controls)
    full = (1 << k) - 1
    wanted = set(prefixes)
    mask = 0
    for i in range(1 << k):
        p = _gray(i)
        if p not in wanted:
            continue
        mask = _toggle_to(circ, mask, full ^ p, controls)
        emit(p)
    _toggle_to(circ, mask, 0, controls)


def encode_amplitudes(spec: AmplitudeSpec) -> Circuit:
    """Top-down rotation-tree circuit preparing ``spec`` from ``|0...0>`` (up to global phase).

    Qubit ``k`` receives, for every prefix ``x_0..x_{k-1}`` with nonzero
    weight, an RY by the angle that splits that branch's probability between
    ``x_k = 0`` and ``x_k = 1``. When every live branch uses the same angle a
    plain RY is emitted instead of the multi-controlled family. Complex (or
    negative) amplitudes are then fixed by one MCPS per basis state whose
    phase differs from the reference phase of the first nonzero amplitude.
    """
    n = spec.n_qubits
    amps = spec.amps / np.linalg.norm(spec.amps)
    probs = np.abs(amps) ** 2
    circ = Circuit(n)

    for k in range(n):
        split = probs.reshape(1 << k, 2, -1).sum(axis=2)
        a0 = np.sqrt(split[:, 0])
        a1 = np.sqrt(split[:, 1])
        live = (a0 + a1) > 0
        theta = 2.0 * np.arctan2(a1, a0)
        live_angles = theta[live]
        if live_angles.size == 0:
            continue
        if np.allclose(live_angles, live_angles[0], rtol=0.0, atol=1e-12):
            if abs(live_angles[0]) > _ANGLE_EPS:
                circ.ry(float(live_angles[0]), k)
            continue
        rotate = [p for p in range(1 << k) if live[p] and abs(theta[p]) > _ANGLE_EPS]
        controls = list(range(k))
        _branch_blocks(circ, rotate, controls, lambda p: circ.mcry(float(theta[p]), controls, k))

    nz = np.flatnonzero(np.abs(amps) > _ZERO_AMP)
    ref = np.angle(amps[nz[0]])
    phases = {}
    for x in nz:
        d = math.remainder(float(np.angle(amps[x]) - ref), 2 * math.pi)
        if abs(d) > _ANGLE_EPS:
            phases[int(x)] = d
    if phases:
        qubits = list(range(n))
        _branch_blocks(
            circ, phases, qubits, lambda x: circ.mcps(phases[x], qubits[:-1], qubits[-1])
        )
    return circ
