"""Circuit IR: Clifford gates, parameterized Pauli rotations, Pauli noise channels.

A circuit is an ordered op list over n qubits with m shared parameters.
Noise channels are tied to the rotation they immediately follow and carry
the same Pauli string; evaluating at noise strength mu = 0 is identical to
evaluating with all noise channels removed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Union

from .pauli import Hamiltonian, PauliString

CLIFFORD_KINDS_1Q = ("H", "S", "Sdg", "X", "Y", "Z")
CLIFFORD_KINDS_2Q = ("CX", "CZ", "SWAP")
CLIFFORD_KINDS = CLIFFORD_KINDS_1Q + CLIFFORD_KINDS_2Q


@dataclass(frozen=True)
class CliffordGate:
    kind: str
    targets: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.kind in CLIFFORD_KINDS_1Q:
            expected = 1
        elif self.kind in CLIFFORD_KINDS_2Q:
            expected = 2
        else:
            raise ValueError(f"unknown Clifford kind {self.kind!r}")
        if len(self.targets) != expected:
            raise ValueError(f"{self.kind} takes {expected} target(s)")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError("duplicate target qubits")


@dataclass(frozen=True)
class PauliRotation:
    """exp(i * phi * P / 2) with phi bound to parameter `param_index`."""

    pauli: PauliString
    param_index: int

    def __post_init__(self):
        if self.param_index < 0:
            raise ValueError("param_index must be non-negative")
        if not self.pauli.is_hermitian:
            raise ValueError("rotation Pauli must be Hermitian")


@dataclass(frozen=True)
class NoiseChannel:
    """E_P(mu): rho -> (1 - mu/2) rho + (mu/2) P rho P."""

    pauli: PauliString

    def __post_init__(self):
        if not self.pauli.is_hermitian:
            raise ValueError("noise Pauli must be Hermitian")


CircuitOp = Union[CliffordGate, PauliRotation, NoiseChannel]


@dataclass(frozen=True)
class Circuit:
    n: int
    ops: tuple[CircuitOp, ...]
    m: int

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        seen: set[int] = set()
        prev = None
        for op in self.ops:
            if isinstance(op, CliffordGate):
                for t in op.targets:
                    if not 0 <= t < self.n:
                        raise ValueError(f"target {t} out of range for n={self.n}")
            elif isinstance(op, PauliRotation):
                if op.pauli.n != self.n:
                    raise ValueError("rotation Pauli qubit count mismatch")
                if op.param_index >= self.m:
                    raise ValueError(
                        f"param_index {op.param_index} >= parameter count {self.m}"
                    )
                seen.add(op.param_index)
            elif isinstance(op, NoiseChannel):
                if op.pauli.n != self.n:
                    raise ValueError("noise Pauli qubit count mismatch")
                if not isinstance(prev, PauliRotation) or prev.pauli != op.pauli:
                    raise ValueError(
                        "noise channel must immediately follow a rotation "
                        "with the same Pauli string"
                    )
            else:
                raise TypeError(f"unknown op type {type(op)}")
            prev = op
        if seen != set(range(self.m)):
            missing = sorted(set(range(self.m)) - seen)
            raise ValueError(f"parameters never used: {missing}")

    @property
    def rotations(self) -> tuple[PauliRotation, ...]:
        return tuple(op for op in self.ops if isinstance(op, PauliRotation))

    def param_positions(self) -> dict[int, list[int]]:
        """Map param_index -> op indices of the rotations using it."""
        out: dict[int, list[int]] = {k: [] for k in range(self.m)}
        for i, op in enumerate(self.ops):
            if isinstance(op, PauliRotation):
                out[op.param_index].append(i)
        return out

    def params_appear_once(self) -> bool:
        return all(len(v) == 1 for v in self.param_positions().values())

    def without_noise(self) -> "Circuit":
        ops = tuple(op for op in self.ops if not isinstance(op, NoiseChannel))
        return Circuit(self.n, ops, self.m)


def attach_noise(circuit: Circuit) -> Circuit:
    """Insert one noise channel after every rotation (the injection protocol)."""
    ops: list[CircuitOp] = []
    for op in circuit.ops:
        if isinstance(op, NoiseChannel):
            continue
        ops.append(op)
        if isinstance(op, PauliRotation):
            ops.append(NoiseChannel(op.pauli))
    return Circuit(circuit.n, tuple(ops), circuit.m)


# --- JSON serialization -----------------------------------------------------
#
# Schema: {"n": int, "ops": [{"kind": ..., "targets": [...],
#                             "pauli": "IXYZ string", "param_index": int}]}
# Pauli strings are written most-significant-qubit-first; qubit 0 is the
# rightmost character.


def circuit_to_dict(circuit: Circuit) -> dict:
    ops = []
    for op in circuit.ops:
        if isinstance(op, CliffordGate):
            ops.append({"kind": op.kind, "targets": list(op.targets)})
        elif isinstance(op, PauliRotation):
            ops.append(
                {
                    "kind": "rotation",
                    "pauli": op.pauli.label,
                    "param_index": op.param_index,
                }
            )
        else:
            ops.append({"kind": "noise", "pauli": op.pauli.label})
    return {
        "n": circuit.n,
        "qubit_order": "qubit 0 = rightmost character",
        "ops": ops,
    }


def circuit_from_dict(doc: dict) -> Circuit:
    n = int(doc["n"])
    ops: list[CircuitOp] = []
    m = 0
    for entry in doc["ops"]:
        kind = entry["kind"]
        if kind in CLIFFORD_KINDS:
            ops.append(CliffordGate(kind, tuple(entry["targets"])))
        elif kind == "rotation":
            idx = int(entry["param_index"])
            m = max(m, idx + 1)
            ops.append(PauliRotation(_parse_pauli(entry["pauli"], n), idx))
        elif kind == "noise":
            ops.append(NoiseChannel(_parse_pauli(entry["pauli"], n)))
        else:
            raise ValueError(f"unknown op kind {kind!r}")
    return Circuit(n, tuple(ops), m)


def _parse_pauli(label: str, n: int) -> PauliString:
    p = PauliString.from_label(label)
    if p.n != n:
        raise ValueError(f"Pauli label length {p.n} does not match n={n}")
    return p


def hamiltonian_to_dict(h: Hamiltonian) -> list[dict]:
    return [{"coeff": c, "pauli": p.label} for c, p in h.terms]


def hamiltonian_from_dict(entries: list[dict], n: int) -> Hamiltonian:
    return Hamiltonian(
        tuple((float(e["coeff"]), _parse_pauli(e["pauli"], n)) for e in entries)
    )


def save_circuit(circuit: Circuit, path, hamiltonian: Hamiltonian | None = None):
    doc = circuit_to_dict(circuit)
    if hamiltonian is not None:
        doc["hamiltonian"] = hamiltonian_to_dict(hamiltonian)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)


def load_circuit(path) -> tuple[Circuit, Hamiltonian | None]:
    with open(path) as fh:
        doc = json.load(fh)
    circuit = circuit_from_dict(doc)
    ham = None
    if "hamiltonian" in doc:
        ham = hamiltonian_from_dict(doc["hamiltonian"], circuit.n)
    return circuit, ham
