"""Shared test utilities: random problem instances and independent oracles.

The oracles here deliberately avoid the package's tensor-contraction code
paths: dense matrices are built by explicit Kronecker products and circuits
are evolved as statevectors / full-dimension matrix products, so agreement
with the package is meaningful.
"""
from __future__ import annotations

import numpy as np

from noisereg import (
    Circuit,
    CliffordGate,
    Hamiltonian,
    NoiseChannel,
    PauliRotation,
    PauliString,
)
from noisereg.circuit import CLIFFORD_KINDS_1Q, CLIFFORD_KINDS_2Q
from noisereg.simulator import GATE_MATRICES

PAULI_KINDS = "XYZ"


def random_pauli(rng: np.random.Generator, n: int, max_weight: int | None = None) -> PauliString:
    """Non-identity Hermitian Pauli string of weight 1..max_weight."""
    max_weight = min(max_weight or n, n)
    weight = int(rng.integers(1, max_weight + 1))
    support = rng.choice(n, size=weight, replace=False)
    p = PauliString.identity(n)
    for q in support:
        p = p * PauliString.single(n, int(q), PAULI_KINDS[rng.integers(3)])
    if not p.is_hermitian:  # products of Hermitian strings can pick up -1
        p = PauliString(n, p.x_mask, p.z_mask, (p.phase_exp + 2) % 4)
    assert p.is_hermitian
    return p


def random_hamiltonian(rng: np.random.Generator, n: int, n_terms: int = 3) -> Hamiltonian:
    terms = tuple(
        (float(rng.uniform(-1.0, 1.0)), random_pauli(rng, n)) for _ in range(n_terms)
    )
    return Hamiltonian(terms)


def random_circuit(
    rng: np.random.Generator,
    n: int,
    m: int,
    n_cliffords: int = 4,
    noise: bool = True,
    shared: bool = False,
) -> Circuit:
    """Random interleaving of Clifford gates and m noise-instrumented
    rotations.  With shared=False each parameter is used exactly once (the
    precondition for exact 3-point Fourier extraction)."""
    ops: list = []
    param_order = list(rng.permutation(m))
    if shared:
        param_order += [int(rng.integers(m)) for _ in range(m // 2)]
    clifford_slots = set(
        rng.choice(
            len(param_order) + n_cliffords, size=n_cliffords, replace=False
        )
    )
    it = iter(param_order)
    for slot in range(len(param_order) + n_cliffords):
        if slot in clifford_slots:
            ops.append(random_clifford(rng, n))
        else:
            pauli = random_pauli(rng, n)
            ops.append(PauliRotation(pauli, int(next(it))))
            if noise:
                ops.append(NoiseChannel(pauli))
    return Circuit(n, tuple(ops), m)


def random_clifford(rng: np.random.Generator, n: int) -> CliffordGate:
    if n >= 2 and rng.random() < 0.4:
        kind = CLIFFORD_KINDS_2Q[rng.integers(len(CLIFFORD_KINDS_2Q))]
        targets = tuple(int(q) for q in rng.choice(n, size=2, replace=False))
        return CliffordGate(kind, targets)
    kind = CLIFFORD_KINDS_1Q[rng.integers(len(CLIFFORD_KINDS_1Q))]
    return CliffordGate(kind, (int(rng.integers(n)),))


def random_density_matrix(rng: np.random.Generator, n: int) -> np.ndarray:
    """Full-rank random state via a normalized Wishart-like construction."""
    dim = 2**n
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


# --- independent dense oracle ------------------------------------------------


def embed(small: np.ndarray, targets: tuple[int, ...], n: int) -> np.ndarray:
    """Lift a gate on `targets` (most-significant listed first) to 2^n."""
    dim = 2**n
    k = len(targets)
    out = np.zeros((dim, dim), dtype=np.complex128)
    rest = [q for q in range(n) if q not in targets]
    for row in range(2**k):
        for col in range(2**k):
            if small[row, col] == 0:
                continue
            for fill in range(2 ** len(rest)):
                base = 0
                for j, q in enumerate(rest):
                    base |= ((fill >> j) & 1) << q
                r = base
                c = base
                for j, q in enumerate(reversed(targets)):
                    r |= ((row >> j) & 1) << q
                    c |= ((col >> j) & 1) << q
                out[r, c] = small[row, col]
    return out


def oracle_unitary(circuit: Circuit, phi: np.ndarray) -> np.ndarray:
    """Full 2^n x 2^n unitary of the noiseless circuit, built gate by gate."""
    dim = 2**circuit.n
    u = np.eye(dim, dtype=np.complex128)
    for op in circuit.ops:
        if isinstance(op, CliffordGate):
            g = embed(GATE_MATRICES[op.kind], op.targets, circuit.n)
        elif isinstance(op, PauliRotation):
            pm = op.pauli.to_matrix()
            angle = phi[op.param_index]
            g = np.cos(angle / 2.0) * np.eye(dim) + 1j * np.sin(angle / 2.0) * pm
        else:
            continue  # noise channel: identity on pure-unitary oracle
        u = g @ u
    return u


def oracle_expectation(circuit: Circuit, h: Hamiltonian, phi, mu: float) -> float:
    """Dense-matrix evolution of |0><0| with explicit channel averaging."""
    phi = np.asarray(phi, dtype=float)
    dim = 2**circuit.n
    rho = np.zeros((dim, dim), dtype=np.complex128)
    rho[0, 0] = 1.0
    for op in circuit.ops:
        if isinstance(op, CliffordGate):
            g = embed(GATE_MATRICES[op.kind], op.targets, circuit.n)
            rho = g @ rho @ g.conj().T
        elif isinstance(op, PauliRotation):
            pm = op.pauli.to_matrix()
            angle = phi[op.param_index]
            g = np.cos(angle / 2.0) * np.eye(dim) + 1j * np.sin(angle / 2.0) * pm
            rho = g @ rho @ g.conj().T
        else:
            pm = op.pauli.to_matrix()
            rho = (1.0 - mu / 2.0) * rho + (mu / 2.0) * (pm @ rho @ pm)
    return float(np.real(np.trace(h.to_matrix() @ rho)))
