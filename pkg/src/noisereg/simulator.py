"""Dense density-matrix evolution for Clifford + Pauli-rotation circuits.

Implements the noise-injection protocol: every parameterized rotation
exp(i phi P / 2) may be followed by the channel
E_P(mu): rho -> (1 - mu/2) rho + (mu/2) P rho P, all channels sharing one
global mu per evaluation.  Double-precision complex throughout.

Gates are applied by contracting small operator tensors against the
relevant qubit axes of the 2^n x 2^n state, so no full-dimension gate
matrices are ever built.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .circuit import Circuit, CliffordGate, NoiseChannel, PauliRotation
from .pauli import Hamiltonian, PauliString

_SQ2 = 1.0 / math.sqrt(2.0)

GATE_MATRICES = {
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=np.complex128),
    "S": np.diag([1.0, 1.0j]).astype(np.complex128),
    "Sdg": np.diag([1.0, -1.0j]).astype(np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.diag([1.0, -1.0]).astype(np.complex128),
    # two-qubit: first target is the more significant bit of the 4-dim basis
    "CX": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
        dtype=np.complex128,
    ),
    "CZ": np.diag([1.0, 1.0, 1.0, -1.0]).astype(np.complex128),
    "SWAP": np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]],
        dtype=np.complex128,
    ),
}


# --- tensor contraction helpers --------------------------------------------
#
# A 2^n x 2^n matrix is viewed as a (2,)*2n tensor; the row axis of qubit q
# is n-1-q and its column axis is 2n-1-q (qubit 0 = least-significant bit).
# `qubits` below lists the qubits matching the small matrix's tensor axes,
# most significant first.


def _axes_rows(qubits, n):
    return [n - 1 - q for q in qubits]


def _axes_cols(qubits, n):
    return [2 * n - 1 - q for q in qubits]


def _contract(mat, small, axes, n):
    k = len(axes)
    t = mat.reshape((2,) * (2 * n))
    u = small.reshape((2,) * (2 * k))
    out = np.tensordot(u, t, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return out.reshape(mat.shape)


def _left_mul(mat, small, qubits, n):
    """small . mat  (small acts on `qubits`)."""
    return _contract(mat, small, _axes_rows(qubits, n), n)


def _right_mul(mat, small, qubits, n):
    """mat . small."""
    return _contract(mat, small.T, _axes_cols(qubits, n), n)


def _conjugate(mat, small, qubits, n):
    """small . mat . small^dagger."""
    out = _contract(mat, small, _axes_rows(qubits, n), n)
    return _contract(out, small.conj(), _axes_cols(qubits, n), n)


def _trace_prod(a, b):
    """Tr(a @ b) for equal-shaped square matrices."""
    return np.sum(a * b.T)


# --- states -----------------------------------------------------------------


@dataclass
class DensityMatrix:
    n: int
    mat: np.ndarray

    @classmethod
    def zero(cls, n: int) -> "DensityMatrix":
        return cls.basis_state(n, 0)

    @classmethod
    def basis_state(cls, n: int, index: int) -> "DensityMatrix":
        dim = 2**n
        if not 0 <= index < dim:
            raise ValueError(f"basis index {index} out of range")
        mat = np.zeros((dim, dim), dtype=np.complex128)
        mat[index, index] = 1.0
        return cls(n, mat)

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.n, self.mat.copy())

    def validate(self, trace_atol=1e-10, herm_atol=1e-10, psd_slack=1e-9):
        tr = np.trace(self.mat)
        if abs(tr - 1.0) > trace_atol:
            raise ValueError(f"trace {tr} deviates from 1")
        if np.max(np.abs(self.mat - self.mat.conj().T)) > herm_atol:
            raise ValueError("state is not Hermitian")
        eigs = np.linalg.eigvalsh(self.mat)
        if eigs.min() < -psd_slack:
            raise ValueError(f"negative eigenvalue {eigs.min()}")
        return self


# --- elementary operations --------------------------------------------------


def apply_clifford(rho: DensityMatrix, gate: CliffordGate) -> DensityMatrix:
    for t in gate.targets:
        if not 0 <= t < rho.n:
            raise ValueError(f"target {t} out of range for n={rho.n}")
    u = GATE_MATRICES[gate.kind]
    return DensityMatrix(rho.n, _conjugate(rho.mat, u, gate.targets, rho.n))


def _rotation_small(pauli: PauliString, phi: float) -> np.ndarray:
    pm = pauli.matrix_on_support()
    eye = np.eye(pm.shape[0], dtype=np.complex128)
    return math.cos(phi / 2.0) * eye + 1j * math.sin(phi / 2.0) * pm


def apply_rotation(rho: DensityMatrix, pauli: PauliString, phi: float) -> DensityMatrix:
    """rho -> U rho U^dag with U = cos(phi/2) I + i sin(phi/2) P."""
    if pauli.n != rho.n:
        raise ValueError("Pauli qubit count mismatch")
    if not np.isfinite(phi):
        raise ValueError("rotation angle must be finite")
    sup = pauli.support
    if not sup:
        return rho.copy()  # global phase only
    u = _rotation_small(pauli, phi)
    qubits = tuple(reversed(sup))
    return DensityMatrix(rho.n, _conjugate(rho.mat, u, qubits, rho.n))


def apply_noise(rho: DensityMatrix, pauli: PauliString, mu: float) -> DensityMatrix:
    """E_P(mu): rho -> (1 - mu/2) rho + (mu/2) P rho P."""
    if pauli.n != rho.n:
        raise ValueError("Pauli qubit count mismatch")
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"mu must lie in [0, 1], got {mu}")
    sup = pauli.support
    if not sup or mu == 0.0:
        return rho.copy()
    pm = pauli.matrix_on_support()
    qubits = tuple(reversed(sup))
    flipped = _conjugate(rho.mat, pm, qubits, rho.n)
    return DensityMatrix(rho.n, (1.0 - mu / 2.0) * rho.mat + (mu / 2.0) * flipped)


def apply_noise_dilated(
    rho: DensityMatrix, pauli: PauliString, theta: float
) -> DensityMatrix:
    """Realize E_P(mu) with mu = 2 sin^2(theta/2) via an explicit ancilla.

    The ancilla (most-significant qubit) is prepared in R_X(theta)|0>, a
    controlled-P is applied, and the ancilla is traced out.
    """
    if pauli.n != rho.n:
        raise ValueError("Pauli qubit count mismatch")
    n = rho.n
    dim = 2**n
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    anc = np.array([c, -1j * s], dtype=np.complex128)  # R_X(theta)|0>
    anc_rho = np.outer(anc, anc.conj())
    big = np.kron(anc_rho, rho.mat)
    # controlled-P = |0><0| (x) I + |1><1| (x) P
    cp = np.zeros((2 * dim, 2 * dim), dtype=np.complex128)
    cp[:dim, :dim] = np.eye(dim)
    cp[dim:, dim:] = pauli.to_matrix()
    big = cp @ big @ cp.conj().T
    t = big.reshape(2, dim, 2, dim)
    return DensityMatrix(n, t[0, :, 0, :] + t[1, :, 1, :])


def pauli_expectation(rho_mat: np.ndarray, pauli: PauliString, n: int) -> complex:
    sup = pauli.support
    if not sup:
        return (1j ** pauli.phase_exp) * np.trace(rho_mat)
    pm = pauli.matrix_on_support()
    qubits = tuple(reversed(sup))
    return np.trace(_left_mul(rho_mat, pm, qubits, n))


def expectation(rho: DensityMatrix, h: Hamiltonian, imag_atol=1e-10) -> float:
    """Tr(rho H); raises if the imaginary residue exceeds tolerance."""
    if h.n != rho.n:
        raise ValueError("qubit-count mismatch between state and Hamiltonian")
    val = sum(c * pauli_expectation(rho.mat, p, rho.n) for c, p in h.terms)
    if abs(val.imag) > imag_atol:
        raise ValueError(f"imaginary residue {val.imag} signals a corrupted state")
    return float(val.real)


# --- compiled circuit evaluation --------------------------------------------


@lru_cache(maxsize=256)
def _compile(circuit: Circuit):
    steps = []
    for op in circuit.ops:
        if isinstance(op, CliffordGate):
            steps.append(("c", GATE_MATRICES[op.kind], op.targets, None))
        elif isinstance(op, PauliRotation):
            sup = tuple(reversed(op.pauli.support))
            pm = op.pauli.matrix_on_support() if sup else None
            steps.append(("r", pm, sup, op.param_index))
        else:
            assert isinstance(op, NoiseChannel)
            sup = tuple(reversed(op.pauli.support))
            pm = op.pauli.matrix_on_support() if sup else None
            steps.append(("n", pm, sup, None))
    return tuple(steps)


def _rotation_from_parts(pm, phi):
    eye = np.eye(pm.shape[0], dtype=np.complex128)
    return math.cos(phi / 2.0) * eye + 1j * math.sin(phi / 2.0) * pm


def _check_args(circuit: Circuit, phi, mu: float) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (circuit.m,):
        raise ValueError(
            f"expected {circuit.m} parameters, got shape {phi.shape}"
        )
    if not np.all(np.isfinite(phi)):
        raise ValueError("parameters must be finite")
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"mu must lie in [0, 1], got {mu}")
    return phi


def run_circuit(circuit: Circuit, phi, mu: float = 0.0) -> DensityMatrix:
    """Evolve |0...0><0...0| through the circuit at parameters phi, noise mu."""
    phi = _check_args(circuit, phi, mu)
    n = circuit.n
    mat = DensityMatrix.zero(n).mat
    for kind, small, qubits, pidx in _compile(circuit):
        if kind == "c":
            mat = _conjugate(mat, small, qubits, n)
        elif kind == "r":
            if small is None:
                continue
            u = _rotation_from_parts(small, phi[pidx])
            mat = _conjugate(mat, u, qubits, n)
        else:
            if small is None or mu == 0.0:
                continue
            flipped = _conjugate(mat, small, qubits, n)
            mat = (1.0 - mu / 2.0) * mat + (mu / 2.0) * flipped
    return DensityMatrix(n, mat)


def circuit_expectation(
    circuit: Circuit, h: Hamiltonian, phi, mu: float = 0.0
) -> float:
    return expectation(run_circuit(circuit, phi, mu), h)


# --- Heisenberg sweep and parameter-shift gradients -------------------------


@dataclass
class BackwardCache:
    """Observable pulled back through the circuit.

    observable0 satisfies Tr(observable0 . rho_in) = Tr(H . C(rho_in)) for the
    full circuit channel C.  `entries` holds, per rotation in circuit order,
    the observable pulled back through every later op (noise included), which
    is exactly what the shift rule at that position needs.
    """

    observable0: np.ndarray
    entries: list  # (param_index, pm, qubits, observable_after)


def backward_cache(
    circuit: Circuit, phi, mu: float, observable: np.ndarray
) -> BackwardCache:
    phi = _check_args(circuit, phi, mu)
    n = circuit.n
    obs = np.asarray(observable, dtype=np.complex128)
    entries = []
    for kind, small, qubits, pidx in reversed(_compile(circuit)):
        if kind == "c":
            obs = _conjugate(obs, small.conj().T, qubits, n)
        elif kind == "r":
            if small is None:
                continue
            entries.append((pidx, small, qubits, obs))
            u = _rotation_from_parts(small, phi[pidx])
            obs = _conjugate(obs, u.conj().T, qubits, n)
        else:
            if small is None or mu == 0.0:
                continue
            flipped = _conjugate(obs, small, qubits, n)
            obs = (1.0 - mu / 2.0) * obs + (mu / 2.0) * flipped
    entries.reverse()
    return BackwardCache(obs, entries)


def gradient_from_cache(
    circuit: Circuit, phi, mu: float, rho0: np.ndarray, cache: BackwardCache
) -> np.ndarray:
    """Parameter-shift gradient of Tr(H . C(rho0)), summed over all positions
    of each shared parameter."""
    phi = _check_args(circuit, phi, mu)
    n = circuit.n
    grad = np.zeros(circuit.m)
    mat = np.asarray(rho0, dtype=np.complex128)
    it = iter(cache.entries)
    for kind, small, qubits, pidx in _compile(circuit):
        if kind == "c":
            mat = _conjugate(mat, small, qubits, n)
        elif kind == "r":
            if small is None:
                continue
            epidx, pm, equbits, back = next(it)
            assert epidx == pidx
            p_rho = _left_mul(mat, pm, qubits, n)
            rho_p = _right_mul(mat, pm, qubits, n)
            p_rho_p = _right_mul(p_rho, pm, qubits, n)
            t0 = _trace_prod(back, mat)
            t1 = _trace_prod(back, p_rho_p)
            tc = 1j * (_trace_prod(back, p_rho) - _trace_prod(back, rho_p))
            angle = phi[pidx]
            plus = _shift_value(angle + math.pi / 2.0, t0, t1, tc)
            minus = _shift_value(angle - math.pi / 2.0, t0, t1, tc)
            grad[pidx] += 0.5 * (plus - minus).real
            u = _rotation_from_parts(pm, angle)
            mat = _conjugate(mat, u, qubits, n)
        else:
            if small is None or mu == 0.0:
                continue
            flipped = _conjugate(mat, small, qubits, n)
            mat = (1.0 - mu / 2.0) * mat + (mu / 2.0) * flipped
    return grad


def _shift_value(angle, t0, t1, tc):
    c = math.cos(angle / 2.0)
    s = math.sin(angle / 2.0)
    return c * c * t0 + s * s * t1 + c * s * tc


def circuit_gradient(circuit: Circuit, h: Hamiltonian, phi, mu: float = 0.0):
    """Parameter-shift gradient of the circuit loss <0|U^dag H U|0>."""
    cache = backward_cache(circuit, phi, mu, h.to_matrix())
    rho0 = DensityMatrix.zero(circuit.n).mat
    return gradient_from_cache(circuit, phi, mu, rho0, cache)
