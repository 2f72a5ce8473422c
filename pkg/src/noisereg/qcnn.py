"""Quantum convolutional network teacher-student benchmark.

Alternating convolution / pooling stages halve the active qubits until one
readout qubit remains.  A convolution layer applies a 15-parameter
two-qubit block (three single-qubit rotations per qubit, the XX/YY/ZZ
pair, three more single-qubit rotations per qubit) to adjacent active
pairs with parameters shared across the layer's blocks; a pooling layer
applies a shared 3-parameter XX/YY/ZZ block per pair and retires the
second qubit of each pair.  Every rotation carries its noise channel, so
the template satisfies the Clifford + Pauli-rotation circuit form the
injection protocol requires.

Labels come from a teacher instance of the same template evaluated on
random computational basis states; training minimizes the MSE between
student predictions and teacher labels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, NoiseChannel, PauliRotation
from .optim import AdamConfig, ParametricLoss, RunRecord, Schedule, initial_point, optimize
from .pauli import Hamiltonian, PauliString
from .simulator import backward_cache, gradient_from_cache

CONV_PARAMS = 15
POOL_PARAMS = 3


class DegenerateTeacherError(RuntimeError):
    """Teacher labels too close to zero for sign classification."""


@dataclass(frozen=True)
class QcnnSpec:
    n: int
    circuit: Circuit
    observable: Hamiltonian
    readout_qubit: int
    conv_pairs: tuple[tuple[tuple[int, int], ...], ...]  # per stage
    pool_pairs: tuple[tuple[tuple[int, int], ...], ...]

    @property
    def m(self) -> int:
        return self.circuit.m

    @property
    def stages(self) -> int:
        return len(self.conv_pairs)


def _two_qubit_pauli(n: int, kind: str, a: int, b: int) -> PauliString:
    return PauliString.single(n, a, kind) * PauliString.single(n, b, kind)


def build_qcnn(n: int) -> tuple[Circuit, QcnnSpec]:
    """Noise-instrumented QCNN template on n qubits (n a power of two >= 4)."""
    if n < 4 or n & (n - 1):
        raise ValueError(f"qubit count must be a power of two >= 4, got {n}")
    ops: list = []
    conv_pairs: list[tuple[tuple[int, int], ...]] = []
    pool_pairs: list[tuple[tuple[int, int], ...]] = []
    active = list(range(n))
    base = 0

    def rotation(pauli: PauliString, idx: int) -> None:
        ops.append(PauliRotation(pauli, idx))
        ops.append(NoiseChannel(pauli))

    while len(active) > 1:
        pairs = tuple(
            (active[i], active[i + 1]) for i in range(0, len(active), 2)
        )
        conv_pairs.append(pairs)
        for a, b in pairs:
            for off, q in ((0, a), (3, b)):
                for j, kind in enumerate("XYZ"):
                    rotation(PauliString.single(n, q, kind), base + off + j)
            for j, kind in enumerate("XYZ"):
                rotation(_two_qubit_pauli(n, kind, a, b), base + 6 + j)
            for off, q in ((9, a), (12, b)):
                for j, kind in enumerate("XYZ"):
                    rotation(PauliString.single(n, q, kind), base + off + j)
        pool_pairs.append(pairs)
        for a, b in pairs:
            for j, kind in enumerate("XYZ"):
                rotation(_two_qubit_pauli(n, kind, a, b), base + CONV_PARAMS + j)
        active = [a for a, _ in pairs]
        base += CONV_PARAMS + POOL_PARAMS

    circuit = Circuit(n, tuple(ops), base)
    observable = Hamiltonian(((1.0, PauliString.single(n, active[0], "Z")),))
    spec = QcnnSpec(
        n, circuit, observable, active[0], tuple(conv_pairs), tuple(pool_pairs)
    )
    return circuit, spec


@dataclass(frozen=True)
class Dataset:
    entries: tuple[tuple[int, float], ...]  # (basis index, teacher label)
    split: str
    phi_star: tuple[float, ...]

    @property
    def indices(self) -> np.ndarray:
        return np.array([x for x, _ in self.entries], dtype=np.intp)

    @property
    def labels(self) -> np.ndarray:
        return np.array([y for _, y in self.entries])


def predictions(spec: QcnnSpec, phi, mu: float = 0.0) -> np.ndarray:
    """<x|U^dag H U|x> for every computational basis state x at once."""
    cache = backward_cache(spec.circuit, phi, mu, spec.observable.to_matrix())
    return np.real(np.diagonal(cache.observable0)).copy()


def default_dataset_sizes(n: int) -> tuple[int, int]:
    """Train/test sizes capped so sampling stays without replacement."""
    train = min(64, 2 ** (n - 1))
    test = min(256, 2**n - train)
    return train, test


def gen_dataset(
    spec: QcnnSpec,
    phi_star,
    d_train: int,
    d_test: int,
    seed: int,
    label_margin: float = 1e-6,
) -> tuple[Dataset, Dataset]:
    """Uniform basis states without replacement, labeled by the teacher.

    States whose label falls inside the sign margin are skipped; if too few
    valid states remain the teacher is degenerate and the caller should draw
    a new phi_star.
    """
    total = d_train + d_test
    if total > 2**spec.n:
        raise ValueError("dataset larger than the basis")
    labels = predictions(spec, phi_star, 0.0)
    rng = np.random.default_rng(seed)
    order = rng.permutation(2**spec.n)
    chosen = [int(x) for x in order if abs(labels[x]) >= label_margin]
    if len(chosen) < total:
        raise DegenerateTeacherError(
            f"only {len(chosen)} states satisfy the {label_margin} label margin"
        )
    phi_star = tuple(float(v) for v in np.asarray(phi_star, dtype=float))
    train = Dataset(
        tuple((x, float(labels[x])) for x in chosen[:d_train]), "train", phi_star
    )
    test = Dataset(
        tuple((x, float(labels[x])) for x in chosen[d_train:total]), "test", phi_star
    )
    return train, test


@dataclass(frozen=True)
class QcnnLoss(ParametricLoss):
    """MSE between student predictions and dataset labels; predictions and
    gradients use one Heisenberg sweep for the whole dataset."""

    spec: QcnnSpec
    dataset: Dataset

    @property
    def m(self) -> int:
        return self.spec.m

    def _predict(self, phi, mu):
        cache = backward_cache(
            self.spec.circuit, phi, mu, self.spec.observable.to_matrix()
        )
        yhat = np.real(np.diagonal(cache.observable0))[self.dataset.indices]
        return cache, yhat

    def value(self, phi, mu: float = 0.0) -> float:
        _, yhat = self._predict(phi, mu)
        return float(np.mean((yhat - self.dataset.labels) ** 2))

    def gradient(self, phi, mu: float = 0.0) -> np.ndarray:
        cache, yhat = self._predict(phi, mu)
        residual = 2.0 * (yhat - self.dataset.labels) / len(yhat)
        # gradients are linear in the input state, so one weighted mixture of
        # basis projectors carries the whole dataset through the shift sweep
        dim = 2**self.spec.n
        rho_eff = np.zeros((dim, dim), dtype=np.complex128)
        rho_eff[self.dataset.indices, self.dataset.indices] = residual
        return gradient_from_cache(self.spec.circuit, phi, mu, rho_eff, cache)


def qcnn_loss(spec: QcnnSpec, dataset: Dataset, phi, mu: float = 0.0) -> float:
    return QcnnLoss(spec, dataset).value(phi, mu)


def accuracy(spec: QcnnSpec, dataset: Dataset, phi) -> float:
    """Fraction of sign agreements between prediction and label at mu = 0."""
    yhat = predictions(spec, phi, 0.0)[dataset.indices]
    return float(np.mean(np.sign(yhat) == np.sign(dataset.labels)))


def train_student(
    spec: QcnnSpec,
    train: Dataset,
    test: Dataset,
    schedule: Schedule,
    adam: AdamConfig = AdamConfig(),
    seed: int = 0,
) -> tuple[RunRecord, float, float]:
    """Optimize a student from a seeded random start; returns the run record
    plus (train accuracy, test accuracy) at the final parameters."""
    phi0 = initial_point(seed, spec.m)
    record = optimize(QcnnLoss(spec, train), phi0, schedule, adam, seed=seed)
    phi_final = np.array(record.phi_final)
    return record, accuracy(spec, train, phi_final), accuracy(spec, test, phi_final)


def random_teacher(
    spec: QcnnSpec, seed: int
) -> np.ndarray:
    """Teacher parameters drawn uniformly from (0, 2*pi)^m."""
    return np.random.default_rng(seed).uniform(0.0, 2.0 * math.pi, spec.m)
