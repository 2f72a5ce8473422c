"""Exact Fourier-mode extraction for small circuits.

Because each parameter enters the loss through a single rotation, the loss
is degree <= 1 in (cos phi_k, sin phi_k) per parameter, so per-parameter
frequencies lie in {-1, 0, +1} and evaluating on the 3^m grid
phi_k in {0, 2*pi/3, 4*pi/3} determines the expansion exactly.

The table supports the noise-suppression evaluation
L(mu, phi) = sum_w (1 - mu)^{order(w)} c_w exp(i w . phi) and the
heat-equation residual check with 1 - mu = exp(-t).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .circuit import Circuit
from .pauli import Hamiltonian
from .simulator import circuit_expectation

_ANGLES = np.array([0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0])
PRUNE_TOL = 1e-12


@dataclass(frozen=True)
class FourierTable:
    """Sparse map from frequency vectors in {-1,0,1}^m to coefficients."""

    m: int
    omegas: np.ndarray  # (K, m) int8
    coeffs: np.ndarray  # (K,) complex

    def __post_init__(self):
        if self.omegas.shape != (len(self.coeffs), self.m):
            raise ValueError("omegas / coeffs shape mismatch")
        if self.omegas.size and np.max(np.abs(self.omegas)) > 1:
            raise ValueError("frequency entries must lie in {-1, 0, 1}")

    @property
    def orders(self) -> np.ndarray:
        return np.count_nonzero(self.omegas, axis=1)

    def coeff(self, omega) -> complex:
        omega = np.asarray(omega, dtype=np.int8)
        hits = np.nonzero((self.omegas == omega).all(axis=1))[0]
        return complex(self.coeffs[hits[0]]) if hits.size else 0.0

    def items(self):
        for w, c in zip(self.omegas, self.coeffs):
            yield tuple(int(v) for v in w), complex(c)

    def check_reality(self, atol: float = 1e-10) -> float:
        """Max |coeff(-w) - conj(coeff(w))|; real-valued losses keep it ~0."""
        worst = 0.0
        for w, c in self.items():
            mirror = self.coeff(tuple(-v for v in w))
            worst = max(worst, abs(mirror - np.conj(c)))
        return worst


def table_from_function(f: Callable[[np.ndarray], float], m: int) -> FourierTable:
    """Invert the per-parameter 3-point DFT of f on the 3^m grid."""
    if m == 0:
        val = complex(f(np.zeros(0)))
        return FourierTable(0, np.zeros((1, 0), dtype=np.int8), np.array([val]))
    vals = np.empty((3,) * m, dtype=np.complex128)
    for idx in np.ndindex(*vals.shape):
        vals[idx] = f(_ANGLES[list(idx)])
    # c[w] = (1/3) sum_j v[j] exp(-i w theta_j), per axis
    dft = np.exp(-1j * np.outer([-1, 0, 1], _ANGLES)) / 3.0
    for axis in range(m):
        vals = np.moveaxis(np.tensordot(dft, vals, axes=([1], [axis])), 0, axis)
    idx = np.argwhere(np.abs(vals) > PRUNE_TOL)
    if idx.size == 0:
        idx = np.zeros((1, m), dtype=np.intp)
    coeffs = vals[tuple(idx.T)]
    return FourierTable(m, (idx - 1).astype(np.int8), coeffs)


def extract_modes(circuit: Circuit, h: Hamiltonian, cap: int = 8) -> FourierTable:
    """Exact noiseless Fourier table of the circuit loss.

    Requires each parameter to appear in exactly one rotation; shared
    parameters push frequencies beyond {-1, 0, 1} and are rejected.
    """
    if circuit.m > cap:
        raise ValueError(
            f"m={circuit.m} exceeds the 3^m cost cap {cap}; raise `cap` to force"
        )
    if not circuit.params_appear_once():
        raise ValueError(
            "each parameter must appear in exactly one rotation for exact "
            "3-point extraction"
        )
    return table_from_function(
        lambda phi: circuit_expectation(circuit, h, phi, 0.0), circuit.m
    )


def damped_eval(
    table: FourierTable, mu: float, phi, imag_atol: float = 1e-9
) -> float:
    """sum_w (1 - mu)^{order(w)} coeff(w) exp(i w . phi)."""
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"mu must lie in [0, 1], got {mu}")
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (table.m,):
        raise ValueError(f"phi must have shape ({table.m},)")
    weights = (1.0 - mu) ** table.orders
    total = np.sum(weights * table.coeffs * np.exp(1j * (table.omegas @ phi)))
    if abs(total.imag) > imag_atol:
        raise ValueError(f"imaginary residue {total.imag} above tolerance")
    return float(total.real)


def reconstruct(table: FourierTable, phi) -> float:
    return damped_eval(table, 0.0, phi)


def mode_spectrum(table: FourierTable) -> dict[int, float]:
    """Total L2 weight sum |coeff|^2 aggregated by mode order."""
    out: dict[int, float] = {}
    for order, c in zip(table.orders, table.coeffs):
        out[int(order)] = out.get(int(order), 0.0) + float(abs(c) ** 2)
    return out


def heat_residual(
    circuit: Circuit, h_op: Hamiltonian, phi, t: float, h: float = 1e-3
) -> float:
    """|d_t L - Laplacian_phi L| at mu(t) = 1 - exp(-t), central differences.

    Second-order differences in both t and each phi_k; near t = 0 the time
    derivative switches to a one-sided second-order stencil so that mu stays
    in [0, 1].
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if h <= 0:
        raise ValueError("h must be positive")
    phi = np.asarray(phi, dtype=float)

    def loss(tt: float, pp) -> float:
        return circuit_expectation(circuit, h_op, pp, 1.0 - math.exp(-tt))

    if t >= h:
        dt = (loss(t + h, phi) - loss(t - h, phi)) / (2.0 * h)
    else:
        dt = (
            -3.0 * loss(t, phi) + 4.0 * loss(t + h, phi) - loss(t + 2.0 * h, phi)
        ) / (2.0 * h)
    center = loss(t, phi)
    lap = 0.0
    for k in range(circuit.m):
        shifted = phi.copy()
        shifted[k] = phi[k] + h
        plus = loss(t, shifted)
        shifted[k] = phi[k] - h
        minus = loss(t, shifted)
        lap += (plus - 2.0 * center + minus) / (h * h)
    return abs(dt - lap)


# --- CSV export -------------------------------------------------------------

_DIGIT = {-1: "-", 0: "0", 1: "+"}
_DIGIT_INV = {v: k for k, v in _DIGIT.items()}


def omega_string(omega) -> str:
    return "".join(_DIGIT[int(v)] for v in omega)


def export_table(table: FourierTable, path) -> None:
    rows = sorted(table.items(), key=lambda item: (sum(map(abs, item[0])), item[0]))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["omega", "re", "im", "order"])
        for omega, c in rows:
            writer.writerow(
                [omega_string(omega), repr(c.real), repr(c.imag), sum(map(abs, omega))]
            )


def load_table(path) -> FourierTable:
    omegas: list[tuple[int, ...]] = []
    coeffs: list[complex] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            omegas.append(tuple(_DIGIT_INV[ch] for ch in row["omega"]))
            coeffs.append(complex(float(row["re"]), float(row["im"])))
    m = len(omegas[0]) if omegas else 0
    return FourierTable(
        m, np.array(omegas, dtype=np.int8).reshape(len(omegas), m), np.array(coeffs)
    )
