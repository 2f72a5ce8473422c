"""Single-layer QAOA toy model and 2D landscape grid export.

The cost Hamiltonian is a seeded random-weight sum of Z-strings of weight
<= 3, which reliably produces landscapes with many local minima in the
two shared parameters (cost angle, mixer angle).
"""
from __future__ import annotations

import csv
import itertools

import numpy as np

from .circuit import Circuit, CliffordGate, NoiseChannel, PauliRotation
from .optim import ParametricLoss
from .pauli import Hamiltonian, PauliString


def build_qaoa_toy(n: int, seed: int) -> tuple[Circuit, Hamiltonian]:
    """Layer of H gates, cost Z-string rotations sharing parameter 0, then a
    transverse mixer sharing parameter 1; every rotation carries its noise
    channel."""
    if not 1 <= n <= 8:
        raise ValueError("toy model supports 1 to 8 qubits")
    rng = np.random.default_rng(seed)
    terms = []
    for size in (1, 2, 3):
        for subset in itertools.combinations(range(n), size):
            mask = 0
            for q in subset:
                mask |= 1 << q
            terms.append((rng.uniform(-1.0, 1.0), PauliString(n, 0, mask)))
    cost = Hamiltonian(tuple(terms))

    ops: list = [CliffordGate("H", (q,)) for q in range(n)]
    for _, pauli in cost.terms:
        ops.append(PauliRotation(pauli, 0))
        ops.append(NoiseChannel(pauli))
    for q in range(n):
        mixer = PauliString.single(n, q, "X")
        ops.append(PauliRotation(mixer, 1))
        ops.append(NoiseChannel(mixer))
    return Circuit(n, tuple(ops), 2), cost


def landscape_grid(
    loss: ParametricLoss,
    axes,
    resolution: int,
    mu: float,
    path,
    base_phi=None,
) -> None:
    """CSV grid (phi_a, phi_b, L) over two parameter axes at fixed mu.

    axes = ((param_index, lo, hi), (param_index, lo, hi)); the remaining
    parameters stay at base_phi (zeros by default).
    """
    if len(axes) != 2:
        raise ValueError("landscape grids are two-dimensional")
    (ia, lo_a, hi_a), (ib, lo_b, hi_b) = axes
    if ia == ib:
        raise ValueError("axes must use distinct parameters")
    phi = (
        np.zeros(loss.m)
        if base_phi is None
        else np.asarray(base_phi, dtype=float).copy()
    )
    grid_a = np.linspace(lo_a, hi_a, resolution)
    grid_b = np.linspace(lo_b, hi_b, resolution)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["phi_a", "phi_b", "loss"])
        for va in grid_a:
            for vb in grid_b:
                phi[ia] = va
                phi[ib] = vb
                writer.writerow([repr(float(va)), repr(float(vb)), repr(loss.value(phi, mu))])
