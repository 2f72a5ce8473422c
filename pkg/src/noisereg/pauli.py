"""Pauli strings in symplectic bit-mask form, and Pauli-sum Hamiltonians.

Qubit 0 is the least-significant bit of computational-basis indices.  A
PauliString stores an X mask, a Z mask and a phase exponent p, representing
the operator ``i^p * prod_q X_q^{x_q} Z_q^{z_q}``.  With this convention a
single-qubit Y corresponds to (x=1, z=1, p=1) since Y = i X Z.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

_I2 = np.eye(2, dtype=np.complex128)
_X2 = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_Z2 = np.array([[1, 0], [0, -1]], dtype=np.complex128)
_XZ2 = _X2 @ _Z2  # equals -iY

_PHASE_PREFIX = {0: "", 1: "i", 2: "-", 3: "-i"}


@dataclass(frozen=True)
class PauliString:
    n: int
    x_mask: int
    z_mask: int
    phase_exp: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"qubit count must be positive, got {self.n}")
        full = (1 << self.n) - 1
        if self.x_mask & ~full or self.z_mask & ~full:
            raise ValueError("mask has bits set at positions >= n")
        object.__setattr__(self, "phase_exp", self.phase_exp % 4)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n, 0, 0, 0)

    @classmethod
    def single(cls, n: int, qubit: int, kind: str) -> "PauliString":
        """Single-qubit X, Y or Z acting on `qubit` (others identity)."""
        if not 0 <= qubit < n:
            raise ValueError(f"qubit {qubit} out of range for n={n}")
        bit = 1 << qubit
        if kind == "X":
            return cls(n, bit, 0, 0)
        if kind == "Z":
            return cls(n, 0, bit, 0)
        if kind == "Y":
            return cls(n, bit, bit, 1)
        raise ValueError(f"unknown Pauli kind {kind!r}")

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse a string over IXYZ, most-significant qubit first.

        Qubit 0 is the rightmost character.
        """
        n = len(label)
        x_mask = z_mask = 0
        phase = 0
        for pos, ch in enumerate(label):
            q = n - 1 - pos
            if ch == "I":
                continue
            if ch in ("X", "Y"):
                x_mask |= 1 << q
            if ch in ("Z", "Y"):
                z_mask |= 1 << q
            if ch == "Y":
                phase += 1
            if ch not in "IXYZ":
                raise ValueError(f"invalid Pauli character {ch!r}")
        return cls(n, x_mask, z_mask, phase)

    @property
    def label(self) -> str:
        """IXYZ string (MSB first) with a phase prefix from {'', 'i', '-', '-i'}."""
        chars = []
        y_count = 0
        for q in range(self.n - 1, -1, -1):
            x = (self.x_mask >> q) & 1
            z = (self.z_mask >> q) & 1
            if x and z:
                chars.append("Y")
                y_count += 1
            elif x:
                chars.append("X")
            elif z:
                chars.append("Z")
            else:
                chars.append("I")
        residual = (self.phase_exp - y_count) % 4
        return _PHASE_PREFIX[residual] + "".join(chars)

    @property
    def weight(self) -> int:
        return bin(self.x_mask | self.z_mask).count("1")

    @property
    def support(self) -> tuple[int, ...]:
        mask = self.x_mask | self.z_mask
        return tuple(q for q in range(self.n) if (mask >> q) & 1)

    @property
    def is_hermitian(self) -> bool:
        # (i^p X^x Z^z)^dag = i^p X^x Z^z  iff  p == |x & z| (mod 2)
        y_parity = bin(self.x_mask & self.z_mask).count("1") & 1
        return (self.phase_exp & 1) == y_parity

    def commutes(self, other: "PauliString") -> bool:
        """Symplectic inner product: True iff the two strings commute."""
        self._check_same_n(other)
        anti = bin(self.x_mask & other.z_mask).count("1") + bin(
            self.z_mask & other.x_mask
        ).count("1")
        return anti % 2 == 0

    def mul(self, other: "PauliString") -> "PauliString":
        """Operator product self * other with the correct phase."""
        self._check_same_n(other)
        # Z^b X^c = (-1)^{|b & c|} X^c Z^b
        swaps = bin(self.z_mask & other.x_mask).count("1")
        phase = (self.phase_exp + other.phase_exp + 2 * swaps) % 4
        return PauliString(
            self.n, self.x_mask ^ other.x_mask, self.z_mask ^ other.z_mask, phase
        )

    def __mul__(self, other: "PauliString") -> "PauliString":
        return self.mul(other)

    def _check_same_n(self, other: "PauliString") -> None:
        if self.n != other.n:
            raise ValueError(f"qubit-count mismatch: {self.n} vs {other.n}")

    def _site_matrix(self, q: int) -> np.ndarray:
        x = (self.x_mask >> q) & 1
        z = (self.z_mask >> q) & 1
        if x and z:
            return _XZ2
        if x:
            return _X2
        if z:
            return _Z2
        return _I2

    def to_matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix (qubit 0 = least-significant index bit)."""
        mats = [self._site_matrix(q) for q in range(self.n - 1, -1, -1)]
        return (1j ** self.phase_exp) * reduce(np.kron, mats)

    def matrix_on_support(self) -> np.ndarray:
        """Dense matrix acting on the support qubits only (MSB-first order).

        The phase is folded in; identity sites are dropped.  For the identity
        string returns the 1x1 matrix [i^p].
        """
        mats = [self._site_matrix(q) for q in reversed(self.support)]
        if not mats:
            return np.array([[1j ** self.phase_exp]], dtype=np.complex128)
        return (1j ** self.phase_exp) * reduce(np.kron, mats)


@dataclass(frozen=True)
class Hamiltonian:
    """Real-weighted sum of Hermitian Pauli strings."""

    terms: tuple[tuple[float, PauliString], ...]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("Hamiltonian needs at least one term")
        object.__setattr__(
            self, "terms", tuple((float(c), p) for c, p in self.terms)
        )
        n = self.terms[0][1].n
        for c, p in self.terms:
            if p.n != n:
                raise ValueError("all terms must share the same qubit count")
            if not np.isfinite(c):
                raise ValueError("coefficients must be finite")
            if not p.is_hermitian:
                raise ValueError(f"non-Hermitian term {p.label}")

    @classmethod
    def from_labels(cls, pairs) -> "Hamiltonian":
        return cls(tuple((c, PauliString.from_label(lab)) for c, lab in pairs))

    @property
    def n(self) -> int:
        return self.terms[0][1].n

    def to_matrix(self) -> np.ndarray:
        out = np.zeros((2**self.n, 2**self.n), dtype=np.complex128)
        for c, p in self.terms:
            out += c * p.to_matrix()
        return out
