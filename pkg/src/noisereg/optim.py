"""Gradients, ADAM, regularization schedules, and the multi-start engine.

Every trainable landscape implements the ParametricLoss contract
value(phi, mu): the unregularized loss at mu = 0 and its noise-smoothed
deformation for mu in (0, 1].  Losses are 2*pi-periodic in each parameter.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit
from .pauli import Hamiltonian
from .simulator import (
    DensityMatrix,
    backward_cache,
    circuit_expectation,
    gradient_from_cache,
)


class ParametricLoss:
    """Evaluation contract over m parameters: value(phi, mu) -> float."""

    m: int

    def value(self, phi, mu: float = 0.0) -> float:
        raise NotImplementedError

    def gradient(self, phi, mu: float = 0.0) -> np.ndarray:
        return param_shift_grad(self, phi, mu)


@dataclass(frozen=True)
class CircuitLoss(ParametricLoss):
    """<0| U(mu, phi)^dag H U(mu, phi) |0> for a noise-instrumented circuit."""

    circuit: Circuit
    hamiltonian: Hamiltonian

    def __post_init__(self):
        if self.circuit.n != self.hamiltonian.n:
            raise ValueError("circuit / Hamiltonian qubit counts differ")
        object.__setattr__(self, "_hmat", self.hamiltonian.to_matrix())

    @property
    def m(self) -> int:
        return self.circuit.m

    def value(self, phi, mu: float = 0.0) -> float:
        return circuit_expectation(self.circuit, self.hamiltonian, phi, mu)

    def gradient(self, phi, mu: float = 0.0) -> np.ndarray:
        # parameter-shift with per-position shift terms summed, so shared
        # parameters (each position degree-1 in cos/sin) are handled exactly
        cache = backward_cache(self.circuit, phi, mu, self._hmat)
        rho0 = DensityMatrix.zero(self.circuit.n).mat
        return gradient_from_cache(self.circuit, phi, mu, rho0, cache)


def param_shift_grad(f: ParametricLoss, phi, mu: float = 0.0) -> np.ndarray:
    """Exact gradient via +-pi/2 shifts; assumes each parameter enters the
    loss as a + b cos(phi_k) + c sin(phi_k)."""
    phi = np.asarray(phi, dtype=float)
    grad = np.empty(f.m)
    for k in range(f.m):
        shifted = phi.copy()
        shifted[k] = phi[k] + math.pi / 2.0
        plus = f.value(shifted, mu)
        shifted[k] = phi[k] - math.pi / 2.0
        minus = f.value(shifted, mu)
        grad[k] = 0.5 * (plus - minus)
    return grad


def fd_grad(f: ParametricLoss, phi, mu: float = 0.0, h: float = 1e-5) -> np.ndarray:
    """Central finite differences; cross-check oracle for the shift rule."""
    if h <= 0:
        raise ValueError("h must be positive")
    phi = np.asarray(phi, dtype=float)
    grad = np.empty(f.m)
    for k in range(f.m):
        shifted = phi.copy()
        shifted[k] = phi[k] + h
        plus = f.value(shifted, mu)
        shifted[k] = phi[k] - h
        minus = f.value(shifted, mu)
        grad[k] = (plus - minus) / (2.0 * h)
    return grad


# --- schedules --------------------------------------------------------------

SCHEDULE_KINDS = ("exponential", "linear", "cosine", "step")


@dataclass(frozen=True)
class Schedule:
    kind: str
    mu_max: float
    i_max: int
    a: float = 10.0

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if not 0.0 <= self.mu_max <= 1.0:
            raise ValueError("mu_max must lie in [0, 1]")
        if self.i_max < 1:
            raise ValueError("i_max must be positive")

    @classmethod
    def baseline(cls, i_max: int) -> "Schedule":
        """Degenerate mu == 0 schedule: plain unregularized optimization."""
        return cls("exponential", 0.0, i_max)

    def describe(self) -> dict:
        return dataclasses.asdict(self)


def schedule_mu(s: Schedule, i: int) -> float:
    if not 0 <= i <= s.i_max:
        raise ValueError(f"iteration {i} outside [0, {s.i_max}]")
    x = i / s.i_max
    if s.kind == "exponential":
        return s.mu_max * math.exp(-s.a * x)
    if s.kind == "linear":
        return s.mu_max * (1.0 - x)
    if s.kind == "cosine":
        return s.mu_max * 0.5 * (1.0 + math.cos(math.pi * x))
    # step: full strength for the first half, off for the second
    return s.mu_max if i < s.i_max / 2 else 0.0


# --- ADAM -------------------------------------------------------------------


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 0.005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def describe(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class AdamState:
    config: AdamConfig
    m1: np.ndarray
    m2: np.ndarray
    t: int = 0

    @classmethod
    def init(cls, m: int, config: AdamConfig = AdamConfig()) -> "AdamState":
        return cls(config, np.zeros(m), np.zeros(m), 0)


def adam_step(state: AdamState, grad, phi) -> tuple[AdamState, np.ndarray]:
    """One bias-corrected ADAM update; returns (new state, new phi)."""
    grad = np.asarray(grad, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if grad.shape != state.m1.shape or phi.shape != state.m1.shape:
        raise ValueError("dimension mismatch")
    if not np.all(np.isfinite(grad)):
        raise ValueError("non-finite gradient entries")
    cfg = state.config
    t = state.t + 1
    m1 = cfg.beta1 * state.m1 + (1.0 - cfg.beta1) * grad
    m2 = cfg.beta2 * state.m2 + (1.0 - cfg.beta2) * grad**2
    m1_hat = m1 / (1.0 - cfg.beta1**t)
    m2_hat = m2 / (1.0 - cfg.beta2**t)
    new_phi = phi - cfg.lr * m1_hat / (np.sqrt(m2_hat) + cfg.eps)
    return AdamState(cfg, m1, m2, t), new_phi


# --- optimization runs ------------------------------------------------------


@dataclass
class RunRecord:
    seed: int | None
    schedule: dict
    adam: dict
    phi_init: list[float]
    phi_final: list[float]
    loss_mu: list[float]  # f(phi_i, mu(i)), length i_max + 1
    loss_mu0: list[float]  # f(phi_i, 0), length i_max + 1
    final_loss_mu0: float
    best_loss_mu0: float
    wall_time: float

    @property
    def iterations(self) -> int:
        return len(self.loss_mu0) - 1

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def optimize(
    f: ParametricLoss,
    phi0,
    schedule: Schedule,
    adam: AdamConfig = AdamConfig(),
    seed: int | None = None,
) -> RunRecord:
    """Gradient descent over the scheduled landscape f(., mu(i)).

    Records both the regularized loss at mu(i) and the unregularized loss at
    every iterate; the mu = 0 trace is what comparisons report.
    """
    t_start = time.perf_counter()
    phi = np.asarray(phi0, dtype=float).copy()
    if phi.shape != (f.m,):
        raise ValueError(f"phi0 must have shape ({f.m},)")
    state = AdamState.init(f.m, adam)
    loss_mu: list[float] = []
    loss_mu0: list[float] = []
    for i in range(schedule.i_max):
        mu_i = schedule_mu(schedule, i)
        loss_mu.append(f.value(phi, mu_i))
        loss_mu0.append(f.value(phi, 0.0))
        grad = f.gradient(phi, mu_i)
        state, phi = adam_step(state, grad, phi)
    loss_mu.append(f.value(phi, schedule_mu(schedule, schedule.i_max)))
    loss_mu0.append(f.value(phi, 0.0))
    return RunRecord(
        seed=seed,
        schedule=schedule.describe(),
        adam=adam.describe(),
        phi_init=[float(v) for v in np.asarray(phi0, dtype=float)],
        phi_final=[float(v) for v in phi],
        loss_mu=loss_mu,
        loss_mu0=loss_mu0,
        final_loss_mu0=loss_mu0[-1],
        best_loss_mu0=min(loss_mu0),
        wall_time=time.perf_counter() - t_start,
    )


def run_seeds(master_seed: int, n_starts: int) -> np.ndarray:
    """Deterministic per-run seeds derived from the master seed."""
    return np.random.SeedSequence(master_seed).generate_state(n_starts)


def initial_point(run_seed: int, m: int) -> np.ndarray:
    """phi sampled uniformly at random from (0, 2*pi)^m."""
    return np.random.default_rng(int(run_seed)).uniform(0.0, 2.0 * math.pi, m)


def _run_one(args):
    f, phi0, schedule, adam, seed = args
    return optimize(f, phi0, schedule, adam, seed=seed)


def multistart(
    f: ParametricLoss,
    n_starts: int,
    schedule: Schedule,
    master_seed: int,
    adam: AdamConfig = AdamConfig(),
    parallel: int = 1,
) -> list[RunRecord]:
    """Independent restarts with per-run seeds derived from master_seed.

    The result list is ordered by run index and identical regardless of
    `parallel`.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    seeds = run_seeds(master_seed, n_starts)
    jobs = [
        (f, initial_point(s, f.m), schedule, adam, int(s)) for s in seeds
    ]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(_run_one, jobs))
    return [_run_one(job) for job in jobs]


def percentile_improvement(
    baseline, regularized, p: float, atol: float = 1e-6
) -> float:
    """Fraction of regularized losses at or below the baseline's p-th
    percentile (linear interpolation on the sorted list).

    `atol` absorbs convergence degeneracy: finite-iteration runs that land in
    the same basin agree only to ~1e-6, so a strict comparison would score a
    same-basin run as a miss whenever the threshold run sits epsilon deeper.
    The tolerance is far below typical basin separation (~1e-3 for the
    Wishart fields studied here) and only collapses such ties.
    """
    baseline = np.asarray(baseline, dtype=float)
    regularized = np.asarray(regularized, dtype=float)
    if baseline.size == 0 or regularized.size == 0:
        raise ValueError("both samples must be non-empty")
    threshold = np.percentile(baseline, p)
    return float(np.mean(regularized <= threshold + atol))


# --- persistence ------------------------------------------------------------

AGGREGATE_COLUMNS = (
    "run_id",
    "seed",
    "schedule",
    "final_loss_mu0",
    "best_loss_mu0",
    "iterations",
)


def write_run_records(records: list[RunRecord], outdir) -> str:
    """One JSON document per run plus an aggregate CSV; returns the CSV path."""
    runs_dir = os.path.join(outdir, "runs")
    os.makedirs(runs_dir, exist_ok=True)
    for i, rec in enumerate(records):
        with open(os.path.join(runs_dir, f"run_{i:05d}.json"), "w") as fh:
            json.dump(rec.to_dict(), fh, indent=2)
    csv_path = os.path.join(outdir, "runs.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGGREGATE_COLUMNS)
        for i, rec in enumerate(records):
            writer.writerow(
                [
                    i,
                    rec.seed,
                    rec.schedule["kind"],
                    repr(rec.final_loss_mu0),
                    repr(rec.best_loss_mu0),
                    rec.iterations,
                ]
            )
    return csv_path
