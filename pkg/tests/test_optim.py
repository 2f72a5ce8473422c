"""ADAM, schedules, multistart determinism, percentile statistics."""
import math

import numpy as np
import pytest

from noisereg import (
    AdamConfig,
    AdamState,
    CircuitLoss,
    ParametricLoss,
    Schedule,
    adam_step,
    fd_grad,
    multistart,
    optimize,
    param_shift_grad,
    percentile_improvement,
    schedule_mu,
)
from noisereg.optim import initial_point, run_seeds, write_run_records

from helpers import random_circuit, random_hamiltonian


class QuadraticOnTorus(ParametricLoss):
    """sum_k (1 - mu) * (1 - cos(phi_k)): smooth, minimum at phi = 0."""

    def __init__(self, m: int):
        self.m = m

    def value(self, phi, mu: float = 0.0) -> float:
        phi = np.asarray(phi, dtype=float)
        return float((1.0 - mu) * np.sum(1.0 - np.cos(phi)))


class TestSchedules:
    def test_exponential_endpoints(self):
        s = Schedule("exponential", 0.9, 2000, 10.0)
        assert schedule_mu(s, 0) == pytest.approx(0.9)
        assert schedule_mu(s, 2000) == pytest.approx(0.9 * math.exp(-10.0))

    def test_linear(self):
        s = Schedule("linear", 0.8, 100)
        assert schedule_mu(s, 0) == pytest.approx(0.8)
        assert schedule_mu(s, 50) == pytest.approx(0.4)
        assert schedule_mu(s, 100) == 0.0

    def test_cosine(self):
        s = Schedule("cosine", 0.6, 100)
        assert schedule_mu(s, 0) == pytest.approx(0.6)
        assert schedule_mu(s, 50) == pytest.approx(0.3)
        assert schedule_mu(s, 100) == pytest.approx(0.0, abs=1e-15)

    def test_step(self):
        s = Schedule("step", 0.5, 100)
        assert schedule_mu(s, 0) == 0.5
        assert schedule_mu(s, 49) == 0.5
        assert schedule_mu(s, 50) == 0.0

    def test_baseline_is_mu_zero(self):
        s = Schedule.baseline(100)
        assert all(schedule_mu(s, i) == 0.0 for i in (0, 50, 100))

    def test_monotone_decay(self):
        for kind in ("exponential", "linear", "cosine"):
            s = Schedule(kind, 0.9, 50)
            mus = [schedule_mu(s, i) for i in range(51)]
            assert all(a >= b for a, b in zip(mus, mus[1:]))

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            Schedule("polynomial", 0.5, 100)
        with pytest.raises(ValueError):
            Schedule("linear", 1.5, 100)
        with pytest.raises(ValueError):
            Schedule("linear", 0.5, 0)
        s = Schedule("linear", 0.5, 10)
        with pytest.raises(ValueError):
            schedule_mu(s, 11)


class TestAdam:
    def test_matches_hand_rolled_reference(self):
        # independent transcription of the published ADAM update
        cfg = AdamConfig(lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8)
        rng = np.random.default_rng(0)
        phi = rng.normal(size=4)
        state = AdamState.init(4, cfg)
        m_ref = np.zeros(4)
        v_ref = np.zeros(4)
        phi_ref = phi.copy()
        for t in range(1, 6):
            grad = rng.normal(size=4)
            state, phi = adam_step(state, grad, phi)
            m_ref = 0.9 * m_ref + 0.1 * grad
            v_ref = 0.999 * v_ref + 0.001 * grad**2
            mh = m_ref / (1 - 0.9**t)
            vh = v_ref / (1 - 0.999**t)
            phi_ref = phi_ref - 0.01 * mh / (np.sqrt(vh) + 1e-8)
            np.testing.assert_allclose(phi, phi_ref, atol=1e-14)

    def test_first_step_is_signed_lr(self):
        # bias correction makes step 1 equal lr * sign(grad) up to eps
        cfg = AdamConfig(lr=0.005)
        state = AdamState.init(2, cfg)
        _, phi = adam_step(state, np.array([3.0, -0.2]), np.zeros(2))
        np.testing.assert_allclose(phi, [-0.005, 0.005], atol=1e-7)

    def test_rejects_non_finite_grad(self):
        state = AdamState.init(2)
        with pytest.raises(ValueError):
            adam_step(state, np.array([1.0, float("nan")]), np.zeros(2))

    def test_rejects_shape_mismatch(self):
        state = AdamState.init(2)
        with pytest.raises(ValueError):
            adam_step(state, np.ones(3), np.zeros(3))


class TestGradients:
    @pytest.mark.parametrize("seed", range(5))
    def test_shift_matches_fd_on_circuit(self, seed):
        rng = np.random.default_rng(seed)
        c = random_circuit(rng, 2, 3)
        f = CircuitLoss(c, random_hamiltonian(rng, 2))
        phi = rng.uniform(0, 2 * math.pi, 3)
        mu = float(rng.uniform(0, 0.9))
        np.testing.assert_allclose(
            param_shift_grad(f, phi, mu), fd_grad(f, phi, mu), atol=1e-6
        )
        np.testing.assert_allclose(
            f.gradient(phi, mu), param_shift_grad(f, phi, mu), atol=1e-10
        )

    def test_fd_rejects_bad_step(self):
        f = QuadraticOnTorus(2)
        with pytest.raises(ValueError):
            fd_grad(f, np.zeros(2), h=0.0)


class TestOptimize:
    def test_converges_on_smooth_landscape(self):
        f = QuadraticOnTorus(3)
        rec = optimize(
            f, [0.5, -0.4, 0.8], Schedule.baseline(400), AdamConfig(lr=0.05)
        )
        assert rec.final_loss_mu0 < 1e-4
        assert rec.iterations == 400
        assert len(rec.loss_mu0) == 401 and len(rec.loss_mu) == 401

    def test_records_both_traces(self):
        f = QuadraticOnTorus(2)
        rec = optimize(f, [1.0, 2.0], Schedule("linear", 0.5, 10))
        # at iteration 0, mu = 0.5 halves the loss relative to the mu=0 trace
        assert rec.loss_mu[0] == pytest.approx(0.5 * rec.loss_mu0[0])
        assert rec.best_loss_mu0 == min(rec.loss_mu0)
        assert rec.final_loss_mu0 == rec.loss_mu0[-1]

    def test_deterministic(self):
        rng = np.random.default_rng(8)
        c = random_circuit(rng, 2, 2)
        f = CircuitLoss(c, random_hamiltonian(rng, 2))
        s = Schedule("exponential", 0.9, 20)
        a = optimize(f, [0.3, 1.1], s)
        b = optimize(f, [0.3, 1.1], s)
        assert a.phi_final == b.phi_final
        assert a.loss_mu0 == b.loss_mu0


class TestMultistart:
    def test_seeds_and_points_deterministic(self):
        assert list(run_seeds(42, 5)) == list(run_seeds(42, 5))
        np.testing.assert_array_equal(initial_point(7, 4), initial_point(7, 4))
        assert not np.array_equal(initial_point(7, 4), initial_point(8, 4))

    def test_initial_point_range(self):
        pts = initial_point(3, 1000)
        assert pts.min() >= 0.0 and pts.max() <= 2 * math.pi

    def test_runs_are_ordered_and_reproducible(self):
        f = QuadraticOnTorus(2)
        s = Schedule.baseline(5)
        a = multistart(f, 4, s, master_seed=11)
        b = multistart(f, 4, s, master_seed=11)
        assert [r.seed for r in a] == [r.seed for r in b]
        assert [r.final_loss_mu0 for r in a] == [r.final_loss_mu0 for r in b]

    def test_rejects_zero_starts(self):
        with pytest.raises(ValueError):
            multistart(QuadraticOnTorus(1), 0, Schedule.baseline(5), 0)

    def test_write_run_records(self, tmp_path):
        f = QuadraticOnTorus(2)
        records = multistart(f, 3, Schedule.baseline(5), master_seed=1)
        csv_path = write_run_records(records, tmp_path)
        text = open(csv_path).read().splitlines()
        assert text[0].startswith("run_id,seed,schedule")
        assert len(text) == 4
        assert len(list((tmp_path / "runs").glob("*.json"))) == 3


class TestPercentiles:
    def test_known_ratio(self):
        baseline = list(range(100))  # p5 threshold = 4.95
        regularized = [0.0] * 25 + [50.0] * 75
        frac = percentile_improvement(baseline, regularized, 5.0)
        assert frac == pytest.approx(0.25)

    def test_identical_cohorts_give_ratio_one(self):
        rng = np.random.default_rng(0)
        sample = rng.normal(size=2000)
        frac = percentile_improvement(sample, sample, 5.0)
        assert frac == pytest.approx(0.05, abs=0.01)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            percentile_improvement([], [1.0], 5.0)
