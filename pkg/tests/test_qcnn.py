"""QCNN template, datasets, teacher-student training."""
import math

import numpy as np
import pytest

from noisereg import (
    AdamConfig,
    Dataset,
    QcnnLoss,
    Schedule,
    accuracy,
    build_qcnn,
    gen_dataset,
    train_student,
)
from noisereg.circuit import NoiseChannel
from noisereg.optim import fd_grad
from noisereg.qcnn import (
    CONV_PARAMS,
    POOL_PARAMS,
    DegenerateTeacherError,
    predictions,
    qcnn_loss,
    random_teacher,
)
from noisereg.simulator import circuit_expectation


class TestTemplate:
    def test_n4_structure(self):
        circuit, spec = build_qcnn(4)
        # two stages of (15 conv + 3 pool) shared parameters
        assert spec.m == 2 * (CONV_PARAMS + POOL_PARAMS) == 36
        assert len(circuit.rotations) == 54
        assert spec.stages == 2
        assert spec.readout_qubit == 0
        # every rotation carries its noise channel
        channels = [op for op in circuit.ops if isinstance(op, NoiseChannel)]
        assert len(channels) == len(circuit.rotations)

    def test_n8_structure(self):
        circuit, spec = build_qcnn(8)
        assert spec.m == 3 * (CONV_PARAMS + POOL_PARAMS) == 54
        assert spec.stages == 3

    def test_parameters_shared_within_layers(self):
        circuit, _ = build_qcnn(4)
        positions = circuit.param_positions()
        # first stage has two blocks, so its conv parameters appear twice
        assert all(len(positions[k]) == 2 for k in range(CONV_PARAMS + POOL_PARAMS))
        # final stage has one block: parameters appear once
        assert all(
            len(positions[k]) == 1
            for k in range(CONV_PARAMS + POOL_PARAMS, 2 * (CONV_PARAMS + POOL_PARAMS))
        )

    def test_rejects_bad_sizes(self):
        for n in (2, 3, 6):
            with pytest.raises(ValueError):
                build_qcnn(n)


class TestPredictionsAndData:
    def test_predictions_match_per_state_evaluation(self):
        from noisereg.simulator import (
            DensityMatrix,
            apply_clifford,
            apply_rotation,
            expectation,
        )
        from noisereg.circuit import CliffordGate, PauliRotation

        circuit, spec = build_qcnn(4)
        rng = np.random.default_rng(0)
        phi = rng.uniform(0, 2 * math.pi, spec.m)
        preds = predictions(spec, phi)
        for x in (0, 5, 11, 15):
            rho = DensityMatrix.basis_state(4, x)
            for op in circuit.ops:
                if isinstance(op, CliffordGate):
                    rho = apply_clifford(rho, op)
                elif isinstance(op, PauliRotation):
                    rho = apply_rotation(rho, op.pauli, phi[op.param_index])
            ref = expectation(rho, spec.observable)
            assert preds[x] == pytest.approx(ref, abs=1e-10)

    def test_labels_bounded(self):
        _, spec = build_qcnn(4)
        phi = random_teacher(spec, 1)
        preds = predictions(spec, phi)
        assert np.max(np.abs(preds)) <= 1.0 + 1e-12

    def test_gen_dataset_split_and_margin(self):
        _, spec = build_qcnn(4)
        phi_star = random_teacher(spec, 2)
        train, test = gen_dataset(spec, phi_star, 8, 8, seed=3)
        assert len(train.entries) == 8 and len(test.entries) == 8
        assert set(train.indices).isdisjoint(test.indices)
        assert np.min(np.abs(train.labels)) >= 1e-6
        assert train.phi_star == test.phi_star

    def test_gen_dataset_rejects_oversized(self):
        _, spec = build_qcnn(4)
        with pytest.raises(ValueError):
            gen_dataset(spec, random_teacher(spec, 0), 12, 8, seed=0)

    def test_degenerate_teacher_raises(self):
        _, spec = build_qcnn(4)
        # phi = 0 makes the circuit the identity: labels all +1 are fine, so
        # force degeneracy with an impossible margin instead
        with pytest.raises(DegenerateTeacherError):
            gen_dataset(
                spec, np.zeros(spec.m), 8, 8, seed=0, label_margin=2.0
            )


class TestLoss:
    def test_teacher_has_zero_loss_and_full_accuracy(self):
        _, spec = build_qcnn(4)
        phi_star = random_teacher(spec, 5)
        train, test = gen_dataset(spec, phi_star, 8, 8, seed=5)
        assert qcnn_loss(spec, train, phi_star) == pytest.approx(0.0, abs=1e-20)
        assert accuracy(spec, train, np.array(phi_star)) == 1.0
        assert accuracy(spec, test, np.array(phi_star)) == 1.0

    def test_gradient_matches_finite_difference(self):
        _, spec = build_qcnn(4)
        phi_star = random_teacher(spec, 6)
        train, _ = gen_dataset(spec, phi_star, 8, 8, seed=6)
        loss = QcnnLoss(spec, train)
        rng = np.random.default_rng(7)
        phi = rng.uniform(0, 2 * math.pi, spec.m)
        for mu in (0.0, 0.4):
            np.testing.assert_allclose(
                loss.gradient(phi, mu), fd_grad(loss, phi, mu), atol=1e-6
            )

    def test_loss_decreases_under_training(self):
        _, spec = build_qcnn(4)
        phi_star = random_teacher(spec, 8)
        train, test = gen_dataset(spec, phi_star, 8, 8, seed=8)
        rec, train_acc, test_acc = train_student(
            spec, train, test, Schedule.baseline(60), AdamConfig(lr=0.05), seed=1
        )
        assert rec.final_loss_mu0 < rec.loss_mu0[0]
        assert 0.0 <= train_acc <= 1.0 and 0.0 <= test_acc <= 1.0

    def test_training_deterministic(self):
        _, spec = build_qcnn(4)
        phi_star = random_teacher(spec, 9)
        train, test = gen_dataset(spec, phi_star, 8, 8, seed=9)
        sched = Schedule("exponential", 0.9, 10)
        a = train_student(spec, train, test, sched, seed=4)
        b = train_student(spec, train, test, sched, seed=4)
        assert a[0].phi_final == b[0].phi_final
        assert a[1:] == b[1:]
