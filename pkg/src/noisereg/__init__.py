"""Noise-injection regularization of quantum loss landscapes.

Dense density-matrix simulation of Clifford + Pauli-rotation circuits with
per-rotation Pauli noise channels, exact Fourier-mode diagnostics of the
resulting high-frequency suppression, and multi-start optimization
experiments (QAOA toy model, Wishart random fields, QCNN teacher-student)
comparing regularized against baseline training.
"""

from .circuit import (
    Circuit,
    CliffordGate,
    NoiseChannel,
    PauliRotation,
    attach_noise,
    load_circuit,
    save_circuit,
)
from .fourier import FourierTable, damped_eval, extract_modes, heat_residual, mode_spectrum
from .optim import (
    AdamConfig,
    AdamState,
    CircuitLoss,
    ParametricLoss,
    RunRecord,
    Schedule,
    adam_step,
    fd_grad,
    multistart,
    optimize,
    param_shift_grad,
    percentile_improvement,
    schedule_mu,
)
from .pauli import Hamiltonian, PauliString
from .qaoa import build_qaoa_toy, landscape_grid
from .qcnn import Dataset, QcnnLoss, QcnnSpec, accuracy, build_qcnn, gen_dataset, train_student
from .simulator import (
    DensityMatrix,
    apply_clifford,
    apply_noise,
    apply_noise_dilated,
    apply_rotation,
    circuit_expectation,
    circuit_gradient,
    expectation,
    run_circuit,
)
from .whrf import (
    WhrfLoss,
    WishartField,
    gamma_sweep,
    mode_damping_check,
    sample_wishart,
    whrf_grad,
    whrf_loss,
    whrf_loss_reg,
)

__version__ = "0.1.0"
