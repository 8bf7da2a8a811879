"""Python bindings for the qrwave spectral solvers."""

from ._qrwave import (
    AssumptionViolation,
    Basis,
    ConfigError,
    DivergenceError,
    RegConfig,
    apply_P,
    apply_Q,
    convergence_sweep,
    forward_solve,
    galerkin_step_solve,
    illposedness_demo,
    naive_backward_solve,
    norm_gevrey,
    norm_grad,
    norm_h1,
    norm_l2,
    picard_solve,
    regularized_backward_solve,
)

__all__ = [
    "AssumptionViolation",
    "Basis",
    "ConfigError",
    "DivergenceError",
    "RegConfig",
    "apply_P",
    "apply_Q",
    "convergence_sweep",
    "forward_solve",
    "galerkin_step_solve",
    "illposedness_demo",
    "naive_backward_solve",
    "norm_gevrey",
    "norm_grad",
    "norm_h1",
    "norm_l2",
    "picard_solve",
    "regularized_backward_solve",
]
