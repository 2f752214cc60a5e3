"""Fourier-Galerkin spectral solver for the spatially homogeneous Boltzmann equation."""

from .errors import (
    BlowupError,
    ConfigMismatch,
    DomainError,
    FGBoltzError,
    FormatError,
    QuadratureError,
    ResourceError,
    SymmetryError,
)
from .spectral import (
    PhysicalField,
    SpectralConfig,
    SpectralField,
    forward_transform,
    hk_norm,
    inverse_transform,
    lp_norm,
    make_config,
    sample,
    split_parts,
    truncation_from_support,
)
from .kernel import (
    AngularKernel,
    KernelSpec,
    QuadratureSpec,
    WeightTable,
    build_weight_table,
    load_table,
    maxwell_kernel,
    richardson_residual,
    save_table,
)
from .collision import eval_collision, eval_collision_extended, quadrature_oracle
from .init_filter import FilterSpec, InitReport, apply_filter, check_conditions, project_initial
from .integrator import RunConfig, Trajectory, run, step

__version__ = "0.1.0"
