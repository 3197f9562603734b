"""Forward and inverse potential scattering for the Schrodinger equation.

Multi-frequency synthetic data (near field and far field, 2D/3D, classical
and magnetic), Fourier-domain reconstruction of the potentials, and
empirical probes of the stability estimates that govern them.
"""

__version__ = "0.1.0"

from .fields import (
    ClassParams,
    CoverageError,
    FourierSampleSet,
    Grid,
    ScalarPotentialField,
    VectorPotentialField,
    divergence_free_project,
    fourier_forward,
    inverse_bandlimited,
    l2_error,
    l2_norm,
    load_field,
    save_field,
    sobolev_norm,
    spectral_gradient,
)
from .forward import (
    PlaneWave,
    ResolutionError,
    ScatteringDataset,
    SolverConfig,
    SolverConvergenceError,
    add_noise,
    born_oracle,
    dtn_circle,
    far_field_pattern,
    load_dataset,
    near_field_trace,
    save_dataset,
    solve_total_field,
)
from .reconstruct import (
    DirectionPair,
    IncidentPair,
    assemble_far_field_samples,
    direction_pair_for_xi,
    incident_pair_for_xi,
    near_field_fourier_estimate,
    reconstruct_potential,
    recover_electric,
    recover_magnetic,
)
from .specialfn import SectorPoint, cylinder_bessel, green_kernel, green_kernel_gradient, hankel0_sector
from .stability import (
    AnalyticSlab,
    FrequencyBand,
    StabilityExponents,
    StabilityReport,
    continuation_bound,
    continuation_mu,
    data_discrepancy,
    resolvent_probe,
    stability_exponents,
    sweep_experiment,
    theoretical_bound,
)
