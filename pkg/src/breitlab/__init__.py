"""breitlab: numerical laboratory for a semirelativistic two-fermion wave
equation (instantaneous Coulomb + velocity-dependent corrections), plus the
classical post-Coulomb N-charge dynamics it reduces to.

Internal units: hbar = c = 1, energies in units of the particle-1 rest
energy.  See README.md for the CLI and file formats.
"""

from .config import (
    Config,
    ConfigError,
    CouplingSpec,
    GridSpec,
    ParticleParams,
    UnitSystem,
    apply_overrides,
    dump_config,
    load_config,
    parse_config_text,
)
from .solver import (
    ALL_TERMS,
    BilocalField,
    HamiltonianSpec,
    SpectrumResult,
    apply_hamiltonian,
    load_field,
    positive_energy_projector,
    save_field,
    solve_spectrum,
)
from .oracle import (
    HydrogenicState,
    PauliEmbedding,
    ResolutionError,
    breit_shift_matrix,
    dirac_coulomb_reference,
    first_order_shift,
    sample_state,
)
from .darwin import (
    ClassicalState,
    DarwinSystem,
    Trajectory,
    accelerations,
    canonical_momenta,
    circular_orbit,
    energy,
    integrate,
    lagrangian,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_TERMS",
    "BilocalField",
    "ClassicalState",
    "Config",
    "ConfigError",
    "CouplingSpec",
    "DarwinSystem",
    "GridSpec",
    "HamiltonianSpec",
    "HydrogenicState",
    "ParticleParams",
    "PauliEmbedding",
    "ResolutionError",
    "SpectrumResult",
    "Trajectory",
    "UnitSystem",
    "accelerations",
    "apply_hamiltonian",
    "apply_overrides",
    "breit_shift_matrix",
    "canonical_momenta",
    "circular_orbit",
    "dirac_coulomb_reference",
    "dump_config",
    "energy",
    "first_order_shift",
    "integrate",
    "lagrangian",
    "load_config",
    "load_field",
    "parse_config_text",
    "positive_energy_projector",
    "sample_state",
    "save_field",
    "solve_spectrum",
]
