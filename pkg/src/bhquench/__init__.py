"""Correlation growth after a Mott -> superfluid quench of the Bose-Hubbard model,
at leading order in the inverse coordination number."""

__version__ = "0.1.0"

from .dispersion import (
    LongWavelength,
    QuenchParams,
    RegimeReport,
    classify_regime,
    critical_couplings,
    growth_rate_profile,
    long_wavelength_params,
    omega_squared,
    scaling_transform,
)
from .dynamics import (
    ModeKernelTable,
    evolve_modes_ode,
    kernel_closed_form,
    kernel_table,
    real_space_oracle,
    spectroscopy_fit,
)
from .lattice import LatticeSpec, ModeGrid, build_lattice, effective_mass, mode_grid, structure_factor
from .observables import (
    CorrelationField,
    Region,
    bessel_profile,
    calibrate_prefactor,
    condensate_fraction,
    current_correlator,
    four_point,
    light_cone_front,
    phase_correlator,
    saddle_point_form,
    two_point_field,
)
