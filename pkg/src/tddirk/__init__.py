"""Two-derivative diagonally implicit Runge-Kutta (TDDIRK) schemes.

A TDDIRK step for ``y' = f(y)`` uses ``g(y) = f'(y) f(y)`` as well::

    Y_i     = y_n + c_i h f(y_n) + h**2 sum_{j<=i} a_ij g(Y_j)
    y_{n+1} = y_n + h f(y_n) + h**2 sum_i b_i g(Y_i)
"""

from .analysis import (
    PhaseExpansion,
    StabilityGrid,
    dispersion,
    dissipation,
    estimate_phase_expansion,
    stability_function,
    stability_region,
)
from .errors import (
    DomainError,
    IndeterminateOrderError,
    NonconvergenceError,
    ParameterDomainError,
    PoleError,
    TDDIRKError,
    UnknownSchemeError,
)
from .problems import Grid1D, Grid2D, adr2d, advection_source, harmonic_oscillator
from .stepper import IntegrationConfig, ODESystem, integrate, step
from .tableau import (
    ButcherTableau,
    SchemeRegistry,
    classify_order,
    default_registry,
    get_scheme,
    order_condition_residuals,
    register_scheme,
    row_assumption_residuals,
)

__version__ = "0.1.0"
