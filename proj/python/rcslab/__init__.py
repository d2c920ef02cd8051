"""Python access to the rcslab core: dispersion symbols, Littlewood-Paley
norms, exact linear propagators, oscillatory-integral decay and the
pseudospectral solver.

Spectral arrays are complex with shape (components, n, n, n), indexed
(component, z, y, x); a state has components (a, u1, u2, u3).
"""

from ._rcslab import (
    ConfigError,
    ContractError,
    DataError,
    DomainError,
    Error,
    ModelBreakdownError,
    Params,
    axisymmetric_sup,
    besov_norm,
    block_project,
    eigen_quartic_coeffs,
    evolve_inviscid,
    evolve_viscous,
    forward_transform,
    hessian_det,
    hessian_det_closed_form,
    inverse_transform,
    lambda_pm,
    make_initial_data,
    nonlinearity,
    omega_sweep,
    quartic_roots,
    scaling_fit,
    simulate,
    slow_density_rate,
    strichartz_block_norm,
    sup_decay_fit,
    viscous_charpoly,
)

__all__ = [name for name in dir() if not name.startswith("_")]
