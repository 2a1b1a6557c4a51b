"""Symbolic-numeric workbench for closed-form traveling waves of a
family of b-weighted dispersive wave equations with cubic (and
optionally quadratic) convection.

Subpackages:
    expr     -- minimal exact symbolic expression kernel
    riccati  -- quadratic first-order ODE branch catalog and audit
    catalog  -- closed-form traveling-wave family registry
    residual -- PDE/ODE residual construction and numeric scanning
    ansatz   -- series-substitution machinery and coefficient systems
    sim      -- periodic time integration (spectral and FD4 schemes)
    cli      -- command-line front end
"""

__version__ = "0.1.0"
