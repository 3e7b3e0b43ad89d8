"""Pilot-wave (de Broglie-Bohm) dynamics on 1D and 2D configuration-space grids.

Subpackages by layer:

``grid``          units, grids, wavefunctions, quadrature and interpolation
``tdse``          eigensolver and Crank-Nicolson / ADI propagators
``fields``        density, current, velocity, quantum potential and forces
``trajectories``  Bohmian paths, Born-rule ensembles, equivariance checks
``scenarios``     stationary well, wall release, von Neumann and protective runs
``config``, ``io``, ``cli``  configuration files, result export, command line
"""

__version__ = "0.1.0"
