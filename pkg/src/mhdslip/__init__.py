"""Wall-bounded incompressible MHD with Navier-slip walls and its vanishing-dissipation limit."""

__version__ = "0.1.0"
