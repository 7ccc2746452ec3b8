"""Physics-informed inverse dynamics identification: Newtonian and Lagrangian networks."""

__version__ = "0.1.0"
