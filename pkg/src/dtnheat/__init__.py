"""Heat-trace coefficients of the Dirichlet-to-Neumann map for the weighted
Laplacian with potential, computed by exact symbol calculus."""

__version__ = "0.1.0"
