"""parimp: numerics for near-parabolic perturbations of rational maps.

Modules
-------
mapcore    polynomial/rational map algebra, parsing, Aberth-Ehrlich roots
fixsplit   fixed point splitting, holomorphic indices, horocyclic tracks
gateflow   rotated vector field flows and gate structure detection
gatetree   gate trees, edge-dynamics engine, marked edges, predictions
juliahaus  escape-time Julia boundaries and Hausdorff distances
extray     external ray tracing and tail convergence statistics
experiment declarative experiment runner behind the CLI
"""

__version__ = "0.1.0"

from .numcfg import DEFAULT, NumericConfig  # noqa: F401
