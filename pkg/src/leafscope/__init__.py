"""leafscope: desk-scale numerics for leaf geometry.

Pointed Gromov-Hausdorff bounds on finite samples, local tensor calculus
on metric charts, geodesic integration, example foliations with holonomy,
and end-to-end convergence experiments.
"""

from .metric_space import (
    GhBounds,
    PointedFiniteMetricSpace,
    exact_pointed_gh_small,
    gh_bounds,
    hausdorff_distance,
    load_space,
    save_space,
    space_from_json,
    space_to_json,
    truncated_ball,
)

__version__ = "0.1.0"
