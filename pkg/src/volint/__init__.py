"""Integral invariants of triangulated surfaces and planar curves via
boundary integrals: spherical volume invariant, circular area invariant,
and PCA curvature estimation."""

__version__ = "0.1.0"

from .curve import (PlanarCurve, CircularAreaResult, circular_area_invariant,
                    circular_area_by_angles, curvature_from_area,
                    global_area_invariant)
from .features import power_normalize, threshold_edges
from .gamma import (VertexStar, build_vertex_star, estimate_vertex_normal,
                    gamma, gamma_numeric, gamma_of_vertex)
from .invariants import (CurvatureEstimate, MomentSet, ScalarField,
                         covariance_matrix, curvature_at_vertex,
                         curvature_estimate, invariant_field,
                         mean_curvature_from_svi, moment_set,
                         spherical_volume_invariant)
from .io import (ColorMap, read_curve_csv, read_field_csv, read_mesh,
                 write_field_csv, write_field_ply, write_mesh_ply)
from .mesh import (BallRegion, TriMesh, build_mesh, collect_ball_region,
                   triangle_distance_bounds)
from .triangle_integrals import (BisectionConfig, BisectionStats,
                                 bisect_and_integrate, hypersingular_integral,
                                 linear_moment, quadratic_moment,
                                 side_length_limit, svi_triangle_term)

__all__ = [name for name in dir() if not name.startswith("_")]
