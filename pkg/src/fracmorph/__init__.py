"""Multi-scale morphological simplification of fracture surfaces.

The pipeline characterizes a fracture facet as a Lipschitz heightfield,
extrudes it into a watertight solid, voxelizes it, and drives opening and
closing scale spaces from exact Euclidean distance transforms, preserving
the complementarity that counterpart fragments owe to each other.
"""

__version__ = "0.1.0"

from .mesh import (TriangleMesh, BoundaryLoop, load_mesh, save_mesh,
                   face_normals, face_areas, boundary_loops, is_watertight,
                   signed_volume, validate_mesh)
from .grid import (VoxelGrid, voxelize, required_padding, discretization_bound,
                   read_vgrid, write_vgrid, pad_grid)
from .edt import (DistanceField, ProvenanceMap, edt, level_set,
                  squared_radius_threshold, read_dfld, write_dfld,
                  read_prov, write_prov)
from .morphology import (ScaleLadder, ScaleSpace, dilate, erode, close, open_,
                         scale_space, brute_morphology, ball_offsets,
                         verify_scale_space)
from .lipschitz import (EnclosingSphere, LipschitzCone, min_enclosing_sphere,
                        fit_cone, align_to_axis, verify_lipschitz)
from .extrusion import ExtrudedSolid, extrude, choose_depth
from .surfaces import (HeightField, extract_surfaces, separation, to_mesh,
                       column_reliability, write_mask_pgm)
from .complementarity import (ComplementarityReport, RigidPose, check_exact,
                              check_at_scale, abrade, abrasion_bound,
                              ball_absorption, misalignment_score,
                              resample_grid)
from .synth import SynthSpec, gen_facet, gen_pair, heightfield
from .cli import PipelineConfig, run_pipeline
