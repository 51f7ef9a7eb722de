"""Exception types shared across the pipeline.

Exit-code mapping used by the CLI: ConfigError -> 2, data errors
(mesh / geometry / visibility) -> 3, ResourceCapError -> 4.
"""


class FracmorphError(Exception):
    """Base class for all library errors."""


class ConfigError(FracmorphError):
    """Invalid configuration (bad scale ladder, non-positive spacing, ...)."""


class MeshParseError(FracmorphError):
    """Malformed OBJ record."""


class MeshTopologyError(FracmorphError):
    """Non-manifold edge, inconsistent winding, or broken boundary."""


class DegenerateFaceError(FracmorphError):
    """Zero-area triangle encountered at load time."""


class VisibilityError(FracmorphError):
    """Surface normals span a half-angle >= 90 degrees; the patch is not a
    heightfield in any direction and must be split upstream."""


class ExtrusionError(FracmorphError):
    """Facet cannot be extruded (holes, non-positive depth)."""


class GeometryMismatchError(FracmorphError):
    """Two grids that must share origin/spacing/dims do not."""


class InsufficientPaddingError(FracmorphError):
    """A morphological front reached the outermost voxel shell."""


class ColumnConvexityError(FracmorphError):
    """A z-column of the solid has more than one occupied run."""


class ResourceCapError(FracmorphError):
    """Requested grid exceeds the configured voxel-count cap."""
