"""Transfer operators, pressure and dimension for conformal IFS on an interval."""

__version__ = "0.1.0"

from .attractor import (
    BoxDimension,
    CylinderCover,
    PointCloud,
    box_dimension,
    chaos_game,
    cylinder_cover,
    hausdorff_upper,
)
from .config import RunConfig, build_family, bundled_config, load_config, parse_config
from .dimension import (
    ConvexityReport,
    DimensionResult,
    MoranRoot,
    PressurePoint,
    convexity_check,
    finiteness_exponent,
    hausdorff_dimension,
    moran_root,
    pressure,
)
from .errors import (
    BudgetExceededError,
    ConfigError,
    DomainError,
    IfsError,
    IndexOutOfFamilyError,
    IrreducibilityError,
    NoRootInRangeError,
    NonConvergenceError,
    SummabilityError,
    ThetaUnknownError,
    UnboundedDistortionError,
)
from .families import (
    DistortionData,
    IFSFamily,
    affine_family,
    attractor_hull,
    cantor_pair_family,
    coding_map,
    compose_word,
    contraction_bounds,
    dyadic_gap_family,
    estimate_distortion,
    gauss_family,
)
from .maps import ConformalMap, Word, affine_map, identity_map
from .separation import (
    MoranCheck,
    OpenSetCandidate,
    SeparationReport,
    check_fosc,
    check_strong,
    moran_necessary,
    suggest_open_set,
)
from .transfer import (
    AtomicMeasure,
    DiniPoint,
    GridFunction,
    PerronData,
    Potential,
    apply,
    apply_at,
    dini_diagnostics,
    dual_apply,
    normalized_operator,
    perron_pair,
    spectral_radius,
    uniform_grid,
)

__all__ = [name for name in dir() if not name.startswith("_")]
