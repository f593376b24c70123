"""Fast Johnson-Lindenstrauss embeddings: G R H D_xi with a batched fast-multiply path."""
from .errors import (
    CalibrationError,
    DimensionError,
    EmptyReportError,
    FastJLError,
    InstanceTooLargeError,
    PlanningError,
)
from .fastmm import MultiplyPlan, flop_estimate, multiply_blocked, multiply_naive, multiply_strassen
from .hadamard import fwht_full, fwht_op_count, fwht_trimmed
from .transforms import (
    ComposedTransform,
    DenseSignMatrix,
    DimensionPlan,
    FjltTransform,
    HadamardStage,
    IdentityTransform,
    apply_composed,
    apply_composed_batch,
    apply_fjlt,
    embed,
    plan_dimensions,
    route_batch,
    sample_composed,
    sample_dense_baseline,
    sample_fjlt,
    sample_hadamard_stage,
)
from .verify import (
    approx_matmul,
    calibrate,
    composition_check,
    distortion_report,
    failure_rate,
    rip_bruteforce,
    riptojl_check,
)

__version__ = "0.1.0"
