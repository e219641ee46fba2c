"""Tile-algorithm inversion of symmetric positive definite matrices.

Three tile steps (Cholesky factorization, triangular inversion, triangular
product) are generated as sequential task streams, unfolded into a DAG by
data-hazard tracking, and executed by a dynamic scheduler. Array renaming,
loop reversal, and step pipelining are exposed as configuration; their
critical-path consequences are verified analytically.
"""

from .dag_analysis import (
    PathReport,
    critical_path,
    export_dot,
    formula_csv,
    formula_table,
    hazard_census,
    sweep_loop_orders,
    weak_components,
)
from .kernels import (
    KernelKind,
    NotPositiveDefiniteError,
    SingularTileError,
)
from .scheduler import (
    ExecutionError,
    HazardKind,
    TaskDag,
    build_dag,
    execute,
    prune,
    ready_set,
    run_in_order,
)
from .taskgen import (
    Access,
    Mode,
    Placement,
    Step,
    Task,
    TaskStream,
    VariantConfig,
    format_stream,
    gen_inversion,
    gen_step1,
    gen_step2,
    gen_step3,
)
from .tile_matrix import (
    InvalidSizeError,
    ShapeMismatchError,
    TileId,
    TileMatrix,
    copy_lower,
    from_dense,
    generate_spd,
    load_dense_csv,
    max_abs_diff,
    save_dense_csv,
    symmetrize_lower,
    to_dense,
)

__version__ = "0.1.0"
