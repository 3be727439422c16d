"""Nonnegative matrix factorization by two-block coordinate descent and SPA."""

from .bench import BenchSpec, load_bench_spec, run_benchmark
from .datasets import GenSpec, gen_lowrank, gen_near_separable
from .initialization import init_clustering, init_colsubset, init_random, init_svd_split
from .matrix import (
    ColumnSelection,
    MatrixMarketError,
    frobenius_error,
    load_matrix_market,
    normalize_columns_l1,
    relative_error,
    save_matrix_market,
)
from .nnls import NnlsSolution, nnls_pg, nnls_solve
from .objective import (
    Factorization,
    KktReport,
    balance_factors,
    gradient_h,
    gradient_w,
    kkt_report,
    kkt_residual,
    optimal_scaling,
)
from .separable import AnchorSet, recover_h, spa, spa_noise_sweep, spa_refine
from .solvers import (
    SolverConfig,
    Trace,
    accelerated_sweep,
    als_update,
    anls_update,
    hals_update,
    mu_update,
    run_cd,
)

__version__ = "0.1.0"
