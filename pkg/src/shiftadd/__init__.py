"""Learning multiplication-free linear transforms from data.

The package factors square dictionaries into cheap building blocks (binary
orthonormal blocks, pairing stages, shears, power-of-two scalings) so that
applying a learned transform and its inverse takes few or no
multiplications, and provides the training, evaluation and serialization
machinery around them.
"""

from .backend import backend_name
from .chainio import load_chain, save_chain
from .coding import SparseCode, hard_threshold, normalize_columns, omp
from .counting import OpCount
from .errors import (
    ChainFormatError,
    ConfigError,
    ContractError,
    DimensionError,
    ShiftAddError,
    SingularMatrixError,
    SolverError,
)
from .factors import (
    Factor,
    LiftingTriple,
    TransformChain,
    apply,
    apply_inverse,
    catalog_b,
    catalog_hadamard4,
    catalog_o,
    chain_op_count,
    coding_cost,
    lifting_decompose,
    materialize,
)
from .harness import (
    CostModel,
    dct_dictionary,
    dct_nominal_ops,
    decompose_dense,
    evaluate,
    weighted_cost,
)
from .images import Dataset, PatchConfig, ingest, read_pgm, write_pgm
from .learners import (
    LearnConfig,
    TrainReport,
    learn_b,
    learn_b_kron,
    learn_m,
    learn_o,
    learn_s,
)
from .linalg import frobenius_sq, jacobi_eigh, left_singular_basis, matmul
from .matching import PairWeights, exact_matching, greedy_matching
from .scoring import (
    ScoreTables,
    SweepContext,
    b_scores,
    block_score,
    build_tables,
    o_local_optimality,
    o_scores,
    scaling_init_score,
    shear_init_scores,
)
from .sopot import INFINITE_PRECISION, SopotValue, quantize, shift_add_multiply

__version__ = "0.1.0"
