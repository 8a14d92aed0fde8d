"""Combined QBER estimation and parity-block error reconciliation for QKD
post-processing, with a Cascade baseline and a benchmark harness."""

from .cascade import (
    CascadeConfig,
    CascadeResult,
    cascade_reconcile,
    cascade_session,
    initial_block_size,
    sample_estimate,
)
from .estimator import (
    ErrorEstimate,
    MismatchObservation,
    OutOfMonotoneRangeError,
    estimate_from_samples,
    expected_mismatch,
    expected_single_blocks,
    expected_triple_blocks,
    invert_exact,
    invert_poly,
)
from .keymodel import (
    BlockRef,
    IndexMap,
    SiftedKey,
    all_block_parities,
    block_count,
    block_parity,
    trace_blocks,
)
from .protocol import (
    HashCollisionError,
    ProtocolViolation,
    SessionConfig,
    SessionResult,
    hash_tag,
    privacy_discard,
    run_session,
)
from .randperm import (
    MasterSeed,
    PermutationPlan,
    apply_permutation,
    derive_plan,
    permutation_of,
)
from .simnet import Channel, ChannelStats, ErrorSpec, corrupt, make_channel

__version__ = "0.1.0"

__all__ = [
    "BlockRef",
    "CascadeConfig",
    "CascadeResult",
    "Channel",
    "ChannelStats",
    "ErrorEstimate",
    "ErrorSpec",
    "HashCollisionError",
    "IndexMap",
    "MasterSeed",
    "MismatchObservation",
    "OutOfMonotoneRangeError",
    "PermutationPlan",
    "ProtocolViolation",
    "SessionConfig",
    "SessionResult",
    "SiftedKey",
    "all_block_parities",
    "apply_permutation",
    "block_count",
    "block_parity",
    "cascade_reconcile",
    "cascade_session",
    "corrupt",
    "derive_plan",
    "estimate_from_samples",
    "expected_mismatch",
    "expected_single_blocks",
    "expected_triple_blocks",
    "hash_tag",
    "initial_block_size",
    "invert_exact",
    "invert_poly",
    "make_channel",
    "permutation_of",
    "privacy_discard",
    "run_session",
    "sample_estimate",
    "trace_blocks",
]
