"""Cache-aided private variable-length coding.

Library + CLI implementing a coded-caching delivery scheme whose response
is re-encoded through a two-part private code (a one-time-pad part for the
private variable, a prefix-free part for a functional-representation
symbol), together with an exact analytical leakage auditor and the
closed-form upper/lower bounds on the worst-case expected code length.
"""

from .bounds import (
    BoundReport,
    DemandBounds,
    L2Bounds,
    files_exactly_independent,
    lb_l1,
    lb_l2,
    ub_epsilon,
    ub_perfect,
)
from .caching import (
    CacheLayout,
    DeliveryPayload,
    SubfileId,
    SystemParams,
    all_demand_vectors,
    decode_demand,
    deliver,
    payload_alphabet_size,
    payload_bits,
    payload_distribution,
    place,
    split_file,
)
from .distcore import (
    Alphabet,
    Distribution,
    JointModel,
    JointPair,
    as_fraction,
    binary_entropy_bits,
    ceil_log2,
    conditional,
    conditional_entropy_bits,
    entropy_bits,
    exact_independence,
    joint_pair,
    marginal,
    mutual_information_bits,
)
from .errors import (
    AuditError,
    ConfigError,
    DomainError,
    ModelError,
    PrivcacheError,
    ProtocolError,
    UsageError,
)
from .frl import (
    REVEAL,
    ChannelReport,
    EfrlChannel,
    FrlChannel,
    build_efrl,
    build_frl,
    invert_phi,
    sample_u,
    verify_channel,
)
from .pipeline import (
    AuditResult,
    DemandAudit,
    ExperimentConfig,
    RunResult,
    TrialSummary,
    run,
    simulate_trials,
)
from .privcode import (
    Codeword,
    PrefixCodebook,
    SharedKey,
    build_prefix_code,
    decode_user,
    encode,
    encode_with_u,
    expected_length,
    otp_decode,
    otp_encode,
)

__version__ = "0.1.0"
