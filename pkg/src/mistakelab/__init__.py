"""mistakelab: a desk-scale simulation lab for online prediction.

Finite concept classes with exhaustive combinatorial oracles, the
mistake-tree and tuple-tree dimensions, version-space and window-weight
learners, flip-set expert pools with canonical indexing, weighted
majority and second-order aggregation, tree-walk adversaries, and
empirical checkers for the process-level learnability conditions.
"""

from .concepts import (
    ConceptClass,
    FullClass,
    Hypothesis,
    STAR,
    evaluate,
    full_class,
    is_realizable,
    load_class_file,
    parse_class_spec,
    restrict,
    save_class_file,
    shatters,
    singletons_class,
    thresholds_class,
    union_split_class,
    weight,
)
from .errors import (
    ConfigError,
    DomainError,
    EndOfStream,
    InfeasibleError,
    InvariantError,
    MistakeLabError,
    RealizabilityError,
    SizeError,
    StateError,
)
from .harness import (
    CheckReport,
    Trace,
    check_c2,
    check_condition1,
    emit,
    run_trial,
)
from .learners import (
    ConstantLearner,
    Expert,
    GameGuidedLearner,
    ShatterWeightLearner,
    SOALearner,
    SquintAggregator,
    WeightedMajority,
    expert_pool,
    expert_predict,
    index_of_set,
    set_of_index,
    squint_step,
    wm_step,
)
from .processes import (
    AdversaryTrace,
    DeterministicProcess,
    IIDProcess,
    MarkovProcess,
    NovelPointProcess,
    ProcessOracle,
    conditional_rollout,
    littlestone_adversary,
    novel_point_process,
    sample_next,
    vcl_adversary,
)
from .trees import (
    GameRecord,
    LittlestoneTree,
    VclNode,
    VclTree,
    build_vcl_adversary_tree,
    induced_partial_class,
    littlestone_dimension,
    littlestone_witness,
    vc_dimension,
    vcl_depth,
    winning_strategy,
)

__version__ = "0.1.0"
