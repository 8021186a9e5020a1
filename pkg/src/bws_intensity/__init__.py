"""Best-worst scaling annotation and emotion intensity regression toolkit."""

from .annotation import (
    GoldQuestion,
    Response,
    ResponseSet,
    Session,
    create_session,
    simulate_annotators,
)
from .corpus import Dataset, Item, hqt_nqt_pairs, load_dataset, strip_trailing_hashtag
from .design import TupleDesign, generate_design, verify_design
from .errors import (
    ConfigurationError,
    DegenerateInputError,
    DesignSearchError,
    InfeasibleDesignError,
    ParseError,
    RejectedAnnotatorError,
    ResourceError,
    ToolkitError,
    TrainingError,
    ValidationError,
)
from .features import (
    EmbeddingTable,
    FeatureConfig,
    Lexicon,
    Resources,
    TweetFeaturizer,
    assemble,
    mark_negation,
    tokenize,
)
from .regression import (
    EvalResult,
    Hyperparams,
    RegressionModel,
    ablation_run,
    evaluate,
    evaluate_subset,
    predict,
    train,
    transfer_matrix,
)
from .scoring import (
    HashtagImpactReport,
    ScoreTable,
    ShrResult,
    compute_scores,
    expand_pair_orders,
    hashtag_impact,
    pearson,
    spearman,
    split_half_reliability,
    wilcoxon_signed_rank,
)
from .svr import DualCoordinateSVR

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "Dataset",
    "DegenerateInputError",
    "DesignSearchError",
    "DualCoordinateSVR",
    "EmbeddingTable",
    "EvalResult",
    "FeatureConfig",
    "GoldQuestion",
    "HashtagImpactReport",
    "Hyperparams",
    "InfeasibleDesignError",
    "Item",
    "Lexicon",
    "ParseError",
    "RegressionModel",
    "RejectedAnnotatorError",
    "ResourceError",
    "Resources",
    "Response",
    "ResponseSet",
    "ScoreTable",
    "Session",
    "ShrResult",
    "ToolkitError",
    "TrainingError",
    "TupleDesign",
    "TweetFeaturizer",
    "ValidationError",
    "ablation_run",
    "assemble",
    "compute_scores",
    "create_session",
    "evaluate",
    "evaluate_subset",
    "expand_pair_orders",
    "generate_design",
    "hashtag_impact",
    "hqt_nqt_pairs",
    "load_dataset",
    "mark_negation",
    "pearson",
    "predict",
    "simulate_annotators",
    "spearman",
    "split_half_reliability",
    "strip_trailing_hashtag",
    "tokenize",
    "train",
    "transfer_matrix",
    "verify_design",
    "wilcoxon_signed_rank",
]
