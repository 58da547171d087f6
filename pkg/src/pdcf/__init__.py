"""Personality-diagnosis collaborative filtering.

A probabilistic recommender that treats each database user's row as a
candidate personality type and predicts by Bayesian mixture, plus the
classic correlation and cosine baselines, a protocol-based evaluation
harness with a randomization significance test, and a value-of-information
layer for rating elicitation and data pruning.
"""

from .baselines import (
    CORRELATION,
    VECTOR_SIMILARITY,
    SimilarityWeights,
    baseline_predict,
    cosine_similarity,
    pearson_similarity,
    similarity_weights,
)
from .evaluation import (
    ALGORITHM_PD,
    ALGORITHMS,
    DeviationRecord,
    EvaluationReport,
    Protocol,
    apply_protocol,
    extreme_filter,
    mad,
    randomization_test,
    run_evaluation,
    run_protocol,
    split_train_test,
)
from .ingest import (
    DEFAULT_ACTION_WEIGHTS,
    SymbolTable,
    SyntheticSpec,
    SyntheticUser,
    actions_to_ratings,
    filter_density,
    generate_synthetic,
    load_action_log_csv,
    load_profile_csv,
    load_ratings_csv,
    write_ratings_csv,
)
from .personality import (
    PDParams,
    PersonalityPosterior,
    PredictiveDistribution,
    data_sigma,
    likelihood,
    most_probable_rating,
    posterior,
    predict,
    predict_all,
    predictive_distribution,
)
from .ratings import (
    NO_RATING,
    RatingScale,
    RatingsMatrix,
    UserProfile,
    overall_mean,
    user_mean,
)
from .voi import (
    CostModel,
    ElicitationTranscript,
    PruneResult,
    QueryValue,
    elicit,
    expected_information_gain,
    prune,
    rank_queries,
)

__version__ = "0.1.0"
