"""Knowledge-base completion: relational scorers trained with a
contrastive max-margin objective, plus ranking and threshold
classification evaluation.

Typical use goes through :class:`KnowledgeBaseCompleter` (fit on name
triples, then predict/rank), or through the ``ntkb`` command line for
file-based workflows.  The lower-level modules expose the pieces: data
loading (`kb`), embedding initialization (`embeddings`), scorers and
gradients (`models`), the flat parameter vector (`flatten`), the optimizer
(`lbfgs`), the training loop (`training`), evaluation protocols
(`evaluation`), checkpoint serialization (`checkpoint`), and the
finite-difference gradient checker (`gradcheck`).
"""

from .checkpoint import Checkpoint, load_checkpoint, load_thresholds, save_checkpoint, save_thresholds
from .embeddings import (
    WordVectorTable,
    compose_entity_vector,
    init_entity_embeddings,
    load_word_vectors,
    tokenize_entity_name,
)
from .errors import (
    CheckpointError,
    ConfigError,
    NtkbError,
    NumericalError,
    ParseError,
    VocabularyError,
)
from .estimator import KnowledgeBaseCompleter
from .evaluation import (
    ClassificationReport,
    RankingReport,
    ThresholdTable,
    classify,
    evaluate_ranking,
    fit_thresholds,
    generate_negatives,
    rank_right_entity,
    rank_triplets,
    recall_at_k,
)
from .fixture import build_fixture_kb, fixture_facts, fixture_triples, write_fixture
from .flatten import ParameterLayout, init_parameters, pack, pack_gradients, unpack
from .gradcheck import GradCheckReport, fd_gradient, run_suite
from .kb import (
    KnowledgeBase,
    Triplet,
    build_knowledge_base,
    kb_with_vocabulary,
    load_knowledge_base,
    load_split,
)
from .lbfgs import MinimizeResult, minimize
from .models import (
    GradientSet,
    ModelParams,
    bilinear_score,
    bilinear_tensor_product,
    gradient,
    hadamard_score,
    ntn_score,
    similarity_score,
)
from .training import (
    CorruptionSample,
    EpochMetrics,
    TrainResult,
    TrainingConfig,
    batch_objective_and_gradient,
    hinge_term,
    sample_corruptions,
    train,
    write_metrics,
)

__version__ = "0.1.0"

__all__ = [
    "Checkpoint",
    "CheckpointError",
    "ClassificationReport",
    "ConfigError",
    "CorruptionSample",
    "EpochMetrics",
    "GradCheckReport",
    "GradientSet",
    "KnowledgeBase",
    "KnowledgeBaseCompleter",
    "MinimizeResult",
    "ModelParams",
    "NtkbError",
    "NumericalError",
    "ParameterLayout",
    "ParseError",
    "RankingReport",
    "ThresholdTable",
    "TrainResult",
    "TrainingConfig",
    "Triplet",
    "VocabularyError",
    "WordVectorTable",
    "batch_objective_and_gradient",
    "bilinear_score",
    "bilinear_tensor_product",
    "build_fixture_kb",
    "build_knowledge_base",
    "classify",
    "compose_entity_vector",
    "evaluate_ranking",
    "fd_gradient",
    "fit_thresholds",
    "fixture_facts",
    "fixture_triples",
    "generate_negatives",
    "gradient",
    "hadamard_score",
    "hinge_term",
    "init_entity_embeddings",
    "init_parameters",
    "kb_with_vocabulary",
    "load_checkpoint",
    "load_knowledge_base",
    "load_split",
    "load_thresholds",
    "load_word_vectors",
    "minimize",
    "ntn_score",
    "pack",
    "pack_gradients",
    "rank_right_entity",
    "rank_triplets",
    "recall_at_k",
    "run_suite",
    "sample_corruptions",
    "save_checkpoint",
    "save_thresholds",
    "similarity_score",
    "tokenize_entity_name",
    "train",
    "unpack",
    "write_fixture",
    "write_metrics",
]
