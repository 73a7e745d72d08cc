"""twingraph: twin graph attention over coupled scene/concept graphs.

The package covers the full desk-scale stack: building coupled graphs from
captions and a knowledge graph, a synthetic task family whose answers
require crossing the two graphs, the twin attention network with medium
exchange, and joint training with an MMD medium objective.
"""

from .graphs import (
    CANONICAL_RELATIONS,
    DEFAULT_VOCABULARY,
    ConceptGraph,
    CoupledInstance,
    RelationVocabulary,
    SceneGraph,
    Triple,
    Violation,
    mediums,
    normalize_entity,
    relation_histogram,
    validate,
)
from .corpus import CorpusFormatError, iter_corpus, load_corpus, save_corpus
from .fusion import (
    CoupledState,
    EmbeddingSpace,
    FusionConfig,
    MediumMissingError,
    MissingEmbeddingError,
    TraceRecorder,
    forward,
    medium_exchange,
)
from .objectives import (
    AnswerScores,
    DimensionMismatch,
    GoldNotCandidateError,
    LossBreakdown,
    gaussian_kernel,
    inference_loss,
    joint_loss,
    mmd_loss,
    predict,
)
from .model import Model, question_context_vector
from .numeric import NonFiniteError, ParameterStore, Tensor, grad_check
from .harness import (
    EvalReport,
    InfeasibleSpecError,
    SyntheticSpec,
    TrainConfig,
    TrainResult,
    evaluate,
    generate,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "CANONICAL_RELATIONS",
    "DEFAULT_VOCABULARY",
    "RelationVocabulary",
    "Triple",
    "SceneGraph",
    "ConceptGraph",
    "CoupledInstance",
    "Violation",
    "normalize_entity",
    "mediums",
    "validate",
    "relation_histogram",
    "CorpusFormatError",
    "save_corpus",
    "load_corpus",
    "iter_corpus",
    "FusionConfig",
    "EmbeddingSpace",
    "CoupledState",
    "TraceRecorder",
    "forward",
    "medium_exchange",
    "MissingEmbeddingError",
    "MediumMissingError",
    "AnswerScores",
    "LossBreakdown",
    "inference_loss",
    "gaussian_kernel",
    "mmd_loss",
    "joint_loss",
    "predict",
    "GoldNotCandidateError",
    "DimensionMismatch",
    "Model",
    "question_context_vector",
    "Tensor",
    "ParameterStore",
    "NonFiniteError",
    "grad_check",
    "SyntheticSpec",
    "InfeasibleSpecError",
    "generate",
    "TrainConfig",
    "TrainResult",
    "EvalReport",
    "train",
    "evaluate",
    "__version__",
]
