"""Voice timbre attribute detection toolkit.

Given two utterances and a timbre descriptor (say "Husky" for a male pair),
the toolkit trains and evaluates a comparator that outputs the confidence
that the second speaker carries the attribute more strongly than the first.
"""

from .catalog import Descriptor, DescriptorCatalog, Gender, build_catalog, descriptor_index
from .dataset import (
    AnnotationRecord,
    LabelVector,
    Scenario,
    SplitPlan,
    TrainingSample,
    Trial,
    build_training_samples,
    build_trials,
    load_manifest,
    make_label_vector,
    materialize_plan,
    parse_annotations,
    save_manifest,
    split_scenario,
    suggest_eval_descriptors,
    validate_split_plan,
)
from .diffnet import (
    DiffNetParams,
    TrainConfig,
    backward,
    default_learning_rate,
    forward,
    init_params,
    load_checkpoint,
    masked_bce_loss,
    predict_confidence,
    save_checkpoint,
    score_trials,
    train,
)
from .embeddings import (
    Embedding,
    EmbeddingSet,
    get_embedding,
    load_embedding_set,
    pair_embedding,
    save_embedding_set,
)
from .errors import VtadError
from .metrics import (
    DescriptorReport,
    ScoredTrial,
    compute_accuracy,
    compute_eer,
    per_descriptor_report,
    render_report,
    report_averages,
)

__version__ = "0.1.0"
