"""incbm: class-incremental concept-bottleneck classifiers over embeddings.

Trains an interpretable linear concept bottleneck task by task without
storing old samples: class prototypes plus frozen text embeddings carry the
past forward, and every prediction decomposes into additive per-concept
contributions.
"""

__version__ = "0.1.0"

from .bundle import EmbeddingBundle, TaskView, ingest_bundle, save_bundle, task_view
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint, snapshot
from .estimator import ContinualConceptClassifier
from .explain import (ExplanationReport, build_report, concept_drift, render_svg,
                      report_to_json)
from .losses import (cosine_alignment, elastic_net_penalty, mahalanobis_penalty,
                     softmax_cross_entropy)
from .metrics import (MetricsReport, incremental_metrics, task_accuracy)
from .model import IncrementalModel, clip_activations
from .optim import AdamState, adam_step
from .prototypes import (PrototypeEntry, PrototypeStore, extract_prototypes,
                         generate_pseudo_features, semantic_match)
from .selector import BottleneckSelection, ConceptSelector, match_concepts
from .synth import SynthSpec, make_synthetic_bundle
from .trainer import TrainConfig, TrainingRun, run_sequence, run_task

__all__ = [
    "AdamState",
    "BottleneckSelection",
    "Checkpoint",
    "ConceptSelector",
    "ContinualConceptClassifier",
    "EmbeddingBundle",
    "ExplanationReport",
    "IncrementalModel",
    "MetricsReport",
    "PrototypeEntry",
    "PrototypeStore",
    "SynthSpec",
    "TaskView",
    "TrainConfig",
    "TrainingRun",
    "adam_step",
    "build_report",
    "clip_activations",
    "concept_drift",
    "cosine_alignment",
    "elastic_net_penalty",
    "extract_prototypes",
    "generate_pseudo_features",
    "incremental_metrics",
    "ingest_bundle",
    "load_checkpoint",
    "mahalanobis_penalty",
    "make_synthetic_bundle",
    "match_concepts",
    "render_svg",
    "report_to_json",
    "run_sequence",
    "run_task",
    "save_bundle",
    "save_checkpoint",
    "semantic_match",
    "snapshot",
    "softmax_cross_entropy",
    "task_accuracy",
    "task_view",
]
