"""Streaming speaker diarization with chronological self-training.

Classify time-stamped speaker embeddings in real time after a short
enrollment phase, optionally folding the model's own batch predictions
back in as pseudo-labels, and score the output with accuracy and DER.
"""

from .classifiers import (
    ClassifierConfig,
    GaussianNaiveBayes,
    KNearestNeighbors,
    LabeledSample,
    NearestCentroid,
    Prediction,
    SampleOrigin,
    fit,
)
from .core import (
    NON_SPEECH,
    OVERLAP,
    Annotation,
    EmbeddingFrame,
    GroundTruth,
    Segment,
    Timeline,
    TruthKind,
    cosine_distance,
    normalize,
    overlap_timeline,
    truth_for_frames,
)
from .datagen import (
    Conversation,
    EnrollmentSkew,
    GenConfig,
    generate_conversation,
    generate_corpus,
    mean_resultant_length,
    sample_vmf,
)
from .harness import (
    AggregateRow,
    EvalSetting,
    Evaluation,
    Stream,
    SweepConfig,
    aggregate,
    evaluate_stream,
    load_stream,
    sweep_stream,
    sweep_streams,
    write_aggregate,
    write_conversation,
)
from .io import (
    EmbeddingRecord,
    ParseError,
    ReportRow,
    parse_rttm,
    parse_uem,
    read_embeddings,
    write_embeddings,
    write_report,
    write_rttm,
    write_uem,
)
from .metrics import (
    DerReport,
    MetricConfig,
    accuracy,
    der,
    frames_to_annotation,
    optimal_mapping,
    scoring_support,
)
from .session import (
    FrameTimings,
    SelfTrainConfig,
    SessionResult,
    SplitError,
    SplitSpec,
    chronological_split,
    run_session,
)

__version__ = "0.1.0"
