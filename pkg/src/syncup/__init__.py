"""Synchronization scoring for multi-dancer pose streams."""

from .motion_model import (
    BODY_PART_EDGES,
    KEYPOINT_NAMES,
    Keypoint,
    PoseFrame,
    Recording,
    Skeleton,
    parse_pose_stream,
    serialize_pose_stream,
    validate_recording,
)
from .tracker import TrackedSequence, assign_frame, skeleton_distance, track
from .audio_beats import (
    BeatGrid,
    OnsetEnvelope,
    Segment,
    align_recordings,
    build_segments,
    constant_grid,
    estimate_beats,
    onset_envelope,
    parse_beat_file,
)
from .pose_similarity import BodyPartVectors, BpdFrame, body_part_vectors, bpd_frame, bpd_series
from .regressors import (
    RegressorModel,
    make_addition_model,
    model_from_text,
    model_to_text,
    ops_predict,
    ops_series,
    train_nn,
    train_svr,
)
from .ratings import RatingDataset, RatingSample, aggregate_ratings, cross_validate
from .temporal_alignment import (
    AlignmentResult,
    alignment_for_segment,
    impact_envelope,
    pose_flow,
    posegram,
    segment_alignment,
)
from .render import ColorStop, bpd_to_color_input, export_heatmaps, jet_color
from .scoring_service import (
    AnalysisConfig,
    AnalysisReport,
    Session,
    analyze_session,
    compare_practices,
    load_session,
    save_session,
    spotlight,
)
from .eval_harness import SyntheticSpec, evaluate_metrics, generate

__version__ = "0.1.0"
