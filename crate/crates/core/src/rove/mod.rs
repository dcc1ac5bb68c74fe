//! Verified episode generation: room labeling, waypoint gates, stop-level
//! resampling, instruction templating and dataset statistics.

pub mod episode;
pub mod rtsa;
pub mod stats;
pub mod trigate;

pub use episode::{
    generate_episode, render_instruction, verify_episode, EpisodeConfig, EpisodeError, EpisodeSpec, GateTally,
    Rejection, Stop,
};
pub use rtsa::{
    analytic_majority_accuracy, classify_region, export_adjudication, import_adjudication, label_scene,
    rtsa_vote, rule_classify, AdjudicationItem, ClassifierError, LabelSource, LabelVote, MockClassifier,
    PanoramaClassifier, SignatureTable, VoteOutcome,
};
pub use stats::{dataset_stats, DatasetStats, MeanStd};
pub use trigate::{
    gate_recognizability, gate_room_consistency, gate_visibility, trigate_check, Gate, GateReport, MockRecognizer,
    RecognizabilityScorer, TriGateConfig,
};
