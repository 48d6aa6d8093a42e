//! Full-duplex dialogue data toolkit.
//!
//! Builds two-stream conversations from turn-based data, tokenizes and aligns
//! them onto a shared 80 ms frame grid, evaluates turn-taking behavior
//! (barge-in, false alarms, first response latency) and simulates agents with
//! a labeled event log.
//!
//! Time-carrying types are generic over [`TimeScalar`]. [`Seconds`] (an exact
//! rational) is the instantiation used for manifests, alignment and
//! simulation; the `F64*` aliases are for float-valued sources.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aligner;
pub mod builder;
pub mod codec;
pub mod config;
pub mod dupx;
pub mod error;
pub mod manifest;
pub mod metrics;
pub mod model;
pub mod scalar;
pub mod simulator;
pub mod time;

pub use aligner::{
    align_conversation, align_with, default_loss_weights, matrix_to_global, user_activity_mask,
    AgentTurnTokens, AlignOptions, Alignment, ChannelMatrix, TurnPlacement,
};
pub use builder::{
    apply_barge_in, apply_barge_in_with, build_duplex_single_turn, concat_multiturn,
    enforce_turn_limit, make_impatient, BuilderConfig, QaPair, TailPolicy, TurnLimitRejection,
};
pub use codec::{
    code_to_index, from_global_id, fsq_dequantize, fsq_quantize, index_to_code, to_global_id,
    AcousticMatrix, CodeTuple, FsqLevels, GlobalToken, SpeechTokenSpace, VocabMap,
};
pub use config::ToolConfig;
pub use dupx::{deserialize_matrix, serialize_matrix};
pub use error::{Error, Result};
pub use metrics::{
    aggregate, detect_barge_ins, detect_false_alarms, evaluate_corpus, evaluate_timeline,
    first_response_latency, BargeInEvent, FalseAlarmEvent, FirstResponse, MetricsAccumulator,
    MetricsConfig, MetricsReport, TimelineMetrics,
};
pub use model::{
    tracks_from_conversation, Conversation, DuplexTimeline, Provenance, SegmentTrack, SpeakerRole,
    Turn,
};
pub use scalar::{Seconds, TimeScalar};
pub use simulator::{
    oracle_report, simulate, AgentPolicy, Distribution, GroundTruthLog, LogEvent, UserIntent,
    UserScript,
};
pub use time::{time_to_frame, TimeGrid};

pub type ExactTurn = Turn<Seconds>;
pub type ExactConversation = Conversation<Seconds>;
pub type ExactTrack = SegmentTrack<Seconds>;
pub type ExactTimeline = DuplexTimeline<Seconds>;
pub type ExactBuilderConfig = BuilderConfig<Seconds>;
pub type ExactMetricsConfig = MetricsConfig<Seconds>;
pub type ExactReport = MetricsReport<Seconds>;

pub type F64Conversation = Conversation<f64>;
pub type F64Timeline = DuplexTimeline<f64>;
pub type F64MetricsConfig = MetricsConfig<f64>;
pub type F64Report = MetricsReport<f64>;

pub type F32Timeline = DuplexTimeline<f32>;
