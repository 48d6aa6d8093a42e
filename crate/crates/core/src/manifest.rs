//! JSONL manifest records.
//!
//! Conversation line:
//! `{"id": str, "turns": [{"role": "user"|"agent", "start_s": n, "end_s": n, "text": str, "audio_ref": str|null}]}`
//! with an optional `"provenance"` list.
//!
//! QA pair line (relative timing):
//! `{"id": str, "user": {"duration_s": n, "text": str, "audio_ref": str|null}, "agent": {...}}`
//!
//! Segment log line: `{"id": str, "user": [[s, e], ...], "agent": [[s, e], ...]}`

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::builder::QaPair;
use crate::error::{Error, Result};
use crate::model::{Conversation, DuplexTimeline, Provenance, SegmentTrack, SpeakerRole, Turn};
use crate::scalar::{seconds_from_f64, seconds_to_f64, Seconds};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurnRecord {
    pub role: SpeakerRole,
    pub start_s: f64,
    pub end_s: f64,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub audio_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversationRecord {
    pub id: String,
    pub turns: Vec<TurnRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QaTurnRecord {
    pub duration_s: f64,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub audio_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaPairRecord {
    pub id: String,
    pub user: QaTurnRecord,
    pub agent: QaTurnRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentLogRecord {
    pub id: String,
    pub user: Vec<[f64; 2]>,
    pub agent: Vec<[f64; 2]>,
}

impl ConversationRecord {
    pub fn to_conversation(&self) -> Result<Conversation<Seconds>> {
        let turns = self
            .turns
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let start = seconds_from_f64(t.start_s)?;
                let end = seconds_from_f64(t.end_s)?;
                Turn::new(t.role, start, end, t.text.clone())
                    .map(|turn| turn.with_audio_ref(t.audio_ref.clone()))
                    .map_err(|e| Error::Schema(format!("turn {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Conversation::new(self.id.clone(), turns)?.with_provenance(self.provenance.clone()))
    }

    pub fn from_conversation(conv: &Conversation<Seconds>) -> Self {
        Self {
            id: conv.id().to_string(),
            turns: conv
                .turns()
                .iter()
                .map(|t| TurnRecord {
                    role: t.role(),
                    start_s: seconds_to_f64(t.start()),
                    end_s: seconds_to_f64(t.end()),
                    text: t.text().to_string(),
                    audio_ref: t.audio_ref().map(str::to_string),
                })
                .collect(),
            provenance: conv.provenance().to_vec(),
        }
    }
}

impl QaPairRecord {
    pub fn to_pair(&self) -> Result<QaPair<Seconds>> {
        let side = |r: &QaTurnRecord| -> Result<(Seconds, String, Option<String>)> {
            Ok((
                seconds_from_f64(r.duration_s)?,
                r.text.clone(),
                r.audio_ref.clone(),
            ))
        };
        QaPair::from_durations(self.id.clone(), side(&self.user)?, side(&self.agent)?)
    }
}

impl SegmentLogRecord {
    pub fn to_timeline(&self) -> Result<DuplexTimeline<Seconds>> {
        let spans = |v: &[[f64; 2]]| -> Result<Vec<(Seconds, Seconds)>> {
            v.iter()
                .map(|&[s, e]| Ok((seconds_from_f64(s)?, seconds_from_f64(e)?)))
                .collect()
        };
        let user = SegmentTrack::from_spans(
            SpeakerRole::User,
            spans(&self.user)?,
            Seconds::from_integer(0),
        )?;
        let agent = SegmentTrack::from_spans(
            SpeakerRole::Agent,
            spans(&self.agent)?,
            Seconds::from_integer(0),
        )?;
        DuplexTimeline::from_tracks(user, agent)
    }

    pub fn from_timeline(id: &str, tl: &DuplexTimeline<Seconds>) -> Self {
        let spans = |t: &SegmentTrack<Seconds>| {
            t.segments()
                .iter()
                .map(|&(s, e)| [seconds_to_f64(s), seconds_to_f64(e)])
                .collect()
        };
        Self {
            id: id.to_string(),
            user: spans(tl.user()),
            agent: spans(tl.agent()),
        }
    }
}

/// A line of `duplexify` input.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceItem {
    Pair(QaPair<Seconds>),
    Conversation(Conversation<Seconds>),
}

/// A line of `eval` input.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalItem {
    Conversation(Conversation<Seconds>),
    Segments(String, DuplexTimeline<Seconds>),
}

fn parse_value(line: &str) -> Result<Value> {
    serde_json::from_str(line).map_err(|e| Error::Schema(format!("invalid JSON: {e}")))
}

fn from_value<T: for<'de> Deserialize<'de>>(v: Value, what: &str) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::Schema(format!("not a valid {what}: {e}")))
}

pub fn parse_conversation_line(line: &str) -> Result<Conversation<Seconds>> {
    from_value::<ConversationRecord>(parse_value(line)?, "conversation")?.to_conversation()
}

pub fn parse_source_line(line: &str) -> Result<SourceItem> {
    let v = parse_value(line)?;
    if v.get("turns").is_some() {
        Ok(SourceItem::Conversation(
            from_value::<ConversationRecord>(v, "conversation")?.to_conversation()?,
        ))
    } else if v.get("user").is_some_and(Value::is_object) {
        Ok(SourceItem::Pair(
            from_value::<QaPairRecord>(v, "QA pair")?.to_pair()?,
        ))
    } else {
        Err(Error::Schema("expected a conversation or a QA pair".into()))
    }
}

pub fn parse_eval_line(line: &str) -> Result<EvalItem> {
    let v = parse_value(line)?;
    if v.get("turns").is_some() {
        Ok(EvalItem::Conversation(
            from_value::<ConversationRecord>(v, "conversation")?.to_conversation()?,
        ))
    } else if v.get("user").is_some_and(Value::is_array) {
        let rec = from_value::<SegmentLogRecord>(v, "segment log")?;
        let tl = rec.to_timeline()?;
        Ok(EvalItem::Segments(rec.id, tl))
    } else {
        Err(Error::Schema(
            "expected a conversation or a segment log".into(),
        ))
    }
}

/// One JSONL line (no trailing newline).
pub fn conversation_to_line(conv: &Conversation<Seconds>) -> String {
    serde_json::to_string(&ConversationRecord::from_conversation(conv))
        .expect("conversation records always serialize")
}
