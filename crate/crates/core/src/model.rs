//! Turns, conversations and the two-track duplex view of a conversation.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{seconds_display, TimeScalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpeakerRole {
    User,
    Agent,
}

impl SpeakerRole {
    pub fn as_str(self) -> &'static str {
        match self {
            SpeakerRole::User => "user",
            SpeakerRole::Agent => "agent",
        }
    }

    pub fn other(self) -> Self {
        match self {
            SpeakerRole::User => SpeakerRole::Agent,
            SpeakerRole::Agent => SpeakerRole::User,
        }
    }
}

impl fmt::Display for SpeakerRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Turn<T> {
    role: SpeakerRole,
    start: T,
    end: T,
    text: String,
    audio_ref: Option<String>,
}

impl<T: TimeScalar> Turn<T> {
    pub fn new(role: SpeakerRole, start: T, end: T, text: impl Into<String>) -> Result<Self> {
        if start.is_negative() {
            return Err(Error::InvalidTurn(format!(
                "start {} is negative",
                seconds_display(start)
            )));
        }
        if !(start < end) {
            return Err(Error::InvalidTurn(format!(
                "start {} is not before end {}",
                seconds_display(start),
                seconds_display(end)
            )));
        }
        Ok(Self {
            role,
            start,
            end,
            text: text.into(),
            audio_ref: None,
        })
    }

    pub fn with_audio_ref(mut self, audio_ref: Option<String>) -> Self {
        self.audio_ref = audio_ref;
        self
    }

    pub fn role(&self) -> SpeakerRole {
        self.role
    }

    pub fn start(&self) -> T {
        self.start
    }

    pub fn end(&self) -> T {
        self.end
    }

    pub fn duration(&self) -> T {
        self.end - self.start
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn audio_ref(&self) -> Option<&str> {
        self.audio_ref.as_deref()
    }

    /// Same turn moved to `[start, end]`.
    pub fn retimed(&self, start: T, end: T) -> Result<Self> {
        Ok(Turn::new(self.role, start, end, self.text.clone())?
            .with_audio_ref(self.audio_ref.clone()))
    }

    pub fn shifted(&self, offset: T) -> Result<Self> {
        self.retimed(self.start + offset, self.end + offset)
    }
}

/// One step of augmentation history attached to a conversation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub transform: String,
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
}

impl Provenance {
    pub fn new(transform: impl Into<String>) -> Self {
        Self {
            transform: transform.into(),
            params: BTreeMap::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }
}

/// Ordered, role-tagged turns with absolute timing.
///
/// Turns are sorted by start time and same-role turns never overlap.
/// Cross-role overlap is allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct Conversation<T> {
    id: String,
    turns: Vec<Turn<T>>,
    provenance: Vec<Provenance>,
}

impl<T: TimeScalar> Conversation<T> {
    pub fn new(id: impl Into<String>, turns: Vec<Turn<T>>) -> Result<Self> {
        for (i, pair) in turns.windows(2).enumerate() {
            if pair[1].start < pair[0].start {
                return Err(Error::UnsortedTurns(i + 1));
            }
        }
        for role in [SpeakerRole::User, SpeakerRole::Agent] {
            let mut prev: Option<(usize, T)> = None;
            for (i, turn) in turns.iter().enumerate().filter(|(_, t)| t.role == role) {
                if let Some((j, prev_end)) = prev {
                    if turn.start < prev_end {
                        return Err(Error::SameRoleOverlap {
                            role: role.as_str(),
                            first: j,
                            second: i,
                        });
                    }
                }
                prev = Some((i, turn.end));
            }
        }
        Ok(Self {
            id: id.into(),
            turns,
            provenance: Vec::new(),
        })
    }

    /// Sorts `turns` by start time (stable) before validating.
    pub fn from_unsorted(id: impl Into<String>, mut turns: Vec<Turn<T>>) -> Result<Self> {
        turns.sort_by(|a, b| {
            a.start
                .partial_cmp(&b.start)
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        Self::new(id, turns)
    }

    pub fn with_provenance(mut self, provenance: Vec<Provenance>) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn push_provenance(mut self, entry: Provenance) -> Self {
        self.provenance.push(entry);
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn turns(&self) -> &[Turn<T>] {
        &self.turns
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn renamed(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn turns_of(&self, role: SpeakerRole) -> impl Iterator<Item = (usize, &Turn<T>)> {
        self.turns
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.role == role)
    }

    /// Latest turn end, or `None` for an empty conversation.
    pub fn end_time(&self) -> Option<T> {
        self.turns
            .iter()
            .map(|t| t.end)
            .fold(None, |acc, e| match acc {
                Some(a) if a >= e => Some(a),
                _ => Some(e),
            })
    }

    pub fn into_parts(self) -> (String, Vec<Turn<T>>, Vec<Provenance>) {
        (self.id, self.turns, self.provenance)
    }
}

/// Voice-activity view of one role: sorted, disjoint `(start, end)` spans.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentTrack<T> {
    role: SpeakerRole,
    segments: Vec<(T, T)>,
}

impl<T: TimeScalar> SegmentTrack<T> {
    /// Validates that `segments` are sorted, each non-empty, and pairwise
    /// non-overlapping. Touching segments are kept as given.
    pub fn new(role: SpeakerRole, segments: Vec<(T, T)>) -> Result<Self> {
        for (i, &(s, e)) in segments.iter().enumerate() {
            if !(s < e) {
                return Err(Error::InvalidTrack(format!(
                    "{role} segment {i} has start {} >= end {}",
                    seconds_display(s),
                    seconds_display(e)
                )));
            }
        }
        for (i, pair) in segments.windows(2).enumerate() {
            if pair[1].0 < pair[0].1 {
                return Err(Error::InvalidTrack(format!(
                    "{role} segments {i} and {} overlap or are unsorted",
                    i + 1
                )));
            }
        }
        Ok(Self { role, segments })
    }

    /// Sorts `spans`, rejects overlaps, and merges neighbours whose gap is
    /// at most `merge_gap`.
    pub fn from_spans(role: SpeakerRole, mut spans: Vec<(T, T)>, merge_gap: T) -> Result<Self> {
        spans.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        let checked = Self::new(role, spans)?;
        Ok(checked.merged(merge_gap))
    }

    fn merged(self, merge_gap: T) -> Self {
        let mut out: Vec<(T, T)> = Vec::with_capacity(self.segments.len());
        for (s, e) in self.segments {
            match out.last_mut() {
                Some(last) if s - last.1 <= merge_gap => {
                    if e > last.1 {
                        last.1 = e;
                    }
                }
                _ => out.push((s, e)),
            }
        }
        Self {
            role: self.role,
            segments: out,
        }
    }

    pub fn role(&self) -> SpeakerRole {
        self.role
    }

    pub fn segments(&self) -> &[(T, T)] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Segment `[s, e)` containing `t`, if any.
    pub fn segment_at(&self, t: T) -> Option<(T, T)> {
        let idx = self.segments.partition_point(|&(s, _)| s <= t);
        if idx == 0 {
            return None;
        }
        let (s, e) = self.segments[idx - 1];
        (t < e).then_some((s, e))
    }

    pub fn contains(&self, t: T) -> bool {
        self.segment_at(t).is_some()
    }

    pub fn shifted(&self, offset: T) -> Self {
        Self {
            role: self.role,
            segments: self
                .segments
                .iter()
                .map(|&(s, e)| (s + offset, e + offset))
                .collect(),
        }
    }
}

/// User and agent activity tracks on a shared time axis.
#[derive(Debug, Clone, PartialEq)]
pub struct DuplexTimeline<T> {
    user: SegmentTrack<T>,
    agent: SegmentTrack<T>,
    total_duration: T,
}

impl<T: TimeScalar> DuplexTimeline<T> {
    pub fn new(user: SegmentTrack<T>, agent: SegmentTrack<T>, total_duration: T) -> Result<Self> {
        if user.role != SpeakerRole::User || agent.role != SpeakerRole::Agent {
            return Err(Error::InvalidTrack(
                "tracks passed with swapped roles".into(),
            ));
        }
        for track in [&user, &agent] {
            if let Some(&(s, _)) = track.segments.first() {
                if s.is_negative() {
                    return Err(Error::InvalidTrack(format!(
                        "{} track starts before 0",
                        track.role
                    )));
                }
            }
            if let Some(&(_, e)) = track.segments.last() {
                if e > total_duration {
                    return Err(Error::InvalidTrack(format!(
                        "{} track ends after total duration {}",
                        track.role,
                        seconds_display(total_duration)
                    )));
                }
            }
        }
        Ok(Self {
            user,
            agent,
            total_duration,
        })
    }

    /// Timeline whose duration is the latest segment end of either track.
    pub fn from_tracks(user: SegmentTrack<T>, agent: SegmentTrack<T>) -> Result<Self> {
        let end = [user.segments.last(), agent.segments.last()]
            .into_iter()
            .flatten()
            .map(|&(_, e)| e)
            .fold(T::zero(), |a, e| if e > a { e } else { a });
        Self::new(user, agent, end)
    }

    pub fn user(&self) -> &SegmentTrack<T> {
        &self.user
    }

    pub fn agent(&self) -> &SegmentTrack<T> {
        &self.agent
    }

    pub fn track(&self, role: SpeakerRole) -> &SegmentTrack<T> {
        match role {
            SpeakerRole::User => &self.user,
            SpeakerRole::Agent => &self.agent,
        }
    }

    pub fn total_duration(&self) -> T {
        self.total_duration
    }

    /// Both tracks translated by `offset`.
    pub fn shifted(&self, offset: T) -> Self {
        Self {
            user: self.user.shifted(offset),
            agent: self.agent.shifted(offset),
            total_duration: self.total_duration + offset,
        }
    }
}

/// Projects a conversation onto per-role activity tracks, merging same-role
/// turns that touch exactly.
pub fn tracks_from_conversation<T: TimeScalar>(
    conv: &Conversation<T>,
) -> Result<DuplexTimeline<T>> {
    tracks_with_merge_gap(conv, T::zero())
}

pub fn tracks_with_merge_gap<T: TimeScalar>(
    conv: &Conversation<T>,
    merge_gap: T,
) -> Result<DuplexTimeline<T>> {
    if conv.turns.is_empty() {
        return Err(Error::EmptyConversation);
    }
    let spans = |role| {
        conv.turns_of(role)
            .map(|(_, t)| (t.start, t.end))
            .collect::<Vec<_>>()
    };
    let user = SegmentTrack::from_spans(SpeakerRole::User, spans(SpeakerRole::User), merge_gap)?;
    let agent = SegmentTrack::from_spans(SpeakerRole::Agent, spans(SpeakerRole::Agent), merge_gap)?;
    let total = conv.end_time().ok_or(Error::EmptyConversation)?;
    DuplexTimeline::new(user, agent, total)
}
