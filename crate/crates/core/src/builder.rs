//! Duplex conversation construction from turn-based data.

use crate::error::{Error, Result};
use crate::model::{Conversation, Provenance, SpeakerRole, Turn};
use crate::scalar::{check_non_negative, seconds_display, tmax, tmin, TimeScalar};

/// A single-turn QA pair with relative timing (both turns start at 0).
#[derive(Debug, Clone, PartialEq)]
pub struct QaPair<T> {
    pub id: String,
    pub user_turn: Turn<T>,
    pub agent_turn: Turn<T>,
}

impl<T: TimeScalar> QaPair<T> {
    pub fn new(id: impl Into<String>, user_turn: Turn<T>, agent_turn: Turn<T>) -> Result<Self> {
        if user_turn.role() != SpeakerRole::User || agent_turn.role() != SpeakerRole::Agent {
            return Err(Error::Builder(
                "QA pair needs a user turn and an agent turn".into(),
            ));
        }
        Ok(Self {
            id: id.into(),
            user_turn,
            agent_turn,
        })
    }

    /// Pair from durations; text and audio references are attached to
    /// turns spanning `[0, duration]`.
    pub fn from_durations(
        id: impl Into<String>,
        user: (T, String, Option<String>),
        agent: (T, String, Option<String>),
    ) -> Result<Self> {
        let make = |role, (d, text, audio): (T, String, Option<String>)| {
            if !(d > T::zero()) {
                return Err(Error::Builder(format!(
                    "{role} turn has non-positive duration {}",
                    seconds_display(d)
                )));
            }
            Ok(Turn::new(role, T::zero(), d, text)?.with_audio_ref(audio))
        };
        Self::new(
            id,
            make(SpeakerRole::User, user)?,
            make(SpeakerRole::Agent, agent)?,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuilderConfig<T> {
    pub pre_agent_gap: T,
    pub barge_in_residual: T,
    pub max_turn_duration: T,
    pub inter_pair_gap: T,
}

impl<T: TimeScalar> Default for BuilderConfig<T> {
    fn default() -> Self {
        Self {
            pre_agent_gap: T::from_ratio(16, 25),
            barge_in_residual: T::from_ratio(16, 25),
            max_turn_duration: T::from_ratio(25, 1),
            inter_pair_gap: T::from_ratio(16, 25),
        }
    }
}

impl<T: TimeScalar> BuilderConfig<T> {
    pub fn validate(&self) -> Result<()> {
        check_non_negative(self.pre_agent_gap, "pre_agent_gap")?;
        check_non_negative(self.barge_in_residual, "barge_in_residual")?;
        check_non_negative(self.max_turn_duration, "max_turn_duration")?;
        check_non_negative(self.inter_pair_gap, "inter_pair_gap")
    }
}

fn secs<T: TimeScalar>(t: T) -> serde_json::Value {
    serde_json::json!(t.to_f64())
}

/// User turn at `[0, d_u]`, agent turn `pre_agent_gap` after it.
pub fn build_duplex_single_turn<T: TimeScalar>(
    pair: &QaPair<T>,
    cfg: &BuilderConfig<T>,
) -> Result<Conversation<T>> {
    cfg.validate()?;
    let d_u = pair.user_turn.duration();
    let d_a = pair.agent_turn.duration();
    if !(d_u > T::zero()) || !(d_a > T::zero()) {
        return Err(Error::Builder("zero-duration turn in QA pair".into()));
    }
    let user = pair.user_turn.retimed(T::zero(), d_u)?;
    let agent_start = d_u + cfg.pre_agent_gap;
    let agent = pair.agent_turn.retimed(agent_start, agent_start + d_a)?;
    Ok(
        Conversation::new(pair.id.clone(), vec![user, agent])?.push_provenance(
            Provenance::new("single_turn").param("pre_agent_gap_s", secs(cfg.pre_agent_gap)),
        ),
    )
}

/// Appends conversations on the time axis. Each subsequent conversation is
/// shifted so its first user turn (first turn if it has none) begins
/// `inter_pair_gap` after the previous one's last turn end.
pub fn concat_multiturn<T: TimeScalar>(
    convs: &[Conversation<T>],
    cfg: &BuilderConfig<T>,
) -> Result<Conversation<T>> {
    cfg.validate()?;
    let (first, rest) = convs
        .split_first()
        .ok_or_else(|| Error::Builder("nothing to concatenate".into()))?;
    if rest.is_empty() {
        return Ok(first.clone());
    }
    let mut turns: Vec<Turn<T>> = first.turns().to_vec();
    let mut provenance = first.provenance().to_vec();
    let mut ids = vec![first.id().to_string()];
    let mut end = first
        .end_time()
        .ok_or_else(|| Error::Builder(format!("conversation {} is empty", first.id())))?;
    for conv in rest {
        let anchor = conv
            .turns_of(SpeakerRole::User)
            .next()
            .map(|(_, t)| t.start())
            .or_else(|| conv.turns().first().map(|t| t.start()))
            .ok_or_else(|| Error::Builder(format!("conversation {} is empty", conv.id())))?;
        let offset = end + cfg.inter_pair_gap - anchor;
        for turn in conv.turns() {
            turns.push(turn.shifted(offset)?);
        }
        // shifted end of this conversation
        end = conv.end_time().expect("non-empty") + offset;
        provenance.extend_from_slice(conv.provenance());
        ids.push(conv.id().to_string());
    }
    let id = ids.join("+");
    let entry = Provenance::new("concat")
        .param("inter_pair_gap_s", secs(cfg.inter_pair_gap))
        .param("sources", ids.clone());
    provenance.push(entry);
    Ok(Conversation::from_unsorted(id, turns)?.with_provenance(provenance))
}

/// What happens to turns after the interrupted agent turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailPolicy {
    /// Drop every later turn.
    Drop,
    /// Treat turn `user_idx` of the input as the barge-in utterance and keep
    /// the turns after it, shifted so their offset from that user turn's end
    /// is preserved (pushed later if a tail agent turn would start before the
    /// cut agent turn ends).
    Restitch { user_idx: usize },
}

/// Places `next_user` at `t_interrupt` and cuts the agent turn to
/// `min(end, t_interrupt + barge_in_residual)`. Later turns are dropped.
pub fn apply_barge_in<T: TimeScalar>(
    conv: &Conversation<T>,
    agent_turn_idx: usize,
    t_interrupt: T,
    next_user: &Turn<T>,
    cfg: &BuilderConfig<T>,
) -> Result<Conversation<T>> {
    apply_barge_in_with(
        conv,
        agent_turn_idx,
        t_interrupt,
        next_user,
        cfg,
        TailPolicy::Drop,
    )
}

pub fn apply_barge_in_with<T: TimeScalar>(
    conv: &Conversation<T>,
    agent_turn_idx: usize,
    t_interrupt: T,
    next_user: &Turn<T>,
    cfg: &BuilderConfig<T>,
    tail: TailPolicy,
) -> Result<Conversation<T>> {
    cfg.validate()?;
    let agent = conv
        .turns()
        .get(agent_turn_idx)
        .ok_or_else(|| Error::Builder(format!("no turn at index {agent_turn_idx}")))?;
    if agent.role() != SpeakerRole::Agent {
        return Err(Error::Builder(format!(
            "turn {agent_turn_idx} is not an agent turn"
        )));
    }
    if !(agent.start() < t_interrupt && t_interrupt < agent.end()) {
        return Err(Error::Builder(format!(
            "interrupt at {} is not inside agent turn [{}, {}]",
            seconds_display(t_interrupt),
            seconds_display(agent.start()),
            seconds_display(agent.end())
        )));
    }
    let user_duration = next_user.duration();
    if !(user_duration > T::zero()) {
        return Err(Error::Builder("barge-in user turn has no duration".into()));
    }
    if next_user.role() != SpeakerRole::User {
        return Err(Error::Builder("barge-in turn must be a user turn".into()));
    }
    let new_end = tmin(agent.end(), t_interrupt + cfg.barge_in_residual);
    if !(new_end > agent.start()) {
        return Err(Error::Builder(
            "truncated agent turn has no duration".into(),
        ));
    }
    let mut turns: Vec<Turn<T>> = conv.turns()[..agent_turn_idx].to_vec();
    turns.push(agent.retimed(agent.start(), new_end)?);
    let barge_user = next_user.retimed(t_interrupt, t_interrupt + user_duration)?;
    let barge_end = barge_user.end();
    turns.push(barge_user);

    let mut entry = Provenance::new("barge_in")
        .param("agent_turn", agent_turn_idx as u64)
        .param("t_interrupt_s", secs(t_interrupt))
        .param("barge_in_residual_s", secs(cfg.barge_in_residual));
    match tail {
        TailPolicy::Drop => {
            entry = entry.param("tail", "drop");
        }
        TailPolicy::Restitch { user_idx } => {
            let original = conv
                .turns()
                .get(user_idx)
                .ok_or_else(|| Error::Builder(format!("no turn at index {user_idx}")))?;
            if user_idx <= agent_turn_idx || original.role() != SpeakerRole::User {
                return Err(Error::Builder(format!(
                    "turn {user_idx} is not a user turn after the interrupted agent turn"
                )));
            }
            let tail = &conv.turns()[user_idx + 1..];
            let mut offset = barge_end - original.end();
            // the first later agent turn must not start inside the cut agent turn
            if let Some(first_agent) = tail.iter().find(|t| t.role() == SpeakerRole::Agent) {
                let start = first_agent.start() + offset;
                if start < new_end {
                    offset = offset + (new_end - start);
                }
            }
            for turn in tail {
                turns.push(turn.shifted(offset)?);
            }
            entry = entry
                .param("tail", "restitch")
                .param("user_turn", user_idx as u64);
        }
    }
    Ok(Conversation::from_unsorted(conv.id(), turns)?
        .with_provenance(conv.provenance().to_vec())
        .push_provenance(entry))
}

/// Scales every gap between consecutive user turns by `factor`.
///
/// Agent turns between two user turns keep their offset from the earlier
/// user turn. If the advanced user turn now cuts into such an agent turn, the
/// agent turn is clipped so that it overlaps the user turn by at most
/// `max(original overlap, barge_in_residual)`; agent turns that would start
/// after the advanced user onset are removed.
pub fn make_impatient<T: TimeScalar>(
    conv: &Conversation<T>,
    factor: T,
    cfg: &BuilderConfig<T>,
) -> Result<Conversation<T>> {
    cfg.validate()?;
    if !(factor > T::zero()) || factor > T::one() {
        return Err(Error::InvalidParameter(format!(
            "impatience factor must be in (0, 1], got {}",
            seconds_display(factor)
        )));
    }
    let users: Vec<(usize, &Turn<T>)> = conv.turns_of(SpeakerRole::User).collect();
    if users.len() < 2 {
        return Err(Error::Builder(format!(
            "conversation {} has {} user turn(s); at least 2 are needed",
            conv.id(),
            users.len()
        )));
    }

    // shifts[i]: total time removed up to and including user turn i
    let mut shifts = vec![T::zero(); users.len()];
    for i in 1..users.len() {
        let gap = users[i].1.start() - users[i - 1].1.end();
        shifts[i] = shifts[i - 1] + gap * (T::one() - factor);
    }
    let interval_of = |start: T| users.partition_point(|(_, u)| u.start() <= start);

    let mut turns: Vec<Turn<T>> = Vec::with_capacity(conv.turns().len());
    let mut dropped = 0u64;
    let mut clipped = 0u64;
    for turn in conv.turns() {
        let k = interval_of(turn.start());
        match turn.role() {
            SpeakerRole::User => {
                // k - 1 is this turn's own index among user turns
                turns.push(turn.shifted(T::zero() - shifts[k - 1])?);
            }
            SpeakerRole::Agent => {
                if k == 0 {
                    turns.push(turn.clone());
                    continue;
                }
                let shift = shifts[k - 1];
                let start = turn.start() - shift;
                let mut end = turn.end() - shift;
                if let Some((_, next_user)) = users.get(k) {
                    let next_start = next_user.start() - shifts[k];
                    if start >= next_start {
                        dropped += 1;
                        continue;
                    }
                    let original_overlap = tmax(T::zero(), turn.end() - next_user.start());
                    let limit = next_start + tmax(original_overlap, cfg.barge_in_residual);
                    if end > limit {
                        end = limit;
                        clipped += 1;
                    }
                }
                turns.push(turn.retimed(start, end)?);
            }
        }
    }
    turns.sort_by(|a, b| {
        a.start()
            .partial_cmp(&b.start())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    // a clipped agent turn must still end before the next agent turn starts
    let agent_idx: Vec<usize> = (0..turns.len())
        .filter(|&i| turns[i].role() == SpeakerRole::Agent)
        .collect();
    for w in agent_idx.windows(2) {
        let next_start = turns[w[1]].start();
        if turns[w[0]].end() > next_start {
            let t = &turns[w[0]];
            turns[w[0]] = t.retimed(t.start(), next_start)?;
            clipped += 1;
        }
    }
    Ok(Conversation::new(conv.id(), turns)?
        .with_provenance(conv.provenance().to_vec())
        .push_provenance(
            Provenance::new("impatient")
                .param("factor", factor.to_f64())
                .param("agent_turns_clipped", clipped)
                .param("agent_turns_dropped", dropped),
        ))
}

/// Turn that is too long for the configured limit.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnOffense<T> {
    pub turn_index: usize,
    pub role: SpeakerRole,
    pub duration: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurnLimitRejection<T> {
    pub conversation_id: String,
    pub limit: T,
    pub offenders: Vec<TurnOffense<T>>,
}

impl<T: TimeScalar> std::fmt::Display for TurnLimitRejection<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "conversation {}: {} turn(s) not under {} s:",
            self.conversation_id,
            self.offenders.len(),
            seconds_display(self.limit)
        )?;
        for o in &self.offenders {
            write!(
                f,
                " #{} ({}, {} s)",
                o.turn_index,
                o.role,
                seconds_display(o.duration)
            )?;
        }
        Ok(())
    }
}

/// Passes the conversation through only if every turn is strictly shorter
/// than `max_turn_duration`.
pub fn enforce_turn_limit<T: TimeScalar>(
    conv: Conversation<T>,
    cfg: &BuilderConfig<T>,
) -> Result<Conversation<T>, TurnLimitRejection<T>> {
    let offenders: Vec<TurnOffense<T>> = conv
        .turns()
        .iter()
        .enumerate()
        .filter(|(_, t)| t.duration() >= cfg.max_turn_duration)
        .map(|(i, t)| TurnOffense {
            turn_index: i,
            role: t.role(),
            duration: t.duration(),
        })
        .collect();
    if offenders.is_empty() {
        Ok(conv)
    } else {
        Err(TurnLimitRejection {
            conversation_id: conv.id().to_string(),
            limit: cfg.max_turn_duration,
            offenders,
        })
    }
}
