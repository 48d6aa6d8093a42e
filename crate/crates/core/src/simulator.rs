//! Discrete-event duplex conversation simulator with a labeled event log.
//!
//! A run walks the user script in order:
//!
//! 1. the user speaks `speak_duration`;
//! 2. during user speech, while the agent is silent, each 80 ms frame may
//!    start a one-frame agent false start (probability `rate * 0.08`);
//! 3. the agent answers `response_delay` after the user stops, for
//!    `utterance_duration`;
//! 4. if the intent has a patience shorter than the answer, the next user
//!    turn starts `patience` into the answer and the agent stops
//!    `stop_latency` later (or at its natural end, whichever is first);
//!    otherwise the next user turn starts `post_turn_silence` after the
//!    answer ends.
//!
//! Sampled durations are whole milliseconds so every time stays exact.

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{
    aggregate, BargeInEvent, FalseAlarmEvent, FirstResponse, MetricsConfig, MetricsReport,
    TimelineMetrics,
};
use crate::model::{Conversation, Provenance, SpeakerRole, Turn};
use crate::scalar::{millis, seconds_from_f64, seconds_to_f64, tmin, Seconds};

/// Length of the false-alarm sampling frame and of each false start.
pub fn false_alarm_frame() -> Seconds {
    millis(80)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Fixed(Seconds),
    /// Whole milliseconds in `[low, high]`, uniformly.
    Uniform(Seconds, Seconds),
}

impl Distribution {
    fn ms_bounds(&self) -> Option<(i64, i64)> {
        match *self {
            Distribution::Fixed(_) => None,
            Distribution::Uniform(lo, hi) => {
                let k = Rational64::from_integer(1000);
                Some(((lo * k).ceil().to_integer(), (hi * k).floor().to_integer()))
            }
        }
    }

    pub fn min(&self) -> Seconds {
        match *self {
            Distribution::Fixed(v) => v,
            Distribution::Uniform(..) => millis(self.ms_bounds().expect("uniform").0),
        }
    }

    fn validate(&self, what: &str, strictly_positive: bool) -> Result<()> {
        if let Distribution::Uniform(lo, hi) = *self {
            if lo > hi {
                return Err(Error::InvalidDistribution(format!(
                    "{what}: low exceeds high"
                )));
            }
            let (a, b) = self.ms_bounds().expect("uniform");
            if a > b {
                return Err(Error::InvalidDistribution(format!(
                    "{what}: no whole millisecond in range"
                )));
            }
        }
        let min = self.min();
        if min < Seconds::zero() || (strictly_positive && min <= Seconds::zero()) {
            return Err(Error::InvalidDistribution(format!(
                "{what}: support must be {}",
                if strictly_positive { "> 0" } else { ">= 0" }
            )));
        }
        Ok(())
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Seconds {
        match *self {
            Distribution::Fixed(v) => v,
            Distribution::Uniform(..) => {
                let (a, b) = self.ms_bounds().expect("uniform");
                millis(rng.random_range(a..=b))
            }
        }
    }
}

/// JSON form: a bare number, `{"fixed": x}` or `{"uniform": [a, b]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistributionSpec {
    Constant(f64),
    Fixed { fixed: f64 },
    Uniform { uniform: [f64; 2] },
}

impl TryFrom<&DistributionSpec> for Distribution {
    type Error = Error;

    fn try_from(spec: &DistributionSpec) -> Result<Self> {
        Ok(match *spec {
            DistributionSpec::Constant(v) | DistributionSpec::Fixed { fixed: v } => {
                Distribution::Fixed(seconds_from_f64(v)?)
            }
            DistributionSpec::Uniform { uniform: [a, b] } => {
                Distribution::Uniform(seconds_from_f64(a)?, seconds_from_f64(b)?)
            }
        })
    }
}

impl From<&Distribution> for DistributionSpec {
    fn from(d: &Distribution) -> Self {
        match *d {
            Distribution::Fixed(v) => DistributionSpec::Fixed {
                fixed: seconds_to_f64(v),
            },
            Distribution::Uniform(a, b) => DistributionSpec::Uniform {
                uniform: [seconds_to_f64(a), seconds_to_f64(b)],
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentPolicy {
    pub response_delay: Distribution,
    pub stop_latency: Distribution,
    pub false_alarm_rate_hz: f64,
    pub utterance_duration: Distribution,
}

impl AgentPolicy {
    pub fn validate(&self) -> Result<()> {
        self.response_delay.validate("response_delay", false)?;
        self.stop_latency.validate("stop_latency", false)?;
        self.utterance_duration
            .validate("utterance_duration", true)?;
        let p = self.false_alarm_probability();
        if !self.false_alarm_rate_hz.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidDistribution(format!(
                "false_alarm_rate_hz {} gives per-frame probability {p} outside [0, 1]",
                self.false_alarm_rate_hz
            )));
        }
        Ok(())
    }

    /// Per-frame probability of a false start.
    pub fn false_alarm_probability(&self) -> f64 {
        self.false_alarm_rate_hz * false_alarm_frame().to_f64().unwrap_or(0.08)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentPolicySpec {
    pub response_delay: DistributionSpec,
    pub stop_latency: DistributionSpec,
    #[serde(default)]
    pub false_alarm_rate_hz: f64,
    pub utterance_duration: DistributionSpec,
}

impl TryFrom<&AgentPolicySpec> for AgentPolicy {
    type Error = Error;

    fn try_from(spec: &AgentPolicySpec) -> Result<Self> {
        let policy = AgentPolicy {
            response_delay: (&spec.response_delay).try_into()?,
            stop_latency: (&spec.stop_latency).try_into()?,
            false_alarm_rate_hz: spec.false_alarm_rate_hz,
            utterance_duration: (&spec.utterance_duration).try_into()?,
        };
        policy.validate()?;
        Ok(policy)
    }
}

impl From<&AgentPolicy> for AgentPolicySpec {
    fn from(p: &AgentPolicy) -> Self {
        Self {
            response_delay: (&p.response_delay).into(),
            stop_latency: (&p.stop_latency).into(),
            false_alarm_rate_hz: p.false_alarm_rate_hz,
            utterance_duration: (&p.utterance_duration).into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserIntent {
    pub speak_duration: Seconds,
    /// Interrupt the following agent answer after this much of it.
    pub patience: Option<Seconds>,
    pub post_turn_silence: Seconds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserScript {
    pub intents: Vec<UserIntent>,
}

impl UserScript {
    pub fn validate(&self) -> Result<()> {
        if self.intents.is_empty() {
            return Err(Error::InvalidParameter("user script has no intents".into()));
        }
        for (i, intent) in self.intents.iter().enumerate() {
            let positive = |v: Seconds, what: &str| {
                if v > Seconds::zero() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "intent {i}: {what} must be > 0"
                    )))
                }
            };
            positive(intent.speak_duration, "speak_duration")?;
            positive(intent.post_turn_silence, "post_turn_silence")?;
            if let Some(p) = intent.patience {
                positive(p, "patience")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UserIntentSpec {
    pub speak_duration: f64,
    #[serde(default)]
    pub patience: Option<f64>,
    pub post_turn_silence: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UserScriptSpec {
    pub intents: Vec<UserIntentSpec>,
}

impl TryFrom<&UserScriptSpec> for UserScript {
    type Error = Error;

    fn try_from(spec: &UserScriptSpec) -> Result<Self> {
        let script = UserScript {
            intents: spec
                .intents
                .iter()
                .map(|i| {
                    Ok(UserIntent {
                        speak_duration: seconds_from_f64(i.speak_duration)?,
                        patience: i.patience.map(seconds_from_f64).transpose()?,
                        post_turn_silence: seconds_from_f64(i.post_turn_silence)?,
                    })
                })
                .collect::<Result<_>>()?,
        };
        script.validate()?;
        Ok(script)
    }
}

impl From<&UserScript> for UserScriptSpec {
    fn from(s: &UserScript) -> Self {
        Self {
            intents: s
                .intents
                .iter()
                .map(|i| UserIntentSpec {
                    speak_duration: seconds_to_f64(i.speak_duration),
                    patience: i.patience.map(seconds_to_f64),
                    post_turn_silence: seconds_to_f64(i.post_turn_silence),
                })
                .collect(),
        }
    }
}

/// Labeled event with exact times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogEvent {
    UserOnset {
        t: Seconds,
        end: Seconds,
    },
    /// Onset of an agent answer; `end` is where it actually stopped.
    AgentOnset {
        t: Seconds,
        end: Seconds,
    },
    Interruption {
        t: Seconds,
        agent_onset: Seconds,
        scheduled_stop: Seconds,
        agent_stop: Seconds,
    },
    FalseAlarmStart {
        t: Seconds,
        end: Seconds,
    },
}

impl LogEvent {
    pub fn time(&self) -> Seconds {
        match *self {
            LogEvent::UserOnset { t, .. }
            | LogEvent::AgentOnset { t, .. }
            | LogEvent::Interruption { t, .. }
            | LogEvent::FalseAlarmStart { t, .. } => t,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LogEvent::UserOnset { .. } => "UserOnset",
            LogEvent::AgentOnset { .. } => "AgentOnset",
            LogEvent::Interruption { .. } => "Interruption",
            LogEvent::FalseAlarmStart { .. } => "FalseAlarmStart",
        }
    }
}

/// JSON form of one event: `{"event": name, "t": seconds, ...}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "event")]
pub enum LogEventRecord {
    UserOnset {
        t: f64,
        end: f64,
    },
    AgentOnset {
        t: f64,
        end: f64,
    },
    Interruption {
        t: f64,
        agent_onset: f64,
        scheduled_stop: f64,
        agent_stop: f64,
    },
    FalseAlarmStart {
        t: f64,
        end: f64,
    },
}

impl From<&LogEvent> for LogEventRecord {
    fn from(e: &LogEvent) -> Self {
        let f = seconds_to_f64;
        match *e {
            LogEvent::UserOnset { t, end } => LogEventRecord::UserOnset {
                t: f(t),
                end: f(end),
            },
            LogEvent::AgentOnset { t, end } => LogEventRecord::AgentOnset {
                t: f(t),
                end: f(end),
            },
            LogEvent::Interruption {
                t,
                agent_onset,
                scheduled_stop,
                agent_stop,
            } => LogEventRecord::Interruption {
                t: f(t),
                agent_onset: f(agent_onset),
                scheduled_stop: f(scheduled_stop),
                agent_stop: f(agent_stop),
            },
            LogEvent::FalseAlarmStart { t, end } => LogEventRecord::FalseAlarmStart {
                t: f(t),
                end: f(end),
            },
        }
    }
}

impl TryFrom<&LogEventRecord> for LogEvent {
    type Error = Error;

    fn try_from(r: &LogEventRecord) -> Result<Self> {
        let s = seconds_from_f64;
        Ok(match *r {
            LogEventRecord::UserOnset { t, end } => LogEvent::UserOnset {
                t: s(t)?,
                end: s(end)?,
            },
            LogEventRecord::AgentOnset { t, end } => LogEvent::AgentOnset {
                t: s(t)?,
                end: s(end)?,
            },
            LogEventRecord::Interruption {
                t,
                agent_onset,
                scheduled_stop,
                agent_stop,
            } => LogEvent::Interruption {
                t: s(t)?,
                agent_onset: s(agent_onset)?,
                scheduled_stop: s(scheduled_stop)?,
                agent_stop: s(agent_stop)?,
            },
            LogEventRecord::FalseAlarmStart { t, end } => LogEvent::FalseAlarmStart {
                t: s(t)?,
                end: s(end)?,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruthLog {
    pub events: Vec<LogEvent>,
}

impl GroundTruthLog {
    pub fn validate(&self) -> Result<()> {
        for (i, w) in self.events.windows(2).enumerate() {
            if w[1].time() < w[0].time() {
                return Err(Error::MalformedLog(format!(
                    "event {} goes back in time",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

/// One line of the ground-truth log file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LogRecord {
    pub id: String,
    pub events: Vec<LogEventRecord>,
}

impl LogRecord {
    pub fn from_log(id: &str, log: &GroundTruthLog) -> Self {
        Self {
            id: id.to_string(),
            events: log.events.iter().map(Into::into).collect(),
        }
    }

    pub fn to_log(&self) -> Result<GroundTruthLog> {
        let log = GroundTruthLog {
            events: self
                .events
                .iter()
                .map(TryInto::try_into)
                .collect::<Result<_>>()?,
        };
        log.validate()?;
        Ok(log)
    }
}

pub fn simulate(
    policy: &AgentPolicy,
    script: &UserScript,
    seed: u64,
) -> Result<(Conversation<Seconds>, GroundTruthLog)> {
    simulate_named(format!("sim-{seed}"), policy, script, seed)
}

pub fn simulate_named(
    id: impl Into<String>,
    policy: &AgentPolicy,
    script: &UserScript,
    seed: u64,
) -> Result<(Conversation<Seconds>, GroundTruthLog)> {
    policy.validate()?;
    script.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frame = false_alarm_frame();
    let p_false = policy.false_alarm_probability();

    let mut turns: Vec<Turn<Seconds>> = Vec::new();
    let mut events: Vec<LogEvent> = Vec::new();
    let mut user_start = Seconds::zero();
    // agent is busy until this time (exclusive of later false starts)
    let mut agent_busy_until: Option<Seconds> = None;
    let mut pending_interrupt: Option<LogEvent> = None;
    let mut n_false = 0usize;
    let n_intents = script.intents.len();

    for (i, intent) in script.intents.iter().enumerate() {
        let user_end = user_start + intent.speak_duration;
        turns.push(Turn::new(
            SpeakerRole::User,
            user_start,
            user_end,
            format!("sim-user-{i}"),
        )?);
        events.push(LogEvent::UserOnset {
            t: user_start,
            end: user_end,
        });
        if let Some(ev) = pending_interrupt.take() {
            events.push(ev);
        }

        let mut k = 0i64;
        loop {
            let t_a = user_start + frame * Rational64::from_integer(k);
            if !(t_a + frame < user_end) {
                break;
            }
            let agent_free = agent_busy_until.is_none_or(|b| t_a > b);
            // draw for every frame so the stream does not depend on agent state
            let fire = p_false > 0.0 && rng.random_bool(p_false);
            if agent_free && fire {
                turns.push(Turn::new(
                    SpeakerRole::Agent,
                    t_a,
                    t_a + frame,
                    format!("sim-false-alarm-{n_false}"),
                )?);
                events.push(LogEvent::FalseAlarmStart {
                    t: t_a,
                    end: t_a + frame,
                });
                n_false += 1;
                agent_busy_until = Some(t_a + frame);
                // the next frame would touch this false start
                k += 2;
            } else {
                k += 1;
            }
        }

        let delay = policy.response_delay.sample(&mut rng);
        let duration = policy.utterance_duration.sample(&mut rng);
        let mut onset = user_end + delay;
        if let Some(busy) = agent_busy_until {
            if onset <= busy {
                onset = busy + frame;
            }
        }
        let natural_end = onset + duration;
        let interrupt = match intent.patience {
            Some(p) if i + 1 < n_intents && p < duration => Some(p),
            _ => None,
        };
        let agent_end = match interrupt {
            Some(p) => {
                let t_u = onset + p;
                let scheduled_stop = t_u + policy.stop_latency.sample(&mut rng);
                let agent_stop = tmin(scheduled_stop, natural_end);
                pending_interrupt = Some(LogEvent::Interruption {
                    t: t_u,
                    agent_onset: onset,
                    scheduled_stop,
                    agent_stop,
                });
                user_start = t_u;
                agent_stop
            }
            None => {
                user_start = natural_end + intent.post_turn_silence;
                natural_end
            }
        };
        turns.push(Turn::new(
            SpeakerRole::Agent,
            onset,
            agent_end,
            format!("sim-agent-{i}"),
        )?);
        events.push(LogEvent::AgentOnset {
            t: onset,
            end: agent_end,
        });
        agent_busy_until = Some(agent_end);
    }

    events.sort_by_key(|a| a.time());
    let log = GroundTruthLog { events };
    let conv = Conversation::from_unsorted(id, turns)?.push_provenance(
        Provenance::new("simulate").param("seed", seed).param(
            "policy",
            serde_json::to_value(AgentPolicySpec::from(policy)).unwrap_or_default(),
        ),
    );
    Ok((conv, log))
}

/// Metrics for one run computed from the labeled events alone.
pub fn oracle_timeline(
    id: impl Into<String>,
    log: &GroundTruthLog,
    cfg: &MetricsConfig<Seconds>,
) -> Result<TimelineMetrics<Seconds>> {
    log.validate()?;
    let users: Vec<(Seconds, Seconds)> = log
        .events
        .iter()
        .filter_map(|e| match *e {
            LogEvent::UserOnset { t, end } => Some((t, end)),
            _ => None,
        })
        .collect();
    let agent_onsets: Vec<Seconds> = log
        .events
        .iter()
        .filter_map(|e| match *e {
            LogEvent::AgentOnset { t, .. } | LogEvent::FalseAlarmStart { t, .. } => Some(t),
            _ => None,
        })
        .collect();

    let mut barge_ins = Vec::new();
    let mut false_alarms = Vec::new();
    for e in &log.events {
        match *e {
            LogEvent::Interruption {
                t,
                agent_onset,
                agent_stop,
                ..
            } => {
                let &(_, u_end) = users.iter().find(|&&(s, _)| s == t).ok_or_else(|| {
                    Error::MalformedLog(format!(
                        "interruption at {} has no user onset",
                        seconds_to_f64(t)
                    ))
                })?;
                // a stop exactly at the onset leaves no overlap
                if agent_stop <= t {
                    continue;
                }
                let latency = agent_stop - t;
                let guard_end = match cfg.resume_guard {
                    Some(g) => tmin(u_end, agent_stop + g),
                    None => u_end,
                };
                let resumed = agent_onsets
                    .iter()
                    .any(|&a| agent_stop < a && a < guard_end);
                barge_ins.push(BargeInEvent {
                    t_user_onset: t,
                    user_segment: (t, u_end),
                    agent_segment: (agent_onset, agent_stop),
                    t_agent_stop: Some(agent_stop),
                    latency: Some(latency),
                    resumed,
                    success: latency <= cfg.success_window && !resumed,
                });
            }
            LogEvent::FalseAlarmStart { t, .. } => {
                let &(u_s, u_e) =
                    users
                        .iter()
                        .find(|&&(s, e)| s <= t && t < e)
                        .ok_or_else(|| {
                            Error::MalformedLog(format!(
                                "false alarm at {} outside user speech",
                                seconds_to_f64(t)
                            ))
                        })?;
                let remaining = u_e - t;
                false_alarms.push(FalseAlarmEvent {
                    t_agent_onset: t,
                    user_segment: (u_s, u_e),
                    user_remaining: remaining,
                    exempt: !(remaining > cfg.false_alarm_exemption),
                });
            }
            _ => {}
        }
    }

    let first_response = users
        .first()
        .map(|&(_, first_end)| match agent_onsets.iter().min() {
            None => FirstResponse::NoResponse,
            Some(&a) if a < first_end => FirstResponse::Early,
            Some(&a) => FirstResponse::Latency(a - first_end),
        });

    Ok(TimelineMetrics {
        id: id.into(),
        n_user_turns: users.len(),
        barge_ins,
        false_alarms,
        first_response,
    })
}

pub fn oracle_report(
    log: &GroundTruthLog,
    cfg: &MetricsConfig<Seconds>,
) -> Result<MetricsReport<Seconds>> {
    Ok(aggregate([oracle_timeline("log", log, cfg)?]))
}

pub fn oracle_report_corpus<'a>(
    logs: impl IntoIterator<Item = (&'a str, &'a GroundTruthLog)>,
    cfg: &MetricsConfig<Seconds>,
) -> Result<MetricsReport<Seconds>> {
    let per_log = logs
        .into_iter()
        .map(|(id, log)| oracle_timeline(id, log, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(per_log))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed(ms: i64) -> Distribution {
        Distribution::Fixed(millis(ms))
    }

    fn policy(stop_ms: i64) -> AgentPolicy {
        AgentPolicy {
            response_delay: fixed(640),
            stop_latency: fixed(stop_ms),
            false_alarm_rate_hz: 0.0,
            utterance_duration: fixed(6000),
        }
    }

    fn intent(speak_ms: i64, patience_ms: Option<i64>) -> UserIntent {
        UserIntent {
            speak_duration: millis(speak_ms),
            patience: patience_ms.map(millis),
            post_turn_silence: millis(1000),
        }
    }

    #[test]
    fn agent_answers_after_delay() {
        let script = UserScript {
            intents: vec![intent(3200, None)],
        };
        let (conv, log) = simulate(&policy(500), &script, 1).unwrap();
        assert_eq!(conv.turns()[1].start(), millis(3840));
        assert!(log.events.contains(&LogEvent::AgentOnset {
            t: millis(3840),
            end: millis(9840)
        }));
    }

    #[test]
    fn patience_triggers_interruption() {
        let script = UserScript {
            intents: vec![intent(3200, Some(2000)), intent(1500, None)],
        };
        let (conv, log) = simulate(&policy(500), &script, 1).unwrap();
        assert!(log.events.contains(&LogEvent::Interruption {
            t: millis(5840),
            agent_onset: millis(3840),
            scheduled_stop: millis(6340),
            agent_stop: millis(6340),
        }));
        let agent = &conv.turns()[1];
        assert_eq!((agent.start(), agent.end()), (millis(3840), millis(6340)));
        assert_eq!(conv.turns()[2].start(), millis(5840));
        log.validate().unwrap();
    }

    #[test]
    fn patience_longer_than_answer_does_not_fire() {
        let script = UserScript {
            intents: vec![intent(3200, Some(7000)), intent(1500, None)],
        };
        let (conv, log) = simulate(&policy(500), &script, 1).unwrap();
        assert!(!log
            .events
            .iter()
            .any(|e| matches!(e, LogEvent::Interruption { .. })));
        // waits for the agent, then the post-turn silence
        assert_eq!(conv.turns()[2].start(), millis(9840 + 1000));
    }

    #[test]
    fn deterministic_per_seed() {
        let mut p = policy(500);
        p.false_alarm_rate_hz = 2.0;
        p.response_delay = Distribution::Uniform(millis(100), millis(900));
        let script = UserScript {
            intents: vec![
                intent(3000, Some(1000)),
                intent(4000, None),
                intent(2000, None),
            ],
        };
        let a = simulate(&p, &script, 42).unwrap();
        let b = simulate(&p, &script, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate(&p, &script, 43).unwrap();
        assert_ne!(a.1, c.1);
    }

    #[test]
    fn oracle_examples() {
        let cfg = MetricsConfig::default();
        let script = UserScript {
            intents: vec![intent(3200, Some(2000)), intent(1500, None)],
        };
        let (_, log) = simulate(&policy(500), &script, 1).unwrap();
        let r = oracle_report(&log, &cfg).unwrap();
        assert_eq!(r.success_rate, Some(1.0));
        assert_eq!(r.false_alarm_rate, Some(0.0));
        // stop after 2.0 s, user keeps talking for 2.5 s
        let script = UserScript {
            intents: vec![intent(3200, Some(2000)), intent(2500, None)],
        };
        let (_, log) = simulate(&policy(2000), &script, 1).unwrap();
        let r = oracle_report(&log, &cfg).unwrap();
        assert_eq!(r.n_barge_in_opportunities, 1);
        assert_eq!(r.success_rate, Some(0.0));
    }

    #[test]
    fn invalid_policy_rejected() {
        let mut p = policy(500);
        p.utterance_duration = fixed(0);
        let script = UserScript {
            intents: vec![intent(1000, None)],
        };
        assert!(matches!(
            simulate(&p, &script, 0),
            Err(Error::InvalidDistribution(_))
        ));
        let mut p = policy(500);
        p.response_delay = Distribution::Uniform(millis(500), millis(100));
        assert!(simulate(&p, &script, 0).is_err());
        let mut p = policy(500);
        p.false_alarm_rate_hz = 20.0;
        assert!(simulate(&p, &script, 0).is_err());
        let mut p = policy(500);
        p.stop_latency = fixed(-1);
        assert!(simulate(&p, &script, 0).is_err());
    }

    #[test]
    fn malformed_log_rejected() {
        let cfg = MetricsConfig::default();
        let log = GroundTruthLog {
            events: vec![
                LogEvent::UserOnset {
                    t: millis(1000),
                    end: millis(2000),
                },
                LogEvent::UserOnset {
                    t: millis(0),
                    end: millis(500),
                },
            ],
        };
        assert!(oracle_report(&log, &cfg).is_err());
        let log = GroundTruthLog {
            events: vec![LogEvent::FalseAlarmStart {
                t: millis(0),
                end: millis(80),
            }],
        };
        assert!(oracle_report(&log, &cfg).is_err());
    }

    #[test]
    fn log_record_round_trip() {
        let mut p = policy(700);
        p.false_alarm_rate_hz = 1.5;
        let script = UserScript {
            intents: vec![intent(3000, Some(1200)), intent(2500, None)],
        };
        let (_, log) = simulate(&p, &script, 9).unwrap();
        let rec = LogRecord::from_log("x", &log);
        let json = serde_json::to_string(&rec).unwrap();
        let back: LogRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_log().unwrap(), log);
        assert!(json.contains("\"event\":\"UserOnset\""));
    }

    #[test]
    fn distribution_specs_parse() {
        let d: DistributionSpec = serde_json::from_str("0.64").unwrap();
        assert_eq!(Distribution::try_from(&d).unwrap(), fixed(640));
        let d: DistributionSpec = serde_json::from_str(r#"{"fixed": 0.5}"#).unwrap();
        assert_eq!(Distribution::try_from(&d).unwrap(), fixed(500));
        let d: DistributionSpec = serde_json::from_str(r#"{"uniform": [0.2, 0.8]}"#).unwrap();
        assert_eq!(
            Distribution::try_from(&d).unwrap(),
            Distribution::Uniform(millis(200), millis(800))
        );
    }
}
