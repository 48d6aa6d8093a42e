//! Turn-taking metrics over duplex timelines.
//!
//! * barge-in: a user onset strictly inside an agent segment `[a_s, a_e)`;
//!   latency is `a_e - t_u` and the event succeeds when the latency is within
//!   the success window and the agent does not resume before the guard ends.
//! * false alarm: an agent onset inside a user segment whose remaining user
//!   speech exceeds the exemption.
//! * first response latency: first agent onset minus first user segment end.

use crate::error::{Error, Result};
use crate::model::DuplexTimeline;
use crate::scalar::{check_non_negative, tmin, TimeScalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsConfig<T> {
    pub success_window: T,
    pub false_alarm_exemption: T,
    /// `None` guards until the interrupting user segment ends.
    pub resume_guard: Option<T>,
}

impl<T: TimeScalar> Default for MetricsConfig<T> {
    fn default() -> Self {
        Self {
            success_window: T::from_ratio(3, 2),
            false_alarm_exemption: T::from_ratio(1, 10),
            resume_guard: None,
        }
    }
}

impl<T: TimeScalar> MetricsConfig<T> {
    pub fn validate(&self) -> Result<()> {
        check_non_negative(self.success_window, "success_window")?;
        check_non_negative(self.false_alarm_exemption, "false_alarm_exemption")?;
        if let Some(g) = self.resume_guard {
            check_non_negative(g, "resume_guard")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BargeInEvent<T> {
    pub t_user_onset: T,
    pub user_segment: (T, T),
    pub agent_segment: (T, T),
    pub t_agent_stop: Option<T>,
    /// Recorded for failures too; only successes enter the mean.
    pub latency: Option<T>,
    /// Agent resumed inside the guard interval.
    pub resumed: bool,
    pub success: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FalseAlarmEvent<T> {
    pub t_agent_onset: T,
    pub user_segment: (T, T),
    /// User speech remaining after the agent onset.
    pub user_remaining: T,
    pub exempt: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FirstResponse<T> {
    Latency(T),
    /// The agent started before the first user turn ended.
    Early,
    NoResponse,
}

pub fn detect_barge_ins<T: TimeScalar>(
    tl: &DuplexTimeline<T>,
    cfg: &MetricsConfig<T>,
) -> Vec<BargeInEvent<T>> {
    let agent = tl.agent().segments();
    let mut events = Vec::new();
    for &(u_s, u_e) in tl.user().segments() {
        let idx = agent.partition_point(|&(a_s, _)| a_s < u_s);
        if idx == 0 {
            continue;
        }
        let (a_s, a_e) = agent[idx - 1];
        // strictly inside [a_s, a_e)
        if !(a_s < u_s && u_s < a_e) {
            continue;
        }
        let latency = a_e - u_s;
        let guard_end = match cfg.resume_guard {
            Some(g) => tmin(u_e, a_e + g),
            None => u_e,
        };
        let resumed = agent[idx..].iter().any(|&(s, _)| a_e < s && s < guard_end);
        let success = latency <= cfg.success_window && !resumed;
        events.push(BargeInEvent {
            t_user_onset: u_s,
            user_segment: (u_s, u_e),
            agent_segment: (a_s, a_e),
            t_agent_stop: Some(a_e),
            latency: Some(latency),
            resumed,
            success,
        });
    }
    events
}

/// Every agent onset inside a user segment, with its exemption status.
pub fn detect_false_alarms<T: TimeScalar>(
    tl: &DuplexTimeline<T>,
    cfg: &MetricsConfig<T>,
) -> Vec<FalseAlarmEvent<T>> {
    tl.agent()
        .segments()
        .iter()
        .filter_map(|&(t_a, _)| {
            let (u_s, u_e) = tl.user().segment_at(t_a)?;
            let remaining = u_e - t_a;
            Some(FalseAlarmEvent {
                t_agent_onset: t_a,
                user_segment: (u_s, u_e),
                user_remaining: remaining,
                exempt: !(remaining > cfg.false_alarm_exemption),
            })
        })
        .collect()
}

pub fn first_response_latency<T: TimeScalar>(tl: &DuplexTimeline<T>) -> Result<FirstResponse<T>> {
    let &(_, user_end) = tl
        .user()
        .segments()
        .first()
        .ok_or_else(|| Error::Metrics("timeline has no user speech".into()))?;
    Ok(match tl.agent().segments().first() {
        None => FirstResponse::NoResponse,
        Some(&(onset, _)) if onset < user_end => FirstResponse::Early,
        Some(&(onset, _)) => FirstResponse::Latency(onset - user_end),
    })
}

pub fn has_barge_in_opportunity<T: TimeScalar>(tl: &DuplexTimeline<T>) -> bool {
    let agent = tl.agent();
    tl.user()
        .segments()
        .iter()
        .any(|&(u_s, _)| agent.segment_at(u_s).is_some_and(|(a_s, _)| a_s < u_s))
}

/// Fraction of timelines with at least one barge-in opportunity.
pub fn interruption_rate<T: TimeScalar>(timelines: &[DuplexTimeline<T>]) -> Result<f64> {
    if timelines.is_empty() {
        return Err(Error::Metrics("interruption rate of an empty set".into()));
    }
    let hit = timelines
        .iter()
        .filter(|tl| has_barge_in_opportunity(tl))
        .count();
    Ok(hit as f64 / timelines.len() as f64)
}

/// Everything measured on one timeline.
#[derive(Debug, Clone, PartialEq)]
pub struct TimelineMetrics<T> {
    pub id: String,
    pub n_user_turns: usize,
    pub barge_ins: Vec<BargeInEvent<T>>,
    pub false_alarms: Vec<FalseAlarmEvent<T>>,
    pub first_response: Option<FirstResponse<T>>,
}

impl<T: TimeScalar> TimelineMetrics<T> {
    pub fn has_opportunity(&self) -> bool {
        !self.barge_ins.is_empty()
    }
}

pub fn evaluate_timeline<T: TimeScalar>(
    id: impl Into<String>,
    tl: &DuplexTimeline<T>,
    cfg: &MetricsConfig<T>,
) -> TimelineMetrics<T> {
    TimelineMetrics {
        id: id.into(),
        n_user_turns: tl.user().segments().len(),
        barge_ins: detect_barge_ins(tl, cfg),
        false_alarms: detect_false_alarms(tl, cfg),
        first_response: first_response_latency(tl).ok(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstResponseSummary<T> {
    pub n_measured: usize,
    pub n_early: usize,
    pub n_no_response: usize,
    pub latency_sum: T,
    pub mean: Option<T>,
}

/// Corpus-level metrics with the evidence they were computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport<T> {
    pub n_timelines: usize,
    pub n_user_turns: usize,
    pub n_barge_in_opportunities: usize,
    pub n_successes: usize,
    pub success_rate: Option<f64>,
    pub n_false_alarm_candidates: usize,
    pub n_false_alarms: usize,
    pub false_alarm_rate: Option<f64>,
    pub success_latency_sum: T,
    pub mean_barge_in_latency: Option<T>,
    pub first_response: FirstResponseSummary<T>,
    pub n_interrupted_timelines: usize,
    pub interruption_rate: Option<f64>,
    pub barge_in_events: Vec<(String, BargeInEvent<T>)>,
    pub false_alarm_events: Vec<(String, FalseAlarmEvent<T>)>,
    pub first_responses: Vec<(String, Option<FirstResponse<T>>)>,
}

/// Order-independent fold of counts and sums; evidence lists keep the order
/// timelines were added in.
#[derive(Debug, Clone)]
pub struct MetricsAccumulator<T> {
    n_timelines: usize,
    n_user_turns: usize,
    n_opportunities: usize,
    n_successes: usize,
    n_fa_candidates: usize,
    n_false_alarms: usize,
    success_latency_sum: T,
    fr_measured: usize,
    fr_early: usize,
    fr_none: usize,
    fr_sum: T,
    n_interrupted: usize,
    barge_ins: Vec<(String, BargeInEvent<T>)>,
    false_alarms: Vec<(String, FalseAlarmEvent<T>)>,
    first_responses: Vec<(String, Option<FirstResponse<T>>)>,
}

impl<T: TimeScalar> Default for MetricsAccumulator<T> {
    fn default() -> Self {
        Self {
            n_timelines: 0,
            n_user_turns: 0,
            n_opportunities: 0,
            n_successes: 0,
            n_fa_candidates: 0,
            n_false_alarms: 0,
            success_latency_sum: T::zero(),
            fr_measured: 0,
            fr_early: 0,
            fr_none: 0,
            fr_sum: T::zero(),
            n_interrupted: 0,
            barge_ins: Vec::new(),
            false_alarms: Vec::new(),
            first_responses: Vec::new(),
        }
    }
}

impl<T: TimeScalar> MetricsAccumulator<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, m: TimelineMetrics<T>) {
        self.n_timelines += 1;
        self.n_user_turns += m.n_user_turns;
        self.n_opportunities += m.barge_ins.len();
        if m.has_opportunity() {
            self.n_interrupted += 1;
        }
        for ev in &m.barge_ins {
            if ev.success {
                self.n_successes += 1;
                if let Some(l) = ev.latency {
                    self.success_latency_sum = self.success_latency_sum + l;
                }
            }
        }
        self.n_fa_candidates += m.false_alarms.len();
        self.n_false_alarms += m.false_alarms.iter().filter(|e| !e.exempt).count();
        match m.first_response {
            Some(FirstResponse::Latency(l)) => {
                self.fr_measured += 1;
                self.fr_sum = self.fr_sum + l;
            }
            Some(FirstResponse::Early) => self.fr_early += 1,
            Some(FirstResponse::NoResponse) => self.fr_none += 1,
            None => {}
        }
        let id = m.id;
        self.barge_ins
            .extend(m.barge_ins.into_iter().map(|e| (id.clone(), e)));
        self.false_alarms
            .extend(m.false_alarms.into_iter().map(|e| (id.clone(), e)));
        self.first_responses.push((id, m.first_response));
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.n_timelines += other.n_timelines;
        self.n_user_turns += other.n_user_turns;
        self.n_opportunities += other.n_opportunities;
        self.n_successes += other.n_successes;
        self.n_fa_candidates += other.n_fa_candidates;
        self.n_false_alarms += other.n_false_alarms;
        self.success_latency_sum = self.success_latency_sum + other.success_latency_sum;
        self.fr_measured += other.fr_measured;
        self.fr_early += other.fr_early;
        self.fr_none += other.fr_none;
        self.fr_sum = self.fr_sum + other.fr_sum;
        self.n_interrupted += other.n_interrupted;
        self.barge_ins.extend(other.barge_ins);
        self.false_alarms.extend(other.false_alarms);
        self.first_responses.extend(other.first_responses);
        self
    }

    pub fn finish(self) -> MetricsReport<T> {
        let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
        let mean = |sum: T, n: usize| (n > 0).then(|| sum / T::from_count(n));
        MetricsReport {
            n_timelines: self.n_timelines,
            n_user_turns: self.n_user_turns,
            n_barge_in_opportunities: self.n_opportunities,
            n_successes: self.n_successes,
            success_rate: ratio(self.n_successes, self.n_opportunities),
            n_false_alarm_candidates: self.n_fa_candidates,
            n_false_alarms: self.n_false_alarms,
            false_alarm_rate: ratio(self.n_false_alarms, self.n_user_turns),
            success_latency_sum: self.success_latency_sum,
            mean_barge_in_latency: mean(self.success_latency_sum, self.n_successes),
            first_response: FirstResponseSummary {
                n_measured: self.fr_measured,
                n_early: self.fr_early,
                n_no_response: self.fr_none,
                latency_sum: self.fr_sum,
                mean: mean(self.fr_sum, self.fr_measured),
            },
            n_interrupted_timelines: self.n_interrupted,
            interruption_rate: ratio(self.n_interrupted, self.n_timelines),
            barge_in_events: self.barge_ins,
            false_alarm_events: self.false_alarms,
            first_responses: self.first_responses,
        }
    }
}

pub fn aggregate<T: TimeScalar>(
    per_timeline: impl IntoIterator<Item = TimelineMetrics<T>>,
) -> MetricsReport<T> {
    let mut acc = MetricsAccumulator::new();
    for m in per_timeline {
        acc.add(m);
    }
    acc.finish()
}

/// Evaluates and aggregates a corpus of `(id, timeline)` pairs.
pub fn evaluate_corpus<'a, T: TimeScalar>(
    timelines: impl IntoIterator<Item = (&'a str, &'a DuplexTimeline<T>)>,
    cfg: &MetricsConfig<T>,
) -> Result<MetricsReport<T>> {
    cfg.validate()?;
    Ok(aggregate(
        timelines
            .into_iter()
            .map(|(id, tl)| evaluate_timeline(id, tl, cfg)),
    ))
}
