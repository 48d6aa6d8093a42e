//! JSON and CSV renderings of a metrics report.

use std::io::Write;

use anyhow::Result;
use duplex_core::scalar::seconds_to_f64;
use duplex_core::{
    BargeInEvent, FalseAlarmEvent, FirstResponse, MetricsConfig, MetricsReport, Seconds,
};
use serde::Serialize;

pub const SCHEMA_ID: &str = "duplexkit-report/1";

#[derive(Debug, Serialize)]
pub struct ReportJson {
    pub schema: &'static str,
    pub config: ConfigJson,
    pub n_timelines: usize,
    pub n_user_turns: usize,
    pub barge_in: BargeInJson,
    pub false_alarm: FalseAlarmJson,
    pub first_response: FirstResponseJson,
    pub interruption: InterruptionJson,
    pub evidence: EvidenceJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleJson>,
}

#[derive(Debug, Serialize)]
pub struct ConfigJson {
    pub success_window_s: f64,
    pub false_alarm_exemption_s: f64,
    /// `null` guards until the interrupting user segment ends.
    pub resume_guard_s: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct BargeInJson {
    pub n_opportunities: usize,
    pub n_successes: usize,
    pub success_rate: Option<f64>,
    pub latency_sum_s: f64,
    pub mean_latency_s: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct FalseAlarmJson {
    pub n_candidates: usize,
    pub n_false_alarms: usize,
    pub rate: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct FirstResponseJson {
    pub n_measured: usize,
    pub n_early: usize,
    pub n_no_response: usize,
    pub latency_sum_s: f64,
    pub mean_latency_s: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct InterruptionJson {
    pub n_interrupted_timelines: usize,
    pub rate: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct EvidenceJson {
    pub barge_ins: Vec<BargeInRow>,
    pub false_alarms: Vec<FalseAlarmRow>,
    pub first_responses: Vec<FirstResponseRow>,
}

#[derive(Debug, Serialize)]
pub struct BargeInRow {
    pub id: String,
    pub t_user_onset_s: f64,
    pub user_segment_s: [f64; 2],
    pub agent_segment_s: [f64; 2],
    pub t_agent_stop_s: Option<f64>,
    pub latency_s: Option<f64>,
    pub resumed: bool,
    pub success: bool,
}

#[derive(Debug, Serialize)]
pub struct FalseAlarmRow {
    pub id: String,
    pub t_agent_onset_s: f64,
    pub user_segment_s: [f64; 2],
    pub user_remaining_s: f64,
    pub exempt: bool,
}

#[derive(Debug, Serialize)]
pub struct FirstResponseRow {
    pub id: String,
    /// `latency`, `early`, `no_response` or `no_user_turn`.
    pub outcome: &'static str,
    pub latency_s: Option<f64>,
    pub display: String,
}

#[derive(Debug, Serialize)]
pub struct OracleJson {
    pub n_logs: usize,
    pub agrees: bool,
    pub n_barge_in_opportunities: usize,
    pub n_successes: usize,
    pub n_false_alarms: usize,
    pub mean_barge_in_latency_s: Option<f64>,
    pub mismatches: Vec<String>,
}

fn s(t: Seconds) -> f64 {
    seconds_to_f64(t)
}

fn pair(p: (Seconds, Seconds)) -> [f64; 2] {
    [s(p.0), s(p.1)]
}

fn barge_in_row(id: &str, e: &BargeInEvent<Seconds>) -> BargeInRow {
    BargeInRow {
        id: id.to_string(),
        t_user_onset_s: s(e.t_user_onset),
        user_segment_s: pair(e.user_segment),
        agent_segment_s: pair(e.agent_segment),
        t_agent_stop_s: e.t_agent_stop.map(s),
        latency_s: e.latency.map(s),
        resumed: e.resumed,
        success: e.success,
    }
}

fn false_alarm_row(id: &str, e: &FalseAlarmEvent<Seconds>) -> FalseAlarmRow {
    FalseAlarmRow {
        id: id.to_string(),
        t_agent_onset_s: s(e.t_agent_onset),
        user_segment_s: pair(e.user_segment),
        user_remaining_s: s(e.user_remaining),
        exempt: e.exempt,
    }
}

fn first_response_row(id: &str, r: &Option<FirstResponse<Seconds>>) -> FirstResponseRow {
    let (outcome, latency_s, display) = match *r {
        Some(FirstResponse::Latency(t)) => ("latency", Some(s(t)), format!("{} s", s(t))),
        Some(FirstResponse::Early) => ("early", None, "n/a (early)".to_string()),
        Some(FirstResponse::NoResponse) => ("no_response", None, "no response".to_string()),
        None => ("no_user_turn", None, "n/a (no user turn)".to_string()),
    };
    FirstResponseRow {
        id: id.to_string(),
        outcome,
        latency_s,
        display,
    }
}

impl ReportJson {
    pub fn new(report: &MetricsReport<Seconds>, cfg: &MetricsConfig<Seconds>) -> Self {
        Self {
            schema: SCHEMA_ID,
            config: ConfigJson {
                success_window_s: s(cfg.success_window),
                false_alarm_exemption_s: s(cfg.false_alarm_exemption),
                resume_guard_s: cfg.resume_guard.map(s),
            },
            n_timelines: report.n_timelines,
            n_user_turns: report.n_user_turns,
            barge_in: BargeInJson {
                n_opportunities: report.n_barge_in_opportunities,
                n_successes: report.n_successes,
                success_rate: report.success_rate,
                latency_sum_s: s(report.success_latency_sum),
                mean_latency_s: report.mean_barge_in_latency.map(s),
            },
            false_alarm: FalseAlarmJson {
                n_candidates: report.n_false_alarm_candidates,
                n_false_alarms: report.n_false_alarms,
                rate: report.false_alarm_rate,
            },
            first_response: FirstResponseJson {
                n_measured: report.first_response.n_measured,
                n_early: report.first_response.n_early,
                n_no_response: report.first_response.n_no_response,
                latency_sum_s: s(report.first_response.latency_sum),
                mean_latency_s: report.first_response.mean.map(s),
            },
            interruption: InterruptionJson {
                n_interrupted_timelines: report.n_interrupted_timelines,
                rate: report.interruption_rate,
            },
            evidence: EvidenceJson {
                barge_ins: report
                    .barge_in_events
                    .iter()
                    .map(|(id, e)| barge_in_row(id, e))
                    .collect(),
                false_alarms: report
                    .false_alarm_events
                    .iter()
                    .map(|(id, e)| false_alarm_row(id, e))
                    .collect(),
                first_responses: report
                    .first_responses
                    .iter()
                    .map(|(id, r)| first_response_row(id, r))
                    .collect(),
            },
            oracle: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    id: &'a str,
    kind: &'static str,
    time_s: Option<f64>,
    value_s: Option<f64>,
    outcome: &'static str,
}

/// One row per barge-in, false-alarm candidate and first response.
///
/// `time_s` is the user onset (barge-in) or agent onset (false alarm);
/// `value_s` is the stop latency, the remaining user speech, or the first
/// response latency.
pub fn write_events_csv(report: &MetricsReport<Seconds>, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (id, e) in &report.barge_in_events {
        let outcome = match (e.success, e.resumed, e.latency) {
            (true, _, _) => "success",
            (false, true, _) => "resumed",
            (false, false, None) => "no_stop",
            (false, false, Some(_)) => "late_stop",
        };
        w.serialize(CsvRow {
            id,
            kind: "barge_in",
            time_s: Some(s(e.t_user_onset)),
            value_s: e.latency.map(s),
            outcome,
        })?;
    }
    for (id, e) in &report.false_alarm_events {
        w.serialize(CsvRow {
            id,
            kind: "false_alarm",
            time_s: Some(s(e.t_agent_onset)),
            value_s: Some(s(e.user_remaining)),
            outcome: if e.exempt { "exempt" } else { "false_alarm" },
        })?;
    }
    for (id, r) in &report.first_responses {
        let row = first_response_row(id, r);
        w.serialize(CsvRow {
            id,
            kind: "first_response",
            time_s: None,
            value_s: row.latency_s,
            outcome: row.outcome,
        })?;
    }
    w.flush()?;
    Ok(())
}
