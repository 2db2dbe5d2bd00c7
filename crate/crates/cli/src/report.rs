use serde::Serialize;

use qsdc_core::analytics::{
    event_probabilities_over, per_phi_port_distribution, predicted_eavesdrop_probability, quoted_values,
    rational_from_f64, to_f64, Rational,
};
use qsdc_core::protocol::{DetectionCounts, PhiMode, ScheduleReport};
use qsdc_core::{EveScenario, PhiSetting, ProtocolVariant, SessionStatistics, Verdict};

use crate::config::RunConfig;
use crate::CliError;

pub const Z_LIMIT: f64 = 5.0;

#[derive(Debug, Serialize)]
pub struct Comparison {
    pub quantity: String,
    pub count: u64,
    pub trials: u64,
    pub observed: f64,
    pub expected: f64,
    pub expected_exact: String,
    /// Absent when the expected probability is 0 or 1.
    pub z: Option<f64>,
    pub within_5_sigma: bool,
}

impl Comparison {
    fn binomial(quantity: String, count: u64, trials: u64, expected: Rational) -> Self {
        let p = to_f64(expected);
        let n = trials as f64;
        let observed = if trials == 0 { 0.0 } else { count as f64 / n };
        let sd = (p * (1.0 - p) / n).sqrt();
        let (z, ok) = if sd > 0.0 {
            let z = (observed - p) / sd;
            (Some(z), z.abs() < Z_LIMIT)
        } else {
            (None, observed == p)
        };
        Self { quantity, count, trials, observed, expected: p, expected_exact: expected.to_string(), z, within_5_sigma: ok }
    }
}

#[derive(Debug, Serialize)]
pub struct EveSummary {
    pub scenario: EveScenario,
    pub detections: u64,
    pub detection_rate: f64,
    pub detections_by_reason: DetectionCounts,
    pub eavesdropped_bits: u64,
    pub verified_bits: u64,
    /// Correct-bit rate times one minus the detection rate.
    pub eavesdrop_estimate: f64,
    pub eavesdrop_sigma: f64,
    pub closed_form: Option<f64>,
    pub closed_form_exact: Option<String>,
    pub z: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct SessionReport {
    pub mode: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub statistics: SessionStatistics,
    pub comparisons: Vec<Comparison>,
    pub eve: EveSummary,
    pub notes: Vec<String>,
    pub verdict: String,
}

fn exact_r(config: &RunConfig) -> Result<Rational, CliError> {
    Ok(rational_from_f64(config.r)?)
}

pub fn session_report(config: &RunConfig, s: &SessionStatistics) -> Result<SessionReport, CliError> {
    let r = exact_r(config)?;
    let phis = config.phi_mode()?.settings();
    let mut comparisons = Vec::new();
    let mut notes = Vec::new();
    let clean = config.eve == EveScenario::None;

    if clean && config.variant == ProtocolVariant::Standard {
        let e = event_probabilities_over(&phis, r)?;
        comparisons.push(Comparison::binomial("p_message".into(), s.events.message_decoded, s.trials, e.p_message));
        comparisons.push(Comparison::binomial("p_eve_check".into(), s.events.eve_check, s.trials, e.p_eve_check));
        comparisons.push(Comparison::binomial("p_discard".into(), s.events.discarded, s.trials, e.p_discard));
    } else if clean {
        notes.push(format!("event classes of the {} variant have no closed form; ports are compared instead", config.variant));
    }
    if clean && matches!(config.variant, ProtocolVariant::Standard | ProtocolVariant::Modified) {
        for phi in PhiSetting::ALL {
            let n = s.phi_trials(phi);
            if n == 0 {
                continue;
            }
            for (port, p) in per_phi_port_distribution(phi, r)? {
                let label = format!("port[{phi}][{port}]");
                comparisons.push(Comparison::binomial(label, s.ports.get(phi).get(port), n, p));
            }
        }
    }

    // Message-carrying rounds do not depend on Eve: the photon stays on its arm.
    if config.phi_mode()? == PhiMode::Uniform {
        let share = match config.variant {
            ProtocolVariant::Standard => Some(Rational::from_integer(1)),
            ProtocolVariant::Modified => Some(Rational::new(2, 3)),
            _ => None,
        };
        if let Some(share) = share {
            let p = event_probabilities_over(&phis, r)?.p_message * share;
            comparisons.push(Comparison::binomial("message_encoded".into(), s.message_encoded, s.trials, p));
        }
    }

    let (estimate, sigma) = s.eavesdrop_estimate();
    let mut eve = EveSummary {
        scenario: config.eve,
        detections: s.eve_detections(),
        detection_rate: s.frequency(s.eve_detections()),
        detections_by_reason: s.detections,
        eavesdropped_bits: s.eavesdropped_bits,
        verified_bits: s.verified_bits,
        eavesdrop_estimate: estimate,
        eavesdrop_sigma: sigma,
        closed_form: None,
        closed_form_exact: None,
        z: None,
    };
    let standard_uniform = config.variant == ProtocolVariant::Standard && config.phi_mode()? == PhiMode::Uniform;
    match config.eve {
        EveScenario::Blind | EveScenario::PhiAware | EveScenario::PolarizationAware if standard_uniform => {
            let closed = predicted_eavesdrop_probability(config.eve, r)?;
            let c = to_f64(closed);
            let z = (sigma > 0.0).then(|| (estimate - c) / sigma);
            if z.is_some_and(|z| z.abs() >= Z_LIMIT) || (z.is_none() && estimate != c) {
                notes.push(format!(
                    "measured eavesdropping probability {estimate:.6} +- {sigma:.6} deviates from the closed form {c:.6} by more than 5 sigma"
                ));
            }
            eve.closed_form = Some(c);
            eve.closed_form_exact = Some(closed.to_string());
            eve.z = z;
        }
        EveScenario::SuperEve if standard_uniform => {
            let p = event_probabilities_over(&phis, r)?.p_message;
            comparisons.push(Comparison::binomial("super_eve_verified_bits".into(), s.verified_bits, s.trials, p));
        }
        _ => {}
    }
    for q in quoted_values() {
        if !q.reproducible && q.r == r && q.quantity.ends_with(config.eve.name()) {
            notes.push(format!(
                "quoted value {} for {} at r={} is not reproduced by its formula, which gives {} = {:.6}",
                q.quoted,
                q.quantity,
                q.r,
                q.computed,
                to_f64(q.computed)
            ));
        }
    }

    let verdict = if s.eve_detections() > 0 {
        format!("eve detected ({} alarms)", s.eve_detections())
    } else if comparisons.iter().all(|c| c.within_5_sigma) {
        "consistent with closed forms".to_string()
    } else {
        "deviates from closed forms".to_string()
    };
    Ok(SessionReport {
        mode: "session",
        version: env!("CARGO_PKG_VERSION"),
        config: config.clone(),
        statistics: *s,
        comparisons,
        eve,
        notes,
        verdict,
    })
}

#[derive(Debug, Serialize)]
pub struct StageSummary {
    pub kind: qsdc_core::protocol::StageKind,
    pub trials: u64,
    pub seed: u64,
    pub detections: u64,
}

#[derive(Debug, Serialize)]
pub struct ScheduleDocument {
    pub mode: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub stages: Vec<StageSummary>,
    pub schedule: ScheduleReport,
    pub verdict: Verdict,
    pub message_gate_open: bool,
}

pub fn schedule_report(config: &RunConfig, report: ScheduleReport) -> ScheduleDocument {
    let stages = report
        .stages
        .iter()
        .map(|s| StageSummary {
            kind: s.kind,
            trials: s.statistics.trials,
            seed: s.seed,
            detections: s.statistics.eve_detections(),
        })
        .collect();
    ScheduleDocument {
        mode: "schedule",
        version: env!("CARGO_PKG_VERSION"),
        config: config.clone(),
        stages,
        verdict: report.verdict,
        message_gate_open: report.message_gate_open,
        schedule: report,
    }
}
