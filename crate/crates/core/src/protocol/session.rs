use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DetectionReason, EventClass, MessageSource, PhiMode, ProtocolVariant, TrialRecord, TrialSpec};
use crate::adversary::{EvePolicy, Segment};
use crate::apparatus::{OutputPort, PhiSetting, Reflectivity};
use crate::error::{QsdcError, Result};
use crate::rng::SessionKeys;

/// Trials handed to one worker at a time.
const CHUNK: u64 = 8192;

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub spec: TrialSpec,
    pub trials: u64,
    pub seed: u64,
    /// `None` uses rayon's global pool.
    pub workers: Option<usize>,
}

impl SessionConfig {
    pub fn new(variant: ProtocolVariant, r: Reflectivity, eve: impl Into<EvePolicy>, trials: u64, seed: u64) -> Self {
        Self { spec: TrialSpec::new(variant, r, eve), trials, seed, workers: None }
    }

    pub fn with_phi_mode(mut self, mode: PhiMode) -> Self {
        self.spec.phi_mode = mode;
        self
    }

    pub fn with_message(mut self, message: MessageSource) -> Self {
        self.spec.message = message;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(QsdcError::InvalidConfig("at least one trial is required".into()));
        }
        if self.workers == Some(0) {
            return Err(QsdcError::InvalidConfig("worker count must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EventCounts {
    pub message_decoded: u64,
    pub eve_check: u64,
    pub discarded: u64,
    pub eve_detected: u64,
}

impl EventCounts {
    fn record(&mut self, class: EventClass) {
        match class {
            EventClass::MessageDecoded => self.message_decoded += 1,
            EventClass::EveCheck => self.eve_check += 1,
            EventClass::Discarded => self.discarded += 1,
            EventClass::EveDetected => self.eve_detected += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.message_decoded + self.eve_check + self.discarded + self.eve_detected
    }

    fn merge(&mut self, o: &Self) {
        self.message_decoded += o.message_decoded;
        self.eve_check += o.eve_check;
        self.discarded += o.discarded;
        self.eve_detected += o.eve_detected;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DetectionCounts {
    pub invalid_arm: u64,
    pub detector_polarization: u64,
    pub analyzer_mismatch: u64,
    pub test_option_mismatch: u64,
    pub undecodable_outcome: u64,
}

impl DetectionCounts {
    fn record(&mut self, reason: DetectionReason) {
        match reason {
            DetectionReason::InvalidArm => self.invalid_arm += 1,
            DetectionReason::DetectorPolarization => self.detector_polarization += 1,
            DetectionReason::AnalyzerMismatch => self.analyzer_mismatch += 1,
            DetectionReason::TestOptionMismatch => self.test_option_mismatch += 1,
            DetectionReason::UndecodableOutcome => self.undecodable_outcome += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.invalid_arm
            + self.detector_polarization
            + self.analyzer_mismatch
            + self.test_option_mismatch
            + self.undecodable_outcome
    }

    fn merge(&mut self, o: &Self) {
        self.invalid_arm += o.invalid_arm;
        self.detector_polarization += o.detector_polarization;
        self.analyzer_mismatch += o.analyzer_mismatch;
        self.test_option_mismatch += o.test_option_mismatch;
        self.undecodable_outcome += o.undecodable_outcome;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PortCounts {
    pub to_bob_analyzer: u64,
    pub to_bob_discard: u64,
    pub da1: u64,
    pub da2: u64,
    pub da3: u64,
    pub da4: u64,
}

impl PortCounts {
    pub fn get(&self, port: OutputPort) -> u64 {
        match port {
            OutputPort::ToBobAnalyzer => self.to_bob_analyzer,
            OutputPort::ToBobDiscard => self.to_bob_discard,
            OutputPort::DA1 => self.da1,
            OutputPort::DA2 => self.da2,
            OutputPort::DA3 => self.da3,
            OutputPort::DA4 => self.da4,
        }
    }

    fn slot(&mut self, port: OutputPort) -> &mut u64 {
        match port {
            OutputPort::ToBobAnalyzer => &mut self.to_bob_analyzer,
            OutputPort::ToBobDiscard => &mut self.to_bob_discard,
            OutputPort::DA1 => &mut self.da1,
            OutputPort::DA2 => &mut self.da2,
            OutputPort::DA3 => &mut self.da3,
            OutputPort::DA4 => &mut self.da4,
        }
    }

    pub fn total(&self) -> u64 {
        OutputPort::ALL.iter().map(|&p| self.get(p)).sum()
    }

    fn merge(&mut self, o: &Self) {
        for p in OutputPort::ALL {
            *self.slot(p) += o.get(p);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PhiPortCounts {
    pub phi_0: PortCounts,
    pub phi_half_pi: PortCounts,
    pub phi_pi: PortCounts,
    pub phi_three_halves_pi: PortCounts,
}

impl PhiPortCounts {
    pub fn get(&self, phi: PhiSetting) -> &PortCounts {
        match phi {
            PhiSetting::Zero => &self.phi_0,
            PhiSetting::HalfPi => &self.phi_half_pi,
            PhiSetting::Pi => &self.phi_pi,
            PhiSetting::ThreeHalvesPi => &self.phi_three_halves_pi,
        }
    }

    fn get_mut(&mut self, phi: PhiSetting) -> &mut PortCounts {
        match phi {
            PhiSetting::Zero => &mut self.phi_0,
            PhiSetting::HalfPi => &mut self.phi_half_pi,
            PhiSetting::Pi => &mut self.phi_pi,
            PhiSetting::ThreeHalvesPi => &mut self.phi_three_halves_pi,
        }
    }

    fn merge(&mut self, o: &Self) {
        for phi in PhiSetting::ALL {
            self.get_mut(phi).merge(o.get(phi));
        }
    }
}

/// Aggregated counts over a session. Merging is plain addition, so the
/// result does not depend on how trials were split across workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SessionStatistics {
    pub trials: u64,
    pub events: EventCounts,
    pub ports: PhiPortCounts,
    pub detections: DetectionCounts,
    pub decode_errors: u64,
    /// Rounds that carried a message bit to Bob on the announced arm.
    pub message_encoded: u64,
    /// Message-encoding rounds where Eve holds the correct bit.
    pub eavesdropped_bits: u64,
    /// Of those, the ones Eve can tell apart as genuine message bits.
    pub verified_bits: u64,
    /// Eavesdropped rounds that nevertheless raised an alarm.
    pub eavesdropped_detected: u64,
    pub eve_forward_observations: u64,
    pub eve_backward_observations: u64,
    /// Forward observations made on superposed-path rounds.
    pub eve_superposed_observations: u64,
}

impl SessionStatistics {
    pub fn record(&mut self, rec: &TrialRecord) {
        self.trials += 1;
        self.events.record(rec.event);
        *self.ports.get_mut(rec.bob_prep.phi).slot(rec.port) += 1;
        if let Some(reason) = rec.eve_detected {
            self.detections.record(reason);
        }
        if rec.decoded_bit.is_some() && rec.decoded_bit != rec.alice_enc.message_bit {
            self.decode_errors += 1;
        }
        self.message_encoded += u64::from(rec.message_encoded);
        self.eavesdropped_bits += u64::from(rec.eavesdropped());
        self.verified_bits += u64::from(rec.eavesdropped() && rec.eve_verified());
        self.eavesdropped_detected += u64::from(rec.eavesdropped() && rec.eve_detected.is_some());
        for o in &rec.eve_observations {
            match o.segment {
                Segment::Forward => {
                    self.eve_forward_observations += 1;
                    if !rec.bob_prep.phi.is_deterministic() {
                        self.eve_superposed_observations += 1;
                    }
                }
                Segment::Backward => self.eve_backward_observations += 1,
            }
        }
    }

    pub fn merge(&mut self, o: &Self) {
        self.trials += o.trials;
        self.events.merge(&o.events);
        self.ports.merge(&o.ports);
        self.detections.merge(&o.detections);
        self.decode_errors += o.decode_errors;
        self.message_encoded += o.message_encoded;
        self.eavesdropped_bits += o.eavesdropped_bits;
        self.verified_bits += o.verified_bits;
        self.eavesdropped_detected += o.eavesdropped_detected;
        self.eve_forward_observations += o.eve_forward_observations;
        self.eve_backward_observations += o.eve_backward_observations;
        self.eve_superposed_observations += o.eve_superposed_observations;
    }

    pub fn eve_detections(&self) -> u64 {
        self.detections.total()
    }

    pub fn frequency(&self, count: u64) -> f64 {
        count as f64 / self.trials as f64
    }

    /// Probability that Eve holds a correct message bit from a round while
    /// staying unnoticed: the correct-bit rate times one minus the
    /// per-round detection rate. Returns the estimate and its delta-method
    /// standard error.
    pub fn eavesdrop_estimate(&self) -> (f64, f64) {
        let n = self.trials as f64;
        let a = self.frequency(self.eavesdropped_bits);
        let d = self.frequency(self.eve_detections());
        let joint = self.frequency(self.eavesdropped_detected);
        let var = ((1.0 - d).powi(2) * a * (1.0 - a) + a * a * d * (1.0 - d) - 2.0 * a * (1.0 - d) * (joint - a * d)) / n;
        (a * (1.0 - d), var.max(0.0).sqrt())
    }

    /// Trials Bob ran with the given phi.
    pub fn phi_trials(&self, phi: PhiSetting) -> u64 {
        self.ports.get(phi).total()
    }
}

fn run_range(spec: &TrialSpec, keys: &SessionKeys, range: Range<u64>) -> Result<SessionStatistics> {
    let mut stats = SessionStatistics::default();
    for index in range {
        let rec = super::run_trial(spec, index, &mut keys.trial(index))?;
        stats.record(&rec);
    }
    Ok(stats)
}

pub fn run_session(config: &SessionConfig) -> Result<SessionStatistics> {
    config.validate()?;
    let keys = SessionKeys::new(config.seed);
    let chunks = config.trials.div_ceil(CHUNK);
    let work = || {
        (0..chunks)
            .into_par_iter()
            .map(|c| run_range(&config.spec, &keys, c * CHUNK..((c + 1) * CHUNK).min(config.trials)))
            .try_reduce(SessionStatistics::default, |mut a, b| {
                a.merge(&b);
                Ok(a)
            })
    };
    match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| QsdcError::InvalidConfig(e.to_string()))?
            .install(work),
        None => work(),
    }
}

/// Sequential per-trial records of a session, identical to the trials
/// [`run_session`] aggregates.
pub fn session_records(config: &SessionConfig) -> Result<impl Iterator<Item = Result<TrialRecord>> + '_> {
    config.validate()?;
    let keys = SessionKeys::new(config.seed);
    Ok((0..config.trials).map(move |i| super::run_trial(&config.spec, i, &mut keys.trial(i))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StageKind {
    S1,
    S2,
}

impl StageKind {
    pub fn variant(self) -> ProtocolVariant {
        match self {
            Self::S1 => ProtocolVariant::ScheduleS1,
            Self::S2 => ProtocolVariant::ScheduleS2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleStage {
    pub kind: StageKind,
    pub trials: u64,
}

impl ScheduleStage {
    pub fn new(kind: StageKind, trials: u64) -> Self {
        Self { kind, trials }
    }

    /// Parses `S1:10000,S2:10000`.
    pub fn parse_list(spec: &str) -> Result<Vec<Self>> {
        spec.split(',')
            .map(|item| {
                let (kind, n) = item
                    .trim()
                    .split_once(':')
                    .ok_or_else(|| QsdcError::InvalidConfig(format!("stage '{item}' is not KIND:TRIALS")))?;
                let kind = match kind.trim().to_ascii_uppercase().as_str() {
                    "S1" => StageKind::S1,
                    "S2" => StageKind::S2,
                    other => return Err(QsdcError::InvalidConfig(format!("unknown stage kind '{other}'"))),
                };
                let trials = n
                    .trim()
                    .parse()
                    .map_err(|_| QsdcError::InvalidConfig(format!("bad trial count in '{item}'")))?;
                Ok(Self { kind, trials })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Clear,
    EveDetected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub kind: StageKind,
    pub seed: u64,
    pub statistics: SessionStatistics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub stages: Vec<StageReport>,
    pub verdict: Verdict,
    /// Message transmission may start only after a clear schedule.
    pub message_gate_open: bool,
}

fn stage_seed(master: u64, stage: usize) -> u64 {
    master ^ (stage as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Alternating S1/S2 pre-checks. Every stage runs to completion; the
/// verdict is clear only if no stage raised an alarm.
pub fn run_schedule(
    stages: &[ScheduleStage],
    eve: impl Into<EvePolicy>,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<ScheduleReport> {
    if stages.is_empty() {
        return Err(QsdcError::InvalidConfig("schedule needs at least one stage".into()));
    }
    if stages.windows(2).any(|w| w[0].kind == w[1].kind) {
        return Err(QsdcError::InvalidConfig("schedule stages must alternate between S1 and S2".into()));
    }
    let eve = eve.into();
    let mut reports = Vec::with_capacity(stages.len());
    for (i, stage) in stages.iter().enumerate() {
        let seed = stage_seed(master_seed, i);
        let mut config = SessionConfig::new(stage.kind.variant(), Reflectivity::BALANCED, eve, stage.trials, seed);
        config.workers = workers;
        let statistics = run_session(&config)?;
        reports.push(StageReport { kind: stage.kind, seed, statistics });
    }
    let clear = reports.iter().all(|s| s.statistics.eve_detections() == 0);
    Ok(ScheduleReport {
        stages: reports,
        verdict: if clear { Verdict::Clear } else { Verdict::EveDetected },
        message_gate_open: clear,
    })
}
