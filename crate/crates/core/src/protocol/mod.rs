//! Alice/Bob protocol rounds, their public announcements and bookkeeping.

mod session;
mod trial;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{EveObservation, EvePolicy};
use crate::apparatus::{ArmLabel, OutputPort, PhiSetting, Reflectivity};
use crate::error::{QsdcError, Result};
use crate::optics::{message_unitary, PolarizationBasis, PolarizationLabel, PolarizationUnitary, WavePlateAngle};

pub use session::{
    run_schedule, run_session, session_records, DetectionCounts, EventCounts, PhiPortCounts, PortCounts,
    ScheduleReport, ScheduleStage, SessionConfig, SessionStatistics, StageKind, StageReport, Verdict,
};
pub use trial::{check_eve_detection, classify_event, decode_message, run_trial, TrialContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolVariant {
    /// Message operations {1, sigma_y}; Bob's analyzer matches his preparation basis.
    Standard,
    /// Adds the theta = pi/8 test option; Bob's analyzer basis is random.
    Modified,
    /// Security pre-check with mirrors in place of the arm beam-splitters (r = 1).
    ScheduleS1,
    /// Security pre-check with r = 0 and only the test option.
    ScheduleS2,
}

impl ProtocolVariant {
    pub fn effective_reflectivity(self, r: Reflectivity) -> Reflectivity {
        match self {
            Self::ScheduleS1 => Reflectivity::MIRROR,
            Self::ScheduleS2 => Reflectivity::TRANSPARENT,
            _ => r,
        }
    }

    pub fn random_analyzer(self) -> bool {
        matches!(self, Self::Modified | Self::ScheduleS2)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Standard => "standard",
            Self::Modified => "modified",
            Self::ScheduleS1 => "schedule-s1",
            Self::ScheduleS2 => "schedule-s2",
        }
    }
}

impl fmt::Display for ProtocolVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolVariant {
    type Err = QsdcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Self::Standard),
            "modified" => Ok(Self::Modified),
            "schedule-s1" | "s1" => Ok(Self::ScheduleS1),
            "schedule-s2" | "s2" => Ok(Self::ScheduleS2),
            other => Err(QsdcError::InvalidConfig(format!("unknown protocol variant '{other}'"))),
        }
    }
}

/// How Bob draws his T-BS phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhiMode {
    #[default]
    Uniform,
    DeterministicOnly,
    SuperposedOnly,
    Fixed(PhiSetting),
}

impl PhiMode {
    pub fn settings(self) -> Vec<PhiSetting> {
        match self {
            Self::Uniform => PhiSetting::ALL.to_vec(),
            Self::DeterministicOnly => PhiSetting::DETERMINISTIC.to_vec(),
            Self::SuperposedOnly => PhiSetting::SUPERPOSED.to_vec(),
            Self::Fixed(p) => vec![p],
        }
    }

    fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> PhiSetting {
        match self {
            Self::Uniform => PhiSetting::ALL[rng.random_range(0..4)],
            Self::DeterministicOnly => PhiSetting::DETERMINISTIC[rng.random_range(0..2)],
            Self::SuperposedOnly => PhiSetting::SUPERPOSED[rng.random_range(0..2)],
            Self::Fixed(p) => p,
        }
    }
}

impl FromStr for PhiMode {
    type Err = QsdcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "det-only" => Ok(Self::DeterministicOnly),
            "sup-only" => Ok(Self::SuperposedOnly),
            "0" => Ok(Self::Fixed(PhiSetting::Zero)),
            "pi/2" => Ok(Self::Fixed(PhiSetting::HalfPi)),
            "pi" => Ok(Self::Fixed(PhiSetting::Pi)),
            "3pi/2" => Ok(Self::Fixed(PhiSetting::ThreeHalvesPi)),
            other => Err(QsdcError::InvalidConfig(format!("unknown phi mode '{other}'"))),
        }
    }
}

/// Where Alice's message bits come from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum MessageSource {
    /// A fresh uniformly random bit per trial.
    #[default]
    Random,
    /// Trial `i` encodes `bits[i % len]`.
    Bits(Arc<[u8]>),
}

impl MessageSource {
    pub fn bits(bits: impl Into<Vec<u8>>) -> Result<Self> {
        let bits: Vec<u8> = bits.into();
        if bits.is_empty() || bits.iter().any(|&b| b > 1) {
            return Err(QsdcError::InvalidConfig("message must be a non-empty sequence of 0/1 bits".into()));
        }
        Ok(Self::Bits(bits.into()))
    }

    fn bit<R: Rng + ?Sized>(&self, index: u64, rng: &mut R) -> u8 {
        let drawn = u8::from(rng.random_bool(0.5));
        match self {
            Self::Random => drawn,
            Self::Bits(bits) => bits[(index % bits.len() as u64) as usize],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BobPreparation {
    pub polarization: PolarizationLabel,
    pub phi: PhiSetting,
    pub analyzer_basis: PolarizationBasis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AliceEncoding {
    pub active_arm: ArmLabel,
    pub angle: WavePlateAngle,
    /// `None` for the test option.
    pub message_bit: Option<u8>,
}

impl AliceEncoding {
    pub fn for_bit(active_arm: ArmLabel, bit: u8) -> Self {
        let angle = if bit == 0 { WavePlateAngle::IDENTITY } else { WavePlateAngle::FLIP };
        Self { active_arm, angle, message_bit: Some(bit) }
    }

    pub fn test_option(active_arm: ArmLabel) -> Self {
        Self { active_arm, angle: WavePlateAngle::TEST, message_bit: None }
    }

    pub fn is_test_option(&self) -> bool {
        self.message_bit.is_none()
    }

    /// The inactive arm always gets theta = pi/2.
    pub fn unitary(&self, arm: ArmLabel) -> PolarizationUnitary {
        if arm == self.active_arm {
            message_unitary(self.angle)
        } else {
            message_unitary(WavePlateAngle::IDENTITY)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Party {
    Alice,
    Bob,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectionReason {
    /// A detector fired that the announced phi setting cannot reach.
    InvalidArm,
    /// Alice's detector reported an H/V polarization other than Bob's.
    DetectorPolarization,
    /// Unchanged-polarization check at Bob's analyzer failed.
    AnalyzerMismatch,
    /// Test-option check at Bob's analyzer failed.
    TestOptionMismatch,
    /// Analyzer outcome is neither the prepared state nor its flip.
    UndecodableOutcome,
}

/// What goes over the public channel. None of the variants can carry phi,
/// Bob's prepared label or the message bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum AnnouncementContent {
    PhotonReturned,
    DetectorClick { detector: u8, polarization: PolarizationLabel },
    ActiveArm { arm: ArmLabel },
    /// Alice used the non-message test setting this round.
    TestOption,
    EveAlert { reason: DetectionReason },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Announcement {
    pub origin: Party,
    pub content: AnnouncementContent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventClass {
    MessageDecoded,
    EveCheck,
    Discarded,
    EveDetected,
}

/// Settings to pin instead of drawing them; used for scripted rounds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrialOverrides {
    pub polarization: Option<PolarizationLabel>,
    pub phi: Option<PhiSetting>,
    pub analyzer_basis: Option<PolarizationBasis>,
    pub encoding: Option<AliceEncoding>,
}

/// Everything a single round needs besides its random streams.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub variant: ProtocolVariant,
    pub r: Reflectivity,
    pub eve: EvePolicy,
    pub phi_mode: PhiMode,
    pub message: MessageSource,
    pub overrides: TrialOverrides,
}

impl TrialSpec {
    pub fn new(variant: ProtocolVariant, r: Reflectivity, eve: impl Into<EvePolicy>) -> Self {
        Self {
            variant,
            r,
            eve: eve.into(),
            phi_mode: PhiMode::Uniform,
            message: MessageSource::Random,
            overrides: TrialOverrides::default(),
        }
    }

    pub fn with_phi_mode(mut self, mode: PhiMode) -> Self {
        self.phi_mode = mode;
        self
    }

    pub fn with_overrides(mut self, overrides: TrialOverrides) -> Self {
        self.overrides = overrides;
        self
    }

    pub fn with_message(mut self, message: MessageSource) -> Self {
        self.message = message;
        self
    }
}

/// One complete round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: u64,
    pub bob_prep: BobPreparation,
    pub alice_enc: AliceEncoding,
    pub port: OutputPort,
    /// Raw H/V outcome at Alice's detector, or Bob's analyzer outcome.
    pub detected_polarization: Option<PolarizationLabel>,
    pub announcements: Vec<Announcement>,
    pub event: EventClass,
    pub eve_detected: Option<DetectionReason>,
    pub decoded_bit: Option<u8>,
    /// The photon reached Bob on the announced arm with a message bit on it.
    pub message_encoded: bool,
    pub eve_observations: Vec<EveObservation>,
    pub eve_bit: Option<u8>,
}

impl TrialRecord {
    /// Eve holds the correct bit of a message-encoding round.
    pub fn eavesdropped(&self) -> bool {
        self.message_encoded && self.eve_bit.is_some() && self.eve_bit == self.alice_enc.message_bit
    }

    pub fn eve_verified(&self) -> bool {
        self.eve_observations.iter().any(|o| o.verified)
    }
}
