//! Intercept-resend eavesdroppers on the arms between Bob's T-BS and Alice.
//!
//! Eve sits on both arms and can measure the photon on its way to Alice
//! (forward) and on its way back to Bob (backward). Which of Bob's settings
//! she may read is fixed by her [`EveScenario`]; the attack code only ever
//! sees an [`EveView`] built from those flags.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::apparatus::{ArmLabel, ArmState, PhiSetting};
use crate::error::{QsdcError, Result};
use crate::optics::{measure, prepare_polarization, JonesVector, PolarizationBasis, PolarizationLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EveScenario {
    None,
    /// Knows nothing about Bob's preparation.
    Blind,
    /// Reads Bob's phi setting.
    PhiAware,
    /// Reads Bob's prepared polarization.
    PolarizationAware,
    /// Reads both.
    SuperEve,
}

impl EveScenario {
    pub const ATTACKERS: [EveScenario; 4] =
        [Self::Blind, Self::PhiAware, Self::PolarizationAware, Self::SuperEve];

    pub fn knows_polarization(self) -> bool {
        matches!(self, Self::PolarizationAware | Self::SuperEve)
    }

    pub fn knows_phi(self) -> bool {
        matches!(self, Self::PhiAware | Self::SuperEve)
    }

    pub fn is_present(self) -> bool {
        self != Self::None
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Blind => "blind",
            Self::PhiAware => "phi-aware",
            Self::PolarizationAware => "pol-aware",
            Self::SuperEve => "super",
        }
    }
}

impl fmt::Display for EveScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EveScenario {
    type Err = QsdcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "blind" => Ok(Self::Blind),
            "phi-aware" => Ok(Self::PhiAware),
            "pol-aware" | "polarization-aware" => Ok(Self::PolarizationAware),
            "super" | "super-eve" => Ok(Self::SuperEve),
            other => Err(QsdcError::InvalidConfig(format!("unknown eavesdropper '{other}'"))),
        }
    }
}

/// Polarization Eve forwards after measuring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResendRule {
    /// The eigenstate she just projected onto.
    #[default]
    Eigenstate,
    /// A uniformly random one of H, V, D, A.
    RandomPolarization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvePolicy {
    pub scenario: EveScenario,
    #[serde(default)]
    pub resend: ResendRule,
}

impl EvePolicy {
    pub const NONE: EvePolicy = EvePolicy { scenario: EveScenario::None, resend: ResendRule::Eigenstate };

    pub fn new(scenario: EveScenario) -> Self {
        Self { scenario, resend: ResendRule::Eigenstate }
    }

    pub fn with_resend(mut self, resend: ResendRule) -> Self {
        self.resend = resend;
        self
    }

    /// Eve attacks every trial except superposed ones she can recognize.
    pub fn attacks(&self, view: &EveView) -> bool {
        match self.scenario {
            EveScenario::None => false,
            _ => view.phi.is_none_or(|phi| phi.is_deterministic()),
        }
    }

    fn basis<R: Rng + ?Sized>(&self, view: &EveView, fallback: Option<PolarizationBasis>, rng: &mut R) -> PolarizationBasis {
        view.bob_basis.or(fallback).unwrap_or_else(|| PolarizationBasis::random(rng))
    }

    fn resend<R: Rng + ?Sized>(&self, outcome: PolarizationLabel, rng: &mut R) -> PolarizationLabel {
        match self.resend {
            ResendRule::Eigenstate => outcome,
            ResendRule::RandomPolarization => PolarizationLabel::ALL[rng.random_range(0..4)],
        }
    }
}

impl From<EveScenario> for EvePolicy {
    fn from(s: EveScenario) -> Self {
        Self::new(s)
    }
}

/// The parts of Bob's preparation Eve is allowed to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EveView {
    pub bob_basis: Option<PolarizationBasis>,
    pub phi: Option<PhiSetting>,
}

impl EveView {
    pub fn new(scenario: EveScenario, polarization: PolarizationLabel, phi: PhiSetting) -> Self {
        Self {
            bob_basis: scenario.knows_polarization().then(|| polarization.basis()),
            phi: scenario.knows_phi().then_some(phi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Segment {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EveObservation {
    pub segment: Segment,
    pub arm: ArmLabel,
    pub basis: PolarizationBasis,
    pub outcome: PolarizationLabel,
    pub resent: PolarizationLabel,
    pub inferred_bit: Option<u8>,
    pub verified: bool,
}

fn intercept<R: Rng + ?Sized>(
    policy: &EvePolicy,
    segment: Segment,
    arm: ArmLabel,
    polarization: &JonesVector,
    basis: PolarizationBasis,
    rng: &mut R,
) -> Result<EveObservation> {
    let outcome = measure(polarization, basis, rng)?;
    Ok(EveObservation {
        segment,
        arm,
        basis,
        outcome,
        resent: policy.resend(outcome, rng),
        inferred_bit: None,
        verified: false,
    })
}

/// Bob -> Alice attack. Detecting the photon on one arm destroys any path
/// superposition; the resent photon travels on the arm where it was found.
pub fn eve_forward_attack<R: Rng + ?Sized>(
    policy: &EvePolicy,
    view: &EveView,
    state: &ArmState,
    rng: &mut R,
) -> Result<(ArmState, Option<EveObservation>)> {
    if !policy.attacks(view) {
        return Ok((*state, None));
    }
    let total = state.norm_sqr();
    let arm = if rng.random::<f64>() * total < state.arm_probability(ArmLabel::R) {
        ArmLabel::R
    } else {
        ArmLabel::L
    };
    let polarization = state.arm(arm).normalized()?;
    let basis = policy.basis(view, None, rng);
    let obs = intercept(policy, Segment::Forward, arm, &polarization, basis, rng)?;
    let resent = ArmState::on_arm(arm, prepare_polarization(obs.resent));
    Ok((resent, Some(obs)))
}

/// Alice -> Bob attack on a photon heading for Bob's analyzer. Without
/// knowledge of Bob's basis Eve reuses her forward basis.
pub fn eve_backward_attack<R: Rng + ?Sized>(
    policy: &EvePolicy,
    view: &EveView,
    forward: Option<&EveObservation>,
    arm: ArmLabel,
    state: &JonesVector,
    rng: &mut R,
) -> Result<(JonesVector, Option<EveObservation>)> {
    if !policy.attacks(view) {
        return Ok((*state, None));
    }
    let basis = policy.basis(view, forward.map(|o| o.basis), rng);
    let obs = intercept(policy, Segment::Backward, arm, state, basis, rng)?;
    Ok((prepare_polarization(obs.resent), Some(obs)))
}

/// Scores Eve's bit for one trial.
///
/// She reads the flip between the photon she resent forward and what she
/// measured coming back, which requires both in one basis on a
/// message-carrying round. Eavesdroppers who cannot read Bob's polarization
/// are only credited when their forward basis happened to match Bob's.
pub fn eve_infer_bit(
    forward: Option<&EveObservation>,
    backward: Option<&EveObservation>,
    scenario: EveScenario,
    bob_basis: PolarizationBasis,
    message_path: bool,
) -> Option<u8> {
    let (fwd, bwd) = (forward?, backward?);
    if !message_path || fwd.resent.basis() != bwd.basis {
        return None;
    }
    if !scenario.knows_polarization() && fwd.basis != bob_basis {
        return None;
    }
    Some(u8::from(fwd.resent != bwd.outcome))
}
