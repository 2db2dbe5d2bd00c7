use rand::Rng;

use super::{
    AliceEncoding, Announcement, AnnouncementContent, BobPreparation, DetectionReason, EventClass, Party,
    ProtocolVariant, TrialRecord, TrialSpec,
};
use crate::adversary::{eve_backward_attack, eve_forward_attack, eve_infer_bit, EveScenario, EveView};
use crate::apparatus::{propagate_arms, sample_port, ArmLabel, ArmState, OutputPort, PhiSetting, ReturnRouting};
use crate::error::Result;
use crate::optics::{measure, message_unitary, prepare_polarization, PolarizationBasis, PolarizationLabel};
use crate::rng::TrialRng;

/// What Alice and Bob jointly know once a round's announcements are in,
/// plus Bob's private settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialContext {
    pub variant: ProtocolVariant,
    pub bob_prep: BobPreparation,
    pub alice_enc: AliceEncoding,
    pub port: OutputPort,
    /// Polarization label Alice announced for a detector click.
    pub announced_polarization: Option<PolarizationLabel>,
    /// Bob's analyzer outcome.
    pub analyzer_outcome: Option<PolarizationLabel>,
}

impl TrialContext {
    fn arm_matches(&self) -> bool {
        self.bob_prep.phi.deterministic_arm() == Some(self.alice_enc.active_arm)
    }

    fn analyzer_matches_preparation(&self) -> bool {
        self.bob_prep.analyzer_basis == self.bob_prep.polarization.basis()
    }
}

/// Detectors a given phi can populate.
fn detector_valid(phi: PhiSetting, port: OutputPort) -> bool {
    !matches!(
        (phi, port),
        (PhiSetting::Zero, OutputPort::DA2)
            | (PhiSetting::Pi, OutputPort::DA1)
            | (PhiSetting::HalfPi, OutputPort::DA3)
            | (PhiSetting::ThreeHalvesPi, OutputPort::DA4)
    )
}

pub fn classify_event(ctx: &TrialContext) -> EventClass {
    let phi = ctx.bob_prep.phi;
    match ctx.port {
        OutputPort::ToBobDiscard if !phi.is_deterministic() => EventClass::Discarded,
        OutputPort::ToBobAnalyzer if phi.is_deterministic() => {
            let basis_ok = ctx.analyzer_matches_preparation();
            let usable = match (ctx.arm_matches(), ctx.alice_enc.is_test_option()) {
                (true, false) => basis_ok,
                // The test option is only informative across bases.
                (true, true) => !basis_ok,
                (false, _) => basis_ok,
            };
            match (usable, ctx.arm_matches() && !ctx.alice_enc.is_test_option()) {
                (false, _) => EventClass::Discarded,
                (true, true) => EventClass::MessageDecoded,
                (true, false) => EventClass::EveCheck,
            }
        }
        OutputPort::ToBobAnalyzer | OutputPort::ToBobDiscard => EventClass::EveDetected,
        port if !detector_valid(phi, port) => EventClass::EveDetected,
        port => {
            let used = if phi.is_deterministic() {
                port != OutputPort::DA4
            } else {
                port != OutputPort::DA2
            };
            if used {
                EventClass::EveCheck
            } else {
                EventClass::Discarded
            }
        }
    }
}

/// Bit from Bob's analyzer outcome: 0 if unchanged, 1 if flipped.
pub fn decode_message(prepared: PolarizationLabel, outcome: PolarizationLabel) -> std::result::Result<u8, DetectionReason> {
    if outcome == prepared {
        Ok(0)
    } else if outcome == prepared.flipped() {
        Ok(1)
    } else {
        Err(DetectionReason::UndecodableOutcome)
    }
}

pub fn check_eve_detection(ctx: &TrialContext) -> Option<DetectionReason> {
    let prep = ctx.bob_prep.polarization;
    match classify_event(ctx) {
        EventClass::EveDetected => Some(DetectionReason::InvalidArm),
        EventClass::Discarded => None,
        EventClass::MessageDecoded => {
            let outcome = ctx.analyzer_outcome?;
            decode_message(prep, outcome).err()
        }
        EventClass::EveCheck => match ctx.port {
            OutputPort::ToBobAnalyzer => {
                let outcome = ctx.analyzer_outcome?;
                if ctx.arm_matches() {
                    let expected = message_unitary(ctx.alice_enc.angle)
                        .apply(&prepare_polarization(prep))
                        .exact_label();
                    (expected != Some(outcome)).then_some(DetectionReason::TestOptionMismatch)
                } else {
                    (outcome != prep).then_some(DetectionReason::AnalyzerMismatch)
                }
            }
            _ => {
                // Alice's detectors are H/V only, so only H/V preparations
                // are checkable, and only against an H/V presumption.
                let announced = ctx.announced_polarization?;
                let checkable = prep.basis() == PolarizationBasis::HV && announced.basis() == PolarizationBasis::HV;
                (checkable && announced != prep).then_some(DetectionReason::DetectorPolarization)
            }
        },
    }
}

fn draw_preparation<R: Rng + ?Sized>(spec: &TrialSpec, rng: &mut R) -> BobPreparation {
    let polarization = PolarizationLabel::ALL[rng.random_range(0..4)];
    let phi = spec.phi_mode.draw(rng);
    let random_basis = PolarizationBasis::random(rng);
    let o = &spec.overrides;
    let polarization = o.polarization.unwrap_or(polarization);
    let analyzer_basis = if spec.variant.random_analyzer() {
        random_basis
    } else {
        polarization.basis()
    };
    BobPreparation {
        polarization,
        phi: o.phi.unwrap_or(phi),
        analyzer_basis: o.analyzer_basis.unwrap_or(analyzer_basis),
    }
}

fn draw_encoding<R: Rng + ?Sized>(spec: &TrialSpec, index: u64, rng: &mut R) -> AliceEncoding {
    let arm = if rng.random_bool(0.5) { ArmLabel::L } else { ArmLabel::R };
    let option = rng.random_range(0..3u8);
    let bit = spec.message.bit(index, rng);
    let enc = match spec.variant {
        ProtocolVariant::Standard | ProtocolVariant::ScheduleS1 => AliceEncoding::for_bit(arm, bit),
        ProtocolVariant::Modified if option == 2 => AliceEncoding::test_option(arm),
        ProtocolVariant::Modified => AliceEncoding::for_bit(arm, bit),
        ProtocolVariant::ScheduleS2 => AliceEncoding::test_option(arm),
    };
    spec.overrides.encoding.unwrap_or(enc)
}

/// Runs one round: Bob prepares, Eve may attack on the way in, the photon
/// lands somewhere, Eve may attack on the way out, announcements are made
/// and the round is classified.
pub fn run_trial(spec: &TrialSpec, index: u64, rng: &mut TrialRng) -> Result<TrialRecord> {
    let bob_prep = draw_preparation(spec, &mut rng.settings);
    let alice_enc = draw_encoding(spec, index, &mut rng.settings);
    let r = spec.variant.effective_reflectivity(spec.r);
    let scenario = spec.eve.scenario;
    let view = EveView::new(scenario, bob_prep.polarization, bob_prep.phi);

    let mut observations = Vec::new();
    let mut announcements = Vec::with_capacity(3);

    let incoming = ArmState::from_split(bob_prep.phi, &prepare_polarization(bob_prep.polarization));
    let (incoming, forward) = eve_forward_attack(&spec.eve, &view, &incoming, &mut rng.eve)?;
    observations.extend(forward);

    let map = propagate_arms(
        &incoming,
        r,
        &alice_enc.unitary(ArmLabel::R),
        &alice_enc.unitary(ArmLabel::L),
        ReturnRouting::for_phi(bob_prep.phi),
    )?;
    let sample = sample_port(&map, &mut rng.apparatus)?;

    let mut detected = None;
    let mut announced = None;
    let mut analyzer_outcome = None;
    let mut backward = None;

    match sample.port {
        OutputPort::ToBobAnalyzer => {
            let arm = sample.arm.unwrap_or(alice_enc.active_arm);
            let (returning, obs) =
                eve_backward_attack(&spec.eve, &view, forward.as_ref(), arm, &sample.polarization, &mut rng.eve)?;
            backward = obs;
            let outcome = measure(&returning, bob_prep.analyzer_basis, &mut rng.apparatus)?;
            detected = Some(outcome);
            analyzer_outcome = Some(outcome);
            announcements.push(Announcement { origin: Party::Bob, content: AnnouncementContent::PhotonReturned });
            announcements.push(Announcement {
                origin: Party::Alice,
                content: AnnouncementContent::ActiveArm { arm: alice_enc.active_arm },
            });
            if alice_enc.is_test_option() {
                announcements.push(Announcement { origin: Party::Alice, content: AnnouncementContent::TestOption });
            }
        }
        OutputPort::ToBobDiscard => {}
        port => {
            let outcome = measure(&sample.polarization, PolarizationBasis::HV, &mut rng.apparatus)?;
            detected = Some(outcome);
            // Behind the message operation Alice undoes her own unitary to
            // presume what arrived.
            let label = match port {
                OutputPort::DA1 | OutputPort::DA2 => {
                    let arm = if port == OutputPort::DA1 { ArmLabel::R } else { ArmLabel::L };
                    alice_enc.unitary(arm).dagger().apply(&prepare_polarization(outcome)).nearest_label()
                }
                _ => outcome,
            };
            announced = Some(label);
            announcements.push(Announcement {
                origin: Party::Alice,
                content: AnnouncementContent::DetectorClick {
                    detector: port.detector_number().unwrap_or(0),
                    polarization: label,
                },
            });
        }
    }

    let ctx = TrialContext {
        variant: spec.variant,
        bob_prep,
        alice_enc,
        port: sample.port,
        announced_polarization: announced,
        analyzer_outcome,
    };
    let class = classify_event(&ctx);
    let eve_detected = check_eve_detection(&ctx);
    let event = if eve_detected.is_some() { EventClass::EveDetected } else { class };
    if let Some(reason) = eve_detected {
        announcements.push(Announcement { origin: Party::Bob, content: AnnouncementContent::EveAlert { reason } });
    }
    let decoded_bit = match (event, analyzer_outcome) {
        (EventClass::MessageDecoded, Some(outcome)) => decode_message(bob_prep.polarization, outcome).ok(),
        _ => None,
    };

    let message_encoded = sample.port == OutputPort::ToBobAnalyzer && ctx.arm_matches() && !alice_enc.is_test_option();
    let eve_bit = eve_infer_bit(
        forward.as_ref(),
        backward.as_ref(),
        scenario,
        bob_prep.polarization.basis(),
        message_encoded,
    );
    if let Some(mut b) = backward {
        b.inferred_bit = eve_bit;
        b.verified = eve_bit.is_some() && scenario == EveScenario::SuperEve;
        observations.push(b);
    }

    Ok(TrialRecord {
        index,
        bob_prep,
        alice_enc,
        port: sample.port,
        detected_polarization: detected,
        announcements,
        event,
        eve_detected,
        decoded_bit,
        message_encoded,
        eve_observations: observations,
        eve_bit,
    })
}
