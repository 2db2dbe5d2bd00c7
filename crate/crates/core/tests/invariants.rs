//! Property-based invariants.

use num_complex::Complex64;
use proptest::prelude::*;

use qsdc_core::analytics::{
    eavesdrop_probability, event_probabilities, per_phi_event_table, supereve_probability, undetected_decomposition,
    Rational,
};
use qsdc_core::apparatus::{propagate, propagate_arms, ArmState, ReturnRouting};
use qsdc_core::optics::{message_unitary, qwp_unitary, PolarizationUnitary};
use qsdc_core::protocol::{AnnouncementContent, Party, PhiMode, ProtocolVariant};
use qsdc_core::{
    run_session, session_records, EveScenario, JonesVector, OutputPort, PhiSetting, Reflectivity, SessionConfig,
    WavePlateAngle,
};

fn jones() -> impl Strategy<Value = JonesVector> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter("non-zero", |(a, b, c, d)| a * a + b * b + c * c + d * d > 1e-3)
        .prop_map(|(a, b, c, d)| {
            JonesVector::new(Complex64::new(a, b), Complex64::new(c, d)).normalized().unwrap()
        })
}

fn angle() -> impl Strategy<Value = WavePlateAngle> {
    (-10.0f64..10.0).prop_map(|t| WavePlateAngle::new(t).unwrap())
}

fn phi() -> impl Strategy<Value = PhiSetting> {
    prop::sample::select(PhiSetting::ALL.to_vec())
}

fn reflectivity() -> impl Strategy<Value = Reflectivity> {
    (0.0f64..=1.0).prop_map(|r| Reflectivity::new(r).unwrap())
}

fn rational_r() -> impl Strategy<Value = Rational> {
    (0i128..=1000).prop_map(|k| Rational::new(k, 1000))
}

fn variant() -> impl Strategy<Value = ProtocolVariant> {
    prop::sample::select(vec![
        ProtocolVariant::Standard,
        ProtocolVariant::Modified,
        ProtocolVariant::ScheduleS1,
        ProtocolVariant::ScheduleS2,
    ])
}

fn attacker() -> impl Strategy<Value = EveScenario> {
    prop::sample::select(EveScenario::ATTACKERS.to_vec())
}

proptest! {
    #[test]
    fn wave_plates_are_unitary(t in angle()) {
        prop_assert!(qwp_unitary(t).is_unitary());
        prop_assert!(message_unitary(t).is_unitary());
    }

    #[test]
    fn message_operation_is_plate_mirror_plate(t in angle()) {
        let back = WavePlateAngle::new(-t.radians()).unwrap();
        let composed = qwp_unitary(back) * PolarizationUnitary::SIGMA_Z * qwp_unitary(t);
        prop_assert!(composed.max_abs_diff(&message_unitary(t)) < 1e-12);
    }

    #[test]
    fn apparatus_preserves_norm(phi in phi(), r in reflectivity(), input in jones(), a in angle(), b in angle()) {
        let map = propagate(phi, r, &message_unitary(a), &message_unitary(b), &input).unwrap();
        prop_assert!((map.total_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_arm_inputs_preserve_norm(r in reflectivity(), input in jones(), a in angle(), right in any::<bool>(), discard in any::<bool>()) {
        let arm = if right { qsdc_core::ArmLabel::R } else { qsdc_core::ArmLabel::L };
        let routing = if discard { ReturnRouting::Discard } else { ReturnRouting::Analyzer };
        let state = ArmState::on_arm(arm, input);
        let map = propagate_arms(&state, r, &message_unitary(a), &message_unitary(a), routing).unwrap();
        prop_assert!((map.total_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn event_probabilities_sum_to_one(r in rational_r()) {
        let e = event_probabilities(r).unwrap();
        prop_assert_eq!(e.p_message + e.p_eve_check + e.p_discard, Rational::from_integer(1));
        for p in [e.p_message, e.p_eve_check, e.p_discard] {
            prop_assert!(p >= Rational::from_integer(0) && p <= Rational::from_integer(1));
        }
    }

    #[test]
    fn per_phi_tables_sum_to_one(phi in phi(), r in rational_r()) {
        let total: Rational = per_phi_event_table(phi, r).unwrap().iter().map(|e| e.2).sum();
        prop_assert_eq!(total, Rational::from_integer(1));
    }

    #[test]
    fn message_probability_decreases(a in rational_r(), b in rational_r()) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(event_probabilities(lo).unwrap().p_message >= event_probabilities(hi).unwrap().p_message);
    }

    #[test]
    fn closed_forms_ordered_and_bounded(r in rational_r()) {
        let blind = eavesdrop_probability(EveScenario::Blind, r).unwrap();
        let phi_aware = eavesdrop_probability(EveScenario::PhiAware, r).unwrap();
        let pol_aware = eavesdrop_probability(EveScenario::PolarizationAware, r).unwrap();
        prop_assert!(blind <= phi_aware && phi_aware <= pol_aware);
        for p in [blind, phi_aware, pol_aware, supereve_probability(r).unwrap()] {
            prop_assert!(p >= Rational::from_integer(0) && p <= Rational::from_integer(1));
        }
        for s in [EveScenario::Blind, EveScenario::PhiAware, EveScenario::PolarizationAware] {
            let d = undetected_decomposition(s, r).unwrap();
            for c in [d.case_i, d.case_ii, d.case_iii] {
                prop_assert!(c >= Rational::from_integer(0) && c <= Rational::from_integer(1));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn no_false_positives(variant in variant(), r in reflectivity(), seed in any::<u64>()) {
        let cfg = SessionConfig::new(variant, r, EveScenario::None, 3000, seed);
        let s = run_session(&cfg).unwrap();
        prop_assert_eq!(s.eve_detections(), 0);
        prop_assert_eq!(s.decode_errors, 0);
    }

    #[test]
    fn announcements_leak_nothing_private(variant in variant(), eve in attacker(), r in reflectivity(), seed in any::<u64>()) {
        let cfg = SessionConfig::new(variant, r, eve, 500, seed);
        for rec in session_records(&cfg).unwrap() {
            let rec = rec.unwrap();
            let mut alerts = 0;
            for a in &rec.announcements {
                match a.content {
                    AnnouncementContent::PhotonReturned => {
                        prop_assert_eq!(a.origin, Party::Bob);
                        prop_assert_eq!(rec.port, OutputPort::ToBobAnalyzer);
                    }
                    AnnouncementContent::ActiveArm { arm } => {
                        prop_assert_eq!(a.origin, Party::Alice);
                        prop_assert_eq!(rec.port, OutputPort::ToBobAnalyzer);
                        prop_assert_eq!(arm, rec.alice_enc.active_arm);
                    }
                    AnnouncementContent::TestOption => {
                        prop_assert_eq!(a.origin, Party::Alice);
                        prop_assert!(rec.alice_enc.is_test_option());
                    }
                    AnnouncementContent::DetectorClick { detector, .. } => {
                        prop_assert_eq!(a.origin, Party::Alice);
                        prop_assert_eq!(Some(detector), rec.port.detector_number());
                    }
                    AnnouncementContent::EveAlert { reason } => {
                        prop_assert_eq!(a.origin, Party::Bob);
                        prop_assert_eq!(Some(reason), rec.eve_detected);
                        alerts += 1;
                    }
                }
            }
            prop_assert_eq!(alerts, usize::from(rec.eve_detected.is_some()));
            if rec.port == OutputPort::ToBobDiscard {
                let only_alerts = rec.announcements.iter().all(|a| matches!(a.content, AnnouncementContent::EveAlert { .. }));
                prop_assert!(only_alerts);
            }
            // Message bits leave only through Bob's own decoding.
            let json = serde_json::to_string(&rec.announcements).unwrap();
            prop_assert!(!json.contains("phi") && !json.contains("bit"));
        }
    }

    #[test]
    fn sessions_are_reproducible(variant in variant(), eve in attacker(), r in reflectivity(), seed in any::<u64>(), workers in 1usize..4) {
        let cfg = SessionConfig::new(variant, r, eve, 2000, seed);
        let a = run_session(&cfg).unwrap();
        let b = run_session(&cfg.clone().with_workers(workers)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn trials_do_not_depend_on_session_length(eve in attacker(), seed in any::<u64>(), extra in 1u64..200) {
        let short = SessionConfig::new(ProtocolVariant::Modified, Reflectivity::BALANCED, eve, 100, seed);
        let long = SessionConfig::new(ProtocolVariant::Modified, Reflectivity::BALANCED, eve, 100 + extra, seed);
        let a: Vec<_> = session_records(&short).unwrap().map(Result::unwrap).collect();
        let b: Vec<_> = session_records(&long).unwrap().take(100).map(Result::unwrap).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn legitimate_settings_ignore_the_adversary(eve in attacker(), seed in any::<u64>()) {
        let honest = SessionConfig::new(ProtocolVariant::Standard, Reflectivity::BALANCED, EveScenario::None, 200, seed)
            .with_phi_mode(PhiMode::Uniform);
        let attacked = SessionConfig::new(ProtocolVariant::Standard, Reflectivity::BALANCED, eve, 200, seed);
        let pairs = session_records(&honest).unwrap().zip(session_records(&attacked).unwrap());
        for (h, a) in pairs {
            let (h, a) = (h.unwrap(), a.unwrap());
            prop_assert_eq!(h.bob_prep, a.bob_prep);
            prop_assert_eq!(h.alice_enc, a.alice_enc);
        }
    }
}
