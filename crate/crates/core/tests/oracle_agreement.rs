//! Monte Carlo sessions against the exact enumeration in `common`.

mod common;

use common::{enumerate, z_score, Outcome};
use qsdc_core::protocol::{PhiMode, ProtocolVariant, SessionStatistics};
use qsdc_core::{run_session, EveScenario, OutputPort, PhiSetting, Reflectivity, SessionConfig};

const Z_MAX: f64 = 5.0;

fn check(label: &str, count: u64, n: u64, p: f64) {
    if p == 0.0 {
        assert_eq!(count, 0, "{label}: expected no events, saw {count}");
        return;
    }
    let z = z_score(count, n, p);
    assert!(z.abs() < Z_MAX, "{label}: observed {} vs exact {p:.6} (z = {z:.2})", count as f64 / n as f64);
}

fn compare(variant: ProtocolVariant, scenario: EveScenario, r: f64, phi_mode: PhiMode, n: u64, seed: u64) {
    let exact: Outcome = enumerate(variant, scenario, r, phi_mode);
    let cfg = SessionConfig::new(variant, Reflectivity::new(r).unwrap(), scenario, n, seed).with_phi_mode(phi_mode);
    let s: SessionStatistics = run_session(&cfg).unwrap();
    let tag = format!("{variant}/{scenario}/r={r}");
    check(&format!("{tag} message"), s.events.message_decoded, n, exact.message_decoded);
    check(&format!("{tag} check"), s.events.eve_check, n, exact.eve_check);
    check(&format!("{tag} discard"), s.events.discarded, n, exact.discarded);
    check(&format!("{tag} detected"), s.events.eve_detected, n, exact.eve_detected);
    check(&format!("{tag} decode errors"), s.decode_errors, n, exact.decode_error);
    check(&format!("{tag} encoded"), s.message_encoded, n, exact.message_encoded);
    check(&format!("{tag} eavesdropped"), s.eavesdropped_bits, n, exact.eavesdropped);
    check(&format!("{tag} test-option detections"), s.detections.test_option_mismatch, n, exact.test_option_detection);
    for phi in PhiSetting::ALL {
        for port in OutputPort::ALL {
            let p = exact.ports[phi.index()][port.index()];
            check(&format!("{tag} {phi}/{port}"), s.ports.get(phi).get(port), n, p);
        }
    }
}

#[test]
fn oracle_is_normalized() {
    for variant in [ProtocolVariant::Standard, ProtocolVariant::Modified, ProtocolVariant::ScheduleS1, ProtocolVariant::ScheduleS2] {
        for scenario in [EveScenario::None, EveScenario::Blind, EveScenario::PhiAware, EveScenario::PolarizationAware, EveScenario::SuperEve] {
            for r in [0.0, 0.3, 1.0] {
                let o = enumerate(variant, scenario, r, PhiMode::Uniform);
                let total = o.message_decoded + o.eve_check + o.discarded + o.eve_detected;
                assert!((total - 1.0).abs() < 1e-12, "{variant}/{scenario}/{r}: {total}");
                let ports: f64 = o.ports.iter().flatten().sum();
                assert!((ports - 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn standard_sessions_match_oracle() {
    for (i, scenario) in [EveScenario::None, EveScenario::Blind, EveScenario::PhiAware, EveScenario::PolarizationAware, EveScenario::SuperEve]
        .into_iter()
        .enumerate()
    {
        for (j, r) in [0.0, 0.5, 0.8].into_iter().enumerate() {
            compare(ProtocolVariant::Standard, scenario, r, PhiMode::Uniform, 200_000, 100 + (i * 10 + j) as u64);
        }
    }
}

#[test]
fn modified_sessions_match_oracle() {
    for (i, scenario) in [EveScenario::None, EveScenario::Blind, EveScenario::PolarizationAware, EveScenario::SuperEve]
        .into_iter()
        .enumerate()
    {
        for (j, r) in [0.0, 0.5].into_iter().enumerate() {
            compare(ProtocolVariant::Modified, scenario, r, PhiMode::Uniform, 200_000, 500 + (i * 10 + j) as u64);
        }
    }
}

#[test]
fn schedule_stages_match_oracle() {
    for (i, scenario) in [EveScenario::None, EveScenario::Blind, EveScenario::SuperEve].into_iter().enumerate() {
        compare(ProtocolVariant::ScheduleS1, scenario, 0.5, PhiMode::Uniform, 100_000, 900 + i as u64);
        compare(ProtocolVariant::ScheduleS2, scenario, 0.5, PhiMode::Uniform, 100_000, 950 + i as u64);
    }
}

#[test]
fn restricted_phi_modes_match_oracle() {
    compare(ProtocolVariant::Standard, EveScenario::Blind, 0.5, PhiMode::DeterministicOnly, 100_000, 31);
    compare(ProtocolVariant::Standard, EveScenario::PhiAware, 0.5, PhiMode::SuperposedOnly, 100_000, 32);
    compare(ProtocolVariant::Modified, EveScenario::None, 0.25, PhiMode::Fixed(PhiSetting::Pi), 100_000, 33);
}
