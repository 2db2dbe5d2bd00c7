//! Exact enumeration of a round's outcome tree, written against plain
//! label algebra instead of Jones vectors. Used as the reference the Monte
//! Carlo sessions are checked against.
#![allow(dead_code)]

use qsdc_core::protocol::{PhiMode, ProtocolVariant};
use qsdc_core::{EveScenario, OutputPort, PhiSetting, PolarizationBasis as B, PolarizationLabel as P};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Id,
    Flip,
    Test,
}

impl Op {
    /// Image of a label, up to phase.
    pub fn apply(self, p: P) -> P {
        match self {
            Op::Id => p,
            Op::Flip => p.flipped(),
            Op::Test => match p {
                P::H => P::A,
                P::V => P::D,
                P::D => P::H,
                P::A => P::V,
            },
        }
    }

    pub fn inverse(self, p: P) -> P {
        P::ALL.into_iter().find(|&x| self.apply(x) == p).unwrap()
    }
}

/// Outcome distribution of measuring `p` in basis `b`.
fn measure(p: P, b: B) -> Vec<(P, f64)> {
    if p.basis() == b {
        vec![(p, 1.0)]
    } else {
        b.outcomes().into_iter().map(|o| (o, 0.5)).collect()
    }
}

fn bases() -> [(B, f64); 2] {
    [(B::HV, 0.5), (B::DA, 0.5)]
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Outcome {
    pub message_decoded: f64,
    pub eve_check: f64,
    pub discarded: f64,
    pub eve_detected: f64,
    pub decode_error: f64,
    pub message_encoded: f64,
    pub eavesdropped: f64,
    /// Per phi (ALL order) and port (ALL order), unconditional.
    pub ports: [[f64; 6]; 4],
    /// Detection with an eigenstate check that involves the test option.
    pub test_option_detection: f64,
}

/// Polarization arriving at Bob, Eve's backward basis and outcome, weight.
type Backward = (P, Option<(B, P)>, f64);

#[derive(Clone, Copy)]
enum Class {
    Msg,
    Check,
    Disc,
}

struct Round {
    variant: ProtocolVariant,
    scenario: EveScenario,
    r: f64,
}

#[derive(Clone, Copy)]
struct Setting {
    pol: P,
    phi: PhiSetting,
    analyzer: B,
    /// true = right arm active.
    active_right: bool,
    op: Op,
    bit: Option<u8>,
}

impl Round {
    fn eve_attacks(&self, phi: PhiSetting) -> bool {
        self.scenario.is_present() && (!self.scenario.knows_phi() || phi.is_deterministic())
    }

    fn eve_basis(&self, s: &Setting) -> Vec<(B, f64)> {
        if self.scenario.knows_polarization() {
            vec![(s.pol.basis(), 1.0)]
        } else {
            bases().to_vec()
        }
    }

    fn op_on(&self, s: &Setting, right: bool) -> Op {
        if right == s.active_right { s.op } else { Op::Id }
    }

    fn accumulate(&self, s: &Setting, w: f64, out: &mut Outcome) {
        let r = self.r;
        if !self.eve_attacks(s.phi) {
            if s.phi.is_deterministic() {
                self.single_arm(s, s.phi == PhiSetting::Zero, s.pol, None, w, out);
            } else {
                // Coherent superposition reaching Alice untouched.
                let bs3 = if s.phi == PhiSetting::HalfPi { OutputPort::DA4 } else { OutputPort::DA3 };
                self.port(s, OutputPort::ToBobDiscard, w * (1.0 - r) * (1.0 - r), Class::Disc, out);
                self.port(s, bs3, w * r, Class::Check, out);
                for (port, right) in [(OutputPort::DA1, true), (OutputPort::DA2, false)] {
                    let pol = self.op_on(s, right).apply(s.pol);
                    for (o, p) in measure(pol, B::HV) {
                        let announced = self.op_on(s, right).inverse(o);
                        self.detector(s, port, announced, w * r * (1.0 - r) / 2.0 * p, out);
                    }
                }
            }
            return;
        }
        let arms: Vec<(bool, f64)> = match s.phi {
            PhiSetting::Zero => vec![(true, 1.0)],
            PhiSetting::Pi => vec![(false, 1.0)],
            _ => vec![(true, 0.5), (false, 0.5)],
        };
        for (right, pa) in arms {
            for (eb, pb) in self.eve_basis(s) {
                for (o, po) in measure(s.pol, eb) {
                    self.single_arm(s, right, o, Some(eb), w * pa * pb * po, out);
                }
            }
        }
    }

    /// Photon with definite polarization `pol` on one arm. `fwd_basis` is
    /// Eve's forward basis when she intercepted.
    fn single_arm(&self, s: &Setting, right: bool, pol: P, fwd_basis: Option<B>, w: f64, out: &mut Outcome) {
        let r = self.r;
        let op = self.op_on(s, right);
        let after = op.apply(pol);
        // BS3 detectors see the unmodified photon, half each.
        for bs3 in [OutputPort::DA3, OutputPort::DA4] {
            for (o, p) in measure(pol, B::HV) {
                self.detector(s, bs3, o, w * r / 2.0 * p, out);
            }
        }
        let own = if right { OutputPort::DA1 } else { OutputPort::DA2 };
        for (o, p) in measure(after, B::HV) {
            self.detector(s, own, op.inverse(o), w * r * (1.0 - r) * p, out);
        }
        let wr = w * (1.0 - r) * (1.0 - r);
        if !s.phi.is_deterministic() {
            self.port(s, OutputPort::ToBobDiscard, wr, Class::Disc, out);
            return;
        }
        let arm_ok = right == s.active_right && (s.phi == PhiSetting::Zero) == right;
        let message = arm_ok && s.bit.is_some();
        if message {
            out.message_encoded += wr;
        }
        let backs: Vec<Backward> = match fwd_basis {
            None => vec![(after, None, 1.0)],
            Some(fb) => {
                let bb = if self.scenario.knows_polarization() { s.pol.basis() } else { fb };
                measure(after, bb).into_iter().map(|(o, p)| (o, Some((bb, o)), p)).collect()
            }
        };
        for (arriving, back, pb) in backs {
            for (bob, pm) in measure(arriving, s.analyzer) {
                let wt = wr * pb * pm;
                self.analyzer(s, arm_ok, bob, wt, out);
                if let (true, Some(fb), Some((bb, bo))) = (message, fwd_basis, back) {
                    let credited = pol.basis() == bb && (self.scenario.knows_polarization() || fb == s.pol.basis());
                    if credited && u8::from(pol != bo) == s.bit.unwrap() {
                        out.eavesdropped += wt;
                    }
                }
            }
        }
    }

    fn analyzer(&self, s: &Setting, arm_ok: bool, bob: P, w: f64, out: &mut Outcome) {
        let same_basis = s.analyzer == s.pol.basis();
        let test = s.bit.is_none();
        let port = OutputPort::ToBobAnalyzer;
        if arm_ok && !test {
            if !same_basis {
                return self.port(s, port, w, Class::Disc, out);
            }
            if bob == s.pol || bob == s.pol.flipped() {
                if u8::from(bob != s.pol) != s.bit.unwrap() {
                    out.decode_error += w;
                }
                self.port(s, port, w, Class::Msg, out);
            } else {
                self.detect(s, port, w, out);
            }
        } else if arm_ok {
            if same_basis {
                return self.port(s, port, w, Class::Disc, out);
            }
            if bob == Op::Test.apply(s.pol) {
                self.port(s, port, w, Class::Check, out);
            } else {
                out.test_option_detection += w;
                self.detect(s, port, w, out);
            }
        } else if !same_basis {
            self.port(s, port, w, Class::Disc, out);
        } else if bob == s.pol {
            self.port(s, port, w, Class::Check, out);
        } else {
            self.detect(s, port, w, out);
        }
    }

    fn detector(&self, s: &Setting, port: OutputPort, announced: P, w: f64, out: &mut Outcome) {
        let valid = !matches!(
            (s.phi, port),
            (PhiSetting::Zero, OutputPort::DA2)
                | (PhiSetting::Pi, OutputPort::DA1)
                | (PhiSetting::HalfPi, OutputPort::DA3)
                | (PhiSetting::ThreeHalvesPi, OutputPort::DA4)
        );
        if !valid {
            return self.detect(s, port, w, out);
        }
        let unused = if s.phi.is_deterministic() { OutputPort::DA4 } else { OutputPort::DA2 };
        if port == unused {
            return self.port(s, port, w, Class::Disc, out);
        }
        if s.pol.basis() == B::HV && announced.basis() == B::HV && announced != s.pol {
            self.detect(s, port, w, out);
        } else {
            self.port(s, port, w, Class::Check, out);
        }
    }

    fn port(&self, s: &Setting, port: OutputPort, w: f64, class: Class, out: &mut Outcome) {
        out.ports[s.phi.index()][port.index()] += w;
        match class {
            Class::Msg => out.message_decoded += w,
            Class::Check => out.eve_check += w,
            Class::Disc => out.discarded += w,
        }
    }

    fn detect(&self, s: &Setting, port: OutputPort, w: f64, out: &mut Outcome) {
        out.ports[s.phi.index()][port.index()] += w;
        out.eve_detected += w;
    }
}

/// Exact per-round probabilities for a configuration.
pub fn enumerate(variant: ProtocolVariant, scenario: EveScenario, r: f64, phi_mode: PhiMode) -> Outcome {
    let r = match variant {
        ProtocolVariant::ScheduleS1 => 1.0,
        ProtocolVariant::ScheduleS2 => 0.0,
        _ => r,
    };
    let round = Round { variant, scenario, r };
    let phis = phi_mode.settings();
    let ops: Vec<(Op, Option<u8>, f64)> = match variant {
        ProtocolVariant::Standard | ProtocolVariant::ScheduleS1 => vec![(Op::Id, Some(0), 0.5), (Op::Flip, Some(1), 0.5)],
        ProtocolVariant::Modified => {
            let t = 1.0 / 3.0;
            vec![(Op::Id, Some(0), t), (Op::Flip, Some(1), t), (Op::Test, None, t)]
        }
        ProtocolVariant::ScheduleS2 => vec![(Op::Test, None, 1.0)],
    };
    let random_analyzer = matches!(variant, ProtocolVariant::Modified | ProtocolVariant::ScheduleS2);
    let mut out = Outcome::default();
    for pol in P::ALL {
        for &phi in &phis {
            let analyzers: Vec<(B, f64)> = if random_analyzer { bases().to_vec() } else { vec![(pol.basis(), 1.0)] };
            for (analyzer, pa) in analyzers {
                for active_right in [true, false] {
                    for &(op, bit, po) in &ops {
                        let s = Setting { pol, phi, analyzer, active_right, op, bit };
                        let w = 0.25 / phis.len() as f64 * pa * 0.5 * po;
                        round.accumulate(&s, w, &mut out);
                    }
                }
            }
        }
    }
    out
}

/// Binomial z-score of `count` successes in `n` against probability `p`.
pub fn z_score(count: u64, n: u64, p: f64) -> f64 {
    let n = n as f64;
    let sd = (n * p * (1.0 - p)).sqrt();
    let diff = count as f64 - n * p;
    if sd == 0.0 {
        if diff == 0.0 { 0.0 } else { f64::INFINITY }
    } else {
        diff / sd
    }
}
