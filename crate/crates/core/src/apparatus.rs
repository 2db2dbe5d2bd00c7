//! The two-arm mode network between Bob's tunable beam-splitter and Alice.
//!
//! A photon leaves the T-BS on the right arm, the left arm, or a coherent
//! superposition of both. On each arm it meets a beam-splitter of
//! reflectivity `r`: the transmitted part visits Alice's wave-plate/mirror
//! module and comes back, the reflected part goes to the shared BS3 that
//! feeds D_A3/D_A4. On the way back the arm beam-splitter again either
//! transmits toward Bob or reflects into D_A1 (right) / D_A2 (left).
//!
//! Per unit amplitude on one arm the output modes are
//!
//! ```text
//! right:  (1-r) U_R psi -> return     sqrt(r(1-r)) U_R psi -> D_A1
//!         sqrt(r/2) psi -> D_A3       -sqrt(r/2) psi       -> D_A4
//! left:  -(1-r) U_L psi -> return     sqrt(r(1-r)) U_L psi -> D_A2
//!        -sqrt(r/2) psi -> D_A3       -sqrt(r/2) psi       -> D_A4
//! ```
//!
//! and every input is a linear combination of the two arms.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QsdcError, Result};
use crate::optics::{JonesVector, PolarizationUnitary, ALGEBRA_TOL};

/// Total-weight slack tolerated by [`sample_port`].
pub const SAMPLING_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArmLabel {
    R,
    L,
}

impl ArmLabel {
    pub fn other(self) -> Self {
        match self {
            Self::R => Self::L,
            Self::L => Self::R,
        }
    }
}

impl fmt::Display for ArmLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::R => "R",
            Self::L => "L",
        })
    }
}

/// Phase of Bob's tunable beam-splitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhiSetting {
    /// phi = 0: deterministic, right arm.
    Zero,
    /// phi = pi/2: (R + L)/sqrt2.
    HalfPi,
    /// phi = pi: deterministic, left arm.
    Pi,
    /// phi = 3pi/2: (R - L)/sqrt2.
    ThreeHalvesPi,
}

impl PhiSetting {
    pub const ALL: [PhiSetting; 4] = [Self::Zero, Self::HalfPi, Self::Pi, Self::ThreeHalvesPi];
    pub const DETERMINISTIC: [PhiSetting; 2] = [Self::Zero, Self::Pi];
    pub const SUPERPOSED: [PhiSetting; 2] = [Self::HalfPi, Self::ThreeHalvesPi];

    pub fn from_radians(phi: f64) -> Result<Self> {
        const EPS: f64 = 1e-9;
        Self::ALL
            .into_iter()
            .find(|p| (p.radians() - phi).abs() < EPS)
            .ok_or(QsdcError::InvalidPhi(phi))
    }

    pub fn radians(self) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::HalfPi => FRAC_PI_2,
            Self::Pi => PI,
            Self::ThreeHalvesPi => 3.0 * FRAC_PI_2,
        }
    }

    pub fn is_deterministic(self) -> bool {
        matches!(self, Self::Zero | Self::Pi)
    }

    /// Arm taken on a deterministic setting.
    pub fn deterministic_arm(self) -> Option<ArmLabel> {
        match self {
            Self::Zero => Some(ArmLabel::R),
            Self::Pi => Some(ArmLabel::L),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for PhiSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Zero => "0",
            Self::HalfPi => "pi/2",
            Self::Pi => "pi",
            Self::ThreeHalvesPi => "3pi/2",
        })
    }
}

/// Reflectivity shared by Alice's arm beam-splitters BS1 and BS2.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Reflectivity(f64);

impl Reflectivity {
    pub const TRANSPARENT: Reflectivity = Reflectivity(0.0);
    pub const MIRROR: Reflectivity = Reflectivity(1.0);
    pub const BALANCED: Reflectivity = Reflectivity(0.5);

    pub fn new(r: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&r) {
            Ok(Self(r))
        } else {
            Err(QsdcError::ReflectivityOutOfRange(r))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn transmittance(self) -> f64 {
        1.0 - self.0
    }
}

impl TryFrom<f64> for Reflectivity {
    type Error = QsdcError;
    fn try_from(r: f64) -> Result<Self> {
        Self::new(r)
    }
}

impl From<Reflectivity> for f64 {
    fn from(r: Reflectivity) -> f64 {
        r.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OutputPort {
    ToBobAnalyzer,
    ToBobDiscard,
    DA1,
    DA2,
    DA3,
    DA4,
}

impl OutputPort {
    pub const ALL: [OutputPort; 6] =
        [Self::ToBobAnalyzer, Self::ToBobDiscard, Self::DA1, Self::DA2, Self::DA3, Self::DA4];

    /// Alice's detector number, 1..=4.
    pub fn detector_number(self) -> Option<u8> {
        match self {
            Self::DA1 => Some(1),
            Self::DA2 => Some(2),
            Self::DA3 => Some(3),
            Self::DA4 => Some(4),
            _ => None,
        }
    }

    pub fn from_detector_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Self::DA1),
            2 => Some(Self::DA2),
            3 => Some(Self::DA3),
            4 => Some(Self::DA4),
            _ => None,
        }
    }

    /// D_A1/D_A2 sit behind the message operation; D_A3/D_A4 before it.
    pub fn carries_message_operation(self) -> bool {
        matches!(self, Self::DA1 | Self::DA2)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for OutputPort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ToBobAnalyzer => "to-bob-analyzer",
            Self::ToBobDiscard => "to-bob-discard",
            Self::DA1 => "D_A1",
            Self::DA2 => "D_A2",
            Self::DA3 => "D_A3",
            Self::DA4 => "D_A4",
        })
    }
}

/// T-BS output amplitudes (right, left) for each phase setting.
pub fn tbs_split(phi: PhiSetting) -> (f64, f64) {
    let k = FRAC_1_SQRT_2;
    match phi {
        PhiSetting::Zero => (1.0, 0.0),
        PhiSetting::HalfPi => (k, k),
        PhiSetting::Pi => (0.0, 1.0),
        PhiSetting::ThreeHalvesPi => (k, -k),
    }
}

/// Photon state between the T-BS and Alice: one polarization amplitude per
/// arm. The squared norms of the two parts are the which-arm probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmState {
    pub right: JonesVector,
    pub left: JonesVector,
}

impl ArmState {
    pub fn from_split(phi: PhiSetting, input: &JonesVector) -> Self {
        let (r, l) = tbs_split(phi);
        Self { right: input.scale_real(r), left: input.scale_real(l) }
    }

    /// The photon localized on one arm with the given polarization.
    pub fn on_arm(arm: ArmLabel, polarization: JonesVector) -> Self {
        match arm {
            ArmLabel::R => Self { right: polarization, left: JonesVector::ZERO },
            ArmLabel::L => Self { right: JonesVector::ZERO, left: polarization },
        }
    }

    pub fn arm(&self, arm: ArmLabel) -> &JonesVector {
        match arm {
            ArmLabel::R => &self.right,
            ArmLabel::L => &self.left,
        }
    }

    pub fn arm_probability(&self, arm: ArmLabel) -> f64 {
        self.arm(arm).norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.right.norm_sqr() + self.left.norm_sqr()
    }
}

/// Where the returning photon ends up on Bob's side. Bob's analyzer only
/// receives it on deterministic settings; the superposed return is dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReturnRouting {
    Analyzer,
    Discard,
}

impl ReturnRouting {
    pub fn for_phi(phi: PhiSetting) -> Self {
        if phi.is_deterministic() {
            Self::Analyzer
        } else {
            Self::Discard
        }
    }

    pub fn port(self) -> OutputPort {
        match self {
            Self::Analyzer => OutputPort::ToBobAnalyzer,
            Self::Discard => OutputPort::ToBobDiscard,
        }
    }
}

/// Amplitudes on every output of the apparatus.
///
/// The returning photon keeps one mode per arm: the two return modes are
/// spatially distinct, so their weights add incoherently even when both
/// land on the same Bob-side port.
#[derive(Debug, Clone, PartialEq)]
pub struct PortAmplitudeMap {
    routing: ReturnRouting,
    return_right: JonesVector,
    return_left: JonesVector,
    detectors: [JonesVector; 4],
}

/// One outcome drawn from a [`PortAmplitudeMap`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortSample {
    pub port: OutputPort,
    /// Arm the returning photon travels on; `None` for Alice's detectors.
    pub arm: Option<ArmLabel>,
    pub polarization: JonesVector,
}

impl PortAmplitudeMap {
    pub fn routing(&self) -> ReturnRouting {
        self.routing
    }

    /// Branches as (port, arm, amplitude), including zero-weight ones.
    pub fn branches(&self) -> [(OutputPort, Option<ArmLabel>, JonesVector); 6] {
        let ret = self.routing.port();
        [
            (ret, Some(ArmLabel::R), self.return_right),
            (ret, Some(ArmLabel::L), self.return_left),
            (OutputPort::DA1, None, self.detectors[0]),
            (OutputPort::DA2, None, self.detectors[1]),
            (OutputPort::DA3, None, self.detectors[2]),
            (OutputPort::DA4, None, self.detectors[3]),
        ]
    }

    pub fn weight(&self, port: OutputPort) -> f64 {
        self.branches()
            .iter()
            .filter(|(p, _, _)| *p == port)
            .map(|(_, _, a)| a.norm_sqr())
            .sum()
    }

    /// Coherent amplitude at a port. For a return port fed by both arms
    /// this is only meaningful when one of the arms is empty.
    pub fn amplitude(&self, port: OutputPort) -> JonesVector {
        self.branches()
            .iter()
            .filter(|(p, _, _)| *p == port)
            .fold(JonesVector::ZERO, |acc, (_, _, a)| acc.add(a))
    }

    pub fn return_amplitude(&self, arm: ArmLabel) -> JonesVector {
        match arm {
            ArmLabel::R => self.return_right,
            ArmLabel::L => self.return_left,
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.branches().iter().map(|(_, _, a)| a.norm_sqr()).sum()
    }

    fn scaled(mut self, c: Complex64) -> Self {
        self.return_right = self.return_right.scale(c);
        self.return_left = self.return_left.scale(c);
        for d in &mut self.detectors {
            *d = d.scale(c);
        }
        self
    }
}

fn check_unitary(u: &PolarizationUnitary) -> Result<()> {
    let err = u.unitarity_error();
    if err > ALGEBRA_TOL {
        Err(QsdcError::NonUnitary(err))
    } else {
        Ok(())
    }
}

/// Maps an arbitrary two-arm state through Alice's side of the network.
pub fn propagate_arms(
    state: &ArmState,
    r: Reflectivity,
    u_right: &PolarizationUnitary,
    u_left: &PolarizationUnitary,
    routing: ReturnRouting,
) -> Result<PortAmplitudeMap> {
    check_unitary(u_right)?;
    check_unitary(u_left)?;
    let r = r.value();
    let t = 1.0 - r;
    let to_detector = (r * t).sqrt();
    let to_bs3 = (r / 2.0).sqrt();

    let out_right = u_right.apply(&state.right);
    let out_left = u_left.apply(&state.left);

    Ok(PortAmplitudeMap {
        routing,
        return_right: out_right.scale_real(t),
        return_left: out_left.scale_real(-t),
        detectors: [
            out_right.scale_real(to_detector),
            out_left.scale_real(to_detector),
            state.right.sub(&state.left).scale_real(to_bs3),
            state.right.add(&state.left).scale_real(-to_bs3),
        ],
    })
}

/// Full apparatus response for Bob's setting `phi` and an undisturbed photon.
///
/// The phi = 3pi/2 output carries an overall factor -1 relative to the linear
/// combination of the single-arm responses, which is the sign convention used
/// when tabulating that setting (D_A3 amplitude -sqrt(r) psi).
pub fn propagate(
    phi: PhiSetting,
    r: Reflectivity,
    u_right: &PolarizationUnitary,
    u_left: &PolarizationUnitary,
    input: &JonesVector,
) -> Result<PortAmplitudeMap> {
    let state = ArmState::from_split(phi, input);
    let map = propagate_arms(&state, r, u_right, u_left, ReturnRouting::for_phi(phi))?;
    Ok(match phi {
        PhiSetting::ThreeHalvesPi => map.scaled(Complex64::new(-1.0, 0.0)),
        _ => map,
    })
}

/// Draws the port that clicks, with probability equal to its branch weight.
pub fn sample_port<R: Rng + ?Sized>(map: &PortAmplitudeMap, rng: &mut R) -> Result<PortSample> {
    let total = map.total_weight();
    if (total - 1.0).abs() > SAMPLING_NORM_TOL {
        return Err(QsdcError::NormViolation(total));
    }
    let branches = map.branches();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut chosen = None;
    for (i, (_, _, amp)) in branches.iter().enumerate() {
        let w = amp.norm_sqr();
        if w <= 0.0 {
            continue;
        }
        chosen = Some(i);
        acc += w;
        if u < acc {
            break;
        }
    }
    // `chosen` is the last non-empty branch if rounding left u >= acc.
    let (port, arm, amp) = branches[chosen.ok_or(QsdcError::NormViolation(total))?];
    Ok(PortSample { port, arm, polarization: amp.normalized()? })
}
