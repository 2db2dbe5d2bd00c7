//! Polarization algebra on a single photon.
//!
//! States are Jones vectors over the {H, V} basis. Matrices keep their exact
//! global phase; comparisons that should ignore it go through
//! [`equal_up_to_global_phase`].

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};
use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QsdcError, Result};

/// Tolerance for algebraic identities (unitarity, normalization).
pub const ALGEBRA_TOL: f64 = 1e-12;
/// Tolerance for equality up to a global phase.
pub const PHASE_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolarizationLabel {
    H,
    V,
    D,
    A,
}

impl PolarizationLabel {
    pub const ALL: [PolarizationLabel; 4] = [Self::H, Self::V, Self::D, Self::A];

    pub fn basis(self) -> PolarizationBasis {
        match self {
            Self::H | Self::V => PolarizationBasis::HV,
            Self::D | Self::A => PolarizationBasis::DA,
        }
    }

    /// The orthogonal partner within the same basis (H<->V, D<->A).
    ///
    /// This is also the image under sigma_y up to a global phase.
    pub fn flipped(self) -> Self {
        match self {
            Self::H => Self::V,
            Self::V => Self::H,
            Self::D => Self::A,
            Self::A => Self::D,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for PolarizationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::H => "H",
            Self::V => "V",
            Self::D => "D",
            Self::A => "A",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolarizationBasis {
    HV,
    DA,
}

impl PolarizationBasis {
    pub const ALL: [PolarizationBasis; 2] = [Self::HV, Self::DA];

    pub fn outcomes(self) -> [PolarizationLabel; 2] {
        match self {
            Self::HV => [PolarizationLabel::H, PolarizationLabel::V],
            Self::DA => [PolarizationLabel::D, PolarizationLabel::A],
        }
    }

    pub fn other(self) -> Self {
        match self {
            Self::HV => Self::DA,
            Self::DA => Self::HV,
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random_bool(0.5) {
            Self::DA
        } else {
            Self::HV
        }
    }
}

impl fmt::Display for PolarizationBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::HV => "H/V",
            Self::DA => "D/A",
        })
    }
}

/// Two complex amplitudes over {H, V}.
///
/// Normalized for a photon state; sub-normalized vectors appear as branch
/// amplitudes inside the apparatus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesVector {
    pub amp_h: Complex64,
    pub amp_v: Complex64,
}

impl JonesVector {
    pub const ZERO: JonesVector = JonesVector { amp_h: ZERO, amp_v: ZERO };

    pub fn new(amp_h: Complex64, amp_v: Complex64) -> Self {
        Self { amp_h, amp_v }
    }

    pub fn real(h: f64, v: f64) -> Self {
        Self::new(Complex64::new(h, 0.0), Complex64::new(v, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp_h.norm_sqr() + self.amp_v.norm_sqr()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= ALGEBRA_TOL
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if n <= f64::EPSILON {
            return Err(QsdcError::ZeroNorm);
        }
        Ok(self.scale(Complex64::new(1.0 / n.sqrt(), 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(self.amp_h * c, self.amp_v * c)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        Self::new(self.amp_h * c, self.amp_v * c)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.amp_h + other.amp_h, self.amp_v + other.amp_v)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(self.amp_h - other.amp_h, self.amp_v - other.amp_v)
    }

    /// <self|other>
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amp_h.conj() * other.amp_h + self.amp_v.conj() * other.amp_v
    }

    /// |<label|self>|^2
    pub fn overlap(&self, label: PolarizationLabel) -> f64 {
        prepare_polarization(label).inner(self).norm_sqr()
    }

    /// The label among {H, V, D, A} with the largest overlap. Exact for the
    /// states reachable with protocol angles.
    pub fn nearest_label(&self) -> PolarizationLabel {
        let mut best = PolarizationLabel::H;
        let mut best_p = f64::NEG_INFINITY;
        for label in PolarizationLabel::ALL {
            let p = self.overlap(label);
            if p > best_p + PHASE_TOL {
                best = label;
                best_p = p;
            }
        }
        best
    }

    /// The label this state is an eigenstate of, if any.
    pub fn exact_label(&self) -> Option<PolarizationLabel> {
        let n = self.norm_sqr();
        if n <= f64::EPSILON {
            return None;
        }
        PolarizationLabel::ALL
            .into_iter()
            .find(|&l| (self.overlap(l) / n - 1.0).abs() <= PHASE_TOL)
    }
}

/// 2x2 complex matrix acting on Jones vectors, stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationUnitary {
    pub m: [[Complex64; 2]; 2],
}

impl PolarizationUnitary {
    pub const IDENTITY: PolarizationUnitary = PolarizationUnitary { m: [[ONE, ZERO], [ZERO, ONE]] };
    pub const SIGMA_Y: PolarizationUnitary = PolarizationUnitary {
        m: [[ZERO, Complex64::new(0.0, -1.0)], [I, ZERO]],
    };
    pub const SIGMA_Z: PolarizationUnitary = PolarizationUnitary {
        m: [[ONE, ZERO], [ZERO, Complex64::new(-1.0, 0.0)]],
    };

    pub fn new(m: [[Complex64; 2]; 2]) -> Self {
        Self { m }
    }

    pub fn dagger(&self) -> Self {
        let m = &self.m;
        Self::new([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let m = &self.m;
        Self::new([[m[0][0] * c, m[0][1] * c], [m[1][0] * c, m[1][1] * c]])
    }

    pub fn apply(&self, v: &JonesVector) -> JonesVector {
        let m = &self.m;
        JonesVector::new(
            m[0][0] * v.amp_h + m[0][1] * v.amp_v,
            m[1][0] * v.amp_h + m[1][1] * v.amp_v,
        )
    }

    /// Largest entrywise deviation of U^dagger U from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.dagger() * *self;
        let mut err = 0.0_f64;
        for (i, row) in p.m.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                let target = if i == j { ONE } else { ZERO };
                err = err.max((x - target).norm());
            }
        }
        err
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_error() <= ALGEBRA_TOL
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut err = 0.0_f64;
        for i in 0..2 {
            for j in 0..2 {
                err = err.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        err
    }
}

impl Mul for PolarizationUnitary {
    type Output = PolarizationUnitary;

    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self.m, &rhs.m);
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self::new(out)
    }
}

/// Rotation angle of Alice's quarter-wave plate, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavePlateAngle(f64);

impl WavePlateAngle {
    /// Identity message operation (bit 0).
    pub const IDENTITY: WavePlateAngle = WavePlateAngle(FRAC_PI_2);
    /// sigma_y message operation (bit 1).
    pub const FLIP: WavePlateAngle = WavePlateAngle(FRAC_PI_4);
    /// Test option that rotates H/V eigenstates into D/A eigenstates and back.
    pub const TEST: WavePlateAngle = WavePlateAngle(FRAC_PI_8);

    pub fn new(theta: f64) -> Result<Self> {
        if theta.is_finite() {
            Ok(Self(theta))
        } else {
            Err(QsdcError::NonFiniteAngle(theta))
        }
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn is_test_option(self) -> bool {
        self == Self::TEST
    }
}

/// QWP(theta) = (1/sqrt2) [[1 - i cos2t, -i sin2t], [-i sin2t, 1 + i cos2t]].
pub fn qwp_unitary(theta: WavePlateAngle) -> PolarizationUnitary {
    let (s, c) = (2.0 * theta.0).sin_cos();
    let k = FRAC_1_SQRT_2;
    PolarizationUnitary::new([
        [Complex64::new(k, -k * c), Complex64::new(0.0, -k * s)],
        [Complex64::new(0.0, -k * s), Complex64::new(k, k * c)],
    ])
}

/// QWP(-theta) . sigma_z . QWP(theta), in closed form
/// -i [[cos2t, sin2t], [-sin2t, cos2t]].
pub fn message_unitary(theta: WavePlateAngle) -> PolarizationUnitary {
    let (s, c) = (2.0 * theta.0).sin_cos();
    PolarizationUnitary::new([
        [Complex64::new(0.0, -c), Complex64::new(0.0, -s)],
        [Complex64::new(0.0, s), Complex64::new(0.0, -c)],
    ])
}

pub fn prepare_polarization(label: PolarizationLabel) -> JonesVector {
    let k = FRAC_1_SQRT_2;
    match label {
        PolarizationLabel::H => JonesVector::real(1.0, 0.0),
        PolarizationLabel::V => JonesVector::real(0.0, 1.0),
        PolarizationLabel::D => JonesVector::real(k, k),
        PolarizationLabel::A => JonesVector::real(k, -k),
    }
}

/// Born-rule outcome probabilities in `basis`. They sum to the squared norm
/// of `state`, so sub-normalized branch amplitudes are accepted.
pub fn born_probabilities(
    state: &JonesVector,
    basis: PolarizationBasis,
) -> Result<[(PolarizationLabel, f64); 2]> {
    if state.norm_sqr() <= f64::EPSILON {
        return Err(QsdcError::ZeroNorm);
    }
    let [a, b] = basis.outcomes();
    Ok([(a, state.overlap(a)), (b, state.overlap(b))])
}

/// Projective measurement of a photon in `basis`; returns the outcome label.
pub fn measure<R: Rng + ?Sized>(
    state: &JonesVector,
    basis: PolarizationBasis,
    rng: &mut R,
) -> Result<PolarizationLabel> {
    let [(a, pa), (b, pb)] = born_probabilities(state, basis)?;
    let u: f64 = rng.random();
    Ok(if u * (pa + pb) < pa { a } else { b })
}

/// True iff a = e^{i alpha} b for some real alpha.
pub fn equal_up_to_global_phase(a: &PolarizationUnitary, b: &PolarizationUnitary) -> bool {
    // Pick the phase from the largest entry of b, then compare entrywise.
    let mut idx = (0, 0);
    let mut largest = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let n = b.m[i][j].norm();
            if n > largest {
                largest = n;
                idx = (i, j);
            }
        }
    }
    if largest <= PHASE_TOL {
        return a.max_abs_diff(b) <= PHASE_TOL;
    }
    let ratio = a.m[idx.0][idx.1] / b.m[idx.0][idx.1];
    if (ratio.norm() - 1.0).abs() > PHASE_TOL {
        return false;
    }
    let phase = ratio / ratio.norm();
    a.max_abs_diff(&b.scale(phase)) <= PHASE_TOL
}
