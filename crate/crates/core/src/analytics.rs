//! Closed-form probabilities in exact rational arithmetic, plus sweep tables.
//!
//! Every quantity here is a fixed-degree polynomial in the reflectivity with
//! rational coefficients. Polynomials are kept as coefficient vectors so the
//! composition identities can be checked coefficient by coefficient.

use std::fmt::Write as _;
use std::ops::{Add, Mul};

use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::adversary::EveScenario;
use crate::apparatus::{OutputPort, PhiSetting};
use crate::error::{QsdcError, Result};
use crate::protocol::EventClass;

pub type Rational = Ratio<i128>;

/// Absolute tolerance when deciding whether a quoted decimal is reproduced.
pub const QUOTED_TOL: f64 = 5e-4;

fn q(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

/// Dense polynomial, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly(Vec<Rational>);

impl Poly {
    pub fn new(coeffs: impl IntoIterator<Item = Rational>) -> Self {
        let mut c: Vec<Rational> = coeffs.into_iter().collect();
        while c.last().is_some_and(Zero::is_zero) {
            c.pop();
        }
        Self(c)
    }

    fn ints(num: &[i128], den: i128) -> Self {
        Self::new(num.iter().map(|&n| q(n, den)))
    }

    pub fn constant(c: Rational) -> Self {
        Self::new([c])
    }

    /// (1 - r)^2
    fn one_minus_r_sq() -> Self {
        Self::ints(&[1, -2, 1], 1)
    }

    pub fn coefficients(&self) -> &[Rational] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn eval(&self, r: Rational) -> Rational {
        self.0.iter().rev().fold(Rational::zero(), |acc, &c| acc * r + c)
    }

    pub fn eval_f64(&self, r: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * r + to_f64(*c))
    }

    pub fn scale(&self, k: Rational) -> Self {
        Self::new(self.0.iter().map(|&c| c * k))
    }
}

impl Add for &Poly {
    type Output = Poly;

    fn add(self, rhs: &Poly) -> Poly {
        let n = self.0.len().max(rhs.0.len());
        let at = |p: &Poly, i: usize| p.0.get(i).copied().unwrap_or_else(Rational::zero);
        Poly::new((0..n).map(|i| at(self, i) + at(rhs, i)))
    }
}

impl Mul for &Poly {
    type Output = Poly;

    fn mul(self, rhs: &Poly) -> Poly {
        if self.0.is_empty() || rhs.0.is_empty() {
            return Poly::new([]);
        }
        let mut out = vec![Rational::zero(); self.0.len() + rhs.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in rhs.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

pub fn to_f64(x: Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn check_r(r: Rational) -> Result<Rational> {
    if r < Rational::zero() || r > Rational::one() {
        return Err(QsdcError::ReflectivityOutOfRange(to_f64(r)));
    }
    Ok(r)
}

/// Parses `0.05`, `3`, `-1.25` or `1/3` exactly.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || QsdcError::InvalidConfig(format!("'{s}' is not an exact decimal or fraction"));
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i128 = n.trim().parse().map_err(|_| bad())?;
        let d: i128 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(q(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if (int.is_empty() && frac.is_empty())
        || !int.bytes().all(|b| b.is_ascii_digit())
        || !frac.bytes().all(|b| b.is_ascii_digit())
        || frac.len() > 18
    {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let n: i128 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| bad())? };
    let value = q(n, 10i128.pow(frac.len() as u32));
    Ok(if neg { -value } else { value })
}

/// Exact value of the shortest decimal that prints as `x`.
pub fn rational_from_f64(x: f64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(QsdcError::InvalidConfig(format!("{x} is not finite")));
    }
    parse_rational(&x.to_string())
}

/// Decimal rendering with up to 12 fractional digits, trailing zeros trimmed.
pub fn render_decimal(x: Rational) -> String {
    let s = format!("{:.12}", to_f64(x));
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EventProbabilities {
    pub p_message: Rational,
    pub p_eve_check: Rational,
    pub p_discard: Rational,
}

impl EventProbabilities {
    pub fn as_f64(&self) -> [f64; 3] {
        [to_f64(self.p_message), to_f64(self.p_eve_check), to_f64(self.p_discard)]
    }

    pub fn get(&self, class: EventClass) -> Rational {
        match class {
            EventClass::MessageDecoded => self.p_message,
            EventClass::EveCheck => self.p_eve_check,
            EventClass::Discarded => self.p_discard,
            EventClass::EveDetected => Rational::zero(),
        }
    }
}

/// (P_message, P_eve-check, P_discard) as polynomials in r.
pub fn event_polys() -> [Poly; 3] {
    [Poly::ints(&[1, -2, 1], 4), Poly::ints(&[1, 4, -2], 4), Poly::ints(&[2, -2, 1], 4)]
}

pub fn event_probabilities(r: Rational) -> Result<EventProbabilities> {
    let r = check_r(r)?;
    let [m, c, d] = event_polys();
    Ok(EventProbabilities { p_message: m.eval(r), p_eve_check: c.eval(r), p_discard: d.eval(r) })
}

/// One row of a per-phi outcome table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhiTableEntry {
    pub port: OutputPort,
    pub event: EventClass,
    pub probability: Poly,
}

impl Serialize for Poly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(|c| c.to_string()))
    }
}

/// Outcome table for one phi setting with analyzer rounds split by event.
/// Entries with the same port are listed separately.
pub fn per_phi_event_polys(phi: PhiSetting) -> Vec<PhiTableEntry> {
    let e = |port, event, probability| PhiTableEntry { port, event, probability };
    let sq = Poly::one_minus_r_sq();
    let r_one_minus_r = Poly::ints(&[0, 1, -1], 1);
    let half = q(1, 2);
    match phi {
        PhiSetting::Zero | PhiSetting::Pi => {
            let own = if phi == PhiSetting::Zero { OutputPort::DA1 } else { OutputPort::DA2 };
            vec![
                e(OutputPort::ToBobAnalyzer, EventClass::MessageDecoded, sq.scale(half)),
                e(OutputPort::ToBobAnalyzer, EventClass::EveCheck, sq.scale(half)),
                e(own, EventClass::EveCheck, r_one_minus_r),
                e(OutputPort::DA3, EventClass::EveCheck, Poly::ints(&[0, 1], 2)),
                e(OutputPort::DA4, EventClass::Discarded, Poly::ints(&[0, 1], 2)),
            ]
        }
        PhiSetting::HalfPi | PhiSetting::ThreeHalvesPi => {
            let bs3 = if phi == PhiSetting::HalfPi { OutputPort::DA4 } else { OutputPort::DA3 };
            vec![
                e(OutputPort::ToBobDiscard, EventClass::Discarded, sq),
                e(bs3, EventClass::EveCheck, Poly::ints(&[0, 1], 1)),
                e(OutputPort::DA1, EventClass::EveCheck, r_one_minus_r.scale(half)),
                e(OutputPort::DA2, EventClass::Discarded, r_one_minus_r.scale(half)),
            ]
        }
    }
}

pub fn per_phi_event_table(phi: PhiSetting, r: Rational) -> Result<Vec<(OutputPort, EventClass, Rational)>> {
    let r = check_r(r)?;
    Ok(per_phi_event_polys(phi).into_iter().map(|e| (e.port, e.event, e.probability.eval(r))).collect())
}

/// Port probabilities for one phi; ports absent from the table get zero.
pub fn per_phi_port_distribution(phi: PhiSetting, r: Rational) -> Result<[(OutputPort, Rational); 6]> {
    let table = per_phi_event_table(phi, r)?;
    Ok(OutputPort::ALL.map(|port| {
        (port, table.iter().filter(|(p, _, _)| *p == port).map(|(_, _, v)| *v).sum())
    }))
}

/// Event probabilities when phi is drawn uniformly from `phis`.
pub fn event_probabilities_over(phis: &[PhiSetting], r: Rational) -> Result<EventProbabilities> {
    let r = check_r(r)?;
    if phis.is_empty() {
        return Err(QsdcError::InvalidConfig("empty phi set".into()));
    }
    let w = q(1, phis.len() as i128);
    let mut out = EventProbabilities { p_message: Rational::zero(), p_eve_check: Rational::zero(), p_discard: Rational::zero() };
    for &phi in phis {
        for e in per_phi_event_polys(phi) {
            let v = e.probability.eval(r) * w;
            match e.event {
                EventClass::MessageDecoded => out.p_message += v,
                EventClass::EveCheck => out.p_eve_check += v,
                _ => out.p_discard += v,
            }
        }
    }
    Ok(out)
}

/// Averaging the four per-phi tables gives the overall event polynomials.
pub fn phi_average_identity_holds() -> bool {
    let mut sums = [Poly::new([]), Poly::new([]), Poly::new([])];
    for phi in PhiSetting::ALL {
        for e in per_phi_event_polys(phi) {
            let slot = match e.event {
                EventClass::MessageDecoded => 0,
                EventClass::EveCheck => 1,
                _ => 2,
            };
            sums[slot] = &sums[slot] + &e.probability.scale(q(1, 4));
        }
    }
    sums == event_polys()
}

/// Per-case probabilities of Eve staying unnoticed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct UndetectedDecomposition {
    /// Bob to Alice on the superposed paths.
    pub case_i: Rational,
    /// Bob to Alice on a deterministic path.
    pub case_ii: Rational,
    /// Alice back to Bob on a deterministic path.
    pub case_iii: Rational,
}

impl UndetectedDecomposition {
    pub fn sum(&self) -> Rational {
        self.case_i + self.case_ii + self.case_iii
    }
}

fn scenario_cases(scenario: EveScenario) -> Result<[Poly; 3]> {
    Ok(match scenario {
        EveScenario::Blind => [Poly::ints(&[41, -28, 11], 384), Poly::ints(&[0, 5, -3], 32), Poly::ints(&[13, -26, 13], 128)],
        EveScenario::PhiAware => [Poly::ints(&[1], 2), Poly::ints(&[0, 5, -3], 32), Poly::ints(&[13, -26, 13], 128)],
        EveScenario::PolarizationAware => [Poly::ints(&[1], 2), Poly::ints(&[0, 5, -3], 12), Poly::ints(&[1, -2, 1], 2)],
        EveScenario::SuperEve => return Err(QsdcError::UnsupportedScenario("super-eve has no case decomposition; use supereve_probability")),
        EveScenario::None => return Err(QsdcError::UnsupportedScenario("no eavesdropper")),
    })
}

pub fn undetected_decomposition(scenario: EveScenario, r: Rational) -> Result<UndetectedDecomposition> {
    let [a, b, c] = scenario_cases(scenario)?;
    let r = check_r(r)?;
    Ok(UndetectedDecomposition { case_i: a.eval(r), case_ii: b.eval(r), case_iii: c.eval(r) })
}

/// The printed closed form for each intercept-resend scenario.
pub fn eavesdrop_poly(scenario: EveScenario) -> Result<Poly> {
    let (inner, den): (&[i128], i128) = match scenario {
        EveScenario::Blind => (&[40, -23, 7], 12288),
        EveScenario::PhiAware => (&[77, -6, 1], 8192),
        EveScenario::PolarizationAware => (&[12, -7, 3], 48),
        EveScenario::SuperEve => return Err(QsdcError::UnsupportedScenario("use supereve_probability")),
        EveScenario::None => return Err(QsdcError::UnsupportedScenario("no eavesdropper")),
    };
    Ok(&Poly::one_minus_r_sq() * &Poly::ints(inner, den))
}

/// P_message times the case sum, with the extra 1/16 for scenarios that
/// must also guess the bases.
pub fn composed_eavesdrop_poly(scenario: EveScenario) -> Result<Poly> {
    let cases = scenario_cases(scenario)?;
    let sum = &(&cases[0] + &cases[1]) + &cases[2];
    let prefactor = if scenario == EveScenario::PolarizationAware { Rational::one() } else { q(1, 16) };
    Ok((&event_polys()[0] * &sum).scale(prefactor))
}

pub fn composition_identity_holds(scenario: EveScenario) -> Result<bool> {
    Ok(eavesdrop_poly(scenario)? == composed_eavesdrop_poly(scenario)?)
}

pub fn eavesdrop_probability(scenario: EveScenario, r: Rational) -> Result<Rational> {
    let poly = eavesdrop_poly(scenario)?;
    debug_assert_eq!(Some(&poly), composed_eavesdrop_poly(scenario).ok().as_ref());
    Ok(poly.eval(check_r(r)?))
}

pub fn supereve_poly() -> Poly {
    Poly::ints(&[1, -2, 1], 6)
}

pub fn supereve_probability(r: Rational) -> Result<Rational> {
    Ok(supereve_poly().eval(check_r(r)?))
}

/// Closed-form eavesdropping probability for any attacker.
pub fn predicted_eavesdrop_probability(scenario: EveScenario, r: Rational) -> Result<Rational> {
    match scenario {
        EveScenario::SuperEve => supereve_probability(r),
        other => eavesdrop_probability(other, r),
    }
}

/// A decimal quoted in prose, next to what the formula actually gives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotedValue {
    pub quantity: String,
    pub r: Rational,
    pub quoted: f64,
    pub computed: Rational,
    pub reproducible: bool,
}

pub fn quoted_values() -> Vec<QuotedValue> {
    let half = q(1, 2);
    let zero = Rational::zero();
    let items: [(EveScenario, Rational, f64); 6] = [
        (EveScenario::Blind, zero, 0.0019),
        (EveScenario::Blind, half, 0.0006),
        (EveScenario::PhiAware, zero, 0.0094),
        (EveScenario::PhiAware, half, 0.0023),
        (EveScenario::PolarizationAware, zero, 0.25),
        (EveScenario::PolarizationAware, half, 0.0481),
    ];
    items
        .iter()
        .map(|&(scenario, r, quoted)| {
            let computed = eavesdrop_probability(scenario, r).expect("attacker scenario");
            QuotedValue {
                quantity: format!("p-eavesdropping/{scenario}"),
                r,
                quoted,
                computed,
                reproducible: (to_f64(computed) - quoted).abs() <= QUOTED_TOL,
            }
        })
        .collect()
}

/// Inclusive grid `start:end:step`; all three parts are exact decimals.
pub fn parse_grid(spec: &str) -> Result<Vec<Rational>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, step] = parts.as_slice() else {
        return Err(QsdcError::InvalidConfig(format!("grid '{spec}' is not START:END:STEP")));
    };
    let (a, b, step) = (parse_rational(a)?, parse_rational(b)?, parse_rational(step)?);
    if step <= Rational::zero() {
        return Err(QsdcError::InvalidConfig("grid step must be positive".into()));
    }
    if a > b {
        return Err(QsdcError::InvalidConfig("grid start exceeds end".into()));
    }
    check_r(a)?;
    check_r(b)?;
    let n = ((b - a) / step).floor().to_integer();
    Ok((0..=n).map(|k| a + step * k).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepQuantity {
    /// The three event curves.
    Events,
    PMessage,
    PEveCheck,
    PDiscard,
    Eavesdropping(EveScenario),
    /// Blind, phi-aware and polarization-aware curves side by side.
    EavesdropCurves,
    Undetected(EveScenario),
}

impl SweepQuantity {
    pub const NAMES: [&'static str; 7] =
        ["events", "p-message", "p-eve-check", "p-discard", "p-eavesdropping", "eavesdropping-curves", "undetected"];

    pub fn parse(name: &str, scenario: Option<EveScenario>) -> Result<Self> {
        let need = |s: Option<EveScenario>| {
            s.filter(|s| s.is_present())
                .ok_or_else(|| QsdcError::InvalidConfig(format!("sweep '{name}' needs an attacker scenario")))
        };
        Ok(match name {
            "events" => Self::Events,
            "p-message" => Self::PMessage,
            "p-eve-check" => Self::PEveCheck,
            "p-discard" => Self::PDiscard,
            "p-eavesdropping" => Self::Eavesdropping(need(scenario)?),
            "eavesdropping-curves" => Self::EavesdropCurves,
            "undetected" => Self::Undetected(need(scenario)?),
            other => {
                return Err(QsdcError::InvalidConfig(format!(
                    "unknown sweep '{other}' (expected one of {})",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }

    pub fn columns(&self) -> Vec<String> {
        match self {
            Self::Events => vec!["p_message".into(), "p_eve_check".into(), "p_discard".into()],
            Self::PMessage => vec!["p_message".into()],
            Self::PEveCheck => vec!["p_eve_check".into()],
            Self::PDiscard => vec!["p_discard".into()],
            Self::Eavesdropping(s) => vec![format!("p_eavesdropping_{}", s.name().replace('-', "_"))],
            Self::EavesdropCurves => ["blind", "phi_aware", "pol_aware"].iter().map(|s| format!("p_eavesdropping_{s}")).collect(),
            Self::Undetected(_) => vec!["case_i".into(), "case_ii".into(), "case_iii".into()],
        }
    }

    pub fn values(&self, r: Rational) -> Result<Vec<Rational>> {
        Ok(match self {
            Self::Events => {
                let e = event_probabilities(r)?;
                vec![e.p_message, e.p_eve_check, e.p_discard]
            }
            Self::PMessage => vec![event_probabilities(r)?.p_message],
            Self::PEveCheck => vec![event_probabilities(r)?.p_eve_check],
            Self::PDiscard => vec![event_probabilities(r)?.p_discard],
            Self::Eavesdropping(s) => vec![predicted_eavesdrop_probability(*s, r)?],
            Self::EavesdropCurves => [EveScenario::Blind, EveScenario::PhiAware, EveScenario::PolarizationAware]
                .iter()
                .map(|&s| eavesdrop_probability(s, r))
                .collect::<Result<_>>()?,
            Self::Undetected(s) => {
                let d = undetected_decomposition(*s, r)?;
                vec![d.case_i, d.case_ii, d.case_iii]
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepTable {
    pub columns: Vec<String>,
    pub rows: Vec<(Rational, Vec<Rational>)>,
}

impl SweepTable {
    /// Header row then one line per grid point, values as decimals.
    pub fn to_delimited(&self, delimiter: char) -> String {
        let mut out = String::from("r");
        for c in &self.columns {
            out.push(delimiter);
            out.push_str(c);
        }
        out.push('\n');
        for (r, values) in &self.rows {
            out.push_str(&render_decimal(*r));
            for v in values {
                let _ = write!(out, "{delimiter}{}", render_decimal(*v));
            }
            out.push('\n');
        }
        out
    }
}

pub fn sweep(quantity: SweepQuantity, grid: &[Rational]) -> Result<SweepTable> {
    let rows = grid.iter().map(|&r| Ok((r, quantity.values(r)?))).collect::<Result<_>>()?;
    Ok(SweepTable { columns: quantity.columns(), rows })
}

/// Dataset for the event-probability figure.
pub fn event_curve_dataset(grid: &[Rational]) -> Result<SweepTable> {
    sweep(SweepQuantity::Events, grid)
}

/// Dataset for the eavesdropping-probability figure.
pub fn eavesdrop_curve_dataset(grid: &[Rational]) -> Result<SweepTable> {
    sweep(SweepQuantity::EavesdropCurves, grid)
}
