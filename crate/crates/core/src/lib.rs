//! Simulator for a two-way single-photon direct-communication protocol in
//! which the photon's path (two arms or their superposition) and its
//! polarization both carry security checks.
//!
//! Modules build on each other: [`optics`] (Jones calculus), [`apparatus`]
//! (Alice's interferometer), [`adversary`] (intercept-resend Eves),
//! [`protocol`] (rounds, announcements, sessions) and [`analytics`] (exact
//! closed forms and sweeps).

pub mod adversary;
pub mod analytics;
pub mod apparatus;
pub mod error;
pub mod optics;
pub mod protocol;
pub mod rng;

pub use adversary::{EvePolicy, EveScenario, ResendRule};
pub use analytics::Rational;
pub use apparatus::{ArmLabel, OutputPort, PhiSetting, Reflectivity};
pub use error::{QsdcError, Result};
pub use optics::{JonesVector, PolarizationBasis, PolarizationLabel, PolarizationUnitary, WavePlateAngle};
pub use protocol::{
    run_schedule, run_session, session_records, EventClass, MessageSource, PhiMode, ProtocolVariant, ScheduleReport,
    ScheduleStage, SessionConfig, SessionStatistics, TrialRecord, TrialSpec, Verdict,
};
pub use rng::{SessionKeys, TrialRng};
