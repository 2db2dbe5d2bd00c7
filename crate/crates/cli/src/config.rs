use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use qsdc_core::protocol::{MessageSource, PhiMode, ProtocolVariant};
use qsdc_core::{EvePolicy, EveScenario, Reflectivity, ResendRule, SessionConfig};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Tsv,
}

impl TableFormat {
    pub fn delimiter(self) -> char {
        match self {
            Self::Csv => ',',
            Self::Tsv => '\t',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ResendArg {
    Eigenstate,
    Random,
}

impl From<ResendArg> for ResendRule {
    fn from(r: ResendArg) -> Self {
        match r {
            ResendArg::Eigenstate => ResendRule::Eigenstate,
            ResendArg::Random => ResendRule::RandomPolarization,
        }
    }
}

/// Simulate sessions and pre-check schedules, or emit closed-form sweeps.
#[derive(Debug, Parser)]
#[command(
    name = "qsdc",
    version,
    after_help = "Values loaded with --config are overridden by any flag given on the command line.\n\
                  Exit status: 0 success, 2 invalid configuration, 3 file I/O failure."
)]
pub struct Args {
    /// JSON run configuration to start from.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Write the effective configuration (with the resolved seed) to PATH.
    #[arg(long, value_name = "PATH")]
    pub save_config: Option<PathBuf>,

    /// standard | modified
    #[arg(long)]
    pub variant: Option<ProtocolVariant>,

    /// Reflectivity of Alice's arm beam-splitters, in [0, 1].
    #[arg(long)]
    pub r: Option<f64>,

    /// none | blind | phi-aware | pol-aware | super
    #[arg(long)]
    pub eve: Option<EveScenario>,

    /// What an intercepting Eve forwards.
    #[arg(long, value_enum)]
    pub resend: Option<ResendArg>,

    #[arg(long)]
    pub trials: Option<u64>,

    /// Master seed; drawn from the clock when absent and echoed in the report.
    #[arg(long)]
    pub seed: Option<u64>,

    /// uniform | det-only | sup-only | 0 | pi/2 | pi | 3pi/2
    #[arg(long)]
    pub phi: Option<String>,

    /// File of 0/1 characters cycled as Alice's message; whitespace ignored.
    #[arg(long, value_name = "PATH")]
    pub message_file: Option<PathBuf>,

    #[arg(long)]
    pub workers: Option<usize>,

    /// Pre-check schedule such as S1:10000,S2:10000.
    #[arg(long, value_name = "SPEC")]
    pub schedule: Option<String>,

    /// Closed-form sweep: events | p-message | p-eve-check | p-discard |
    /// p-eavesdropping | eavesdropping-curves | undetected
    #[arg(long, value_name = "NAME", requires = "grid")]
    pub sweep: Option<String>,

    /// Reflectivity grid START:END:STEP in exact decimals.
    #[arg(long, value_name = "A:B:STEP")]
    pub grid: Option<String>,

    /// Eve scenario for p-eavesdropping and undetected sweeps.
    #[arg(long)]
    pub scenario: Option<EveScenario>,

    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,

    /// Write the report or table to PATH instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Write one JSON record per trial to PATH.
    #[arg(long, value_name = "PATH")]
    pub transcript: Option<PathBuf>,
}

/// Everything needed to rerun a session or schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub variant: ProtocolVariant,
    pub r: f64,
    pub eve: EveScenario,
    #[serde(default)]
    pub resend: ResendRule,
    pub trials: u64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_phi")]
    pub phi: String,
    #[serde(default)]
    pub message_file: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub schedule: Option<String>,
}

fn default_phi() -> String {
    "uniform".into()
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            variant: ProtocolVariant::Standard,
            r: 0.5,
            eve: EveScenario::None,
            resend: ResendRule::Eigenstate,
            trials: 100_000,
            seed: None,
            phi: default_phi(),
            message_file: None,
            workers: None,
            schedule: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("config serializes");
        fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
    }

    /// Config file (if any) with command-line flags applied on top.
    pub fn from_args(args: &Args) -> Result<Self, CliError> {
        let mut c = match &args.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(v) = args.variant {
            c.variant = v;
        }
        if let Some(r) = args.r {
            c.r = r;
        }
        if let Some(e) = args.eve {
            c.eve = e;
        }
        if let Some(rule) = args.resend {
            c.resend = rule.into();
        }
        if let Some(n) = args.trials {
            c.trials = n;
        }
        if args.seed.is_some() {
            c.seed = args.seed;
        }
        if let Some(p) = &args.phi {
            c.phi = p.clone();
        }
        if args.message_file.is_some() {
            c.message_file = args.message_file.clone();
        }
        if args.workers.is_some() {
            c.workers = args.workers;
        }
        if args.schedule.is_some() {
            c.schedule = args.schedule.clone();
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        Reflectivity::new(self.r)?;
        if self.trials == 0 {
            return Err(CliError::Config("--trials must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        self.phi_mode()?;
        Ok(())
    }

    pub fn phi_mode(&self) -> Result<PhiMode, CliError> {
        Ok(self.phi.parse()?)
    }

    pub fn policy(&self) -> EvePolicy {
        EvePolicy::new(self.eve).with_resend(self.resend)
    }

    pub fn message(&self) -> Result<MessageSource, CliError> {
        let Some(path) = &self.message_file else {
            return Ok(MessageSource::Random);
        };
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let bits = text
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(CliError::Config(format!("{}: unexpected character '{other}'", path.display()))),
            })
            .collect::<Result<Vec<u8>, _>>()?;
        Ok(MessageSource::bits(bits)?)
    }

    /// Session settings; the seed must already be resolved.
    pub fn session(&self) -> Result<SessionConfig, CliError> {
        let seed = self.seed.expect("seed resolved before running");
        let mut s = SessionConfig::new(self.variant, Reflectivity::new(self.r)?, self.policy(), self.trials, seed)
            .with_phi_mode(self.phi_mode()?)
            .with_message(self.message()?);
        s.workers = self.workers;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(extra: &[&str]) -> Args {
        Args::parse_from(std::iter::once("qsdc").chain(extra.iter().copied()))
    }

    #[test]
    fn defaults_validate() {
        let c = RunConfig::from_args(&args(&[])).unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        let file = RunConfig { eve: EveScenario::Blind, trials: 7, seed: Some(3), ..RunConfig::default() };
        file.save(&path).unwrap();
        let c = RunConfig::from_args(&args(&["--config", path.to_str().unwrap(), "--trials", "9"])).unwrap();
        assert_eq!((c.eve, c.trials, c.seed), (EveScenario::Blind, 9, Some(3)));
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"variant":"standard","r":0.5,"eve":"none","trials":5,"colour":"red"}"#).unwrap();
        assert!(matches!(RunConfig::load(&path), Err(CliError::Config(_))));
    }

    #[test]
    fn bad_values_rejected() {
        for bad in [&["--r=-0.1"][..], &["--trials", "0"], &["--workers", "0"], &["--phi", "2pi"]] {
            assert!(matches!(RunConfig::from_args(&args(bad)), Err(CliError::Config(_))), "{bad:?}");
        }
    }
}
