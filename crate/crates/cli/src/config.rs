//! Run configuration: a TOML file, then command-line flags on top.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, ValueEnum};
use pseudosphere::potentials::DEFAULT_SOLITON_OFFSET;
use pseudosphere::Settings;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PresetKind {
    Amsler,
    Soliton,
    /// α, β read from CSV files.
    Tabulated,
    /// Smooth random trigonometric data drawn from `seed`.
    Random,
}

/// Threshold overrides; unset fields keep the library defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub unitarity_warn: Option<f64>,
    pub unitarity_abort: Option<f64>,
    pub top_coefficient_limit: Option<f64>,
    pub big_cell_condition: Option<f64>,
    pub big_cell_residual: Option<f64>,
    pub singular_sin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub preset: PresetKind,
    pub phi0: f64,
    pub soliton_a: f64,
    pub soliton_offset: f64,
    pub alpha: Option<PathBuf>,
    pub beta: Option<PathBuf>,
    /// Domain `[0, x0] × [0, y0]`.
    pub x0: f64,
    pub y0: f64,
    pub hx: f64,
    pub hy: f64,
    pub truncation: usize,
    pub lambdas: Vec<f64>,
    pub out: PathBuf,
    pub oracle: bool,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: PresetKind::Soliton,
            phi0: std::f64::consts::FRAC_PI_2,
            soliton_a: 1.0,
            soliton_offset: DEFAULT_SOLITON_OFFSET,
            alpha: None,
            beta: None,
            x0: 2.0,
            y0: 2.0,
            hx: 0.05,
            hy: 0.05,
            truncation: 16,
            lambdas: vec![0.5, 1.0, 2.0],
            out: PathBuf::from("out"),
            oracle: true,
            seed: 0,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Default, Parser)]
#[command(name = "pseudosphere", version, about = "Pseudospherical surfaces from angle data on the axes")]
pub struct Cli {
    /// TOML file with any subset of the run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<PresetKind>,
    #[arg(long)]
    pub phi0: Option<f64>,
    #[arg(long)]
    pub soliton_a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub soliton_offset: Option<f64>,
    /// CSV of `x, alpha` samples on a uniform grid starting at 0.
    #[arg(long)]
    pub alpha: Option<PathBuf>,
    #[arg(long)]
    pub beta: Option<PathBuf>,
    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub y0: Option<f64>,
    /// Grid step in both directions.
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub trunc: Option<usize>,
    /// Comma-separated evaluation points, e.g. `0.5,1,2`.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub oracle: Option<Switch>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Config file (if any) with every given flag applied on top.
    pub fn resolve(cli: &Cli) -> anyhow::Result<Self> {
        let mut c = match &cli.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        macro_rules! take {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = cli.$field.clone() { c.$target = v; })*
            };
        }
        take!(preset => preset, phi0 => phi0, soliton_a => soliton_a, soliton_offset => soliton_offset,
              x0 => x0, y0 => y0, trunc => truncation, lambdas => lambdas, out => out, seed => seed);
        if let Some(h) = cli.h {
            c.hx = h;
            c.hy = h;
        }
        if let Some(s) = cli.oracle {
            c.oracle = s == Switch::On;
        }
        if cli.alpha.is_some() || cli.beta.is_some() {
            c.alpha = cli.alpha.clone().or(c.alpha);
            c.beta = cli.beta.clone().or(c.beta);
            if cli.preset.is_none() {
                c.preset = PresetKind::Tabulated;
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if !(self.x0 > 0.0 && self.y0 > 0.0) {
            bail!("domain bounds must be positive (x0 = {}, y0 = {})", self.x0, self.y0);
        }
        if !(self.hx > 0.0 && self.hy > 0.0) {
            bail!("grid steps must be positive (hx = {}, hy = {})", self.hx, self.hy);
        }
        if self.truncation < 4 {
            bail!("truncation degree must be at least 4, got {}", self.truncation);
        }
        if self.lambdas.is_empty() || self.lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            bail!("lambda samples must be positive reals, got {:?}", self.lambdas);
        }
        if self.preset == PresetKind::Tabulated && (self.alpha.is_none() || self.beta.is_none()) {
            bail!("tabulated data needs both --alpha and --beta");
        }
        Ok(())
    }

    pub fn settings(&self) -> Settings {
        let mut s = Settings { truncation: self.truncation, lambda_samples: self.lambdas.clone(), ..Settings::default() };
        let t = &self.tolerances;
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut s.unitarity_warn, t.unitarity_warn);
        set(&mut s.unitarity_abort, t.unitarity_abort);
        set(&mut s.top_coefficient_limit, t.top_coefficient_limit);
        set(&mut s.big_cell_condition, t.big_cell_condition);
        set(&mut s.big_cell_residual, t.big_cell_residual);
        set(&mut s.singular_sin, t.singular_sin);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "preset = \"amsler\"\nphi0 = 1.0\nhx = 0.1\nhy = 0.1\n[tolerances]\nsingular_sin = 1e-2\n").unwrap();
        let cli = Cli::parse_from(["pseudosphere", "--config", path.to_str().unwrap(), "--phi0", "1.2", "--lambdas", "1,3"]);
        let c = RunConfig::resolve(&cli).unwrap();
        assert_eq!(c.preset, PresetKind::Amsler);
        assert_eq!(c.phi0, 1.2);
        assert_eq!(c.hx, 0.1);
        assert_eq!(c.lambdas, vec![1.0, 3.0]);
        assert_eq!(c.settings().singular_sin, 1e-2);
    }

    #[test]
    fn csv_flags_imply_tabulated() {
        let cli = Cli::parse_from(["pseudosphere", "--alpha", "a.csv", "--beta", "b.csv", "--oracle", "off"]);
        let c = RunConfig::resolve(&cli).unwrap();
        assert_eq!(c.preset, PresetKind::Tabulated);
        assert!(!c.oracle);
    }

    #[test]
    fn rejects_bad_values() {
        for args in [&["pseudosphere", "--trunc", "3"][..], &["pseudosphere", "--h", "0"], &["pseudosphere", "--lambdas", "1,-2"]] {
            assert!(RunConfig::resolve(&Cli::parse_from(args)).is_err());
        }
        assert!(RunConfig::from_toml("nonsense = 1").is_err());
    }
}
