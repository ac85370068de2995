//! Experiment configuration: per-experiment defaults and `key=value` files.

use std::path::PathBuf;
use std::str::FromStr;

use crate::channel::{db_to_linear, RngStream, SystemParams};
use crate::error::{Error, Result};
use crate::quantizer::Backend;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    ValidateCdf,
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Scaling,
    Coverage,
    LinkLevel,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Self::ValidateCdf,
        Self::Fig1,
        Self::Fig2,
        Self::Fig3,
        Self::Fig4,
        Self::Scaling,
        Self::Coverage,
        Self::LinkLevel,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::ValidateCdf => "validate-cdf",
            Self::Fig1 => "fig1",
            Self::Fig2 => "fig2",
            Self::Fig3 => "fig3",
            Self::Fig4 => "fig4",
            Self::Scaling => "scaling",
            Self::Coverage => "coverage",
            Self::LinkLevel => "link-level",
        }
    }

    fn index(&self) -> u64 {
        Self::ALL.iter().position(|e| e == self).expect("listed") as u64
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything an experiment run depends on.
///
/// The meaning of `grid` depends on the experiment: SNR in dB (fig1, fig3),
/// user counts (fig2, scaling, coverage), feedback bits (fig4) or iteration
/// indices (validate-cdf). Link-level runs ignore it and use `trials` as the
/// symbol count.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub params: SystemParams,
    pub trials: usize,
    pub seed: u64,
    pub grid: Vec<f64>,
    pub backend: Backend,
    pub out: Option<PathBuf>,
}

/// Power at which `φ = (M−1)P/(M n_T)` takes the given value.
fn power_for_phi(phi: f64, antennas: usize, order: u32) -> f64 {
    let m = f64::from(order);
    phi * m / (m - 1.0) * antennas as f64
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let db = db_to_linear;
        let (users, bits, power, order, trials, grid, backend): (usize, u32, f64, u32, usize, Vec<f64>, Backend) =
            match experiment {
                Experiment::ValidateCdf => {
                    (1000, 8, power_for_phi(3.0, 4, 16), 16, 200_000, vec![2.0, 3.0, 4.0], Backend::CellApprox)
                }
                Experiment::Fig1 => {
                    (100, 8, db(15.0), 256, 10_000, (0..=8).map(|i| 5.0 * i as f64).collect(), Backend::Rvq)
                }
                Experiment::Fig2 => (
                    100,
                    8,
                    db(15.0),
                    256,
                    10_000,
                    vec![10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0],
                    Backend::Rvq,
                ),
                Experiment::Fig3 => {
                    (5000, 6, db(10.0), 256, 2000, vec![10.0, 15.0, 20.0, 25.0, 30.0], Backend::CellApprox)
                }
                Experiment::Fig4 => (3000, 5, db(35.0), 256, 5000, (5..=12).map(f64::from).collect(), Backend::Rvq),
                Experiment::Scaling => {
                    (100, 8, db(15.0), 256, 2000, vec![100.0, 1000.0, 10_000.0], Backend::CellApprox)
                }
                Experiment::Coverage => {
                    (1000, 8, power_for_phi(3.0, 4, 16), 16, 1000, vec![1e3, 1e4, 1e5], Backend::CellApprox)
                }
                Experiment::LinkLevel => (20, 12, db(20.0), 256, 100_000, vec![0.0], Backend::Rvq),
            };
        Self {
            experiment,
            params: SystemParams { users, antennas: 4, feedback_bits: bits, power, constellation_order: order },
            trials,
            seed: 1,
            grid,
            backend,
            out: None,
        }
    }

    pub fn stream(&self) -> RngStream {
        RngStream::new(self.seed, self.experiment.index())
    }

    /// Sets one key. Known keys: `nT`, `B`, `P_dB`, `M`, `K`, `grid`,
    /// `trials`, `seed`, `backend`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("{key} = {value:?} is not a valid {what}"));
        let v = value.trim();
        match key.trim() {
            "nT" => self.params.antennas = v.parse().map_err(|_| bad("antenna count"))?,
            "B" => self.params.feedback_bits = v.parse().map_err(|_| bad("bit count"))?,
            "P_dB" => self.params.power = db_to_linear(v.parse().map_err(|_| bad("power in dB"))?),
            "M" => self.params.constellation_order = v.parse().map_err(|_| bad("constellation order"))?,
            "K" => self.params.users = v.parse().map_err(|_| bad("user count"))?,
            "trials" => self.trials = v.parse().map_err(|_| bad("trial count"))?,
            "seed" => self.seed = v.parse().map_err(|_| bad("seed"))?,
            "backend" => self.backend = v.parse().map_err(|_| bad("backend"))?,
            "grid" => {
                self.grid = v
                    .split(',')
                    .map(|s| s.trim().parse::<f64>().map_err(|_| bad("grid")))
                    .collect::<Result<Vec<_>>>()?
            }
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies a flat `key=value` file; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trial count must be at least 1".into()));
        }
        if self.grid.is_empty() {
            return Err(Error::Config("grid is empty".into()));
        }
        if self.grid.iter().any(|g| !g.is_finite()) || self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("grid must be finite and strictly increasing".into()));
        }
        Ok(())
    }
}
