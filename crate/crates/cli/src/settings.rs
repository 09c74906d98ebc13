//! Flat run settings: read from a TOML file, then overridden by flags.

use std::path::{Path, PathBuf};

use clap::Args;
use fgcf::de::IncomingCount;
use fgcf::em::{EmConfig, EmUpdate};
use fgcf::eval::{Algorithm, Estimator, InitMethod, LearnerConfig};
use fgcf::imp::ImpConfig;
use fgcf::init::VdvqConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "FGCF_OUT_DIR";

/// Every setting any subcommand reads. Unset fields fall back to the
/// config file, then to built-in defaults.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Dataset CSV (`user,movie,rating`, 0-based ids).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Raw ratings CSV for `ingest` (arbitrary ids).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Model JSON.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Hidden groups of a synthetic dataset (`kind,index,group`).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Query pairs (`user,movie[,rating]`).
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Degree distributions JSON for `de`.
    #[arg(long)]
    pub degrees: Option<PathBuf>,
    /// Inference model JSON for a mismatched `de` run.
    #[arg(long)]
    pub inference: Option<PathBuf>,
    /// Output directory (default: $FGCF_OUT_DIR, else `fgcf-out`).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,

    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    pub threads: Option<usize>,

    /// Groups on both sides.
    #[arg(long)]
    pub groups: Option<usize>,
    #[arg(long)]
    pub g_u: Option<usize>,
    #[arg(long)]
    pub g_v: Option<usize>,
    /// `imp` or `em`.
    #[arg(long)]
    pub alg: Option<String>,
    /// `vdvq` or `uniform`.
    #[arg(long)]
    pub init: Option<String>,
    /// `r1`, `r2` or `map`.
    #[arg(long)]
    pub estimator: Option<String>,

    #[arg(long)]
    pub imp_max_iters: Option<usize>,
    #[arg(long)]
    pub imp_tol: Option<f64>,
    #[arg(long)]
    pub damping: Option<f64>,
    #[arg(long)]
    pub em_max_iters: Option<usize>,
    #[arg(long)]
    pub em_tol: Option<f64>,
    /// `normalized` or `unnormalized`.
    #[arg(long)]
    pub em_update: Option<String>,

    /// Soft-assignment inverse temperature.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Soft k-means sweeps per splitting stage.
    #[arg(long)]
    pub sweeps: Option<usize>,
    #[arg(long)]
    pub noise_sd: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// Sweep densities (average ratings per user).
    #[arg(long, value_delimiter = ',')]
    pub densities: Option<Vec<f64>>,
    /// Sweep algorithms: baseline, imp, em, lower-bound.
    #[arg(long, value_delimiter = ',')]
    pub algs: Option<Vec<String>>,
    /// Sweep seeds.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Ratings hidden as the validation set.
    #[arg(long)]
    pub validation: Option<usize>,

    #[arg(long)]
    pub users: Option<usize>,
    #[arg(long)]
    pub movies: Option<usize>,
    /// Average ratings per user for `sample`.
    #[arg(long)]
    pub density: Option<f64>,
    /// Observed-entry counts for `bound`.
    #[arg(long, value_delimiter = ',')]
    pub observed: Option<Vec<usize>>,
    #[arg(long)]
    pub delta: Option<f64>,

    /// Population size for `de`.
    #[arg(long)]
    pub population: Option<usize>,
    /// Iterations for `de`.
    #[arg(long)]
    pub iters: Option<usize>,
    /// `extrinsic` (d-1 incoming) or `literal` (d incoming).
    #[arg(long)]
    pub incoming: Option<String>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),* $(,)?) => {
        Settings { $($field: $top.$field.or($base.$field),)* }
    };
}

impl Settings {
    /// `self` with every unset field taken from `base`.
    pub fn over(self, base: Settings) -> Settings {
        overlay!(
            base, self, data, input, model, truth, pairs, degrees, inference, out_dir, seed, threads, groups, g_u, g_v,
            alg, init, estimator, imp_max_iters, imp_tol, damping, em_max_iters, em_tol, em_update, beta, sweeps,
            noise_sd, epsilon, densities, algs, seeds, validation, users, movies, density, observed, delta,
            population, iters, incoming,
        )
    }

    pub fn from_toml(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("fgcf-out"))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn require<'a, T>(&self, value: &'a Option<T>, flag: &str) -> Result<&'a T, CliError> {
        value.as_ref().ok_or_else(|| CliError::Config(format!("missing required setting `--{flag}`")))
    }

    pub fn groups(&self) -> (usize, usize) {
        let g = self.groups.unwrap_or(4);
        (self.g_u.unwrap_or(g), self.g_v.unwrap_or(g))
    }

    pub fn algorithm(&self) -> Result<Algorithm, CliError> {
        let alg: Algorithm = parse(self.alg.as_deref().unwrap_or("imp"))?;
        match alg {
            Algorithm::Imp | Algorithm::Em => Ok(alg),
            other => Err(CliError::Config(format!("`{other}` cannot be trained; use imp or em"))),
        }
    }

    pub fn sweep_algorithms(&self) -> Result<Vec<Algorithm>, CliError> {
        match &self.algs {
            Some(list) => list.iter().map(|a| parse(a)).collect(),
            None => Ok(vec![Algorithm::Baseline, Algorithm::Imp, Algorithm::Em]),
        }
    }

    pub fn incoming(&self) -> Result<IncomingCount, CliError> {
        match self.incoming.as_deref().unwrap_or("extrinsic") {
            "extrinsic" => Ok(IncomingCount::Extrinsic),
            "literal" => Ok(IncomingCount::Literal),
            other => Err(CliError::Config(format!("unknown incoming mode `{other}`"))),
        }
    }

    pub fn learner(&self) -> Result<LearnerConfig, CliError> {
        let (g_u, g_v) = self.groups();
        let vd = VdvqConfig::default();
        let imp = ImpConfig::default();
        let em = EmConfig::default();
        let update = match self.em_update.as_deref().unwrap_or("normalized") {
            "normalized" => EmUpdate::Normalized,
            "unnormalized" => EmUpdate::Unnormalized,
            other => return Err(CliError::Config(format!("unknown EM update `{other}`"))),
        };
        let estimator: Estimator = parse(self.estimator.as_deref().unwrap_or("r1"))?;
        let init: InitMethod = parse(self.init.as_deref().unwrap_or("vdvq"))?;
        Ok(LearnerConfig {
            g_u,
            g_v,
            init,
            vdvq: VdvqConfig {
                beta: self.beta.unwrap_or(vd.beta),
                sweeps: self.sweeps.unwrap_or(vd.sweeps),
                noise_sd: self.noise_sd.unwrap_or(vd.noise_sd),
                epsilon: self.epsilon.unwrap_or(vd.epsilon),
            },
            imp: ImpConfig {
                max_iters: self.imp_max_iters.unwrap_or(imp.max_iters),
                tol: self.imp_tol.unwrap_or(imp.tol),
                damping: self.damping.unwrap_or(imp.damping),
            },
            em: EmConfig {
                max_iters: self.em_max_iters.unwrap_or(em.max_iters),
                tol: self.em_tol.unwrap_or(em.tol),
                update,
            },
            estimator,
        })
    }
}

fn parse<T: std::str::FromStr<Err = fgcf::Error>>(s: &str) -> Result<T, CliError> {
    s.parse().map_err(|e: fgcf::Error| CliError::Config(e.to_string()))
}
