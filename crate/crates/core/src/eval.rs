//! Rating estimators, RMSE scoring and the cold-start sweep protocol.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::em::{em_run, EmConfig, NodeBeliefs};
use crate::error::{Error, Result};
use crate::imp::{imp_run, ImpConfig};
use crate::init::{vdvq_model, VdvqConfig};
use crate::model::{GroupModel, ObservationSet, SyntheticTruth};
use crate::numeric::argmax;
use crate::posterior::PosteriorEstimates;
use crate::rng::{stream, substream};

/// How a predicted rating was formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Conditional mean of the rating posterior.
    R1,
    /// Conditional mean of the kernel row at the MAP groups.
    R2,
    /// Most probable rating of the posterior.
    Map,
    /// Movie mean rating.
    MovieMean,
    /// Conditional mean given the true groups and kernel.
    KnownGroups,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::R1 => "r1",
            Estimator::R2 => "r2",
            Estimator::Map => "map",
            Estimator::MovieMean => "movie-mean",
            Estimator::KnownGroups => "known-groups",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "r1" => Ok(Estimator::R1),
            "r2" => Ok(Estimator::R2),
            "map" => Ok(Estimator::Map),
            "movie-mean" => Ok(Estimator::MovieMean),
            "known-groups" => Ok(Estimator::KnownGroups),
            other => Err(Error::param(format!("unknown estimator `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub user: usize,
    pub movie: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub estimator: Estimator,
    pub entries: Vec<Prediction>,
}

impl PredictionSet {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "user,movie,estimator,prediction")?;
        for p in &self.entries {
            writeln!(out, "{},{},{},{}", p.user, p.movie, self.estimator, p.value)?;
        }
        Ok(())
    }
}

fn posterior_mean(p: &[f64], alphabet: &[i32]) -> f64 {
    p.iter().zip(alphabet).map(|(p, &r)| p * f64::from(r)).sum()
}

fn rating_posterior<'a>(post: &'a PosteriorEstimates, user: usize, movie: usize) -> Result<&'a [f64]> {
    post.rating(user, movie)
        .ok_or_else(|| Error::param(format!("no rating posterior for pair ({user}, {movie})")))
}

/// `r̂₁ = Σ_r r p̂(r)` for each pair.
pub fn predict_r1(post: &PosteriorEstimates, alphabet: &[i32], pairs: &[(usize, usize)]) -> Result<PredictionSet> {
    let entries = pairs
        .iter()
        .map(|&(user, movie)| {
            let p = rating_posterior(post, user, movie)?;
            Ok(Prediction {
                user,
                movie,
                value: posterior_mean(p, alphabet),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PredictionSet {
        estimator: Estimator::R1,
        entries,
    })
}

/// Most probable rating value of each pair's posterior (ties to the lowest).
pub fn predict_map_rating(
    post: &PosteriorEstimates,
    alphabet: &[i32],
    pairs: &[(usize, usize)],
) -> Result<PredictionSet> {
    let entries = pairs
        .iter()
        .map(|&(user, movie)| {
            let p = rating_posterior(post, user, movie)?;
            Ok(Prediction {
                user,
                movie,
                value: f64::from(alphabet[argmax(p)]),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PredictionSet {
        estimator: Estimator::Map,
        entries,
    })
}

/// MAP group of every user and movie, ties to the smallest index.
pub fn map_groups(post: &PosteriorEstimates) -> (Vec<usize>, Vec<usize>) {
    (
        post.users.iter().map(|p| argmax(p)).collect(),
        post.movies.iter().map(|p| argmax(p)).collect(),
    )
}

/// `r̂₂ = Σ_r r w(r | û_n, v̂_m)` for each pair.
pub fn predict_r2(
    user_groups: &[usize],
    movie_groups: &[usize],
    model: &GroupModel,
    pairs: &[(usize, usize)],
) -> Result<PredictionSet> {
    hard_group_predictions(user_groups, movie_groups, model, pairs, Estimator::R2)
}

/// Conditional-mean predictions given the true groups.
pub fn known_group_predictions(
    truth: &SyntheticTruth,
    model: &GroupModel,
    pairs: &[(usize, usize)],
) -> Result<PredictionSet> {
    hard_group_predictions(&truth.user_groups, &truth.movie_groups, model, pairs, Estimator::KnownGroups)
}

fn hard_group_predictions(
    user_groups: &[usize],
    movie_groups: &[usize],
    model: &GroupModel,
    pairs: &[(usize, usize)],
    estimator: Estimator,
) -> Result<PredictionSet> {
    let entries = pairs
        .iter()
        .map(|&(user, movie)| {
            let (u, v) = match (user_groups.get(user), movie_groups.get(movie)) {
                (Some(&u), Some(&v)) if u < model.g_u() && v < model.g_v() => (u, v),
                _ => return Err(Error::param(format!("no valid group for pair ({user}, {movie})"))),
            };
            Ok(Prediction {
                user,
                movie,
                value: model.mean_rating(u, v),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PredictionSet { estimator, entries })
}

/// Root mean squared error of predictions against the observed ratings.
pub fn rmse(pred: &PredictionSet, truth: &ObservationSet) -> Result<f64> {
    if pred.entries.is_empty() {
        return Err(Error::param("no predictions to score"));
    }
    let mut sq = 0.0;
    for p in &pred.entries {
        let e = truth
            .find(p.user, p.movie)
            .ok_or_else(|| Error::param(format!("pair ({}, {}) has no true rating", p.user, p.movie)))?;
        sq += (p.value - f64::from(truth.rating_value(e))).powi(2);
    }
    Ok((sq / pred.entries.len() as f64).sqrt())
}

/// Per-movie mean training rating; movies without ratings use the global mean.
pub fn movie_average_baseline(obs: &ObservationSet, pairs: &[(usize, usize)]) -> Result<PredictionSet> {
    let global = obs.mean_rating().unwrap_or(0.0);
    let entries = pairs
        .iter()
        .map(|&(user, movie)| {
            if movie >= obs.n_movies() {
                return Err(Error::param(format!("movie {movie} outside the data")));
            }
            let edges = obs.movie_edges(movie);
            let value = if edges.is_empty() {
                global
            } else {
                edges.iter().map(|&e| f64::from(obs.rating_value(e))).sum::<f64>() / edges.len() as f64
            };
            Ok(Prediction { user, movie, value })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PredictionSet {
        estimator: Estimator::MovieMean,
        entries,
    })
}

/// Hide `count` uniformly chosen triples as a validation set.
pub fn hide_validation(obs: &ObservationSet, count: usize, seed: u64) -> Result<(ObservationSet, ObservationSet)> {
    if count >= obs.len() && count > 0 {
        return Err(Error::param(format!(
            "cannot hide {count} of {} observations; at least one must remain for training",
            obs.len()
        )));
    }
    let mut hidden = vec![false; obs.len()];
    for e in sample(&mut substream(seed, "validation"), obs.len(), count) {
        hidden[e] = true;
    }
    let (val, train): (Vec<usize>, Vec<usize>) = (0..obs.len()).partition(|&e| hidden[e]);
    Ok((obs.subset(&train)?, obs.subset(&val)?))
}

/// Keep `round(avg_per_user * N)` uniformly chosen triples.
pub fn subsample(obs: &ObservationSet, avg_per_user: f64, seed: u64, index: u64) -> Result<ObservationSet> {
    let keep = (avg_per_user * obs.n_users() as f64).round();
    if !(keep >= 0.0) || keep as usize > obs.len() {
        return Err(Error::param(format!(
            "density {avg_per_user} needs {keep} observations but only {} are available",
            obs.len()
        )));
    }
    let mut chosen = sample(&mut stream(seed, "subsample", index, 0), obs.len(), keep as usize).into_vec();
    chosen.sort_unstable();
    obs.subset(&chosen)
}

/// Learners and reference predictors a sweep can score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Baseline,
    Imp,
    Em,
    LowerBound,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Baseline => "baseline",
            Algorithm::Imp => "imp",
            Algorithm::Em => "em",
            Algorithm::LowerBound => "lower-bound",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Algorithm::Baseline),
            "imp" => Ok(Algorithm::Imp),
            "em" => Ok(Algorithm::Em),
            "lower-bound" => Ok(Algorithm::LowerBound),
            other => Err(Error::param(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Starting point for the learners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMethod {
    Uniform,
    #[default]
    Vdvq,
}

impl FromStr for InitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(InitMethod::Uniform),
            "vdvq" => Ok(InitMethod::Vdvq),
            other => Err(Error::param(format!("unknown init method `{other}`"))),
        }
    }
}

/// Learner settings shared by `train`, `predict` and sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub g_u: usize,
    pub g_v: usize,
    pub init: InitMethod,
    pub vdvq: VdvqConfig,
    pub imp: ImpConfig,
    pub em: EmConfig,
    pub estimator: Estimator,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            g_u: 4,
            g_v: 4,
            init: InitMethod::Vdvq,
            vdvq: VdvqConfig::default(),
            imp: ImpConfig::default(),
            em: EmConfig::default(),
            estimator: Estimator::R1,
        }
    }
}

/// Initial model (and node beliefs, for VDVQ) for a training set.
pub fn initial_model(train: &ObservationSet, config: &LearnerConfig, seed: u64) -> Result<(GroupModel, Option<NodeBeliefs>)> {
    match config.init {
        InitMethod::Uniform => Ok((GroupModel::uniform(train.alphabet().to_vec(), config.g_u, config.g_v)?, None)),
        InitMethod::Vdvq => {
            let out = vdvq_model(train, config.g_u, config.g_v, &config.vdvq, seed)?;
            Ok((out.model, Some(out.beliefs)))
        }
    }
}

/// A trained learner's outputs.
#[derive(Debug, Clone)]
pub struct Trained {
    /// Model used for hard-decision predictions (EM's learned kernel, or the
    /// initial kernel for IMP).
    pub model: GroupModel,
    pub posteriors: PosteriorEstimates,
    pub iterations: usize,
    /// Convergence trace: max message change (IMP) or NLL (EM).
    pub trace: Vec<f64>,
}

/// Initialize and train `alg` (IMP or EM), with posteriors for `query`.
pub fn train(
    alg: Algorithm,
    train: &ObservationSet,
    config: &LearnerConfig,
    seed: u64,
    query: &[(usize, usize)],
) -> Result<Trained> {
    let (model, beliefs) = initial_model(train, config, seed)?;
    train_from(alg, &model, beliefs.as_ref(), train, config, query)
}

/// Train `alg` from a given initial model.
pub fn train_from(
    alg: Algorithm,
    model: &GroupModel,
    beliefs: Option<&NodeBeliefs>,
    train: &ObservationSet,
    config: &LearnerConfig,
    query: &[(usize, usize)],
) -> Result<Trained> {
    match alg {
        Algorithm::Imp => {
            let out = imp_run(model, train, &config.imp, query)?;
            Ok(Trained {
                model: model.clone(),
                posteriors: out.posteriors,
                iterations: out.report.iterations(),
                trace: out.report.max_change,
            })
        }
        Algorithm::Em => {
            let out = em_run(model, train, beliefs, &config.em, query)?;
            Ok(Trained {
                model: out.state.fitted_model()?,
                iterations: out.iterations(),
                posteriors: out.posteriors,
                trace: out.nll,
            })
        }
        other => Err(Error::param(format!("`{other}` is not a trainable learner"))),
    }
}

/// Predictions of a trained learner with the chosen estimator.
pub fn predict(trained: &Trained, estimator: Estimator, pairs: &[(usize, usize)]) -> Result<PredictionSet> {
    let alphabet = trained.model.ratings();
    match estimator {
        Estimator::R1 => predict_r1(&trained.posteriors, alphabet, pairs),
        Estimator::Map => predict_map_rating(&trained.posteriors, alphabet, pairs),
        Estimator::R2 => {
            let (u, v) = map_groups(&trained.posteriors);
            predict_r2(&u, &v, &trained.model, pairs)
        }
        other => Err(Error::param(format!("estimator `{other}` does not apply to a trained learner"))),
    }
}

/// Data for a cold-start sweep.
#[derive(Debug, Clone)]
pub struct SweepData {
    pub id: String,
    /// Pool that training sets are subsampled from.
    pub train: ObservationSet,
    /// Fixed held-out set.
    pub validation: ObservationSet,
    /// Generating model and groups, when known.
    pub truth: Option<(GroupModel, SyntheticTruth)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub densities: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub seeds: Vec<u64>,
    pub learner: LearnerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub density: f64,
    pub alg: Algorithm,
    pub estimator: Estimator,
    pub seed: u64,
    pub rmse: f64,
    pub iters: usize,
}

/// Per-cell bookkeeping (one cell is a density and seed).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub density: f64,
    pub seed: u64,
    pub train_size: usize,
    /// Validation pairs whose user or movie has no training rating.
    pub cold_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMetadata {
    pub dataset: String,
    pub g_u: usize,
    pub g_v: usize,
    pub validation_size: usize,
    pub subsampling: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub cells: Vec<SweepCell>,
    pub metadata: SweepMetadata,
}

/// Mean and standard error of a sample.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl SweepResult {
    /// `density,alg,estimator,seed,rmse,iters`
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "density,alg,estimator,seed,rmse,iters")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{},{}", r.density, r.alg, r.estimator, r.seed, r.rmse, r.iters)?;
        }
        Ok(())
    }

    pub fn write_cells_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "density,seed,train_size,cold_pairs")?;
        for c in &self.cells {
            writeln!(out, "{},{},{},{}", c.density, c.seed, c.train_size, c.cold_pairs)?;
        }
        Ok(())
    }

    /// RMSE values of one series at one density, in seed order.
    pub fn series(&self, alg: Algorithm, density: f64) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.alg == alg && r.density == density)
            .map(|r| r.rmse)
            .collect()
    }

    /// Plot-ready table: one line per density, mean and standard error per
    /// algorithm.
    pub fn write_pivot_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut keys: Vec<(Algorithm, Estimator)> = self.rows.iter().map(|r| (r.alg, r.estimator)).collect();
        keys.sort();
        keys.dedup();
        let mut densities: Vec<f64> = self.rows.iter().map(|r| r.density).collect();
        densities.sort_by(f64::total_cmp);
        densities.dedup();
        write!(out, "density")?;
        for (alg, est) in &keys {
            write!(out, ",{alg}:{est}_mean,{alg}:{est}_se")?;
        }
        writeln!(out)?;
        for d in densities {
            write!(out, "{d}")?;
            for &(alg, est) in &keys {
                let xs: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| r.alg == alg && r.estimator == est && r.density == d)
                    .map(|r| r.rmse)
                    .collect();
                let (m, se) = mean_and_se(&xs);
                write!(out, ",{m},{se}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Run every algorithm at every density for every seed, scoring on the
/// fixed validation set.
///
/// Each (density, seed) cell subsamples its own training set from the pool;
/// cells run in parallel and rows come back ordered by density, seed, then
/// algorithm as listed.
pub fn cold_start_sweep(data: &SweepData, spec: &SweepSpec) -> Result<SweepResult> {
    if spec.algorithms.contains(&Algorithm::LowerBound) && data.truth.is_none() {
        return Err(Error::param("the lower-bound series needs a dataset with known groups"));
    }
    if data.validation.is_empty() {
        return Err(Error::param("validation set is empty"));
    }
    let pairs = data.validation.pairs();
    let cells: Vec<(usize, u64)> = (0..spec.densities.len())
        .flat_map(|d| spec.seeds.iter().map(move |&s| (d, s)))
        .collect();
    let results = cells
        .par_iter()
        .map(|&(di, seed)| run_cell(data, spec, &pairs, di, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut cell_info = Vec::new();
    for (cell_rows, info) in results {
        rows.extend(cell_rows);
        cell_info.push(info);
    }
    Ok(SweepResult {
        rows,
        cells: cell_info,
        metadata: SweepMetadata {
            dataset: data.id.clone(),
            g_u: spec.learner.g_u,
            g_v: spec.learner.g_v,
            validation_size: data.validation.len(),
            subsampling: "uniform without replacement from the training pool".into(),
        },
    })
}

fn run_cell(
    data: &SweepData,
    spec: &SweepSpec,
    pairs: &[(usize, usize)],
    di: usize,
    seed: u64,
) -> Result<(Vec<SweepRow>, SweepCell)> {
    let density = spec.densities[di];
    let train_set = subsample(&data.train, density, seed, di as u64)?;
    let cold_pairs = pairs
        .iter()
        .filter(|&&(n, m)| train_set.user_degree(n) == 0 || train_set.movie_degree(m) == 0)
        .count();
    let mut initial: Option<(GroupModel, Option<NodeBeliefs>)> = None;
    let mut rows = Vec::with_capacity(spec.algorithms.len());
    for &alg in &spec.algorithms {
        let (pred, iters) = match alg {
            Algorithm::Baseline => (movie_average_baseline(&train_set, pairs)?, 0),
            Algorithm::LowerBound => {
                let (model, truth) = data.truth.as_ref().expect("checked above");
                (known_group_predictions(truth, model, pairs)?, 0)
            }
            Algorithm::Imp | Algorithm::Em => {
                if initial.is_none() {
                    initial = Some(initial_model(&train_set, &spec.learner, seed)?);
                }
                let (model, beliefs) = initial.as_ref().expect("set above");
                let trained = train_from(alg, model, beliefs.as_ref(), &train_set, &spec.learner, pairs)?;
                (predict(&trained, spec.learner.estimator, pairs)?, trained.iterations)
            }
        };
        rows.push(SweepRow {
            density,
            alg,
            estimator: pred.estimator,
            seed,
            rmse: rmse(&pred, &data.validation)?,
            iters,
        });
    }
    Ok((
        rows,
        SweepCell {
            density,
            seed,
            train_size: train_set.len(),
            cold_pairs,
        },
    ))
}

/// Predictions keyed by pair, for joining against other tables.
pub fn prediction_map(pred: &PredictionSet) -> HashMap<(usize, usize), f64> {
    pred.entries.iter().map(|p| ((p.user, p.movie), p.value)).collect()
}
