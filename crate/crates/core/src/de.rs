//! Density evolution for IMP, realized as sampled population dynamics.
//!
//! A population of `(true group, belief)` pairs stands in for the joint law
//! of a randomly chosen edge message and the group of the node that sent it.
//! Each new user-side sample draws its true group from the prior, an edge
//! degree `d` from λ, `d - 1` movie-side samples from the previous population,
//! ratings from the generating kernel given the true groups, and combines them
//! with the inference kernel. The movie side is symmetric.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GroupModel;
use crate::numeric::{argmax, combine, entropy, floored};
use crate::rng::{categorical, stream};

/// Node- and edge-perspective degree distributions for one side.
///
/// Index `j` of each vector is the probability of degree `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeDistribution {
    pub node: Vec<f64>,
    pub edge: Vec<f64>,
}

/// Edge-perspective law `λ_j = Λ_j j / Σ_k Λ_k k`.
pub fn edge_degree(node: &[f64]) -> Result<Vec<f64>> {
    if node.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::param("degree probabilities must lie in [0, 1]"));
    }
    let total: f64 = node.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::param(format!("node degree distribution sums to {total}")));
    }
    let mean: f64 = node.iter().enumerate().map(|(j, p)| j as f64 * p).sum();
    if !(mean > 0.0) {
        return Err(Error::param("node degree distribution has zero mean"));
    }
    Ok(node.iter().enumerate().map(|(j, p)| p * j as f64 / mean).collect())
}

impl DegreeDistribution {
    pub fn new(node: Vec<f64>) -> Result<Self> {
        let edge = edge_degree(&node)?;
        Ok(Self { node, edge })
    }

    /// Empirical distribution of observed node degrees.
    pub fn from_degrees(degrees: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut counts: Vec<usize> = Vec::new();
        let mut total = 0usize;
        for d in degrees {
            if d >= counts.len() {
                counts.resize(d + 1, 0);
            }
            counts[d] += 1;
            total += 1;
        }
        if total == 0 {
            return Err(Error::param("no degrees given"));
        }
        Self::new(counts.iter().map(|&c| c as f64 / total as f64).collect())
    }

    pub fn mean(&self) -> f64 {
        self.node.iter().enumerate().map(|(j, p)| j as f64 * p).sum()
    }

    pub fn max_degree(&self) -> usize {
        self.node.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}

/// Degree laws for both sides, the JSON form read by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreePair {
    pub users: DegreeDistribution,
    pub movies: DegreeDistribution,
}

#[derive(Serialize, Deserialize)]
struct DegreeFile {
    users: Vec<f64>,
    movies: Vec<f64>,
}

impl DegreePair {
    pub fn new(users: Vec<f64>, movies: Vec<f64>) -> Result<Self> {
        Ok(Self {
            users: DegreeDistribution::new(users)?,
            movies: DegreeDistribution::new(movies)?,
        })
    }

    /// Parse `{"users": [Λ_0, Λ_1, ...], "movies": [Γ_0, ...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: DegreeFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            context: format!("degree json (line {}, column {})", e.line(), e.column()),
            message: e.to_string(),
        })?;
        Self::new(file.users, file.movies)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&DegreeFile {
            users: self.users.node.clone(),
            movies: self.movies.node.clone(),
        })
        .expect("degrees serialize")
    }
}

/// How many incoming messages an outgoing edge message combines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IncomingCount {
    /// `d - 1` for an edge of a degree-`d` node, matching the excluded edge.
    #[default]
    Extrinsic,
    /// `d` incoming messages.
    Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeConfig {
    pub population: usize,
    pub incoming: IncomingCount,
    /// Kernel used for inference when it differs from the generating one.
    pub inference: Option<GroupModel>,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self {
            population: 100_000,
            incoming: IncomingCount::Extrinsic,
            inference: None,
        }
    }
}

/// One side's samples: true groups with a belief vector each.
#[derive(Debug, Clone, PartialEq)]
pub struct SidePopulation {
    pub groups: Vec<usize>,
    /// Flat `S x g` beliefs.
    pub beliefs: Vec<f64>,
    pub width: usize,
}

impl SidePopulation {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn belief(&self, s: usize) -> &[f64] {
        &self.beliefs[s * self.width..(s + 1) * self.width]
    }
}

/// Empirical message laws `μ^{(i)}` (user side) and `ν^{(i)}` (movie side).
#[derive(Debug, Clone, PartialEq)]
pub struct MessagePopulation {
    pub users: SidePopulation,
    pub movies: SidePopulation,
    pub iteration: usize,
}

/// Initial population: true groups from the priors, beliefs equal to the priors.
pub fn de_init(model: &GroupModel, size: usize, seed: u64) -> Result<MessagePopulation> {
    if size == 0 {
        return Err(Error::param("population size must be at least 1"));
    }
    model.validate()?;
    let side = |prior: &[f64], name: &str| {
        let mut rng = stream(seed, name, 0, 0);
        SidePopulation {
            groups: (0..size).map(|_| categorical(prior, &mut rng)).collect(),
            beliefs: prior.repeat(size),
            width: prior.len(),
        }
    };
    Ok(MessagePopulation {
        users: side(model.p_u(), "de-init-users"),
        movies: side(model.p_v(), "de-init-movies"),
        iteration: 0,
    })
}

#[derive(Clone, Copy)]
enum Target {
    Users,
    Movies,
}

/// Draw `count` samples of one side, each combining opposite-side messages.
#[allow(clippy::too_many_arguments)]
fn resample_side(
    target: Target,
    opposite: &SidePopulation,
    truth: &GroupModel,
    inference: &GroupModel,
    inference_kernel: &[f64],
    degree_law: &[f64],
    drop_one: bool,
    count: usize,
    seed: u64,
    label: &str,
    epoch: u64,
) -> SidePopulation {
    let (prior_truth, prior_inf) = match target {
        Target::Users => (truth.p_u(), inference.p_u()),
        Target::Movies => (truth.p_v(), inference.p_v()),
    };
    let width = prior_inf.len();
    let other_width = opposite.width;
    let (gv, nr) = (inference.g_v(), inference.n_ratings());
    let samples: Vec<(usize, Vec<f64>)> = (0..count)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream(seed, label, epoch, s as u64);
            let group = categorical(prior_truth, &mut rng);
            let d = categorical(degree_law, &mut rng);
            let k = if drop_one { d.saturating_sub(1) } else { d };
            let mut factors = vec![0.0; k * width];
            for j in 0..k {
                let pick = rng.random_range(0..opposite.len());
                let other_group = opposite.groups[pick];
                let other_belief = opposite.belief(pick);
                let row = match target {
                    Target::Users => truth.kernel_row(group, other_group),
                    Target::Movies => truth.kernel_row(other_group, group),
                };
                let r = categorical(row, &mut rng);
                for a in 0..width {
                    factors[j * width + a] = (0..other_width)
                        .map(|b| {
                            let (u, v) = match target {
                                Target::Users => (a, b),
                                Target::Movies => (b, a),
                            };
                            inference_kernel[(u * gv + v) * nr + r] * other_belief[b]
                        })
                        .sum();
                }
            }
            let mut belief = vec![0.0; width];
            combine(prior_inf, &factors, &mut belief, None).expect("floored kernel keeps normalizers positive");
            (group, belief)
        })
        .collect();
    let mut groups = Vec::with_capacity(count);
    let mut beliefs = Vec::with_capacity(count * width);
    for (g, b) in samples {
        groups.push(g);
        beliefs.extend_from_slice(&b);
    }
    SidePopulation { groups, beliefs, width }
}

fn check_shapes(model: &GroupModel, config: &DeConfig) -> Result<()> {
    if let Some(inf) = &config.inference {
        if inf.g_u() != model.g_u() || inf.g_v() != model.g_v() || inf.n_ratings() != model.n_ratings() {
            return Err(Error::param("inference model shape differs from the generating model"));
        }
    }
    Ok(())
}

/// One density-evolution step for both sides, each reading only the
/// previous population.
pub fn de_iterate(
    pop: &MessagePopulation,
    model: &GroupModel,
    degrees: &DegreePair,
    config: &DeConfig,
    seed: u64,
) -> Result<MessagePopulation> {
    check_shapes(model, config)?;
    let inference = config.inference.as_ref().unwrap_or(model);
    let kernel = floored(inference.kernel());
    let drop_one = config.incoming == IncomingCount::Extrinsic;
    let size = pop.users.len();
    let epoch = pop.iteration as u64 + 1;
    let users = resample_side(
        Target::Users,
        &pop.movies,
        model,
        inference,
        &kernel,
        &degrees.users.edge,
        drop_one,
        size,
        seed,
        "de-users",
        epoch,
    );
    let movies = resample_side(
        Target::Movies,
        &pop.users,
        model,
        inference,
        &kernel,
        &degrees.movies.edge,
        drop_one,
        pop.movies.len(),
        seed,
        "de-movies",
        epoch,
    );
    Ok(MessagePopulation {
        users,
        movies,
        iteration: pop.iteration + 1,
    })
}

/// Node posteriors implied by a message population: node-perspective degree
/// `d ~ Λ` and all `d` incoming messages combined.
pub fn de_node_beliefs(
    pop: &MessagePopulation,
    model: &GroupModel,
    degrees: &DegreePair,
    config: &DeConfig,
    seed: u64,
) -> Result<MessagePopulation> {
    check_shapes(model, config)?;
    let inference = config.inference.as_ref().unwrap_or(model);
    let kernel = floored(inference.kernel());
    let epoch = pop.iteration as u64;
    Ok(MessagePopulation {
        users: resample_side(
            Target::Users,
            &pop.movies,
            model,
            inference,
            &kernel,
            &degrees.users.node,
            false,
            pop.users.len(),
            seed,
            "de-node-users",
            epoch,
        ),
        movies: resample_side(
            Target::Movies,
            &pop.users,
            model,
            inference,
            &kernel,
            &degrees.movies.node,
            false,
            pop.movies.len(),
            seed,
            "de-node-movies",
            epoch,
        ),
        iteration: pop.iteration,
    })
}

pub const ENTROPY_BINS: usize = 10;

/// Summary statistics of one side of a population.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideMetrics {
    /// Mean belief assigned to the true group.
    pub mean_true_belief: f64,
    /// Standard error of that mean.
    pub std_error: f64,
    /// Fraction of samples whose MAP group differs from the true group.
    pub map_error: f64,
    pub mean_entropy: f64,
    /// Entropy histogram over `[0, ln g]` in [`ENTROPY_BINS`] bins.
    pub entropy_histogram: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeMetrics {
    pub iteration: usize,
    pub users: SideMetrics,
    pub movies: SideMetrics,
}

pub fn side_metrics(side: &SidePopulation) -> SideMetrics {
    let s = side.len() as f64;
    let g = side.width;
    let max_entropy = (g as f64).ln();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut errors = 0usize;
    let mut ent_total = 0.0;
    let mut hist = vec![0usize; ENTROPY_BINS];
    for (i, &group) in side.groups.iter().enumerate() {
        let b = side.belief(i);
        sum += b[group];
        sum_sq += b[group] * b[group];
        errors += usize::from(argmax(b) != group);
        let h = entropy(b);
        ent_total += h;
        let bin = if max_entropy > 0.0 {
            ((h / max_entropy * ENTROPY_BINS as f64) as usize).min(ENTROPY_BINS - 1)
        } else {
            0
        };
        hist[bin] += 1;
    }
    let mean = sum / s;
    let var = if side.len() > 1 {
        ((sum_sq - s * mean * mean) / (s - 1.0)).max(0.0)
    } else {
        0.0
    };
    SideMetrics {
        mean_true_belief: mean,
        std_error: (var / s).sqrt(),
        map_error: errors as f64 / s,
        mean_entropy: ent_total / s,
        entropy_histogram: hist,
    }
}

pub fn de_metrics(pop: &MessagePopulation) -> DeMetrics {
    DeMetrics {
        iteration: pop.iteration,
        users: side_metrics(&pop.users),
        movies: side_metrics(&pop.movies),
    }
}

/// Metrics of message and node populations at every iteration `0..=iters`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeTrace {
    pub messages: Vec<DeMetrics>,
    pub nodes: Vec<DeMetrics>,
}

pub fn de_run(
    model: &GroupModel,
    degrees: &DegreePair,
    iters: usize,
    config: &DeConfig,
    seed: u64,
) -> Result<(MessagePopulation, DeTrace)> {
    let mut pop = de_init(model, config.population, seed)?;
    let mut trace = DeTrace {
        messages: vec![de_metrics(&pop)],
        nodes: vec![de_metrics(&de_node_beliefs(&pop, model, degrees, config, seed)?)],
    };
    for _ in 0..iters {
        pop = de_iterate(&pop, model, degrees, config, seed)?;
        trace.messages.push(de_metrics(&pop));
        trace.nodes.push(de_metrics(&de_node_beliefs(&pop, model, degrees, config, seed)?));
    }
    Ok((pop, trace))
}

/// Local tree-likeness condition for depth-`l` neighborhoods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TreeCondition {
    /// `(2l + 1) ln d / ln N`.
    pub lhs: f64,
    /// `1 - δ`.
    pub rhs: f64,
    pub holds: bool,
    /// Aspect ratio `M / N`.
    pub ratio: f64,
}

pub fn tree_condition(n: usize, m: usize, d_max: usize, depth: usize, delta: f64) -> Result<TreeCondition> {
    if n <= 1 {
        return Err(Error::param("tree condition needs N > 1"));
    }
    if d_max < 2 {
        return Err(Error::param("tree condition needs a maximum degree of at least 2"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!("delta must lie in (0, 1), got {delta}")));
    }
    let lhs = (2 * depth + 1) as f64 * (d_max as f64).ln() / (n as f64).ln();
    let rhs = 1.0 - delta;
    Ok(TreeCondition {
        lhs,
        rhs,
        holds: lhs < rhs,
        ratio: m as f64 / n as f64,
    })
}
