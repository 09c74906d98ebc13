//! VDVQ initialization: GLA codebook splitting with soft k-means on
//! partially observed rating vectors.
//!
//! Users are clustered as vectors over movies (and movies as vectors over
//! users) using only the coordinates each vector actually observes. A codebook
//! entry is a "critic", a synthetic row that rates every coordinate. The soft
//! memberships then give per-node group beliefs, group priors, and a soft
//! frequency estimate of the kernel.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::em::NodeBeliefs;
use crate::error::{Error, Result};
use crate::model::{GroupModel, ObservationSet, Side};
use crate::numeric::{argmax, normalize};
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VdvqConfig {
    /// Inverse temperature of the soft assignment.
    pub beta: f64,
    /// Soft k-means sweeps per splitting stage.
    pub sweeps: usize,
    /// Standard deviation of the splitting perturbation.
    pub noise_sd: f64,
    /// Belief placed on the MAP group of each node.
    pub epsilon: f64,
}

impl Default for VdvqConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            sweeps: 10,
            noise_sd: 0.01,
            epsilon: 0.9,
        }
    }
}

/// A set of critics for one side of the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    /// Which side's nodes the critics stand for.
    pub side: Side,
    /// One full-length vector per critic, indexed by the other side's nodes.
    pub critics: Vec<Vec<f64>>,
    /// Splitting stage `i`.
    pub stage: usize,
    /// Soft k-means sweep `j` within the stage.
    pub sweep: usize,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.critics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.critics.is_empty()
    }
}

/// Soft memberships of every node on one side.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftAssignment {
    pub weights: Vec<Vec<f64>>,
    pub beta: f64,
}

impl SoftAssignment {
    /// Total membership mass of each critic.
    pub fn masses(&self) -> Vec<f64> {
        let g = self.weights.first().map_or(0, Vec::len);
        let mut mass = vec![0.0; g];
        for w in &self.weights {
            mass.iter_mut().zip(w).for_each(|(m, x)| *m += x);
        }
        mass
    }
}

fn other(side: Side) -> Side {
    match side {
        Side::Users => Side::Movies,
        Side::Movies => Side::Users,
    }
}

/// `(coordinate, rating value)` pairs observed by `node`.
fn row(obs: &ObservationSet, side: Side, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
    obs.edges(side, node).iter().map(move |&e| {
        let t = obs.triple(e);
        let coord = match side {
            Side::Users => t.movie,
            Side::Movies => t.user,
        };
        (coord, f64::from(obs.rating_value(e)))
    })
}

/// Single critic holding each coordinate's mean rating (global mean where a
/// coordinate has no ratings).
pub fn vdvq_init(obs: &ObservationSet, side: Side) -> Result<Codebook> {
    let global = obs
        .mean_rating()
        .ok_or_else(|| Error::data("cannot initialize a codebook from an empty observation set"))?;
    let coords = other(side);
    let critic = (0..obs.n_nodes(coords))
        .map(|c| {
            let edges = obs.edges(coords, c);
            if edges.is_empty() {
                global
            } else {
                edges.iter().map(|&e| f64::from(obs.rating_value(e))).sum::<f64>() / edges.len() as f64
            }
        })
        .collect();
    Ok(Codebook {
        side,
        critics: vec![critic],
        stage: 0,
        sweep: 0,
    })
}

/// Double the codebook: originals unchanged, copies perturbed by i.i.d.
/// `N(0, noise_sd^2)` noise.
pub fn gla_split<R: Rng + ?Sized>(cb: &Codebook, noise_sd: f64, rng: &mut R) -> Result<Codebook> {
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::param(format!("noise_sd must be nonnegative, got {noise_sd}")));
    }
    let noise = Normal::new(0.0, noise_sd).map_err(|e| Error::param(e.to_string()))?;
    let mut critics = cb.critics.clone();
    for critic in &cb.critics {
        critics.push(critic.iter().map(|&c| c + noise.sample(rng)).collect());
    }
    Ok(Codebook {
        side: cb.side,
        critics,
        stage: cb.stage + 1,
        sweep: 0,
    })
}

/// Root-mean-square distance between a node's observed ratings and a critic,
/// over the node's observed coordinates only.
fn partial_distance(obs: &ObservationSet, side: Side, node: usize, critic: &[f64]) -> f64 {
    let deg = obs.edges(side, node).len();
    let sq: f64 = row(obs, side, node).map(|(c, r)| (critic[c] - r).powi(2)).sum();
    (sq / deg as f64).sqrt()
}

/// Soft memberships `π_n(u) ∝ exp(-β d_n(u))`; nodes without observations
/// get uniform memberships.
pub fn assign(cb: &Codebook, obs: &ObservationSet, beta: f64) -> Result<SoftAssignment> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::param(format!("beta must be positive, got {beta}")));
    }
    if cb.is_empty() {
        return Err(Error::param("codebook is empty"));
    }
    let side = cb.side;
    let g = cb.len();
    let weights = (0..obs.n_nodes(side))
        .into_par_iter()
        .map(|node| {
            if obs.edges(side, node).is_empty() {
                return vec![1.0 / g as f64; g];
            }
            let dist: Vec<f64> = cb.critics.iter().map(|c| partial_distance(obs, side, node, c)).collect();
            let nearest = dist.iter().copied().fold(f64::INFINITY, f64::min);
            let mut w: Vec<f64> = dist.iter().map(|d| (-beta * (d - nearest)).exp()).collect();
            normalize(&mut w);
            w
        })
        .collect();
    Ok(SoftAssignment { weights, beta })
}

/// One soft k-means sweep: assign, then move each critic coordinate to the
/// membership-weighted mean of the ratings observed there.
///
/// Coordinates nobody rated keep their value. A critic whose total membership
/// mass vanishes is re-seeded as a copy of the heaviest critic; the number of
/// re-seeded critics is returned alongside.
pub fn soft_kmeans_sweep(cb: &Codebook, obs: &ObservationSet, beta: f64) -> Result<(Codebook, SoftAssignment, usize)> {
    let side = cb.side;
    if (0..obs.n_nodes(side)).all(|n| obs.edges(side, n).is_empty()) {
        return Err(Error::data("soft k-means needs at least one node with an observation"));
    }
    let pi = assign(cb, obs, beta)?;
    let g = cb.len();
    let coords = other(side);
    let columns: Vec<Vec<f64>> = (0..obs.n_nodes(coords))
        .into_par_iter()
        .map(|c| {
            let mut num = vec![0.0; g];
            let mut den = vec![0.0; g];
            for &e in obs.edges(coords, c) {
                let t = obs.triple(e);
                let node = match side {
                    Side::Users => t.user,
                    Side::Movies => t.movie,
                };
                let r = f64::from(obs.rating_value(e));
                for u in 0..g {
                    num[u] += pi.weights[node][u] * r;
                    den[u] += pi.weights[node][u];
                }
            }
            (0..g)
                .map(|u| if den[u] > 0.0 { num[u] / den[u] } else { cb.critics[u][c] })
                .collect()
        })
        .collect();
    let mut critics: Vec<Vec<f64>> = (0..g).map(|u| columns.iter().map(|col| col[u]).collect()).collect();

    let masses: Vec<f64> = {
        let mut m = vec![0.0; g];
        for node in (0..obs.n_nodes(side)).filter(|&n| !obs.edges(side, n).is_empty()) {
            m.iter_mut().zip(&pi.weights[node]).for_each(|(a, w)| *a += w);
        }
        m
    };
    let heaviest = argmax(&masses);
    let mut reseeded = 0;
    for u in 0..g {
        if !(masses[u] > 0.0) && u != heaviest {
            critics[u] = critics[heaviest].clone();
            reseeded += 1;
        }
    }
    Ok((
        Codebook {
            side,
            critics,
            stage: cb.stage,
            sweep: cb.sweep + 1,
        },
        pi,
        reseeded,
    ))
}

/// Bookkeeping from a codebook design run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClusterReport {
    pub stages: usize,
    pub sweeps: usize,
    pub merges: usize,
    pub reseeded: usize,
}

/// Grow a codebook to `groups` critics: split and sweep until the next power
/// of two, then merge the two lightest critics until `groups` remain.
pub fn design_codebook<R: Rng + ?Sized>(
    obs: &ObservationSet,
    side: Side,
    groups: usize,
    config: &VdvqConfig,
    rng: &mut R,
) -> Result<(Codebook, SoftAssignment, ClusterReport)> {
    if groups == 0 {
        return Err(Error::param("number of groups must be positive"));
    }
    let mut cb = vdvq_init(obs, side)?;
    let mut report = ClusterReport::default();
    let run_sweeps = |cb: &mut Codebook, report: &mut ClusterReport| -> Result<()> {
        for _ in 0..config.sweeps {
            let (next, _, reseeded) = soft_kmeans_sweep(cb, obs, config.beta)?;
            *cb = next;
            report.sweeps += 1;
            report.reseeded += reseeded;
        }
        Ok(())
    };
    while cb.len() < groups {
        cb = gla_split(&cb, config.noise_sd, rng)?;
        report.stages += 1;
        run_sweeps(&mut cb, &mut report)?;
    }
    if cb.len() > groups {
        while cb.len() > groups {
            let masses = assign(&cb, obs, config.beta)?.masses();
            let mut order: Vec<usize> = (0..cb.len()).collect();
            order.sort_by(|&a, &b| masses[a].total_cmp(&masses[b]).then(a.cmp(&b)));
            let (keep, drop) = (order[0].min(order[1]), order[0].max(order[1]));
            let (wa, wb) = (masses[keep], masses[drop]);
            let total = wa + wb;
            let merged: Vec<f64> = cb.critics[keep]
                .iter()
                .zip(&cb.critics[drop])
                .map(|(a, b)| if total > 0.0 { (wa * a + wb * b) / total } else { 0.5 * (a + b) })
                .collect();
            cb.critics[keep] = merged;
            cb.critics.remove(drop);
            report.merges += 1;
        }
        run_sweeps(&mut cb, &mut report)?;
    }
    let pi = assign(&cb, obs, config.beta)?;
    Ok((cb, pi, report))
}

/// Soft rating frequencies per group pair:
/// `w(r|u,v) ∝ Σ_{(n,m)∈O: r_{n,m}=r} π_n(u) π̃_m(v)`.
///
/// Cells that receive no mass get a uniform row; their `(u, v)` indices are
/// returned.
pub fn estimate_w(
    users: &SoftAssignment,
    movies: &SoftAssignment,
    obs: &ObservationSet,
) -> Result<(Vec<f64>, Vec<(usize, usize)>)> {
    if users.weights.len() != obs.n_users() || movies.weights.len() != obs.n_movies() {
        return Err(Error::param("assignments must cover every user and movie"));
    }
    let gu = users.weights.first().map_or(0, Vec::len);
    let gv = movies.weights.first().map_or(0, Vec::len);
    if gu == 0 || gv == 0 {
        return Err(Error::param("assignments have no groups"));
    }
    let nr = obs.alphabet().len();
    let mut kernel = vec![0.0; gu * gv * nr];
    for t in obs.triples() {
        let (pu, pv) = (&users.weights[t.user], &movies.weights[t.movie]);
        for u in 0..gu {
            for v in 0..gv {
                kernel[(u * gv + v) * nr + t.rating] += pu[u] * pv[v];
            }
        }
    }
    let mut empty = Vec::new();
    for u in 0..gu {
        for v in 0..gv {
            let row = &mut kernel[(u * gv + v) * nr..(u * gv + v + 1) * nr];
            if !normalize(row) {
                row.fill(1.0 / nr as f64);
                empty.push((u, v));
            }
        }
    }
    Ok((kernel, empty))
}

/// Per-node beliefs with `epsilon` on the MAP critic and the rest spread
/// uniformly, plus the prior given by their normalized average.
pub fn priors_from_assignment(pi: &SoftAssignment, epsilon: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let g = pi.weights.first().map_or(0, Vec::len);
    if g == 0 {
        return Err(Error::param("assignment has no groups"));
    }
    if g > 1 && !(epsilon > 1.0 / g as f64 && epsilon <= 1.0) {
        return Err(Error::param(format!("epsilon must lie in (1/{g}, 1], got {epsilon}")));
    }
    let beliefs: Vec<Vec<f64>> = pi
        .weights
        .iter()
        .map(|w| {
            if g == 1 {
                return vec![1.0];
            }
            let mut b = vec![(1.0 - epsilon) / (g - 1) as f64; g];
            b[argmax(w)] = epsilon;
            b
        })
        .collect();
    let mut prior = vec![0.0; g];
    for b in &beliefs {
        prior.iter_mut().zip(b).for_each(|(p, x)| *p += x);
    }
    if !normalize(&mut prior) {
        prior = vec![1.0 / g as f64; g];
    }
    Ok((prior, beliefs))
}

/// Result of [`vdvq_model`].
#[derive(Debug, Clone)]
pub struct InitOutcome {
    pub model: GroupModel,
    pub beliefs: NodeBeliefs,
    pub users: SoftAssignment,
    pub movies: SoftAssignment,
    pub user_report: ClusterReport,
    pub movie_report: ClusterReport,
    /// Kernel cells that received no soft mass and were set uniform.
    pub empty_cells: Vec<(usize, usize)>,
}

/// Cluster both sides and assemble an initial model and node beliefs.
///
/// Priors average the beliefs of nodes with at least one observation; nodes
/// without observations take the prior as their belief.
pub fn vdvq_model(obs: &ObservationSet, g_u: usize, g_v: usize, config: &VdvqConfig, seed: u64) -> Result<InitOutcome> {
    let (_, users, user_report) = design_codebook(obs, Side::Users, g_u, config, &mut substream(seed, "split-noise-users"))?;
    let (_, movies, movie_report) =
        design_codebook(obs, Side::Movies, g_v, config, &mut substream(seed, "split-noise-movies"))?;
    let (kernel, empty_cells) = estimate_w(&users, &movies, obs)?;

    let side_beliefs = |pi: &SoftAssignment, side: Side| -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let (_, mut beliefs) = priors_from_assignment(pi, config.epsilon)?;
        let observed: Vec<usize> = (0..obs.n_nodes(side)).filter(|&n| !obs.edges(side, n).is_empty()).collect();
        let g = beliefs.first().map_or(0, Vec::len);
        let mut prior = vec![0.0; g];
        for &n in &observed {
            prior.iter_mut().zip(&beliefs[n]).for_each(|(p, x)| *p += x);
        }
        if !normalize(&mut prior) {
            prior = vec![1.0 / g as f64; g];
        }
        for (n, b) in beliefs.iter_mut().enumerate() {
            if obs.edges(side, n).is_empty() {
                b.clone_from(&prior);
            }
        }
        Ok((prior, beliefs))
    };
    let (p_u, user_beliefs) = side_beliefs(&users, Side::Users)?;
    let (p_v, movie_beliefs) = side_beliefs(&movies, Side::Movies)?;
    let model = GroupModel::from_parts(obs.alphabet().to_vec(), p_u, p_v, kernel)?;
    Ok(InitOutcome {
        model,
        beliefs: NodeBeliefs {
            users: user_beliefs,
            movies: movie_beliefs,
        },
        users,
        movies,
        user_report,
        movie_report,
        empty_cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn obs() -> ObservationSet {
        ObservationSet::from_values(
            4,
            3,
            vec![1, 2, 3, 4, 5],
            [(0, 0, 1), (1, 0, 5), (0, 1, 4), (2, 1, 4), (3, 2, 2)],
        )
        .unwrap()
    }

    #[test]
    fn init_critic_is_movie_mean() {
        let cb = vdvq_init(&obs(), Side::Users).unwrap();
        assert_eq!(cb.critics, vec![vec![3.0, 4.0, 2.0]]);
        let empty = ObservationSet::new(2, 2, vec![1], vec![]).unwrap();
        assert!(vdvq_init(&empty, Side::Users).is_err());
    }

    #[test]
    fn unrated_movie_gets_global_mean() {
        let o = ObservationSet::from_values(2, 3, vec![1, 2, 3, 4, 5], [(0, 0, 4), (1, 0, 4), (1, 1, 1)]).unwrap();
        let cb = vdvq_init(&o, Side::Users).unwrap();
        assert_eq!(cb.critics[0], vec![4.0, 1.0, 3.0]);
    }

    #[test]
    fn split_without_noise_duplicates() {
        let cb = vdvq_init(&obs(), Side::Users).unwrap();
        let s = gla_split(&cb, 0.0, &mut substream(0, "t")).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.critics[0], s.critics[1]);
        let noisy = gla_split(&cb, 0.1, &mut substream(0, "t")).unwrap();
        assert_eq!(noisy.critics[0], cb.critics[0]);
        assert_ne!(noisy.critics[1], cb.critics[0]);
        assert_eq!(noisy, gla_split(&cb, 0.1, &mut substream(0, "t")).unwrap());
        assert!(gla_split(&cb, -1.0, &mut substream(0, "t")).is_err());
    }

    #[test]
    fn equidistant_critics_share_mass() {
        let o = ObservationSet::from_values(1, 1, vec![1, 2, 3], [(0, 0, 2)]).unwrap();
        let cb = Codebook {
            side: Side::Users,
            critics: vec![vec![1.0], vec![3.0]],
            stage: 1,
            sweep: 0,
        };
        let pi = assign(&cb, &o, 1.0).unwrap();
        assert_eq!(pi.weights[0], vec![0.5, 0.5]);
    }

    #[test]
    fn large_beta_gives_hard_assignment() {
        let o = obs();
        let cb = Codebook {
            side: Side::Users,
            critics: vec![vec![1.0, 4.0, 2.0], vec![5.0, 1.0, 5.0]],
            stage: 1,
            sweep: 0,
        };
        let pi = assign(&cb, &o, 1e4).unwrap();
        assert_eq!(pi.weights[0], vec![1.0, 0.0]);
        assert_eq!(pi.weights[1], vec![0.0, 1.0]);
        assert!(assign(&cb, &o, 0.0).is_err());
    }

    #[test]
    fn power_of_two_counts_after_splitting() {
        let o = obs();
        for (g, stages) in [(1, 0), (2, 1), (4, 2), (3, 2)] {
            let (cb, pi, report) = design_codebook(&o, Side::Users, g, &VdvqConfig::default(), &mut substream(1, "s")).unwrap();
            assert_eq!(cb.len(), g);
            assert_eq!(report.stages, stages);
            assert_eq!(pi.weights[0].len(), g);
        }
    }

    #[test]
    fn single_group_kernel_is_global_histogram() {
        let o = obs();
        let one = SoftAssignment {
            weights: vec![vec![1.0]; 4],
            beta: 1.0,
        };
        let one_m = SoftAssignment {
            weights: vec![vec![1.0]; 3],
            beta: 1.0,
        };
        let (w, empty) = estimate_w(&one, &one_m, &o).unwrap();
        assert!(empty.is_empty());
        assert_eq!(w, vec![0.2, 0.2, 0.0, 0.4, 0.2]);
    }

    #[test]
    fn empty_cells_become_uniform() {
        let o = obs();
        let users = SoftAssignment {
            weights: vec![vec![1.0, 0.0]; 4],
            beta: 1.0,
        };
        let movies = SoftAssignment {
            weights: vec![vec![1.0]; 3],
            beta: 1.0,
        };
        let (w, empty) = estimate_w(&users, &movies, &o).unwrap();
        assert_eq!(empty, vec![(1, 0)]);
        assert_eq!(&w[5..], &[0.2; 5]);
    }

    #[test]
    fn epsilon_beliefs() {
        let pi = SoftAssignment {
            weights: vec![vec![0.8, 0.2]],
            beta: 1.0,
        };
        let (_, b) = priors_from_assignment(&pi, 0.9).unwrap();
        assert_eq!(b[0], vec![0.9, 0.09999999999999998]);
        let pi4 = SoftAssignment {
            weights: vec![vec![0.1, 0.1, 0.5, 0.3]],
            beta: 1.0,
        };
        let (_, b) = priors_from_assignment(&pi4, 0.9).unwrap();
        let spread = (1.0 - 0.9) / 3.0;
        assert_eq!(b[0], vec![spread, spread, 0.9, spread]);
        let pi1 = SoftAssignment {
            weights: vec![vec![1.0]],
            beta: 1.0,
        };
        assert_eq!(priors_from_assignment(&pi1, 0.2).unwrap().1[0], vec![1.0]);
        assert!(priors_from_assignment(&pi, 0.5).is_err());
        assert!(priors_from_assignment(&pi, 1.1).is_err());
    }

    #[test]
    fn map_ties_go_to_the_first_group() {
        let pi = SoftAssignment {
            weights: vec![vec![0.5, 0.5]],
            beta: 1.0,
        };
        let (_, b) = priors_from_assignment(&pi, 0.9).unwrap();
        assert_eq!(b[0][0], 0.9);
    }

    #[test]
    fn vdvq_model_is_valid_and_deterministic() {
        let o = obs();
        let a = vdvq_model(&o, 2, 2, &VdvqConfig::default(), 9).unwrap();
        assert!(a.model.validate().is_ok(), "{:?}", a.model.validate());
        let b = vdvq_model(&o, 2, 2, &VdvqConfig::default(), 9).unwrap();
        assert_eq!(a.model, b.model);
    }
}
