//! Iterative message passing (IMP) on the user-movie observation graph.
//!
//! Each observed rating is an edge carrying two messages: `y_{n→m}`, a belief
//! over user groups sent by user `n`, and `x_{m→n}`, a belief over movie
//! groups sent by movie `m`. One iteration recomputes every message from the
//! previous iteration's messages (flooding schedule):
//!
//! ```text
//! y_{n→m}(u) ∝ p_U(u) · Π_{k ∈ V_n \ m} Σ_v w(r_{n,k} | u, v) · x_{k→n}(v)
//! x_{m→n}(v) ∝ p_V(v) · Π_{k ∈ U_m \ n} Σ_u w(r_{k,m} | u, v) · y_{k→m}(u)
//! ```
//!
//! The kernel factor inside each product uses the rating on the edge being
//! marginalized. Node beliefs take the product over all edges. On a forest
//! the fixed point gives exact posterior marginals.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{GroupModel, ObservationSet, Side};
use crate::numeric::{combine, floored, max_abs_diff};
use crate::posterior::{check_queries, mix_rating, PosteriorEstimates};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpConfig {
    pub max_iters: usize,
    /// Stop once the largest per-entry message change falls below this.
    pub tol: f64,
    /// Weight kept on the previous message; 0 disables damping.
    pub damping: f64,
}

impl Default for ImpConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-8,
            damping: 0.0,
        }
    }
}

/// Edge messages after `iteration` updates.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageState {
    g_u: usize,
    g_v: usize,
    /// `y_{n→m}` for every edge, `g_u` entries each.
    to_movie: Vec<f64>,
    /// `x_{m→n}` for every edge, `g_v` entries each.
    to_user: Vec<f64>,
    pub iteration: usize,
}

impl MessageState {
    pub fn g_u(&self) -> usize {
        self.g_u
    }

    pub fn g_v(&self) -> usize {
        self.g_v
    }

    pub fn n_edges(&self) -> usize {
        if self.g_u == 0 {
            0
        } else {
            self.to_movie.len() / self.g_u
        }
    }

    /// `y_{n→m}` on edge `e`.
    pub fn user_message(&self, e: usize) -> &[f64] {
        &self.to_movie[e * self.g_u..(e + 1) * self.g_u]
    }

    /// `x_{m→n}` on edge `e`.
    pub fn movie_message(&self, e: usize) -> &[f64] {
        &self.to_user[e * self.g_v..(e + 1) * self.g_v]
    }

    /// Largest absolute entry change between two states of the same graph.
    pub fn max_change(&self, other: &MessageState) -> f64 {
        max_abs_diff(&self.to_movie, &other.to_movie).max(max_abs_diff(&self.to_user, &other.to_user))
    }
}

pub(crate) fn check_alphabet(model: &GroupModel, obs: &ObservationSet) -> Result<()> {
    if model.ratings() != obs.alphabet() {
        return Err(Error::param(format!(
            "model rating alphabet {:?} differs from the data's {:?}",
            model.ratings(),
            obs.alphabet()
        )));
    }
    Ok(())
}

/// All messages start at the node priors.
pub fn imp_init(model: &GroupModel, obs: &ObservationSet) -> Result<MessageState> {
    check_alphabet(model, obs)?;
    let e = obs.len();
    Ok(MessageState {
        g_u: model.g_u(),
        g_v: model.g_v(),
        to_movie: model.p_u().repeat(e),
        to_user: model.p_v().repeat(e),
        iteration: 0,
    })
}

/// Per-edge factors `Σ_v w(r_e|u,v) x_e(v)` for the edges of a user
/// (or `Σ_u w(r_e|u,v) y_e(u)` for a movie), one row of width g per edge.
fn node_factors(
    side: Side,
    node: usize,
    state: &MessageState,
    kernel: &[f64],
    obs: &ObservationSet,
) -> Vec<f64> {
    let (gu, gv, nr) = (state.g_u, state.g_v, obs.alphabet().len());
    let edges = obs.edges(side, node);
    match side {
        Side::Users => {
            let mut out = vec![0.0; edges.len() * gu];
            for (k, &e) in edges.iter().enumerate() {
                let r = obs.triple(e).rating;
                let x = state.movie_message(e);
                for u in 0..gu {
                    out[k * gu + u] = (0..gv).map(|v| kernel[(u * gv + v) * nr + r] * x[v]).sum();
                }
            }
            out
        }
        Side::Movies => {
            let mut out = vec![0.0; edges.len() * gv];
            for (k, &e) in edges.iter().enumerate() {
                let r = obs.triple(e).rating;
                let y = state.user_message(e);
                for v in 0..gv {
                    out[k * gv + v] = (0..gu).map(|u| kernel[(u * gv + v) * nr + r] * y[u]).sum();
                }
            }
            out
        }
    }
}

fn degenerate(side: Side, node: usize, obs: &ObservationSet, bad: usize) -> Error {
    let edges = obs.edges(side, node);
    match edges.get(bad) {
        Some(&e) => {
            let t = obs.triple(e);
            Error::Degenerate(format!(
                "zero normalizer on edge {e} (user {}, movie {}) while updating {side:?} node {node}",
                t.user, t.movie
            ))
        }
        None => Error::Degenerate(format!("zero normalizer in the belief of {side:?} node {node}")),
    }
}

/// Extrinsic outgoing messages of every node on one side, in edge order.
fn side_messages(
    side: Side,
    state: &MessageState,
    model: &GroupModel,
    kernel: &[f64],
    obs: &ObservationSet,
) -> Result<Vec<f64>> {
    let g = match side {
        Side::Users => state.g_u,
        Side::Movies => state.g_v,
    };
    let prior = model.prior(side);
    let blocks = (0..obs.n_nodes(side))
        .into_par_iter()
        .map(|node| {
            let factors = node_factors(side, node, state, kernel, obs);
            let mut out = vec![0.0; factors.len()];
            let mut full = vec![0.0; g];
            combine(prior, &factors, &mut full, Some(&mut out)).map_err(|bad| degenerate(side, node, obs, bad))?;
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut messages = vec![0.0; obs.len() * g];
    for (node, block) in blocks.into_iter().enumerate() {
        for (k, &e) in obs.edges(side, node).iter().enumerate() {
            messages[e * g..(e + 1) * g].copy_from_slice(&block[k * g..(k + 1) * g]);
        }
    }
    Ok(messages)
}

/// One flooding update of every message.
pub fn imp_iterate(state: &MessageState, model: &GroupModel, obs: &ObservationSet) -> Result<MessageState> {
    imp_iterate_damped(state, model, obs, 0.0)
}

/// One flooding update, keeping a `damping` share of each previous message.
pub fn imp_iterate_damped(
    state: &MessageState,
    model: &GroupModel,
    obs: &ObservationSet,
    damping: f64,
) -> Result<MessageState> {
    if !(0.0..1.0).contains(&damping) {
        return Err(Error::param(format!("damping must lie in [0, 1), got {damping}")));
    }
    if state.n_edges() != obs.len() || state.g_u != model.g_u() || state.g_v != model.g_v() {
        return Err(Error::param("message state does not match the model and observations"));
    }
    let kernel = floored(model.kernel());
    let mut to_movie = side_messages(Side::Users, state, model, &kernel, obs)?;
    let mut to_user = side_messages(Side::Movies, state, model, &kernel, obs)?;
    if damping > 0.0 {
        for (new, old) in to_movie.iter_mut().zip(&state.to_movie) {
            *new = (1.0 - damping) * *new + damping * old;
        }
        for (new, old) in to_user.iter_mut().zip(&state.to_user) {
            *new = (1.0 - damping) * *new + damping * old;
        }
    }
    Ok(MessageState {
        g_u: state.g_u,
        g_v: state.g_v,
        to_movie,
        to_user,
        iteration: state.iteration + 1,
    })
}

fn node_beliefs(
    side: Side,
    state: &MessageState,
    model: &GroupModel,
    kernel: &[f64],
    obs: &ObservationSet,
) -> Result<Vec<Vec<f64>>> {
    let prior = model.prior(side);
    (0..obs.n_nodes(side))
        .into_par_iter()
        .map(|node| {
            let factors = node_factors(side, node, state, kernel, obs);
            let mut full = vec![0.0; prior.len()];
            combine(prior, &factors, &mut full, None).map_err(|bad| degenerate(side, node, obs, bad))?;
            Ok(full)
        })
        .collect()
}

/// Node posteriors from the full product over each node's edges, and rating
/// posteriors for `query` pairs.
///
/// An observed pair combines its two edge messages through `w`. An unobserved
/// pair has no edge messages, so the full node posteriors stand in for them.
pub fn imp_posteriors(
    state: &MessageState,
    model: &GroupModel,
    obs: &ObservationSet,
    query: &[(usize, usize)],
) -> Result<PosteriorEstimates> {
    check_queries(obs, query)?;
    let kernel = floored(model.kernel());
    let users = node_beliefs(Side::Users, state, model, &kernel, obs)?;
    let movies = node_beliefs(Side::Movies, state, model, &kernel, obs)?;
    let nr = model.n_ratings();
    let mut substituted = 0;
    let ratings = query
        .iter()
        .map(|&(n, m)| {
            let (a, b) = match obs.find(n, m) {
                Some(e) => (state.user_message(e), state.movie_message(e)),
                None => {
                    substituted += 1;
                    (users[n].as_slice(), movies[m].as_slice())
                }
            };
            mix_rating(a, b, model.kernel(), nr)
                .ok_or_else(|| Error::Degenerate(format!("rating posterior of ({n}, {m}) has zero mass")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorEstimates::new(query.to_vec(), ratings, users, movies, substituted))
}

/// Per-iteration convergence trace.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceReport {
    /// Largest message change at each iteration.
    pub max_change: Vec<f64>,
    pub converged: bool,
}

impl ConvergenceReport {
    pub fn iterations(&self) -> usize {
        self.max_change.len()
    }
}

#[derive(Debug, Clone)]
pub struct ImpOutcome {
    pub state: MessageState,
    pub posteriors: PosteriorEstimates,
    pub report: ConvergenceReport,
}

/// Iterate until the largest message change drops below `tol` or
/// `max_iters` is reached, then compute posteriors for `query`.
pub fn imp_run(
    model: &GroupModel,
    obs: &ObservationSet,
    config: &ImpConfig,
    query: &[(usize, usize)],
) -> Result<ImpOutcome> {
    if config.max_iters == 0 {
        return Err(Error::param("max_iters must be at least 1"));
    }
    if !(config.tol > 0.0) {
        return Err(Error::param(format!("tol must be positive, got {}", config.tol)));
    }
    check_queries(obs, query)?;
    let mut state = imp_init(model, obs)?;
    let mut report = ConvergenceReport::default();
    for _ in 0..config.max_iters {
        let next = imp_iterate_damped(&state, model, obs, config.damping)?;
        let change = next.max_change(&state);
        state = next;
        report.max_change.push(change);
        if change < config.tol {
            report.converged = true;
            break;
        }
    }
    let posteriors = imp_posteriors(&state, model, obs, query)?;
    Ok(ImpOutcome {
        state,
        posteriors,
        report,
    })
}
