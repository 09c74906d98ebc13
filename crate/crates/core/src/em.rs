//! Variational EM baseline with combined E and M steps.
//!
//! Parameters are per-user group beliefs `f_n`, per-movie beliefs `h_m`, and
//! the kernel `w`. Each iteration updates `f` and `h` from the previous
//! parameters, then updates `w` using the new `f` and `h`. The objective is
//! the observed-data negative log-likelihood
//! `-Σ_{(n,m)∈O} log Σ_{u,v} w(r_{n,m}|u,v) f_n(u) h_m(v)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imp::check_alphabet;
use crate::model::{GroupModel, ObservationSet};
use crate::numeric::normalize;
use crate::posterior::{check_queries, mix_rating, PosteriorEstimates};

/// How each observed pair's responsibilities enter the update sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmUpdate {
    /// Responsibilities normalized per observed pair (the posterior
    /// `w f h / Σ_{u',v'} w f h`). Monotone in the observed-data likelihood.
    #[default]
    Normalized,
    /// Unnormalized products `w f h` summed directly, without the per-pair
    /// denominator. Not monotone; kept for comparison.
    Unnormalized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub max_iters: usize,
    /// Stop once the absolute NLL change falls below this.
    pub tol: f64,
    pub update: EmUpdate,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            tol: 1e-8,
            update: EmUpdate::Normalized,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmState {
    /// `f_n`, one belief over user groups per user.
    pub users: Vec<Vec<f64>>,
    /// `h_m`, one belief over movie groups per movie.
    pub movies: Vec<Vec<f64>>,
    /// Current kernel; its priors are the initial ones.
    pub model: GroupModel,
    pub iteration: usize,
}

impl EmState {
    /// The model with priors replaced by the average node beliefs.
    pub fn fitted_model(&self) -> Result<GroupModel> {
        let mean = |rows: &[Vec<f64>], g: usize, fallback: &[f64]| {
            if rows.is_empty() {
                return fallback.to_vec();
            }
            let mut acc = vec![0.0; g];
            for row in rows {
                acc.iter_mut().zip(row).for_each(|(a, x)| *a += x);
            }
            normalize(&mut acc);
            acc
        };
        let p_u = mean(&self.users, self.model.g_u(), self.model.p_u());
        let p_v = mean(&self.movies, self.model.g_v(), self.model.p_v());
        self.model.clone().with_priors(p_u, p_v)
    }
}

/// Initial per-node beliefs, e.g. from clustering.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodeBeliefs {
    pub users: Vec<Vec<f64>>,
    pub movies: Vec<Vec<f64>>,
}

/// Beliefs start at `beliefs` when given, otherwise at the model priors.
pub fn em_init(model: &GroupModel, obs: &ObservationSet, beliefs: Option<&NodeBeliefs>) -> Result<EmState> {
    check_alphabet(model, obs)?;
    let (users, movies) = match beliefs {
        Some(b) => {
            let ok = |rows: &[Vec<f64>], count: usize, g: usize| {
                rows.len() == count && rows.iter().all(|r| r.len() == g)
            };
            if !ok(&b.users, obs.n_users(), model.g_u()) || !ok(&b.movies, obs.n_movies(), model.g_v()) {
                return Err(Error::param("initial beliefs do not match the data and model dimensions"));
            }
            (b.users.clone(), b.movies.clone())
        }
        None => (
            vec![model.p_u().to_vec(); obs.n_users()],
            vec![model.p_v().to_vec(); obs.n_movies()],
        ),
    };
    Ok(EmState {
        users,
        movies,
        model: model.clone(),
        iteration: 0,
    })
}

/// Joint responsibilities `A(u,v) = w(r|u,v) f(u) h(v)` and their total.
fn joint(model: &GroupModel, r: usize, f: &[f64], h: &[f64], out: &mut [f64]) -> f64 {
    let gv = h.len();
    let mut total = 0.0;
    for (u, &fu) in f.iter().enumerate() {
        for (v, &hv) in h.iter().enumerate() {
            let a = model.w(r, u, v) * fu * hv;
            out[u * gv + v] = a;
            total += a;
        }
    }
    total
}

fn edge_degenerate(obs: &ObservationSet, e: usize) -> Error {
    let t = obs.triple(e);
    Error::Degenerate(format!(
        "observed pair ({}, {}) (edge {e}) has zero likelihood under the current parameters",
        t.user, t.movie
    ))
}

const CHUNK: usize = 1024;

/// One EM iteration.
pub fn em_iterate(state: &EmState, obs: &ObservationSet, update: EmUpdate) -> Result<EmState> {
    let model = &state.model;
    let (gu, gv, nr) = (model.g_u(), model.g_v(), model.n_ratings());

    let node_update = |edges: &[usize], own: &[f64], user_side: bool| -> Result<Vec<f64>> {
        if edges.is_empty() {
            return Ok(own.to_vec());
        }
        let g = if user_side { gu } else { gv };
        let mut acc = vec![0.0; g];
        let mut a = vec![0.0; gu * gv];
        for &e in edges {
            let t = obs.triple(e);
            let total = joint(model, t.rating, &state.users[t.user], &state.movies[t.movie], &mut a);
            if !(total > 0.0) {
                return Err(edge_degenerate(obs, e));
            }
            let scale = match update {
                EmUpdate::Normalized => 1.0 / total,
                EmUpdate::Unnormalized => 1.0,
            };
            for u in 0..gu {
                for v in 0..gv {
                    acc[if user_side { u } else { v }] += a[u * gv + v] * scale;
                }
            }
        }
        if !normalize(&mut acc) {
            return Err(Error::Degenerate("node belief update has zero mass".into()));
        }
        Ok(acc)
    };

    let users = (0..obs.n_users())
        .into_par_iter()
        .map(|n| node_update(obs.user_edges(n), &state.users[n], true))
        .collect::<Result<Vec<_>>>()?;
    let movies = (0..obs.n_movies())
        .into_par_iter()
        .map(|m| node_update(obs.movie_edges(m), &state.movies[m], false))
        .collect::<Result<Vec<_>>>()?;

    // Kernel update from the new beliefs. Fixed-size chunks summed in order
    // keep the reduction identical for any thread count.
    let partials = (0..obs.len())
        .collect::<Vec<_>>()
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; gu * gv * nr];
            let mut a = vec![0.0; gu * gv];
            for &e in chunk {
                let t = obs.triple(e);
                let total = joint(model, t.rating, &users[t.user], &movies[t.movie], &mut a);
                if !(total > 0.0) {
                    return Err(edge_degenerate(obs, e));
                }
                let scale = match update {
                    EmUpdate::Normalized => 1.0 / total,
                    EmUpdate::Unnormalized => 1.0,
                };
                for uv in 0..gu * gv {
                    acc[uv * nr + t.rating] += a[uv] * scale;
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut kernel = vec![0.0; gu * gv * nr];
    for part in &partials {
        kernel.iter_mut().zip(part).for_each(|(k, p)| *k += p);
    }
    for uv in 0..gu * gv {
        let row = &mut kernel[uv * nr..(uv + 1) * nr];
        if !normalize(row) {
            // no mass reached this cell; keep the previous row
            row.copy_from_slice(&model.kernel()[uv * nr..(uv + 1) * nr]);
        }
    }

    Ok(EmState {
        users,
        movies,
        model: model.clone().with_kernel(kernel)?,
        iteration: state.iteration + 1,
    })
}

/// Observed-data negative log-likelihood of the current parameters.
pub fn negative_log_likelihood(state: &EmState, obs: &ObservationSet) -> f64 {
    let model = &state.model;
    let partials: Vec<f64> = (0..obs.len())
        .collect::<Vec<_>>()
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut a = vec![0.0; model.g_u() * model.g_v()];
            chunk
                .iter()
                .map(|&e| {
                    let t = obs.triple(e);
                    -joint(model, t.rating, &state.users[t.user], &state.movies[t.movie], &mut a).ln()
                })
                .sum()
        })
        .collect();
    partials.iter().sum()
}

/// Rating posteriors `∝ Σ_{u,v} f_n(u) h_m(v) w(r|u,v)`; node posteriors are `f`, `h`.
pub fn em_posteriors(state: &EmState, obs: &ObservationSet, query: &[(usize, usize)]) -> Result<PosteriorEstimates> {
    check_queries(obs, query)?;
    let nr = state.model.n_ratings();
    let mut substituted = 0;
    let ratings = query
        .iter()
        .map(|&(n, m)| {
            if obs.find(n, m).is_none() {
                substituted += 1;
            }
            mix_rating(&state.users[n], &state.movies[m], state.model.kernel(), nr)
                .ok_or_else(|| Error::Degenerate(format!("rating posterior of ({n}, {m}) has zero mass")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorEstimates::new(
        query.to_vec(),
        ratings,
        state.users.clone(),
        state.movies.clone(),
        substituted,
    ))
}

#[derive(Debug, Clone)]
pub struct EmOutcome {
    pub state: EmState,
    pub posteriors: PosteriorEstimates,
    /// NLL of the initial parameters followed by the NLL after each iteration.
    pub nll: Vec<f64>,
    pub converged: bool,
}

impl EmOutcome {
    pub fn iterations(&self) -> usize {
        self.state.iteration
    }
}

/// Iterate until `|ΔNLL| < tol` or `max_iters`, then compute posteriors.
pub fn em_run(
    model: &GroupModel,
    obs: &ObservationSet,
    beliefs: Option<&NodeBeliefs>,
    config: &EmConfig,
    query: &[(usize, usize)],
) -> Result<EmOutcome> {
    if config.max_iters == 0 {
        return Err(Error::param("max_iters must be at least 1"));
    }
    if !(config.tol > 0.0) {
        return Err(Error::param(format!("tol must be positive, got {}", config.tol)));
    }
    check_queries(obs, query)?;
    let mut state = em_init(model, obs, beliefs)?;
    let mut nll = vec![negative_log_likelihood(&state, obs)];
    let mut converged = false;
    for _ in 0..config.max_iters {
        state = em_iterate(&state, obs, config.update)?;
        let current = negative_log_likelihood(&state, obs);
        let change = (current - nll[nll.len() - 1]).abs();
        nll.push(current);
        if change < config.tol {
            converged = true;
            break;
        }
    }
    let posteriors = em_posteriors(&state, obs, query)?;
    Ok(EmOutcome {
        state,
        posteriors,
        nll,
        converged,
    })
}
