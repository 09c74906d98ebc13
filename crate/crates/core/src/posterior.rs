use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::ObservationSet;

/// Posterior estimates produced by a learner after some number of iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorEstimates {
    /// Queried `(user, movie)` pairs, in query order.
    pub pairs: Vec<(usize, usize)>,
    /// Rating posterior for each queried pair, over rating indices.
    pub ratings: Vec<Vec<f64>>,
    /// Posterior over user groups, per user.
    pub users: Vec<Vec<f64>>,
    /// Posterior over movie groups, per movie.
    pub movies: Vec<Vec<f64>>,
    /// How many queried pairs were unobserved, so their rating posterior was
    /// built from full node beliefs instead of edge messages.
    pub substituted: usize,
    index: HashMap<(usize, usize), usize>,
}

impl PosteriorEstimates {
    pub(crate) fn new(
        pairs: Vec<(usize, usize)>,
        ratings: Vec<Vec<f64>>,
        users: Vec<Vec<f64>>,
        movies: Vec<Vec<f64>>,
        substituted: usize,
    ) -> Self {
        let index = pairs.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        Self {
            pairs,
            ratings,
            users,
            movies,
            substituted,
            index,
        }
    }

    /// Rating posterior of a queried pair.
    pub fn rating(&self, user: usize, movie: usize) -> Option<&[f64]> {
        self.index.get(&(user, movie)).map(|&i| self.ratings[i].as_slice())
    }
}

pub(crate) fn check_queries(obs: &ObservationSet, pairs: &[(usize, usize)]) -> Result<()> {
    match pairs.iter().find(|&&(n, m)| n >= obs.n_users() || m >= obs.n_movies()) {
        Some(&(n, m)) => Err(Error::param(format!(
            "query pair ({n}, {m}) outside {} x {}",
            obs.n_users(),
            obs.n_movies()
        ))),
        None => Ok(()),
    }
}

/// `p(r) ∝ sum_{u,v} a(u) b(v) w(r|u,v)` for a flat `[u][v][r]` kernel.
pub(crate) fn mix_rating(a: &[f64], b: &[f64], kernel: &[f64], nr: usize) -> Option<Vec<f64>> {
    let gv = b.len();
    let mut out = vec![0.0; nr];
    for (u, &au) in a.iter().enumerate() {
        for (v, &bv) in b.iter().enumerate() {
            let weight = au * bv;
            let row = &kernel[(u * gv + v) * nr..(u * gv + v + 1) * nr];
            for (o, &w) in out.iter_mut().zip(row) {
                *o += weight * w;
            }
        }
    }
    crate::numeric::normalize(&mut out).then_some(out)
}
