//! Per-instance oracle comparisons shared by the integration tests and the
//! acceptance suite.

use fgcf::em::{em_init, em_iterate, negative_log_likelihood, EmUpdate};
use fgcf::imp::{imp_run, ImpConfig};
use fgcf::init::{estimate_w, soft_kmeans_sweep, Codebook};
use fgcf::{GroupModel, ObservationSet, Side};
use rand::Rng;

use super::*;

/// Largest deviation of converged IMP posteriors from exact enumeration on a
/// random forest with `N + M <= 8`.
pub fn tree_instance_error(seed: u64) -> f64 {
    let mut r = rng(seed);
    let n = r.random_range(1..=6);
    let m = r.random_range(1..=(8 - n).min(6));
    let gu = r.random_range(2..=3);
    let gv = r.random_range(2..=3);
    let nr = if r.random_bool(0.5) { 2 } else { 5 };
    let model = random_model(&mut r, gu, gv, nr);
    let obs = random_forest(&mut r, n, m, nr, 0.85);
    tree_error(&model, &obs)
}

pub fn tree_error(model: &GroupModel, obs: &ObservationSet) -> f64 {
    let comp = components(obs);
    let nu = obs.n_users();
    let mut query = obs.pairs();
    for a in 0..nu {
        for b in 0..obs.n_movies() {
            if comp[a] != comp[nu + b] {
                query.push((a, b));
            }
        }
    }
    let cfg = ImpConfig {
        max_iters: 100,
        tol: 1e-15,
        damping: 0.0,
    };
    let out = imp_run(model, obs, &cfg, &query).expect("imp on a forest");
    let exact = enumerate(model, obs, None);
    let mut err: f64 = 0.0;
    for a in 0..nu {
        err = err.max(max_diff(&out.posteriors.users[a], &exact.users[a]));
    }
    for b in 0..obs.n_movies() {
        err = err.max(max_diff(&out.posteriors.movies[b], &exact.movies[b]));
    }
    for &(a, b) in &query {
        let want = match obs.find(a, b) {
            // leave-one-out predictive of an observed rating
            Some(e) => rating_from_joint(model, &enumerate(model, obs, Some(e)).pair_joint[a][b]),
            None => rating_from_joint(model, &exact.pair_joint[a][b]),
        };
        err = err.max(max_diff(out.posteriors.rating(a, b).unwrap(), &want));
    }
    err
}

/// EM on a random `size x size` instance for `iters` iterations. Returns the
/// largest NLL increase between consecutive iterations and the largest
/// deviation of the library NLL from the straight-loop reference.
pub fn em_instance(seed: u64, size: usize, iters: usize) -> (f64, f64) {
    let mut r = rng(seed);
    let gu = r.random_range(2..=4);
    let gv = r.random_range(2..=4);
    let nr = if r.random_bool(0.5) { 2 } else { 5 };
    let model = random_model(&mut r, gu, gv, nr);
    let p = r.random_range(0.1..0.5);
    let obs = random_graph(&mut r, size, size, nr, p);
    let mut state = em_init(&model, &obs, None).unwrap();
    let mut prev = negative_log_likelihood(&state, &obs);
    let mut worst_rise = f64::NEG_INFINITY;
    let mut worst_dev: f64 = 0.0;
    for _ in 0..iters {
        state = em_iterate(&state, &obs, EmUpdate::Normalized).unwrap();
        let nll = negative_log_likelihood(&state, &obs);
        let reference = naive_nll(&state.model, &state.users, &state.movies, &obs);
        worst_dev = worst_dev.max((nll - reference).abs() / reference.abs().max(1.0));
        worst_rise = worst_rise.max(nll - prev);
        prev = nll;
    }
    (worst_rise, worst_dev)
}

/// Largest deviation of `soft_kmeans_sweep` (both sides) and `estimate_w`
/// from the dense reference on a random small instance.
pub fn vdvq_instance_error(seed: u64) -> f64 {
    let mut r = rng(seed);
    let n = r.random_range(2..=12);
    let m = r.random_range(2..=12);
    let nr = 5;
    let p = r.random_range(0.15..0.6);
    let obs = random_graph(&mut r, n, m, nr, p);
    let beta = r.random_range(0.2..4.0);
    let random_codebook = |side: Side, dim: usize, r: &mut rand_chacha::ChaCha8Rng| {
        let g = r.random_range(1..=4);
        let mut critics: Vec<Vec<f64>> = (0..g).map(|_| (0..dim).map(|_| r.random_range(1.0..5.0)).collect()).collect();
        if g > 1 && r.random_bool(0.2) {
            // a critic too far away to receive any membership
            critics[g - 1].iter_mut().for_each(|x| *x = 1e6);
        }
        Codebook {
            side,
            critics,
            stage: 0,
            sweep: 0,
        }
    };
    let cu = random_codebook(Side::Users, m, &mut r);
    let cv = random_codebook(Side::Movies, n, &mut r);
    let rows = dense(&obs);
    let cols = transpose(&rows);

    let mut err: f64 = 0.0;
    let (nu, pu, ru) = soft_kmeans_sweep(&cu, &obs, beta).unwrap();
    let (ref_u, ref_pu, ref_ru) = naive_sweep(&rows, &cu.critics, beta);
    let (nv, pv, rv) = soft_kmeans_sweep(&cv, &obs, beta).unwrap();
    let (ref_v, ref_pv, ref_rv) = naive_sweep(&cols, &cv.critics, beta);
    if ru != ref_ru || rv != ref_rv {
        return f64::INFINITY;
    }
    for (a, b) in nu.critics.iter().zip(&ref_u).chain(nv.critics.iter().zip(&ref_v)) {
        err = err.max(max_diff(a, b));
    }
    for (a, b) in pu.weights.iter().zip(&ref_pu).chain(pv.weights.iter().zip(&ref_pv)) {
        err = err.max(max_diff(a, b));
    }
    let (kernel, _) = estimate_w(&pu, &pv, &obs).unwrap();
    let reference: Vec<f64> = naive_w(&obs, &ref_pu, &ref_pv).into_iter().flatten().flatten().collect();
    err.max(max_diff(&kernel, &reference))
}

/// Mean true-group belief (and its standard error) of IMP node posteriors
/// after `iters` flooding iterations under the true model, users then movies.
pub fn imp_true_belief(
    model: &GroupModel,
    obs: &ObservationSet,
    truth: &fgcf::SyntheticTruth,
    iters: usize,
) -> [(f64, f64); 2] {
    let mut state = fgcf::imp::imp_init(model, obs).unwrap();
    for _ in 0..iters {
        state = fgcf::imp::imp_iterate(&state, model, obs).unwrap();
    }
    let post = fgcf::imp::imp_posteriors(&state, model, obs, &[]).unwrap();
    let stat = |beliefs: &[Vec<f64>], groups: &[usize]| {
        let xs: Vec<f64> = beliefs.iter().zip(groups).map(|(b, &g)| b[g]).collect();
        fgcf::eval::mean_and_se(&xs)
    };
    [stat(&post.users, &truth.user_groups), stat(&post.movies, &truth.movie_groups)]
}

/// Kernels for the DE comparison: (label, model, average degree).
pub fn de_kernels() -> Vec<(&'static str, GroupModel, f64)> {
    let two = GroupModel::new(
        alphabet(5),
        vec![0.5, 0.5],
        vec![0.4, 0.6],
        &[
            vec![vec![0.5, 0.2, 0.1, 0.1, 0.1], vec![0.1, 0.1, 0.2, 0.3, 0.3]],
            vec![vec![0.1, 0.1, 0.2, 0.3, 0.3], vec![0.4, 0.3, 0.1, 0.1, 0.1]],
        ],
    )
    .unwrap();
    let binary = GroupModel::new(
        alphabet(2),
        vec![0.3, 0.3, 0.4],
        vec![0.5, 0.5],
        &[
            vec![vec![0.8, 0.2], vec![0.3, 0.7]],
            vec![vec![0.2, 0.8], vec![0.6, 0.4]],
            vec![vec![0.5, 0.5], vec![0.9, 0.1]],
        ],
    )
    .unwrap();
    let mut r = rng(77);
    let four = random_model(&mut r, 4, 4, 5).with_priors(vec![0.25; 4], vec![0.25; 4]).unwrap();
    vec![("two-group", two, 3.0), ("binary", binary, 4.0), ("random-4x4", four, 3.0)]
}

/// Four-group model: movie groups differ in quality, user groups in
/// harshness, and a user rates movies of the matching group higher. Each
/// kernel row is a discretized Gaussian around that mean.
pub fn gaussian_model() -> GroupModel {
    let quality = [1.8, 2.6, 3.4, 4.2];
    let bias = [-0.6, -0.2, 0.2, 0.6];
    let w: Vec<Vec<Vec<f64>>> = (0..4)
        .map(|u| {
            (0..4)
                .map(|v| {
                    let mean = quality[v] + bias[u] + if u == v { 0.8 } else { 0.0 };
                    let mut row: Vec<f64> = (1..=5).map(|r| (-(f64::from(r) - mean).powi(2) / (2.0 * 0.8 * 0.8)).exp()).collect();
                    let s: f64 = row.iter().sum();
                    row.iter_mut().for_each(|x| *x /= s);
                    row
                })
                .collect()
        })
        .collect();
    GroupModel::new(alphabet(5), vec![0.25; 4], vec![0.25; 4], &w).unwrap()
}

/// Four-group model where a user rates movies of the matching group high and
/// the rest low, so every movie has the same mean rating.
pub fn cold_start_model() -> GroupModel {
    let hit = vec![0.02, 0.03, 0.10, 0.35, 0.50];
    let miss = vec![0.25, 0.40, 0.20, 0.10, 0.05];
    let w: Vec<Vec<Vec<f64>>> = (0..4)
        .map(|u| (0..4).map(|v| if u == v { hit.clone() } else { miss.clone() }).collect())
        .collect();
    GroupModel::new(alphabet(5), vec![0.25; 4], vec![0.25; 4], &w).unwrap()
}
