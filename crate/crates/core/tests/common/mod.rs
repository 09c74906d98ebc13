#![allow(dead_code)]

pub mod frozen;
pub mod checks;

use fgcf::model::Observation;
use fgcf::{GroupModel, ObservationSet};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn alphabet(nr: usize) -> Vec<i32> {
    (1..=nr as i32).collect()
}

/// Strictly positive random distribution.
pub fn random_dist<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

pub fn random_model<R: Rng>(rng: &mut R, gu: usize, gv: usize, nr: usize) -> GroupModel {
    let p_u = random_dist(rng, gu);
    let p_v = random_dist(rng, gv);
    let kernel: Vec<f64> = (0..gu * gv).flat_map(|_| random_dist(rng, nr)).collect();
    GroupModel::from_parts(alphabet(nr), p_u, p_v, kernel).unwrap()
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut x = x;
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Random bipartite forest: candidate pairs in random order, kept when they
/// join two components, each kept with probability `keep`.
pub fn random_forest<R: Rng>(rng: &mut R, n: usize, m: usize, nr: usize, keep: f64) -> ObservationSet {
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..m).map(move |b| (a, b))).collect();
    pairs.shuffle(rng);
    let mut parent: Vec<usize> = (0..n + m).collect();
    let mut triples = Vec::new();
    for (a, b) in pairs {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, n + b));
        if ra != rb && rng.random_bool(keep) {
            parent[ra] = rb;
            triples.push(Observation {
                user: a,
                movie: b,
                rating: rng.random_range(0..nr),
            });
        }
    }
    ObservationSet::new(n, m, alphabet(nr), triples).unwrap()
}

/// Random observation set where each pair is observed with probability `p`.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, m: usize, nr: usize, p: f64) -> ObservationSet {
    let mut triples = Vec::new();
    for a in 0..n {
        for b in 0..m {
            if rng.random_bool(p) {
                triples.push(Observation {
                    user: a,
                    movie: b,
                    rating: rng.random_range(0..nr),
                });
            }
        }
    }
    ObservationSet::new(n, m, alphabet(nr), triples).unwrap()
}

/// Exact posterior quantities by enumerating every group configuration.
pub struct Enumeration {
    pub users: Vec<Vec<f64>>,
    pub movies: Vec<Vec<f64>>,
    /// Joint marginal of (u_n, v_m) for every pair, `[n][m][u * gv + v]`.
    pub pair_joint: Vec<Vec<Vec<f64>>>,
}

/// Enumerate `p(groups | obs without skip)`.
pub fn enumerate(model: &GroupModel, obs: &ObservationSet, skip: Option<usize>) -> Enumeration {
    let (n, m, gu, gv) = (obs.n_users(), obs.n_movies(), model.g_u(), model.g_v());
    let mut users = vec![vec![0.0; gu]; n];
    let mut movies = vec![vec![0.0; gv]; m];
    let mut pair_joint = vec![vec![vec![0.0; gu * gv]; m]; n];
    let total_cfg = gu.pow(n as u32) * gv.pow(m as u32);
    let mut z = 0.0;
    let mut ug = vec![0; n];
    let mut vg = vec![0; m];
    for mut code in 0..total_cfg {
        for x in ug.iter_mut() {
            *x = code % gu;
            code /= gu;
        }
        for x in vg.iter_mut() {
            *x = code % gv;
            code /= gv;
        }
        let mut p: f64 = ug.iter().map(|&u| model.p_u()[u]).product::<f64>() * vg.iter().map(|&v| model.p_v()[v]).product::<f64>();
        for (e, t) in obs.triples().iter().enumerate() {
            if Some(e) != skip {
                p *= model.w(t.rating, ug[t.user], vg[t.movie]);
            }
        }
        z += p;
        for a in 0..n {
            users[a][ug[a]] += p;
            for b in 0..m {
                pair_joint[a][b][ug[a] * gv + vg[b]] += p;
            }
        }
        for b in 0..m {
            movies[b][vg[b]] += p;
        }
    }
    for v in users.iter_mut().chain(movies.iter_mut()) {
        v.iter_mut().for_each(|x| *x /= z);
    }
    for row in pair_joint.iter_mut() {
        for v in row.iter_mut() {
            v.iter_mut().for_each(|x| *x /= z);
        }
    }
    Enumeration { users, movies, pair_joint }
}

/// `Σ_{u,v} joint(u,v) w(r|u,v)`.
pub fn rating_from_joint(model: &GroupModel, joint: &[f64]) -> Vec<f64> {
    let gv = model.g_v();
    (0..model.n_ratings())
        .map(|r| {
            joint
                .iter()
                .enumerate()
                .map(|(uv, p)| p * model.w(r, uv / gv, uv % gv))
                .sum()
        })
        .collect()
}

/// Connected component label of every node (users first, then movies).
pub fn components(obs: &ObservationSet) -> Vec<usize> {
    let n = obs.n_users();
    let mut parent: Vec<usize> = (0..n + obs.n_movies()).collect();
    for t in obs.triples() {
        let (a, b) = (find(&mut parent, t.user), find(&mut parent, n + t.movie));
        parent[a] = b;
    }
    (0..parent.len()).map(|x| find(&mut parent, x)).collect()
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Dense ratings matrix with `None` for missing entries, rows are users.
pub fn dense(obs: &ObservationSet) -> Vec<Vec<Option<f64>>> {
    let mut d = vec![vec![None; obs.n_movies()]; obs.n_users()];
    for (e, t) in obs.triples().iter().enumerate() {
        d[t.user][t.movie] = Some(f64::from(obs.rating_value(e)));
    }
    d
}

pub fn transpose(d: &[Vec<Option<f64>>]) -> Vec<Vec<Option<f64>>> {
    let cols = d.first().map_or(0, Vec::len);
    (0..cols).map(|j| d.iter().map(|row| row[j]).collect()).collect()
}

/// Reference soft k-means sweep over dense rows with missing entries.
/// Returns (new critics, memberships, reseeded count).
pub fn naive_sweep(rows: &[Vec<Option<f64>>], critics: &[Vec<f64>], beta: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, usize) {
    let g = critics.len();
    let mut pi = Vec::new();
    for row in rows {
        let seen: Vec<(usize, f64)> = row.iter().enumerate().filter_map(|(j, x)| x.map(|x| (j, x))).collect();
        if seen.is_empty() {
            pi.push(vec![1.0 / g as f64; g]);
            continue;
        }
        let d: Vec<f64> = critics
            .iter()
            .map(|c| (seen.iter().map(|&(j, x)| (c[j] - x) * (c[j] - x)).sum::<f64>() / seen.len() as f64).sqrt())
            .collect();
        let dmin = d.iter().cloned().fold(f64::INFINITY, f64::min);
        let e: Vec<f64> = d.iter().map(|x| (-beta * (x - dmin)).exp()).collect();
        let s: f64 = e.iter().sum();
        pi.push(e.iter().map(|x| x / s).collect());
    }
    let cols = critics[0].len();
    let mut out = critics.to_vec();
    for u in 0..g {
        for j in 0..cols {
            let (mut num, mut den) = (0.0, 0.0);
            for (i, row) in rows.iter().enumerate() {
                if let Some(x) = row[j] {
                    num += pi[i][u] * x;
                    den += pi[i][u];
                }
            }
            if den > 0.0 {
                out[u][j] = num / den;
            }
        }
    }
    let mut mass = vec![0.0; g];
    for (i, row) in rows.iter().enumerate() {
        if row.iter().any(Option::is_some) {
            for u in 0..g {
                mass[u] += pi[i][u];
            }
        }
    }
    let mut heavy = 0;
    for u in 1..g {
        if mass[u] > mass[heavy] {
            heavy = u;
        }
    }
    let mut reseeded = 0;
    for u in 0..g {
        if mass[u] <= 0.0 && u != heavy {
            out[u] = out[heavy].clone();
            reseeded += 1;
        }
    }
    (out, pi, reseeded)
}

/// Reference kernel estimate from soft memberships.
pub fn naive_w(obs: &ObservationSet, pu: &[Vec<f64>], pv: &[Vec<f64>]) -> Vec<Vec<Vec<f64>>> {
    let (gu, gv, nr) = (pu[0].len(), pv[0].len(), obs.alphabet().len());
    let mut w = vec![vec![vec![0.0; nr]; gv]; gu];
    for u in 0..gu {
        for v in 0..gv {
            for t in obs.triples() {
                w[u][v][t.rating] += pu[t.user][u] * pv[t.movie][v];
            }
            let s: f64 = w[u][v].iter().sum();
            for x in w[u][v].iter_mut() {
                *x = if s > 0.0 { *x / s } else { 1.0 / nr as f64 };
            }
        }
    }
    w
}

/// Observed-data NLL `-Σ_e ln Σ_{u,v} w(r_e|u,v) f_n(u) h_m(v)`, straight loops.
pub fn naive_nll(model: &GroupModel, f: &[Vec<f64>], h: &[Vec<f64>], obs: &ObservationSet) -> f64 {
    let mut nll = 0.0;
    for t in obs.triples() {
        let mut s = 0.0;
        for u in 0..model.g_u() {
            for v in 0..model.g_v() {
                s += model.w(t.rating, u, v) * f[t.user][u] * h[t.movie][v];
            }
        }
        nll -= s.ln();
    }
    nll
}
