//! Generalization bound for tri-factorized sign predictors and the
//! zero-one sign-agreement distortions it controls.

use crate::error::{Error, Result};
use crate::model::ObservationSet;

/// Parameters of the generalization bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub g_u: usize,
    pub g_v: usize,
    pub n_users: usize,
    pub n_movies: usize,
    /// Number of observed entries `|O|`.
    pub observed: usize,
    pub delta: f64,
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        if self.g_u == 0 || self.g_v == 0 {
            return Err(Error::param("group counts must be positive"));
        }
        if self.n_users <= 2 || self.n_movies <= 2 {
            return Err(Error::param(format!(
                "bound requires N, M > 2 (got N = {}, M = {})",
                self.n_users, self.n_movies
            )));
        }
        if self.observed == 0 {
            return Err(Error::param("bound requires at least one observed entry"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::param(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        Ok(())
    }
}

/// Upper bound on `|D - D_O|` holding with probability `1 - delta`:
///
/// `h = sqrt(((N g_u + M g_v + g_u g_v) ln(12 e M / min(g_u, g_v)) - ln delta) / (2 |O|))`.
pub fn generalization_bound(p: &BoundParams) -> Result<f64> {
    p.validate()?;
    let (gu, gv) = (p.g_u as f64, p.g_v as f64);
    let (n, m) = (p.n_users as f64, p.n_movies as f64);
    let dof = n * gu + m * gv + gu * gv;
    let log_term = (12.0 * std::f64::consts::E * m / gu.min(gv)).ln();
    let numerator = dof * log_term - p.delta.ln();
    Ok((numerator / (2.0 * p.observed as f64)).sqrt())
}

/// `d(x, y) = 1` iff `x * y <= 0`; `y` is a sign in `{+1, -1}`.
#[inline]
pub fn sign_distortion(x: f64, y: i8) -> u8 {
    debug_assert!(y == 1 || y == -1, "binary rating must be +1 or -1");
    u8::from(x * f64::from(y) <= 0.0)
}

/// Average distortion over the full `n x m` matrix and over the pairs in `observed`.
///
/// `x` and `y` are row-major `n x m`.
pub fn average_distortions(
    x: &[f64],
    y: &[i8],
    n: usize,
    m: usize,
    observed: &[(usize, usize)],
) -> Result<(f64, f64)> {
    if x.len() != n * m || y.len() != n * m {
        return Err(Error::param(format!(
            "matrices must be {n} x {m} (got {} and {} entries)",
            x.len(),
            y.len()
        )));
    }
    if y.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::param("binary ratings must be +1 or -1"));
    }
    if observed.is_empty() {
        return Err(Error::param("observed distortion needs a nonempty observed set"));
    }
    if n * m == 0 {
        return Err(Error::param("matrix is empty"));
    }
    let total: usize = x.iter().zip(y).map(|(&a, &b)| usize::from(sign_distortion(a, b))).sum();
    let mut on_observed = 0usize;
    for &(i, j) in observed {
        if i >= n || j >= m {
            return Err(Error::param(format!("observed pair ({i}, {j}) outside {n} x {m}")));
        }
        on_observed += usize::from(sign_distortion(x[i * m + j], y[i * m + j]));
    }
    Ok((total as f64 / (n * m) as f64, on_observed as f64 / observed.len() as f64))
}

/// Map a rating to a sign: `+1` when above `threshold`, `-1` otherwise.
pub fn rating_sign(value: f64, threshold: f64) -> i8 {
    if value > threshold {
        1
    } else {
        -1
    }
}

/// Midpoint of a rating alphabet, the default sign threshold.
pub fn default_threshold(alphabet: &[i32]) -> f64 {
    match (alphabet.first(), alphabet.last()) {
        (Some(&lo), Some(&hi)) => 0.5 * f64::from(lo + hi),
        _ => 0.0,
    }
}

/// Signs of the observed ratings, one per triple.
pub fn observed_signs(obs: &ObservationSet, threshold: f64) -> Vec<i8> {
    (0..obs.len())
        .map(|e| rating_sign(f64::from(obs.rating_value(e)), threshold))
        .collect()
}

/// Empirical distortion gap next to the bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionReport {
    pub full: f64,
    pub observed: f64,
    pub gap: f64,
    pub bound: f64,
}

/// Compare the empirical `|D - D_O|` of a predictor with `h`.
pub fn distortion_report(
    x: &[f64],
    y: &[i8],
    observed: &[(usize, usize)],
    params: &BoundParams,
) -> Result<DistortionReport> {
    let (full, on_observed) = average_distortions(x, y, params.n_users, params.n_movies, observed)?;
    Ok(DistortionReport {
        full,
        observed: on_observed,
        gap: (full - on_observed).abs(),
        bound: generalization_bound(params)?,
    })
}
