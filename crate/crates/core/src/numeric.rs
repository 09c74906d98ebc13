//! Probability-vector helpers shared by the learners and density evolution.

/// Lower clamp applied to kernel entries before they enter message products.
pub const KERNEL_FLOOR: f64 = 1e-12;

/// Node degree above which products are accumulated in the log domain.
pub const LOG_DOMAIN_DEGREE: usize = 64;

/// Scale `v` to sum to one. Returns `false` (leaving `v` untouched) when the
/// sum is not a positive finite number.
pub fn normalize(v: &mut [f64]) -> bool {
    let sum: f64 = v.iter().sum();
    if !(sum > 0.0 && sum.is_finite()) {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= sum);
    true
}

/// Replace log-weights by the normalized probabilities they encode.
pub fn softmax_in_place(v: &mut [f64]) -> bool {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x = (*x - max).exp());
    normalize(v)
}

/// Largest absolute elementwise difference.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Index of the largest entry, ties going to the smallest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

/// Copy of a kernel table with every entry clamped to [`KERNEL_FLOOR`].
pub fn floored(kernel: &[f64]) -> Vec<f64> {
    kernel.iter().map(|&x| x.max(KERNEL_FLOOR)).collect()
}

/// Sum-product combination of a prior with `d` incoming factors.
///
/// `factors` holds `d` rows of width `prior.len()`. On success `full` holds
/// `normalize(prior * prod_k factors[k])` and, if `extrinsic` is given, row
/// `j` of it holds the same product with factor `j` left out. On failure the
/// returned value is the row whose normalizer vanished (`d` for `full`).
pub fn combine(
    prior: &[f64],
    factors: &[f64],
    full: &mut [f64],
    extrinsic: Option<&mut [f64]>,
) -> Result<(), usize> {
    let g = prior.len();
    let d = if g == 0 { 0 } else { factors.len() / g };
    if d > LOG_DOMAIN_DEGREE {
        combine_log(prior, factors, d, full, extrinsic)
    } else {
        combine_linear(prior, factors, d, full, extrinsic)
    }
}

fn rescale(v: &mut [f64]) -> bool {
    let max = v.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0 && max.is_finite()) {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= max);
    true
}

fn combine_linear(
    prior: &[f64],
    factors: &[f64],
    d: usize,
    full: &mut [f64],
    extrinsic: Option<&mut [f64]>,
) -> Result<(), usize> {
    let g = prior.len();
    // prefix[k] = prod_{j<k} factors[j], rescaled by its max after each step
    let mut prefix = vec![1.0; (d + 1) * g];
    for k in 0..d {
        let (head, tail) = prefix.split_at_mut((k + 1) * g);
        let prev = &head[k * g..];
        let next = &mut tail[..g];
        for u in 0..g {
            next[u] = prev[u] * factors[k * g + u];
        }
        if !rescale(next) {
            return Err(k);
        }
    }
    for u in 0..g {
        full[u] = prior[u] * prefix[d * g + u];
    }
    if !normalize(full) {
        return Err(d);
    }
    if let Some(out) = extrinsic {
        let mut suffix = vec![1.0; g];
        for j in (0..d).rev() {
            let row = &mut out[j * g..(j + 1) * g];
            for u in 0..g {
                row[u] = prior[u] * prefix[j * g + u] * suffix[u];
            }
            if !normalize(row) {
                return Err(j);
            }
            for u in 0..g {
                suffix[u] *= factors[j * g + u];
            }
            if !rescale(&mut suffix) {
                return Err(j);
            }
        }
    }
    Ok(())
}

fn combine_log(
    prior: &[f64],
    factors: &[f64],
    d: usize,
    full: &mut [f64],
    extrinsic: Option<&mut [f64]>,
) -> Result<(), usize> {
    let g = prior.len();
    let logs: Vec<f64> = factors.iter().map(|x| x.ln()).collect();
    let mut total: Vec<f64> = prior.iter().map(|x| x.ln()).collect();
    for k in 0..d {
        for u in 0..g {
            total[u] += logs[k * g + u];
        }
    }
    full.copy_from_slice(&total);
    if !softmax_in_place(full) {
        return Err(d);
    }
    if let Some(out) = extrinsic {
        for j in 0..d {
            let row = &mut out[j * g..(j + 1) * g];
            for u in 0..g {
                row[u] = total[u] - logs[j * g + u];
            }
            if !softmax_in_place(row) {
                return Err(j);
            }
        }
    }
    Ok(())
}
