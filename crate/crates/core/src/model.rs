//! The generative model: hidden user and movie groups, a rating kernel
//! `w(r|u,v)`, observation sets and the synthetic sampler.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{categorical, substream};

/// Tolerance for probability vectors summing to one.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Which side of the bipartite graph a quantity belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Users,
    Movies,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Users => "p_U",
            Side::Movies => "p_V",
        })
    }
}

/// First invariant a [`GroupModel`] breaks.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelViolation {
    #[error("rating alphabet is empty")]
    EmptyAlphabet,
    #[error("rating alphabet is not strictly increasing at position {0}")]
    UnsortedAlphabet(usize),
    #[error("{0} has no groups")]
    NoGroups(Side),
    #[error("{side} entry {index} is {value}, outside [0, 1]")]
    PriorEntry { side: Side, index: usize, value: f64 },
    #[error("{side} sums to {sum}")]
    PriorSum { side: Side, sum: f64 },
    #[error("kernel entry w({r}|{u},{v}) is {value}, outside [0, 1]")]
    KernelEntry {
        u: usize,
        v: usize,
        r: usize,
        value: f64,
    },
    #[error("kernel row ({u},{v}) sums to {sum}")]
    KernelRowSum { u: usize, v: usize, sum: f64 },
}

/// Model parameters: group priors and the rating kernel.
///
/// The kernel is stored row-major as `[u][v][r]`, where `r` indexes the
/// rating alphabet. A `GroupModel` may be built without validation (see
/// [`GroupModel::from_parts`]) so that [`validate_model`] can report on it.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupModel {
    ratings: Vec<i32>,
    p_u: Vec<f64>,
    p_v: Vec<f64>,
    kernel: Vec<f64>,
}

impl GroupModel {
    /// Build and validate a model from a nested `[u][v][r]` kernel.
    pub fn new(ratings: Vec<i32>, p_u: Vec<f64>, p_v: Vec<f64>, w: &[Vec<Vec<f64>>]) -> Result<Self> {
        let kernel = flatten_kernel(w, p_u.len(), p_v.len(), ratings.len())?;
        let model = Self::from_parts(ratings, p_u, p_v, kernel)?;
        model.validate()?;
        Ok(model)
    }

    /// Assemble a model from a flat kernel, checking only the table shape.
    pub fn from_parts(ratings: Vec<i32>, p_u: Vec<f64>, p_v: Vec<f64>, kernel: Vec<f64>) -> Result<Self> {
        let want = p_u.len() * p_v.len() * ratings.len();
        if kernel.len() != want {
            return Err(Error::data(format!(
                "kernel has {} entries, expected {} x {} x {} = {want}",
                kernel.len(),
                p_u.len(),
                p_v.len(),
                ratings.len()
            )));
        }
        Ok(Self {
            ratings,
            p_u,
            p_v,
            kernel,
        })
    }

    /// Uniform priors and uniform kernel rows.
    pub fn uniform(ratings: Vec<i32>, g_u: usize, g_v: usize) -> Result<Self> {
        if g_u == 0 || g_v == 0 || ratings.is_empty() {
            return Err(Error::param("uniform model needs at least one group per side and one rating"));
        }
        let nr = ratings.len();
        Self::from_parts(
            ratings,
            vec![1.0 / g_u as f64; g_u],
            vec![1.0 / g_v as f64; g_v],
            vec![1.0 / nr as f64; g_u * g_v * nr],
        )
    }

    pub fn g_u(&self) -> usize {
        self.p_u.len()
    }

    pub fn g_v(&self) -> usize {
        self.p_v.len()
    }

    pub fn ratings(&self) -> &[i32] {
        &self.ratings
    }

    pub fn n_ratings(&self) -> usize {
        self.ratings.len()
    }

    pub fn p_u(&self) -> &[f64] {
        &self.p_u
    }

    pub fn p_v(&self) -> &[f64] {
        &self.p_v
    }

    pub fn prior(&self, side: Side) -> &[f64] {
        match side {
            Side::Users => &self.p_u,
            Side::Movies => &self.p_v,
        }
    }

    /// Flat `[u][v][r]` kernel table.
    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    /// `w(r|u,v)` for rating index `r`.
    #[inline]
    pub fn w(&self, r: usize, u: usize, v: usize) -> f64 {
        self.kernel[(u * self.p_v.len() + v) * self.ratings.len() + r]
    }

    /// The distribution `w(.|u,v)` over rating indices.
    pub fn kernel_row(&self, u: usize, v: usize) -> &[f64] {
        let nr = self.ratings.len();
        let start = (u * self.p_v.len() + v) * nr;
        &self.kernel[start..start + nr]
    }

    /// Kernel as nested `[u][v][r]` vectors.
    pub fn kernel_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.g_u())
            .map(|u| (0..self.g_v()).map(|v| self.kernel_row(u, v).to_vec()).collect())
            .collect()
    }

    pub fn with_priors(mut self, p_u: Vec<f64>, p_v: Vec<f64>) -> Result<Self> {
        if p_u.len() != self.p_u.len() || p_v.len() != self.p_v.len() {
            return Err(Error::param("prior lengths do not match group counts"));
        }
        self.p_u = p_u;
        self.p_v = p_v;
        Ok(self)
    }

    pub fn with_kernel(mut self, kernel: Vec<f64>) -> Result<Self> {
        if kernel.len() != self.kernel.len() {
            return Err(Error::param("kernel size does not match model shape"));
        }
        self.kernel = kernel;
        Ok(self)
    }

    /// Conditional mean `sum_r r * w(r|u,v)`.
    pub fn mean_rating(&self, u: usize, v: usize) -> f64 {
        self.kernel_row(u, v)
            .iter()
            .zip(&self.ratings)
            .map(|(p, &r)| p * f64::from(r))
            .sum()
    }

    pub fn validate(&self) -> std::result::Result<(), ModelViolation> {
        match validate_model(self).violation {
            Some(v) => Err(v),
            None => Ok(()),
        }
    }

    /// Index of a rating value in the alphabet.
    pub fn rating_index(&self, value: i32) -> Option<usize> {
        self.ratings.binary_search(&value).ok()
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            g_u: self.g_u(),
            g_v: self.g_v(),
            ratings: self.ratings.clone(),
            p_u: self.p_u.clone(),
            p_v: self.p_v.clone(),
            w: self.kernel_nested(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    /// Parse and validate a model from its JSON form.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            context: format!("model json (line {}, column {})", e.line(), e.column()),
            message: e.to_string(),
        })?;
        if file.p_u.len() != file.g_u || file.p_v.len() != file.g_v {
            return Err(Error::Parse {
                context: "model json".into(),
                message: format!(
                    "field g_u/g_v ({}/{}) disagrees with p_u/p_v lengths ({}/{})",
                    file.g_u,
                    file.g_v,
                    file.p_u.len(),
                    file.p_v.len()
                ),
            });
        }
        Self::new(file.ratings, file.p_u, file.p_v, &file.w)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = self.to_json();
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    g_u: usize,
    g_v: usize,
    ratings: Vec<i32>,
    p_u: Vec<f64>,
    p_v: Vec<f64>,
    w: Vec<Vec<Vec<f64>>>,
}

fn flatten_kernel(w: &[Vec<Vec<f64>>], g_u: usize, g_v: usize, nr: usize) -> Result<Vec<f64>> {
    if w.len() != g_u {
        return Err(Error::data(format!("kernel has {} user rows, expected {g_u}", w.len())));
    }
    let mut flat = Vec::with_capacity(g_u * g_v * nr);
    for (u, plane) in w.iter().enumerate() {
        if plane.len() != g_v {
            return Err(Error::data(format!("kernel row {u} has {} movie groups, expected {g_v}", plane.len())));
        }
        for (v, row) in plane.iter().enumerate() {
            if row.len() != nr {
                return Err(Error::data(format!("kernel row ({u},{v}) has {} ratings, expected {nr}", row.len())));
            }
            flat.extend_from_slice(row);
        }
    }
    Ok(flat)
}

/// Outcome of [`validate_model`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violation: Option<ModelViolation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.violation {
            None => f.write_str("pass"),
            Some(v) => write!(f, "fail: {v}"),
        }
    }
}

fn check_distribution(p: &[f64], side: Side) -> Option<ModelViolation> {
    if p.is_empty() {
        return Some(ModelViolation::NoGroups(side));
    }
    if let Some((index, &value)) = p.iter().enumerate().find(|(_, x)| !(0.0..=1.0).contains(*x)) {
        return Some(ModelViolation::PriorEntry { side, index, value });
    }
    let sum: f64 = p.iter().sum();
    ((sum - 1.0).abs() > SUM_TOLERANCE).then_some(ModelViolation::PriorSum { side, sum })
}

/// Check every [`GroupModel`] invariant, reporting the first violation.
pub fn validate_model(model: &GroupModel) -> ValidationReport {
    let violation = (|| {
        if model.ratings.is_empty() {
            return Some(ModelViolation::EmptyAlphabet);
        }
        if let Some(i) = model.ratings.windows(2).position(|w| w[0] >= w[1]) {
            return Some(ModelViolation::UnsortedAlphabet(i + 1));
        }
        if let Some(v) = check_distribution(&model.p_u, Side::Users) {
            return Some(v);
        }
        if let Some(v) = check_distribution(&model.p_v, Side::Movies) {
            return Some(v);
        }
        for u in 0..model.g_u() {
            for v in 0..model.g_v() {
                let row = model.kernel_row(u, v);
                if let Some((r, &value)) = row.iter().enumerate().find(|(_, x)| !(0.0..=1.0).contains(*x)) {
                    return Some(ModelViolation::KernelEntry { u, v, r, value });
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > SUM_TOLERANCE {
                    return Some(ModelViolation::KernelRowSum { u, v, sum });
                }
            }
        }
        None
    })();
    ValidationReport { violation }
}

/// One observed rating. `rating` indexes the set's rating alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Observation {
    pub user: usize,
    pub movie: usize,
    pub rating: usize,
}

/// Sparse set of observed `(user, movie, rating)` triples with adjacency.
///
/// Edge `e` is the `e`-th triple; `user_edges(n)` lists the edges of user
/// `n` in triple order, and likewise for movies.
#[derive(Debug, Clone)]
pub struct ObservationSet {
    n_users: usize,
    n_movies: usize,
    alphabet: Vec<i32>,
    triples: Vec<Observation>,
    user_edges: Vec<Vec<usize>>,
    movie_edges: Vec<Vec<usize>>,
    index: HashMap<(usize, usize), usize>,
}

impl PartialEq for ObservationSet {
    fn eq(&self, other: &Self) -> bool {
        self.n_users == other.n_users
            && self.n_movies == other.n_movies
            && self.alphabet == other.alphabet
            && self.triples == other.triples
    }
}

impl ObservationSet {
    pub fn new(n_users: usize, n_movies: usize, alphabet: Vec<i32>, triples: Vec<Observation>) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(Error::data("rating alphabet is empty"));
        }
        if alphabet.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::data("rating alphabet must be strictly increasing"));
        }
        let mut user_edges = vec![Vec::new(); n_users];
        let mut movie_edges = vec![Vec::new(); n_movies];
        let mut index = HashMap::with_capacity(triples.len());
        for (e, t) in triples.iter().enumerate() {
            if t.user >= n_users || t.movie >= n_movies {
                return Err(Error::data(format!(
                    "triple {e} ({}, {}) outside {n_users} x {n_movies}",
                    t.user, t.movie
                )));
            }
            if t.rating >= alphabet.len() {
                return Err(Error::data(format!("triple {e} has rating index {} outside the alphabet", t.rating)));
            }
            if let Some(prev) = index.insert((t.user, t.movie), e) {
                return Err(Error::data(format!(
                    "duplicate pair ({}, {}) at triples {prev} and {e}",
                    t.user, t.movie
                )));
            }
            user_edges[t.user].push(e);
            movie_edges[t.movie].push(e);
        }
        debug_assert_eq!(user_edges.iter().map(Vec::len).sum::<usize>(), triples.len());
        debug_assert_eq!(movie_edges.iter().map(Vec::len).sum::<usize>(), triples.len());
        Ok(Self {
            n_users,
            n_movies,
            alphabet,
            triples,
            user_edges,
            movie_edges,
            index,
        })
    }

    /// Build from rating values rather than alphabet indices.
    pub fn from_values(
        n_users: usize,
        n_movies: usize,
        alphabet: Vec<i32>,
        values: impl IntoIterator<Item = (usize, usize, i32)>,
    ) -> Result<Self> {
        let triples = values
            .into_iter()
            .map(|(user, movie, value)| {
                let rating = alphabet
                    .binary_search(&value)
                    .map_err(|_| Error::data(format!("rating {value} is not in the alphabet {alphabet:?}")))?;
                Ok(Observation { user, movie, rating })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n_users, n_movies, alphabet, triples)
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_movies(&self) -> usize {
        self.n_movies
    }

    pub fn alphabet(&self) -> &[i32] {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> &[Observation] {
        &self.triples
    }

    pub fn triple(&self, e: usize) -> Observation {
        self.triples[e]
    }

    pub fn rating_value(&self, e: usize) -> i32 {
        self.alphabet[self.triples[e].rating]
    }

    /// Edges of user `n` (the set V_n).
    pub fn user_edges(&self, n: usize) -> &[usize] {
        &self.user_edges[n]
    }

    /// Edges of movie `m` (the set U_m).
    pub fn movie_edges(&self, m: usize) -> &[usize] {
        &self.movie_edges[m]
    }

    pub fn edges(&self, side: Side, node: usize) -> &[usize] {
        match side {
            Side::Users => &self.user_edges[node],
            Side::Movies => &self.movie_edges[node],
        }
    }

    pub fn n_nodes(&self, side: Side) -> usize {
        match side {
            Side::Users => self.n_users,
            Side::Movies => self.n_movies,
        }
    }

    pub fn user_degree(&self, n: usize) -> usize {
        self.user_edges[n].len()
    }

    pub fn movie_degree(&self, m: usize) -> usize {
        self.movie_edges[m].len()
    }

    /// Edge index of an observed pair.
    pub fn find(&self, user: usize, movie: usize) -> Option<usize> {
        self.index.get(&(user, movie)).copied()
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.triples.iter().map(|t| (t.user, t.movie)).collect()
    }

    /// The observations at the given edge indices, same dimensions and alphabet.
    pub fn subset(&self, edges: &[usize]) -> Result<Self> {
        let triples = edges.iter().map(|&e| self.triples[e]).collect();
        Self::new(self.n_users, self.n_movies, self.alphabet.clone(), triples)
    }

    /// Mean observed rating value.
    pub fn mean_rating(&self) -> Option<f64> {
        if self.triples.is_empty() {
            return None;
        }
        let total: f64 = (0..self.len()).map(|e| f64::from(self.rating_value(e))).sum();
        Some(total / self.len() as f64)
    }

    /// Write the `user,movie,rating` CSV form.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        let map_err = |e: csv::Error| Error::data(format!("csv write failed: {e}"));
        out.write_record(["user", "movie", "rating"]).map_err(map_err)?;
        for (e, t) in self.triples.iter().enumerate() {
            out.write_record([t.user.to_string(), t.movie.to_string(), self.rating_value(e).to_string()])
                .map_err(map_err)?;
        }
        out.flush().map_err(|e| Error::data(format!("csv write failed: {e}")))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Read the `user,movie,rating` CSV form.
    ///
    /// Without an explicit alphabet the distinct rating values are used;
    /// without explicit dimensions they are one past the largest index seen.
    pub fn read_csv<R: Read>(reader: R, alphabet: Option<&[i32]>, dims: Option<(usize, usize)>) -> Result<Self> {
        let rows = read_triples(reader, "dataset")?;
        let alphabet = match alphabet {
            Some(a) => {
                let mut a = a.to_vec();
                a.sort_unstable();
                a.dedup();
                a
            }
            None => {
                let mut a: Vec<i32> = rows.iter().map(|r| r.2).collect();
                a.sort_unstable();
                a.dedup();
                if a.is_empty() {
                    return Err(Error::data("cannot infer a rating alphabet from an empty dataset"));
                }
                a
            }
        };
        let (n_users, n_movies) = dims.unwrap_or_else(|| {
            (
                rows.iter().map(|r| r.0 + 1).max().unwrap_or(0),
                rows.iter().map(|r| r.1 + 1).max().unwrap_or(0),
            )
        });
        Self::from_values(n_users, n_movies, alphabet, rows)
    }

    pub fn load_csv(path: impl AsRef<Path>, alphabet: Option<&[i32]>, dims: Option<(usize, usize)>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file), alphabet, dims)
    }
}

/// Parse `user,movie,rating` rows (header required) into raw triples.
pub fn read_triples<R: Read, U>(reader: R, context: &str) -> Result<Vec<(U, U, i32)>>
where
    U: std::str::FromStr,
    U::Err: fmt::Display,
{
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Parse {
        context: context.into(),
        message: e.to_string(),
    })?;
    if headers.iter().collect::<Vec<_>>() != ["user", "movie", "rating"] {
        return Err(Error::Parse {
            context: format!("{context} line 1"),
            message: "expected header `user,movie,rating`".into(),
        });
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            context: context.into(),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize, name: &str| -> Result<&str> {
            record.get(i).ok_or_else(|| Error::Parse {
                context: format!("{context} line {line}"),
                message: format!("missing field `{name}`"),
            })
        };
        let parse_err = |name: &str, msg: String| Error::Parse {
            context: format!("{context} line {line}, field `{name}`"),
            message: msg,
        };
        let user = field(0, "user")?.parse::<U>().map_err(|e| parse_err("user", e.to_string()))?;
        let movie = field(1, "movie")?.parse::<U>().map_err(|e| parse_err("movie", e.to_string()))?;
        let rating = field(2, "rating")?.parse::<i32>().map_err(|e| parse_err("rating", e.to_string()))?;
        rows.push((user, movie, rating));
    }
    Ok(rows)
}

/// Hidden group labels of a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticTruth {
    pub user_groups: Vec<usize>,
    pub movie_groups: Vec<usize>,
}

/// Which user-movie pairs a synthetic dataset observes.
#[derive(Debug, Clone)]
pub enum EdgeSpec {
    /// Exactly these pairs.
    Pairs(Vec<(usize, usize)>),
    /// Poisson user degrees with this mean, attached through a random permutation.
    AveragePerUser(f64),
}

const MAX_REDRAWS: usize = 100;

/// Draw a synthetic dataset from `model`.
///
/// Groups are drawn i.i.d. from the priors. For a target density each user
/// gets a Poisson degree (clamped to `[0, n_movies]`); the resulting user
/// sockets are shuffled and dealt round-robin onto movie sockets, and a
/// socket that would duplicate an existing pair is redrawn uniformly (at most
/// 100 times). Ratings are drawn independently from `w(.|U_n, V_m)`.
pub fn sample_synthetic(
    model: &GroupModel,
    n_users: usize,
    n_movies: usize,
    edges: &EdgeSpec,
    seed: u64,
) -> Result<(ObservationSet, SyntheticTruth)> {
    if n_users == 0 || n_movies == 0 {
        return Err(Error::param("synthetic data needs at least one user and one movie"));
    }
    model.validate()?;

    let mut rng = substream(seed, "groups");
    let user_groups: Vec<usize> = (0..n_users).map(|_| categorical(model.p_u(), &mut rng)).collect();
    let movie_groups: Vec<usize> = (0..n_movies).map(|_| categorical(model.p_v(), &mut rng)).collect();

    let pairs = match edges {
        EdgeSpec::Pairs(pairs) => pairs.clone(),
        EdgeSpec::AveragePerUser(mean) => attach_edges(n_users, n_movies, *mean, seed)?,
    };

    let mut rng = substream(seed, "ratings");
    let triples = pairs
        .into_iter()
        .map(|(user, movie)| {
            if user >= n_users || movie >= n_movies {
                return Err(Error::param(format!("pair ({user}, {movie}) outside {n_users} x {n_movies}")));
            }
            let row = model.kernel_row(user_groups[user], movie_groups[movie]);
            Ok(Observation {
                user,
                movie,
                rating: categorical(row, &mut rng),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let obs = ObservationSet::new(n_users, n_movies, model.ratings().to_vec(), triples)?;
    Ok((obs, SyntheticTruth { user_groups, movie_groups }))
}

fn attach_edges(n_users: usize, n_movies: usize, mean: f64, seed: u64) -> Result<Vec<(usize, usize)>> {
    if !(mean >= 0.0 && mean.is_finite()) {
        return Err(Error::param(format!("average observations per user must be nonnegative, got {mean}")));
    }
    if mean > n_movies as f64 {
        return Err(Error::param(format!(
            "average observations per user {mean} exceeds the number of movies {n_movies}"
        )));
    }
    let mut rng = substream(seed, "edges");
    let mut sockets = Vec::new();
    if mean > 0.0 {
        let poisson = Poisson::new(mean).map_err(|e| Error::param(e.to_string()))?;
        for n in 0..n_users {
            let d = (poisson.sample(&mut rng) as usize).min(n_movies);
            sockets.extend(std::iter::repeat_n(n, d));
        }
    }
    sockets.shuffle(&mut rng);

    let mut seen = std::collections::HashSet::with_capacity(sockets.len());
    let mut pairs = Vec::with_capacity(sockets.len());
    for (k, &n) in sockets.iter().enumerate() {
        let mut m = k % n_movies;
        let mut redraws = 0;
        while !seen.insert((n, m)) {
            if redraws == MAX_REDRAWS {
                return Err(Error::data(format!(
                    "could not attach a socket of user {n} without duplicating a pair after {MAX_REDRAWS} redraws"
                )));
            }
            m = rng.random_range(0..n_movies);
            redraws += 1;
        }
        pairs.push((n, m));
    }
    Ok(pairs)
}
