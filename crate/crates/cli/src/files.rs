//! CSV formats owned by the command-line tool.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use fgcf::de::{DeMetrics, SideMetrics, TreeCondition, ENTROPY_BINS};
use fgcf::eval::PredictionSet;
use fgcf::{Error, PosteriorEstimates, SyntheticTruth};

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        context: format!("{} line {line}", path.display()),
        message: message.into(),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>, Error> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn records(path: &Path, expected: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>, Error> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| parse_err(path, 1, e.to_string()))?.clone();
    if !headers.iter().eq(expected.iter().copied()) {
        return Err(parse_err(path, 1, format!("expected header `{}`", expected.join(","))));
    }
    rdr.records()
        .map(|r| {
            let r = r.map_err(|e| parse_err(path, 0, e.to_string()))?;
            Ok((r.position().map_or(0, |p| p.line() as usize), r))
        })
        .collect()
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, rec: &csv::StringRecord, i: usize, name: &str) -> Result<T, Error>
where
    T::Err: std::fmt::Display,
{
    let raw = rec.get(i).ok_or_else(|| parse_err(path, line, format!("missing field `{name}`")))?;
    raw.parse()
        .map_err(|e: T::Err| parse_err(path, line, format!("field `{name}`: {e}")))
}

/// `kind,index,group` with `kind` in {user, movie}.
pub fn write_truth(truth: &SyntheticTruth) -> String {
    let mut s = String::from("kind,index,group\n");
    for (i, g) in truth.user_groups.iter().enumerate() {
        writeln!(s, "user,{i},{g}").unwrap();
    }
    for (i, g) in truth.movie_groups.iter().enumerate() {
        writeln!(s, "movie,{i},{g}").unwrap();
    }
    s
}

pub fn read_truth(path: &Path) -> Result<SyntheticTruth, Error> {
    let mut users = Vec::new();
    let mut movies = Vec::new();
    for (line, rec) in records(path, &["kind", "index", "group"])? {
        let index: usize = field(path, line, &rec, 1, "index")?;
        let group: usize = field(path, line, &rec, 2, "group")?;
        let target = match &rec[0] {
            "user" => &mut users,
            "movie" => &mut movies,
            other => return Err(parse_err(path, line, format!("unknown kind `{other}`"))),
        };
        if index != target.len() {
            return Err(parse_err(path, line, format!("expected index {}, found {index}", target.len())));
        }
        target.push(group);
    }
    Ok(SyntheticTruth {
        user_groups: users,
        movie_groups: movies,
    })
}

/// Query pairs with optional true ratings.
pub struct Pairs {
    pub pairs: Vec<(usize, usize)>,
    pub ratings: Option<Vec<i32>>,
}

pub fn read_pairs(path: &Path) -> Result<Pairs, Error> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| parse_err(path, 1, e.to_string()))?.clone();
    let with_rating = match headers.iter().collect::<Vec<_>>().as_slice() {
        ["user", "movie"] => false,
        ["user", "movie", "rating"] => true,
        _ => return Err(parse_err(path, 1, "expected header `user,movie` or `user,movie,rating`")),
    };
    let mut pairs = Vec::new();
    let mut ratings = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(path, 0, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        pairs.push((field(path, line, &rec, 0, "user")?, field(path, line, &rec, 1, "movie")?));
        if with_rating {
            ratings.push(field(path, line, &rec, 2, "rating")?);
        }
    }
    Ok(Pairs {
        pairs,
        ratings: with_rating.then_some(ratings),
    })
}

/// Raw ratings with arbitrary string ids, mapped to dense 0-based indices in
/// order of first appearance.
pub struct Ingested {
    pub triples: Vec<(usize, usize, i32)>,
    pub users: Vec<String>,
    pub movies: Vec<String>,
}

pub fn ingest(path: &Path) -> Result<Ingested, Error> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let raw: Vec<(String, String, i32)> = fgcf::model::read_triples(std::io::BufReader::new(file), &path.display().to_string())?;
    let mut user_ids: HashMap<String, usize> = HashMap::new();
    let mut movie_ids: HashMap<String, usize> = HashMap::new();
    let mut out = Ingested {
        triples: Vec::with_capacity(raw.len()),
        users: Vec::new(),
        movies: Vec::new(),
    };
    for (u, m, r) in raw {
        let next = out.users.len();
        let ui = *user_ids.entry(u.clone()).or_insert_with(|| {
            out.users.push(u);
            next
        });
        let next = out.movies.len();
        let mi = *movie_ids.entry(m.clone()).or_insert_with(|| {
            out.movies.push(m);
            next
        });
        out.triples.push((ui, mi, r));
    }
    Ok(out)
}

/// `kind,original,index`
pub fn write_id_map(ing: &Ingested) -> Result<Vec<u8>, Error> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let werr = |e: csv::Error| Error::Data(format!("csv write failed: {e}"));
    w.write_record(["kind", "original", "index"]).map_err(werr)?;
    for (kind, ids) in [("user", &ing.users), ("movie", &ing.movies)] {
        for (i, id) in ids.iter().enumerate() {
            w.write_record([kind, id.as_str(), &i.to_string()]).map_err(werr)?;
        }
    }
    w.into_inner().map_err(|e| Error::Data(format!("csv write failed: {e}")))
}

/// Long-form node posteriors: `kind,index,group,probability`.
pub fn write_posteriors(post: &PosteriorEstimates) -> String {
    let mut s = String::from("kind,index,group,probability\n");
    for (kind, rows) in [("user", &post.users), ("movie", &post.movies)] {
        for (i, row) in rows.iter().enumerate() {
            for (g, p) in row.iter().enumerate() {
                writeln!(s, "{kind},{i},{g},{p}").unwrap();
            }
        }
    }
    s
}

pub fn write_predictions(pred: &PredictionSet) -> Vec<u8> {
    let mut out = Vec::new();
    pred.write_csv(&mut out).expect("writing to memory");
    out
}

/// `iteration,<name>` with iterations counted from `first`.
pub fn write_trace(name: &str, values: &[f64], first: usize) -> String {
    let mut s = format!("iteration,{name}\n");
    for (i, v) in values.iter().enumerate() {
        writeln!(s, "{},{v}", i + first).unwrap();
    }
    s
}

fn side_row(s: &mut String, iteration: usize, population: &str, side: &str, m: &SideMetrics) {
    write!(
        s,
        "{iteration},{population},{side},{},{},{},{}",
        m.mean_true_belief, m.std_error, m.map_error, m.mean_entropy
    )
    .unwrap();
    for c in &m.entropy_histogram {
        write!(s, ",{c}").unwrap();
    }
    s.push('\n');
}

/// One line per iteration, population kind and side.
pub fn write_de_metrics(messages: &[DeMetrics], nodes: &[DeMetrics]) -> String {
    let mut s = String::from("iteration,population,side,mean_true_belief,std_error,map_error,mean_entropy");
    for b in 0..ENTROPY_BINS {
        write!(s, ",entropy_bin_{b}").unwrap();
    }
    s.push('\n');
    for (msg, node) in messages.iter().zip(nodes) {
        side_row(&mut s, msg.iteration, "message", "users", &msg.users);
        side_row(&mut s, msg.iteration, "message", "movies", &msg.movies);
        side_row(&mut s, node.iteration, "node", "users", &node.users);
        side_row(&mut s, node.iteration, "node", "movies", &node.movies);
    }
    s
}

pub fn write_tree_condition(n: usize, m: usize, d_max: usize, depth: usize, delta: f64, t: &TreeCondition) -> String {
    format!(
        "n_users,n_movies,d_max,depth,delta,lhs,rhs,holds,ratio\n{n},{m},{d_max},{depth},{delta},{},{},{},{}\n",
        t.lhs, t.rhs, t.holds, t.ratio
    )
}
