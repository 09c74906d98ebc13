use std::path::{Path, PathBuf};

use fgcf::bound::{generalization_bound, BoundParams};
use fgcf::de::{de_run, tree_condition, DeConfig, DegreePair};
use fgcf::em::NodeBeliefs;
use fgcf::eval::{
    cold_start_sweep, hide_validation, initial_model, predict, rmse, train_from, Algorithm, SweepData, SweepSpec,
};
use fgcf::model::{read_triples, sample_synthetic, EdgeSpec};
use fgcf::{GroupModel, ObservationSet, PosteriorEstimates};

use crate::files;
use crate::manifest::{hash_file, io_err, FileHash, Manifest, Outputs, MANIFEST};
use crate::settings::Settings;
use crate::CliError;

const DEFAULT_DENSITIES: [f64; 6] = [1.0, 3.0, 5.0, 10.0, 20.0, 30.0];

/// Input files a command reads, with the setting that names them.
fn input_paths(s: &Settings) -> Vec<&PathBuf> {
    [&s.data, &s.input, &s.model, &s.truth, &s.pairs, &s.degrees, &s.inference]
        .into_iter()
        .flatten()
        .collect()
}

/// Settings as recorded in a manifest: absolute input paths, no output
/// directory or thread count.
fn recorded(s: &Settings) -> Result<Settings, CliError> {
    let abs = |p: &Option<PathBuf>| -> Result<Option<PathBuf>, CliError> {
        p.as_ref()
            .map(|p| std::fs::canonicalize(p).map_err(|e| io_err(p, e)))
            .transpose()
    };
    Ok(Settings {
        data: abs(&s.data)?,
        input: abs(&s.input)?,
        model: abs(&s.model)?,
        truth: abs(&s.truth)?,
        pairs: abs(&s.pairs)?,
        degrees: abs(&s.degrees)?,
        inference: abs(&s.inference)?,
        out_dir: None,
        threads: None,
        ..s.clone()
    })
}

/// Run one command, write its outputs and manifest, and return the manifest.
pub fn execute(command: &str, s: &Settings) -> Result<Manifest, CliError> {
    let mut out = Outputs::create(s.out_dir())?;
    match command {
        "ingest" => ingest(s, &mut out)?,
        "sample" => sample(s, &mut out)?,
        "init" => init(s, &mut out)?,
        "train" => train(s, &mut out, false)?,
        "predict" => train(s, &mut out, true)?,
        "bound" => bound(s, &mut out)?,
        "de" => de(s, &mut out)?,
        "sweep" => sweep(s, &mut out)?,
        other => return Err(CliError::Config(format!("unknown command `{other}`"))),
    }
    let inputs = input_paths(s)
        .into_iter()
        .map(|p| {
            Ok(FileHash {
                path: std::fs::canonicalize(p).map_err(|e| io_err(p, e))?,
                sha256: hash_file(p)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    out.finish(command, recorded(s)?, inputs)
}

/// Rerun the manifest's command and compare every output hash.
pub fn replay(manifest_path: &Path, out_dir: Option<PathBuf>) -> Result<(), CliError> {
    let manifest = Manifest::load(manifest_path)?;
    for input in &manifest.inputs {
        let now = hash_file(&input.path)?;
        if now != input.sha256 {
            return Err(CliError::Mismatch(format!("input {} changed since the run", input.path.display())));
        }
    }
    let dir = out_dir.unwrap_or_else(|| manifest_path.parent().unwrap_or(Path::new(".")).join("replay"));
    if dir.join(MANIFEST) == manifest_path {
        return Err(CliError::Config("replay directory must differ from the original run".into()));
    }
    let settings = Settings {
        out_dir: Some(dir.clone()),
        ..manifest.settings.clone()
    };
    let rerun = execute(&manifest.command, &settings)?;
    let mut differing = Vec::new();
    for original in &manifest.outputs {
        match rerun.outputs.iter().find(|f| f.path == original.path) {
            Some(f) if f.sha256 == original.sha256 => println!("identical {}", original.path.display()),
            _ => {
                println!("differs   {}", original.path.display());
                differing.push(original.path.display().to_string());
            }
        }
    }
    if rerun.outputs.len() != manifest.outputs.len() {
        differing.push("output file set".into());
    }
    if differing.is_empty() {
        println!("replay of `{}` is byte-identical ({} files)", manifest.command, manifest.outputs.len());
        Ok(())
    } else {
        Err(CliError::Mismatch(differing.join(", ")))
    }
}

fn read_dataset(path: &Path, alphabet: Option<&[i32]>, min_dims: (usize, usize)) -> Result<ObservationSet, CliError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let rows: Vec<(usize, usize, i32)> = read_triples(std::io::BufReader::new(file), &path.display().to_string())?;
    let n = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0).max(min_dims.0);
    let m = rows.iter().map(|r| r.1 + 1).max().unwrap_or(0).max(min_dims.1);
    let alphabet = match alphabet {
        Some(a) => a.to_vec(),
        None => {
            let mut a: Vec<i32> = rows.iter().map(|r| r.2).collect();
            a.sort_unstable();
            a.dedup();
            a
        }
    };
    if alphabet.is_empty() {
        return Err(fgcf::Error::Data(format!("{} holds no ratings", path.display())).into());
    }
    Ok(ObservationSet::from_values(n, m, alphabet, rows)?)
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut v = Vec::new();
    write(&mut v).expect("writing to memory");
    v
}

fn ingest(s: &Settings, out: &mut Outputs) -> Result<(), CliError> {
    let input = s.require(&s.input, "input")?;
    let ing = files::ingest(input)?;
    let mut alphabet: Vec<i32> = ing.triples.iter().map(|t| t.2).collect();
    alphabet.sort_unstable();
    alphabet.dedup();
    if alphabet.is_empty() {
        return Err(fgcf::Error::Data(format!("{} holds no ratings", input.display())).into());
    }
    let obs = ObservationSet::from_values(ing.users.len(), ing.movies.len(), alphabet, ing.triples.iter().copied())?;
    let mut data = Vec::new();
    obs.write_csv(&mut data)?;
    out.write("dataset.csv", data)?;
    out.write("id_map.csv", files::write_id_map(&ing)?)?;
    println!("{} ratings, {} users, {} movies", obs.len(), obs.n_users(), obs.n_movies());
    Ok(())
}

fn sample(s: &Settings, out: &mut Outputs) -> Result<(), CliError> {
    let model = GroupModel::load(s.require(&s.model, "model")?)?;
    let users = *s.require(&s.users, "users")?;
    let movies = s.movies.unwrap_or(users);
    let density = *s.require(&s.density, "density")?;
    let (obs, truth) = sample_synthetic(&model, users, movies, &EdgeSpec::AveragePerUser(density), s.seed())?;
    let mut data = Vec::new();
    obs.write_csv(&mut data)?;
    out.write("dataset.csv", data)?;
    out.write("truth.csv", files::write_truth(&truth))?;
    println!("{} ratings, {users} users, {movies} movies", obs.len());
    Ok(())
}

fn beliefs_as_posteriors(b: &NodeBeliefs) -> String {
    let mut s = String::from("kind,index,group,probability\n");
    for (kind, rows) in [("user", &b.users), ("movie", &b.movies)] {
        for (i, row) in rows.iter().enumerate() {
            for (g, p) in row.iter().enumerate() {
                s.push_str(&format!("{kind},{i},{g},{p}\n"));
            }
        }
    }
    s
}

fn init(s: &Settings, out: &mut Outputs) -> Result<(), CliError> {
    let obs = read_dataset(s.require(&s.data, "data")?, None, (0, 0))?;
    let learner = s.learner()?;
    let (model, beliefs) = initial_model(&obs, &learner, s.seed())?;
    out.write("model.json", format!("{}\n", model.to_json()))?;
    if let Some(b) = &beliefs {
        out.write("init_beliefs.csv", beliefs_as_posteriors(b))?;
    }
    println!("initial model with g_u = {}, g_v = {}", model.g_u(), model.g_v());
    Ok(())
}

fn train(s: &Settings, out: &mut Outputs, with_pairs: bool) -> Result<(), CliError> {
    let data_path = s.require(&s.data, "data")?;
    let pairs = if with_pairs {
        Some(files::read_pairs(s.require(&s.pairs, "pairs")?)?)
    } else {
        None
    };
    let span = pairs.as_ref().map_or((0, 0), |p| {
        (
            p.pairs.iter().map(|q| q.0 + 1).max().unwrap_or(0),
            p.pairs.iter().map(|q| q.1 + 1).max().unwrap_or(0),
        )
    });
    let given = s.model.as_ref().map(GroupModel::load).transpose()?;
    let obs = read_dataset(data_path, given.as_ref().map(|m| m.ratings()), span)?;
    let learner = s.learner()?;
    let alg = s.algorithm()?;
    let (model, beliefs) = match given {
        Some(m) => (m, None),
        None => initial_model(&obs, &learner, s.seed())?,
    };
    let query = pairs.as_ref().map_or(&[][..], |p| &p.pairs[..]);
    let trained = train_from(alg, &model, beliefs.as_ref(), &obs, &learner, query)?;
    out.write("model.json", format!("{}\n", trained.model.to_json()))?;
    out.write("posteriors.csv", files::write_posteriors(&trained.posteriors))?;
    match alg {
        Algorithm::Imp => out.write("imp_trace.csv", files::write_trace("max_change", &trained.trace, 1))?,
        _ => out.write("em_trace.csv", files::write_trace("nll", &trained.trace, 0))?,
    };
    println!("{alg}: {} iterations", trained.iterations);
    if let Some(p) = pairs {
        let pred = predict(&trained, learner.estimator, &p.pairs)?;
        out.write("predictions.csv", files::write_predictions(&pred))?;
        if let Some(ratings) = p.ratings {
            let truth = ObservationSet::from_values(
                obs.n_users(),
                obs.n_movies(),
                obs.alphabet().to_vec(),
                p.pairs.iter().zip(ratings).map(|(&(u, m), r)| (u, m, r)),
            )?;
            let score = rmse(&pred, &truth)?;
            out.write(
                "metrics.csv",
                format!("estimator,pairs,rmse\n{},{},{score}\n", pred.estimator, pred.entries.len()),
            )?;
            println!("rmse ({}) = {score}", pred.estimator);
        }
        report_substitution(&trained.posteriors);
    }
    Ok(())
}

fn report_substitution(post: &PosteriorEstimates) {
    if post.substituted > 0 {
        eprintln!(
            "note: {} of {} query pairs are unobserved and use full node beliefs",
            post.substituted,
            post.pairs.len()
        );
    }
}

fn bound(s: &Settings, out: &mut Outputs) -> Result<(), CliError> {
    let (g_u, g_v) = s.groups();
    let n_users = *s.require(&s.users, "users")?;
    let n_movies = *s.require(&s.movies, "movies")?;
    let observed = s.require(&s.observed, "observed")?;
    let delta = s.delta.unwrap_or(0.1);
    let mut csv = String::from("g_u,g_v,n_users,n_movies,observed,delta,h\n");
    for &o in observed {
        let h = generalization_bound(&BoundParams {
            g_u,
            g_v,
            n_users,
            n_movies,
            observed: o,
            delta,
        })?;
        csv.push_str(&format!("{g_u},{g_v},{n_users},{n_movies},{o},{delta},{h}\n"));
        println!("|O| = {o}: h = {h}");
    }
    out.write("bound.csv", csv)?;
    Ok(())
}

fn de(s: &Settings, out: &mut Outputs) -> Result<(), CliError> {
    let model = GroupModel::load(s.require(&s.model, "model")?)?;
    let path = s.require(&s.degrees, "degrees")?;
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let degrees = DegreePair::from_json(&text)?;
    let config = DeConfig {
        population: s.population.unwrap_or(DeConfig::default().population),
        incoming: s.incoming()?,
        inference: s.inference.as_ref().map(GroupModel::load).transpose()?,
    };
    let iters = s.iters.unwrap_or(10);
    let (_, trace) = de_run(&model, &degrees, iters, &config, s.seed())?;
    out.write("de_metrics.csv", files::write_de_metrics(&trace.messages, &trace.nodes))?;
    if let Some(last) = trace.nodes.last() {
        println!(
            "after {iters} iterations: mean true-group belief users {:.6}, movies {:.6}",
            last.users.mean_true_belief, last.movies.mean_true_belief
        );
    }
    if let Some(n) = s.users {
        let m = s.movies.unwrap_or(n);
        let d_max = degrees.users.max_degree().max(degrees.movies.max_degree());
        let delta = s.delta.unwrap_or(0.1);
        let t = tree_condition(n, m, d_max, iters, delta)?;
        out.write("tree_condition.csv", files::write_tree_condition(n, m, d_max, iters, delta, &t))?;
        println!("tree condition: lhs = {} vs 1 - delta = {}: {}", t.lhs, t.rhs, if t.holds { "holds" } else { "fails" });
    }
    Ok(())
}

fn sweep(s: &Settings, out: &mut Outputs) -> Result<(), CliError> {
    let data_path = s.require(&s.data, "data")?;
    let truth = match &s.truth {
        Some(path) => {
            let model = GroupModel::load(s.require(&s.model, "model")?)?;
            Some((model, files::read_truth(path)?))
        }
        None => None,
    };
    let dims = truth
        .as_ref()
        .map_or((0, 0), |(_, t)| (t.user_groups.len(), t.movie_groups.len()));
    let alphabet = truth.as_ref().map(|(m, _)| m.ratings().to_vec());
    let obs = read_dataset(data_path, alphabet.as_deref(), dims)?;
    let (train, validation) = hide_validation(&obs, s.validation.unwrap_or(1000), s.seed())?;
    let algorithms = match (&s.algs, &truth) {
        (None, Some(_)) => vec![Algorithm::Baseline, Algorithm::Imp, Algorithm::Em, Algorithm::LowerBound],
        _ => s.sweep_algorithms()?,
    };
    let spec = SweepSpec {
        densities: s.densities.clone().unwrap_or_else(|| DEFAULT_DENSITIES.to_vec()),
        algorithms,
        seeds: s.seeds.clone().unwrap_or_else(|| (0..10).collect()),
        learner: s.learner()?,
    };
    let data = SweepData {
        id: data_path.display().to_string(),
        train,
        validation,
        truth,
    };
    let result = cold_start_sweep(&data, &spec)?;
    out.write("sweep.csv", csv_bytes(|w| result.write_csv(w)))?;
    out.write("sweep_pivot.csv", csv_bytes(|w| result.write_pivot_csv(w)))?;
    out.write("sweep_cells.csv", csv_bytes(|w| result.write_cells_csv(w)))?;
    println!("{} rows over {} cells", result.rows.len(), result.cells.len());
    Ok(())
}
