//! Config-driven pipeline: data generation, multi-run structure search,
//! a posteriori selection, validation and front comparison.

mod config;
mod outputs;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand};

use greybox_id::dataio::{
    buck_static_grid, default_synthetic_bundle, gen_prbs, read_dynamic_csv, read_static_csv,
    simulate_plant, split, write_dynamic_csv, write_static_csv, PlantSpec,
};
use greybox_id::decision::{
    mmd_select, mtd_select, priority_weights, PreferenceSpec, Ranking, WeightVector,
};
use greybox_id::estimation::{
    dynamic_error, free_run, percent_error, static_error, DatasetBundle, ModelStructure,
    StructureDocument, TimeSeries,
};
use greybox_id::moea::{accumulate, run_all, set_coverage, Algorithm, ParetoArchive};
use greybox_id::narx::{generate_term_pool, prune_pool, prune_to_linear, static_polynomial, TermPool};
use greybox_id::validation::{residuals, validity_tests};

use config::{DataSource, PipelineConfig, PruningMode};
use outputs::{
    archive_document, load_archive, run_directory, write_archive_csv, write_json,
    write_ranking_csv, Manifest, Provenance, SelectedModel,
};

/// Error with a stable exit code: 2 config, 3 data, 4 numerical.
#[derive(Debug)]
pub struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    pub fn config(message: String) -> Self {
        Self { code: 2, message }
    }

    pub fn data(message: String) -> Self {
        Self { code: 3, message }
    }

    pub fn numeric(message: String) -> Self {
        Self { code: 4, message }
    }

    pub fn from_config_err(e: greybox_id::Error) -> Self {
        Self::config(e.to_string())
    }

    pub fn from_data_err(e: greybox_id::Error) -> Self {
        Self::data(e.to_string())
    }

    /// Classify a library error raised while running the pipeline.
    pub fn classify(e: greybox_id::Error) -> Self {
        use greybox_id::Error as E;
        match e {
            E::InvalidConfig(_) | E::InvalidTerm(_) | E::Parse(_) => Self::config(e.to_string()),
            E::Io(_) | E::Json(_) | E::Csv(_) | E::SeriesTooShort(_) | E::SplitTooSmall(_)
            | E::TermNotInPool(_) | E::GenomeLengthMismatch { .. } => Self::data(e.to_string()),
            E::DegenerateStaticGain(_) | E::UnsupportedClusters(_) | E::RankDeficient { .. }
            | E::Diverged { .. } | E::PlantUnstable(_) | E::ArchiveTooSmall { .. } => {
                Self::numeric(e.to_string())
            }
        }
    }
}

#[derive(Parser)]
#[command(name = "greybox", version)]
#[command(about = "Grey-box NARX structure selection: multi-objective search with steady-state prior knowledge")]
struct Cli {
    /// Worker threads for independent runs (defaults to the CPU count)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured synthetic dataset as CSV files
    GenerateData {
        /// Pipeline configuration JSON (defaults to the built-in config)
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (defaults to runs/<stamp>-<hash>)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the data-generation seed
        #[arg(long)]
        data_seed: Option<u64>,
    },
    /// Search for non-dominated structures and export the archive
    Identify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the search seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of independent runs
        #[arg(long)]
        runs: Option<usize>,
        /// Override the per-run evaluation budget
        #[arg(long)]
        budget: Option<usize>,
        /// Override the algorithm (nsga2 or spea2)
        #[arg(long)]
        algorithm: Option<String>,
        #[arg(long)]
        data_seed: Option<u64>,
    },
    /// A posteriori selection from a saved archive
    Select {
        /// archive.json produced by `identify`
        #[arg(long)]
        archive: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip the Minimum Manhattan Distance selection
        #[arg(long)]
        no_mmd: bool,
        /// MTD objective rankings as `O_xi,O_E,O_Ebar` (e.g. 3,1,2)
        #[arg(long)]
        rankings: Option<String>,
        /// MTD preference intensity on the 1..9 scale
        #[arg(long, default_value_t = 5.0)]
        intensity: f64,
        /// JSON file with a list of preference specs for batch MTD
        #[arg(long)]
        preferences: Option<PathBuf>,
    },
    /// Free-run, static and correlation validation of one model
    Validate {
        /// Model JSON (a structure document with coefficients)
        #[arg(long)]
        model: PathBuf,
        /// Dynamic record CSV (k,u,y)
        #[arg(long)]
        data: PathBuf,
        /// Static curve CSV (u_bar,y_bar); defaults to the ideal line grid
        #[arg(long)]
        static_curve: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        grid_min: f64,
        #[arg(long, default_value_t = 4.0)]
        grid_max: f64,
        #[arg(long, default_value_t = 61)]
        grid_count: usize,
        #[arg(long, default_value_t = 24.0)]
        v_d: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Set-coverage comparison of two archives
    Coverage {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .ok();
    }
    if let Err(e) = dispatch(cli.command) {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::GenerateData { config, out, data_seed } => {
            cmd_generate_data(load_config(config)?, out, data_seed)
        }
        Command::Identify { config, out, seed, runs, budget, algorithm, data_seed } => {
            let mut cfg = load_config(config)?;
            if let Some(seed) = seed {
                cfg.moea.seed = seed;
            }
            if let Some(runs) = runs {
                cfg.moea.runs = runs;
            }
            if let Some(budget) = budget {
                cfg.moea.budget = budget;
            }
            if let Some(algorithm) = algorithm {
                cfg.moea.algorithm = match algorithm.as_str() {
                    "nsga2" => Algorithm::Nsga2,
                    "spea2" => Algorithm::Spea2,
                    other => {
                        return Err(CliError::config(format!("unknown algorithm {other}")))
                    }
                };
            }
            if let Some(ds) = data_seed {
                override_data_seed(&mut cfg, ds);
            }
            cfg.validate()?;
            cmd_identify(cfg, out)
        }
        Command::Select { archive, out, no_mmd, rankings, intensity, preferences } => {
            cmd_select(archive, out, no_mmd, rankings, intensity, preferences)
        }
        Command::Validate {
            model,
            data,
            static_curve,
            grid_min,
            grid_max,
            grid_count,
            v_d,
            out,
        } => cmd_validate(model, data, static_curve, (grid_min, grid_max, grid_count, v_d), out),
        Command::Coverage { a, b } => cmd_coverage(a, b),
    }
}

fn load_config(path: Option<PathBuf>) -> Result<PipelineConfig, CliError> {
    match path {
        Some(path) => PipelineConfig::load(&path),
        None => Ok(PipelineConfig::default()),
    }
}

fn override_data_seed(config: &mut PipelineConfig, seed: u64) {
    match &mut config.data {
        DataSource::SyntheticDefault { data_seed } => *data_seed = seed,
        DataSource::Synthetic { data_seed, .. } => *data_seed = seed,
        DataSource::Csv { .. } => {}
    }
}

/// Assemble the dataset bundle plus the raw series it came from.
fn build_dataset(
    config: &PipelineConfig,
) -> Result<(TimeSeries, Vec<greybox_id::estimation::StaticPoint>, DatasetBundle), CliError> {
    match &config.data {
        DataSource::SyntheticDefault { data_seed } => {
            let plant = PlantSpec::default_buck();
            let (u, y, bundle) =
                default_synthetic_bundle(&plant, *data_seed).map_err(CliError::classify)?;
            let raw = TimeSeries::new(u, y).map_err(CliError::classify)?;
            Ok((raw, bundle.static_curve.clone(), bundle))
        }
        DataSource::Synthetic {
            data_seed,
            structure,
            noise_std,
            noise,
            prbs,
            dither,
            n_est,
            grid,
        } => {
            use rand::{Rng, SeedableRng};
            let plant_pool = Arc::new(generate_term_pool(structure.config));
            let plant_structure =
                ModelStructure::from_document(plant_pool, structure.clone())
                    .map_err(CliError::from_config_err)?;
            let plant = PlantSpec::new(
                plant_structure,
                *noise_std,
                *noise,
                grid.v_d,
                (prbs.low, prbs.high),
            )
            .map_err(CliError::classify)?;
            let mut u = gen_prbs(prbs).map_err(CliError::classify)?;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*data_seed);
            for v in &mut u {
                *v += dither * (2.0 * rng.random::<f64>() - 1.0);
            }
            let y = simulate_plant(&plant, &u, &mut rng);
            let curve = buck_static_grid(grid.min, grid.max, grid.count, grid.v_d);
            let bundle = split(&u, &y, *n_est, config.pool.max_lag(), curve.clone())
                .map_err(CliError::classify)?;
            let raw = TimeSeries::new(u, y).map_err(CliError::classify)?;
            Ok((raw, curve, bundle))
        }
        DataSource::Csv { dynamic, static_curve, n_est, grid } => {
            let series =
                read_dynamic_csv(dynamic.as_ref()).map_err(CliError::from_data_err)?;
            let curve = match static_curve {
                Some(path) => {
                    read_static_csv(path.as_ref()).map_err(CliError::from_data_err)?
                }
                None => buck_static_grid(grid.min, grid.max, grid.count, grid.v_d),
            };
            let bundle = split(&series.u, &series.y, *n_est, config.pool.max_lag(), curve.clone())
                .map_err(CliError::classify)?;
            Ok((series, curve, bundle))
        }
    }
}

fn search_pool(config: &PipelineConfig) -> Arc<TermPool> {
    let full = generate_term_pool(config.pool);
    Arc::new(match config.pruning {
        PruningMode::Clusters => prune_pool(&full),
        PruningMode::Linear => prune_to_linear(&full),
        PruningMode::None => full,
    })
}

fn cmd_generate_data(
    config: PipelineConfig,
    out: Option<PathBuf>,
    data_seed: Option<u64>,
) -> Result<(), CliError> {
    let mut config = config;
    if let Some(ds) = data_seed {
        override_data_seed(&mut config, ds);
    }
    config.validate()?;
    let hash = config.hash();
    let seed = match &config.data {
        DataSource::SyntheticDefault { data_seed } | DataSource::Synthetic { data_seed, .. } => {
            *data_seed
        }
        DataSource::Csv { .. } => {
            return Err(CliError::config(
                "generate-data needs a synthetic data source".into(),
            ))
        }
    };
    let provenance = Provenance { config_hash: hash.clone(), seed };
    let (raw, curve, bundle) = build_dataset(&config)?;
    let dir = run_directory(out, &hash)?;
    write_dynamic_csv(&dir.join("dynamic.csv"), &raw, &provenance.comments())
        .map_err(CliError::from_data_err)?;
    write_static_csv(&dir.join("static.csv"), &curve, &provenance.comments())
        .map_err(CliError::from_data_err)?;
    let mean = raw.y.iter().sum::<f64>() / raw.len() as f64;
    let var = raw.y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / raw.len() as f64;
    println!(
        "wrote {} samples ({} estimation / {} validation), static curve {} points",
        raw.len(),
        bundle.estimation.len(),
        bundle.validation.len(),
        curve.len()
    );
    println!(
        "y: mean {:.4} V, std {:.4} V | u: [{:.3}, {:.3}] V",
        mean,
        var.sqrt(),
        raw.u.iter().cloned().fold(f64::INFINITY, f64::min),
        raw.u.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    );
    println!("run directory: {}", dir.display());
    Ok(())
}

fn cmd_identify(config: PipelineConfig, out: Option<PathBuf>) -> Result<(), CliError> {
    let hash = config.hash();
    let provenance = Provenance { config_hash: hash.clone(), seed: config.moea.seed };
    let (_, _, bundle) = build_dataset(&config)?;
    let pool = search_pool(&config);
    let t0 = Instant::now();
    let results = run_all(&bundle, &pool, &config.moea).map_err(CliError::classify)?;
    let archive = accumulate(&results, &pool).map_err(CliError::classify)?;
    let wall = t0.elapsed().as_secs_f64();

    let dir = run_directory(out, &hash)?;
    write_archive_csv(&dir.join("archive.csv"), &archive, &provenance)?;
    write_json(
        &dir.join("archive.json"),
        &archive_document(&archive, &pool, &provenance, &config.moea.algorithm.to_string()),
    )?;
    write_json(
        &dir.join("manifest.json"),
        &Manifest::new(&provenance, &config.moea, pool.len(), &results, archive.len(), wall),
    )?;
    let total_evals: usize = results.iter().map(|r| r.unique_evaluations).sum();
    println!(
        "{} runs of {} over {} terms: {} unique evaluations, archive of {} structures in {:.1}s",
        config.moea.runs,
        config.moea.algorithm,
        pool.len(),
        total_evals,
        archive.len(),
        wall
    );
    println!("run directory: {}", dir.display());
    Ok(())
}

fn parse_rankings(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|e| CliError::config(format!("bad ranking {part:?}: {e}")))
        })
        .collect()
}

fn cmd_select(
    archive_path: PathBuf,
    out: Option<PathBuf>,
    no_mmd: bool,
    rankings: Option<String>,
    intensity: f64,
    preferences: Option<PathBuf>,
) -> Result<(), CliError> {
    let (_pool, archive, doc) = load_archive(&archive_path)?;
    if archive.is_empty() {
        return Err(CliError::numeric("archive has no feasible entries".into()));
    }
    let provenance = Provenance { config_hash: doc.config_hash.clone(), seed: doc.seed };
    let dir = run_directory(out, &doc.config_hash)?;

    let mut prefs: Vec<PreferenceSpec> = Vec::new();
    if let Some(text) = rankings {
        prefs.push(
            PreferenceSpec::new(parse_rankings(&text)?, intensity)
                .map_err(CliError::from_config_err)?,
        );
    }
    if let Some(path) = preferences {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
        let extra: Vec<PreferenceSpec> = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("bad preferences file: {e}")))?;
        for p in &extra {
            p.validate().map_err(CliError::from_config_err)?;
        }
        prefs.extend(extra);
    }

    let mut report_methods = Vec::new();
    if !no_mmd {
        let ranking = mmd_select(&archive).map_err(CliError::classify)?;
        report_methods.push(emit_selection(&dir, &archive, &ranking, "mmd", None, &provenance)?);
    }
    for (i, pref) in prefs.iter().enumerate() {
        let weights = priority_weights(pref).map_err(CliError::from_config_err)?;
        let ranking = mtd_select(&archive, &weights).map_err(CliError::classify)?;
        let label = format!("mtd_{}", i + 1);
        println!(
            "MTD rankings {:?} intensity {}: weights [{}]",
            pref.rankings,
            pref.intensity,
            weights
                .weights
                .iter()
                .map(|w| format!("{w:.4}"))
                .collect::<Vec<_>>()
                .join(", ")
        );
        report_methods.push(emit_selection(
            &dir,
            &archive,
            &ranking,
            &label,
            Some((pref.clone(), weights)),
            &provenance,
        )?);
    }

    #[derive(serde::Serialize)]
    struct Report {
        config_hash: String,
        seed: u64,
        archive_size: usize,
        methods: Vec<serde_json::Value>,
    }
    write_json(
        &dir.join("report.json"),
        &Report {
            config_hash: doc.config_hash.clone(),
            seed: doc.seed,
            archive_size: archive.len(),
            methods: report_methods,
        },
    )?;
    println!("run directory: {}", dir.display());
    Ok(())
}

fn emit_selection(
    dir: &std::path::Path,
    archive: &ParetoArchive,
    ranking: &Ranking,
    method: &str,
    pref: Option<(PreferenceSpec, WeightVector)>,
    provenance: &Provenance,
) -> Result<serde_json::Value, CliError> {
    let entry = &archive.entries()[ranking.selected()];
    let poly = static_polynomial(&entry.structure).ok();
    let selected = SelectedModel {
        config_hash: provenance.config_hash.clone(),
        seed: provenance.seed,
        method: method.to_string(),
        genome: entry.genome.to_string(),
        xi: entry.objectives.xi,
        e_dyn: entry.objectives.e_dyn,
        e_static: entry.objectives.e_static,
        score: ranking.scores[ranking.selected()],
        terms: entry.structure.terms().cloned().collect(),
        coefficients: entry
            .structure
            .coefficients()
            .map(<[f64]>::to_vec)
            .unwrap_or_default(),
        static_polynomial: poly,
        structure: entry.structure.to_document(),
    };
    write_json(&dir.join(format!("selected_{method}.json")), &selected)?;
    write_ranking_csv(&dir.join(format!("ranking_{method}.csv")), archive, ranking, provenance)?;
    println!(
        "{method}: selected xi={} E={:.6} Ebar={:.4} genome={}",
        entry.objectives.xi, entry.objectives.e_dyn, entry.objectives.e_static, entry.genome
    );
    let mut value = serde_json::json!({
        "method": method,
        "genome": entry.genome.to_string(),
        "xi": entry.objectives.xi,
        "e_dyn": entry.objectives.e_dyn,
        "e_static": entry.objectives.e_static,
        "score": ranking.scores[ranking.selected()],
    });
    if let Some((pref, weights)) = pref {
        value["rankings"] = serde_json::json!(pref.rankings);
        value["intensity"] = serde_json::json!(pref.intensity);
        value["weights"] = serde_json::json!(weights.weights);
    }
    Ok(value)
}

fn cmd_validate(
    model_path: PathBuf,
    data_path: PathBuf,
    static_path: Option<PathBuf>,
    grid: (f64, f64, usize, f64),
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&model_path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", model_path.display())))?;
    // accept either a bare structure document or a selected-model file
    // wrapping one under "structure"
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::data(format!("bad model {}: {e}", model_path.display())))?;
    let doc_value = value
        .get("structure")
        .cloned()
        .unwrap_or_else(|| value.clone());
    let doc: StructureDocument = serde_json::from_value(doc_value)
        .map_err(|e| CliError::data(format!("bad model {}: {e}", model_path.display())))?;
    if doc.coefficients.is_empty() {
        return Err(CliError::config("model document has no coefficients".into()));
    }
    let pool = Arc::new(generate_term_pool(doc.config));
    let structure =
        ModelStructure::from_document(pool, doc).map_err(CliError::from_data_err)?;
    let series = read_dynamic_csv(&data_path).map_err(CliError::from_data_err)?;
    let curve = match &static_path {
        Some(path) => read_static_csv(path).map_err(CliError::from_data_err)?,
        None => buck_static_grid(grid.0, grid.1, grid.2, grid.3),
    };

    // selected-model files carry their run's provenance; bare structure
    // documents do not
    let config_hash = value
        .get("config_hash")
        .and_then(|v| v.as_str())
        .unwrap_or("unknown")
        .to_string();
    let seed = value.get("seed").and_then(|v| v.as_u64()).unwrap_or(0);
    let provenance = Provenance { config_hash: config_hash.clone(), seed };
    let dir = run_directory(out, &config_hash)?;

    // free-run trace behind the dynamic comparison plot
    let y_hat = free_run(&structure, &series, series.len()).map_err(CliError::classify)?;
    {
        use std::io::Write as _;
        let mut file = std::fs::File::create(dir.join("free_run.csv"))
            .map_err(|e| CliError::data(e.to_string()))?;
        for (k, v) in provenance.comments() {
            writeln!(file, "# {k}={v}").map_err(|e| CliError::data(e.to_string()))?;
        }
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["k", "y", "y_hat"]).map_err(|e| CliError::data(e.to_string()))?;
        for (k, (y, yh)) in series.y.iter().zip(y_hat.iter()).enumerate() {
            w.write_record([(k + 1).to_string(), y.to_string(), yh.to_string()])
                .map_err(|e| CliError::data(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::data(e.to_string()))?;
    }

    // static comparison behind the steady-state plot
    let poly = static_polynomial(&structure).map_err(CliError::classify)?;
    {
        use std::io::Write as _;
        let mut file = std::fs::File::create(dir.join("static_comparison.csv"))
            .map_err(|e| CliError::data(e.to_string()))?;
        for (k, v) in provenance.comments() {
            writeln!(file, "# {k}={v}").map_err(|e| CliError::data(e.to_string()))?;
        }
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["u_bar", "y_ref", "y_model"])
            .map_err(|e| CliError::data(e.to_string()))?;
        for p in &curve {
            w.write_record([
                p.u_bar.to_string(),
                p.y_bar.to_string(),
                poly.eval(p.u_bar).to_string(),
            ])
            .map_err(|e| CliError::data(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::data(e.to_string()))?;
    }

    // correlation battery
    let eps = residuals(&structure, &series).map_err(CliError::classify)?;
    let max_lag = structure.pool().config().max_lag();
    let report = validity_tests(&eps, &series.u[max_lag..]).map_err(CliError::classify)?;
    let mut summary = serde_json::Map::new();
    summary.insert("config_hash".into(), serde_json::json!(provenance.config_hash));
    summary.insert("seed".into(), serde_json::json!(provenance.seed));
    for trace in &report.tests {
        let key = trace.test.key();
        summary.insert(
            key.to_string(),
            serde_json::json!(if trace.pass { "pass" } else { "fail" }),
        );
        use std::io::Write as _;
        let mut file = std::fs::File::create(dir.join(format!("correlation_{key}.csv")))
            .map_err(|e| CliError::data(e.to_string()))?;
        for (k, v) in provenance.comments() {
            writeln!(file, "# {k}={v}").map_err(|e| CliError::data(e.to_string()))?;
        }
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["tau", "value", "band"])
            .map_err(|e| CliError::data(e.to_string()))?;
        for (tau, value) in report.lags.iter().zip(trace.values.iter()) {
            w.write_record([tau.to_string(), value.to_string(), report.band.to_string()])
                .map_err(|e| CliError::data(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::data(e.to_string()))?;
    }
    write_json(&dir.join("validity.json"), &serde_json::Value::Object(summary))?;

    // both error metrics: the raw mean squared free-run error the search
    // minimizes and the normalized percent form
    let e_dyn = dynamic_error(&structure, &series);
    let e_pct = percent_error(&structure, &series).map_err(CliError::classify)?;
    let e_static = static_error(&structure, &curve);
    write_json(
        &dir.join("metrics.json"),
        &serde_json::json!({
            "config_hash": provenance.config_hash,
            "seed": provenance.seed,
            "e_dyn_mse": e_dyn,
            "e_dyn_percent": e_pct,
            "e_static": e_static,
            "validity_all_pass": report.all_pass(),
        }),
    )?;
    println!(
        "free-run error: {e_dyn:.6} V^2 ({e_pct:.2}%) | static error: {e_static:.4} V^2 | validity: {}",
        if report.all_pass() { "all pass" } else { "FAILURES" }
    );
    println!("run directory: {}", dir.display());
    Ok(())
}

fn cmd_coverage(a: PathBuf, b: PathBuf) -> Result<(), CliError> {
    let (_, archive_a, _) = load_archive(&a)?;
    let (_, archive_b, _) = load_archive(&b)?;
    let c_ab = set_coverage(&archive_a, &archive_b);
    let c_ba = set_coverage(&archive_b, &archive_a);
    println!("{}", serde_json::json!({ "C_AB": c_ab, "C_BA": c_ba }));
    Ok(())
}
