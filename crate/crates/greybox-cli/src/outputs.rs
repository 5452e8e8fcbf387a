//! Run-directory artifacts: archives, manifests, rankings and reports.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use greybox_id::decision::Ranking;
use greybox_id::estimation::ObjectiveVector;
use greybox_id::moea::{ArchiveEntry, Genome, ParetoArchive, RunResult};
use greybox_id::narx::{PoolDocument, StaticPolynomial, TermPool, TermSpec};

use crate::CliError;

/// Provenance stamped into every output file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn comments(&self) -> Vec<(&'static str, String)> {
        vec![
            ("config_hash", self.config_hash.clone()),
            ("seed", self.seed.to_string()),
        ]
    }
}

/// Serialized archive: pool plus one row per non-dominated structure.
#[derive(Debug, Serialize, Deserialize)]
pub struct ArchiveDocument {
    pub config_hash: String,
    pub seed: u64,
    pub algorithm: String,
    pub pool: PoolDocument,
    pub entries: Vec<ArchiveEntryDocument>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ArchiveEntryDocument {
    pub genome: String,
    pub run_id: usize,
    pub xi: usize,
    pub e_dyn: f64,
    pub e_static: f64,
    pub terms: Vec<TermSpec>,
    pub coefficients: Vec<f64>,
}

pub fn archive_document(
    archive: &ParetoArchive,
    pool: &TermPool,
    provenance: &Provenance,
    algorithm: &str,
) -> ArchiveDocument {
    ArchiveDocument {
        config_hash: provenance.config_hash.clone(),
        seed: provenance.seed,
        algorithm: algorithm.to_string(),
        pool: pool.to_document(),
        entries: archive
            .entries()
            .iter()
            .map(|e| ArchiveEntryDocument {
                genome: e.genome.to_string(),
                run_id: e.run_id,
                xi: e.objectives.xi,
                e_dyn: e.objectives.e_dyn,
                e_static: e.objectives.e_static,
                terms: e.structure.terms().cloned().collect(),
                coefficients: e
                    .structure
                    .coefficients()
                    .map(<[f64]>::to_vec)
                    .unwrap_or_default(),
            })
            .collect(),
    }
}

/// Load an archive document back into an in-memory archive plus its pool.
pub fn load_archive(path: &Path) -> Result<(Arc<TermPool>, ParetoArchive, ArchiveDocument), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let doc: ArchiveDocument = serde_json::from_str(&text)
        .map_err(|e| CliError::data(format!("bad archive {}: {e}", path.display())))?;
    let pool = TermPool::from_document(doc.pool.clone()).map_err(CliError::from_data_err)?;
    let mut entries = Vec::with_capacity(doc.entries.len());
    for row in &doc.entries {
        let genome = Genome::from_str(&row.genome).map_err(CliError::from_data_err)?;
        let structure = greybox_id::moea::decode(&genome, &pool)
            .map_err(CliError::from_data_err)?
            .with_coefficients(row.coefficients.clone());
        entries.push(ArchiveEntry {
            genome,
            objectives: ObjectiveVector::new(row.xi, row.e_dyn, row.e_static),
            structure,
            run_id: row.run_id,
        });
    }
    Ok((pool, ParetoArchive::from_entries(entries), doc))
}

/// Archive CSV: `genome_bits,xi,e_dyn,e_static,run_id`.
pub fn write_archive_csv(
    path: &Path,
    archive: &ParetoArchive,
    provenance: &Provenance,
) -> Result<(), CliError> {
    let mut file = std::fs::File::create(path).map_err(|e| CliError::data(e.to_string()))?;
    for (k, v) in provenance.comments() {
        writeln!(file, "# {k}={v}").map_err(|e| CliError::data(e.to_string()))?;
    }
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["genome_bits", "xi", "e_dyn", "e_static", "run_id"])
        .map_err(|e| CliError::data(e.to_string()))?;
    for e in archive.entries() {
        w.write_record([
            e.genome.to_string(),
            e.objectives.xi.to_string(),
            e.objectives.e_dyn.to_string(),
            e.objectives.e_static.to_string(),
            e.run_id.to_string(),
        ])
        .map_err(|e| CliError::data(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::data(e.to_string()))?;
    Ok(())
}

/// Run manifest with budget accounting and wall time.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub algorithm: String,
    pub runs: usize,
    pub budget: usize,
    pub population: usize,
    pub pool_size: usize,
    pub archive_size: usize,
    pub unique_evaluations: Vec<usize>,
    pub generations: Vec<usize>,
    pub wall_time_s: f64,
}

impl Manifest {
    pub fn new(
        provenance: &Provenance,
        config: &greybox_id::moea::MoeaConfig,
        pool_size: usize,
        results: &[RunResult],
        archive_len: usize,
        wall_time_s: f64,
    ) -> Self {
        Self {
            tool: "greybox",
            version: env!("CARGO_PKG_VERSION"),
            config_hash: provenance.config_hash.clone(),
            seed: provenance.seed,
            algorithm: config.algorithm.to_string(),
            runs: config.runs,
            budget: config.budget,
            population: config.population,
            pool_size,
            archive_size: archive_len,
            unique_evaluations: results.iter().map(|r| r.unique_evaluations).collect(),
            generations: results.iter().map(|r| r.generations).collect(),
            wall_time_s,
        }
    }
}

/// One selected model with its derived steady-state polynomial.
#[derive(Debug, Serialize)]
pub struct SelectedModel {
    pub config_hash: String,
    pub seed: u64,
    pub method: String,
    pub genome: String,
    pub xi: usize,
    pub e_dyn: f64,
    pub e_static: f64,
    pub score: f64,
    pub terms: Vec<TermSpec>,
    pub coefficients: Vec<f64>,
    pub static_polynomial: Option<StaticPolynomial>,
    pub structure: greybox_id::estimation::StructureDocument,
}

/// Ranking CSV: `rank,genome_bits,xi,e_dyn,e_static,score`.
pub fn write_ranking_csv(
    path: &Path,
    archive: &ParetoArchive,
    ranking: &Ranking,
    provenance: &Provenance,
) -> Result<(), CliError> {
    let mut file = std::fs::File::create(path).map_err(|e| CliError::data(e.to_string()))?;
    for (k, v) in provenance.comments() {
        writeln!(file, "# {k}={v}").map_err(|e| CliError::data(e.to_string()))?;
    }
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["rank", "genome_bits", "xi", "e_dyn", "e_static", "score"])
        .map_err(|e| CliError::data(e.to_string()))?;
    for (rank, &idx) in ranking.order.iter().enumerate() {
        let e = &archive.entries()[idx];
        w.write_record([
            (rank + 1).to_string(),
            e.genome.to_string(),
            e.objectives.xi.to_string(),
            e.objectives.e_dyn.to_string(),
            e.objectives.e_static.to_string(),
            ranking.scores[idx].to_string(),
        ])
        .map_err(|e| CliError::data(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::data(e.to_string()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::data(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::data(e.to_string()))?;
    Ok(())
}

/// Resolve the run directory: an explicit `--out` or `runs/<stamp>-<hash>`.
pub fn run_directory(out: Option<PathBuf>, config_hash: &str) -> Result<PathBuf, CliError> {
    let dir = match out {
        Some(dir) => dir,
        None => {
            let stamp = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .expect("clock after epoch")
                .as_secs();
            PathBuf::from("runs").join(format!("{stamp}-{config_hash}"))
        }
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::data(e.to_string()))?;
    Ok(dir)
}
