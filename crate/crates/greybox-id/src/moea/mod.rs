//! Binary-genome multi-objective evolutionary search over term subsets.
//!
//! Two dominance-based algorithms are provided (NSGA-II and SPEA-II), sharing
//! the genome encoding, the reproduction operators and the archive machinery.
//! Independent runs accumulate their fronts into a [`ParetoArchive`] which the
//! decision procedures rank a posteriori.

mod nsga2;
mod spea2;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{evaluate, DatasetBundle, ModelStructure, ObjectiveVector, PENALTY};
use crate::narx::TermPool;

pub use nsga2::{crowding_distance, fast_non_dominated_sort, run_nsga2};
pub use spea2::run_spea2;

/// Fixed-length binary genome; bit `m` set means term `x_m` is selected.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Genome {
    bits: Vec<bool>,
}

impl Genome {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![false; n] }
    }

    /// Each bit i.i.d. Bernoulli(1/2).
    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        Self { bits: (0..n).map(|_| rng.random::<f64>() < 0.5).collect() }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl FromStr for Genome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits: Result<Vec<bool>> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("invalid genome bit '{other}'"))),
            })
            .collect();
        Ok(Self { bits: bits? })
    }
}

/// Which dominance-based algorithm drives a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Nsga2,
    Spea2,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Nsga2 => write!(f, "nsga2"),
            Algorithm::Spea2 => write!(f, "spea2"),
        }
    }
}

/// Search control parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MoeaConfig {
    pub algorithm: Algorithm,
    /// Population size (even).
    pub population: usize,
    /// Archive capacity for SPEA-II environmental selection.
    pub archive_size: usize,
    /// Crossover probability `p_c`.
    pub crossover_rate: f64,
    /// Per-bit mutation probability `p_m`.
    pub mutation_rate: f64,
    /// Function-evaluation budget per run, counted over unique genomes
    /// (memoized repeats are free).
    pub budget: usize,
    /// Number of independent runs.
    pub runs: usize,
    pub seed: u64,
    /// Stop a run after this many consecutive generations without a new
    /// unique evaluation (the reachable space has saturated).
    #[serde(default = "default_stall_generations")]
    pub stall_generations: usize,
}

fn default_stall_generations() -> usize {
    100
}

impl MoeaConfig {
    /// NSGA-II with the published control parameters.
    pub fn nsga2(seed: u64) -> Self {
        Self {
            algorithm: Algorithm::Nsga2,
            population: 50,
            archive_size: 50,
            crossover_rate: 0.9,
            mutation_rate: 0.006,
            budget: 25_000,
            runs: 100,
            seed,
            stall_generations: default_stall_generations(),
        }
    }

    /// SPEA-II with the published control parameters.
    pub fn spea2(seed: u64) -> Self {
        Self {
            algorithm: Algorithm::Spea2,
            crossover_rate: 0.7,
            mutation_rate: 0.008,
            ..Self::nsga2(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 2 || !self.population.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "population must be even and >= 2, got {}",
                self.population
            )));
        }
        if self.archive_size == 0 {
            return Err(Error::InvalidConfig("archive size must be >= 1".into()));
        }
        for (name, p) in [("p_c", self.crossover_rate), ("p_m", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("{name} = {p} outside [0, 1]")));
            }
        }
        if self.budget < self.population {
            return Err(Error::InvalidConfig(format!(
                "budget {} below population size {}",
                self.budget, self.population
            )));
        }
        if self.runs == 0 || self.stall_generations == 0 {
            return Err(Error::InvalidConfig(
                "runs and stall_generations must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Hard generation cap; a safety net on top of the budget and stall
    /// guards.
    pub(crate) fn max_generations(&self) -> usize {
        4 * self.budget.div_ceil(self.population).max(1)
    }
}

/// Pareto dominance for minimization: `a` dominates `b` iff `a <= b`
/// componentwise and `a < b` somewhere.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    dominates_slice(&a.as_array(), &b.as_array())
}

/// Componentwise dominance over raw objective slices (minimization).
pub fn dominates_slice(a: &[f64], b: &[f64]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut strict = false;
    for (x, y) in a.iter().zip(b.iter()) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

/// Weak dominance: `a <= b` in every component (equality included).
pub fn weakly_dominates_slice(a: &[f64], b: &[f64]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).all(|(x, y)| x <= y)
}

/// Decode a genome into the structure selecting exactly the set bits.
pub fn decode(genome: &Genome, pool: &Arc<TermPool>) -> Result<ModelStructure> {
    if genome.len() != pool.len() {
        return Err(Error::GenomeLengthMismatch { genome: genome.len(), pool: pool.len() });
    }
    let selected: Vec<usize> = genome
        .bits()
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect();
    ModelStructure::new(Arc::clone(pool), selected)
}

/// Reproduction: pairwise selection, parameterized uniform crossover
/// (gene-swap probability 1/2, applied with probability `p_c`), then per-bit
/// flip mutation with probability `p_m` over the whole offspring population.
///
/// `select` returns the index of one parent per call; random draws follow the
/// loop order selection -> crossover (pair by pair) -> mutation (offspring by
/// offspring) so a fixed seed reproduces offspring bit-for-bit.
pub fn reproduce<R: Rng>(
    parents: &[Genome],
    config: &MoeaConfig,
    mut select: impl FnMut(&mut R) -> usize,
    rng: &mut R,
) -> Vec<Genome> {
    assert!(!parents.is_empty());
    let n = parents[0].len();
    let ps = config.population;
    let mut offspring = Vec::with_capacity(ps);
    for _ in 0..ps / 2 {
        let p = select(rng);
        let q = select(rng);
        let mut a = parents[p].clone();
        let mut b = parents[q].clone();
        if rng.random::<f64>() < config.crossover_rate {
            for j in 0..n {
                if rng.random::<f64>() < 0.5 {
                    std::mem::swap(&mut a.bits[j], &mut b.bits[j]);
                }
            }
        }
        offspring.push(a);
        offspring.push(b);
    }
    for child in offspring.iter_mut() {
        for j in 0..n {
            if rng.random::<f64>() < config.mutation_rate {
                child.bits[j] = !child.bits[j];
            }
        }
    }
    offspring
}

/// One non-dominated structure found by a run.
#[derive(Debug, Clone)]
pub struct FrontEntry {
    pub genome: Genome,
    pub objectives: ObjectiveVector,
    /// Estimated coefficients aligned with the genome's set bits.
    pub theta: Vec<f64>,
}

/// Outcome of one independent run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub run_id: usize,
    pub front: Vec<FrontEntry>,
    pub unique_evaluations: usize,
    pub generations: usize,
    /// Hypervolume of the best-so-far feasible archive after each generation,
    /// w.r.t. the reference point `(n, PENALTY, PENALTY)`.
    pub hv_trace: Vec<f64>,
}

/// Memoized objective evaluation shared by both algorithms within one run.
///
/// The memo is keyed by the genome bitstring; repeat genomes cost nothing and
/// do not consume budget.
pub(crate) struct EvalState<'a> {
    bundle: &'a DatasetBundle,
    pool: &'a Arc<TermPool>,
    memo: HashMap<Genome, (ObjectiveVector, Option<Vec<f64>>)>,
    unique: usize,
    new_this_generation: bool,
    best: Vec<(Genome, ObjectiveVector)>,
    hv_ref: [f64; 3],
}

impl<'a> EvalState<'a> {
    pub(crate) fn new(bundle: &'a DatasetBundle, pool: &'a Arc<TermPool>) -> Self {
        Self {
            bundle,
            pool,
            memo: HashMap::new(),
            unique: 0,
            new_this_generation: false,
            best: Vec::new(),
            hv_ref: [pool.len() as f64, PENALTY, PENALTY],
        }
    }

    pub(crate) fn evaluate(&mut self, genome: &Genome) -> ObjectiveVector {
        if let Some((obj, _)) = self.memo.get(genome) {
            return *obj;
        }
        let structure = decode(genome, self.pool).expect("genome matches pool");
        let (estimated, obj) = evaluate(&structure, self.bundle);
        self.unique += 1;
        self.new_this_generation = true;
        if !obj.is_penalized() {
            self.offer_best(genome.clone(), obj);
        }
        self.memo
            .insert(genome.clone(), (obj, estimated.coefficients().map(<[f64]>::to_vec)));
        obj
    }

    fn offer_best(&mut self, genome: Genome, obj: ObjectiveVector) {
        if self.best.iter().any(|(_, o)| dominates(o, &obj)) {
            return;
        }
        self.best.retain(|(_, o)| !dominates(&obj, o));
        self.best.push((genome, obj));
    }

    pub(crate) fn theta(&self, genome: &Genome) -> Option<Vec<f64>> {
        self.memo.get(genome).and_then(|(_, t)| t.clone())
    }

    pub(crate) fn unique(&self) -> usize {
        self.unique
    }

    /// True when the whole genome space has been evaluated (small pools).
    pub(crate) fn space_exhausted(&self) -> bool {
        let n = self.pool.len();
        n < 64 && self.unique as u128 == 1u128 << n
    }

    /// Reset the per-generation progress flag (stall bookkeeping).
    pub(crate) fn begin_generation(&mut self) {
        self.new_this_generation = false;
    }

    pub(crate) fn had_progress(&self) -> bool {
        self.new_this_generation
    }

    pub(crate) fn best_hypervolume(&self) -> f64 {
        let pts: Vec<[f64; 3]> = self.best.iter().map(|(_, o)| o.as_array()).collect();
        hypervolume(&pts, self.hv_ref)
    }
}

/// Run one seeded search with the configured algorithm.
pub fn run(
    bundle: &DatasetBundle,
    pool: &Arc<TermPool>,
    config: &MoeaConfig,
    run_id: usize,
) -> Result<RunResult> {
    config.validate()?;
    match config.algorithm {
        Algorithm::Nsga2 => run_nsga2(bundle, pool, config, run_id),
        Algorithm::Spea2 => run_spea2(bundle, pool, config, run_id),
    }
}

/// Execute `config.runs` independent runs in parallel. Each run derives its
/// RNG stream from `(seed, run_id)`, so results do not depend on scheduling.
pub fn run_all(
    bundle: &DatasetBundle,
    pool: &Arc<TermPool>,
    config: &MoeaConfig,
) -> Result<Vec<RunResult>> {
    config.validate()?;
    (0..config.runs)
        .into_par_iter()
        .map(|run_id| run(bundle, pool, config, run_id))
        .collect()
}

pub(crate) fn run_rng(seed: u64, run_id: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run_id as u64);
    rng
}

/// One accumulated non-dominated structure with its provenance.
#[derive(Debug, Clone)]
pub struct ArchiveEntry {
    pub genome: Genome,
    pub objectives: ObjectiveVector,
    pub structure: ModelStructure,
    pub run_id: usize,
}

/// Non-dominated `(structure, objectives)` pairs accumulated across runs.
#[derive(Debug, Clone, Default)]
pub struct ParetoArchive {
    entries: Vec<ArchiveEntry>,
}

impl ParetoArchive {
    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn objectives(&self) -> Vec<ObjectiveVector> {
        self.entries.iter().map(|e| e.objectives).collect()
    }

    /// Build an archive from explicit entries: duplicates removed by genome
    /// (first occurrence wins), dominated entries dropped, deterministic
    /// ordering by `(xi, e_dyn, e_static, genome)`.
    pub fn from_entries(entries: Vec<ArchiveEntry>) -> Self {
        let mut seen: HashMap<Genome, ()> = HashMap::new();
        let mut unique: Vec<ArchiveEntry> = Vec::new();
        for e in entries {
            if e.objectives.is_penalized() {
                continue;
            }
            if seen.insert(e.genome.clone(), ()).is_none() {
                unique.push(e);
            }
        }
        let survivors: Vec<ArchiveEntry> = unique
            .iter()
            .enumerate()
            .filter(|(i, e)| {
                !unique
                    .iter()
                    .enumerate()
                    .any(|(j, other)| j != *i && dominates(&other.objectives, &e.objectives))
            })
            .map(|(_, e)| e.clone())
            .collect();
        let mut archive = Self { entries: survivors };
        archive.sort();
        archive
    }

    fn sort(&mut self) {
        self.entries.sort_by(|a, b| {
            a.objectives
                .xi
                .cmp(&b.objectives.xi)
                .then(a.objectives.e_dyn.total_cmp(&b.objectives.e_dyn))
                .then(a.objectives.e_static.total_cmp(&b.objectives.e_static))
                .then(a.genome.cmp(&b.genome))
        });
    }
}

/// Union per-run fronts into the final archive `Gamma*`: duplicates removed by
/// genome, then dominance-filtered.
pub fn accumulate(runs: &[RunResult], pool: &Arc<TermPool>) -> Result<ParetoArchive> {
    let mut entries = Vec::new();
    for run in runs {
        for fe in &run.front {
            let structure =
                decode(&fe.genome, pool)?.with_coefficients(fe.theta.clone());
            entries.push(ArchiveEntry {
                genome: fe.genome.clone(),
                objectives: fe.objectives,
                structure,
                run_id: run.run_id,
            });
        }
    }
    Ok(ParetoArchive::from_entries(entries))
}

/// Set coverage `C(A, B)`: the fraction of `B`'s entries weakly dominated by
/// at least one entry of `A`. Equal points count as covered, so
/// `C(A, A) = 1`. An empty `B` is covered vacuously.
pub fn set_coverage(a: &ParetoArchive, b: &ParetoArchive) -> f64 {
    if b.is_empty() {
        return 1.0;
    }
    let covered = b
        .entries
        .iter()
        .filter(|eb| {
            a.entries.iter().any(|ea| {
                weakly_dominates_slice(&ea.objectives.as_array(), &eb.objectives.as_array())
            })
        })
        .count();
    covered as f64 / b.len() as f64
}

/// Hypervolume (minimization) of a point set w.r.t. a reference point, for
/// up to three objectives. Points outside the reference box contribute their
/// clipped volume.
pub fn hypervolume(points: &[[f64; 3]], reference: [f64; 3]) -> f64 {
    let pts: Vec<[f64; 3]> = points
        .iter()
        .filter(|p| p.iter().zip(reference.iter()).all(|(a, r)| a < r))
        .copied()
        .collect();
    if pts.is_empty() {
        return 0.0;
    }
    // sweep over distinct values of the first objective
    let mut xs: Vec<f64> = pts.iter().map(|p| p[0]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut volume = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let next = xs.get(i + 1).copied().unwrap_or(reference[0]);
        let width = next - x;
        if width <= 0.0 {
            continue;
        }
        let slab: Vec<[f64; 2]> = pts
            .iter()
            .filter(|p| p[0] <= x)
            .map(|p| [p[1], p[2]])
            .collect();
        volume += width * hv2d(&slab, [reference[1], reference[2]]);
    }
    volume
}

fn hv2d(points: &[[f64; 2]], reference: [f64; 2]) -> f64 {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut ceiling = reference[1];
    for p in pts {
        if p[1] < ceiling {
            area += (reference[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    area
}
