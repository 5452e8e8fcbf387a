//! NSGA-II: fast non-dominated sorting, crowding distance, crowded tournament
//! selection and (mu + lambda) elitist survival.

use std::collections::HashSet;
use std::sync::Arc;

use rand::Rng;

use crate::error::Result;
use crate::estimation::{DatasetBundle, ObjectiveVector};
use crate::narx::TermPool;

use super::{
    dominates_slice, reproduce, run_rng, EvalState, FrontEntry, Genome, MoeaConfig, RunResult,
};

/// Fast non-dominated sort (Deb et al.). Returns the fronts as index lists
/// plus the rank of every point (rank 0 = non-dominated).
pub fn fast_non_dominated_sort(objectives: &[[f64; 3]]) -> (Vec<Vec<usize>>, Vec<usize>) {
    let n = objectives.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    let mut ranks = vec![0usize; n];
    let mut first_front = Vec::new();
    for p in 0..n {
        for q in 0..n {
            if p == q {
                continue;
            }
            if dominates_slice(&objectives[p], &objectives[q]) {
                dominated_by[p].push(q);
            } else if dominates_slice(&objectives[q], &objectives[p]) {
                domination_count[p] += 1;
            }
        }
        if domination_count[p] == 0 {
            first_front.push(p);
        }
    }
    let mut fronts = vec![first_front];
    let mut current = 0;
    while !fronts[current].is_empty() {
        let mut next = Vec::new();
        for &p in &fronts[current] {
            for &q in &dominated_by[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    ranks[q] = current + 1;
                    next.push(q);
                }
            }
        }
        current += 1;
        fronts.push(next);
    }
    fronts.pop();
    (fronts, ranks)
}

/// Crowding distance of every member of one front (boundary points get
/// infinity). Returned values align with `front`'s order.
#[allow(clippy::needless_range_loop)]
pub fn crowding_distance(objectives: &[[f64; 3]], front: &[usize]) -> Vec<f64> {
    let len = front.len();
    let mut distance = vec![0.0f64; len];
    if len <= 2 {
        return vec![f64::INFINITY; len];
    }
    for obj in 0..3 {
        let mut order: Vec<usize> = (0..len).collect();
        order.sort_by(|&a, &b| objectives[front[a]][obj].total_cmp(&objectives[front[b]][obj]));
        let min = objectives[front[order[0]]][obj];
        let max = objectives[front[order[len - 1]]][obj];
        distance[order[0]] = f64::INFINITY;
        distance[order[len - 1]] = f64::INFINITY;
        let range = max - min;
        if range <= 0.0 {
            continue;
        }
        for w in 1..len - 1 {
            let lo = objectives[front[order[w - 1]]][obj];
            let hi = objectives[front[order[w + 1]]][obj];
            distance[order[w]] += (hi - lo) / range;
        }
    }
    distance
}

struct RankedPopulation {
    genomes: Vec<Genome>,
    objectives: Vec<ObjectiveVector>,
    ranks: Vec<usize>,
    crowding: Vec<f64>,
}

fn rank_population(genomes: Vec<Genome>, objectives: Vec<ObjectiveVector>) -> RankedPopulation {
    let raw: Vec<[f64; 3]> = objectives.iter().map(ObjectiveVector::as_array).collect();
    let (fronts, ranks) = fast_non_dominated_sort(&raw);
    let mut crowding = vec![0.0; genomes.len()];
    for front in &fronts {
        for (i, d) in crowding_distance(&raw, front).into_iter().enumerate() {
            crowding[front[i]] = d;
        }
    }
    RankedPopulation { genomes, objectives, ranks, crowding }
}

/// Crowded tournament: lower rank wins, then larger crowding distance; exact
/// ties are broken uniformly at random.
fn crowded_tournament<R: Rng>(pop: &RankedPopulation, rng: &mut R) -> usize {
    let a = rng.random_range(0..pop.genomes.len());
    let b = rng.random_range(0..pop.genomes.len());
    if pop.ranks[a] != pop.ranks[b] {
        return if pop.ranks[a] < pop.ranks[b] { a } else { b };
    }
    if pop.crowding[a] != pop.crowding[b] {
        return if pop.crowding[a] > pop.crowding[b] { a } else { b };
    }
    if rng.random::<f64>() < 0.5 {
        a
    } else {
        b
    }
}

/// One seeded NSGA-II run; returns the rank-0 set of the final population
/// (feasible entries, duplicates collapsed).
pub fn run_nsga2(
    bundle: &DatasetBundle,
    pool: &Arc<TermPool>,
    config: &MoeaConfig,
    run_id: usize,
) -> Result<RunResult> {
    let mut rng = run_rng(config.seed, run_id);
    let mut state = EvalState::new(bundle, pool);
    let n = pool.len();
    let ps = config.population;

    let genomes: Vec<Genome> = (0..ps).map(|_| Genome::random(n, &mut rng)).collect();
    let objectives: Vec<ObjectiveVector> =
        genomes.iter().map(|g| state.evaluate(g)).collect();
    let mut pop = rank_population(genomes, objectives);

    let mut hv_trace = vec![state.best_hypervolume()];
    let mut generations = 0usize;
    let mut stall = 0usize;
    let max_generations = config.max_generations();

    while state.unique() < config.budget
        && stall < config.stall_generations
        && generations < max_generations
        && !state.space_exhausted()
    {
        state.begin_generation();
        let offspring = reproduce(
            &pop.genomes,
            config,
            |r| crowded_tournament(&pop, r),
            &mut rng,
        );
        let mut genomes = pop.genomes;
        let mut objectives = pop.objectives;
        for child in offspring {
            objectives.push(state.evaluate(&child));
            genomes.push(child);
        }

        // (mu + lambda) survival: whole fronts first, the split front by
        // descending crowding distance
        let raw: Vec<[f64; 3]> = objectives.iter().map(ObjectiveVector::as_array).collect();
        let (fronts, _) = fast_non_dominated_sort(&raw);
        let mut keep: Vec<usize> = Vec::with_capacity(ps);
        for front in &fronts {
            if keep.len() + front.len() <= ps {
                keep.extend_from_slice(front);
            } else {
                let dist = crowding_distance(&raw, front);
                let mut order: Vec<usize> = (0..front.len()).collect();
                order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]));
                keep.extend(order.into_iter().take(ps - keep.len()).map(|i| front[i]));
            }
            if keep.len() == ps {
                break;
            }
        }
        let next_genomes: Vec<Genome> = keep.iter().map(|&i| genomes[i].clone()).collect();
        let next_objectives: Vec<ObjectiveVector> = keep.iter().map(|&i| objectives[i]).collect();
        pop = rank_population(next_genomes, next_objectives);

        generations += 1;
        stall = if state.had_progress() { 0 } else { stall + 1 };
        hv_trace.push(state.best_hypervolume());
    }

    let front = extract_front(&pop, &state);
    Ok(RunResult {
        run_id,
        front,
        unique_evaluations: state.unique(),
        generations,
        hv_trace,
    })
}

fn extract_front(pop: &RankedPopulation, state: &EvalState<'_>) -> Vec<FrontEntry> {
    let mut seen = HashSet::new();
    let mut front = Vec::new();
    for i in 0..pop.genomes.len() {
        if pop.ranks[i] != 0 || pop.objectives[i].is_penalized() {
            continue;
        }
        if !seen.insert(pop.genomes[i].clone()) {
            continue;
        }
        front.push(FrontEntry {
            genome: pop.genomes[i].clone(),
            objectives: pop.objectives[i],
            theta: state.theta(&pop.genomes[i]).unwrap_or_default(),
        });
    }
    front
}
