//! SPEA-II: strength/raw fitness with k-th nearest neighbor density,
//! environmental selection with archive truncation, binary tournament mating.

use std::collections::HashSet;
use std::sync::Arc;

use rand::Rng;

use crate::error::Result;
use crate::estimation::{DatasetBundle, ObjectiveVector};
use crate::narx::TermPool;

use super::{
    dominates_slice, reproduce, run_rng, EvalState, FrontEntry, Genome, MoeaConfig, RunResult,
};

struct Member {
    genome: Genome,
    objectives: ObjectiveVector,
}

/// Fitness F = R + D: raw fitness R (sum of strengths of dominators) plus
/// density D from the k-th nearest neighbor distance.
fn fitness(members: &[Member]) -> Vec<f64> {
    let n = members.len();
    let raw: Vec<[f64; 3]> = members.iter().map(|m| m.objectives.as_array()).collect();
    let mut strength = vec![0usize; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && dominates_slice(&raw[i], &raw[j]) {
                strength[i] += 1;
            }
        }
    }
    let mut fitness = vec![0.0f64; n];
    for i in 0..n {
        let r: usize = (0..n)
            .filter(|&j| j != i && dominates_slice(&raw[j], &raw[i]))
            .map(|j| strength[j])
            .sum();
        fitness[i] = r as f64;
    }
    let k = ((n as f64).sqrt().floor() as usize).clamp(1, n.saturating_sub(1).max(1));
    for i in 0..n {
        let mut dists: Vec<f64> = (0..n)
            .filter(|&j| j != i)
            .map(|j| euclidean(&raw[i], &raw[j]))
            .collect();
        dists.sort_by(f64::total_cmp);
        let sigma_k = dists.get(k - 1).copied().unwrap_or(0.0);
        fitness[i] += 1.0 / (sigma_k + 2.0);
    }
    fitness
}

fn euclidean(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Iteratively drop the archive member with the lexicographically smallest
/// sorted distance vector to the rest, until `capacity` remains.
fn truncate(members: &mut Vec<Member>, capacity: usize) {
    while members.len() > capacity {
        let raw: Vec<[f64; 3]> = members.iter().map(|m| m.objectives.as_array()).collect();
        let n = members.len();
        let dist_lists: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut d: Vec<f64> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| euclidean(&raw[i], &raw[j]))
                    .collect();
                d.sort_by(f64::total_cmp);
                d
            })
            .collect();
        let mut victim = 0usize;
        for i in 1..n {
            if lex_less(&dist_lists[i], &dist_lists[victim]) {
                victim = i;
            }
        }
        members.remove(victim);
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// One seeded SPEA-II run; returns the non-dominated members of the final
/// archive (feasible entries, duplicates collapsed).
pub fn run_spea2(
    bundle: &DatasetBundle,
    pool: &Arc<TermPool>,
    config: &MoeaConfig,
    run_id: usize,
) -> Result<RunResult> {
    let mut rng = run_rng(config.seed, run_id);
    let mut state = EvalState::new(bundle, pool);
    let n = pool.len();
    let ps = config.population;

    let mut population: Vec<Genome> = (0..ps).map(|_| Genome::random(n, &mut rng)).collect();
    let mut archive: Vec<Member> = Vec::new();
    let mut hv_trace = Vec::new();
    let mut generations = 0usize;
    let mut stall = 0usize;
    let max_generations = config.max_generations();

    loop {
        state.begin_generation();
        let mut union: Vec<Member> = archive;
        for genome in &population {
            let objectives = state.evaluate(genome);
            union.push(Member { genome: genome.clone(), objectives });
        }
        let fit = fitness(&union);

        // environmental selection: non-dominated members first
        let mut next: Vec<Member> = Vec::new();
        let mut rest: Vec<(usize, Member)> = Vec::new();
        for (i, m) in union.into_iter().enumerate() {
            if fit[i] < 1.0 {
                next.push(m);
            } else {
                rest.push((i, m));
            }
        }
        if next.len() > config.archive_size {
            truncate(&mut next, config.archive_size);
        } else if next.len() < config.archive_size {
            rest.sort_by(|(i, _), (j, _)| fit[*i].total_cmp(&fit[*j]));
            for (_, m) in rest {
                if next.len() == config.archive_size {
                    break;
                }
                next.push(m);
            }
        }
        archive = next;

        stall = if state.had_progress() { 0 } else { stall + 1 };
        hv_trace.push(state.best_hypervolume());

        let done = state.unique() >= config.budget
            || stall >= config.stall_generations
            || generations >= max_generations
            || state.space_exhausted();
        if done {
            break;
        }

        // binary tournament mating on the archive's recomputed pseudo-fitness
        let archive_fitness = fitness(&archive);
        let genomes: Vec<Genome> = archive.iter().map(|m| m.genome.clone()).collect();
        population = reproduce(
            &genomes,
            config,
            |r| binary_tournament(&archive_fitness, r),
            &mut rng,
        );
        generations += 1;
    }

    let front = extract_front(&archive, &state);
    Ok(RunResult {
        run_id,
        front,
        unique_evaluations: state.unique(),
        generations,
        hv_trace,
    })
}

/// Binary tournament on the archive's pseudo-fitness (lower wins, exact ties
/// broken uniformly at random).
fn binary_tournament<R: Rng>(fitness: &[f64], rng: &mut R) -> usize {
    let a = rng.random_range(0..fitness.len());
    let b = rng.random_range(0..fitness.len());
    if fitness[a] != fitness[b] {
        if fitness[a] < fitness[b] {
            a
        } else {
            b
        }
    } else if rng.random::<f64>() < 0.5 {
        a
    } else {
        b
    }
}

fn extract_front(archive: &[Member], state: &EvalState<'_>) -> Vec<FrontEntry> {
    let raw: Vec<[f64; 3]> = archive.iter().map(|m| m.objectives.as_array()).collect();
    let mut seen = HashSet::new();
    let mut front = Vec::new();
    for (i, m) in archive.iter().enumerate() {
        if m.objectives.is_penalized() {
            continue;
        }
        let dominated = raw
            .iter()
            .enumerate()
            .any(|(j, o)| j != i && dominates_slice(o, &raw[i]));
        if dominated || !seen.insert(m.genome.clone()) {
            continue;
        }
        front.push(FrontEntry {
            genome: m.genome.clone(),
            objectives: m.objectives,
            theta: state.theta(&m.genome).unwrap_or_default(),
        });
    }
    front
}
