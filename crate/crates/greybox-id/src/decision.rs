//! A posteriori selection from the final archive: Minimum Manhattan Distance
//! for an unbiased decision maker, and Multi-criteria Tournament Decision
//! with multiplicative-preference priority weights for a biased one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moea::ParetoArchive;

/// Objective rankings (1 = most preferred) plus preference intensity on the
/// 1..9 scale. Rankings are ordered `(O_xi, O_E, O_Ebar)` for the three
/// structure-selection objectives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceSpec {
    pub rankings: Vec<usize>,
    pub intensity: f64,
}

impl PreferenceSpec {
    pub fn new(rankings: Vec<usize>, intensity: f64) -> Result<Self> {
        let spec = Self { rankings, intensity };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.rankings.len();
        if n < 2 {
            return Err(Error::InvalidConfig(
                "preference needs at least two objectives".into(),
            ));
        }
        let mut sorted = self.rankings.clone();
        sorted.sort_unstable();
        if sorted != (1..=n).collect::<Vec<_>>() {
            return Err(Error::InvalidConfig(format!(
                "rankings {:?} are not a permutation of 1..={n}",
                self.rankings
            )));
        }
        if !(1.0..=9.0).contains(&self.intensity) {
            return Err(Error::InvalidConfig(format!(
                "intensity {} outside [1, 9]",
                self.intensity
            )));
        }
        Ok(())
    }
}

/// Normalized priority weights (sum 1, all positive for finite intensity).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub weights: Vec<f64>,
}

/// Multiplicative preference relation between objectives `i` and `j`:
/// `tau_{i,j} = I^((O_j - O_i) / (n_obj - 1))`.
pub fn preference_relations(pref: &PreferenceSpec) -> Vec<Vec<f64>> {
    let n = pref.rankings.len();
    let denom = (n - 1) as f64;
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let delta = (pref.rankings[j] as f64 - pref.rankings[i] as f64) / denom;
                    pref.intensity.powf(delta)
                })
                .collect()
        })
        .collect()
}

/// Priority weights from the preference relations:
/// `w_i = (prod_j tau_{i,j})^(1/n_obj)`, normalized to sum 1.
pub fn priority_weights(pref: &PreferenceSpec) -> Result<WeightVector> {
    pref.validate()?;
    let tau = preference_relations(pref);
    let n = pref.rankings.len();
    let mut weights: Vec<f64> = tau
        .iter()
        .map(|row| row.iter().product::<f64>().powf(1.0 / n as f64))
        .collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(WeightVector { weights })
}

/// Ranking produced by a decision procedure: `order[0]` is the selected
/// entry's index into the input set; `scores` align with the input order.
#[derive(Debug, Clone)]
pub struct Ranking {
    pub order: Vec<usize>,
    pub scores: Vec<f64>,
}

impl Ranking {
    pub fn selected(&self) -> usize {
        self.order[0]
    }
}

/// Minimum Manhattan Distance over raw objective rows: distances to the ideal
/// point in the normalized objective space, ranked ascending.
///
/// A degenerate objective (max = min across the set) contributes zero to
/// every distance. Ties keep the input order, so callers control the
/// tie-break by pre-sorting.
pub fn mmd_rank(objectives: &[Vec<f64>]) -> Result<Ranking> {
    if objectives.is_empty() {
        return Err(Error::ArchiveTooSmall { have: 0, need: 1 });
    }
    let n_obj = objectives[0].len();
    let mins: Vec<f64> = (0..n_obj)
        .map(|p| objectives.iter().map(|o| o[p]).fold(f64::INFINITY, f64::min))
        .collect();
    let maxs: Vec<f64> = (0..n_obj)
        .map(|p| {
            objectives
                .iter()
                .map(|o| o[p])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let scores: Vec<f64> = objectives
        .iter()
        .map(|o| {
            (0..n_obj)
                .map(|p| {
                    let range = maxs[p] - mins[p];
                    if range > 0.0 {
                        ((o[p] - mins[p]) / range).abs()
                    } else {
                        0.0
                    }
                })
                .sum()
        })
        .collect();
    let mut order: Vec<usize> = (0..objectives.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    Ok(Ranking { order, scores })
}

/// Multi-criteria tournament ranking: per objective, `T_p` is the fraction of
/// other entries strictly worse than entry `i`; the global rank aggregates
/// `(prod_p T_p^{w_p})^(1/n_obj)` and is sorted descending.
pub fn mtd_rank(objectives: &[Vec<f64>], weights: &WeightVector) -> Result<Ranking> {
    let count = objectives.len();
    if count < 2 {
        return Err(Error::ArchiveTooSmall { have: count, need: 2 });
    }
    let n_obj = objectives[0].len();
    assert_eq!(weights.weights.len(), n_obj, "weights must match objectives");
    let scores: Vec<f64> = (0..count)
        .map(|i| {
            let mut product = 1.0;
            for p in 0..n_obj {
                let t = objectives
                    .iter()
                    .filter(|o| o[p] - objectives[i][p] > 0.0)
                    .count();
                let t_norm = t as f64 / (count - 1) as f64;
                product *= t_norm.powf(weights.weights[p]);
            }
            product.powf(1.0 / n_obj as f64)
        })
        .collect();
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    Ok(Ranking { order, scores })
}

/// Objective rows of an archive as the decision maker sees them: term count
/// unchanged, the two squared-error objectives on their RMS (volt) scale.
///
/// Dominance and the tournament counts are invariant under this monotone
/// rescaling, so the archive itself is unaffected; only the Manhattan-distance
/// normalization is sensitive to scale, and the published objective tables
/// report the dynamic error on the RMS-proportional percent scale.
pub fn dm_objectives(archive: &ParetoArchive) -> Vec<Vec<f64>> {
    archive
        .entries()
        .iter()
        .map(|e| {
            vec![
                e.objectives.xi as f64,
                e.objectives.e_dyn.sqrt(),
                e.objectives.e_static.sqrt(),
            ]
        })
        .collect()
}

/// Rank an archive by Manhattan distance to the ideal point and return the
/// selected entry's index plus the full ascending ranking.
///
/// Archive entries are already deterministically ordered, which fixes the
/// tie-break (smaller xi, then smaller dynamic error, then genome).
pub fn mmd_select(archive: &ParetoArchive) -> Result<Ranking> {
    mmd_rank(&dm_objectives(archive))
}

/// Rank an archive by the weighted tournament score and return the selected
/// entry's index plus the full descending ranking.
pub fn mtd_select(archive: &ParetoArchive, weights: &WeightVector) -> Result<Ranking> {
    mtd_rank(&dm_objectives(archive), weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pref(rankings: &[usize], intensity: f64) -> PreferenceSpec {
        PreferenceSpec::new(rankings.to_vec(), intensity).unwrap()
    }

    #[test]
    fn appendix_weight_example() {
        let w = priority_weights(&pref(&[3, 1, 2], 5.0)).unwrap().weights;
        let expected = [0.1214, 0.6071, 0.2715];
        for (a, b) in w.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn published_weight_table() {
        let cases: [(&[usize], [f64; 3]); 3] = [
            (&[3, 1, 2], [0.1214, 0.6071, 0.2715]),
            (&[1, 3, 2], [0.6071, 0.1214, 0.2715]),
            (&[1, 2, 3], [0.6071, 0.2715, 0.1214]),
        ];
        for (rankings, expected) in cases {
            let w = priority_weights(&pref(rankings, 5.0)).unwrap().weights;
            for (a, b) in w.iter().zip(expected.iter()) {
                assert!((a - b).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn unit_intensity_gives_equal_weights() {
        for rankings in [[1usize, 2, 3], [3, 2, 1], [2, 1, 3]] {
            let w = priority_weights(&pref(&rankings, 1.0)).unwrap().weights;
            for v in w {
                assert!((v - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn relation_matrix_entries_and_reciprocity() {
        let tau = preference_relations(&pref(&[3, 1, 2], 5.0));
        let s5 = 5.0f64.sqrt();
        let expected = [
            [1.0, 1.0 / 5.0, 1.0 / s5],
            [5.0, 1.0, s5],
            [s5, 1.0 / s5, 1.0],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!((tau[i][j] - expected[i][j]).abs() < 1e-12);
                assert!((tau[i][j] * tau[j][i] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn weights_invariant_under_ranking_shift() {
        // only ranking differences enter tau; shifting every ranking by a
        // constant is exercised through the relation matrix directly
        let base = pref(&[3, 1, 2], 5.0);
        let shifted = PreferenceSpec { rankings: vec![13, 11, 12], intensity: 5.0 };
        let (a, b) = (preference_relations(&base), preference_relations(&shifted));
        for i in 0..3 {
            for j in 0..3 {
                assert!((a[i][j] - b[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn invalid_preferences_rejected() {
        assert!(PreferenceSpec::new(vec![1, 1, 2], 5.0).is_err());
        assert!(PreferenceSpec::new(vec![1, 2, 3], 0.5).is_err());
        assert!(PreferenceSpec::new(vec![1, 2, 3], 9.5).is_err());
    }

    #[test]
    fn mmd_hand_example() {
        let objs = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.4, 0.4]];
        let r = mmd_rank(&objs).unwrap();
        assert_eq!(r.selected(), 2);
        assert!((r.scores[2] - 0.8).abs() < 1e-12);
        assert!((r.scores[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mmd_singleton_distance_zero() {
        let r = mmd_rank(&[vec![3.0, 5.0, 7.0]]).unwrap();
        assert_eq!(r.selected(), 0);
        assert_eq!(r.scores[0], 0.0);
    }

    #[test]
    fn mmd_affine_rescaling_keeps_argmin() {
        let objs = vec![
            vec![1.0, 8.0, 0.2],
            vec![2.0, 5.0, 0.6],
            vec![3.0, 3.0, 0.9],
            vec![5.0, 1.0, 1.4],
        ];
        let base = mmd_rank(&objs).unwrap();
        let rescaled: Vec<Vec<f64>> = objs
            .iter()
            .map(|o| vec![o[0], 100.0 * o[1] + 7.0, o[2]])
            .collect();
        let after = mmd_rank(&rescaled).unwrap();
        assert_eq!(base.selected(), after.selected());
        assert_eq!(base.order, after.order);
    }

    #[test]
    fn mtd_dominant_pair() {
        let objs = vec![vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0]];
        let w = priority_weights(&pref(&[1, 2, 3], 1.0)).unwrap();
        let r = mtd_rank(&objs, &w).unwrap();
        assert_eq!(r.selected(), 0);
        assert!((r.scores[0] - 1.0).abs() < 1e-12);
        assert_eq!(r.scores[1], 0.0);
    }

    #[test]
    fn mtd_requires_two_entries() {
        let w = priority_weights(&pref(&[1, 2, 3], 1.0)).unwrap();
        assert!(matches!(
            mtd_rank(&[vec![1.0, 1.0, 1.0]], &w),
            Err(Error::ArchiveTooSmall { .. })
        ));
    }

    #[test]
    fn mtd_monotone_transform_keeps_argmax() {
        let objs = vec![
            vec![1.0, 9.0, 0.1],
            vec![2.0, 4.0, 0.5],
            vec![4.0, 2.0, 0.8],
            vec![6.0, 1.0, 1.6],
        ];
        let w = priority_weights(&pref(&[2, 1, 3], 5.0)).unwrap();
        let base = mtd_rank(&objs, &w).unwrap();
        // strictly monotone transform of objective 1 preserves every order
        // statistic, hence the ranking
        let transformed: Vec<Vec<f64>> = objs
            .iter()
            .map(|o| vec![o[0], o[1].powi(3) + 2.0, o[2]])
            .collect();
        let after = mtd_rank(&transformed, &w).unwrap();
        assert_eq!(base.order, after.order);
    }

    #[test]
    fn parsimony_first_weights_pick_the_smaller_near_tie() {
        // two near-tied candidates plus bulk entries; the parsimony-first
        // preference selects the smaller structure, the prediction-first
        // preference the better-fitting larger one
        let objs = vec![
            vec![3.0, 3.0, 4.0],
            vec![2.0, 3.1, 4.1],
            vec![10.0, 50.0, 50.0],
            vec![12.0, 60.0, 60.0],
        ];
        let parsimony = priority_weights(&pref(&[1, 3, 2], 5.0)).unwrap();
        let r = mtd_rank(&objs, &parsimony).unwrap();
        assert_eq!(r.selected(), 1, "parsimony-first must pick xi = 2");

        let prediction = priority_weights(&pref(&[3, 1, 2], 5.0)).unwrap();
        let r = mtd_rank(&objs, &prediction).unwrap();
        assert_eq!(r.selected(), 0, "prediction-first must pick the better fit");
    }

    #[test]
    fn dominated_entry_never_outranks_dominator() {
        let objs = vec![
            vec![2.0, 3.0, 4.0],
            vec![2.0, 3.5, 4.5], // dominated by the first
            vec![1.0, 6.0, 5.0],
            vec![3.0, 1.0, 2.0],
        ];
        for rankings in [[1usize, 2, 3], [3, 1, 2], [2, 3, 1]] {
            let w = priority_weights(&pref(&rankings, 7.0)).unwrap();
            let r = mtd_rank(&objs, &w).unwrap();
            let pos_dominator = r.order.iter().position(|&i| i == 0).unwrap();
            let pos_dominated = r.order.iter().position(|&i| i == 1).unwrap();
            assert!(pos_dominator < pos_dominated);
            assert!(r.scores[0] >= r.scores[1]);
        }
    }
}
