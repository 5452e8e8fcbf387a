//! Polynomial NARX terms, candidate pools, term clusters and steady-state
//! polynomials.
//!
//! A model term is a product of lagged outputs and inputs, e.g.
//! `y(k-1)*u(k-2)^2`. Terms with the same number of output factors `p` and
//! input factors `m` form the cluster `Omega_{y^p u^m}`; the sum of a model's
//! coefficients within one cluster determines its steady-state behavior, which
//! is what lets a known static curve act as prior knowledge during structure
//! selection.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::ModelStructure;

/// Threshold below which `|1 - sigma_y|` is treated as a degenerate
/// (marginally stable) steady-state gain.
pub const DEGENERATE_GAIN_EPS: f64 = 1e-9;

/// One candidate regressor: a multiset of lagged output and input factors.
///
/// Lag lists are kept sorted ascending so commutative products such as
/// `u(k-1)u(k-2)` and `u(k-2)u(k-1)` share a single canonical form. The
/// constant term has both lists empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TermSpec {
    pub y_lags: Vec<u32>,
    pub u_lags: Vec<u32>,
}

impl TermSpec {
    /// Build a term from (possibly unsorted) lag multisets.
    pub fn new(mut y_lags: Vec<u32>, mut u_lags: Vec<u32>) -> Self {
        y_lags.sort_unstable();
        u_lags.sort_unstable();
        Self { y_lags, u_lags }
    }

    /// The constant term `1`.
    pub fn constant() -> Self {
        Self { y_lags: Vec::new(), u_lags: Vec::new() }
    }

    pub fn is_constant(&self) -> bool {
        self.y_lags.is_empty() && self.u_lags.is_empty()
    }

    /// Total polynomial degree `p + m`.
    pub fn degree(&self) -> usize {
        self.y_lags.len() + self.u_lags.len()
    }

    /// Cluster label `(p, m)` of this term.
    pub fn label(&self) -> ClusterLabel {
        ClusterLabel { p: self.y_lags.len(), m: self.u_lags.len() }
    }

    /// Largest lag referenced by this term (0 for the constant).
    pub fn max_lag(&self) -> u32 {
        self.y_lags
            .iter()
            .chain(self.u_lags.iter())
            .copied()
            .max()
            .unwrap_or(0)
    }

    /// Check lags and degree against a pool configuration.
    pub fn validate(&self, config: &PoolConfig) -> Result<()> {
        if self.y_lags.iter().any(|&l| l == 0 || l > config.n_y) {
            return Err(Error::InvalidTerm(format!(
                "{self} has an output lag outside [1, {}]",
                config.n_y
            )));
        }
        if self.u_lags.iter().any(|&l| l == 0 || l > config.n_u) {
            return Err(Error::InvalidTerm(format!(
                "{self} has an input lag outside [1, {}]",
                config.n_u
            )));
        }
        if self.degree() > config.n_l as usize {
            return Err(Error::InvalidTerm(format!(
                "{self} has degree {} > n_l = {}",
                self.degree(),
                config.n_l
            )));
        }
        Ok(())
    }

    /// Evaluate the term at time `k` against output and input histories.
    ///
    /// Callers guarantee `k` is at least the largest lag.
    #[inline]
    pub fn eval(&self, y: &[f64], u: &[f64], k: usize) -> f64 {
        let mut v = 1.0;
        for &lag in &self.y_lags {
            v *= y[k - lag as usize];
        }
        for &lag in &self.u_lags {
            v *= u[k - lag as usize];
        }
        v
    }

    /// Ordering key used by the deterministic pool enumeration:
    /// degree-major, then cluster label, then lag lists.
    fn sort_key(&self) -> (usize, ClusterLabel, &[u32], &[u32]) {
        (self.degree(), self.label(), &self.y_lags, &self.u_lags)
    }
}

impl fmt::Display for TermSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_constant() {
            return write!(f, "1");
        }
        let mut parts = Vec::new();
        for (name, lags) in [("y", &self.y_lags), ("u", &self.u_lags)] {
            for (lag, group) in &lags.iter().chunk_by(|&&l| l) {
                let power = group.count();
                if power == 1 {
                    parts.push(format!("{name}(k-{lag})"));
                } else {
                    parts.push(format!("{name}(k-{lag})^{power}"));
                }
            }
        }
        write!(f, "{}", parts.join("*"))
    }
}

/// Cluster label `Omega_{y^p u^m}`: `p` output factors, `m` input factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClusterLabel {
    pub p: usize,
    pub m: usize,
}

impl ClusterLabel {
    pub const CONSTANT: ClusterLabel = ClusterLabel { p: 0, m: 0 };
    pub const LINEAR_OUTPUT: ClusterLabel = ClusterLabel { p: 1, m: 0 };
    pub const LINEAR_INPUT: ClusterLabel = ClusterLabel { p: 0, m: 1 };

    /// True for clusters kept by the prior-knowledge pruning: the constant,
    /// linear output, and pure-input clusters.
    pub fn survives_pruning(&self) -> bool {
        self.p == 0 || *self == Self::LINEAR_OUTPUT
    }

    /// True for the constant and the two linear clusters.
    pub fn is_linear(&self) -> bool {
        self.p + self.m <= 1
    }
}

impl fmt::Display for ClusterLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.p, self.m) {
            (0, 0) => write!(f, "0"),
            (p, m) => {
                let mut s = String::new();
                match p {
                    0 => {}
                    1 => s.push('y'),
                    _ => s.push_str(&format!("y^{p}")),
                }
                if p >= 1 && m >= 1 {
                    s.push(' ');
                }
                match m {
                    0 => {}
                    1 => s.push('u'),
                    _ => s.push_str(&format!("u^{m}")),
                }
                write!(f, "{s}")
            }
        }
    }
}

/// Lag and degree bounds of a candidate pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolConfig {
    /// Maximum input lag `n_u`.
    pub n_u: u32,
    /// Maximum output lag `n_y`.
    pub n_y: u32,
    /// Polynomial degree `n_l`.
    pub n_l: u32,
}

impl PoolConfig {
    pub fn new(n_u: u32, n_y: u32, n_l: u32) -> Result<Self> {
        if n_u < 1 || n_y < 1 || n_l < 1 {
            return Err(Error::InvalidConfig(format!(
                "pool bounds must all be >= 1, got n_u={n_u}, n_y={n_y}, n_l={n_l}"
            )));
        }
        Ok(Self { n_u, n_y, n_l })
    }

    /// Largest lag appearing anywhere in the pool.
    pub fn max_lag(&self) -> usize {
        self.n_u.max(self.n_y) as usize
    }
}

/// Ordered, duplicate-free list of candidate terms.
///
/// The ordering is deterministic (degree-major, then cluster label, then lag
/// lists) so genome bit `i` always maps to the same term.
#[derive(Debug, Clone)]
pub struct TermPool {
    config: PoolConfig,
    terms: Vec<TermSpec>,
    index: HashMap<TermSpec, usize>,
}

impl TermPool {
    /// Build a pool from an explicit term list, preserving its order.
    pub fn from_terms(config: PoolConfig, terms: Vec<TermSpec>) -> Result<Self> {
        let mut index = HashMap::with_capacity(terms.len());
        for (i, term) in terms.iter().enumerate() {
            term.validate(&config)?;
            if index.insert(term.clone(), i).is_some() {
                return Err(Error::InvalidTerm(format!("duplicate term {term}")));
            }
        }
        Ok(Self { config, terms, index })
    }

    pub fn config(&self) -> &PoolConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, i: usize) -> &TermSpec {
        &self.terms[i]
    }

    pub fn terms(&self) -> &[TermSpec] {
        &self.terms
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TermSpec> {
        self.terms.iter()
    }

    /// Index of a term in this pool, if present.
    pub fn position(&self, term: &TermSpec) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn to_document(&self) -> PoolDocument {
        PoolDocument { config: self.config, terms: self.terms.clone() }
    }

    pub fn from_document(doc: PoolDocument) -> Result<Arc<Self>> {
        Ok(Arc::new(Self::from_terms(doc.config, doc.terms)?))
    }

    fn filtered(&self, keep: impl Fn(&ClusterLabel) -> bool) -> TermPool {
        let terms: Vec<TermSpec> = self
            .terms
            .iter()
            .filter(|t| keep(&t.label()))
            .cloned()
            .collect();
        // order preserved, so re-building cannot fail
        TermPool::from_terms(self.config, terms).expect("filtered pool is valid")
    }
}

/// Serialized form of a pool: the configuration plus the ordered term list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoolDocument {
    pub config: PoolConfig,
    pub terms: Vec<TermSpec>,
}

/// Enumerate every candidate term of total degree up to `n_l`, plus the
/// constant, in deterministic order.
pub fn generate_term_pool(config: PoolConfig) -> TermPool {
    let mut terms = Vec::new();
    for degree in 0..=config.n_l as usize {
        for p in 0..=degree {
            let m = degree - p;
            for y_lags in (1..=config.n_y).combinations_with_replacement(p) {
                for u_lags in (1..=config.n_u).combinations_with_replacement(m) {
                    terms.push(TermSpec { y_lags: y_lags.clone(), u_lags });
                }
            }
        }
    }
    debug_assert!(terms.windows(2).all(|w| w[0].sort_key() < w[1].sort_key()));
    TermPool::from_terms(config, terms).expect("generated pool is valid")
}

/// Classify a term into its cluster.
pub fn classify(term: &TermSpec) -> ClusterLabel {
    term.label()
}

/// Remove the nonlinear output clusters and the input-output cross-term
/// clusters, keeping `Omega_0`, `Omega_y`, `Omega_u` and `Omega_{u^m}`.
///
/// Structures drawn from the result satisfy the cluster conditions needed for
/// a polynomial steady-state form by construction.
pub fn prune_pool(pool: &TermPool) -> TermPool {
    pool.filtered(ClusterLabel::survives_pruning)
}

/// Keep only the constant and the two linear clusters, forcing a straight-line
/// steady-state form.
pub fn prune_to_linear(pool: &TermPool) -> TermPool {
    pool.filtered(ClusterLabel::is_linear)
}

/// Per-cluster sums of a model's coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClusterCoefficients {
    sums: BTreeMap<ClusterLabel, f64>,
}

impl ClusterCoefficients {
    /// `Sigma_{y^p u^m}`; zero for clusters with no selected term.
    pub fn get(&self, label: ClusterLabel) -> f64 {
        self.sums.get(&label).copied().unwrap_or(0.0)
    }

    pub fn sigma_0(&self) -> f64 {
        self.get(ClusterLabel::CONSTANT)
    }

    pub fn sigma_y(&self) -> f64 {
        self.get(ClusterLabel::LINEAR_OUTPUT)
    }

    pub fn sigma_u(&self) -> f64 {
        self.get(ClusterLabel::LINEAR_INPUT)
    }

    /// `Sigma_{u^m}` for the pure-input cluster of degree `m`.
    pub fn sigma_u_pow(&self, m: usize) -> f64 {
        self.get(ClusterLabel { p: 0, m })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ClusterLabel, &f64)> {
        self.sums.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.sums.is_empty()
    }
}

/// Sum the estimated coefficients of a structure per cluster label.
///
/// Requires an estimated structure; every selected term contributes to exactly
/// one cluster.
pub fn cluster_coefficients(structure: &ModelStructure) -> ClusterCoefficients {
    let theta = structure
        .coefficients()
        .expect("cluster coefficients require an estimated structure");
    let mut sums = BTreeMap::new();
    for (term, &coeff) in structure.terms().zip(theta.iter()) {
        *sums.entry(term.label()).or_insert(0.0) += coeff;
    }
    ClusterCoefficients { sums }
}

/// Steady-state polynomial `y_bar = a_0 + a_1 u_bar + ... + a_{n_l} u_bar^{n_l}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticPolynomial {
    coefficients: Vec<f64>,
}

impl StaticPolynomial {
    pub fn new(coefficients: Vec<f64>) -> Self {
        Self { coefficients }
    }

    /// Coefficients `a_0 ..= a_{n_l}`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Horner evaluation at the steady-state input `u_bar`.
    pub fn eval(&self, u_bar: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, &a| acc * u_bar + a)
    }
}

/// Evaluate a static polynomial at `u_bar`.
pub fn eval_static(poly: &StaticPolynomial, u_bar: f64) -> f64 {
    poly.eval(u_bar)
}

/// Derive the steady-state polynomial of a structure from its cluster
/// coefficients: `a_i = Sigma_{u^i} / (1 - Sigma_y)`.
///
/// Fails with [`Error::UnsupportedClusters`] when the structure contains
/// nonlinear output or cross-term clusters (no closed polynomial form exists),
/// and with [`Error::DegenerateStaticGain`] when `|1 - Sigma_y|` is below
/// [`DEGENERATE_GAIN_EPS`].
pub fn static_polynomial(structure: &ModelStructure) -> Result<StaticPolynomial> {
    let clusters = cluster_coefficients(structure);
    for (label, _) in clusters.iter() {
        if !label.survives_pruning() {
            return Err(Error::UnsupportedClusters(label.to_string()));
        }
    }
    let denom = 1.0 - clusters.sigma_y();
    if denom.abs() < DEGENERATE_GAIN_EPS {
        return Err(Error::DegenerateStaticGain(denom.abs()));
    }
    let n_l = structure.pool().config().n_l as usize;
    let coefficients = (0..=n_l)
        .map(|m| clusters.sigma_u_pow(m) / denom)
        .collect();
    Ok(StaticPolynomial { coefficients })
}

/// First-principle steady-state curve of the buck converter:
/// `y_bar = 4 V_d / 3 - (V_d / 3) u_bar`.
pub fn buck_static_reference(u_bar: f64, v_d: f64) -> f64 {
    4.0 * v_d / 3.0 - v_d / 3.0 * u_bar
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed-form term count: n = 1 + sum_i C(n_y + n_u + i - 1, i).
    fn term_count_formula(config: &PoolConfig) -> usize {
        let v = (config.n_y + config.n_u) as usize;
        let mut n = 1usize;
        let mut n_i = 1usize;
        for i in 1..=config.n_l as usize {
            n_i = n_i * (v + i - 1) / i;
            n += n_i;
        }
        n
    }

    fn pool(n_u: u32, n_y: u32, n_l: u32) -> TermPool {
        generate_term_pool(PoolConfig::new(n_u, n_y, n_l).unwrap())
    }

    fn structure_from(
        pool: &Arc<TermPool>,
        terms: &[TermSpec],
        theta: &[f64],
    ) -> ModelStructure {
        let pairs = terms.iter().cloned().zip(theta.iter().copied()).collect();
        ModelStructure::from_terms_with_coefficients(Arc::clone(pool), pairs).unwrap()
    }

    #[test]
    fn pool_sizes_match_closed_form() {
        assert_eq!(pool(5, 5, 3).len(), 286);
        assert_eq!(pool(1, 1, 1).len(), 3);
        assert_eq!(pool(2, 2, 2).len(), 15);
        for n_u in 1..=6 {
            for n_y in 1..=6 {
                for n_l in 1..=4 {
                    let config = PoolConfig::new(n_u, n_y, n_l).unwrap();
                    assert_eq!(
                        generate_term_pool(config).len(),
                        term_count_formula(&config),
                        "count mismatch at ({n_u},{n_y},{n_l})"
                    );
                }
            }
        }
    }

    #[test]
    fn smallest_pool_terms() {
        let p = pool(1, 1, 1);
        assert_eq!(
            p.terms(),
            &[
                TermSpec::constant(),
                TermSpec::new(vec![], vec![1]),
                TermSpec::new(vec![1], vec![]),
            ]
        );
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(&TermSpec::constant()), ClusterLabel { p: 0, m: 0 });
        assert_eq!(
            classify(&TermSpec::new(vec![1], vec![2])),
            ClusterLabel { p: 1, m: 1 }
        );
        // cubic input term appearing in a published model
        assert_eq!(
            classify(&TermSpec::new(vec![], vec![4, 3, 1])),
            ClusterLabel { p: 0, m: 3 }
        );
    }

    #[test]
    fn canonical_form_deduplicates_commutative_products() {
        assert_eq!(
            TermSpec::new(vec![], vec![1, 2]),
            TermSpec::new(vec![], vec![2, 1])
        );
    }

    #[test]
    fn prune_keeps_only_valid_clusters() {
        let pruned = prune_pool(&pool(5, 5, 3));
        assert_eq!(pruned.len(), 61);
        let mut by_label: BTreeMap<ClusterLabel, usize> = BTreeMap::new();
        for t in pruned.iter() {
            *by_label.entry(t.label()).or_default() += 1;
        }
        assert_eq!(by_label[&ClusterLabel::CONSTANT], 1);
        assert_eq!(by_label[&ClusterLabel::LINEAR_OUTPUT], 5);
        assert_eq!(by_label[&ClusterLabel::LINEAR_INPUT], 5);
        assert_eq!(by_label[&ClusterLabel { p: 0, m: 2 }], 15);
        assert_eq!(by_label[&ClusterLabel { p: 0, m: 3 }], 35);

        // cross-term clusters must vanish
        assert!(pruned.position(&TermSpec::new(vec![2], vec![2])).is_none());
        assert!(pruned
            .iter()
            .all(|t| !(t.label().p >= 2 || (t.label().p >= 1 && t.label().m >= 1))));
    }

    #[test]
    fn prune_count_matches_direct_enumeration() {
        // independent count of surviving multisets for (5, 5, 3):
        // constant, y lags, u lags, nondecreasing u pairs, nondecreasing
        // u triples
        let mut pairs = 0;
        let mut triples = 0;
        for a in 1..=5u32 {
            for b in a..=5 {
                pairs += 1;
                for c in b..=5 {
                    triples += 1;
                    let _ = c;
                }
            }
        }
        assert_eq!(1 + 5 + 5 + pairs + triples, 61);
        assert_eq!(prune_pool(&pool(5, 5, 3)).len(), 61);
    }

    #[test]
    fn prune_is_idempotent_and_order_preserving() {
        let full = pool(4, 3, 3);
        let once = prune_pool(&full);
        let twice = prune_pool(&once);
        assert_eq!(once.terms(), twice.terms());
        let mut last = None;
        for t in once.iter() {
            let idx = full.position(t).unwrap();
            if let Some(prev) = last {
                assert!(idx > prev);
            }
            last = Some(idx);
        }
    }

    #[test]
    fn prune_noop_on_linear_pool() {
        assert_eq!(prune_pool(&pool(1, 1, 1)).len(), 3);
    }

    #[test]
    fn linear_pruning_counts() {
        assert_eq!(prune_to_linear(&pool(5, 5, 3)).len(), 11);
        assert_eq!(prune_to_linear(&pool(1, 1, 1)).len(), 3);
    }

    #[test]
    fn cluster_partition_covers_pool() {
        let p = pool(3, 2, 3);
        let mut grouped: BTreeMap<ClusterLabel, Vec<&TermSpec>> = BTreeMap::new();
        for t in p.iter() {
            grouped.entry(t.label()).or_default().push(t);
        }
        let total: usize = grouped.values().map(|v| v.len()).sum();
        assert_eq!(total, p.len());
        for (label, terms) in grouped {
            assert!(terms.iter().all(|t| t.label() == label));
        }
    }

    #[test]
    fn cluster_sums_of_two_output_terms() {
        let p = Arc::new(prune_pool(&pool(5, 5, 3)));
        let s = structure_from(
            &p,
            &[TermSpec::new(vec![1], vec![]), TermSpec::new(vec![3], vec![])],
            &[0.9268, -0.26037],
        );
        let c = cluster_coefficients(&s);
        assert!((c.sigma_y() - 0.66643).abs() < 1e-12);
        assert_eq!(c.sigma_0(), 0.0);
    }

    #[test]
    fn empty_structure_has_zero_clusters() {
        let p = Arc::new(prune_pool(&pool(5, 5, 3)));
        let s = ModelStructure::new(Arc::clone(&p), vec![])
            .unwrap()
            .with_coefficients(vec![]);
        let c = cluster_coefficients(&s);
        assert!(c.is_empty());
        assert_eq!(c.sigma_y(), 0.0);
    }

    #[test]
    fn static_polynomial_zero_without_input_terms() {
        let p = Arc::new(prune_pool(&pool(1, 1, 1)));
        let s = structure_from(&p, &[TermSpec::new(vec![1], vec![])], &[0.5]);
        let poly = static_polynomial(&s).unwrap();
        assert_eq!(poly.coefficients(), &[0.0, 0.0]);
        assert_eq!(poly.eval(3.7), 0.0);
    }

    #[test]
    fn degenerate_gain_detected() {
        let p = Arc::new(prune_pool(&pool(1, 1, 1)));
        let s = structure_from(&p, &[TermSpec::new(vec![1], vec![])], &[1.0]);
        assert!(matches!(
            static_polynomial(&s),
            Err(Error::DegenerateStaticGain(_))
        ));
    }

    #[test]
    fn cross_terms_rejected_by_static_polynomial() {
        let full = Arc::new(pool(2, 2, 2));
        let s = structure_from(&full, &[TermSpec::new(vec![1], vec![1])], &[0.3]);
        assert!(matches!(
            static_polynomial(&s),
            Err(Error::UnsupportedClusters(_))
        ));
    }

    #[test]
    fn buck_reference_line() {
        assert_eq!(buck_static_reference(2.5, 24.0), 12.0);
        assert_eq!(buck_static_reference(4.0, 24.0), 0.0);
        assert_eq!(buck_static_reference(1.0, 24.0), 24.0);
    }

    /// With the output coefficient held fixed, the static coefficients are
    /// linear in the remaining entries of theta; without output terms they
    /// are linear in all of theta.
    #[test]
    fn static_polynomial_linear_in_coefficients() {
        let p = Arc::new(prune_pool(&pool(2, 2, 2)));
        let terms = [
            TermSpec::constant(),
            TermSpec::new(vec![1], vec![]),
            TermSpec::new(vec![], vec![2]),
            TermSpec::new(vec![], vec![1, 1]),
        ];
        let a = structure_from(&p, &terms, &[1.0, 0.4, 2.0, -0.5]);
        let b = structure_from(&p, &terms, &[3.0, 0.4, -1.0, 0.25]);
        let mix = structure_from(&p, &terms, &[2.0, 0.4, 0.5, -0.125]);
        let (pa, pb, pm) = (
            static_polynomial(&a).unwrap(),
            static_polynomial(&b).unwrap(),
            static_polynomial(&mix).unwrap(),
        );
        for i in 0..=2 {
            let expected = 0.5 * (pa.coefficients()[i] + pb.coefficients()[i]);
            assert!((pm.coefficients()[i] - expected).abs() < 1e-12);
        }

        // no output terms: scaling theta scales the polynomial
        let no_y = [
            TermSpec::constant(),
            TermSpec::new(vec![], vec![1]),
            TermSpec::new(vec![], vec![2, 2]),
        ];
        let s1 = structure_from(&p, &no_y, &[1.0, -2.0, 0.7]);
        let s2 = structure_from(&p, &no_y, &[3.0, -6.0, 2.1]);
        let (p1, p2) = (static_polynomial(&s1).unwrap(), static_polynomial(&s2).unwrap());
        for (c1, c2) in p1.coefficients().iter().zip(p2.coefficients()) {
            assert!((3.0 * c1 - c2).abs() < 1e-12);
        }
    }

    #[test]
    fn published_fixture_cluster_sums_and_static_values() {
        use crate::dataio::reference_model;
        let m1 = reference_model("M1").unwrap().structure;
        let clusters = cluster_coefficients(&m1);
        assert!((clusters.sigma_y() - 0.66643).abs() < 1e-10);
        // sum of the ten cubic-input coefficients
        assert!((clusters.sigma_u_pow(3) - (-0.1476)).abs() < 1e-4);

        // static evaluations against the published table
        let m2 = reference_model("M2").unwrap().structure;
        let p2 = static_polynomial(&m2).unwrap();
        assert!((p2.eval(1.0) - 23.78).abs() < 0.05, "{}", p2.eval(1.0));

        let p1 = static_polynomial(&m1).unwrap();
        // near-overlap with the ideal line on the identification range
        let line = buck_static_reference(2.35, 24.0);
        assert!((p1.eval(2.35) - line).abs() < 0.5);
    }

    #[test]
    fn pool_document_round_trip() {
        let p = pool(3, 2, 2);
        let json = serde_json::to_string(&p.to_document()).unwrap();
        let back = TermPool::from_document(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.terms(), p.terms());
        assert_eq!(back.config(), p.config());
    }

    #[test]
    fn term_display() {
        assert_eq!(TermSpec::constant().to_string(), "1");
        assert_eq!(
            TermSpec::new(vec![1], vec![3, 3]).to_string(),
            "y(k-1)*u(k-3)^2"
        );
    }
}
