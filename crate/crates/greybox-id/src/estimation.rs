//! Coefficient estimation and the three search objectives: term count,
//! free-run dynamic error and static-curve error.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::narx::{static_polynomial, PoolConfig, TermPool, TermSpec};

/// Sentinel objective value assigned to structures whose evaluation failed
/// (rank-deficient regression, diverging free run, degenerate static gain).
pub const PENALTY: f64 = 1e12;

/// Free-run output magnitudes beyond `DIVERGENCE_FACTOR * max|y|` count as
/// divergence.
pub const DIVERGENCE_FACTOR: f64 = 100.0;

/// A recorded input/output sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub u: Vec<f64>,
    pub y: Vec<f64>,
}

impl TimeSeries {
    pub fn new(u: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if u.len() != y.len() {
            return Err(Error::InvalidConfig(format!(
                "input and output lengths differ: {} vs {}",
                u.len(),
                y.len()
            )));
        }
        if u.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "series contains non-finite samples".into(),
            ));
        }
        Ok(Self { u, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// One sample of the steady-state reference curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticPoint {
    pub u_bar: f64,
    pub y_bar: f64,
}

/// Estimation and validation records plus the static reference curve.
#[derive(Debug, Clone)]
pub struct DatasetBundle {
    pub estimation: TimeSeries,
    pub validation: TimeSeries,
    pub static_curve: Vec<StaticPoint>,
}

impl DatasetBundle {
    /// Validate segment lengths against the pool's maximum lag.
    pub fn new(
        estimation: TimeSeries,
        validation: TimeSeries,
        static_curve: Vec<StaticPoint>,
        max_lag: usize,
    ) -> Result<Self> {
        if estimation.len() <= max_lag + 1 {
            return Err(Error::SplitTooSmall(format!(
                "estimation segment has {} samples, need more than {}",
                estimation.len(),
                max_lag + 1
            )));
        }
        if validation.len() <= max_lag {
            return Err(Error::SplitTooSmall(format!(
                "validation segment has {} samples, need more than the maximum lag {}",
                validation.len(),
                max_lag
            )));
        }
        if static_curve.len() < 2 {
            return Err(Error::SplitTooSmall(
                "static curve needs at least 2 samples".into(),
            ));
        }
        if static_curve
            .iter()
            .any(|p| !p.u_bar.is_finite() || !p.y_bar.is_finite())
        {
            return Err(Error::InvalidConfig(
                "static curve contains non-finite samples".into(),
            ));
        }
        Ok(Self { estimation, validation, static_curve })
    }
}

/// A subset of a term pool, with coefficients once estimated.
#[derive(Debug, Clone)]
pub struct ModelStructure {
    pool: Arc<TermPool>,
    selected: Vec<usize>,
    theta: Option<Vec<f64>>,
}

impl ModelStructure {
    /// Build from strictly increasing pool indices.
    pub fn new(pool: Arc<TermPool>, selected: Vec<usize>) -> Result<Self> {
        if !selected.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig(
                "selected indices must be strictly increasing".into(),
            ));
        }
        if selected.iter().any(|&i| i >= pool.len()) {
            return Err(Error::InvalidConfig(format!(
                "selected index out of bounds for pool of {} terms",
                pool.len()
            )));
        }
        Ok(Self { pool, selected, theta: None })
    }

    /// Build from explicit terms, resolving each against the pool. The
    /// resulting structure stores indices in pool order.
    pub fn from_terms(pool: Arc<TermPool>, terms: Vec<TermSpec>) -> Result<Self> {
        let mut selected = Vec::with_capacity(terms.len());
        for term in &terms {
            let idx = pool
                .position(term)
                .ok_or_else(|| Error::TermNotInPool(term.to_string()))?;
            selected.push(idx);
        }
        selected.sort_unstable();
        if selected.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig("duplicate term in structure".into()));
        }
        Ok(Self { pool, selected, theta: None })
    }

    /// Build an estimated structure from `(term, coefficient)` pairs in any
    /// order; the pairs are sorted together into pool order.
    pub fn from_terms_with_coefficients(
        pool: Arc<TermPool>,
        pairs: Vec<(TermSpec, f64)>,
    ) -> Result<Self> {
        let mut indexed: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (term, coeff) in &pairs {
            let idx = pool
                .position(term)
                .ok_or_else(|| Error::TermNotInPool(term.to_string()))?;
            indexed.push((idx, *coeff));
        }
        indexed.sort_unstable_by_key(|&(idx, _)| idx);
        if indexed.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidConfig("duplicate term in structure".into()));
        }
        let (selected, theta): (Vec<usize>, Vec<f64>) = indexed.into_iter().unzip();
        Ok(Self { pool, selected, theta: Some(theta) })
    }

    /// Attach coefficients aligned with the selected indices (pool order).
    pub fn with_coefficients(mut self, theta: Vec<f64>) -> Self {
        assert_eq!(
            theta.len(),
            self.selected.len(),
            "coefficient vector must align with selected terms"
        );
        self.theta = Some(theta);
        self
    }

    pub fn pool(&self) -> &Arc<TermPool> {
        &self.pool
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    /// Structure cardinality (the first search objective).
    pub fn xi(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &TermSpec> + '_ {
        self.selected.iter().map(|&i| self.pool.term(i))
    }

    pub fn coefficients(&self) -> Option<&[f64]> {
        self.theta.as_deref()
    }

    pub fn is_estimated(&self) -> bool {
        self.theta.is_some()
    }

    pub fn to_document(&self) -> StructureDocument {
        StructureDocument {
            config: *self.pool.config(),
            terms: self.terms().cloned().collect(),
            coefficients: self.theta.clone().unwrap_or_default(),
        }
    }

    /// Resolve a serialized structure against a pool.
    pub fn from_document(pool: Arc<TermPool>, doc: StructureDocument) -> Result<Self> {
        if doc.config != *pool.config() {
            return Err(Error::InvalidConfig(
                "structure document config does not match pool".into(),
            ));
        }
        if doc.coefficients.is_empty() {
            Self::from_terms(pool, doc.terms)
        } else if doc.coefficients.len() == doc.terms.len() {
            let pairs = doc.terms.into_iter().zip(doc.coefficients).collect();
            Self::from_terms_with_coefficients(pool, pairs)
        } else {
            Err(Error::Parse(
                "coefficient count does not match term count".into(),
            ))
        }
    }
}

/// Serialized structure: terms plus coefficients aligned by index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureDocument {
    pub config: PoolConfig,
    pub terms: Vec<TermSpec>,
    #[serde(default)]
    pub coefficients: Vec<f64>,
}

/// Regression system in one-step-ahead form: row `t` of `phi` holds every
/// selected term evaluated at time `t` from measured data, `targets[t]` holds
/// the measured output.
#[derive(Debug, Clone)]
pub struct Regression {
    pub phi: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

/// Build the regression for a structure over a measured series. Rows start
/// at `k = max(n_u, n_y)` (zero-based), so the row count is independent of
/// which terms are selected.
pub fn build_regression(structure: &ModelStructure, series: &TimeSeries) -> Result<Regression> {
    let max_lag = structure.pool().config().max_lag();
    if series.len() <= max_lag {
        return Err(Error::SeriesTooShort(format!(
            "series of {} samples cannot support lag {}",
            series.len(),
            max_lag
        )));
    }
    let rows = series.len() - max_lag;
    let terms: Vec<&TermSpec> = structure.terms().collect();
    let mut phi = Vec::with_capacity(rows);
    let mut targets = Vec::with_capacity(rows);
    for k in max_lag..series.len() {
        let row: Vec<f64> = terms
            .iter()
            .map(|t| t.eval(&series.y, &series.u, k))
            .collect();
        phi.push(row);
        targets.push(series.y[k]);
    }
    Ok(Regression { phi, targets })
}

/// Least-squares coefficient estimation through an SVD (orthogonal
/// decomposition rather than normal equations).
///
/// Returns [`Error::RankDeficient`] when the numerical rank of the regression
/// matrix is below the number of selected terms.
pub fn estimate(structure: &ModelStructure, series: &TimeSeries) -> Result<ModelStructure> {
    if structure.is_empty() {
        return Ok(structure.clone().with_coefficients(vec![]));
    }
    let reg = build_regression(structure, series)?;
    let rows = reg.phi.len();
    let cols = structure.xi();
    if rows < cols {
        return Err(Error::RankDeficient { rank: rows, cols });
    }
    let phi = DMatrix::from_fn(rows, cols, |r, c| reg.phi[r][c]);
    let y = DVector::from_column_slice(&reg.targets);
    let svd = phi.svd(true, true);
    let sigma_max = svd.singular_values.max();
    let tol = sigma_max * rows.max(cols) as f64 * f64::EPSILON;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank < cols {
        return Err(Error::RankDeficient { rank, cols });
    }
    let theta = svd
        .solve(&y, tol)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(structure.clone().with_coefficients(theta.as_slice().to_vec()))
}

/// Free-run (simulated) prediction: the first `max(n_u, n_y)` outputs are
/// seeded from the measured series, then the model feeds back its own
/// predictions while always using the measured input.
///
/// Fails with [`Error::Diverged`] when a predicted output exceeds
/// [`DIVERGENCE_FACTOR`] times the measured output magnitude.
pub fn free_run(
    structure: &ModelStructure,
    series: &TimeSeries,
    horizon: usize,
) -> Result<Vec<f64>> {
    let theta = structure
        .coefficients()
        .expect("free run requires an estimated structure");
    let max_lag = structure.pool().config().max_lag();
    if horizon > series.len() {
        return Err(Error::SeriesTooShort(format!(
            "horizon {horizon} exceeds series length {}",
            series.len()
        )));
    }
    let bound = DIVERGENCE_FACTOR
        * series
            .y
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
            .max(1.0);
    let terms: Vec<&TermSpec> = structure.terms().collect();
    let mut y_hat = Vec::with_capacity(horizon);
    y_hat.extend_from_slice(&series.y[..horizon.min(max_lag)]);
    for k in max_lag..horizon {
        let mut v = 0.0;
        for (term, &coeff) in terms.iter().zip(theta.iter()) {
            v += coeff * term.eval(&y_hat, &series.u, k);
        }
        if !v.is_finite() || v.abs() > bound {
            return Err(Error::Diverged { step: k, value: v });
        }
        y_hat.push(v);
    }
    Ok(y_hat)
}

/// Mean squared free-run prediction error over the validation series;
/// [`PENALTY`] when the free run diverges. Values are capped at the sentinel
/// so every objective is either finite below it or exactly equal to it.
pub fn dynamic_error(structure: &ModelStructure, validation: &TimeSeries) -> f64 {
    match free_run(structure, validation, validation.len()) {
        Ok(y_hat) => {
            let n = validation.len() as f64;
            let mse = validation
                .y
                .iter()
                .zip(y_hat.iter())
                .map(|(y, yh)| (y - yh).powi(2))
                .sum::<f64>()
                / n;
            if mse.is_finite() {
                mse.min(PENALTY)
            } else {
                PENALTY
            }
        }
        Err(_) => PENALTY,
    }
}

/// Normalized free-run error in percent:
/// `100 * sqrt(sum (y - y_hat)^2 / sum (y - mean(y))^2)`.
///
/// Reported for readability alongside the raw mean squared error; the raw
/// value is what the search minimizes.
pub fn percent_error(structure: &ModelStructure, validation: &TimeSeries) -> Result<f64> {
    let y_hat = free_run(structure, validation, validation.len())?;
    let mean = validation.y.iter().sum::<f64>() / validation.len() as f64;
    let ss_res: f64 = validation
        .y
        .iter()
        .zip(y_hat.iter())
        .map(|(y, yh)| (y - yh).powi(2))
        .sum();
    let ss_tot: f64 = validation.y.iter().map(|y| (y - mean).powi(2)).sum();
    Ok(100.0 * (ss_res / ss_tot).sqrt())
}

/// Summed squared deviation between the reference curve and the structure's
/// steady-state polynomial; [`PENALTY`] when no valid polynomial exists.
/// Values are capped at the sentinel like [`dynamic_error`].
pub fn static_error(structure: &ModelStructure, static_curve: &[StaticPoint]) -> f64 {
    match static_polynomial(structure) {
        Ok(poly) => {
            let sum: f64 = static_curve
                .iter()
                .map(|p| (p.y_bar - poly.eval(p.u_bar)).powi(2))
                .sum();
            if sum.is_finite() {
                sum.min(PENALTY)
            } else {
                PENALTY
            }
        }
        Err(_) => PENALTY,
    }
}

/// The criterion vector `(xi, E, E_bar)` minimized by the search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub xi: usize,
    pub e_dyn: f64,
    pub e_static: f64,
}

impl ObjectiveVector {
    pub fn new(xi: usize, e_dyn: f64, e_static: f64) -> Self {
        Self { xi, e_dyn, e_static }
    }

    pub fn penalized(xi: usize) -> Self {
        Self { xi, e_dyn: PENALTY, e_static: PENALTY }
    }

    pub fn is_penalized(&self) -> bool {
        self.e_dyn >= PENALTY || self.e_static >= PENALTY
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.xi as f64, self.e_dyn, self.e_static]
    }
}

/// Evaluate the full criterion vector for a candidate structure: estimate
/// coefficients on the estimation segment, measure the free-run error on the
/// validation segment and the static error on the reference curve.
///
/// Any failure (empty structure, rank-deficient regression, diverging free
/// run, missing static form) yields the penalty vector so infeasible
/// candidates are dominated by every feasible one of equal or smaller size.
pub fn evaluate(
    structure: &ModelStructure,
    bundle: &DatasetBundle,
) -> (ModelStructure, ObjectiveVector) {
    let xi = structure.xi();
    if structure.is_empty() {
        return (structure.clone(), ObjectiveVector::penalized(0));
    }
    let estimated = match estimate(structure, &bundle.estimation) {
        Ok(s) => s,
        Err(_) => return (structure.clone(), ObjectiveVector::penalized(xi)),
    };
    let e_dyn = dynamic_error(&estimated, &bundle.validation);
    let e_static = static_error(&estimated, &bundle.static_curve);
    if e_dyn >= PENALTY || e_static >= PENALTY {
        return (estimated, ObjectiveVector::penalized(xi));
    }
    (estimated, ObjectiveVector::new(xi, e_dyn, e_static))
}
