//! Correlation-based model validity tests over one-step-ahead residuals.
//!
//! Five normalized correlation functions are checked over the lag window
//! [-20, 20]: residual autocorrelation, input-residual, squared-input vs
//! residual, squared-input vs squared-residual and squared-residual vs input.
//! Squared signals are mean-removed before correlating.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{build_regression, ModelStructure, TimeSeries};

/// Correlations are computed for lags in `[-LAG_WINDOW, LAG_WINDOW]`.
pub const LAG_WINDOW: i32 = 20;

/// Half-width multiplier of the conventional per-lag 95% confidence band,
/// `1.96 / sqrt(N)`; exported for plotting.
pub const PLOT_BAND_Z: f64 = 1.96;

/// Half-width multiplier of the pass/fail band. The battery checks 204 lag
/// values at once, so the per-lag quantile is widened (Sidak-style) to keep
/// the family false-alarm rate of the whole battery near 5%.
pub const PASS_BAND_Z: f64 = 4.0;

/// The five validity tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValidityTest {
    /// Residual autocorrelation (delta at lag zero for a valid model).
    ResidualAuto,
    /// Input vs residual.
    InputResidual,
    /// Mean-removed squared input vs residual.
    InputSqResidual,
    /// Mean-removed squared input vs mean-removed squared residual.
    InputSqResidualSq,
    /// Mean-removed squared residual vs input.
    ResidualSqInput,
}

impl ValidityTest {
    pub const ALL: [ValidityTest; 5] = [
        ValidityTest::ResidualAuto,
        ValidityTest::InputResidual,
        ValidityTest::InputSqResidual,
        ValidityTest::InputSqResidualSq,
        ValidityTest::ResidualSqInput,
    ];

    /// Stable key used in report files.
    pub fn key(&self) -> &'static str {
        match self {
            ValidityTest::ResidualAuto => "phi_ee",
            ValidityTest::InputResidual => "phi_ue",
            ValidityTest::InputSqResidual => "phi_u2e",
            ValidityTest::InputSqResidualSq => "phi_u2e2",
            ValidityTest::ResidualSqInput => "phi_e2u",
        }
    }

    /// Lags exempt from the band check (the trivial unit autocorrelation).
    fn exempt(&self, tau: i32) -> bool {
        matches!(self, ValidityTest::ResidualAuto) && tau == 0
    }
}

/// Correlation values over the lag window for one test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationTrace {
    pub test: ValidityTest,
    /// Values aligned with [`CorrelationReport::lags`].
    pub values: Vec<f64>,
    pub pass: bool,
}

/// Outcome of the full validity battery.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationReport {
    /// Series length the bands refer to.
    pub n: usize,
    /// Lags corresponding to each trace value.
    pub lags: Vec<i32>,
    /// Conventional 95% band half-width for plots.
    pub band: f64,
    /// Band half-width actually used for the pass decision.
    pub pass_band: f64,
    pub tests: Vec<CorrelationTrace>,
}

impl CorrelationReport {
    pub fn all_pass(&self) -> bool {
        self.tests.iter().all(|t| t.pass)
    }

    pub fn trace(&self, test: ValidityTest) -> &CorrelationTrace {
        self.tests
            .iter()
            .find(|t| t.test == test)
            .expect("all five tests are always present")
    }
}

/// One-step-ahead residuals of an estimated structure over a measured series:
/// `e(k) = y(k) - phi(k) theta`, starting at the pool's maximum lag.
pub fn residuals(structure: &ModelStructure, series: &TimeSeries) -> Result<Vec<f64>> {
    let theta = structure
        .coefficients()
        .expect("residuals require an estimated structure");
    let reg = build_regression(structure, series)?;
    Ok(reg
        .phi
        .iter()
        .zip(reg.targets.iter())
        .map(|(row, y)| y - row.iter().zip(theta.iter()).map(|(x, t)| x * t).sum::<f64>())
        .collect())
}

fn centered(series: &[f64]) -> Vec<f64> {
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    series.iter().map(|v| v - mean).collect()
}

fn centered_square(series: &[f64]) -> Vec<f64> {
    let squared: Vec<f64> = series.iter().map(|v| v * v).collect();
    centered(&squared)
}

/// Normalized cross-correlation `phi_ab(tau) = sum_k a(k - tau) b(k)` over
/// the valid overlap, normalized by the full-series energies. Inputs are
/// centered, so values lie in [-1, 1] and `phi_aa(0) = 1` exactly.
pub fn cross_correlation(a: &[f64], b: &[f64], max_lag: i32) -> Vec<f64> {
    let a = centered(a);
    let b = centered(b);
    let norm = (a.iter().map(|v| v * v).sum::<f64>()
        * b.iter().map(|v| v * v).sum::<f64>())
    .sqrt();
    let n = a.len() as i64;
    (-max_lag..=max_lag)
        .map(|tau| {
            if norm == 0.0 {
                return 0.0;
            }
            let tau = tau as i64;
            let mut sum = 0.0;
            for k in 0..n {
                let shifted = k - tau;
                if shifted >= 0 && shifted < n {
                    sum += a[shifted as usize] * b[k as usize];
                }
            }
            sum / norm
        })
        .collect()
}

/// Run the five-test battery on residuals and the matching input series.
pub fn validity_tests(eps: &[f64], u: &[f64]) -> Result<CorrelationReport> {
    if eps.len() != u.len() {
        return Err(Error::InvalidConfig(format!(
            "residual and input lengths differ: {} vs {}",
            eps.len(),
            u.len()
        )));
    }
    if eps.len() < 40 {
        return Err(Error::SeriesTooShort(format!(
            "validity tests need at least 40 samples, got {}",
            eps.len()
        )));
    }
    let n = eps.len();
    let band = PLOT_BAND_Z / (n as f64).sqrt();
    let pass_band = PASS_BAND_Z / (n as f64).sqrt();
    let u_sq = centered_square(u);
    let eps_sq = centered_square(eps);
    let lags: Vec<i32> = (-LAG_WINDOW..=LAG_WINDOW).collect();

    let series_for = |test: ValidityTest| -> (Vec<f64>, Vec<f64>) {
        match test {
            ValidityTest::ResidualAuto => (eps.to_vec(), eps.to_vec()),
            ValidityTest::InputResidual => (u.to_vec(), eps.to_vec()),
            ValidityTest::InputSqResidual => (u_sq.clone(), eps.to_vec()),
            ValidityTest::InputSqResidualSq => (u_sq.clone(), eps_sq.clone()),
            ValidityTest::ResidualSqInput => (eps_sq.clone(), u.to_vec()),
        }
    };

    let tests = ValidityTest::ALL
        .iter()
        .map(|&test| {
            let (a, b) = series_for(test);
            let values = cross_correlation(&a, &b, LAG_WINDOW);
            let pass = lags
                .iter()
                .zip(values.iter())
                .all(|(&tau, &v)| test.exempt(tau) || v.abs() <= pass_band);
            CorrelationTrace { test, values, pass }
        })
        .collect();

    Ok(CorrelationReport { n, lags, band, pass_band, tests })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn white(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let normal = Normal::new(0.0, 1.0).unwrap();
        (0..n).map(|_| normal.sample(rng)).collect()
    }

    fn prbs01(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| if rng.random::<f64>() < 0.5 { 0.0 } else { 1.0 }).collect()
    }

    #[test]
    fn autocorrelation_is_one_at_zero_and_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let eps = white(120, &mut rng);
        let u = prbs01(120, &mut rng);
        let report = validity_tests(&eps, &u).unwrap();
        let auto = report.trace(ValidityTest::ResidualAuto);
        let mid = LAG_WINDOW as usize;
        assert_eq!(auto.values[mid], 1.0);
        for d in 1..=LAG_WINDOW as usize {
            assert!((auto.values[mid + d] - auto.values[mid - d]).abs() < 1e-12);
        }
        for trace in &report.tests {
            assert!(trace.values.iter().all(|v| v.abs() <= 1.0 + 1e-12));
        }
    }

    #[test]
    fn band_shrinks_with_sample_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let small = validity_tests(&white(100, &mut rng), &prbs01(100, &mut rng)).unwrap();
        let large = validity_tests(&white(400, &mut rng), &prbs01(400, &mut rng)).unwrap();
        assert!((small.band / large.band - 2.0).abs() < 1e-12);
    }

    #[test]
    fn white_noise_passes_most_trials() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let trials = 60;
        let mut passes = 0;
        for _ in 0..trials {
            let eps = white(68, &mut rng);
            let u = prbs01(68, &mut rng);
            if validity_tests(&eps, &u).unwrap().all_pass() {
                passes += 1;
            }
        }
        assert!(passes * 100 >= trials * 90, "only {passes}/{trials} passed");
    }

    #[test]
    fn lagged_input_leak_fails_input_residual_test() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let u = prbs01(400, &mut rng);
        let eps: Vec<f64> = (0..400)
            .map(|k| if k == 0 { 0.0 } else { u[k - 1] })
            .collect();
        let report = validity_tests(&eps, &u).unwrap();
        let trace = report.trace(ValidityTest::InputResidual);
        assert!(!trace.pass);
        // the spike sits at tau = +1
        let idx = (LAG_WINDOW + 1) as usize;
        assert!(trace.values[idx].abs() > 0.9);
    }

    #[test]
    fn multiplicative_coupling_fails_squared_test() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = prbs01(600, &mut rng);
        let w = white(600, &mut rng);
        let eps: Vec<f64> = (0..600)
            .map(|k| if k == 0 { 0.0 } else { w[k] * u[k - 1] })
            .collect();
        let report = validity_tests(&eps, &u).unwrap();
        assert!(!report.trace(ValidityTest::InputSqResidualSq).pass);
    }

    #[test]
    fn constant_bias_appears_in_residual_mean() {
        use crate::narx::{generate_term_pool, PoolConfig, TermSpec};
        use std::sync::Arc;
        let pool = Arc::new(generate_term_pool(PoolConfig::new(1, 1, 1).unwrap()));
        // true system y = 3 exactly; model with constant 3 + bias 0.25
        let series = TimeSeries::new(vec![0.0; 50], vec![3.0; 50]).unwrap();
        let s = ModelStructure::from_terms_with_coefficients(
            Arc::clone(&pool),
            vec![(TermSpec::constant(), 3.25)],
        )
        .unwrap();
        let eps = residuals(&s, &series).unwrap();
        let mean = eps.iter().sum::<f64>() / eps.len() as f64;
        assert!((mean + 0.25).abs() < 1e-12);
    }

    #[test]
    fn perfect_model_gives_zero_residuals() {
        use crate::narx::{generate_term_pool, PoolConfig, TermSpec};
        use std::sync::Arc;
        let pool = Arc::new(generate_term_pool(PoolConfig::new(1, 1, 1).unwrap()));
        let u: Vec<f64> = (0..60).map(|k| ((k % 5) as f64) * 0.2).collect();
        let mut y = vec![0.3];
        for k in 1..60 {
            y.push(0.5 * y[k - 1] + 0.8 * u[k - 1]);
        }
        let series = TimeSeries::new(u, y).unwrap();
        let s = ModelStructure::from_terms_with_coefficients(
            Arc::clone(&pool),
            vec![
                (TermSpec::new(vec![1], vec![]), 0.5),
                (TermSpec::new(vec![], vec![1]), 0.8),
            ],
        )
        .unwrap();
        let eps = residuals(&s, &series).unwrap();
        assert!(eps.iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn short_series_rejected() {
        assert!(matches!(
            validity_tests(&[0.0; 39], &[0.0; 39]),
            Err(Error::SeriesTooShort(_))
        ));
    }

    #[test]
    fn residual_variance_matches_noise_level() {
        // the true model's one-step residuals are exactly the equation noise,
        // so their sample variance tracks sigma^2 at N = 68
        use crate::dataio::{gen_prbs, simulate_plant, PlantSpec, PrbsConfig};
        use crate::dataio::{reference_model, NoiseKind};
        let m3 = reference_model("M3").unwrap();
        let plant =
            PlantSpec::new(m3.structure.clone(), 0.05, NoiseKind::Equation, 24.0, (2.2, 2.5))
                .unwrap();
        let prbs = PrbsConfig {
            register_length: 7,
            low: 2.2,
            high: 2.5,
            hold: 1,
            length: 73,
            seed: 19,
        };
        let mut ratios = Vec::new();
        for seed in 0..30u64 {
            let u = gen_prbs(&prbs).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
            let y = simulate_plant(&plant, &u, &mut rng);
            let series = TimeSeries::new(u, y).unwrap();
            let eps = residuals(plant.structure(), &series).unwrap();
            assert_eq!(eps.len(), 68);
            let mean = eps.iter().sum::<f64>() / eps.len() as f64;
            let var = eps.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / eps.len() as f64;
            ratios.push(var / (0.05 * 0.05));
        }
        ratios.sort_by(f64::total_cmp);
        let median = ratios[15];
        assert!((0.7..=1.3).contains(&median), "median variance ratio {median}");
    }
}
