//! Synthetic data generation, dataset splitting, CSV formats and the
//! published reference-model fixtures.
//!
//! The measured buck dataset behind the original study is not published, so
//! the default fixture excites a known plant (the published model M3) with a
//! PRBS input and adds Gaussian measurement noise. Structure recovery against
//! that ground truth is what the acceptance suite checks.

use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{DatasetBundle, ModelStructure, StaticPoint, TimeSeries};
use crate::narx::{
    buck_static_reference, generate_term_pool, prune_pool, static_polynomial, PoolConfig,
    StaticPolynomial, TermPool, TermSpec,
};

/// PRBS excitation parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrbsConfig {
    /// Shift-register length in bits (4..=24).
    pub register_length: u32,
    pub low: f64,
    pub high: f64,
    /// Samples each bit is held for.
    pub hold: usize,
    /// Total samples generated.
    pub length: usize,
    /// Nonzero initial register state.
    pub seed: u32,
}

impl PrbsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(4..=24).contains(&self.register_length) {
            return Err(Error::InvalidConfig(format!(
                "register length {} outside [4, 24]",
                self.register_length
            )));
        }
        if self.low > self.high {
            return Err(Error::InvalidConfig("low level above high level".into()));
        }
        if self.hold == 0 || self.length == 0 {
            return Err(Error::InvalidConfig("hold and length must be >= 1".into()));
        }
        if self.seed & mask(self.register_length) == 0 {
            return Err(Error::InvalidConfig("seed register state must be nonzero".into()));
        }
        Ok(())
    }
}

fn mask(bits: u32) -> u32 {
    if bits >= 32 {
        u32::MAX
    } else {
        (1u32 << bits) - 1
    }
}

/// Maximal-length feedback taps (XOR form) per register length.
fn taps(register_length: u32) -> &'static [u32] {
    match register_length {
        4 => &[4, 3],
        5 => &[5, 3],
        6 => &[6, 5],
        7 => &[7, 6],
        8 => &[8, 6, 5, 4],
        9 => &[9, 5],
        10 => &[10, 7],
        11 => &[11, 9],
        12 => &[12, 6, 4, 1],
        13 => &[13, 4, 3, 1],
        14 => &[14, 5, 3, 1],
        15 => &[15, 14],
        16 => &[16, 15, 13, 4],
        17 => &[17, 14],
        18 => &[18, 11],
        19 => &[19, 6, 2, 1],
        20 => &[20, 17],
        21 => &[21, 19],
        22 => &[22, 21],
        23 => &[23, 18],
        24 => &[24, 23, 22, 17],
        _ => unreachable!("register length validated to [4, 24]"),
    }
}

/// Fibonacci LFSR over the configured maximal-length taps.
#[derive(Debug, Clone)]
pub struct Lfsr {
    state: u32,
    register_length: u32,
}

impl Lfsr {
    pub fn new(register_length: u32, seed: u32) -> Result<Self> {
        if !(4..=24).contains(&register_length) {
            return Err(Error::InvalidConfig(format!(
                "register length {register_length} outside [4, 24]"
            )));
        }
        let state = seed & mask(register_length);
        if state == 0 {
            return Err(Error::InvalidConfig("seed register state must be nonzero".into()));
        }
        Ok(Self { state, register_length })
    }

    pub fn state(&self) -> u32 {
        self.state
    }

    /// Advance one step; returns the bit shifted out.
    pub fn next_bit(&mut self) -> bool {
        let mut feedback = 0u32;
        for &tap in taps(self.register_length) {
            feedback ^= (self.state >> (tap - 1)) & 1;
        }
        let out = (self.state >> (self.register_length - 1)) & 1 == 1;
        self.state = ((self.state << 1) | feedback) & mask(self.register_length);
        out
    }
}

/// Generate a PRBS voltage sequence: a maximal-length bit sequence mapped to
/// `{low, high}`, each bit held for `hold` samples.
pub fn gen_prbs(config: &PrbsConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let mut lfsr = Lfsr::new(config.register_length, config.seed)?;
    let mut out = Vec::with_capacity(config.length);
    'outer: loop {
        let level = if lfsr.next_bit() { config.high } else { config.low };
        for _ in 0..config.hold {
            out.push(level);
            if out.len() == config.length {
                break 'outer;
            }
        }
    }
    Ok(out)
}

/// Where the simulated plant's Gaussian noise enters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// Noise inside the difference equation (the NARX model's own error
    /// term); the noisy output feeds back into later samples and the true
    /// structure's one-step residuals are white.
    Equation,
    /// Measurement noise added to the simulated output after the fact.
    Output,
}

/// A known true system: an estimated structure plus noise level/kind and the
/// supply voltage of the static reference.
#[derive(Debug, Clone)]
pub struct PlantSpec {
    structure: ModelStructure,
    noise_std: f64,
    noise_kind: NoiseKind,
    v_d: f64,
    input_range: (f64, f64),
}

const PROBE_STEPS: usize = 2000;

impl PlantSpec {
    /// Validates that the structure has a closed-form static curve and is
    /// free-run stable on the excitation range (2000-step probes at constant
    /// and alternating inputs).
    pub fn new(
        structure: ModelStructure,
        noise_std: f64,
        noise_kind: NoiseKind,
        v_d: f64,
        input_range: (f64, f64),
    ) -> Result<Self> {
        if !structure.is_estimated() {
            return Err(Error::InvalidConfig("plant structure needs coefficients".into()));
        }
        if noise_std < 0.0 || !noise_std.is_finite() {
            return Err(Error::InvalidConfig("noise std must be finite and >= 0".into()));
        }
        if input_range.0 > input_range.1 {
            return Err(Error::InvalidConfig("input range reversed".into()));
        }
        let poly = static_polynomial(&structure)?;
        let plant = Self { structure, noise_std, noise_kind, v_d, input_range };
        plant.probe(&poly)?;
        Ok(plant)
    }

    fn probe(&self, poly: &StaticPolynomial) -> Result<()> {
        let (lo, hi) = self.input_range;
        let mid = 0.5 * (lo + hi);
        for (start, u_bar) in [(hi, lo), (lo, mid), (lo, hi)] {
            // start away from the fixed point so the transient is exercised
            let mut u = vec![start; 200];
            u.extend(std::iter::repeat_n(u_bar, PROBE_STEPS));
            let y = self.run_noiseless(&u);
            let target = poly.eval(u_bar);
            let last = *y.last().expect("probe produces samples");
            if !last.is_finite() || (last - target).abs() > 1e-6 {
                return Err(Error::PlantUnstable(format!(
                    "constant input {u_bar} settles at {last}, static value {target}"
                )));
            }
        }
        // alternating excitation must stay bounded
        let u: Vec<f64> = (0..PROBE_STEPS)
            .map(|k| if (k / 25) % 2 == 0 { lo } else { hi })
            .collect();
        let bound = 100.0 * (poly.eval(lo).abs() + poly.eval(hi).abs() + 1.0);
        let y = self.run_noiseless(&u);
        if y.iter().any(|v| !v.is_finite() || v.abs() > bound) {
            return Err(Error::PlantUnstable(
                "alternating excitation diverges".into(),
            ));
        }
        Ok(())
    }

    fn run_noiseless(&self, u: &[f64]) -> Vec<f64> {
        let theta = self.structure.coefficients().expect("validated at construction");
        let terms: Vec<&TermSpec> = self.structure.terms().collect();
        let max_lag = self.structure.pool().config().max_lag();
        let poly = static_polynomial(&self.structure).expect("validated at construction");
        let init = poly.eval(u[0]);
        let mut y = Vec::with_capacity(u.len());
        for k in 0..u.len() {
            if k < max_lag {
                y.push(init);
            } else {
                let v: f64 = terms
                    .iter()
                    .zip(theta.iter())
                    .map(|(t, &c)| c * t.eval(&y, u, k))
                    .sum();
                y.push(v);
            }
        }
        y
    }

    pub fn structure(&self) -> &ModelStructure {
        &self.structure
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn noise_kind(&self) -> NoiseKind {
        self.noise_kind
    }

    pub fn v_d(&self) -> f64 {
        self.v_d
    }

    pub fn input_range(&self) -> (f64, f64) {
        self.input_range
    }

    pub fn static_polynomial(&self) -> StaticPolynomial {
        static_polynomial(&self.structure).expect("validated at construction")
    }

    /// The default synthetic stand-in for the unpublished measured dataset:
    /// the published model M3 as the true system with 0.05 V equation-error
    /// noise, 24 V supply, excited over 2.2..2.5 V.
    pub fn default_buck() -> Self {
        let m3 = reference_model("M3").expect("M3 fixture ships with the crate");
        Self::new(m3.structure, 0.05, NoiseKind::Equation, 24.0, (2.2, 2.5))
            .expect("published model is stable on its excitation range")
    }
}

/// Free-run the plant over an input sequence with i.i.d. Gaussian noise
/// applied per the plant's noise kind. Initial conditions are the plant's
/// static value at `u[0]`. With zero noise the result is bit-for-bit
/// reproducible and the RNG is untouched.
pub fn simulate_plant<R: Rng>(plant: &PlantSpec, u: &[f64], rng: &mut R) -> Vec<f64> {
    if plant.noise_std() == 0.0 {
        return plant.run_noiseless(u);
    }
    let normal = Normal::new(0.0, plant.noise_std()).expect("validated noise std");
    match plant.noise_kind() {
        NoiseKind::Output => {
            let mut y = plant.run_noiseless(u);
            for v in &mut y {
                *v += normal.sample(rng);
            }
            y
        }
        NoiseKind::Equation => {
            let theta = plant.structure.coefficients().expect("validated");
            let terms: Vec<&TermSpec> = plant.structure.terms().collect();
            let max_lag = plant.structure.pool().config().max_lag();
            let init = plant.static_polynomial().eval(u[0]);
            let mut y = Vec::with_capacity(u.len());
            for k in 0..u.len() {
                let clean = if k < max_lag {
                    init
                } else {
                    terms
                        .iter()
                        .zip(theta.iter())
                        .map(|(t, &c)| c * t.eval(&y, u, k))
                        .sum()
                };
                y.push(clean + normal.sample(rng));
            }
            y
        }
    }
}

/// Keep every `factor`-th sample, starting at the first.
pub fn decimate(series: &[f64], factor: usize) -> Result<Vec<f64>> {
    if factor == 0 {
        return Err(Error::InvalidConfig("decimation factor must be >= 1".into()));
    }
    Ok(series.iter().step_by(factor).copied().collect())
}

/// Split raw series into a contiguous estimation prefix and validation
/// suffix, attaching the static reference curve.
pub fn split(
    u: &[f64],
    y: &[f64],
    n_est: usize,
    max_lag: usize,
    static_curve: Vec<StaticPoint>,
) -> Result<DatasetBundle> {
    if u.len() != y.len() {
        return Err(Error::InvalidConfig("input/output length mismatch".into()));
    }
    if n_est >= u.len() {
        return Err(Error::SplitTooSmall(format!(
            "estimation prefix {} leaves no validation data in {} samples",
            n_est,
            u.len()
        )));
    }
    let estimation = TimeSeries::new(u[..n_est].to_vec(), y[..n_est].to_vec())?;
    let validation = TimeSeries::new(u[n_est..].to_vec(), y[n_est..].to_vec())?;
    DatasetBundle::new(estimation, validation, static_curve, max_lag)
}

/// Evenly spaced static grid sampled from an arbitrary reference function.
pub fn static_grid(min: f64, max: f64, count: usize, f: impl Fn(f64) -> f64) -> Vec<StaticPoint> {
    assert!(count >= 2, "grid needs at least two points");
    (0..count)
        .map(|i| {
            let u_bar = min + (max - min) * i as f64 / (count - 1) as f64;
            StaticPoint { u_bar, y_bar: f(u_bar) }
        })
        .collect()
}

/// The buck reference line sampled on an even grid.
pub fn buck_static_grid(min: f64, max: f64, count: usize, v_d: f64) -> Vec<StaticPoint> {
    static_grid(min, max, count, |u_bar| buck_static_reference(u_bar, v_d))
}

/// Uniform actuation dither added on top of the two PRBS levels in the
/// default fixture. A purely two-level input leaves the cubic input terms
/// heavily collinear, letting wrong structures mimic the true dynamics; the
/// dither restores identifiability the way measurement noise on a real
/// control voltage does.
pub const DEFAULT_INPUT_DITHER: f64 = 0.08;

/// The default synthetic identification bundle: PRBS-excited noisy M3 plant
/// with actuation dither, 500 samples split 300/200, static reference on the
/// 61-point [1, 4] V grid.
///
/// The record is longer than the original 168-point capture; with
/// equation-error noise at 0.05 V the shorter record leaves the cubic input
/// structure under-determined.
pub fn default_synthetic_bundle(
    plant: &PlantSpec,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>, DatasetBundle)> {
    let (low, high) = plant.input_range();
    let prbs = PrbsConfig {
        register_length: 9,
        low,
        high,
        hold: 1,
        length: 500,
        seed: 0b1_0101_1001,
    };
    let mut u = gen_prbs(&prbs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in &mut u {
        *v += DEFAULT_INPUT_DITHER * (2.0 * rng.random::<f64>() - 1.0);
    }
    let y = simulate_plant(plant, &u, &mut rng);
    let curve = buck_static_grid(1.0, 4.0, 61, plant.v_d());
    let max_lag = plant.structure().pool().config().max_lag();
    let bundle = split(&u, &y, 300, max_lag, curve)?;
    Ok((u, y, bundle))
}

// ---------------------------------------------------------------------------
// CSV formats
// ---------------------------------------------------------------------------

/// Write `# key=value` provenance comments followed by a CSV body.
fn open_csv(path: &Path, comments: &[(&str, String)]) -> Result<csv::Writer<std::fs::File>> {
    let mut file = std::fs::File::create(path)?;
    for (key, value) in comments {
        writeln!(file, "# {key}={value}")?;
    }
    Ok(csv::WriterBuilder::new().from_writer(file))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    Ok(csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(std::fs::File::open(path)?))
}

/// Dynamic record CSV: header `k,u,y`, one row per sample, `k` starting at 1.
pub fn write_dynamic_csv(
    path: &Path,
    series: &TimeSeries,
    comments: &[(&str, String)],
) -> Result<()> {
    let mut w = open_csv(path, comments)?;
    w.write_record(["k", "u", "y"])?;
    for (k, (u, y)) in series.u.iter().zip(series.y.iter()).enumerate() {
        w.write_record([(k + 1).to_string(), u.to_string(), y.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dynamic_csv(path: &Path) -> Result<TimeSeries> {
    let mut r = csv_reader(path)?;
    let mut u = Vec::new();
    let mut y = Vec::new();
    for record in r.records() {
        let record = record?;
        if record.len() != 3 {
            return Err(Error::Parse(format!(
                "expected 3 columns `k,u,y`, got {}",
                record.len()
            )));
        }
        u.push(parse_f64(&record[1])?);
        y.push(parse_f64(&record[2])?);
    }
    TimeSeries::new(u, y)
}

/// Static curve CSV: header `u_bar,y_bar`.
pub fn write_static_csv(
    path: &Path,
    curve: &[StaticPoint],
    comments: &[(&str, String)],
) -> Result<()> {
    let mut w = open_csv(path, comments)?;
    w.write_record(["u_bar", "y_bar"])?;
    for p in curve {
        w.write_record([p.u_bar.to_string(), p.y_bar.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_static_csv(path: &Path) -> Result<Vec<StaticPoint>> {
    let mut r = csv_reader(path)?;
    let mut curve = Vec::new();
    for record in r.records() {
        let record = record?;
        if record.len() != 2 {
            return Err(Error::Parse(format!(
                "expected 2 columns `u_bar,y_bar`, got {}",
                record.len()
            )));
        }
        curve.push(StaticPoint {
            u_bar: parse_f64(&record[0])?,
            y_bar: parse_f64(&record[1])?,
        });
    }
    Ok(curve)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("bad float {s:?}: {e}")))
}

// ---------------------------------------------------------------------------
// Reference-model fixtures
// ---------------------------------------------------------------------------

/// One published model with its printed coefficients, resolved against the
/// pruned (5, 5, 3) candidate pool.
#[derive(Debug, Clone)]
pub struct ReferenceModel {
    pub name: String,
    pub structure: ModelStructure,
    /// Published static coefficients `a_0..a_3`, where the source printed
    /// them.
    pub static_coefficients: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
struct FixtureDoc {
    name: String,
    config: PoolConfig,
    terms: Vec<TermSpec>,
    coefficients: Vec<f64>,
    #[serde(default)]
    static_coefficients: Option<Vec<f64>>,
}

const FIXTURES: [&str; 6] = [
    include_str!("../fixtures/m1.json"),
    include_str!("../fixtures/m2.json"),
    include_str!("../fixtures/m3.json"),
    include_str!("../fixtures/m4.json"),
    include_str!("../fixtures/ofr.json"),
    include_str!("../fixtures/ofr_ea.json"),
];

/// The shared candidate pool every fixture lives in: pruned (5, 5, 3).
pub fn reference_pool() -> Arc<TermPool> {
    Arc::new(prune_pool(&generate_term_pool(
        PoolConfig::new(5, 5, 3).expect("valid fixture pool"),
    )))
}

/// All bundled reference models: M1, M2, M3, M4, OFR and OFR-EA.
pub fn reference_models() -> Vec<ReferenceModel> {
    let pool = reference_pool();
    FIXTURES
        .iter()
        .map(|json| {
            let doc: FixtureDoc =
                serde_json::from_str(json).expect("bundled fixture parses");
            assert_eq!(doc.config, *pool.config(), "fixture pool mismatch");
            let pairs = doc.terms.into_iter().zip(doc.coefficients).collect();
            let structure =
                ModelStructure::from_terms_with_coefficients(Arc::clone(&pool), pairs)
                    .expect("bundled fixture terms are in the pruned pool");
            ReferenceModel {
                name: doc.name,
                structure,
                static_coefficients: doc.static_coefficients,
            }
        })
        .collect()
}

/// Look up one bundled reference model by name (`M1`, `M2`, `M3`, `M4`,
/// `OFR`, `OFR-EA`).
pub fn reference_model(name: &str) -> Option<ReferenceModel> {
    reference_models().into_iter().find(|m| m.name == name)
}
