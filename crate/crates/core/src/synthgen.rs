//! Two-class simulator: two correlated factors, a ramp of linear effects,
//! three non-linear inputs and pure-noise columns, followed by
//! downsampling to a requested imbalance ratio.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureSchema};
use crate::error::{Error, Result};
use crate::seed;

/// Target token for label 0 in generated CSV files.
pub const MAJORITY_TOKEN: &str = "class1";
/// Target token for label 1 (the downsampled class).
pub const MINORITY_TOKEN: &str = "class2";

const FACTOR_COEF: [f64; 2] = [2.0, -2.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Rows drawn before downsampling.
    pub n_raw: usize,
    pub n_factors: usize,
    pub n_linear: usize,
    pub n_nonlinear: usize,
    pub n_noise: usize,
    pub factor_correlation: f64,
    pub target_ir: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_raw: 25_000,
            n_factors: 2,
            n_linear: 20,
            n_nonlinear: 3,
            n_noise: 20,
            factor_correlation: 0.65,
            target_ir: 6.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn p(&self) -> usize {
        self.n_factors + self.n_linear + self.n_nonlinear + self.n_noise
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_factors != 2 {
            return Err(Error::Config(format!(
                "exactly 2 factors are supported, got {}",
                self.n_factors
            )));
        }
        if self.n_nonlinear != 3 {
            return Err(Error::Config(format!(
                "exactly 3 non-linear inputs are supported, got {}",
                self.n_nonlinear
            )));
        }
        if !(self.factor_correlation > -1.0 && self.factor_correlation < 1.0) {
            return Err(Error::Config(format!(
                "factor_correlation must lie in (-1, 1), got {}",
                self.factor_correlation
            )));
        }
        if self.target_ir.is_nan() || self.target_ir < 1.0 {
            return Err(Error::Config(format!("target_ir must be >= 1, got {}", self.target_ir)));
        }
        if self.n_raw < 10 * self.p() {
            return Err(Error::Config(format!(
                "n_raw = {} is below 10 * p = {}",
                self.n_raw,
                10 * self.p()
            )));
        }
        Ok(())
    }

    /// Column names in generated order: `F*`, `L*`, `N*`, `Z*`.
    pub fn feature_names(&self) -> Vec<String> {
        [
            ("F", self.n_factors),
            ("L", self.n_linear),
            ("N", self.n_nonlinear),
            ("Z", self.n_noise),
        ]
        .into_iter()
        .flat_map(|(prefix, count)| (1..=count).map(move |k| format!("{prefix}{k}")))
        .collect()
    }

    /// Coefficient of the k-th linear term (1-based): alternating signs,
    /// magnitudes ramping from 2.5 down to 0.25.
    pub fn linear_coefficient(&self, k: usize) -> f64 {
        let span = (self.n_linear.max(2) - 1) as f64;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        sign * (2.5 - 2.25 * (k - 1) as f64 / span)
    }

    /// Indices of the pure-noise columns.
    pub fn noise_indices(&self) -> Vec<usize> {
        let start = self.n_factors + self.n_linear + self.n_nonlinear;
        (start..start + self.n_noise).collect()
    }

    /// Factor and linear columns ordered by decreasing absolute coefficient
    /// (ties keep generation order).
    pub fn signal_ranking(&self) -> Vec<usize> {
        let mut ranked: Vec<(usize, f64)> = FACTOR_COEF
            .iter()
            .enumerate()
            .map(|(j, c)| (j, c.abs()))
            .chain((1..=self.n_linear).map(|k| (self.n_factors + k - 1, self.linear_coefficient(k).abs())))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.into_iter().map(|(j, _)| j).collect()
    }
}

fn nonlinear_term(n1: f64, n2: f64, n3: f64) -> f64 {
    2.0 * (PI * n1 * n2).sin() + 4.0 * (n3 - 0.5).powi(2)
}

/// Rows and labels before downsampling.
pub fn simulate_raw(cfg: &SimConfig) -> Result<Dataset> {
    cfg.validate()?;
    let p = cfg.p();
    let n = cfg.n_raw;
    let mut rng = seed::rng(cfg.seed);
    let rho = cfg.factor_correlation;
    let rho_c = (1.0 - rho * rho).sqrt();
    let betas: Vec<f64> = (1..=cfg.n_linear).map(|k| cfg.linear_coefficient(k)).collect();

    let mut x = Vec::with_capacity(n * p);
    let mut eta = Vec::with_capacity(n);
    for _ in 0..n {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let f = [z1, rho * z1 + rho_c * z2];
        let mut lin = FACTOR_COEF[0] * f[0] + FACTOR_COEF[1] * f[1];
        x.extend_from_slice(&f);
        for beta in &betas {
            let v: f64 = rng.sample(StandardNormal);
            lin += beta * v;
            x.push(v);
        }
        let nl: [f64; 3] = [rng.random(), rng.random(), rng.random()];
        lin += nonlinear_term(nl[0], nl[1], nl[2]);
        x.extend_from_slice(&nl);
        for _ in 0..cfg.n_noise {
            x.push(rng.sample(StandardNormal));
        }
        eta.push(lin);
    }
    let intercept = -eta.iter().sum::<f64>() / n as f64;
    let y: Vec<u8> = eta
        .iter()
        .map(|e| {
            let prob = 1.0 / (1.0 + (-(e + intercept)).exp());
            u8::from(rng.random::<f64>() < prob)
        })
        .collect();
    if y.iter().all(|&l| l == y[0]) {
        return Err(Error::DegenerateLabels("simulation produced a single class".into()));
    }
    // Whichever class came out larger becomes label 0.
    let ones = y.iter().filter(|&&l| l == 1).count();
    let y = if ones * 2 > n { y.into_iter().map(|l| 1 - l).collect() } else { y };
    let schema = FeatureSchema::numeric(cfg.feature_names(), "y", MAJORITY_TOKEN, MINORITY_TOKEN);
    Dataset::new(x, y, schema)
}

/// Simulate and downsample to `cfg.target_ir`.
pub fn simulate_two_class(cfg: &SimConfig) -> Result<Dataset> {
    let raw = simulate_raw(cfg)?;
    raw.downsample_to_ir(cfg.target_ir, seed::derive(cfg.seed, 0xD0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (x, y) in a.iter().zip(b) {
            sab += (x - ma) * (y - mb);
            saa += (x - ma).powi(2);
            sbb += (y - mb).powi(2);
        }
        sab / (saa * sbb).sqrt()
    }

    #[test]
    fn default_shape_and_ratio() {
        let d = simulate_two_class(&SimConfig::with_seed(1)).unwrap();
        assert_eq!(d.p(), 45);
        let ir = d.stats().ir;
        assert!((5.5..=6.5).contains(&ir), "ir = {ir}");
        assert_eq!(d.feature_names()[0], "F1");
        assert_eq!(d.feature_names()[44], "Z20");
    }

    #[test]
    fn unit_ratio_keeps_near_balance() {
        let cfg = SimConfig {
            target_ir: 1.0,
            n_raw: 5000,
            ..SimConfig::with_seed(2)
        };
        let d = simulate_two_class(&cfg).unwrap();
        let ir = d.stats().ir;
        assert!((0.9..=1.1).contains(&ir), "ir = {ir}");
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = SimConfig {
            n_raw: 2000,
            ..SimConfig::with_seed(7)
        };
        assert_eq!(simulate_two_class(&cfg).unwrap(), simulate_two_class(&cfg).unwrap());
        let other = SimConfig { seed: 8, ..cfg.clone() };
        assert_ne!(simulate_two_class(&cfg).unwrap(), simulate_two_class(&other).unwrap());
    }

    #[test]
    fn raw_properties_at_full_size() {
        let cfg = SimConfig::with_seed(3);
        let d = simulate_raw(&cfg).unwrap();
        let n = d.n() as f64;
        assert!((0.4..=0.6).contains(&(d.stats().c1 as f64 / n)));
        assert!((0.4..=0.6).contains(&(d.stats().c0 as f64 / n)));
        let r = corr(d.column(0), d.column(1));
        assert!((r - 0.65).abs() < 0.05, "factor correlation {r}");
        let y: Vec<f64> = d.labels().iter().map(|&l| l as f64).collect();
        let bound = 4.0 / n.sqrt();
        for j in cfg.noise_indices() {
            let c = corr(d.column(j), &y).abs();
            assert!(c < bound, "noise column {j}: |corr| = {c}");
        }
        // Sanity: the strongest linear term is visibly associated with y.
        assert!(corr(d.column(2), &y).abs() > 0.1);
    }

    #[test]
    fn coefficient_ramp_and_ranking() {
        let cfg = SimConfig::default();
        assert_eq!(cfg.linear_coefficient(1), 2.5);
        assert_eq!(cfg.linear_coefficient(2), -(2.5 - 2.25 / 19.0));
        assert!((cfg.linear_coefficient(20) + 0.25).abs() < 1e-12);
        let top: Vec<String> = cfg.signal_ranking()[..10]
            .iter()
            .map(|&j| cfg.feature_names()[j].clone())
            .collect();
        assert_eq!(top, ["L1", "L2", "L3", "L4", "L5", "F1", "F2", "L6", "L7", "L8"]);
    }

    #[test]
    fn invalid_configs() {
        let small = SimConfig { n_raw: 100, ..SimConfig::default() };
        assert!(matches!(simulate_two_class(&small), Err(Error::Config(_))));
        let rho = SimConfig { factor_correlation: 1.0, ..SimConfig::default() };
        assert!(matches!(simulate_two_class(&rho), Err(Error::Config(_))));
    }
}
