//! Correlated demand `ξ_{T+1} = β ξ_T + σ² χ²₁` and the log-density fit that turns a sample path
//! into an [`EmpiricalDemand`].

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::demand_models::{EmpiricalDemand, LogPolynomial};
use crate::error::{PoaError, Result};
use crate::exec::{map_range, Execution};

/// Smallest sample a density fit accepts.
pub const MIN_FIT_SAMPLES: usize = 10_000;
/// Largest tolerated fraction of empty histogram bins.
pub const MAX_EMPTY_FRACTION: f64 = 0.5;
/// Batches used for the standard errors of [`series_stats`].
pub const STAT_BATCHES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArConfig {
    pub beta: f64,
    pub sigma2: f64,
    pub n_samples: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub n_bins: usize,
    pub fit_degrees: Vec<usize>,
    /// Independent chains, each burned in separately; their samples are pooled.
    pub n_chains: usize,
}

impl Default for ArConfig {
    fn default() -> Self {
        Self {
            beta: 0.9,
            sigma2: 100.0,
            n_samples: 1_000_000,
            burn_in: 1_000,
            seed: 20_240_601,
            n_bins: 128,
            fit_degrees: vec![2, 3, 4, 5, 6],
            n_chains: 16,
        }
    }
}

impl ArConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta) {
            return Err(PoaError::InvalidParameter(format!("beta {} must lie in [0, 1)", self.beta)));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(PoaError::InvalidParameter(format!("sigma2 {} must be positive", self.sigma2)));
        }
        if self.n_samples == 0 || self.n_chains == 0 {
            return Err(PoaError::InvalidParameter("n_samples and n_chains must be positive".into()));
        }
        if self.fit_degrees.is_empty() {
            return Err(PoaError::InvalidParameter("fit_degrees is empty".into()));
        }
        Ok(())
    }

    pub fn stationary_mean(&self) -> f64 {
        stationary_cumulant(1, self.beta, self.sigma2)
    }

    pub fn stationary_variance(&self) -> f64 {
        stationary_cumulant(2, self.beta, self.sigma2)
    }
}

/// `n`-th cumulant of the stationary law, `2^{n-1}(n-1)! σ^{2n} / (1 - βⁿ)`.
pub fn stationary_cumulant(n: u32, beta: f64, sigma2: f64) -> f64 {
    let factorial: f64 = (1..n).map(f64::from).product();
    2f64.powi(n as i32 - 1) * factorial * sigma2.powi(n as i32) / (1.0 - beta.powi(n as i32))
}

/// Cumulant generating function `-½ Σ_{j≥0} ln(1 - 2θσ²βʲ)` of the stationary law, truncated
/// at `terms`; requires `θ < 1/(2σ²)`.
pub fn stationary_cgf(theta: f64, beta: f64, sigma2: f64, terms: usize) -> f64 {
    (0..terms)
        .map(|j| -0.5 * (-2.0 * theta * sigma2 * beta.powi(j as i32)).ln_1p())
        .sum()
}

/// `n`-th cumulant from term-by-term differentiation of [`stationary_cgf`] at zero.
pub fn cumulant_from_cgf_series(n: u32, beta: f64, sigma2: f64, terms: usize) -> f64 {
    let factorial: f64 = (1..n).map(f64::from).product();
    (0..terms)
        .map(|j| 2f64.powi(n as i32 - 1) * factorial * (sigma2 * beta.powi(j as i32)).powi(n as i32))
        .sum()
}

/// Pooled post-burn-in samples of `n_chains` independent chains, each started at the stationary
/// mean. Chain `c` draws from the ChaCha8 stream `c` of `seed`, so output does not depend on
/// scheduling.
pub fn generate_series(config: &ArConfig, exec: Execution) -> Result<Vec<f64>> {
    config.validate()?;
    let chains = config.n_chains.min(config.n_samples);
    let base = config.n_samples / chains;
    let extra = config.n_samples % chains;
    let start = config.stationary_mean();
    let runs = map_range(exec, chains, |c| {
        let len = base + usize::from(c < extra);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(c as u64);
        let mut x = start;
        let mut step = |rng: &mut ChaCha8Rng| {
            let z: f64 = rng.sample(StandardNormal);
            x = config.beta * x + config.sigma2 * z * z;
            x
        };
        for _ in 0..config.burn_in {
            step(&mut rng);
        }
        (0..len).map(|_| step(&mut rng)).collect::<Vec<f64>>()
    });
    Ok(runs.concat())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesStats {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    /// Batch-means standard errors, robust to the serial correlation of the path.
    pub mean_se: f64,
    pub variance_se: f64,
    pub min: f64,
    pub max: f64,
}

/// Moments with batch-means standard errors over [`STAT_BATCHES`] contiguous batches.
pub fn series_stats(samples: &[f64]) -> Result<SeriesStats> {
    let n = samples.len();
    if n < 2 * STAT_BATCHES {
        return Err(PoaError::InsufficientData {
            available: n,
            required: 2 * STAT_BATCHES,
        });
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let variance = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let size = n / STAT_BATCHES;
    let (mut batch_means, mut batch_vars) = (Vec::new(), Vec::new());
    for b in samples.chunks_exact(size).take(STAT_BATCHES) {
        batch_means.push(b.iter().sum::<f64>() / size as f64);
        batch_vars.push(b.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / size as f64);
    }
    let se = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let s2 = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        (s2 / v.len() as f64).sqrt()
    };
    let (min, max) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    Ok(SeriesStats {
        n,
        mean,
        variance,
        mean_se: se(&batch_means),
        variance_se: se(&batch_vars),
        min,
        max,
    })
}

/// Empirical `q`-quantile (nearest rank).
pub fn sample_quantile(samples: &[f64], q: f64) -> f64 {
    let mut v = samples.to_vec();
    let idx = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
    *v.select_nth_unstable_by(idx, f64::total_cmp).1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityFit {
    /// Coefficients in the standardized coordinate `z = (log ξ - center)/half_width`.
    pub coefficients: Vec<f64>,
    /// The same polynomial in powers of `log ξ`.
    pub raw_coefficients: Vec<f64>,
    pub center: f64,
    pub half_width: f64,
    pub chosen_degree: usize,
    pub loo_cv_error: f64,
    pub cv_by_degree: Vec<(usize, f64)>,
    pub bin_edges: Vec<f64>,
    pub bin_counts: Vec<u64>,
    /// `∫ exp(poly(log ξ)) dξ` over the support; the density is `exp(poly)/normalization`.
    pub normalization: f64,
    pub support: (f64, f64),
    pub n_samples: usize,
}

impl DensityFit {
    pub fn log_polynomial(&self) -> LogPolynomial {
        LogPolynomial {
            center: self.center,
            half_width: self.half_width,
            coefficients: self.coefficients.clone(),
        }
    }

    /// Normalized fitted log-density at `ξ`.
    pub fn fitted_log_density(&self, xi: f64) -> f64 {
        self.log_polynomial().eval_log(xi.ln()) - self.normalization.ln()
    }
}

struct LeastSquares {
    coefficients: Vec<f64>,
    loo_cv: f64,
}

/// Least squares by thin QR; LOO CV error is `mean((eᵢ/(1-hᵢ))²)` with `hᵢ = ‖Q_{i·}‖²`.
fn fit_polynomial(z: &[f64], y: &[f64], degree: usize) -> Option<LeastSquares> {
    let m = z.len();
    let p = degree + 1;
    if m <= p {
        return None;
    }
    let a = DMatrix::from_fn(m, p, |i, j| z[i].powi(j as i32));
    let b = DVector::from_column_slice(y);
    let qr = a.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let qtb = q.transpose() * &b;
    let coef = r.solve_upper_triangular(&qtb)?;
    let resid = &b - &a * &coef;
    let mut cv = 0.0;
    for i in 0..m {
        let h = q.row(i).norm_squared();
        if h >= 1.0 - 1e-12 {
            return None;
        }
        cv += (resid[i] / (1.0 - h)).powi(2);
    }
    Some(LeastSquares {
        coefficients: coef.iter().copied().collect(),
        loo_cv: cv / m as f64,
    })
}

/// Log-spaced histogram over `[min, max]`, least-squares fit of `log(count density)` against the
/// log bin centre for each candidate degree, degree chosen by leave-one-out CV, then normalized.
pub fn fit_log_density(samples: &[f64], config: &ArConfig) -> Result<DensityFit> {
    let n = samples.len();
    if n < MIN_FIT_SAMPLES {
        return Err(PoaError::InsufficientData {
            available: n,
            required: MIN_FIT_SAMPLES,
        });
    }
    let max_degree = config.fit_degrees.iter().copied().max().unwrap_or(0);
    if config.fit_degrees.is_empty() || config.n_bins < 2 * (max_degree + 1) {
        return Err(PoaError::InvalidParameter(format!(
            "{} bins cannot support degrees {:?}",
            config.n_bins, config.fit_degrees
        )));
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(PoaError::InvalidParameter(format!("samples must be positive and not all equal, range [{lo}, {hi}]")));
    }
    let (log_lo, log_hi) = (lo.ln(), hi.ln());
    let bins = config.n_bins;
    let step = (log_hi - log_lo) / bins as f64;
    let mut bin_edges: Vec<f64> = (0..=bins).map(|i| (log_lo + step * i as f64).exp()).collect();
    bin_edges[0] = lo;
    bin_edges[bins] = hi;
    let mut bin_counts = vec![0u64; bins];
    for &x in samples {
        let i = (((x.ln() - log_lo) / step) as usize).min(bins - 1);
        bin_counts[i] += 1;
    }
    let empty = bin_counts.iter().filter(|&&c| c == 0).count();
    if empty as f64 > MAX_EMPTY_FRACTION * bins as f64 {
        return Err(PoaError::EmptyBins { empty, total: bins });
    }

    let center = 0.5 * (log_lo + log_hi);
    let half_width = 0.5 * (log_hi - log_lo);
    let (mut z, mut y) = (Vec::new(), Vec::new());
    for i in 0..bins {
        if bin_counts[i] == 0 {
            continue;
        }
        let width = bin_edges[i + 1] - bin_edges[i];
        let log_center = log_lo + step * (i as f64 + 0.5);
        z.push((log_center - center) / half_width);
        y.push((bin_counts[i] as f64 / (n as f64 * width)).ln());
    }

    let mut degrees = config.fit_degrees.clone();
    degrees.sort_unstable();
    degrees.dedup();
    let mut cv_by_degree = Vec::new();
    let mut best: Option<(usize, LeastSquares)> = None;
    for &d in &degrees {
        let Some(fit) = fit_polynomial(&z, &y, d) else { continue };
        cv_by_degree.push((d, fit.loo_cv));
        if best.as_ref().is_none_or(|(_, b)| fit.loo_cv < b.loo_cv) {
            best = Some((d, fit));
        }
    }
    let (chosen_degree, fit) = best.ok_or(PoaError::InsufficientData {
        available: z.len(),
        required: degrees[0] + 2,
    })?;
    let poly = LogPolynomial {
        center,
        half_width,
        coefficients: fit.coefficients,
    };
    let normalization = EmpiricalDemand::new(poly.clone(), lo, hi)?.normalization();
    Ok(DensityFit {
        raw_coefficients: poly.raw_coefficients(),
        coefficients: poly.coefficients,
        center,
        half_width,
        chosen_degree,
        loo_cv_error: fit.loo_cv,
        cv_by_degree,
        bin_edges,
        bin_counts,
        normalization,
        support: (lo, hi),
        n_samples: n,
    })
}

/// The demand model of a fit, supported on the sample range.
pub fn build_empirical_model(fit: &DensityFit) -> Result<EmpiricalDemand> {
    EmpiricalDemand::new(fit.log_polynomial(), fit.support.0, fit.support.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramRow {
    pub bin_center: f64,
    pub count: u64,
    /// `-inf` for empty bins.
    pub log_density: f64,
    pub fitted_log_density: f64,
}

/// Per-bin observed and fitted log-densities at the geometric bin centres.
pub fn histogram_rows(fit: &DensityFit) -> Vec<HistogramRow> {
    let n = fit.n_samples as f64;
    fit.bin_counts
        .iter()
        .enumerate()
        .map(|(i, &count)| {
            let (a, b) = (fit.bin_edges[i], fit.bin_edges[i + 1]);
            let bin_center = (a * b).sqrt();
            HistogramRow {
                bin_center,
                count,
                log_density: (count as f64 / (n * (b - a))).ln(),
                fitted_log_density: fit.fitted_log_density(bin_center),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand_models::DemandModel;
    use approx::assert_relative_eq;

    fn small(beta: f64, sigma2: f64, n: usize) -> ArConfig {
        ArConfig {
            beta,
            sigma2,
            n_samples: n,
            seed: 7,
            ..ArConfig::default()
        }
    }

    #[test]
    fn stationary_cumulants() {
        let c = ArConfig::default();
        assert_relative_eq!(c.stationary_mean(), 1000.0, max_relative = 1e-12);
        assert_relative_eq!(c.stationary_variance(), 2e4 / 0.19, max_relative = 1e-12);
        for n in 1..5 {
            assert_relative_eq!(
                cumulant_from_cgf_series(n, 0.9, 100.0, 2000),
                stationary_cumulant(n, 0.9, 100.0),
                max_relative = 1e-12
            );
        }
        // First derivative of the CGF at 0 by central difference.
        let h = 1e-9;
        let d = (stationary_cgf(h, 0.9, 100.0, 2000) - stationary_cgf(-h, 0.9, 100.0, 2000)) / (2.0 * h);
        assert_relative_eq!(d, 1000.0, max_relative = 1e-5);
    }

    #[test]
    fn iid_chi_square_mean() {
        let n = 200_000;
        let xs = generate_series(&small(0.0, 1.0, n), Execution::Parallel).unwrap();
        assert_eq!(xs.len(), n);
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn series_is_deterministic_across_execution_modes() {
        let c = small(0.9, 100.0, 50_001);
        let a = generate_series(&c, Execution::Parallel).unwrap();
        let b = generate_series(&c, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 50_001);
        let other = generate_series(&ArConfig { seed: 8, ..c }, Execution::Sequential).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(generate_series(&small(1.0, 1.0, 10), Execution::Sequential).is_err());
        assert!(generate_series(&small(0.5, 0.0, 10), Execution::Sequential).is_err());
    }

    #[test]
    fn fit_requires_enough_data() {
        let c = small(0.0, 1.0, 100);
        let xs = generate_series(&c, Execution::Sequential).unwrap();
        assert!(matches!(fit_log_density(&xs, &c), Err(PoaError::InsufficientData { .. })));
    }

    #[test]
    fn fit_detects_sparse_histograms() {
        // Two clusters far apart in log space leave most bins empty.
        let xs: Vec<f64> = (0..20_000).map(|i| if i % 2 == 0 { 1.0 + 1e-6 * i as f64 } else { 1e6 + i as f64 }).collect();
        assert!(matches!(fit_log_density(&xs, &ArConfig::default()), Err(PoaError::EmptyBins { .. })));
    }

    fn log_normal(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                (1.0 + 0.5 * z).exp()
            })
            .collect()
    }

    #[test]
    fn noisy_log_normal_fit_is_nearly_quadratic() {
        let xs = log_normal(400_000, 3);
        let config = ArConfig {
            fit_degrees: vec![1, 2, 3, 4],
            n_bins: 64,
            ..ArConfig::default()
        };
        let fit = fit_log_density(&xs, &config).unwrap();
        let cv: Vec<f64> = fit.cv_by_degree.iter().map(|c| c.1).collect();
        assert!(cv[1] < 0.5 * cv[0], "{cv:?}");
        // log f = -log ξ - 2(log ξ - 1)² + const; sparse tail bins bias the unweighted fit a little.
        let quad = fit_log_density(&xs, &ArConfig { fit_degrees: vec![2], ..config.clone() }).unwrap();
        assert!((quad.raw_coefficients[2] + 2.0).abs() < 0.15, "{:?}", quad.raw_coefficients);
        assert!((quad.raw_coefficients[1] - 3.0).abs() < 0.4, "{:?}", quad.raw_coefficients);
        assert_eq!(fit_log_density(&xs, &config).unwrap(), fit);
    }

    #[test]
    fn clean_log_normal_selects_degree_two() {
        // Stratified quantiles: the histogram carries no sampling noise.
        let normal = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
        let n = 200_000;
        let xs: Vec<f64> = (0..n)
            .map(|i| {
                let u = (i as f64 + 0.5) / n as f64;
                (1.0 + 0.5 * statrs::distribution::ContinuousCDF::inverse_cdf(&normal, u)).exp()
            })
            .collect();
        let config = ArConfig {
            fit_degrees: vec![1, 2, 3, 4, 5],
            n_bins: 64,
            ..ArConfig::default()
        };
        let fit = fit_log_density(&xs, &config).unwrap();
        assert_eq!(fit.chosen_degree, 2, "{:?}", fit.cv_by_degree);
        assert!((fit.raw_coefficients[2] + 2.0).abs() < 0.05, "{:?}", fit.raw_coefficients);
    }

    #[test]
    fn empirical_model_from_ar_fit() {
        let c = small(0.9, 100.0, 200_000);
        let xs = generate_series(&c, Execution::Parallel).unwrap();
        let fit = fit_log_density(&xs, &c).unwrap();
        assert!(c.fit_degrees.contains(&fit.chosen_degree));
        let m = build_empirical_model(&fit).unwrap();
        assert_eq!(m.survival(fit.support.0), 1.0);
        assert_eq!(m.survival(fit.support.1), 0.0);
        let median = sample_quantile(&xs, 0.5);
        let q = m.inverse_survival(0.5);
        let bin_log_width = (fit.support.1 / fit.support.0).ln() / c.n_bins as f64;
        assert!((q / median).ln().abs() < bin_log_width, "{q} vs {median}");
        let rows = histogram_rows(&fit);
        assert_eq!(rows.len(), c.n_bins);
        let total: u64 = rows.iter().map(|r| r.count).sum();
        assert_eq!(total as usize, xs.len());
    }

    #[test]
    fn batch_means_errors_are_sane() {
        let c = small(0.9, 100.0, 200_000);
        let xs = generate_series(&c, Execution::Parallel).unwrap();
        let stats = series_stats(&xs).unwrap();
        assert!(stats.mean_se > 0.0 && stats.variance_se > 0.0);
        assert!((stats.mean - 1000.0).abs() < 5.0 * stats.mean_se);
        assert_eq!(sample_quantile(&[3.0, 1.0, 2.0], 0.5), 2.0);
    }
}
