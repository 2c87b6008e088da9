use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;

/// Summary of an ensemble's step counts. The interval is the normal
/// approximation `mean ± 1.96·s/√runs` with the sample standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub runs: usize,
    pub mean: f64,
    pub median: f64,
    pub std_dev: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub termination_fraction: f64,
    pub min: u64,
    pub max: u64,
}

impl EnsembleStats {
    pub fn from_samples(samples: &[u64], terminated: usize) -> Self {
        let runs = samples.len();
        if runs == 0 {
            return EnsembleStats {
                runs: 0,
                mean: 0.0,
                median: 0.0,
                std_dev: 0.0,
                ci_low: 0.0,
                ci_high: 0.0,
                termination_fraction: 0.0,
                min: 0,
                max: 0,
            };
        }
        let len = runs as f64;
        let mean = samples.iter().map(|&x| x as f64).sum::<f64>() / len;
        let std_dev = if runs > 1 {
            let ss: f64 = samples.iter().map(|&x| (x as f64 - mean).powi(2)).sum();
            (ss / (len - 1.0)).sqrt()
        } else {
            0.0
        };
        let mut sorted = samples.to_vec();
        sorted.sort_unstable();
        let median = if runs % 2 == 1 {
            sorted[runs / 2] as f64
        } else {
            (sorted[runs / 2 - 1] as f64 + sorted[runs / 2] as f64) / 2.0
        };
        let half_width = 1.96 * std_dev / len.sqrt();
        EnsembleStats {
            runs,
            mean,
            median,
            std_dev,
            ci_low: mean - half_width,
            ci_high: mean + half_width,
            termination_fraction: terminated as f64 / len,
            min: sorted[0],
            max: sorted[runs - 1],
        }
    }
}

/// Expected number of uniform draws to see all `n` coupons, `n·H_n`.
pub fn coupon_reference(n: u64) -> f64 {
    let harmonic: f64 = (1..=n).map(|i| 1.0 / i as f64).sum();
    n as f64 * harmonic
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    NLnDelta,
    NLnN,
    NDelta,
}

impl FitModel {
    pub fn regressor(self, n: usize, max_degree: usize) -> f64 {
        let (n, d) = (n as f64, max_degree as f64);
        match self {
            FitModel::NLnDelta => n * d.ln(),
            FitModel::NLnN => n * n.ln(),
            FitModel::NDelta => n * d,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FitModel::NLnDelta => "n_ln_delta",
            FitModel::NLnN => "n_ln_n",
            FitModel::NDelta => "n_delta",
        }
    }
}

impl fmt::Display for FitModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FitModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "n_ln_delta" => Ok(FitModel::NLnDelta),
            "n_ln_n" => Ok(FitModel::NLnN),
            "n_delta" => Ok(FitModel::NDelta),
            other => Err(format!("unknown fit model {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitPoint {
    pub n: usize,
    pub max_degree: usize,
    pub mean_steps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: FitModel,
    pub coefficient: f64,
    /// `1 − SS_res/SS_tot` against the fitted line through the origin.
    pub r_squared: f64,
    pub residuals: Vec<f64>,
    /// `mean_steps / regressor` at each point.
    pub point_coefficients: Vec<f64>,
}

impl FitResult {
    /// Largest relative deviation of a per-point coefficient from the fit.
    pub fn max_relative_spread(&self) -> f64 {
        self.point_coefficients
            .iter()
            .map(|c| (c / self.coefficient - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Least squares through the origin: `mean ≈ a · regressor(n, Δ)`.
pub fn scaling_fit(points: &[FitPoint], model: FitModel) -> Result<FitResult, HarnessError> {
    if points.len() < 3 {
        return Err(HarnessError::DegenerateFit(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    let xs: Vec<f64> = points
        .iter()
        .map(|p| model.regressor(p.n, p.max_degree))
        .collect();
    if let Some(i) = xs.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(HarnessError::DegenerateFit(format!(
            "{} regressor is {} at point {i} (n={}, Δ={})",
            model, xs[i], points[i].n, points[i].max_degree
        )));
    }
    let ys: Vec<f64> = points.iter().map(|p| p.mean_steps).collect();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let coefficient = sxy / sxx;
    let residuals: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - coefficient * x)
        .collect();
    let mean_y = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    let scale = ys.iter().map(|y| y * y).sum::<f64>().max(f64::MIN_POSITIVE);
    let r_squared = if ss_res <= 1e-24 * scale {
        1.0
    } else if ss_tot == 0.0 {
        0.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(FitResult {
        model,
        coefficient,
        r_squared,
        residuals,
        point_coefficients: xs.iter().zip(&ys).map(|(x, y)| y / x).collect(),
    })
}
