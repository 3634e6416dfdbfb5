//! Shot budgets, resource bounds, multi-exponential decay fitting and
//! error-rate extraction.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocols::DecayDataset;

fn check_budget(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value <= 1.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("{value} is outside (0, 1]")))
    }
}

/// Number of sampled Pauli operators `L = ⌈8/(α²δ)⌉`.
pub fn chebyshev_l(alpha: f64, delta: f64) -> Result<u64> {
    check_budget("alpha", alpha)?;
    check_budget("delta", delta)?;
    Ok((8.0 / (alpha * alpha * delta)).ceil() as u64)
}

/// Shots for one sampled label,
/// `N_l = ⌈8 log(4/δ) / (d L α² χ_id(k)²)⌉`, never less than one.
pub fn hoeffding_shots(chi_id: f64, dim: usize, l: u64, alpha: f64, delta: f64) -> Result<u64> {
    check_budget("alpha", alpha)?;
    check_budget("delta", delta)?;
    if chi_id == 0.0 || !chi_id.is_finite() {
        return Err(Error::Internal(format!(
            "shot budget requested for unsupported label (χ = {chi_id})"
        )));
    }
    let n = 8.0 * (4.0 / delta).ln() / (dim as f64 * l as f64 * alpha * alpha * chi_id * chi_id);
    Ok((n.ceil() as u64).max(1))
}

/// Chebyshev/Hoeffding budget for estimating one state overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotBudget {
    pub labels: u64,
    pub alpha: f64,
    pub delta: f64,
    pub dim: usize,
}

impl ShotBudget {
    pub fn new(alpha: f64, delta: f64, dim: usize) -> Result<Self> {
        Ok(ShotBudget {
            labels: chebyshev_l(alpha, delta)?,
            alpha,
            delta,
            dim,
        })
    }

    pub fn shots_for(&self, chi_id: f64) -> Result<u64> {
        hoeffding_shots(chi_id, self.dim, self.labels, self.alpha, self.delta)
    }
}

/// Upper bound on the expected number of experiments,
/// `qm (1 + 8/(α²δ) + (8d/α²) log(4/δ))`.
pub fn expected_experiments_bound(alpha: f64, delta: f64, dim: usize, q: usize, m: usize) -> f64 {
    let a2 = alpha * alpha;
    (q * m) as f64 * (1.0 + 8.0 / (a2 * delta) + 8.0 * dim as f64 / a2 * (4.0 / delta).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceParams {
    pub qubits: usize,
    pub q: usize,
    pub m: usize,
    /// Anticipated gate error rate.
    pub eps: f64,
    /// Accuracy of direct Monte Carlo fidelity estimation.
    pub alpha: f64,
    /// Accuracy of each sampled sequence fidelity.
    pub alpha_mc: f64,
    pub delta: f64,
}

impl ResourceParams {
    pub fn validate(&self) -> Result<()> {
        if self.qubits == 0 || self.qubits > 30 {
            return Err(Error::param("n", format!("{} qubits", self.qubits)));
        }
        if self.q == 0 {
            return Err(Error::param("q", "must be at least 1"));
        }
        if self.m == 0 {
            return Err(Error::param("m", "must be at least 1"));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::param("eps", format!("{} is outside (0, 1)", self.eps)));
        }
        check_budget("alpha", self.alpha)?;
        check_budget("alpha_mc", self.alpha_mc)?;
        check_budget("delta", self.delta)
    }
}

/// Experiment and classical-cost comparison of hybrid IRB against direct
/// Monte Carlo fidelity estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceEstimate {
    pub hybrid_experiments: f64,
    pub direct_experiments: f64,
    /// `hybrid_experiments / direct_experiments`.
    pub experiment_ratio: f64,
    /// Leading-order ratio `qm α² / α_MC²`.
    pub experiment_factor: f64,
    /// `(qm/α_MC²)(d²/ε + n²d²)`, unit constants.
    pub hybrid_classical: f64,
    /// `n²d⁴/α²`, unit constants.
    pub direct_classical: f64,
    pub classical_ratio: f64,
}

pub fn resource_estimate(p: &ResourceParams) -> Result<ResourceEstimate> {
    p.validate()?;
    let d = (1u64 << p.qubits) as f64;
    let n = p.qubits as f64;
    let qm = (p.q * p.m) as f64;
    let hybrid_experiments = expected_experiments_bound(p.alpha_mc, p.delta, d as usize, p.q, p.m);
    let direct_experiments = expected_experiments_bound(p.alpha, p.delta, d as usize, 1, 1);
    let hybrid_classical = qm / (p.alpha_mc * p.alpha_mc) * (d * d / p.eps + n * n * d * d);
    let direct_classical = n * n * d.powi(4) / (p.alpha * p.alpha);
    Ok(ResourceEstimate {
        hybrid_experiments,
        direct_experiments,
        experiment_ratio: hybrid_experiments / direct_experiments,
        experiment_factor: qm * p.alpha * p.alpha / (p.alpha_mc * p.alpha_mc),
        hybrid_classical,
        direct_classical,
        classical_ratio: hybrid_classical / direct_classical,
    })
}

/// Scaling-only classical cost comparison (see [`resource_estimate`]).
pub fn classical_cost_estimate(p: &ResourceParams) -> Result<ResourceEstimate> {
    resource_estimate(p)
}

/// One term `a λ^y` of a fitted decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponential {
    pub amplitude: f64,
    pub rate: f64,
    /// Constant offset, pinned at `λ = 1`.
    pub offset: bool,
}

/// Fitted `Φ(y) = Σ_i a_i λ_i^y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub terms: Vec<Exponential>,
    /// Residual sum of squares over all fitted points.
    pub residual: f64,
    /// `residual / (points − parameters)`, used for model selection.
    pub penalized_residual: f64,
    pub points: usize,
}

impl DecayFit {
    /// Number of exponentials `r`.
    pub fn order(&self) -> usize {
        self.terms.len()
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.amplitude).collect()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.rate).collect()
    }

    pub fn evaluate(&self, y: f64) -> f64 {
        self.terms.iter().map(|t| t.amplitude * t.rate.powf(y)).sum()
    }

    /// Decaying part of the model, i.e. without the constant offset.
    pub fn evaluate_decaying(&self, y: f64) -> f64 {
        self.terms
            .iter()
            .filter(|t| !t.offset)
            .map(|t| t.amplitude * t.rate.powf(y))
            .sum()
    }

    pub fn offset(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.offset)
            .map(|t| t.amplitude)
            .sum()
    }

    /// Effective decay parameter `Φ̃(1)/Φ̃(0)` of the offset-free model.
    pub fn effective_decay(&self) -> Result<f64> {
        let at0 = self.evaluate_decaying(0.0);
        if at0.is_nan() || at0 <= 0.0 {
            return Err(Error::DegenerateFit(format!(
                "decaying amplitude at y = 0 is {at0}"
            )));
        }
        Ok(self.evaluate_decaying(1.0) / at0)
    }

    /// `ε = (d−1)/d · (1 − p_eff)`, clamped at zero.
    pub fn error_rate(&self, dim: usize) -> Result<f64> {
        let d = dim as f64;
        Ok(((d - 1.0) / d * (1.0 - self.effective_decay()?)).max(0.0))
    }
}

pub const DEFAULT_MAX_EXPONENTIALS: usize = 3;

/// Tolerance of the model-selection rule: the smallest order whose
/// penalized residual is within this factor of the best one wins.
const SELECTION_SLACK: f64 = 1.1;

/// Fits the per-sequence estimates of a dataset (see [`fit_decay_points`]).
pub fn fit_decay(data: &DecayDataset, max_exponentials: usize) -> Result<DecayFit> {
    fit_decay_points(&data.points(), max_exponentials)
}

/// Least-squares fit of `Σ a_i λ_i^y` for `r = 1..=max_exponentials`.
///
/// Order 1 is a single free exponential. Order `r ≥ 2` is a constant offset
/// (`λ = 1`) plus `r − 1` free exponentials. Amplitudes are solved linearly
/// for given rates; rates are refined by Levenberg–Marquardt from a fixed
/// grid of starts, kept inside `[−1, 1]`. The selected order is the smallest
/// whose penalized residual is within 10% of the best.
pub fn fit_decay_points(points: &[(f64, f64)], max_exponentials: usize) -> Result<DecayFit> {
    if max_exponentials == 0 {
        return Err(Error::param("max_exponentials", "must be at least 1"));
    }
    if points.iter().any(|(y, v)| !y.is_finite() || !v.is_finite()) {
        return Err(Error::FitFailure("non-finite data point".into()));
    }
    let mut lengths: Vec<f64> = points.iter().map(|p| p.0).collect();
    lengths.sort_by(f64::total_cmp);
    lengths.dedup();
    if lengths.len() < 2 {
        return Err(Error::FitFailure(format!(
            "need at least 2 distinct lengths, got {}",
            lengths.len()
        )));
    }
    let scale = points.iter().map(|p| p.1 * p.1).sum::<f64>() / points.len() as f64;
    let floor = 1e-20 * scale.max(f64::MIN_POSITIVE);

    let mut candidates = Vec::new();
    for order in 1..=max_exponentials {
        let free = if order == 1 { 1 } else { order - 1 };
        let offset = order > 1;
        let params = 2 * free + usize::from(offset);
        if lengths.len() < params {
            continue;
        }
        if let Some(fit) = fit_order(points, free, offset, params) {
            candidates.push(fit);
        }
    }
    let best = candidates
        .iter()
        .map(|f| f.penalized_residual)
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(Error::FitFailure("no model order converged".into()));
    }
    candidates
        .into_iter()
        .find(|f| f.penalized_residual <= SELECTION_SLACK * best + floor)
        .ok_or_else(|| Error::FitFailure("model selection failed".into()))
}

struct Projection {
    amplitudes: Vec<f64>,
    residuals: DVector<f64>,
}

fn design(points: &[(f64, f64)], rates: &[f64], offset: bool) -> DMatrix<f64> {
    let cols = rates.len() + usize::from(offset);
    DMatrix::from_fn(points.len(), cols, |i, j| {
        if j < rates.len() {
            rates[j].powf(points[i].0)
        } else {
            1.0
        }
    })
}

fn project(points: &[(f64, f64)], rates: &[f64], offset: bool) -> Option<Projection> {
    let a = design(points, rates, offset);
    let b = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let svd = a.clone().svd(true, true);
    let amplitudes = svd.solve(&b, 1e-13).ok()?;
    let residuals = b - a * &amplitudes;
    amplitudes
        .iter()
        .all(|v| v.is_finite())
        .then(|| Projection {
            amplitudes: amplitudes.iter().copied().collect(),
            residuals,
        })
}

fn rss(p: &Projection) -> f64 {
    p.residuals.norm_squared()
}

/// Starting rates: `1 − λ` log-spaced from 0.5 down to 5·10⁻⁵.
fn start_grid() -> Vec<f64> {
    (0..9).map(|k| 1.0 - 0.5 * 10f64.powf(-0.5 * k as f64)).collect()
}

fn combinations(grid: &[f64], k: usize) -> Vec<Vec<f64>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &g) in grid.iter().enumerate() {
        for mut rest in combinations(&grid[i + 1..], k - 1) {
            rest.insert(0, g);
            out.push(rest);
        }
    }
    out
}

fn fit_order(points: &[(f64, f64)], free: usize, offset: bool, params: usize) -> Option<DecayFit> {
    let mut best: Option<(f64, Vec<f64>, Projection)> = None;
    for start in combinations(&start_grid(), free) {
        if let Some((rates, proj)) = levenberg_marquardt(points, start, offset) {
            let value = rss(&proj);
            if best.as_ref().is_none_or(|b| value < b.0) {
                best = Some((value, rates, proj));
            }
        }
    }
    let (residual, rates, proj) = best?;
    let mut terms: Vec<Exponential> = rates
        .iter()
        .zip(&proj.amplitudes)
        .map(|(&rate, &amplitude)| Exponential {
            amplitude,
            rate,
            offset: false,
        })
        .collect();
    terms.sort_by(|a, b| b.rate.total_cmp(&a.rate));
    if offset {
        terms.push(Exponential {
            amplitude: proj.amplitudes[free],
            rate: 1.0,
            offset: true,
        });
    }
    let dof = points.len().saturating_sub(params).max(1);
    Some(DecayFit {
        terms,
        residual,
        penalized_residual: residual / dof as f64,
        points: points.len(),
    })
}

fn levenberg_marquardt(
    points: &[(f64, f64)],
    mut rates: Vec<f64>,
    offset: bool,
) -> Option<(Vec<f64>, Projection)> {
    const MAX_ITERATIONS: usize = 200;
    const STEP: f64 = 1e-7;
    let k = rates.len();
    let mut current = project(points, &rates, offset)?;
    let mut cost = rss(&current);
    let mut damping = 1e-3;
    for _ in 0..MAX_ITERATIONS {
        if cost == 0.0 {
            break;
        }
        // finite-difference Jacobian of the projected residual
        let mut jac = DMatrix::<f64>::zeros(points.len(), k);
        for j in 0..k {
            let up = (rates[j] + STEP).min(1.0);
            let down = (rates[j] - STEP).max(-1.0);
            let mut r_up = rates.clone();
            r_up[j] = up;
            let mut r_down = rates.clone();
            r_down[j] = down;
            let (pu, pd) = (project(points, &r_up, offset)?, project(points, &r_down, offset)?);
            jac.set_column(j, &((pu.residuals - pd.residuals) / (up - down)));
        }
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &current.residuals;
        let mut improved = false;
        while damping < 1e12 {
            let mut lhs = jtj.clone();
            for j in 0..k {
                lhs[(j, j)] += damping * jtj[(j, j)].max(1e-12);
            }
            let Some(step) = lhs.lu().solve(&(-&grad)) else {
                damping *= 10.0;
                continue;
            };
            let trial: Vec<f64> = rates
                .iter()
                .zip(step.iter())
                .map(|(r, s)| (r + s).clamp(-1.0, 1.0))
                .collect();
            if let Some(proj) = project(points, &trial, offset) {
                let trial_cost = rss(&proj);
                if trial_cost < cost {
                    let moved = trial
                        .iter()
                        .zip(&rates)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    let gain = cost - trial_cost;
                    rates = trial;
                    current = proj;
                    cost = trial_cost;
                    damping = (damping / 3.0).max(1e-15);
                    improved = true;
                    if moved < 1e-15 || gain <= 1e-15 * cost {
                        return Some((rates, current));
                    }
                    break;
                }
            }
            damping *= 4.0;
        }
        if !improved {
            break;
        }
    }
    Some((rates, current))
}

/// Error rates of both arms and the target-gate estimate with bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityEstimate {
    pub eps_point: f64,
    pub eps_lower: f64,
    pub eps_upper: f64,
    /// Reference (Clifford-only) error rate.
    pub eps_reference: f64,
    /// Error rate of the interleaved `C × V` sequence.
    pub eps_interleaved: f64,
}

impl FidelityEstimate {
    /// Point estimate `ε_{C×V} − ε_C` (clamped at zero) with bounds
    /// `max(0, √ε_{C×V} − √ε_C)²` and `(√ε_{C×V} + √ε_C)²`.
    pub fn from_error_rates(eps_reference: f64, eps_interleaved: f64) -> Self {
        let r = eps_reference.max(0.0);
        let i = eps_interleaved.max(0.0);
        let lower = (i.sqrt() - r.sqrt()).max(0.0);
        FidelityEstimate {
            eps_point: (i - r).max(0.0),
            eps_lower: lower * lower,
            eps_upper: (i.sqrt() + r.sqrt()).powi(2),
            eps_reference: r,
            eps_interleaved: i,
        }
    }

    pub fn contains(&self, eps: f64) -> bool {
        self.eps_lower <= eps && eps <= self.eps_upper
    }
}

pub fn extract_error_rates(
    fit_reference: &DecayFit,
    fit_interleaved: &DecayFit,
    dim: usize,
) -> Result<FidelityEstimate> {
    Ok(FidelityEstimate::from_error_rates(
        fit_reference.error_rate(dim)?,
        fit_interleaved.error_rate(dim)?,
    ))
}

/// Unbiased sample mean and variance.
pub fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}
