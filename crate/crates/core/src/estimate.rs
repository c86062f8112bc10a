//! Maximum-likelihood estimation and Monte-Carlo sensitivity statistics.
//!
//! A trial draws `m` outcomes at the true phases and maximizes the
//! log-likelihood over `[0, pi]^d`: a coarse grid seeds a projected gradient
//! ascent (Barzilai-Borwein steps, Armijo backtracking, central-difference
//! gradient). The likelihood only ever evaluates the distinct sampled
//! outcomes, element by element, so the cost is independent of the size of
//! the full outcome table.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::{qcrb, qfim};
use crate::interferometer::{sector_eigen, RotationCache, SectorEigen, SectorRotation};
use crate::network::{trial_rng, AmplitudeModel, NetworkConfig, Outcome, Scheme};

/// Log-probability assigned to outcomes the model gives zero probability.
pub const LOG_FLOOR: f64 = -690.7755278982137;
const PROB_FLOOR: f64 = 1e-300;

/// Distance from the edge of `[0, pi]` below which a true phase counts as
/// a boundary point.
pub const BOUNDARY_MARGIN: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MleSettings {
    /// Grid points per axis over `[0, pi]`, endpoints included.
    pub grid_points: usize,
    /// Best grid points refined by gradient ascent.
    pub seeds: usize,
    pub max_iterations: usize,
    /// Central-difference step for the gradient.
    pub fd_step: f64,
    /// Ascent stops once a step moves every phase by less than this.
    pub tolerance: f64,
}

impl Default for MleSettings {
    fn default() -> Self {
        Self {
            grid_points: 21,
            seeds: 3,
            max_iterations: 500,
            fd_step: 1e-5,
            tolerance: 1e-10,
        }
    }
}

/// Log-likelihood value with a flag for floored zero-probability outcomes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogLikelihood {
    pub value: f64,
    pub floored: bool,
}

/// `sum_i log P(mu_i | theta)` over a sample, evaluated at arbitrary phases.
#[derive(Clone, Debug)]
pub struct Likelihood {
    d: usize,
    /// Multiplicity of each distinct outcome.
    counts: Vec<f64>,
    /// Range of input terms belonging to each distinct outcome.
    offsets: Vec<usize>,
    weights: Vec<f64>,
    /// Per sensor, per term: (sector total, output count, input count).
    elements: Vec<Vec<(usize, usize, usize)>>,
    sectors: Vec<HashMap<usize, Arc<SectorEigen>>>,
}

impl Likelihood {
    pub fn new(model: &AmplitudeModel, samples: &[Outcome]) -> Self {
        let d = model.d();
        let mut grouped: BTreeMap<&Outcome, usize> = BTreeMap::new();
        for s in samples {
            *grouped.entry(s).or_default() += 1;
        }
        let mut counts = Vec::with_capacity(grouped.len());
        let mut offsets = vec![0];
        let mut weights = Vec::new();
        let mut elements = vec![Vec::new(); d];
        let mut sectors: Vec<HashMap<usize, Arc<SectorEigen>>> = vec![HashMap::new(); d];
        for (outcome, count) in grouped {
            let terms = model.outcome_terms(outcome);
            for (j, &n) in terms.totals().iter().enumerate() {
                sectors[j].entry(n).or_insert_with(|| sector_eigen(n));
            }
            for (w, n_in) in terms.inputs() {
                weights.push(*w);
                for j in 0..d {
                    elements[j].push((terms.totals()[j], terms.n_out()[j], n_in[j]));
                }
            }
            counts.push(count as f64);
            offsets.push(weights.len());
        }
        Self {
            d,
            counts,
            offsets,
            weights,
            elements,
            sectors,
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of distinct outcomes in the sample.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    /// Rotation elements of sensor `j` at phase `theta`, one per input term.
    fn mode_factors(&self, j: usize, theta: f64) -> Vec<f64> {
        let rotations: HashMap<usize, SectorRotation> =
            self.sectors[j].iter().map(|(&n, e)| (n, e.at(theta))).collect();
        self.elements[j]
            .iter()
            .map(|(n, out, inp)| rotations[n].element(*out, *inp))
            .collect()
    }

    fn combine(&self, factors: &[&[f64]]) -> LogLikelihood {
        let mut value = 0.0;
        let mut floored = false;
        for (o, count) in self.counts.iter().enumerate() {
            let amp: f64 = (self.offsets[o]..self.offsets[o + 1])
                .map(|t| factors.iter().fold(self.weights[t], |acc, f| acc * f[t]))
                .sum();
            let p = amp * amp;
            let lp = if p < PROB_FLOOR {
                floored = true;
                LOG_FLOOR
            } else {
                p.ln()
            };
            value += count * lp;
        }
        LogLikelihood { value, floored }
    }

    pub fn evaluate(&self, theta: &[f64]) -> LogLikelihood {
        let factors: Vec<Vec<f64>> = theta.iter().enumerate().map(|(j, &t)| self.mode_factors(j, t)).collect();
        let refs: Vec<&[f64]> = factors.iter().map(|f| f.as_slice()).collect();
        self.combine(&refs)
    }

    fn gradient(&self, theta: &[f64], h: f64) -> Vec<f64> {
        let mut point = theta.to_vec();
        (0..self.d)
            .map(|j| {
                point[j] = theta[j] + h;
                let up = self.evaluate(&point).value;
                point[j] = theta[j] - h;
                let down = self.evaluate(&point).value;
                point[j] = theta[j];
                (up - down) / (2.0 * h)
            })
            .collect()
    }

    /// Log-likelihood on the full grid, in row-major order of the axis
    /// indices.
    fn grid_values(&self, points: usize) -> Vec<(Vec<f64>, f64)> {
        let axis: Vec<f64> = (0..points).map(|k| PI * k as f64 / (points - 1).max(1) as f64).collect();
        let factors: Vec<Vec<Vec<f64>>> = (0..self.d)
            .map(|j| axis.iter().map(|&t| self.mode_factors(j, t)).collect())
            .collect();
        let total = points.pow(self.d as u32);
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; self.d];
        for _ in 0..total {
            let refs: Vec<&[f64]> = (0..self.d).map(|j| factors[j][idx[j]].as_slice()).collect();
            let theta = idx.iter().map(|&k| axis[k]).collect();
            out.push((theta, self.combine(&refs).value));
            for j in (0..self.d).rev() {
                idx[j] += 1;
                if idx[j] < points {
                    break;
                }
                idx[j] = 0;
            }
        }
        out
    }
}

/// `sum_i log P(mu_i | theta)` with the configuration's automatic cutoffs.
pub fn log_likelihood(samples: &[Outcome], config: &NetworkConfig, theta: &[f64]) -> Result<LogLikelihood> {
    if theta.len() != config.d() {
        return Err(Error::DimensionMismatch {
            expected: config.d(),
            found: theta.len(),
        });
    }
    let model = AmplitudeModel::with_auto_cutoffs(config)?;
    Ok(Likelihood::new(&model, samples).evaluate(theta))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MleEstimate {
    pub theta: Vec<f64>,
    pub log_likelihood: f64,
    /// False when the ascent hit the iteration cap.
    pub converged: bool,
    /// True when some sampled outcome has zero model probability at the
    /// estimate.
    pub floored: bool,
}

fn project(x: &mut [f64]) {
    x.iter_mut().for_each(|t| *t = t.clamp(0.0, PI));
}

fn ascend(lik: &Likelihood, start: Vec<f64>, settings: &MleSettings) -> MleEstimate {
    let mut x = start;
    let mut f = lik.evaluate(&x).value;
    let mut g = lik.gradient(&x, settings.fd_step);
    let g_max = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut step = if g_max > 0.0 { 0.05 / g_max } else { 1.0 };
    for _ in 0..settings.max_iterations {
        // backtracking line search along the projected gradient
        let mut t = step;
        let (y, fy) = loop {
            let mut y: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi + t * gi).collect();
            project(&mut y);
            let ascent: f64 = y.iter().zip(&x).zip(&g).map(|((yi, xi), gi)| gi * (yi - xi)).sum();
            let fy = lik.evaluate(&y).value;
            if fy >= f + 1e-4 * ascent {
                break (y, fy);
            }
            t *= 0.5;
            if t * g_norm(&g) < settings.tolerance * 1e-3 {
                return MleEstimate {
                    floored: lik.evaluate(&x).floored,
                    theta: x,
                    log_likelihood: f,
                    converged: true,
                };
            }
        };
        let moved = y.iter().zip(&x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if moved < settings.tolerance {
            return MleEstimate {
                floored: lik.evaluate(&y).floored,
                theta: y,
                log_likelihood: fy,
                converged: true,
            };
        }
        let gy = lik.gradient(&y, settings.fd_step);
        let ss: f64 = y.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
        let sr: f64 = y.iter().zip(&x).zip(gy.iter().zip(&g)).map(|((a, b), (c, e))| (a - b) * (c - e)).sum();
        step = if sr < 0.0 { ss / -sr } else { 2.0 * t };
        x = y;
        f = fy;
        g = gy;
    }
    MleEstimate {
        floored: lik.evaluate(&x).floored,
        theta: x,
        log_likelihood: f,
        converged: false,
    }
}

fn g_norm(g: &[f64]) -> f64 {
    g.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Maximum-likelihood estimate over `[0, pi]^d` for a prepared likelihood.
pub fn mle_with(lik: &Likelihood, settings: &MleSettings) -> Result<MleEstimate> {
    if lik.distinct() == 0 {
        return Err(Error::InvalidArgument("maximum likelihood needs at least one sample".into()));
    }
    if settings.grid_points < 2 || settings.seeds == 0 {
        return Err(Error::InvalidArgument("grid needs two points per axis and one seed".into()));
    }
    let mut grid = lik.grid_values(settings.grid_points);
    // stable sort keeps grid order among ties
    grid.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut best: Option<MleEstimate> = None;
    for (seed, _) in grid.into_iter().take(settings.seeds) {
        let candidate = ascend(lik, seed, settings);
        if best.as_ref().is_none_or(|b| candidate.log_likelihood > b.log_likelihood) {
            best = Some(candidate);
        }
    }
    Ok(best.expect("at least one seed"))
}

/// Maximum-likelihood estimate for `samples` under `config`.
pub fn mle(samples: &[Outcome], config: &NetworkConfig, settings: &MleSettings) -> Result<MleEstimate> {
    let model = AmplitudeModel::with_auto_cutoffs(config)?;
    mle_with(&Likelihood::new(&model, samples), settings)
}

/// Monte-Carlo ensemble of maximum-likelihood estimates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimationResult {
    pub estimates: Vec<Vec<f64>>,
    pub theta_true: Vec<f64>,
    pub v: Vec<f64>,
    /// Mean squared fluctuation of `v . Theta` about the true value with the
    /// squared bias removed.
    pub msf: f64,
    /// Mean of `v . (Theta - theta)`.
    pub bias: f64,
    pub trials: usize,
    pub m: u64,
    pub seed: u64,
    /// Trials whose ascent hit the iteration cap.
    pub nonconverged: usize,
    /// Trials whose estimate assigns zero probability to a sample.
    pub floored: usize,
}

impl EstimationResult {
    fn deviations(&self, v: &[f64]) -> Vec<f64> {
        self.estimates
            .iter()
            .map(|est| est.iter().zip(&self.theta_true).zip(v).map(|((e, t), c)| c * (e - t)).sum())
            .collect()
    }

    /// `(msf, bias)` along an arbitrary combination `v`.
    pub fn msf_along(&self, v: &[f64]) -> (f64, f64) {
        let x = self.deviations(v);
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let second = x.iter().map(|e| e * e).sum::<f64>() / n;
        ((second - mean * mean).max(0.0), mean)
    }

    /// Standard error of [`msf_along`](Self::msf_along) from the fourth
    /// central moment of the deviations.
    pub fn msf_std_error(&self, v: &[f64]) -> f64 {
        let x = self.deviations(v);
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
        let m4 = x.iter().map(|e| (e - mean).powi(4)).sum::<f64>() / n;
        ((m4 - var * var).max(0.0) / n).sqrt()
    }

    /// `sum_j` of the per-phase fluctuations.
    pub fn sum_of_variances(&self) -> f64 {
        let d = self.theta_true.len();
        (0..d)
            .map(|j| {
                let mut e = vec![0.0; d];
                e[j] = 1.0;
                self.msf_along(&e).0
            })
            .sum()
    }
}

/// Repeats (sample `m` shots at `theta_true`, estimate) `trials` times in
/// parallel. Trial `t` draws from stream `t` of the generator seeded by
/// `seed`.
pub fn run_experiment(
    config: &NetworkConfig,
    theta_true: &[f64],
    v: &[f64],
    m: u64,
    trials: usize,
    seed: u64,
    settings: &MleSettings,
) -> Result<EstimationResult> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    if trials < 2 {
        return Err(Error::InvalidArgument("at least two trials are required".into()));
    }
    if v.len() != config.d() || theta_true.len() != config.d() {
        return Err(Error::DimensionMismatch {
            expected: config.d(),
            found: if v.len() != config.d() { v.len() } else { theta_true.len() },
        });
    }
    let model = AmplitudeModel::with_auto_cutoffs(config)?;
    let table = model.table(theta_true, &mut RotationCache::new())?;
    let sampler = table.sampler()?;
    let outcomes: Vec<MleEstimate> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t as u64);
            let samples = sampler.draw_many(&mut rng, m as usize);
            mle_with(&Likelihood::new(&model, &samples), settings)
        })
        .collect::<Result<_>>()?;
    let nonconverged = outcomes.iter().filter(|o| !o.converged).count();
    let floored = outcomes.iter().filter(|o| o.floored).count();
    let mut result = EstimationResult {
        estimates: outcomes.into_iter().map(|o| o.theta).collect(),
        theta_true: theta_true.to_vec(),
        v: v.to_vec(),
        msf: 0.0,
        bias: 0.0,
        trials,
        m,
        seed,
        nonconverged,
        floored,
    };
    (result.msf, result.bias) = result.msf_along(v);
    Ok(result)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub theta: Vec<f64>,
    pub msf: f64,
    pub qcrb: f64,
    /// `msf / qcrb`.
    pub normalized: f64,
    /// Some true phase lies within [`BOUNDARY_MARGIN`] of `0` or `pi`.
    pub boundary: bool,
}

/// [`run_experiment`] at each grid point; point `k` uses seed `seed + k`.
#[allow(clippy::too_many_arguments)]
pub fn theta_sweep(
    config: &NetworkConfig,
    v: &[f64],
    m: u64,
    grid: &[Vec<f64>],
    trials: usize,
    seed: u64,
    settings: &MleSettings,
) -> Result<Vec<SweepPoint>> {
    let bound = qcrb(&qfim(config)?, v, m)?;
    grid.iter()
        .enumerate()
        .map(|(k, theta)| {
            let r = run_experiment(config, theta, v, m, trials, seed.wrapping_add(k as u64), settings)?;
            Ok(SweepPoint {
                theta: theta.clone(),
                msf: r.msf,
                qcrb: bound,
                normalized: r.msf / bound,
                boundary: theta.iter().any(|t| t.min(PI - t) < BOUNDARY_MARGIN),
            })
        })
        .collect()
}

/// Sum of the per-phase fluctuations over a Monte-Carlo ensemble.
pub fn sum_of_variances_experiment(
    config: &NetworkConfig,
    theta_true: &[f64],
    m: u64,
    trials: usize,
    seed: u64,
    settings: &MleSettings,
) -> Result<f64> {
    let v = vec![1.0; config.d()];
    Ok(run_experiment(config, theta_true, &v, m, trials, seed, settings)?.sum_of_variances())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MOptPoint {
    pub m: u64,
    pub n_t: f64,
    pub msf: f64,
    pub qcrb: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MOptResult {
    pub m_opt: u64,
    pub curve: Vec<MOptPoint>,
}

/// Shot number minimizing the fluctuation at a fixed total budget
/// `total_n = m nT`. `family` builds the configuration for a per-shot
/// budget `nT`; candidate `k` uses seed `seed + k`.
#[allow(clippy::too_many_arguments)]
pub fn find_m_opt<F>(
    family: F,
    total_n: f64,
    candidates: &[u64],
    theta_true: &[f64],
    v: &[f64],
    trials: usize,
    seed: u64,
    settings: &MleSettings,
) -> Result<MOptResult>
where
    F: Fn(f64) -> Result<NetworkConfig>,
{
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidate shot numbers".into()));
    }
    let mut curve = Vec::with_capacity(candidates.len());
    for (k, &m) in candidates.iter().enumerate() {
        let n_t = total_n / m as f64;
        let config = family(n_t)?;
        let bound = qcrb(&qfim(&config)?, v, m)?;
        let msf = if candidates.len() == 1 {
            f64::NAN
        } else {
            run_experiment(&config, theta_true, v, m, trials, seed.wrapping_add(k as u64), settings)?.msf
        };
        curve.push(MOptPoint { m, n_t, msf, qcrb: bound });
    }
    let m_opt = curve
        .iter()
        .min_by(|a, b| a.msf.total_cmp(&b.msf))
        .map(|p| p.m)
        .unwrap_or(candidates[0]);
    Ok(MOptResult { m_opt, curve })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub gamma: f64,
    pub model: Scheme,
    pub residual: f64,
    pub m_opt: u64,
}

/// Shape of the fit model at total budget `n_total`:
/// `m / (N^2 + 2 N m)` for ME and `m d / (N^2 + 2 N d m)` for MS.
pub fn fit_shape(model: Scheme, n_total: f64, m_opt: u64, d: usize) -> f64 {
    let m = m_opt as f64
        * match model {
            Scheme::Entangled => 1.0,
            Scheme::Separable => d as f64,
        };
    m / (n_total * n_total + 2.0 * n_total * m)
}

/// One-parameter least-squares fit of `msf = gamma * shape(N)`.
pub fn fit_gamma(points: &[(f64, f64)], m_opt: u64, d: usize, model: Scheme) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit(format!("need at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|(n, y)| !(n.is_finite() && *n > 0.0 && y.is_finite())) {
        return Err(Error::DegenerateFit("points need positive finite N_T and finite msf".into()));
    }
    let shapes: Vec<f64> = points.iter().map(|(n, _)| fit_shape(model, *n, m_opt, d)).collect();
    let sgg: f64 = shapes.iter().map(|g| g * g).sum();
    if !(sgg > 0.0) {
        return Err(Error::DegenerateFit("model shape vanishes on every point".into()));
    }
    let gamma = points.iter().zip(&shapes).map(|((_, y), g)| y * g).sum::<f64>() / sgg;
    let residual = points.iter().zip(&shapes).map(|((_, y), g)| (y - gamma * g).powi(2)).sum();
    if !(gamma > 0.0) {
        return Err(Error::DegenerateFit(format!("fitted gamma {gamma} is not positive")));
    }
    Ok(FitResult {
        gamma,
        model,
        residual,
        m_opt,
    })
}
