//! Brute-force reference implementations for validation.
//!
//! States are sparse maps over the full `2d`-mode Fock basis, built by
//! repeated application of the QC creation operator and evolved with
//! matrix exponentials of each MZI generator. Nothing here reuses the
//! multinomial or rank-one shortcuts of the analytic modules. Amplitudes are
//! complex so that probes violating the reality assumption can be
//! represented.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::network::{NetworkConfig, Outcome, OutcomeTable, Probe};
use crate::util::poisson_cap;

/// Largest basis the oracle will build.
pub const BASIS_LIMIT: usize = 1_000_000;

/// Poisson tail left out of each coherent mode by [`OracleCaps::auto`].
pub const ORACLE_COHERENT_TAIL: f64 = 1e-13;

type Key = Vec<u32>;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleCaps {
    /// Largest photon number kept in each coherent input mode.
    pub coherent: Vec<usize>,
}

impl OracleCaps {
    pub fn auto(config: &NetworkConfig) -> Self {
        Self {
            coherent: config
                .alphas()
                .iter()
                .map(|a| poisson_cap(a * a, ORACLE_COHERENT_TAIL))
                .collect(),
        }
    }
}

/// Truncated state of the `2d` modes ordered `(a_1, b_1, ..., a_d, b_d)`.
#[derive(Clone, Debug, Default)]
pub struct DenseState {
    amplitudes: HashMap<Key, Complex64>,
}

impl DenseState {
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitude(&self, occupation: &[u32]) -> Complex64 {
        self.amplitudes.get(occupation).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// Basis states in lexicographic order with their amplitudes.
    pub fn sorted(&self) -> Vec<(Key, Complex64)> {
        let mut out: Vec<_> = self.amplitudes.iter().map(|(k, a)| (k.clone(), *a)).collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    fn normalized(&self) -> Self {
        let s = self.norm_sqr().sqrt();
        Self {
            amplitudes: self.amplitudes.iter().map(|(k, a)| (k.clone(), a / s)).collect(),
        }
    }

    fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .filter_map(|(k, a)| other.amplitudes.get(k).map(|b| a.conj() * b))
            .sum()
    }

    /// `H_j |self>` with `H_j = (a_j^dag b_j - a_j b_j^dag) / (2i)`.
    pub fn apply_generator(&self, j: usize) -> Self {
        let mut out: HashMap<Key, Complex64> = HashMap::new();
        let half_minus_i = Complex64::new(0.0, -0.5);
        for (k, amp) in &self.amplitudes {
            let (n, m) = (k[2 * j] as f64, k[2 * j + 1] as f64);
            if m > 0.0 {
                let mut up = k.clone();
                up[2 * j] += 1;
                up[2 * j + 1] -= 1;
                *out.entry(up).or_default() += half_minus_i * ((n + 1.0) * m).sqrt() * amp;
            }
            if n > 0.0 {
                let mut down = k.clone();
                down[2 * j] -= 1;
                down[2 * j + 1] += 1;
                *out.entry(down).or_default() -= half_minus_i * (n * (m + 1.0)).sqrt() * amp;
            }
        }
        Self { amplitudes: out }
    }

    /// `exp(-i sum_j theta_j H_j) |self>`, one MZI at a time. Fails when the
    /// evolved support outgrows [`BASIS_LIMIT`].
    pub fn evolve(&self, theta: &[f64]) -> Result<Self> {
        let mut state = self.clone();
        for (j, &t) in theta.iter().enumerate() {
            let mut unitaries: HashMap<usize, DMatrix<Complex64>> = HashMap::new();
            let mut out: HashMap<Key, Complex64> = HashMap::new();
            for (k, amp) in &state.amplitudes {
                let n_in = k[2 * j] as usize;
                let total = n_in + k[2 * j + 1] as usize;
                let u = unitaries.entry(total).or_insert_with(|| sector_unitary(total, t));
                for n_out in 0..=total {
                    let c = u[(n_out, n_in)];
                    if c == Complex64::default() {
                        continue;
                    }
                    let mut key = k.clone();
                    key[2 * j] = n_out as u32;
                    key[2 * j + 1] = (total - n_out) as u32;
                    *out.entry(key).or_default() += c * amp;
                }
            }
            if out.len() > BASIS_LIMIT {
                return Err(Error::BasisTooLarge {
                    size: out.len(),
                    limit: BASIS_LIMIT,
                });
            }
            state = Self { amplitudes: out };
        }
        Ok(state)
    }
}

/// Generator of one MZI on the sector with `total` photons, basis `|n, total - n>`
/// indexed by `n`, built from the ladder-operator action.
fn sector_generator(total: usize) -> DMatrix<Complex64> {
    let mut h = DMatrix::zeros(total + 1, total + 1);
    for n in 0..total {
        // <n+1, m-1| a^dag b |n, m> with m = total - n
        let s = (((n + 1) * (total - n)) as f64).sqrt();
        h[(n + 1, n)] = Complex64::new(0.0, -0.5 * s);
        h[(n, n + 1)] = Complex64::new(0.0, 0.5 * s);
    }
    h
}

fn sector_unitary(total: usize, theta: f64) -> DMatrix<Complex64> {
    (sector_generator(total) * Complex64::new(0.0, -theta)).exp()
}

fn coherent_column(alpha: f64, cap: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(cap + 1);
    let mut amp = (-alpha * alpha / 2.0).exp();
    for n in 0..=cap {
        if n > 0 {
            amp *= alpha / (n as f64).sqrt();
        }
        out.push(amp);
    }
    out
}

/// `|Psi_QC>` for a probe with coefficients `coeffs` entering the first QC
/// port, as a map over the `d` output occupations.
fn qc_state(coeffs: &[Complex64], splitting: &[f64]) -> HashMap<Key, Complex64> {
    let d = splitting.len();
    let mut power: HashMap<Key, Complex64> = HashMap::from([(vec![0; d], Complex64::new(1.0, 0.0))]);
    let mut out: HashMap<Key, Complex64> = HashMap::new();
    for (m, c) in coeffs.iter().enumerate() {
        if m > 0 {
            // (B^dag)^m |0> / sqrt(m!) from the previous power
            let mut next: HashMap<Key, Complex64> = HashMap::new();
            for (k, a) in &power {
                for (j, p) in splitting.iter().enumerate() {
                    if *p == 0.0 {
                        continue;
                    }
                    let mut up = k.clone();
                    up[j] += 1;
                    let w = (p * up[j] as f64 / m as f64).sqrt();
                    *next.entry(up).or_default() += a * w;
                }
            }
            power = next;
        }
        if *c != Complex64::default() {
            for (k, a) in &power {
                *out.entry(k.clone()).or_default() += c * a;
            }
        }
    }
    out
}

fn real_coeffs(coeffs: &[f64]) -> Vec<Complex64> {
    coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect()
}

/// Product of coherent inputs with a probe state over the QC outputs.
fn assemble(alphas: &[f64], qc: HashMap<Key, Complex64>, caps: &OracleCaps) -> Result<DenseState> {
    let d = alphas.len();
    if caps.coherent.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: caps.coherent.len(),
        });
    }
    let size = caps
        .coherent
        .iter()
        .fold(qc.len(), |acc, c| acc.saturating_mul(c + 1));
    if size > BASIS_LIMIT {
        return Err(Error::BasisTooLarge {
            size,
            limit: BASIS_LIMIT,
        });
    }
    let columns: Vec<Vec<f64>> = alphas.iter().zip(&caps.coherent).map(|(&a, &c)| coherent_column(a, c)).collect();
    let mut amplitudes = HashMap::with_capacity(size);
    for (occ, c) in qc {
        let mut partial: Vec<(Key, Complex64)> = vec![(Vec::with_capacity(2 * d), c)];
        for (j, column) in columns.iter().enumerate() {
            let m = occ[j];
            partial = partial
                .into_iter()
                .flat_map(|(k, a)| {
                    column.iter().enumerate().map(move |(n, w)| {
                        let mut key = k.clone();
                        key.push(n as u32);
                        key.push(m);
                        (key, a * w)
                    })
                })
                .collect();
        }
        amplitudes.extend(partial.into_iter().filter(|(_, a)| *a != Complex64::default()));
    }
    Ok(DenseState { amplitudes })
}

/// Input state `|alpha_1> ... |alpha_d> |Psi_QC>` of a configuration.
pub fn dense_probe(config: &NetworkConfig, caps: &OracleCaps) -> Result<DenseState> {
    let qc = match config.probe() {
        Probe::Entangled { state, splitting } => qc_state(&real_coeffs(state.coeffs()), splitting),
        Probe::Separable { states } => {
            let mut qc: HashMap<Key, Complex64> = HashMap::from([(Vec::new(), Complex64::new(1.0, 0.0))]);
            for s in states {
                let mut next = HashMap::new();
                for (k, a) in &qc {
                    for (m, c) in s.coeffs().iter().enumerate() {
                        if *c == 0.0 {
                            continue;
                        }
                        let mut key = k.clone();
                        key.push(m as u32);
                        next.insert(key, a * c);
                    }
                }
                qc = next;
            }
            qc
        }
    };
    assemble(config.alphas(), qc, caps)
}

/// Entangled-scheme input state for an arbitrary, possibly complex, probe.
pub fn dense_probe_complex(
    alphas: &[f64],
    probe: &[Complex64],
    splitting: &[f64],
    caps: &OracleCaps,
) -> Result<DenseState> {
    if splitting.len() != alphas.len() {
        return Err(Error::DimensionMismatch {
            expected: alphas.len(),
            found: splitting.len(),
        });
    }
    assemble(alphas, qc_state(probe, splitting), caps)
}

/// `<Psi|H_j|Psi>` for each sensor, on the renormalized state.
pub fn generator_means(state: &DenseState, d: usize) -> Vec<f64> {
    let psi = state.normalized();
    (0..d).map(|j| psi.inner(&psi.apply_generator(j)).re).collect()
}

/// `4 Re(<H_j H_k> - <H_j><H_k>)` on the renormalized state.
pub fn qfim_of_state(state: &DenseState, d: usize) -> DMatrix<f64> {
    let psi = state.normalized();
    let phis: Vec<DenseState> = (0..d).map(|j| psi.apply_generator(j)).collect();
    let means: Vec<Complex64> = phis.iter().map(|phi| psi.inner(phi)).collect();
    DMatrix::from_fn(d, d, |j, k| 4.0 * (phis[j].inner(&phis[k]) - means[j].conj() * means[k]).re)
}

pub fn qfim_bruteforce(config: &NetworkConfig, caps: &OracleCaps) -> Result<DMatrix<f64>> {
    Ok(qfim_of_state(&dense_probe(config, caps)?, config.d()))
}

/// Largest `|Re(<Psi_theta|H_j|mu><mu|Psi_theta>)|` over outcomes and sensors.
pub fn saturation_residual(state: &DenseState, theta: &[f64]) -> Result<f64> {
    let psi = state.evolve(theta)?;
    Ok((0..theta.len())
        .flat_map(|j| {
            let phi = psi.apply_generator(j);
            psi.amplitudes
                .iter()
                .map(move |(k, a)| (phi.amplitude(k).conj() * a).re.abs())
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max))
}

pub fn saturation_check(config: &NetworkConfig, theta: &[f64], caps: &OracleCaps) -> Result<f64> {
    saturation_residual(&dense_probe(config, caps)?, theta)
}

/// Outcome probabilities from the evolved dense state.
pub fn probability_bruteforce(config: &NetworkConfig, theta: &[f64], caps: &OracleCaps) -> Result<OutcomeTable> {
    let psi = dense_probe(config, caps)?.evolve(theta)?;
    let entries = psi
        .sorted()
        .into_iter()
        .map(|(k, a)| (Outcome::new(k), a.norm_sqr().min(1.0)))
        .filter(|(_, p)| *p > 0.0)
        .collect();
    OutcomeTable::from_entries(entries, theta.to_vec())
}

/// Fisher information matrix of the counting distribution at `theta`, by
/// central differences of the brute-force probabilities.
pub fn classical_fisher_bruteforce(config: &NetworkConfig, theta: &[f64], caps: &OracleCaps, h: f64) -> Result<DMatrix<f64>> {
    let d = theta.len();
    let state = dense_probe(config, caps)?;
    let probs = |t: &[f64]| -> Result<HashMap<Key, f64>> {
        Ok(state
            .evolve(t)?
            .amplitudes
            .into_iter()
            .map(|(k, a)| (k, a.norm_sqr()))
            .collect())
    };
    let centre = probs(theta)?;
    let grads: Vec<HashMap<Key, f64>> = (0..d)
        .map(|j| {
            let mut plus = theta.to_vec();
            let mut minus = theta.to_vec();
            plus[j] += h;
            minus[j] -= h;
            let (p, q) = (probs(&plus)?, probs(&minus)?);
            Ok(centre
                .keys()
                .map(|k| {
                    let dp = p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0);
                    (k.clone(), dp / (2.0 * h))
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut f = DMatrix::zeros(d, d);
    for (k, p) in &centre {
        if *p < 1e-300 {
            continue;
        }
        let g = DVector::from_iterator(d, grads.iter().map(|gj| gj[k]));
        f += &g * g.transpose() / *p;
    }
    Ok(f)
}
