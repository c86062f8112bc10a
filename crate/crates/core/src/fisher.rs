//! Quantum Fisher information matrices and sensitivity bounds.
//!
//! For the entangled scheme the QFIM has the compact form
//! `F = gamma f f^T + diag(D)` with `gamma = var_p - 1`, `f_j = alpha_j sqrt(P_j)`
//! and `D_jj = alpha_j^2 + P_j n`, so it is inverted in closed form with the
//! Sherman-Morrison formula. The separable scheme gives a diagonal QFIM.
//!
//! Every bound takes an unnormalized `v` and carries the `||v||_1^2` factor.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fock::kappa_norm;
use crate::network::{NetworkConfig, Probe, Scheme};
use crate::util::l1_norm;

#[derive(Clone, Debug, PartialEq)]
pub struct Qfim {
    pub scheme: Scheme,
    /// `var_p - 1`; zero for the separable scheme.
    pub gamma: f64,
    pub f: DVector<f64>,
    pub diag: DVector<f64>,
    pub matrix: DMatrix<f64>,
    /// `sum_j f_j^2 / D_jj` over the sensors with `D_jj > 0`.
    pub kappa: f64,
    /// Set when a probe has `var_p < 1`, outside the range where the
    /// analytic optima hold.
    pub sub_shot_noise_probe: bool,
}

impl Qfim {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Rank-one-plus-diagonal QFIM.
    pub fn compact(gamma: f64, f: DVector<f64>, diag: DVector<f64>) -> Self {
        let matrix = DMatrix::from_diagonal(&diag) + &f * f.transpose() * gamma;
        let kappa = kappa_of(&f, &diag);
        Self {
            scheme: Scheme::Entangled,
            gamma,
            f,
            diag,
            matrix,
            kappa,
            sub_shot_noise_probe: gamma < 0.0,
        }
    }

    /// Diagonal QFIM with the given entries.
    pub fn diagonal(entries: DVector<f64>) -> Self {
        let d = entries.len();
        Self {
            scheme: Scheme::Separable,
            gamma: 0.0,
            f: DVector::zeros(d),
            matrix: DMatrix::from_diagonal(&entries),
            diag: entries,
            kappa: 0.0,
            sub_shot_noise_probe: false,
        }
    }
}

fn kappa_of(f: &DVector<f64>, diag: &DVector<f64>) -> f64 {
    f.iter()
        .zip(diag.iter())
        .filter(|(_, &dj)| dj > 0.0)
        .map(|(fj, dj)| fj * fj / dj)
        .sum()
}

/// QFIM of an entangled-scheme configuration.
pub fn qfim_me(config: &NetworkConfig) -> Result<Qfim> {
    let Probe::Entangled { state, splitting } = config.probe() else {
        return Err(Error::WrongScheme { expected: "ME" });
    };
    let alphas = config.alphas();
    let f = DVector::from_iterator(alphas.len(), alphas.iter().zip(splitting).map(|(a, p)| a * p.sqrt()));
    let diag = DVector::from_iterator(
        alphas.len(),
        alphas.iter().zip(splitting).map(|(a, p)| a * a + p * state.mean_n()),
    );
    Ok(Qfim::compact(state.var_p() - 1.0, f, diag))
}

/// Diagonal QFIM of a separable-scheme configuration,
/// `F_jj = alpha_j^2 var_p_j + n_j`.
pub fn qfim_ms(config: &NetworkConfig) -> Result<Qfim> {
    let Probe::Separable { states } = config.probe() else {
        return Err(Error::WrongScheme { expected: "MS" });
    };
    let entries = config
        .alphas()
        .iter()
        .zip(states)
        .map(|(a, s)| a * a * s.var_p() + s.mean_n());
    let mut q = Qfim::diagonal(DVector::from_iterator(states.len(), entries));
    q.sub_shot_noise_probe = states.iter().any(|s| s.var_p() < 1.0);
    Ok(q)
}

/// QFIM of either scheme.
pub fn qfim(config: &NetworkConfig) -> Result<Qfim> {
    match config.scheme() {
        Scheme::Entangled => qfim_me(config),
        Scheme::Separable => qfim_ms(config),
    }
}

/// Closed-form inverse `D^-1 - gamma/(1 + gamma kappa) g g^T`, `g = D^-1 f`.
pub fn invert_qfim(q: &Qfim) -> Result<DMatrix<f64>> {
    if let Some(index) = q.diag.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::Singular { index });
    }
    let g = q.f.component_div(&q.diag);
    let denom = 1.0 + q.gamma * q.kappa;
    if denom.abs() < 1e-300 {
        return Err(Error::Singular { index: 0 });
    }
    let inv_diag = q.diag.map(|x| 1.0 / x);
    Ok(DMatrix::from_diagonal(&inv_diag) - &g * g.transpose() * (q.gamma / denom))
}

/// Inverse by LU decomposition of the dense matrix.
pub fn invert_dense(q: &Qfim) -> Result<DMatrix<f64>> {
    q.matrix.clone().try_inverse().ok_or(Error::Singular { index: 0 })
}

/// Sub-QFIM on the sensors with `D_jj > 0`, plus their indices.
///
/// A sensor with `D_jj = 0` has no coherent light and no probe photons, so
/// its row and column of `F` vanish and it can be dropped exactly.
fn restrict(q: &Qfim, v: &[f64]) -> Result<(Qfim, Vec<usize>)> {
    if v.len() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            found: v.len(),
        });
    }
    let support: Vec<usize> = (0..q.dim()).filter(|&j| q.diag[j] > 0.0).collect();
    if let Some(index) = (0..q.dim()).find(|&j| v[j] != 0.0 && !(q.diag[j] > 0.0)) {
        return Err(Error::Singular { index });
    }
    let pick = |x: &DVector<f64>| DVector::from_iterator(support.len(), support.iter().map(|&j| x[j]));
    let mut sub = Qfim::compact(q.gamma, pick(&q.f), pick(&q.diag));
    sub.scheme = q.scheme;
    sub.sub_shot_noise_probe = q.sub_shot_noise_probe;
    Ok((sub, support))
}

/// `v^T F^-1 v / m`, evaluated on the sensors that receive resources.
pub fn qcrb(q: &Qfim, v: &[f64], m: u64) -> Result<f64> {
    check_shots(m)?;
    let (sub, support) = restrict(q, v)?;
    let inv = invert_qfim(&sub)?;
    let vs = DVector::from_iterator(support.len(), support.iter().map(|&j| v[j]));
    Ok((vs.transpose() * inv * &vs)[(0, 0)] / m as f64)
}

/// `Tr(F^-1) / m`.
pub fn sum_of_variances_bound(q: &Qfim, m: u64) -> Result<f64> {
    check_shots(m)?;
    Ok(invert_qfim(q)?.trace() / m as f64)
}

fn check_shots(m: u64) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidArgument("shot number must be at least 1".into()));
    }
    Ok(())
}

/// Optimal entangled-scheme bound for a given probe,
/// `||v||_1^2 / (m [nc var_p + n])`.
pub fn bound_general(nc: f64, n: f64, var_p: f64, m: u64, v: &[f64]) -> f64 {
    l1_norm(v).powi(2) / (m as f64 * (nc * var_p + n))
}

/// `||v||_1^2 / (m nT)`.
pub fn shot_noise(v: &[f64], nt: f64, m: u64) -> f64 {
    l1_norm(v).powi(2) / (m as f64 * nt)
}

/// Fock probe with `n = nT/2`: `2 ||v||_1^2 / (m [nT^2 + 2 nT])`.
pub fn fock_optimal_bound(v: &[f64], nt: f64, m: u64) -> f64 {
    2.0 * l1_norm(v).powi(2) / (m as f64 * (nt * nt + 2.0 * nt))
}

/// Squeezed-vacuum variance `2n + 2 sqrt(n(n+1)) + 1` at mean photon number `n`.
pub fn squeezed_var_p(n: f64) -> f64 {
    2.0 * n + 2.0 * (n * (n + 1.0)).sqrt() + 1.0
}

/// Entangled scheme with a squeezed-vacuum probe and `nc = n = nT/2`.
pub fn squeezed_bound(v: &[f64], nt: f64, m: u64) -> f64 {
    let half = nt / 2.0;
    bound_general(half, half, squeezed_var_p(half), m, v)
}

/// Large-`nT` entangled optimum `||v||_1^2 / (m nT^2)`.
pub fn me_optimal_bound(v: &[f64], nt: f64, m: u64) -> f64 {
    l1_norm(v).powi(2) / (m as f64 * nt * nt)
}

/// Separable optimum `||v||_{2/3}^2 / (m nT^2)`.
pub fn ms_optimal_bound(v: &[f64], nt: f64, m: u64) -> f64 {
    kappa_norm(v, 2.0 / 3.0).powi(2) / (m as f64 * nt * nt)
}

/// Ratio of the separable to the entangled optimum, `||v||_{2/3}^2` for
/// `||v||_1 = 1`. Lies in `[1, d]`.
pub fn gain(v: &[f64]) -> Result<f64> {
    let norm = l1_norm(v);
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::Unnormalized { norm });
    }
    Ok(kappa_norm(v, 2.0 / 3.0).powi(2))
}
