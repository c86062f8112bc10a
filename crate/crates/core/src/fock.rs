//! Single-mode probe states on a truncated number basis.
//!
//! Every state here has real number-basis coefficients, which makes
//! `<p> = 0` and lets the p-quadrature variance be read off from
//! `<2 b†b + 1 - b b - b†b†>`.

use crate::error::{Error, Result};
use crate::util::{coherent_amplitudes, ln_factorials};

/// Largest truncation deficit `1 - sum c_m^2` accepted by the analytic
/// constructors.
pub const TAIL_TOLERANCE: f64 = 1e-8;

/// A pure single-mode state `sum_m c(m) |m>` with real coefficients.
///
/// The mean photon number and p-quadrature variance (vacuum = 1) are computed
/// once from the stored coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleModeState {
    coeffs: Vec<f64>,
    mean_n: f64,
    var_p: f64,
}

impl SingleModeState {
    /// Builds a state from arbitrary real coefficients. The coefficients are
    /// taken as given and not renormalized.
    pub fn from_coeffs(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument("empty coefficient vector".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        let norm: f64 = coeffs.iter().map(|c| c * c).sum();
        if norm > 1.0 + 1e-9 {
            return Err(Error::InvalidArgument(format!("norm {norm} exceeds one")));
        }
        let (mean_n, var_p) = moments(&coeffs);
        Ok(Self { coeffs, mean_n, var_p })
    }

    pub fn vacuum() -> Self {
        Self::fock(0)
    }

    /// Number state `|n>`.
    pub fn fock(n: usize) -> Self {
        let mut coeffs = vec![0.0; n + 1];
        coeffs[n] = 1.0;
        Self {
            coeffs,
            mean_n: n as f64,
            var_p: (2 * n + 1) as f64,
        }
    }

    /// Coherent state with real amplitude `alpha`.
    ///
    /// Without an explicit cutoff, the smallest cutoff at or above
    /// [`auto_cutoff`] that meets [`TAIL_TOLERANCE`] is used.
    pub fn coherent(alpha: f64, cutoff: Option<usize>) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::InvalidArgument("non-finite amplitude".into()));
        }
        if alpha == 0.0 && cutoff.is_none() {
            return Ok(Self::vacuum());
        }
        build_truncated(alpha * alpha, cutoff, |m| coherent_amplitudes(alpha, m))
    }

    /// Squeezed vacuum `S(r)|0>` anti-squeezed along p, so that
    /// `var_p = e^{2r}` and `mean_n = sinh^2 r`.
    pub fn squeezed_vacuum(r: f64, cutoff: Option<usize>) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::InvalidArgument(format!("squeezing parameter {r} must be >= 0")));
        }
        if r == 0.0 && cutoff.is_none() {
            return Ok(Self::vacuum());
        }
        build_truncated(r.sinh().powi(2), cutoff, |m| squeezed_coeffs(r, m))
    }

    /// Squeezed vacuum with the given mean photon number.
    pub fn squeezed_vacuum_with_mean(mean_n: f64, cutoff: Option<usize>) -> Result<Self> {
        if !(mean_n >= 0.0) {
            return Err(Error::InvalidArgument(format!("mean photon number {mean_n} must be >= 0")));
        }
        Self::squeezed_vacuum(mean_n.sqrt().asinh(), cutoff)
    }

    /// Even cat state `(|i alpha> + |-i alpha>)` normalized, with `alpha >= 0`.
    pub fn cat(alpha: f64, cutoff: Option<usize>) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("cat amplitude {alpha} must be >= 0")));
        }
        if alpha == 0.0 && cutoff.is_none() {
            return Ok(Self::vacuum());
        }
        let a2 = alpha * alpha;
        let norm = (2.0 / (1.0 + (-2.0 * a2).exp())).sqrt();
        build_truncated(a2, cutoff, |m| {
            coherent_amplitudes(alpha, m)
                .into_iter()
                .enumerate()
                .map(|(k, c)| match k % 4 {
                    0 => norm * c,
                    2 => -norm * c,
                    _ => 0.0,
                })
                .collect()
        })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `|m>`, zero beyond the cutoff.
    pub fn coeff(&self, m: usize) -> f64 {
        self.coeffs.get(m).copied().unwrap_or(0.0)
    }

    /// Highest photon number represented.
    pub fn cutoff(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn mean_n(&self) -> f64 {
        self.mean_n
    }

    pub fn var_p(&self) -> f64 {
        self.var_p
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Largest photon number carrying a nonzero coefficient.
    pub fn support_max(&self) -> usize {
        self.coeffs.iter().rposition(|c| *c != 0.0).unwrap_or(0)
    }
}

/// Default cutoff `ceil(n + 10 sqrt(n + 1))` for a mean photon number `n`.
pub fn auto_cutoff(mean_n: f64) -> usize {
    (mean_n + 10.0 * (mean_n + 1.0).sqrt()).ceil() as usize
}

/// `(sum_j |v_j|^kappa)^(1/kappa)`.
pub fn kappa_norm(v: &[f64], kappa: f64) -> f64 {
    if kappa == 1.0 {
        return v.iter().map(|x| x.abs()).sum();
    }
    v.iter()
        .map(|x| x.abs().powf(kappa))
        .sum::<f64>()
        .powf(1.0 / kappa)
}

/// Mean photon number and p-quadrature variance computed directly from the
/// coefficients.
pub fn moments(coeffs: &[f64]) -> (f64, f64) {
    let norm: f64 = coeffs.iter().map(|c| c * c).sum();
    let mean: f64 = coeffs.iter().enumerate().map(|(m, c)| m as f64 * c * c).sum();
    let bb: f64 = coeffs
        .windows(3)
        .enumerate()
        .map(|(m, w)| w[0] * w[2] * (((m + 1) * (m + 2)) as f64).sqrt())
        .sum();
    // <b b> = <b† b†> for real coefficients
    (mean, 2.0 * mean + norm - 2.0 * bb)
}

fn build_truncated<F>(mean_n: f64, cutoff: Option<usize>, coeffs_at: F) -> Result<SingleModeState>
where
    F: Fn(usize) -> Vec<f64>,
{
    let deficit = |c: &[f64]| 1.0 - c.iter().map(|x| x * x).sum::<f64>();
    let coeffs = match cutoff {
        Some(m) => {
            let c = coeffs_at(m);
            let d = deficit(&c);
            if d > TAIL_TOLERANCE {
                return Err(Error::CutoffTooSmall {
                    cutoff: m,
                    deficit: d,
                    tolerance: TAIL_TOLERANCE,
                });
            }
            c
        }
        None => {
            let mut m = auto_cutoff(mean_n);
            loop {
                let c = coeffs_at(m);
                if deficit(&c) <= TAIL_TOLERANCE {
                    break c;
                }
                m += 2 + m / 8;
            }
        }
    };
    SingleModeState::from_coeffs(coeffs)
}

fn squeezed_coeffs(r: f64, cutoff: usize) -> Vec<f64> {
    let mut out = vec![0.0; cutoff + 1];
    out[0] = 1.0 / r.cosh().sqrt();
    if r == 0.0 {
        return out;
    }
    let lnf = ln_factorials(cutoff);
    let ln_t = r.tanh().ln();
    let ln_pre = -0.5 * r.cosh().ln();
    for k in 1..=cutoff / 2 {
        let mag = (ln_pre + k as f64 * ln_t + 0.5 * lnf[2 * k]
            - k as f64 * std::f64::consts::LN_2
            - lnf[k])
            .exp();
        out[2 * k] = if k % 2 == 1 { -mag } else { mag };
    }
    out
}
