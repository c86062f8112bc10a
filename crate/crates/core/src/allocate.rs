//! Closed-form optimal resource allocations.

use crate::error::{Error, Result};
use crate::fisher::{bound_general, ms_optimal_bound};
use crate::fock::{kappa_norm, SingleModeState};
use crate::network::NetworkConfig;
use crate::util::{l1_norm, sign};

#[derive(Clone, Debug, PartialEq)]
pub struct AllocationPlan {
    /// Signed coherent amplitudes.
    pub alphas: Vec<f64>,
    /// Splitting probabilities (entangled) or per-sensor totals `nT_j`
    /// (separable).
    pub splitting: Vec<f64>,
    /// Probe photons: one entry for the entangled scheme, one per sensor
    /// for the separable scheme.
    pub probe_photons: Vec<f64>,
    /// Per-shot bound reached by the plan, when the probe is known.
    pub achieved_bound: Option<f64>,
}

impl AllocationPlan {
    /// Entangled configuration with the given probe.
    pub fn entangled_config(&self, probe: SingleModeState) -> Result<NetworkConfig> {
        NetworkConfig::entangled(self.alphas.clone(), probe, self.splitting.clone())
    }

    /// Separable configuration with one probe per sensor.
    pub fn separable_config(&self, probes: Vec<SingleModeState>) -> Result<NetworkConfig> {
        NetworkConfig::separable(self.alphas.clone(), probes)
    }
}

fn check_v(v: &[f64]) -> Result<f64> {
    let norm = l1_norm(v);
    if v.is_empty() || !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::InvalidArgument("v must be a nonzero finite vector".into()));
    }
    Ok(norm)
}

/// Entangled optimum: `alpha_j = sign(v_j) sqrt(nc |v_j| / ||v||_1)` and
/// `P_j = |v_j| / ||v||_1`. Independent of the probe.
pub fn me_allocation(v: &[f64], nc: f64) -> Result<AllocationPlan> {
    let norm = check_v(v)?;
    if !(nc > 0.0) {
        return Err(Error::InvalidArgument("nc must be positive".into()));
    }
    let splitting: Vec<f64> = v.iter().map(|x| x.abs() / norm).collect();
    let alphas = v
        .iter()
        .zip(&splitting)
        .map(|(x, p)| sign(*x) * (nc * p).sqrt())
        .collect();
    Ok(AllocationPlan {
        alphas,
        splitting,
        probe_photons: Vec::new(),
        achieved_bound: None,
    })
}

/// [`me_allocation`] with the probe moments filled in, so the plan carries
/// its per-shot bound.
pub fn me_allocation_with_probe(v: &[f64], nc: f64, probe: &SingleModeState) -> Result<AllocationPlan> {
    let mut plan = me_allocation(v, nc)?;
    plan.probe_photons = vec![probe.mean_n()];
    plan.achieved_bound = Some(bound_general(nc, probe.mean_n(), probe.var_p(), 1, v));
    Ok(plan)
}

/// Separable optimum over the total photon budget: `nT_j` proportional to
/// `|v_j|^(2/3)`, half coherent and half probe within each sensor.
pub fn ms_allocation_norm(v: &[f64], nt: f64) -> Result<AllocationPlan> {
    check_v(v)?;
    if !(nt > 0.0) {
        return Err(Error::InvalidArgument("nT must be positive".into()));
    }
    let weights: Vec<f64> = v.iter().map(|x| x.abs().powf(2.0 / 3.0)).collect();
    let total: f64 = weights.iter().sum();
    let splitting: Vec<f64> = weights.iter().map(|w| nt * w / total).collect();
    let alphas = v
        .iter()
        .zip(&splitting)
        .map(|(x, t)| sign(*x) * (t / 2.0).sqrt())
        .collect();
    let probe_photons = splitting.iter().map(|t| t / 2.0).collect();
    Ok(AllocationPlan {
        alphas,
        splitting,
        probe_photons,
        achieved_bound: Some(ms_optimal_bound(v, nt, 1)),
    })
}

/// Separable optimum over coherent intensities for identical probes with
/// `n / d` photons each:
/// `alpha_j^2 = [ |v_j|/||v||_1 (nc var_p + n) - n/d ] / var_p`.
pub fn ms_coherent_allocation(v: &[f64], nc: f64, n: f64, var_p: f64) -> Result<AllocationPlan> {
    let norm = check_v(v)?;
    if !(var_p >= 1.0) {
        return Err(Error::InvalidArgument("var_p must be at least 1".into()));
    }
    let d = v.len() as f64;
    let budget = nc * var_p + n;
    let mut alphas = Vec::with_capacity(v.len());
    for (index, x) in v.iter().enumerate() {
        let value = (x.abs() / norm * budget - n / d) / var_p;
        if value < 0.0 {
            return Err(Error::Infeasible { index, value });
        }
        alphas.push(sign(*x) * value.sqrt());
    }
    let per_sensor = n / d;
    let splitting = alphas.iter().map(|a| a * a + per_sensor).collect();
    Ok(AllocationPlan {
        alphas,
        splitting,
        probe_photons: vec![per_sensor; v.len()],
        achieved_bound: Some(bound_general(nc, n, var_p, 1, v)),
    })
}

/// `kappa = sum_j alpha_j^2 P_j / (alpha_j^2 + P_j n)` over the sensors with
/// a nonzero denominator.
pub fn kappa(alphas: &[f64], splitting: &[f64], n: f64) -> f64 {
    alphas
        .iter()
        .zip(splitting)
        .map(|(a, p)| {
            let den = a * a + p * n;
            if den > 0.0 {
                a * a * p / den
            } else {
                0.0
            }
        })
        .sum()
}

/// `||v||_{2/3}^2`, the separable prefactor.
pub fn ms_prefactor(v: &[f64]) -> f64 {
    kappa_norm(v, 2.0 / 3.0).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::{qcrb, qfim_me, qfim_ms};
    use approx::assert_relative_eq;

    #[test]
    fn entangled_examples() {
        let p = me_allocation(&[0.5, -0.5], 6.0).unwrap();
        assert_relative_eq!(p.alphas[0], 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(p.alphas[1], -(3f64.sqrt()), epsilon = 1e-15);
        assert_eq!(p.splitting, vec![0.5, 0.5]);

        let p = me_allocation(&[1.0, 0.0, 0.0], 5.0).unwrap();
        assert_eq!(p.alphas, vec![5f64.sqrt(), 0.0, 0.0]);
        assert_eq!(p.splitting, vec![1.0, 0.0, 0.0]);

        let p = me_allocation(&[0.8, 0.2], 10.0).unwrap();
        assert_relative_eq!(p.alphas[0], 8f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(p.alphas[1], 2f64.sqrt(), epsilon = 1e-15);
        assert!(me_allocation(&[0.0, 0.0], 1.0).is_err());
        assert!(me_allocation(&[1.0], 0.0).is_err());
    }

    #[test]
    fn entangled_plan_saturates_chain() {
        let probe = SingleModeState::fock(6);
        for v in [vec![0.5, -0.5], vec![0.8, 0.2], vec![0.3, -0.6, 0.1], vec![0.0, 1.0, 0.0]] {
            let plan = me_allocation_with_probe(&v, 6.0, &probe).unwrap();
            let q = qfim_me(&plan.entangled_config(probe.clone()).unwrap()).unwrap();
            let bound = qcrb(&q, &v, 1).unwrap();
            assert_relative_eq!(bound, plan.achieved_bound.unwrap(), max_relative = 1e-12);
        }
    }

    #[test]
    fn separable_norm_examples() {
        let p = ms_allocation_norm(&[0.5, 0.5], 16.0).unwrap();
        assert_eq!(p.splitting, vec![8.0, 8.0]);
        assert_eq!(p.probe_photons, vec![4.0, 4.0]);
        assert_eq!(p.alphas, vec![2.0, 2.0]);
        assert_relative_eq!(p.achieved_bound.unwrap(), 2.0 / 256.0, epsilon = 1e-15);

        let p = ms_allocation_norm(&[1.0, 0.0], 16.0).unwrap();
        assert_eq!(p.splitting, vec![16.0, 0.0]);

        let p = ms_allocation_norm(&[0.8, 0.2], 10.0).unwrap();
        assert_relative_eq!(p.splitting[0] / p.splitting[1], 4f64.powf(2.0 / 3.0), epsilon = 1e-12);
        assert_relative_eq!(p.splitting.iter().sum::<f64>(), 10.0, epsilon = 1e-12);

        let p = ms_allocation_norm(&[-0.25, 0.25, 0.25, -0.25], 8.0).unwrap();
        assert!(p.splitting.iter().all(|t| (t - 2.0).abs() < 1e-12));
        assert_relative_eq!(p.achieved_bound.unwrap(), 4.0 / 64.0, epsilon = 1e-14);
    }

    #[test]
    fn separable_norm_plan_with_fock_probes() {
        let p = ms_allocation_norm(&[0.5, -0.5], 16.0).unwrap();
        let c = p.separable_config(vec![SingleModeState::fock(4); 2]).unwrap();
        let bound = qcrb(&qfim_ms(&c).unwrap(), &[0.5, -0.5], 1).unwrap();
        assert_relative_eq!(bound, 1.0 / 80.0, epsilon = 1e-15);
    }

    #[test]
    fn separable_coherent_examples() {
        let p = ms_coherent_allocation(&[0.5, 0.5], 4.0, 0.0, 1.0).unwrap();
        assert!(p.alphas.iter().all(|a| (a * a - 2.0).abs() < 1e-12));
        let p = ms_coherent_allocation(&[0.5, 0.5], 6.0, 6.0, 13.0).unwrap();
        assert!(p.alphas.iter().all(|a| (a * a - 3.0).abs() < 1e-12));
        let p = ms_coherent_allocation(&[0.8, 0.2], 6.0, 2.0, 5.0).unwrap();
        assert_relative_eq!(p.alphas[0].powi(2), 4.92, epsilon = 1e-12);
        assert_relative_eq!(p.alphas[1].powi(2), 1.08, epsilon = 1e-12);
        assert!(matches!(
            ms_coherent_allocation(&[0.99, 0.01], 1.0, 20.0, 41.0),
            Err(Error::Infeasible { index: 1, .. })
        ));
    }

    #[test]
    fn separable_coherent_plan_reaches_bound() {
        // per-sensor Fock(1) probes: var_p = 3, n = 2 over two sensors
        let v = [0.7, -0.3];
        let p = ms_coherent_allocation(&v, 6.0, 2.0, 3.0).unwrap();
        let c = p.separable_config(vec![SingleModeState::fock(1); 2]).unwrap();
        let bound = qcrb(&qfim_ms(&c).unwrap(), &v, 1).unwrap();
        assert_relative_eq!(bound, p.achieved_bound.unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn kappa_examples() {
        assert_relative_eq!(kappa(&[2.0, 2.0], &[0.5, 0.5], 8.0), 0.5, epsilon = 1e-15);
        assert_relative_eq!(kappa(&[1.0, 3.0, 0.5], &[0.2, 0.3, 0.5], 0.0), 1.0, epsilon = 1e-15);
    }
}
