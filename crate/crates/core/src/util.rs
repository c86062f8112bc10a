/// `ln k!` for `k = 0..=n`.
pub(crate) fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Number-basis amplitudes `alpha^n e^{-alpha^2/2} / sqrt(n!)` for `n = 0..=cap`.
pub(crate) fn coherent_amplitudes(alpha: f64, cap: usize) -> Vec<f64> {
    if alpha == 0.0 {
        let mut out = vec![0.0; cap + 1];
        out[0] = 1.0;
        return out;
    }
    let lnf = ln_factorials(cap);
    let ln_abs = alpha.abs().ln();
    let half_mean = 0.5 * alpha * alpha;
    (0..=cap)
        .map(|n| {
            let mag = (n as f64 * ln_abs - half_mean - 0.5 * lnf[n]).exp();
            if alpha < 0.0 && n % 2 == 1 {
                -mag
            } else {
                mag
            }
        })
        .collect()
}

/// Smallest cap such that the Poisson(`mean`) tail above it is below `tail`.
pub(crate) fn poisson_cap(mean: f64, tail: f64) -> usize {
    if mean == 0.0 {
        return 0;
    }
    let mut term = (-mean).exp();
    let mut cdf = term;
    let mut k = 0usize;
    loop {
        // geometric bound on the remaining tail once terms decrease
        let ratio = mean / (k + 1) as f64;
        if 1.0 - cdf <= tail || (ratio < 1.0 && term * ratio / (1.0 - ratio) <= tail) {
            break;
        }
        k += 1;
        term *= mean / k as f64;
        cdf += term;
    }
    k
}

pub(crate) fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub(crate) fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_factorials_match_direct_products() {
        let t = ln_factorials(10);
        assert!((t[5] - 120f64.ln()).abs() < 1e-12);
        assert!((t[10] - 3628800f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn poisson_cap_bounds_tail() {
        let cap = poisson_cap(3.0, 1e-10);
        let amps = coherent_amplitudes(3f64.sqrt(), cap);
        let mass: f64 = amps.iter().map(|a| a * a).sum();
        assert!(1.0 - mass <= 1e-10);
    }
}
