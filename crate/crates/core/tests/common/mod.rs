//! Property suites shared by the `properties` and `acceptance` targets.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use qnet_core::allocate::{kappa, me_allocation_with_probe, ms_allocation_norm};
use qnet_core::estimate::EstimationResult;
use qnet_core::fisher::{
    bound_general, gain, invert_dense, invert_qfim, ms_optimal_bound, qcrb, qfim_me,
};
use qnet_core::fock::SingleModeState;
use qnet_core::interferometer::{b_matrix, mzi_matrix};
use qnet_core::network::{marginal_qc_distribution, probability_table, sample, Cutoffs, Outcome};
use qnet_core::oracle::{dense_probe, qfim_of_state, OracleCaps};
use qnet_core::NetworkConfig;

pub type Property = fn(u32) -> Result<(), String>;

/// Every suite with its default case count.
pub const SUITES: &[(&str, Property, u32)] = &[
    ("mzi_orthogonality", mzi_orthogonality, 1000),
    ("mzi_composition", mzi_composition, 1000),
    ("b_matrix_consistency", b_matrix_consistency, 1000),
    ("state_norms", state_norms, 1000),
    ("gain_range", gain_range, 1000),
    ("qc_split_normalization", qc_split_normalization, 1000),
    ("sherman_morrison_inverse", sherman_morrison_inverse, 1000),
    ("qfim_symmetric_psd", qfim_symmetric_psd, 1000),
    ("kappa_inequality", kappa_inequality, 1000),
    ("cauchy_schwarz_chain", cauchy_schwarz_chain, 1000),
    ("me_allocation_saturates", me_allocation_saturates, 1000),
    ("ms_allocation_totals", ms_allocation_totals, 1000),
    ("bound_monotonicity", bound_monotonicity, 1000),
    ("msf_nonnegative", msf_nonnegative, 1000),
    ("table_periodicity", table_periodicity, 100),
    ("separable_factorization", separable_factorization, 100),
    ("sampling_determinism", sampling_determinism, 100),
    ("oracle_evolution_norm", oracle_evolution_norm, 64),
];

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn check<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn probe() -> impl Strategy<Value = SingleModeState> {
    prop_oneof![
        (0usize..=6).prop_map(SingleModeState::fock),
        (0.05..1.0f64).prop_map(|r| SingleModeState::squeezed_vacuum(r, None).unwrap()),
        (0.3..2.0f64).prop_map(|a| SingleModeState::cat(a, None).unwrap()),
    ]
}

fn simplex(weights: Vec<f64>) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

fn signed_amplitude() -> impl Strategy<Value = f64> {
    (0.2..2.0f64, any::<bool>()).prop_map(|(a, neg)| if neg { -a } else { a })
}

/// Entangled configurations with every `D_jj` bounded away from zero.
fn me_config() -> impl Strategy<Value = NetworkConfig> {
    (1usize..=4)
        .prop_flat_map(|d| (vec(signed_amplitude(), d), vec(0.05..1.0f64, d), probe()))
        .prop_map(|(alphas, w, state)| NetworkConfig::entangled(alphas, state, simplex(w)).unwrap())
}

fn nonzero_v(d: usize) -> impl Strategy<Value = Vec<f64>> {
    vec((0.05..1.0f64, any::<bool>()).prop_map(|(x, neg)| if neg { -x } else { x }), d)
}

fn mzi_orthogonality(cases: u32) -> Result<(), String> {
    check(cases, (0usize..=12, 0.0..2.0 * PI), |(n, t)| {
        let d = mzi_matrix(n, t).matrix;
        let err = (d.transpose() * &d - DMatrix::identity(n + 1, n + 1)).abs().max();
        prop_assert!(err <= 1e-10, "N={n} theta={t} err={err}");
        Ok(())
    })
}

fn mzi_composition(cases: u32) -> Result<(), String> {
    check(cases, (0usize..=12, 0.0..2.0 * PI, 0.0..2.0 * PI), |(n, a, b)| {
        let lhs = mzi_matrix(n, a).matrix * mzi_matrix(n, b).matrix;
        let err = (lhs - mzi_matrix(n, a + b).matrix).abs().max();
        prop_assert!(err <= 1e-9, "N={n} err={err}");
        Ok(())
    })
}

fn b_matrix_consistency(cases: u32) -> Result<(), String> {
    check(cases, (0usize..=12, 0.0..2.0 * PI), |(n, t)| {
        let err = (b_matrix(n, t) - mzi_matrix(n, t).matrix * b_matrix(n, 0.0)).abs().max();
        prop_assert!(err <= 1e-9, "N={n} err={err}");
        Ok(())
    })
}

fn state_norms(cases: u32) -> Result<(), String> {
    let states = prop_oneof![
        (-4.0..4.0f64).prop_map(|a| SingleModeState::coherent(a, None).unwrap()),
        (0.0..1.5f64).prop_map(|r| SingleModeState::squeezed_vacuum(r, None).unwrap()),
        (0.1..3.0f64).prop_map(|a| SingleModeState::cat(a, None).unwrap()),
    ];
    check(cases, states, |s| {
        prop_assert!(s.norm_sqr() >= 1.0 - 1e-8 && s.norm_sqr() <= 1.0 + 1e-12);
        prop_assert!(s.mean_n() >= 0.0 && s.var_p() >= 0.0);
        Ok(())
    })
}

fn gain_range(cases: u32) -> Result<(), String> {
    check(cases, (1usize..=6).prop_flat_map(nonzero_v), |v| {
        let norm: f64 = v.iter().map(|x| x.abs()).sum();
        let v: Vec<f64> = v.iter().map(|x| x / norm).collect();
        let g = gain(&v).unwrap();
        prop_assert!(g >= 1.0 - 1e-12 && g <= v.len() as f64 + 1e-12, "gain {g}");
        Ok(())
    })
}

fn qc_split_normalization(cases: u32) -> Result<(), String> {
    let strategy = (1usize..=4)
        .prop_flat_map(|d| (vec(0.0..1.0f64, d), probe()))
        .prop_filter("nonzero weights", |(w, _)| w.iter().sum::<f64>() > 1e-3);
    check(cases, strategy, |(w, state)| {
        let p = simplex(w);
        let config = NetworkConfig::entangled(vec![0.0; p.len()], state.clone(), p.clone()).unwrap();
        let dist = marginal_qc_distribution(&config).unwrap();
        let total: f64 = dist.iter().map(|(_, q)| q).sum();
        prop_assert!((total - state.norm_sqr()).abs() <= 1e-12);
        for (j, pj) in p.iter().enumerate() {
            let mean: f64 = dist.iter().map(|(o, q)| o[j] as f64 * q).sum();
            prop_assert!((mean - state.mean_n() * pj).abs() <= 1e-10);
        }
        Ok(())
    })
}

fn sherman_morrison_inverse(cases: u32) -> Result<(), String> {
    check(cases, me_config(), |c| {
        let q = qfim_me(&c).unwrap();
        let inv = invert_qfim(&q).unwrap();
        let d = q.dim();
        let err = (&q.matrix * &inv - DMatrix::identity(d, d)).abs().max();
        prop_assert!(err <= 1e-10, "err={err}");
        let dense = invert_dense(&q).unwrap();
        prop_assert!((&dense - &inv).abs().max() <= 1e-9 * inv.abs().max());
        Ok(())
    })
}

fn qfim_symmetric_psd(cases: u32) -> Result<(), String> {
    check(cases, me_config(), |c| {
        let f = qfim_me(&c).unwrap().matrix;
        prop_assert!((&f - f.transpose()).abs().max() <= 1e-12);
        let min = SymmetricEigen::new(f.clone()).eigenvalues.min();
        prop_assert!(min >= -1e-10 * f.abs().max().max(1.0));
        Ok(())
    })
}

fn kappa_inequality(cases: u32) -> Result<(), String> {
    let strategy = (1usize..=5).prop_flat_map(|d| (vec(-3.0..3.0f64, d), vec(0.01..1.0f64, d), 0.0..20.0f64));
    check(cases, strategy, |(alphas, w, n)| {
        let p = simplex(w);
        let nc: f64 = alphas.iter().map(|a| a * a).sum();
        let k = kappa(&alphas, &p, n);
        prop_assert!(k >= 0.0 && k <= nc / (nc + n) + 1e-12, "kappa {k}");
        // equality when P_j = alpha_j^2 / nc
        let p_opt: Vec<f64> = alphas.iter().map(|a| a * a / nc).collect();
        prop_assert!((kappa(&alphas, &p_opt, n) - nc / (nc + n)).abs() <= 1e-12);
        Ok(())
    })
}

fn cauchy_schwarz_chain(cases: u32) -> Result<(), String> {
    let strategy = me_config()
        .prop_filter("var_p >= 1", |c| match c.probe() {
            qnet_core::network::Probe::Entangled { state, .. } => state.var_p() >= 1.0,
            _ => false,
        })
        .prop_flat_map(|c| {
            let d = c.d();
            (Just(c), nonzero_v(d), 1u64..500)
        });
    check(cases, strategy, |(c, v, m)| {
        let q = qfim_me(&c).unwrap();
        let var_p = q.gamma + 1.0;
        let lower = bound_general(c.mean_nc(), c.mean_n(), var_p, m, &v);
        let value = qcrb(&q, &v, m).unwrap();
        prop_assert!(value >= lower * (1.0 - 1e-12) - 1e-12, "qcrb {value} < bound {lower}");
        Ok(())
    })
}

fn me_allocation_saturates(cases: u32) -> Result<(), String> {
    let strategy = (1usize..=4).prop_flat_map(|d| (nonzero_v(d), 0.5..20.0f64, 0usize..=10));
    check(cases, strategy, |(v, nc, n)| {
        let probe = SingleModeState::fock(n);
        let plan = me_allocation_with_probe(&v, nc, &probe).unwrap();
        let total: f64 = plan.alphas.iter().map(|a| a * a).sum();
        prop_assert!((total - nc).abs() <= 1e-12 * nc.max(1.0));
        let q = qfim_me(&plan.entangled_config(probe).unwrap()).unwrap();
        let value = qcrb(&q, &v, 1).unwrap();
        let bound = plan.achieved_bound.unwrap();
        prop_assert!((value - bound).abs() <= 1e-10 * bound.max(1.0), "{value} vs {bound}");
        Ok(())
    })
}

fn ms_allocation_totals(cases: u32) -> Result<(), String> {
    let strategy = (1usize..=5).prop_flat_map(|d| (nonzero_v(d), 0.5..50.0f64));
    check(cases, strategy, |(v, nt)| {
        let plan = ms_allocation_norm(&v, nt).unwrap();
        let total: f64 = plan.splitting.iter().sum();
        prop_assert!((total - nt).abs() <= 1e-12 * nt);
        let achieved = plan.achieved_bound.unwrap();
        prop_assert!((achieved - ms_optimal_bound(&v, nt, 1)).abs() <= 1e-12 * achieved);
        Ok(())
    })
}

fn bound_monotonicity(cases: u32) -> Result<(), String> {
    let strategy = (0.1..20.0f64, 0.1..20.0f64, 1.0..50.0f64, 1u64..1000, 0.01..5.0f64);
    check(cases, strategy, |(nc, n, var_p, m, bump)| {
        let v = [0.3, -0.7];
        let base = bound_general(nc, n, var_p, m, &v);
        prop_assert!(bound_general(nc, n, var_p + bump, m, &v) < base);
        prop_assert!(bound_general(nc + bump, n, var_p, m, &v) < base);
        prop_assert!(bound_general(nc, n + bump, var_p, m, &v) < base);
        prop_assert!(bound_general(nc, n, var_p, m + 1, &v) < base);
        Ok(())
    })
}

fn msf_nonnegative(cases: u32) -> Result<(), String> {
    let strategy = (1usize..=3).prop_flat_map(|d| (vec(vec(0.0..PI, d), 2..40), vec(0.0..PI, d), nonzero_v(d)));
    check(cases, strategy, |(estimates, theta_true, v)| {
        let r = EstimationResult {
            trials: estimates.len(),
            estimates,
            theta_true,
            v: v.clone(),
            msf: 0.0,
            bias: 0.0,
            m: 1,
            seed: 0,
            nonconverged: 0,
            floored: 0,
        };
        let (msf, bias) = r.msf_along(&v);
        prop_assert!(msf >= 0.0 && bias.is_finite());
        Ok(())
    })
}

fn small_me_config() -> impl Strategy<Value = NetworkConfig> {
    (1usize..=2)
        .prop_flat_map(|d| (vec(-1.5..1.5f64, d), vec(0.05..1.0f64, d), 0usize..=3))
        .prop_map(|(a, w, n)| NetworkConfig::entangled(a, SingleModeState::fock(n), simplex(w)).unwrap())
}

fn table_periodicity(cases: u32) -> Result<(), String> {
    let strategy = small_me_config().prop_flat_map(|c| {
        let d = c.d();
        (Just(c), vec(0.0..2.0 * PI, d), 0..2usize)
    });
    check(cases, strategy, |(c, theta, j)| {
        let j = j.min(c.d() - 1);
        let mut shifted = theta.clone();
        shifted[j] += 4.0 * PI;
        let cut = Cutoffs::auto(&c);
        let a = probability_table(&c, &theta, &cut).unwrap();
        let b = probability_table(&c, &shifted, &cut).unwrap();
        for (o, p) in a.entries() {
            prop_assert!((b.probability(o) - p).abs() <= 1e-10);
        }
        Ok(())
    })
}

fn separable_factorization(cases: u32) -> Result<(), String> {
    let strategy = ((-1.5..1.5f64, 0usize..=3), (-1.5..1.5f64, 0usize..=3), 0.0..PI, 0.0..PI);
    check(cases, strategy, |((a1, n1), (a2, n2), t1, t2)| {
        let s1 = SingleModeState::fock(n1);
        let s2 = SingleModeState::fock(n2);
        let exact = |c: &NetworkConfig| Cutoffs {
            prune_tolerance: 0.0,
            ..Cutoffs::auto(c)
        };
        let joint = NetworkConfig::separable(vec![a1, a2], vec![s1.clone(), s2.clone()]).unwrap();
        let one = NetworkConfig::separable(vec![a1], vec![s1]).unwrap();
        let two = NetworkConfig::separable(vec![a2], vec![s2]).unwrap();
        let tj = probability_table(&joint, &[t1, t2], &exact(&joint)).unwrap();
        let t1 = probability_table(&one, &[t1], &exact(&one)).unwrap();
        let t2 = probability_table(&two, &[t2], &exact(&two)).unwrap();
        for (o, p) in tj.entries() {
            let p1 = t1.probability(&Outcome::new(o.counts[..2].to_vec()));
            let p2 = t2.probability(&Outcome::new(o.counts[2..].to_vec()));
            prop_assert!((p - p1 * p2).abs() <= 1e-12);
        }
        Ok(())
    })
}

fn sampling_determinism(cases: u32) -> Result<(), String> {
    let strategy = (small_me_config(), any::<u64>(), 1usize..200);
    check(cases, strategy, |(c, seed, count)| {
        let theta = vec![1.0; c.d()];
        let table = probability_table(&c, &theta, &Cutoffs::auto(&c)).unwrap();
        let a = sample(&table, seed, count).unwrap();
        prop_assert_eq!(&a, &sample(&table, seed, count).unwrap());
        prop_assert!(a.iter().all(|o| table.probability(o) > 0.0));
        Ok(())
    })
}

fn oracle_evolution_norm(cases: u32) -> Result<(), String> {
    let strategy = small_me_config().prop_flat_map(|c| {
        let d = c.d();
        (Just(c), vec(0.0..2.0 * PI, d))
    });
    check(cases, strategy, |(c, theta)| {
        let s = dense_probe(&c, &OracleCaps::auto(&c)).unwrap();
        let t = s.evolve(&theta).unwrap();
        prop_assert!((s.norm_sqr() - t.norm_sqr()).abs() <= 1e-10);
        let f = qfim_of_state(&s, c.d());
        prop_assert!((&f - f.transpose()).abs().max() <= 1e-12);
        prop_assert!(SymmetricEigen::new(f).eigenvalues.min() >= -1e-10);
        Ok(())
    })
}

/// Fixed set of small entangled configurations: `d` in 1..=3, Fock probes
/// with `n <= 3`, `alpha_j^2 <= 3` with random signs.
pub fn regression_configs(count: usize, seed: u64) -> Vec<NetworkConfig> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let d = 1 + k % 3;
            let alphas: Vec<f64> = (0..d)
                .map(|_| {
                    let a = rng.gen_range(0.0..3.0f64).sqrt();
                    if rng.gen_bool(0.5) {
                        -a
                    } else {
                        a
                    }
                })
                .collect();
            let weights: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..1.0)).collect();
            let n = rng.gen_range(0..=3);
            NetworkConfig::entangled(alphas, SingleModeState::fock(n), simplex(weights)).unwrap()
        })
        .collect()
}
