//! Mach-Zehnder evolution `exp(-i theta H)` with `H = (a†b - a b†)/(2i)`
//! restricted to two-mode sectors of fixed total photon number `N`.
//!
//! On a sector the generator is unitarily equivalent to the real symmetric
//! tridiagonal `J_x = (a†b + a b†)/2` through the diagonal phase
//! `S = diag(i^k)`, `k` being the photon count in mode `a`. The eigenpairs of
//! `J_x` are computed once per `N` and every rotation angle is assembled from
//! them in real arithmetic: the matrix elements of the evolution are real and
//! those of `exp(-i theta H) H` purely imaginary.
//!
//! Public matrices ([`MziSector`], [`b_matrix`]) index the sector basis by the
//! photon count in mode `b`: index `i` is the state `|N - i, i>`.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, SymmetricEigen};

/// Eigen-decomposition of `J_x` on one sector, in the mode-`a` count basis.
#[derive(Debug)]
pub struct SectorEigen {
    total: usize,
    /// Row-major `(N+1) x (N+1)`; row `k` holds component `k` of every
    /// eigenvector, eigenvectors ordered by ascending eigenvalue.
    vectors: Vec<f64>,
    /// Exactly `e - N/2`.
    eigenvalues: Vec<f64>,
}

impl SectorEigen {
    fn compute(total: usize) -> Self {
        let dim = total + 1;
        let mut jx = DMatrix::<f64>::zeros(dim, dim);
        for k in 0..total {
            let s = 0.5 * (((k + 1) * (total - k)) as f64).sqrt();
            jx[(k + 1, k)] = s;
            jx[(k, k + 1)] = s;
        }
        let eig = SymmetricEigen::new(jx);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut vectors = vec![0.0; dim * dim];
        let mut eigenvalues = Vec::with_capacity(dim);
        for (e, &col) in order.iter().enumerate() {
            let exact = e as f64 - 0.5 * total as f64;
            debug_assert!((eig.eigenvalues[col] - exact).abs() < 1e-8);
            eigenvalues.push(exact);
            for k in 0..dim {
                vectors[k * dim + e] = eig.eigenvectors[(k, col)];
            }
        }
        Self {
            total,
            vectors,
            eigenvalues,
        }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Phase factors needed to evaluate the rotation at `theta`.
    pub fn at(self: &Arc<Self>, theta: f64) -> SectorRotation {
        let (cos, sin) = self
            .eigenvalues
            .iter()
            .map(|l| {
                let (s, c) = (theta * l).sin_cos();
                (c, s)
            })
            .unzip();
        SectorRotation {
            eigen: Arc::clone(self),
            theta,
            cos,
            sin,
        }
    }
}

/// The sector evolution at a fixed angle, evaluated element by element.
#[derive(Clone, Debug)]
pub struct SectorRotation {
    eigen: Arc<SectorEigen>,
    theta: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl SectorRotation {
    pub fn total(&self) -> usize {
        self.eigen.total
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `<n_out, N - n_out| exp(-i theta H) |n_in, N - n_in>`, with both
    /// arguments the photon count in mode `a`.
    #[inline]
    pub fn element(&self, n_out: usize, n_in: usize) -> f64 {
        if self.theta == 0.0 {
            return if n_out == n_in { 1.0 } else { 0.0 };
        }
        let dim = self.eigen.total + 1;
        let row_out = &self.eigen.vectors[n_out * dim..(n_out + 1) * dim];
        let row_in = &self.eigen.vectors[n_in * dim..(n_in + 1) * dim];
        // i^(n_in - n_out) times sum_e v v exp(-i theta lambda_e); only the
        // real part survives
        let shift = (n_in + 4 * dim - n_out) % 4;
        let weights = if shift.is_multiple_of(2) { &self.cos } else { &self.sin };
        let sum: f64 = row_out
            .iter()
            .zip(row_in)
            .zip(weights)
            .map(|((a, b), w)| a * b * w)
            .sum();
        if shift < 2 {
            sum
        } else {
            -sum
        }
    }

    /// Full matrix in the mode-`a` count basis: `(row n_out, col n_in)`.
    pub fn matrix_a(&self) -> DMatrix<f64> {
        let dim = self.eigen.total + 1;
        DMatrix::from_fn(dim, dim, |r, c| self.element(r, c))
    }
}

type EigenCache = RwLock<HashMap<usize, Arc<SectorEigen>>>;

fn eigen_cache() -> &'static EigenCache {
    static CACHE: OnceLock<EigenCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Shared eigen-decomposition of sector `total`, computed on first use.
pub fn sector_eigen(total: usize) -> Arc<SectorEigen> {
    if let Some(e) = eigen_cache().read().unwrap().get(&total) {
        return Arc::clone(e);
    }
    let computed = Arc::new(SectorEigen::compute(total));
    let mut guard = eigen_cache().write().unwrap();
    Arc::clone(guard.entry(total).or_insert(computed))
}

/// Per-worker memo of sector rotations keyed by `(N, theta)` with `theta`
/// quantized to `1e-12`.
#[derive(Debug, Default)]
pub struct RotationCache {
    entries: HashMap<(usize, i64), Arc<SectorRotation>>,
}

impl RotationCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, total: usize, theta: f64) -> Arc<SectorRotation> {
        let key = (total, (theta * 1e12).round() as i64);
        Arc::clone(
            self.entries
                .entry(key)
                .or_insert_with(|| Arc::new(sector_eigen(total).at(theta))),
        )
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}

/// Evolution matrix of one sector.
#[derive(Clone, Debug, PartialEq)]
pub struct MziSector {
    pub total: usize,
    pub theta: f64,
    /// `(row i, col j) = <N-i, i| exp(-i theta H) |N-j, j>`.
    pub matrix: DMatrix<f64>,
}

fn reverse_indices(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    DMatrix::from_fn(n, n, |r, c| a[(n - 1 - r, n - 1 - c)])
}

pub fn mzi_matrix(total: usize, theta: f64) -> MziSector {
    let rot = sector_eigen(total).at(theta);
    MziSector {
        total,
        theta,
        matrix: reverse_indices(&rot.matrix_a()),
    }
}

/// Real antisymmetric `K` with `H = -i K`, mode-`b` count ordering.
pub fn generator_surrogate(total: usize) -> DMatrix<f64> {
    let dim = total + 1;
    let mut k_a = DMatrix::<f64>::zeros(dim, dim);
    for k in 0..total {
        let s = 0.5 * (((k + 1) * (total - k)) as f64).sqrt();
        k_a[(k + 1, k)] = s;
        k_a[(k, k + 1)] = -s;
    }
    reverse_indices(&k_a)
}

/// Coefficient of `i` in `<n,m| exp(-i theta H) H |n',m'>`, mode-`b` count
/// ordering.
///
/// Built column by column from the evolution matrix: `H |n',m'>` has
/// components on `|n'+1, m'-1>` and `|n'-1, m'+1>` only.
pub fn b_matrix(total: usize, theta: f64) -> DMatrix<f64> {
    let rot = sector_eigen(total).at(theta);
    let d = rot.matrix_a();
    let dim = total + 1;
    let mut b_a = DMatrix::<f64>::zeros(dim, dim);
    for n_in in 0..dim {
        let m_in = total - n_in;
        let up = (((n_in + 1) * m_in) as f64).sqrt();
        let down = ((n_in * (m_in + 1)) as f64).sqrt();
        for row in 0..dim {
            let mut acc = 0.0;
            if m_in > 0 {
                acc += up * d[(row, n_in + 1)];
            }
            if n_in > 0 {
                acc -= down * d[(row, n_in - 1)];
            }
            // 1/(2i) = -i/2
            b_a[(row, n_in)] = -0.5 * acc;
        }
    }
    reverse_indices(&b_a)
}
