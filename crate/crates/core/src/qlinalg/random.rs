use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CMat, C64};

/// Seeded random stream.
///
/// A `(seed, stream)` pair selects one of 2^64 independent ChaCha8 streams
/// under the same key, so sample `i` of a dataset can draw from stream `i`
/// regardless of which thread evaluates it.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
            spare_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Standard normal via the Box–Muller transform; the second variate of
    /// each pair is cached for the next call.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // 1 - u lies in (0, 1], so the logarithm is finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare_normal = Some(r * s);
        r * c
    }

    /// Standard complex normal: `E|z|^2 = 1`.
    pub fn complex_normal(&mut self) -> C64 {
        let re = self.normal();
        let im = self.normal();
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

/// QR decomposition by modified Gram–Schmidt with one reorthogonalization
/// pass. `R` has a real, non-negative diagonal.
///
/// Panics if the columns are linearly dependent to machine precision.
pub fn qr_decompose(m: &CMat) -> (CMat, CMat) {
    let (rows, cols) = (m.rows(), m.cols());
    assert!(rows >= cols, "QR needs rows >= cols");
    let mut q: Vec<Vec<C64>> = (0..cols).map(|j| (0..rows).map(|i| m[(i, j)]).collect()).collect();
    let mut r = CMat::zeros(cols, cols);

    for j in 0..cols {
        for _pass in 0..2 {
            for k in 0..j {
                let proj: C64 = (0..rows).map(|i| q[k][i].conj() * q[j][i]).sum();
                r[(k, j)] += proj;
                let (head, tail) = q.split_at_mut(j);
                for (qj, qk) in tail[0].iter_mut().zip(&head[k]) {
                    *qj -= proj * qk;
                }
            }
        }
        let norm = q[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(norm > 0.0, "rank-deficient input to QR");
        r[(j, j)] = C64::new(norm, 0.0);
        for z in q[j].iter_mut() {
            *z /= norm;
        }
    }

    let mut qm = CMat::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            qm[(i, j)] = q[j][i];
        }
    }
    (qm, r)
}

/// Haar-distributed `dim × dim` unitary: QR of a complex Ginibre matrix with
/// the columns of `Q` rephased by `R_kk / |R_kk|`.
pub fn haar_unitary(dim: usize, rng: &mut Rng) -> CMat {
    assert!(dim >= 2, "haar_unitary needs dim >= 2");
    let ginibre = CMat::from_vec(dim, dim, (0..dim * dim).map(|_| rng.complex_normal()).collect());
    let (mut q, r) = qr_decompose(&ginibre);
    for k in 0..dim {
        let rkk = r[(k, k)];
        let phase = rkk / rkk.norm();
        for i in 0..dim {
            q[(i, k)] *= phase;
        }
    }
    q
}
