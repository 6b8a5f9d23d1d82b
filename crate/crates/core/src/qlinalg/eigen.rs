//! Cyclic Jacobi eigenvalues for complex Hermitian matrices.

use super::{CMat, C64, HERMITIAN_TOLERANCE};
use crate::error::{Error, Result};

/// Sweep budget before [`Error::EigenNoConvergence`] is reported.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Convergence threshold on the off-diagonal Frobenius norm, relative to
/// `max(1, ||M||_F)`.
pub const JACOBI_TOLERANCE: f64 = 1e-12;

/// All eigenvalues of a Hermitian matrix, in ascending order.
///
/// Each rotation first removes the phase of the pivot `a_pq` with a diagonal
/// unitary, then zeroes it with a real Givens rotation.
pub fn hermitian_eigenvalues(m: &CMat) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::NotHermitian(f64::INFINITY));
    }
    let herr = m.hermiticity_error();
    if herr > HERMITIAN_TOLERANCE || !herr.is_finite() {
        return Err(Error::NotHermitian(herr));
    }

    let n = m.rows();
    // Work on the Hermitian part so the rotations see an exactly Hermitian input.
    let mut a = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
        }
    }

    let scale = m.frobenius_norm().max(1.0);
    let threshold = JACOBI_TOLERANCE * scale;

    let off_norm = |a: &[C64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm(&a);
        if off < threshold {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::EigenNoConvergence { sweeps, off_norm: off });
        }
        sweeps += 1;

        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let mag = apq.norm();
                if mag < f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let phase = apq / mag; // e^{i phi}
                let theta = 0.5 * (2.0 * mag).atan2(aqq - app);
                let (s, c) = theta.sin_cos();

                // G = diag(1, e^{-i phi}) restricted to (p, q), times [[c, s], [-s, c]].
                // Columns: A <- A G.
                let g_qp = -phase.conj() * s;
                let g_qq = phase.conj() * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * c + akq * g_qp;
                    a[k * n + q] = akp * s + akq * g_qq;
                }
                // Rows: A <- G^dagger A.
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = apk * c + aqk * g_qp.conj();
                    a[q * n + k] = apk * s + aqk * g_qq.conj();
                }
                a[p * n + q] = C64::new(0.0, 0.0);
                a[q * n + p] = C64::new(0.0, 0.0);
                a[p * n + p].im = 0.0;
                a[q * n + q].im = 0.0;
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlinalg::{pauli, Rng};

    fn singlet_partial_transpose() -> CMat {
        // |Ψ-><Ψ-| with the second qubit transposed, written out by hand.
        CMat::from_real(
            4,
            4,
            &[
                0.0, 0.0, 0.0, -0.5, //
                0.0, 0.5, 0.0, 0.0, //
                0.0, 0.0, 0.5, 0.0, //
                -0.5, 0.0, 0.0, 0.0,
            ],
        )
    }

    fn random_hermitian(n: usize, rng: &mut Rng) -> CMat {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(rng.normal(), 0.0);
            for j in i + 1..n {
                let z = rng.complex_normal();
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    #[test]
    fn diagonal_sorted() {
        let e = hermitian_eigenvalues(&CMat::from_real_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn pauli_x_spectrum() {
        let e = hermitian_eigenvalues(&pauli(1)).unwrap();
        assert!((e[0] + 1.0).abs() < 1e-12 && (e[1] - 1.0).abs() < 1e-12);
        let e = hermitian_eigenvalues(&pauli(2)).unwrap();
        assert!((e[0] + 1.0).abs() < 1e-12 && (e[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singlet_partial_transpose_spectrum() {
        // Block structure: {|01>,|10>} is diag(1/2, 1/2); {|00>,|11>} is
        // [[0, -1/2], [-1/2, 0]] with eigenvalues ±1/2.
        let e = hermitian_eigenvalues(&singlet_partial_transpose()).unwrap();
        let expected = [-0.5, 0.5, 0.5, 0.5];
        for (x, y) in e.iter().zip(expected) {
            assert!((x - y).abs() < 1e-10, "{e:?}");
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMat::identity(3);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(hermitian_eigenvalues(&m), Err(Error::NotHermitian(_))));
        let rect = CMat::zeros(2, 3);
        assert!(matches!(hermitian_eigenvalues(&rect), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn two_by_two_closed_form() {
        let mut rng = Rng::new(11, 0);
        for _ in 0..500 {
            let m = random_hermitian(2, &mut rng);
            let a = m[(0, 0)].re;
            let d = m[(1, 1)].re;
            let b = m[(0, 1)].norm();
            let mean = 0.5 * (a + d);
            let rad = (0.25 * (a - d).powi(2) + b * b).sqrt();
            let e = hermitian_eigenvalues(&m).unwrap();
            assert!((e[0] - (mean - rad)).abs() < 1e-10);
            assert!((e[1] - (mean + rad)).abs() < 1e-10);
        }
    }

    #[test]
    fn trace_and_determinant_preserved_up_to_dim_36() {
        let mut rng = Rng::new(5, 1);
        for n in [3, 4, 6, 9, 16, 36] {
            let m = random_hermitian(n, &mut rng).scale_real(1.0 / n as f64);
            let e = hermitian_eigenvalues(&m).unwrap();
            let tr: f64 = e.iter().sum();
            assert!((tr - m.trace().re).abs() < 1e-9, "n={n}");
            assert!(e.windows(2).all(|w| w[0] <= w[1]));
            if n <= 6 {
                let det: f64 = e.iter().product();
                assert!((det - m.determinant().re).abs() < 1e-10, "n={n}");
            }
        }
    }

    #[test]
    fn unitary_conjugation_of_known_spectrum() {
        let mut rng = Rng::new(3, 3);
        for n in [4, 6, 16] {
            let spec: Vec<f64> = (0..n).map(|i| i as f64 * 0.25 - 1.0).collect();
            let u = crate::qlinalg::haar_unitary(n, &mut rng);
            let m = &(&u.adjoint() * &CMat::from_real_diag(&spec)) * &u;
            let e = hermitian_eigenvalues(&m).unwrap();
            for (x, y) in e.iter().zip(&spec) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }
}
