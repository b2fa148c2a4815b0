//! Cyclic Jacobi eigensolver for symmetric matrices.
//!
//! Verification-only oracle: the production paths use closed forms and power
//! iteration, and every spectral claim is cross-checked against this
//! independent dense route.

use ndarray::ArrayView2;

/// Eigenvalues of a symmetric matrix, ascending. Panics on non-square input;
/// symmetry is the caller's contract.
#[allow(clippy::needless_range_loop)] // explicit (p, q, r) index arithmetic
pub fn symmetric_eigenvalues(m: ArrayView2<'_, f64>) -> Vec<f64> {
    let (rows, cols) = m.dim();
    assert_eq!(rows, cols, "jacobi oracle needs a square matrix");
    let n = rows;
    if n == 1 {
        return vec![m[[0, 0]]];
    }

    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[[i, j]]).collect()).collect();
    let scale: f64 = a
        .iter()
        .flat_map(|r| r.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
        .max(1.0);

    const MAX_SWEEPS: usize = 64;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                // Jacobi rotation zeroing a[p][q]
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                let app = a[p][p];
                let aqq = a[q][q];
                a[p][p] = app - t * apq;
                a[q][q] = aqq + t * apq;
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for r in 0..n {
                    if r != p && r != q {
                        let arp = a[r][p];
                        let arq = a[r][q];
                        a[r][p] = c * arp - s * arq;
                        a[p][r] = a[r][p];
                        a[r][q] = s * arp + c * arq;
                        a[q][r] = a[r][q];
                    }
                }
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(|x, y| x.total_cmp(y));
    eig
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn diagonal_matrix_is_its_own_spectrum() {
        let m = array![[3.0, 0.0], [0.0, -1.0]];
        let eig = symmetric_eigenvalues(m.view());
        assert!((eig[0] + 1.0).abs() < 1e-14);
        assert!((eig[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn known_two_by_two() {
        // eigenvalues of [[2,1],[1,2]] are 1 and 3
        let m = array![[2.0, 1.0], [1.0, 2.0]];
        let eig = symmetric_eigenvalues(m.view());
        assert!((eig[0] - 1.0).abs() < 1e-13);
        assert!((eig[1] - 3.0).abs() < 1e-13);
    }

    #[test]
    fn trace_and_frobenius_are_preserved() {
        use rand::Rng;
        use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
        let n = 12;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut m = ndarray::Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let v = rng.gen_range(-1.0..1.0);
                m[[i, j]] = v;
                m[[j, i]] = v;
            }
        }
        let eig = symmetric_eigenvalues(m.view());
        let trace: f64 = (0..n).map(|i| m[[i, i]]).sum();
        assert!((eig.iter().sum::<f64>() - trace).abs() < 1e-10);
        let fro: f64 = m.iter().map(|v| v * v).sum();
        let eig_sq: f64 = eig.iter().map(|v| v * v).sum();
        assert!((fro - eig_sq).abs() < 1e-9);
    }
}
