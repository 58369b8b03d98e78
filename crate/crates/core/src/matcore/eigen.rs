//! Cyclic Jacobi kernels: two-sided for Hermitian eigenproblems, one-sided
//! (Hestenes) for singular values.

use super::{ComplexMatrix, C64};

const MAX_SWEEPS: usize = 100;
/// Relative off-diagonal mass at which the two-sided iteration stops.
const OFF_DIAGONAL_TOL: f64 = 1e-13;
/// Relative column coupling below which a one-sided rotation is skipped.
const ORTHOGONALITY_TOL: f64 = 1e-15;

/// Eigenvalues in ascending order, eigenvectors stored as matching columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

/// Unitary plane rotation `J` that annihilates the (p,q) entry of the
/// Hermitian 2x2 block `[[app, apq], [conj(apq), aqq]]` via `J† A J`.
///
/// `J = [[c, s], [-s·e, c·e]]` with `e = conj(apq)/|apq|`.
#[derive(Clone, Copy)]
struct Rotation {
    c: f64,
    s: f64,
    e: C64,
}

impl Rotation {
    fn annihilating(app: f64, aqq: f64, apq: C64) -> Option<Self> {
        let g = apq.norm();
        if g == 0.0 {
            return None;
        }
        let e = apq.conj() / g;
        let theta = (aqq - app) / (2.0 * g);
        let t = if theta.is_infinite() {
            0.0
        } else {
            theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
        };
        let c = 1.0 / (t * t + 1.0).sqrt();
        Some(Self { c, s: t * c, e })
    }

    /// `X ← X J` restricted to columns p, q.
    fn apply_right(&self, x: &mut ComplexMatrix, p: usize, q: usize) {
        let (c, s, e) = (self.c, self.s, self.e);
        for r in 0..x.rows() {
            let xp = x[(r, p)];
            let xq = x[(r, q)];
            x[(r, p)] = xp * c - xq * e * s;
            x[(r, q)] = xp * s + xq * e * c;
        }
    }

    /// `X ← J† X` restricted to rows p, q.
    fn apply_left_adjoint(&self, x: &mut ComplexMatrix, p: usize, q: usize) {
        let (c, s, ec) = (self.c, self.s, self.e.conj());
        for col in 0..x.cols() {
            let xp = x[(p, col)];
            let xq = x[(q, col)];
            x[(p, col)] = xp * c - xq * ec * s;
            x[(q, col)] = xp * s + xq * ec * c;
        }
    }
}

fn off_diagonal_mass(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut sum = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                sum += a[(r, c)].norm_sqr();
            }
        }
    }
    sum.sqrt()
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Only the Hermitian part of the input is used. Callers that need to reject
/// non-Hermitian input should check [`ComplexMatrix::hermitian_deviation`]
/// first.
///
/// # Panics
/// Panics if `m` is not square.
pub fn hermitian_eigen(m: &ComplexMatrix) -> HermitianEigen {
    assert!(m.is_square(), "eigendecomposition needs a square matrix");
    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_mass(&a) <= OFF_DIAGONAL_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let Some(rot) = Rotation::annihilating(a[(p, p)].re, a[(q, q)].re, a[(p, q)])
                else {
                    continue;
                };
                rot.apply_right(&mut a, p, q);
                rot.apply_left_adjoint(&mut a, p, q);
                rot.apply_right(&mut v, p, q);
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    HermitianEigen { values, vectors }
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    hermitian_eigen(m).values
}

/// Singular values in descending order; `min(rows, cols)` of them.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let mut w = if m.cols() > m.rows() {
        m.dagger()
    } else {
        m.clone()
    };
    let n = w.cols();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, C64::new(0.0, 0.0));
                for r in 0..w.rows() {
                    let wp = w[(r, p)];
                    let wq = w[(r, q)];
                    alpha += wp.norm_sqr();
                    beta += wq.norm_sqr();
                    gamma += wp.conj() * wq;
                }
                if gamma.norm() <= ORTHOGONALITY_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                if let Some(rot) = Rotation::annihilating(alpha, beta, gamma) {
                    rot.apply_right(&mut w, p, q);
                    rotated = true;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<f64> = (0..n)
        .map(|c| {
            (0..w.rows())
                .map(|r| w[(r, c)].norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn eigen_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=12 {
            let x = random_matrix(&mut rng, n, n);
            let h = x.hermitian_part();
            let eig = hermitian_eigen(&h);
            let lambda = ComplexMatrix::from_fn(n, n, |r, c| {
                if r == c {
                    C64::new(eig.values[r], 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            let rebuilt = &(&eig.vectors * &lambda) * &eig.vectors.dagger();
            assert!(rebuilt.max_abs_diff(&h) < 1e-12, "n = {n}");
            let gram = &eig.vectors.dagger() * &eig.vectors;
            assert!(gram.max_abs_diff(&ComplexMatrix::identity(n)) < 1e-12);
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eigen_handles_degenerate_spectrum() {
        // aI + c(J - I) with a = 0.2, c = 0.2 has eigenvalues {0, 0, 0, 0, 1}
        let m = ComplexMatrix::from_fn(5, 5, |_, _| C64::new(0.2, 0.0));
        let vals = hermitian_eigenvalues(&m);
        for v in &vals[..4] {
            assert!(v.abs() < 1e-14);
        }
        assert!((vals[4] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn singular_values_of_rectangular() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (r, c) in [(3, 5), (5, 3), (4, 4), (1, 6)] {
            let m = random_matrix(&mut rng, r, c);
            let sv = singular_values(&m);
            assert_eq!(sv.len(), r.min(c));
            // Σσ² = ‖M‖_F²
            let sum_sq: f64 = sv.iter().map(|s| s * s).sum();
            assert!((sum_sq - m.frobenius_norm().powi(2)).abs() < 1e-12);
        }
    }
}
