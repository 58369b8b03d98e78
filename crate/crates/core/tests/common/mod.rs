//! Random generators shared by the integration and acceptance suites.
#![allow(dead_code)]

use mcf_core::entstates::{ClduiState, DsState};
use mcf_core::matcore::{kron, ComplexMatrix, RealMatrix, Tolerance, C64};
use mcf_core::mcfchannel::McfChannel;
use mcf_core::qstate::DensityMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn tol() -> Tolerance {
    Tolerance::default()
}

pub fn ginibre(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub fn random_density(rng: &mut impl Rng, n: usize) -> DensityMatrix {
    let g = ginibre(rng, n, n);
    let rho = &g * &g.dagger();
    let tr = rho.trace().re;
    DensityMatrix::new(rho.scale(1.0 / tr), None, tol()).expect("Ginibre state is valid")
}

pub fn random_pure(rng: &mut impl Rng, n: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Mixture of `terms` random product pure states.
pub fn random_separable(rng: &mut impl Rng, d_a: usize, d_b: usize, terms: usize) -> DensityMatrix {
    let mut acc = ComplexMatrix::zeros(d_a * d_b, d_a * d_b);
    let weights: Vec<f64> = (0..terms).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for w in weights {
        let a = ComplexMatrix::outer(&random_pure(rng, d_a));
        let b = ComplexMatrix::outer(&random_pure(rng, d_b));
        acc = &acc + &kron(&a, &b).unwrap().scale(w / total);
    }
    DensityMatrix::bipartite(acc, d_a, d_b, tol()).expect("separable mixture is valid")
}

pub fn random_stochastic(rng: &mut impl Rng, d: usize) -> RealMatrix {
    let mut p = RealMatrix::from_fn(d, d, |_, _| rng.random_range(0.0..1.0));
    for i in 0..d {
        let s: f64 = (0..d).map(|j| p[(i, j)]).sum();
        for j in 0..d {
            p[(i, j)] /= s;
        }
    }
    p
}

/// CPTP fibre: `1 + α_ij = ⟨v_i, v_j⟩` with `‖v_i‖² = P_ii`, so `Ĵ` is a
/// Gram matrix divided by `d`.
pub fn random_cptp(rng: &mut impl Rng, d: usize) -> McfChannel {
    let p = random_stochastic(rng, d);
    let vecs: Vec<Vec<C64>> = (0..d)
        .map(|i| {
            random_pure(rng, d)
                .into_iter()
                .map(|z| z * p[(i, i)].sqrt())
                .collect()
        })
        .collect();
    let alpha = ComplexMatrix::from_fn(d, d, |i, j| {
        if i == j {
            C64::new(0.0, 0.0)
        } else {
            let ip: C64 = vecs[i]
                .iter()
                .zip(&vecs[j])
                .map(|(a, b)| a.conj() * b)
                .sum();
            ip - 1.0
        }
    });
    McfChannel::new(p, alpha, tol()).expect("Gram construction is CPTP")
}

/// Random CLDUI state: `A_ij = c_ij |B_ij|`. Half the draws use `c ≥ 1`
/// (PPT by construction), the rest `c ∈ [0, 2)`, which is mostly NPT.
pub fn random_cldui(rng: &mut impl Rng, d: usize) -> ClduiState {
    let g = ginibre(rng, d, d);
    let b = &g * &g.dagger();
    let lo = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
    let mut a = RealMatrix::from_fn(d, d, |i, j| {
        if i == j {
            b[(i, i)].re
        } else {
            b[(i, j)].norm() * rng.random_range(lo..2.0)
        }
    });
    let total = a.sum();
    a = a.scale(1.0 / total);
    ClduiState::new(a, b.scale(1.0 / total), tol()).expect("valid by construction")
}

pub fn random_ds(rng: &mut impl Rng, d: usize) -> DsState {
    let w: Vec<f64> = (0..d * (d + 1) / 2)
        .map(|_| rng.random_range(0.0..1.0))
        .collect();
    let total: f64 = w.iter().sum();
    DsState::new(d, w.into_iter().map(|x| x / total).collect(), tol()).unwrap()
}

/// `X Xᵀ` for uniform `X`, rejected until entrywise nonnegative.
pub fn random_dnn(rng: &mut impl Rng, d: usize) -> RealMatrix {
    loop {
        let x = RealMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        let m = x.gram();
        if m.min_entry() >= 0.0 {
            return m;
        }
    }
}
