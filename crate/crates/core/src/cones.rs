//! Doubly-nonnegative (DNN) and completely positive (CP) matrix cones.
//!
//! `M` is DNN when it is PSD and entrywise nonnegative, CP when `M = B Bᵀ`
//! for some entrywise-nonnegative `B`. The cones coincide below dimension 5.
//! For a DS state, `M_d ∉ DNN` means NPT entanglement, `M_d ∈ CP` means
//! separability, and `M_d ∈ DNN \ CP` means PPT (bound) entanglement.
//!
//! Exact CP membership is NP-hard, so membership is certified by a
//! nonnegative factorization found by randomized coordinate descent, and a
//! failed search is reported as a candidate, never as a proof.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{is_psd, RealMatrix, Tolerance};

/// Restarts are launched in fixed-size batches so that statistics do not
/// depend on the thread count.
const RESTART_BATCH: usize = 8;
/// Sweeps between stagnation checks.
const STALL_WINDOW: usize = 1000;
/// Minimum relative residual decrease per window before a restart is abandoned.
const STALL_RATIO: f64 = 1e-3;
/// Iteration cap for the Gauss-Newton polish.
const POLISH_ITERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub restarts: usize,
    pub max_iters: usize,
    pub residual_target: f64,
    pub seed: u64,
}

impl SearchBudget {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0
            || self.max_iters == 0
            || self.residual_target.is_nan()
            || self.residual_target <= 0.0
        {
            return Err(Error::Config(
                "search budget: restarts, max_iters and residual_target must be positive".into(),
            ));
        }
        Ok(())
    }
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            restarts: 100,
            max_iters: 100_000,
            residual_target: 1e-7,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DnnCheck {
    pub dnn: bool,
    pub min_entry: f64,
    pub min_eigenvalue: f64,
}

fn ensure_symmetric(m: &RealMatrix, tol: Tolerance) -> Result<usize> {
    let d = m.ensure_square()?;
    let deviation = m.symmetry_deviation();
    if deviation > tol.eq_tol {
        return Err(Error::NotSymmetric { deviation });
    }
    Ok(d)
}

pub fn is_dnn(m: &RealMatrix, tol: Tolerance) -> Result<DnnCheck> {
    ensure_symmetric(m, tol)?;
    let min_entry = m.min_entry();
    let psd = is_psd(&m.to_complex(), tol)?;
    Ok(DnnCheck {
        dnn: min_entry >= -tol.eq_tol && psd.psd,
        min_entry,
        min_eigenvalue: psd.min_eigenvalue,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CpCondition {
    /// Symmetric, nonnegative and diagonally dominant.
    DiagDominant,
    /// DNN in dimension below 5, where DNN and CP coincide.
    SmallDimension,
}

impl CpCondition {
    pub fn label(self) -> &'static str {
        match self {
            Self::DiagDominant => "diag-dominant",
            Self::SmallDimension => "small-dimension",
        }
    }
}

/// Sufficient conditions for complete positivity. `None` means no condition
/// applies, not that `m` fails to be CP.
pub fn cp_sufficient(m: &RealMatrix, tol: Tolerance) -> Option<CpCondition> {
    let d = ensure_symmetric(m, tol).ok()?;
    if m.min_entry() < 0.0 {
        return None;
    }
    let dominant = (0..d).all(|i| {
        let off: f64 = (0..d).filter(|&j| j != i).map(|j| m[(i, j)]).sum();
        m[(i, i)] >= off
    });
    if dominant {
        return Some(CpCondition::DiagDominant);
    }
    if d < 5 && is_dnn(m, tol).is_ok_and(|c| c.dnn) {
        return Some(CpCondition::SmallDimension);
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchOutcome {
    Found,
    NotFound,
    /// Input is not DNN, so no nonnegative factorization exists.
    NotDnn,
}

/// Result of [`cp_factorize`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpSearch {
    pub outcome: SearchOutcome,
    /// `B ≥ 0` with `‖M − B Bᵀ‖_F ≤ residual_target` when found.
    pub factor: Option<RealMatrix>,
    pub best_residual: f64,
    pub best_restart: Option<usize>,
    pub restarts_run: usize,
    pub sweeps: u64,
}

impl CpSearch {
    pub fn found(&self) -> bool {
        self.outcome == SearchOutcome::Found
    }
}

/// Searches for `M = B Bᵀ` with `B ≥ 0` of width `d(d+1)/2`.
///
/// Each restart starts from a random nonnegative `B` and runs exact
/// coordinate descent on `‖M − B Bᵀ‖_F²`: every entry update minimizes the
/// quartic restricted to that entry over `[0, ∞)`. Restarts stop at the
/// residual target, at `max_iters` sweeps, or when progress stalls. The run
/// is deterministic for a given `budget.seed`.
pub fn cp_factorize(m: &RealMatrix, budget: &SearchBudget, tol: Tolerance) -> Result<CpSearch> {
    budget.validate()?;
    let check = is_dnn(m, tol)?;
    if !check.dnn {
        return Ok(CpSearch {
            outcome: SearchOutcome::NotDnn,
            factor: None,
            best_residual: f64::INFINITY,
            best_restart: None,
            restarts_run: 0,
            sweeps: 0,
        });
    }
    let d = m.rows();
    let width = d * (d + 1) / 2;

    let mut best: Option<RestartResult> = None;
    let mut restarts_run = 0;
    let mut sweeps = 0u64;
    let mut start = 0;
    while start < budget.restarts {
        let end = (start + RESTART_BATCH).min(budget.restarts);
        let batch: Vec<RestartResult> = (start..end)
            .into_par_iter()
            .map(|r| run_restart(m, width, budget, r))
            .collect();
        restarts_run = end;
        for res in batch {
            sweeps += res.sweeps as u64;
            let better = match &best {
                None => true,
                Some(b) => res.residual < b.residual,
            };
            if better {
                best = Some(res);
            }
        }
        if best
            .as_ref()
            .is_some_and(|b| b.residual <= budget.residual_target)
        {
            break;
        }
        start = end;
    }

    let best = best.expect("at least one restart");
    let found = best.residual <= budget.residual_target;
    Ok(CpSearch {
        outcome: if found {
            SearchOutcome::Found
        } else {
            SearchOutcome::NotFound
        },
        best_residual: best.residual,
        best_restart: Some(best.index),
        factor: found.then_some(best.factor),
        restarts_run,
        sweeps,
    })
}

struct RestartResult {
    index: usize,
    factor: RealMatrix,
    residual: f64,
    sweeps: usize,
}

fn restart_seed(seed: u64, restart: usize) -> u64 {
    seed ^ (restart as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn residual_of(m: &RealMatrix, b: &RealMatrix) -> f64 {
    let g = b.gram();
    let mut s = 0.0;
    for (x, y) in g.data().iter().zip(m.data()) {
        s += (x - y) * (x - y);
    }
    s.sqrt()
}

fn run_restart(m: &RealMatrix, width: usize, budget: &SearchBudget, index: usize) -> RestartResult {
    let d = m.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(budget.seed, index));
    let mean_diag = (0..d).map(|i| m[(i, i)]).sum::<f64>() / d as f64;
    let s = (3.0 * mean_diag.max(0.0) / width as f64).sqrt();
    let mut b = RealMatrix::from_fn(d, width, |_, _| rng.random::<f64>() * s);

    // err = B Bᵀ − M, kept up to date incrementally
    let mut err = b.gram();
    for (e, x) in err.data_mut().iter_mut().zip(m.data()) {
        *e -= x;
    }

    let mut residual = err.frobenius_norm();
    let mut window_start = residual;
    let mut done = 0;
    for sweep in 1..=budget.max_iters {
        for i in 0..d {
            for k in 0..width {
                update_entry(&mut b, &mut err, i, k);
            }
        }
        done = sweep;
        if sweep % 64 == 0 {
            // refresh to stop rounding drift in the incremental error
            err = b.gram();
            for (e, x) in err.data_mut().iter_mut().zip(m.data()) {
                *e -= x;
            }
        }
        residual = err.frobenius_norm();
        if residual <= budget.residual_target {
            residual = residual_of(m, &b);
            if residual <= budget.residual_target {
                break;
            }
        }
        if sweep % STALL_WINDOW == 0 {
            if let Some(polished) = polish(m, &b, budget.residual_target) {
                b = polished;
                break;
            }
            if window_start - residual < STALL_RATIO * residual {
                break;
            }
            window_start = residual;
        }
    }
    if residual_of(m, &b) > budget.residual_target {
        if let Some(polished) = polish(m, &b, budget.residual_target) {
            b = polished;
        }
    }
    RestartResult {
        index,
        residual: residual_of(m, &b),
        factor: b,
        sweeps: done,
    }
}

/// Damped Gauss-Newton on the active entries of `b`, clamping at zero.
///
/// Coordinate descent stalls sublinearly near rank-deficient solutions; this
/// finishes the job when the support of the factor is already right. Returns
/// a factor meeting `target`, or `None`.
fn polish(m: &RealMatrix, b: &RealMatrix, target: f64) -> Option<RealMatrix> {
    let d = b.rows();
    let width = b.cols();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|a| (a..d).map(move |c| (a, c))).collect();
    let n = pairs.len();
    let weight = |a: usize, c: usize| {
        if a == c {
            1.0
        } else {
            std::f64::consts::SQRT_2
        }
    };

    let residual_vec = |b: &RealMatrix| -> Vec<f64> {
        let g = b.gram();
        pairs
            .iter()
            .map(|&(a, c)| weight(a, c) * (g[(a, c)] - m[(a, c)]))
            .collect()
    };
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();

    let mut b = b.clone();
    let mut r = residual_vec(&b);
    let mut res = norm(&r);
    let mut lambda = 1e-3 * res.max(f64::MIN_POSITIVE);
    for _ in 0..POLISH_ITERS {
        if res <= target {
            return Some(b);
        }
        // Jacobian columns for free entries
        let mut cols: Vec<(usize, usize, Vec<f64>)> = Vec::new();
        for i in 0..d {
            for k in 0..width {
                let mut col = vec![0.0; n];
                for (row, &(a, c)) in pairs.iter().enumerate() {
                    let mut v = 0.0;
                    if a == i {
                        v += b[(c, k)];
                    }
                    if c == i {
                        v += b[(a, k)];
                    }
                    col[row] = weight(a, c) * v;
                }
                let grad: f64 = col.iter().zip(&r).map(|(j, e)| j * e).sum();
                if b[(i, k)] > 0.0 || grad < 0.0 {
                    cols.push((i, k, col));
                }
            }
        }
        let mut jjt = vec![0.0; n * n];
        for (_, _, col) in &cols {
            for p in 0..n {
                if col[p] == 0.0 {
                    continue;
                }
                for q in 0..n {
                    jjt[p * n + q] += col[p] * col[q];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut sys = jjt.clone();
            for p in 0..n {
                sys[p * n + p] += lambda;
            }
            let Some(y) = cholesky_solve(&mut sys, &r, n) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = b.clone();
            for (i, k, col) in &cols {
                let step: f64 = col.iter().zip(&y).map(|(j, e)| j * e).sum();
                trial[(*i, *k)] = (trial[(*i, *k)] - step).max(0.0);
            }
            let tr = residual_vec(&trial);
            let tres = norm(&tr);
            if tres < res {
                b = trial;
                r = tr;
                res = tres;
                lambda = (lambda / 3.0).max(1e-15);
                improved = true;
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    (residual_of(m, &b) <= target).then_some(b)
}

/// Solves `A x = rhs` for symmetric positive definite `A` (overwritten).
fn cholesky_solve(a: &mut [f64], rhs: &[f64], n: usize) -> Option<Vec<f64>> {
    for j in 0..n {
        let mut diag = a[j * n + j];
        for k in 0..j {
            diag -= a[j * n + k] * a[j * n + k];
        }
        if diag.is_nan() || diag <= 0.0 {
            return None;
        }
        let diag = diag.sqrt();
        a[j * n + j] = diag;
        for i in j + 1..n {
            let mut v = a[i * n + j];
            for k in 0..j {
                v -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = v / diag;
        }
    }
    let mut x = rhs.to_vec();
    for i in 0..n {
        for k in 0..i {
            x[i] -= a[i * n + k] * x[k];
        }
        x[i] /= a[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            x[i] -= a[k * n + i] * x[k];
        }
        x[i] /= a[i * n + i];
    }
    Some(x)
}

/// Exact minimization of `‖M − B Bᵀ‖_F²` over `B[i][k] ≥ 0` with every other
/// entry fixed.
///
/// Writing `t` for the new value, the stationarity condition is the depressed
/// cubic `t³ + p t + q = 0` with
/// `p = Σ_{j≠i} B_jk² + Σ_{l≠k} B_il² − M_ii` and
/// `q = Σ_{j≠i} (BBᵀ − M)_ij B_jk` (the contribution of the fixed entries).
fn update_entry(b: &mut RealMatrix, err: &mut RealMatrix, i: usize, k: usize) {
    let d = b.rows();
    let x = b[(i, k)];
    let mut col_sq = 0.0; // Σ_{j≠i} B_jk²
    let mut coupling = 0.0; // Σ_j E_ij B_jk
    for j in 0..d {
        let bjk = b[(j, k)];
        coupling += err[(i, j)] * bjk;
        if j != i {
            col_sq += bjk * bjk;
        }
    }
    let e_ii = err[(i, i)];
    let c = col_sq + e_ii + 2.0 * x * x;
    let p = col_sq + e_ii - x * x;
    let q = 2.0 * x * x * x - c * x + coupling;

    // objective change for a step δ = t − x
    let gain = |t: f64| {
        let dl = t - x;
        dl * dl * dl * dl + 4.0 * x * dl * dl * dl + 2.0 * c * dl * dl + 4.0 * coupling * dl
    };
    let mut best_t = 0.0;
    let mut best_g = gain(0.0);
    for t in cubic_real_roots(p, q) {
        if t > 0.0 {
            let g = gain(t);
            if g < best_g {
                best_t = t;
                best_g = g;
            }
        }
    }
    if best_g >= 0.0 {
        return; // no improving move
    }
    let delta = best_t - x;
    if delta == 0.0 {
        return;
    }
    for j in 0..d {
        if j != i {
            let v = delta * b[(j, k)];
            err[(i, j)] += v;
            err[(j, i)] += v;
        }
    }
    err[(i, i)] += 2.0 * delta * x + delta * delta;
    b[(i, k)] = best_t;
}

/// Real roots of `t³ + p t + q`, each refined by one Newton step.
fn cubic_real_roots(p: f64, q: f64) -> Vec<f64> {
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let raw = if disc > 0.0 {
        let s = disc.sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt()]
    } else if p == 0.0 {
        vec![0.0]
    } else {
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = ((3.0 * q) / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos())
            .collect()
    };
    raw.into_iter()
        .map(|t| {
            let f = t * t * t + p * t + q;
            let df = 3.0 * t * t + p;
            if df.abs() > f64::EPSILON {
                t - f / df
            } else {
                t
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CpStatus {
    Yes,
    No,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConeEvidence {
    Factorization {
        factor: RealMatrix,
        residual: f64,
    },
    SufficientCondition {
        condition: CpCondition,
    },
    Search {
        best_residual: f64,
        restarts: usize,
        sweeps: u64,
    },
    NotDnn {
        min_entry: f64,
        min_eigenvalue: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeVerdict {
    pub dnn: bool,
    pub cp: CpStatus,
    pub evidence: ConeEvidence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DsClass {
    Separable,
    NptEntangled,
    PptEntangledCandidate,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DsClassification {
    pub class: DsClass,
    pub cone: ConeVerdict,
    /// Factor by which `M` was divided before testing (its trace).
    pub scale: f64,
}

/// Separability class of the DS state whose `M_d` matrix is `m`.
///
/// `m` is normalized to unit trace first; all conditions are cone conditions.
pub fn classify_ds(
    m: &RealMatrix,
    budget: &SearchBudget,
    tol: Tolerance,
) -> Result<DsClassification> {
    let d = ensure_symmetric(m, tol)?;
    let trace: f64 = (0..d).map(|i| m[(i, i)]).sum();
    let scale = if trace > 0.0 { trace } else { 1.0 };
    let normalized = m.scale(1.0 / scale);

    let check = is_dnn(&normalized, tol)?;
    if !check.dnn {
        return Ok(DsClassification {
            class: DsClass::NptEntangled,
            cone: ConeVerdict {
                dnn: false,
                cp: CpStatus::No,
                evidence: ConeEvidence::NotDnn {
                    min_entry: check.min_entry,
                    min_eigenvalue: check.min_eigenvalue,
                },
            },
            scale,
        });
    }
    if let Some(condition) = cp_sufficient(&normalized, tol) {
        return Ok(DsClassification {
            class: DsClass::Separable,
            cone: ConeVerdict {
                dnn: true,
                cp: CpStatus::Yes,
                evidence: ConeEvidence::SufficientCondition { condition },
            },
            scale,
        });
    }
    let search = cp_factorize(&normalized, budget, tol)?;
    let (class, cone) = match search.factor {
        Some(factor) => (
            DsClass::Separable,
            ConeVerdict {
                dnn: true,
                cp: CpStatus::Yes,
                evidence: ConeEvidence::Factorization {
                    // rescale so the evidence factors the caller's matrix
                    factor: factor.scale(scale.sqrt()),
                    residual: search.best_residual * scale,
                },
            },
        ),
        None => (
            DsClass::PptEntangledCandidate,
            ConeVerdict {
                dnn: true,
                cp: CpStatus::Unknown,
                evidence: ConeEvidence::Search {
                    best_residual: search.best_residual,
                    restarts: search.restarts_run,
                    sweeps: search.sweeps,
                },
            },
        ),
    };
    Ok(DsClassification { class, cone, scale })
}
