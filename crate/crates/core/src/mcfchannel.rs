//! The multicore-fibre channel.
//!
//! A `d`-core fibre acts on a state written in the core basis by moving
//! populations between cores with probabilities `P[i][j]` (light entering
//! core `i` exits core `j`) and damping every coherence `ρ_ij` by the factor
//! `1 + α_ij`:
//!
//! ```text
//! E(ρ)_jj = Σ_i ρ_ii P[i][j]
//! E(ρ)_ij = ρ_ij (1 + α_ij)        i ≠ j
//! ```
//!
//! With `P = I` every core population is a fixed point. The Choi operator
//! has the block form `Ĵ ⊕ diag(P[i][j]/d)` where `Ĵ` lives on `span{|ii⟩}`,
//! so complete positivity reduces to `Ĵ ⪰ 0` and trace preservation to unit
//! row sums of `P`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{is_psd, kron, ComplexMatrix, RealMatrix, Tolerance, C64};
use crate::qstate::{partial_trace, DensityMatrix, Side};

/// Dephasing coefficients as written in a channel config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSpec {
    /// Same real coefficient on every off-diagonal entry.
    Uniform(f64),
    Matrix(ComplexMatrix),
}

/// `{ "d": int, "P": [[…]], "alpha": {"uniform": x} | {"matrix": [[[re, im], …]]} }`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub d: usize,
    #[serde(rename = "P")]
    pub p: RealMatrix,
    pub alpha: AlphaSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McfChannel {
    d: usize,
    p: RealMatrix,
    alpha: ComplexMatrix,
}

impl McfChannel {
    /// Validates `P ≥ 0`, `α_ji = conj(α_ij)` and `|1 + α_ij| ≤ 1` for `i ≠ j`.
    /// Row sums of `P` are not checked here; see [`McfChannel::verify_cptp`].
    pub fn new(p: RealMatrix, alpha: ComplexMatrix, tol: Tolerance) -> Result<Self> {
        let d = p.ensure_square()?;
        if alpha.rows() != d || alpha.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: alpha.rows(),
            });
        }
        for i in 0..d {
            for j in 0..d {
                let v = p[(i, j)];
                if v < -tol.eq_tol {
                    return Err(Error::InvalidChannel(format!(
                        "crosstalk probability P[{i}][{j}] = {v} is negative"
                    )));
                }
                if i == j {
                    continue;
                }
                let a = alpha[(i, j)];
                if (alpha[(j, i)] - a.conj()).norm() > tol.eq_tol {
                    return Err(Error::InvalidChannel(format!(
                        "alpha[{j}][{i}] must equal conj(alpha[{i}][{j}])"
                    )));
                }
                if (a + 1.0).norm() > 1.0 + tol.eq_tol {
                    return Err(Error::InvalidChannel(format!(
                        "|1 + alpha[{i}][{j}]| = {} exceeds 1",
                        (a + 1.0).norm()
                    )));
                }
            }
        }
        Ok(Self { d, p, alpha })
    }

    /// Real `alpha` broadcast to every off-diagonal entry, zero on the diagonal.
    pub fn uniform(p: RealMatrix, alpha: f64, tol: Tolerance) -> Result<Self> {
        let d = p.ensure_square()?;
        let a = ComplexMatrix::from_fn(d, d, |i, j| {
            if i == j {
                C64::new(0.0, 0.0)
            } else {
                C64::new(alpha, 0.0)
            }
        });
        Self::new(p, a, tol)
    }

    /// `P = I`, `α = 0`.
    pub fn identity(d: usize) -> Self {
        Self {
            d,
            p: RealMatrix::identity(d),
            alpha: ComplexMatrix::zeros(d, d),
        }
    }

    pub fn from_config(cfg: &ChannelConfig, tol: Tolerance) -> Result<Self> {
        if cfg.p.rows() != cfg.d || cfg.p.cols() != cfg.d {
            return Err(Error::Config(format!(
                "P is {}x{} but d = {}",
                cfg.p.rows(),
                cfg.p.cols(),
                cfg.d
            )));
        }
        match &cfg.alpha {
            AlphaSpec::Uniform(a) => Self::uniform(cfg.p.clone(), *a, tol),
            AlphaSpec::Matrix(m) => Self::new(cfg.p.clone(), m.clone(), tol),
        }
    }

    pub fn to_config(&self) -> ChannelConfig {
        ChannelConfig {
            d: self.d,
            p: self.p.clone(),
            alpha: AlphaSpec::Matrix(self.alpha.clone()),
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Crosstalk table, `P[i][j]` = probability that core `i` exits on core `j`.
    pub fn crosstalk(&self) -> &RealMatrix {
        &self.p
    }

    pub fn alpha(&self) -> &ComplexMatrix {
        &self.alpha
    }

    /// `Ĵ`: diagonal `P[i][i]/d`, off-diagonal `(1 + α_ij)/d`.
    pub fn hat_block(&self) -> ComplexMatrix {
        let d = self.d as f64;
        ComplexMatrix::from_fn(self.d, self.d, |i, j| {
            if i == j {
                C64::new(self.p[(i, i)] / d, 0.0)
            } else {
                (self.alpha[(i, j)] + 1.0) / d
            }
        })
    }

    /// The channel formula on an arbitrary `d × d` operator.
    pub fn apply_matrix(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let d = self.d;
        if rho.rows() != d || rho.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: rho.rows(),
            });
        }
        Ok(ComplexMatrix::from_fn(d, d, |i, j| {
            if i == j {
                (0..d).map(|k| rho[(k, k)] * self.p[(k, j)]).sum()
            } else {
                rho[(i, j)] * (self.alpha[(i, j)] + 1.0)
            }
        }))
    }

    /// Propagates a state through the fibre.
    ///
    /// Channels that are not trace-preserving are refused unless
    /// `opts.force` is set. Non-CP parameter sets are evaluated anyway; both
    /// conditions are recorded as warnings on the result.
    pub fn apply(&self, rho: &DensityMatrix, opts: ApplyOptions) -> Result<Propagated> {
        let state = self.apply_matrix(rho.mat())?;
        let report = self.verify_cptp(opts.tol);
        let mut warnings = Vec::new();
        if !report.tp_ok {
            let worst = report.max_row_residual();
            if !opts.force {
                return Err(Error::NotTracePreserving(format!(
                    "crosstalk row sums deviate from 1 by up to {worst:.3e}"
                )));
            }
            warnings.push(ChannelWarning::NotTracePreserving {
                max_row_residual: worst,
            });
        }
        if !report.cp_ok {
            warnings.push(ChannelWarning::NotCompletelyPositive {
                choi_min_eig: report.choi_min_eig,
            });
        }
        Ok(Propagated { state, warnings })
    }

    /// Choi operator `(1 ⊗ E)(|Ψ+⟩⟨Ψ+|)` from its closed form
    /// `(1/d) Σ_ij P[i][j] |ij⟩⟨ij| + (1/d) Σ_{i≠j} (1 + α_ij) |ii⟩⟨jj|`.
    pub fn choi(&self) -> ChoiOperator {
        let d = self.d;
        let scale = 1.0 / d as f64;
        let mut j = ComplexMatrix::zeros(d * d, d * d);
        for a in 0..d {
            for b in 0..d {
                j[(a * d + b, a * d + b)] = C64::new(self.p[(a, b)] * scale, 0.0);
                if a != b {
                    j[(a * d + a, b * d + b)] = (self.alpha[(a, b)] + 1.0) * scale;
                }
            }
        }
        ChoiOperator {
            d,
            mat: j,
            hat_block: self.hat_block(),
        }
    }

    pub fn verify_cptp(&self, tol: Tolerance) -> CptpReport {
        let row_sum_residuals: Vec<f64> =
            self.p.row_sums().iter().map(|s| (s - 1.0).abs()).collect();
        let tp_ok = row_sum_residuals.iter().all(|&r| r <= tol.eq_tol);
        // Ĵ is Hermitian by construction, so is_psd cannot fail here.
        let check = is_psd(&self.hat_block(), tol).expect("hat block is Hermitian");
        CptpReport {
            tp_ok,
            cp_ok: check.psd,
            row_sum_residuals,
            choi_min_eig: check.min_eigenvalue,
        }
    }

    /// `(1 ⊗ E)` applied to a `d² × d²` operator.
    pub fn extend_one_side_matrix(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        let d = self.d;
        if m.rows() != d * d || m.cols() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: m.rows(),
            });
        }
        let mut out = ComplexMatrix::zeros(d * d, d * d);
        for a in 0..d {
            for b in 0..d {
                let block = ComplexMatrix::from_fn(d, d, |k, l| m[(a * d + k, b * d + l)]);
                let mapped = self.apply_matrix(&block)?;
                for k in 0..d {
                    for l in 0..d {
                        out[(a * d + k, b * d + l)] = mapped[(k, l)];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Sends the second party of a `(d, d)` bipartite state through the fibre.
    pub fn extend_one_side(&self, rho: &DensityMatrix, tol: Tolerance) -> Result<DensityMatrix> {
        let factors = rho.factors().ok_or(Error::NotBipartite)?;
        if factors != (self.d, self.d) {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: factors.1,
            });
        }
        let report = self.verify_cptp(tol);
        if !report.tp_ok {
            return Err(Error::NotTracePreserving(format!(
                "crosstalk row sums deviate from 1 by up to {:.3e}",
                report.max_row_residual()
            )));
        }
        let out = self.extend_one_side_matrix(rho.mat())?;
        DensityMatrix::bipartite(out, self.d, self.d, tol)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ApplyOptions {
    pub force: bool,
    pub tol: Tolerance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelWarning {
    NotTracePreserving { max_row_residual: f64 },
    NotCompletelyPositive { choi_min_eig: f64 },
}

/// Output of [`McfChannel::apply`] with any physicality warnings attached.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Propagated {
    pub state: ComplexMatrix,
    pub warnings: Vec<ChannelWarning>,
}

impl Propagated {
    pub fn into_density(self, tol: Tolerance) -> Result<DensityMatrix> {
        DensityMatrix::new(self.state, None, tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CptpReport {
    pub tp_ok: bool,
    pub cp_ok: bool,
    pub row_sum_residuals: Vec<f64>,
    pub choi_min_eig: f64,
}

impl CptpReport {
    pub fn max_row_residual(&self) -> f64 {
        self.row_sum_residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Choi operator of a channel on `C^d`, with factors `(input copy, output)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiOperator {
    d: usize,
    mat: ComplexMatrix,
    hat_block: ComplexMatrix,
}

impl ChoiOperator {
    /// Wraps an arbitrary `d² × d²` operator; `Ĵ` is its restriction to
    /// `span{|ii⟩}`.
    pub fn from_matrix(mat: ComplexMatrix, d: usize) -> Result<Self> {
        if mat.rows() != d * d || mat.cols() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: mat.rows(),
            });
        }
        let hat_block = ComplexMatrix::from_fn(d, d, |i, j| mat[(i * d + i, j * d + j)]);
        Ok(Self { d, mat, hat_block })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn mat(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn hat_block(&self) -> &ComplexMatrix {
        &self.hat_block
    }

    /// The operator as a bipartite state; fails for non-CP channels.
    pub fn density(&self, tol: Tolerance) -> Result<DensityMatrix> {
        DensityMatrix::bipartite(self.mat.clone(), self.d, self.d, tol)
    }
}

/// Channel reconstructed from a Choi operator:
/// `E(ρ) = d · Tr_A[J (ρᵀ ⊗ 1)]`.
///
/// The factor `d` compensates for the unit-norm `|Ψ+⟩` used to build `J`.
#[derive(Debug, Clone)]
pub struct ChoiChannel {
    d: usize,
    j: ComplexMatrix,
}

impl ChoiChannel {
    /// Requires `Tr_B J = I/d`, the trace-preservation condition.
    pub fn new(j: &ComplexMatrix, d: usize, tol: Tolerance) -> Result<Self> {
        if j.rows() != d * d || j.cols() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: j.rows(),
            });
        }
        let marginal = partial_trace(j, (d, d), Side::B);
        let target = ComplexMatrix::identity(d).scale(1.0 / d as f64);
        let deviation = marginal.max_abs_diff(&target);
        if deviation > tol.eq_tol {
            return Err(Error::NotTracePreservingChoi(format!(
                "Tr_B(J) deviates from I/d by {deviation:.3e}"
            )));
        }
        Ok(Self { d, j: j.clone() })
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.rows() != self.d || rho.cols() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: rho.rows(),
            });
        }
        let lifted = kron(&rho.transpose(), &ComplexMatrix::identity(self.d))?;
        let product = &self.j * &lifted;
        Ok(partial_trace(&product, (self.d, self.d), Side::A).scale(self.d as f64))
    }
}

/// Inverse Choi map, see [`ChoiChannel`].
pub fn channel_from_choi(j: &ChoiOperator, tol: Tolerance) -> Result<ChoiChannel> {
    ChoiChannel::new(j.mat(), j.d(), tol)
}

/// The example crosstalk table used for the propagation figure (5 cores).
pub fn example_crosstalk_5() -> RealMatrix {
    RealMatrix::from_rows(vec![
        vec![0.7, 0.1, 0.1, 0.1, 0.0],
        vec![0.2, 0.5, 0.1, 0.1, 0.1],
        vec![0.0, 0.3, 0.3, 0.3, 0.1],
        vec![0.1, 0.2, 0.0, 0.6, 0.1],
        vec![0.1, 0.1, 0.1, 0.1, 0.6],
    ])
    .expect("static table")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::hermitian_eigenvalues;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn identity_channel_is_identity() {
        let ch = McfChannel::identity(3);
        let rho = DensityMatrix::max_coherent(3).unwrap();
        let out = ch.apply(&rho, ApplyOptions::default()).unwrap();
        assert!(out.warnings.is_empty());
        assert_eq!(out.state, *rho.mat());
        let choi = ch.choi();
        assert!(
            choi.mat()
                .max_abs_diff(DensityMatrix::max_entangled(3).unwrap().mat())
                < 1e-15
        );
    }

    #[test]
    fn example_table_rows_sum_to_one() {
        let ch = McfChannel::uniform(example_crosstalk_5(), -0.8, tol()).unwrap();
        let report = ch.verify_cptp(tol());
        assert!(report.tp_ok);
        assert!(report.max_row_residual() < 1e-15);
    }

    #[test]
    fn propagation_of_max_coherent_state() {
        let rho = DensityMatrix::max_coherent(5).unwrap();
        let diag = [0.22, 0.24, 0.12, 0.24, 0.18];
        for (alpha, off) in [(0.0, 0.2), (-0.8, 0.04), (-1.0, 0.0), (-1.2, 0.04)] {
            let ch = McfChannel::uniform(example_crosstalk_5(), alpha, tol()).unwrap();
            let out = ch.apply(&rho, ApplyOptions::default()).unwrap().state;
            for i in 0..5 {
                assert!((out[(i, i)].re - diag[i]).abs() < 1e-12, "alpha {alpha}");
                for j in 0..5 {
                    if i != j {
                        assert!((out[(i, j)].norm() - off).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn cp_window_endpoints() {
        let p = RealMatrix::identity(5);
        let boundary = McfChannel::uniform(p.clone(), -1.25, tol())
            .unwrap()
            .verify_cptp(tol());
        assert!(boundary.cp_ok);
        assert!(boundary.choi_min_eig.abs() < 1e-14);
        let outside = McfChannel::uniform(p, -2.0, tol())
            .unwrap()
            .verify_cptp(tol());
        assert!(!outside.cp_ok);
        assert!((outside.choi_min_eig + 0.6).abs() < 1e-14);
    }

    #[test]
    fn hat_block_spectrum_for_uniform_dephasing() {
        // Ĵ = (1/5)(I + 0.2 (J - I)): eigenvalues 0.16 (x4) and 0.36
        let ch = McfChannel::uniform(RealMatrix::identity(5), -0.8, tol()).unwrap();
        let eig = hermitian_eigenvalues(&ch.hat_block());
        for v in &eig[..4] {
            assert!((v - 0.16).abs() < 1e-14);
        }
        assert!((eig[4] - 0.36).abs() < 1e-14);
        assert!(is_psd(&ch.hat_block(), tol()).unwrap().psd);
    }

    #[test]
    fn non_tp_channel_needs_force() {
        let p = RealMatrix::from_rows(vec![vec![0.9, 0.0], vec![0.0, 1.0]]).unwrap();
        let ch = McfChannel::uniform(p, 0.0, tol()).unwrap();
        assert!(!ch.verify_cptp(tol()).tp_ok);
        let rho = DensityMatrix::max_coherent(2).unwrap();
        let err = ch.apply(&rho, ApplyOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NotTracePreserving(_)));
        let forced = ch
            .apply(
                &rho,
                ApplyOptions {
                    force: true,
                    ..Default::default()
                },
            )
            .unwrap();
        assert!(matches!(
            forced.warnings[0],
            ChannelWarning::NotTracePreserving { .. }
        ));
    }

    #[test]
    fn construction_rejects_invalid_parameters() {
        let p = RealMatrix::identity(2);
        assert!(McfChannel::uniform(p.clone(), 0.5, tol()).is_err());
        let neg = RealMatrix::from_rows(vec![vec![1.1, -0.1], vec![0.0, 1.0]]).unwrap();
        assert!(McfChannel::uniform(neg, 0.0, tol()).is_err());
        let mut a = ComplexMatrix::zeros(2, 2);
        a[(0, 1)] = C64::new(-0.5, 0.1);
        a[(1, 0)] = C64::new(-0.5, 0.1);
        let err = McfChannel::new(p.clone(), a.clone(), tol()).unwrap_err();
        assert!(err.to_string().contains("conj"));
        a[(1, 0)] = C64::new(-0.5, -0.1);
        assert!(McfChannel::new(p, a, tol()).is_ok());
    }

    #[test]
    fn choi_inverse_of_depolarizer() {
        let d = 3;
        let j = ComplexMatrix::identity(d * d).scale(1.0 / (d * d) as f64);
        let ch = ChoiChannel::new(&j, d, tol()).unwrap();
        let rho = ComplexMatrix::from_fn(3, 3, |r, c| {
            if r == c {
                C64::new([0.5, 0.3, 0.2][r], 0.0)
            } else {
                C64::new(0.05, 0.01 * (r as f64 - c as f64))
            }
        });
        let out = ch.apply(&rho).unwrap();
        assert!(out.max_abs_diff(&ComplexMatrix::identity(3).scale(1.0 / 3.0)) < 1e-15);

        let bad = ComplexMatrix::identity(d * d).scale(0.2);
        let err = ChoiChannel::new(&bad, d, tol()).unwrap_err();
        assert!(err.to_string().starts_with("not trace-preserving Choi"));
    }

    #[test]
    fn config_round_trip() {
        let text = r#"{"d": 2, "P": [[0.9, 0.1], [0.2, 0.8]], "alpha": {"uniform": -0.5}}"#;
        let cfg: ChannelConfig = serde_json::from_str(text).unwrap();
        let ch = McfChannel::from_config(&cfg, tol()).unwrap();
        assert_eq!(ch.alpha()[(0, 1)], C64::new(-0.5, 0.0));
        let again = McfChannel::from_config(&ch.to_config(), tol()).unwrap();
        assert_eq!(again, ch);

        let mismatched = r#"{"d": 3, "P": [[1, 0], [0, 1]], "alpha": {"uniform": 0}}"#;
        let cfg: ChannelConfig = serde_json::from_str(mismatched).unwrap();
        assert!(McfChannel::from_config(&cfg, tol()).is_err());
    }
}
