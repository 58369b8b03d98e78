//! Density matrices and the generic bipartite entanglement criteria: partial
//! transposition (PPT) and realignment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{is_psd, kron, trace_norm, ComplexMatrix, Tolerance, C64};

/// Which tensor factor an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

/// Hermitian, unit-trace, positive semidefinite matrix, optionally split
/// into two tensor factors `(d_a, d_b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
    factors: Option<(usize, usize)>,
}

impl DensityMatrix {
    pub fn new(
        mat: ComplexMatrix,
        factors: Option<(usize, usize)>,
        tol: Tolerance,
    ) -> Result<Self> {
        let n = mat.ensure_square()?;
        if let Some((d_a, d_b)) = factors {
            if d_a * d_b != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: d_a * d_b,
                });
            }
        }
        let deviation = mat.hermitian_deviation();
        if deviation > tol.eq_tol {
            return Err(Error::InvalidState(format!(
                "not Hermitian (max deviation {deviation:.3e})"
            )));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > tol.eq_tol || tr.im.abs() > tol.eq_tol {
            return Err(Error::InvalidState(format!(
                "trace {:.12} differs from 1",
                tr.re
            )));
        }
        let psd = is_psd(&mat, tol)?;
        if !psd.psd {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (min eigenvalue {:.3e})",
                psd.min_eigenvalue
            )));
        }
        Ok(Self {
            mat: mat.hermitian_part(),
            factors,
        })
    }

    pub fn bipartite(mat: ComplexMatrix, d_a: usize, d_b: usize, tol: Tolerance) -> Result<Self> {
        Self::new(mat, Some((d_a, d_b)), tol)
    }

    /// Projector onto `|Ψ+⟩ = Σ_i |ii⟩ / √d`.
    pub fn max_entangled(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidState(format!(
                "maximally entangled state needs d >= 2, got {d}"
            )));
        }
        let mut psi = vec![C64::new(0.0, 0.0); d * d];
        let amp = 1.0 / (d as f64).sqrt();
        for i in 0..d {
            psi[i * d + i] = C64::new(amp, 0.0);
        }
        Ok(Self {
            mat: ComplexMatrix::outer(&psi),
            factors: Some((d, d)),
        })
    }

    /// Uniform superposition over the computational basis: every entry `1/d`.
    pub fn max_coherent(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::EmptyMatrix);
        }
        let v = 1.0 / d as f64;
        Ok(Self {
            mat: ComplexMatrix::from_fn(d, d, |_, _| C64::new(v, 0.0)),
            factors: None,
        })
    }

    /// `I / (d_a d_b)`.
    pub fn maximally_mixed(d_a: usize, d_b: usize) -> Result<Self> {
        let n = d_a * d_b;
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        Ok(Self {
            mat: ComplexMatrix::identity(n).scale(1.0 / n as f64),
            factors: Some((d_a, d_b)),
        })
    }

    /// Normalized projector onto `psi`.
    pub fn pure(psi: &[C64], factors: Option<(usize, usize)>) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if psi.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState(
                "pure state vector has zero norm".into(),
            ));
        }
        let unit: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        if let Some((d_a, d_b)) = factors {
            if d_a * d_b != psi.len() {
                return Err(Error::DimensionMismatch {
                    expected: psi.len(),
                    found: d_a * d_b,
                });
            }
        }
        Ok(Self {
            mat: ComplexMatrix::outer(&unit),
            factors,
        })
    }

    /// `ρ_A ⊗ ρ_B` with factors `(dim ρ_A, dim ρ_B)`.
    pub fn product(a: &Self, b: &Self) -> Result<Self> {
        Ok(Self {
            mat: kron(&a.mat, &b.mat)?,
            factors: Some((a.dim(), b.dim())),
        })
    }

    /// Convex combination `Σ w_k ρ_k`; weights must be nonnegative and sum to 1.
    pub fn mixture(parts: &[(f64, Self)], tol: Tolerance) -> Result<Self> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| Error::InvalidState("empty mixture".into()))?;
        let mut acc = ComplexMatrix::zeros(first.dim(), first.dim());
        for (w, rho) in parts {
            if rho.factors != first.factors || rho.dim() != first.dim() {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    found: rho.dim(),
                });
            }
            if *w < 0.0 {
                return Err(Error::InvalidState(format!("negative mixture weight {w}")));
            }
            acc = &acc + &rho.mat.scale(*w);
        }
        Self::new(acc, first.factors, tol)
    }

    pub fn mat(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn factors(&self) -> Option<(usize, usize)> {
        self.factors
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    /// Same matrix with a tensor split attached.
    pub fn with_factors(mut self, d_a: usize, d_b: usize) -> Result<Self> {
        if d_a * d_b != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: d_a * d_b,
            });
        }
        self.factors = Some((d_a, d_b));
        Ok(self)
    }

    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }

    fn require_factors(&self) -> Result<(usize, usize)> {
        self.factors.ok_or(Error::NotBipartite)
    }

    pub fn partial_transpose(&self, side: Side) -> Result<ComplexMatrix> {
        Ok(partial_transpose(&self.mat, self.require_factors()?, side))
    }

    pub fn partial_trace(&self, side: Side) -> Result<ComplexMatrix> {
        Ok(partial_trace(&self.mat, self.require_factors()?, side))
    }

    /// Peres–Horodecki test on the partial transpose with respect to `B`.
    pub fn is_ppt(&self, tol: Tolerance) -> Result<CriterionVerdict> {
        ppt_verdict(&self.mat, self.require_factors()?, tol)
    }

    pub fn realignment_trace_norm(&self, tol: Tolerance) -> Result<CriterionVerdict> {
        realignment_verdict(&self.mat, self.require_factors()?, tol)
    }

    pub fn to_literal(&self) -> DensityLiteral {
        DensityLiteral {
            d_a: self.factors.map(|f| f.0),
            d_b: self.factors.map(|f| f.1),
            mat: self.mat.clone(),
        }
    }
}

/// Serialized form: `{ "d_a": int, "d_b": int, "mat": [[[re, im], …], …] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityLiteral {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_a: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_b: Option<usize>,
    pub mat: ComplexMatrix,
}

impl DensityLiteral {
    pub fn into_density(self, tol: Tolerance) -> Result<DensityMatrix> {
        let factors = match (self.d_a, self.d_b) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => return Err(Error::Config("d_a and d_b must be given together".into())),
        };
        DensityMatrix::new(self.mat, factors, tol)
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_literal().serialize(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictFlag {
    Entangled,
    Inconclusive,
    NotApplicable,
}

/// Result of a one-sided entanglement test. A test can certify entanglement
/// but never separability, hence no "separable" flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionVerdict {
    pub name: String,
    pub value: f64,
    pub flag: VerdictFlag,
}

impl CriterionVerdict {
    pub fn new(name: &str, value: f64, entangled: bool) -> Self {
        Self {
            name: name.to_owned(),
            value,
            flag: if entangled {
                VerdictFlag::Entangled
            } else {
                VerdictFlag::Inconclusive
            },
        }
    }

    pub fn not_applicable(name: &str, value: f64) -> Self {
        Self {
            name: name.to_owned(),
            value,
            flag: VerdictFlag::NotApplicable,
        }
    }

    pub fn is_entangled(&self) -> bool {
        self.flag == VerdictFlag::Entangled
    }
}

/// Partial transposition of an operator on `C^{d_a} ⊗ C^{d_b}`.
///
/// # Panics
/// Panics if `m` is not `d_a d_b` square.
pub fn partial_transpose(
    m: &ComplexMatrix,
    (d_a, d_b): (usize, usize),
    side: Side,
) -> ComplexMatrix {
    let n = d_a * d_b;
    assert!(
        m.rows() == n && m.cols() == n,
        "factor split does not match matrix"
    );
    ComplexMatrix::from_fn(n, n, |r, c| {
        let (i, k) = (r / d_b, r % d_b);
        let (j, l) = (c / d_b, c % d_b);
        match side {
            Side::B => m[(i * d_b + l, j * d_b + k)],
            Side::A => m[(j * d_b + k, i * d_b + l)],
        }
    })
}

/// Partial trace over `side`; the result lives on the other factor.
pub fn partial_trace(m: &ComplexMatrix, (d_a, d_b): (usize, usize), side: Side) -> ComplexMatrix {
    assert!(
        m.rows() == d_a * d_b && m.cols() == d_a * d_b,
        "factor split does not match matrix"
    );
    match side {
        Side::B => ComplexMatrix::from_fn(d_a, d_a, |i, j| {
            (0..d_b).map(|k| m[(i * d_b + k, j * d_b + k)]).sum()
        }),
        Side::A => ComplexMatrix::from_fn(d_b, d_b, |k, l| {
            (0..d_a).map(|i| m[(i * d_b + k, i * d_b + l)]).sum()
        }),
    }
}

/// Realignment `R(ρ)_{(m,n),(μ,ν)} = ρ_{(m,μ),(n,ν)}` for equal factors.
///
/// With this grouping `R(X ⊗ Y) = vec(X) vec(Y)ᵀ`, so product states have
/// `‖R‖_Tr = ‖X‖_F ‖Y‖_F` and the map is an involution.
pub fn realign(m: &ComplexMatrix, (d_a, d_b): (usize, usize)) -> Result<ComplexMatrix> {
    if d_a != d_b {
        return Err(Error::NonSquareSplit { d_a, d_b });
    }
    let d = d_a;
    if m.rows() != d * d || m.cols() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            found: m.rows(),
        });
    }
    Ok(ComplexMatrix::from_fn(d * d, d * d, |r, c| {
        let (mm, n) = (r / d, r % d);
        let (mu, nu) = (c / d, c % d);
        m[(mm * d + mu, n * d + nu)]
    }))
}

/// PPT verdict on a raw bipartite operator; the value is the minimum
/// eigenvalue of the partial transpose.
pub fn ppt_verdict(
    m: &ComplexMatrix,
    factors: (usize, usize),
    tol: Tolerance,
) -> Result<CriterionVerdict> {
    let pt = partial_transpose(m, factors, Side::B);
    let check = is_psd(&pt, tol)?;
    Ok(CriterionVerdict::new(
        "ppt",
        check.min_eigenvalue,
        check.min_eigenvalue < -tol.psd_floor,
    ))
}

/// Realignment verdict; the value is `‖R(ρ)‖_Tr`, entangled above `1 + eq_tol`.
pub fn realignment_verdict(
    m: &ComplexMatrix,
    factors: (usize, usize),
    tol: Tolerance,
) -> Result<CriterionVerdict> {
    let value = trace_norm(&realign(m, factors)?);
    Ok(CriterionVerdict::new(
        "realignment",
        value,
        value > 1.0 + tol.eq_tol,
    ))
}
