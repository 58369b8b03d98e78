//! Conjugate-local-diagonal-unitary-invariant (CLDUI) states and
//! diagonal-symmetric (DS) states.
//!
//! A CLDUI state on `C^d ⊗ C^d` is fixed by a pair `(A, B)`:
//!
//! ```text
//! ρ = Σ_ij A_ij |ij⟩⟨ij| + Σ_{i≠j} B_ij |ii⟩⟨jj|,   diag(A) = diag(B)
//! ```
//!
//! Its partial transpose splits into the `1 × 1` blocks `A_ii` and `2 × 2`
//! blocks `[[A_ij, B_ij], [B_ji, A_ji]]`, and its realignment into `A` acting
//! on `span{|ii⟩}` plus the diagonal entries `B_ij` on `|ij⟩`, `i ≠ j`. Both
//! criteria therefore reduce to small closed forms.
//!
//! The Choi operator of a fibre channel is CLDUI with `A = P/d`, `B = Ĵ`, and
//! the partial transpose of a DS state is CLDUI with `A = B = M_d`. Matching
//! the two turns a DS target into fibre parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{
    entrywise_one_norm, is_psd, trace_norm, ComplexMatrix, RealMatrix, Tolerance, C64,
};
use crate::mcfchannel::{ChoiOperator, McfChannel};
use crate::qstate::{CriterionVerdict, DensityMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct ClduiState {
    d: usize,
    a: RealMatrix,
    b: ComplexMatrix,
}

impl ClduiState {
    /// Checks `A ≥ 0`, `Σ A = 1`, `B ⪰ 0` and `diag(A) = diag(B)`.
    pub fn new(a: RealMatrix, b: ComplexMatrix, tol: Tolerance) -> Result<Self> {
        let s = Self::from_parts_unchecked(a, b, tol)?;
        let d = s.d;
        for i in 0..d {
            for j in 0..d {
                if s.a[(i, j)] < -tol.eq_tol {
                    return Err(Error::InvalidState(format!(
                        "A[{i}][{j}] = {} is negative",
                        s.a[(i, j)]
                    )));
                }
            }
        }
        let total = s.a.sum();
        if (total - 1.0).abs() > tol.eq_tol {
            return Err(Error::InvalidState(format!(
                "entries of A sum to {total}, not 1"
            )));
        }
        let psd = is_psd(&s.b, tol).map_err(|e| Error::InvalidState(format!("B is {e}")))?;
        if !psd.psd {
            return Err(Error::InvalidState(format!(
                "B is not positive semidefinite (min eigenvalue {:.3e})",
                psd.min_eigenvalue
            )));
        }
        Ok(s)
    }

    /// Structural checks only (shapes and `diag(A) = diag(B)`). Used to
    /// inspect the output of parameter sets that are not physical.
    pub fn from_parts_unchecked(a: RealMatrix, b: ComplexMatrix, tol: Tolerance) -> Result<Self> {
        let d = a.ensure_square()?;
        if b.rows() != d || b.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: b.rows(),
            });
        }
        for i in 0..d {
            if (b[(i, i)] - a[(i, i)]).norm() > tol.eq_tol {
                return Err(Error::InvalidState(format!(
                    "diag(A) and diag(B) differ at index {i}"
                )));
            }
        }
        Ok(Self { d, a, b })
    }

    /// Reads `(A, B)` off a Choi operator: `A_ij = J_{ij,ij}`, `B_ij = J_{ii,jj}`.
    pub fn from_choi(j: &ChoiOperator, tol: Tolerance) -> Result<Self> {
        let (a, b) = Self::extract(j, tol)?;
        Self::new(a, b, tol)
    }

    pub fn from_choi_unchecked(j: &ChoiOperator, tol: Tolerance) -> Result<Self> {
        let (a, b) = Self::extract(j, tol)?;
        Self::from_parts_unchecked(a, b, tol)
    }

    fn extract(j: &ChoiOperator, tol: Tolerance) -> Result<(RealMatrix, ComplexMatrix)> {
        let d = j.d();
        let m = j.mat();
        for r in 0..d * d {
            for c in 0..d * d {
                let (i, k) = (r / d, r % d);
                let (i2, k2) = (c / d, c % d);
                let on_support = r == c || (i == k && i2 == k2);
                if !on_support && m[(r, c)].norm() > tol.eq_tol {
                    return Err(Error::MalformedChoi(format!(
                        "entry ({r}, {c}) lies outside the CLDUI support"
                    )));
                }
            }
        }
        let mut a = RealMatrix::zeros(d, d);
        for i in 0..d {
            for k in 0..d {
                let z = m[(i * d + k, i * d + k)];
                if z.im.abs() > tol.eq_tol {
                    return Err(Error::MalformedChoi(format!(
                        "diagonal entry ({i}{k}) is not real"
                    )));
                }
                a[(i, k)] = z.re;
            }
        }
        let b = ComplexMatrix::from_fn(d, d, |i, k| m[(i * d + i, k * d + k)]);
        Ok((a, b))
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn a(&self) -> &RealMatrix {
        &self.a
    }

    pub fn b(&self) -> &ComplexMatrix {
        &self.b
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        let d = self.d;
        let mut rho = ComplexMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                rho[(i * d + j, i * d + j)] = C64::new(self.a[(i, j)], 0.0);
                if i != j {
                    rho[(i * d + i, j * d + j)] = self.b[(i, j)];
                }
            }
        }
        rho
    }

    pub fn to_density(&self, tol: Tolerance) -> Result<DensityMatrix> {
        DensityMatrix::bipartite(self.to_matrix(), self.d, self.d, tol)
    }

    /// PPT iff `A_ij A_ji ≥ |B_ij|²` for all `i ≠ j`; the value is the
    /// smallest slack.
    pub fn is_ppt(&self, tol: Tolerance) -> CriterionVerdict {
        let mut value = f64::INFINITY;
        for i in 0..self.d {
            for j in (i + 1)..self.d {
                let slack = self.a[(i, j)] * self.a[(j, i)] - self.b[(i, j)].norm_sqr();
                value = value.min(slack);
            }
        }
        if !value.is_finite() {
            return CriterionVerdict::not_applicable("cldui_ppt", 0.0);
        }
        CriterionVerdict::new("cldui_ppt", value, value < -tol.eq_tol)
    }

    /// Exact realignment trace norm `‖A‖_Tr + Σ_{i≠j} |B_ij|`.
    pub fn realignment(&self, tol: Tolerance) -> ClduiRealignment {
        let mut value = trace_norm(&self.a.to_complex());
        for i in 0..self.d {
            for j in 0..self.d {
                if i != j {
                    value += self.b[(i, j)].norm();
                }
            }
        }
        let a_c = self.a.to_complex();
        ClduiRealignment {
            verdict: CriterionVerdict::new("cldui_realignment", value, value > 1.0 + tol.eq_tol),
            a_gap: entrywise_one_norm(&a_c) - trace_norm(&a_c),
            b_gap: entrywise_one_norm(&self.b) - trace_norm(&self.b),
        }
    }
}

/// Realignment verdict for a CLDUI state plus the norm gaps
/// `‖A‖₁ − ‖A‖_Tr` and `‖B‖₁ − ‖B‖_Tr`.
///
/// For a valid state (`Σ A = 1`, `B ⪰ 0`) the criterion is satisfied exactly
/// when `b_gap ≤ a_gap`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClduiRealignment {
    pub verdict: CriterionVerdict,
    pub a_gap: f64,
    pub b_gap: f64,
}

/// One Dicke vector with its label `(i, j)`, `i ≤ j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeVector {
    pub i: usize,
    pub j: usize,
    pub amplitudes: Vec<f64>,
}

/// `|ii⟩` and `(|ij⟩ + |ji⟩)/√2` for `i < j`, ordered by `(i, j)`.
pub fn dicke_basis(d: usize) -> Result<Vec<DickeVector>> {
    if d < 2 {
        return Err(Error::InvalidState(format!(
            "Dicke basis needs d >= 2, got {d}"
        )));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for i in 0..d {
        for j in i..d {
            let mut v = vec![0.0; d * d];
            if i == j {
                v[i * d + i] = 1.0;
            } else {
                v[i * d + j] = h;
                v[j * d + i] = h;
            }
            out.push(DickeVector {
                i,
                j,
                amplitudes: v,
            });
        }
    }
    Ok(out)
}

/// Mixture of Dicke projectors with weights `p_ij`, `i ≤ j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DsState {
    d: usize,
    weights: Vec<f64>,
}

fn pair_index(d: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * d - i * (i + 1) / 2 + j
}

impl DsState {
    /// Weights listed in Dicke order `(0,0), (0,1), …, (d-1,d-1)`.
    pub fn new(d: usize, weights: Vec<f64>, tol: Tolerance) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidState(format!(
                "DS state needs d >= 2, got {d}"
            )));
        }
        if weights.len() != d * (d + 1) / 2 {
            return Err(Error::DimensionMismatch {
                expected: d * (d + 1) / 2,
                found: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < -tol.eq_tol) {
            return Err(Error::InvalidState(format!("DS weight {w} is negative")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > tol.eq_tol {
            return Err(Error::InvalidState(format!(
                "DS weights sum to {total}, not 1"
            )));
        }
        Ok(Self { d, weights })
    }

    /// Inverts `M_d`: `p_ii = M_ii`, `p_ij = 2 M_ij`.
    pub fn from_m_matrix(m: &RealMatrix, tol: Tolerance) -> Result<Self> {
        let d = m.ensure_square()?;
        let deviation = m.symmetry_deviation();
        if deviation > tol.eq_tol {
            return Err(Error::NotSymmetric { deviation });
        }
        let mut w = Vec::with_capacity(d * (d + 1) / 2);
        for i in 0..d {
            for j in i..d {
                w.push(if i == j { m[(i, i)] } else { 2.0 * m[(i, j)] });
            }
        }
        Self::new(d, w, tol)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[pair_index(self.d, i, j)]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `M_d`: diagonal `p_ii`, off-diagonal `p_ij / 2`.
    pub fn m_matrix(&self) -> RealMatrix {
        RealMatrix::from_fn(self.d, self.d, |i, j| {
            if i == j {
                self.weight(i, i)
            } else {
                self.weight(i, j) / 2.0
            }
        })
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        let d = self.d;
        let mut rho = ComplexMatrix::zeros(d * d, d * d);
        for v in dicke_basis(d).expect("d >= 2") {
            let w = self.weight(v.i, v.j);
            let support: Vec<usize> = (0..d * d).filter(|&k| v.amplitudes[k] != 0.0).collect();
            for &r in &support {
                for &c in &support {
                    rho[(r, c)] += C64::new(w * v.amplitudes[r] * v.amplitudes[c], 0.0);
                }
            }
        }
        rho
    }

    pub fn to_density(&self, tol: Tolerance) -> Result<DensityMatrix> {
        DensityMatrix::bipartite(self.to_matrix(), self.d, self.d, tol)
    }

    /// `ρ^Γ = Σ_ij M_ij |ij⟩⟨ij| + Σ_{i≠j} M_ij |ii⟩⟨jj|`, i.e. the CLDUI
    /// state with `A = B = M_d`.
    pub fn partial_transpose(&self) -> DsPartialTranspose {
        let m = self.m_matrix();
        let d = self.d;
        let mut pt = ComplexMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                pt[(i * d + j, i * d + j)] = C64::new(m[(i, j)], 0.0);
                if i != j {
                    pt[(i * d + i, j * d + j)] = C64::new(m[(i, j)], 0.0);
                }
            }
        }
        DsPartialTranspose { matrix: pt, m }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DsPartialTranspose {
    pub matrix: ComplexMatrix,
    pub m: RealMatrix,
}

/// DS input file: `{ "d": int, "M": [[…]] }` or
/// `{ "d": int, "p": { "ii": […], "ij": […] } }` with `ij` in `(i<j)` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DsInput {
    Matrix {
        d: usize,
        #[serde(rename = "M")]
        m: RealMatrix,
    },
    Weights {
        d: usize,
        p: DsWeights,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsWeights {
    pub ii: Vec<f64>,
    pub ij: Vec<f64>,
}

impl DsInput {
    pub fn d(&self) -> usize {
        match self {
            Self::Matrix { d, .. } | Self::Weights { d, .. } => *d,
        }
    }

    /// The `M_d` matrix described by the input (not validated as a state).
    pub fn m_matrix(&self) -> Result<RealMatrix> {
        match self {
            Self::Matrix { d, m } => {
                if m.rows() != *d || m.cols() != *d {
                    return Err(Error::Config(format!(
                        "M is {}x{} but d = {d}",
                        m.rows(),
                        m.cols()
                    )));
                }
                Ok(m.clone())
            }
            Self::Weights { d, p } => {
                let d = *d;
                if d == 0 || p.ii.len() != d || p.ij.len() != d * (d - 1) / 2 {
                    return Err(Error::Config(format!(
                        "expected {d} diagonal and {} off-diagonal weights",
                        d * d.saturating_sub(1) / 2
                    )));
                }
                let mut m = RealMatrix::zeros(d, d);
                let mut k = 0;
                for i in 0..d {
                    m[(i, i)] = p.ii[i];
                    for j in (i + 1)..d {
                        m[(i, j)] = p.ij[k] / 2.0;
                        m[(j, i)] = p.ij[k] / 2.0;
                        k += 1;
                    }
                }
                Ok(m)
            }
        }
    }
}

/// Fibre parameters whose Choi operator is `ρ_DS^Γ` for the DS state with
/// matrix `m`: `P[i][j] = d M_ij`, `α_ij = d M_ij − 1`.
///
/// `m` must be symmetric, nonnegative, have every row and column summing to
/// `1/d` (trace preservation) and satisfy `d M_ij ≤ 1` off the diagonal.
pub fn channel_from_ds(m: &RealMatrix, tol: Tolerance) -> Result<McfChannel> {
    let d = m.ensure_square()?;
    let deviation = m.symmetry_deviation();
    if deviation > tol.eq_tol {
        return Err(Error::NotSymmetric { deviation });
    }
    for i in 0..d {
        for j in 0..d {
            if m[(i, j)] < -tol.eq_tol {
                return Err(Error::NegativeEntry {
                    row: i,
                    col: j,
                    value: m[(i, j)],
                });
            }
        }
    }
    let target = 1.0 / d as f64;
    for (kind, sums) in [("row", m.row_sums()), ("column", m.col_sums())] {
        if let Some((k, s)) = sums
            .iter()
            .enumerate()
            .find(|(_, s)| (*s - target).abs() > tol.eq_tol)
        {
            return Err(Error::MarginalCondition(format!(
                "{kind} {k} sums to {s}, expected 1/d = {target}"
            )));
        }
    }
    let df = d as f64;
    for i in 0..d {
        for j in 0..d {
            if i != j && df * m[(i, j)] > 1.0 + tol.eq_tol {
                return Err(Error::DephasingOutOfRange(format!(
                    "d*M[{i}][{j}] = {} exceeds 1",
                    df * m[(i, j)]
                )));
            }
        }
    }
    let p = m.scale(df);
    let alpha = ComplexMatrix::from_fn(d, d, |i, j| {
        if i == j {
            C64::new(0.0, 0.0)
        } else {
            C64::new(df * m[(i, j)] - 1.0, 0.0)
        }
    });
    McfChannel::new(p, alpha, tol)
}

/// Inverse of [`channel_from_ds`]: `Some(M)` when `P` is symmetric and
/// `1 + α_ij = P[i][j]` (real) for all `i ≠ j`.
pub fn ds_matrix_of_channel(ch: &McfChannel, tol: Tolerance) -> Option<RealMatrix> {
    let d = ch.d();
    let p = ch.crosstalk();
    if p.symmetry_deviation() > tol.eq_tol {
        return None;
    }
    for i in 0..d {
        for j in 0..d {
            if i != j && (ch.alpha()[(i, j)] + 1.0 - p[(i, j)]).norm() > tol.eq_tol {
                return None;
            }
        }
    }
    Some(p.scale(1.0 / d as f64))
}

/// Example 6x6 matrix in `DNN_6` with unit-`1/6` margins that is known not to
/// be completely positive; its DS state is PPT yet entangled.
pub fn bound_entangled_example_6() -> RealMatrix {
    let row = [1.0 / 3.0, 1.0 / 4.0, 1.0 / 12.0, 0.0, 1.0 / 12.0, 1.0 / 4.0];
    RealMatrix::from_fn(6, 6, |i, j| row[(j + 6 - i) % 6] / 6.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::hermitian_eigenvalues;
    use crate::qstate::VerdictFlag;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn bell_cldui(d: usize) -> ClduiState {
        let a = RealMatrix::identity(d).scale(1.0 / d as f64);
        let b = ComplexMatrix::from_fn(d, d, |_, _| C64::new(1.0 / d as f64, 0.0));
        ClduiState::new(a, b, tol()).unwrap()
    }

    #[test]
    fn dicke_basis_small() {
        let basis = dicke_basis(2).unwrap();
        assert_eq!(basis.len(), 3);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(basis[0].amplitudes, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(basis[1].amplitudes, vec![0.0, h, h, 0.0]);
        assert_eq!(basis[2].amplitudes, vec![0.0, 0.0, 0.0, 1.0]);
        for d in 2..=6 {
            let b = dicke_basis(d).unwrap();
            assert_eq!(b.len(), d * (d + 1) / 2);
            for (x, u) in b.iter().enumerate() {
                for (y, v) in b.iter().enumerate() {
                    let dot: f64 = u
                        .amplitudes
                        .iter()
                        .zip(&v.amplitudes)
                        .map(|(a, b)| a * b)
                        .sum();
                    let expected = if x == y { 1.0 } else { 0.0 };
                    assert!((dot - expected).abs() < 1e-15);
                }
            }
        }
        assert!(dicke_basis(1).is_err());
    }

    #[test]
    fn bell_and_mixed_cldui_states() {
        let bell = bell_cldui(3);
        let psi = DensityMatrix::max_entangled(3).unwrap();
        assert!(bell.to_matrix().max_abs_diff(psi.mat()) < 1e-15);

        let d = 3;
        let a = RealMatrix::from_fn(d, d, |_, _| 1.0 / 9.0);
        let b = ComplexMatrix::identity(d).scale(1.0 / 9.0);
        let mixed = ClduiState::new(a, b, tol()).unwrap();
        let target = DensityMatrix::maximally_mixed(3, 3).unwrap();
        assert!(mixed.to_matrix().max_abs_diff(target.mat()) < 1e-15);
    }

    #[test]
    fn invalid_cldui_names_condition() {
        let a = RealMatrix::identity(2).scale(0.5);
        let b = ComplexMatrix::from_real(2, 2, &[0.5, 0.9, 0.9, 0.5]).unwrap();
        let err = ClduiState::new(a.clone(), b, tol()).unwrap_err();
        assert!(err.to_string().contains("B is not positive semidefinite"));
        let b = ComplexMatrix::from_real(2, 2, &[0.4, 0.0, 0.0, 0.5]).unwrap();
        assert!(ClduiState::new(a, b, tol())
            .unwrap_err()
            .to_string()
            .contains("diag(A)"));
        let a = RealMatrix::identity(2);
        let b = ComplexMatrix::identity(2);
        assert!(ClduiState::new(a, b, tol())
            .unwrap_err()
            .to_string()
            .contains("sum to"));
    }

    #[test]
    fn cldui_criteria_on_bell_state() {
        let bell = bell_cldui(3);
        let ppt = bell.is_ppt(tol());
        assert!(ppt.is_entangled());
        assert!((ppt.value + 1.0 / 9.0).abs() < 1e-15);
        let r = bell.realignment(tol());
        assert!((r.verdict.value - 3.0).abs() < 1e-12);
        assert!(r.verdict.is_entangled());
        // the realignment criterion is violated, and indeed b_gap > a_gap
        assert!(r.b_gap > r.a_gap);
    }

    #[test]
    fn maximally_mixed_realignment() {
        let a = RealMatrix::from_fn(2, 2, |_, _| 0.25);
        let b = ComplexMatrix::identity(2).scale(0.25);
        let s = ClduiState::new(a, b, tol()).unwrap();
        let r = s.realignment(tol());
        assert!((r.verdict.value - 0.5).abs() < 1e-12);
        assert_eq!(r.verdict.flag, VerdictFlag::Inconclusive);
    }

    #[test]
    fn identity_channel_choi_to_cldui() {
        let j = McfChannel::identity(2).choi();
        let s = ClduiState::from_choi(&j, tol()).unwrap();
        assert_eq!(*s.a(), RealMatrix::identity(2).scale(0.5));
        assert!(
            s.b()
                .max_abs_diff(&ComplexMatrix::from_fn(2, 2, |_, _| C64::new(0.5, 0.0)))
                < 1e-15
        );
    }

    #[test]
    fn malformed_choi_rejected() {
        let mut m = ComplexMatrix::identity(4).scale(0.25);
        m[(1, 2)] = C64::new(0.1, 0.0);
        m[(2, 1)] = C64::new(0.1, 0.0);
        let j = ChoiOperator::from_matrix(m, 2).unwrap();
        assert!(matches!(
            ClduiState::from_choi(&j, tol()),
            Err(Error::MalformedChoi(_))
        ));
    }

    #[test]
    fn ds_simple_states() {
        let s = DsState::new(2, vec![1.0, 0.0, 0.0], tol()).unwrap();
        let mut expected = ComplexMatrix::zeros(4, 4);
        expected[(0, 0)] = C64::new(1.0, 0.0);
        assert_eq!(s.to_matrix(), expected);

        let s = DsState::new(2, vec![0.5, 0.0, 0.5], tol()).unwrap();
        let pt = s.partial_transpose();
        assert_eq!(pt.m, RealMatrix::identity(2).scale(0.5));
        assert!(DsState::new(2, vec![0.5, 0.6, -0.1], tol()).is_err());
        assert!(DsState::new(2, vec![0.5, 0.6], tol()).is_err());
    }

    #[test]
    fn paper_example_margins_and_design() {
        let m = bound_entangled_example_6();
        for s in m.row_sums().into_iter().chain(m.col_sums()) {
            assert!((s - 1.0 / 6.0).abs() < 1e-15);
        }
        assert!((entrywise_one_norm(&m.to_complex()) - 1.0).abs() < 1e-15);
        let ch = channel_from_ds(&m, tol()).unwrap();
        assert!((ch.crosstalk()[(0, 0)] - 1.0 / 3.0).abs() < 1e-15);
        assert!((ch.crosstalk()[(0, 1)] - 0.25).abs() < 1e-15);
        assert!((ch.alpha()[(0, 1)].re + 0.75).abs() < 1e-15);
        let report = ch.verify_cptp(tol());
        assert!(report.tp_ok && report.cp_ok);

        let ds = DsState::from_m_matrix(&m, tol()).unwrap();
        let choi = ch.choi();
        assert!(choi.mat().max_abs_diff(&ds.partial_transpose().matrix) < 1e-15);
        let cl = ClduiState::from_choi(&choi, tol()).unwrap();
        let ppt = cl.is_ppt(tol());
        assert_eq!(ppt.flag, VerdictFlag::Inconclusive);
        assert!(ppt.value.abs() < 1e-15);
    }

    #[test]
    fn full_dephasing_design() {
        let d = 4;
        let m = RealMatrix::identity(d).scale(1.0 / d as f64);
        let ch = channel_from_ds(&m, tol()).unwrap();
        assert_eq!(*ch.crosstalk(), RealMatrix::identity(d));
        assert!((ch.alpha()[(0, 3)].re + 1.0).abs() < 1e-15);
        let mut expected = ComplexMatrix::zeros(d * d, d * d);
        for i in 0..d {
            expected[(i * d + i, i * d + i)] = C64::new(0.25, 0.0);
        }
        assert!(ch.choi().mat().max_abs_diff(&expected) < 1e-15);
        assert_eq!(ds_matrix_of_channel(&ch, tol()), Some(m));
    }

    #[test]
    fn design_rejections() {
        let mut m = RealMatrix::identity(3).scale(1.0 / 3.0);
        m[(0, 0)] = 0.9 / 3.0;
        assert!(matches!(
            channel_from_ds(&m, tol()),
            Err(Error::MarginalCondition(_))
        ));

        let mut asym = RealMatrix::identity(2).scale(0.25);
        asym[(0, 1)] = 0.25;
        asym[(1, 1)] = 0.0;
        let err = channel_from_ds(&asym, tol()).unwrap_err();
        assert!(err.to_string().starts_with("not symmetric"));

        let neg = RealMatrix::from_rows(vec![vec![0.6, -0.1], vec![-0.1, 0.6]]).unwrap();
        assert!(matches!(
            channel_from_ds(&neg, tol()),
            Err(Error::NegativeEntry { .. })
        ));
    }

    #[test]
    fn ds_input_formats_agree() {
        let m: DsInput =
            serde_json::from_str(r#"{"d": 2, "M": [[0.25, 0.25], [0.25, 0.25]]}"#).unwrap();
        let w: DsInput =
            serde_json::from_str(r#"{"d": 2, "p": {"ii": [0.25, 0.25], "ij": [0.5]}}"#).unwrap();
        assert_eq!(m.m_matrix().unwrap(), w.m_matrix().unwrap());
        let bad: DsInput = serde_json::from_str(r#"{"d": 3, "p": {"ii": [1], "ij": []}}"#).unwrap();
        assert!(bad.m_matrix().is_err());
    }

    #[test]
    fn ds_pt_spectrum_of_example() {
        let ds = DsState::from_m_matrix(&bound_entangled_example_6(), tol()).unwrap();
        let eig = hermitian_eigenvalues(&ds.partial_transpose().matrix);
        assert!(eig[0] > -1e-14);
    }
}
