//! End-to-end protocol: send one half of `|Ψ+⟩` through a fibre, certify the
//! output with every criterion, and assemble a reproducible report.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cones::{
    classify_ds, cp_sufficient, is_dnn, CpCondition, DnnCheck, DsClassification, SearchBudget,
};
use crate::entstates::{channel_from_ds, ds_matrix_of_channel, ClduiState, DsInput};
use crate::error::{Error, Result};
use crate::matcore::{ComplexMatrix, RealMatrix, Tolerance};
use crate::mcfchannel::{ApplyOptions, ChannelConfig, ChannelWarning, CptpReport, McfChannel};
use crate::qstate::{
    ppt_verdict, realignment_verdict, CriterionVerdict, DensityLiteral, DensityMatrix,
};

#[derive(Debug, Clone, Copy, Default)]
pub struct ProtocolOptions {
    /// Evaluate non-CP parameter sets instead of refusing them.
    pub force: bool,
    pub tol: Tolerance,
    pub budget: SearchBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportStatus {
    #[serde(rename = "ok")]
    Ok,
    #[serde(rename = "unphysical parameters")]
    UnphysicalParameters,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelSummary {
    pub d: usize,
    #[serde(rename = "P")]
    pub p: RealMatrix,
    pub alpha: ComplexMatrix,
    pub cptp: CptpReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSummary {
    pub choi: ComplexMatrix,
    pub cldui_a: RealMatrix,
    pub cldui_b: ComplexMatrix,
    pub a_gap: f64,
    pub b_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DsSection {
    #[serde(rename = "M")]
    pub m: RealMatrix,
    pub dnn: DnnCheck,
    pub cp_sufficient: Option<CpCondition>,
    pub classification: DsClassification,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    /// Only set on request so that reports stay byte-stable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationReport {
    pub status: ReportStatus,
    pub channel: ChannelSummary,
    pub output: OutputSummary,
    /// Generic PPT, CLDUI PPT, generic realignment, CLDUI realignment.
    pub verdicts: Vec<CriterionVerdict>,
    pub ds_section: Option<DsSection>,
    pub warnings: Vec<ChannelWarning>,
    pub tolerance: Tolerance,
    pub provenance: Provenance,
}

impl CertificationReport {
    pub fn verdict(&self, name: &str) -> Option<&CriterionVerdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Hex SHA-256 of the compact JSON form of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

/// Runs the four criteria on the protocol output and cross-checks the generic
/// and CLDUI-specialized paths. Flags are replaced by `not_applicable` when
/// the channel is not CP.
fn certify_output(
    ch: &McfChannel,
    physical: bool,
    tol: Tolerance,
) -> Result<(OutputSummary, Vec<CriterionVerdict>)> {
    let d = ch.d();
    let choi = ch.choi();
    // second route to the output state: block-wise application to |Ψ+⟩⟨Ψ+|
    let psi = DensityMatrix::max_entangled(d)?;
    let output = ch.extend_one_side_matrix(psi.mat())?;
    let gap = output.max_abs_diff(choi.mat());
    if gap > tol.eq_tol {
        return Err(Error::Inconsistent(format!(
            "closed-form Choi operator and propagated state differ by {gap:.3e}"
        )));
    }

    let cldui = ClduiState::from_choi_unchecked(&choi, tol)?;
    let ppt = ppt_verdict(&output, (d, d), tol)?;
    let cldui_ppt = cldui.is_ppt(tol);
    let realign = realignment_verdict(&output, (d, d), tol)?;
    let cldui_realign = cldui.realignment(tol);

    let diff = (realign.value - cldui_realign.verdict.value).abs();
    if diff > tol.eq_tol {
        return Err(Error::Inconsistent(format!(
            "realignment values disagree by {diff:.3e} between generic and CLDUI paths"
        )));
    }
    let mut verdicts = vec![ppt, cldui_ppt, realign, cldui_realign.verdict];
    if physical {
        for (x, y) in [(0, 1), (2, 3)] {
            if verdicts[x].is_entangled() != verdicts[y].is_entangled() {
                return Err(Error::Inconsistent(format!(
                    "{} and {} disagree on entanglement",
                    verdicts[x].name, verdicts[y].name
                )));
            }
        }
    } else {
        for v in &mut verdicts {
            *v = CriterionVerdict::not_applicable(&v.name, v.value);
        }
    }
    let summary = OutputSummary {
        choi: choi.mat().clone(),
        cldui_a: cldui.a().clone(),
        cldui_b: cldui.b().clone(),
        a_gap: cldui_realign.a_gap,
        b_gap: cldui_realign.b_gap,
    };
    Ok((summary, verdicts))
}

/// Full certification of `ch` applied to one half of `|Ψ+⟩`.
///
/// Refuses channels that are not trace-preserving. Non-CP channels are
/// refused unless `opts.force` is set, in which case the report is marked
/// unphysical and every verdict is `not_applicable`. A DS section is added
/// when the output is the partial transpose of a DS state.
pub fn run_protocol(ch: &McfChannel, opts: &ProtocolOptions) -> Result<CertificationReport> {
    let tol = opts.tol;
    let cptp = ch.verify_cptp(tol);
    if !cptp.tp_ok {
        return Err(Error::NotTracePreserving(format!(
            "crosstalk row sums deviate from 1 by up to {:.3e}",
            cptp.max_row_residual()
        )));
    }
    let mut warnings = Vec::new();
    if !cptp.cp_ok {
        if !opts.force {
            return Err(Error::InvalidChannel(format!(
                "not completely positive (min eigenvalue of the Choi block {:.3e}); use force to evaluate anyway",
                cptp.choi_min_eig
            )));
        }
        warnings.push(ChannelWarning::NotCompletelyPositive {
            choi_min_eig: cptp.choi_min_eig,
        });
    }
    let physical = cptp.cp_ok;
    let (output, verdicts) = certify_output(ch, physical, tol)?;

    let ds_section = match (physical, ds_matrix_of_channel(ch, tol)) {
        (true, Some(m)) => Some(ds_section(m, opts)?),
        _ => None,
    };

    Ok(CertificationReport {
        status: if physical {
            ReportStatus::Ok
        } else {
            ReportStatus::UnphysicalParameters
        },
        channel: ChannelSummary {
            d: ch.d(),
            p: ch.crosstalk().clone(),
            alpha: ch.alpha().clone(),
            cptp,
        },
        output,
        verdicts,
        ds_section,
        warnings,
        tolerance: tol,
        provenance: Provenance {
            config_sha256: config_hash(&ch.to_config())?,
            seed: opts.budget.seed,
            timestamp: None,
        },
    })
}

fn ds_section(m: RealMatrix, opts: &ProtocolOptions) -> Result<DsSection> {
    let dnn = is_dnn(&m, opts.tol)?;
    let sufficient = cp_sufficient(&m, opts.tol);
    let classification = classify_ds(&m, &opts.budget, opts.tol)?;
    Ok(DsSection {
        m,
        dnn,
        cp_sufficient: sufficient,
        classification,
    })
}

/// Designs the fibre realizing the DS matrix `m` and certifies it.
pub fn design_and_certify(m: &RealMatrix, opts: &ProtocolOptions) -> Result<CertificationReport> {
    let ch = channel_from_ds(m, opts.tol)?;
    run_protocol(&ch, opts)
}

/// One row of an α sweep. Invalid parameter sets carry `error` instead of
/// results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub cptp: Option<CptpReport>,
    pub verdicts: Vec<CriterionVerdict>,
    /// `E(ρ_in)`.
    pub output: Option<ComplexMatrix>,
}

impl SweepRow {
    pub fn cp_ok(&self) -> Option<bool> {
        self.cptp.as_ref().map(|c| c.cp_ok)
    }
}

/// Evaluates the uniform-α fibre with crosstalk `p` at every grid point.
///
/// Each row records physicality, the protocol verdicts (forced, so non-CP
/// rows are `not_applicable`) and the image of `input`, which defaults to the
/// maximally coherent state. Rows keep grid order.
pub fn sweep_alpha(
    p: &RealMatrix,
    grid: &[f64],
    input: Option<&DensityMatrix>,
    tol: Tolerance,
) -> Result<Vec<SweepRow>> {
    let d = p.ensure_square()?;
    let default_input;
    let input = match input {
        Some(rho) => {
            if rho.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: rho.dim(),
                });
            }
            rho
        }
        None => {
            default_input = DensityMatrix::max_coherent(d)?;
            &default_input
        }
    };
    Ok(grid
        .par_iter()
        .map(|&alpha| sweep_row(p, alpha, input, tol))
        .collect())
}

fn sweep_row(p: &RealMatrix, alpha: f64, input: &DensityMatrix, tol: Tolerance) -> SweepRow {
    let attempt = || -> Result<SweepRow> {
        let ch = McfChannel::uniform(p.clone(), alpha, tol)?;
        let cptp = ch.verify_cptp(tol);
        let output = ch.apply(input, ApplyOptions { force: true, tol })?.state;
        let verdicts = if cptp.tp_ok {
            certify_output(&ch, cptp.cp_ok, tol)?.1
        } else {
            Vec::new()
        };
        Ok(SweepRow {
            alpha,
            error: None,
            cptp: Some(cptp),
            verdicts,
            output: Some(output),
        })
    };
    attempt().unwrap_or_else(|e| SweepRow {
        alpha,
        error: Some(e.to_string()),
        cptp: None,
        verdicts: Vec::new(),
        output: None,
    })
}

/// Interval of uniform α on which the fibre with crosstalk `p` is CP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CpWindow {
    pub lower: f64,
    pub upper: f64,
}

/// Locates the CP window of the uniform-α fibre inside the admissible range
/// `[−2, 0]` by bisection.
///
/// The CP set is an interval (the Choi block is affine in α) that always
/// contains α = −1, where the block is diagonal.
pub fn cp_window_uniform(p: &RealMatrix, tol: Tolerance) -> Result<CpWindow> {
    let cp_ok = |alpha: f64| -> Result<bool> {
        Ok(McfChannel::uniform(p.clone(), alpha, tol)?
            .verify_cptp(tol)
            .cp_ok)
    };
    if !cp_ok(-1.0)? {
        return Err(Error::InvalidChannel(
            "diagonal Choi block is not PSD".into(),
        ));
    }
    let edge = |outer: f64| -> Result<f64> {
        if cp_ok(outer)? {
            return Ok(outer);
        }
        let (mut inside, mut outside) = (-1.0, outer);
        while (outside - inside).abs() > 1e-14 {
            let mid = 0.5 * (inside + outside);
            if cp_ok(mid)? {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Ok(inside)
    };
    Ok(CpWindow {
        lower: edge(-2.0)?,
        upper: edge(0.0)?,
    })
}

/// Sweep definition: crosstalk, α grid and optional input state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(rename = "P")]
    pub p: RealMatrix,
    pub grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<DensityLiteral>,
}

/// Any experiment the pipeline can run from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExperimentConfig {
    Sweep(SweepConfig),
    Channel(ChannelConfig),
    Ds(DsInput),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ExperimentOutput {
    Report(Box<CertificationReport>),
    Sweep {
        rows: Vec<SweepRow>,
        tolerance: Tolerance,
        provenance: Provenance,
    },
}

pub fn run_experiment(cfg: &ExperimentConfig, opts: &ProtocolOptions) -> Result<ExperimentOutput> {
    let hash = config_hash(cfg)?;
    match cfg {
        ExperimentConfig::Channel(c) => {
            let ch = McfChannel::from_config(c, opts.tol)?;
            let mut report = run_protocol(&ch, opts)?;
            report.provenance.config_sha256 = hash;
            Ok(ExperimentOutput::Report(Box::new(report)))
        }
        ExperimentConfig::Ds(input) => {
            let m = input.m_matrix()?;
            let mut report = design_and_certify(&m, opts)?;
            report.provenance.config_sha256 = hash;
            Ok(ExperimentOutput::Report(Box::new(report)))
        }
        ExperimentConfig::Sweep(s) => {
            let state = s
                .state
                .clone()
                .map(|l| l.into_density(opts.tol))
                .transpose()?;
            Ok(ExperimentOutput::Sweep {
                rows: sweep_alpha(&s.p, &s.grid, state.as_ref(), opts.tol)?,
                tolerance: opts.tol,
                provenance: Provenance {
                    config_sha256: hash,
                    seed: opts.budget.seed,
                    timestamp: None,
                },
            })
        }
    }
}

/// Formats a float with 17 significant digits.
pub fn format_full(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV of entrywise magnitudes: one line per row, comma-separated, no header.
pub fn abs_csv(m: &ComplexMatrix) -> String {
    let mut out = String::new();
    for r in 0..m.rows() {
        let line: Vec<String> = (0..m.cols())
            .map(|c| format_full(m[(r, c)].norm()))
            .collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::DsClass;
    use crate::entstates::bound_entangled_example_6;
    use crate::matcore::C64;
    use crate::mcfchannel::example_crosstalk_5;
    use crate::qstate::VerdictFlag;

    fn opts() -> ProtocolOptions {
        ProtocolOptions::default()
    }

    #[test]
    fn identity_channel_gives_bell_state() {
        for d in 2..=4 {
            let r = run_protocol(&McfChannel::identity(d), &opts()).unwrap();
            let bell = DensityMatrix::max_entangled(d).unwrap();
            assert!(r.output.choi.max_abs_diff(bell.mat()) < 1e-15);
            assert!(r.verdict("ppt").unwrap().is_entangled());
            assert!(r.verdict("cldui_ppt").unwrap().is_entangled());
            let v = r.verdict("realignment").unwrap();
            assert!((v.value - d as f64).abs() < 1e-10);
            assert_eq!(r.status, ReportStatus::Ok);
        }
    }

    #[test]
    fn full_dephasing_is_inconclusive() {
        let d = 4;
        let ch = McfChannel::uniform(RealMatrix::identity(d), -1.0, Tolerance::default()).unwrap();
        let r = run_protocol(&ch, &opts()).unwrap();
        let expected = ComplexMatrix::from_fn(d * d, d * d, |a, b| {
            if a == b && a % (d + 1) == 0 {
                C64::new(0.25, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        assert!(r.output.choi.max_abs_diff(&expected) < 1e-15);
        assert!(r
            .verdicts
            .iter()
            .all(|v| v.flag == VerdictFlag::Inconclusive));
        // M = I/d is diagonally dominant
        let ds = r.ds_section.unwrap();
        assert_eq!(ds.classification.class, DsClass::Separable);
    }

    #[test]
    fn refusals_and_force() {
        let mut p = RealMatrix::identity(3);
        p[(0, 0)] = 0.5;
        let ch = McfChannel::uniform(p, 0.0, Tolerance::default()).unwrap();
        assert!(matches!(
            run_protocol(&ch, &opts()),
            Err(Error::NotTracePreserving(_))
        ));

        let ch = McfChannel::uniform(RealMatrix::identity(3), -1.8, Tolerance::default()).unwrap();
        assert!(matches!(
            run_protocol(&ch, &opts()),
            Err(Error::InvalidChannel(_))
        ));
        let forced = ProtocolOptions {
            force: true,
            ..opts()
        };
        let r = run_protocol(&ch, &forced).unwrap();
        assert_eq!(r.status, ReportStatus::UnphysicalParameters);
        assert!(r
            .verdicts
            .iter()
            .all(|v| v.flag == VerdictFlag::NotApplicable));
        assert!(r.ds_section.is_none());
        let json = r.to_json().unwrap();
        assert!(json.contains("\"unphysical parameters\""));
    }

    #[test]
    fn bound_entangled_design_is_ppt() {
        let budget = SearchBudget {
            restarts: 8,
            max_iters: 5000,
            ..Default::default()
        };
        let r = design_and_certify(
            &bound_entangled_example_6(),
            &ProtocolOptions { budget, ..opts() },
        )
        .unwrap();
        assert!(r.channel.cptp.tp_ok && r.channel.cptp.cp_ok);
        assert_eq!(r.verdict("ppt").unwrap().flag, VerdictFlag::Inconclusive);
        let ds = r.ds_section.unwrap();
        assert!(ds.dnn.dnn);
        assert_eq!(ds.cp_sufficient, None);
        assert_eq!(ds.classification.class, DsClass::PptEntangledCandidate);
    }

    #[test]
    fn sweep_matches_window() {
        let rows = sweep_alpha(
            &RealMatrix::identity(5),
            &[0.0, -0.5, -1.25, -2.0],
            None,
            Tolerance::default(),
        )
        .unwrap();
        let cp: Vec<_> = rows.iter().map(|r| r.cp_ok().unwrap()).collect();
        assert_eq!(cp, [true, true, true, false]);
        assert!(
            sweep_alpha(&RealMatrix::identity(5), &[], None, Tolerance::default())
                .unwrap()
                .is_empty()
        );
        let bad =
            sweep_alpha(&RealMatrix::identity(2), &[0.5], None, Tolerance::default()).unwrap();
        assert!(bad[0].error.is_some());
    }

    #[test]
    fn fig1_sweep_values() {
        let rows = sweep_alpha(
            &example_crosstalk_5(),
            &[0.0, -0.8, -1.0, -1.2],
            None,
            Tolerance::default(),
        )
        .unwrap();
        let diag = [0.22, 0.24, 0.12, 0.24, 0.18];
        for (row, off) in rows.iter().zip([0.2, 0.04, 0.0, 0.04]) {
            let out = row.output.as_ref().unwrap();
            for i in 0..5 {
                assert!((out[(i, i)].re - diag[i]).abs() < 1e-12);
                for j in 0..5 {
                    if i != j {
                        assert!((out[(i, j)].norm() - off).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn window_for_identity_crosstalk() {
        for d in 2..=7 {
            let w = cp_window_uniform(&RealMatrix::identity(d), Tolerance::default()).unwrap();
            let expected = -(d as f64) / (d as f64 - 1.0);
            assert!((w.lower - expected).abs() < 1e-9, "d={d}: {}", w.lower);
            assert_eq!(w.upper, 0.0);
        }
    }

    #[test]
    fn experiment_config_variants() {
        let c: ExperimentConfig =
            serde_json::from_str(r#"{"P": [[1,0],[0,1]], "grid": [0, -1]}"#).unwrap();
        assert!(matches!(c, ExperimentConfig::Sweep(_)));
        let c: ExperimentConfig =
            serde_json::from_str(r#"{"d": 2, "P": [[1,0],[0,1]], "alpha": {"uniform": -0.5}}"#)
                .unwrap();
        assert!(matches!(c, ExperimentConfig::Channel(_)));
        let c: ExperimentConfig =
            serde_json::from_str(r#"{"d": 2, "M": [[0.25,0.25],[0.25,0.25]]}"#).unwrap();
        assert!(matches!(c, ExperimentConfig::Ds(_)));
        let a = run_experiment(&c, &opts()).unwrap();
        let b = run_experiment(&c, &opts()).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn csv_format() {
        let m = ComplexMatrix::from_fn(2, 2, |r, c| C64::new(0.0, -((r + c) as f64) * 0.1));
        let csv = abs_csv(&m);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].split(',').count(), 2);
        let v: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(v, 0.2);
    }
}
