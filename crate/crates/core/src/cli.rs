//! `mcfq` command-line front end.
//!
//! Exit codes: 0 success, 1 validation or usage error, 2 I/O error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::cones::{
    classify_ds, cp_sufficient, is_dnn, CpCondition, DnnCheck, DsClass, DsClassification,
    SearchBudget,
};
use crate::entstates::{bound_entangled_example_6, channel_from_ds, DsInput};
use crate::error::{Error, Result};
use crate::matcore::{ComplexMatrix, RealMatrix, Tolerance};
use crate::mcfchannel::{
    example_crosstalk_5, ApplyOptions, ChannelConfig, ChannelWarning, CptpReport, McfChannel,
};
use crate::pipeline::{
    abs_csv, run_experiment, run_protocol, sweep_alpha, CertificationReport, ExperimentConfig,
    ExperimentOutput, ProtocolOptions, SweepConfig,
};
use crate::qstate::{DensityLiteral, VerdictFlag};

pub const FIG1_ALPHAS: [f64; 4] = [0.0, -0.8, -1.0, -1.2];

#[derive(Debug, Parser)]
#[command(
    name = "mcfq",
    version,
    about = "Entanglement certification for multicore-fibre channels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check trace preservation and complete positivity of a channel
    ChannelCheck(InputArgs),
    /// Propagate a state through a channel
    Apply(ApplyArgs),
    /// Choi operator of a channel
    Choi(InputArgs),
    /// Run the certification protocol on an experiment config
    Certify(CertifyArgs),
    /// Design the channel realizing a DS matrix and certify it
    Design(CertifyArgs),
    /// Test DNN/CP membership of a symmetric matrix
    CpTest(SearchArgs),
    /// Sweep a uniform dephasing coefficient
    Sweep(InputArgs),
    /// Reproduce the five-core crosstalk heatmaps
    DemoFig1(DemoArgs),
    /// Certify the 6x6 bound-entangled DS design
    DemoBound6(DemoSearchArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory; results go to stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sets both psd_floor and eq_tol
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub psd_floor: Option<f64>,
    #[arg(long)]
    pub eq_tol: Option<f64>,
}

impl Common {
    pub fn tolerance(&self) -> Result<Tolerance> {
        let base = Tolerance::default();
        let psd = self.psd_floor.or(self.tol).unwrap_or(base.psd_floor);
        let eq = self.eq_tol.or(self.tol).unwrap_or(base.eq_tol);
        Tolerance::new(psd, eq)
    }
}

#[derive(Debug, Args)]
pub struct Budget {
    #[arg(long, default_value_t = SearchBudget::default().restarts)]
    pub restarts: usize,
    #[arg(long, default_value_t = SearchBudget::default().max_iters)]
    pub max_iters: usize,
    #[arg(long, default_value_t = SearchBudget::default().residual_target)]
    pub residual_target: f64,
    #[arg(long, default_value_t = SearchBudget::default().seed)]
    pub seed: u64,
}

impl Budget {
    pub fn budget(&self) -> Result<SearchBudget> {
        let b = SearchBudget {
            restarts: self.restarts,
            max_iters: self.max_iters,
            residual_target: self.residual_target,
            seed: self.seed,
        };
        b.validate()?;
        Ok(b)
    }
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Density matrix JSON
    #[arg(long)]
    pub state: PathBuf,
    /// Evaluate channels that are not trace-preserving
    #[arg(long)]
    pub force: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Evaluate non-CP parameter sets, marking the report unphysical
    #[arg(long)]
    pub force: bool,
    /// Record the wall-clock time in the provenance block
    #[arg(long)]
    pub timestamp: bool,
    #[command(flatten)]
    pub budget: Budget,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub budget: Budget,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DemoSearchArgs {
    #[arg(long)]
    pub timestamp: bool,
    #[command(flatten)]
    pub budget: Budget,
    #[command(flatten)]
    pub common: Common,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    1
                }
            };
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 2,
        _ => 1,
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes `files` into `out`, or prints them to `stdout` when `out` is absent.
fn emit(out: Option<&Path>, files: &[(String, String)], stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            for (name, body) in files {
                fs::write(dir.join(name), body)?;
            }
        }
        None => {
            for (_, body) in files {
                stdout.write_all(body.as_bytes())?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct CheckOutput {
    cptp: CptpReport,
    tolerance: Tolerance,
}

#[derive(Serialize)]
struct ApplyOutput {
    state: ComplexMatrix,
    warnings: Vec<ChannelWarning>,
    tolerance: Tolerance,
}

#[derive(Serialize)]
struct ChoiOutput {
    d: usize,
    choi: ComplexMatrix,
    hat_block: ComplexMatrix,
    tolerance: Tolerance,
}

#[derive(Serialize)]
struct DesignOutput {
    channel: ChannelConfig,
    report: CertificationReport,
}

#[derive(Serialize)]
struct CpTestOutput {
    #[serde(rename = "M")]
    m: RealMatrix,
    dnn: DnnCheck,
    cp_sufficient: Option<CpCondition>,
    classification: DsClassification,
    budget: SearchBudget,
    tolerance: Tolerance,
}

/// `cp-test` input: a bare matrix or an object with an `M` field.
#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixInput {
    Bare(RealMatrix),
    Wrapped {
        #[serde(rename = "M")]
        m: RealMatrix,
    },
}

#[derive(Serialize)]
struct Fig1Entry {
    alpha: f64,
    file: String,
    cp_ok: bool,
    diagonal: Vec<f64>,
    off_diagonal_min: f64,
    off_diagonal_max: f64,
}

#[derive(Serialize)]
struct Fig1Summary {
    #[serde(rename = "P")]
    p: RealMatrix,
    input: &'static str,
    entries: Vec<Fig1Entry>,
    tolerance: Tolerance,
}

fn timestamp_now() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("{secs}")
}

fn dispatch(cmd: Command, stdout: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::ChannelCheck(a) => {
            let tol = a.common.tolerance()?;
            let ch = McfChannel::from_config(&read_json(&a.input)?, tol)?;
            let out = CheckOutput {
                cptp: ch.verify_cptp(tol),
                tolerance: tol,
            };
            emit(
                a.common.out.as_deref(),
                &[("cptp.json".into(), to_json(&out)?)],
                stdout,
            )
        }
        Command::Apply(a) => {
            let tol = a.common.tolerance()?;
            let ch = McfChannel::from_config(&read_json(&a.input)?, tol)?;
            let rho = read_json::<DensityLiteral>(&a.state)?.into_density(tol)?;
            let prop = ch.apply(
                &rho,
                ApplyOptions {
                    force: a.force,
                    tol,
                },
            )?;
            let out = ApplyOutput {
                state: prop.state,
                warnings: prop.warnings,
                tolerance: tol,
            };
            emit(
                a.common.out.as_deref(),
                &[("state.json".into(), to_json(&out)?)],
                stdout,
            )
        }
        Command::Choi(a) => {
            let tol = a.common.tolerance()?;
            let ch = McfChannel::from_config(&read_json(&a.input)?, tol)?;
            let choi = ch.choi();
            let out = ChoiOutput {
                d: ch.d(),
                choi: choi.mat().clone(),
                hat_block: choi.hat_block().clone(),
                tolerance: tol,
            };
            emit(
                a.common.out.as_deref(),
                &[("choi.json".into(), to_json(&out)?)],
                stdout,
            )
        }
        Command::Certify(a) => {
            let opts = protocol_options(&a)?;
            let cfg: ExperimentConfig = read_json(&a.input)?;
            let mut output = run_experiment(&cfg, &opts)?;
            if a.timestamp {
                match &mut output {
                    ExperimentOutput::Report(r) => r.provenance.timestamp = Some(timestamp_now()),
                    ExperimentOutput::Sweep { provenance, .. } => {
                        provenance.timestamp = Some(timestamp_now())
                    }
                }
            }
            emit(
                a.common.out.as_deref(),
                &[("report.json".into(), to_json(&output)?)],
                stdout,
            )
        }
        Command::Design(a) => {
            let opts = protocol_options(&a)?;
            let input: DsInput = read_json(&a.input)?;
            let ch = channel_from_ds(&input.m_matrix()?, opts.tol)?;
            let mut report = run_protocol(&ch, &opts)?;
            if a.timestamp {
                report.provenance.timestamp = Some(timestamp_now());
            }
            let out = DesignOutput {
                channel: ch.to_config(),
                report,
            };
            emit(
                a.common.out.as_deref(),
                &[("design.json".into(), to_json(&out)?)],
                stdout,
            )
        }
        Command::CpTest(a) => {
            let tol = a.common.tolerance()?;
            let budget = a.budget.budget()?;
            let m = match read_json::<MatrixInput>(&a.input)? {
                MatrixInput::Bare(m) | MatrixInput::Wrapped { m } => m,
            };
            let out = CpTestOutput {
                dnn: is_dnn(&m, tol)?,
                cp_sufficient: cp_sufficient(&m, tol),
                classification: classify_ds(&m, &budget, tol)?,
                m,
                budget,
                tolerance: tol,
            };
            emit(
                a.common.out.as_deref(),
                &[("cp_test.json".into(), to_json(&out)?)],
                stdout,
            )
        }
        Command::Sweep(a) => {
            let tol = a.common.tolerance()?;
            let cfg: SweepConfig = read_json(&a.input)?;
            let state = cfg.state.clone().map(|l| l.into_density(tol)).transpose()?;
            let rows = sweep_alpha(&cfg.p, &cfg.grid, state.as_ref(), tol)?;
            let mut files = vec![(
                "sweep.json".to_string(),
                to_json(&serde_json::json!({ "rows": rows, "tolerance": tol }))?,
            )];
            if a.common.out.is_some() {
                for (k, row) in rows.iter().enumerate() {
                    if let Some(out) = &row.output {
                        files.push((format!("sweep_{k}.csv"), abs_csv(out)));
                    }
                }
            }
            emit(a.common.out.as_deref(), &files, stdout)
        }
        Command::DemoFig1(a) => {
            let tol = a.common.tolerance()?;
            let out = a.common.out.unwrap_or_else(|| PathBuf::from("mcfq-demo"));
            emit(Some(&out), &demo_fig1_files(tol)?, stdout)?;
            writeln!(stdout, "wrote fig1 outputs to {}", out.display())?;
            Ok(())
        }
        Command::DemoBound6(a) => {
            let tol = a.common.tolerance()?;
            let opts = ProtocolOptions {
                force: false,
                tol,
                budget: a.budget.budget()?,
            };
            let mut report = demo_bound6_report(&opts)?;
            if a.timestamp {
                report.provenance.timestamp = Some(timestamp_now());
            }
            let out = a.common.out.unwrap_or_else(|| PathBuf::from("mcfq-demo"));
            emit(
                Some(&out),
                &[("bound6_report.json".into(), to_json(&report)?)],
                stdout,
            )?;
            check_bound6(&report)?;
            writeln!(
                stdout,
                "bound6: PPT-entangled candidate confirmed; report in {}",
                out.display()
            )?;
            Ok(())
        }
    }
}

fn protocol_options(a: &CertifyArgs) -> Result<ProtocolOptions> {
    Ok(ProtocolOptions {
        force: a.force,
        tol: a.common.tolerance()?,
        budget: a.budget.budget()?,
    })
}

/// Heatmap CSVs of `|E(ρ)|` for the maximally coherent five-core input and
/// a summary JSON, as `(file name, contents)` pairs.
pub fn demo_fig1_files(tol: Tolerance) -> Result<Vec<(String, String)>> {
    let p = example_crosstalk_5();
    let rows = sweep_alpha(&p, &FIG1_ALPHAS, None, tol)?;
    let mut files = Vec::new();
    let mut entries = Vec::new();
    for (k, row) in rows.iter().enumerate() {
        if let Some(e) = &row.error {
            return Err(Error::InvalidChannel(e.clone()));
        }
        let out = row.output.as_ref().expect("valid row has output");
        let name = format!("fig1_{}.csv", ["a", "b", "c", "d"][k]);
        let mut off: Vec<f64> = Vec::new();
        for i in 0..out.rows() {
            for j in 0..out.cols() {
                if i != j {
                    off.push(out[(i, j)].norm());
                }
            }
        }
        entries.push(Fig1Entry {
            alpha: row.alpha,
            file: name.clone(),
            cp_ok: row.cp_ok().unwrap_or(false),
            diagonal: out.diagonal().iter().map(|z| z.re).collect(),
            off_diagonal_min: off.iter().copied().fold(f64::INFINITY, f64::min),
            off_diagonal_max: off.iter().copied().fold(0.0, f64::max),
        });
        files.push((name, abs_csv(out)));
    }
    let summary = Fig1Summary {
        p,
        input: "max_coherent(5)",
        entries,
        tolerance: tol,
    };
    files.push(("fig1_summary.json".into(), to_json(&summary)?));
    Ok(files)
}

/// Designs and certifies the 6x6 DS example.
pub fn demo_bound6_report(opts: &ProtocolOptions) -> Result<CertificationReport> {
    let ch = channel_from_ds(&bound_entangled_example_6(), opts.tol)?;
    run_protocol(&ch, opts)
}

/// Checks the pinned outcome of the 6x6 demo.
pub fn check_bound6(r: &CertificationReport) -> Result<()> {
    let fail = |what: &str| {
        Err(Error::Inconsistent(format!(
            "bound6 expectation failed: {what}"
        )))
    };
    if !r.channel.cptp.tp_ok {
        return fail("tp_ok");
    }
    if !r.channel.cptp.cp_ok {
        return fail("cp_ok");
    }
    if r.verdict("ppt").map(|v| v.flag) != Some(VerdictFlag::Inconclusive) {
        return fail("PPT inconclusive");
    }
    let Some(ds) = &r.ds_section else {
        return fail("DS section present");
    };
    if !ds.dnn.dnn {
        return fail("DNN");
    }
    if ds.cp_sufficient.is_some() {
        return fail("no sufficient CP condition");
    }
    if ds.classification.class != DsClass::PptEntangledCandidate {
        return fail("PPT-entangled candidate");
    }
    Ok(())
}
