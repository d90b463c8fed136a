//! `ep-moments`: moment matrices, spectra, EP orders, lattices and oracle
//! checks for quadratic bosonic models.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ep_moments::format::sci12;
use ep_moments::linalg::C64;
use ep_moments::model::{is_u1_symmetric, parse_complex, parse_model, validate, QuadraticSystem};
use ep_moments::moments::{
    annihilation_moment_matrix, first_moment_matrix_with, moment_matrix, BasisKind, EvolutionMatrix, MomentBasis,
};
use ep_moments::nhh::{build_m_n, synthesize_lattice};
use ep_moments::oracle::{build_space, coherent_state, verify_moments, SimConfig};
use ep_moments::spectral::{self, ep_report, linear_grid, EPReport};
use ep_moments::{model, Error};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "ep-moments", version, about = "Exceptional points of higher-order field moments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model file and print its validation report.
    Validate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Evolution matrix of a moment vector.
    MomentsMatrix {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        select: Select,
        /// Merge moments that differ only by the order of distinct-mode factors.
        #[arg(long)]
        reduce: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Eigenvalues and EP report of a moment evolution matrix.
    Spectrum {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        select: Select,
        /// Keep the unreduced Kronecker-power basis.
        #[arg(long)]
        full: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// EP report only; exits 0 iff an EP of order ≥ 2 is present.
    EpOrder {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        select: Select,
        #[arg(long)]
        full: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Eigenvalues over a grid of one model parameter.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        select: Select,
        #[arg(long)]
        full: bool,
        /// Parameter key, e.g. gamma12, delta, gamma, g12, delta1.
        #[arg(long)]
        param: String,
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        /// Number of intervals; the grid has steps + 1 points.
        #[arg(long)]
        steps: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Lattice of modes realizing a moment evolution matrix.
    DesignLattice {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        select: Select,
        #[arg(long)]
        full: bool,
        /// Uniform damping added to every lattice mode.
        #[arg(long, default_value_t = 0.0)]
        extra_damping: f64,
        /// Also write the lattice graph as GraphML.
        #[arg(long)]
        graphml: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Compare exp(M t) with a brute-force master-equation integration.
    Verify {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        select: Select,
        #[arg(long)]
        full: bool,
        /// Coherent amplitudes, one per mode: `0.6,0.3i`.
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long)]
        cutoff: usize,
        #[arg(long)]
        tmax: f64,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        tol: f64,
        /// Compare every this many integration steps.
        #[arg(long, default_value_t = 10)]
        sample_every: usize,
        /// Largest population tolerated on the cutoff level.
        #[arg(long, default_value_t = 1e-8)]
        leakage_tol: f64,
        /// Also write the oracle trajectory as CSV.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Reduced N-th order matrix of the incoherently coupled pair.
    Mn {
        #[arg(long = "N", value_name = "N")]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        gamma: f64,
        #[arg(long, allow_hyphen_values = true)]
        gamma12: f64,
        #[arg(long, allow_hyphen_values = true)]
        delta: f64,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Model file.
    model: PathBuf,
    /// Parameter override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct Select {
    /// Number of annihilation operators in each moment (U(1) models).
    #[arg(long)]
    order: Option<usize>,
    /// Explicit basis, comma separated: `a1 a1,a1† a2,a2† a2`.
    #[arg(long)]
    basis: Option<String>,
    /// Accept a decoherence matrix that is not positive semidefinite.
    #[arg(long)]
    allow_gain: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutArgs {
    /// Write the artifact here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

enum Failure {
    Usage(String),
    Core(Error),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Core(e) => match e {
                Error::Numerical(_) | Error::RankBreakdown { .. } | Error::Leakage { .. } | Error::Drift { .. } => 3,
                _ => 2,
            },
            Failure::Check(_) => 4,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) | Failure::Check(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

/// Spectrum artifact.
#[derive(Debug, Serialize, Deserialize)]
pub struct SpectrumDoc {
    pub basis: Vec<String>,
    pub eigenvalues: Vec<[f64; 2]>,
    pub ep_report: EPReport,
}

/// `mn` artifact.
#[derive(Debug, Serialize, Deserialize)]
pub struct MnDoc {
    pub evolution_matrix: serde_json::Value,
    pub eigenvalues: Vec<[f64; 2]>,
    pub closed_form: Vec<[f64; 2]>,
    pub ep_report: EPReport,
}

fn load_model(args: &ModelArgs) -> Result<QuadraticSystem, Failure> {
    let text = fs::read_to_string(&args.model)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", args.model.display())))?;
    let mut sys = parse_model(&text)?;
    for ov in &args.overrides {
        let (key, value) = ov
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("override `{ov}` is not KEY=VALUE")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("override `{ov}`: `{value}` is not a number")))?;
        sys = sys
            .set_parameter(key.trim(), value)
            .map_err(|e| Failure::Usage(format!("override `{ov}`: {e}")))?;
    }
    Ok(sys)
}

fn check_system(sys: &QuadraticSystem, allow_gain: bool) -> Result<(), Failure> {
    if allow_gain {
        model::ensure_well_formed(sys)?;
    } else {
        model::ensure_valid(sys)?;
    }
    Ok(())
}

fn select_matrix(sys: &QuadraticSystem, select: &Select, reduced: bool) -> Result<EvolutionMatrix, Failure> {
    match (&select.basis, select.order) {
        (Some(_), Some(_)) => Err(Failure::Usage("give either --order or --basis, not both".into())),
        (None, None) => Err(Failure::Usage("one of --order or --basis is required".into())),
        (Some(labels), None) => {
            check_system(sys, select.allow_gain)?;
            let labels: Vec<&str> = labels.split(',').map(str::trim).collect();
            let basis = MomentBasis::parse_labels(&labels, BasisKind::Full)?;
            Ok(moment_matrix(sys, &basis)?)
        }
        (None, Some(0)) => Err(Failure::Usage("--order must be at least 1".into())),
        (None, Some(order)) => {
            if is_u1_symmetric(sys) {
                Ok(annihilation_moment_matrix(sys, order, reduced, select.allow_gain)?)
            } else if order == 1 {
                Ok(first_moment_matrix_with(sys, true, select.allow_gain)?)
            } else {
                Err(Failure::Usage(
                    "the model has squeezing terms; higher orders need an explicit --basis".into(),
                ))
            }
        }
    }
}

fn format_or(out: &OutArgs, default: Format, allowed: &[Format], command: &str) -> Result<Format, Failure> {
    let f = out.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(Failure::Usage(format!(
            "{command} does not write {}",
            if f == Format::Csv { "CSV" } else { "JSON" }
        )))
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

/// Artifact to `--out` (with a one-line summary on stdout) or to stdout.
fn emit(out: &OutArgs, artifact: &str, summary: impl FnOnce() -> String) -> Result<(), Failure> {
    match &out.out {
        Some(path) => {
            write_file(path, artifact)?;
            println!("{} (written to {})", summary(), path.display());
        }
        None => print!("{artifact}"),
    }
    Ok(())
}

fn pairs(values: &[C64]) -> Vec<[f64; 2]> {
    values.iter().map(|v| [v.re, v.im]).collect()
}

fn json<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(Error::from)?;
    s.push('\n');
    Ok(s)
}

fn eigen_csv(values: &[C64]) -> String {
    let mut s = String::from("k,re,im\n");
    for (k, v) in values.iter().enumerate() {
        s.push_str(&format!("{},{},{}\n", k + 1, sci12(v.re), sci12(v.im)));
    }
    s
}

fn parse_alphas(text: &str) -> Result<Vec<C64>, Failure> {
    text.split(',')
        .map(|t| parse_complex(t.trim()).ok_or_else(|| Failure::Usage(format!("bad amplitude `{t}`"))))
        .collect()
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Validate { model, out } => {
            format_or(&out, Format::Json, &[Format::Json], "validate")?;
            let sys = load_model(&model)?;
            let report = validate(&sys);
            emit(&out, &json(&report)?, || {
                format!(
                    "{}: {} finding(s)",
                    if report.ok { "valid" } else { "invalid" },
                    report.findings.len()
                )
            })?;
            if report.ok {
                Ok(())
            } else {
                let msg: Vec<String> = report.errors().map(|f| f.message.clone()).collect();
                Err(Failure::Core(Error::InvalidSystem(msg.join("; "))))
            }
        }
        Command::MomentsMatrix {
            model,
            select,
            reduce,
            out,
        } => {
            format_or(&out, Format::Json, &[Format::Json], "moments-matrix")?;
            let sys = load_model(&model)?;
            let m = select_matrix(&sys, &select, reduce)?;
            let mut doc = m.to_json()?;
            doc.push('\n');
            emit(&out, &doc, || format!("{}x{} evolution matrix", m.dim(), m.dim()))
        }
        Command::Spectrum {
            model,
            select,
            full,
            out,
        } => {
            let fmt = format_or(&out, Format::Json, &[Format::Json, Format::Csv], "spectrum")?;
            let sys = load_model(&model)?;
            let m = select_matrix(&sys, &select, !full)?;
            let values = spectral::sorted_eigenvalues(m.matrix())?;
            let artifact = match fmt {
                Format::Csv => eigen_csv(&values),
                Format::Json => json(&SpectrumDoc {
                    basis: m.basis().labels(),
                    eigenvalues: pairs(&values),
                    ep_report: ep_report(m.matrix())?,
                })?,
            };
            emit(&out, &artifact, || format!("{} eigenvalues", values.len()))
        }
        Command::EpOrder {
            model,
            select,
            full,
            out,
        } => {
            format_or(&out, Format::Json, &[Format::Json], "ep-order")?;
            let sys = load_model(&model)?;
            let m = select_matrix(&sys, &select, !full)?;
            let report = ep_report(m.matrix())?;
            let order = report.max_ep_order();
            emit(&out, &json(&report)?, || format!("largest EP order {order}"))?;
            if order >= 2 {
                Ok(())
            } else {
                Err(Failure::Check("no exceptional point at these parameters".into()))
            }
        }
        Command::Sweep {
            model,
            select,
            full,
            param,
            from,
            to,
            steps,
            out,
        } => {
            format_or(&out, Format::Csv, &[Format::Csv], "sweep")?;
            let sys = load_model(&model)?;
            let sel = Select {
                allow_gain: true,
                ..select
            };
            // Checks the key and the starting point before fanning out.
            let start = sys
                .clone()
                .set_parameter(&param, from)
                .map_err(|e| Failure::Usage(format!("--param: {e}")))?;
            select_matrix(&start, &sel, !full)?;
            let grid = linear_grid(from, to, steps)?;
            let table = spectral::sweep(
                &param,
                |v| {
                    let s = sys.clone().set_parameter(&param, v)?;
                    match select_matrix(&s, &sel, !full) {
                        Ok(m) => Ok(m.matrix().clone()),
                        Err(Failure::Core(e)) => Err(e),
                        Err(f) => Err(Error::InvalidArgument(f.message())),
                    }
                },
                &grid,
            )?;
            let failed = table.rows.iter().filter(|r| r.eigenvalues.is_err()).count();
            emit(&out, &table.to_csv(), || {
                format!("{} grid points over {param}, {failed} failed", table.rows.len())
            })?;
            if failed > 0 {
                for row in &table.rows {
                    if let Err(e) = &row.eigenvalues {
                        eprintln!("{param} = {}: {e}", sci12(row.param));
                    }
                }
                return Err(Failure::Core(Error::Numerical(format!("{failed} grid point(s) failed"))));
            }
            Ok(())
        }
        Command::DesignLattice {
            model,
            select,
            full,
            extra_damping,
            graphml,
            out,
        } => {
            format_or(&out, Format::Json, &[Format::Json], "design-lattice")?;
            let sys = load_model(&model)?;
            let m = select_matrix(&sys, &select, !full)?;
            let lat = synthesize_lattice(&m, extra_damping)?;
            if let Some(path) = &graphml {
                write_file(path, &lat.to_graphml())?;
            }
            let mut doc = lat.to_json()?;
            doc.push('\n');
            emit(&out, &doc, || {
                format!(
                    "{}-mode lattice, jump matrix {} (minimum eigenvalue {})",
                    lat.n_modes,
                    if lat.psd { "positive semidefinite" } else { "NOT positive semidefinite" },
                    sci12(lat.min_gamma_eigenvalue)
                )
            })?;
            if !lat.psd {
                eprintln!(
                    "warning: the lattice needs --extra-damping ≥ {} to be physical",
                    sci12(lat.required_extra_damping())
                );
            }
            Ok(())
        }
        Command::Verify {
            model,
            select,
            full,
            alpha,
            cutoff,
            tmax,
            dt,
            tol,
            sample_every,
            leakage_tol,
            trajectory,
            out,
        } => {
            format_or(&out, Format::Json, &[Format::Json], "verify")?;
            if select.allow_gain {
                return Err(Failure::Usage("verify needs a physical (loss-only) model".into()));
            }
            let sys = load_model(&model)?;
            let m = select_matrix(&sys, &select, !full)?;
            let alphas = parse_alphas(&alpha)?;
            let space = build_space(sys.n_modes(), cutoff)?;
            let rho0 = coherent_state(&alphas, &space)?;
            let config = SimConfig {
                leakage_tol,
                ..SimConfig::new(cutoff, dt, tmax).with_sample_every(sample_every)
            };
            let report = verify_moments(&sys, &rho0, &m, &config, tol)?;
            if let Some(path) = &trajectory {
                write_file(path, &report.oracle_csv())?;
            }
            let mut doc = report.to_json()?;
            doc.push('\n');
            emit(&out, &doc, || {
                format!(
                    "{}: max deviation {} (tol {})",
                    if report.pass { "pass" } else { "FAIL" },
                    sci12(report.max_dev()),
                    sci12(tol)
                )
            })?;
            if report.pass {
                Ok(())
            } else {
                Err(Failure::Check(format!(
                    "max deviation {} exceeds {}",
                    sci12(report.max_dev()),
                    sci12(tol)
                )))
            }
        }
        Command::Mn {
            n,
            gamma,
            gamma12,
            delta,
            out,
        } => {
            format_or(&out, Format::Json, &[Format::Json], "mn")?;
            let m = build_m_n(n, gamma, gamma12, delta)?;
            let values = spectral::sorted_eigenvalues(m.matrix())?;
            let doc = MnDoc {
                evolution_matrix: serde_json::from_str(&m.to_json()?).map_err(Error::from)?,
                eigenvalues: pairs(&values),
                closed_form: pairs(&spectral::closed_form_spectrum(n, gamma, gamma12, delta)),
                ep_report: ep_report(m.matrix())?,
            };
            emit(&out, &json(&doc)?, || format!("{}x{} matrix", m.dim(), m.dim()))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
