//! `netcm` command line.
//!
//! Exit codes: 0 pass / feasible, 1 fail / infeasible-evidence, 2
//! inconclusive, 64 usage or malformed spec, 65 bad input data, 70 numerical
//! failure, 74 I/O.

mod schema;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::covariance::{BlockCovarianceMatrix, CmSidecar};
use crate::criteria::{
    decompose_state, ghz_fidelity_bound, prop2_residual, visibility_threshold,
    CriterionReport, FidelitySearch, SplitBases, SCHEMA_VERSION,
};
use crate::error::{Error, Result};
use crate::feasibility::{self, FeasibilityProblem, FeasibilityStatus, SolverOptions, INFEASIBLE_EVIDENCE_CAVEAT};
use crate::spec::{ObservablesSpec, Scenario, StateSpec, TopologySpec};
use crate::tensor::ncmx::{load_ncmx, save_ncmx};
use crate::tensor::{spectral, BlockLayout};

pub use schema::report_schema;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_SOFTWARE: i32 = 70;
pub const EXIT_IO: i32 = 74;

#[derive(Parser, Debug)]
#[command(name = "netcm", version, about = "Covariance-matrix certification of quantum network states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one criterion and emit a JSON report.
    Check {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a criterion over a visibility grid (CSV), optionally refining the threshold.
    Scan {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        eval: EvalArgs,
        /// `start:stop:step`
        #[arg(long, default_value = "0:1:0.05")]
        grid: String,
        /// Bisect for the verdict flip to this tolerance.
        #[arg(long)]
        refine: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split a triangle state's covariance matrix into source contributions.
    Decompose {
        #[command(flatten)]
        state: StateArgs,
        /// Write T_c, T_b, T_a, R as NCMX files here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for a source decomposition of the covariance matrix.
    Feasibility {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, default_value = "full-product")]
        observables: String,
        #[arg(long)]
        topology: Option<String>,
        /// Covariance matrix in NCMX format, with a `<stem>.json` block sidecar.
        #[arg(long, conflicts_with_all = ["state", "state_spec", "state_file"])]
        cm: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long, default_value_t = 50_000)]
        max_iter: usize,
        /// Allow a PSD slack term per node.
        #[arg(long)]
        slack: bool,
        #[arg(long)]
        witness_dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Largest GHZ fidelity compatible with the trace-norm criterion on σz.
    FidelityBound {
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 4000)]
        iterations: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export a state (or its covariance matrix with `--cm`) as NCMX.
    Export {
        #[command(flatten)]
        state: StateArgs,
        /// Export the covariance matrix for this observable set instead of the state.
        #[arg(long)]
        cm: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the JSON schema of emitted reports.
    Schema,
}

#[derive(Args, Debug)]
struct StateArgs {
    /// ghz | w | dicke | cluster4 | bell | btn | file
    #[arg(long)]
    state: Option<String>,
    #[arg(long)]
    parties: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    /// `full` or `i,j`
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    visibility: Option<f64>,
    /// NCMX density matrix; needs `--dims`.
    #[arg(long)]
    state_file: Option<PathBuf>,
    /// Comma-separated factor dimensions.
    #[arg(long)]
    dims: Option<String>,
    /// `d1xd2`: refine every factor into two.
    #[arg(long)]
    split: Option<String>,
    /// JSON state specification.
    #[arg(long)]
    state_spec: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long, default_value = "trace-norm")]
    criterion: String,
    #[arg(long, default_value = "pauli-z")]
    observables: String,
    /// triangle | pairwise | ring | five-node | FILE.json (default pairwise)
    #[arg(long)]
    topology: Option<String>,
}

fn parse_pair(s: &str, sep: char, what: &str) -> Result<[usize; 2]> {
    let parts: Vec<&str> = s.split(sep).collect();
    match parts.as_slice() {
        [a, b] => match (a.trim().parse(), b.trim().parse()) {
            (Ok(a), Ok(b)) => Ok([a, b]),
            _ => Err(Error::Spec(format!("bad {what} `{s}`"))),
        },
        _ => Err(Error::Spec(format!("bad {what} `{s}`"))),
    }
}

impl StateArgs {
    fn spec(&self) -> Result<(StateSpec, PathBuf)> {
        if let Some(path) = &self.state_spec {
            let text = std::fs::read_to_string(path)?;
            let mut spec = StateSpec::from_json(&text)?;
            if let Some(v) = self.visibility {
                spec.visibility = Some(v);
            }
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            return Ok((spec, base));
        }
        let family = match (&self.state, &self.state_file) {
            (Some(f), None) => f.clone(),
            (None, Some(_)) => "file".to_string(),
            (Some(f), Some(_)) if f == "file" => "file".to_string(),
            (Some(_), Some(_)) => return Err(Error::Spec("--state-file only goes with --state file".into())),
            (None, None) => return Err(Error::Spec("one of --state, --state-file or --state-spec is required".into())),
        };
        let mut spec = StateSpec::new(&family);
        if let Some(n) = self.parties {
            spec = spec.param("parties", n);
        }
        if let Some(d) = self.dim {
            spec = spec.param("dim", d);
        }
        if let Some(l) = &self.levels {
            spec = if l == "full" {
                spec.param("levels", "full")
            } else {
                let [i, j] = parse_pair(l, ',', "levels")?;
                spec.param("levels", vec![i, j])
            };
        }
        if let Some(k) = self.k {
            spec = spec.param("k", k);
        }
        if let Some(path) = &self.state_file {
            let dims = self
                .dims
                .as_deref()
                .ok_or_else(|| Error::Spec("--state-file needs --dims".into()))?
                .split(',')
                .map(|d| d.trim().parse::<usize>().map_err(|_| Error::Spec(format!("bad --dims `{d}`"))))
                .collect::<Result<Vec<_>>>()?;
            let abs = std::path::absolute(path)?;
            spec = spec.param("path", abs.to_string_lossy().into_owned()).param("dims", dims);
        }
        if let Some(v) = self.visibility {
            spec = spec.visibility(v);
        }
        if let Some(s) = &self.split {
            let [d1, d2] = parse_pair(s, 'x', "--split")?;
            spec = spec.split(d1, d2);
        }
        Ok((spec, PathBuf::from(".")))
    }

    fn given(&self) -> bool {
        self.state.is_some() || self.state_file.is_some() || self.state_spec.is_some()
    }
}

fn topology_spec(arg: &Option<String>) -> Result<TopologySpec> {
    arg.as_deref().map_or(Ok(TopologySpec::Pairwise), str::parse)
}

fn scenario(state: &StateArgs, eval: &EvalArgs) -> Result<Scenario> {
    let (spec, base) = state.spec()?;
    let spec = rebase(spec, &base);
    Ok(Scenario {
        state: spec,
        observables: eval.observables.parse()?,
        topology: topology_spec(&eval.topology)?,
        criterion: eval.criterion.parse()?,
    })
}

/// Makes relative `file` paths in a spec absolute so the spec can be
/// evaluated from any working directory.
fn rebase(mut spec: StateSpec, base: &Path) -> StateSpec {
    if spec.family == "file" {
        if let Some(Value::String(p)) = spec.params.get("path") {
            let p = Path::new(p);
            if p.is_relative() {
                let joined = base.join(p);
                spec.params.insert("path".into(), Value::String(joined.to_string_lossy().into_owned()));
            }
        }
    }
    if spec.family == "btn" {
        if let Some(Value::Array(sources)) = spec.params.get_mut("sources") {
            for s in sources.iter_mut() {
                if let Ok(inner) = serde_json::from_value::<StateSpec>(s.clone()) {
                    *s = rebase(inner, base).to_value();
                }
            }
        }
    }
    spec
}

/// Writes `bytes` to a temporary file next to `path`, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(out, &text)
}

/// Shortest round-trip decimal, as in the JSON reports.
fn num(x: f64) -> String {
    serde_json::to_string(&x).unwrap_or_else(|_| "NaN".into())
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|x| x.trim().parse::<f64>().map_err(|_| Error::Spec(format!("bad --grid `{s}`"))))
        .collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(Error::Spec(format!("--grid wants start:stop:step, got `{s}`")));
    };
    if !(step > 0.0) || stop < start || !(0.0..=1.0).contains(&start) || stop > 1.0 {
        return Err(Error::Spec(format!("bad --grid `{s}`")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| (start + k as f64 * step).min(stop)).collect())
}

#[derive(Serialize)]
struct FeasibilityReport {
    schema_version: &'static str,
    kind: &'static str,
    status: FeasibilityStatus,
    residual: f64,
    iterations: usize,
    tolerance: f64,
    max_iter: usize,
    slack: bool,
    caveat: Option<&'static str>,
    parts: Vec<String>,
    state_spec: Option<Value>,
    observables_spec: Option<String>,
    topology: Value,
}

#[derive(Serialize)]
struct FidelityReport {
    schema_version: &'static str,
    kind: &'static str,
    bound: f64,
    tolerance: f64,
    weights_at_bound: Vec<f64>,
    margin_at_bound: f64,
    bisection_steps: usize,
    restarts: usize,
    iterations: usize,
    seed: u64,
}

#[derive(Serialize)]
struct PartSummary {
    name: &'static str,
    min_eigenvalue: f64,
    trace: f64,
}

#[derive(Serialize)]
struct DecomposeReport {
    schema_version: &'static str,
    kind: &'static str,
    node_labels: Vec<String>,
    block_sizes: Vec<usize>,
    parts: Vec<PartSummary>,
    sum_residual: f64,
    min_eigenvalue_residual: f64,
    pass: bool,
    tolerance: f64,
    state_spec: Value,
}

fn load_cm(path: &Path) -> Result<BlockCovarianceMatrix> {
    let m = load_ncmx(path)?;
    let sidecar: CmSidecar = serde_json::from_str(&std::fs::read_to_string(path.with_extension("json"))?)
        .map_err(|e| Error::Format(format!("bad sidecar for {}: {e}", path.display())))?;
    BlockCovarianceMatrix::new(m, BlockLayout::new(sidecar.block_sizes)?, sidecar.node_labels)
}

fn check(state: &StateArgs, eval: &EvalArgs, out: &Option<PathBuf>) -> Result<i32> {
    let report = scenario(state, eval)?.evaluate()?;
    emit_json(out, &report)?;
    Ok(if report.pass { EXIT_OK } else { EXIT_FAIL })
}

fn scan(state: &StateArgs, eval: &EvalArgs, grid: &str, refine: Option<f64>, out: &Option<PathBuf>) -> Result<i32> {
    let sc = scenario(state, eval)?;
    let grid = parse_grid(grid)?;
    let reports: Vec<CriterionReport> = grid.par_iter().map(|&v| sc.evaluate_at(v)).collect::<Result<_>>()?;
    let mut csv = String::from("visibility,lhs,rhs,margin,pass\n");
    for (v, r) in grid.iter().zip(&reports) {
        csv.push_str(&format!("{},{},{},{},{}\n", num(*v), num(r.lhs), num(r.rhs), num(r.margin), r.pass));
    }
    if let Some(tol) = refine {
        let t = visibility_threshold(|v| sc.evaluate_at(v), tol)?;
        csv.push_str(&format!("# threshold,{},{}\n", num(t), num(tol)));
    }
    emit(out, &csv)?;
    Ok(EXIT_OK)
}

fn decompose(state: &StateArgs, out_dir: &Option<PathBuf>, out: &Option<PathBuf>) -> Result<i32> {
    let (spec, base) = state.spec()?;
    let spec = rebase(spec, &base);
    let rho = spec.build()?;
    let split = SplitBases::gell_mann(rho.layout(), rho.nodes())?;
    let dec = decompose_state(&rho, &split)?;
    let gamma = crate::criteria::full_basis_cm(&rho, &split)?;
    let sum_residual = dec.sum().max_abs_diff(gamma.matrix());
    let tolerance = 1e-9 * (1.0 + gamma.matrix().max_abs());
    let mut parts = Vec::new();
    for (name, m) in dec.parts() {
        parts.push(PartSummary {
            name,
            min_eigenvalue: spectral::min_eigenvalue(m)?,
            trace: m.trace().re,
        });
        if let Some(dir) = out_dir {
            std::fs::create_dir_all(dir)?;
            save_ncmx(dir.join(format!("{name}.ncmx")), m)?;
        }
    }
    let residual = prop2_residual(&rho, &split)?;
    let pass = sum_residual <= tolerance && parts.iter().all(|p| p.min_eigenvalue >= -tolerance);
    let report = DecomposeReport {
        schema_version: SCHEMA_VERSION,
        kind: "decomposition",
        node_labels: dec.node_labels.clone(),
        block_sizes: dec.layout.sizes().to_vec(),
        parts,
        sum_residual,
        min_eigenvalue_residual: spectral::min_eigenvalue(&residual.residual)?,
        pass,
        tolerance,
        state_spec: spec.to_value(),
    };
    emit_json(out, &report)?;
    Ok(if pass { EXIT_OK } else { EXIT_FAIL })
}

#[allow(clippy::too_many_arguments)]
fn run_feasibility(
    state: &StateArgs,
    observables: &str,
    topology: &Option<String>,
    cm: &Option<PathBuf>,
    opts: SolverOptions,
    slack: bool,
    witness_dir: &Option<PathBuf>,
    out: &Option<PathBuf>,
) -> Result<i32> {
    let (gamma, state_spec, obs_name) = match cm {
        Some(path) => (load_cm(path)?, None, None),
        None => {
            let (spec, base) = state.spec()?;
            let spec = rebase(spec, &base);
            let rho = spec.build()?;
            let obs: ObservablesSpec = observables.parse()?;
            let gamma = crate::covariance::covariance_matrix(&obs.build(&rho)?, &rho)?;
            (gamma, Some(spec.to_value()), Some(obs.name().to_string()))
        }
    };
    let topo = topology_spec(topology)?.build(gamma.node_labels())?;
    let problem = if slack {
        FeasibilityProblem::with_slack(&gamma, &topo)?
    } else {
        FeasibilityProblem::new(&gamma, &topo)?
    };
    let outcome = feasibility::solve(&problem, &opts)?;
    if let (Some(dir), Some(_)) = (witness_dir, &outcome.witness) {
        feasibility::export_witness(&problem, &outcome, dir)?;
    }
    let report = FeasibilityReport {
        schema_version: SCHEMA_VERSION,
        kind: "feasibility",
        status: outcome.status,
        residual: outcome.residual,
        iterations: outcome.iterations,
        tolerance: opts.tol,
        max_iter: opts.max_iter,
        slack,
        caveat: (outcome.status == FeasibilityStatus::InfeasibleEvidence).then_some(INFEASIBLE_EVIDENCE_CAVEAT),
        parts: problem.parts().iter().map(|p| p.name.clone()).collect(),
        state_spec,
        observables_spec: obs_name,
        topology: serde_json::to_value(&topo)?,
    };
    emit_json(out, &report)?;
    Ok(match outcome.status {
        FeasibilityStatus::Feasible => EXIT_OK,
        FeasibilityStatus::InfeasibleEvidence => EXIT_FAIL,
        FeasibilityStatus::Inconclusive => EXIT_INCONCLUSIVE,
    })
}

fn fidelity_bound(search: FidelitySearch, tol: f64, out: &Option<PathBuf>) -> Result<i32> {
    let b = ghz_fidelity_bound(&search, tol)?;
    let report = FidelityReport {
        schema_version: SCHEMA_VERSION,
        kind: "fidelity-bound",
        bound: b.bound,
        tolerance: b.tolerance,
        weights_at_bound: b.weights_at_bound.to_vec(),
        margin_at_bound: b.margin_at_bound,
        bisection_steps: b.bisection_steps,
        restarts: search.restarts,
        iterations: search.iterations,
        seed: search.seed,
    };
    emit_json(out, &report)?;
    Ok(EXIT_OK)
}

fn export(state: &StateArgs, cm: &Option<String>, out: &Path) -> Result<i32> {
    let (spec, base) = state.spec()?;
    let rho = rebase(spec, &base).build()?;
    match cm {
        None => save_ncmx(out, rho.matrix())?,
        Some(obs) => {
            let obs: ObservablesSpec = obs.parse()?;
            let gamma = crate::covariance::covariance_matrix(&obs.build(&rho)?, &rho)?;
            save_ncmx(out, gamma.matrix())?;
            let mut side = serde_json::to_string_pretty(&gamma.sidecar())?;
            side.push('\n');
            write_atomic(&out.with_extension("json"), side.as_bytes())?;
        }
    }
    Ok(EXIT_OK)
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Check { state, eval, out } => check(&state, &eval, &out),
        Command::Scan {
            state,
            eval,
            grid,
            refine,
            out,
        } => scan(&state, &eval, &grid, refine, &out),
        Command::Decompose { state, out_dir, out } => decompose(&state, &out_dir, &out),
        Command::Feasibility {
            state,
            observables,
            topology,
            cm,
            tol,
            max_iter,
            slack,
            witness_dir,
            out,
        } => {
            if cm.is_none() && !state.given() {
                return Err(Error::Spec("feasibility needs a state or --cm".into()));
            }
            run_feasibility(
                &state,
                &observables,
                &topology,
                &cm,
                SolverOptions { tol, max_iter },
                slack,
                &witness_dir,
                &out,
            )
        }
        Command::FidelityBound {
            tol,
            seed,
            restarts,
            iterations,
            out,
        } => fidelity_bound(
            FidelitySearch {
                restarts,
                iterations,
                seed,
            },
            tol,
            &out,
        ),
        Command::Export { state, cm, out } => export(&state, &cm, &out),
        Command::Schema => {
            emit_json(&None, &report_schema())?;
            Ok(EXIT_OK)
        }
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::Spec(_) | Error::InvalidArgument(_) | Error::UnknownLabel(_) | Error::Topology(_) | Error::NotNcds(..) => {
            EXIT_USAGE
        }
        Error::NonConvergence(_) | Error::NoSignChange { .. } => EXIT_SOFTWARE,
        _ => EXIT_DATA,
    }
}

fn init_threads() -> Result<()> {
    if let Ok(n) = std::env::var("NETCM_THREADS") {
        let n: usize = n
            .parse()
            .map_err(|_| Error::Spec(format!("NETCM_THREADS must be a positive integer, got `{n}`")))?;
        // a second build in the same process fails harmlessly
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match init_threads().and_then(|_| dispatch(cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("netcm: {e}");
            exit_code(&e)
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}
