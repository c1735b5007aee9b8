//! Command-line front end of the envariance laboratory.
//!
//! Every subcommand runs one module's operations and emits a [`Report`].
//! Exit codes: 0 success, 1 a verified property failed, 2 the run could not
//! start (bad flags, malformed input, violated precondition).

pub mod parse;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use envlab_core::born::{self, born_probabilities, coarse_probability, to_f64, WeightVector};
use envlab_core::continuum::{self, CoefficientSequence, Mesh, WaveFunction};
use envlab_core::envariance::{self, SwapSpec, DECISION_TOL};
use envlab_core::frequencies::{self, ExperimentSpec};
use envlab_core::hilbert::{self, digits_of, load_state, DEFAULT_ZERO_TOL, STATE_FILE_NORM_TOL};
use envlab_core::pointer::{self, CouplingMatrix, EnvSpectrum, TruthTable};
use envlab_core::records::{self, FineTally, RecordEvent};
use envlab_core::{
    sample, BigUint, Bipartition, DMatrix, DVector, Error, LocalUnitary, Result, StateVector, C64,
};

use parse::UnitarySpec;
use report::{complex, flag, frac, num, Format, Report, Status};

#[derive(Parser, Debug)]
#[command(
    name = "envlab",
    version,
    about = "Envariance laboratory: counter-transformations, fine-graining and exact branch counting"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "table")]
    pub format: Format,
    /// Write the report to this file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed for every randomized fixture.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Decision tolerance (envariance verdicts, evenness).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Inspect and combine state files.
    State(StateArgs),
    /// Schmidt decomposition across a cut.
    Schmidt(SchmidtArgs),
    /// Decide envariance of a system unitary and emit the counter.
    Envcheck(EnvcheckArgs),
    /// Swap, confirm, counterswap, confirm.
    Protocol(ProtocolArgs),
    /// Probabilities by fine-graining and counting.
    Born(BornArgs),
    /// Decoherence factors and pointer-basis scores.
    Pointer(PointerArgs),
    /// Record-event algebra and probabilities.
    Records(RecordsArgs),
    /// Relative frequencies in repeated measurements.
    Freq(FreqArgs),
    /// Truncation and discretization of continuous wave functions.
    Continuum(ContinuumArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StateOp {
    Show,
    Tensor,
    Apply,
    Condition,
    Probe,
    Fidelity,
}

#[derive(Args, Debug)]
pub struct StateArgs {
    /// JSON state file: `{"dims": [...], "amps": [[re, im], ...]}`.
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long, value_enum, default_value = "show")]
    pub op: StateOp,
    /// Second state (tensor, fidelity).
    #[arg(long)]
    pub with: Option<PathBuf>,
    /// `file:PATH` matrix to apply.
    #[arg(long)]
    pub unitary: Option<String>,
    /// Subsystems the unitary acts on.
    #[arg(long)]
    pub targets: Option<String>,
    /// Subsystem to condition on.
    #[arg(long)]
    pub subsystem: Option<usize>,
    /// Basis level of the conditioning outcome.
    #[arg(long)]
    pub outcome: Option<usize>,
    /// Subsystems kept by the reduced-state probe.
    #[arg(long)]
    pub keep: Option<String>,
}

#[derive(Args, Debug)]
pub struct SchmidtArgs {
    /// JSON state file: `{"dims": [...], "amps": [[re, im], ...]}`.
    #[arg(long)]
    pub state: PathBuf,
    /// 0-based subsystems on the system side of the cut.
    #[arg(long, default_value = "0")]
    pub cut: String,
}

#[derive(Args, Debug)]
pub struct EnvcheckArgs {
    /// JSON state file: `{"dims": [...], "amps": [[re, im], ...]}`.
    #[arg(long)]
    pub state: PathBuf,
    /// 0-based subsystems on the system side of the cut.
    #[arg(long, default_value = "0")]
    pub cut: String,
    /// `phase:PHI,...`, `swap:K,L[,PHI]`, `partial:PATH` or `file:PATH`.
    #[arg(long)]
    pub unitary: String,
}

#[derive(Args, Debug)]
pub struct ProtocolArgs {
    /// JSON state file: `{"dims": [...], "amps": [[re, im], ...]}`.
    #[arg(long)]
    pub state: PathBuf,
    /// 0-based subsystems on the system side of the cut.
    #[arg(long, default_value = "0")]
    pub cut: String,
    /// 1-based Schmidt indices and optional phase: `K,L[,PHI]`.
    #[arg(long, default_value = "1,2")]
    pub swap: String,
}

#[derive(Args, Debug)]
pub struct BornArgs {
    /// Integer weights `m1,m2,...`.
    #[arg(long, conflicts_with = "state")]
    pub weights: Option<String>,
    /// JSON state file, as an alternative to `--weights`.
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// 0-based subsystems on the system side of the cut.
    #[arg(long, default_value = "0")]
    pub cut: String,
    /// Largest common denominator (defaults to the weight total, or 1000).
    #[arg(long)]
    pub mmax: Option<u64>,
    /// 1-based outcome labels of a coarse event.
    #[arg(long, allow_hyphen_values = true)]
    pub event: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PointerOp {
    Sweep,
    Score,
    Search,
    Commutator,
}

#[derive(Args, Debug)]
pub struct PointerArgs {
    #[arg(long, value_enum, default_value = "sweep")]
    pub op: PointerOp,
    /// JSON rows of couplings (apparatus levels x environment levels).
    #[arg(long)]
    pub couplings: Option<PathBuf>,
    /// Apparatus levels of seeded random couplings (level 0 is the ready state).
    #[arg(long, default_value_t = 4)]
    pub records: usize,
    /// Environment levels of seeded random couplings.
    #[arg(long, default_value_t = 16)]
    pub levels: usize,
    /// Start of the time sweep.
    #[arg(long, default_value_t = pointer::SWEEP_T0, allow_negative_numbers = true)]
    pub t0: f64,
    /// End of the time sweep.
    #[arg(long, default_value_t = pointer::SWEEP_T1, allow_negative_numbers = true)]
    pub t1: f64,
    /// Sample times in the sweep.
    #[arg(long, default_value_t = pointer::SWEEP_STEPS)]
    pub steps: usize,
    /// Evolution time for scores and searches.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub t: f64,
    /// Rotation of the comparison basis (radians).
    #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
    pub angle: f64,
    /// Optimizer iterations per restart of the basis search.
    #[arg(long, default_value_t = 200)]
    pub iterations: usize,
    /// System state (defaults to the uniform superposition).
    #[arg(long)]
    pub state: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RecordsOp {
    Axioms,
    Lattice,
    Probability,
    Upsilon,
    Recursion,
}

#[derive(Args, Debug)]
pub struct RecordsArgs {
    #[arg(long, value_enum, default_value = "axioms")]
    pub op: RecordsOp,
    /// Number of fine records for random trials.
    #[arg(long, default_value_t = 8)]
    pub universe: usize,
    /// Random event triples checked by `axioms`.
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    /// First event for `lattice`, as 1-based records `1,2,5`.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    /// Second event for `lattice`.
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,
    /// Event whose probability is counted.
    #[arg(long, allow_hyphen_values = true)]
    pub event: Option<String>,
    /// Fine-cell counts per outcome (zeros allowed).
    #[arg(long)]
    pub weights: Option<String>,
    /// Coarse cells, e.g. `1,2|3,4`.
    #[arg(long)]
    pub partition: Option<String>,
    /// Denominator budget when reading coarse probabilities back (defaults to the cell total).
    #[arg(long)]
    pub mmax: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FreqOp {
    Distribution,
    Maverick,
    Superensemble,
}

#[derive(Args, Debug)]
pub struct FreqArgs {
    #[arg(long, value_enum, default_value = "distribution")]
    pub op: FreqOp,
    /// Fine cells recording outcome "0".
    #[arg(long = "m")]
    pub m: u64,
    /// Total fine cells per run.
    #[arg(long = "M")]
    pub big_m: u64,
    /// Number of runs.
    #[arg(long = "N")]
    pub runs: usize,
    /// Frequency window of the maverick mass.
    #[arg(long, default_value_t = 0.1)]
    pub dr: f64,
    /// Sampled history swaps.
    #[arg(long, default_value_t = 8)]
    pub samples: usize,
    /// Add the detection register subsystem.
    #[arg(long)]
    pub register: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ContinuumOp {
    Discretize,
    Interval,
    Born,
    Truncate,
}

#[derive(Args, Debug)]
pub struct ContinuumArgs {
    #[arg(long, value_enum, default_value = "discretize")]
    pub op: ContinuumOp,
    /// `gaussian[:CENTER,WIDTH]`, `uniform:A,B` or `boxes:A,B,AMP;...`.
    #[arg(long, default_value = "gaussian", allow_hyphen_values = true)]
    pub psi: String,
    /// Sampled wave function (`x re [im]` rows, linear interpolation).
    #[arg(long, conflicts_with = "psi")]
    pub table: Option<PathBuf>,
    /// Left end of the mesh.
    #[arg(long, default_value_t = -8.0, allow_negative_numbers = true)]
    pub x0: f64,
    /// Right end of the mesh.
    #[arg(long, default_value_t = 8.0, allow_negative_numbers = true)]
    pub x1: f64,
    /// Cell width of the uniform mesh.
    #[arg(long, default_value_t = 0.5)]
    pub dx: f64,
    /// Equal-mass cells instead of a uniform mesh.
    #[arg(long)]
    pub adaptive: Option<usize>,
    /// Gauss-Legendre points per cell.
    #[arg(long, default_value_t = continuum::DEFAULT_QUAD_POINTS)]
    pub quad: usize,
    /// Interval `X1,X2` for `interval`.
    #[arg(long, default_value = "-1,1", allow_hyphen_values = true)]
    pub interval: String,
    /// Denominator budget of the continuum Born rule.
    #[arg(long, default_value_t = 10_000)]
    pub mmax: u64,
    /// Cells lighter than this join the remainder outcome (default 1/(2 mmax)).
    #[arg(long)]
    pub fold: Option<f64>,
    /// Truncation budget: the discarded tail weighs at most delta^2.
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// `geometric` or `list:A1,A2,...` (real amplitudes).
    #[arg(long, default_value = "geometric")]
    pub sequence: String,
}

/// Subcommand, operation selector and the library operations it runs.
pub const OPERATIONS: &[(&str, &str, &[&str])] = &[
    ("state", "show", &[]),
    ("state", "tensor", &["hilbert::tensor_product"]),
    ("state", "apply", &["hilbert::apply_local"]),
    ("state", "condition", &["hilbert::conditional_state"]),
    ("state", "probe", &["hilbert::reduced_probe"]),
    ("state", "fidelity", &["hilbert::fidelity"]),
    ("schmidt", "", &["hilbert::schmidt", "envariance::is_even"]),
    (
        "envcheck",
        "",
        &[
            "envariance::check_envariance",
            "envariance::phase_counter",
            "envariance::swap_unitary",
            "envariance::counterswap",
            "envariance::partial_swap_counter",
        ],
    ),
    ("protocol", "", &["envariance::protocol_run"]),
    (
        "born",
        "",
        &[
            "born::rationalize",
            "born::fine_grain",
            "born::born_probabilities",
            "born::coarse_probability",
        ],
    ),
    ("pointer", "sweep", &["pointer::decoherence_factor"]),
    (
        "pointer",
        "score",
        &[
            "pointer::premeasure",
            "pointer::evolve",
            "pointer::pointer_score",
        ],
    ),
    ("pointer", "search", &["pointer::find_pointer_basis"]),
    ("pointer", "commutator", &["pointer::commutator_norm"]),
    ("records", "axioms", &["records::verify_axioms"]),
    (
        "records",
        "lattice",
        &["records::meet", "records::join", "records::complement"],
    ),
    (
        "records",
        "probability",
        &["records::event_probability", "records::conditional"],
    ),
    ("records", "upsilon", &["records::build_upsilon"]),
    ("records", "recursion", &["records::equal_cell_recursion"]),
    (
        "freq",
        "distribution",
        &[
            "frequencies::history_counts",
            "frequencies::frequency_distribution",
            "frequencies::gaussian_approx",
            "frequencies::deviation",
        ],
    ),
    ("freq", "maverick", &["frequencies::maverick_mass"]),
    (
        "freq",
        "superensemble",
        &["frequencies::build_superensemble_explicit"],
    ),
    ("continuum", "discretize", &["continuum::discretize"]),
    (
        "continuum",
        "interval",
        &["continuum::interval_probability"],
    ),
    ("continuum", "born", &["continuum::born_continuum"]),
    ("continuum", "truncate", &["continuum::truncate"]),
];

/// Result of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parse `argv` (program name first), run, render.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code: 2,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    let report = match dispatch(&cli) {
        Ok(r) => r,
        Err(e) => {
            return Outcome {
                code: 2,
                stdout: String::new(),
                stderr: format!("error: {e}\n"),
            }
        }
    };
    let text = report::render(&report, cli.format);
    let code = match report.status {
        Status::Passed => 0,
        Status::Failed => 1,
    };
    match &cli.out {
        Some(path) => match std::fs::write(path, &text) {
            Ok(()) => Outcome {
                code,
                stdout: String::new(),
                stderr: String::new(),
            },
            Err(e) => Outcome {
                code: 2,
                stdout: String::new(),
                stderr: format!("error: {}: {e}\n", path.display()),
            },
        },
        None => Outcome {
            code,
            stdout: text,
            stderr: String::new(),
        },
    }
}

pub fn dispatch(cli: &Cli) -> Result<Report> {
    match &cli.command {
        Command::State(a) => state_cmd(a),
        Command::Schmidt(a) => schmidt_cmd(a, cli.tol),
        Command::Envcheck(a) => envcheck_cmd(a, cli.tol),
        Command::Protocol(a) => protocol_cmd(a),
        Command::Born(a) => born_cmd(a),
        Command::Pointer(a) => pointer_cmd(a, cli.seed),
        Command::Records(a) => records_cmd(a, cli.seed),
        Command::Freq(a) => freq_cmd(a, cli.seed),
        Command::Continuum(a) => continuum_cmd(a),
    }
}

fn load(path: &std::path::Path) -> Result<StateVector> {
    load_state(path, STATE_FILE_NORM_TOL)
}

fn state_rows(r: &mut Report, s: &StateVector) {
    r.field("dims", report::list(s.dims()))
        .field("norm", num(s.norm()));
    r.columns(&["index", "digits", "re", "im"]);
    for (i, a) in s.amps().iter().enumerate() {
        if a.norm() > 0.0 {
            let digits = report::list(&digits_of(s.dims(), i));
            r.row(vec![i.to_string(), digits, num(a.re), num(a.im)]);
        }
    }
}

fn matrix_rows(r: &mut Report, m: &DMatrix<C64>) {
    r.columns(&["row", "col", "re", "im"]);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            r.row(vec![i.to_string(), j.to_string(), num(z.re), num(z.im)]);
        }
    }
}

fn need<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| Error::Parameter(format!("--{flag} is required here")))
}

fn state_cmd(a: &StateArgs) -> Result<Report> {
    let s = load(&a.state)?;
    let mut r = Report::new("state");
    match a.op {
        StateOp::Show => state_rows(&mut r, &s),
        StateOp::Tensor => {
            let other = load(need(&a.with, "with")?)?;
            state_rows(&mut r, &hilbert::tensor_product(&[s, other])?);
        }
        StateOp::Apply => {
            let m = match UnitarySpec::parse(need(&a.unitary, "unitary")?)? {
                UnitarySpec::File(p) => parse::matrix(&p)?,
                _ => {
                    return Err(Error::Parameter(
                        "state --op apply takes a file:PATH unitary".into(),
                    ))
                }
            };
            let targets = parse::list(need(&a.targets, "targets")?, "target")?;
            state_rows(
                &mut r,
                &hilbert::apply_local(&s, &LocalUnitary::new(targets, m)?)?,
            );
        }
        StateOp::Condition => {
            let sub = *need(&a.subsystem, "subsystem")?;
            let level = *need(&a.outcome, "outcome")?;
            let dim = *s.dims().get(sub).ok_or(Error::InvalidSubsystem {
                index: sub,
                count: s.subsystems(),
            })?;
            if level >= dim {
                return Err(Error::Parameter(format!(
                    "outcome {level} outside a {dim}-level subsystem"
                )));
            }
            let outcome = DVector::from_fn(dim, |i, _| {
                C64::new(if i == level { 1.0 } else { 0.0 }, 0.0)
            });
            let (weight, residual) = hilbert::conditional_state(&s, sub, &outcome)?;
            r.field("projection_norm", num(weight));
            state_rows(&mut r, &residual);
        }
        StateOp::Probe => {
            let keep: Vec<usize> = parse::list(need(&a.keep, "keep")?, "subsystem")?;
            r.field("keep", report::list(&keep));
            matrix_rows(&mut r, &hilbert::reduced_probe(&s, &keep)?);
        }
        StateOp::Fidelity => {
            let other = load(need(&a.with, "with")?)?;
            r.field("fidelity", num(hilbert::fidelity(&s, &other)?));
        }
    }
    Ok(r)
}

fn schmidt_cmd(a: &SchmidtArgs, tol: Option<f64>) -> Result<Report> {
    let s = load(&a.state)?;
    let cut = parse::cut(&a.cut, s.subsystems())?;
    let dec = hilbert::schmidt(&s, &cut, DEFAULT_ZERO_TOL)?;
    let tol = tol.unwrap_or(born::EVEN_TOL);
    let mut r = Report::new("schmidt");
    r.field("left", report::list(cut.left()))
        .field("right", report::list(cut.right()))
        .field("rank", dec.rank().to_string())
        .field("even", flag(envariance::is_even(&dec, tol)))
        .columns(&["k", "modulus", "phase", "re", "im"]);
    for (k, c) in dec.coeffs.iter().enumerate() {
        r.row(vec![
            (k + 1).to_string(),
            num(c.norm()),
            num(c.arg()),
            num(c.re),
            num(c.im),
        ]);
    }
    Ok(r)
}

fn envcheck_cmd(a: &EnvcheckArgs, tol: Option<f64>) -> Result<Report> {
    let s = load(&a.state)?;
    let cut = parse::cut(&a.cut, s.subsystems())?;
    let dec = hilbert::schmidt(&s, &cut, DEFAULT_ZERO_TOL)?;
    let spec = UnitarySpec::parse(&a.unitary)?;
    let (u_s, closed, closed_name): (LocalUnitary, Option<LocalUnitary>, &str) = match &spec {
        UnitarySpec::Phase(phases) => (
            envariance::schmidt_phase_unitary(&dec, phases)?,
            Some(envariance::phase_counter(&dec, phases)?),
            "phase counter",
        ),
        UnitarySpec::Swap { k, l, phase } => {
            let sw = SwapSpec::new(*k, *l, *phase);
            let u = envariance::swap_unitary(sw, &dec.left_basis, cut.left().to_vec())?;
            (u, Some(envariance::counterswap(&dec, sw)?), "counterswap")
        }
        UnitarySpec::Partial(path) => {
            let basis = parse::vectors(path)?;
            let u = envariance::partial_swap_unitary(&dec, &basis)?;
            (
                u,
                envariance::partial_swap_counter(&dec, &basis).ok(),
                "partial counterswap",
            )
        }
        UnitarySpec::File(path) => (
            LocalUnitary::new(cut.left().to_vec(), parse::matrix(path)?)?,
            None,
            "none",
        ),
    };
    let verdict = envariance::check_envariance(&s, &cut, &u_s, tol.unwrap_or(DECISION_TOL))?;
    let mut r = Report::new("envcheck");
    r.field(
        "verdict",
        if verdict.envariant {
            "envariant"
        } else {
            "not envariant"
        },
    )
    .field("gram_deviation", num(verdict.gram_deviation))
    .field("residual_infidelity", num(verdict.residual_infidelity))
    .field("closed_form_counter", closed_name);
    let swapped = hilbert::apply_local(&s, &u_s)?;
    let mut failed = verdict.envariant && verdict.residual_infidelity > 1e-10;
    if let Some(c) = &closed {
        let restored = hilbert::fidelity(&hilbert::apply_local(&swapped, c)?, &s)?;
        r.field("closed_form_restoration", num(restored));
        failed |= verdict.envariant && restored < 1.0 - 1e-10;
    }
    if let Some(counter) = &verdict.counter {
        r.field("counter_targets", report::list(counter.targets()));
        matrix_rows(&mut r, counter.matrix());
    }
    r.fail_if(failed);
    Ok(r)
}

fn protocol_cmd(a: &ProtocolArgs) -> Result<Report> {
    let s = load(&a.state)?;
    let cut = parse::cut(&a.cut, s.subsystems())?;
    let spec = match UnitarySpec::parse(&format!("swap:{}", a.swap))? {
        UnitarySpec::Swap { k, l, phase } => SwapSpec::new(k, l, phase),
        _ => unreachable!("swap prefix"),
    };
    let t = envariance::protocol_run(&s, &cut, spec)?;
    let mut r = Report::new("protocol");
    r.field("k", (spec.k + 1).to_string())
        .field("l", (spec.l + 1).to_string())
        .field("phase", num(spec.phase))
        .field("restored", flag(t.restored))
        .columns(&["stage", "fidelity"]);
    for c in &t.checkpoints {
        r.row(vec![c.stage.to_string(), num(c.fidelity)]);
    }
    r.fail_if(!t.restored);
    Ok(r)
}

/// Diagonal bipartite state `sum_k sqrt(w_k / W) |k>|k>`.
fn diagonal_state(weights: &[f64]) -> Result<StateVector> {
    let n = weights.len();
    let total: f64 = weights.iter().sum();
    let mut amps = vec![C64::new(0.0, 0.0); n * n];
    for (k, w) in weights.iter().enumerate() {
        amps[k * n + k] = C64::new((w / total).sqrt(), 0.0);
    }
    StateVector::from_unnormalized(vec![n, n], amps)
}

/// Coordinate level carried by each left Schmidt vector.
fn coordinate_of(v: &DVector<C64>) -> Result<usize> {
    (0..v.len())
        .find(|&i| v[i].norm() > 1.0 - 1e-9)
        .ok_or_else(|| Error::Inconsistent("Schmidt vector is not a coordinate state".into()))
}

fn born_cmd(a: &BornArgs) -> Result<Report> {
    let mut r = Report::new("born");
    // (state, cut, m_max, map from Schmidt index to displayed outcome)
    let (state, cut, m_max, by_weight) = match (&a.weights, &a.state) {
        (Some(w), None) => {
            let w = WeightVector::parse(w)?;
            let total = u64::try_from(w.total())
                .map_err(|_| Error::Parameter("weight total too large".into()))?;
            let as_f64: Vec<f64> = w
                .m()
                .iter()
                .map(|m| u64::try_from(m).unwrap_or(u64::MAX) as f64)
                .collect();
            (
                diagonal_state(&as_f64)?,
                Bipartition::prefix(1, 2)?,
                a.mmax.unwrap_or(total),
                true,
            )
        }
        (None, Some(p)) => {
            let s = load(p)?;
            let cut = parse::cut(&a.cut, s.subsystems())?;
            (s, cut, a.mmax.unwrap_or(1000), false)
        }
        _ => {
            return Err(Error::Parameter(
                "give exactly one of --weights or --state".into(),
            ))
        }
    };
    let res = born_probabilities(&state, &cut, m_max)?;
    let n = res.probs_exact.len();
    let order: Vec<usize> = if by_weight {
        let slots = res
            .decomposition
            .left_basis
            .iter()
            .map(coordinate_of)
            .collect::<Result<Vec<_>>>()?;
        let mut inv = vec![0; n];
        for (k, &slot) in slots.iter().enumerate() {
            inv[slot] = k;
        }
        inv
    } else {
        (0..n).collect()
    };
    r.field("M", res.weights.total().to_string())
        .field("rationalization_error", num(res.rationalization_error))
        .field("fine_path", format!("{:?}", res.path).to_lowercase());
    if let Some(ev) = &a.event {
        let labels: Vec<usize> = RecordEvent::parse(ev, n)?
            .members()
            .iter()
            .map(|&k| order[k])
            .collect();
        let p = coarse_probability(&res, &labels)?;
        r.field("event", ev.clone())
            .field("event_probability", frac(&p));
    }
    r.columns(&["k", "m_k", "p", "p_float"]);
    for (shown, &k) in order.iter().enumerate() {
        r.row(vec![
            (shown + 1).to_string(),
            res.weights.m()[k].to_string(),
            frac(&res.probs_exact[k]),
            num(res.probs_float[k]),
        ]);
    }
    let total: num_rational_sum::Sum = res.probs_exact.iter().collect();
    r.fail_if(!total.is_one());
    Ok(r)
}

/// Exact sum of rationals.
mod num_rational_sum {
    use envlab_core::BigRational;

    pub struct Sum(BigRational);

    impl<'a> FromIterator<&'a BigRational> for Sum {
        fn from_iter<I: IntoIterator<Item = &'a BigRational>>(iter: I) -> Self {
            Sum(iter
                .into_iter()
                .fold(BigRational::from_integer(0.into()), |acc, q| acc + q))
        }
    }

    impl Sum {
        pub fn is_one(&self) -> bool {
            self.0 == BigRational::from_integer(1.into())
        }
    }
}

fn pointer_fixture(a: &PointerArgs, seed: u64) -> Result<(CouplingMatrix, EnvSpectrum)> {
    let g = match &a.couplings {
        Some(p) => CouplingMatrix::load(p)?,
        None => pointer::random_couplings(a.records, a.levels, 2.0, &mut sample::rng(seed))?,
    };
    let gamma = EnvSpectrum::uniform(g.levels())?;
    Ok((g, gamma))
}

/// System in the uniform superposition (or `--state`) premeasured into the
/// apparatus, then coupled to the environment for time `t`.
fn pointer_state(a: &PointerArgs, g: &CouplingMatrix, gamma: &EnvSpectrum) -> Result<StateVector> {
    let records = g.records();
    if records < 2 {
        return Err(Error::ApparatusTooSmall {
            dim: records,
            outcomes: 1,
        });
    }
    let system = match &a.state {
        Some(p) => load(p)?,
        None => StateVector::from_unnormalized(
            vec![records - 1],
            vec![C64::new(1.0, 0.0); records - 1],
        )?,
    };
    let table = TruthTable::coordinate(system.len())?;
    let joint = pointer::premeasure(&system, &table, records, false)?;
    pointer::evolve(&joint, 1, g, gamma, a.t)
}

fn pointer_cmd(a: &PointerArgs, seed: u64) -> Result<Report> {
    let (g, gamma) = pointer_fixture(a, seed)?;
    let mut r = Report::new("pointer");
    r.field("records", g.records().to_string())
        .field("levels", g.levels().to_string());
    match a.op {
        PointerOp::Sweep => {
            let rows = pointer::decoherence_sweep(&g, &gamma, a.t0, a.t1, a.steps)?;
            let mut cols = vec!["t".to_string()];
            for k in 0..g.records() {
                for l in k + 1..g.records() {
                    for part in ["re", "im", "abs"] {
                        cols.push(format!("{part}_{k}_{l}"));
                    }
                }
            }
            r.columns = cols;
            for row in rows {
                let mut cells = vec![num(row.t)];
                for (_, _, z) in row.pairs {
                    cells.extend([num(z.re), num(z.im), num(z.norm())]);
                }
                r.row(cells);
            }
        }
        PointerOp::Score => {
            let s = pointer_state(a, &g, &gamma)?;
            let d = g.records();
            let mut factor_max: f64 = 0.0;
            for k in 1..d {
                for l in k + 1..d {
                    factor_max =
                        factor_max.max(pointer::decoherence_factor(&g, &gamma, k, l, a.t)?.norm());
                }
            }
            r.field("t", num(a.t))
                .field("max_decoherence_factor", num(factor_max));
            r.columns(&["basis", "outcome", "score"]);
            let mut bases = vec![
                ("record", pointer::record_basis(d)),
                ("fourier", pointer::fourier_basis(d)),
            ];
            if d >= 3 {
                bases.insert(1, ("rotated", pointer::rotated_basis(d, 1, 2, a.angle)));
            }
            let mut record_max = 0.0;
            for (name, basis) in &bases {
                let score = pointer::pointer_score(&s, 1, basis)?;
                if *name == "record" {
                    record_max = score.max_score;
                }
                for (i, sc) in score.per_outcome.iter().enumerate() {
                    r.row(vec![
                        name.to_string(),
                        i.to_string(),
                        sc.map_or("skipped".into(), num),
                    ]);
                }
                r.field(&format!("max_score_{name}"), num(score.max_score));
            }
            r.fail_if(record_max > 1e-10);
        }
        PointerOp::Search => {
            let s = pointer_state(a, &g, &gamma)?;
            let found = pointer::find_pointer_basis(&s, 1, a.iterations, seed)?;
            r.field("t", num(a.t))
                .field("flat", flag(found.flat))
                .field("max_score", num(found.score.max_score))
                .columns(&["vector", "closest_record", "overlap", "score"]);
            for (i, b) in found.basis.iter().enumerate() {
                let (best, overlap) = (0..b.len())
                    .map(|k| (k, b[k].norm_sqr()))
                    .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
                let sc = found.score.per_outcome[i].map_or("skipped".into(), num);
                r.row(vec![i.to_string(), best.to_string(), num(overlap), sc]);
            }
        }
        PointerOp::Commutator => {
            let d = g.records();
            let diag = DMatrix::from_fn(d, d, |i, j| {
                C64::new(if i == j { i as f64 } else { 0.0 }, 0.0)
            });
            let (i, j) = if d >= 3 { (1, 2) } else { (0, 1) };
            let mut flip = DMatrix::identity(d, d);
            flip[(i, i)] = C64::new(0.0, 0.0);
            flip[(j, j)] = C64::new(0.0, 0.0);
            flip[(i, j)] = C64::new(1.0, 0.0);
            flip[(j, i)] = C64::new(1.0, 0.0);
            let pointer_norm = pointer::commutator_norm(&diag, &g)?;
            r.columns(&["observable", "commutator_norm"]);
            r.row(vec!["record levels".into(), num(pointer_norm)]);
            r.row(vec![
                "identity".into(),
                num(pointer::commutator_norm(&DMatrix::identity(d, d), &g)?),
            ]);
            r.row(vec![
                format!("flip {i},{j}"),
                num(pointer::commutator_norm(&flip, &g)?),
            ]);
            r.fail_if(pointer_norm > 1e-12);
        }
    }
    Ok(r)
}

fn event_label(e: &RecordEvent) -> String {
    let labels: Vec<usize> = e.members().iter().map(|k| k + 1).collect();
    format!("{{{}}}", report::list(&labels))
}

fn counts(text: &str) -> Result<Vec<u64>> {
    let c: Vec<u64> = parse::list(text, "weight")?;
    if c.is_empty() || c.iter().all(|&x| x == 0) {
        return Err(Error::Parameter(
            "weights must include a positive entry".into(),
        ));
    }
    Ok(c)
}

fn records_cmd(a: &RecordsArgs, seed: u64) -> Result<Report> {
    let mut r = Report::new("records");
    match a.op {
        RecordsOp::Axioms => {
            let rep = records::verify_axioms(a.universe, a.trials, seed)?;
            r.field("universe", a.universe.to_string())
                .field("trials", a.trials.to_string())
                .field(
                    "isomorphism_violations",
                    rep.isomorphism_violations.to_string(),
                )
                .columns(&["axiom", "checked", "set_violations", "projector_violations"]);
            for t in &rep.axioms {
                r.row(vec![
                    t.axiom.to_string(),
                    t.checked.to_string(),
                    t.set_violations.to_string(),
                    t.projector_violations.to_string(),
                ]);
            }
            r.fail_if(rep.violations() > 0);
        }
        RecordsOp::Lattice => {
            let x = RecordEvent::parse(need(&a.a, "a")?, a.universe)?;
            let y = RecordEvent::parse(need(&a.b, "b")?, a.universe)?;
            let (px, py) = (x.projector(), y.projector());
            let cases = [
                ("meet", x.meet(&y)?, records::meet_projector(&px, &py)),
                ("join", x.join(&y)?, records::join_projector(&px, &py)),
                (
                    "complement a",
                    x.complement(),
                    records::complement_projector(&px),
                ),
                (
                    "complement b",
                    y.complement(),
                    records::complement_projector(&py),
                ),
            ];
            r.columns(&["operation", "event", "projector_agrees"]);
            let mut agree_all = true;
            for (name, ev, p) in cases {
                let agree = (ev.projector() - p).amax() <= records::PROJECTOR_TOL;
                agree_all &= agree;
                r.row(vec![name.into(), event_label(&ev), flag(agree)]);
            }
            r.fail_if(!agree_all);
        }
        RecordsOp::Probability => {
            let tally = match &a.weights {
                Some(w) => FineTally::new(counts(w)?.into_iter().map(BigUint::from).collect())?,
                None => FineTally::even(a.universe)?,
            };
            let ev = RecordEvent::parse(need(&a.event, "event")?, tally.universe())?;
            let p = records::event_probability(&tally, &ev)?;
            r.field("event", event_label(&ev))
                .field("probability", frac(&p));
            r.columns(&["k", "cells", "conditional"]);
            for k in 0..tally.universe() {
                r.row(vec![
                    (k + 1).to_string(),
                    tally.counts()[k].to_string(),
                    frac(&records::conditional(&ev, k)?),
                ]);
            }
        }
        RecordsOp::Upsilon => {
            let c = counts(need(&a.weights, "weights")?)?;
            let total: u64 = c.iter().sum();
            let amps: Vec<C64> = c
                .iter()
                .map(|&x| C64::new((x as f64 / total as f64).sqrt(), 0.0))
                .collect();
            let part = parse::partition(need(&a.partition, "partition")?, c.len())?;
            let ups = records::build_upsilon(&amps, &part)?;
            let read = records::coarse_from_upsilon(&ups, a.mmax.unwrap_or(total))?;
            let tally = FineTally::new(c.iter().map(|&x| BigUint::from(x)).collect())?;
            r.field("dims", report::list(ups.dims())).columns(&[
                "cell",
                "members",
                "p_records",
                "p_count",
            ]);
            let mut agree = true;
            for (i, (cell, p)) in part.iter().zip(&read).enumerate() {
                let direct = records::event_probability(&tally, cell)?;
                agree &= *p == direct;
                r.row(vec![
                    (i + 1).to_string(),
                    event_label(cell),
                    frac(p),
                    frac(&direct),
                ]);
            }
            r.fail_if(!agree);
        }
        RecordsOp::Recursion => {
            let ev = RecordEvent::parse(need(&a.event, "event")?, a.universe)?;
            let p = records::equal_cell_recursion(a.universe, ev.len())?;
            let direct = records::event_probability(&FineTally::even(a.universe)?, &ev)?;
            r.field("event", event_label(&ev))
                .field("p_recursion", frac(&p))
                .field("p_count", frac(&direct));
            r.fail_if(p != direct);
        }
    }
    Ok(r)
}

fn freq_cmd(a: &FreqArgs, seed: u64) -> Result<Report> {
    let spec = ExperimentSpec::new(a.m, a.big_m, a.runs)?;
    let mut r = Report::new("freq");
    match a.op {
        FreqOp::Distribution => {
            let tally = frequencies::history_counts(&spec);
            let p = frequencies::frequency_distribution(&spec);
            r.field("total", tally.total.to_string())
                .field("deviation", num(frequencies::deviation(&spec)));
            r.columns(&["n", "count", "p", "p_float", "gaussian_approx"]);
            for (n, (c, q)) in tally.counts.iter().zip(&p).enumerate() {
                r.row(vec![
                    n.to_string(),
                    c.to_string(),
                    frac(q),
                    num(to_f64(q)),
                    num(frequencies::gaussian_approx(&spec, n as f64)),
                ]);
            }
        }
        FreqOp::Maverick => {
            let mass = frequencies::maverick_mass(&spec, a.dr)?;
            let set = frequencies::maverick_set(&spec, a.dr)?;
            r.field("dr", num(a.dr))
                .field("maverick_counts", set.len().to_string())
                .field("mass", frac(&mass))
                .field("mass_float", num(to_f64(&mass)));
        }
        FreqOp::Superensemble => {
            let (_, rep) =
                frequencies::build_superensemble_explicit(&spec, a.samples, seed, a.register)?;
            let tally = frequencies::history_counts(&spec);
            let min_restore = rep
                .swaps
                .iter()
                .map(|s| s.restoration_fidelity)
                .fold(1.0, f64::min);
            let checked = rep.swaps.iter().filter(|s| s.envariant.is_some()).count();
            let all_env = rep.swaps.iter().all(|s| s.envariant != Some(false));
            r.field("dims", report::list(&rep.dims))
                .field("terms", rep.terms.to_string())
                .field("census_matches", flag(rep.census_matches))
                .field("modulus_deviation", num(rep.modulus_deviation))
                .field("min_restoration_fidelity", num(min_restore))
                .field("dense_envariance_checks", checked.to_string())
                .field("permutation_fidelity", num(rep.permutation_fidelity));
            r.columns(&["n", "census", "count"]);
            for (n, (c, t)) in rep.census.iter().zip(&tally.counts).enumerate() {
                r.row(vec![n.to_string(), c.clone(), t.to_string()]);
            }
            r.fail_if(
                !rep.census_matches
                    || rep.modulus_deviation > 1e-12
                    || min_restore < 1.0 - 1e-12
                    || !all_env
                    || rep.permutation_fidelity < 1.0 - 1e-12,
            );
        }
    }
    Ok(r)
}

fn wave(a: &ContinuumArgs) -> Result<WaveFunction> {
    match &a.table {
        Some(p) => WaveFunction::load_table(p),
        None => WaveFunction::parse(&a.psi),
    }
}

fn mesh(a: &ContinuumArgs, psi: &WaveFunction) -> Result<Mesh> {
    match a.adaptive {
        Some(cells) => Mesh::equal_mass(psi, a.x0, a.x1, cells, a.quad),
        None => Mesh::spanning(a.x0, a.x1, a.dx),
    }
}

fn continuum_cmd(a: &ContinuumArgs) -> Result<Report> {
    let mut r = Report::new("continuum");
    if a.op == ContinuumOp::Truncate {
        let seq = match a.sequence.split_once(':') {
            None if a.sequence == "geometric" => CoefficientSequence::geometric(),
            Some(("list", vals)) => {
                let v: Vec<f64> = parse::list(vals, "amplitude")?;
                CoefficientSequence::Finite(v.into_iter().map(|x| C64::new(x, 0.0)).collect())
            }
            _ => return Err(Error::Parse(format!("unknown sequence {:?}", a.sequence))),
        };
        let t = continuum::truncate(&seq, a.delta)?;
        r.field("kept", t.kept.to_string())
            .field("delta_sq", num(t.delta_sq));
        r.columns(&["k", "p", "conditional"]);
        for (k, (p, c)) in t.probs.iter().zip(&t.conditional).enumerate() {
            r.row(vec![(k + 1).to_string(), num(*p), num(*c)]);
        }
        return Ok(r);
    }
    let psi = wave(a)?;
    let m = mesh(a, &psi)?;
    let d = continuum::discretize(&psi, &m, a.quad)?;
    r.field("cells", m.cells().to_string())
        .field("quad_points", a.quad.to_string())
        .field("remainder_sq", num(d.remainder_sq));
    let edges = m.edges();
    match a.op {
        ContinuumOp::Discretize => {
            let cross = continuum::cross_term(&d, &psi, 2 * a.quad);
            r.field("cross_term_abs", num(cross.norm()));
            r.columns(&["cell", "left", "right", "psi", "p"]);
            for (k, (psi_k, p)) in d.psi.iter().zip(d.cell_probabilities()).enumerate() {
                r.row(vec![
                    (k + 1).to_string(),
                    num(edges[k]),
                    num(edges[k + 1]),
                    complex(*psi_k),
                    num(p),
                ]);
            }
        }
        ContinuumOp::Interval => {
            let (x1, x2) = parse::pair(&a.interval, "interval")?;
            let ip = continuum::interval_probability(&d, x1, x2)?;
            r.field("interval", format!("[{}, {})", num(x1), num(x2)))
                .field("probability", num(ip.probability))
                .field("approximate", flag(ip.approximate));
        }
        ContinuumOp::Born => {
            let fold = a
                .fold
                .unwrap_or_else(|| continuum::default_fold_below(a.mmax));
            let b = continuum::born_continuum(&d, a.mmax, fold)?;
            r.field("M", b.result.weights.total().to_string())
                .field("rationalization_error", num(b.result.rationalization_error))
                .field("folded_cells", b.folded.len().to_string())
                .field("rest", b.rest.as_ref().map_or("none".into(), frac))
                .field("max_gap", num(b.max_gap()));
            r.columns(&["cell", "left", "p_pipeline", "p_direct"]);
            for (k, (p, direct)) in b.probs.iter().zip(&b.direct).enumerate() {
                r.row(vec![
                    (k + 1).to_string(),
                    num(edges[k]),
                    frac(p),
                    num(*direct),
                ]);
            }
        }
        ContinuumOp::Truncate => unreachable!("handled above"),
    }
    Ok(r)
}
