use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use epn_core::exact::{parse_rational, rational_from_i64, Rational};
use epn_core::hamiltonians::{build_pentadiagonal_special, pentadiagonal_couplings, HamiltonianMatrix, ModelFamily};
use epn_core::matrix::{Matrix, Number};
use epn_core::metric::{corridor_sweep, metric_basis, metric_from_left_eigenvectors, sweep_to_csv, KappaPolicy};
use epn_core::spectral::{
    eigen, find_ep, jordan_structure, local_jordan_structure, transition_matrix, JordanStructure, DEFAULT_TOL,
};
use epn_core::symbols::{
    classification_table, enumerate_decompositions, table_to_csv, table_to_text, Decomposition, SequenceReport,
    SequenceVariant,
};
use epn_core::{EpnError, Result};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "epn", version, about = "Exceptional-point Hamiltonians: construction, spectra, Jordan and metric structure")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,

    /// Write to this file instead of stdout
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    /// Relative tolerance for ranks, reality and degeneracy tests
    #[arg(long, default_value_t = DEFAULT_TOL, global = true)]
    tol: f64,

    #[arg(long, value_enum, default_value_t = BackendChoice::Auto, global = true)]
    backend: BackendChoice,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendChoice {
    /// Exact whenever every coupling lies in Q(√2, √3)
    Auto,
    Exact,
    Float,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Variant {
    A,
    B,
    C,
}

#[derive(Subcommand)]
enum Command {
    /// Scenario counts a(N), or the even/odd subsequences b(J), c(J)
    Sequence {
        #[arg(long, value_enum, default_value_t = Variant::A)]
        variant: Variant,
        /// Largest N for a(N), largest J for b(J) and c(J)
        #[arg(long, alias = "max-j")]
        max_n: Option<usize>,
    },
    /// Every decomposition of D(N), one label per line
    Decompose {
        #[arg(long)]
        n: usize,
        /// Only decompositions with more than one component
        #[arg(long)]
        anomalous: bool,
    },
    /// Classification table of the clustered decompositions up to N
    Table {
        #[arg(long, default_value_t = 8)]
        n_max: usize,
    },
    /// Emit a Hamiltonian matrix
    Build {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        coupling: CouplingArgs,
    },
    /// Eigenvalues, reality flag and minimal gap
    Spectrum {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        coupling: CouplingArgs,
    },
    /// Locate the exceptional point by bisection on spectral reality
    Ep {
        #[command(flatten)]
        model: ModelArgs,
        /// Bracket start, native coupling (default: half the EP value)
        #[arg(long)]
        lo: Option<f64>,
        /// Bracket end, native coupling (default: 1.5 times the EP value)
        #[arg(long)]
        hi: Option<f64>,
        /// Width at which the bisection stops
        #[arg(long, default_value_t = 1e-9)]
        ep_tol: f64,
    },
    /// Jordan block sizes at an eigenvalue
    Jordan {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        coupling: CouplingArgs,
        /// Eigenvalue to analyse (default: the model's shift)
        #[arg(long, allow_hyphen_values = true)]
        eta: Option<String>,
        /// Allow eigenvalues that carry only part of the spectrum
        #[arg(long)]
        local: bool,
    },
    /// Transition matrix Q with HQ = QJ
    Qmatrix {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        coupling: CouplingArgs,
        #[arg(long, allow_hyphen_values = true)]
        eta: Option<String>,
    },
    /// Metric operator built from left eigenvectors, or the full metric basis
    Metric {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        coupling: CouplingArgs,
        /// Per-level weights, comma separated (default: all 1)
        #[arg(long, value_delimiter = ',')]
        kappa: Option<Vec<f64>>,
        /// Emit a basis of all symmetric solutions instead
        #[arg(long)]
        basis: bool,
    },
    /// Spectrum and metric indicators along a grid of couplings
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        /// Grid start, in t
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        /// Grid end, in t
        #[arg(long, default_value_t = 0.99)]
        to: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        /// Read --from/--to in the model's native coupling (g for the toy)
        #[arg(long)]
        native: bool,
        #[arg(long, value_delimiter = ',')]
        kappa: Option<Vec<f64>>,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Direct sum over a label such as 4x2,3x2
    #[arg(long)]
    decomposition: Option<String>,
    /// Expected dimension for --decomposition
    #[arg(long)]
    n: Option<usize>,
    /// A single oscillator block of this size
    #[arg(long)]
    tao: Option<usize>,
    /// Scale of the --tao block
    #[arg(long, default_value = "1")]
    scale: String,
    /// The seven-level toy model (shift 7, coupling g = 2t)
    #[arg(long)]
    toy: bool,
    /// The pentadiagonal parity-split model of this size
    #[arg(long)]
    pentadiagonal: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    shift: Option<String>,
}

#[derive(Args)]
struct CouplingArgs {
    /// Coupling t, exact rational or decimal (default 1, the EP)
    #[arg(long, conflicts_with = "g")]
    t: Option<String>,
    /// Native coupling (g = 2t for the toy)
    #[arg(long)]
    g: Option<String>,
}

enum Model {
    Family(ModelFamily),
    Pentadiagonal(usize),
}

impl Model {
    fn from_args(a: &ModelArgs) -> Result<Self> {
        let chosen = [a.decomposition.is_some(), a.tao.is_some(), a.toy, a.pentadiagonal.is_some()];
        if chosen.iter().filter(|&&c| c).count() != 1 {
            return Err(EpnError::Domain(
                "choose exactly one model: --decomposition, --tao, --toy or --pentadiagonal".into(),
            ));
        }
        let shift = a.shift.as_deref().map(parse_rational).transpose()?;
        if a.toy {
            if shift.is_some() {
                return Err(EpnError::Domain("the toy model has its shift fixed at 7".into()));
            }
            return Ok(Model::Family(ModelFamily::toy7()));
        }
        if let Some(n) = a.pentadiagonal {
            if shift.is_some() {
                return Err(EpnError::Domain("the pentadiagonal model has no shift".into()));
            }
            return Ok(Model::Pentadiagonal(n));
        }
        let shift = shift.unwrap_or_else(|| rational_from_i64(0));
        if let Some(n) = a.tao {
            return Ok(Model::Family(ModelFamily::tao(n, parse_rational(&a.scale)?, shift)?));
        }
        let label = a.decomposition.as_deref().unwrap_or_default();
        let dec = match a.n {
            Some(n) => Decomposition::parse_for(label, n)?,
            None => Decomposition::parse(label)?,
        };
        Ok(Model::Family(ModelFamily::direct_sum(dec, shift)))
    }

    fn family(&self) -> Result<&ModelFamily> {
        match self {
            Model::Family(f) => Ok(f),
            Model::Pentadiagonal(_) => Err(EpnError::Domain("the pentadiagonal model is not a one-parameter family".into())),
        }
    }

    fn shift(&self) -> Rational {
        match self {
            Model::Family(f) => f.shift().clone(),
            Model::Pentadiagonal(_) => rational_from_i64(0),
        }
    }

    /// Coupling `t` from `--t` or the native `--g`, exactly.
    fn coupling(&self, c: &CouplingArgs) -> Result<Rational> {
        match (&c.t, &c.g) {
            (Some(t), _) => parse_rational(t),
            (None, Some(g)) => {
                let per_t = match self {
                    Model::Family(f) => f.to_native(1.0),
                    Model::Pentadiagonal(_) => 1.0,
                };
                Ok(parse_rational(g)? / rational_from_i64(per_t as i64))
            }
            (None, None) => Ok(rational_from_i64(1)),
        }
    }

    /// The member at `t`, continued on the float backend beyond `t = 1`.
    fn matrix(&self, t: &Rational) -> Result<Matrix> {
        if *t > rational_from_i64(1) {
            let t = Number::rational(t.clone()).to_f64();
            return self.family()?.continued(t);
        }
        let t = Number::rational(t.clone());
        let h: HamiltonianMatrix = match self {
            Model::Family(f) => f.at(&t)?,
            Model::Pentadiagonal(n) => build_pentadiagonal_special(*n, &pentadiagonal_couplings(*n, &t)?)?,
        };
        Ok(h.into_matrix())
    }
}

fn apply_backend(m: Matrix, choice: BackendChoice) -> Result<Matrix> {
    match (choice, &m) {
        (BackendChoice::Float, _) => Ok(m.to_float()),
        (BackendChoice::Exact, Matrix::Float(_)) => Err(EpnError::Backend(
            "the couplings need radicals outside Q(√2, √3); use --backend float or auto".into(),
        )),
        _ => Ok(m),
    }
}

fn eta_for(m: &Matrix, eta: Option<&str>, model: &Model) -> Result<Number> {
    let q = match eta {
        Some(s) => parse_rational(s)?,
        None => model.shift(),
    };
    let n = Number::rational(q);
    Ok(if matches!(m, Matrix::Float(_)) { n.to_float() } else { n })
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn f17(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.16e}")
    }
}

fn matrix_csv(m: &Matrix) -> String {
    let f = m.to_f64();
    let mut out = String::new();
    for i in 0..f.nrows() {
        let row: Vec<String> = (0..f.ncols()).map(|j| f17(f[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn jordan_text(js: &JordanStructure) -> String {
    let blocks: Vec<String> = js.block_sizes.iter().map(usize::to_string).collect();
    format!("eta = {}\nblocks = {}\nK = {}\n", js.eta, blocks.join("+"), js.k())
}

fn run(cli: &Cli) -> Result<String> {
    let fmt = cli.format;
    let tol = cli.tol;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(EpnError::Domain(format!("--tol must lie in (0, 1), got {tol}")));
    }
    match &cli.command {
        Command::Sequence { variant, max_n } => {
            let (v, default, name, index) = match variant {
                Variant::A => (SequenceVariant::A, 17, "a", "N"),
                Variant::B => (SequenceVariant::B, 14, "b", "J"),
                Variant::C => (SequenceVariant::C, 12, "c", "J"),
            };
            let report = SequenceReport::compute(v, max_n.unwrap_or(default))?;
            Ok(match fmt {
                Format::Json => json_text(&serde_json::to_value(&report).expect("serializable")),
                Format::Csv => {
                    let mut s = format!("{index},{name}\n");
                    for (i, x) in &report.values {
                        s += &format!("{i},{x}\n");
                    }
                    s
                }
                Format::Text => report.values.iter().map(|(i, x)| format!("{name}({i}) = {x}\n")).collect(),
            })
        }
        Command::Decompose { n, anomalous } => {
            let decs = enumerate_decompositions(*n, *anomalous)?;
            Ok(match fmt {
                Format::Json => json_text(&Value::Array(
                    decs.iter()
                        .map(|d| json!({"label": d.label(), "K": d.k(), "partition": d.partition_label()}))
                        .collect(),
                )),
                Format::Csv => {
                    let mut s = String::from("label,K,partition\n");
                    for d in &decs {
                        s += &format!("\"{}\",{},{}\n", d.label(), d.k(), d.partition_label());
                    }
                    s
                }
                Format::Text => decs.iter().map(|d| d.label() + "\n").collect(),
            })
        }
        Command::Table { n_max } => {
            let rows = classification_table(*n_max)?;
            Ok(match fmt {
                Format::Json => json_text(&serde_json::to_value(&rows).expect("serializable")),
                Format::Csv => table_to_csv(&rows)?,
                Format::Text => table_to_text(&rows),
            })
        }
        Command::Build { model, coupling } => {
            let model = Model::from_args(model)?;
            let m = apply_backend(model.matrix(&model.coupling(coupling)?)?, cli.backend)?;
            Ok(match fmt {
                Format::Json => json_text(&m.to_json()),
                Format::Csv => matrix_csv(&m),
                Format::Text => m.to_string(),
            })
        }
        Command::Spectrum { model, coupling } => {
            let model = Model::from_args(model)?;
            let m = apply_backend(model.matrix(&model.coupling(coupling)?)?, cli.backend)?;
            let r = eigen(&m, tol)?;
            Ok(match fmt {
                Format::Json => json_text(&r.to_json()),
                Format::Csv => {
                    let mut s = String::from("re,im\n");
                    for e in &r.eigenvalues {
                        s += &format!("{},{}\n", f17(e.re), f17(e.im));
                    }
                    s
                }
                Format::Text => {
                    let mut s: String = r
                        .eigenvalues
                        .iter()
                        .map(|e| if e.im == 0.0 { format!("{:.12}\n", e.re) } else { format!("{:.12} {:+.12}i\n", e.re, e.im) })
                        .collect();
                    s += &format!("real: {}\nmin gap: {:.6e}\n", r.is_real, r.min_gap);
                    s
                }
            })
        }
        Command::Ep { model, lo, hi, ep_tol } => {
            let model = Model::from_args(model)?;
            let fam = model.family()?;
            let at_ep = fam.to_native(1.0);
            let bracket = (lo.unwrap_or(0.5 * at_ep), hi.unwrap_or(1.5 * at_ep));
            let x = find_ep(fam, bracket, *ep_tol)?;
            let name = fam.native_name();
            Ok(match fmt {
                Format::Json => json_text(&json!({"coupling": name, "critical": x, "t": fam.from_native(x)})),
                Format::Csv => format!("coupling,critical\n{name},{}\n", f17(x)),
                Format::Text => format!("{name}_EP = {x:.12}\n"),
            })
        }
        Command::Jordan { model, coupling, eta, local } => {
            let model = Model::from_args(model)?;
            let m = apply_backend(model.matrix(&model.coupling(coupling)?)?, cli.backend)?;
            let eta = eta_for(&m, eta.as_deref(), &model)?;
            let js = if *local { local_jordan_structure(&m, &eta, tol)? } else { jordan_structure(&m, &eta, tol)? };
            Ok(match fmt {
                Format::Json => json_text(&js.to_json()),
                Format::Csv => {
                    let blocks: Vec<String> = js.block_sizes.iter().map(usize::to_string).collect();
                    format!("eta,blocks\n{},{}\n", js.eta, blocks.join(" "))
                }
                Format::Text => jordan_text(&js),
            })
        }
        Command::Qmatrix { model, coupling, eta } => {
            let model = Model::from_args(model)?;
            let m = apply_backend(model.matrix(&model.coupling(coupling)?)?, cli.backend)?;
            let eta = eta_for(&m, eta.as_deref(), &model)?;
            let js = jordan_structure(&m, &eta, tol)?;
            let tm = transition_matrix(&m, &js, tol)?;
            Ok(match fmt {
                Format::Json => json_text(&json!({
                    "q": tm.q.to_json(),
                    "jordan": tm.jordan.to_json(),
                    "residual": tm.residual,
                    "det_abs": tm.det_abs,
                })),
                Format::Csv => matrix_csv(&tm.q),
                Format::Text => format!(
                    "{}{}residual = {:e}\n|det Q| = {:e}\n",
                    jordan_text(&tm.jordan),
                    tm.q,
                    tm.residual,
                    tm.det_abs
                ),
            })
        }
        Command::Metric { model, coupling, kappa, basis } => {
            let model = Model::from_args(model)?;
            let m = apply_backend(model.matrix(&model.coupling(coupling)?)?, cli.backend)?;
            if *basis {
                let b = metric_basis(&m, tol)?;
                return Ok(match fmt {
                    Format::Json => json_text(&json!({
                        "dimension": b.len(),
                        "basis": b.iter().map(|x| Matrix::Float(x.clone()).to_json()).collect::<Vec<_>>(),
                    })),
                    Format::Csv => b.iter().map(|x| matrix_csv(&Matrix::Float(x.clone())) + "\n").collect(),
                    Format::Text => {
                        let mut s = format!("dimension = {}\n", b.len());
                        for x in &b {
                            s += &format!("\n{}", Matrix::Float(x.clone()));
                        }
                        s
                    }
                });
            }
            let weights = kappa.clone().unwrap_or_else(|| vec![1.0; m.dim()]);
            let op = metric_from_left_eigenvectors(&m, &weights)?;
            let min = op.min_eigenvalue();
            let theta = Matrix::Float(op.theta.clone());
            Ok(match fmt {
                Format::Json => json_text(&json!({
                    "theta": theta.to_json(),
                    "weights": op.weights,
                    "residual": op.residual,
                    "min_eigenvalue": min,
                })),
                Format::Csv => matrix_csv(&theta),
                Format::Text => format!("{theta}residual = {:e}\nmin eigenvalue = {min:e}\n", op.residual),
            })
        }
        Command::Sweep { model, from, to, steps, native, kappa } => {
            let model = Model::from_args(model)?;
            let fam = model.family()?;
            if *steps < 1 {
                return Err(EpnError::Domain("--steps must be at least 1".into()));
            }
            let (a, b) = if *native { (fam.from_native(*from), fam.from_native(*to)) } else { (*from, *to) };
            let grid: Vec<f64> = if *steps == 1 {
                vec![a]
            } else {
                (0..*steps).map(|i| a + (b - a) * i as f64 / (*steps - 1) as f64).collect()
            };
            let policy = kappa.clone().map_or(KappaPolicy::Unit, KappaPolicy::Fixed);
            let rows = corridor_sweep(fam, &grid, &policy)?;
            Ok(match fmt {
                Format::Json => json_text(&Value::Array(
                    rows.iter()
                        .map(|r| {
                            json!({
                                "t": r.t,
                                "native": r.native,
                                "eigenvalues": r.eigenvalues.iter().map(|e| json!([e.re, e.im])).collect::<Vec<_>>(),
                                "min_gap": r.min_gap,
                                "theta_min_eig": r.theta_min_eig,
                                "is_real": r.is_real,
                                "error": r.error,
                            })
                        })
                        .collect(),
                )),
                Format::Csv | Format::Text => sweep_to_csv(&rows)?,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let written = match &cli.output {
                Some(path) => fs::write(path, out),
                None => {
                    print!("{out}");
                    Ok(())
                }
            };
            match written {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: cannot write output: {e}");
                    ExitCode::from(3)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
