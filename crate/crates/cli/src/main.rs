mod report;

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use enlab_core::compiler::CompileError;
use enlab_core::conjecture::{ConjectureError, PsiOptions, TnOptions};
use enlab_core::ensystem::{self, SystemError};
use enlab_core::polynomial::{enumerate_quadratic_solutions, quadratic_height_bound, PolyError};
use enlab_core::solver::{count_in_box_with, solve_in_box_with, SearchError};
use enlab_core::{
    compile, decide_finiteness, enumerate_tn, lift_to_integers, parse_polynomial, solution_count_bound, verify_psi,
    EnSystem, Int, PsiOutcome, QuadraticCoeffs, SearchBox, SearchConfig, Verdict,
};
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use report::{canonical_json, RunRecord};

#[derive(Parser)]
#[command(name = "enlab", version, about = "Systems of x = 1, x + y = z, x * y = z equations over the integers")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Serialize)]
struct Global {
    /// Output format; text is for reading only.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads for partitioned searches.
    #[arg(long, global = true, env = "ENLAB_WORKERS", default_value_t = 1,
          value_parser = clap::value_parser!(u16).range(1..))]
    workers: u16,
    /// Record completed partitions in this JSONL file.
    #[arg(long, global = true)]
    checkpoint: Option<PathBuf>,
    /// Skip partitions already recorded in the checkpoint file.
    #[arg(long, global = true, requires = "checkpoint")]
    resume: bool,
    /// Maximum number of search nodes before giving up.
    #[arg(long, global = true)]
    node_budget: Option<u64>,
    /// Append a run record (parameters, version, wall time, digest) to this file.
    #[arg(long, global = true)]
    record: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Compile a polynomial equation D = 0 into an equivalent system.
    Compile {
        /// Polynomial, e.g. "x1*x2 - 1" (read from stdin when absent).
        poly: Option<String>,
    },
    /// List all solutions of a system inside a box.
    Solve(BoxArgs),
    /// Count the solutions of a system inside a box.
    Count(BoxArgs),
    /// Decide whether a system has finitely many integer solutions.
    DecideFinite {
        /// System file, JSON or line format (stdin when absent or "-").
        system: Option<PathBuf>,
        /// Search for escaping solutions up to this height [default: 2^(2^n)].
        #[arg(long)]
        escape_radius: Option<Int>,
    },
    /// Generate a named system.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Replace every x_i = 1 so that the zero tuple becomes a solution.
    Tilde {
        system: Option<PathBuf>,
    },
    /// The maximal system satisfied by a tuple.
    Sat {
        #[arg(required = true, allow_negative_numbers = true)]
        values: Vec<Int>,
    },
    /// Norm of a polynomial: max(variables, degree, largest |coefficient|).
    Norm {
        poly: Option<String>,
    },
    /// Height bound 20*M^4 for a*x^2 + b*xy + c*y^2 + d*x + e*y + f = 0.
    QuadBound {
        #[arg(num_args = 6, allow_negative_numbers = true, value_names = ["A", "B", "C", "D", "E", "F"])]
        coeffs: Vec<i64>,
    },
    /// Integer solutions of a two-variable quadratic within its height bound.
    QuadSolve {
        #[arg(num_args = 6, allow_negative_numbers = true, value_names = ["A", "B", "C", "D", "E", "F"])]
        coeffs: Vec<i64>,
    },
    /// Lift variables from naturals to integers with four squares each.
    Lift {
        poly: Option<String>,
        /// 1-based variables ranging over the naturals, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        nat: Vec<usize>,
    },
    /// Exhaustively check the growth statement over the annulus for n.
    VerifyPsi {
        #[arg(long)]
        n: usize,
        /// Witness box radius [default: 4 * |x_1| per tuple].
        #[arg(long)]
        y_budget: Option<Int>,
        /// Largest n accepted.
        #[arg(long, default_value_t = 3)]
        max_n: usize,
        /// Allow n >= 3, which takes a long time.
        #[arg(long)]
        long_running: bool,
    },
    /// Enumerate the tuples solving some system with finitely many solutions.
    EnumerateTn {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        escape_radius: Option<Int>,
        /// Allow n > 3, where results rely on the unproven height bound.
        #[arg(long)]
        conditional: bool,
    },
    /// Upper bound (1 + 2*beta)^n on the number of tuples of height <= beta.
    CountBound {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        beta: String,
    },
}

#[derive(Args, Serialize)]
struct BoxArgs {
    /// System file, JSON or line format (stdin when absent or "-").
    system: Option<PathBuf>,
    /// Search |x_i| <= radius.
    #[arg(long, default_value_t = 8)]
    radius: Int,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum GenKind {
    /// x_i * x_i = x_i for every i.
    Idempotent {
        #[arg(long)]
        n: usize,
    },
    /// The system whose largest solution reaches 2^(2^(n-1)).
    Obs2 {
        #[arg(long)]
        n: usize,
    },
    /// Extend a base system to n variables so that x2 = n in every solution.
    Ladder {
        #[arg(long)]
        n: usize,
        /// Base system file [default: no equations over 2 variables].
        #[arg(long)]
        base: Option<PathBuf>,
    },
    /// A random system, for test corpora.
    RandomSystem {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        max_eqs: usize,
    },
}

/// A failed run and its exit status.
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn domain(msg: impl ToString) -> Self {
        Failure { code: 1, msg: msg.to_string() }
    }
}

impl From<SystemError> for Failure {
    fn from(e: SystemError) -> Self {
        Failure::domain(e)
    }
}

impl From<PolyError> for Failure {
    fn from(e: PolyError) -> Self {
        Failure::domain(e)
    }
}

impl From<CompileError> for Failure {
    fn from(e: CompileError) -> Self {
        Failure::domain(e)
    }
}

impl From<SearchError> for Failure {
    fn from(e: SearchError) -> Self {
        let code = if matches!(e, SearchError::BudgetExceeded { .. }) { 3 } else { 1 };
        Failure { code, msg: e.to_string() }
    }
}

impl From<ConjectureError> for Failure {
    fn from(e: ConjectureError) -> Self {
        match e {
            ConjectureError::Search(s) => s.into(),
            ConjectureError::Incomplete { .. } => Failure { code: 3, msg: e.to_string() },
            _ => Failure::domain(e),
        }
    }
}

/// A result in both renderings, plus the exit status to report.
struct Output {
    json: Value,
    text: String,
    code: u8,
}

impl Output {
    fn ok(json: Value, text: String) -> Self {
        Output { json, text, code: 0 }
    }
}

fn read_stdin() -> Result<String, Failure> {
    let mut s = String::new();
    std::io::stdin()
        .read_to_string(&mut s)
        .map_err(|e| Failure::domain(format!("cannot read standard input: {e}")))?;
    Ok(s)
}

fn read_system(path: &Option<PathBuf>) -> Result<EnSystem, Failure> {
    let text = match path {
        Some(p) if p.as_os_str() != "-" => std::fs::read_to_string(p)
            .map_err(|e| Failure::domain(format!("cannot read {}: {e}", p.display())))?,
        _ => read_stdin()?,
    };
    Ok(ensystem::read_system(&text)?)
}

fn read_poly(arg: &Option<String>) -> Result<enlab_core::Polynomial, Failure> {
    let text = match arg {
        Some(t) if t != "-" => t.clone(),
        _ => read_stdin()?,
    };
    Ok(parse_polynomial(text.trim())?)
}

fn tuple(t: &[Int]) -> String {
    let parts: Vec<String> = t.iter().map(|v| v.to_string()).collect();
    format!("({})", parts.join(", "))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results always serialize")
}

fn system_output(sys: &EnSystem) -> Output {
    Output::ok(to_value(sys), format!("# n = {}\n{sys}", sys.n()))
}

fn search_config(g: &Global) -> SearchConfig {
    let mut cfg = SearchConfig::with_workers(g.workers as usize);
    if let Some(b) = g.node_budget {
        cfg.node_budget = b;
    }
    cfg.checkpoint = g.checkpoint.clone();
    cfg.resume = g.resume;
    cfg
}

fn run(g: &Global, cmd: &Command) -> Result<Output, Failure> {
    let cfg = search_config(g);
    match cmd {
        Command::Compile { poly } => {
            let d = read_poly(poly)?;
            let c = compile(&d)?;
            let json: Value = serde_json::from_str(&c.to_json()).expect("compiled JSON is valid");
            let text = format!("# {d} = 0\n# n = {}, q = x{}\n{}", c.n(), c.q, c.system);
            Ok(Output::ok(json, text))
        }
        Command::Solve(b) => {
            let sys = read_system(&b.system)?;
            let set = solve_in_box_with(&sys, &SearchBox::new(b.radius), &cfg)?;
            let mut text = format!("{} solutions with |x_i| <= {}\n", set.solutions.len(), b.radius);
            for s in &set.solutions {
                text.push_str(&tuple(s));
                text.push('\n');
            }
            Ok(Output::ok(to_value(&set), text))
        }
        Command::Count(b) => {
            let sys = read_system(&b.system)?;
            let count = count_in_box_with(&sys, &SearchBox::new(b.radius), &cfg)?;
            let text = format!("{count} solutions with |x_i| <= {}", b.radius);
            Ok(Output::ok(json!({"count": count, "box": SearchBox::new(b.radius)}), text))
        }
        Command::DecideFinite { system, escape_radius } => {
            let sys = read_system(system)?;
            let v = decide_finiteness(&sys, *escape_radius, &cfg)?;
            let mut text = match &v.verdict {
                Verdict::InfiniteCertified { witness } => {
                    format!("infinite: {} exceeds 2^(2^{})", tuple(witness), sys.n() - 1)
                }
                Verdict::FiniteUnderConjecture { solutions } => {
                    let mut t = format!("finite: {} solutions\n", solutions.len());
                    for s in solutions {
                        t.push_str(&tuple(s));
                        t.push('\n');
                    }
                    t
                }
                Verdict::Unknown { reason } => format!("unknown: {reason}"),
            };
            if v.conjecture_conditional {
                text.push_str("\n(conditional on the height bound)");
            }
            let code = if matches!(v.verdict, Verdict::Unknown { .. }) { 3 } else { 0 };
            Ok(Output { json: to_value(&v), text, code })
        }
        Command::Gen { kind } => {
            let sys = match kind {
                GenKind::Idempotent { n } => ensystem::gen_idempotent(*n)?,
                GenKind::Obs2 { n } => ensystem::gen_obs2(*n)?,
                GenKind::Ladder { n, base } => {
                    let base = match base {
                        Some(_) => read_system(base)?,
                        None => EnSystem::empty(2),
                    };
                    ensystem::gen_ladder(&base, *n)?
                }
                GenKind::RandomSystem { n, seed, max_eqs } => {
                    if *n == 0 {
                        return Err(Failure::domain("random system needs n >= 1"));
                    }
                    let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                    ensystem::random_system(&mut rng, *n, *max_eqs)
                }
            };
            Ok(system_output(&sys))
        }
        Command::Tilde { system } => Ok(system_output(&ensystem::tilde_transform(&read_system(system)?))),
        Command::Sat { values } => Ok(system_output(&ensystem::sat_system(values))),
        Command::Norm { poly } => {
            let d = read_poly(poly)?;
            let norm = d.norm();
            Ok(Output::ok(json!({"polynomial": d, "norm": norm}), norm.to_string()))
        }
        Command::QuadBound { coeffs } => {
            let q = quad(coeffs)?;
            let b = quadratic_height_bound(&q)?;
            Ok(Output::ok(json!({"coefficients": q, "bound": b.to_string()}), b.to_string()))
        }
        Command::QuadSolve { coeffs } => {
            let q = quad(coeffs)?;
            let r = enumerate_quadratic_solutions(&q)?;
            let mut text = if r.finite {
                format!("{} solutions with max(|x|, |y|) <= {}\n", r.solutions.len(), r.bound)
            } else {
                let (x, y) = r.escape_witness.expect("infinite results carry a witness");
                format!("infinitely many: ({x}, {y}) lies beyond the bound {}\n", r.bound)
            };
            for (x, y) in &r.solutions {
                text.push_str(&format!("({x}, {y})\n"));
            }
            Ok(Output::ok(to_value(&r), text))
        }
        Command::Lift { poly, nat } => {
            let w = read_poly(poly)?;
            let r = lift_to_integers(&w, nat)?;
            let mut text = format!("{} = 0\n", r.polynomial);
            for (v, sq) in &r.var_map {
                text.push_str(&format!(
                    "# x{v} = x{}^2 + x{}^2 + x{}^2 + x{}^2\n",
                    sq[0], sq[1], sq[2], sq[3]
                ));
            }
            Ok(Output::ok(to_value(&r), text))
        }
        Command::VerifyPsi { n, y_budget, max_n, long_running } => {
            let opts = PsiOptions {
                y_budget: *y_budget,
                max_n: *max_n,
                long_running: *long_running,
                search: cfg,
            };
            let r = verify_psi(*n, &opts)?;
            let mut text = format!(
                "n = {}: {} of {} annulus tuples checked ({} < |x_1| <= {}), {} relation signatures\n",
                r.n, r.tuples_checked, r.expected_tuples, r.inner, r.outer, r.distinct_signatures
            );
            let code = match &r.outcome {
                PsiOutcome::Confirmed => {
                    text.push_str("confirmed");
                    0
                }
                PsiOutcome::Unresolved { stuck } => {
                    text.push_str(&format!("unresolved: {} tuples without a witness\n", stuck.len()));
                    for s in stuck {
                        text.push_str(&tuple(s));
                        text.push('\n');
                    }
                    3
                }
            };
            Ok(Output { json: to_value(&r), text, code })
        }
        Command::EnumerateTn { n, escape_radius, conditional } => {
            let opts = TnOptions {
                escape_radius: *escape_radius,
                allow_conditional: *conditional,
                search: cfg,
            };
            let r = enumerate_tn(*n, &opts)?;
            let mut text = format!(
                "{} representatives, {} members ({} candidates)\n",
                r.representatives.len(),
                r.members.len(),
                r.candidates_checked
            );
            for rep in &r.representatives {
                text.push_str(&tuple(rep));
                text.push('\n');
            }
            Ok(Output::ok(to_value(&r), text))
        }
        Command::CountBound { n, beta } => {
            let beta = BigUint::from_str(beta)
                .map_err(|_| Failure::domain(format!("beta must be a non-negative integer, got '{beta}'")))?;
            let b = solution_count_bound(*n, &beta)?;
            Ok(Output::ok(json!({"n": n, "beta": beta.to_string(), "bound": b.to_string()}), b.to_string()))
        }
    }
}

fn quad(c: &[i64]) -> Result<QuadraticCoeffs, Failure> {
    let q = QuadraticCoeffs::new(c[0], c[1], c[2], c[3], c[4], c[5]);
    if q.is_zero() {
        return Err(Failure::domain("at least one quadratic coefficient must be nonzero"));
    }
    Ok(q)
}

fn command_name(cmd: &Command) -> String {
    match to_value(cmd) {
        Value::Object(m) => m.keys().next().cloned().unwrap_or_default(),
        Value::String(s) => s,
        _ => String::new(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    match run(&cli.global, &cli.command) {
        Ok(out) => {
            match cli.global.format {
                Format::Json => println!("{}", canonical_json(&out.json)),
                Format::Text => println!("{}", out.text.trim_end()),
            }
            if let Some(path) = &cli.global.record {
                let params = json!({"command": to_value(&cli.command), "workers": cli.global.workers});
                let rec = RunRecord::new(&command_name(&cli.command), params, &out.json, start.elapsed());
                if let Err(e) = rec.append_to(path) {
                    eprintln!("enlab: cannot write run record to {}: {e}", path.display());
                    return ExitCode::from(1);
                }
            }
            ExitCode::from(out.code)
        }
        Err(f) => {
            eprintln!("enlab: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
