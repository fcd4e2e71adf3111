//! `epsilon-lab`: command-line front end for local ε-factors, global product
//! formula and induction checks over P¹, quadratic Gauss sums and the
//! twisted-group transfer suite.
//!
//! Every command prints one JSON report (or writes it to `--json-out`).
//! Reports depend only on the inputs, ℓ and the seed; wall-clock timings go to
//! stderr. Exit codes: 0 pass, 2 mathematical failure, 3 invalid or
//! unsupported input, 4 a summation cap was exceeded.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use epsilon_core::curve::Caps;
use epsilon_core::Error;

use crate::commands::Outcome;

/// Environment variable overriding the default summation cap.
pub const CAP_ENV: &str = "EPSILON_LAB_CAP";

#[derive(Parser, Debug)]
#[command(name = "epsilon-lab", version, about = "Exact local epsilon factors and their global checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Pin the coefficient prime ℓ (must be admissible for the input).
    #[arg(long, global = true)]
    ell: Option<u64>,
    /// Bound on every enumerated sum (points of F_{q^m}, Tate-sum terms).
    #[arg(long, global = true)]
    cap: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    json_out: Option<PathBuf>,
    /// Size of the worker pool (defaults to the number of CPUs).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// ε of a local character for a local 1-form.
    EpsLocal {
        #[arg(long = "char")]
        character: PathBuf,
        #[arg(long)]
        form: PathBuf,
        /// j! (extension by zero), j* (middle extension) or punctual.
        #[arg(long, default_value = "j*")]
        kind: String,
    },
    /// det(Frob | RΓ_c)^{-1} of a sheaf on P¹, with its L-polynomial.
    EpsGlobal {
        #[arg(long)]
        spec: PathBuf,
    },
    /// The product formula for a sheaf on P¹ and a global form ω = r·dt.
    ProductCheck {
        /// Sheaf JSON; defaults to the bundled Gauss-sum sheaf over F_q.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Global form JSON; defaults to dt.
        #[arg(long)]
        omega: Option<PathBuf>,
        /// Field size for the bundled example.
        #[arg(long, default_value_t = 3)]
        q: u64,
        /// Re-check under the next admissible ℓ.
        #[arg(long)]
        second_ell: bool,
    },
    /// λ-factor independence for a cover t = y^e or y^p − y = t.
    InductionCheck {
        #[arg(long)]
        cover: PathBuf,
        #[arg(long)]
        omega: PathBuf,
        /// Upstairs sheaves (one or a list); defaults to a standard family.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Size of the standard upstairs family.
        #[arg(long, default_value_t = 5)]
        count: usize,
    },
    /// The quadratic Gauss sum γ_ψ(c) over F_q.
    Gauss {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        q: u64,
        /// The element c ≠ 0 in the base-p digit encoding.
        #[arg(long)]
        c: u32,
    },
    /// Cocycle, induction and transfer identities on finite groups.
    TwistedCheck {
        /// Group JSON (one or a list); defaults to all bundled groups of order ≤ 24.
        #[arg(long)]
        groups: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 12)]
        exhaustive_order: usize,
        #[arg(long, default_value_t = 100)]
        random_cases: usize,
        #[arg(long, default_value_t = 8)]
        cochain_cases: usize,
    },
    /// Product formula on a seeded random corpus of sheaves and forms.
    Corpus {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long)]
        second_ell: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::EpsLocal { .. } => "eps-local",
            Command::EpsGlobal { .. } => "eps-global",
            Command::ProductCheck { .. } => "product-check",
            Command::InductionCheck { .. } => "induction-check",
            Command::Gauss { .. } => "gauss",
            Command::TwistedCheck { .. } => "twisted-check",
            Command::Corpus { .. } => "corpus",
        }
    }
}

/// The cap from `--cap`, else from the environment, else the defaults.
fn caps(flag: Option<u64>) -> Result<Caps, Error> {
    if let Some(c) = flag {
        return Ok(Caps::uniform(c));
    }
    match std::env::var(CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map(Caps::uniform)
            .map_err(|_| Error::InvalidInput(format!("{CAP_ENV}: {v:?} is not a non-negative integer"))),
        Err(_) => Ok(Caps::default()),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::CapExceeded { .. } => 4,
        Error::InvalidInput(_) | Error::Unsupported(_) | Error::Precision(_) => 3,
        Error::NotInvertible(_) | Error::Internal(_) => 2,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidInput(_) => "invalid_input",
        Error::Unsupported(_) => "unsupported",
        Error::CapExceeded { .. } => "cap_exceeded",
        Error::Precision(_) => "precision",
        Error::NotInvertible(_) => "not_invertible",
        Error::Internal(_) => "internal",
    }
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let caps = caps(cli.cap)?;
    let ell = cli.ell;
    match &cli.command {
        Command::EpsLocal { character, form, kind } => commands::eps_local(character, form, kind, ell, caps),
        Command::EpsGlobal { spec } => commands::eps_global(spec, ell, caps),
        Command::ProductCheck { spec, omega, q, second_ell } => {
            commands::product_check(spec.as_deref(), omega.as_deref(), *q, ell, *second_ell, caps)
        }
        Command::InductionCheck { cover, omega, spec, count } => {
            commands::induction_check(cover, omega, spec.as_deref(), *count, ell, caps)
        }
        Command::Gauss { p, q, c } => commands::gauss(*p, *q, *c, ell),
        Command::TwistedCheck { groups, seed, exhaustive_order, random_cases, cochain_cases } => {
            let opts = epsilon_core::twisted::SuiteOptions {
                seed: *seed,
                exhaustive_order: *exhaustive_order,
                random_cases: *random_cases,
                cochain_cases: *cochain_cases,
            };
            commands::twisted_check(groups.as_deref(), opts, ell)
        }
        Command::Corpus { seed, count, second_ell } => commands::corpus(*seed, *count, ell, *second_ell, caps),
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), String> {
    match &cli.json_out {
        Some(path) => std::fs::write(path, format!("{text}\n")).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(3);
        }
    }
    let name = cli.command.name();
    let start = Instant::now();
    let result = run(&cli);
    eprintln!("timing: {name} took {:.3} s", start.elapsed().as_secs_f64());
    let (value, code) = match result {
        Ok(outcome) => {
            let code = if outcome.pass { 0 } else { 2 };
            (commands::envelope(name, cli.ell, outcome), code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            let value = serde_json::json!({
                "command": name,
                "pass": false,
                "error": { "kind": error_kind(&e), "message": e.to_string() },
            });
            (value, exit_code(&e))
        }
    };
    let text = serde_json::to_string_pretty(&value).expect("reports serialize");
    if let Err(e) = emit(&cli, &text) {
        eprintln!("error: {e}");
        return ExitCode::from(3);
    }
    ExitCode::from(code)
}
