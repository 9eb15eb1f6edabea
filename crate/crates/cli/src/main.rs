//! `lpmln`: exact inference and translation for weighted answer set programs.

mod render;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use lpmln::asp::{emit_asp_text, translate_penalty, translate_reward_ground, AspError};
use lpmln::engine::DEFAULT_ATOM_CAP;
use lpmln::frontends::{bayes_to_lpmln, parse_bayes, problog_to_lpmln};
use lpmln::ground::GroundError;
use lpmln::mln::{aux_mapping, complete, emit_mln_text, tseytin, MlnError};
use lpmln::parser::{parse_problog, parse_query_spec};
use lpmln::{ground, parse_evidence, parse_program, EngineError, Error, HardMode, Program, Reasoner};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Infer,
    /// Print the input as a weighted program, after any frontend compilation.
    EmitLpmln,
    EmitAspPnt,
    EmitAspRwd,
    EmitMln,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    Lpmln,
    Problog,
    Bayes,
}

#[derive(Debug, Parser)]
#[command(name = "lpmln", version, about = "Exact inference and translation for weighted answer set programs")]
struct Args {
    /// Input program.
    #[arg(short = 'i', value_name = "FILE")]
    input: PathBuf,
    /// Evidence: unweighted rules, usually constraints.
    #[arg(short = 'e', value_name = "FILE")]
    evidence: Option<PathBuf>,
    /// Comma-separated query predicates.
    #[arg(short = 'q', value_name = "PREDS")]
    query: Option<String>,
    /// Write output here instead of stdout.
    #[arg(short = 'r', value_name = "FILE")]
    output: Option<PathBuf>,
    /// List every stable model with its probability.
    #[arg(long = "all")]
    all: bool,
    /// Let hard rules be violated (relaxed semantics) and translate them at level 1.
    #[arg(long = "hr")]
    hard_relaxed: bool,
    /// MAP inference (the default).
    #[arg(long = "map")]
    map: bool,
    /// Accepted for compatibility and ignored.
    #[arg(long = "clingo", value_name = "OPTIONS", allow_hyphen_values = true)]
    clingo: Option<String>,
    #[arg(long, value_enum, default_value_t = Mode::Infer)]
    mode: Mode,
    /// Weight multiplier for weak constraints.
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u32).range(1..))]
    scale: u32,
    /// Input syntax; `.bn` files default to bayes.
    #[arg(long = "input-format", value_enum)]
    input_format: Option<InputFormat>,
}

/// A failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

fn cap_code(e: &GroundError) -> u8 {
    match e {
        GroundError::TooLarge { .. } => 2,
        _ => 1,
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Ground(g) => cap_code(g),
        Error::Engine(EngineError::CapExceeded { .. }) => 2,
        Error::Mln(MlnError::Engine(_)) => 2,
        Error::Asp(AspError::Engine(_)) => 2,
        Error::Asp(AspError::Ground(g)) => cap_code(g),
        Error::InconsistentEvidence => 3,
        _ => 1,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::new(exit_code(&e), e.to_string())
    }
}

/// Rewrites the single-dash long flags (`-all`, `-hr`, `-map`, `-clingo`) into clap's `--` form.
fn normalize(args: impl IntoIterator<Item = String>) -> Vec<String> {
    args.into_iter()
        .map(|a| match a.as_str() {
            "-all" | "-hr" | "-map" | "-clingo" => format!("-{a}"),
            _ => a,
        })
        .collect()
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::new(1, format!("{}: {e}", path.display())))
}

fn load_program(path: &Path, format: Option<InputFormat>) -> Result<Program, Failure> {
    let text = read(path)?;
    let at = |e: &dyn std::fmt::Display| Failure::new(1, format!("{}:{e}", path.display()));
    let format = format.unwrap_or(match path.extension().and_then(|e| e.to_str()) {
        Some("bn") => InputFormat::Bayes,
        _ => InputFormat::Lpmln,
    });
    match format {
        InputFormat::Lpmln => parse_program(&text).map_err(|e| at(&e)),
        InputFormat::Problog => {
            let src = parse_problog(&text).map_err(|e| at(&e))?;
            problog_to_lpmln(&src.facts, &src.rules).map_err(|e| Failure::new(1, format!("{}: {e}", path.display())))
        }
        InputFormat::Bayes => {
            let net = parse_bayes(&text).map_err(|e| Failure::new(1, format!("{}: {e}", path.display())))?;
            bayes_to_lpmln(&net).map_err(|e| Failure::new(1, format!("{}: {e}", path.display())))
        }
    }
}

fn atom_cap() -> Result<usize, Failure> {
    match std::env::var("LPMLN_ATOM_CAP") {
        Ok(v) => v.trim().parse().map_err(|_| Failure::new(1, format!("LPMLN_ATOM_CAP: `{v}` is not a number"))),
        Err(_) => Ok(DEFAULT_ATOM_CAP),
    }
}

fn run(args: &Args) -> Result<String, Failure> {
    if args.clingo.is_some() {
        eprintln!("warning: -clingo options are ignored; no external solver is invoked");
    }
    let cap = atom_cap()?;
    let hard_mode = if args.hard_relaxed { HardMode::Relaxed } else { HardMode::Strict };
    let program = load_program(&args.input, args.input_format)?;
    let evidence = match &args.evidence {
        Some(path) => Some(parse_evidence(&read(path)?).map_err(|e| Failure::new(1, format!("{}:{e}", path.display())))?),
        None => None,
    };

    match args.mode {
        Mode::EmitLpmln => return Ok(program.to_string()),
        Mode::EmitAspPnt => {
            let t = translate_penalty(&program, args.scale, args.hard_relaxed).map_err(Error::from)?;
            return Ok(emit_asp_text(&t));
        }
        Mode::EmitAspRwd => {
            let gp = ground(&program).map_err(Error::from)?;
            let t = translate_reward_ground(&gp, args.scale).map_err(Error::from)?;
            return Ok(emit_asp_text(&t));
        }
        Mode::EmitMln => {
            let gp = ground(&program).map_err(Error::from)?;
            let mln = tseytin(&complete(&gp).map_err(Error::from)?);
            if let (Some(out), false) = (&args.output, mln.aux.is_empty()) {
                let mut sidecar = out.clone().into_os_string();
                sidecar.push(".aux");
                std::fs::write(&sidecar, aux_mapping(&mln))
                    .map_err(|e| Failure::new(1, format!("{}: {e}", Path::new(&sidecar).display())))?;
            }
            return Ok(emit_mln_text(&mln));
        }
        Mode::Infer => {}
    }

    let reasoner = Reasoner::new().with_hard_mode(hard_mode).with_cap(cap);
    let query = match &args.query {
        Some(q) => Some(parse_query_spec(q).map_err(|e| Failure::new(1, format!("-q: {e}")))?),
        None => None,
    };
    let has_evidence = evidence.as_ref().is_some_and(|e| !e.is_empty());
    let combined = match &evidence {
        Some(e) => program.merged(e),
        None => program.clone(),
    };
    let no_models = |e: Error| -> Result<String, Failure> {
        match e {
            Error::NoStableModels if has_evidence => Err(Error::InconsistentEvidence.into()),
            Error::NoStableModels => Ok("UNSATISFIABLE\n".to_string()),
            e => Err(e.into()),
        }
    };

    if let (Some(preds), false) = (&query, args.all) {
        let marginals = match &evidence {
            Some(e) => reasoner.conditional(&program, e, preds),
            None => ground(&program).map_err(Error::from).and_then(|gp| reasoner.marginal(&gp, preds)),
        };
        return match marginals {
            Ok(m) => {
                for p in &m.unknown {
                    eprintln!("warning: no atoms of query predicate {p}");
                }
                Ok(render::marginals(&m))
            }
            Err(e) => no_models(e),
        };
    }

    let gp = ground(&combined).map_err(Error::from)?;
    let result = if args.all {
        reasoner
            .distribution(&gp, lpmln::WeightMode::Penalty)
            .map(|d| render::all(&gp, &d, args.scale, hard_mode, query.as_ref().unwrap_or(&BTreeSet::new())))
    } else {
        reasoner.map_estimate(&gp).map(|m| render::map(&gp, &m, args.scale, hard_mode))
    };
    result.or_else(no_models)
}

fn main() -> ExitCode {
    let args = Args::parse_from(normalize(std::env::args()));
    match run(&args) {
        Ok(text) => {
            let written = match &args.output {
                Some(path) => std::fs::write(path, &text).map_err(|e| format!("{}: {e}", path.display())),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            match written {
                Ok(()) => ExitCode::SUCCESS,
                Err(message) => {
                    eprintln!("error: {message}");
                    ExitCode::from(1)
                }
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_dash_long_flags() {
        let args = normalize(["lpmln", "-i", "x", "-all", "-hr", "-q", "a"].map(String::from));
        assert_eq!(args, ["lpmln", "-i", "x", "--all", "--hr", "-q", "a"]);
        let parsed = Args::parse_from(normalize(["lpmln", "-i", "x", "-clingo", "-n 0", "-map"].map(String::from)));
        assert_eq!(parsed.clingo.as_deref(), Some("-n 0"));
        assert!(parsed.map);
    }

    #[test]
    fn scale_must_be_positive() {
        assert!(Args::try_parse_from(["lpmln", "-i", "x", "--scale", "0"]).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::InconsistentEvidence), 3);
        assert_eq!(exit_code(&Error::Engine(EngineError::CapExceeded { cap: 1, size: 2 })), 2);
        assert_eq!(exit_code(&Error::Ground(GroundError::TooLarge { cap: 1 })), 2);
        assert_eq!(exit_code(&Error::WeightedEvidence), 1);
    }
}
