use std::fs;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use smb_core::audit::{AuditBudget, Verdict};
use smb_core::error::SmbError;
use smb_core::expr::{self, certify, check, compare, simplify_steps, Comparison, OrdExpr};
use smb_core::lawcheck::run_laws;
use smb_core::unify::{parse_htree, unify, UnifyConfig};

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

const OK: u8 = 0;
const UNKNOWN: u8 = 1;
const BAD_INPUT: u8 = 2;
const AUDIT_FAIL: u8 = 3;

/// Ordinal expressions over strictly monotone Brouwer trees.
#[derive(Parser)]
#[command(name = "smb", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse an expression and print it back in canonical form.
    Parse { expr: String },
    /// Rewrite an expression to normal form.
    Simplify {
        expr: String,
        /// Print every rewrite step and audit its equivalence certificate.
        #[arg(long)]
        certify: bool,
    },
    /// Search for a derivation of A < B or A ≤ B.
    Cmp {
        a: String,
        b: String,
        /// Search fuel.
        #[arg(long, default_value_t = 1000)]
        budget: u64,
        /// Seed for the audit of the found derivation.
        #[arg(long, default_value_t = AuditBudget::STANDARD.seed)]
        seed: u64,
        /// Write the derivation to this file.
        #[arg(long)]
        emit_deriv: Option<String>,
    },
    /// Check a serialized derivation of A ≤ B (or A < B) and audit it.
    Check {
        file: String,
        a: String,
        b: String,
        #[arg(long, default_value_t = AuditBudget::STANDARD.seed)]
        seed: u64,
    },
    /// Audit random instances of every algebraic law.
    Laws {
        #[arg(long, default_value_t = 20)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Unify the two trees stored in F1 and F2.
    DemoUnify {
        f1: String,
        f2: String,
        /// Children of `fun` nodes shown when printing.
        #[arg(long, default_value_t = 3)]
        shown: u64,
    },
}

fn parse_arg(src: &str) -> Result<OrdExpr, u8> {
    expr::parse(src).map_err(|e| {
        eprintln!("parse error in `{src}`: {e}");
        BAD_INPUT
    })
}

fn read(path: &str) -> Result<String, u8> {
    fs::read_to_string(path).map_err(|e| {
        eprintln!("cannot read {path}: {e}");
        BAD_INPUT
    })
}

fn run(cli: Cli) -> Result<u8, u8> {
    match cli.cmd {
        Cmd::Parse { expr } => {
            println!("{}", parse_arg(&expr)?);
            Ok(OK)
        }
        Cmd::Simplify { expr, certify: cert } => {
            let e = parse_arg(&expr)?;
            let steps = simplify_steps(&e);
            let mut code = OK;
            if cert {
                for s in &steps {
                    let verdict = match certify(s) {
                        Ok(eq) => {
                            let (fwd, bwd) = eq.audit(AuditBudget::STANDARD);
                            if fwd.passed() && bwd.passed() {
                                "PASS".to_string()
                            } else {
                                code = AUDIT_FAIL;
                                format!("fwd {fwd}; bwd {bwd}")
                            }
                        }
                        Err(err) => {
                            code = AUDIT_FAIL;
                            format!("no certificate: {err}")
                        }
                    };
                    println!("{} => {}  [{:?} at {:?}] {verdict}", s.before, s.after, s.rule, s.path);
                }
            }
            let last = steps.last().map_or(e, |s| s.after.clone());
            println!("{last}");
            Ok(code)
        }
        Cmd::Cmp {
            a,
            b,
            budget,
            seed,
            emit_deriv,
        } => {
            let (ea, eb) = (parse_arg(&a)?, parse_arg(&b)?);
            let (tag, text) = match compare(&ea, &eb, budget) {
                Comparison::ProvedLt(d) => ("PROVED_LT", d),
                Comparison::ProvedLe(d) => ("PROVED_LE", d),
                Comparison::Unknown => {
                    println!("UNKNOWN (no derivation within budget {budget}; not a disproof)");
                    return Ok(UNKNOWN);
                }
            };
            let text = text.to_text();
            // A proof search result is only reported once it audits.
            let report = check(&text, &ea, &eb, AuditBudget::STANDARD.with_seed(seed)).map_err(|e| {
                eprintln!("internal: {e}");
                AUDIT_FAIL
            })?;
            println!("{tag}");
            println!("audit: {report}");
            match emit_deriv {
                Some(path) => fs::write(&path, &text).map_err(|e| {
                    eprintln!("cannot write {path}: {e}");
                    BAD_INPUT
                })?,
                None => print!("{text}"),
            }
            Ok(if report.passed() { OK } else { AUDIT_FAIL })
        }
        Cmd::Check { file, a, b, seed } => {
            let text = read(&file)?;
            let (ea, eb) = (parse_arg(&a)?, parse_arg(&b)?);
            match check(&text, &ea, &eb, AuditBudget::STANDARD.with_seed(seed)) {
                Ok(report) => {
                    println!("{report}");
                    Ok(match report.verdict {
                        Verdict::Pass => OK,
                        _ => AUDIT_FAIL,
                    })
                }
                Err(e @ (SmbError::Deserialize(_) | SmbError::Parse(_))) => {
                    eprintln!("{e}");
                    Err(BAD_INPUT)
                }
                Err(e) => {
                    println!("FAIL: {e}");
                    Ok(AUDIT_FAIL)
                }
            }
        }
        Cmd::Laws { trials, seed } => {
            let mut code = OK;
            for t in run_laws(trials, seed, AuditBudget::STANDARD) {
                let status = if t.failed == 0 { "PASS" } else { "FAIL" };
                print!("{:<13} {status} {}/{}", t.law, t.passed, t.passed + t.failed);
                if let Some(first) = &t.first_failure {
                    code = AUDIT_FAIL;
                    print!("  first failure: {first}");
                }
                println!();
            }
            Ok(code)
        }
        Cmd::DemoUnify { f1, f2, shown } => {
            let load = |p: &str| -> Result<_, u8> {
                parse_htree(&read(p)?).map_err(|e| {
                    eprintln!("{p}: {e}");
                    BAD_INPUT
                })
            };
            let (a, b) = (load(&f1)?, load(&f2)?);
            match unify(&a, &b, UnifyConfig::default()) {
                Ok(Some(u)) => {
                    println!("{}", u.render(shown));
                    Ok(OK)
                }
                Ok(None) => {
                    println!("no unifier");
                    Ok(UNKNOWN)
                }
                Err(e) => {
                    eprintln!("{e}");
                    Err(AUDIT_FAIL)
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let code = run(Cli::parse()).unwrap_or_else(|c| c);
    ExitCode::from(code)
}
