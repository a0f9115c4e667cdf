//! nmi: batch front door for the induction and recursion engine.
//!
//! Every command reads JSON files, writes one JSON document to stdout (or
//! --out), and exits with a stable code: 0 for success including negative
//! verdicts, 1 for unreadable or malformed input, 2 for command-line usage
//! errors, 3 for other domain errors, and 4 through 9 for the individual
//! ways a computation can fail to produce a value. Given the same inputs,
//! flags and seed, output bytes are identical run to run.

mod json;
mod selftest;

use clap::{Parser, Subcommand};
use json::{comp_code, comp_desc, Failure};
use nmi_core::induction::iterate;
use nmi_core::kleene::{
    eval_p, eval_t, moschovakis_trace, norm, parse_sexpr, render_sexpr, Env, TraceEnd, TraceError,
};
use nmi_core::procedures::{
    compile_computation, consistency_check, delay_at, honest_history, validate_representation,
    ProcedureFamily, Representation, Verdict,
};
use nmi_core::realisers::{pincherle, recover_pwo, strong_hb, weak_from_strong};
use nmi_core::Nat;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

const DEFAULT_BUDGET: u64 = 1 << 22;

#[derive(Parser)]
#[command(
    name = "nmi",
    version,
    about = "Finitary non-monotone induction, its recursion calculus, and depth-oracle realisers"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Iterate a step functional to closure and print the stage trace
    Induct {
        /// Step functional file: {"n": base, "table": [mask | null, ...]}
        step: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate an index (decimal numeral or s-expression) in an environment
    Eval {
        /// Index: a decimal code, or a form like "(S4 (S2 7) (S1))"
        index: String,
        /// Environment file: {"n", "oracles", "funs", "nums"}, all optional
        #[arg(long)]
        env: Option<PathBuf>,
        /// Override the environment base
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
        budget: u64,
        /// Sweep-mode evaluation: every listed subcomputation must converge
        #[arg(long, conflicts_with = "partial")]
        total: bool,
        /// Trajectory-mode evaluation (the default)
        #[arg(long)]
        partial: bool,
        /// Also report the rank of the trajectory computation tree
        #[arg(long)]
        norm: bool,
        /// On divergence, print the leftmost descending spine of subcomputations
        #[arg(long)]
        trace: bool,
        /// Accepted for interface stability; evaluation draws no randomness
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compile, check and decode calculation strings
    Procedure {
        #[command(subcommand)]
        sub: ProcCmd,
    },
    /// Covers and bounds for depth oracles, and stage-order recovery
    Realiser {
        #[command(subcommand)]
        sub: RealCmd,
    },
    /// Exhaustive in-process engine sweeps at tiny scale
    Selftest {
        /// Seed for the sampled portion of the sweeps
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ProcCmd {
    /// Compile the calculation of an index against its environment
    Compile {
        index: String,
        #[arg(long)]
        env: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
        budget: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check an order-free representation against an index; no oracle is consulted
    Validate {
        index: String,
        /// Representation file, or a whole compile output
        #[arg(long)]
        repr: PathBuf,
        #[arg(long)]
        env: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
        budget: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the history induction for the slot-0 oracle and decode it
    Honest {
        index: String,
        /// Environment file; its first oracle is the evaluation target
        #[arg(long)]
        env: PathBuf,
        /// Candidate family file: {"oracles": [...]}
        #[arg(long)]
        oracles: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
        budget: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Delay profile of one member of a compiled family
    Delay {
        index: String,
        /// Candidate family file: {"oracles": [...]}
        #[arg(long)]
        oracles: PathBuf,
        #[arg(long)]
        env: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        /// Which member to profile
        #[arg(long, default_value_t = 0)]
        member: usize,
        #[arg(long, default_value_t = DEFAULT_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
        budget: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Consistency of the family compiled over a set of candidate oracles
    Consistency {
        index: String,
        /// Candidate family file: {"oracles": [...]}
        #[arg(long)]
        oracles: PathBuf,
        #[arg(long)]
        env: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
        budget: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum RealCmd {
    /// Greedy strong cover of a depth oracle and its weak projection
    Hb {
        /// Depth oracle file: {"L": depth, "table": [value, ...]}
        oracle: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Least bound respected by every functional the oracle constrains
    Pincherle {
        /// Depth oracle file: {"L": depth, "table": [value, ...]}
        oracle: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild the stage prewellordering of an induction from depth-oracle answers
    Recover {
        /// Step functional file: {"n": base, "table": [mask | null, ...]}
        step: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(code) => std::process::exit(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            std::process::exit(f.code);
        }
    }
}

fn run(cmd: Cmd) -> Result<i32, Failure> {
    match cmd {
        Cmd::Induct { step, out } => finish(cmd_induct(&step)?, out),
        Cmd::Eval { index, env, n, budget, total, partial: _, norm, trace, seed, out } => {
            finish(cmd_eval(&index, env.as_deref(), n, budget, total, norm, trace, seed)?, out)
        }
        Cmd::Procedure { sub } => match sub {
            ProcCmd::Compile { index, env, n, budget, out } => {
                finish(cmd_compile(&index, env.as_deref(), n, budget)?, out)
            }
            ProcCmd::Validate { index, repr, env, n, budget, out } => {
                finish(cmd_validate(&index, &repr, env.as_deref(), n, budget)?, out)
            }
            ProcCmd::Honest { index, env, oracles, budget, out } => {
                finish(cmd_honest(&index, &env, &oracles, budget)?, out)
            }
            ProcCmd::Delay { index, oracles, env, n, member, budget, out } => {
                finish(cmd_delay(&index, &oracles, env.as_deref(), n, member, budget)?, out)
            }
            ProcCmd::Consistency { index, oracles, env, n, budget, out } => {
                finish(cmd_consistency(&index, &oracles, env.as_deref(), n, budget)?, out)
            }
        },
        Cmd::Realiser { sub } => match sub {
            RealCmd::Hb { oracle, out } => finish(cmd_hb(&oracle)?, out),
            RealCmd::Pincherle { oracle, out } => finish(cmd_pincherle(&oracle)?, out),
            RealCmd::Recover { step, out } => finish(cmd_recover(&step)?, out),
        },
        Cmd::Selftest { seed, out } => finish(selftest::run(seed), out),
    }
}

fn finish((v, code): (Value, i32), out: Option<PathBuf>) -> Result<i32, Failure> {
    emit(&v, out.as_deref())?;
    Ok(code)
}

fn emit(v: &Value, out: Option<&Path>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(v).expect("rendering owned values cannot fail");
    text.push('\n');
    match out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::input(format!("{}: {e}", p.display()))),
    }
}

fn parse_index(s: &str) -> Result<Nat, Failure> {
    let t = s.trim();
    if t.starts_with('(') {
        parse_sexpr(t).map_err(|e| Failure::input(format!("index: {e}")))
    } else {
        t.parse::<Nat>()
            .map_err(|_| Failure::input(format!("index: not a decimal numeral or s-expression: {t:?}")))
    }
}

fn load_env(path: Option<&Path>, n: Option<usize>) -> Result<Env, Failure> {
    let mut env = match path {
        Some(p) => json::parse_env(&json::read_json(p)?, "env")?,
        None => Env::new(0),
    };
    if let Some(k) = n {
        if k > 24 {
            return Err(Failure::input(format!("--n: base {k} exceeds the supported 24")));
        }
        env.n = k;
    }
    Ok(env)
}

fn cmd_induct(step: &Path) -> Result<(Value, i32), Failure> {
    let f = json::parse_step(&json::read_json(step)?, "step")?;
    let trace = iterate(&f);
    let stages = trace
        .stages()
        .iter()
        .map(json::hex_mask)
        .collect::<Result<Vec<_>, _>>()?;
    let mut obj = json!({
        "schema": "nmi/v1/indtrace",
        "n": f.base_usize().expect("table bases are at most 24"),
        "stages": stages,
        "closed": trace.closed(),
    });
    match trace.failed_at() {
        Some(stage) => {
            obj["failed_at"] = json!(stage);
            Ok((obj, json::EXIT_PARTIAL))
        }
        None => {
            obj["lfp"] = json!(json::hex_mask(trace.lfp().expect("closed"))?);
            obj["closure_stage"] = json!(trace.closure_stage());
            Ok((obj, 0))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    index: &str,
    env: Option<&Path>,
    n: Option<usize>,
    budget: u64,
    total: bool,
    want_norm: bool,
    want_trace: bool,
    seed: u64,
) -> Result<(Value, i32), Failure> {
    let e = parse_index(index)?;
    let environment = load_env(env, n)?;
    let result = if total {
        eval_t(&e, &environment, budget)
    } else {
        eval_p(&e, &environment, budget)
    };
    let mut obj = json!({
        "schema": "nmi/v1/eval",
        "mode": if total { "total" } else { "partial" },
        "budget": budget,
        "seed": seed,
        "value": result.value().map(json::natj).unwrap_or(Value::Null),
        "result": json::comp_result_json(&result),
    });
    if want_norm {
        obj["norm"] = match norm(&e, &environment, budget) {
            Ok(r) => json!(r),
            Err(_) => Value::Null,
        };
    }
    if want_trace {
        obj["trace"] = match moschovakis_trace(&e, &environment, budget) {
            Ok((frames, end)) => json!({
                "frames": frames
                    .iter()
                    .map(|fr| json!({
                        "code": json::natj(&fr.code),
                        "sexpr": render_sexpr(&fr.code),
                        "descend": fr.descend.map(|d| json!(d)).unwrap_or(Value::Null),
                    }))
                    .collect::<Vec<_>>(),
                "end": match end {
                    TraceEnd::BudgetCut => "budget_cut",
                    TraceEnd::DefiniteFailure(_) => "definite_failure",
                },
            }),
            Err(TraceError::Terminates(_)) => Value::Null,
        };
    }
    Ok((obj, comp_code(&result)))
}

fn cmd_compile(
    index: &str,
    env: Option<&Path>,
    n: Option<usize>,
    budget: u64,
) -> Result<(Value, i32), Failure> {
    let e = parse_index(index)?;
    let environment = load_env(env, n)?;
    match compile_computation(&e, &environment, budget) {
        Ok(calc) => {
            let repr = Representation::of_calc(&calc)
                .expect("compiled calculations carry denotations throughout");
            let obj = json!({
                "schema": "nmi/v1/calc",
                "value": json::opt_natj(&calc.value),
                "calc": json::calc_json(&calc),
                "representation": json::repr_json(&repr),
            });
            Ok((obj, 0))
        }
        Err(r) => Err(Failure { code: comp_code(&r), msg: format!("compilation failed: {}", comp_desc(&r)) }),
    }
}

fn cmd_validate(
    index: &str,
    repr: &Path,
    env: Option<&Path>,
    n: Option<usize>,
    budget: u64,
) -> Result<(Value, i32), Failure> {
    let e = parse_index(index)?;
    let environment = load_env(env, n)?;
    let representation = json::parse_repr(&json::read_json(repr)?, "repr")?;
    let obj = match validate_representation(&e, &environment, &representation, budget) {
        Verdict::Accept(v) => json!({
            "schema": "nmi/v1/verdict",
            "verdict": "accept",
            "value": json::natj(&v),
            "reason": Value::Null,
        }),
        Verdict::Reject(reason) => json!({
            "schema": "nmi/v1/verdict",
            "verdict": "reject",
            "value": Value::Null,
            "reason": reason,
        }),
    };
    Ok((obj, 0))
}

fn compile_family(
    index: &str,
    oracles: &Path,
    env: Option<&Path>,
    n: Option<usize>,
    budget: u64,
) -> Result<(Nat, Env, ProcedureFamily), Failure> {
    let e = parse_index(index)?;
    let environment = load_env(env, n)?;
    let candidates = json::parse_family(&json::read_json(oracles)?, "oracles")?;
    let family = ProcedureFamily::compiled(&e, &environment, &candidates, budget);
    Ok((e, environment, family))
}

fn cmd_honest(
    index: &str,
    env: &Path,
    oracles: &Path,
    budget: u64,
) -> Result<(Value, i32), Failure> {
    let (_, environment, family) = compile_family(index, oracles, Some(env), None, budget)?;
    let target = environment
        .oracles
        .first()
        .cloned()
        .ok_or_else(|| Failure::input("env.oracles: the evaluation target must sit in slot 0"))?;
    match honest_history(&family, &target) {
        Ok((history, calc)) => {
            let obj = json!({
                "schema": "nmi/v1/honest",
                "members": family.members.len(),
                "history": json::set_json(&history),
                "calc": json::calc_json(&calc),
                "value": json::opt_natj(&calc.value),
            });
            Ok((obj, 0))
        }
        Err(e) => Err(Failure { code: json::proc_code(&e), msg: e.to_string() }),
    }
}

fn cmd_delay(
    index: &str,
    oracles: &Path,
    env: Option<&Path>,
    n: Option<usize>,
    member: usize,
    budget: u64,
) -> Result<(Value, i32), Failure> {
    let (_, _, family) = compile_family(index, oracles, env, n, budget)?;
    if member >= family.members.len() {
        return Err(Failure::domain(format!(
            "member {member} out of range: the family has {} members",
            family.members.len()
        )));
    }
    let m = &family.members[member];
    let len = m.entries.len();
    let delays: Vec<usize> = (0..len).map(|beta| delay_at(&family, member, beta)).collect();
    let levels: Vec<u32> = (0..len).map(|i| m.block_level_at(i)).collect();
    let obj = json!({
        "schema": "nmi/v1/delay",
        "members": family.members.len(),
        "member": member,
        "length": len,
        "delays": delays,
        "levels": levels,
        "value": json::opt_natj(&m.value),
    });
    Ok((obj, 0))
}

fn cmd_consistency(
    index: &str,
    oracles: &Path,
    env: Option<&Path>,
    n: Option<usize>,
    budget: u64,
) -> Result<(Value, i32), Failure> {
    let (_, _, family) = compile_family(index, oracles, env, n, budget)?;
    let obj = match consistency_check(&family) {
        Ok(()) => json!({
            "schema": "nmi/v1/consistency",
            "members": family.members.len(),
            "consistent": true,
            "violation": Value::Null,
        }),
        Err(v) => json!({
            "schema": "nmi/v1/consistency",
            "members": family.members.len(),
            "consistent": false,
            "violation": v.to_string(),
        }),
    };
    Ok((obj, 0))
}

fn cmd_hb(oracle: &Path) -> Result<(Value, i32), Failure> {
    let f = json::parse_depth_oracle(&json::read_json(oracle)?, "oracle")?;
    let strong = strong_hb(&f);
    let cover = weak_from_strong(&f, &strong);
    let obj = json!({
        "schema": "nmi/v1/cover",
        "L": f.depth(),
        "strong_leaves": strong,
        "cover": cover.prefixes,
        "is_cover": cover.is_cover(f.depth()),
    });
    Ok((obj, 0))
}

fn cmd_pincherle(oracle: &Path) -> Result<(Value, i32), Failure> {
    let f = json::parse_depth_oracle(&json::read_json(oracle)?, "oracle")?;
    let obj = json!({
        "schema": "nmi/v1/bound",
        "L": f.depth(),
        "bound": pincherle(&f),
    });
    Ok((obj, 0))
}

fn cmd_recover(step: &Path) -> Result<(Value, i32), Failure> {
    let f = json::parse_step(&json::read_json(step)?, "step")?;
    let trace = iterate(&f);
    if let Some(stage) = trace.failed_at() {
        return Err(Failure {
            code: json::EXIT_PARTIAL,
            msg: format!("step functional undefined on its trajectory at stage {stage}"),
        });
    }
    let truth = trace.stage_order();
    let base = f.base_usize().expect("table bases are at most 24");
    let recovered = recover_pwo(&f, base, pincherle)
        .map_err(|e| Failure { code: json::realiser_code(&e), msg: e.to_string() })?;
    let obj = json!({
        "schema": "nmi/v1/recover",
        "recovered": json::order_json(&recovered),
        "trace_order": json::order_json(&truth),
        "agree": recovered == truth,
    });
    Ok((obj, 0))
}
