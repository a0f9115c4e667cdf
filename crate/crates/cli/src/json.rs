//! JSON input parsing and output rendering.
//!
//! Inputs are navigated by hand so a schema complaint can name the exact
//! field ("env.oracles[1].table[3]") instead of a byte offset; malformed
//! JSON itself is reported with serde's line and column. Numbers are read
//! as plain u64 where sizes are small by construction and as decimal
//! strings wherever a value can outgrow 64 bits.

use nmi_core::induction::{InductionError, StepFunctional};
use nmi_core::kleene::{CompResult, Env, Type2Oracle};
use nmi_core::procedures::{Answer, CalcString, ProcError, Representation};
use nmi_core::realisers::{DepthOracle, RealiserError};
use nmi_core::{FinFun, FinOrder, FinSet, Nat};
use serde_json::{json, Map, Value};
use std::fs;
use std::path::Path;

/// Exit codes, stable across releases. 2 is reserved for command-line usage
/// errors raised by the argument parser itself.
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_NOT_INDEX: i32 = 4;
pub const EXIT_ORACLE_UNDEFINED: i32 = 5;
pub const EXIT_PARTIAL: i32 = 6;
pub const EXIT_BUDGET: i32 = 7;
pub const EXIT_TOTALITY: i32 = 8;
pub const EXIT_PRODUCTIVITY: i32 = 9;

/// A command failure: message for stderr plus the process exit code.
pub struct Failure {
    pub code: i32,
    pub msg: String,
}

impl Failure {
    pub fn input(msg: impl Into<String>) -> Failure {
        Failure { code: EXIT_INPUT, msg: msg.into() }
    }

    pub fn domain(msg: impl Into<String>) -> Failure {
        Failure { code: EXIT_DOMAIN, msg: msg.into() }
    }
}

pub fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn get<'a>(v: &'a Value, key: &str, at: &str) -> Result<&'a Value, Failure> {
    v.get(key)
        .ok_or_else(|| Failure::input(format!("{at}: missing field \"{key}\"")))
}

fn opt<'a>(v: &'a Value, key: &str) -> Option<&'a Value> {
    v.get(key).filter(|x| !x.is_null())
}

fn as_array<'a>(v: &'a Value, at: &str) -> Result<&'a [Value], Failure> {
    v.as_array()
        .map(Vec::as_slice)
        .ok_or_else(|| Failure::input(format!("{at}: expected an array")))
}

fn as_u64(v: &Value, at: &str) -> Result<u64, Failure> {
    v.as_u64()
        .ok_or_else(|| Failure::input(format!("{at}: expected a nonnegative integer")))
}

fn as_usize(v: &Value, at: &str) -> Result<usize, Failure> {
    Ok(as_u64(v, at)? as usize)
}

/// A natural number: a JSON integer, or a decimal string once past 64 bits.
fn as_nat(v: &Value, at: &str) -> Result<Nat, Failure> {
    match v {
        Value::Number(_) => Ok(Nat::from(as_u64(v, at)?)),
        Value::String(s) => s
            .parse::<Nat>()
            .map_err(|_| Failure::input(format!("{at}: not a decimal numeral: {s:?}"))),
        _ => Err(Failure::input(format!("{at}: expected an integer or decimal string"))),
    }
}

fn nat_list(v: &Value, at: &str) -> Result<Vec<Nat>, Failure> {
    as_array(v, at)?
        .iter()
        .enumerate()
        .map(|(i, x)| as_nat(x, &format!("{at}[{i}]")))
        .collect()
}

/// Step functional file: {"n": base, "table": [mask | null, ...]} with one
/// row per subset of the base in mask order.
pub fn parse_step(v: &Value, at: &str) -> Result<StepFunctional, Failure> {
    let n = as_usize(get(v, "n", at)?, &format!("{at}.n"))?;
    if n > 24 {
        return Err(Failure::input(format!("{at}.n: base {n} exceeds the supported 24")));
    }
    let table = as_array(get(v, "table", at)?, &format!("{at}.table"))?;
    let want = 1usize << n;
    if table.len() != want {
        return Err(Failure::input(format!(
            "{at}.table: expected {want} rows for n = {n}, found {}",
            table.len()
        )));
    }
    let mut rows = Vec::with_capacity(want);
    for (i, row) in table.iter().enumerate() {
        let here = format!("{at}.table[{i}]");
        rows.push(match row {
            Value::Null => None,
            _ => {
                let m = as_u64(row, &here)?;
                if m >> n != 0 {
                    return Err(Failure::input(format!(
                        "{here}: mask {m:#x} has points outside base {n}"
                    )));
                }
                Some(m)
            }
        });
    }
    Ok(StepFunctional::from_table_masks(n, &rows))
}

/// Type-2 oracle: {"support": k, "table": [value | null, ...]} over the 2^k
/// zero-one arguments, row index Σ g(i)·2^i.
pub fn parse_oracle(v: &Value, at: &str) -> Result<Type2Oracle, Failure> {
    let support = as_usize(get(v, "support", at)?, &format!("{at}.support"))?;
    if support > 20 {
        return Err(Failure::input(format!(
            "{at}.support: support {support} exceeds the supported 20"
        )));
    }
    let table = as_array(get(v, "table", at)?, &format!("{at}.table"))?;
    let want = 1usize << support;
    if table.len() != want {
        return Err(Failure::input(format!(
            "{at}.table: expected {want} entries for support {support}, found {}",
            table.len()
        )));
    }
    let mut entries = Vec::with_capacity(want);
    for (i, e) in table.iter().enumerate() {
        entries.push(match e {
            Value::Null => None,
            _ => Some(as_nat(e, &format!("{at}.table[{i}]"))?),
        });
    }
    Ok(Type2Oracle::table01(support, entries))
}

/// Environment: {"n": base, "oracles": [...], "funs": [[...]], "nums": [...]},
/// every field optional.
pub fn parse_env(v: &Value, at: &str) -> Result<Env, Failure> {
    let n = match opt(v, "n") {
        Some(x) => as_usize(x, &format!("{at}.n"))?,
        None => 0,
    };
    let mut env = Env::new(n);
    if let Some(os) = opt(v, "oracles") {
        let arr = as_array(os, &format!("{at}.oracles"))?;
        let mut list = Vec::with_capacity(arr.len());
        for (i, o) in arr.iter().enumerate() {
            list.push(parse_oracle(o, &format!("{at}.oracles[{i}]"))?);
        }
        env = env.with_oracles(list);
    }
    if let Some(fs) = opt(v, "funs") {
        let arr = as_array(fs, &format!("{at}.funs"))?;
        let mut list: Vec<FinFun> = Vec::with_capacity(arr.len());
        for (i, f) in arr.iter().enumerate() {
            list.push(nat_list(f, &format!("{at}.funs[{i}]"))?);
        }
        env = env.with_funs(list);
    }
    if let Some(ns) = opt(v, "nums") {
        env = env.with_nums(nat_list(ns, &format!("{at}.nums"))?);
    }
    Ok(env)
}

/// Candidate oracle family: {"oracles": [oracle, ...]}.
pub fn parse_family(v: &Value, at: &str) -> Result<Vec<Type2Oracle>, Failure> {
    let arr = as_array(get(v, "oracles", at)?, &format!("{at}.oracles"))?;
    arr.iter()
        .enumerate()
        .map(|(i, o)| parse_oracle(o, &format!("{at}.oracles[{i}]")))
        .collect()
}

/// Depth oracle: {"L": depth, "table": [value, ...]} over the 2^L leaves in
/// binary order, leaf j carrying bits (j >> i) & 1.
pub fn parse_depth_oracle(v: &Value, at: &str) -> Result<DepthOracle, Failure> {
    let depth = as_usize(get(v, "L", at)?, &format!("{at}.L"))?;
    let table = as_array(get(v, "table", at)?, &format!("{at}.table"))?
        .iter()
        .enumerate()
        .map(|(i, x)| as_u64(x, &format!("{at}.table[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    DepthOracle::new(depth, table).map_err(|e| Failure::input(format!("{at}: {e}")))
}

fn parse_answer(v: &Value, at: &str) -> Result<Answer, Failure> {
    match v {
        Value::String(s) if s == "*" => Ok(Answer::Star),
        _ => Ok(Answer::Num(as_nat(v, at)?)),
    }
}

/// Order-free representation: {"D": [...], "order": [[x,y], ...],
/// "entries": {"d": {"f": [...], "a": value-or-"*"}, ...}, "value": v-or-null}.
/// A whole compile output is accepted too; its "representation" field is used.
pub fn parse_repr(v: &Value, at: &str) -> Result<Representation, Failure> {
    let v = v.get("representation").unwrap_or(v);
    let d_set = nat_list(get(v, "D", at)?, &format!("{at}.D"))?;
    let mut order = Vec::new();
    for (i, pair) in as_array(get(v, "order", at)?, &format!("{at}.order"))?
        .iter()
        .enumerate()
    {
        let here = format!("{at}.order[{i}]");
        let pair = as_array(pair, &here)?;
        if pair.len() != 2 {
            return Err(Failure::input(format!("{here}: expected a two-element pair")));
        }
        order.push((as_nat(&pair[0], &here)?, as_nat(&pair[1], &here)?));
    }
    let items = get(v, "entries", at)?
        .as_object()
        .ok_or_else(|| Failure::input(format!("{at}.entries: expected an object")))?;
    let mut entries = Vec::with_capacity(items.len());
    for (key, item) in items {
        let here = format!("{at}.entries[{key:?}]");
        let d: Nat = key
            .parse()
            .map_err(|_| Failure::input(format!("{here}: key is not a decimal numeral")))?;
        let f = nat_list(get(item, "f", &here)?, &format!("{here}.f"))?;
        let a = parse_answer(get(item, "a", &here)?, &format!("{here}.a"))?;
        entries.push((d, f, a));
    }
    let value = match opt(v, "value") {
        Some(x) => Some(as_nat(x, &format!("{at}.value"))?),
        None => None,
    };
    Ok(Representation { d_set, order, entries, value })
}

/// Natural number out: a JSON integer while it fits u64, a decimal string
/// beyond that.
pub fn natj(v: &Nat) -> Value {
    if v.bits() <= 64 {
        json!(v.iter_u64_digits().next().unwrap_or(0))
    } else {
        json!(v.to_string())
    }
}

pub fn opt_natj(v: &Option<Nat>) -> Value {
    v.as_ref().map(natj).unwrap_or(Value::Null)
}

pub fn hex_mask(s: &FinSet) -> Result<String, Failure> {
    s.to_mask_u64()
        .map(|m| format!("{m:#x}"))
        .ok_or_else(|| Failure::domain("set too large to render as a 64-bit mask"))
}

/// Element listing for sets whose base is past any feasible mask, such as
/// history fixed points over calculation codes.
pub fn set_json(s: &FinSet) -> Value {
    json!({
        "base": natj(s.base()),
        "elements": s.iter().map(natj).collect::<Vec<_>>(),
    })
}

pub fn order_json(o: &FinOrder) -> Value {
    json!({
        "domain": o.domain().iter().map(natj).collect::<Vec<_>>(),
        "pairs": o
            .pairs()
            .iter()
            .map(|(z, w)| json!([natj(z), natj(w)]))
            .collect::<Vec<_>>(),
    })
}

fn answer_json(a: &Answer) -> Value {
    match a {
        Answer::Num(v) => natj(v),
        Answer::Star => json!("*"),
    }
}

pub fn calc_json(c: &CalcString) -> Value {
    json!({
        "entries": c
            .entries
            .iter()
            .map(|e| json!({
                "f": e.query.iter().map(natj).collect::<Vec<_>>(),
                "a": answer_json(&e.answer),
                "d": opt_natj(&e.denotation),
            }))
            .collect::<Vec<_>>(),
        "value": opt_natj(&c.value),
        "blocks": c
            .blocks
            .iter()
            .map(|b| json!([b.start, b.end, b.level]))
            .collect::<Vec<_>>(),
    })
}

pub fn repr_json(r: &Representation) -> Value {
    let mut sorted: Vec<_> = r.entries.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let mut entries = Map::new();
    for (d, f, a) in sorted {
        entries.insert(
            d.to_string(),
            json!({"f": f.iter().map(natj).collect::<Vec<_>>(), "a": answer_json(a)}),
        );
    }
    json!({
        "D": r.d_set.iter().map(natj).collect::<Vec<_>>(),
        "order": r
            .order
            .iter()
            .map(|(x, y)| json!([natj(x), natj(y)]))
            .collect::<Vec<_>>(),
        "entries": entries,
        "value": opt_natj(&r.value),
    })
}

pub fn comp_result_json(r: &CompResult) -> Value {
    match r {
        CompResult::Value(v) => json!({"kind": "value", "value": natj(v)}),
        CompResult::NotAnIndex => json!({"kind": "not_an_index"}),
        CompResult::OracleUndefined { site } => {
            json!({"kind": "oracle_undefined", "site": site.to_string()})
        }
        CompResult::PartialInduction { stage } => {
            json!({"kind": "partial_induction", "stage": stage})
        }
        CompResult::TotalityViolation { arg, fun } => {
            json!({"kind": "totality_violation", "arg": arg, "fun": fun})
        }
        CompResult::BudgetExceeded => json!({"kind": "budget_exceeded"}),
    }
}

pub fn comp_code(r: &CompResult) -> i32 {
    match r {
        CompResult::Value(_) => 0,
        CompResult::NotAnIndex => EXIT_NOT_INDEX,
        CompResult::OracleUndefined { .. } => EXIT_ORACLE_UNDEFINED,
        CompResult::PartialInduction { .. } => EXIT_PARTIAL,
        CompResult::BudgetExceeded => EXIT_BUDGET,
        CompResult::TotalityViolation { .. } => EXIT_TOTALITY,
    }
}

pub fn comp_desc(r: &CompResult) -> String {
    match r {
        CompResult::Value(v) => format!("value {v}"),
        CompResult::NotAnIndex => "not an index".into(),
        CompResult::OracleUndefined { site } => format!("{site} undefined on a query"),
        CompResult::PartialInduction { stage } => {
            format!("induction step undefined at stage {stage}")
        }
        CompResult::TotalityViolation { arg, fun } => {
            format!("argument {arg} fails to converge on {fun:?}")
        }
        CompResult::BudgetExceeded => "budget exceeded".into(),
    }
}

pub fn induction_code(e: &InductionError) -> i32 {
    match e {
        InductionError::Partiality { .. } => EXIT_PARTIAL,
        InductionError::Productivity { .. } => EXIT_PRODUCTIVITY,
        InductionError::Trivial => EXIT_DOMAIN,
    }
}

pub fn proc_code(e: &ProcError) -> i32 {
    match e {
        ProcError::HistoryUndefined { .. } => EXIT_PARTIAL,
        ProcError::Induction(i) => induction_code(i),
        _ => EXIT_DOMAIN,
    }
}

pub fn realiser_code(e: &RealiserError) -> i32 {
    match e {
        RealiserError::PartialStep => EXIT_PARTIAL,
        _ => EXIT_INPUT,
    }
}
