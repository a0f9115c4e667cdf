//! Hyper-sequential procedures: calculations as strings of query/answer pairs
//! with denotations and blocking, compiled from computation codes, validated
//! from unordered representations, and reconstructed as the least fixed point
//! of a step functional over coded prefixes (the honest form).

use crate::foundations::{decode_seq, nat, pair, prefix_code, unpair, FinFun, FinSet, Nat};
use crate::induction::{iterate, InductionError, StepFunctional};
use crate::kleene::{
    eval_with, on_big_stack, parse, validate_perm, CompResult, Env, KIndex, Meter, Mode,
    OracleSite, Type2Oracle,
};
use num_traits::ToPrimitive;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use thiserror::Error;

/// Answer part of one calculation item: a genuine oracle answer, or the ∗
/// marker for a log entry that merely records a stage function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Answer {
    Num(Nat),
    Star,
}

impl Answer {
    pub fn num(&self) -> Option<&Nat> {
        match self {
            Answer::Num(v) => Some(v),
            Answer::Star => None,
        }
    }
}

/// One item of a calculation: the queried finite function, its answer, and
/// the denotation ordering the item inside the ambient string. Compiled
/// calculations always carry denotations; hand-built strings may omit them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QEntry {
    pub query: FinFun,
    pub answer: Answer,
    pub denotation: Option<Nat>,
}

/// A block is an interval of items treated as one unit for delay purposes.
/// `end` is exclusive. `level` counts the other blocks properly containing
/// this one, so the whole-string block has level 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block {
    pub start: usize,
    pub end: usize,
    pub level: u32,
}

/// A complete or truncated calculation: the item string, the final value if
/// the calculation closed, and the block structure (the whole string is
/// itself a block whenever it is nonempty).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CalcString {
    pub entries: Vec<QEntry>,
    pub value: Option<Nat>,
    pub blocks: Vec<Block>,
}

impl CalcString {
    pub fn new(entries: Vec<QEntry>, value: Option<Nat>) -> CalcString {
        let len = entries.len();
        CalcString { entries, value, blocks: finalize_blocks(Vec::new(), len) }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of blocks containing the item at `pos`. Items of an unblocked
    /// nonempty string sit at level 1: the whole string is a block.
    pub fn block_level_at(&self, pos: usize) -> u32 {
        self.blocks.iter().filter(|b| b.start <= pos && pos < b.end).count() as u32
    }

    /// Finitary limsup of the item levels: the maximum over the string (a
    /// finite tail attains its maximum, so the limsup is the global max).
    /// Deepening values over growing prefixes of one compilation signal
    /// unboundedly nested inductions, the divergence criterion.
    pub fn limsup_block_level(&self) -> u32 {
        (0..self.entries.len()).map(|i| self.block_level_at(i)).max().unwrap_or(0)
    }

    /// Does this calculation assert only answers the oracle actually gives?
    /// Log items are skipped; a query outside the oracle's domain disqualifies.
    pub fn matches(&self, f: &Type2Oracle) -> bool {
        self.entries.iter().all(|e| match &e.answer {
            Answer::Star => true,
            Answer::Num(a) => f.apply(&e.query).as_ref() == Some(a),
        })
    }
}

/// Query/answer equality, ignoring denotations. Consistency and extension are
/// relations on the (q, a) strings; denotations ride along.
fn qa_eq(x: &QEntry, y: &QEntry) -> bool {
    x.query == y.query && x.answer == y.answer
}

fn qa_prefix(prefix: &[QEntry], t: &CalcString) -> bool {
    t.entries.len() >= prefix.len()
        && prefix.iter().zip(&t.entries).all(|(p, e)| qa_eq(p, e))
}

/// Dedupe raw spans, adjoin the whole-string block, and compute levels by
/// containment. Spans are closed-open; the inventory is laminar for compiled
/// strings but levels are computed for arbitrary inputs.
fn finalize_blocks(raw: Vec<(usize, usize)>, len: usize) -> Vec<Block> {
    let mut spans: BTreeSet<(usize, usize)> = raw.into_iter().filter(|&(s, e)| s < e).collect();
    if len > 0 {
        spans.insert((0, len));
    }
    let spans: Vec<(usize, usize)> = spans.into_iter().collect();
    let mut blocks: Vec<Block> = spans
        .iter()
        .map(|&(s, e)| {
            let level = spans
                .iter()
                .filter(|&&(s2, e2)| s2 <= s && e <= e2 && (s2, e2) != (s, e))
                .count() as u32;
            Block { start: s, end: e, level }
        })
        .collect();
    blocks.sort_by(|a, b| a.start.cmp(&b.start).then(b.end.cmp(&a.end)));
    blocks
}

/// Where a procedure's members came from; purely informational.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FamilySource {
    Explicit,
    Compiled { index: Nat },
    IProcedure { n: usize, b: u64 },
}

/// A procedure: a finite set of calculations, pairwise consistent when valid.
/// Members are kept in construction order; extension queries scan them.
#[derive(Clone, Debug)]
pub struct ProcedureFamily {
    pub members: Vec<CalcString>,
    pub source: FamilySource,
}

impl ProcedureFamily {
    pub fn explicit(members: Vec<CalcString>) -> ProcedureFamily {
        ProcedureFamily { members, source: FamilySource::Explicit }
    }

    /// Compile `e` once per oracle, installing each candidate in slot 0 of
    /// `env`. Oracles under which the computation fails contribute no member.
    pub fn compiled(e: &Nat, env: &Env, oracles: &[Type2Oracle], budget: u64) -> ProcedureFamily {
        let mut members = Vec::new();
        for f in oracles {
            let mut env_f = env.clone();
            if env_f.oracles.is_empty() {
                env_f.oracles.push(f.clone());
            } else {
                env_f.oracles[0] = f.clone();
            }
            if let Ok(calc) = compile_computation(e, &env_f, budget) {
                members.push(calc);
            }
        }
        ProcedureFamily { members, source: FamilySource::Compiled { index: e.clone() } }
    }

    /// The induction functional's own procedure over a family of candidate
    /// body oracles, each of support n+1. Partial candidates are skipped.
    pub fn i_procedure(gs: &[Type2Oracle], b: u64, n: usize) -> ProcedureFamily {
        let members =
            gs.iter().filter_map(|g| i_procedure_calc(g, b, n).ok()).collect();
        ProcedureFamily { members, source: FamilySource::IProcedure { n, b } }
    }

    /// First member asserting only answers `f` gives, if any.
    pub fn calculation_of(&self, f: &Type2Oracle) -> Option<&CalcString> {
        self.members.iter().find(|m| m.matches(f))
    }
}

/// Why a set of calculations fails to be a procedure. Indices refer to member
/// positions; `pos` is the first offending item position.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("members {i} and {j} first differ at position {pos} in the query itself")]
    DifferentQueries { i: usize, j: usize, pos: usize },
    #[error("members {i} and {j} split at position {pos} on a log entry")]
    StarSplit { i: usize, j: usize, pos: usize },
    #[error("member {i} is a proper initial segment of member {j}")]
    PrefixPair { i: usize, j: usize },
    #[error("members {i} and {j} are the same string with different values")]
    EqualStringsDifferentValue { i: usize, j: usize },
}

/// Two distinct members must first differ at a position where the queries
/// agree and both answers are genuine (non-∗) and different; everything before
/// that position must agree. In particular no member properly extends another.
pub fn consistency_check(family: &ProcedureFamily) -> Result<(), Violation> {
    let ms = &family.members;
    for i in 0..ms.len() {
        for j in (i + 1)..ms.len() {
            let (s, t) = (&ms[i], &ms[j]);
            let common = s.entries.len().min(t.entries.len());
            let split = (0..common).find(|&p| !qa_eq(&s.entries[p], &t.entries[p]));
            match split {
                Some(p) => {
                    let (x, y) = (&s.entries[p], &t.entries[p]);
                    if x.query != y.query {
                        return Err(Violation::DifferentQueries { i, j, pos: p });
                    }
                    if x.answer == Answer::Star || y.answer == Answer::Star {
                        return Err(Violation::StarSplit { i, j, pos: p });
                    }
                }
                None => {
                    if s.entries.len() != t.entries.len() {
                        let (short, long) =
                            if s.entries.len() < t.entries.len() { (i, j) } else { (j, i) };
                        return Err(Violation::PrefixPair { i: short, j: long });
                    }
                    if s.value != t.value {
                        return Err(Violation::EqualStringsDifferentValue { i, j });
                    }
                }
            }
        }
    }
    Ok(())
}

/// Errors from extension, history construction, and decoding.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ProcError {
    #[error("no member extends the given string")]
    NotAPrefix,
    #[error("a complete member carries no value")]
    NoValue,
    #[error("the oracle was undefined while extending the history at stage {stage}")]
    HistoryUndefined { stage: usize },
    #[error("the fixed point does not reach a complete calculation")]
    HistoryIncomplete,
    #[error("the set does not code a calculation prefix")]
    BadCode,
    #[error(transparent)]
    Induction(#[from] InductionError),
}

/// What comes after a prefix inside a procedure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NextStep {
    /// The procedure poses this query next; `is_log` marks ∗-answered items.
    Query { query: FinFun, is_log: bool },
    /// The prefix is a complete member with this value.
    Value(Nat),
}

/// Deterministic extension: all members through a common (q, a)-prefix pose
/// the same next query, so scanning for the first extender suffices.
pub fn next_of(family: &ProcedureFamily, prefix: &[QEntry]) -> Result<NextStep, ProcError> {
    let mut extender = None;
    for m in &family.members {
        if !qa_prefix(prefix, m) {
            continue;
        }
        if m.entries.len() == prefix.len() {
            return match &m.value {
                Some(v) => Ok(NextStep::Value(v.clone())),
                None => Err(ProcError::NoValue),
            };
        }
        extender.get_or_insert(m);
    }
    match extender {
        Some(m) => {
            let e = &m.entries[prefix.len()];
            Ok(NextStep::Query {
                query: e.query.clone(),
                is_log: e.answer == Answer::Star,
            })
        }
        None => Err(ProcError::NotAPrefix),
    }
}

/// Least γ such that any other member agreeing with `member` on the (q, a)
/// parts below β+γ already carries the same denotations up to and including β.
/// Zero means the denotation is settled by the time the item is written.
pub fn delay_at(family: &ProcedureFamily, member: usize, beta: usize) -> usize {
    let t = &family.members[member];
    let tn = t.entries.len();
    assert!(beta < tn, "position {beta} outside the member of length {tn}");
    for gamma in 0..=(tn - beta) {
        let horizon = beta + gamma;
        let settled = family.members.iter().enumerate().all(|(j, u)| {
            if j == member || u.entries.len() < horizon {
                return true;
            }
            if !(0..horizon).all(|p| qa_eq(&u.entries[p], &t.entries[p])) {
                return true;
            }
            u.entries.len() > beta
                && (0..=beta).all(|p| u.entries[p].denotation == t.entries[p].denotation)
        });
        if settled {
            return gamma;
        }
    }
    tn - beta
}

/// Temporary denotation of the last item of `prefix`: the first extending
/// member's assignment. It is provisional until every extender agrees, which
/// is what REDENOTE repairs once a block closes.
pub fn denote(family: &ProcedureFamily, prefix: &[QEntry]) -> Option<Nat> {
    let last = prefix.len().checked_sub(1)?;
    family
        .members
        .iter()
        .find(|m| qa_prefix(prefix, m))
        .and_then(|m| m.entries[last].denotation.clone())
}

/// Settled denotations after a level-`level` block closes at the end of
/// `prefix`: the assignments over the enclosing block's span, from its start
/// through the just-closed block, as (position, denotation) pairs.
pub fn redenote(family: &ProcedureFamily, prefix: &[QEntry], level: u32) -> Vec<(usize, Nat)> {
    let end = prefix.len();
    let Some(t) = family.members.iter().find(|m| qa_prefix(prefix, m)) else {
        return Vec::new();
    };
    let closed = t
        .blocks
        .iter()
        .filter(|b| b.end == end && b.level == level)
        .max_by_key(|b| b.end - b.start);
    let Some(b) = closed else { return Vec::new() };
    let parent = t
        .blocks
        .iter()
        .filter(|p| p.start <= b.start && b.end <= p.end && (p.start, p.end) != (b.start, b.end))
        .min_by_key(|p| p.end - p.start);
    let start = parent.map(|p| p.start).unwrap_or(0);
    (start..end)
        .filter_map(|i| t.entries[i].denotation.clone().map(|d| (i, d)))
        .collect()
}

struct Compiler {
    entries: Vec<QEntry>,
    blocks: Vec<(usize, usize)>,
    meter: Meter,
}

impl Compiler {
    /// Re-tag the denotations of every item from `from` on. Items below a
    /// dispatch keep their local denotation as the second pairing component.
    fn retag(&mut self, from: usize, f: impl Fn(&Nat) -> Nat) {
        for e in &mut self.entries[from..] {
            let d = e.denotation.as_ref().expect("completed frames denote every item");
            e.denotation = Some(f(d));
        }
    }

    fn go(&mut self, e: &Nat, env: &Env) -> Result<Nat, CompResult> {
        if !self.meter.spend(1) {
            return Err(CompResult::BudgetExceeded);
        }
        let parsed = parse(e).ok_or(CompResult::NotAnIndex)?;
        match parsed {
            // Initial schemes query nothing: the calculation is empty.
            KIndex::S1 | KIndex::S2 { .. } | KIndex::S3 | KIndex::S7 => {
                match eval_with(e, env, Mode::Partial, &mut self.meter) {
                    CompResult::Value(v) => Ok(v),
                    other => Err(other),
                }
            }
            KIndex::S4 { e1, e2 } => {
                let m0 = self.entries.len();
                let c = self.go(&e2, env)?;
                self.retag(m0, |d| pair(&nat(0), d));
                let m1 = self.entries.len();
                let v = self.go(&e1, &env.prepend_num(c))?;
                self.retag(m1, |d| pair(&nat(1), d));
                Ok(v)
            }
            KIndex::S6 { e1, tau_o, tau_f, tau_n } => {
                let po = validate_perm(&tau_o, env.oracles.len());
                let pf = validate_perm(&tau_f, env.funs.len());
                let pn = validate_perm(&tau_n, env.nums.len());
                let (po, pf, pn) = match (po, pf, pn) {
                    (Some(a), Some(b), Some(c)) => (a, b, c),
                    _ => return Err(CompResult::NotAnIndex),
                };
                let permuted = Env {
                    n: env.n,
                    oracles: po.iter().map(|&i| env.oracles[i].clone()).collect(),
                    funs: pf.iter().map(|&i| env.funs[i].clone()).collect(),
                    nums: pn.iter().map(|&i| env.nums[i].clone()).collect(),
                };
                self.go(&e1, &permuted)
            }
            KIndex::S9 => {
                let d = env.nums.first().cloned().ok_or(CompResult::NotAnIndex)?;
                self.go(&d, &env.drop_first_num())
            }
            KIndex::S82 { d } => {
                let orc = env.oracles.first().cloned().ok_or(CompResult::NotAnIndex)?;
                let mut g: FinFun = Vec::with_capacity(orc.support());
                for c in 0..orc.support() {
                    let m = self.entries.len();
                    let vc = self.go(&d, &env.prepend_num(nat(c as u64)))?;
                    self.retag(m, |dd| pair(&nat(c as u64 + 1), dd));
                    g.push(vc);
                }
                if !self.meter.spend(1) {
                    return Err(CompResult::BudgetExceeded);
                }
                let a = orc
                    .apply(&g)
                    .ok_or(CompResult::OracleUndefined { site: OracleSite::Oracle(0) })?;
                self.entries.push(QEntry {
                    query: g,
                    answer: Answer::Num(a.clone()),
                    denotation: Some(pair(&nat(0), &nat(0))),
                });
                Ok(a)
            }
            KIndex::S83 { d } => self.induction(&d, env),
        }
    }

    /// One induction application: each stage contributes one block of n
    /// intervals, each interval a ∗-logged stage function followed by the
    /// body calculation for that argument. Denotations are assigned at stage
    /// close, when final-vs-productive is known.
    fn induction(&mut self, d: &Nat, env: &Env) -> Result<Nat, CompResult> {
        let n = env.n;
        let b = env.nums.first().cloned().ok_or(CompResult::NotAnIndex)?;
        let rest = env.drop_first_num();
        let mut f = vec![0u8; n];
        for stage in 0..=n {
            let stage_start = self.entries.len();
            let mut next = f.clone();
            // (log position, body start, body end) per argument
            let mut marks = Vec::with_capacity(n);
            for a in 0..n {
                let mut u: FinFun = Vec::with_capacity(n + 1);
                u.push(nat(a as u64));
                u.extend(f.iter().map(|&bit| nat(bit as u64)));
                let log_pos = self.entries.len();
                self.entries.push(QEntry {
                    query: u.clone(),
                    answer: Answer::Star,
                    denotation: None,
                });
                let body_start = self.entries.len();
                let va = match self.go(d, &rest.prepend_fun(u)) {
                    Ok(v) => v,
                    Err(CompResult::BudgetExceeded) => return Err(CompResult::BudgetExceeded),
                    Err(_) => return Err(CompResult::PartialInduction { stage }),
                };
                marks.push((log_pos, body_start, self.entries.len()));
                if va != nat(0) {
                    next[a] = 1;
                }
            }
            let final_stage = next == f;
            let first_new = (0..n).find(|&x| next[x] == 1 && f[x] == 0);
            for (a, &(log_pos, body_start, body_end)) in marks.iter().enumerate() {
                let d1 = if final_stage {
                    pair(&nat(0), &nat(a as u64))
                } else {
                    let x = first_new.expect("productive stage adds a point") as u64;
                    pair(&nat(x + 1), &nat(a as u64))
                };
                self.entries[log_pos].denotation = Some(pair(&d1, &nat(0)));
                for i in body_start..body_end {
                    let old =
                        self.entries[i].denotation.take().expect("bodies denote every item");
                    self.entries[i].denotation = Some(pair(&d1, &(old + 1u32)));
                }
            }
            self.blocks.push((stage_start, self.entries.len()));
            if final_stage {
                let vb =
                    b.to_usize().filter(|&i| i < n).map(|i| f[i]).unwrap_or(0);
                return Ok(nat(vb as u64));
            }
            f = next;
        }
        unreachable!("induction closes within n+1 stages")
    }

    fn finish(self, value: Option<Nat>) -> CalcString {
        let len = self.entries.len();
        CalcString {
            entries: self.entries,
            value,
            blocks: finalize_blocks(self.blocks, len),
        }
    }
}

/// Compile the calculation a terminating computation writes: its queries in
/// evaluation order, each answered, denoted, and blocked. Oracle queries are
/// recorded against whatever sits in slot 0 at that moment, so the string of
/// a multi-oracle computation interleaves them in evaluation order.
pub fn compile_computation(e: &Nat, env: &Env, budget: u64) -> Result<CalcString, CompResult> {
    on_big_stack(|| {
        let mut c = Compiler { entries: Vec::new(), blocks: Vec::new(), meter: Meter::new(budget) };
        match c.go(e, env) {
            Ok(v) => Ok(c.finish(Some(v))),
            Err(r) => Err(r),
        }
    })
}

/// Compile as far as the budget or a failure allows and keep the emitted
/// prefix. Only blocks that closed are recorded; the truncation point sits
/// inside every still-open stage.
pub fn compile_prefix(e: &Nat, env: &Env, budget: u64) -> CalcString {
    on_big_stack(|| {
        let mut c = Compiler { entries: Vec::new(), blocks: Vec::new(), meter: Meter::new(budget) };
        match c.go(e, env) {
            Ok(v) => c.finish(Some(v)),
            Err(_) => c.finish(None),
        }
    })
}

/// The calculation the induction functional itself performs against a body
/// oracle `g` of support n+1: stage functions are queried pointwise in
/// argument order, each stage is one block, and an item's denotation is
/// ⟨0, a⟩ on the final stage and ⟨x+1, a⟩ on productive stages, x the least
/// point the stage adds.
pub fn i_procedure_calc(g: &Type2Oracle, b: u64, n: usize) -> Result<CalcString, InductionError> {
    assert_eq!(g.support(), n + 1, "body oracle must take a⌢f with f of length n");
    let mut entries: Vec<QEntry> = Vec::new();
    let mut blocks: Vec<(usize, usize)> = Vec::new();
    let mut f = vec![0u8; n];
    for stage in 0..=n {
        let stage_start = entries.len();
        let mut next = f.clone();
        for a in 0..n {
            let mut u: FinFun = Vec::with_capacity(n + 1);
            u.push(nat(a as u64));
            u.extend(f.iter().map(|&bit| nat(bit as u64)));
            let ans = g.apply(&u).ok_or(InductionError::Partiality { stage })?;
            if ans != nat(0) {
                next[a] = 1;
            }
            entries.push(QEntry { query: u, answer: Answer::Num(ans), denotation: None });
        }
        let final_stage = next == f;
        let first_new = (0..n).find(|&x| next[x] == 1 && f[x] == 0);
        for a in 0..n {
            let d = if final_stage {
                pair(&nat(0), &nat(a as u64))
            } else {
                let x = first_new.expect("productive stage adds a point") as u64;
                pair(&nat(x + 1), &nat(a as u64))
            };
            entries[stage_start + a].denotation = Some(d);
        }
        blocks.push((stage_start, entries.len()));
        if final_stage {
            let vb = (b as usize) < n;
            let value = if vb { f[b as usize] } else { 0 };
            let len = entries.len();
            return Ok(CalcString {
                entries,
                value: Some(nat(value as u64)),
                blocks: finalize_blocks(blocks, len),
            });
        }
        f = next;
    }
    unreachable!("induction closes within n+1 stages")
}

/// Order-free packaging of a calculation: the set of denotations, the strict
/// precedence pairs among them, the item keyed by each denotation, and the
/// claimed value. Everything a validator may use; nothing about positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Representation {
    pub d_set: Vec<Nat>,
    pub order: Vec<(Nat, Nat)>,
    pub entries: Vec<(Nat, FinFun, Answer)>,
    pub value: Option<Nat>,
}

impl Representation {
    /// Package a fully denoted calculation; the order lists every pair taken
    /// in string order. None when some item lacks a denotation.
    pub fn of_calc(s: &CalcString) -> Option<Representation> {
        let ds: Option<Vec<Nat>> =
            s.entries.iter().map(|e| e.denotation.clone()).collect();
        let ds = ds?;
        let mut order = Vec::new();
        for i in 0..ds.len() {
            for j in (i + 1)..ds.len() {
                order.push((ds[i].clone(), ds[j].clone()));
            }
        }
        let entries = s
            .entries
            .iter()
            .zip(&ds)
            .map(|(e, d)| (d.clone(), e.query.clone(), e.answer.clone()))
            .collect();
        Some(Representation { d_set: ds, order, entries, value: s.value.clone() })
    }

    /// Reconstruct the item sequence: denotations sorted by predecessor count
    /// under the claimed order, which must be exactly the strict total order
    /// so obtained. Returns (denotation, query, answer) triples in order.
    pub fn sequence(&self) -> Result<Vec<(Nat, FinFun, Answer)>, String> {
        let k = self.d_set.len();
        let dset: BTreeSet<&Nat> = self.d_set.iter().collect();
        if dset.len() != k {
            return Err("duplicate denotations".into());
        }
        for (x, y) in &self.order {
            if x == y || !dset.contains(x) || !dset.contains(y) {
                return Err("order pair outside the denotation set".into());
            }
        }
        let mut pred: BTreeMap<&Nat, usize> = self.d_set.iter().map(|d| (d, 0)).collect();
        let pairs: BTreeSet<(&Nat, &Nat)> =
            self.order.iter().map(|(x, y)| (x, y)).collect();
        for &(_, y) in &pairs {
            *pred.get_mut(y).unwrap() += 1;
        }
        let mut seq: Vec<&Nat> = self.d_set.iter().collect();
        seq.sort_by_key(|d| pred[d]);
        let total: Vec<usize> = seq.iter().map(|d| pred[d]).collect();
        if total != (0..k).collect::<Vec<_>>() {
            return Err("order is not a strict total order".into());
        }
        for i in 0..k {
            for j in (i + 1)..k {
                if !pairs.contains(&(seq[i], seq[j])) {
                    return Err("order is not a strict total order".into());
                }
            }
        }
        if pairs.len() != k * k.saturating_sub(1) / 2 {
            return Err("order is not a strict total order".into());
        }
        let by_d: BTreeMap<&Nat, (&FinFun, &Answer)> =
            self.entries.iter().map(|(d, q, a)| (d, (q, a))).collect();
        if by_d.len() != self.entries.len() || by_d.len() != k {
            return Err("entries do not key the denotation set exactly".into());
        }
        seq.into_iter()
            .map(|d| {
                let (q, a) = by_d
                    .get(d)
                    .ok_or_else(|| "entry missing for a denotation".to_string())?;
                Ok((d.clone(), (*q).clone(), (*a).clone()))
            })
            .collect()
    }
}

/// Validator outcome. Reject carries the first failing clause.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accept(Nat),
    Reject(String),
}

/// Check a representation against an index without consulting any type-2
/// oracle: the recorded answers themselves are trusted wherever an oracle
/// would be asked, and every structural clause of the compilation is
/// re-derived and compared. Accept returns the forced value.
pub fn validate_representation(e: &Nat, env: &Env, repr: &Representation, budget: u64) -> Verdict {
    let seq = match repr.sequence() {
        Ok(s) => s,
        Err(r) => return Verdict::Reject(r),
    };
    // A procedure never answers one query two different ways inside a single
    // calculation; representations claiming that are rejected up front.
    let mut answered: HashMap<&FinFun, &Nat> = HashMap::new();
    for (_, q, a) in &seq {
        if let Answer::Num(v) = a {
            match answered.entry(q) {
                std::collections::hash_map::Entry::Occupied(o) if *o.get() != v => {
                    return Verdict::Reject("one query answered two different ways".into())
                }
                std::collections::hash_map::Entry::Occupied(_) => {}
                std::collections::hash_map::Entry::Vacant(slot) => {
                    slot.insert(v);
                }
            }
        }
    }
    on_big_stack(|| {
        let mut meter = Meter::new(budget);
        match check_repr(e, env, &seq, &mut meter) {
            Ok(v) => match &repr.value {
                Some(c) if *c != v => {
                    Verdict::Reject("declared value differs from the forced value".into())
                }
                _ => Verdict::Accept(v),
            },
            Err(r) => Verdict::Reject(r),
        }
    })
}

type Item = (Nat, FinFun, Answer);

fn strip(items: &[Item], f: impl Fn(&Nat) -> Nat) -> Vec<Item> {
    items.iter().map(|(d, q, a)| (f(d), q.clone(), a.clone())).collect()
}

fn check_repr(e: &Nat, env: &Env, items: &[Item], meter: &mut Meter) -> Result<Nat, String> {
    if !meter.spend(1) {
        return Err("validation budget exhausted".into());
    }
    let parsed = parse(e).ok_or("not an index")?;
    match parsed {
        KIndex::S1 | KIndex::S2 { .. } | KIndex::S3 | KIndex::S7 => {
            if !items.is_empty() {
                return Err("an initial computation queries nothing".into());
            }
            match eval_with(e, env, Mode::Partial, meter) {
                CompResult::Value(v) => Ok(v),
                other => Err(format!("initial computation failed: {other:?}")),
            }
        }
        KIndex::S4 { e1, e2 } => {
            // First part tagged ⟨0,·⟩, second ⟨1,·⟩, in that order.
            let mut split = items.len();
            for (i, (d, _, _)) in items.iter().enumerate() {
                let (tag, _) = unpair(d);
                match tag.to_u32() {
                    Some(0) => {
                        if split < i {
                            return Err("composition parts interleaved".into());
                        }
                    }
                    Some(1) => {
                        if split > i {
                            split = i;
                        }
                    }
                    _ => return Err("composition tag out of range".into()),
                }
            }
            let part0 = strip(&items[..split], |d| unpair(d).1);
            let part1 = strip(&items[split..], |d| unpair(d).1);
            let c = check_repr(&e2, env, &part0, meter)?;
            check_repr(&e1, &env.prepend_num(c), &part1, meter)
        }
        KIndex::S6 { e1, tau_o, tau_f, tau_n } => {
            let po = validate_perm(&tau_o, env.oracles.len());
            let pf = validate_perm(&tau_f, env.funs.len());
            let pn = validate_perm(&tau_n, env.nums.len());
            let (po, pf, pn) = match (po, pf, pn) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => return Err("permutation does not fit the argument lists".into()),
            };
            let permuted = Env {
                n: env.n,
                oracles: po.iter().map(|&i| env.oracles[i].clone()).collect(),
                funs: pf.iter().map(|&i| env.funs[i].clone()).collect(),
                nums: pn.iter().map(|&i| env.nums[i].clone()).collect(),
            };
            check_repr(&e1, &permuted, items, meter)
        }
        KIndex::S9 => {
            let d = env.nums.first().cloned().ok_or("no code argument to dispatch")?;
            check_repr(&d, &env.drop_first_num(), items, meter)
        }
        KIndex::S82 { d } => {
            let support = env
                .oracles
                .first()
                .map(|o| o.support())
                .ok_or("no oracle slot for the application")?;
            let ((dl, g, al), body) =
                items.split_last().ok_or("oracle application records no query")?;
            if *dl != pair(&nat(0), &nat(0)) {
                return Err("terminal oracle entry must be denoted ⟨0,0⟩".into());
            }
            let Answer::Num(a) = al else {
                return Err("terminal oracle entry must carry a numeric answer".into());
            };
            if g.len() != support {
                return Err("query length differs from the oracle arity".into());
            }
            // ω-sum of argument intervals: tags c+1 in ascending c, possibly
            // with empty intervals for initial bodies.
            let mut intervals: Vec<Vec<Item>> = vec![Vec::new(); support];
            let mut cur = 0usize;
            for (dd, q, ans) in body {
                let (tag, rest) = unpair(dd);
                let c = tag
                    .to_usize()
                    .and_then(|t| t.checked_sub(1))
                    .ok_or("argument item carries the terminal tag")?;
                if c < cur || c >= support {
                    return Err("argument intervals out of order".into());
                }
                cur = c;
                intervals[c].push((rest, q.clone(), ans.clone()));
            }
            for (c, seg) in intervals.iter().enumerate() {
                let vc = check_repr(&d, &env.prepend_num(nat(c as u64)), seg, meter)?;
                if vc != g[c] {
                    return Err("argument segment disagrees with the recorded query".into());
                }
            }
            Ok(a.clone())
        }
        KIndex::S83 { d } => check_induction_repr(&d, env, items, meter),
    }
}

fn check_induction_repr(
    d: &Nat,
    env: &Env,
    items: &[Item],
    meter: &mut Meter,
) -> Result<Nat, String> {
    let n = env.n;
    let b = env.nums.first().cloned().ok_or("no numeric argument for the induction")?;
    let rest = env.drop_first_num();
    if n == 0 {
        return if items.is_empty() {
            Ok(nat(0))
        } else {
            Err("induction over an empty base queries nothing".into())
        };
    }
    // Split into intervals: a ⟨d₁,0⟩ log head opens one, ⟨d₁,d₂+1⟩ items
    // belong to the open interval with the same d₁.
    struct Iv {
        d1: Nat,
        u: FinFun,
        body: Vec<Item>,
    }
    let mut ivs: Vec<Iv> = Vec::new();
    for (dd, q, a) in items {
        let (d1, d2) = unpair(dd);
        if d2 == nat(0) {
            if *a != Answer::Star {
                return Err("stage head must be a log entry".into());
            }
            ivs.push(Iv { d1, u: q.clone(), body: Vec::new() });
        } else {
            let iv = ivs.last_mut().ok_or("body item before any log entry")?;
            if iv.d1 != d1 {
                return Err("body item tagged for a different log entry".into());
            }
            iv.body.push((d2 - 1u32, q.clone(), a.clone()));
        }
    }
    let mut f = vec![0u8; n];
    let mut pos = 0usize;
    for _stage in 0..=n {
        if ivs.len() < pos + n {
            return Err("incomplete induction stage".into());
        }
        let mut next = f.clone();
        let mut d1s = Vec::with_capacity(n);
        for a in 0..n {
            let iv = &ivs[pos + a];
            let mut u: FinFun = Vec::with_capacity(n + 1);
            u.push(nat(a as u64));
            u.extend(f.iter().map(|&bit| nat(bit as u64)));
            if iv.u != u {
                return Err("log entry differs from the stage function".into());
            }
            let v = check_repr(d, &rest.prepend_fun(u), &iv.body, meter)?;
            if v != nat(0) {
                next[a] = 1;
            }
            d1s.push(iv.d1.clone());
        }
        pos += n;
        let final_stage = next == f;
        let first_new = (0..n).find(|&x| next[x] == 1 && f[x] == 0);
        for (a, d1) in d1s.iter().enumerate() {
            let want = if final_stage {
                pair(&nat(0), &nat(a as u64))
            } else {
                let x = first_new.expect("productive stage adds a point") as u64;
                pair(&nat(x + 1), &nat(a as u64))
            };
            if *d1 != want {
                return Err("stage denotation does not match the trajectory".into());
            }
        }
        if final_stage {
            if pos != ivs.len() {
                return Err("items beyond the closing stage".into());
            }
            let vb = b.to_usize().filter(|&i| i < n).map(|i| f[i]).unwrap_or(0);
            return Ok(nat(vb as u64));
        }
        f = next;
    }
    Err("induction fails to close within n+1 stages".into())
}

/// The coded universe over which the history induction runs: one code per
/// point, a set of points coding a calculation prefix as entries plus their
/// precedence order.
#[derive(Clone, Debug)]
pub struct GammaUniverse {
    pub codes: Vec<Nat>,
}

fn acode(a: &Answer) -> Nat {
    match a {
        Answer::Star => nat(0),
        Answer::Num(v) => v + 1u32,
    }
}

fn entry_codes(q: &FinFun, a: &Answer, d: &Nat) -> Vec<Nat> {
    (0..=q.len())
        .map(|m| pair(&nat(0), &pair(&prefix_code(q, m), &pair(&acode(a), d))))
        .collect()
}

/// Decode a point set as (query, answer, denotation) triples in precedence
/// order. None when the set is not exactly a coded string: every entry must
/// carry all its query prefixes and one answer, and the precedence pairs must
/// list a strict total order in full.
fn decode_points(codes: &[Nat], x: &FinSet) -> Option<Vec<(FinFun, Answer, Nat)>> {
    let mut per_d: BTreeMap<Nat, (BTreeSet<Nat>, BTreeSet<Nat>)> = BTreeMap::new();
    let mut pairs: BTreeSet<(Nat, Nat)> = BTreeSet::new();
    for idx in x.iter() {
        let code = &codes[idx.to_usize()?];
        let (kind, rest) = unpair(code);
        if kind == nat(0) {
            let (fbar, rest2) = unpair(&rest);
            let (ac, d) = unpair(&rest2);
            let slot = per_d.entry(d).or_default();
            slot.0.insert(fbar);
            slot.1.insert(ac);
        } else if kind == nat(1) {
            let (d1, d2) = unpair(&rest);
            pairs.insert((d1, d2));
        } else {
            return None;
        }
    }
    let mut decoded: BTreeMap<Nat, (FinFun, Answer)> = BTreeMap::new();
    for (d, (fbars, acs)) in per_d {
        if acs.len() != 1 {
            return None;
        }
        let ac = acs.into_iter().next().unwrap();
        let answer = if ac == nat(0) { Answer::Star } else { Answer::Num(ac - 1u32) };
        let mut query: Option<FinFun> = None;
        for c in &fbars {
            let v = decode_seq(c)?;
            if query.as_ref().map(|q| v.len() > q.len()).unwrap_or(true) {
                query = Some(v);
            }
        }
        let query = query?;
        let want: BTreeSet<Nat> = (0..=query.len()).map(|m| prefix_code(&query, m)).collect();
        if fbars != want {
            return None;
        }
        decoded.insert(d, (query, answer));
    }
    let k = decoded.len();
    let mut pred: BTreeMap<&Nat, usize> = decoded.keys().map(|d| (d, 0)).collect();
    for (x1, y) in &pairs {
        if x1 == y || !decoded.contains_key(x1) || !decoded.contains_key(y) {
            return None;
        }
        *pred.get_mut(y).unwrap() += 1;
    }
    let mut ds: Vec<&Nat> = decoded.keys().collect();
    ds.sort_by_key(|d| pred[*d]);
    if ds.iter().map(|d| pred[*d]).ne(0..k) {
        return None;
    }
    for i in 0..k {
        for j in (i + 1)..k {
            if !pairs.contains(&((*ds[i]).clone(), (*ds[j]).clone())) {
                return None;
            }
        }
    }
    if pairs.len() != k * k.saturating_sub(1) / 2 {
        return None;
    }
    let ds: Vec<Nat> = ds.into_iter().cloned().collect();
    Some(
        ds.into_iter()
            .map(|d| {
                let (q, a) = decoded[&d].clone();
                (q, a, d)
            })
            .collect(),
    )
}

/// The step functional Γ whose least fixed point codes the calculation
/// matching `f`: a set coding a proper prefix grows by the next entry, with
/// the query from the procedure, the answer from `f` (∗ for log items), and
/// the denotation read off the member being followed; anything else is fixed.
/// Undefined exactly when `f` is asked outside its domain.
pub fn gamma_of(family: &ProcedureFamily, f: &Type2Oracle) -> (StepFunctional, GammaUniverse) {
    let mut universe: BTreeSet<Nat> = BTreeSet::new();
    for m in &family.members {
        let ds: Vec<&Nat> = m
            .entries
            .iter()
            .map(|e| e.denotation.as_ref().expect("family members are fully denoted"))
            .collect();
        for (e, d) in m.entries.iter().zip(&ds) {
            universe.extend(entry_codes(&e.query, &e.answer, d));
        }
        for i in 0..ds.len() {
            for j in (i + 1)..ds.len() {
                universe.insert(pair(&nat(1), &pair(ds[i], ds[j])));
            }
        }
    }
    let codes: Vec<Nat> = universe.into_iter().collect();
    let index: HashMap<Nat, usize> =
        codes.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
    let members = family.members.clone();
    let f = f.clone();
    let codes_in = codes.clone();
    let step = StepFunctional::from_fn(nat(codes.len() as u64), move |x| {
        let Some(cand) = decode_points(&codes_in, x) else {
            return Some(x.clone());
        };
        let extends = |m: &CalcString| {
            m.entries.len() >= cand.len()
                && cand.iter().zip(&m.entries).all(|((q, a, d), e)| {
                    e.query == *q && e.answer == *a && e.denotation.as_ref() == Some(d)
                })
        };
        if members.iter().any(|m| m.entries.len() == cand.len() && extends(m)) {
            // Complete calculation: a fixed point of the induction.
            return Some(x.clone());
        }
        let candidates: Vec<&CalcString> = members.iter().filter(|m| extends(m)).collect();
        if candidates.is_empty() {
            return Some(x.clone());
        }
        // All extenders pose the same next query and agree on its kind.
        let probe = &candidates[0].entries[cand.len()];
        let answer = if probe.answer == Answer::Star {
            Answer::Star
        } else {
            match f.apply(&probe.query) {
                Some(v) => Answer::Num(v),
                None => return None,
            }
        };
        // Denotations must be those of the calculation matching f in full,
        // not of whichever member happens to share the next answer; the
        // former is the string the fixed point is meant to code.
        let followed = candidates
            .iter()
            .find(|m| m.entries[cand.len()].answer == answer && m.matches(&f));
        let Some(followed) = followed else {
            // The oracle walked outside the family; nothing to extend along.
            return Some(x.clone());
        };
        let next_entry = &followed.entries[cand.len()];
        let d_next =
            next_entry.denotation.as_ref().expect("family members are fully denoted");
        let mut grown = x.clone();
        for code in entry_codes(&next_entry.query, &answer, d_next) {
            let i = index.get(&code).expect("universe covers member points");
            grown.insert(nat(*i as u64)).expect("index within base");
        }
        for (_, _, d_prev) in &cand {
            let code = pair(&nat(1), &pair(d_prev, d_next));
            let i = index.get(&code).expect("universe covers member pairs");
            grown.insert(nat(*i as u64)).expect("index within base");
        }
        Some(grown)
    });
    (step, GammaUniverse { codes })
}

/// Decode a history set back into a calculation: the coded prefix must be a
/// complete member, whose value and blocks it inherits.
pub fn decode_history(
    family: &ProcedureFamily,
    universe: &GammaUniverse,
    x: &FinSet,
) -> Result<CalcString, ProcError> {
    let cand = decode_points(&universe.codes, x).ok_or(ProcError::BadCode)?;
    let entries: Vec<QEntry> = cand
        .iter()
        .map(|(q, a, d)| QEntry {
            query: q.clone(),
            answer: a.clone(),
            denotation: Some(d.clone()),
        })
        .collect();
    let full = family
        .members
        .iter()
        .find(|m| m.entries.len() == entries.len() && m.entries == entries)
        .ok_or(ProcError::HistoryIncomplete)?;
    Ok(full.clone())
}

/// The honest evaluation: run the history induction to its least fixed point
/// and decode. The set itself is the history; the calculation carries the
/// value and every intermediate query and answer.
pub fn honest_history(
    family: &ProcedureFamily,
    f: &Type2Oracle,
) -> Result<(FinSet, CalcString), ProcError> {
    let (step, universe) = gamma_of(family, f);
    let trace = iterate(&step);
    if let Some(stage) = trace.failed_at() {
        return Err(ProcError::HistoryUndefined { stage });
    }
    let x = trace.lfp().expect("closed induction has a fixed point").clone();
    let calc = decode_history(family, &universe, &x)?;
    Ok((x, calc))
}
