//! Computation trees and norms for terminating computations.
//!
//! Children are exactly the immediate subcomputations of each scheme, in
//! evaluation order: composition lists the inner computation then the outer
//! one; oracle application lists the argument computations for b < support;
//! induction application lists the body computations stage by stage (argument
//! ascending within a stage) up to and including the closing stage.

use super::env::{parse, validate_perm, Env, KIndex};
use super::eval::{eval_with, induction_body, CompResult, Meter, Mode};
use crate::foundations::{nat, Nat};
use num_traits::ToPrimitive;

/// A fully materialised terminating computation.
#[derive(Clone, Debug)]
pub struct CompTree {
    pub code: Nat,
    pub env: Env,
    pub children: Vec<CompTree>,
    pub norm: u64,
    pub value: Nat,
}

/// Tree construction recurses once per chain link, and probing a divergent
/// self-application chain keeps descending until the budget runs out, so the
/// recursion depth is bounded only by the budget. Run it on a worker thread
/// with a generous stack reservation (virtual; pages commit only when
/// touched) instead of capping the depth.
const WORKER_STACK: usize = 256 << 20;

pub(crate) fn on_big_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(WORKER_STACK)
            .spawn_scoped(s, f)
            .expect("tree worker spawn")
            .join()
            .expect("tree worker panicked")
    })
}

/// Build the computation tree of a terminating evaluation under partial
/// semantics. Non-terminating or failing computations return the failure.
pub fn eval_tree(e: &Nat, env: &Env, budget: u64) -> Result<CompTree, CompResult> {
    on_big_stack(|| {
        let mut meter = Meter::new(budget);
        tree_with(e, env, &mut meter)
    })
}

/// The norm (ordinal rank at finite scale) of a terminating computation:
/// initial schemes rank 0, every other scheme one more than the maximum of
/// its immediate subcomputations.
pub fn norm(e: &Nat, env: &Env, budget: u64) -> Result<u64, CompResult> {
    on_big_stack(|| {
        let mut meter = Meter::new(budget);
        norm_value(e, env, &mut meter).map(|(n, _)| n)
    })
}

fn leaf_eval(e: &Nat, env: &Env, meter: &mut Meter) -> Result<Nat, CompResult> {
    match eval_with(e, env, Mode::Partial, meter) {
        CompResult::Value(v) => Ok(v),
        other => Err(other),
    }
}

fn tree_with(e: &Nat, env: &Env, meter: &mut Meter) -> Result<CompTree, CompResult> {
    if !meter.spend(1) {
        return Err(CompResult::BudgetExceeded);
    }
    let parsed = parse(e).ok_or(CompResult::NotAnIndex)?;
    let mk = |children: Vec<CompTree>, value: Nat, env: &Env| {
        let norm = children.iter().map(|c| c.norm + 1).max().unwrap_or(0);
        CompTree { code: e.clone(), env: env.clone(), children, norm, value }
    };
    match parsed {
        KIndex::S1 | KIndex::S2 { .. } | KIndex::S3 | KIndex::S7 => {
            let v = leaf_eval(e, env, meter)?;
            Ok(mk(vec![], v, env))
        }
        KIndex::S4 { e1, e2 } => {
            let t2 = tree_with(&e2, env, meter)?;
            let env1 = env.prepend_num(t2.value.clone());
            let t1 = tree_with(&e1, &env1, meter)?;
            let v = t1.value.clone();
            Ok(mk(vec![t2, t1], v, env))
        }
        KIndex::S6 { e1, tau_o, tau_f, tau_n } => {
            let po = validate_perm(&tau_o, env.oracles.len()).ok_or(CompResult::NotAnIndex)?;
            let pf = validate_perm(&tau_f, env.funs.len()).ok_or(CompResult::NotAnIndex)?;
            let pn = validate_perm(&tau_n, env.nums.len()).ok_or(CompResult::NotAnIndex)?;
            let penv = Env {
                n: env.n,
                oracles: po.iter().map(|&i| env.oracles[i].clone()).collect(),
                funs: pf.iter().map(|&i| env.funs[i].clone()).collect(),
                nums: pn.iter().map(|&i| env.nums[i].clone()).collect(),
            };
            let t = tree_with(&e1, &penv, meter)?;
            let v = t.value.clone();
            Ok(mk(vec![t], v, env))
        }
        KIndex::S9 => {
            let d = env.nums.first().cloned().ok_or(CompResult::NotAnIndex)?;
            let t = tree_with(&d, &env.drop_first_num(), meter)?;
            let v = t.value.clone();
            Ok(mk(vec![t], v, env))
        }
        KIndex::S82 { d } => {
            let orc = env.oracles.first().cloned().ok_or(CompResult::NotAnIndex)?;
            let mut children = Vec::with_capacity(orc.support());
            let mut g = Vec::with_capacity(orc.support());
            for a in 0..orc.support() {
                let t = tree_with(&d, &env.prepend_num(nat(a as u64)), meter)?;
                g.push(t.value.clone());
                children.push(t);
            }
            if !meter.spend(1) {
                return Err(CompResult::BudgetExceeded);
            }
            match orc.apply(&g) {
                Some(v) => Ok(mk(children, v, env)),
                None => Err(CompResult::OracleUndefined {
                    site: super::env::OracleSite::Oracle(0),
                }),
            }
        }
        KIndex::S83 { d } => {
            let n = env.n;
            let b = env.nums.first().cloned().ok_or(CompResult::NotAnIndex)?;
            let rest = env.drop_first_num();
            let mut children = Vec::new();
            let mut f = vec![0u8; n];
            for stage in 0..=n {
                let mut next = f.clone();
                for a in 0..n {
                    let mut u = Vec::with_capacity(n + 1);
                    u.push(nat(a as u64));
                    u.extend(f.iter().map(|&bit| nat(bit as u64)));
                    let t = tree_with(&d, &rest.prepend_fun(u), meter);
                    let t = match t {
                        Ok(t) => t,
                        Err(CompResult::BudgetExceeded) => return Err(CompResult::BudgetExceeded),
                        Err(_) => return Err(CompResult::PartialInduction { stage }),
                    };
                    if !t.value.to_u64().map(|x| x == 0).unwrap_or(false) {
                        next[a] = 1;
                    }
                    children.push(t);
                }
                if next == f {
                    let vb = b.to_usize().filter(|&i| i < n).map(|i| f[i]).unwrap_or(0);
                    return Ok(mk(children, nat(vb as u64), env));
                }
                f = next;
            }
            unreachable!("induction closes within n+1 stages");
        }
    }
}

/// Norm and value together, without materialising the tree.
fn norm_value(e: &Nat, env: &Env, meter: &mut Meter) -> Result<(u64, Nat), CompResult> {
    if !meter.spend(1) {
        return Err(CompResult::BudgetExceeded);
    }
    let parsed = parse(e).ok_or(CompResult::NotAnIndex)?;
    match parsed {
        KIndex::S1 | KIndex::S2 { .. } | KIndex::S3 | KIndex::S7 => {
            Ok((0, leaf_eval(e, env, meter)?))
        }
        KIndex::S4 { e1, e2 } => {
            let (n2, b) = norm_value(&e2, env, meter)?;
            let (n1, v) = norm_value(&e1, &env.prepend_num(b), meter)?;
            Ok((n1.max(n2) + 1, v))
        }
        KIndex::S6 { e1, tau_o, tau_f, tau_n } => {
            let po = validate_perm(&tau_o, env.oracles.len()).ok_or(CompResult::NotAnIndex)?;
            let pf = validate_perm(&tau_f, env.funs.len()).ok_or(CompResult::NotAnIndex)?;
            let pn = validate_perm(&tau_n, env.nums.len()).ok_or(CompResult::NotAnIndex)?;
            let penv = Env {
                n: env.n,
                oracles: po.iter().map(|&i| env.oracles[i].clone()).collect(),
                funs: pf.iter().map(|&i| env.funs[i].clone()).collect(),
                nums: pn.iter().map(|&i| env.nums[i].clone()).collect(),
            };
            let (n1, v) = norm_value(&e1, &penv, meter)?;
            Ok((n1 + 1, v))
        }
        KIndex::S9 => {
            let d = env.nums.first().cloned().ok_or(CompResult::NotAnIndex)?;
            let (n1, v) = norm_value(&d, &env.drop_first_num(), meter)?;
            Ok((n1 + 1, v))
        }
        KIndex::S82 { d } => {
            let orc = env.oracles.first().cloned().ok_or(CompResult::NotAnIndex)?;
            let mut worst = 0;
            let mut g = Vec::with_capacity(orc.support());
            for a in 0..orc.support() {
                let (na, va) = norm_value(&d, &env.prepend_num(nat(a as u64)), meter)?;
                worst = worst.max(na);
                g.push(va);
            }
            if !meter.spend(1) {
                return Err(CompResult::BudgetExceeded);
            }
            match orc.apply(&g) {
                Some(v) => Ok((worst + 1, v)),
                None => Err(CompResult::OracleUndefined {
                    site: super::env::OracleSite::Oracle(0),
                }),
            }
        }
        KIndex::S83 { d } => {
            let n = env.n;
            let b = env.nums.first().cloned().ok_or(CompResult::NotAnIndex)?;
            let rest = env.drop_first_num();
            let mut worst = 0;
            let mut f = vec![0u8; n];
            for stage in 0..=n {
                let mut next = f.clone();
                for a in 0..n {
                    match norm_value_body(&d, &rest, a, &f, meter) {
                        Ok((na, va)) => {
                            worst = worst.max(na);
                            if !va.to_u64().map(|x| x == 0).unwrap_or(false) {
                                next[a] = 1;
                            }
                        }
                        Err(CompResult::BudgetExceeded) => return Err(CompResult::BudgetExceeded),
                        Err(_) => return Err(CompResult::PartialInduction { stage }),
                    }
                }
                if next == f {
                    let vb = b.to_usize().filter(|&i| i < n).map(|i| f[i]).unwrap_or(0);
                    return Ok((worst + 1, nat(vb as u64)));
                }
                f = next;
            }
            unreachable!("induction closes within n+1 stages");
        }
    }
}

fn norm_value_body(
    d: &Nat,
    rest: &Env,
    a: usize,
    f: &[u8],
    meter: &mut Meter,
) -> Result<(u64, Nat), CompResult> {
    let mut u = Vec::with_capacity(f.len() + 1);
    u.push(nat(a as u64));
    u.extend(f.iter().map(|&bit| nat(bit as u64)));
    norm_value(d, &rest.prepend_fun(u), meter)
}

/// Lazily materialised child computations, for comparison and tracing.
/// Materialising a child may require evaluating a prerequisite (the inner
/// value of a composition, the earlier stages of an induction); when that
/// prerequisite dies of budget the list ends with an undetermined marker.
#[derive(Clone, Debug)]
pub(crate) enum Child {
    Comp(Nat, Env),
    StuckBudget,
}

pub(crate) fn children_of(e: &Nat, env: &Env, meter: &mut Meter) -> Vec<Child> {
    let parsed = match parse(e) {
        Some(p) => p,
        None => return vec![],
    };
    match parsed {
        KIndex::S1 | KIndex::S2 { .. } | KIndex::S3 | KIndex::S7 => vec![],
        KIndex::S4 { e1, e2 } => {
            let mut out = vec![Child::Comp(e2.clone(), env.clone())];
            match eval_with(&e2, env, Mode::Partial, meter) {
                CompResult::Value(b) => out.push(Child::Comp(e1, env.prepend_num(b))),
                CompResult::BudgetExceeded => out.push(Child::StuckBudget),
                _ => {} // the divergence is visible through the first child
            }
            out
        }
        KIndex::S6 { e1, tau_o, tau_f, tau_n } => {
            let po = validate_perm(&tau_o, env.oracles.len());
            let pf = validate_perm(&tau_f, env.funs.len());
            let pn = validate_perm(&tau_n, env.nums.len());
            match (po, pf, pn) {
                (Some(po), Some(pf), Some(pn)) => {
                    let penv = Env {
                        n: env.n,
                        oracles: po.iter().map(|&i| env.oracles[i].clone()).collect(),
                        funs: pf.iter().map(|&i| env.funs[i].clone()).collect(),
                        nums: pn.iter().map(|&i| env.nums[i].clone()).collect(),
                    };
                    vec![Child::Comp(e1, penv)]
                }
                _ => vec![],
            }
        }
        KIndex::S9 => match env.nums.first() {
            Some(d) => vec![Child::Comp(d.clone(), env.drop_first_num())],
            None => vec![],
        },
        KIndex::S82 { d } => match env.oracles.first() {
            Some(orc) => (0..orc.support())
                .map(|a| Child::Comp(d.clone(), env.prepend_num(nat(a as u64))))
                .collect(),
            None => vec![],
        },
        KIndex::S83 { d } => {
            let n = env.n;
            if env.nums.is_empty() {
                return vec![];
            }
            let rest = env.drop_first_num();
            let mut out = Vec::new();
            let mut f = vec![0u8; n];
            for _stage in 0..=n {
                let mut next = f.clone();
                let mut failed = false;
                let mut stuck = false;
                for a in 0..n {
                    let mut u = Vec::with_capacity(n + 1);
                    u.push(nat(a as u64));
                    u.extend(f.iter().map(|&bit| nat(bit as u64)));
                    out.push(Child::Comp(d.clone(), rest.prepend_fun(u)));
                    match induction_body(&d, &rest, a, &f, Mode::Partial, meter) {
                        CompResult::Value(v) => {
                            if !v.to_u64().map(|x| x == 0).unwrap_or(false) {
                                next[a] = 1;
                            }
                        }
                        CompResult::BudgetExceeded => {
                            stuck = true;
                            break;
                        }
                        _ => failed = true,
                    }
                }
                if stuck {
                    out.push(Child::StuckBudget);
                    break;
                }
                if failed || next == f {
                    break;
                }
                f = next;
            }
            out
        }
    }
}
