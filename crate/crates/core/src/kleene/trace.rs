//! Top-down witness extraction for non-terminating computations: follow the
//! leftmost subcomputation that fails to settle, one level per frame.
//!
//! For a computation without a value there is always such a path: every
//! immediate subcomputation to the left of the chosen one converges, and the
//! walk either reaches a computation that fails outright with no unsettled
//! subcomputation of its own, or keeps descending until the frame budget is
//! spent (the genuinely infinite case).

use super::env::Env;
use super::eval::{eval_p, CompResult, Meter};
use super::tree::{children_of, Child};
use crate::foundations::Nat;

/// One level of the descent. `descend` is the index (within the immediate
/// subcomputations, in evaluation order) of the child the walk moved into;
/// `None` marks the terminal frame of a walk that ended in a definite
/// failure.
#[derive(Clone, Debug)]
pub struct CompFrame {
    pub code: Nat,
    pub env: Env,
    pub descend: Option<usize>,
}

/// How the walk ended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceEnd {
    /// The walk reached a computation that fails with every immediate
    /// subcomputation settled (or with none at all); the result is its
    /// failure.
    DefiniteFailure(CompResult),
    /// The frame budget ran out while the walk was still descending.
    BudgetCut,
}

/// The walk only applies to computations without a value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceError {
    Terminates(Nat),
}

/// Walk the leftmost-unsettled path of a non-terminating computation.
///
/// `budget` bounds both the evaluation effort per probe and the number of
/// frames. Traces that end in `BudgetCut` contain only descending frames;
/// traces that end in `DefiniteFailure` finish with exactly one frame whose
/// `descend` is `None`.
pub fn moschovakis_trace(
    e: &Nat,
    env: &Env,
    budget: u64,
) -> Result<(Vec<CompFrame>, TraceEnd), TraceError> {
    if let CompResult::Value(v) = eval_p(e, env, budget) {
        return Err(TraceError::Terminates(v));
    }
    let mut frames: Vec<CompFrame> = Vec::new();
    let mut code = e.clone();
    let mut env = env.clone();
    loop {
        if frames.len() as u64 >= budget {
            return Ok((frames, TraceEnd::BudgetCut));
        }
        let mut meter = Meter::new(budget);
        let kids = children_of(&code, &env, &mut meter);
        let mut next: Option<(usize, Nat, Env)> = None;
        let mut stuck = false;
        for (i, kid) in kids.iter().enumerate() {
            match kid {
                Child::Comp(c, en) => {
                    if eval_p(c, en, budget).is_value() {
                        continue;
                    }
                    next = Some((i, c.clone(), en.clone()));
                    break;
                }
                Child::StuckBudget => {
                    stuck = true;
                    break;
                }
            }
        }
        if stuck {
            return Ok((frames, TraceEnd::BudgetCut));
        }
        match next {
            Some((i, c, en)) => {
                frames.push(CompFrame {
                    code: code.clone(),
                    env: env.clone(),
                    descend: Some(i),
                });
                code = c;
                env = en;
            }
            None => {
                let r = eval_p(&code, &env, budget);
                if r == CompResult::BudgetExceeded {
                    // the failure is not intrinsic, the probe just starved
                    return Ok((frames, TraceEnd::BudgetCut));
                }
                frames.push(CompFrame {
                    code,
                    env,
                    descend: None,
                });
                return Ok((frames, TraceEnd::DefiniteFailure(r)));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::foundations::nat;
    use crate::kleene::asm::*;
    use crate::kleene::env::{OracleSite, Type2Oracle};
    use num_traits::ToPrimitive;

    #[test]
    fn terminating_computation_is_refused() {
        let env = Env::new(2).with_nums_u64(&[3]);
        match moschovakis_trace(&k1(), &env, 1000) {
            Err(TraceError::Terminates(v)) => assert_eq!(v, nat(4)),
            other => panic!("expected a refusal, got {other:?}"),
        }
    }

    #[test]
    fn pure_dispatch_chain_fills_the_budget_exactly() {
        // every frame consumes one dispatch code and exposes the next
        let budget = 40u64;
        let nums: Vec<Nat> = std::iter::repeat(k9()).take(budget as usize + 5).collect();
        let env = Env::new(2).with_nums(nums);
        let (frames, end) = moschovakis_trace(&k9(), &env, budget).unwrap();
        assert_eq!(end, TraceEnd::BudgetCut);
        assert_eq!(frames.len(), budget as usize);
        assert!(frames.iter().all(|f| f.descend == Some(0)));
        assert!(frames.iter().all(|f| f.code == k9()));
    }

    #[test]
    fn self_application_alternates_forever() {
        let lp = loop_idx();
        let env = Env::new(2).with_nums_u64(&[1]);
        let (frames, end) = moschovakis_trace(&lp, &env, 31).unwrap();
        assert_eq!(end, TraceEnd::BudgetCut);
        assert_eq!(frames.len(), 31);
        assert_eq!(frames[0].code, lp);
        // after the first step the walk cycles between the self-applier and
        // the dispatch scheme
        for (i, f) in frames.iter().enumerate().skip(1) {
            let want = if i % 2 == 1 { diag() } else { k9() };
            assert_eq!(f.code, want, "frame {i}");
        }
    }

    #[test]
    fn intrinsic_failure_ends_the_walk() {
        // the second composition leg settles, the first reads f₁ off its end
        let e = k4(&k7(), &k3());
        let env = Env::new(2).with_funs(vec![vec![nat(0), nat(0)]]).with_nums_u64(&[5]);
        let (frames, end) = moschovakis_trace(&e, &env, 1000).unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!(frames[0].descend, Some(1));
        assert_eq!(frames[1].code, k7());
        assert_eq!(frames[1].descend, None);
        assert_eq!(
            end,
            TraceEnd::DefiniteFailure(CompResult::OracleUndefined {
                site: OracleSite::Fun(0)
            })
        );
    }

    #[test]
    fn left_siblings_of_every_frame_terminate() {
        // an induction whose body fails on one argument mid-trajectory
        let orc = Type2Oracle::from_fn(4, |g: &[Nat]| {
            let a = g[0].to_u64()?;
            match a {
                0 => Some(nat(1)),
                1 => {
                    if g[1] == nat(1) {
                        None // hole once argument 0 has entered
                    } else {
                        Some(nat(0))
                    }
                }
                _ => Some(nat(0)),
            }
        });
        let e = k83(&k82(&k7()));
        let env = Env::new(3).with_oracles(vec![orc]).with_nums_u64(&[0]);
        let budget = 100_000u64;
        let (frames, end) = moschovakis_trace(&e, &env, budget).unwrap();
        assert!(matches!(end, TraceEnd::DefiniteFailure(_)));
        for w in frames.windows(2) {
            let parent = &w[0];
            let idx = parent.descend.expect("inner frames descend");
            let mut meter = Meter::new(budget);
            let kids = children_of(&parent.code, &parent.env, &mut meter);
            for kid in &kids[..idx] {
                match kid {
                    Child::Comp(c, en) => assert!(eval_p(c, en, budget).is_value()),
                    Child::StuckBudget => panic!("left sibling undetermined"),
                }
            }
            match &kids[idx] {
                Child::Comp(c, en) => {
                    assert_eq!(c, &w[1].code);
                    assert_eq!(en.nums, w[1].env.nums);
                }
                Child::StuckBudget => panic!("descended into an undetermined child"),
            }
        }
    }
}
