//! Selection over a finite scope: pick an argument below the scope bound for
//! which the given computation converges, preferring arguments whose
//! computation settles at the earliest stage.

use super::compare::{stage_compare, CompareError};
use super::env::Env;
use super::eval::{eval_p, CompResult};
use crate::foundations::{nat, Nat};

/// Selection failure: no argument below the scope bound converges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SelectError;

impl std::fmt::Display for SelectError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "no argument below the scope bound converges")
    }
}

impl std::error::Error for SelectError {}

/// Test oracle for selection: the first argument (in ascending order) whose
/// computation converges within the budget.
pub fn naive_select(e: &Nat, env: &Env, budget: u64) -> Option<Nat> {
    (0..env.n)
        .map(|k| nat(k as u64))
        .find(|k| eval_p(e, &env.prepend_num(k.clone()), budget).is_value())
}

/// Stage-guided selection: run a tournament between candidate arguments,
/// keeping whichever side the stage comparison ranks lower. Divergent
/// candidates lose every pairing against convergent ones, so a champion
/// survives whenever any candidate converges, without probing each candidate
/// to exhaustion first.
pub fn gandy_select(e: &Nat, env: &Env, budget: u64) -> Result<Nat, SelectError> {
    let cand_env = |k: usize| env.prepend_num(nat(k as u64));
    let mut champ: Option<usize> = None;
    for k in 0..env.n {
        let c = match champ {
            None => {
                champ = Some(k);
                continue;
            }
            Some(c) => c,
        };
        match stage_compare(e, &cand_env(c), e, &cand_env(k), budget) {
            Ok(1) => {}
            Ok(_) => champ = Some(k),
            Err(CompareError::NeitherTerminates) => champ = None,
            Err(CompareError::Budget) => {
                // comparison undecided: fall back to direct probes, keeping a
                // convergent side when there is one
                if eval_p(e, &cand_env(c), budget).is_value() {
                    // keep the champion
                } else if eval_p(e, &cand_env(k), budget).is_value() {
                    champ = Some(k);
                } else {
                    champ = None;
                }
            }
        }
    }
    if let Some(c) = champ {
        if let CompResult::Value(_) = eval_p(e, &cand_env(c), budget) {
            return Ok(nat(c as u64));
        }
    }
    // the tournament came up empty-handed; a direct sweep is still honest
    naive_select(e, env, budget).ok_or(SelectError)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kleene::asm::*;

    /// Dispatch through a code table: the selected argument picks the code,
    /// which then runs on the remaining arguments.
    fn dispatch_env(n: usize, table: Vec<Nat>, rest: &[u64]) -> (Nat, Env) {
        let e = k4(&k9(), &k7());
        let env = Env::new(n)
            .with_funs(vec![table])
            .with_nums_u64(rest);
        (e, env)
    }

    #[test]
    fn picks_a_convergent_argument() {
        let (e, env) = dispatch_env(2, vec![loop_idx(), k1()], &[5]);
        assert_eq!(naive_select(&e, &env, 4000), Some(nat(1)));
        assert_eq!(gandy_select(&e, &env, 4000), Ok(nat(1)));
    }

    #[test]
    fn prefers_the_earliest_stage_not_the_smallest_argument() {
        // argument 0 runs a taller composition tower than argument 1; the
        // naive sweep stops at 0, the tournament settles on 1
        let tall = k4(&k1(), &k4(&k1(), &k4(&k1(), &k1())));
        let (e, env) = dispatch_env(2, vec![tall, k1()], &[5]);
        assert_eq!(naive_select(&e, &env, 1 << 14), Some(nat(0)));
        assert_eq!(gandy_select(&e, &env, 1 << 14), Ok(nat(1)));
    }

    #[test]
    fn ties_keep_the_first_candidate() {
        let (e, env) = dispatch_env(3, vec![k1(), k1(), k1()], &[5]);
        assert_eq!(gandy_select(&e, &env, 1 << 14), Ok(nat(0)));
    }

    #[test]
    fn empty_scope_fails() {
        let (e, env) = dispatch_env(0, vec![k1()], &[5]);
        assert_eq!(naive_select(&e, &env, 1000), None);
        assert_eq!(gandy_select(&e, &env, 1000), Err(SelectError));
    }

    #[test]
    fn all_divergent_fails() {
        let (e, env) = dispatch_env(2, vec![loop_idx(), loop_idx()], &[5]);
        assert_eq!(naive_select(&e, &env, 2000), None);
        assert_eq!(gandy_select(&e, &env, 2000), Err(SelectError));
    }

    #[test]
    fn definite_failures_are_skipped_too() {
        // argument 0 dispatches a non-index, argument 2 a divergent code
        let (e, env) = dispatch_env(3, vec![nat(0), k1(), loop_idx()], &[5]);
        assert_eq!(naive_select(&e, &env, 4000), Some(nat(1)));
        assert_eq!(gandy_select(&e, &env, 4000), Ok(nat(1)));
    }

    #[test]
    fn existence_matches_the_naive_sweep() {
        let tables: Vec<Vec<Nat>> = vec![
            vec![loop_idx(), loop_idx(), k1()],
            vec![nat(0), nat(7), loop_idx()],
            vec![k3(), loop_idx(), k1()],
            vec![loop_idx()],
            vec![k2(&nat(3)), k1(), loop_idx()],
        ];
        for table in tables {
            let n = table.len();
            let (e, env) = dispatch_env(n, table, &[1]);
            let naive = naive_select(&e, &env, 4000);
            let gandy = gandy_select(&e, &env, 4000);
            assert_eq!(naive.is_some(), gandy.is_ok());
            if let Ok(k) = gandy {
                let chosen = env.prepend_num(k);
                assert!(eval_p(&e, &chosen, 4000).is_value());
            }
        }
    }
}
