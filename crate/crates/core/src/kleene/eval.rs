//! The two evaluators: partial and total oracle-application semantics.
//!
//! Both charge one budget unit per scheme dispatch and one per type-2 oracle
//! call. Divergence shows up as BudgetExceeded; the budget also bounds stack
//! growth on non-tail divergent descents, so callers probing for divergence
//! should keep budgets modest (tail-recursive loops run in constant stack).

use super::env::{parse, validate_perm, Env, KIndex, OracleSite};
use crate::foundations::{nat, FinFun, Nat};
use num_traits::{One, ToPrimitive};

/// Application semantics selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Induction bodies need only be defined along the trajectory actually
    /// constructed.
    Partial,
    /// Induction bodies must be total on all (a, f) with a < n, f ∈ {0,1}ⁿ
    /// before the induction is consulted.
    Total,
}

/// Outcome of an evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CompResult {
    Value(Nat),
    /// The code does not parse as one of the nine shapes, or an immediate
    /// argument it needs is missing (arity mismatch).
    NotAnIndex,
    /// An oracle or finite function was consulted outside its domain.
    OracleUndefined { site: OracleSite },
    /// Partial semantics: the induction body failed at the given stage of the
    /// trajectory.
    PartialInduction { stage: usize },
    /// Total semantics: the induction body failed at the given point of the
    /// totality sweep (argument a, candidate stage f as 0/1 bits).
    TotalityViolation { arg: usize, fun: Vec<u8> },
    /// The step budget ran out; the computation may or may not terminate.
    BudgetExceeded,
}

impl CompResult {
    pub fn is_value(&self) -> bool {
        matches!(self, CompResult::Value(_))
    }

    pub fn value(&self) -> Option<&Nat> {
        match self {
            CompResult::Value(v) => Some(v),
            _ => None,
        }
    }
}

/// Shared step counter. All evaluation inside one top-level call draws from
/// the same meter, so results are a deterministic function of (e, env, budget).
#[derive(Debug)]
pub(crate) struct Meter {
    left: u64,
}

impl Meter {
    pub(crate) fn new(budget: u64) -> Self {
        Meter { left: budget }
    }

    pub(crate) fn spend(&mut self, cost: u64) -> bool {
        if self.left >= cost {
            self.left -= cost;
            true
        } else {
            self.left = 0;
            false
        }
    }
}

/// Evaluate under partial application semantics.
pub fn eval_p(e: &Nat, env: &Env, budget: u64) -> CompResult {
    let mut meter = Meter::new(budget);
    eval_with(e, env, Mode::Partial, &mut meter)
}

/// Evaluate under total application semantics.
pub fn eval_t(e: &Nat, env: &Env, budget: u64) -> CompResult {
    let mut meter = Meter::new(budget);
    eval_with(e, env, Mode::Total, &mut meter)
}

pub(crate) fn eval_with(e: &Nat, env: &Env, mode: Mode, meter: &mut Meter) -> CompResult {
    // Tail positions (S4's outer call, S6's body, S9's dispatch) iterate in
    // place so the canonical self-application loops burn budget, not stack.
    let mut e = e.clone();
    let mut env = env.clone();
    loop {
        if !meter.spend(1) {
            return CompResult::BudgetExceeded;
        }
        let parsed = match parse(&e) {
            Some(p) => p,
            None => return CompResult::NotAnIndex,
        };
        match parsed {
            KIndex::S1 => {
                return match env.nums.first() {
                    Some(a) => CompResult::Value(a + Nat::one()),
                    None => CompResult::NotAnIndex,
                }
            }
            KIndex::S2 { q } => return CompResult::Value(q),
            KIndex::S3 => {
                return match env.nums.first() {
                    Some(a) => CompResult::Value(a.clone()),
                    None => CompResult::NotAnIndex,
                }
            }
            KIndex::S4 { e1, e2 } => {
                let b = match eval_with(&e2, &env, mode, meter) {
                    CompResult::Value(b) => b,
                    other => return other,
                };
                env = env.prepend_num(b);
                e = e1;
            }
            KIndex::S6 { e1, tau_o, tau_f, tau_n } => {
                let po = validate_perm(&tau_o, env.oracles.len());
                let pf = validate_perm(&tau_f, env.funs.len());
                let pn = validate_perm(&tau_n, env.nums.len());
                let (po, pf, pn) = match (po, pf, pn) {
                    (Some(a), Some(b), Some(c)) => (a, b, c),
                    _ => return CompResult::NotAnIndex,
                };
                env = Env {
                    n: env.n,
                    oracles: po.iter().map(|&i| env.oracles[i].clone()).collect(),
                    funs: pf.iter().map(|&i| env.funs[i].clone()).collect(),
                    nums: pn.iter().map(|&i| env.nums[i].clone()).collect(),
                };
                e = e1;
            }
            KIndex::S7 => {
                let f1 = match env.funs.first() {
                    Some(f) => f,
                    None => return CompResult::NotAnIndex,
                };
                let a1 = match env.nums.first() {
                    Some(a) => a,
                    None => return CompResult::NotAnIndex,
                };
                return match a1.to_usize().filter(|&i| i < f1.len()) {
                    Some(i) => CompResult::Value(f1[i].clone()),
                    None => CompResult::OracleUndefined { site: OracleSite::Fun(0) },
                };
            }
            KIndex::S82 { d } => {
                let orc = match env.oracles.first() {
                    Some(o) => o.clone(),
                    None => return CompResult::NotAnIndex,
                };
                let mut g: FinFun = Vec::with_capacity(orc.support());
                for a in 0..orc.support() {
                    match eval_with(&d, &env.prepend_num(nat(a as u64)), mode, meter) {
                        CompResult::Value(v) => g.push(v),
                        other => return other,
                    }
                }
                if !meter.spend(1) {
                    return CompResult::BudgetExceeded;
                }
                return match orc.apply(&g) {
                    Some(v) => CompResult::Value(v),
                    None => CompResult::OracleUndefined { site: OracleSite::Oracle(0) },
                };
            }
            KIndex::S83 { d } => return eval_induction(&d, &env, mode, meter),
            KIndex::S9 => {
                let d = match env.nums.first() {
                    Some(d) => d.clone(),
                    None => return CompResult::NotAnIndex,
                };
                env = env.drop_first_num();
                e = d;
            }
        }
    }
}

/// One induction body evaluation: G(a⌢f) with the candidate stage passed as a
/// single prepended function of length n+1.
pub(crate) fn induction_body(
    d: &Nat,
    env_rest: &Env,
    a: usize,
    f: &[u8],
    mode: Mode,
    meter: &mut Meter,
) -> CompResult {
    let mut u: FinFun = Vec::with_capacity(f.len() + 1);
    u.push(nat(a as u64));
    u.extend(f.iter().map(|&bit| nat(bit as u64)));
    eval_with(d, &env_rest.prepend_fun(u), mode, meter)
}

fn eval_induction(d: &Nat, env: &Env, mode: Mode, meter: &mut Meter) -> CompResult {
    let n = env.n;
    let b = match env.nums.first() {
        Some(b) => b.clone(),
        None => return CompResult::NotAnIndex,
    };
    let rest = env.drop_first_num();

    if mode == Mode::Total {
        // Totality sweep in fixed order: candidate stages by ascending
        // bitmask, then the argument. The first definite failure is the
        // violation point; budget exhaustion stays budget exhaustion. The loop
        // self-terminates once the meter dies, so large n needs no cap.
        let limit: u128 = 1u128 << n.min(127);
        let mut mask: u128 = 0;
        while mask < limit {
            let f: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
            for a in 0..n {
                match induction_body(d, &rest, a, &f, mode, meter) {
                    CompResult::Value(_) => {}
                    CompResult::BudgetExceeded => return CompResult::BudgetExceeded,
                    _ => return CompResult::TotalityViolation { arg: a, fun: f },
                }
            }
            mask += 1;
        }
    }

    // The iteration f_{β+1} = f_β ∪ F(f_β); each open stage adds at least one
    // element of [0..n), so closure arrives by stage n.
    let mut f = vec![0u8; n];
    for stage in 0..=n {
        let mut next = f.clone();
        for a in 0..n {
            match induction_body(d, &rest, a, &f, mode, meter) {
                CompResult::Value(v) => {
                    if !v.to_u64().map(|x| x == 0).unwrap_or(false) {
                        next[a] = 1;
                    }
                }
                CompResult::BudgetExceeded => return CompResult::BudgetExceeded,
                _ => return CompResult::PartialInduction { stage },
            }
        }
        if next == f {
            // Closed: read the fixed point at b; points outside [0..n) are
            // never added, so they read 0.
            let vb = b.to_usize().filter(|&i| i < n).map(|i| f[i]).unwrap_or(0);
            return CompResult::Value(nat(vb as u64));
        }
        f = next;
    }
    unreachable!("induction closes within n+1 stages");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::foundations::encode_seq;
    use crate::kleene::asm::*;
    use crate::kleene::env::Type2Oracle;

    fn nats(items: &[u64]) -> Vec<Nat> {
        items.iter().map(|&v| nat(v)).collect()
    }

    const B: u64 = 1 << 20;

    #[test]
    fn initial_schemes() {
        let env = Env::new(2).with_nums_u64(&[3]);
        assert_eq!(eval_p(&k1(), &env, B), CompResult::Value(nat(4)));
        assert_eq!(eval_p(&k2(&nat(5)), &Env::new(2), B), CompResult::Value(nat(5)));
        assert_eq!(eval_p(&k3(), &env, B), CompResult::Value(nat(3)));
        let env7 = Env::new(3).with_funs(vec![nats(&[7, 8, 9])]).with_nums_u64(&[1]);
        assert_eq!(eval_p(&k7(), &env7, B), CompResult::Value(nat(8)));
    }

    #[test]
    fn initial_arity_failures() {
        let empty = Env::new(2);
        assert_eq!(eval_p(&k1(), &empty, B), CompResult::NotAnIndex);
        assert_eq!(eval_p(&k3(), &empty, B), CompResult::NotAnIndex);
        assert_eq!(eval_p(&k7(), &empty, B), CompResult::NotAnIndex);
        // fun present, read past its end
        let env = Env::new(2).with_funs(vec![nats(&[5])]).with_nums_u64(&[3]);
        assert_eq!(
            eval_p(&k7(), &env, B),
            CompResult::OracleUndefined { site: OracleSite::Fun(0) }
        );
    }

    #[test]
    fn composition_prepends_inner_value() {
        // e₂ = ⟨3⟩ gives 2; e₁ = ⟨1⟩ sees (2, 2) and yields 3
        let e = k4(&k1(), &k3());
        let env = Env::new(2).with_nums_u64(&[2]);
        assert_eq!(eval_p(&e, &env, B), CompResult::Value(nat(3)));
    }

    #[test]
    fn permutation_swaps_numeric_arguments() {
        let e = k6(&k3(), &[], &[], &[1, 0]);
        let env = Env::new(2).with_nums_u64(&[4, 9]);
        assert_eq!(eval_p(&e, &env, B), CompResult::Value(nat(9)));
        // wrong-length identity is not an index
        let bad = k6(&k3(), &[], &[], &[0]);
        assert_eq!(eval_p(&bad, &env, B), CompResult::NotAnIndex);
        // non-bijective data is not an index
        let bad2 = k6(&k3(), &[], &[], &[0, 0]);
        assert_eq!(eval_p(&bad2, &env, B), CompResult::NotAnIndex);
    }

    #[test]
    fn universal_scheme_consumes_first_numeric() {
        let env = Env::new(2).with_nums(vec![k1(), nat(5)]);
        assert_eq!(eval_p(&k9(), &env, B), CompResult::Value(nat(6)));
        assert_eq!(eval_p(&k9(), &Env::new(2), B), CompResult::NotAnIndex);
    }

    #[test]
    fn oracle_application_builds_argument_pointwise() {
        // d = ⟨3⟩ reads the prepended a, so the built argument is (0,1,2)
        let orc = Type2Oracle::table(
            3,
            3,
            (0..27).map(|i| Some(nat(100 + i))).collect(),
        );
        // index of (0,1,2) little-endian base 3: 0 + 3 + 18 = 21
        let e = k82(&k3());
        let env = Env::new(3).with_oracles(vec![orc]);
        assert_eq!(eval_p(&e, &env, B), CompResult::Value(nat(121)));
    }

    #[test]
    fn oracle_undefined_surfaces() {
        let orc = Type2Oracle::table01(1, vec![None, Some(nat(1))]);
        let e = k82(&k2(&nat(0)));
        let env = Env::new(2).with_oracles(vec![orc]);
        assert_eq!(
            eval_p(&e, &env, B),
            CompResult::OracleUndefined { site: OracleSite::Oracle(0) }
        );
    }

    #[test]
    fn trivial_inductions() {
        // G ≡ 0: closes immediately, empty fixed point
        let empty = k83(&k2(&nat(0)));
        let env = Env::new(3).with_nums_u64(&[1]);
        assert_eq!(eval_p(&empty, &env, B), CompResult::Value(nat(0)));
        // G ≡ 1: everything enters at stage one
        let full = k83(&k2(&nat(1)));
        assert_eq!(eval_p(&full, &env, B), CompResult::Value(nat(1)));
        // reading at b ≥ n gives 0
        let env_hi = Env::new(3).with_nums_u64(&[7]);
        assert_eq!(eval_p(&full, &env_hi, B), CompResult::Value(nat(0)));
        // missing b is an arity failure
        assert_eq!(eval_p(&full, &Env::new(3), B), CompResult::NotAnIndex);
    }

    /// a enters iff a = 0 or f(a-1) already holds: one element per stage.
    fn chain_env(n: usize, b: u64) -> Env {
        let support = n + 1;
        let orc = Type2Oracle::from_fn(support, move |g: &[Nat]| {
            let a = g[0].to_usize()?;
            if a == 0 {
                return Some(nat(1));
            }
            if a < support - 1 {
                return Some(if g[a] == nat(1) { nat(1) } else { nat(0) });
            }
            Some(nat(0))
        });
        Env::new(n).with_oracles(vec![orc]).with_nums_u64(&[b])
    }

    #[test]
    fn chain_induction_closes_elementwise() {
        let e = k83(&k82(&k7()));
        for b in 0..3u64 {
            assert_eq!(eval_p(&e, &chain_env(3, b), B), CompResult::Value(nat(1)));
        }
        assert_eq!(eval_p(&e, &chain_env(3, 5), B), CompResult::Value(nat(0)));
        // total semantics agrees: the chain oracle is total
        assert_eq!(eval_t(&e, &chain_env(3, 0), B), CompResult::Value(nat(1)));
    }

    #[test]
    fn partial_vs_total_semantics_split() {
        // The oracle is undefined at the all-ones candidate stage with a = 0,
        // which the trajectory (∅ → {0} → {0,1} → closure at n = 2 needs only
        // stages it visits... choose the hole off the trajectory: f = (0,1).
        let n = 2;
        let orc = Type2Oracle::from_fn(n + 1, move |g: &[Nat]| {
            let a = g[0].to_usize()?;
            let f: Vec<u64> = g[1..].iter().map(|v| v.to_u64().unwrap_or(9)).collect();
            if f == [0, 1] {
                return None; // the hole: unreachable along the trajectory
            }
            if a == 0 {
                return Some(nat(1));
            }
            Some(if f[a - 1] == 1 { nat(1) } else { nat(0) })
        });
        let env = Env::new(n).with_oracles(vec![orc]).with_nums_u64(&[1]);
        let e = k83(&k82(&k7()));
        assert_eq!(eval_p(&e, &env, B), CompResult::Value(nat(1)));
        assert_eq!(
            eval_t(&e, &env, B),
            CompResult::TotalityViolation { arg: 0, fun: vec![0, 1] }
        );
    }

    #[test]
    fn partial_induction_failure_reports_stage() {
        // G defined on the empty stage, undefined once element 0 is present.
        let n = 2;
        let orc = Type2Oracle::from_fn(n + 1, move |g: &[Nat]| {
            if g[1] == nat(1) {
                None
            } else if g[0] == nat(0) {
                Some(nat(1))
            } else {
                Some(nat(0))
            }
        });
        let env = Env::new(n).with_oracles(vec![orc]).with_nums_u64(&[0]);
        let e = k83(&k82(&k7()));
        assert_eq!(eval_p(&e, &env, B), CompResult::PartialInduction { stage: 1 });
    }

    #[test]
    fn diagonal_loops_exhaust_budget_in_constant_stack() {
        let env = Env::new(2).with_nums_u64(&[0]);
        assert_eq!(eval_p(&loop_idx(), &env, 100_000), CompResult::BudgetExceeded);
    }

    #[test]
    fn budget_monotonicity_on_samples() {
        let e = k83(&k82(&k7()));
        let env = chain_env(3, 1);
        let full = eval_p(&e, &env, B);
        assert!(full.is_value());
        let mut seen_value_at = None;
        for budget in 1..200 {
            match eval_p(&e, &env, budget) {
                CompResult::Value(v) => {
                    assert_eq!(CompResult::Value(v.clone()), full);
                    if seen_value_at.is_none() {
                        seen_value_at = Some(budget);
                    }
                }
                CompResult::BudgetExceeded => {
                    assert!(seen_value_at.is_none(), "value must not regress to budget");
                }
                other => panic!("unexpected {other:?}"),
            }
        }
        assert!(seen_value_at.is_some());
    }

    #[test]
    fn garbage_codes_are_not_indices() {
        let env = Env::new(2).with_nums_u64(&[1]);
        assert_eq!(eval_p(&nat(0), &env, B), CompResult::NotAnIndex);
        let five = encode_seq(&[nat(5), nat(1)]);
        assert_eq!(eval_p(&five, &env, B), CompResult::NotAnIndex);
    }

    #[test]
    fn totality_sweep_order_is_mask_then_arg() {
        // undefined at two points; the earlier one in sweep order must win
        let n = 2;
        let orc = Type2Oracle::from_fn(n + 1, |g: &[Nat]| {
            let a = g[0].to_usize()?;
            let f: Vec<u64> = g[1..].iter().map(|v| v.to_u64().unwrap_or(9)).collect();
            if (f == [1, 0] && a == 1) || (f == [0, 1] && a == 0) {
                return None;
            }
            Some(nat(0))
        });
        let env = Env::new(n).with_oracles(vec![orc]).with_nums_u64(&[0]);
        let e = k83(&k82(&k7()));
        // mask order: (0,0), (1,0), (0,1), (1,1) — so (1,0) with a=1 is hit first
        assert_eq!(
            eval_t(&e, &env, B),
            CompResult::TotalityViolation { arg: 1, fun: vec![1, 0] }
        );
    }
}
