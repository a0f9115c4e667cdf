//! Stage comparison: decide whether one terminating computation has norm at
//! most another's without evaluating both to completion.
//!
//! The three scheme pairs with a detailed simultaneous simulation are
//! (composition, induction), (oracle application, induction) and
//! (induction, induction); every other pair falls back to structural descent
//! over immediate subcomputations. The answer is exact whenever at least one
//! side terminates and the comparison meter suffices; an exhausted meter is
//! reported, never guessed around.

use super::env::{parse, validate_perm, Env, KIndex};
use super::eval::{eval_p, eval_with, induction_body, CompResult, Meter, Mode};
use super::tree::{children_of, Child};
use crate::foundations::{nat, Nat};
use num_traits::ToPrimitive;

/// Comparison failures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompareError {
    /// Neither side evaluates to a value within the budget, so the
    /// precondition of the comparison is not met.
    NeitherTerminates,
    /// The comparison meter died before reaching a verdict.
    Budget,
}

/// Multiplier from the evaluation budget to the comparison meter: the
/// simulations re-walk subcomputations against each other, which costs more
/// than one evaluation of either side.
const COMPARE_SLACK: u64 = 64;

/// Returns 1 iff the norm of (e1, env1) is at most the norm of (e2, env2),
/// where a computation without a value counts as maximal rank.
pub fn stage_compare(
    e1: &Nat,
    env1: &Env,
    e2: &Nat,
    env2: &Env,
    budget: u64,
) -> Result<u8, CompareError> {
    let p1 = eval_p(e1, env1, budget);
    let p2 = eval_p(e2, env2, budget);
    if !p1.is_value() && !p2.is_value() {
        return Err(CompareError::NeitherTerminates);
    }
    let mut meter = Meter::new(budget.saturating_mul(COMPARE_SLACK));
    p_rec(e1, env1, e2, env2, &mut meter).map_err(|_| CompareError::Budget)
}

/// Meter death sentinel for the inner recursion.
struct Dead;

enum Class {
    /// Not a computation: unparseable code, missing immediate argument,
    /// invalid permutation data, or a failing initial scheme. Maximal rank.
    Invalid,
    /// A terminating initial computation: rank zero.
    Initial,
    Composite(KIndex),
}

fn classify(e: &Nat, env: &Env, meter: &mut Meter) -> Result<Class, Dead> {
    let parsed = match parse(e) {
        Some(p) => p,
        None => return Ok(Class::Invalid),
    };
    Ok(match &parsed {
        KIndex::S1 | KIndex::S2 { .. } | KIndex::S3 | KIndex::S7 => {
            match eval_with(e, env, Mode::Partial, meter) {
                CompResult::Value(_) => Class::Initial,
                CompResult::BudgetExceeded => return Err(Dead),
                _ => Class::Invalid,
            }
        }
        KIndex::S4 { .. } => Class::Composite(parsed),
        KIndex::S6 { tau_o, tau_f, tau_n, .. } => {
            let ok = validate_perm(tau_o, env.oracles.len()).is_some()
                && validate_perm(tau_f, env.funs.len()).is_some()
                && validate_perm(tau_n, env.nums.len()).is_some();
            if ok {
                Class::Composite(parsed)
            } else {
                Class::Invalid
            }
        }
        KIndex::S9 | KIndex::S83 { .. } => {
            if env.nums.is_empty() {
                Class::Invalid
            } else {
                Class::Composite(parsed)
            }
        }
        KIndex::S82 { .. } => {
            if env.oracles.is_empty() {
                Class::Invalid
            } else {
                Class::Composite(parsed)
            }
        }
    })
}

/// Probe whether a computation fails to reach a value: 1 if it definitively
/// fails, 0 if it has a value, meter death otherwise.
fn diverges(e: &Nat, env: &Env, meter: &mut Meter) -> Result<u8, Dead> {
    match eval_with(e, env, Mode::Partial, meter) {
        CompResult::Value(_) => Ok(0),
        CompResult::BudgetExceeded => Err(Dead),
        _ => Ok(1),
    }
}

fn p_rec(e1: &Nat, env1: &Env, e2: &Nat, env2: &Env, meter: &mut Meter) -> Result<u8, Dead> {
    if !meter.spend(1) {
        return Err(Dead);
    }
    let c1 = classify(e1, env1, meter)?;
    let c2 = classify(e2, env2, meter)?;
    match (c1, c2) {
        (Class::Invalid, Class::Invalid) => Ok(1),
        // maximal rank on the left: dominated only by a right side without a
        // value
        (Class::Invalid, _) => diverges(e2, env2, meter),
        // maximal rank on the right dominates everything
        (_, Class::Invalid) => Ok(1),
        (Class::Initial, _) => Ok(1),
        (Class::Composite(kx), Class::Initial) => {
            // rank 0 on the right: only a rank-0 left compares below, and the
            // only composite shapes of rank 0 are childless ones
            let childless = match &kx {
                KIndex::S82 { .. } => env1.oracles[0].support() == 0,
                KIndex::S83 { .. } => env1.n == 0,
                _ => false,
            };
            if childless {
                match eval_with(e1, env1, Mode::Partial, meter) {
                    CompResult::Value(_) => Ok(1),
                    CompResult::BudgetExceeded => Err(Dead),
                    _ => Ok(0), // no value: maximal rank vs rank 0
                }
            } else {
                Ok(0)
            }
        }
        (Class::Composite(kx), Class::Composite(ky)) => match (&kx, &ky) {
            (KIndex::S4 { e1: o, e2: i }, KIndex::S83 { d }) => {
                sim_s4_s83(o, i, env1, d, env2, meter)
            }
            (KIndex::S82 { d: dx }, KIndex::S83 { d: dy }) => {
                sim_s82_s83(dx, env1, dy, env2, meter)
            }
            (KIndex::S83 { d: dx }, KIndex::S83 { d: dy }) => {
                sim_s83_s83(dx, env1, dy, env2, meter)
            }
            _ => structural(e1, env1, &kx, e2, env2, &ky, meter),
        },
    }
}

fn p_item(s: &Child, t: &Child, meter: &mut Meter) -> Result<u8, Dead> {
    match (s, t) {
        (Child::Comp(es, envs), Child::Comp(et, envt)) => p_rec(es, envs, et, envt, meter),
        // an undetermined prerequisite cannot be compared honestly
        _ => Err(Dead),
    }
}

/// ∀ child of the left ∃ child of the right with left-child ≤ right-child.
/// This matches the norm recursion (max of children + 1 on both sides) and
/// extends it to sides without values, whose lists expose a valueless child.
fn structural(
    e1: &Nat,
    env1: &Env,
    kx: &KIndex,
    e2: &Nat,
    env2: &Env,
    ky: &KIndex,
    meter: &mut Meter,
) -> Result<u8, Dead> {
    let xs = children_of(e1, env1, meter);
    let ys = children_of(e2, env2, meter);
    let mut result = 1u8;
    'outer: for s in &xs {
        for t in &ys {
            if p_item(s, t, meter)? == 1 {
                continue 'outer;
            }
        }
        result = 0;
        break;
    }
    // Oracle application can fail at the call itself with every
    // subcomputation terminating; the child comparison cannot see that.
    if result == 1 {
        if let KIndex::S82 { .. } = kx {
            match eval_with(e1, env1, Mode::Partial, meter) {
                CompResult::Value(_) => {}
                CompResult::BudgetExceeded => return Err(Dead),
                _ => result = diverges(e2, env2, meter)?,
            }
        }
    }
    if result == 0 {
        if let KIndex::S82 { .. } = ky {
            match eval_with(e2, env2, Mode::Partial, meter) {
                CompResult::Value(_) => {}
                CompResult::BudgetExceeded => return Err(Dead),
                _ => result = 1, // right side has no value: maximal rank
            }
        }
    }
    Ok(result)
}

/// Lazy walk over an induction's body computations in stage order. The walk
/// evaluates each body as it is yielded so it can build the next stage; it
/// ends after the closing stage, after a stage whose body fails, or with an
/// undetermined marker when the meter dies mid-stage.
struct StageStream {
    d: Nat,
    rest: Env,
    n: usize,
    f: Vec<u8>,
    next_f: Vec<u8>,
    a: usize,
    fail_this_stage: bool,
    budget_died: bool,
    finished: bool,
}

impl StageStream {
    fn new(d: &Nat, env: &Env) -> Self {
        let n = env.n;
        StageStream {
            d: d.clone(),
            rest: env.drop_first_num(),
            n,
            f: vec![0u8; n],
            next_f: vec![0u8; n],
            a: 0,
            fail_this_stage: false,
            budget_died: false,
            finished: false,
        }
    }

    fn next(&mut self, meter: &mut Meter) -> Option<Child> {
        if self.finished {
            return None;
        }
        if self.budget_died {
            self.finished = true;
            return Some(Child::StuckBudget);
        }
        if self.a == self.n {
            if self.fail_this_stage || self.next_f == self.f {
                self.finished = true;
                return None;
            }
            self.f = self.next_f.clone();
            self.a = 0;
        }
        let a = self.a;
        self.a += 1;
        let mut u = Vec::with_capacity(self.n + 1);
        u.push(nat(a as u64));
        u.extend(self.f.iter().map(|&bit| nat(bit as u64)));
        let child = Child::Comp(self.d.clone(), self.rest.prepend_fun(u));
        match induction_body(&self.d, &self.rest, a, &self.f, Mode::Partial, meter) {
            CompResult::Value(v) => {
                if !v.to_u64().map(|x| x == 0).unwrap_or(false) {
                    self.next_f[a] = 1;
                }
            }
            CompResult::BudgetExceeded => self.budget_died = true,
            _ => self.fail_this_stage = true,
        }
        Some(child)
    }
}

/// Composition against induction: two rounds. First find a stage computation
/// dominating the inner computation; then restart the walk and find one
/// dominating the outer computation at the inner value.
fn sim_s4_s83(
    outer: &Nat,
    inner: &Nat,
    env_x: &Env,
    d: &Nat,
    env_y: &Env,
    meter: &mut Meter,
) -> Result<u8, Dead> {
    let inner_child = Child::Comp(inner.clone(), env_x.clone());
    let mut stream = StageStream::new(d, env_y);
    let mut dominated = false;
    while let Some(t) = stream.next(meter) {
        if p_item(&inner_child, &t, meter)? == 1 {
            dominated = true;
            break;
        }
    }
    if !dominated {
        // every stage computation ranks strictly below the inner computation
        return Ok(0);
    }
    let b = match eval_with(inner, env_x, Mode::Partial, meter) {
        CompResult::Value(b) => b,
        CompResult::BudgetExceeded => return Err(Dead),
        // the inner computation has no value, so the whole composition has
        // maximal rank; it compares below only a valueless right side
        _ => return diverges_s83(d, env_y, meter),
    };
    let outer_child = Child::Comp(outer.clone(), env_x.prepend_num(b));
    let mut stream = StageStream::new(d, env_y);
    while let Some(t) = stream.next(meter) {
        if p_item(&outer_child, &t, meter)? == 1 {
            return Ok(1);
        }
    }
    Ok(0)
}

fn diverges_s83(d: &Nat, env_y: &Env, meter: &mut Meter) -> Result<u8, Dead> {
    let code = super::asm::k83(d);
    diverges(&code, env_y, meter)
}

/// Oracle application against induction: walk the induction's body
/// computations, discharging argument computations as they become dominated.
fn sim_s82_s83(
    dx: &Nat,
    env_x: &Env,
    dy: &Nat,
    env_y: &Env,
    meter: &mut Meter,
) -> Result<u8, Dead> {
    let support = env_x.oracles[0].support();
    let mut remaining: Vec<Child> = (0..support)
        .map(|a| Child::Comp(dx.clone(), env_x.prepend_num(nat(a as u64))))
        .collect();
    let mut stream = StageStream::new(dy, env_y);
    while let Some(t) = stream.next(meter) {
        if remaining.is_empty() {
            break;
        }
        let mut keep = Vec::new();
        for s in remaining {
            if p_item(&s, &t, meter)? == 0 {
                keep.push(s);
            }
        }
        remaining = keep;
    }
    let mut result = if remaining.is_empty() { 1 } else { 0 };
    if result == 1 {
        // all arguments dominated, but the oracle call itself may still fail
        let code = super::asm::k82(dx);
        match eval_with(&code, env_x, Mode::Partial, meter) {
            CompResult::Value(_) => {}
            CompResult::BudgetExceeded => return Err(Dead),
            _ => result = diverges_s83(dy, env_y, meter)?,
        }
    }
    Ok(result)
}

/// One side of the interleaved double induction.
struct SideState {
    d: Nat,
    rest: Env,
    n: usize,
    f: Vec<u8>,
    comps: Vec<Child>,
    closed: bool,
    failed: bool,
}

impl SideState {
    fn new(d: &Nat, env: &Env) -> Self {
        SideState {
            d: d.clone(),
            rest: env.drop_first_num(),
            n: env.n,
            f: vec![0u8; env.n],
            comps: Vec::new(),
            closed: false,
            failed: false,
        }
    }

    /// Push the current stage's body computations and step the stage.
    fn open_stage(&mut self, meter: &mut Meter) -> Result<(), Dead> {
        let mut next = self.f.clone();
        let mut fail = false;
        for a in 0..self.n {
            let mut u = Vec::with_capacity(self.n + 1);
            u.push(nat(a as u64));
            u.extend(self.f.iter().map(|&bit| nat(bit as u64)));
            self.comps.push(Child::Comp(self.d.clone(), self.rest.prepend_fun(u)));
            match induction_body(&self.d, &self.rest, a, &self.f, Mode::Partial, meter) {
                CompResult::Value(v) => {
                    if !v.to_u64().map(|x| x == 0).unwrap_or(false) {
                        next[a] = 1;
                    }
                }
                CompResult::BudgetExceeded => return Err(Dead),
                _ => fail = true,
            }
        }
        if fail {
            self.failed = true;
        } else if next == self.f {
            self.closed = true;
        } else {
            self.f = next;
        }
        Ok(())
    }

    fn exhausted(&self) -> bool {
        self.closed || self.failed
    }
}

/// Induction against induction: run both trajectories side by side, always
/// advancing the currently dominated one, until the dominated side closes
/// (it compares below) or the dominating side closes (it does not).
fn sim_s83_s83(
    dx: &Nat,
    env_x: &Env,
    dy: &Nat,
    env_y: &Env,
    meter: &mut Meter,
) -> Result<u8, Dead> {
    let mut left = SideState::new(dx, env_x);
    left.open_stage(meter)?;
    let mut right = SideState::new(dy, env_y);
    right.open_stage(meter)?;
    loop {
        let mut all_dom = true;
        'outer: for s in &left.comps {
            for t in &right.comps {
                if p_item(s, t, meter)? == 1 {
                    continue 'outer;
                }
            }
            all_dom = false;
            break;
        }
        if all_dom {
            if left.exhausted() {
                return Ok(1);
            }
            left.open_stage(meter)?;
        } else {
            if right.closed {
                return Ok(0);
            }
            if right.failed {
                // a failed side holds a valueless computation that dominates
                // everything, so domination cannot have failed; the meter is
                // the only consistent explanation
                return Err(Dead);
            }
            right.open_stage(meter)?;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kleene::asm::*;
    use crate::kleene::env::Type2Oracle;
    use crate::kleene::tree::norm;

    const B: u64 = 1 << 18;

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

    fn cases() -> Vec<(Nat, Env)> {
        let mut out: Vec<(Nat, Env)> = Vec::new();
        let base = Env::new(2).with_nums_u64(&[1]);
        out.push((k3(), base.clone()));
        out.push((k2(&nat(9)), Env::new(2)));
        out.push((k4(&k1(), &k3()), base.clone()));
        out.push((k4(&k1(), &k4(&k1(), &k3())), base.clone()));
        out.push((k4(&k4(&k1(), &k1()), &k3()), base.clone()));
        out.push((k83(&k2(&nat(0))), Env::new(3).with_nums_u64(&[0])));
        out.push((k83(&k2(&nat(1))), Env::new(3).with_nums_u64(&[1])));
        out.push((k83(&k82(&k7())), chain_env(2, 1)));
        out.push((k83(&k82(&k7())), chain_env(3, 1)));
        out.push((k83(&k82(&k7())), chain_env(4, 2)));
        let orc_sum = Type2Oracle::from_fn(3, |g: &[Nat]| {
            Some(g.iter().fold(nat(0), |acc, v| acc + v))
        });
        out.push((
            k82(&k4(&k1(), &k3())),
            Env::new(3).with_oracles(vec![orc_sum]).with_nums_u64(&[0]),
        ));
        out.push((k9(), Env::new(2).with_nums(vec![k4(&k1(), &k1()), nat(5)])));
        out.push((
            k6(&k3(), &[], &[], &[1, 0]),
            Env::new(2).with_nums_u64(&[3, 4]),
        ));
        out.push((k4(&k83(&k82(&k7())), &k3()), chain_env(2, 1)));
        out
    }

    #[test]
    fn agrees_with_norm_on_terminating_pairs() {
        let cs = cases();
        for (i, (e1, env1)) in cs.iter().enumerate() {
            let n1 = norm(e1, env1, B).expect("case terminates");
            for (j, (e2, env2)) in cs.iter().enumerate() {
                let n2 = norm(e2, env2, B).expect("case terminates");
                let got = stage_compare(e1, env1, e2, env2, B)
                    .unwrap_or_else(|e| panic!("compare failed on ({i},{j}): {e:?}"));
                let want = u8::from(n1 <= n2);
                assert_eq!(got, want, "cases ({i},{j}): norms {n1} vs {n2}");
            }
        }
    }

    #[test]
    fn reflexive_on_terminating_computations() {
        for (e, env) in cases() {
            assert_eq!(stage_compare(&e, &env, &e, &env, B), Ok(1));
        }
    }

    #[test]
    fn divergent_side_is_maximal() {
        let lp = loop_idx();
        let env = Env::new(2).with_nums_u64(&[1]);
        let (et, envt) = (k4(&k1(), &k3()), env.clone());
        // small budget keeps the divergence probe shallow
        assert_eq!(stage_compare(&et, &envt, &lp, &env, 4000), Ok(1));
        assert_eq!(stage_compare(&lp, &env, &et, &envt, 4000), Ok(0));
        assert_eq!(
            stage_compare(&lp, &env, &lp, &env, 4000),
            Err(CompareError::NeitherTerminates)
        );
    }

    #[test]
    fn definite_failures_are_maximal_too() {
        let env = Env::new(2).with_nums_u64(&[1]);
        let bad = nat(0); // not an index
        let good = k4(&k1(), &k3());
        assert_eq!(stage_compare(&good, &env, &bad, &env, B), Ok(1));
        assert_eq!(stage_compare(&bad, &env, &good, &env, B), Ok(0));
        // failing initial computation: projection with no arguments
        let starved = Env::new(2);
        assert_eq!(stage_compare(&k3(), &starved, &good, &env, B), Ok(0));
    }

    #[test]
    fn oracle_call_failure_counts_as_maximal() {
        // all argument computations terminate but the oracle is undefined
        let orc = Type2Oracle::table01(1, vec![None, Some(nat(1))]);
        let env_u = Env::new(2)
            .with_oracles(vec![orc])
            .with_nums_u64(&[0]);
        let e_u = k82(&k2(&nat(0)));
        let env_t = Env::new(2).with_nums_u64(&[1]);
        let e_t = k4(&k1(), &k4(&k1(), &k3()));
        assert_eq!(stage_compare(&e_t, &env_t, &e_u, &env_u, B), Ok(1));
        assert_eq!(stage_compare(&e_u, &env_u, &e_t, &env_t, B), Ok(0));
    }

    #[test]
    fn detailed_pairs_agree_with_norm() {
        // composition vs induction, oracle application vs induction, and
        // induction vs induction in both norm orders
        let ind_small = (k83(&k82(&k7())), chain_env(2, 0));
        let ind_big = (k83(&k82(&k7())), chain_env(4, 0));
        let comp = (k4(&k1(), &k3()), Env::new(2).with_nums_u64(&[1]));
        let orc_sum = Type2Oracle::from_fn(2, |g: &[Nat]| {
            Some(g.iter().fold(nat(0), |acc, v| acc + v))
        });
        let app = (
            k82(&k4(&k1(), &k3())),
            Env::new(3).with_oracles(vec![orc_sum]).with_nums_u64(&[0]),
        );
        let pairs = [
            (&comp, &ind_small),
            (&comp, &ind_big),
            (&app, &ind_small),
            (&app, &ind_big),
            (&ind_small, &ind_big),
            (&ind_big, &ind_small),
        ];
        for (x, y) in pairs {
            let nx = norm(&x.0, &x.1, B).unwrap();
            let ny = norm(&y.0, &y.1, B).unwrap();
            assert_eq!(
                stage_compare(&x.0, &x.1, &y.0, &y.1, B),
                Ok(u8::from(nx <= ny)),
                "norms {nx} vs {ny}"
            );
        }
    }
}
