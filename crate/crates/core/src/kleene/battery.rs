//! A fixed battery of computations with pinned environments and expected
//! results. The battery feeds the integration checks: norm/stage-comparison
//! pairs, the partial-to-total index translation, procedure compilation, and
//! the CLI selftest all draw from it.

use super::asm::{k1, k2, k3, k4, k6, k7, k82, k83, k9, loop_idx};
use super::env::{Env, Type2Oracle};
use super::eval::CompResult;
use super::translate::AuxCtx;
use crate::foundations::{decode_seq, encode_seq, nat, Nat};
use crate::induction::suslin_universe_bound;
use num_traits::ToPrimitive;

/// A function-slot table whose entries are scheme codes dispatched inside an
/// induction body. The index translation appends arguments to the
/// environment, so such stored codes need their own arity rewrite; `ctx`
/// records the arities at their dispatch point.
#[derive(Clone, Debug)]
pub struct AuxTable {
    pub fun_slot: usize,
    pub ctx: AuxCtx,
}

/// One pinned computation.
#[derive(Clone, Debug)]
pub struct BatteryItem {
    pub name: &'static str,
    pub index: Nat,
    pub env: Env,
    /// Result of trajectory-mode evaluation at `budget`.
    pub expected_p: CompResult,
    pub budget: u64,
    /// Whether trajectory-mode evaluation reaches a value.
    pub terminating: bool,
    /// Terminating items whose step rule is undefined or divergent away from
    /// its own trajectory, so sweep-mode evaluation fails on the original.
    pub genuinely_partial: bool,
    /// Safe and cheap enough for pairwise stage comparisons.
    pub in_compare: bool,
    /// Included in the index-translation round trip.
    pub in_rho: bool,
    pub aux_tables: Vec<AuxTable>,
}

fn val(v: u64) -> CompResult {
    CompResult::Value(nat(v))
}

/// Decides ∃k f(k) > 0 inside the calculus. Point a stands for "some entry
/// at k ≥ a is positive"; a enters once f(a) > 0 or its successor point is
/// in. The per-point rule is compiled into a table of codes with the
/// constants baked in (sequence codes grow geometrically under nesting, so
/// the shallow dispatch shape matters), and the induction is queried at
/// point 0.
pub fn e2_kindex(f: &[u64]) -> (Nat, Env) {
    let l = f.len();
    let n = l + 1;
    // u = a⌢h puts point j's bit at slot j+1, so the successor's bit sits
    // at slot a+2; the padding point has no successor and stays out
    let mut tbl: Vec<Nat> = Vec::with_capacity(n);
    for a in 0..l {
        if f[a] > 0 {
            tbl.push(k2(&nat(1)));
        } else {
            tbl.push(k4(&k7(), &k2(&nat(a as u64 + 2))));
        }
    }
    tbl.push(k2(&nat(0)));
    let geta = k4(&k7(), &k2(&nat(0)));
    // inside the body the functions are [u, tbl]
    let readtbl = k6(&k7(), &[], &[1, 0], &[0]);
    let d = k4(&k9(), &k4(&readtbl, &geta));
    let env = Env::new(n).with_funs(vec![tbl]).with_nums_u64(&[0]);
    (k83(&d), env)
}

fn e2_aux() -> Vec<AuxTable> {
    // the per-point codes are dispatched inside the body: functions are
    // [u, tbl], the dispatch consumed every pending numeral
    vec![AuxTable { fun_slot: 0, ctx: AuxCtx { fun_count: 2, num_count: 0 } }]
}

fn prefixes_in_tree(tree: &[Nat], s: &[Nat]) -> bool {
    (0..=s.len()).all(|m| {
        let code = encode_seq(&s[..m]).to_usize().expect("code within the table");
        tree[code] == nat(0)
    })
}

/// Detects a depth-`depth` path through a binary tree. Point a < U is a
/// sequence code; it enters the induction once the subtree under it is
/// exhausted. Codes outside the tree (or outside the binary sequence
/// universe) enter immediately, full-depth tree nodes never enter, interior
/// tree nodes wait for both children. The per-point rule lives in the type-2
/// oracle; the calculus runs the induction over it and negates the root's
/// bit, so the value is 1 exactly when a full-depth path exists.
///
/// `tree` is a table over sequence codes with 0 marking membership, as in
/// the induction-level branch detector.
pub fn suslin_kindex(tree: &[Nat], depth: usize) -> (Nat, Env) {
    let u = suslin_universe_bound(2, depth)
        .to_usize()
        .expect("desk-scale universe");
    assert!(tree.len() >= u, "tree table must cover every sequence code");
    // case 0: enter immediately; case 1: never enter; case 2: wait for the
    // children, whose u-slots (child code + 1) are precomputed
    let mut case = vec![0u8; u];
    let mut child0 = vec![0usize; u];
    let mut child1 = vec![0usize; u];
    for a in 0..u {
        let s = match decode_seq(&nat(a as u64)) {
            Some(s) => s,
            None => continue,
        };
        let binary = s.iter().all(|x| x < &nat(2));
        if !binary || s.len() > depth || !prefixes_in_tree(tree, &s) {
            continue;
        }
        if s.len() == depth {
            case[a] = 1;
            continue;
        }
        case[a] = 2;
        let mut t = s.clone();
        t.push(nat(0));
        child0[a] = encode_seq(&t).to_usize().expect("child code inside the universe") + 1;
        t.pop();
        t.push(nat(1));
        child1[a] = encode_seq(&t).to_usize().expect("child code inside the universe") + 1;
    }
    let subtree_done = Type2Oracle::from_fn(u + 1, move |g: &[Nat]| {
        let a = g[0].to_usize()?;
        if a >= u {
            return Some(nat(0));
        }
        Some(match case[a] {
            0 => nat(1),
            1 => nat(0),
            _ => nat(u64::from(g[child0[a]] == nat(1) && g[child1[a]] == nat(1))),
        })
    });

    let nottbl = vec![nat(1), nat(0)];
    // negation runs at the top environment plus the induction's value
    let readnot = k6(&k7(), &[0], &[0], &[0, 1]);
    let idx = k4(&readnot, &k83(&k82(&k7())));
    let env = Env::new(u)
        .with_oracles(vec![subtree_done])
        .with_funs(vec![nottbl])
        .with_nums_u64(&[0]);
    (idx, env)
}

/// The single-element induction A ↦ A ∪ {G₀(A)} as a calculus index: the
/// oracle answers 1 exactly when G₀ of the queried stage equals the queried
/// point. `rows` is G₀ as a table over stage bitmasks; values must stay
/// below n so the induction closes inside the universe.
pub fn i0_kindex(rows: &[u64], n: usize, b: u64) -> (Nat, Env) {
    assert_eq!(rows.len(), 1 << n);
    assert!(rows.iter().all(|&v| (v as usize) < n));
    let rows: Vec<u64> = rows.to_vec();
    let hit = Type2Oracle::from_fn(n + 1, move |u: &[Nat]| {
        let mut mask = 0usize;
        for (i, v) in u[1..].iter().enumerate() {
            match v.to_u8() {
                Some(0) => {}
                Some(1) => mask |= 1 << i,
                _ => return Some(nat(0)),
            }
        }
        Some(nat(u64::from(nat(rows[mask]) == u[0])))
    });
    let env = Env::new(n).with_oracles(vec![hit]).with_nums_u64(&[b]);
    (k83(&k82(&k7())), env)
}

/// a enters once a = 0 or its predecessor is in: the standard ladder.
fn chain_oracle(n: usize) -> Type2Oracle {
    Type2Oracle::from_fn(n + 1, move |u: &[Nat]| {
        let a = u[0].to_usize()?;
        if a == 0 {
            return Some(nat(1));
        }
        if a < n {
            return Some(nat(u64::from(u[a] == nat(1))));
        }
        Some(nat(0))
    })
}

/// Ladder with a hole: the step rule is undefined at one stage set the
/// trajectory never reaches.
fn hole_item() -> (Nat, Env) {
    let orc = Type2Oracle::from_fn(3, |u: &[Nat]| {
        if u[0] == nat(0) && u[1] == nat(0) && u[2] == nat(1) {
            return None;
        }
        let a = u[0].to_usize()?;
        let enters = a == 0 || (a == 1 && u[1] == nat(1));
        Some(nat(u64::from(enters)))
    });
    let env = Env::new(2).with_oracles(vec![orc]).with_nums_u64(&[0]);
    (k83(&k82(&k7())), env)
}

/// Ladder with a hole, wrapped in a successor so the failure has to travel
/// through a composition.
fn hole_under_composition_item() -> (Nat, Env) {
    let orc = Type2Oracle::from_fn(4, |u: &[Nat]| {
        if u[0] == nat(2) && u[1] == nat(0) && u[2] == nat(1) && u[3] == nat(1) {
            return None;
        }
        let a = u[0].to_usize()?;
        let enters = a == 0 || (a < 3 && u[a] == nat(1));
        Some(nat(u64::from(enters)))
    });
    let env = Env::new(3).with_oracles(vec![orc]).with_nums_u64(&[0]);
    (k4(&k1(), &k83(&k82(&k7()))), env)
}

/// The body dispatches a genuinely divergent code away from the trajectory:
/// a total indicator oracle recognises the two trajectory stage sets and the
/// branch table sends everything else into a self-applying loop.
fn divergent_branch_item() -> (Nat, Env) {
    let traj = Type2Oracle::from_fn(3, |u: &[Nat]| {
        let zeros = u[1] == nat(0) && u[2] == nat(0);
        let ones = u[1] == nat(1) && u[2] == nat(1);
        Some(nat(u64::from(zeros || ones)))
    });
    let dtab = vec![loop_idx(), k2(&nat(1))];
    let readdtab = k6(&k7(), &[0], &[1, 0], &[0]);
    let d = k4(&k9(), &k4(&readdtab, &k82(&k7())));
    let env = Env::new(2)
        .with_oracles(vec![traj])
        .with_funs(vec![dtab])
        .with_nums_u64(&[0]);
    (k83(&d), env)
}

/// Induction inside an induction: the inner ladder's second rung opens only
/// after the outer induction's first point is in, read off the outer stage
/// function through a permutation.
fn nested_item() -> (Nat, Env, Vec<AuxTable>) {
    let getc = k4(&k7(), &k2(&nat(0)));
    // functions inside the inner body: [u_in, u_out, zsel]
    let readu1 = k6(&k7(), &[], &[1, 0, 2], &[0]);
    let read_out_at_c = k4(&readu1, &getc);
    let zsel = vec![k2(&nat(1)), read_out_at_c];
    let readzsel = k6(&k7(), &[], &[2, 0, 1], &[0]);
    let dinner = k4(&k9(), &k4(&readzsel, &getc));
    // outer body: run the inner induction at the outer point
    let douter = k4(&k83(&dinner), &getc);
    let env = Env::new(2).with_funs(vec![zsel]).with_nums_u64(&[0]);
    let aux = vec![AuxTable { fun_slot: 0, ctx: AuxCtx { fun_count: 3, num_count: 0 } }];
    (k83(&douter), env, aux)
}

/// The whole battery. Budgets are pinned per item; expected results are
/// trajectory-mode evaluations at that budget. Built once per process: a few
/// indexes cost real big-integer work to assemble.
pub fn battery() -> Vec<BatteryItem> {
    static BATTERY: std::sync::OnceLock<Vec<BatteryItem>> = std::sync::OnceLock::new();
    BATTERY.get_or_init(build_battery).clone()
}

fn build_battery() -> Vec<BatteryItem> {
    let mut items = Vec::new();
    let mut push = |name: &'static str,
                    index: Nat,
                    env: Env,
                    expected_p: CompResult,
                    budget: u64,
                    genuinely_partial: bool,
                    in_compare: bool,
                    in_rho: bool,
                    aux_tables: Vec<AuxTable>| {
        let terminating = expected_p.is_value();
        items.push(BatteryItem {
            name,
            index,
            env,
            expected_p,
            budget,
            terminating,
            genuinely_partial,
            in_compare,
            in_rho,
            aux_tables,
        });
    };

    let b16 = 1u64 << 16;
    let b18 = 1u64 << 18;

    push("succ", k1(), Env::new(2).with_nums_u64(&[41]), val(42), b16, false, true, true, vec![]);
    push("const", k2(&nat(7)), Env::new(2), val(7), b16, false, true, true, vec![]);
    push("first-arg", k3(), Env::new(2).with_nums_u64(&[13]), val(13), b16, false, true, true, vec![]);
    push(
        "compose-succ",
        k4(&k1(), &k1()),
        Env::new(2).with_nums_u64(&[5]),
        val(7),
        b16,
        false,
        true,
        true,
        vec![],
    );
    push(
        "swap-nums",
        k6(&k3(), &[], &[], &[1, 0]),
        Env::new(2).with_nums_u64(&[3, 9]),
        val(9),
        b16,
        false,
        true,
        true,
        vec![],
    );
    {
        let sum = Type2Oracle::from_fn(2, |g: &[Nat]| Some(&g[0] + &g[1]));
        let lin = Type2Oracle::from_fn(2, |g: &[Nat]| Some(&g[0] * 2u64 + &g[1] * 3u64));
        let env = Env::new(2)
            .with_oracles(vec![sum, lin])
            .with_nums_u64(&[4]);
        // after the swap the linear oracle sits in front; its argument
        // function is the identity on [0..2)
        push(
            "swap-oracles",
            k6(&k82(&k3()), &[1, 0], &[], &[0]),
            env,
            val(3),
            b16,
            false,
            true,
            true,
            vec![],
        );
    }
    push(
        "read-fun",
        k7(),
        Env::new(3).with_funs(vec![vec![nat(5), nat(6), nat(7)]]).with_nums_u64(&[2]),
        val(7),
        b16,
        false,
        true,
        true,
        vec![],
    );
    {
        let entries: Vec<Option<Nat>> = (0..9).map(|i| Some(nat(100 + i))).collect();
        let orc = Type2Oracle::table(2, 3, entries);
        // the argument function is succ, so the query point is (1, 2),
        // little-endian index 1 + 2·3
        push(
            "apply-oracle",
            k82(&k1()),
            Env::new(3).with_oracles(vec![orc]),
            val(107),
            b16,
            false,
            true,
            true,
            vec![],
        );
    }
    push(
        "dispatch",
        k9(),
        Env::new(2).with_nums(vec![k1(), nat(5)]),
        val(6),
        b16,
        false,
        true,
        true,
        vec![],
    );
    push(
        "tower",
        k4(&k1(), &k4(&k1(), &k4(&k1(), &k3()))),
        Env::new(2).with_nums_u64(&[0]),
        val(3),
        b16,
        false,
        true,
        true,
        vec![],
    );

    {
        let (idx, env) = e2_kindex(&[0, 1, 0]);
        push("exists-positive", idx, env, val(1), b18, false, true, true, e2_aux());
    }
    {
        let u = suslin_universe_bound(2, 1).to_usize().unwrap();
        let mut tree = vec![nat(1); u];
        tree[encode_seq(&[]).to_usize().unwrap()] = nat(0);
        tree[encode_seq(&[nat(1)]).to_usize().unwrap()] = nat(0);
        let (idx, env) = suslin_kindex(&tree, 1);
        push("tree-path-depth1", idx, env, val(1), b18, false, true, true, vec![]);
    }
    {
        let u = suslin_universe_bound(2, 2).to_usize().unwrap();
        let mut tree = vec![nat(1); u];
        tree[encode_seq(&[]).to_usize().unwrap()] = nat(0);
        tree[encode_seq(&[nat(0)]).to_usize().unwrap()] = nat(0);
        let (idx, env) = suslin_kindex(&tree, 2);
        // the only path stops at depth 1, so no full-depth path exists
        push("tree-path-depth2", idx, env, val(0), 1 << 20, false, false, false, vec![]);
    }
    {
        // G₀: ∅ ↦ 2, {2} ↦ 0, {0,2} ↦ 2 (already in, closes); rest unused
        let mut rows = vec![3u64; 16];
        rows[0] = 2;
        rows[4] = 0;
        rows[5] = 2;
        let (idx, env) = i0_kindex(&rows, 4, 0);
        push("single-element", idx, env, val(1), b18, false, true, true, vec![]);
    }
    push(
        "ladder",
        k83(&k82(&k7())),
        Env::new(3).with_oracles(vec![chain_oracle(3)]).with_nums_u64(&[0]),
        val(1),
        b18,
        false,
        true,
        true,
        vec![],
    );
    {
        let (idx, env, aux) = nested_item();
        push("nested-induction", idx, env, val(1), b18, false, true, true, aux);
    }
    {
        let (idx, env) = hole_item();
        push("hole-off-trajectory", idx, env, val(1), b16, true, true, true, vec![]);
    }
    {
        let (idx, env) = divergent_branch_item();
        push(
            "divergent-branch",
            idx,
            env,
            val(1),
            4096,
            true,
            true,
            true,
            vec![AuxTable { fun_slot: 0, ctx: AuxCtx { fun_count: 2, num_count: 0 } }],
        );
    }
    {
        let (idx, env) = hole_under_composition_item();
        push("hole-under-composition", idx, env, val(2), b16, true, true, true, vec![]);
    }

    push(
        "self-application",
        loop_idx(),
        Env::new(2).with_nums_u64(&[1]),
        CompResult::BudgetExceeded,
        2048,
        false,
        false,
        false,
        vec![],
    );
    push(
        "dispatch-starved",
        k9(),
        Env::new(2).with_nums(vec![k9(), k9(), k9()]),
        CompResult::NotAnIndex,
        b16,
        false,
        false,
        false,
        vec![],
    );
    push(
        "not-an-index",
        nat(0),
        Env::new(2).with_nums_u64(&[1]),
        CompResult::NotAnIndex,
        b16,
        false,
        false,
        false,
        vec![],
    );
    {
        let orc = Type2Oracle::table01(1, vec![None, Some(nat(7))]);
        let env = Env::new(2).with_oracles(vec![orc]);
        push(
            "oracle-hole-at-call",
            k82(&k2(&nat(0))),
            env,
            CompResult::OracleUndefined { site: super::env::OracleSite::Oracle(0) },
            b16,
            false,
            false,
            false,
            vec![],
        );
    }

    items
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::induction::{e2_via_ind, i0, suslin_dfs, suslin_via_ind, PointFunctional};
    use crate::kleene::eval::{eval_p, eval_t};
    use std::collections::HashSet;

    #[test]
    fn battery_is_pinned() {
        let items = battery();
        assert!(items.len() >= 20);
        let names: HashSet<&str> = items.iter().map(|i| i.name).collect();
        assert_eq!(names.len(), items.len(), "names are unique");
        for item in &items {
            let got = eval_p(&item.index, &item.env, item.budget);
            assert_eq!(got, item.expected_p, "{}", item.name);
            assert_eq!(got.is_value(), item.terminating, "{}", item.name);
            if item.genuinely_partial {
                assert!(item.terminating, "{}", item.name);
                let total = eval_t(&item.index, &item.env, item.budget);
                assert_ne!(total, item.expected_p, "{}", item.name);
            }
            if item.in_compare {
                assert!(item.terminating, "{}", item.name);
            }
        }
        assert!(items.iter().filter(|i| i.genuinely_partial).count() >= 3);
    }

    #[test]
    fn exists_positive_matches_the_induction_and_the_scan() {
        let cases: Vec<Vec<u64>> = vec![
            vec![],
            vec![0],
            vec![3],
            vec![0, 0, 0],
            vec![0, 1, 0],
            vec![1, 0, 0, 0],
            vec![0, 0, 0, 2],
            vec![0, 0, 1, 0, 0],
        ];
        for f in cases {
            let (idx, env) = e2_kindex(&f);
            let got = eval_p(&idx, &env, 1 << 18);
            let via: Vec<Nat> = f.iter().map(|&v| nat(v)).collect();
            let want = u64::from(e2_via_ind(&via));
            assert_eq!(got, CompResult::Value(nat(want)), "{f:?}");
            assert_eq!(want == 1, f.iter().any(|&v| v > 0), "{f:?}");
        }
    }

    #[test]
    fn tree_path_matches_the_search() {
        let u = suslin_universe_bound(2, 2).to_usize().unwrap();
        // every subset of the depth-≤2 binary sequences, closed under prefix
        let seqs = crate::induction::suslin_sequences(2, 2);
        for pick in 0..(1usize << seqs.len()) {
            let mut tree = vec![nat(1); u];
            tree[0] = nat(0); // the root is always considered
            for (i, s) in seqs.iter().enumerate() {
                if pick >> i & 1 == 1 {
                    tree[encode_seq(s).to_usize().unwrap()] = nat(0);
                }
            }
            let (idx, env) = suslin_kindex(&tree, 2);
            let got = eval_p(&idx, &env, 1 << 20);
            let want = suslin_dfs(&tree, 2, 2);
            assert_eq!(got, CompResult::Value(nat(u64::from(want))), "pick {pick}");
            assert_eq!(want, suslin_via_ind(&tree, 2, 2), "pick {pick}");
        }
    }

    #[test]
    fn single_element_matches_the_direct_iteration() {
        let tables: Vec<Vec<u64>> = vec![
            {
                let mut rows = vec![3u64; 16];
                rows[0] = 2;
                rows[4] = 0;
                rows[5] = 2;
                rows
            },
            vec![0; 16],
            {
                // walk 1 → 3 → 0, then repeat 1
                let mut rows = vec![2u64; 16];
                rows[0] = 1;
                rows[2] = 3;
                rows[10] = 0;
                rows[11] = 1;
                rows
            },
        ];
        for rows in tables {
            let g = PointFunctional::from_table_u64(4, rows.iter().map(|&v| v).collect());
            let closure = i0(&g).expect("values stay below the base");
            for b in 0..4u64 {
                let (idx, env) = i0_kindex(&rows, 4, b);
                let want = u64::from(closure.contains(&nat(b)));
                assert_eq!(eval_p(&idx, &env, 1 << 18), CompResult::Value(nat(want)), "b={b}");
            }
        }
    }

    #[test]
    fn partial_items_fail_only_under_the_sweep() {
        for item in battery().iter().filter(|i| i.genuinely_partial) {
            let total = eval_t(&item.index, &item.env, item.budget);
            match item.name {
                "hole-off-trajectory" => assert_eq!(
                    total,
                    CompResult::TotalityViolation { arg: 0, fun: vec![0, 1] },
                ),
                "divergent-branch" => assert_eq!(total, CompResult::BudgetExceeded),
                "hole-under-composition" => assert_eq!(
                    total,
                    CompResult::TotalityViolation { arg: 2, fun: vec![0, 1, 1] },
                ),
                other => panic!("unexpected partial item {other}"),
            }
        }
    }
}
