//! In-process sweeps at tiny scale: each engine layer is checked against an
//! independent recomputation, exhaustively where the space is small (base 2,
//! depth 2) and on a seeded sample one size up. The whole run stays well
//! under a minute.

use crate::json::EXIT_DOMAIN;
use nmi_core::induction::{iterate, StepFunctional};
use nmi_core::kleene::{battery, eval_p, Type2Oracle};
use nmi_core::procedures::{
    consistency_check, honest_history, validate_representation, ProcedureFamily, Representation,
    Verdict,
};
use nmi_core::realisers::{pincherle, recover_pwo, strong_hb, weak_from_strong, DepthOracle};
use nmi_core::FinSet;
use serde_json::{json, Value};

pub fn run(seed: u64) -> (Value, i32) {
    let checks = vec![
        induction_closure_sweep(),
        battery_replay(),
        procedure_roundtrip(),
        family_sweep(),
        realiser_bound_sweep(),
        recover_exhaustive(),
        recover_sampled(seed),
    ];
    let pass = checks.iter().all(|c| c.pass);
    let obj = json!({
        "schema": "nmi/v1/selftest",
        "seed": seed,
        "checks": checks
            .iter()
            .map(|c| json!({"name": c.name, "cases": c.cases, "pass": c.pass}))
            .collect::<Vec<_>>(),
        "pass": pass,
    });
    (obj, if pass { 0 } else { EXIT_DOMAIN })
}

struct Check {
    name: &'static str,
    cases: usize,
    pass: bool,
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Every total step functional over base 2: iteration closes, consecutive
/// stages differ by exactly the applied step, and the last stage absorbs it.
fn induction_closure_sweep() -> Check {
    let mut cases = 0;
    let mut pass = true;
    for t in 0..256u32 {
        let rows: Vec<Option<u64>> = (0..4).map(|i| Some((t as u64 >> (2 * i)) & 3)).collect();
        let f = StepFunctional::from_table_masks(2, &rows);
        let trace = iterate(&f);
        let step_of = |m: u64| {
            f.apply(&FinSet::from_mask_u64(2, m))
                .expect("total table")
                .to_mask_u64()
                .expect("base 2")
        };
        if !trace.closed() {
            pass = false;
        } else {
            let stages: Vec<u64> =
                trace.stages().iter().map(|s| s.to_mask_u64().expect("base 2")).collect();
            for w in stages.windows(2) {
                if w[1] != w[0] | step_of(w[0]) {
                    pass = false;
                }
            }
            let last = *stages.last().expect("at least the empty stage");
            if step_of(last) & !last != 0 {
                pass = false;
            }
        }
        cases += 1;
    }
    Check { name: "induction_closure_sweep", cases, pass }
}

/// Replay the whole index battery and compare with its frozen outcomes.
fn battery_replay() -> Check {
    let items = battery();
    let pass = items
        .iter()
        .all(|it| eval_p(&it.index, &it.env, it.budget) == it.expected_p);
    Check { name: "battery_replay", cases: items.len(), pass }
}

/// Compile every terminating battery item, match the evaluator's value, and
/// re-check the order-free repackaging through the validator.
fn procedure_roundtrip() -> Check {
    let mut cases = 0;
    let mut pass = true;
    for it in battery().iter().filter(|it| it.terminating) {
        cases += 1;
        let calc = match nmi_core::procedures::compile_computation(&it.index, &it.env, it.budget) {
            Ok(c) => c,
            Err(_) => {
                pass = false;
                continue;
            }
        };
        if calc.value.as_ref() != it.expected_p.value() {
            pass = false;
            continue;
        }
        let repr = match Representation::of_calc(&calc) {
            Some(r) => r,
            None => {
                pass = false;
                continue;
            }
        };
        match validate_representation(&it.index, &it.env, &repr, it.budget) {
            Verdict::Accept(v) => {
                if Some(&v) != it.expected_p.value() {
                    pass = false;
                }
            }
            Verdict::Reject(_) => pass = false,
        }
    }
    Check { name: "procedure_roundtrip", cases, pass }
}

/// For single-oracle battery items of small support, compile the family over
/// the item's own oracle plus every total 0/1-valued candidate: the family
/// must be consistent and the honest history must reproduce the value.
fn family_sweep() -> Check {
    let mut cases = 0;
    let mut pass = true;
    for it in battery().iter().filter(|it| it.terminating && it.env.oracles.len() == 1) {
        let target = it.env.oracles[0].clone();
        let s = target.support();
        if s > 2 {
            continue;
        }
        cases += 1;
        let mut candidates = vec![target.clone()];
        for bits in 0..1u32 << (1 << s) {
            let values: Vec<u64> = (0..1 << s).map(|i| (bits as u64 >> i) & 1).collect();
            candidates.push(Type2Oracle::total01(s, values));
        }
        let family = ProcedureFamily::compiled(&it.index, &it.env, &candidates, it.budget);
        if consistency_check(&family).is_err() {
            pass = false;
            continue;
        }
        match honest_history(&family, &target) {
            Ok((_, calc)) => {
                if calc.value.as_ref() != it.expected_p.value() {
                    pass = false;
                }
            }
            Err(_) => pass = false,
        }
    }
    Check { name: "family_sweep", cases, pass }
}

fn low_bits(k: u64) -> u64 {
    if k >= 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

/// The largest functional respecting the oracle's constraints, evaluated
/// straight from the definition.
fn max_respecting(f: &DepthOracle, g: u64) -> u64 {
    (0..1u64 << f.depth())
        .filter(|&other| {
            let k = f.apply_leaf(other);
            g & low_bits(k) == other & low_bits(k)
        })
        .map(|other| f.apply_leaf(other))
        .min()
        .expect("g itself qualifies")
}

/// Every depth-2 oracle: the greedy strong cover projects to a genuine weak
/// cover, and the computed least bound equals the brute-force one.
fn realiser_bound_sweep() -> Check {
    let mut cases = 0;
    let mut pass = true;
    for t in 0..81u32 {
        let mut t = t;
        let mut table = Vec::with_capacity(4);
        for _ in 0..4 {
            table.push((t % 3) as u64);
            t /= 3;
        }
        let f = DepthOracle::new(2, table).expect("values bounded by the depth");
        let strong = strong_hb(&f);
        if !weak_from_strong(&f, &strong).is_cover(2) {
            pass = false;
        }
        let brute = (0..4u64).map(|g| max_respecting(&f, g)).max().expect("four leaves");
        if pincherle(&f) != brute {
            pass = false;
        }
        cases += 1;
    }
    Check { name: "realiser_bound_sweep", cases, pass }
}

fn recover_matches(f: &StepFunctional, base: usize) -> bool {
    let trace = iterate(f);
    if !trace.closed() {
        return false;
    }
    match recover_pwo(f, base, pincherle) {
        Ok(rec) => rec == trace.stage_order(),
        Err(_) => false,
    }
}

/// Every total step functional over base 2: the order recovered through
/// depth oracles alone equals the entry-stage prewellordering.
fn recover_exhaustive() -> Check {
    let mut cases = 0;
    let mut pass = true;
    for t in 0..256u32 {
        let rows: Vec<Option<u64>> = (0..4).map(|i| Some((t as u64 >> (2 * i)) & 3)).collect();
        let f = StepFunctional::from_table_masks(2, &rows);
        if !recover_matches(&f, 2) {
            pass = false;
        }
        cases += 1;
    }
    Check { name: "recover_exhaustive", cases, pass }
}

/// A seeded sample of total base-3 definitions, same agreement check.
fn recover_sampled(seed: u64) -> Check {
    let mut state = seed ^ 0xb5ad4eceda1ce2a9;
    let mut cases = 0;
    let mut pass = true;
    for _ in 0..12 {
        let rows: Vec<Option<u64>> = (0..8).map(|_| Some(splitmix(&mut state) & 7)).collect();
        let f = StepFunctional::from_table_masks(3, &rows);
        if !recover_matches(&f, 3) {
            pass = false;
        }
        cases += 1;
    }
    Check { name: "recover_sampled", cases, pass }
}
