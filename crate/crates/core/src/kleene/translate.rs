//! Rewrites an index so that every induction application it performs runs a
//! total step rule, while computing the same value wherever the original's
//! trajectory evaluation terminates.
//!
//! Each induction site in the source gets a companion type-2 oracle that
//! recognises the trajectory stage sets of the original rule. The rewritten
//! body feeds its entire first-order environment to that oracle and branches:
//! on a genuine stage it dispatches the original (rewritten) body, off the
//! trajectory it returns 0 outright. A sweep over all candidate stage
//! functions therefore never probes the original rule where it is undefined
//! or divergent.
//!
//! The companions cannot live inside the index itself, so a translation is a
//! pair: a rewritten index plus an environment extension that appends, per
//! site, two function tables (a branch table that also carries the wrapper's
//! working pieces, and a coordinate reader table) and one helper oracle. All
//! permutation schemes in the rewritten code are widened with identity
//! tails, keeping the appended material at fixed positions from every
//! interior vantage point.

use super::asm::{k2, k3, k4, k6_raw, k7, k82, k83, k9};
use super::env::{parse, validate_perm, Env, EnvShape, KIndex, Type2Oracle};
use super::eval::{eval_p, CompResult};
use crate::foundations::{nat, FinFun, FinSet, Nat};
use crate::induction::{iterate, StepFunctional};
use num_traits::ToPrimitive;
use std::sync::{Arc, OnceLock};

/// Function and numeric arity at a dispatch point. Codes stored as data in
/// function tables are rewritten against this, since the translation cannot
/// see through a ⟨9⟩ to rewrite them in place.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AuxCtx {
    pub fun_count: usize,
    pub num_count: usize,
}

/// One translated induction site, as material for its helper oracle.
#[derive(Clone, Debug)]
struct HelperSpec {
    /// Rewritten body, evaluated pointwise on candidate stages.
    inner: Nat,
    /// Universe size of the induction.
    n: usize,
    /// Lengths of the function slots visible at the site, the stage/point
    /// function first. The numerics are whatever remains of the flattened
    /// data after these.
    fun_lens: Vec<usize>,
    /// Which top-level oracle each of the site's leading oracle slots is.
    oracle_perm: Vec<usize>,
    /// Flattened length of the site data: all functions, then numerics.
    support: usize,
    budget: u64,
}

/// The environment side of a translation: per-site tables to append to the
/// functions and helper oracles to append to the oracles.
#[derive(Clone, Debug)]
pub struct EnvExtension {
    base: EnvShape,
    m_top: usize,
    tables: Arc<Vec<Arc<FinFun>>>,
    helpers: Vec<HelperSpec>,
}

/// A rewritten index together with the extension its evaluation needs.
#[derive(Clone, Debug)]
pub struct Translation {
    pub index: Nat,
    pub extension: EnvExtension,
}

impl EnvExtension {
    pub fn base(&self) -> &EnvShape {
        &self.base
    }

    pub fn tables(&self) -> &[Arc<FinFun>] {
        &self.tables
    }

    pub fn helper_count(&self) -> usize {
        self.helpers.len()
    }

    /// Build the concrete environment the rewritten index runs in. The input
    /// must have exactly the shape the translation was made for.
    pub fn apply(&self, env: &Env) -> Env {
        assert_eq!(env.shape(), self.base, "environment shape mismatch");
        // helpers may need to call each other (nested sites), so they all
        // read the finished oracle list through one late-bound cell
        let lock: Arc<OnceLock<Vec<Type2Oracle>>> = Arc::new(OnceLock::new());
        let mut oracles = env.oracles.clone();
        for spec in &self.helpers {
            oracles.push(make_helper(
                spec,
                self.m_top,
                Arc::clone(&self.tables),
                Arc::clone(&lock),
            ));
        }
        let _ = lock.set(oracles.clone());
        let mut funs = env.funs.clone();
        funs.extend(self.tables.iter().cloned());
        Env { n: env.n, oracles, funs, nums: env.nums.clone() }
    }

    /// Rewrite a scheme code stored as table data so its permutations cover
    /// the appended tables and helpers. Such codes must not contain live
    /// induction applications of their own; those would need sites.
    pub fn aux_rewrite(&self, code: &Nat, ctx: &AuxCtx) -> Nat {
        let t = self.tables.len();
        let h = self.helpers.len();
        match parse(code) {
            None
            | Some(
                KIndex::S1 | KIndex::S2 { .. } | KIndex::S3 | KIndex::S7 | KIndex::S9,
            ) => code.clone(),
            Some(KIndex::S4 { e1, e2 }) => {
                let e2r = self.aux_rewrite(&e2, ctx);
                let c1 = AuxCtx { num_count: ctx.num_count + 1, ..*ctx };
                let e1r = self.aux_rewrite(&e1, &c1);
                k4(&e1r, &e2r)
            }
            Some(KIndex::S6 { e1, tau_o, tau_f, tau_n }) => {
                let parsed = (
                    validate_perm(&tau_o, self.m_top),
                    validate_perm(&tau_f, ctx.fun_count),
                    validate_perm(&tau_n, ctx.num_count),
                );
                let (mut po, mut pf, pn) = match parsed {
                    (Some(a), Some(b), Some(c)) => (a, b, c),
                    _ => return code.clone(),
                };
                let body = self.aux_rewrite(&e1, ctx);
                po.extend(self.m_top..self.m_top + h);
                pf.extend(ctx.fun_count..ctx.fun_count + t);
                k6_raw(&body, &po, &pf, &pn)
            }
            Some(KIndex::S82 { d }) => {
                let c = AuxCtx { num_count: ctx.num_count + 1, ..*ctx };
                k82(&self.aux_rewrite(&d, &c))
            }
            Some(KIndex::S83 { d: _ }) => {
                assert_eq!(
                    ctx.num_count, 0,
                    "stored induction codes would need sites of their own"
                );
                // with no numeric argument the application cannot fire, on
                // either side of the translation
                code.clone()
            }
        }
    }
}

/// The stage-check oracle for one site. It receives the site's flattened
/// first-order data, reruns the original induction from the empty set using
/// the carried functions and numerics, and answers 1 exactly when the stage
/// function in the data matches one of the trajectory's stage sets.
fn make_helper(
    spec: &HelperSpec,
    m_top: usize,
    tables: Arc<Vec<Arc<FinFun>>>,
    lock: Arc<OnceLock<Vec<Type2Oracle>>>,
) -> Type2Oracle {
    let spec = spec.clone();
    Type2Oracle::from_fn(spec.support, move |g: &[Nat]| {
        if g.len() != spec.support {
            return None;
        }
        let mut dyn_funs: Vec<Arc<FinFun>> = Vec::with_capacity(spec.fun_lens.len());
        let mut at = 0usize;
        for &len in &spec.fun_lens {
            dyn_funs.push(Arc::new(g[at..at + len].to_vec()));
            at += len;
        }
        let nums: Vec<Nat> = g[at..].to_vec();

        let n = spec.n;
        let mut f_bits = Vec::with_capacity(n);
        for v in &dyn_funs[0][1..] {
            match v.to_u8() {
                Some(0) => f_bits.push(false),
                Some(1) => f_bits.push(true),
                // stage sets are 0/1-valued, so this is never a stage
                _ => return Some(nat(0)),
            }
        }
        if n == 0 {
            return Some(nat(1));
        }

        let global = lock.get()?;
        let mut site_orcs: Vec<Type2Oracle> = spec
            .oracle_perm
            .iter()
            .map(|&p| global[p].clone())
            .collect();
        site_orcs.extend_from_slice(&global[m_top..]);

        let carried: Vec<Arc<FinFun>> = dyn_funs[1..].to_vec();
        let inner = spec.inner.clone();
        let budget = spec.budget;
        let tables = Arc::clone(&tables);
        let step = StepFunctional::from_fn(nat(n as u64), move |s: &FinSet| {
            let mut out = FinSet::empty(nat(n as u64));
            for a in 0..n {
                let mut u: FinFun = Vec::with_capacity(n + 1);
                u.push(nat(a as u64));
                for i in 0..n {
                    u.push(nat(u64::from(s.contains(&nat(i as u64)))));
                }
                let mut funs = Vec::with_capacity(1 + carried.len() + tables.len());
                funs.push(Arc::new(u));
                funs.extend(carried.iter().cloned());
                funs.extend(tables.iter().cloned());
                let env = Env {
                    n,
                    oracles: site_orcs.clone(),
                    funs,
                    nums: nums.clone(),
                };
                match eval_p(&inner, &env, budget) {
                    CompResult::Value(v) => {
                        if v != nat(0) {
                            out.insert(nat(a as u64)).expect("point is in range");
                        }
                    }
                    _ => return None,
                }
            }
            Some(out)
        });
        let trace = iterate(&step);
        let hit = trace
            .stages()
            .iter()
            .any(|st| (0..n).all(|i| st.contains(&nat(i as u64)) == f_bits[i]));
        Some(nat(u64::from(hit)))
    })
}

/// Identity permutation 0..len.
fn id_perm(len: usize) -> Vec<usize> {
    (0..len).collect()
}

/// The cycle that brings position `target` to the front and shifts the
/// positions before it up by one.
fn bring(target: usize, len: usize) -> Vec<usize> {
    let mut tau = Vec::with_capacity(len);
    tau.push(target);
    for i in 1..len {
        tau.push(if i <= target { i - 1 } else { i });
    }
    tau
}

/// How many live induction sites the rewrite will allocate. Mirrors the
/// rewrite's own descent exactly; every emitted permutation tail embeds the
/// final table count, so the count is needed up front.
fn count_sites(code: &Nat, m_top: usize, fun_count: usize, num_count: usize) -> usize {
    match parse(code) {
        None
        | Some(KIndex::S1 | KIndex::S2 { .. } | KIndex::S3 | KIndex::S7 | KIndex::S9) => 0,
        Some(KIndex::S4 { e1, e2 }) => {
            count_sites(&e2, m_top, fun_count, num_count)
                + count_sites(&e1, m_top, fun_count, num_count + 1)
        }
        Some(KIndex::S6 { e1, tau_o, tau_f, tau_n }) => {
            if validate_perm(&tau_o, m_top).is_some()
                && validate_perm(&tau_f, fun_count).is_some()
                && validate_perm(&tau_n, num_count).is_some()
            {
                count_sites(&e1, m_top, fun_count, num_count)
            } else {
                0
            }
        }
        Some(KIndex::S82 { d }) => count_sites(&d, m_top, fun_count, num_count + 1),
        Some(KIndex::S83 { d }) => {
            if num_count == 0 {
                0
            } else {
                1 + count_sites(&d, m_top, fun_count + 1, num_count - 1)
            }
        }
    }
}

/// Arity bookkeeping along the rewrite: slot lengths of the visible
/// functions, remaining numerics, and which top oracle each slot is.
#[derive(Clone)]
struct Ctx {
    fun_lens: Vec<usize>,
    num_count: usize,
    perm: Vec<usize>,
}

struct Emitter {
    n: usize,
    m_top: usize,
    site_count: usize,
    /// Number of appended tables, two per site.
    t: usize,
    helper_budget: u64,
    tables: Vec<Option<FinFun>>,
    specs: Vec<Option<HelperSpec>>,
    next: usize,
}

impl Emitter {
    fn m_full(&self) -> usize {
        self.m_top + self.site_count
    }

    fn rho(&mut self, code: &Nat, ctx: &Ctx) -> Nat {
        match parse(code) {
            None
            | Some(
                KIndex::S1 | KIndex::S2 { .. } | KIndex::S3 | KIndex::S7 | KIndex::S9,
            ) => code.clone(),
            Some(KIndex::S4 { e1, e2 }) => {
                let e2r = self.rho(&e2, ctx);
                let mut c1 = ctx.clone();
                c1.num_count += 1;
                let e1r = self.rho(&e1, &c1);
                k4(&e1r, &e2r)
            }
            Some(KIndex::S6 { e1, tau_o, tau_f, tau_n }) => {
                let parsed = (
                    validate_perm(&tau_o, self.m_top),
                    validate_perm(&tau_f, ctx.fun_lens.len()),
                    validate_perm(&tau_n, ctx.num_count),
                );
                let (po, pf, pn) = match parsed {
                    (Some(a), Some(b), Some(c)) => (a, b, c),
                    // an invalid permutation disqualifies the index at this
                    // point on both sides; leave it alone
                    _ => return code.clone(),
                };
                let inner_ctx = Ctx {
                    fun_lens: pf.iter().map(|&i| ctx.fun_lens[i]).collect(),
                    num_count: ctx.num_count,
                    perm: po.iter().map(|&s| ctx.perm[s]).collect(),
                };
                let body = self.rho(&e1, &inner_ctx);
                let d = ctx.fun_lens.len();
                let mut full_o = po;
                full_o.extend(self.m_top..self.m_full());
                let mut full_f = pf;
                full_f.extend(d..d + self.t);
                k6_raw(&body, &full_o, &full_f, &pn)
            }
            Some(KIndex::S82 { d }) => {
                let mut c = ctx.clone();
                c.num_count += 1;
                k82(&self.rho(&d, &c))
            }
            Some(KIndex::S83 { d }) => {
                if ctx.num_count == 0 {
                    return code.clone();
                }
                let site = self.next;
                self.next += 1;
                let mut inner_lens = Vec::with_capacity(ctx.fun_lens.len() + 1);
                inner_lens.push(self.n + 1);
                inner_lens.extend_from_slice(&ctx.fun_lens);
                let inner_ctx = Ctx {
                    fun_lens: inner_lens,
                    num_count: ctx.num_count - 1,
                    perm: ctx.perm.clone(),
                };
                let body = self.rho(&d, &inner_ctx);
                self.finish_site(site, body, &inner_ctx)
            }
        }
    }

    /// Emit the replacement body for one site and record its tables and
    /// helper. `ctx` is the arity inside the induction, stage/point function
    /// included.
    ///
    /// The emitted body is kept shallow on purpose: sequence codes grow
    /// geometrically with nesting depth, so the wrapper's pieces are stored
    /// as branch-table entries and chained through ⟨9⟩ dispatches rather
    /// than composed structurally.
    fn finish_site(&mut self, site: usize, body: Nat, ctx: &Ctx) -> Nat {
        let d = ctx.fun_lens.len();
        let r = ctx.num_count;
        let t = self.t;
        let m_full = self.m_full();
        let support: usize = ctx.fun_lens.iter().sum::<usize>() + r;
        let t_pos = d + 2 * site;
        let td_pos = d + 2 * site + 1;

        // reader table: entry j evaluates to coordinate j of the flattened
        // site data. The leading numeric is the coordinate for the stage
        // function's entries and dead weight for the rest.
        let mut td: FinFun = Vec::with_capacity(support);
        for (p, &len) in ctx.fun_lens.iter().enumerate() {
            for z in 0..len {
                if p == 0 {
                    td.push(k7());
                } else {
                    td.push(k6_raw(
                        &k4(&k7(), &k2(&nat(z as u64))),
                        &id_perm(m_full),
                        &bring(p, d + t),
                        &id_perm(r + 1),
                    ));
                }
            }
        }
        for m in 0..r {
            td.push(k6_raw(
                &k3(),
                &id_perm(m_full),
                &id_perm(d + t),
                &bring(m + 1, r + 1),
            ));
        }

        // a baked lookup in this site's branch table, at numeric depth `nums`
        let slot = |z: usize, nums: usize| {
            k6_raw(
                &k4(&k7(), &k2(&nat(z as u64))),
                &id_perm(m_full),
                &bring(t_pos, d + t),
                &id_perm(nums),
            )
        };

        // one coordinate of the site data: look its reader up and run it
        let orc = k82(&k4(&k9(), &k6_raw(
            &k7(),
            &id_perm(m_full),
            &bring(td_pos, d + t),
            &id_perm(r + 1),
        )));
        // the helper's verdict on the current stage function: bring the
        // helper to the front and dispatch the oracle-call piece inside
        let traj = k6_raw(
            &k4(&k9(), &slot(4, r)),
            &bring(self.m_top + site, m_full),
            &id_perm(d + t),
            &id_perm(r),
        );
        // select a branch by the verdict; the verdict is consumed on the way
        let readsel = k6_raw(
            &k7(),
            &id_perm(m_full),
            &bring(t_pos, d + t),
            &id_perm(r + 1),
        );
        let c_mid = k4(&readsel, &k4(&k9(), &slot(3, r)));
        // run the selector, then dispatch the branch it picked on the
        // unchanged environment
        let d_tot = k4(&k9(), &k4(&k9(), &slot(2, r)));

        // branch table: off the trajectory return 0, on it run the body;
        // the selector, verdict and oracle-call pieces ride along behind
        self.tables[2 * site] = Some(vec![k2(&nat(0)), body.clone(), c_mid, traj, orc]);
        self.tables[2 * site + 1] = Some(td);

        self.specs[site] = Some(HelperSpec {
            inner: body,
            n: self.n,
            fun_lens: ctx.fun_lens.clone(),
            oracle_perm: ctx.perm.clone(),
            support,
            budget: self.helper_budget,
        });

        k83(&d_tot)
    }
}

/// Rewrite `e` for environments of shape `shape`. Helper oracles run each
/// body evaluation under `helper_budget`, separate from the caller's meter.
pub fn translate_p_to_t(e: &Nat, shape: &EnvShape, helper_budget: u64) -> Translation {
    let m_top = shape.oracle_count;
    let sites = count_sites(e, m_top, shape.fun_lens.len(), shape.num_count);
    let mut em = Emitter {
        n: shape.n,
        m_top,
        site_count: sites,
        t: 2 * sites,
        helper_budget,
        tables: vec![None; 2 * sites],
        specs: vec![None; sites],
        next: 0,
    };
    let root = Ctx {
        fun_lens: shape.fun_lens.clone(),
        num_count: shape.num_count,
        perm: (0..m_top).collect(),
    };
    let index = em.rho(e, &root);
    assert_eq!(em.next, sites, "site scan and emission agree");
    let tables: Vec<Arc<FinFun>> = em
        .tables
        .into_iter()
        .map(|t| Arc::new(t.expect("every site records its tables")))
        .collect();
    let helpers: Vec<HelperSpec> = em
        .specs
        .into_iter()
        .map(|s| s.expect("every site records its helper"))
        .collect();
    Translation {
        index,
        extension: EnvExtension {
            base: shape.clone(),
            m_top,
            tables: Arc::new(tables),
            helpers,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kleene::asm::{k1, k6};
    use crate::kleene::battery::{battery, BatteryItem};
    use crate::kleene::eval::eval_t;

    fn item(name: &str) -> BatteryItem {
        battery()
            .into_iter()
            .find(|i| i.name == name)
            .expect("battery item")
    }

    fn run_translated(item: &BatteryItem, budget: u64) -> CompResult {
        let t = translate_p_to_t(&item.index, &item.env.shape(), budget);
        let mut env = t.extension.apply(&item.env);
        for aux in &item.aux_tables {
            env.funs[aux.fun_slot] = Arc::new(
                item.env.funs[aux.fun_slot]
                    .iter()
                    .map(|c| t.extension.aux_rewrite(c, &aux.ctx))
                    .collect(),
            );
        }
        eval_t(&t.index, &env, budget)
    }

    #[test]
    fn site_free_codes_pass_through() {
        let shape = Env::new(2).with_nums_u64(&[5]).shape();
        for e in [k1(), k4(&k1(), &k3()), k4(&k1(), &k4(&k1(), &k3()))] {
            let t = translate_p_to_t(&e, &shape, 1 << 12);
            assert_eq!(t.index, e);
            assert!(t.extension.tables().is_empty());
            assert_eq!(t.extension.helper_count(), 0);
        }
    }

    #[test]
    fn a_total_ladder_translates_faithfully() {
        let it = item("ladder");
        assert_eq!(
            eval_t(&it.index, &it.env, it.budget),
            CompResult::Value(nat(1)),
            "the ladder rule is total to begin with"
        );
        assert_eq!(run_translated(&it, 1 << 20), CompResult::Value(nat(1)));
    }

    #[test]
    fn an_off_trajectory_hole_is_never_consulted() {
        let it = item("hole-off-trajectory");
        assert!(matches!(
            eval_t(&it.index, &it.env, it.budget),
            CompResult::TotalityViolation { .. }
        ));
        assert_eq!(run_translated(&it, 1 << 20), CompResult::Value(nat(1)));
    }

    #[test]
    fn a_divergent_branch_is_never_dispatched() {
        let it = item("divergent-branch");
        assert_eq!(
            eval_t(&it.index, &it.env, it.budget),
            CompResult::BudgetExceeded
        );
        assert_eq!(run_translated(&it, 1 << 20), CompResult::Value(nat(1)));
    }

    #[test]
    fn failures_travel_through_compositions() {
        let it = item("hole-under-composition");
        assert!(matches!(
            eval_t(&it.index, &it.env, it.budget),
            CompResult::TotalityViolation { .. }
        ));
        assert_eq!(run_translated(&it, 1 << 20), CompResult::Value(nat(2)));
    }

    #[test]
    fn a_permuted_site_reads_the_right_oracle() {
        // the site sits under a swap; its rule must keep using the oracle it
        // saw in the source, while the helper never touches the broken one
        let broken = Type2Oracle::from_fn(4, |_: &[Nat]| None);
        let ladder = Type2Oracle::from_fn(4, |u: &[Nat]| {
            let a = u[0].to_usize()?;
            if a == 0 {
                return Some(nat(1));
            }
            if a < 3 {
                return Some(nat(u64::from(u[a] == nat(1))));
            }
            Some(nat(0))
        });
        let e = k6(&k83(&k82(&k7())), &[1, 0], &[], &[0]);
        let env = Env::new(3)
            .with_oracles(vec![broken, ladder])
            .with_nums_u64(&[0]);
        assert_eq!(eval_p(&e, &env, 1 << 16), CompResult::Value(nat(1)));
        let t = translate_p_to_t(&e, &env.shape(), 1 << 16);
        assert_eq!(t.extension.helper_count(), 1);
        let env2 = t.extension.apply(&env);
        assert_eq!(eval_t(&t.index, &env2, 1 << 20), CompResult::Value(nat(1)));
    }

    #[test]
    fn nested_sites_stack() {
        let it = item("nested-induction");
        let t = translate_p_to_t(&it.index, &it.env.shape(), 1 << 20);
        assert_eq!(t.extension.helper_count(), 2);
        assert_eq!(t.extension.tables().len(), 4);
        assert_eq!(run_translated(&it, 1 << 20), CompResult::Value(nat(1)));
    }

    #[test]
    fn dispatched_tables_are_rewritten_to_match() {
        let it = item("exists-positive");
        assert_eq!(run_translated(&it, 1 << 20), CompResult::Value(nat(1)));

        // the rewrite widens a stored code's permutations by the two tables
        // and one helper of this translation; the scheme here is the item's
        // own table reader, at the numeric depth it is dispatched from
        let t = translate_p_to_t(&it.index, &it.env.shape(), 1 << 12);
        let stored = k6(&k7(), &[], &[1, 0], &[0]);
        let out = t
            .extension
            .aux_rewrite(&stored, &AuxCtx { fun_count: 2, num_count: 1 });
        match parse(&out) {
            Some(KIndex::S6 { tau_o, tau_f, tau_n, .. }) => {
                assert_eq!(tau_o.len(), 1);
                assert_eq!(tau_f.len(), 4);
                assert_eq!(tau_n.len(), 1);
            }
            other => panic!("expected a permutation scheme, got {other:?}"),
        }
    }
}
