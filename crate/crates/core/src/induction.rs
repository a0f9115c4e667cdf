//! The induction operator and everything built directly on it: stage traces,
//! the single-element variant, reductions of the quantifier functionals, and
//! the translation onto prewellordering codes.

use crate::foundations::{encode_seq, nat, pair, FinOrder, FinSet, Nat};
use num_traits::ToPrimitive;
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InductionError {
    #[error("step functional undefined at trajectory stage {stage}")]
    Partiality { stage: usize },
    #[error("point functional produced {value} outside the base at stage {stage}")]
    Productivity { stage: usize, value: Nat },
    #[error("nontrivial step functional required: F(∅) = ∅")]
    Trivial,
}

type StepFn = Arc<dyn Fn(&FinSet) -> Option<FinSet> + Send + Sync>;

enum Backing {
    /// One row per subset of [0..n), indexed by bitmask. None is an explicit
    /// undefined entry.
    Table { n: usize, rows: Vec<Option<FinSet>> },
    Fn(StepFn),
}

/// A possibly partial map from subsets of [0..base) to subsets of [0..base).
pub struct StepFunctional {
    base: Nat,
    backing: Backing,
}

impl Clone for StepFunctional {
    fn clone(&self) -> Self {
        let backing = match &self.backing {
            Backing::Table { n, rows } => Backing::Table { n: *n, rows: rows.clone() },
            Backing::Fn(f) => Backing::Fn(Arc::clone(f)),
        };
        StepFunctional { base: self.base.clone(), backing }
    }
}

impl std::fmt::Debug for StepFunctional {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.backing {
            Backing::Table { n, .. } => write!(f, "StepFunctional::Table(n={n})"),
            Backing::Fn(_) => write!(f, "StepFunctional::Fn(base={})", self.base),
        }
    }
}

impl StepFunctional {
    /// Explicit table over all 2^n inputs, rows indexed by input bitmask.
    pub fn from_table_masks(n: usize, rows: &[Option<u64>]) -> Self {
        assert!(n <= 24, "table backing is for small bases");
        assert_eq!(rows.len(), 1 << n, "one row per subset");
        let rows = rows
            .iter()
            .map(|row| row.map(|mask| FinSet::from_mask_u64(n, mask)))
            .collect();
        StepFunctional { base: nat(n as u64), backing: Backing::Table { n, rows } }
    }

    pub fn from_fn(
        base: Nat,
        f: impl Fn(&FinSet) -> Option<FinSet> + Send + Sync + 'static,
    ) -> Self {
        StepFunctional { base, backing: Backing::Fn(Arc::new(f)) }
    }

    pub fn base(&self) -> &Nat {
        &self.base
    }

    pub fn base_usize(&self) -> Option<usize> {
        self.base.to_usize()
    }

    pub fn apply(&self, a: &FinSet) -> Option<FinSet> {
        debug_assert_eq!(a.base(), &self.base);
        match &self.backing {
            Backing::Table { rows, .. } => {
                let mask = a.to_mask_u64().expect("table base fits in a mask") as usize;
                rows[mask].clone()
            }
            Backing::Fn(f) => f(a),
        }
    }
}

/// Stage sequence of an induction, up to closure or the first undefined step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndTrace {
    stages: Vec<FinSet>,
    applied: Vec<FinSet>,
    closed: bool,
    failed_at: Option<usize>,
}

impl IndTrace {
    pub fn stages(&self) -> &[FinSet] {
        &self.stages
    }

    pub fn applied(&self) -> &[FinSet] {
        &self.applied
    }

    pub fn closed(&self) -> bool {
        self.closed
    }

    pub fn failed_at(&self) -> Option<usize> {
        self.failed_at
    }

    /// Closure set, present only when the induction closed.
    pub fn lfp(&self) -> Option<&FinSet> {
        if self.closed {
            self.stages.last()
        } else {
            None
        }
    }

    /// Number of productive steps taken.
    pub fn closure_stage(&self) -> usize {
        self.stages.len() - 1
    }

    /// First stage whose set contains x.
    pub fn entry_stage(&self, x: &Nat) -> Option<usize> {
        self.stages.iter().position(|s| s.contains(x))
    }

    /// The prewellordering induced by stage of entry: x ⪯ y iff x entered no
    /// later than y. Domain is the closure set.
    pub fn stage_order(&self) -> FinOrder {
        let lfp = self.lfp().expect("stage order of a closed induction");
        let entries: Vec<(Nat, usize)> = lfp
            .iter()
            .map(|x| (x.clone(), self.entry_stage(x).expect("member of the closure")))
            .collect();
        let pairs = entries.iter().flat_map(|(x, sx)| {
            entries
                .iter()
                .filter(move |(_, sy)| sx <= sy)
                .map(move |(y, _)| (x.clone(), y.clone()))
        });
        FinOrder::new(lfp.clone(), pairs.collect::<Vec<_>>()).expect("pairs within domain")
    }
}

/// Runs the induction f₀ = ∅, f_{β+1} = f_β ∪ F(f_β) until the first stage
/// with F(f_α) ⊆ f_α. An undefined step is recorded in the trace rather than
/// signalled, so callers can inspect how far the induction got.
pub fn iterate(f: &StepFunctional) -> IndTrace {
    let mut stages = vec![FinSet::empty(f.base().clone())];
    let mut applied = Vec::new();
    loop {
        let cur = stages.last().unwrap();
        match f.apply(cur) {
            None => {
                return IndTrace {
                    failed_at: Some(stages.len() - 1),
                    stages,
                    applied,
                    closed: false,
                }
            }
            Some(fa) => {
                let closed = fa.is_subset(cur).expect("same base");
                let next = cur.union(&fa).expect("same base");
                applied.push(fa);
                if closed {
                    return IndTrace { stages, applied, closed: true, failed_at: None };
                }
                stages.push(next);
            }
        }
    }
}

pub fn lfp(f: &StepFunctional) -> Result<FinSet, InductionError> {
    let trace = iterate(f);
    match trace.failed_at {
        Some(stage) => Err(InductionError::Partiality { stage }),
        None => Ok(trace.stages.into_iter().last().unwrap()),
    }
}

type PointFn = Arc<dyn Fn(&FinSet) -> Nat + Send + Sync>;

/// Total map from subsets of [0..base) to naturals.
#[derive(Clone)]
pub struct PointFunctional {
    base: Nat,
    f: PointFn,
}

impl std::fmt::Debug for PointFunctional {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PointFunctional(base={})", self.base)
    }
}

impl PointFunctional {
    pub fn new(base: Nat, f: impl Fn(&FinSet) -> Nat + Send + Sync + 'static) -> Self {
        PointFunctional { base, f: Arc::new(f) }
    }

    /// Table over all 2^n inputs, indexed by input bitmask.
    pub fn from_table_u64(n: usize, rows: Vec<u64>) -> Self {
        assert_eq!(rows.len(), 1 << n);
        PointFunctional::new(nat(n as u64), move |a| {
            nat(rows[a.to_mask_u64().expect("small base") as usize])
        })
    }

    pub fn base(&self) -> &Nat {
        &self.base
    }

    pub fn apply(&self, a: &FinSet) -> Nat {
        (self.f)(a)
    }
}

/// Stage sets of the single-element induction A ↦ A ∪ {G(A)}, up to and
/// including the first A with G(A) ∈ A. A value outside the base before
/// closure is a productivity violation, not a silent clamp.
pub fn i0_trace(g: &PointFunctional) -> Result<Vec<FinSet>, InductionError> {
    let mut stages = vec![FinSet::empty(g.base().clone())];
    loop {
        let cur = stages.last().unwrap();
        let v = g.apply(cur);
        if cur.contains(&v) {
            return Ok(stages);
        }
        if &v >= g.base() {
            return Err(InductionError::Productivity { stage: stages.len() - 1, value: v });
        }
        let mut next = cur.clone();
        next.insert(v).expect("checked against the base");
        stages.push(next);
    }
}

pub fn i0(g: &PointFunctional) -> Result<FinSet, InductionError> {
    Ok(i0_trace(g)?.into_iter().last().unwrap())
}

/// Two distinct stages of the single-element induction on which G agrees:
/// iterate until G(A_α) ∈ A_α, then locate the stage β where that element
/// was added. Strict growth makes termination and β < α automatic.
pub fn pigeonhole_pair(g: &PointFunctional) -> Result<(FinSet, FinSet), InductionError> {
    let stages = i0_trace(g)?;
    let last = stages.last().unwrap();
    let repeated = g.apply(last);
    let beta = stages
        .iter()
        .position(|a| g.apply(a) == repeated)
        .expect("the repeated value was produced at some earlier stage");
    Ok((stages[beta].clone(), last.clone()))
}

/// Decides ∃k f(k) > 0 through the induction F_f(A) = {k : f(k) > 0} ∪
/// {k : k+1 ∈ A}: a positive value at k walks down to 0 in k further stages.
pub fn e2_via_ind(f: &[Nat]) -> u8 {
    let n = f.len();
    let positives: Vec<Nat> =
        (0..n).filter(|&k| f[k] > nat(0)).map(|k| nat(k as u64)).collect();
    let step = StepFunctional::from_fn(nat(n as u64), move |a| {
        let mut out = FinSet::empty(nat(n as u64));
        for k in &positives {
            out.insert(k.clone()).unwrap();
        }
        for k in 0..n as u64 {
            if a.contains(&nat(k + 1)) {
                out.insert(nat(k)).unwrap();
            }
        }
        Some(out)
    });
    let closure = lfp(&step).expect("F_f is total");
    u8::from(closure.contains(&nat(0)))
}

/// All sequences over [0..b) of length ≤ depth, in generation order.
pub fn suslin_sequences(b: usize, depth: usize) -> Vec<Vec<Nat>> {
    let mut all: Vec<Vec<Nat>> = vec![vec![]];
    let mut frontier: Vec<Vec<Nat>> = vec![vec![]];
    for _ in 0..depth {
        let mut next = Vec::new();
        for s in &frontier {
            for i in 0..b as u64 {
                let mut t = s.clone();
                t.push(nat(i));
                next.push(t);
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all
}

/// Exclusive upper bound for codes of sequences over [0..b) of length ≤ depth.
pub fn suslin_universe_bound(b: usize, depth: usize) -> Nat {
    let top: Vec<Nat> = std::iter::repeat(nat(b as u64 - 1)).take(depth).collect();
    encode_seq(&top) + 1u32
}

fn in_tree(tree: &[Nat], s: &[Nat]) -> bool {
    (0..=s.len()).all(|m| {
        let code = encode_seq(&s[..m]).to_usize().expect("code within the table");
        tree[code] == nat(0)
    })
}

/// Branch detector run as an induction: collect the tree nodes of depth < D
/// all of whose tree children are collected; depth-D nodes stand in for
/// infinite branches and are never collected, so the root stays out exactly
/// when a full-depth path exists.
pub fn suslin_via_ind(tree: &[Nat], b: usize, depth: usize) -> u8 {
    let bound = suslin_universe_bound(b, depth);
    assert!(
        tree.len() >= bound.to_usize().expect("desk-scale universe"),
        "tree table must cover every sequence code"
    );
    let nodes: Vec<Vec<Nat>> = suslin_sequences(b, depth)
        .into_iter()
        .filter(|s| in_tree(tree, s))
        .collect();
    if !in_tree(tree, &[]) {
        return 0;
    }
    let node_codes: Vec<Nat> = nodes.iter().map(|s| encode_seq(s)).collect();
    let children: Vec<Vec<Nat>> = nodes
        .iter()
        .map(|s| {
            if s.len() == depth {
                return Vec::new();
            }
            (0..b as u64)
                .map(|i| {
                    let mut t = s.clone();
                    t.push(nat(i));
                    t
                })
                .filter(|t| in_tree(tree, t))
                .map(|t| encode_seq(&t))
                .collect()
        })
        .collect();
    let full_depth: Vec<bool> = nodes.iter().map(|s| s.len() == depth).collect();
    let base = bound.clone();
    let step = StepFunctional::from_fn(bound, move |a| {
        let mut out = FinSet::empty(base.clone());
        for (i, code) in node_codes.iter().enumerate() {
            if full_depth[i] {
                continue;
            }
            if children[i].iter().all(|c| a.contains(c)) {
                out.insert(code.clone()).unwrap();
            }
        }
        Some(out)
    });
    let closure = lfp(&step).expect("the detector is total");
    u8::from(!closure.contains(&nat(0)))
}

/// Depth-first search oracle for the branch detector.
pub fn suslin_dfs(tree: &[Nat], b: usize, depth: usize) -> u8 {
    fn go(tree: &[Nat], b: usize, depth: usize, s: &mut Vec<Nat>) -> bool {
        if tree[encode_seq(s).to_usize().expect("desk-scale code")] != nat(0) {
            return false;
        }
        if s.len() == depth {
            return true;
        }
        for i in 0..b as u64 {
            s.push(nat(i));
            let hit = go(tree, b, depth, s);
            s.pop();
            if hit {
                return true;
            }
        }
        false
    }
    u8::from(go(tree, b, depth, &mut Vec::new()))
}

/// The single-element simulation of an arbitrary induction: a point
/// functional over binary-sequence codes that grows characteristic-function
/// approximations of the stages of F, one bit per step.
pub struct SingleValued {
    point: PointFunctional,
    n: usize,
    universe: Nat,
}

/// Sequence order used by the simulation: compare at the first differing
/// position, proper prefixes below extensions.
pub fn seq_below(s: &[Nat], t: &[Nat]) -> bool {
    for i in 0..s.len().min(t.len()) {
        if s[i] != t[i] {
            return s[i] < t[i];
        }
    }
    s.len() < t.len()
}

impl SingleValued {
    pub fn point(&self) -> &PointFunctional {
        &self.point
    }

    /// Exclusive bound of the code universe the simulation runs in.
    pub fn universe(&self) -> &Nat {
        &self.universe
    }

    /// Union of the bits set in any member of B, as a subset of [0..n).
    pub fn recover(&self, b: &FinSet) -> FinSet {
        let mut out = FinSet::empty(nat(self.n as u64));
        for code in b.iter() {
            if let Some(s) = crate::foundations::decode_seq(code) {
                for (i, bit) in s.iter().enumerate() {
                    if i < self.n && *bit == nat(1) {
                        out.insert(nat(i as u64)).unwrap();
                    }
                }
            }
        }
        out
    }
}

/// Builds the three-case simulation G of F over binary-sequence codes.
/// Requires F nontrivial and total along its own trajectory.
pub fn single_valued_of(f: &StepFunctional) -> Result<SingleValued, InductionError> {
    let trace = iterate(f);
    if let Some(stage) = trace.failed_at() {
        return Err(InductionError::Partiality { stage });
    }
    if trace.applied()[0].is_empty() {
        return Err(InductionError::Trivial);
    }
    let n = f.base_usize().expect("simulation runs at desk scale");
    let ones: Vec<Nat> = std::iter::repeat(nat(1)).take(n).collect();
    let universe = encode_seq(&ones) + 1u32;
    let f = f.clone();
    let point = PointFunctional::new(universe.clone(), move |b| sv_apply(&f, n, b));
    Ok(SingleValued { point, n, universe })
}

fn sv_apply(f: &StepFunctional, n: usize, b: &FinSet) -> Nat {
    // decode members in increasing code order; bail to 0 on garbage
    let mut seqs: Vec<Vec<Nat>> = Vec::with_capacity(b.len());
    for code in b.iter() {
        match crate::foundations::decode_seq(code) {
            Some(s) if s.len() <= n && s.iter().all(|x| *x <= nat(1)) => seqs.push(s),
            _ => return nat(0),
        }
    }
    seqs.sort_by(|s, t| {
        if s == t {
            std::cmp::Ordering::Equal
        } else if seq_below(s, t) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });
    let bits_of = |group: &[Vec<Nat>]| -> FinSet {
        let mut a = FinSet::empty(nat(n as u64));
        for s in group {
            for (i, bit) in s.iter().enumerate() {
                if *bit == nat(1) {
                    a.insert(nat(i as u64)).unwrap();
                }
            }
        }
        a
    };
    let block_completed = seqs.last().map(|s| s.len() == n).unwrap_or(true);
    if block_completed {
        // a full-length approximation closes a block: start the next stage
        let a = bits_of(&seqs);
        let fa = match f.apply(&a) {
            Some(fa) => fa,
            None => return nat(0),
        };
        if fa.is_subset(&a).expect("same base") {
            return nat(0);
        }
        let target = a.union(&fa).expect("same base");
        let m = fa.difference(&a).expect("same base").min_elem().unwrap().clone();
        let len = m.to_usize().expect("member of a desk-scale base") + 1;
        return encode_seq(&target.chi(len));
    }
    // otherwise extend the newest approximation by one bit; the completed
    // blocks are the members up to and including the last full-length one
    let boundary = seqs.iter().rposition(|s| s.len() == n).map_or(0, |i| i + 1);
    let (done, partial) = seqs.split_at(boundary);
    let a = bits_of(done);
    let fa = match f.apply(&a) {
        Some(fa) => fa,
        None => return nat(0),
    };
    let target = a.union(&fa).expect("same base");
    let approximates = |s: &[Nat]| {
        s.iter()
            .enumerate()
            .all(|(i, bit)| (*bit == nat(1)) == target.contains(&nat(i as u64)))
    };
    if !partial.iter().all(|s| approximates(s)) {
        return nat(0);
    }
    let last = partial.last().expect("nonempty below a full-length boundary");
    let mut ext = last.clone();
    ext.push(nat(target.contains(&nat(last.len() as u64)) as u64));
    encode_seq(&ext)
}

/// Exclusive bound for codes pair(x, y) with x, y < n.
pub fn pair_universe(n: usize) -> Nat {
    assert!(n > 0);
    pair(&nat(n as u64 - 1), &nat(n as u64 - 1)) + 1u32
}

/// Reads a set of pair codes as a relation on [0..n); None if some member is
/// not a pair of points below n.
pub fn order_from_code_set(x: &FinSet, n: usize) -> Option<FinOrder> {
    let mut pairs = Vec::new();
    let mut elems = FinSet::empty(nat(n as u64));
    for code in x.iter() {
        let (a, b) = crate::foundations::unpair(code);
        if a >= nat(n as u64) || b >= nat(n as u64) {
            return None;
        }
        elems.insert(a.clone()).unwrap();
        elems.insert(b.clone()).unwrap();
        pairs.push((a, b));
    }
    FinOrder::new(elems, pairs).ok()
}

fn encode_order(order_levels: &[FinSet], universe: &Nat) -> FinSet {
    let mut out = FinSet::empty(universe.clone());
    for (i, level) in order_levels.iter().enumerate() {
        for x in level.iter() {
            for earlier in order_levels[..=i].iter() {
                for y in earlier.iter() {
                    out.insert(pair(y, x)).unwrap();
                }
            }
        }
    }
    out
}

/// The total step functional H on coded orders that replays F stage by
/// stage: a code agreeing with the trajectory as far as it goes is
/// end-extended with the next stage's new elements; disagreement truncates
/// back to the last agreeing stage; anything that is not a prewellordering
/// code is left fixed. F is queried only along its own trajectory, which is
/// validated (and cached) up front, so H is total even for partial F.
pub fn pwo_translate(f: &StepFunctional) -> Result<StepFunctional, InductionError> {
    let n = f.base_usize().expect("pair coding runs at desk scale");
    assert!(n > 0);
    let trace = iterate(f);
    if let Some(stage) = trace.failed_at() {
        return Err(InductionError::Partiality { stage });
    }
    let universe = pair_universe(n);
    // level β holds the elements entering at stage β+1
    let levels: Vec<FinSet> = (1..trace.stages().len())
        .map(|j| trace.stages()[j].difference(&trace.stages()[j - 1]).unwrap())
        .collect();
    let stages: Vec<FinSet> = trace.stages().to_vec();
    let u = universe.clone();
    let step = StepFunctional::from_fn(universe, move |x| {
        let order = match order_from_code_set(x, n) {
            Some(o) if o.is_prewellordering() => o,
            _ => return Some(x.clone()),
        };
        // group the order's domain by rank
        let mut by_rank: BTreeMap<usize, FinSet> = BTreeMap::new();
        for v in order.domain().iter() {
            let r = order.rank_of(v).expect("prewellordering ranks are total");
            by_rank
                .entry(r.to_usize().expect("rank bounded by domain size"))
                .or_insert_with(|| FinSet::empty(nat(n as u64)))
                .insert(v.clone())
                .unwrap();
        }
        let r_levels: Vec<FinSet> = by_rank.into_values().collect();
        // compare rank initial segments with trajectory stages
        let mut agree = 0usize;
        while agree < r_levels.len()
            && agree + 1 < stages.len()
            && r_levels[agree] == levels[agree]
        {
            agree += 1;
        }
        if agree == r_levels.len() && agree + 1 == stages.len() {
            // full agreement with a completed trajectory: fixed point
            return Some(x.clone());
        }
        // truncate to the agreeing levels and end-extend with the next stage
        let mut kept: Vec<FinSet> = r_levels[..agree].to_vec();
        if agree + 1 < stages.len() {
            kept.push(levels[agree].clone());
        }
        Some(encode_order(&kept, &u))
    });
    Ok(step)
}

/// Domain of a coded order: the x with pair(x, x) in the set.
pub fn coded_order_domain(x: &FinSet, n: usize) -> FinSet {
    let mut out = FinSet::empty(nat(n as u64));
    for i in 0..n as u64 {
        if x.contains(&pair(&nat(i), &nat(i))) {
            out.insert(nat(i)).unwrap();
        }
    }
    out
}
