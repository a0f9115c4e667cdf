//! Finite combinatorial substrate: unbounded naturals, sequence coding,
//! finite sets over an explicit base, finite function tables, and finite
//! orders with ranks.

use num_traits::{ToPrimitive, Zero};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Unbounded natural number. Sequence codes square in magnitude with every
/// pairing level, so realistic index terms overflow any fixed-width integer.
pub type Nat = num_bigint::BigUint;

/// Shorthand constructor for small constants.
pub fn nat(v: u64) -> Nat {
    Nat::from(v)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FoundationError {
    #[error("base mismatch: {0} vs {1}")]
    BaseMismatch(Nat, Nat),
    #[error("member {0} not below base {1}")]
    OutOfBase(Nat, Nat),
    #[error("pair ({0}, {1}) mentions elements outside the domain")]
    PairOutsideDomain(Nat, Nat),
    #[error("{0} has no rank: outside the well-founded part")]
    NotWellFounded(Nat),
}

/// Cantor pairing (a+b)(a+b+1)/2 + b.
pub fn pair(a: &Nat, b: &Nat) -> Nat {
    let s = a + b;
    (&s * (&s + 1u32)) / 2u32 + b
}

/// Inverse of `pair`, total on all naturals.
pub fn unpair(p: &Nat) -> (Nat, Nat) {
    let w = ((p * 8u32 + 1u32).sqrt() - 1u32) / 2u32;
    let t = (&w * (&w + 1u32)) / 2u32;
    let b = p - t;
    let a = &w - &b;
    (a, b)
}

/// Decoded sequences longer than this are treated as garbage codes; every
/// sequence actually produced by the engine is orders of magnitude shorter.
pub const MAX_SEQ_LEN: usize = 1 << 16;

/// ⟨x₁,…,x_k⟩ = pair(k, pair(x₁, pair(x₂, …, pair(x_{k−1}, x_k)…))), ⟨⟩ = 0.
pub fn encode_seq(xs: &[Nat]) -> Nat {
    match xs.split_last() {
        None => Nat::zero(),
        Some((last, init)) => {
            let payload = init.iter().rev().fold(last.clone(), |acc, x| pair(x, &acc));
            pair(&nat(xs.len() as u64), &payload)
        }
    }
}

/// Inverts `encode_seq`. None when the code is not a sequence code: the
/// length component is zero on a nonzero code, or beyond `MAX_SEQ_LEN`.
pub fn decode_seq(code: &Nat) -> Option<Vec<Nat>> {
    if code.is_zero() {
        return Some(Vec::new());
    }
    let (k, payload) = unpair(code);
    let k = k.to_usize().filter(|&k| k >= 1 && k <= MAX_SEQ_LEN)?;
    let mut out = Vec::with_capacity(k);
    let mut rest = payload;
    for _ in 0..k - 1 {
        let (x, r) = unpair(&rest);
        out.push(x);
        rest = r;
    }
    out.push(rest);
    Some(out)
}

/// Total function on [0..len), presented by its value table.
pub type FinFun = Vec<Nat>;

/// f̄(k): the sequence code of the first k values. Panics if k exceeds the
/// table, mirroring the convention that prefixes exist only up to the length.
pub fn prefix_code(f: &[Nat], k: usize) -> Nat {
    encode_seq(&f[..k])
}

/// Subset of [0..base). The base travels with the value; operations across
/// distinct bases signal an error instead of reinterpreting members.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FinSet {
    base: Nat,
    members: BTreeSet<Nat>,
}

impl FinSet {
    pub fn empty(base: Nat) -> Self {
        FinSet { base, members: BTreeSet::new() }
    }

    pub fn new(
        base: Nat,
        members: impl IntoIterator<Item = Nat>,
    ) -> Result<Self, FoundationError> {
        let mut s = FinSet::empty(base);
        for m in members {
            s.insert(m)?;
        }
        Ok(s)
    }

    /// Test helper-flavoured constructor over a small base.
    pub fn from_u64s(base: u64, members: &[u64]) -> Self {
        FinSet::new(nat(base), members.iter().map(|&m| nat(m)))
            .expect("members below base")
    }

    pub fn from_mask_u64(base: usize, mask: u64) -> Self {
        let members = (0..base.min(64)).filter(|i| mask >> i & 1 == 1).map(|i| nat(i as u64));
        FinSet::new(nat(base as u64), members).expect("mask bits below base")
    }

    /// Bitmask form for small bases; None when a member does not fit.
    pub fn to_mask_u64(&self) -> Option<u64> {
        let mut mask = 0u64;
        for m in &self.members {
            let i = m.to_u64().filter(|&i| i < 64)?;
            mask |= 1 << i;
        }
        Some(mask)
    }

    pub fn base(&self) -> &Nat {
        &self.base
    }

    pub fn members(&self) -> &BTreeSet<Nat> {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, x: &Nat) -> bool {
        self.members.contains(x)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Nat> {
        self.members.iter()
    }

    pub fn min_elem(&self) -> Option<&Nat> {
        self.members.iter().next()
    }

    pub fn max_elem(&self) -> Option<&Nat> {
        self.members.iter().next_back()
    }

    pub fn insert(&mut self, x: Nat) -> Result<bool, FoundationError> {
        if x >= self.base {
            return Err(FoundationError::OutOfBase(x, self.base.clone()));
        }
        Ok(self.members.insert(x))
    }

    fn same_base(&self, other: &FinSet) -> Result<(), FoundationError> {
        if self.base != other.base {
            return Err(FoundationError::BaseMismatch(self.base.clone(), other.base.clone()));
        }
        Ok(())
    }

    pub fn union(&self, other: &FinSet) -> Result<FinSet, FoundationError> {
        self.same_base(other)?;
        Ok(FinSet {
            base: self.base.clone(),
            members: self.members.union(&other.members).cloned().collect(),
        })
    }

    pub fn difference(&self, other: &FinSet) -> Result<FinSet, FoundationError> {
        self.same_base(other)?;
        Ok(FinSet {
            base: self.base.clone(),
            members: self.members.difference(&other.members).cloned().collect(),
        })
    }

    pub fn is_subset(&self, other: &FinSet) -> Result<bool, FoundationError> {
        self.same_base(other)?;
        Ok(self.members.is_subset(&other.members))
    }

    /// Characteristic prefix over [0..len) in increasing numeric order.
    pub fn chi(&self, len: usize) -> FinFun {
        (0..len).map(|i| nat(self.contains(&nat(i as u64)) as u64)).collect()
    }
}

/// Binary relation on a finite domain of codes. `pairs` is the weak relation
/// ⪯; the strict part x ≺ y ⇔ x ⪯ y ∧ ¬(y ⪯ x) is derived from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinOrder {
    domain: FinSet,
    pairs: BTreeSet<(Nat, Nat)>,
}

impl FinOrder {
    pub fn new(
        domain: FinSet,
        pairs: impl IntoIterator<Item = (Nat, Nat)>,
    ) -> Result<Self, FoundationError> {
        let pairs: BTreeSet<(Nat, Nat)> = pairs.into_iter().collect();
        for (x, y) in &pairs {
            if !domain.contains(x) || !domain.contains(y) {
                return Err(FoundationError::PairOutsideDomain(x.clone(), y.clone()));
            }
        }
        Ok(FinOrder { domain, pairs })
    }

    pub fn domain(&self) -> &FinSet {
        &self.domain
    }

    pub fn pairs(&self) -> &BTreeSet<(Nat, Nat)> {
        &self.pairs
    }

    pub fn leq(&self, x: &Nat, y: &Nat) -> bool {
        self.pairs.contains(&(x.clone(), y.clone()))
    }

    pub fn lt(&self, x: &Nat, y: &Nat) -> bool {
        self.leq(x, y) && !self.leq(y, x)
    }

    pub fn strict_pairs(&self) -> BTreeSet<(Nat, Nat)> {
        self.pairs
            .iter()
            .filter(|(x, y)| !self.leq(y, x))
            .cloned()
            .collect()
    }

    pub fn is_preorder(&self) -> bool {
        let reflexive = self
            .domain
            .iter()
            .all(|x| self.pairs.contains(&(x.clone(), x.clone())));
        let transitive = self.pairs.iter().all(|(x, y)| {
            self.pairs
                .iter()
                .filter(|(y2, _)| y2 == y)
                .all(|(_, z)| self.pairs.contains(&(x.clone(), z.clone())))
        });
        reflexive && transitive
    }

    pub fn is_total(&self) -> bool {
        self.domain
            .iter()
            .all(|x| self.domain.iter().all(|y| self.leq(x, y) || self.leq(y, x)))
    }

    pub fn is_prewellordering(&self) -> bool {
        self.is_preorder()
            && self.is_total()
            && self.well_founded_part() == self.domain
    }

    pub fn well_founded_part(&self) -> FinSet {
        well_founded_part_of(&self.domain, &self.strict_pairs())
    }

    pub fn rank_of(&self, x: &Nat) -> Result<Nat, FoundationError> {
        rank_in(&self.domain, &self.strict_pairs(), x)
    }
}

/// Largest W ⊆ domain with no cycle reachable downward, for an explicitly
/// given strict edge set: the least fixed point adding z once every edge
/// predecessor of z is already in.
pub fn well_founded_part_of(domain: &FinSet, strict: &BTreeSet<(Nat, Nat)>) -> FinSet {
    let mut w = FinSet::empty(domain.base().clone());
    loop {
        let mut grew = false;
        for z in domain.iter() {
            if w.contains(z) {
                continue;
            }
            let all_preds_in = strict
                .iter()
                .filter(|(_, t)| t == z)
                .all(|(p, _)| w.contains(p));
            if all_preds_in {
                w.insert(z.clone()).expect("z comes from the domain");
                grew = true;
            }
        }
        if !grew {
            return w;
        }
    }
}

/// Rank inside the well-founded part: 1 + max rank of edge predecessors,
/// 0 for minimal elements. Errors outside the well-founded part.
pub fn rank_in(
    domain: &FinSet,
    strict: &BTreeSet<(Nat, Nat)>,
    x: &Nat,
) -> Result<Nat, FoundationError> {
    let wf = well_founded_part_of(domain, strict);
    if !wf.contains(x) {
        return Err(FoundationError::NotWellFounded(x.clone()));
    }
    let mut ranks: BTreeMap<Nat, Nat> = BTreeMap::new();
    while !ranks.contains_key(x) {
        let mut progressed = false;
        for z in wf.iter() {
            if ranks.contains_key(z) {
                continue;
            }
            let preds: Vec<&Nat> = strict
                .iter()
                .filter(|(_, t)| t == z)
                .map(|(p, _)| p)
                .collect();
            if preds.iter().all(|p| ranks.contains_key(*p)) {
                let r = preds
                    .iter()
                    .map(|p| &ranks[*p] + 1u32)
                    .max()
                    .unwrap_or_else(Nat::zero);
                ranks.insert(z.clone(), r);
                progressed = true;
            }
        }
        assert!(progressed, "every well-founded element is eventually ranked");
    }
    Ok(ranks[x].clone())
}
