//! Index codes, oracles, and argument environments.

use crate::foundations::{decode_seq, nat, FinFun, Nat};
use num_traits::ToPrimitive;
use std::fmt;
use std::sync::Arc;

/// Parsed shape of an index code. The nine recognised shapes; the scheme of
/// primitive recursion is deliberately absent. Sub-indices stay as raw codes
/// and are validated lazily at use.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KIndex {
    /// ⟨1⟩: successor, a₁ + 1.
    S1,
    /// ⟨2,q⟩: the constant q.
    S2 { q: Nat },
    /// ⟨3⟩: first numeric projection.
    S3,
    /// ⟨4,e₁,e₂⟩: composition; e₂ first, its value prepended for e₁.
    S4 { e1: Nat, e2: Nat },
    /// ⟨6,e₁,τ₁,τ₂,τ₃⟩: permutation of the oracle / function / numeric lists.
    S6 {
        e1: Nat,
        tau_o: Vec<Nat>,
        tau_f: Vec<Nat>,
        tau_n: Vec<Nat>,
    },
    /// ⟨7⟩: function application, f₁(a₁).
    S7,
    /// ⟨8,2,d⟩: type-2 oracle application F₁(λa.{d}(..., a, a⃗)).
    S82 { d: Nat },
    /// ⟨8,3,d⟩: induction application; b = a₁ consumed, G(f) = {d}(..., f⌢f⃗, a⃗).
    S83 { d: Nat },
    /// ⟨9⟩: universal scheme; d = a₁ consumed and run as an index.
    S9,
}

thread_local! {
    static PARSE_LOCAL: std::cell::RefCell<std::collections::HashMap<Nat, Option<KIndex>>> =
        std::cell::RefCell::new(std::collections::HashMap::new());
}
static PARSE_SHARED: std::sync::Mutex<Option<std::collections::HashMap<Nat, Option<KIndex>>>> =
    std::sync::Mutex::new(None);
const PARSE_CAP: usize = 1 << 16;

/// Record the parse of a freshly assembled code. The builders know the shape
/// they just encoded, and decoding a large code back out of its pairing costs
/// integer square roots, so a code built in-process should never need a real
/// decode.
pub(crate) fn prime_parse(code: &Nat, parsed: KIndex) {
    let mut shared = PARSE_SHARED.lock().expect("parse cache lock");
    let map = shared.get_or_insert_with(std::collections::HashMap::new);
    if map.len() >= PARSE_CAP {
        map.clear();
    }
    map.insert(code.clone(), Some(parsed));
}

/// Parse a sequence code into an index shape. Anything else is not an index.
/// Decoding pairs out of a large code costs integer square roots, and
/// evaluation re-parses the same codes constantly, so results are memoised:
/// a per-thread map takes the hot path without locking, backed by a shared
/// map (pre-seeded by the builders) so a large code is decoded at most once
/// per process.
pub fn parse(code: &Nat) -> Option<KIndex> {
    PARSE_LOCAL.with(|cache| {
        if let Some(hit) = cache.borrow().get(code) {
            return hit.clone();
        }
        let parsed = {
            let shared = PARSE_SHARED.lock().expect("parse cache lock");
            shared.as_ref().and_then(|m| m.get(code).cloned())
        };
        let parsed = parsed.unwrap_or_else(|| {
            let fresh = parse_uncached(code);
            let mut shared = PARSE_SHARED.lock().expect("parse cache lock");
            let map = shared.get_or_insert_with(std::collections::HashMap::new);
            if map.len() >= PARSE_CAP {
                map.clear();
            }
            map.insert(code.clone(), fresh.clone());
            fresh
        });
        let mut cache = cache.borrow_mut();
        if cache.len() >= PARSE_CAP {
            cache.clear();
        }
        cache.insert(code.clone(), parsed.clone());
        parsed
    })
}

pub(crate) fn parse_uncached(code: &Nat) -> Option<KIndex> {
    let items = decode_seq(code)?;
    let tag = items.first()?.to_u64()?;
    match (tag, items.len()) {
        (1, 1) => Some(KIndex::S1),
        (2, 2) => Some(KIndex::S2 { q: items[1].clone() }),
        (3, 1) => Some(KIndex::S3),
        (4, 3) => Some(KIndex::S4 {
            e1: items[1].clone(),
            e2: items[2].clone(),
        }),
        (6, 5) => {
            let tau_o = decode_seq(&items[2])?;
            let tau_f = decode_seq(&items[3])?;
            let tau_n = decode_seq(&items[4])?;
            Some(KIndex::S6 {
                e1: items[1].clone(),
                tau_o,
                tau_f,
                tau_n,
            })
        }
        (7, 1) => Some(KIndex::S7),
        (8, 3) => match items[1].to_u64()? {
            2 => Some(KIndex::S82 { d: items[2].clone() }),
            3 => Some(KIndex::S83 { d: items[2].clone() }),
            _ => None,
        },
        (9, 1) => Some(KIndex::S9),
        _ => None,
    }
}

/// Check that `tau` is a permutation of 0..len and return it as positions.
/// Wrong length or non-bijective data disqualifies the index.
pub fn validate_perm(tau: &[Nat], len: usize) -> Option<Vec<usize>> {
    if tau.len() != len {
        return None;
    }
    let mut out = Vec::with_capacity(len);
    let mut seen = vec![false; len];
    for t in tau {
        let i = t.to_usize()?;
        if i >= len || seen[i] {
            return None;
        }
        seen[i] = true;
        out.push(i);
    }
    Some(out)
}

/// Where an undefined oracle answer came from: a type-2 oracle slot or a
/// function read off the end of a finite function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum OracleSite {
    Oracle(usize),
    Fun(usize),
}

impl fmt::Display for OracleSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleSite::Oracle(k) => write!(f, "oracle {k}"),
            OracleSite::Fun(k) => write!(f, "fun {k}"),
        }
    }
}

#[derive(Clone)]
enum OracleBacking {
    /// Entries indexed by Σ g(i)·bound^i (little-endian); a query value ≥ bound
    /// falls outside the table and is undefined.
    Table { bound: u64, entries: Arc<Vec<Option<Nat>>> },
    Fn(Arc<dyn Fn(&[Nat]) -> Option<Nat> + Send + Sync>),
}

/// A type-2 oracle: consults only the first `support` values of its argument.
#[derive(Clone)]
pub struct Type2Oracle {
    support: usize,
    backing: OracleBacking,
}

impl fmt::Debug for Type2Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.backing {
            OracleBacking::Table { bound, entries } => f
                .debug_struct("Type2Oracle")
                .field("support", &self.support)
                .field("bound", bound)
                .field("entries", &entries.len())
                .finish(),
            OracleBacking::Fn(_) => f
                .debug_struct("Type2Oracle")
                .field("support", &self.support)
                .field("backing", &"fn")
                .finish(),
        }
    }
}

impl Type2Oracle {
    /// Table-backed oracle over arguments with values < bound.
    /// entries.len() must equal bound^support.
    pub fn table(support: usize, bound: u64, entries: Vec<Option<Nat>>) -> Self {
        let expect = (bound as u128).checked_pow(support as u32).expect("table size overflow");
        assert_eq!(entries.len() as u128, expect, "table size must be bound^support");
        Type2Oracle {
            support,
            backing: OracleBacking::Table { bound, entries: Arc::new(entries) },
        }
    }

    /// Table-backed 0/1-argument oracle (bound 2), the common case.
    pub fn table01(support: usize, entries: Vec<Option<Nat>>) -> Self {
        Self::table(support, 2, entries)
    }

    /// Total table oracle from plain values.
    pub fn total01(support: usize, values: Vec<u64>) -> Self {
        Self::table(support, 2, values.into_iter().map(|v| Some(nat(v))).collect())
    }

    pub fn from_fn<F>(support: usize, f: F) -> Self
    where
        F: Fn(&[Nat]) -> Option<Nat> + Send + Sync + 'static,
    {
        Type2Oracle { support, backing: OracleBacking::Fn(Arc::new(f)) }
    }

    pub fn support(&self) -> usize {
        self.support
    }

    /// Apply to a fully materialised argument prefix. The slice must have
    /// length exactly `support`; the caller builds it point by point.
    pub fn apply(&self, g: &[Nat]) -> Option<Nat> {
        debug_assert_eq!(g.len(), self.support);
        match &self.backing {
            OracleBacking::Table { bound, entries } => {
                let mut idx: u128 = 0;
                let mut mult: u128 = 1;
                for v in g {
                    let v = v.to_u64()?;
                    if v >= *bound {
                        return None;
                    }
                    idx += v as u128 * mult;
                    mult *= *bound as u128;
                }
                entries.get(idx as usize).cloned().flatten()
            }
            OracleBacking::Fn(f) => f(g),
        }
    }
}

/// Argument environment of a computation {e}(𝓘, F⃗, f⃗, a⃗) truncated to base n.
///
/// Function slots are shared behind `Arc`: evaluation rebuilds environments
/// constantly (prepends, permutations, dispatches), and the tables can be
/// large, so clones must shuffle pointers rather than copy entries.
#[derive(Clone, Debug)]
pub struct Env {
    pub n: usize,
    pub oracles: Vec<Type2Oracle>,
    pub funs: Vec<Arc<FinFun>>,
    pub nums: Vec<Nat>,
}

impl Env {
    pub fn new(n: usize) -> Self {
        Env { n, oracles: Vec::new(), funs: Vec::new(), nums: Vec::new() }
    }

    pub fn with_oracles(mut self, oracles: Vec<Type2Oracle>) -> Self {
        self.oracles = oracles;
        self
    }

    pub fn with_funs(mut self, funs: Vec<FinFun>) -> Self {
        self.funs = funs.into_iter().map(Arc::new).collect();
        self
    }

    pub fn with_nums_u64(mut self, nums: &[u64]) -> Self {
        self.nums = nums.iter().map(|&v| nat(v)).collect();
        self
    }

    pub fn with_nums(mut self, nums: Vec<Nat>) -> Self {
        self.nums = nums;
        self
    }

    /// The same environment with one numeric argument prepended.
    pub fn prepend_num(&self, b: Nat) -> Env {
        let mut nums = Vec::with_capacity(self.nums.len() + 1);
        nums.push(b);
        nums.extend_from_slice(&self.nums);
        Env { n: self.n, oracles: self.oracles.clone(), funs: self.funs.clone(), nums }
    }

    /// The same environment with one function prepended.
    pub fn prepend_fun(&self, f: FinFun) -> Env {
        let mut funs = Vec::with_capacity(self.funs.len() + 1);
        funs.push(Arc::new(f));
        funs.extend_from_slice(&self.funs);
        Env { n: self.n, oracles: self.oracles.clone(), funs, nums: self.nums.clone() }
    }

    /// The same environment with the first numeric argument removed.
    pub fn drop_first_num(&self) -> Env {
        Env {
            n: self.n,
            oracles: self.oracles.clone(),
            funs: self.funs.clone(),
            nums: self.nums[1..].to_vec(),
        }
    }

    /// Arity fingerprint used by the static index translation.
    pub fn shape(&self) -> EnvShape {
        EnvShape {
            n: self.n,
            oracle_count: self.oracles.len(),
            fun_lens: self.funs.iter().map(|f| f.len()).collect(),
            num_count: self.nums.len(),
        }
    }
}

/// Static arities of an environment: everything the index translation needs
/// to know about where a code will run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvShape {
    pub n: usize,
    pub oracle_count: usize,
    pub fun_lens: Vec<usize>,
    pub num_count: usize,
}
