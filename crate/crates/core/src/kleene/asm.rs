//! Builders for index codes, plus the canonical self-application loops.
//!
//! Every builder registers the shape it just encoded with the parse cache:
//! encoding is a handful of multiplications, but decoding costs integer
//! square roots, so codes assembled in-process skip the decode entirely.

use crate::foundations::{encode_seq, nat, Nat};
use crate::kleene::env::{prime_parse, KIndex};

/// ⟨1⟩: successor.
pub fn k1() -> Nat {
    let code = encode_seq(&[nat(1)]);
    prime_parse(&code, KIndex::S1);
    code
}

/// ⟨2,q⟩: constant q.
pub fn k2(q: &Nat) -> Nat {
    let code = encode_seq(&[nat(2), q.clone()]);
    prime_parse(&code, KIndex::S2 { q: q.clone() });
    code
}

/// ⟨3⟩: first numeric projection.
pub fn k3() -> Nat {
    let code = encode_seq(&[nat(3)]);
    prime_parse(&code, KIndex::S3);
    code
}

/// ⟨4,e₁,e₂⟩: composition.
pub fn k4(e1: &Nat, e2: &Nat) -> Nat {
    let code = encode_seq(&[nat(4), e1.clone(), e2.clone()]);
    prime_parse(&code, KIndex::S4 { e1: e1.clone(), e2: e2.clone() });
    code
}

/// ⟨6,e₁,τ₁,τ₂,τ₃⟩: permutation of oracles / functions / numerics.
pub fn k6(e1: &Nat, tau_o: &[u64], tau_f: &[u64], tau_n: &[u64]) -> Nat {
    let lift = |t: &[u64]| t.iter().map(|&v| nat(v)).collect::<Vec<_>>();
    k6_nats(e1, lift(tau_o), lift(tau_f), lift(tau_n))
}

/// k6 with already-encoded permutation parts (used by generated code).
pub(crate) fn k6_raw(e1: &Nat, tau_o: &[usize], tau_f: &[usize], tau_n: &[usize]) -> Nat {
    let lift = |t: &[usize]| t.iter().map(|&v| nat(v as u64)).collect::<Vec<_>>();
    k6_nats(e1, lift(tau_o), lift(tau_f), lift(tau_n))
}

fn k6_nats(e1: &Nat, tau_o: Vec<Nat>, tau_f: Vec<Nat>, tau_n: Vec<Nat>) -> Nat {
    let code = encode_seq(&[
        nat(6),
        e1.clone(),
        encode_seq(&tau_o),
        encode_seq(&tau_f),
        encode_seq(&tau_n),
    ]);
    prime_parse(&code, KIndex::S6 { e1: e1.clone(), tau_o, tau_f, tau_n });
    code
}

/// ⟨7⟩: function application f₁(a₁).
pub fn k7() -> Nat {
    let code = encode_seq(&[nat(7)]);
    prime_parse(&code, KIndex::S7);
    code
}

/// ⟨8,2,d⟩: oracle application.
pub fn k82(d: &Nat) -> Nat {
    let code = encode_seq(&[nat(8), nat(2), d.clone()]);
    prime_parse(&code, KIndex::S82 { d: d.clone() });
    code
}

/// ⟨8,3,d⟩: induction application.
pub fn k83(d: &Nat) -> Nat {
    let code = encode_seq(&[nat(8), nat(3), d.clone()]);
    prime_parse(&code, KIndex::S83 { d: d.clone() });
    code
}

/// ⟨9⟩: universal scheme.
pub fn k9() -> Nat {
    let code = encode_seq(&[nat(9)]);
    prime_parse(&code, KIndex::S9);
    code
}

/// {prepend_const(e,q)}(a⃗) = {e}(q, a⃗): feed a constant as the first numeric.
pub fn prepend_const(e: &Nat, q: &Nat) -> Nat {
    k4(e, &k2(q))
}

/// {diag()}(x, a⃗) = {x}(x, a⃗): the self-application combinator.
/// e₂ = ⟨3⟩ re-reads x, composition prepends it, ⟨9⟩ consumes the copy.
pub fn diag() -> Nat {
    k4(&k9(), &k3())
}

/// A genuinely divergent index: {loop_idx()}(a⃗) = {diag}(code(diag), a⃗)
/// = {diag}(code(diag), a⃗) = … (the descent alternates composition and
/// universal frames forever).
pub fn loop_idx() -> Nat {
    let d = diag();
    k4(&d, &k2(&d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kleene::env::{parse, Env, KIndex};
    use crate::kleene::eval::{eval_p, CompResult};

    #[test]
    fn builders_parse_back() {
        assert_eq!(parse(&k1()), Some(KIndex::S1));
        assert_eq!(parse(&k9()), Some(KIndex::S9));
        match parse(&loop_idx()) {
            Some(KIndex::S4 { .. }) => {}
            other => panic!("loop_idx should be a composition, got {other:?}"),
        }
    }

    #[test]
    fn primed_parses_match_real_decodes() {
        // The cache entry a builder primes must agree with a from-scratch
        // decode of the same code, for every shape.
        use crate::kleene::env::parse_uncached;
        let codes = vec![
            k1(),
            k2(&nat(17)),
            k3(),
            k4(&k1(), &k3()),
            k6(&k7(), &[0], &[1, 0], &[0]),
            k6(&k3(), &[], &[], &[]),
            k7(),
            k82(&k3()),
            k83(&k3()),
            k9(),
        ];
        for code in codes {
            let decoded = parse_uncached(&code);
            assert!(decoded.is_some());
            assert_eq!(parse(&code), decoded);
        }
    }

    #[test]
    fn prepend_const_feeds_argument() {
        let e = prepend_const(&k3(), &nat(42));
        assert_eq!(eval_p(&e, &Env::new(2), 1000), CompResult::Value(nat(42)));
    }

    #[test]
    fn diag_self_applies() {
        // {diag}(code(⟨1⟩), 5) = {⟨1⟩}(code(⟨1⟩), 5) = code(⟨1⟩) + 1
        let env = Env::new(2).with_nums(vec![k1(), nat(5)]);
        let expect = &k1() + nat(1);
        assert_eq!(eval_p(&diag(), &env, 1000), CompResult::Value(expect));
    }

    #[test]
    fn loop_idx_diverges() {
        let env = Env::new(2).with_nums_u64(&[3]);
        for budget in [10, 100, 1000, 10_000] {
            assert_eq!(eval_p(&loop_idx(), &env, budget), CompResult::BudgetExceeded);
        }
    }
}
