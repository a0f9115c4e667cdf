//! Human-readable form for scheme codes.
//!
//! Grammar, one form per scheme:
//!
//! ```text
//! (S1)  (S2 q)  (S3)  (S4 e1 e2)  (S6 e1 (to..) (tf..) (tn..))
//! (S7)  (S8.2 d)  (S8.3 d)  (S9)
//! ```
//!
//! A bare numeral stands for its own code, so numbers that decode to no
//! scheme still round-trip.

use super::asm::{k1, k2, k3, k4, k6, k7, k82, k83, k9};
use super::env::{parse, KIndex};
use crate::foundations::Nat;
use num_traits::{Num, ToPrimitive};

/// Render a code. Codes that parse render as scheme forms, everything else
/// as a decimal numeral.
pub fn render_sexpr(e: &Nat) -> String {
    match parse(e) {
        None => e.to_string(),
        Some(k) => match k {
            KIndex::S1 => "(S1)".into(),
            KIndex::S2 { q } => format!("(S2 {q})"),
            KIndex::S3 => "(S3)".into(),
            KIndex::S4 { e1, e2 } => {
                format!("(S4 {} {})", render_sexpr(&e1), render_sexpr(&e2))
            }
            KIndex::S6 { e1, tau_o, tau_f, tau_n } => format!(
                "(S6 {} {} {} {})",
                render_sexpr(&e1),
                render_list(&tau_o),
                render_list(&tau_f),
                render_list(&tau_n)
            ),
            KIndex::S7 => "(S7)".into(),
            KIndex::S82 { d } => format!("(S8.2 {})", render_sexpr(&d)),
            KIndex::S83 { d } => format!("(S8.3 {})", render_sexpr(&d)),
            KIndex::S9 => "(S9)".into(),
        },
    }
}

fn render_list(xs: &[Nat]) -> String {
    let inner: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    format!("({})", inner.join(" "))
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Token {
    Open,
    Close,
    Atom(String),
}

fn tokenize(s: &str) -> Result<Vec<Token>, String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' | ')' => {
                if !cur.is_empty() {
                    out.push(Token::Atom(std::mem::take(&mut cur)));
                }
                out.push(if ch == '(' { Token::Open } else { Token::Close });
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push(Token::Atom(std::mem::take(&mut cur)));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(Token::Atom(cur));
    }
    if out.is_empty() {
        return Err("empty input".into());
    }
    Ok(out)
}

/// Parse the textual form back into a code.
pub fn parse_sexpr(s: &str) -> Result<Nat, String> {
    let tokens = tokenize(s)?;
    let mut pos = 0usize;
    let e = parse_expr(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(format!("trailing input after position {pos}"));
    }
    Ok(e)
}

fn parse_nat(a: &str) -> Result<Nat, String> {
    Nat::from_str_radix(a, 10).map_err(|_| format!("not a numeral: {a:?}"))
}

fn parse_expr(tokens: &[Token], pos: &mut usize) -> Result<Nat, String> {
    match tokens.get(*pos) {
        None => Err("unexpected end of input".into()),
        Some(Token::Close) => Err("unexpected ')'".into()),
        Some(Token::Atom(a)) => {
            *pos += 1;
            parse_nat(a)
        }
        Some(Token::Open) => {
            *pos += 1;
            let head = match tokens.get(*pos) {
                Some(Token::Atom(a)) => a.clone(),
                _ => return Err("expected a scheme name after '('".into()),
            };
            *pos += 1;
            let e = match head.as_str() {
                "S1" => k1(),
                "S3" => k3(),
                "S7" => k7(),
                "S9" => k9(),
                "S2" => {
                    let q = parse_atom_nat(tokens, pos)?;
                    k2(&q)
                }
                "S4" => {
                    let e1 = parse_expr(tokens, pos)?;
                    let e2 = parse_expr(tokens, pos)?;
                    k4(&e1, &e2)
                }
                "S8.2" => k82(&parse_expr(tokens, pos)?),
                "S8.3" => k83(&parse_expr(tokens, pos)?),
                "S6" => {
                    let e1 = parse_expr(tokens, pos)?;
                    let to = parse_num_list(tokens, pos)?;
                    let tf = parse_num_list(tokens, pos)?;
                    let tn = parse_num_list(tokens, pos)?;
                    k6(&e1, &to, &tf, &tn)
                }
                other => return Err(format!("unknown scheme name {other:?}")),
            };
            expect_close(tokens, pos)?;
            Ok(e)
        }
    }
}

fn parse_atom_nat(tokens: &[Token], pos: &mut usize) -> Result<Nat, String> {
    match tokens.get(*pos) {
        Some(Token::Atom(a)) => {
            *pos += 1;
            parse_nat(a)
        }
        _ => Err("expected a numeral".into()),
    }
}

fn parse_num_list(tokens: &[Token], pos: &mut usize) -> Result<Vec<u64>, String> {
    match tokens.get(*pos) {
        Some(Token::Open) => *pos += 1,
        _ => return Err("expected '(' opening a number list".into()),
    }
    let mut out = Vec::new();
    loop {
        match tokens.get(*pos) {
            Some(Token::Close) => {
                *pos += 1;
                return Ok(out);
            }
            Some(Token::Atom(a)) => {
                *pos += 1;
                let v = parse_nat(a)?
                    .to_u64()
                    .ok_or_else(|| format!("list entry out of range: {a}"))?;
                out.push(v);
            }
            _ => return Err("expected a numeral or ')' in a number list".into()),
        }
    }
}

fn expect_close(tokens: &[Token], pos: &mut usize) -> Result<(), String> {
    match tokens.get(*pos) {
        Some(Token::Close) => {
            *pos += 1;
            Ok(())
        }
        _ => Err("expected ')'".into()),
    }
}
