//! Core engine: finitary non-monotone induction, higher-type recursion
//! relative to the induction functional, the procedure calculus, and
//! depth-oracle realisers.

pub mod foundations;
pub mod induction;
pub mod kleene;
pub mod procedures;
pub mod realisers;

pub use foundations::{
    decode_seq, encode_seq, nat, pair, prefix_code, unpair, FinFun, FinOrder, FinSet,
    FoundationError, Nat,
};
