//! Interpreter for the S1-S9 schemes relative to the induction functional,
//! with total and partial oracle-application semantics, computation norms,
//! stage comparison, selection, divergence tracing, and the partial-to-total
//! index translation.

mod asm;
mod battery;
mod compare;
mod env;
mod eval;
mod select;
mod sexpr;
mod trace;
mod translate;
mod tree;

pub use asm::{diag, k1, k2, k3, k4, k6, k7, k82, k83, k9, loop_idx, prepend_const};
pub use battery::{battery, e2_kindex, i0_kindex, suslin_kindex, AuxTable, BatteryItem};
pub use compare::{stage_compare, CompareError};
pub use env::{parse, validate_perm, Env, EnvShape, KIndex, OracleSite, Type2Oracle};
pub use eval::{eval_p, eval_t, CompResult, Mode};
pub use select::{gandy_select, naive_select, SelectError};
pub use sexpr::{parse_sexpr, render_sexpr};
pub use trace::{moschovakis_trace, CompFrame, TraceEnd, TraceError};
pub use translate::{translate_p_to_t, AuxCtx, EnvExtension, Translation};
pub use tree::{eval_tree, norm, CompTree};

pub(crate) use eval::{eval_with, Meter};
pub(crate) use tree::on_big_stack;
