//! Exact computer algebra for Batalin–Vilkovisky calculations in one
//! dimension: graded jet algebras, Soloviev brackets, curved Lie
//! superalgebras of covariant field theories, AKSZ builders and the
//! Thom–Whitney totalization over a cover.

pub mod curved;
pub mod error;
pub mod gravity;
pub mod expr;
pub mod par;
pub mod symbol;
pub mod theory;
pub mod varcalc;
pub mod aksz;
pub mod models;
pub mod report;
pub mod worldline;
pub mod tw;
pub mod syntax;

pub use error::{Error, Result};
pub use expr::{q, qr, Exponent, Expr, Func, Grade, Grading, Monomial, Q};
pub use symbol::{Symbol, SymbolKind};
