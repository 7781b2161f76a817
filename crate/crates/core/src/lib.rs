//! Lie algebroids, their connections, and the infinitesimal gauge calculus of
//! curved Yang-Mills-Higgs theory, with every structural identity checkable
//! numerically at seeded sample points.
//!
//! Layering, bottom to top: [`expr`] (symbolic scalars), [`algebroid`],
//! [`connections`], [`forms`], [`gauge`], [`verify`]. Everything lives in one
//! global chart with a global frame; indices are zero-based in the API and
//! one-based in documents and printed tables.

pub mod algebroid;
pub mod check;
pub mod connections;
pub mod expr;
pub mod forms;
pub mod gauge;
pub mod sampling;
pub mod scenario;
pub mod table;
pub mod tolerances;
pub mod verify;

pub use expr::{parse_expr, Expr, VarSpace};
