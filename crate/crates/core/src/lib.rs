//! Exact computational algebra for one-dimensional formal o-modules in
//! equal characteristic: finite-field towers, truncated Laurent series,
//! Newton-polygon splitting over local function fields, Drinfeld-style
//! torsion and level structures, and machine-checked surjectivity
//! certificates for the monodromy action on torsion modules.

pub mod error;
pub mod ffpoly;
pub mod finite_field;
pub mod formal_module;
pub mod laurent;
pub mod local_tower;
pub mod monodromy;
pub mod report;
pub mod spoly;
pub mod torsion;

pub use error::{Error, Result};
