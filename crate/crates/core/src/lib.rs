//! Bockstein spectral sequences over F_p: graded-commutative algebra, a windowed
//! multiplicative spectral-sequence engine, closed-form torsion answers to certify against,
//! and JSON/SVG output.

pub mod algebra;
pub mod closed_form;
pub mod engine;
pub mod field;
pub mod formulas;
pub mod hochschild;
pub mod io;
pub mod linalg;
