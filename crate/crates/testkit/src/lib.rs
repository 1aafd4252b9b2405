//! Test fixtures and naive reference implementations shared by the
//! integration and acceptance tests.

pub mod chem;
pub mod filters;
pub mod fixtures;
pub mod naive;

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
