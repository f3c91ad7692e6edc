//! The reference two-level scenario: calibrated channel parameters and input state.

use std::f64::consts::PI;

use crate::channels::{build_covariant, build_incovariant};
use crate::error::Result;
use crate::fluctuation::ProcessContext;
use crate::matcore::C64;
use crate::state::DensityMatrix;

pub const P: f64 = 0.2864;
pub const S: f64 = 0.1316;

/// Input populations `p^I`.
pub const INITIAL_POPULATIONS: [f64; 2] = [0.8, 0.2];

/// `|φ_0⟩ = sin(π/6)|0⟩ − i cos(π/6)|1⟩`, `|φ_1⟩ = cos(π/6)|0⟩ + i sin(π/6)|1⟩`
pub fn initial_eigenvectors() -> [Vec<C64>; 2] {
    let (s, c) = (PI / 6.0).sin_cos();
    [
        vec![C64::new(s, 0.0), C64::new(0.0, -c)],
        vec![C64::new(c, 0.0), C64::new(0.0, s)],
    ]
}

pub fn initial_state() -> DensityMatrix {
    DensityMatrix::from_ensemble(&INITIAL_POPULATIONS, &initial_eigenvectors()).expect("valid preset state")
}

pub fn incovariant_context() -> Result<ProcessContext> {
    ProcessContext::new(build_incovariant(P, S)?, initial_state())
}

pub fn covariant_context() -> Result<ProcessContext> {
    ProcessContext::new(build_covariant(P, S)?, initial_state())
}
