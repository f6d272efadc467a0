//! The 15-dimensional rod state.
//!
//! Flat layout: `[m_x, m_y, u1z, u2z, u3z, th1, th2, th3, px, py, pz, hw, hx, hy, hz]`.

use serde::{Deserialize, Serialize};

pub const STATE_DIM: usize = 15;

/// Flat-array offsets of the state groups.
pub(crate) const M0: usize = 0;
pub(crate) const UZ0: usize = 2;
pub(crate) const TH0: usize = 5;
pub(crate) const P0: usize = 8;
pub(crate) const H0: usize = 11;

/// State at one arc-length: innermost-tube bending moment (body frame, x/y),
/// per-tube torsional curvature, per-tube twist relative to tube 1, backbone
/// position, and orientation quaternion (scalar first).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RodState {
    pub m_xy: [f64; 2],
    pub u_z: [f64; 3],
    pub theta: [f64; 3],
    pub p: [f64; 3],
    pub h: [f64; 4],
}

impl RodState {
    pub fn zero() -> Self {
        Self {
            m_xy: [0.0; 2],
            u_z: [0.0; 3],
            theta: [0.0; 3],
            p: [0.0; 3],
            h: [1.0, 0.0, 0.0, 0.0],
        }
    }

    pub fn to_array(&self) -> [f64; STATE_DIM] {
        let mut x = [0.0; STATE_DIM];
        x[M0..M0 + 2].copy_from_slice(&self.m_xy);
        x[UZ0..UZ0 + 3].copy_from_slice(&self.u_z);
        x[TH0..TH0 + 3].copy_from_slice(&self.theta);
        x[P0..P0 + 3].copy_from_slice(&self.p);
        x[H0..H0 + 4].copy_from_slice(&self.h);
        x
    }

    pub fn from_array(x: &[f64; STATE_DIM]) -> Self {
        Self {
            m_xy: [x[M0], x[M0 + 1]],
            u_z: [x[UZ0], x[UZ0 + 1], x[UZ0 + 2]],
            theta: [x[TH0], x[TH0 + 1], x[TH0 + 2]],
            p: [x[P0], x[P0 + 1], x[P0 + 2]],
            h: [x[H0], x[H0 + 1], x[H0 + 2], x[H0 + 3]],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Offsets of the state groups in the flat 15-vector, for consumers that work
/// on raw arrays (network outputs, residual weighting).
pub mod group {
    pub const M_XY: std::ops::Range<usize> = 0..2;
    pub const U_Z: std::ops::Range<usize> = 2..5;
    pub const THETA: std::ops::Range<usize> = 5..8;
    pub const P: std::ops::Range<usize> = 8..11;
    pub const H: std::ops::Range<usize> = 11..15;
}
