//! Piecewise-constant segment layout of the composite backbone.
//!
//! Segment boundaries are the points where any tube starts its curved portion
//! or terminates; within a segment, stiffness and pre-curvature are constant.

use serde::{Deserialize, Serialize};

use super::rhs::section_properties;
use super::{Actuation, RobotSpec, RodError};

const MERGE_TOL: f64 = 1e-12;

/// Per-tube properties active on one segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubeSegmentProps {
    pub present: bool,
    /// Active pre-curvature: the tube's kappa in its curved portion, else 0.
    pub kappa: f64,
    pub ei: f64,
    pub gj: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub tubes: [TubeSegmentProps; 3],
}

impl Segment {
    /// Sum of bending stiffnesses of the tubes present on this segment.
    pub fn bending_stiffness(&self) -> f64 {
        self.tubes.iter().filter(|t| t.present).map(|t| t.ei).sum()
    }

    /// Stiffness-weighted planar curvature of this segment (all theta = 0).
    pub fn planar_curvature(&self) -> f64 {
        let num: f64 = self.tubes.iter().filter(|t| t.present).map(|t| t.ei * t.kappa).sum();
        num / self.bending_stiffness()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentLayout {
    /// Strictly increasing, first = 0, last = ell1.
    pub boundaries: Vec<f64>,
    pub segments: Vec<Segment>,
    /// Distal arc-length of each tube, `ell_i = L_i + beta_i`.
    pub ell: [f64; 3],
}

impl SegmentLayout {
    pub fn build(robot: &RobotSpec, act: &Actuation) -> Result<Self, RodError> {
        act.validate()?;
        let ell = act.tube_ends(robot);
        if !(ell[2] <= ell[1] && ell[1] <= ell[0]) {
            return Err(RodError::InvalidRobot(format!(
                "tube ends not nested: ell = {ell:?}"
            )));
        }
        let ell1 = ell[0];

        let mut boundaries = vec![0.0, ell1];
        for i in 0..3 {
            let curve_start = act.beta[i] + robot.tubes[i].straight_length;
            for candidate in [curve_start, ell[i]] {
                if candidate > MERGE_TOL && candidate < ell1 - MERGE_TOL {
                    boundaries.push(candidate);
                }
            }
        }
        boundaries.sort_by(|a, b| a.partial_cmp(b).unwrap());
        boundaries.dedup_by(|a, b| (*a - *b).abs() <= MERGE_TOL);

        let mut segments = Vec::with_capacity(boundaries.len() - 1);
        for w in boundaries.windows(2) {
            let (start, end) = (w[0], w[1]);
            let mid = 0.5 * (start + end);
            let mut tubes = [TubeSegmentProps { present: false, kappa: 0.0, ei: 0.0, gj: 0.0 }; 3];
            for i in 0..3 {
                let spec = &robot.tubes[i];
                let present = mid < ell[i];
                if present {
                    let props = section_properties(spec);
                    let curved = mid > act.beta[i] + spec.straight_length;
                    tubes[i] = TubeSegmentProps {
                        present: true,
                        kappa: if curved { spec.precurvature } else { 0.0 },
                        ei: props.ei,
                        gj: props.gj,
                    };
                }
            }
            segments.push(Segment { start, end, tubes });
        }
        Ok(Self { boundaries, segments, ell })
    }

    pub fn backbone_length(&self) -> f64 {
        self.ell[0]
    }

    /// Segment containing arc-length `s`; `s = ell1` maps to the last segment.
    pub fn segment_at(&self, s: f64) -> Result<&Segment, RodError> {
        if !(0.0..=self.ell[0] + MERGE_TOL).contains(&s) {
            return Err(RodError::ArcLengthOutOfRange { s, max: self.ell[0] });
        }
        let idx = self
            .segments
            .iter()
            .position(|seg| s < seg.end)
            .unwrap_or(self.segments.len() - 1);
        Ok(&self.segments[idx])
    }
}
