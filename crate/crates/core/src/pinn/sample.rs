//! Collocation, boundary, and observation sample sets.
//!
//! Construction caches everything the losses need per sample (segment
//! property tables, tube-end arc-lengths, packed input batches) so loss
//! evaluation touches no layout code in the hot loop.

use ndarray::Array2;
use rand::rngs::StdRng;
use serde::{Deserialize, Serialize};

use crate::mlp::Network;
use crate::rod::{Actuation, RobotSpec, RodError, Segment, SegmentLayout};

use super::ActuationDomain;

/// One position observation: measured or synthesized tip position at
/// arc-length `s` for actuation `act`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationPoint {
    pub s: f64,
    pub act: Actuation,
    pub p: [f64; 3],
}

/// Collocation points with per-point cached segment properties.
#[derive(Debug, Clone)]
pub struct CollocationSet {
    pub points: Vec<(f64, Actuation)>,
    pub(crate) inputs: Array2<f64>,
    pub(crate) segments: Vec<Segment>,
}

impl CollocationSet {
    pub fn new(points: Vec<(f64, Actuation)>, robot: &RobotSpec) -> Result<Self, RodError> {
        let mut segments = Vec::with_capacity(points.len());
        for (s, act) in &points {
            let layout = SegmentLayout::build(robot, act)?;
            segments.push(*layout.segment_at(*s)?);
        }
        let inputs = Network::pack_inputs(&points);
        Ok(Self { points, inputs, segments })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Boundary actuations, each expanded to `s in {0, l3, l2, l1}`.
#[derive(Debug, Clone)]
pub struct BoundarySet {
    pub acts: Vec<Actuation>,
    /// Tube-end arc-lengths per actuation.
    pub ells: Vec<[f64; 3]>,
    /// Rows in blocks of four per actuation: s = 0, l3, l2, l1.
    pub(crate) inputs: Array2<f64>,
}

impl BoundarySet {
    pub fn new(acts: Vec<Actuation>, robot: &RobotSpec) -> Result<Self, RodError> {
        let mut ells = Vec::with_capacity(acts.len());
        let mut rows = Vec::with_capacity(acts.len() * 4);
        for act in &acts {
            act.validate()?;
            let ell = act.tube_ends(robot);
            ells.push(ell);
            for s in [0.0, ell[2], ell[1], ell[0]] {
                rows.push((s, *act));
            }
        }
        let inputs = Network::pack_inputs(&rows);
        Ok(Self { acts, ells, inputs })
    }

    pub fn len(&self) -> usize {
        self.acts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.acts.is_empty()
    }
}

/// Position observations with a packed input batch.
#[derive(Debug, Clone, Default)]
pub struct ObservationSet {
    pub points: Vec<ObservationPoint>,
}

impl ObservationSet {
    pub fn new(points: Vec<ObservationPoint>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub(crate) fn inputs(&self) -> Array2<f64> {
        let rows: Vec<(f64, Actuation)> = self.points.iter().map(|o| (o.s, o.act)).collect();
        Network::pack_inputs(&rows)
    }
}

/// Uniform collocation sampler over `[0, l1(tau)] x B`.
pub fn sample_collocation(
    n: usize,
    rng: &mut StdRng,
    robot: &RobotSpec,
    domain: &ActuationDomain,
) -> Result<CollocationSet, RodError> {
    use rand::Rng;
    assert!(n > 0);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let act = domain.sample(rng);
        let l1 = robot.tubes[0].total_length() + act.beta[0];
        let s = rng.gen_range(0.0..l1);
        points.push((s, act));
    }
    CollocationSet::new(points, robot)
}

/// Uniform boundary sampler over `B`.
pub fn sample_boundary(
    n: usize,
    rng: &mut StdRng,
    robot: &RobotSpec,
    domain: &ActuationDomain,
) -> Result<BoundarySet, RodError> {
    assert!(n > 0);
    let acts = (0..n).map(|_| domain.sample(rng)).collect();
    BoundarySet::new(acts, robot)
}
