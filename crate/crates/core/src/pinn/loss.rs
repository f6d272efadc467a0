//! The three loss terms and their exact weight-space gradients.
//!
//! Each loss is a mean over its sample set of per-group squared 2-norms.
//! Gradients are assembled by seeding output adjoints (and, for the ODE
//! loss, arc-length-derivative adjoints) and backpropagating through the
//! network; the rod RHS enters through its state Jacobian, computed with
//! dual numbers.

use ndarray::Array2;

use crate::autodiff::Dual;
use crate::mlp::{Gradients, Network};
use crate::rod::{group, ode_rhs, Segment, STATE_DIM};

use super::{BoundarySet, CollocationSet, ObservationSet};

/// Per-state-group loss weights `lambda_g` for `g in {m, u, theta, p, h}`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GroupWeights {
    pub m: f64,
    pub u: f64,
    pub theta: f64,
    pub p: f64,
    pub h: f64,
}

impl GroupWeights {
    /// Expand to one weight per state component.
    pub fn per_state(&self) -> [f64; STATE_DIM] {
        let mut w = [0.0; STATE_DIM];
        w[group::M_XY].fill(self.m);
        w[group::U_Z].fill(self.u);
        w[group::THETA].fill(self.theta);
        w[group::P].fill(self.p);
        w[group::H].fill(self.h);
        w
    }
}

impl Default for GroupWeights {
    fn default() -> Self {
        Self { m: 0.1, u: 0.1, theta: 1.0, p: 1.0, h: 1.0 }
    }
}

/// Weights of the composite objective: per-group for the ODE and boundary
/// terms, a single position weight for the observation term.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LossWeights {
    pub ode: GroupWeights,
    pub bc: GroupWeights,
    pub obs: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { ode: GroupWeights::default(), bc: GroupWeights::default(), obs: 10.0 }
    }
}

/// State Jacobian of the rod RHS, `jac[k][j] = d f_k / d x_j`, by one dual
/// evaluation per state column.
fn rhs_jacobian(x: &[f64; STATE_DIM], seg: &Segment) -> [[f64; STATE_DIM]; STATE_DIM] {
    let mut jac = [[0.0; STATE_DIM]; STATE_DIM];
    for col in 0..STATE_DIM {
        let mut xd = x.map(Dual::constant);
        xd[col] = Dual::variable(x[col]);
        let f = ode_rhs(&xd, seg);
        for row in 0..STATE_DIM {
            jac[row][col] = f[row].eps;
        }
    }
    jac
}

/// ODE residual loss over values alone (no network): mean over points of the
/// weighted squared residual `e = ydot - f(y)`. Used to substitute oracle
/// solutions for the network in tests.
pub fn ode_loss_from_values(
    y: &Array2<f64>,
    ydot: &Array2<f64>,
    segments: &[Segment],
    w: &GroupWeights,
) -> f64 {
    assert_eq!(y.nrows(), segments.len());
    let lam = w.per_state();
    let mut loss = 0.0;
    for (i, seg) in segments.iter().enumerate() {
        let mut x = [0.0; STATE_DIM];
        for j in 0..STATE_DIM {
            x[j] = y[[i, j]];
        }
        let f = ode_rhs(&x, seg);
        for k in 0..STATE_DIM {
            let e = ydot[[i, k]] - f[k];
            loss += lam[k] * e * e;
        }
    }
    loss / segments.len() as f64
}

/// Physics loss: mean weighted squared residual of `d x / d s = f(x)` at the
/// collocation points, with the gradient flowing through both the network's
/// arc-length derivative and the RHS evaluated at the network's own output.
pub fn loss_ode(net: &Network, set: &CollocationSet, w: &LossWeights) -> (f64, Gradients) {
    assert!(!set.is_empty(), "loss_ode: empty collocation set");
    let lam = w.ode.per_state();
    let n = set.len() as f64;
    let cache = net.forward_cached(&set.inputs, true);
    let mut gy = Array2::zeros(cache.y.raw_dim());
    let mut gydot = Array2::zeros(cache.y.raw_dim());
    let mut loss = 0.0;
    for (i, seg) in set.segments.iter().enumerate() {
        let mut x = [0.0; STATE_DIM];
        for j in 0..STATE_DIM {
            x[j] = cache.y[[i, j]];
        }
        let f = ode_rhs(&x, seg);
        let jac = rhs_jacobian(&x, seg);
        let mut adj = [0.0; STATE_DIM];
        for k in 0..STATE_DIM {
            let e = cache.ydot[[i, k]] - f[k];
            loss += lam[k] * e * e;
            adj[k] = 2.0 * lam[k] * e / n;
            gydot[[i, k]] = adj[k];
        }
        // d loss / d y = -J^T adj.
        for j in 0..STATE_DIM {
            let mut g = 0.0;
            for k in 0..STATE_DIM {
                g -= adj[k] * jac[k][j];
            }
            gy[[i, j]] = g;
        }
    }
    (loss / n, net.backward(&cache, &gy, Some(&gydot)))
}

/// Boundary loss: four network evaluations per actuation, at
/// `s in {0, l3, l2, l1}`. The proximal twist angles and base quaternion are
/// built from the network's own torsion estimates at `s = 0`, so the
/// gradient carries the corresponding chain terms.
pub fn loss_bc(net: &Network, set: &BoundarySet, w: &LossWeights) -> (f64, Gradients) {
    assert!(!set.is_empty(), "loss_bc: empty boundary set");
    let gw = &w.bc;
    let n = set.len() as f64;
    let cache = net.forward_cached(&set.inputs, false);
    let mut gy = Array2::zeros(cache.y.raw_dim());
    let mut loss = 0.0;

    for (i, act) in set.acts.iter().enumerate() {
        let b = 4 * i;
        let uz0 = [cache.y[[b, 2]], cache.y[[b, 3]], cache.y[[b, 4]]];
        let phi = act.alpha[0] - act.beta[0] * uz0[0];

        // theta(0): tube 1 defines the frame, tubes 2 and 3 relative to it.
        let th_bc = [
            0.0,
            act.alpha[1] - act.beta[1] * uz0[1] - phi,
            act.alpha[2] - act.beta[2] * uz0[2] - phi,
        ];
        let mut guz = [0.0; 3];
        for t in 0..3 {
            let e = cache.y[[b, 5 + t]] - th_bc[t];
            loss += gw.theta * e * e;
            let c = 2.0 * gw.theta * e / n;
            gy[[b, 5 + t]] += c;
            if t > 0 {
                guz[t] += c * act.beta[t];
                guz[0] -= c * act.beta[0];
            }
        }

        // p(0) = 0.
        for k in 0..3 {
            let e = cache.y[[b, 8 + k]];
            loss += gw.p * e * e;
            gy[[b, 8 + k]] += 2.0 * gw.p * e / n;
        }

        // h(0) = Rz(phi) as a quaternion, phi self-consistent in u_1z(0).
        let (s2, c2) = (0.5 * phi).sin_cos();
        let h_bc = [c2, 0.0, 0.0, s2];
        for k in 0..4 {
            let e = cache.y[[b, 11 + k]] - h_bc[k];
            loss += gw.h * e * e;
            gy[[b, 11 + k]] += 2.0 * gw.h * e / n;
        }
        // d h_bc / d u_1z = [beta1 s2 / 2, 0, 0, -beta1 c2 / 2];
        // the residual is h_hat - h_bc, so the adjoint picks up the negative.
        let eh0 = cache.y[[b, 11]] - h_bc[0];
        let eh3 = cache.y[[b, 14]] - h_bc[3];
        guz[0] += 2.0 * gw.h / n * (eh0 * (-act.beta[0] * s2 * 0.5) + eh3 * (act.beta[0] * c2 * 0.5));

        gy[[b, 2]] += guz[0];
        gy[[b, 3]] += guz[1];
        gy[[b, 4]] += guz[2];

        // Distal conditions: u_jz vanishes at each tube end, m_xy at the tip.
        for (r, idx) in [(b + 1, 4), (b + 2, 3), (b + 3, 2)] {
            let e = cache.y[[r, idx]];
            loss += gw.u * e * e;
            gy[[r, idx]] += 2.0 * gw.u * e / n;
        }
        for k in 0..2 {
            let e = cache.y[[b + 3, k]];
            loss += gw.m * e * e;
            gy[[b + 3, k]] += 2.0 * gw.m * e / n;
        }
    }
    (loss / n, net.backward(&cache, &gy, None))
}

/// Observation loss: mean weighted squared position error. An empty set is
/// allowed (physics-only training) and contributes exactly zero.
pub fn loss_obs(net: &Network, set: &ObservationSet, w: &LossWeights) -> (f64, Gradients) {
    if set.is_empty() {
        return (0.0, Gradients::zeros_like(net));
    }
    let n = set.len() as f64;
    let inputs = set.inputs();
    let cache = net.forward_cached(&inputs, false);
    let mut gy = Array2::zeros(cache.y.raw_dim());
    let mut loss = 0.0;
    for (i, obs) in set.points.iter().enumerate() {
        for k in 0..3 {
            let e = cache.y[[i, 8 + k]] - obs.p[k];
            loss += w.obs * e * e;
            gy[[i, 8 + k]] = 2.0 * w.obs * e / n;
        }
    }
    (loss / n, net.backward(&cache, &gy, None))
}
