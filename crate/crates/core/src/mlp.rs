//! The network: an MLP from `(s, tau)` to the 15-dim rod state, with
//! batched forward evaluation, exact forward-mode propagation of the
//! arc-length derivative, and hand-rolled backpropagation through both.
//!
//! Normalization maps are stored with the weights and applied identically at
//! train and inference time. Weight files are a versioned JSON container.

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rod::{group, Actuation, RodState, STATE_DIM};

pub const INPUT_DIM: usize = 7;
pub const WEIGHT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum MlpError {
    #[error("weight file: {0}")]
    Io(String),
    #[error("weight file: {0}")]
    Format(String),
}

/// Per-input affine map to [-1, 1]: `x_norm = (x - center) / half`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputMap {
    pub center: [f64; INPUT_DIM],
    pub half: [f64; INPUT_DIM],
}

impl InputMap {
    pub fn normalize(&self, raw: &[f64; INPUT_DIM]) -> [f64; INPUT_DIM] {
        std::array::from_fn(|i| (raw[i] - self.center[i]) / self.half[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// Weight matrix, shape (out, in).
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// Training-stage provenance stored alongside the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkMeta {
    pub robot_hash: String,
    pub seed: u64,
    pub stage: String,
    pub note: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Network {
    /// Hidden layers use tanh; the final layer is linear.
    pub layers: Vec<Layer>,
    pub input_map: InputMap,
    /// Physical output = `output_scale` * raw output, per component.
    /// Position components additionally carry a factor of `s`, so the
    /// clamped-base condition `p(0) = 0` holds by construction.
    pub output_scale: [f64; STATE_DIM],
    pub meta: NetworkMeta,
    #[serde(skip)]
    evals: AtomicU64,
}

impl Clone for Network {
    fn clone(&self) -> Self {
        Self {
            layers: self.layers.clone(),
            input_map: self.input_map.clone(),
            output_scale: self.output_scale,
            meta: self.meta.clone(),
            evals: AtomicU64::new(self.evals.load(Ordering::Relaxed)),
        }
    }
}

/// Activations and tangents retained from a forward pass for backprop.
pub struct ForwardCache {
    /// Activations per layer boundary; `a[0]` is the normalized input batch.
    pub a: Vec<Array2<f64>>,
    /// Pre-activation tangents of hidden layers (needed by the backward pass).
    pub zdot: Vec<Array2<f64>>,
    /// Activation tangents per layer boundary (w.r.t. physical arc-length).
    pub adot: Vec<Array2<f64>>,
    /// Physical outputs, B x 15.
    pub y: Array2<f64>,
    /// Physical arc-length derivatives, B x 15 (zeros when not requested).
    pub ydot: Array2<f64>,
    pub with_tangent: bool,
}

/// Weight-space gradients with the same shapes as the layers.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| Layer { w: Array2::zeros(l.w.raw_dim()), b: Array1::zeros(l.b.raw_dim()) })
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.w += &b.w;
            a.b += &b.b;
        }
    }

    pub fn scale(&mut self, c: f64) {
        for l in &mut self.layers {
            l.w *= c;
            l.b *= c;
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for l in &self.layers {
            v.extend(l.w.iter());
            v.extend(l.b.iter());
        }
        v
    }
}

impl Network {
    pub fn new(
        layers: Vec<Layer>,
        input_map: InputMap,
        output_scale: [f64; STATE_DIM],
        meta: NetworkMeta,
    ) -> Self {
        Self { layers, input_map, output_scale, meta, evals: AtomicU64::new(0) }
    }

    /// Architecture as layer widths, input to output.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.layers[0].w.ncols()];
        w.extend(self.layers.iter().map(|l| l.w.nrows()));
        w
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Total single-sample forward evaluations performed so far.
    pub fn eval_count(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    pub fn params_to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            v.extend(l.w.iter());
            v.extend(l.b.iter());
        }
        v
    }

    pub fn set_params_from_vec(&mut self, v: &[f64]) {
        assert_eq!(v.len(), self.param_count());
        let mut off = 0;
        for l in &mut self.layers {
            for w in l.w.iter_mut() {
                *w = v[off];
                off += 1;
            }
            for b in l.b.iter_mut() {
                *b = v[off];
                off += 1;
            }
        }
    }

    /// Batched evaluation. Rows of `inputs` are physical `[s, beta, alpha]`.
    /// Retains activations (and tangents when `with_tangent`) for backprop.
    pub fn forward_cached(&self, inputs: &Array2<f64>, with_tangent: bool) -> ForwardCache {
        let batch = inputs.nrows();
        assert_eq!(inputs.ncols(), INPUT_DIM);
        self.evals.fetch_add(batch as u64, Ordering::Relaxed);

        let mut a0 = Array2::zeros((batch, INPUT_DIM));
        for (mut row, src) in a0.axis_iter_mut(Axis(0)).zip(inputs.axis_iter(Axis(0))) {
            for i in 0..INPUT_DIM {
                row[i] = (src[i] - self.input_map.center[i]) / self.input_map.half[i];
            }
        }
        let mut adot0 = Array2::zeros((batch, INPUT_DIM));
        if with_tangent {
            adot0.column_mut(0).fill(1.0 / self.input_map.half[0]);
        }

        let n_layers = self.layers.len();
        let mut a = Vec::with_capacity(n_layers + 1);
        let mut adot = Vec::with_capacity(n_layers + 1);
        let mut zdot = Vec::with_capacity(n_layers.saturating_sub(1));
        a.push(a0);
        adot.push(adot0);

        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = a[k].dot(&layer.w.t());
            z += &layer.b;
            let zd = if with_tangent {
                adot[k].dot(&layer.w.t())
            } else {
                Array2::zeros(z.raw_dim())
            };
            if k + 1 < n_layers {
                let act = z.mapv(f64::tanh);
                let ad = if with_tangent {
                    let mut t = act.mapv(|v| 1.0 - v * v);
                    t *= &zd;
                    t
                } else {
                    Array2::zeros(act.raw_dim())
                };
                zdot.push(zd);
                a.push(act);
                adot.push(ad);
            } else {
                a.push(z);
                adot.push(zd);
            }
        }

        let mut y = a.last().unwrap().clone();
        let mut ydot = adot.last().unwrap().clone();
        for (i, &c) in self.output_scale.iter().enumerate() {
            y.column_mut(i).mapv_inplace(|v| v * c);
            ydot.column_mut(i).mapv_inplace(|v| v * c);
        }

        // Hard base constraint: the backbone is clamped at the origin, so
        // emit p(s) = s * g(s) (and pdot = g + s * gdot), making p(0) = 0
        // exact rather than a soft boundary penalty.
        for i in 0..batch {
            let s = inputs[[i, 0]];
            for j in group::P {
                let g = y[[i, j]];
                if with_tangent {
                    ydot[[i, j]] = g + s * ydot[[i, j]];
                }
                y[[i, j]] = s * g;
            }
        }

        // Hard distal moment constraint: the bending moment vanishes at the
        // free tip, so emit m(s) = (l1(tau) - s) * g (and
        // mdot = -g + (l1 - s) * gdot), where l1 = L1 + beta1 is recovered
        // from the input map (center[0] + half[0] = L1). Errors in m near
        // the tip are amplified ~1/(E1 I1) into curvature, so this boundary
        // must hold exactly rather than to penalty tolerance.
        let l1_total = self.input_map.center[0] + self.input_map.half[0];
        for i in 0..batch {
            let f = l1_total + inputs[[i, 1]] - inputs[[i, 0]];
            for j in group::M_XY {
                let g = y[[i, j]];
                if with_tangent {
                    ydot[[i, j]] = -g + f * ydot[[i, j]];
                }
                y[[i, j]] = f * g;
            }
        }

        // Hard gauge constraint: the backbone material frame is tube 1's
        // frame, so theta_1 is identically zero (theta_1(0) = 0 and
        // theta_1' = 0); emit it as an exact zero rather than learning it.
        let th1 = group::THETA.start;
        y.column_mut(th1).fill(0.0);
        if with_tangent {
            ydot.column_mut(th1).fill(0.0);
        }

        // Hard unit-norm constraint on the quaternion: h = g / |g| (and
        // hdot = (gdot - h (h . gdot)) / |g|), so orientation is a proper
        // rotation everywhere and the norm cannot drift along s.
        let hr = group::H;
        for i in 0..batch {
            let g: Vec<f64> = hr.clone().map(|j| y[[i, j]]).collect();
            let n = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            let h: Vec<f64> = g.iter().map(|v| v / n).collect();
            if with_tangent {
                let gd: Vec<f64> = hr.clone().map(|j| ydot[[i, j]]).collect();
                let hdg: f64 = h.iter().zip(&gd).map(|(a, b)| a * b).sum();
                for (k, j) in hr.clone().enumerate() {
                    ydot[[i, j]] = (gd[k] - h[k] * hdg) / n;
                }
            }
            for (k, j) in hr.clone().enumerate() {
                y[[i, j]] = h[k];
            }
        }

        ForwardCache { a, zdot, adot, y, ydot, with_tangent }
    }

    /// Backpropagate adjoints of the physical outputs (and, when the cache
    /// carries tangents, of the physical arc-length derivatives).
    pub fn backward(
        &self,
        cache: &ForwardCache,
        gy: &Array2<f64>,
        gydot: Option<&Array2<f64>>,
    ) -> Gradients {
        let n_layers = self.layers.len();
        let mut grads = Gradients::zeros_like(self);

        let mut ga = gy.clone();
        let mut gadot = match gydot {
            Some(g) => {
                assert!(cache.with_tangent, "tangent adjoint without tangent cache");
                Some(g.clone())
            }
            None => None,
        };

        // Chain rule through the hard base constraint (p = s * g,
        // pdot = g + s * gdot; see forward_cached). Recover the physical
        // arc length from the cached normalized input.
        for i in 0..ga.nrows() {
            let s = cache.a[0][[i, 0]] * self.input_map.half[0] + self.input_map.center[0];
            for j in group::P {
                let gp = ga[[i, j]];
                let gpd = gadot.as_ref().map_or(0.0, |g| g[[i, j]]);
                ga[[i, j]] = s * gp + gpd;
                if let Some(g) = gadot.as_mut() {
                    g[[i, j]] = s * gpd;
                }
            }
        }

        // Chain rule through the distal moment constraint (m = f * g,
        // mdot = -g + f * gdot, f = l1(tau) - s; see forward_cached).
        let l1_total = self.input_map.center[0] + self.input_map.half[0];
        for i in 0..ga.nrows() {
            let s = cache.a[0][[i, 0]] * self.input_map.half[0] + self.input_map.center[0];
            let beta1 = cache.a[0][[i, 1]] * self.input_map.half[1] + self.input_map.center[1];
            let f = l1_total + beta1 - s;
            for j in group::M_XY {
                let gm = ga[[i, j]];
                let gmd = gadot.as_ref().map_or(0.0, |g| g[[i, j]]);
                ga[[i, j]] = f * gm - gmd;
                if let Some(g) = gadot.as_mut() {
                    g[[i, j]] = f * gmd;
                }
            }
        }

        // The theta_1 output is constant zero; nothing flows back through it.
        let th1 = group::THETA.start;
        ga.column_mut(th1).fill(0.0);
        if let Some(g) = gadot.as_mut() {
            g.column_mut(th1).fill(0.0);
        }

        // Chain rule through the quaternion unit-norm constraint
        // (h = g / |g|, hdot = (gdot - h (h . gdot)) / |g|). The
        // pre-normalization values are the cached raw final activations
        // times the output scale.
        let hr = group::H;
        let raw = &cache.a[n_layers];
        let raw_dot = &cache.adot[n_layers];
        for i in 0..ga.nrows() {
            let g: Vec<f64> =
                hr.clone().map(|j| raw[[i, j]] * self.output_scale[j]).collect();
            let n = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            let h: Vec<f64> = g.iter().map(|v| v / n).collect();
            let w: Vec<f64> = hr.clone().map(|j| ga[[i, j]]).collect();
            let hw: f64 = h.iter().zip(&w).map(|(a, b)| a * b).sum();
            let mut adj_g: Vec<f64> =
                (0..4).map(|k| (w[k] - h[k] * hw) / n).collect();
            if let Some(gad) = gadot.as_mut() {
                let gd: Vec<f64> =
                    hr.clone().map(|j| raw_dot[[i, j]] * self.output_scale[j]).collect();
                let v: Vec<f64> = hr.clone().map(|j| gad[[i, j]]).collect();
                let hv: f64 = h.iter().zip(&v).map(|(a, b)| a * b).sum();
                let hgd: f64 = h.iter().zip(&gd).map(|(a, b)| a * b).sum();
                let vgd: f64 = v.iter().zip(&gd).map(|(a, b)| a * b).sum();
                for k in 0..4 {
                    adj_g[k] += (-vgd * h[k] - hgd * v[k] - hv * gd[k]
                        + 3.0 * hv * hgd * h[k])
                        / (n * n);
                }
                for (k, j) in hr.clone().enumerate() {
                    gad[[i, j]] = (v[k] - h[k] * hv) / n;
                }
            }
            for (k, j) in hr.clone().enumerate() {
                ga[[i, j]] = adj_g[k];
            }
        }

        // Undo the output scaling.
        for (i, &c) in self.output_scale.iter().enumerate() {
            ga.column_mut(i).mapv_inplace(|v| v * c);
            if let Some(g) = gadot.as_mut() {
                g.column_mut(i).mapv_inplace(|v| v * c);
            }
        }

        for k in (0..n_layers).rev() {
            // ga / gadot currently hold adjoints of a[k + 1] and adot[k + 1].
            let (gz, gzdot) = if k + 1 < n_layers {
                let act = &cache.a[k + 1];
                let t = act.mapv(|v| 1.0 - v * v);
                let zd = &cache.zdot[k];
                let mut gz = &ga * &t;
                let gzdot = match &gadot {
                    Some(gad) => {
                        // a = tanh(z), adot = (1 - a^2) zdot:
                        // dz  += gadot * (-2 a (1 - a^2) zdot)
                        // dzd  = gadot * (1 - a^2)
                        let extra = gad * &(act * &t * zd).mapv(|v| -2.0 * v);
                        gz += &extra;
                        Some(gad * &t)
                    }
                    None => None,
                };
                (gz, gzdot)
            } else {
                (ga.clone(), gadot.clone())
            };

            let layer = &self.layers[k];
            let g = &mut grads.layers[k];
            g.w += &gz.t().dot(&cache.a[k]);
            g.b += &gz.sum_axis(Axis(0));
            if let Some(gzd) = &gzdot {
                g.w += &gzd.t().dot(&cache.adot[k]);
            }

            if k > 0 {
                ga = gz.dot(&layer.w);
                gadot = gzdot.map(|gzd| gzd.dot(&layer.w));
            }
        }
        grads
    }

    /// Single-sample evaluation in physical units.
    pub fn forward_one(&self, s: f64, act: &Actuation) -> RodState {
        let inputs = Self::pack_inputs(&[(s, *act)]);
        let cache = self.forward_cached(&inputs, false);
        let mut out = [0.0; STATE_DIM];
        for i in 0..STATE_DIM {
            out[i] = cache.y[[0, i]];
        }
        RodState::from_array(&out)
    }

    /// Single-sample evaluation with the exact arc-length derivative.
    pub fn forward_one_with_s_derivative(
        &self,
        s: f64,
        act: &Actuation,
    ) -> (RodState, [f64; STATE_DIM]) {
        let inputs = Self::pack_inputs(&[(s, *act)]);
        let cache = self.forward_cached(&inputs, true);
        let mut out = [0.0; STATE_DIM];
        let mut d = [0.0; STATE_DIM];
        for i in 0..STATE_DIM {
            out[i] = cache.y[[0, i]];
            d[i] = cache.ydot[[0, i]];
        }
        (RodState::from_array(&out), d)
    }

    pub fn pack_inputs(samples: &[(f64, Actuation)]) -> Array2<f64> {
        let mut m = Array2::zeros((samples.len(), INPUT_DIM));
        for (mut row, (s, act)) in m.axis_iter_mut(Axis(0)).zip(samples) {
            row[0] = *s;
            let v = act.to_vec6();
            for i in 0..6 {
                row[i + 1] = v[i];
            }
        }
        m
    }

    pub fn save(&self, path: &Path) -> Result<(), MlpError> {
        #[derive(Serialize)]
        struct Container<'a> {
            format_version: u32,
            network: &'a Network,
        }
        let text = serde_json::to_string(&Container { format_version: WEIGHT_FORMAT_VERSION, network: self })
            .map_err(|e| MlpError::Format(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| MlpError::Io(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, MlpError> {
        #[derive(Deserialize)]
        struct Container {
            format_version: u32,
            network: Network,
        }
        let text = std::fs::read_to_string(path).map_err(|e| MlpError::Io(e.to_string()))?;
        let c: Container =
            serde_json::from_str(&text).map_err(|e| MlpError::Format(e.to_string()))?;
        if c.format_version != WEIGHT_FORMAT_VERSION {
            return Err(MlpError::Format(format!(
                "unsupported weight format version {}",
                c.format_version
            )));
        }
        Ok(c.network)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::xavier_layers;
    use approx::assert_relative_eq;

    fn small_net(seed: u64) -> Network {
        let layers = xavier_layers(&[INPUT_DIM, 8, 8, STATE_DIM], seed);
        Network::new(
            layers,
            InputMap {
                center: [0.1, -0.04, -0.03, -0.005, 0.0, 0.0, 0.0],
                half: [0.105, 0.04, 0.0325, 0.005, 1.1, 1.1, 1.1],
            },
            std::array::from_fn(|i| 0.5 + 0.1 * i as f64),
            NetworkMeta {
                robot_hash: String::new(),
                seed,
                stage: "test".into(),
                note: String::new(),
            },
        )
    }

    #[test]
    fn deterministic_and_counts_evals() {
        let net = small_net(1);
        let act = Actuation::new([-0.004, -0.003, -0.002], [0.3, -0.2, 0.1]);
        let a = net.forward_one(0.05, &act);
        let b = net.forward_one(0.05, &act);
        assert_eq!(a, b);
        assert_eq!(net.eval_count(), 2);
    }

    #[test]
    fn zero_weights_give_constant_descaled_bias() {
        let mut net = small_net(2);
        for l in &mut net.layers {
            l.w.fill(0.0);
            l.b.fill(0.0);
        }
        net.layers.last_mut().unwrap().b.fill(2.0);
        let act = Actuation::zero();
        let out = net.forward_one(0.07, &act).to_array();
        let gh: Vec<f64> = group::H.map(|j| 2.0 * net.output_scale[j]).collect();
        let nh = gh.iter().map(|v| v * v).sum::<f64>().sqrt();
        let l1 = net.input_map.center[0] + net.input_map.half[0];
        let f_m = l1 - 0.07; // act is zero, so l1(tau) = L1
        for i in 0..STATE_DIM {
            // Moment and position pick up their hard-constraint factors, and
            // the quaternion block is normalized to unit length.
            let expect = if i == group::THETA.start {
                0.0
            } else if group::M_XY.contains(&i) {
                2.0 * net.output_scale[i] * f_m
            } else if group::P.contains(&i) {
                2.0 * net.output_scale[i] * 0.07
            } else if group::H.contains(&i) {
                2.0 * net.output_scale[i] / nh
            } else {
                2.0 * net.output_scale[i]
            };
            assert_relative_eq!(out[i], expect, max_relative = 1e-14);
        }
        let (_, d) = net.forward_one_with_s_derivative(0.07, &act);
        for (i, &v) in d.iter().enumerate() {
            // A constant raw output g still yields pdot = g and mdot = -g.
            let expect = if group::M_XY.contains(&i) {
                -2.0 * net.output_scale[i]
            } else if group::P.contains(&i) {
                2.0 * net.output_scale[i]
            } else {
                0.0
            };
            assert_relative_eq!(v, expect, max_relative = 1e-14);
        }
    }

    #[test]
    fn single_linear_layer_derivative_is_weight_column_times_slope() {
        let mut net = small_net(3);
        net.layers = vec![Layer {
            w: Array2::from_shape_fn((STATE_DIM, INPUT_DIM), |(i, j)| (i + j) as f64 * 0.01),
            b: Array1::zeros(STATE_DIM),
        }];
        let act = Actuation::new([-0.002, -0.001, -0.001], [0.0; 3]);
        let s = 0.03;
        let (y, d) = net.forward_one_with_s_derivative(s, &act);
        let y = y.to_array();
        let slope = 1.0 / net.input_map.half[0];
        let l1 = net.input_map.center[0] + net.input_map.half[0];
        let f_m = l1 + act.beta[0] - s;
        for i in 0..STATE_DIM {
            if group::H.contains(&i) || i == group::THETA.start {
                // The quaternion block is unit-normalized (covered by the
                // finite-difference test below) and theta_1 is pinned to zero.
                continue;
            }
            let g_dot = net.layers[0].w[[i, 0]] * slope * net.output_scale[i];
            let expect = if group::M_XY.contains(&i) {
                // mdot = -g + (l1 - s) * gdot under the distal constraint.
                -y[i] / f_m + f_m * g_dot
            } else if group::P.contains(&i) {
                // pdot = g + s * gdot under the hard base constraint.
                y[i] / s + s * g_dot
            } else {
                g_dot
            };
            assert_relative_eq!(d[i], expect, max_relative = 1e-13);
        }
    }

    #[test]
    fn s_derivative_matches_central_differences() {
        let net = small_net(4);
        let act = Actuation::new([-0.006, -0.004, -0.003], [0.8, -0.4, 0.2]);
        for &s in &[0.01, 0.05, 0.12, 0.19] {
            let (_, d) = net.forward_one_with_s_derivative(s, &act);
            let delta = 1e-6 * net.input_map.half[0];
            let yp = net.forward_one(s + delta, &act).to_array();
            let ym = net.forward_one(s - delta, &act).to_array();
            for i in 0..STATE_DIM {
                let fd = (yp[i] - ym[i]) / (2.0 * delta);
                assert_relative_eq!(d[i], fd, max_relative = 1e-6, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn weight_file_round_trip() {
        let net = small_net(5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("weights.json");
        net.save(&path).unwrap();
        let back = Network::load(&path).unwrap();
        assert_eq!(net.layers, back.layers);
        assert_eq!(net.input_map, back.input_map);
        assert_eq!(net.output_scale, back.output_scale);
        let act = Actuation::zero();
        assert_eq!(net.forward_one(0.1, &act), back.forward_one(0.1, &act));
    }

    /// Scalar loss of both the outputs and their s-derivatives; gradient via
    /// backprop must match central finite differences over the weights.
    #[test]
    fn backward_matches_finite_differences() {
        let mut net = small_net(6);
        let inputs = Network::pack_inputs(&[
            (0.03, Actuation::new([-0.004, -0.003, -0.002], [0.5, -0.1, 0.9])),
            (0.11, Actuation::new([-0.010, -0.008, -0.004], [-0.7, 0.3, 0.2])),
            (0.17, Actuation::new([-0.001, -0.001, -0.001], [0.0, 1.1, -1.3])),
        ]);
        // L = sum(sin(y_ij)) + sum(cos(ydot_ij) * 0.01)
        let loss = |net: &Network| -> f64 {
            let c = net.forward_cached(&inputs, true);
            c.y.iter().map(|v| v.sin()).sum::<f64>()
                + c.ydot.iter().map(|v| 0.01 * v.cos()).sum::<f64>()
        };
        let cache = net.forward_cached(&inputs, true);
        let gy = cache.y.mapv(f64::cos);
        let gydot = cache.ydot.mapv(|v| -0.01 * v.sin());
        let grads = net.backward(&cache, &gy, Some(&gydot));
        let gvec = grads.to_vec();

        let params = net.params_to_vec();
        let mut checked = 0;
        for idx in (0..params.len()).step_by(17) {
            let h = 1e-6;
            let mut p = params.clone();
            p[idx] += h;
            net.set_params_from_vec(&p);
            let lp = loss(&net);
            p[idx] -= 2.0 * h;
            net.set_params_from_vec(&p);
            let lm = loss(&net);
            net.set_params_from_vec(&params);
            let fd = (lp - lm) / (2.0 * h);
            assert_relative_eq!(gvec[idx], fd, max_relative = 2e-5, epsilon = 1e-9);
            checked += 1;
        }
        assert!(checked > 10);
    }
}
