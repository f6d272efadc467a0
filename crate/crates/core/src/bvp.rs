//! Shooting solver for the two-point boundary value problem.
//!
//! Integrates the segmented rod ODE with a classical 4th-order Runge-Kutta
//! scheme (never stepping across a segment boundary) and drives the five
//! unknown proximal values to the distal conditions with a damped
//! Newton-Raphson iteration.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{quat_normalize, quat_rot_z};
use crate::rod::{ode_rhs, Actuation, RobotSpec, RodError, RodState, SegmentLayout, STATE_DIM};

#[derive(Debug, Error)]
pub enum BvpError {
    #[error(transparent)]
    Rod(#[from] RodError),
    #[error("integration diverged near s = {s}")]
    Diverged { s: f64 },
    #[error("backbone export: {0}")]
    Export(String),
}

/// The five unknown proximal values: bending moment x/y and per-tube torsion.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ShootingGuess {
    pub m_xy: [f64; 2],
    pub u_z: [f64; 3],
}

impl ShootingGuess {
    pub fn to_array(&self) -> [f64; 5] {
        [self.m_xy[0], self.m_xy[1], self.u_z[0], self.u_z[1], self.u_z[2]]
    }

    pub fn from_array(v: [f64; 5]) -> Self {
        Self { m_xy: [v[0], v[1]], u_z: [v[2], v[3], v[4]] }
    }
}

#[derive(Debug, Clone)]
pub struct BackboneSolution {
    pub grid: Vec<f64>,
    pub states: Vec<RodState>,
    pub residual: [f64; 5],
    pub iterations: usize,
    pub converged: bool,
    pub layout: SegmentLayout,
}

impl BackboneSolution {
    pub fn tip(&self) -> &RodState {
        self.states.last().expect("nonempty grid")
    }

    /// State at a grid point, matched to tolerance. Segment boundaries are
    /// always exact grid points.
    pub fn state_at_grid(&self, s: f64) -> Option<&RodState> {
        let idx = self
            .grid
            .iter()
            .position(|&g| (g - s).abs() <= 1e-9)?;
        Some(&self.states[idx])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Integration step; defaults to `ell1 / 400`.
    pub step: Option<f64>,
    pub initial_guess: Option<ShootingGuess>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 100, step: None, initial_guess: None }
    }
}

/// Base state from the proximal boundary conditions and a shooting guess.
pub fn proximal_state(act: &Actuation, guess: &ShootingGuess) -> RodState {
    let phi1 = act.alpha[0] - act.beta[0] * guess.u_z[0];
    let theta = [
        0.0,
        act.alpha[1] - act.beta[1] * guess.u_z[1] - phi1,
        act.alpha[2] - act.beta[2] * guess.u_z[2] - phi1,
    ];
    RodState {
        m_xy: guess.m_xy,
        u_z: guess.u_z,
        theta,
        p: [0.0; 3],
        h: quat_rot_z(phi1),
    }
}

fn rk4_step(x: &[f64; STATE_DIM], h: f64, seg: &crate::rod::Segment) -> [f64; STATE_DIM] {
    let k1 = ode_rhs(x, seg);
    let mut x2 = *x;
    for i in 0..STATE_DIM {
        x2[i] = x[i] + 0.5 * h * k1[i];
    }
    let k2 = ode_rhs(&x2, seg);
    for i in 0..STATE_DIM {
        x2[i] = x[i] + 0.5 * h * k2[i];
    }
    let k3 = ode_rhs(&x2, seg);
    for i in 0..STATE_DIM {
        x2[i] = x[i] + h * k3[i];
    }
    let k4 = ode_rhs(&x2, seg);
    let mut out = *x;
    for i in 0..STATE_DIM {
        out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrate from the base with a fixed step, carrying the state unchanged
/// across segment boundaries. The quaternion is renormalized after each step.
pub fn integrate(
    robot: &RobotSpec,
    act: &Actuation,
    guess: &ShootingGuess,
    step: f64,
) -> Result<BackboneSolution, BvpError> {
    let layout = SegmentLayout::build(robot, act)?;
    integrate_with_layout(&layout, act, guess, step)
}

pub fn integrate_with_layout(
    layout: &SegmentLayout,
    act: &Actuation,
    guess: &ShootingGuess,
    step: f64,
) -> Result<BackboneSolution, BvpError> {
    assert!(step > 0.0, "step must be positive");
    let mut grid = vec![0.0];
    let mut states = vec![proximal_state(act, guess)];
    let mut x = states[0].to_array();

    for seg in &layout.segments {
        let len = seg.end - seg.start;
        let n = (len / step).ceil().max(1.0) as usize;
        let h = len / n as f64;
        for k in 0..n {
            x = rk4_step(&x, h, seg);
            let hq = quat_normalize([x[11], x[12], x[13], x[14]]);
            x[11..15].copy_from_slice(&hq);
            if x.iter().any(|v| !v.is_finite()) {
                return Err(BvpError::Diverged { s: seg.start + h * (k + 1) as f64 });
            }
            let s = if k + 1 == n { seg.end } else { seg.start + h * (k + 1) as f64 };
            grid.push(s);
            states.push(RodState::from_array(&x));
        }
    }

    Ok(BackboneSolution {
        grid,
        states,
        residual: [f64::NAN; 5],
        iterations: 0,
        converged: false,
        layout: layout.clone(),
    })
}

/// Distal residual `[m_x(l1), m_y(l1), u1z(l1), u2z(l2), u3z(l3)]`.
pub fn distal_residual(sol: &BackboneSolution) -> [f64; 5] {
    let tip = sol.tip();
    let at2 = sol
        .state_at_grid(sol.layout.ell[1])
        .expect("ell2 is a grid point");
    let at3 = sol
        .state_at_grid(sol.layout.ell[2])
        .expect("ell3 is a grid point");
    [tip.m_xy[0], tip.m_xy[1], tip.u_z[0], at2.u_z[1], at3.u_z[2]]
}

fn inf_norm(r: &[f64; 5]) -> f64 {
    r.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn norm2(r: &[f64; 5]) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Solve the boundary value problem by shooting.
///
/// Returns an unconverged (flagged) solution rather than an error when the
/// iteration stalls, so callers can skip and log.
pub fn solve(
    robot: &RobotSpec,
    act: &Actuation,
    opts: &SolveOptions,
) -> Result<BackboneSolution, BvpError> {
    let layout = SegmentLayout::build(robot, act)?;
    let step = opts.step.unwrap_or(layout.backbone_length() / 400.0);
    let mut guess = opts.initial_guess.unwrap_or_default().to_array();
    const FD_STEP: f64 = 1e-6;

    let shoot = |g: [f64; 5]| -> Result<(BackboneSolution, [f64; 5]), BvpError> {
        let mut sol =
            integrate_with_layout(&layout, act, &ShootingGuess::from_array(g), step)?;
        let r = distal_residual(&sol);
        sol.residual = r;
        Ok((sol, r))
    };

    let (mut sol, mut residual) = shoot(guess)?;
    for iter in 0..opts.max_iter {
        if inf_norm(&residual) < opts.tol {
            sol.converged = true;
            sol.iterations = iter;
            return Ok(sol);
        }

        // Forward-difference Jacobian, 5x5.
        let mut jac = [[0.0f64; 5]; 5];
        for j in 0..5 {
            let mut g = guess;
            g[j] += FD_STEP;
            let (_, rp) = shoot(g)?;
            for i in 0..5 {
                jac[i][j] = (rp[i] - residual[i]) / FD_STEP;
            }
        }
        let Some(delta) = solve_linear_5(&jac, &residual) else {
            sol.iterations = iter;
            return Ok(sol); // singular Jacobian, return flagged
        };

        // Backtracking damping on the Newton update.
        let base_norm = norm2(&residual);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=20 {
            let mut g = guess;
            for j in 0..5 {
                g[j] -= lambda * delta[j];
            }
            match shoot(g) {
                Ok((s, r)) if norm2(&r) < base_norm => {
                    accepted = Some((g, s, r));
                    break;
                }
                _ => lambda *= 0.5,
            }
        }
        match accepted {
            Some((g, s, r)) => {
                guess = g;
                sol = s;
                residual = r;
            }
            None => {
                sol.iterations = iter + 1;
                return Ok(sol); // stalled, return flagged
            }
        }
    }
    sol.converged = inf_norm(&residual) < opts.tol;
    sol.iterations = opts.max_iter;
    Ok(sol)
}

/// Gaussian elimination with partial pivoting on a 5x5 system.
fn solve_linear_5(a: &[[f64; 5]; 5], b: &[f64; 5]) -> Option<[f64; 5]> {
    let mut m = *a;
    let mut rhs = *b;
    for col in 0..5 {
        let pivot = (col..5).max_by(|&i, &j| {
            m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap()
        })?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..5 {
            let f = m[row][col] / m[col][col];
            for k in col..5 {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0; 5];
    for row in (0..5).rev() {
        let mut acc = rhs[row];
        for k in row + 1..5 {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// Write the backbone as a tabular text file with a run-metadata header.
pub fn export_backbone(
    sol: &BackboneSolution,
    act: &Actuation,
    tol: f64,
    path: &Path,
) -> Result<(), BvpError> {
    let mut f = std::fs::File::create(path).map_err(|e| BvpError::Export(e.to_string()))?;
    let write = |f: &mut std::fs::File, line: String| -> Result<(), BvpError> {
        writeln!(f, "{line}").map_err(|e| BvpError::Export(e.to_string()))
    };
    write(&mut f, format!("# actuation_beta_m = {:?}", act.beta))?;
    write(&mut f, format!("# actuation_alpha_rad = {:?}", act.alpha))?;
    write(&mut f, format!("# tolerance = {tol}"))?;
    write(&mut f, format!("# iterations = {}", sol.iterations))?;
    write(&mut f, format!("# converged = {}", sol.converged))?;
    write(&mut f, format!("# residual = {:?}", sol.residual))?;
    write(
        &mut f,
        "s p_x p_y p_z h_w h_x h_y h_z theta_1 theta_2 theta_3 u_1z u_2z u_3z m_x m_y".to_string(),
    )?;
    for (s, st) in sol.grid.iter().zip(&sol.states) {
        write(
            &mut f,
            format!(
                "{s:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e}",
                st.p[0], st.p[1], st.p[2],
                st.h[0], st.h[1], st.h[2], st.h[3],
                st.theta[0], st.theta[1], st.theta[2],
                st.u_z[0], st.u_z[1], st.u_z[2],
                st.m_xy[0], st.m_xy[1],
            ),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    use super::*;

    fn random_actuation(rng: &mut StdRng, alpha_max: f64) -> Actuation {
        let b3 = rng.gen_range(-0.010..0.0);
        let b2 = rng.gen_range(b3 - 0.055..b3);
        let b1 = rng.gen_range(b2 - 0.015..b2);
        let a: [f64; 3] = if alpha_max > 0.0 {
            std::array::from_fn(|_| rng.gen_range(-alpha_max..alpha_max))
        } else {
            [0.0; 3]
        };
        Actuation::new([b1, b2, b3], a)
    }

    #[test]
    fn proximal_state_identity() {
        let st = proximal_state(&Actuation::zero(), &ShootingGuess::default());
        assert_eq!(st.theta, [0.0; 3]);
        assert_eq!(st.p, [0.0; 3]);
        assert_eq!(st.h, [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn proximal_state_direct_substitution() {
        let act = Actuation::new([-0.005, -0.004, -0.001], [0.1, 0.2, 0.3]);
        let st = proximal_state(&act, &ShootingGuess::default());
        assert_relative_eq!(st.theta[0], 0.0);
        assert_relative_eq!(st.theta[1], 0.1, max_relative = 1e-12);
        assert_relative_eq!(st.theta[2], 0.2, max_relative = 1e-12);
        let expect = quat_rot_z(0.1);
        for i in 0..4 {
            assert_relative_eq!(st.h[i], expect[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn proximal_state_linear_in_guess() {
        let act = Actuation::new([-0.005, -0.004, -0.001], [0.1, 0.2, 0.3]);
        let base = proximal_state(&act, &ShootingGuess::default());
        let guess = ShootingGuess { m_xy: [0.0; 2], u_z: [2.0, -1.0, 3.0] };
        let st = proximal_state(&act, &guess);
        for i in 1..3 {
            let shift = -act.beta[i] * guess.u_z[i] + act.beta[0] * guess.u_z[0];
            assert_relative_eq!(st.theta[i] - base.theta[i], shift, max_relative = 1e-12);
        }
    }

    #[test]
    fn straight_tubes_integrate_to_a_line() {
        let mut robot = RobotSpec::reference();
        for t in &mut robot.tubes {
            t.precurvature = 0.0;
        }
        let act = Actuation::new([-0.004, -0.003, -0.002], [0.0; 3]);
        let sol = integrate(&robot, &act, &ShootingGuess::default(), 0.210 / 400.0).unwrap();
        let ell1 = sol.layout.backbone_length();
        let tip = sol.tip();
        assert!((tip.p[0]).abs() < 1e-12);
        assert!((tip.p[1]).abs() < 1e-12);
        assert!((tip.p[2] - ell1).abs() < 1e-12);
    }

    /// Closed-form planar arc chain: with alpha = 0 each segment bends about
    /// the body x-axis with the stiffness-weighted curvature.
    fn planar_arc_tip(layout: &SegmentLayout) -> [f64; 3] {
        let mut phi: f64 = 0.0; // accumulated bend angle about x
        let (mut y, mut z) = (0.0, 0.0);
        for seg in &layout.segments {
            let kappa = seg.planar_curvature();
            let len = seg.end - seg.start;
            // tangent direction is [0, -sin(phi), cos(phi)]
            if kappa.abs() < 1e-14 {
                y -= len * phi.sin();
                z += len * phi.cos();
            } else {
                let phi1 = phi + kappa * len;
                // p' = [0, -sin(phi), cos(phi)], phi' = kappa
                y += (phi1.cos() - phi.cos()) / kappa;
                z += (phi1.sin() - phi.sin()) / kappa;
                phi = phi1;
            }
        }
        [0.0, y, z]
    }

    #[test]
    fn planar_solution_matches_arc_chain() {
        let robot = RobotSpec::reference();
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..5 {
            let mut act = random_actuation(&mut rng, 0.0);
            act.alpha = [0.0; 3];
            let sol = solve(&robot, &act, &SolveOptions::default()).unwrap();
            assert!(sol.converged);
            let tip = sol.tip();
            let expect = planar_arc_tip(&sol.layout);
            for i in 0..3 {
                assert!(
                    (tip.p[i] - expect[i]).abs() < 1e-6,
                    "axis {i}: {} vs {}",
                    tip.p[i],
                    expect[i]
                );
            }
            // Planar invariance of torsion and twist along the backbone.
            for st in &sol.states {
                for i in 0..3 {
                    assert!(st.u_z[i].abs() < 1e-9);
                    assert!(st.theta[i].abs() < 1e-9);
                }
                assert!(st.p[0].abs() < 1e-9);
            }
        }
    }

    #[test]
    fn planar_residual_is_zero_with_zero_guess() {
        let robot = RobotSpec::reference();
        let act = Actuation::new([-0.006, -0.002, -0.001], [0.0; 3]);
        let mut sol = integrate(&robot, &act, &ShootingGuess::default(), 0.0005).unwrap();
        sol.residual = distal_residual(&sol);
        assert!(inf_norm(&sol.residual) < 1e-9, "{:?}", sol.residual);
    }

    #[test]
    fn guess_sensitivity_is_monotone_for_small_perturbations() {
        let robot = RobotSpec::reference();
        let act = Actuation::new([-0.004, -0.002, -0.001], [0.5, -0.4, 0.9]);
        let step = 0.21 / 400.0;
        let mut values = Vec::new();
        for k in -3..=3 {
            let eps = k as f64 * 1e-4;
            let guess = ShootingGuess { m_xy: [0.0; 2], u_z: [eps, 0.0, 0.0] };
            let sol = integrate(&robot, &act, &guess, step).unwrap();
            values.push(distal_residual(&sol)[2]);
        }
        // Strictly monotone in one direction for small perturbations.
        let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
        let sign = diffs[0].signum();
        assert!(sign != 0.0);
        for d in &diffs {
            assert!(d.signum() == sign, "not monotone: {values:?}");
        }
    }

    #[test]
    fn random_actuations_converge_and_halving_step_is_stable() {
        let robot = RobotSpec::reference();
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let act = random_actuation(&mut rng, std::f64::consts::PI);
            let sol = solve(&robot, &act, &SolveOptions::default()).unwrap();
            assert!(sol.converged, "no convergence for {act:?}");
            assert!(inf_norm(&sol.residual) < 1e-10);

            let fine = SolveOptions {
                step: Some(sol.layout.backbone_length() / 800.0),
                ..Default::default()
            };
            let sol2 = solve(&robot, &act, &fine).unwrap();
            let d: f64 = (0..3)
                .map(|i| (sol.tip().p[i] - sol2.tip().p[i]).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(d < 1e-8, "step sensitivity {d}");
        }
    }

    #[test]
    fn paper_example_actuation_converges() {
        let robot = RobotSpec::reference();
        let act = Actuation::from_vec6([-0.032, -0.023, -0.005, -2.49, -0.32, -1.52]);
        act.validate().unwrap();
        let sol = solve(&robot, &act, &SolveOptions::default()).unwrap();
        assert!(sol.converged);
        // Distal conditions hold simultaneously.
        assert!(inf_norm(&sol.residual) < 1e-10);
        // Quaternion stays unit along the backbone.
        for st in &sol.states {
            assert!((crate::math::quat_norm(st.h) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rotational_equivariance_end_to_end() {
        let robot = RobotSpec::reference();
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..5 {
            let act = random_actuation(&mut rng, 2.0);
            let delta = rng.gen_range(-1.0..1.0);
            let mut act2 = act;
            for a in &mut act2.alpha {
                *a += delta;
            }
            let sol = solve(&robot, &act, &SolveOptions::default()).unwrap();
            let sol2 = solve(&robot, &act2, &SolveOptions::default()).unwrap();
            assert!(sol.converged && sol2.converged);
            let (c, s) = (delta.cos(), delta.sin());
            let p = sol.tip().p;
            let rotated = [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]];
            for i in 0..3 {
                assert!(
                    (rotated[i] - sol2.tip().p[i]).abs() < 1e-8,
                    "axis {i}: {} vs {}",
                    rotated[i],
                    sol2.tip().p[i]
                );
            }
        }
    }

    #[test]
    fn warm_start_from_solution_converges_immediately() {
        let robot = RobotSpec::reference();
        let act = Actuation::new([-0.02, -0.01, -0.003], [1.2, -0.7, 0.4]);
        let sol = solve(&robot, &act, &SolveOptions::default()).unwrap();
        assert!(sol.converged);
        let warm_guess = ShootingGuess {
            m_xy: sol.states[0].m_xy,
            u_z: sol.states[0].u_z,
        };
        let warm = solve(
            &robot,
            &act,
            &SolveOptions { initial_guess: Some(warm_guess), ..Default::default() },
        )
        .unwrap();
        assert!(warm.converged);
        assert_eq!(warm.iterations, 0);
    }

    #[test]
    fn continuity_across_segment_boundaries() {
        // Integrate twice: once across the full body, once restarted at an
        // internal boundary from the carried-over state; paths must agree.
        let robot = RobotSpec::reference();
        let act = Actuation::new([-0.004, -0.002, -0.001], [0.9, -0.5, 0.2]);
        let sol = solve(&robot, &act, &SolveOptions::default()).unwrap();
        for &b in &sol.layout.boundaries {
            assert!(sol.state_at_grid(b).is_some(), "boundary {b} missing from grid");
        }
    }
}
