//! Scratch diagnostic: PINN fit of a single fixed actuation.

use ctr_core::bvp::{solve, SolveOptions};
use ctr_core::eval::backbone_error;
use ctr_core::mlp::Network;
use ctr_core::optim::LbfgsConfig;
use ctr_core::pinn::{
    build_network, ActuationDomain, BoundarySet, CollocationSet, LossWeights, ObservationPoint,
    ObservationSet,
};
use ctr_core::rod::{Actuation, RobotSpec};
use ctr_core::train::{train, TrainConfig};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn main() {
    let robot = RobotSpec::reference();
    let domain = ActuationDomain::restricted();
    let mut rng = StdRng::seed_from_u64(5);
    let act: Actuation = domain.sample(&mut rng);
    let ell = act.tube_ends(&robot);

    let n_coll = 500;
    let points: Vec<(f64, Actuation)> =
        (0..n_coll).map(|_| (rng.gen_range(0.0..ell[0]), act)).collect();
    let coll = CollocationSet::new(points, &robot).unwrap();
    let bc = BoundarySet::new(vec![act], &robot).unwrap();
    let sol = solve(&robot, &act, &SolveOptions::default()).unwrap();
    let obs = ObservationSet::new(
        (1..=3)
            .map(|i| {
                let s = ell[i - 1];
                let idx = sol
                    .grid
                    .iter()
                    .position(|&g| (g - s).abs() < 1e-9)
                    .unwrap_or(sol.grid.len() - 1);
                ObservationPoint { s, act, p: sol.states[idx].p }
            })
            .collect(),
    );

    let weights_text = std::fs::read_to_string(
        std::env::args().nth(1).unwrap_or("weights/phase_b.toml".into()),
    )
    .unwrap();
    let w: LossWeights = toml::from_str(&weights_text).unwrap();
    let iters: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(2000);

    let mut net = build_network(&robot, &domain, &[100; 6], 0);
    let cfg = TrainConfig {
        weights: w,
        lbfgs: LbfgsConfig { max_iters: iters, ..LbfgsConfig::default() },
        checkpoint_every: 0,
        ..TrainConfig::default()
    };
    let t0 = std::time::Instant::now();
    let res = train(&mut net, &coll, &bc, &obs, &cfg, None, |r, _| {
        if r.iter % 200 == 0 {
            println!(
                "iter {:>5} loss {:.4e} (ode {:.3e} bc {:.3e} obs {:.3e})",
                r.iter, r.total, r.ode, r.bc, r.obs
            );
        }
    })
    .unwrap();
    println!("final loss {:.4e} in {:.1}s", res.loss, t0.elapsed().as_secs_f64());
    let shape = backbone_error(&net, &robot, &[act], 50, &SolveOptions::default()).unwrap();
    println!("single-act backbone error: mean {:.3}% max {:.3}%", 100.0 * shape.mean, 100.0 * shape.max);
    for (k, (st, e)) in shape.stations.iter().zip(shape.station_max.iter()).enumerate() {
        if k % 5 == 0 || *e >= 0.99 * shape.max {
            println!("  station {:.2}  err {:.3}%", st, 100.0 * e);
        }
    }

    // Near-tip trajectory: network vs oracle position and tangent.
    use ctr_core::math::quat_rotate_e3;
    for k in 0..12 {
        let s = ell[0] * (0.78 + 0.02 * k as f64);
        let idx = sol
            .grid
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - s).abs().partial_cmp(&(b.1 - s).abs()).unwrap())
            .unwrap()
            .0;
        let st = &sol.states[idx];
        let (x, d) = net.forward_one_with_s_derivative(sol.grid[idx], &act);
        let perr = ((x.p[0] - st.p[0]).powi(2) + (x.p[1] - st.p[1]).powi(2)
            + (x.p[2] - st.p[2]).powi(2))
        .sqrt();
        let t_true = quat_rotate_e3(st.h);
        let tang_err = ((d[8] - t_true[0]).powi(2) + (d[9] - t_true[1]).powi(2)
            + (d[10] - t_true[2]).powi(2))
        .sqrt();
        let h_pred = quat_rotate_e3(x.h);
        let h_err = ((h_pred[0] - t_true[0]).powi(2) + (h_pred[1] - t_true[1]).powi(2)
            + (h_pred[2] - t_true[2]).powi(2))
        .sqrt();
        let xm = x.to_array();
        let xt = st.to_array();
        let merr = ((xm[0] - xt[0]).powi(2) + (xm[1] - xt[1]).powi(2)).sqrt();
        let uerr: f64 =
            (2..5).map(|k| (xm[k] - xt[k]).powi(2)).sum::<f64>().sqrt();
        let therr: f64 =
            (5..8).map(|k| (xm[k] - xt[k]).powi(2)).sum::<f64>().sqrt();
        use ctr_core::math::quat_geodesic;
        let qerr = quat_geodesic(x.h, st.h);
        println!(
            "s/l1 {:.2}  |dp| {:.2e}  |pdot-t| {:.3}  |R(h)e3-t| {:.3}  |dm| {:.2e} |du| {:.2e} |dth| {:.2e} qgeo {:.3}",
            sol.grid[idx] / ell[0],
            perr,
            tang_err,
            h_err,
            merr,
            uerr,
            therr,
            qerr
        );
    }
    for o in &obs.points {
        let x = net.forward_one(o.s, &o.act);
        let e = ((x.p[0] - o.p[0]).powi(2) + (x.p[1] - o.p[1]).powi(2)
            + (x.p[2] - o.p[2]).powi(2))
        .sqrt();
        println!("obs s {:.4}  misfit {:.2e} m", o.s, e);
    }

    // Residual profile along s, with segment boundaries marked.
    use ctr_core::rod::{ode_rhs, SegmentLayout};
    let layout = SegmentLayout::build(&robot, &act).unwrap();
    println!("boundaries: {:?}", layout.boundaries);
    for k in 0..40 {
        let s = ell[0] * (k as f64 + 0.5) / 40.0;
        let seg = layout.segment_at(s).unwrap();
        let (x, d) = net.forward_one_with_s_derivative(s, &act);
        let f = ode_rhs(&x.to_array(), seg);
        let mut per = [0.0f64; 5];
        for j in 0..15 {
            let e = (d[j] - f[j]).powi(2);
            match j {
                0..=1 => per[0] += e,
                2..=4 => per[1] += e,
                5..=7 => per[2] += e,
                8..=10 => per[3] += e,
                _ => per[4] += e,
            }
        }
        println!(
            "s {:.4}  m {:.2e} u {:.2e} th {:.2e} p {:.2e} h {:.2e}",
            s,
            per[0].sqrt(),
            per[1].sqrt(),
            per[2].sqrt(),
            per[3].sqrt(),
            per[4].sqrt()
        );
    }
}
