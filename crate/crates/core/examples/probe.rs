//! Scratch diagnostic: per-component residual breakdown of a checkpoint.

use ctr_core::math::{quat_geodesic, quat_normalize, quat_rot_z};
use ctr_core::mlp::Network;
use ctr_core::pinn::ActuationDomain;
use ctr_core::rod::{ode_rhs, Actuation, RobotSpec, SegmentLayout};
use rand::rngs::StdRng;
use rand::SeedableRng;

fn main() {
    let path = std::env::args().nth(1).unwrap_or("weights/stage1.ckpt.json".into());
    let net = Network::load(std::path::Path::new(&path)).unwrap();
    let robot = RobotSpec::reference();
    let domain = ActuationDomain::restricted();
    let mut rng = StdRng::seed_from_u64(99);
    let n = 200;

    let mut bc_sq = [0.0f64; 8]; // th1 th2 th3 p h m(l1) u1z u2z/u3z pooled
    let mut ode_sq = [0.0f64; 5]; // m u th p h groups
    for _ in 0..n {
        let act: Actuation = domain.sample(&mut rng);
        let ell = act.tube_ends(&robot);
        let x0 = net.forward_one(0.0, &act);
        let phi1 = act.alpha[0] - act.beta[0] * x0.u_z[0];
        bc_sq[0] += x0.theta[0].powi(2);
        for i in 1..3 {
            let target = act.alpha[i] - act.beta[i] * x0.u_z[i] - phi1;
            bc_sq[i] += (x0.theta[i] - target).powi(2);
        }
        bc_sq[3] += x0.p.iter().map(|v| v * v).sum::<f64>();
        let hbc = quat_rot_z(phi1);
        bc_sq[4] += (0..4).map(|k| (x0.h[k] - hbc[k]).powi(2)).sum::<f64>();
        let tip = net.forward_one(ell[0], &act);
        bc_sq[5] += tip.m_xy[0].powi(2) + tip.m_xy[1].powi(2);
        bc_sq[6] += tip.u_z[0].powi(2);
        for i in 1..3 {
            bc_sq[7] += net.forward_one(ell[i], &act).u_z[i].powi(2);
        }
        // orientation error vs nothing; also ODE residual at a random s
        let layout = SegmentLayout::build(&robot, &act).unwrap();
        use rand::Rng;
        let s = rng.gen_range(0.0..ell[0] * 0.999);
        let seg = layout.segment_at(s).unwrap();
        let (x, d) = net.forward_one_with_s_derivative(s, &act);
        let f = ode_rhs(&x.to_array(), seg);
        for j in 0..15 {
            let e = (d[j] - f[j]).powi(2);
            match j {
                0..=1 => ode_sq[0] += e,
                2..=4 => ode_sq[1] += e,
                5..=7 => ode_sq[2] += e,
                8..=10 => ode_sq[3] += e,
                _ => ode_sq[4] += e,
            }
        }
        let _ = quat_geodesic(quat_normalize(x0.h), hbc);
    }
    let r = |x: f64, c: f64| (x / c).sqrt();
    println!("bc rms: th1 {:.3e} th2 {:.3e} th3 {:.3e} |p| {:.3e} |h| {:.3e} m(l1) {:.3e} u1z(l1) {:.3e} u23z {:.3e}",
        r(bc_sq[0], n as f64), r(bc_sq[1], n as f64), r(bc_sq[2], n as f64),
        r(bc_sq[3], n as f64), r(bc_sq[4], n as f64), r(bc_sq[5], n as f64),
        r(bc_sq[6], n as f64), r(bc_sq[7], 2.0 * n as f64));
    println!("ode rms: m {:.3e} u {:.3e} th {:.3e} p {:.3e} h {:.3e}",
        r(ode_sq[0], 2.0 * n as f64), r(ode_sq[1], 3.0 * n as f64), r(ode_sq[2], 3.0 * n as f64),
        r(ode_sq[3], 3.0 * n as f64), r(ode_sq[4], 4.0 * n as f64));
}
