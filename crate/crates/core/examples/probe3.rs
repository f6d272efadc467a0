//! Scratch: quaternion norm and tangent-speed drift of a trained net.
use ctr_core::mlp::Network;
use ctr_core::pinn::ActuationDomain;
use ctr_core::rod::{Actuation, RobotSpec};
use rand::rngs::StdRng;
use rand::SeedableRng;

fn main() {
    let path = std::env::args().nth(1).unwrap_or("weights/stage1.ckpt.json".into());
    let net = Network::load(std::path::Path::new(&path)).unwrap();
    let robot = RobotSpec::reference();
    let domain = ActuationDomain::restricted();
    let mut rng = StdRng::seed_from_u64(123);
    for _ in 0..3 {
        let act: Actuation = domain.sample(&mut rng);
        let ell = act.tube_ends(&robot);
        println!("act ell1 {:.4}", ell[0]);
        for k in 0..10 {
            let s = ell[0] * (k as f64 + 0.5) / 10.0;
            let (x, d) = net.forward_one_with_s_derivative(s, &act);
            let hn = (x.h.iter().map(|v| v * v).sum::<f64>()).sqrt();
            let speed = (d[8] * d[8] + d[9] * d[9] + d[10] * d[10]).sqrt();
            println!("  s/l1 {:.2}  |h| {:.4}  |pdot| {:.4}", s / ell[0], hn, speed);
        }
    }
}
