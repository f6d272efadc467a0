//! The snap-free actuation box and uniform sampling over it.

use rand::rngs::StdRng;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rod::{Actuation, BETA1_SPAN, BETA2_SPAN, BETA3_MIN};

/// The box of admissible actuations: chained translation inequalities plus a
/// symmetric rotation limit (pi for the full box, pi/3 for the experimental
/// restriction).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuationDomain {
    pub alpha_limit: f64,
}

impl ActuationDomain {
    pub fn full() -> Self {
        Self { alpha_limit: std::f64::consts::PI }
    }

    /// Rotations restricted to +-pi/3, as used with the experimental dataset.
    pub fn restricted() -> Self {
        Self { alpha_limit: std::f64::consts::FRAC_PI_3 }
    }

    /// Outer bounds of each translation, `(lo, hi)` per tube.
    pub fn beta_bounds(&self) -> ([f64; 3], [f64; 3]) {
        let lo = [BETA3_MIN - BETA2_SPAN - BETA1_SPAN, BETA3_MIN - BETA2_SPAN, BETA3_MIN];
        ([lo[0], lo[1], lo[2]], [0.0; 3])
    }

    pub fn contains(&self, act: &Actuation) -> bool {
        act.validate().is_ok() && act.alpha.iter().all(|a| a.abs() <= self.alpha_limit + 1e-12)
    }

    /// Uniform draw via sequential sampling of the chained inequalities.
    pub fn sample(&self, rng: &mut StdRng) -> Actuation {
        let b3 = rng.gen_range(BETA3_MIN..=0.0);
        let b2 = rng.gen_range(b3 - BETA2_SPAN..=b3);
        let b1 = rng.gen_range(b2 - BETA1_SPAN..=b2);
        let alpha: [f64; 3] = if self.alpha_limit > 0.0 {
            std::array::from_fn(|_| rng.gen_range(-self.alpha_limit..=self.alpha_limit))
        } else {
            [0.0; 3]
        };
        Actuation::new([b1, b2, b3], alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn samples_stay_inside_the_box() {
        let mut rng = StdRng::seed_from_u64(9);
        for domain in [ActuationDomain::full(), ActuationDomain::restricted()] {
            for _ in 0..10_000 {
                let act = domain.sample(&mut rng);
                assert!(domain.contains(&act), "{act:?}");
            }
        }
    }

    #[test]
    fn sampling_is_seed_reproducible() {
        let domain = ActuationDomain::full();
        let a: Vec<Actuation> =
            (0..32).map(|_| domain.sample(&mut StdRng::seed_from_u64(5))).collect();
        let b: Vec<Actuation> =
            (0..32).map(|_| domain.sample(&mut StdRng::seed_from_u64(5))).collect();
        assert_eq!(a, b);
    }
}
