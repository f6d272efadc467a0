//! Small numeric helpers: quaternion kinematics and cubic interpolation.
//!
//! Quaternions use scalar-first layout `[w, x, y, z]` and represent body-frame
//! angular rates through `h' = 0.5 * h ⊗ (0, u)`.

use crate::autodiff::Real;

/// Hamilton product `a ⊗ b`, scalar-first.
pub fn quat_mul<T: Real>(a: [T; 4], b: [T; 4]) -> [T; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

/// Quaternion derivative for body-frame angular rate `u`: `0.5 * h ⊗ (0, u)`.
pub fn quat_rate<T: Real>(h: [T; 4], u: [T; 3]) -> [T; 4] {
    let pure = [T::zero(), u[0], u[1], u[2]];
    let q = quat_mul(h, pure);
    [q[0].scale(0.5), q[1].scale(0.5), q[2].scale(0.5), q[3].scale(0.5)]
}

/// Rotate the body z-axis into the world frame: `R(h) * e3`.
pub fn quat_rotate_e3<T: Real>(h: [T; 4]) -> [T; 3] {
    let (w, x, y, z) = (h[0], h[1], h[2], h[3]);
    let two = T::from_f64(2.0);
    [
        two * (x * z + w * y),
        two * (y * z - w * x),
        T::one() - two * (x * x + y * y),
    ]
}

pub fn quat_norm(h: [f64; 4]) -> f64 {
    (h[0] * h[0] + h[1] * h[1] + h[2] * h[2] + h[3] * h[3]).sqrt()
}

pub fn quat_normalize(h: [f64; 4]) -> [f64; 4] {
    let n = quat_norm(h);
    [h[0] / n, h[1] / n, h[2] / n, h[3] / n]
}

/// Unit quaternion for a rotation of `angle` about the z-axis.
pub fn quat_rot_z(angle: f64) -> [f64; 4] {
    let half = 0.5 * angle;
    [half.cos(), 0.0, 0.0, half.sin()]
}

/// Geodesic distance between unit quaternions after sign alignment (q ≡ -q).
pub fn quat_geodesic(a: [f64; 4], b: [f64; 4]) -> f64 {
    let a = quat_normalize(a);
    let b = quat_normalize(b);
    let dot = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]).abs();
    2.0 * dot.min(1.0).acos()
}

/// Piecewise-cubic Hermite interpolant over a strictly increasing grid with
/// centered-difference slopes (Catmull-Rom on a nonuniform grid).
pub struct CubicInterp {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl CubicInterp {
    pub fn new(xs: &[f64], ys: &[f64]) -> Self {
        assert!(xs.len() == ys.len() && xs.len() >= 2);
        let n = xs.len();
        // Quadratic-fit derivative at `x` through three support points.
        let quad_slope = |i0: usize, i1: usize, i2: usize, x: f64| {
            let (x0, x1, x2) = (xs[i0], xs[i1], xs[i2]);
            let (y0, y1, y2) = (ys[i0], ys[i1], ys[i2]);
            y0 * (2.0 * x - x1 - x2) / ((x0 - x1) * (x0 - x2))
                + y1 * (2.0 * x - x0 - x2) / ((x1 - x0) * (x1 - x2))
                + y2 * (2.0 * x - x0 - x1) / ((x2 - x0) * (x2 - x1))
        };
        let mut slopes = vec![0.0; n];
        if n == 2 {
            let s = (ys[1] - ys[0]) / (xs[1] - xs[0]);
            slopes = vec![s, s];
        } else {
            for i in 0..n {
                slopes[i] = if i == 0 {
                    quad_slope(0, 1, 2, xs[0])
                } else if i == n - 1 {
                    quad_slope(n - 3, n - 2, n - 1, xs[n - 1])
                } else {
                    quad_slope(i - 1, i, i + 1, xs[i])
                };
            }
        }
        Self { xs: xs.to_vec(), ys: ys.to_vec(), slopes }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0] + self.slopes[0] * (x - self.xs[0]);
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1] + self.slopes[n - 1] * (x - self.xs[n - 1]);
        }
        let i = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => return self.ys[i],
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i]
            + h10 * h * self.slopes[i]
            + h01 * self.ys[i + 1]
            + h11 * h * self.slopes[i + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quat_rate_preserves_norm() {
        // h . h' = 0 for any h and body rate.
        let h = quat_normalize([0.3, -0.5, 0.7, 0.2]);
        let u = [1.3, -0.4, 2.2];
        let hd = quat_rate(h, u);
        let dot: f64 = (0..4).map(|i| h[i] * hd[i]).sum();
        assert!(dot.abs() < 1e-15);
    }

    #[test]
    fn rot_z_rotates_e3_to_itself() {
        let h = quat_rot_z(1.1);
        let e3 = quat_rotate_e3(h);
        assert_relative_eq!(e3[0], 0.0, epsilon = 1e-14);
        assert_relative_eq!(e3[1], 0.0, epsilon = 1e-14);
        assert_relative_eq!(e3[2], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn geodesic_sign_invariant() {
        let a = quat_normalize([0.9, 0.1, -0.2, 0.3]);
        let b = [-a[0], -a[1], -a[2], -a[3]];
        assert!(quat_geodesic(a, b) < 1e-7);
    }

    #[test]
    fn cubic_reproduces_cubic_polynomials_on_uniform_grid() {
        // Catmull-Rom is exact for quadratics; check tight tolerance there.
        let xs: Vec<f64> = (0..21).map(|i| i as f64 * 0.05).collect();
        let f = |x: f64| 1.5 * x * x - 0.3 * x + 2.0;
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let interp = CubicInterp::new(&xs, &ys);
        for i in 0..100 {
            let x = 0.005 + i as f64 * 0.0097;
            assert_relative_eq!(interp.eval(x), f(x), epsilon = 1e-10);
        }
    }
}
