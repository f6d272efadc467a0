//! Tube and robot parameters plus the snap-free actuation box.
//!
//! All values are SI (m, rad, Pa). The robot configuration file uses the
//! bench-sheet units (mm, 1/m, GPa) and is converted on load.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::RodError;

/// Lower bound on the outermost tube translation beta3 [m].
pub const BETA3_MIN: f64 = -0.010;
/// Maximum retraction of tube 2 behind tube 3 [m].
pub const BETA2_SPAN: f64 = 0.055;
/// Maximum retraction of tube 1 behind tube 2 [m].
pub const BETA1_SPAN: f64 = 0.015;

/// Geometry and material of one pre-curved tube, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubeSpec {
    pub inner_diameter: f64,
    pub outer_diameter: f64,
    pub straight_length: f64,
    pub curved_length: f64,
    /// Stress-free curvature about the tube-frame x-axis [1/m].
    pub precurvature: f64,
    pub youngs_modulus: f64,
    pub shear_modulus: f64,
}

impl TubeSpec {
    pub fn total_length(&self) -> f64 {
        self.straight_length + self.curved_length
    }

    pub fn validate(&self, tube: usize) -> Result<(), RodError> {
        let fail = |field: &'static str, message: String| {
            Err(RodError::InvalidTube { tube, field, message })
        };
        if !(self.inner_diameter > 0.0) {
            return fail("inner_diameter", format!("must be > 0, got {}", self.inner_diameter));
        }
        if !(self.outer_diameter > self.inner_diameter) {
            return fail(
                "outer_diameter",
                format!(
                    "must exceed inner_diameter {}, got {}",
                    self.inner_diameter, self.outer_diameter
                ),
            );
        }
        if !(self.straight_length >= 0.0) {
            return fail("straight_length", format!("must be >= 0, got {}", self.straight_length));
        }
        if !(self.curved_length > 0.0) {
            return fail("curved_length", format!("must be > 0, got {}", self.curved_length));
        }
        if !(self.precurvature >= 0.0) {
            return fail("precurvature", format!("must be >= 0, got {}", self.precurvature));
        }
        if !(self.youngs_modulus > 0.0) {
            return fail("youngs_modulus", format!("must be > 0, got {}", self.youngs_modulus));
        }
        if !(self.shear_modulus > 0.0) {
            return fail("shear_modulus", format!("must be > 0, got {}", self.shear_modulus));
        }
        Ok(())
    }
}

/// Three nested tubes; tube 1 is the innermost and longest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec {
    pub tubes: [TubeSpec; 3],
}

impl RobotSpec {
    pub fn validate(&self) -> Result<(), RodError> {
        for (i, t) in self.tubes.iter().enumerate() {
            t.validate(i + 1)?;
        }
        for i in 0..2 {
            let (a, b) = (self.tubes[i], self.tubes[i + 1]);
            if !(a.total_length() > b.total_length()) {
                return Err(RodError::InvalidRobot(format!(
                    "tube {} total length {} must exceed tube {} total length {}",
                    i + 1,
                    a.total_length(),
                    i + 2,
                    b.total_length()
                )));
            }
            if !(a.outer_diameter < b.inner_diameter) {
                return Err(RodError::InvalidRobot(format!(
                    "tube {} outer diameter {} must fit inside tube {} inner diameter {}",
                    i + 1,
                    a.outer_diameter,
                    i + 2,
                    b.inner_diameter
                )));
            }
        }
        Ok(())
    }

    /// The three-tube bench robot used throughout tests and defaults.
    pub fn reference() -> Self {
        let tube = |di_mm: f64, do_mm: f64, straight_mm: f64, curved_mm: f64, kappa: f64| TubeSpec {
            inner_diameter: di_mm * 1e-3,
            outer_diameter: do_mm * 1e-3,
            straight_length: straight_mm * 1e-3,
            curved_length: curved_mm * 1e-3,
            precurvature: kappa,
            youngs_modulus: 50.0e9,
            shear_modulus: 19.23e9,
        };
        Self {
            tubes: [
                tube(0.40, 0.50, 169.0, 41.0, 28.0),
                tube(0.70, 0.90, 65.0, 100.0, 12.4),
                tube(1.20, 1.50, 10.0, 100.0, 4.37),
            ],
        }
    }

    /// Longest possible backbone length (beta1 = 0).
    pub fn max_backbone_length(&self) -> f64 {
        self.tubes[0].total_length()
    }

    pub fn load(path: &Path) -> Result<Self, RodError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RodError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parse the key/value robot configuration document (bench-sheet units).
    pub fn parse(text: &str) -> Result<Self, RodError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RawTube {
            inner_diameter_mm: f64,
            outer_diameter_mm: f64,
            straight_length_mm: f64,
            curved_length_mm: f64,
            curvature_per_m: f64,
            youngs_modulus_gpa: f64,
            shear_modulus_gpa: f64,
        }
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RawRobot {
            tube: Vec<RawTube>,
        }
        let raw: RawRobot = toml::from_str(text).map_err(|e| RodError::Config(e.to_string()))?;
        if raw.tube.len() != 3 {
            return Err(RodError::Config(format!("expected 3 [[tube]] entries, got {}", raw.tube.len())));
        }
        let conv = |t: &RawTube| TubeSpec {
            inner_diameter: t.inner_diameter_mm * 1e-3,
            outer_diameter: t.outer_diameter_mm * 1e-3,
            straight_length: t.straight_length_mm * 1e-3,
            curved_length: t.curved_length_mm * 1e-3,
            precurvature: t.curvature_per_m,
            youngs_modulus: t.youngs_modulus_gpa * 1e9,
            shear_modulus: t.shear_modulus_gpa * 1e9,
        };
        let robot = Self {
            tubes: [conv(&raw.tube[0]), conv(&raw.tube[1]), conv(&raw.tube[2])],
        };
        robot.validate()?;
        Ok(robot)
    }

    /// Serialize in a canonical form and write the configuration units back out.
    pub fn to_config_string(&self) -> String {
        let mut out = String::from("# three-tube robot configuration (bench-sheet units)\n");
        for t in &self.tubes {
            out.push_str(&format!(
                "[[tube]]\ninner_diameter_mm = {}\nouter_diameter_mm = {}\nstraight_length_mm = {}\ncurved_length_mm = {}\ncurvature_per_m = {}\nyoungs_modulus_gpa = {}\nshear_modulus_gpa = {}\n\n",
                t.inner_diameter * 1e3,
                t.outer_diameter * 1e3,
                t.straight_length * 1e3,
                t.curved_length * 1e3,
                t.precurvature,
                t.youngs_modulus * 1e-9,
                t.shear_modulus * 1e-9,
            ));
        }
        out
    }

    /// Digest of the canonicalized SI parameters; embedded in weight and
    /// dataset files to prevent cross-robot misuse.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for t in &self.tubes {
            for v in [
                t.inner_diameter,
                t.outer_diameter,
                t.straight_length,
                t.curved_length,
                t.precurvature,
                t.youngs_modulus,
                t.shear_modulus,
            ] {
                hasher.update(v.to_be_bytes());
            }
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Joint values: three translations (beta <= 0) and three rotations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Actuation {
    pub beta: [f64; 3],
    pub alpha: [f64; 3],
}

impl Actuation {
    pub fn new(beta: [f64; 3], alpha: [f64; 3]) -> Self {
        Self { beta, alpha }
    }

    pub fn zero() -> Self {
        Self { beta: [0.0; 3], alpha: [0.0; 3] }
    }

    /// From a flat `[beta1, beta2, beta3, alpha1, alpha2, alpha3]` vector.
    pub fn from_vec6(v: [f64; 6]) -> Self {
        Self { beta: [v[0], v[1], v[2]], alpha: [v[3], v[4], v[5]] }
    }

    pub fn to_vec6(&self) -> [f64; 6] {
        [
            self.beta[0], self.beta[1], self.beta[2],
            self.alpha[0], self.alpha[1], self.alpha[2],
        ]
    }

    /// Check membership in the snap-free box, naming the violated inequality.
    pub fn validate(&self) -> Result<(), RodError> {
        let [b1, b2, b3] = self.beta;
        let tol = 1e-12;
        if b3 < BETA3_MIN - tol || b3 > tol {
            return Err(RodError::ActuationOutOfBox(format!(
                "-0.010 <= beta3 <= 0 violated (beta3 = {b3})"
            )));
        }
        if b2 < b3 - BETA2_SPAN - tol || b2 > b3 + tol {
            return Err(RodError::ActuationOutOfBox(format!(
                "beta3 - 0.055 <= beta2 <= beta3 violated (beta2 = {b2}, beta3 = {b3})"
            )));
        }
        if b1 < b2 - BETA1_SPAN - tol || b1 > b2 + tol {
            return Err(RodError::ActuationOutOfBox(format!(
                "beta2 - 0.015 <= beta1 <= beta2 violated (beta1 = {b1}, beta2 = {b2})"
            )));
        }
        for (i, &a) in self.alpha.iter().enumerate() {
            if !(-PI - tol..=PI + tol).contains(&a) {
                return Err(RodError::ActuationOutOfBox(format!(
                    "-pi <= alpha{} <= pi violated (alpha{} = {a})",
                    i + 1,
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Live backbone lengths `ell_i = L_i + beta_i`.
    pub fn tube_ends(&self, robot: &RobotSpec) -> [f64; 3] {
        [
            robot.tubes[0].total_length() + self.beta[0],
            robot.tubes[1].total_length() + self.beta[1],
            robot.tubes[2].total_length() + self.beta[2],
        ]
    }
}
