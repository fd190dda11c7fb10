//! Closed-form maps on `R^k` with known attractors, used to exercise the
//! subdivision algorithm without a delay equation.

use crate::boxcover::BoxRegion;
use crate::error::{Error, Result};

/// Names accepted by [`SyntheticKind::from_name`].
pub const SYNTHETIC_NAMES: [&str; 5] = ["constant", "identity", "contraction", "hyperbolic", "rotation"];

/// Rotation angle of the `rotation` map, an irrational multiple of `2 pi`.
pub const ROTATION_ANGLE: f64 = 2.0 * std::f64::consts::PI * 0.618_033_988_749_894_8;

#[derive(Debug, Clone, PartialEq)]
pub enum SyntheticKind {
    /// Every point maps to the given point.
    Constant(Vec<f64>),
    Identity,
    /// `x / 2`.
    Contraction,
    /// `diag(0.5, 1.2, 1.2, ...)`: attracting in the first coordinate,
    /// expanding in the rest.
    Hyperbolic,
    /// Planar rotation by [`ROTATION_ANGLE`] with radial part
    /// `r -> r + r (1 - r) / 2`, which attracts to the unit circle and
    /// repels from the origin.
    Rotation,
}

impl SyntheticKind {
    pub fn from_name(name: &str, dim: usize) -> Result<Self> {
        let kind = match name {
            "constant" => SyntheticKind::Constant(
                (0..dim).map(|i| 0.3 - 0.1 * i as f64).collect(),
            ),
            "identity" => SyntheticKind::Identity,
            "contraction" => SyntheticKind::Contraction,
            "hyperbolic" => SyntheticKind::Hyperbolic,
            "rotation" => SyntheticKind::Rotation,
            other => {
                return Err(Error::Config(format!(
                    "unknown synthetic map {other:?}; expected one of {}",
                    SYNTHETIC_NAMES.join(", ")
                )))
            }
        };
        kind.check_dim(dim)?;
        Ok(kind)
    }

    pub fn name(&self) -> &'static str {
        match self {
            SyntheticKind::Constant(_) => "constant",
            SyntheticKind::Identity => "identity",
            SyntheticKind::Contraction => "contraction",
            SyntheticKind::Hyperbolic => "hyperbolic",
            SyntheticKind::Rotation => "rotation",
        }
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self {
            _ if dim == 0 => Err(Error::Config("dimension must be positive".into())),
            SyntheticKind::Constant(c) if c.len() != dim => Err(Error::Config(format!(
                "constant target has {} coordinates, expected {dim}",
                c.len()
            ))),
            SyntheticKind::Rotation if dim != 2 => {
                Err(Error::Config("rotation map is planar (k = 2)".into()))
            }
            _ => Ok(()),
        }
    }

    /// The study region the map is usually run on.
    pub fn default_domain(&self, dim: usize) -> BoxRegion {
        let radius = if *self == SyntheticKind::Rotation { 1.5 } else { 1.0 };
        BoxRegion::cube(dim, 0.0, radius).expect("positive radius")
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            SyntheticKind::Constant(c) => c.clone(),
            SyntheticKind::Identity => x.to_vec(),
            SyntheticKind::Contraction => x.iter().map(|v| 0.5 * v).collect(),
            SyntheticKind::Hyperbolic => x
                .iter()
                .enumerate()
                .map(|(i, v)| if i == 0 { 0.5 * v } else { 1.2 * v })
                .collect(),
            SyntheticKind::Rotation => {
                let r = x[0].hypot(x[1]);
                let scale = 1.0 + 0.5 * (1.0 - r);
                let (s, c) = ROTATION_ANGLE.sin_cos();
                vec![scale * (c * x[0] - s * x[1]), scale * (s * x[0] + c * x[1])]
            }
        }
    }
}
