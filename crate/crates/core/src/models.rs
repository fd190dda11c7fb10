//! Built-in delay equations with the parameters of the reference experiments.

use crate::boxcover::BoxRegion;
use crate::dde::{DdeSystem, HistorySegment};
use crate::embedding::{EmbeddingConfig, Observable, ObservableLayout};
use crate::error::{Error, Result};

/// Names accepted by [`preset`].
pub const PRESET_NAMES: [&str; 4] = ["wright", "wright-orbit", "arneodo", "mackey-glass"];

#[derive(Debug, Clone)]
pub struct ModelPreset {
    pub name: &'static str,
    pub system: DdeSystem,
    pub embedding: EmbeddingConfig,
    /// The study region `Q`.
    pub domain: BoxRegion,
    /// Open neighbourhoods removed from `Q`.
    pub excluded: Vec<BoxRegion>,
    /// Constant initial history used for direct simulations.
    pub initial: Vec<f64>,
    pub note: &'static str,
}

impl ModelPreset {
    pub fn initial_history(&self) -> HistorySegment {
        HistorySegment::constant(self.system.tau(), &self.initial).expect("preset history is valid")
    }
}

pub fn preset(name: &str) -> Result<ModelPreset> {
    match name {
        "wright" => Ok(wright()),
        "wright-orbit" => Ok(wright_orbit(WRIGHT_HOLE_RADIUS)),
        "arneodo" => Ok(arneodo()),
        "mackey-glass" => Ok(mackey_glass()),
        other => Err(Error::Config(format!(
            "unknown preset {other:?}; expected one of {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

pub const WRIGHT_ALPHA: f64 = 2.0;

/// Half-width of the box removed around the origin in `wright-orbit`; one
/// box width at depth 20, so the hole is resolved by the grid.
pub const WRIGHT_HOLE_RADIUS: f64 = 0.25;

/// `u'(t) = -alpha u(t - 1) (1 - u(t)^2)`.
pub fn wright_system(alpha: f64) -> DdeSystem {
    DdeSystem::new(1, 1.0, move |y: &[f64], d: &[f64], out: &mut [f64]| {
        out[0] = -alpha * d[0] * (1.0 - y[0] * y[0]);
    })
    .expect("valid system")
}

/// Modified Wright equation, `alpha = 2`, `k = 5`, `m = 16`, `Q = [-2, 2]^5`.
pub fn wright() -> ModelPreset {
    let layout = ObservableLayout::scalar(1.0, 5).expect("valid layout");
    ModelPreset {
        name: "wright",
        system: wright_system(WRIGHT_ALPHA),
        embedding: EmbeddingConfig::new(layout, 16),
        domain: BoxRegion::cube(5, 0.0, 2.0).expect("valid box"),
        excluded: Vec::new(),
        initial: vec![0.1],
        note: "modified Wright equation; Hopf bifurcation of u = 0 at alpha = pi/2",
    }
}

/// [`wright`] with the open box of half-width `radius` around the origin removed.
pub fn wright_orbit(radius: f64) -> ModelPreset {
    ModelPreset {
        name: "wright-orbit",
        excluded: vec![BoxRegion::cube(5, 0.0, radius).expect("valid box")],
        note: "modified Wright equation with a neighbourhood of the origin removed",
        ..wright()
    }
}

pub const ARNEODO_ALPHA: f64 = 2.5;
pub const ARNEODO_TAU: f64 = 0.13;

/// Arneodo system with delay in the first derivative, as a first-order system.
pub fn arneodo_system(alpha: f64, tau: f64) -> DdeSystem {
    DdeSystem::new(3, tau, move |y: &[f64], d: &[f64], out: &mut [f64]| {
        out[0] = y[1];
        out[1] = y[2];
        out[2] = -y[2] - 2.0 * d[1] + alpha * y[0] - y[0] * y[0];
    })
    .expect("valid system")
}

/// Observes `(u2(-tau), u2(-tau/2), u2(0), u1(0), u3(0))` with `omega = tau / 2`.
pub fn arneodo_layout(tau: f64) -> ObservableLayout {
    ObservableLayout::new(
        tau,
        3,
        2,
        vec![
            Observable::new(1, -tau, 3, 2),
            Observable::new(0, 0.0, 1, 1),
            Observable::new(2, 0.0, 1, 1),
        ],
    )
    .expect("valid layout")
}

/// Delayed Arneodo system, `alpha = 2.5`, `tau = 0.13`, `k = 5`, `m = 15`.
///
/// `Q` is `[-1, 5]` for `u1`, `[-4, 2]` for the first `u2` sample and
/// `[-4, 4]` otherwise, listed in the order of [`arneodo_layout`].
pub fn arneodo() -> ModelPreset {
    ModelPreset {
        name: "arneodo",
        system: arneodo_system(ARNEODO_ALPHA, ARNEODO_TAU),
        embedding: EmbeddingConfig::new(arneodo_layout(ARNEODO_TAU), 15),
        domain: BoxRegion::from_bounds(
            &[-4.0, -4.0, -4.0, -1.0, -4.0],
            &[2.0, 4.0, 4.0, 5.0, 4.0],
        )
        .expect("valid box"),
        excluded: Vec::new(),
        initial: vec![0.1, 0.0, 0.0],
        note: "Arneodo system with delayed first derivative; period-doubled cycle",
    }
}

pub const MACKEY_GLASS_BETA: f64 = 2.0;
pub const MACKEY_GLASS_GAMMA: f64 = 1.0;
pub const MACKEY_GLASS_ETA: f64 = 9.65;
pub const MACKEY_GLASS_TAU: f64 = 2.0;

/// `u' = beta u(t - tau) / (1 + u(t - tau)^eta) - gamma u(t)`.
///
/// The fractional power is undefined for negative delayed values; those
/// produce NaN and are reported by the integrator as non-finite states.
pub fn mackey_glass_system(beta: f64, gamma: f64, eta: f64, tau: f64) -> DdeSystem {
    DdeSystem::new(1, tau, move |y: &[f64], d: &[f64], out: &mut [f64]| {
        let u = d[0];
        out[0] = beta * u / (1.0 + u.powf(eta)) - gamma * y[0];
    })
    .expect("valid system")
}

/// Mackey-Glass, `beta = 2`, `gamma = 1`, `eta = 9.65`, `tau = 2`, `k = 7`,
/// `Q = [0, 1.5]^7`, `m = 12`.
pub fn mackey_glass() -> ModelPreset {
    let layout = ObservableLayout::scalar(MACKEY_GLASS_TAU, 7).expect("valid layout");
    ModelPreset {
        name: "mackey-glass",
        system: mackey_glass_system(
            MACKEY_GLASS_BETA,
            MACKEY_GLASS_GAMMA,
            MACKEY_GLASS_ETA,
            MACKEY_GLASS_TAU,
        ),
        embedding: EmbeddingConfig::new(layout, 12),
        domain: BoxRegion::cube(7, 0.75, 0.75).expect("valid box"),
        excluded: Vec::new(),
        initial: vec![0.5],
        note: "Mackey-Glass blood production model",
    }
}

/// `y'(t) = a y(t) + b y(t - tau)`.
pub fn linear_system(a: f64, b: f64, tau: f64) -> Result<DdeSystem> {
    DdeSystem::new(1, tau, move |y: &[f64], d: &[f64], out: &mut [f64]| {
        out[0] = a * y[0] + b * d[0];
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wright_rhs() {
        let s = wright_system(WRIGHT_ALPHA);
        assert_eq!(s.rhs(&[0.0], &[0.0]), vec![0.0]);
        assert_eq!(s.rhs(&[0.5], &[1.0]), vec![-1.5]);
    }

    #[test]
    fn wright_preset_parameters() {
        let p = wright();
        assert_eq!(p.embedding.dim(), 5);
        assert_eq!(p.embedding.m, 16);
        assert_eq!(p.embedding.layout.divisor(), 4);
        assert_eq!(p.domain.lower(), vec![-2.0; 5]);
        assert_eq!(p.domain.upper(), vec![2.0; 5]);
        let o = wright_orbit(0.1);
        assert_eq!(o.excluded.len(), 1);
        assert!(o.excluded[0].contains_interior(&[0.0; 5]));
    }

    #[test]
    fn arneodo_equilibria() {
        let s = arneodo_system(ARNEODO_ALPHA, ARNEODO_TAU);
        assert_eq!(s.rhs(&[0.0; 3], &[0.0; 3]), vec![0.0; 3]);
        let o2 = [ARNEODO_ALPHA, 0.0, 0.0];
        assert_eq!(s.rhs(&o2, &o2), vec![0.0; 3]);
        assert_eq!(s.rhs(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]), vec![0.0, 0.0, 1.5]);
    }

    #[test]
    fn arneodo_preset_parameters() {
        let p = arneodo();
        assert_eq!(p.embedding.dim(), 5);
        assert_eq!(p.embedding.m, 15);
        assert_eq!(p.system.tau(), 0.13);
        assert!((p.embedding.layout.omega() - 0.065).abs() < 1e-15);
        assert_eq!(p.domain.lower(), vec![-4.0, -4.0, -4.0, -1.0, -4.0]);
        assert_eq!(p.domain.upper(), vec![2.0, 4.0, 4.0, 5.0, 4.0]);
    }

    #[test]
    fn mackey_glass_rhs_and_preset() {
        let s = mackey_glass_system(2.0, 1.0, 9.65, 2.0);
        assert!(s.rhs(&[1.0], &[1.0])[0].abs() < 1e-15);
        assert_eq!(s.rhs(&[0.0], &[0.0]), vec![0.0]);
        assert!(s.rhs(&[0.1], &[-0.1])[0].is_nan());
        let p = mackey_glass();
        assert_eq!(p.embedding.dim(), 7);
        assert_eq!(p.domain.lower(), vec![0.0; 7]);
        assert_eq!(p.domain.upper(), vec![1.5; 7]);
        assert_eq!(p.system.tau(), 2.0);
        assert_eq!(p.embedding.m, 12);
        assert!((p.embedding.duration() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn preset_lookup() {
        for name in PRESET_NAMES {
            assert_eq!(preset(name).unwrap().name, name);
        }
        assert!(preset("lorenz").is_err());
    }
}
