//! Checks on computed coverings: containment of simulated orbits, Hausdorff
//! distances, box-counting dimension estimates and Poincaré slices.

use rayon::prelude::*;

use crate::boxcover::{BoxCollection, BoxRegion};
use crate::dde::{integrate, steps_in, DdeSystem, HistorySegment, Trajectory};
use crate::embedding::{restrict, ObservableLayout};
use crate::error::{Error, Result};

/// Embedded samples of a directly simulated trajectory.
#[derive(Debug, Clone)]
pub struct SimulatedOrbit {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub trajectory: Option<Trajectory>,
}

/// Integrates from `h0` past `transient`, then records `R(state)` every
/// `spacing` time units.
pub fn simulate_embedded_orbit(
    sys: &DdeSystem,
    layout: &ObservableLayout,
    h0: &HistorySegment,
    transient: f64,
    samples: usize,
    spacing: f64,
    step: f64,
) -> Result<SimulatedOrbit> {
    if samples == 0 {
        return Err(Error::Config("at least one sample is required".into()));
    }
    let transient_steps = if transient == 0.0 {
        0
    } else {
        steps_in(transient, step, "transient")?
    };
    let spacing_steps = if samples > 1 {
        steps_in(spacing, step, "spacing")?
    } else {
        0
    };
    let total_steps = transient_steps + (samples - 1) * spacing_steps;
    let times: Vec<f64> = (0..samples)
        .map(|i| (transient_steps + i * spacing_steps) as f64 * step)
        .collect();
    if total_steps == 0 {
        let z = restrict(h0, layout)?;
        return Ok(SimulatedOrbit {
            times,
            points: vec![z],
            trajectory: None,
        });
    }
    let run = integrate(sys, h0, total_steps as f64 * step, step)?;
    let traj = run.trajectory;
    let nodes = layout.node_times();
    let mut row = vec![0.0; sys.dim()];
    let mut points = Vec::with_capacity(samples);
    for &t in &times {
        let mut z = Vec::with_capacity(nodes.len());
        for &(c, offset) in &nodes {
            traj.evaluate_into(t + offset, &mut row)?;
            z.push(row[c]);
        }
        points.push(z);
    }
    Ok(SimulatedOrbit {
        times,
        points,
        trajectory: Some(traj),
    })
}

/// Fraction of `points` lying in an active box of `covering`.
pub fn containment(covering: &BoxCollection, points: &[Vec<f64>]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let inside = points
        .par_iter()
        .filter(|p| covering.locate(p).is_some())
        .count();
    inside as f64 / points.len() as f64
}

fn max_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `sup_{a in A} inf_{b in B} |a - b|_inf`.
pub fn directed_hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(a.par_iter()
        .map(|p| b.iter().map(|q| max_dist(p, q)).fold(f64::INFINITY, f64::min))
        .reduce(|| 0.0, f64::max))
}

/// Hausdorff distance in the max norm.
pub fn hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    Ok(directed_hausdorff(a, b)?.max(directed_hausdorff(b, a)?))
}

/// Centers of the active boxes.
pub fn box_centers(covering: &BoxCollection) -> Vec<Vec<f64>> {
    covering
        .regions()
        .map(|(_, r)| r.center().to_vec())
        .collect()
}

/// Max-norm diameter of the leaves of depth `depth` below `root`.
pub fn diameter_at_depth(root: &BoxRegion, depth: u32) -> f64 {
    let k = root.dim();
    let mut radii = root.radii().to_vec();
    for step in 0..depth as usize {
        radii[step % k] *= 0.5;
    }
    2.0 * radii.into_iter().fold(0.0, f64::max)
}

/// Least-squares slope of `ln N(depth)` against `ln(1 / diam(depth))`.
pub fn estimate_box_dimension(root: &BoxRegion, coverings: &[(u32, usize)]) -> Result<f64> {
    if coverings.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 depths, got {}",
            coverings.len()
        )));
    }
    if coverings.iter().any(|&(_, n)| n == 0) {
        return Err(Error::InsufficientData("a covering is empty".into()));
    }
    let xs: Vec<f64> = coverings
        .iter()
        .map(|&(d, _)| -diameter_at_depth(root, d).ln())
        .collect();
    let ys: Vec<f64> = coverings.iter().map(|&(_, n)| (n as f64).ln()).collect();
    let span = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - xs.iter().cloned().fold(f64::INFINITY, f64::min);
    if span < 2.0 * std::f64::consts::LN_2 - 1e-12 {
        return Err(Error::InsufficientData(
            "depths must span at least two halvings of the box size".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Boxes whose extent in `coordinate` meets `[value - thickness, value + thickness]`.
pub fn poincare_slice(
    covering: &BoxCollection,
    coordinate: usize,
    value: f64,
    thickness: f64,
) -> Result<BoxCollection> {
    if coordinate >= covering.dim() {
        return Err(Error::Config(format!(
            "coordinate {} out of range for k = {}",
            coordinate + 1,
            covering.dim()
        )));
    }
    let keep: Vec<u64> = covering
        .regions()
        .filter(|(_, r)| {
            (r.center()[coordinate] - value).abs() <= r.radii()[coordinate] + thickness
        })
        .map(|(k, _)| k)
        .collect();
    Ok(covering.retain(&keep))
}

/// `key = value` report lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
