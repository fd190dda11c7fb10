//! Observation map `R`, embeddings `E` and the finite-dimensional map
//! `phi_m = R o Phi^m o E` acting on delay coordinates.
//!
//! `R` samples a state at the layout's node times. The first `E` is
//! piecewise linear through those nodes; once an image has been computed,
//! the dense samples of that image (the bootstrap payload) are reused to
//! build a natural cubic spline through the new node values, so that
//! `E(R(u))` stays close to `u` on the attractor.

use crate::dde::{integrate, DdeSystem, HistorySegment};
use crate::error::{Error, Result};
use crate::spline::NaturalSpline;

/// Default number of extra samples stored per node interval.
pub const DEFAULT_EXTRAS: usize = 3;

/// Largest refinement tried when searching for a grid containing all nodes.
const MAX_RESOLUTION_FACTOR: usize = 64;

/// A scalar observable `u -> u_c(nu + i * tau / divisor)`, `i = 0..count`.
///
/// `component` is zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub component: usize,
    pub nu: f64,
    pub count: usize,
    pub divisor: usize,
}

impl Observable {
    pub fn new(component: usize, nu: f64, count: usize, divisor: usize) -> Self {
        Observable {
            component,
            nu,
            count,
            divisor,
        }
    }

    fn times(&self, tau: f64) -> impl Iterator<Item = f64> + '_ {
        let span = tau / self.divisor as f64;
        (0..self.count).map(move |i| self.nu + i as f64 * span)
    }
}

/// The ordered observables defining `R`, plus the global divisor `K` of the
/// time-`omega` map with `omega = tau / K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableLayout {
    tau: f64,
    state_dim: usize,
    divisor: usize,
    observables: Vec<Observable>,
    /// Cells of the coarsest uniform grid on `[-tau, 0]` holding every node.
    resolution: usize,
    /// Per output coordinate: (component, grid index at `resolution`).
    nodes: Vec<(usize, usize)>,
}

impl ObservableLayout {
    pub fn new(
        tau: f64,
        state_dim: usize,
        divisor: usize,
        observables: Vec<Observable>,
    ) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::LayoutMismatch(format!("delay {tau} is not positive")));
        }
        if divisor == 0 {
            return Err(Error::LayoutMismatch("divisor K must be at least 1".into()));
        }
        if observables.is_empty() {
            return Err(Error::LayoutMismatch("layout has no observables".into()));
        }
        let tol = 1e-12 * tau.max(1.0);
        for (j, o) in observables.iter().enumerate() {
            if o.component >= state_dim {
                return Err(Error::LayoutMismatch(format!(
                    "observable {} reads component {} of a {state_dim}-dimensional state",
                    j + 1,
                    o.component + 1
                )));
            }
            if o.count == 0 || o.divisor == 0 {
                return Err(Error::LayoutMismatch(format!(
                    "observable {} needs count >= 1 and divisor >= 1",
                    j + 1
                )));
            }
            let last = o.nu + (o.count - 1) as f64 * tau / o.divisor as f64;
            if o.nu < -tau - tol || last > tol {
                return Err(Error::LayoutMismatch(format!(
                    "observable {} samples [{}, {last}] outside [-{tau}, 0]",
                    j + 1,
                    o.nu
                )));
            }
        }

        let base = observables
            .iter()
            .filter(|o| o.count > 1)
            .fold(divisor, |acc, o| lcm(acc, o.divisor));
        let resolution = (1..=MAX_RESOLUTION_FACTOR)
            .map(|q| base * q)
            .find(|&cells| {
                observables
                    .iter()
                    .flat_map(|o| o.times(tau))
                    .all(|t| grid_index(tau, cells, t).is_some())
            })
            .ok_or_else(|| {
                Error::LayoutMismatch("observable times do not lie on a common uniform grid".into())
            })?;

        let mut nodes = Vec::new();
        for o in &observables {
            for t in o.times(tau) {
                let idx = grid_index(tau, resolution, t).expect("checked above");
                if nodes.contains(&(o.component, idx)) {
                    return Err(Error::LayoutMismatch(format!(
                        "component {} is observed twice at t = {t}",
                        o.component + 1
                    )));
                }
                nodes.push((o.component, idx));
            }
        }

        Ok(ObservableLayout {
            tau,
            state_dim,
            divisor,
            observables,
            resolution,
            nodes,
        })
    }

    /// Scalar layout observing `u(-tau + i * tau / (k - 1))`, `i = 0..k`.
    pub fn scalar(tau: f64, k: usize) -> Result<Self> {
        let divisor = k.saturating_sub(1).max(1);
        ObservableLayout::new(tau, 1, divisor, vec![Observable::new(0, -tau, k, divisor)])
    }

    /// Embedding dimension `k`.
    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn divisor(&self) -> usize {
        self.divisor
    }

    pub fn omega(&self) -> f64 {
        self.tau / self.divisor as f64
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// (component, time) read by each output coordinate, in order.
    pub fn node_times(&self) -> Vec<(usize, f64)> {
        self.nodes
            .iter()
            .map(|&(c, i)| (c, node_time(self.tau, self.resolution, i)))
            .collect()
    }

    fn check_state(&self, state: &HistorySegment) -> Result<()> {
        if (state.tau() - self.tau).abs() > 1e-12 * self.tau.max(1.0) {
            return Err(Error::LayoutMismatch(format!(
                "state delay {} differs from layout delay {}",
                state.tau(),
                self.tau
            )));
        }
        if state.dim() != self.state_dim {
            return Err(Error::LayoutMismatch(format!(
                "state has dimension {}, layout expects {}",
                state.dim(),
                self.state_dim
            )));
        }
        Ok(())
    }

    fn check_point(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::LayoutMismatch(format!(
                "point has {} coordinates, layout has {}",
                z.len(),
                self.dim()
            )));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::LayoutMismatch("point has non-finite coordinates".into()));
        }
        Ok(())
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

fn node_time(tau: f64, cells: usize, i: usize) -> f64 {
    if i == cells {
        0.0
    } else {
        -tau + i as f64 * (tau / cells as f64)
    }
}

fn grid_index(tau: f64, cells: usize, t: f64) -> Option<usize> {
    let s = (t + tau) / tau * cells as f64;
    let r = s.round();
    ((s - r).abs() < 1e-9 && r >= 0.0 && r <= cells as f64).then_some(r as usize)
}

/// Parameters of `phi_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingConfig {
    pub layout: ObservableLayout,
    /// Iteration exponent `m`.
    pub m: usize,
    /// Upper bound on the box-counting dimension of the attractor.
    pub d_bound: Option<f64>,
    /// Upper bound on the thickness exponent.
    pub sigma_bound: Option<f64>,
    /// Extra samples stored per interval of length `omega` (bootstrap).
    pub extras: usize,
    /// Integrator step; must divide `omega`.
    pub step: f64,
}

impl EmbeddingConfig {
    pub fn new(layout: ObservableLayout, m: usize) -> Self {
        let step = default_step(&layout);
        EmbeddingConfig {
            layout,
            m,
            d_bound: None,
            sigma_bound: None,
            extras: DEFAULT_EXTRAS,
            step,
        }
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    /// Integration time `m * omega` of one application of `phi_m`.
    pub fn duration(&self) -> f64 {
        self.m as f64 * self.layout.omega()
    }

    /// Checks hard constraints and returns soft warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.m == 0 {
            return Err(Error::Config("iteration exponent m must be at least 1".into()));
        }
        crate::dde::steps_in(self.layout.tau(), self.step, "tau")?;
        crate::dde::steps_in(self.layout.omega(), self.step, "omega")?;
        let mut warnings = Vec::new();
        if let Some(d) = self.d_bound {
            let sigma = self.sigma_bound.unwrap_or(0.0);
            let needed = 2.0 * (1.0 + sigma) * d;
            if (self.dim() as f64) <= needed {
                warnings.push(format!(
                    "embedding dimension k = {} does not exceed 2(1 + sigma) d = {needed}; \
                     the delay coordinates may fail to be one-to-one on the attractor",
                    self.dim()
                ));
            }
        }
        Ok(warnings)
    }
}

/// `omega / ceil(256 / K)`: `tau / 256` whenever `K` divides 256.
pub fn default_step(layout: &ObservableLayout) -> f64 {
    let k = layout.divisor();
    layout.omega() / 256usize.div_ceil(k) as f64
}

/// Dense samples of an image state kept with the box it landed in.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapPayload {
    /// The image point `R(Phi^m(E(z)))`.
    pub z: Vec<f64>,
    extras: usize,
    /// Full state at `-tau + j * omega / (extras + 1)`, row-major.
    samples: Vec<f64>,
}

impl BootstrapPayload {
    pub fn extras(&self) -> usize {
        self.extras
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Reads the payload of `state` for the given layout.
    pub fn from_state(
        state: &HistorySegment,
        layout: &ObservableLayout,
        extras: usize,
    ) -> Result<Self> {
        let z = restrict(state, layout)?;
        let cells = layout.divisor() * (extras + 1);
        let n = state.dim();
        let mut samples = vec![0.0; (cells + 1) * n];
        for (j, row) in samples.chunks_exact_mut(n).enumerate() {
            state.evaluate_into(node_time(layout.tau(), cells, j), row)?;
        }
        Ok(BootstrapPayload {
            z,
            extras,
            samples,
        })
    }
}

/// Observation map: reads the layout's nodes off `state`.
pub fn restrict(state: &HistorySegment, layout: &ObservableLayout) -> Result<Vec<f64>> {
    layout.check_state(state)?;
    let mut out = Vec::with_capacity(layout.dim());
    let mut row = vec![0.0; state.dim()];
    for (c, t) in layout.node_times() {
        state.evaluate_into(t, &mut row)?;
        out.push(row[c]);
    }
    Ok(out)
}

/// Piecewise-linear history through the nodes of `z`; components observed at
/// a single time are constant, unobserved components are zero.
pub fn embed_initial(z: &[f64], layout: &ObservableLayout) -> Result<HistorySegment> {
    layout.check_point(z)?;
    let n = layout.state_dim();
    let cells = layout.resolution();
    let mut values = vec![0.0; (cells + 1) * n];
    for c in 0..n {
        let mut nodes: Vec<(usize, f64)> = layout
            .nodes
            .iter()
            .zip(z)
            .filter(|((comp, _), _)| *comp == c)
            .map(|(&(_, idx), &v)| (idx, v))
            .collect();
        nodes.sort_by_key(|&(idx, _)| idx);
        let Some(&(first_idx, first_val)) = nodes.first() else {
            continue;
        };
        let &(last_idx, last_val) = nodes.last().expect("non-empty");
        let mut seg = 0;
        for i in 0..=cells {
            let v = if i <= first_idx {
                first_val
            } else if i >= last_idx {
                last_val
            } else {
                while nodes[seg + 1].0 < i {
                    seg += 1;
                }
                let (i0, v0) = nodes[seg];
                let (i1, v1) = nodes[seg + 1];
                if i == i1 {
                    v1
                } else {
                    let w = (i - i0) as f64 / (i1 - i0) as f64;
                    (1.0 - w) * v0 + w * v1
                }
            };
            values[i * n + c] = v;
        }
    }
    HistorySegment::new(layout.tau(), n, values, None)
}

/// Spline history through the nodes of `z` and the stored samples of
/// `payload` (node values of `z` take precedence where both exist).
pub fn embed_bootstrap(
    z: &[f64],
    payload: &BootstrapPayload,
    layout: &ObservableLayout,
) -> Result<HistorySegment> {
    layout.check_point(z)?;
    let n = layout.state_dim();
    let sample_cells = layout.divisor() * (payload.extras + 1);
    if payload.samples.len() != (sample_cells + 1) * n {
        return Err(Error::LayoutMismatch(format!(
            "payload holds {} samples, layout expects {}",
            payload.samples.len(),
            (sample_cells + 1) * n
        )));
    }
    let cells = lcm(layout.resolution(), sample_cells);
    let sample_stride = cells / sample_cells;
    let node_stride = cells / layout.resolution();
    let tau = layout.tau();

    let mut values = vec![0.0; (cells + 1) * n];
    let mut derivs = vec![0.0; (cells + 1) * n];
    for c in 0..n {
        // Knots as grid indices on the refined grid.
        let mut knots: Vec<(usize, f64)> = (0..=sample_cells)
            .map(|j| (j * sample_stride, payload.samples[j * n + c]))
            .collect();
        for (&(comp, idx), &v) in layout.nodes.iter().zip(z) {
            if comp != c {
                continue;
            }
            let g = idx * node_stride;
            match knots.binary_search_by_key(&g, |&(i, _)| i) {
                Ok(pos) => knots[pos].1 = v,
                Err(pos) => knots.insert(pos, (g, v)),
            }
        }
        let spline = NaturalSpline::new(
            knots.iter().map(|&(i, _)| node_time(tau, cells, i)).collect(),
            knots.iter().map(|&(_, v)| v).collect(),
        )?;
        for i in 0..=cells {
            let t = node_time(tau, cells, i);
            values[i * n + c] = spline.value(t);
            derivs[i * n + c] = spline.derivative(t);
        }
        for &(i, v) in &knots {
            values[i * n + c] = v;
        }
    }
    HistorySegment::new(tau, n, values, Some(derivs))
}

/// `phi_m` for a fixed system and configuration.
#[derive(Debug, Clone)]
pub struct EmbeddedMap {
    system: DdeSystem,
    config: EmbeddingConfig,
}

impl EmbeddedMap {
    pub fn new(system: DdeSystem, config: EmbeddingConfig) -> Result<Self> {
        if system.dim() != config.layout.state_dim() {
            return Err(Error::LayoutMismatch(format!(
                "system has dimension {}, layout expects {}",
                system.dim(),
                config.layout.state_dim()
            )));
        }
        if (system.tau() - config.layout.tau()).abs() > 1e-12 * system.tau().max(1.0) {
            return Err(Error::LayoutMismatch(format!(
                "system delay {} differs from layout delay {}",
                system.tau(),
                config.layout.tau()
            )));
        }
        config.validate()?;
        Ok(EmbeddedMap { system, config })
    }

    pub fn system(&self) -> &DdeSystem {
        &self.system
    }

    pub fn config(&self) -> &EmbeddingConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.config.dim()
    }

    /// The history used as initial condition for `z`.
    pub fn embed(&self, z: &[f64], payload: Option<&BootstrapPayload>) -> Result<HistorySegment> {
        match payload {
            Some(p) => embed_bootstrap(z, p, &self.config.layout),
            None => embed_initial(z, &self.config.layout),
        }
    }

    /// Evaluates `phi_m(z)` and returns the image with its payload.
    pub fn apply(
        &self,
        z: &[f64],
        payload: Option<&BootstrapPayload>,
    ) -> Result<(Vec<f64>, BootstrapPayload)> {
        let h0 = self.embed(z, payload)?;
        let run = integrate(&self.system, &h0, self.config.duration(), self.config.step)?;
        let next =
            BootstrapPayload::from_state(&run.final_state, &self.config.layout, self.config.extras)?;
        Ok((next.z.clone(), next))
    }
}

/// One-shot form of [`EmbeddedMap::apply`].
pub fn phi(
    z: &[f64],
    cfg: &EmbeddingConfig,
    sys: &DdeSystem,
    payload: Option<&BootstrapPayload>,
) -> Result<(Vec<f64>, BootstrapPayload)> {
    EmbeddedMap::new(sys.clone(), cfg.clone())?.apply(z, payload)
}
