//! Delay differential equations `y'(t) = g(y(t), y(t - tau))`: states are
//! functions on `[-tau, 0]`, and the flow is integrated by the method of steps
//! with classical RK4 and cubic Hermite dense output.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Absolute slack accepted when a time is checked against `[-tau, 0]`.
pub const TIME_TOLERANCE: f64 = 1e-12;

/// Right-hand side `g(y, y_delayed)` of a DDE with a single constant delay.
pub trait VectorField: Send + Sync {
    fn eval(&self, y: &[f64], delayed: &[f64], out: &mut [f64]);
}

impl<F> VectorField for F
where
    F: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync,
{
    fn eval(&self, y: &[f64], delayed: &[f64], out: &mut [f64]) {
        self(y, delayed, out)
    }
}

#[derive(Clone)]
pub struct DdeSystem {
    n: usize,
    tau: f64,
    rhs: Arc<dyn VectorField>,
}

impl DdeSystem {
    pub fn new(n: usize, tau: f64, rhs: impl VectorField + 'static) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("state dimension must be positive".into()));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Config(format!("delay must be positive, got {tau}")));
        }
        Ok(DdeSystem {
            n,
            tau,
            rhs: Arc::new(rhs),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    #[inline]
    pub fn eval(&self, y: &[f64], delayed: &[f64], out: &mut [f64]) {
        self.rhs.eval(y, delayed, out)
    }

    /// Convenience wrapper returning a fresh vector.
    pub fn rhs(&self, y: &[f64], delayed: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.eval(y, delayed, &mut out);
        out
    }
}

impl fmt::Debug for DdeSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DdeSystem")
            .field("n", &self.n)
            .field("tau", &self.tau)
            .finish_non_exhaustive()
    }
}

/// A state of the DDE: a function `[-tau, 0] -> R^n` sampled on the uniform
/// grid `t_i = -tau + i * tau / M`, `i = 0..=M`.
///
/// Without derivative samples the segment is interpolated linearly; with
/// them, by cubic Hermite interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct HistorySegment {
    n: usize,
    tau: f64,
    cells: usize,
    values: Vec<f64>,
    derivs: Option<Vec<f64>>,
}

impl HistorySegment {
    /// Builds a segment from row-major samples (`(cells + 1) * n` entries).
    pub fn new(
        tau: f64,
        n: usize,
        values: Vec<f64>,
        derivs: Option<Vec<f64>>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSegment("zero state dimension".into()));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidSegment(format!("delay {tau} is not positive")));
        }
        if values.len() % n != 0 || values.len() / n < 2 {
            return Err(Error::InvalidSegment(format!(
                "{} samples do not form at least two rows of width {n}",
                values.len()
            )));
        }
        if let Some(d) = &derivs {
            if d.len() != values.len() {
                return Err(Error::InvalidSegment(
                    "derivative samples differ in shape from values".into(),
                ));
            }
        }
        Ok(HistorySegment {
            n,
            tau,
            cells: values.len() / n - 1,
            values,
            derivs,
        })
    }

    pub fn constant(tau: f64, value: &[f64]) -> Result<Self> {
        let mut values = value.to_vec();
        values.extend_from_slice(value);
        HistorySegment::new(tau, value.len(), values, None)
    }

    /// Samples `f` on a grid of `cells` cells; linear interpolation in between.
    pub fn from_fn(
        tau: f64,
        n: usize,
        cells: usize,
        mut f: impl FnMut(f64, &mut [f64]),
    ) -> Result<Self> {
        let mut values = vec![0.0; (cells + 1) * n];
        for (i, row) in values.chunks_exact_mut(n).enumerate() {
            f(grid_time(tau, cells, i), row);
        }
        HistorySegment::new(tau, n, values, None)
    }

    /// Samples `f` and its derivative `df`; Hermite interpolation in between.
    pub fn from_fn_with_derivs(
        tau: f64,
        n: usize,
        cells: usize,
        mut f: impl FnMut(f64, &mut [f64]),
        mut df: impl FnMut(f64, &mut [f64]),
    ) -> Result<Self> {
        let mut values = vec![0.0; (cells + 1) * n];
        let mut derivs = vec![0.0; (cells + 1) * n];
        for i in 0..=cells {
            let t = grid_time(tau, cells, i);
            f(t, &mut values[i * n..(i + 1) * n]);
            df(t, &mut derivs[i * n..(i + 1) * n]);
        }
        HistorySegment::new(tau, n, values, Some(derivs))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Number of grid cells `M`.
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn node_time(&self, i: usize) -> f64 {
        grid_time(self.tau, self.cells, i)
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivs(&self) -> Option<&[f64]> {
        self.derivs.as_deref()
    }

    pub fn has_derivs(&self) -> bool {
        self.derivs.is_some()
    }

    /// Value at the right end `t = 0`.
    pub fn head(&self) -> &[f64] {
        self.node(self.cells)
    }

    /// Locates `t` as (cell index, local coordinate in [0, 1]). Grid nodes are
    /// snapped so that node evaluations are exact.
    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        if !(t >= -self.tau - TIME_TOLERANCE && t <= TIME_TOLERANCE) {
            return Err(Error::OutOfDomain { t, lo: -self.tau });
        }
        let s = (t + self.tau) / self.tau * self.cells as f64;
        let s = s.clamp(0.0, self.cells as f64);
        let nearest = s.round();
        if (s - nearest).abs() < 1e-9 {
            let i = nearest as usize;
            return Ok(if i == self.cells {
                (i - 1, 1.0)
            } else {
                (i, 0.0)
            });
        }
        let i = (s.floor() as usize).min(self.cells - 1);
        Ok((i, s - i as f64))
    }

    pub fn evaluate(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n];
        self.evaluate_into(t, &mut out)?;
        Ok(out)
    }

    pub fn evaluate_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        let (i, theta) = self.locate(t)?;
        let n = self.n;
        let y0 = &self.values[i * n..(i + 1) * n];
        let y1 = &self.values[(i + 1) * n..(i + 2) * n];
        if theta == 0.0 {
            out.copy_from_slice(y0);
            return Ok(());
        }
        if theta == 1.0 {
            out.copy_from_slice(y1);
            return Ok(());
        }
        match &self.derivs {
            None => {
                for c in 0..n {
                    out[c] = (1.0 - theta) * y0[c] + theta * y1[c];
                }
            }
            Some(d) => {
                let d0 = &d[i * n..(i + 1) * n];
                let d1 = &d[(i + 1) * n..(i + 2) * n];
                hermite(theta, self.spacing(), y0, d0, y1, d1, out);
            }
        }
        Ok(())
    }

    /// Time derivative of the interpolant. Piecewise-linear segments report
    /// the slope of the cell to the right of a node (left cell at `t = 0`).
    pub fn derivative_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        let (i, theta) = self.locate(t)?;
        let n = self.n;
        let dt = self.spacing();
        match &self.derivs {
            Some(d) if theta == 0.0 => out.copy_from_slice(&d[i * n..(i + 1) * n]),
            Some(d) if theta == 1.0 => out.copy_from_slice(&d[(i + 1) * n..(i + 2) * n]),
            Some(d) => {
                let y0 = &self.values[i * n..(i + 1) * n];
                let y1 = &self.values[(i + 1) * n..(i + 2) * n];
                let d0 = &d[i * n..(i + 1) * n];
                let d1 = &d[(i + 1) * n..(i + 2) * n];
                let th2 = theta * theta;
                for c in 0..n {
                    out[c] = (6.0 * th2 - 6.0 * theta) / dt * (y0[c] - y1[c])
                        + (3.0 * th2 - 4.0 * theta + 1.0) * d0[c]
                        + (3.0 * th2 - 2.0 * theta) * d1[c];
                }
            }
            None => {
                for c in 0..n {
                    out[c] = (self.values[(i + 1) * n + c] - self.values[i * n + c]) / dt;
                }
            }
        }
        Ok(())
    }

    fn spacing(&self) -> f64 {
        self.tau / self.cells as f64
    }
}

fn grid_time(tau: f64, cells: usize, i: usize) -> f64 {
    if i == cells {
        0.0
    } else {
        -tau + i as f64 * (tau / cells as f64)
    }
}

#[inline]
fn hermite(theta: f64, dt: f64, y0: &[f64], d0: &[f64], y1: &[f64], d1: &[f64], out: &mut [f64]) {
    let th2 = theta * theta;
    let th3 = th2 * theta;
    let h00 = 2.0 * th3 - 3.0 * th2 + 1.0;
    let h10 = (th3 - 2.0 * th2 + theta) * dt;
    let h01 = -2.0 * th3 + 3.0 * th2;
    let h11 = (th3 - th2) * dt;
    for c in 0..out.len() {
        out[c] = h00 * y0[c] + h10 * d0[c] + h01 * y1[c] + h11 * d1[c];
    }
}

/// Number of steps of size `step` in `value`, if `step` divides it.
pub fn steps_in(value: f64, step: f64, what: &'static str) -> Result<usize> {
    let ratio = value / step;
    let count = ratio.round();
    if !(step > 0.0) || !ratio.is_finite() || count < 1.0 || (ratio - count).abs() > 1e-12 * ratio.max(1.0) {
        return Err(Error::StepMismatch { step, what, value });
    }
    Ok(count as usize)
}

/// Samples of a solution on the uniform step grid `-tau + r * step`, together
/// with the vector field evaluated at every node. Rows before `t = 0` are
/// resampled from the initial history.
#[derive(Debug, Clone)]
pub struct Trajectory {
    n: usize,
    step: f64,
    history_rows: usize,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn start(&self) -> f64 {
        -(self.history_rows as f64) * self.step
    }

    pub fn end(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn time(&self, row: usize) -> f64 {
        (row as f64 - self.history_rows as f64) * self.step
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.n..(row + 1) * self.n]
    }

    pub fn deriv_row(&self, row: usize) -> &[f64] {
        &self.derivs[row * self.n..(row + 1) * self.n]
    }

    /// Row index of time `t` if it lies on the grid.
    pub fn row_at(&self, t: f64) -> Option<usize> {
        let s = t / self.step + self.history_rows as f64;
        let r = s.round();
        ((s - r).abs() < 1e-9 && r >= 0.0 && (r as usize) < self.len()).then_some(r as usize)
    }

    /// Hermite interpolation of the stored solution.
    pub fn evaluate_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        let lo = self.start();
        let hi = self.end();
        if !(t >= lo - TIME_TOLERANCE && t <= hi + TIME_TOLERANCE) {
            return Err(Error::OutOfDomain { t, lo });
        }
        if let Some(r) = self.row_at(t) {
            out.copy_from_slice(self.row(r));
            return Ok(());
        }
        let s = ((t - lo) / self.step).clamp(0.0, (self.len() - 1) as f64);
        let i = (s.floor() as usize).min(self.len() - 2);
        hermite(
            s - i as f64,
            self.step,
            self.row(i),
            self.deriv_row(i),
            self.row(i + 1),
            self.deriv_row(i + 1),
            out,
        );
        Ok(())
    }

    /// Writes `t v_1 ... v_n` per row with 17 significant digits.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        for r in 0..self.len() {
            write_sample_line(&mut w, self.time(r), self.row(r))?;
        }
        Ok(())
    }
}

/// One line of the trajectory text format.
pub fn write_sample_line<W: Write>(w: &mut W, t: f64, values: &[f64]) -> io::Result<()> {
    write!(w, "{t:.16e}")?;
    for v in values {
        write!(w, " {v:.16e}")?;
    }
    writeln!(w)
}

/// Parses the trajectory text format into `(t, values)` rows.
pub fn read_samples(text: &str) -> Result<Vec<(f64, Vec<f64>)>> {
    let mut rows = Vec::new();
    let mut width = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums = line
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Error::format("trajectory", format!("line {}: {e}", lineno + 1)))?;
        if nums.len() < 2 {
            return Err(Error::format(
                "trajectory",
                format!("line {}: expected time and at least one value", lineno + 1),
            ));
        }
        if *width.get_or_insert(nums.len()) != nums.len() {
            return Err(Error::format(
                "trajectory",
                format!("line {}: inconsistent column count", lineno + 1),
            ));
        }
        rows.push((nums[0], nums[1..].to_vec()));
    }
    Ok(rows)
}

/// Result of [`integrate`].
#[derive(Debug, Clone)]
pub struct Integration {
    /// `t -> y(duration + t)` on `[-tau, 0]`, with derivatives from the vector field.
    pub final_state: HistorySegment,
    pub trajectory: Trajectory,
}

/// Integrates `sys` from the initial history `h0` over `duration` with the
/// fixed step `step`, which must divide both the delay and the duration.
pub fn integrate(
    sys: &DdeSystem,
    h0: &HistorySegment,
    duration: f64,
    step: f64,
) -> Result<Integration> {
    let n = sys.dim();
    let tau = sys.tau();
    if h0.dim() != n {
        return Err(Error::InvalidSegment(format!(
            "history has dimension {}, system has {n}",
            h0.dim()
        )));
    }
    if (h0.tau() - tau).abs() > TIME_TOLERANCE * tau.max(1.0) {
        return Err(Error::InvalidSegment(format!(
            "history delay {} differs from system delay {tau}",
            h0.tau()
        )));
    }
    let delay_steps = steps_in(tau, step, "tau")?;
    let steps = steps_in(duration, step, "duration")?;
    let rows = delay_steps + steps + 1;

    let mut values = vec![0.0; rows * n];
    let mut derivs = vec![0.0; rows * n];
    for r in 0..=delay_steps {
        let t = if r == delay_steps {
            0.0
        } else {
            -tau + r as f64 * step
        };
        h0.evaluate_into(t, &mut values[r * n..(r + 1) * n])?;
        h0.derivative_into(t, &mut derivs[r * n..(r + 1) * n])?;
    }
    // Right derivative at t = 0 comes from the vector field.
    {
        let (hist, rest) = values.split_at(delay_steps * n);
        sys.eval(&rest[..n], &hist[..n], &mut derivs[delay_steps * n..(delay_steps + 1) * n]);
    }

    let mut stage = vec![0.0; n];
    let mut mid = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let half = 0.5 * step;

    for s in 0..steps {
        let cur = delay_steps + s;
        let t = s as f64 * step;
        let (done, next) = values.split_at_mut((cur + 1) * n);
        let y = &done[cur * n..];
        let k1 = &derivs[cur * n..(cur + 1) * n];
        // Delayed rows: s at t - tau, s + 1 at t + step - tau.
        let delayed_end = &done[(s + 1) * n..(s + 2) * n];
        if s < delay_steps {
            h0.evaluate_into(t + half - tau, &mut mid)?;
        } else {
            let y0 = &done[s * n..(s + 1) * n];
            let d0 = &derivs[s * n..(s + 1) * n];
            let d1 = &derivs[(s + 1) * n..(s + 2) * n];
            for c in 0..n {
                mid[c] = 0.5 * (y0[c] + delayed_end[c]) + 0.125 * step * (d0[c] - d1[c]);
            }
        }

        for c in 0..n {
            stage[c] = y[c] + half * k1[c];
        }
        sys.eval(&stage, &mid, &mut k2);
        for c in 0..n {
            stage[c] = y[c] + half * k2[c];
        }
        sys.eval(&stage, &mid, &mut k3);
        for c in 0..n {
            stage[c] = y[c] + step * k3[c];
        }
        sys.eval(&stage, delayed_end, &mut k4);

        let y_next = &mut next[..n];
        let mut finite = true;
        for c in 0..n {
            y_next[c] = y[c] + step / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            finite &= y_next[c].is_finite();
        }
        if !finite {
            return Err(Error::NonFiniteState { t: t + step });
        }
        let d_next = &mut derivs[(cur + 1) * n..(cur + 2) * n];
        sys.eval(y_next, delayed_end, d_next);
        if d_next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { t: t + step });
        }
    }

    let first = steps * n;
    let final_state = HistorySegment::new(
        tau,
        n,
        values[first..].to_vec(),
        Some(derivs[first..].to_vec()),
    )?;
    Ok(Integration {
        final_state,
        trajectory: Trajectory {
            n,
            step,
            history_rows: delay_steps,
            values,
            derivs,
        },
    })
}
