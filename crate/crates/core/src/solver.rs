//! Adaptive integrators for small real first-order systems.
//!
//! The default method is the semi-implicit midpoint rule of Bader and
//! Deuflhard with polynomial extrapolation in `h^2` (the stiff variant of
//! Bulirsch-Stoer). Dormand-Prince 5(4) is provided for cross-checks on
//! non-stiff problems. Both methods land exactly on the requested output
//! times, so no interpolation is involved.
//!
//! Complex variables are split into real and imaginary parts by the caller.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct RhsError(pub String);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("step size underflow at t={t} (h={h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("maximum number of steps ({steps}) exceeded at t={t}")]
    MaxSteps { t: f64, steps: usize },
    #[error("singular iteration matrix at t={t}")]
    Singular { t: f64 },
    #[error("right-hand side failed at t={t}: {source}")]
    Rhs { t: f64, source: RhsError },
}

/// A system `dy/dt = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    fn rhs(&self, t: f64, y: &[f64], dydt: &mut [f64]) -> Result<(), RhsError>;

    /// Fills `jac[(i, j)] = df_i/dy_j` and returns `true`, or returns `false`
    /// to request a finite-difference Jacobian.
    fn jacobian(&self, _t: f64, _y: &[f64], _jac: &mut DMatrix<f64>) -> Result<bool, RhsError> {
        Ok(false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    SemiImplicitExtrapolation,
    ExplicitEmbeddedRk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
    pub method: Method,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            initial_step: 1e-4,
            max_step: 10.0,
            max_steps: 10_000_000,
            method: Method::SemiImplicitExtrapolation,
        }
    }
}

impl SolverOptions {
    pub fn with_tolerances(&self, rel_tol: f64, abs_tol: f64) -> Self {
        SolverOptions {
            rel_tol,
            abs_tol,
            ..self.clone()
        }
    }

    pub fn with_method(&self, method: Method) -> Self {
        SolverOptions {
            method,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && !x.is_nan() {
                Ok(())
            } else {
                Err(SolverError::InvalidOptions(format!("{name} must be positive, got {x}")))
            }
        };
        positive("rel_tol", self.rel_tol)?;
        positive("abs_tol", self.abs_tol)?;
        positive("initial_step", self.initial_step)?;
        positive("max_step", self.max_step)?;
        if self.max_step < self.initial_step {
            return Err(SolverError::InvalidOptions(format!(
                "max_step ({}) must be at least initial_step ({})",
                self.max_step, self.initial_step
            )));
        }
        if self.max_steps == 0 {
            return Err(SolverError::InvalidOptions("max_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub jacobian_evals: usize,
    pub decompositions: usize,
}

impl std::ops::AddAssign for StepStats {
    fn add_assign(&mut self, o: Self) {
        self.accepted += o.accepted;
        self.rejected += o.rejected;
        self.rhs_evals += o.rhs_evals;
        self.jacobian_evals += o.jacobian_evals;
        self.decompositions += o.decompositions;
    }
}

/// States at the requested output times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Integrates from `times[0]` through every later entry of `times`
/// (nondecreasing) and records the state at each of them, including the
/// initial one.
pub fn integrate<S: OdeSystem + ?Sized>(
    system: &S,
    y0: &[f64],
    times: &[f64],
    opts: &SolverOptions,
) -> Result<Trajectory, SolverError> {
    opts.validate()?;
    if times.is_empty() {
        return Err(SolverError::InvalidOptions("no output times".into()));
    }
    if times.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(SolverError::InvalidOptions("output times must be nondecreasing".into()));
    }
    if y0.len() != system.dim() {
        return Err(SolverError::InvalidOptions(format!(
            "initial state has {} components, system has {}",
            y0.len(),
            system.dim()
        )));
    }
    match opts.method {
        Method::SemiImplicitExtrapolation => Extrapolation::new(system, opts).run(y0, times),
        Method::ExplicitEmbeddedRk => DormandPrince::new(system, opts).run(y0, times),
    }
}

/// Integrates from `t0` to `t1` and returns only the final state.
pub fn integrate_to<S: OdeSystem + ?Sized>(
    system: &S,
    y0: &[f64],
    t0: f64,
    t1: f64,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, StepStats), SolverError> {
    let mut traj = integrate(system, y0, &[t0, t1], opts)?;
    let y = traj.states.pop().unwrap_or_default();
    Ok((y, traj.stats))
}

fn scaled_error(opts: &SolverOptions, y0: &[f64], y1: &[f64], diff: impl Iterator<Item = f64>) -> f64 {
    let mut err = 0.0f64;
    for ((a, b), d) in y0.iter().zip(y1).zip(diff) {
        let sc = opts.abs_tol + opts.rel_tol * a.abs().max(b.abs());
        let e = (d / sc).abs();
        // NaN must count as a failed step.
        if !(e <= err) {
            err = if e.is_nan() { f64::INFINITY } else { e };
        }
    }
    err
}

fn underflow(t: f64, h: f64) -> bool {
    h <= 1e-14 * t.abs().max(1.0)
}

fn call_rhs<S: OdeSystem + ?Sized>(
    system: &S,
    t: f64,
    y: &[f64],
    dy: &mut [f64],
    stats: &mut StepStats,
) -> Result<(), SolverError> {
    stats.rhs_evals += 1;
    system.rhs(t, y, dy).map_err(|source| SolverError::Rhs { t, source })
}

/// Step-number sequence of the semi-implicit midpoint rule.
const SEQUENCE: [usize; 10] = [2, 6, 10, 14, 22, 34, 50, 70, 98, 138];
/// Number of extrapolation rows available to the controller.
const MAX_ROWS: usize = 8;
const FIRST_TARGET_ROW: usize = 4;
/// Step-size safety factors: `h_opt = h * S1 * (S2 / err)^(1 / (2j + 1))` for row `j`.
const SAFETY_1: f64 = 0.94;
const SAFETY_2: f64 = 0.65;
const MIN_FACTOR: f64 = 0.02;
const MAX_FACTOR: f64 = 4.0;
/// Order changes require this relative work advantage.
const ORDER_DOWN: f64 = 0.8;
const ORDER_UP: f64 = 0.9;

struct Extrapolation<'a, S: OdeSystem + ?Sized> {
    system: &'a S,
    opts: &'a SolverOptions,
    n: usize,
    stats: StepStats,
    jac: DMatrix<f64>,
    f0: Vec<f64>,
    ft: Vec<f64>,
    scratch: Vec<f64>,
    ytemp: Vec<f64>,
    del: Vec<f64>,
    table: Vec<Vec<f64>>,
    prev_diag: Vec<f64>,
    /// Cumulative right-hand-side evaluations needed to build rows `0..=j`.
    cost: [f64; MAX_ROWS],
}

impl<'a, S: OdeSystem + ?Sized> Extrapolation<'a, S> {
    fn new(system: &'a S, opts: &'a SolverOptions) -> Self {
        let n = system.dim();
        let mut cost = [0.0; MAX_ROWS];
        let mut acc = 1.0 + n as f64;
        for (j, c) in cost.iter_mut().enumerate() {
            acc += SEQUENCE[j] as f64 + 1.0;
            *c = acc;
        }
        Extrapolation {
            system,
            opts,
            n,
            stats: StepStats::default(),
            jac: DMatrix::zeros(n, n),
            f0: vec![0.0; n],
            ft: vec![0.0; n],
            scratch: vec![0.0; n],
            ytemp: vec![0.0; n],
            del: vec![0.0; n],
            table: vec![vec![0.0; n]; MAX_ROWS],
            prev_diag: vec![0.0; n],
            cost,
        }
    }

    fn run(mut self, y0: &[f64], times: &[f64]) -> Result<Trajectory, SolverError> {
        let mut y = y0.to_vec();
        let mut t = times[0];
        let mut h = self.opts.initial_step.min(self.opts.max_step);
        let mut target = FIRST_TARGET_ROW;
        let mut out_t = vec![t];
        let mut out_y = vec![y.clone()];
        let mut steps = 0usize;

        for &stop in &times[1..] {
            while t < stop {
                if steps >= self.opts.max_steps {
                    return Err(SolverError::MaxSteps { t, steps });
                }
                steps += 1;
                let remaining = stop - t;
                let last = h >= remaining;
                let hstep = if last { remaining } else { h };
                let (ynew, hused, hnext, knext) = self.step(t, &y, hstep, target)?;
                y = ynew;
                // A rejected step is retried with a smaller size.
                let last = last && hused == hstep;
                t = if last { stop } else { t + hused };
                target = knext;
                // A truncated final step says nothing about the natural step size.
                h = if last { h.max(hnext) } else { hnext }.min(self.opts.max_step);
            }
            out_t.push(stop);
            out_y.push(y.clone());
        }
        Ok(Trajectory {
            times: out_t,
            states: out_y,
            stats: self.stats,
        })
    }

    fn prepare(&mut self, t: f64, y: &[f64]) -> Result<(), SolverError> {
        let n = self.n;
        let mut f0 = std::mem::take(&mut self.f0);
        call_rhs(self.system, t, y, &mut f0, &mut self.stats)?;
        self.stats.jacobian_evals += 1;
        let analytic = self
            .system
            .jacobian(t, y, &mut self.jac)
            .map_err(|source| SolverError::Rhs { t, source })?;
        if !analytic {
            let mut yp = y.to_vec();
            let mut fp = vec![0.0; n];
            for j in 0..n {
                let delta = (f64::EPSILON * y[j].abs().max(1e-5)).sqrt();
                yp[j] = y[j] + delta;
                call_rhs(self.system, t, &yp, &mut fp, &mut self.stats)?;
                for i in 0..n {
                    self.jac[(i, j)] = (fp[i] - f0[i]) / delta;
                }
                yp[j] = y[j];
            }
        }
        let dt = f64::EPSILON.sqrt() * t.abs().max(1.0);
        let mut ft = std::mem::take(&mut self.ft);
        call_rhs(self.system, t + dt, y, &mut ft, &mut self.stats)?;
        for (a, b) in ft.iter_mut().zip(&f0) {
            *a = (*a - b) / dt;
        }
        self.f0 = f0;
        self.ft = ft;
        Ok(())
    }

    /// Semi-implicit midpoint rule with `steps` substeps over `[t, t + big]`.
    fn midpoint(&mut self, t: f64, y: &[f64], big: f64, steps: usize, row: usize) -> Result<(), SolverError> {
        let n = self.n;
        let h = big / steps as f64;
        let mut a = DMatrix::<f64>::identity(n, n);
        a -= &self.jac * h;
        self.stats.decompositions += 1;
        let lu = a.lu();
        if !lu.is_invertible() {
            return Err(SolverError::Singular { t });
        }
        let solve = |v: &mut [f64]| -> bool {
            let mut b = nalgebra::DVector::from_column_slice(v);
            if lu.solve_mut(&mut b) {
                v.copy_from_slice(b.as_slice());
                true
            } else {
                false
            }
        };

        for i in 0..n {
            self.del[i] = h * (self.f0[i] + h * self.ft[i]);
        }
        if !solve(&mut self.del) {
            return Err(SolverError::Singular { t });
        }
        for i in 0..n {
            self.ytemp[i] = y[i] + self.del[i];
        }
        let mut x = t + h;
        call_rhs(self.system, x, &self.ytemp, &mut self.scratch, &mut self.stats)?;
        for _ in 1..steps {
            for i in 0..n {
                self.scratch[i] = h * self.scratch[i] - self.del[i];
            }
            if !solve(&mut self.scratch) {
                return Err(SolverError::Singular { t });
            }
            for i in 0..n {
                self.del[i] += 2.0 * self.scratch[i];
                self.ytemp[i] += self.del[i];
            }
            x += h;
            call_rhs(self.system, x, &self.ytemp, &mut self.scratch, &mut self.stats)?;
        }
        for i in 0..n {
            self.scratch[i] = h * self.scratch[i] - self.del[i];
        }
        if !solve(&mut self.scratch) {
            return Err(SolverError::Singular { t });
        }
        for i in 0..n {
            self.table[row][i] = self.ytemp[i] + self.scratch[i];
        }
        Ok(())
    }

    /// One attempted-and-eventually-accepted step of size at most `h`.
    /// Returns the new state, the step size actually taken, the proposed next
    /// step and the next target row.
    fn step(
        &mut self,
        t: f64,
        y: &[f64],
        mut h: f64,
        mut target: usize,
    ) -> Result<(Vec<f64>, f64, f64, usize), SolverError> {
        self.prepare(t, y)?;
        let n = self.n;
        let mut hopt = [0.0f64; MAX_ROWS];
        let mut work = [f64::INFINITY; MAX_ROWS];
        loop {
            if underflow(t, h) {
                return Err(SolverError::StepUnderflow { t, h });
            }
            let top = (target + 1).min(MAX_ROWS - 1);
            let mut accepted_row = None;
            let mut last_row = 0;
            for j in 0..=top {
                self.midpoint(t, y, h, SEQUENCE[j], j)?;
                if j > 0 {
                    self.prev_diag.copy_from_slice(&self.table[0]);
                }
                // Aitken-Neville in place: before this loop table[l] = T[j-1][j-1-l],
                // afterwards table[l] = T[j][j-l].
                for l in (0..j).rev() {
                    let ratio = (SEQUENCE[j] as f64 / SEQUENCE[l] as f64).powi(2) - 1.0;
                    for i in 0..n {
                        let newer = self.table[l + 1][i];
                        let older = self.table[l][i];
                        self.table[l][i] = newer + (newer - older) / ratio;
                    }
                }
                last_row = j;
                if j == 0 {
                    continue;
                }
                // Successive diagonal entries rather than the last two columns of
                // one row: the latter underestimates the error of stiff
                // components with |h lambda| between roughly 10 and 100.
                let err = scaled_error(
                    self.opts,
                    y,
                    &self.table[0],
                    self.table[0].iter().zip(&self.prev_diag).map(|(a, b)| a - b),
                );
                let expo = 1.0 / (2 * j + 1) as f64;
                let factor = if err == 0.0 {
                    MAX_FACTOR
                } else if err.is_finite() {
                    (SAFETY_1 * (SAFETY_2 / err).powf(expo)).clamp(MIN_FACTOR, MAX_FACTOR)
                } else {
                    MIN_FACTOR
                };
                hopt[j] = h * factor;
                work[j] = self.cost[j] / hopt[j];
                if j + 1 >= target && err <= 1.0 {
                    accepted_row = Some(j);
                    break;
                }
            }
            match accepted_row {
                Some(j) => {
                    self.stats.accepted += 1;
                    let ynew = self.table[0].clone();
                    let (next_target, hnext) = if j >= 2 && work[j - 1] < ORDER_DOWN * work[j] {
                        (j - 1, hopt[j - 1])
                    } else if j + 1 < MAX_ROWS - 1 && work[j] < ORDER_UP * work[j - 1] {
                        (j + 1, hopt[j] * self.cost[j + 1] / self.cost[j])
                    } else {
                        (j, hopt[j])
                    };
                    return Ok((ynew, h, hnext.min(self.opts.max_step), next_target.clamp(1, MAX_ROWS - 2)));
                }
                None => {
                    self.stats.rejected += 1;
                    let j = last_row.max(1);
                    h = hopt[j].min(h * 0.5);
                    target = j.min(target).max(1);
                }
            }
        }
    }
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct DormandPrince<'a, S: OdeSystem + ?Sized> {
    system: &'a S,
    opts: &'a SolverOptions,
    stats: StepStats,
}

impl<'a, S: OdeSystem + ?Sized> DormandPrince<'a, S> {
    fn new(system: &'a S, opts: &'a SolverOptions) -> Self {
        DormandPrince {
            system,
            opts,
            stats: StepStats::default(),
        }
    }

    fn run(mut self, y0: &[f64], times: &[f64]) -> Result<Trajectory, SolverError> {
        let n = y0.len();
        let mut y = y0.to_vec();
        let mut t = times[0];
        let mut h = self.opts.initial_step.min(self.opts.max_step);
        let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
        let mut ys = vec![0.0; n];
        let mut ynew = vec![0.0; n];
        let mut out_t = vec![t];
        let mut out_y = vec![y.clone()];
        let mut steps = 0usize;
        let sys = self.system;
        call_rhs(sys, t, &y, &mut k[0], &mut self.stats)?;

        for &stop in &times[1..] {
            while t < stop {
                if steps >= self.opts.max_steps {
                    return Err(SolverError::MaxSteps { t, steps });
                }
                steps += 1;
                if underflow(t, h) {
                    return Err(SolverError::StepUnderflow { t, h });
                }
                let remaining = stop - t;
                let last = h >= remaining;
                let hs = if last { remaining } else { h };

                let stage = |ys: &mut [f64], k: &[Vec<f64>; 7], coeffs: &[f64]| {
                    for i in 0..n {
                        let mut acc = 0.0;
                        for (c, kk) in coeffs.iter().zip(k.iter()) {
                            acc += c * kk[i];
                        }
                        ys[i] = y[i] + hs * acc;
                    }
                };
                stage(&mut ys, &k, &[A21]);
                call_rhs(sys, t + C2 * hs, &ys, &mut k[1], &mut self.stats)?;
                stage(&mut ys, &k, &[A31, A32]);
                call_rhs(sys, t + C3 * hs, &ys, &mut k[2], &mut self.stats)?;
                stage(&mut ys, &k, &[A41, A42, A43]);
                call_rhs(sys, t + C4 * hs, &ys, &mut k[3], &mut self.stats)?;
                stage(&mut ys, &k, &[A51, A52, A53, A54]);
                call_rhs(sys, t + C5 * hs, &ys, &mut k[4], &mut self.stats)?;
                stage(&mut ys, &k, &[A61, A62, A63, A64, A65]);
                call_rhs(sys, t + hs, &ys, &mut k[5], &mut self.stats)?;
                stage(&mut ynew, &k, &[B1, 0.0, B3, B4, B5, B6]);
                let tnew = if last { stop } else { t + hs };
                call_rhs(sys, tnew, &ynew, &mut k[6], &mut self.stats)?;

                let err = scaled_error(
                    self.opts,
                    &y,
                    &ynew,
                    (0..n).map(|i| {
                        hs * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i])
                    }),
                );
                let factor = if err == 0.0 {
                    5.0
                } else if err.is_finite() {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                } else {
                    0.2
                };
                if err <= 1.0 {
                    self.stats.accepted += 1;
                    std::mem::swap(&mut y, &mut ynew);
                    k.swap(0, 6);
                    t = tnew;
                    let proposal = hs * factor;
                    h = if last { h.max(proposal) } else { proposal }.min(self.opts.max_step);
                } else {
                    self.stats.rejected += 1;
                    h = hs * factor.min(1.0);
                }
            }
            out_t.push(stop);
            out_y.push(y.clone());
        }
        Ok(Trajectory {
            times: out_t,
            states: out_y,
            stats: self.stats,
        })
    }
}
