//! Time-dependent control parameters, ramp execution and velocity sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bath::BathParams;
use crate::dynamics::{
    self, BlockSystem, CorrelationBlock, Drive, EtaPairSystem, FourierBlockState, FourierPairSystem, InitialState,
    ModeCoefficients, RateSystem, SelfPairedState, SelfPairedSystem,
};
use crate::model::{self, ChainParams, CouplingTable, ModeData};
use crate::solver::{self, OdeSystem, SolverError, SolverOptions, StepStats};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("t={t} is outside the protocol domain [0, {t_final}]")]
    Domain { t: f64, t_final: f64 },
    #[error("invalid protocol: {0}")]
    Invalid(String),
    #[error("mode k={k}: {source}")]
    Solver { k: f64, source: SolverError },
    #[error(transparent)]
    Model(#[from] model::ModelError),
}

/// A scalar function of time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Schedule {
    Constant {
        value: f64,
    },
    /// `initial + velocity t` until `final` is reached, then held.
    Linear {
        initial: f64,
        #[serde(rename = "final")]
        end: f64,
        velocity: f64,
    },
    /// `mean + amplitude sin(2 pi frequency t)`.
    Sinusoid {
        mean: f64,
        amplitude: f64,
        frequency: f64,
    },
    /// `initial` for `t <= t_step`, `final` afterwards.
    Step {
        initial: f64,
        #[serde(rename = "final")]
        end: f64,
        t_step: f64,
    },
}

impl Schedule {
    pub fn constant(value: f64) -> Self {
        Schedule::Constant { value }
    }

    pub fn linear(initial: f64, end: f64, velocity: f64) -> Self {
        Schedule::Linear { initial, end, velocity }
    }

    pub fn validate(&self, name: &str, nonnegative: bool) -> Result<(), ProtocolError> {
        let bad = |msg: String| Err(ProtocolError::Invalid(format!("{name}: {msg}")));
        let values: Vec<f64> = match *self {
            Schedule::Constant { value } => vec![value],
            Schedule::Linear { initial, end, velocity } => {
                if !(velocity != 0.0) || !velocity.is_finite() {
                    return bad(format!("velocity must be finite and nonzero, got {velocity}"));
                }
                if (end - initial) * velocity <= 0.0 {
                    return bad(format!(
                        "velocity {velocity} does not lead from {initial} to {end}"
                    ));
                }
                vec![initial, end]
            }
            Schedule::Sinusoid {
                mean,
                amplitude,
                frequency,
            } => {
                if !frequency.is_finite() || !amplitude.is_finite() {
                    return bad("amplitude and frequency must be finite".into());
                }
                vec![mean - amplitude.abs(), mean + amplitude.abs()]
            }
            Schedule::Step { initial, end, t_step } => {
                if !(t_step >= 0.0) || !t_step.is_finite() {
                    return bad(format!("t_step must be finite and nonnegative, got {t_step}"));
                }
                vec![initial, end]
            }
        };
        for v in values {
            if !v.is_finite() {
                return bad(format!("value {v} is not finite"));
            }
            if nonnegative && v < 0.0 {
                return bad(format!("schedule reaches {v} < 0"));
            }
        }
        Ok(())
    }

    /// Left-continuous value at `t`.
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Schedule::Constant { value } => value,
            Schedule::Linear { initial, end, velocity } => {
                if t >= (end - initial) / velocity {
                    end
                } else {
                    let x = initial + velocity * t;
                    if velocity > 0.0 { x.min(end) } else { x.max(end) }
                }
            }
            Schedule::Sinusoid {
                mean,
                amplitude,
                frequency,
            } => mean + amplitude * (std::f64::consts::TAU * frequency * t).sin(),
            Schedule::Step { initial, end, t_step } => {
                if t <= t_step {
                    initial
                } else {
                    end
                }
            }
        }
    }

    /// Value just after `t`; differs from [`Schedule::value`] only at a step.
    pub fn value_after(&self, t: f64) -> f64 {
        match *self {
            Schedule::Step { end, t_step, .. } if t >= t_step => end,
            _ => self.value(t),
        }
    }

    /// Left limit of the time derivative; differs from [`Schedule::derivative`]
    /// only at the end of a linear ramp.
    pub fn derivative_before(&self, t: f64) -> f64 {
        match *self {
            Schedule::Linear { initial, end, velocity } if t <= (end - initial) / velocity => velocity,
            _ => self.derivative(t),
        }
    }

    /// Time derivative (right limit), ignoring the delta function of a step.
    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Schedule::Constant { .. } | Schedule::Step { .. } => 0.0,
            Schedule::Linear { initial, end, velocity } => {
                if t < (end - initial) / velocity {
                    velocity
                } else {
                    0.0
                }
            }
            Schedule::Sinusoid {
                amplitude, frequency, ..
            } => {
                let w = std::f64::consts::TAU * frequency;
                amplitude * w * (w * t).cos()
            }
        }
    }

    /// Time at which a linear ramp reaches its end point.
    pub fn ramp_end(&self) -> Option<f64> {
        match *self {
            Schedule::Linear { initial, end, velocity } => Some((end - initial) / velocity),
            _ => None,
        }
    }

    /// Times where the schedule is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Schedule::Linear { .. } => self.ramp_end().into_iter().collect(),
            Schedule::Step { t_step, .. } => vec![t_step],
            _ => vec![],
        }
    }

    pub fn is_discontinuous_at(&self, t: f64) -> bool {
        matches!(*self, Schedule::Step { initial, end, t_step } if t == t_step && initial != end)
    }
}

/// Chemical potential and bath temperature as functions of time on `[0, t_final]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Protocol {
    pub mu: Schedule,
    pub temperature: Schedule,
    t_final: f64,
}

impl Protocol {
    /// `t_final` defaults to the end of the longest linear ramp.
    pub fn new(mu: Schedule, temperature: Schedule, t_final: Option<f64>) -> Result<Self, ProtocolError> {
        mu.validate("mu", false)?;
        temperature.validate("T", true)?;
        let t_final = match t_final {
            Some(t) => t,
            None => {
                let ends: Vec<f64> = [mu.ramp_end(), temperature.ramp_end()].into_iter().flatten().collect();
                if ends.is_empty() {
                    return Err(ProtocolError::Invalid(
                        "t_final is required unless a schedule is a linear ramp".into(),
                    ));
                }
                ends.into_iter().fold(0.0, f64::max)
            }
        };
        if !(t_final >= 0.0) || !t_final.is_finite() {
            return Err(ProtocolError::Invalid(format!(
                "t_final must be finite and nonnegative, got {t_final}"
            )));
        }
        Ok(Protocol {
            mu,
            temperature,
            t_final,
        })
    }

    pub fn constant(mu: f64, temperature: f64, t_final: f64) -> Result<Self, ProtocolError> {
        Self::new(Schedule::constant(mu), Schedule::constant(temperature), Some(t_final))
    }

    /// `mu(t) = mu_i + v t` from `mu_i` to `mu_f` at fixed temperature.
    pub fn linear_ramp(mu_i: f64, mu_f: f64, v: f64, temperature: f64) -> Result<Self, ProtocolError> {
        Self::new(Schedule::linear(mu_i, mu_f, v), Schedule::constant(temperature), None)
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    fn check(&self, t: f64) -> Result<(), ProtocolError> {
        if t >= 0.0 && t <= self.t_final {
            Ok(())
        } else {
            Err(ProtocolError::Domain {
                t,
                t_final: self.t_final,
            })
        }
    }

    pub fn mu_of_t(&self, t: f64) -> Result<f64, ProtocolError> {
        self.check(t)?;
        Ok(self.mu.value(t))
    }

    pub fn temp_of_t(&self, t: f64) -> Result<f64, ProtocolError> {
        self.check(t)?;
        Ok(self.temperature.value(t).max(0.0))
    }

    /// Interior times where either schedule has a kink or a jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .mu
            .breakpoints()
            .into_iter()
            .chain(self.temperature.breakpoints())
            .filter(|&t| t > 0.0 && t < self.t_final)
            .collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }
}

impl Drive for Protocol {
    fn mu(&self, t: f64) -> f64 {
        self.mu.value(t)
    }
    fn mu_dot(&self, t: f64) -> f64 {
        self.mu.derivative(t)
    }
    fn temperature(&self, t: f64) -> f64 {
        self.temperature.value(t).max(0.0)
    }
}

/// The protocol restricted to `[start, end]`, read with one-sided limits at
/// both ends so that no evaluation sees the far side of a breakpoint.
struct Segment<'a> {
    protocol: &'a Protocol,
    start: f64,
    end: f64,
}

impl Segment<'_> {
    fn side(&self, t: f64, s: &Schedule) -> (f64, f64) {
        if t <= self.start {
            (s.value_after(self.start), s.derivative(self.start))
        } else if t >= self.end {
            (s.value(self.end), s.derivative_before(self.end))
        } else {
            (s.value(t), s.derivative(t))
        }
    }
}

impl Drive for Segment<'_> {
    fn mu(&self, t: f64) -> f64 {
        self.side(t, &self.protocol.mu).0
    }
    fn mu_dot(&self, t: f64) -> f64 {
        self.side(t, &self.protocol.mu).1
    }
    fn temperature(&self, t: f64) -> f64 {
        self.side(t, &self.protocol.temperature).0.max(0.0)
    }
}

/// `d beta_k / dt = (Delta f(k) / lambda_k^2) dmu/dt`, zero for self-paired
/// and gapless modes.
pub fn beta_dot(k: f64, params: &ChainParams, mu_dot: f64) -> f64 {
    let m = model::mode_data(k, params);
    beta_dot_of(&m, params.pairing, mu_dot)
}

fn beta_dot_of(m: &ModeData, pairing: f64, mu_dot: f64) -> f64 {
    if m.lambda == 0.0 || m.f == 0.0 {
        0.0
    } else {
        mu_dot * pairing * m.f / (m.lambda * m.lambda)
    }
}

/// Which set of equations carries each pair of modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evolution {
    /// `(n_a, p)` per pair: the production path.
    #[default]
    Fourier,
    /// `(n_eta, q)` per pair, driven by the angle velocity.
    Eta,
    /// Full 4x4 Majorana correlation block per pair.
    Block,
    /// Quasiparticle rate equation with the angle velocity dropped.
    RateEquation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// Evenly spaced in `t` over `[0, t_final]`.
    #[default]
    UniformTime,
    /// Evenly spaced in `mu` along a linear ramp.
    UniformMu,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub evolution: Evolution,
    pub sampling: Sampling,
    /// Number of sample times, at least 2 (both ends included).
    pub samples: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            evolution: Evolution::Fourier,
            sampling: Sampling::UniformTime,
            samples: 101,
        }
    }
}

impl RunOptions {
    pub fn samples(samples: usize) -> Self {
        RunOptions {
            samples,
            ..Self::default()
        }
    }

    pub fn with_evolution(&self, evolution: Evolution) -> Self {
        RunOptions {
            evolution,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub mu: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
    pub excitation_density: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RampResult {
    pub samples: Vec<Sample>,
    /// Representative momenta `0, 2 pi/L, ..., pi`.
    pub momenta: Vec<f64>,
    /// `occupations[i][j]`: `<eta^dagger eta>` of `momenta[j]` at sample `i`.
    pub occupations: Vec<Vec<f64>>,
    /// Solver statistics per representative momentum.
    pub solver_stats: Vec<StepStats>,
}

impl RampResult {
    /// `(k, <eta_k^dagger eta_k>)` over the full grid at the final time.
    pub fn final_mode_occupations(&self) -> Vec<(f64, f64)> {
        let last = self.occupations.last().cloned().unwrap_or_default();
        expand_to_grid(&self.momenta, &last)
    }

    pub fn final_density(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.excitation_density)
    }

    pub fn total_stats(&self) -> StepStats {
        let mut total = StepStats::default();
        for s in &self.solver_stats {
            total += *s;
        }
        total
    }
}

fn expand_to_grid(momenta: &[f64], occ: &[f64]) -> Vec<(f64, f64)> {
    let half = momenta.len() - 1;
    let length = 2 * half;
    let grid = model::ModeGrid::new(length);
    (0..length)
        .map(|n| {
            let rep = if n <= half { n } else { length - n };
            (grid.momentum(n), occ[rep])
        })
        .collect()
}

/// Mean over the full grid, summed in grid order.
fn density(occ: &[f64]) -> f64 {
    let half = occ.len() - 1;
    let length = 2 * half;
    let mut sum = 0.0;
    for n in 0..length {
        sum += occ[if n <= half { n } else { length - n }];
    }
    sum / length as f64
}

fn sample_times(protocol: &Protocol, opts: &RunOptions) -> Result<Vec<f64>, ProtocolError> {
    if opts.samples < 2 {
        return Err(ProtocolError::Invalid(format!(
            "at least 2 samples are required, got {}",
            opts.samples
        )));
    }
    let n = opts.samples - 1;
    let span = match opts.sampling {
        Sampling::UniformTime => protocol.t_final(),
        Sampling::UniformMu => protocol.mu.ramp_end().ok_or_else(|| {
            ProtocolError::Invalid("uniform-mu sampling needs a linear mu ramp".into())
        })?,
    };
    let mut times: Vec<f64> = (0..=n).map(|i| span * i as f64 / n as f64).collect();
    times[n] = span;
    if opts.sampling == Sampling::UniformMu && span < protocol.t_final() {
        times.push(protocol.t_final());
    }
    Ok(times)
}

/// Integration segments between consecutive breakpoints, each listing the
/// sample times it covers plus its end points.
fn segments(protocol: &Protocol, samples: &[f64]) -> Vec<Vec<f64>> {
    let kinks = protocol.breakpoints();
    let mut all: Vec<f64> = samples.iter().copied().chain(kinks.iter().copied()).collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    let mut out = vec![vec![]];
    for t in all {
        out.last_mut().unwrap().push(t);
        if kinks.contains(&t) {
            out.push(vec![t]);
        }
    }
    out
}

/// What one representative momentum is integrated as.
enum ModeKind {
    SelfPaired,
    Pair,
}

struct ModeRun {
    occupations: Vec<f64>,
    stats: StepStats,
}

fn mode_at(coeffs: &ModeCoefficients<'_, Protocol>, t: f64, params: &ChainParams) -> ModeData {
    coeffs.mode(t, params)
}

/// Runs one momentum through all segments, returning occupations at the samples.
#[allow(clippy::too_many_arguments)]
fn run_mode(
    table: &CouplingTable,
    n: usize,
    kind: ModeKind,
    params: &ChainParams,
    bath: &BathParams,
    protocol: &Protocol,
    init: InitialState,
    evolution: Evolution,
    solver_opts: &SolverOptions,
    samples: &[f64],
    segs: &[Vec<f64>],
) -> Result<ModeRun, ProtocolError> {
    let whole = ModeCoefficients::new(table, n, params, bath, protocol);
    let k = whole.k;
    let m0 = mode_at(&whole, 0.0, params);
    let n0 = init.occupation(m0.lambda, protocol.temperature(0.0));
    let fail = |source| ProtocolError::Solver { k, source };

    let mut occupations = Vec::with_capacity(samples.len());
    let mut stats = StepStats::default();
    let mut next_sample = 0;

    // Representation-specific state carried across segments.
    let rate_only = evolution == Evolution::RateEquation;
    let mut y: Vec<f64> = match (&kind, evolution) {
        (_, Evolution::RateEquation) => vec![n0],
        (ModeKind::SelfPaired, _) => vec![m0.cos2b() * (n0 - 0.5) + 0.5],
        (ModeKind::Pair, Evolution::Fourier) => dynamics::pair_with_occupation(&m0, n0).to_array().to_vec(),
        (ModeKind::Pair, Evolution::Eta) => vec![n0, 0.0, 0.0],
        (ModeKind::Pair, Evolution::Block) => {
            CorrelationBlock::from_fourier(&dynamics::pair_with_occupation(&m0, n0)).to_real().to_vec()
        }
    };

    for (si, seg) in segs.iter().enumerate() {
        let start = seg[0];
        let drive = Segment {
            protocol,
            start,
            end: seg[seg.len() - 1],
        };
        let coeffs = ModeCoefficients::new(table, n, params, bath, &drive);
        if si > 0 && evolution == Evolution::Eta && matches!(kind, ModeKind::Pair) {
            // The quasiparticle basis jumps with the parameters: re-express the state.
            let before = mode_at(&whole, start, params);
            let after = coeffs.mode(start, params);
            let f = dynamics::fourier_from_eta(&dynamics::EtaBlockState::from_slice(k, &y), &before);
            y = dynamics::eta_from_fourier(&f, &after).to_array().to_vec();
        }
        let traj = {
            let system: Box<dyn OdeSystem + '_> = match (&kind, evolution) {
                (_, Evolution::RateEquation) => Box::new(RateSystem(coeffs.clone())),
                (ModeKind::SelfPaired, _) => Box::new(SelfPairedSystem(coeffs.clone())),
                (ModeKind::Pair, Evolution::Fourier) => Box::new(FourierPairSystem(coeffs.clone())),
                (ModeKind::Pair, Evolution::Eta) => Box::new(EtaPairSystem(coeffs.clone())),
                (ModeKind::Pair, Evolution::Block) => Box::new(BlockSystem {
                    coeffs: coeffs.clone(),
                    params,
                }),
            };
            solver::integrate(system.as_ref(), &y, seg, solver_opts).map_err(fail)?
        };
        stats += traj.stats;
        for (i, (&t, state)) in traj.times.iter().zip(&traj.states).enumerate() {
            // A segment's first point repeats the previous segment's last one.
            if si > 0 && i == 0 {
                continue;
            }
            if next_sample < samples.len() && t == samples[next_sample] {
                let m = if si + 1 < segs.len() && t == seg[seg.len() - 1] {
                    mode_at(&whole, t, params)
                } else {
                    coeffs.mode(t, params)
                };
                let occ = if rate_only {
                    state[0]
                } else {
                    match (&kind, evolution) {
                        (ModeKind::SelfPaired, _) => dynamics::selfpaired_occupation(&SelfPairedState { k, n_a: state[0] }, &m),
                        (ModeKind::Pair, Evolution::Eta) => state[0],
                        (ModeKind::Pair, Evolution::Block) => {
                            dynamics::occupation_from_fourier(&CorrelationBlock::from_real(k, state).fourier(), &m)
                        }
                        _ => dynamics::occupation_from_fourier(&FourierBlockState::from_slice(k, state), &m),
                    }
                };
                occupations.push(occ);
                next_sample += 1;
            }
        }
        y = traj.states.last().cloned().unwrap_or(y);
    }
    Ok(ModeRun { occupations, stats })
}

/// Integrates every mode of the chain through the protocol and records the
/// excitation density at the sample times. Modes run in parallel; the
/// result does not depend on the number of threads.
pub fn run_protocol(
    params: &ChainParams,
    bath: &BathParams,
    protocol: &Protocol,
    init: InitialState,
    solver_opts: &SolverOptions,
    opts: &RunOptions,
) -> Result<RampResult, ProtocolError> {
    params.validate()?;
    solver_opts
        .validate()
        .map_err(|e| ProtocolError::Invalid(e.to_string()))?;
    let times = sample_times(protocol, opts)?;
    let segs = segments(protocol, &times);
    let table = CouplingTable::new(params);
    let half = params.length / 2;

    let runs: Vec<Result<ModeRun, ProtocolError>> = (0..=half)
        .into_par_iter()
        .map(|n| {
            let kind = if n == 0 || n == half {
                ModeKind::SelfPaired
            } else {
                ModeKind::Pair
            };
            run_mode(
                &table,
                n,
                kind,
                params,
                bath,
                protocol,
                init,
                opts.evolution,
                solver_opts,
                &times,
                &segs,
            )
        })
        .collect();
    let runs: Vec<ModeRun> = runs.into_iter().collect::<Result<_, _>>()?;

    let momenta: Vec<f64> = (0..=half).map(|n| table.grid().momentum(n)).collect();
    let occupations: Vec<Vec<f64>> = (0..times.len())
        .map(|i| runs.iter().map(|r| r.occupations[i]).collect())
        .collect();
    let samples = times
        .iter()
        .zip(&occupations)
        .map(|(&t, occ)| Sample {
            t,
            mu: protocol.mu.value(t),
            temperature: protocol.temperature(t),
            excitation_density: density(occ),
        })
        .collect();
    Ok(RampResult {
        samples,
        momenta,
        occupations,
        solver_stats: runs.iter().map(|r| r.stats).collect(),
    })
}

/// The three evolutions compared in a velocity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// Bath and ramp together.
    Total,
    /// Closed system (`gamma = 0`).
    Coherent,
    /// Rate equation only (angle velocity dropped).
    Incoherent,
}

impl Branch {
    pub const ALL: [Branch; 3] = [Branch::Total, Branch::Coherent, Branch::Incoherent];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub v: f64,
    #[serde(rename = "E_total")]
    pub total: f64,
    #[serde(rename = "E_coherent")]
    pub coherent: f64,
    #[serde(rename = "E_incoherent")]
    pub incoherent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub v_crossover: Option<f64>,
}

impl SweepResult {
    /// Every velocity where coherent and incoherent contributions cross.
    pub fn crossings(&self) -> Vec<f64> {
        crossings(&self.points)
    }

    /// Power-law fit of the coherent branch, `E = A v^a`; returns `(a, A)`.
    pub fn coherent_exponent(&self) -> Option<(f64, f64)> {
        let (v, e): (Vec<f64>, Vec<f64>) = self.points.iter().map(|p| (p.v, p.coherent)).unzip();
        power_law_fit(&v, &e)
    }
}

fn crossings(points: &[SweepPoint]) -> Vec<f64> {
    let logd = |p: &SweepPoint| p.coherent.ln() - p.incoherent.ln();
    let mut out = vec![];
    for w in points.windows(2) {
        let (d0, d1) = (logd(&w[0]), logd(&w[1]));
        if d0 == 0.0 {
            out.push(w[0].v);
        } else if d0 * d1 < 0.0 {
            let (x0, x1) = (w[0].v.ln(), w[1].v.ln());
            out.push((x0 + d0 * (x1 - x0) / (d0 - d1)).exp());
        }
    }
    if let Some(last) = points.last() {
        if logd(last) == 0.0 {
            out.push(last.v);
        }
    }
    out
}

/// Least-squares fit of `ln y = a ln x + ln A`; `None` unless at least two
/// positive points are given.
pub fn power_law_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let a = sxy / sxx;
    Some((a, (my - a * mx).exp()))
}

/// Final excitation density of a linear ramp `mu_i -> mu_f` under one branch.
pub fn ramp_branch(
    params: &ChainParams,
    bath: &BathParams,
    mu_i: f64,
    mu_f: f64,
    v: f64,
    branch: Branch,
    init: InitialState,
    solver_opts: &SolverOptions,
) -> Result<f64, ProtocolError> {
    let protocol = Protocol::linear_ramp(mu_i, mu_f, v, bath.temperature)?;
    let (bath, evolution) = match branch {
        Branch::Total => (bath.clone(), Evolution::Fourier),
        Branch::Coherent => (bath.with_gamma(0.0), Evolution::Fourier),
        Branch::Incoherent => (bath.clone(), Evolution::RateEquation),
    };
    let opts = RunOptions {
        evolution,
        sampling: Sampling::UniformTime,
        samples: 2,
    };
    let params = params.with_mu(mu_i);
    Ok(run_protocol(&params, &bath, &protocol, init, solver_opts, &opts)?.final_density())
}

/// Runs the total, coherent and incoherent evolutions for every velocity.
#[allow(clippy::too_many_arguments)]
pub fn sweep_velocities(
    params: &ChainParams,
    bath: &BathParams,
    mu_i: f64,
    mu_f: f64,
    velocities: &[f64],
    init: InitialState,
    solver_opts: &SolverOptions,
) -> Result<SweepResult, ProtocolError> {
    if velocities.is_empty() {
        return Err(ProtocolError::Invalid("empty velocity list".into()));
    }
    let jobs: Vec<(usize, Branch)> = (0..velocities.len())
        .flat_map(|i| Branch::ALL.into_iter().map(move |b| (i, b)))
        .collect();
    let values: Vec<Result<f64, ProtocolError>> = jobs
        .par_iter()
        .map(|&(i, b)| ramp_branch(params, bath, mu_i, mu_f, velocities[i], b, init, solver_opts))
        .collect();
    let values: Vec<f64> = values.into_iter().collect::<Result<_, _>>()?;
    let points: Vec<SweepPoint> = velocities
        .iter()
        .enumerate()
        .map(|(i, &v)| SweepPoint {
            v,
            total: values[3 * i],
            coherent: values[3 * i + 1],
            incoherent: values[3 * i + 2],
        })
        .collect();
    let v_crossover = crossings(&points).first().copied();
    Ok(SweepResult { points, v_crossover })
}

/// `n` velocities spaced evenly in `log v` over `[v_min, v_max]`.
pub fn log_spaced(v_min: f64, v_max: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![v_min];
    }
    let (a, b) = (v_min.ln(), v_max.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                v_min
            } else if i == n - 1 {
                v_max
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}
