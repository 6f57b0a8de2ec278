//! Brute-force Lindblad evolution of the full density matrix for tiny chains.
//!
//! The Fock space of `L <= 6` fermionic modes is built with a Jordan-Wigner
//! construction. Constant protocols work directly in the quasiparticle basis,
//! where the Hamiltonian is diagonal. Time-dependent protocols work in the
//! fixed Fourier basis: the Hamiltonian comes from the BdG form and the
//! quasiparticle operators `eta_k = cos b a_k - i sin b a_{-k}^dagger` are
//! rebuilt from the instantaneous parameters at every evaluation.
//!
//! The master equation is `d rho/dt = -i[H, rho] + gamma sum_j (2 L_j rho
//! L_j^dagger - {L_j^dagger L_j, rho})` with `L = sqrt(Gamma_+) eta^dagger`
//! and `L = sqrt(Gamma_-) eta`. It is integrated with classical RK4 on a fixed
//! step that is halved until the sampled occupations stop changing.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bath::{self, BathError, BathParams};
use crate::dynamics::{Drive, InitialState};
use crate::model::{ChainParams, CouplingTable, Exponent, ModelError};
use crate::protocols::{self, Evolution, Protocol, ProtocolError, RunOptions};
use crate::solver::SolverOptions;

pub const MAX_LENGTH: usize = 6;

type Op = DMatrix<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("dense oracle supports L <= {MAX_LENGTH}, got L = {0}")]
    TooLarge(usize),
    #[error("trace drifted by {drift:e} at t = {t}")]
    TraceDrift { t: f64, drift: f64 },
    #[error("density matrix lost hermiticity by {defect:e} at t = {t}")]
    Hermiticity { t: f64, defect: f64 },
    #[error("density matrix has eigenvalue {eigenvalue:e} at t = {t}")]
    Positivity { t: f64, eigenvalue: f64 },
    #[error("step halving did not converge: change {change:e} at step {step:e}")]
    NotConverged { step: f64, change: f64 },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Bath(#[from] BathError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// How a zero-energy mode couples to the bath.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroMode {
    /// The same `eta^dagger`, `eta` pair as every other mode, with equal rates.
    #[default]
    JumpPair,
    /// A single Hermitian jump `sqrt(Gamma(0)) (eta + eta^dagger)` for modes
    /// with `lambda = 0`.
    Combined,
}

/// Fock basis the density matrix is stored in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    Quasiparticle,
    Fourier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpKind {
    Excitation,
    Decay,
    Hermitian,
}

#[derive(Debug, Clone)]
pub struct JumpOperator {
    /// Grid index of the mode.
    pub mode: usize,
    pub kind: JumpKind,
    /// The rate whose square root multiplies the operator.
    pub rate: f64,
    pub op: Op,
}

/// Annihilation operators `c_0 .. c_{L-1}` with `c_j = Z_0 .. Z_{j-1} s^-_j`.
/// Bit `j` of a basis index is the occupation of mode `j`.
pub fn fock_annihilators(length: usize) -> Result<Vec<Op>, OracleError> {
    if length > MAX_LENGTH {
        return Err(OracleError::TooLarge(length));
    }
    let dim = 1usize << length;
    Ok((0..length)
        .map(|j| {
            let mut m = Op::zeros(dim, dim);
            for s in 0..dim {
                if s & (1 << j) != 0 {
                    let sign = if (s & ((1 << j) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    m[(s ^ (1 << j), s)] = Complex64::new(sign, 0.0);
                }
            }
            m
        })
        .collect())
}

fn dagger(m: &Op) -> Op {
    m.adjoint()
}

fn trace(m: &Op) -> Complex64 {
    m.diagonal().sum()
}

fn hermiticity_defect(m: &Op) -> f64 {
    (m - m.adjoint()).iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

fn max_abs(m: &Op) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Dense Lindbladian of a chain at fixed parameters.
#[derive(Debug, Clone)]
pub struct DenseLindbladSystem {
    pub length: usize,
    pub dim: usize,
    pub gamma: f64,
    pub momenta: Vec<f64>,
    pub energies: Vec<f64>,
    /// Quasiparticle annihilators `eta_k` in grid order.
    pub modes: Vec<Op>,
    pub hamiltonian: Op,
    pub jumps: Vec<JumpOperator>,
    /// `H - i gamma sum_j L_j^dagger L_j`.
    effective: Op,
}

impl DenseLindbladSystem {
    fn assemble(
        length: usize,
        momenta: Vec<f64>,
        energies: Vec<f64>,
        modes: Vec<Op>,
        hamiltonian: Op,
        bath: &BathParams,
        temperature: f64,
        zero: ZeroMode,
    ) -> Result<Self, OracleError> {
        let dim = 1usize << length;
        let mut jumps = Vec::with_capacity(2 * length);
        for (n, (eta, &lambda)) in modes.iter().zip(&energies).enumerate() {
            let rates = bath::rates_at(lambda, bath, temperature)?;
            if zero == ZeroMode::Combined && lambda == 0.0 {
                // At lambda = 0 the two rates coincide.
                jumps.push(JumpOperator {
                    mode: n,
                    kind: JumpKind::Hermitian,
                    rate: rates.up,
                    op: (eta + dagger(eta)) * Complex64::from(rates.up.sqrt()),
                });
                continue;
            }
            jumps.push(JumpOperator {
                mode: n,
                kind: JumpKind::Excitation,
                rate: rates.up,
                op: dagger(eta) * Complex64::from(rates.up.sqrt()),
            });
            jumps.push(JumpOperator {
                mode: n,
                kind: JumpKind::Decay,
                rate: rates.down,
                op: eta * Complex64::from(rates.down.sqrt()),
            });
        }
        let mut effective = hamiltonian.clone();
        for j in &jumps {
            effective -= (dagger(&j.op) * &j.op) * (I * bath.gamma);
        }
        Ok(DenseLindbladSystem {
            length,
            dim,
            gamma: bath.gamma,
            momenta,
            energies,
            modes,
            hamiltonian,
            jumps,
            effective,
        })
    }

    /// `d rho / dt`.
    pub fn rhs(&self, rho: &Op) -> Op {
        let h_rho = &self.effective * rho;
        let mut out = (&h_rho - h_rho.adjoint()) * (-I);
        let g2 = Complex64::from(2.0 * self.gamma);
        for j in &self.jumps {
            out += (&j.op * rho * dagger(&j.op)) * g2;
        }
        out
    }

    /// Largest entry of `d rho / dt`.
    pub fn stationarity_residual(&self, rho: &Op) -> f64 {
        max_abs(&self.rhs(rho))
    }

    /// Product state with the given quasiparticle occupation per mode.
    pub fn product_state(&self, occupations: &[f64]) -> Op {
        let mut rho = Op::identity(self.dim, self.dim);
        for (eta, &n) in self.modes.iter().zip(occupations) {
            let eta_d = dagger(eta);
            let factor = (eta * &eta_d) * Complex64::from(1.0 - n) + (&eta_d * eta) * Complex64::from(n);
            rho = rho * factor;
        }
        rho
    }

    /// Gibbs state of the quasiparticle Hamiltonian at temperature `t`.
    pub fn thermal_state(&self, temperature: f64) -> Op {
        let occ: Vec<f64> = self.energies.iter().map(|&l| bath::fermi_dirac(l, temperature)).collect();
        self.product_state(&occ)
    }

    pub fn initial_state(&self, init: InitialState, bath_temperature: f64) -> Op {
        let occ: Vec<f64> = self.energies.iter().map(|&l| init.occupation(l, bath_temperature)).collect();
        self.product_state(&occ)
    }

    /// `(k, Tr[rho eta_k^dagger eta_k])` in grid order.
    pub fn mode_occupations(&self, rho: &Op) -> Vec<(f64, f64)> {
        self.momenta
            .iter()
            .zip(&self.modes)
            .map(|(&k, eta)| (k, trace(&(rho * dagger(eta) * eta)).re))
            .collect()
    }

    /// Evolves `rho0` at these fixed parameters and samples at `times`.
    pub fn evolve(&self, rho0: &Op, times: &[f64], opts: &DenseOptions) -> Result<DenseTrajectory, OracleError> {
        let scale = self.energies.iter().sum::<f64>()
            + 4.0 * self.gamma * self.jumps.iter().map(|j| j.rate).sum::<f64>();
        converge(
            |_t: f64, rho: &Op| Ok(self.rhs(rho)),
            |_t: f64, rho: &Op| Ok(self.mode_occupations(rho).into_iter().map(|(_, n)| n).collect()),
            rho0,
            times,
            scale,
            opts,
        )
    }
}

/// The chain at fixed parameters in the quasiparticle basis, where the
/// Hamiltonian is `sum_k lambda_k (n_k - 1/2)`.
pub fn build_dense(params: &ChainParams, bath: &BathParams) -> Result<DenseLindbladSystem, OracleError> {
    build_dense_with(params, bath, ZeroMode::JumpPair)
}

pub fn build_dense_with(
    params: &ChainParams,
    bath: &BathParams,
    zero: ZeroMode,
) -> Result<DenseLindbladSystem, OracleError> {
    params.validate()?;
    bath.validate()?;
    let modes = fock_annihilators(params.length)?;
    let table = CouplingTable::new(params);
    let data = table.modes(params);
    let dim = 1usize << params.length;
    let mut h = Op::zeros(dim, dim);
    for (eta, m) in modes.iter().zip(&data) {
        h += (dagger(eta) * eta - Op::identity(dim, dim) * Complex64::from(0.5)) * Complex64::from(m.lambda);
    }
    DenseLindbladSystem::assemble(
        params.length,
        data.iter().map(|m| m.k).collect(),
        data.iter().map(|m| m.lambda).collect(),
        modes,
        h,
        bath,
        bath.temperature,
        zero,
    )
}

/// Fourier-basis operators that do not depend on `mu`.
struct FourierFrame {
    table: CouplingTable,
    params: ChainParams,
    a: Vec<Op>,
    /// `sum_k J g_k (n_k - a_{-k} a_{-k}^dagger)`: the hopping part of the BdG form.
    hopping: Op,
    /// `sum_k (n_k - a_{-k} a_{-k}^dagger)`, multiplied by `mu`.
    number: Op,
    /// `(1/2) sum_k Delta f_k (i a_k^dagger a_{-k}^dagger - i a_{-k} a_k)`.
    pairing: Op,
}

impl FourierFrame {
    fn new(params: &ChainParams) -> Result<Self, OracleError> {
        params.validate()?;
        let a = fock_annihilators(params.length)?;
        let table = CouplingTable::new(params);
        let grid = table.grid().clone();
        let dim = 1usize << params.length;
        let mut hopping = Op::zeros(dim, dim);
        let mut number = Op::zeros(dim, dim);
        let mut pairing = Op::zeros(dim, dim);
        for n in 0..params.length {
            let p = grid.partner(n);
            let diag = dagger(&a[n]) * &a[n] - &a[p] * dagger(&a[p]);
            hopping += &diag * Complex64::from(params.hopping * table.g(n));
            number += &diag;
            let anomalous = (dagger(&a[n]) * dagger(&a[p]) - &a[p] * &a[n]) * I;
            pairing += anomalous * Complex64::from(0.5 * params.pairing * table.f(n));
        }
        Ok(FourierFrame {
            table,
            params: params.clone(),
            a,
            hopping,
            number,
            pairing,
        })
    }

    fn system_at(&self, mu: f64, temperature: f64, bath: &BathParams, zero: ZeroMode) -> Result<DenseLindbladSystem, OracleError> {
        let params = self.params.with_mu(mu);
        let data = self.table.modes(&params);
        let grid = self.table.grid();
        let modes: Vec<Op> = data
            .iter()
            .enumerate()
            .map(|(n, m)| {
                let p = grid.partner(n);
                &self.a[n] * Complex64::from(m.beta.cos()) - dagger(&self.a[p]) * (I * m.beta.sin())
            })
            .collect();
        let h = &self.hopping + &self.number * Complex64::from(mu) + &self.pairing;
        DenseLindbladSystem::assemble(
            params.length,
            data.iter().map(|m| m.k).collect(),
            data.iter().map(|m| m.lambda).collect(),
            modes,
            h,
            bath,
            temperature,
            zero,
        )
    }
}

/// The chain at fixed parameters expressed in the Fourier basis.
pub fn build_dense_fourier(
    params: &ChainParams,
    bath: &BathParams,
    zero: ZeroMode,
) -> Result<DenseLindbladSystem, OracleError> {
    bath.validate()?;
    FourierFrame::new(params)?.system_at(params.chemical_potential, bath.temperature, bath, zero)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOptions {
    /// Largest allowed change of any sampled occupation between successive halvings.
    pub tolerance: f64,
    /// First step tried; derived from the energy and rate scales if absent.
    pub initial_step: Option<f64>,
    pub max_halvings: usize,
    pub zero_mode: ZeroMode,
    /// Forces a basis; by default constant protocols use the quasiparticle basis.
    pub basis: Option<Basis>,
}

impl Default for DenseOptions {
    fn default() -> Self {
        DenseOptions {
            tolerance: 1e-8,
            initial_step: None,
            max_halvings: 10,
            zero_mode: ZeroMode::JumpPair,
            basis: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DenseTrajectory {
    pub times: Vec<f64>,
    /// `occupations[sample][n]` in grid order.
    pub occupations: Vec<Vec<f64>>,
    /// The RK4 step of the accepted run.
    pub step: f64,
    /// Largest occupation change between the last two halvings.
    pub halving_change: f64,
    pub max_trace_drift: f64,
    pub max_hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    pub states: Vec<Op>,
}

fn rk4_step<F>(rhs: &F, t: f64, rho: &Op, h: f64) -> Result<Op, OracleError>
where
    F: Fn(f64, &Op) -> Result<Op, OracleError>,
{
    let half = Complex64::from(0.5 * h);
    let k1 = rhs(t, rho)?;
    let k2 = rhs(t + 0.5 * h, &(rho + &k1 * half))?;
    let k3 = rhs(t + 0.5 * h, &(rho + &k2 * half))?;
    let k4 = rhs(t + h, &(rho + &k3 * Complex64::from(h)))?;
    Ok(rho + (k1 + (k2 + k3) * Complex64::from(2.0) + k4) * Complex64::from(h / 6.0))
}

/// Fixed-step RK4 through the sample times; each interval gets a whole number of steps no longer than `h`.
fn rk4_run<F>(rhs: &F, rho0: &Op, times: &[f64], h: f64) -> Result<Vec<Op>, OracleError>
where
    F: Fn(f64, &Op) -> Result<Op, OracleError>,
{
    let mut out = Vec::with_capacity(times.len());
    let mut rho = rho0.clone();
    let mut t = times.first().copied().unwrap_or(0.0);
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let steps = (span / h).ceil().max(1.0) as usize;
            let dt = span / steps as f64;
            for i in 0..steps {
                rho = rk4_step(rhs, t + i as f64 * dt, &rho, dt)?;
            }
        }
        t = target;
        out.push(rho.clone());
    }
    Ok(out)
}

fn converge<F, G>(
    rhs: F,
    observe: G,
    rho0: &Op,
    times: &[f64],
    scale: f64,
    opts: &DenseOptions,
) -> Result<DenseTrajectory, OracleError>
where
    F: Fn(f64, &Op) -> Result<Op, OracleError>,
    G: Fn(f64, &Op) -> Result<Vec<f64>, OracleError>,
{
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(OracleError::Invalid("sample times must be nondecreasing".into()));
    }
    let defect = hermiticity_defect(rho0);
    if defect > 1e-10 || (trace(rho0) - 1.0).norm() > 1e-10 {
        return Err(OracleError::Invalid("initial state must be Hermitian with unit trace".into()));
    }
    let mut h = opts.initial_step.unwrap_or_else(|| (0.5 / scale.max(1e-12)).min(0.1));
    let observe_all = |states: &[Op]| -> Result<Vec<Vec<f64>>, OracleError> {
        times.iter().zip(states).map(|(&t, s)| observe(t, s)).collect()
    };
    let mut states = rk4_run(&rhs, rho0, times, h)?;
    let mut occ = observe_all(&states)?;
    let mut change = f64::INFINITY;
    for _ in 0..opts.max_halvings {
        h *= 0.5;
        let finer = rk4_run(&rhs, rho0, times, h)?;
        let finer_occ = observe_all(&finer)?;
        change = occ
            .iter()
            .flatten()
            .zip(finer_occ.iter().flatten())
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        states = finer;
        occ = finer_occ;
        if change < opts.tolerance {
            break;
        }
    }
    if !(change < opts.tolerance) {
        return Err(OracleError::NotConverged { step: h, change });
    }

    let mut max_trace_drift = 0.0f64;
    let mut max_defect = 0.0f64;
    let mut min_eigenvalue = f64::INFINITY;
    for (&t, rho) in times.iter().zip(&states) {
        let drift = (trace(rho) - 1.0).norm();
        if drift > 1e-8 {
            return Err(OracleError::TraceDrift { t, drift });
        }
        let defect = hermiticity_defect(rho);
        if defect > 1e-8 {
            return Err(OracleError::Hermiticity { t, defect });
        }
        let hermitian = (rho + rho.adjoint()) * Complex64::from(0.5);
        let low = hermitian.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        if low < -1e-8 {
            return Err(OracleError::Positivity { t, eigenvalue: low });
        }
        max_trace_drift = max_trace_drift.max(drift);
        max_defect = max_defect.max(defect);
        min_eigenvalue = min_eigenvalue.min(low);
    }
    Ok(DenseTrajectory {
        times: times.to_vec(),
        occupations: occ,
        step: h,
        halving_change: change,
        max_trace_drift,
        max_hermiticity_defect: max_defect,
        min_eigenvalue,
        states,
    })
}

fn is_constant(protocol: &Protocol) -> bool {
    use protocols::Schedule;
    matches!(protocol.mu, Schedule::Constant { .. }) && matches!(protocol.temperature, Schedule::Constant { .. })
}

/// Runs the whole chain through a protocol from `init` and samples the
/// quasiparticle occupations of the instantaneous Hamiltonian at `times`.
pub fn evolve_protocol(
    params: &ChainParams,
    bath: &BathParams,
    protocol: &Protocol,
    init: InitialState,
    times: &[f64],
    opts: &DenseOptions,
) -> Result<DenseTrajectory, OracleError> {
    if let Some(&t) = times.iter().find(|&&t| t < 0.0 || t > protocol.t_final()) {
        return Err(ProtocolError::Domain {
            t,
            t_final: protocol.t_final(),
        }
        .into());
    }
    let basis = opts
        .basis
        .unwrap_or(if is_constant(protocol) { Basis::Quasiparticle } else { Basis::Fourier });
    let t0_params = params.with_mu(protocol.mu(0.0));
    let t0_bath = bath.with_temperature(protocol.temperature(0.0));
    match basis {
        Basis::Quasiparticle => {
            if !is_constant(protocol) {
                return Err(OracleError::Invalid(
                    "the quasiparticle basis only applies to constant protocols".into(),
                ));
            }
            let sys = build_dense_with(&t0_params, &t0_bath, opts.zero_mode)?;
            let rho0 = sys.initial_state(init, t0_bath.temperature);
            sys.evolve(&rho0, times, opts)
        }
        Basis::Fourier => {
            let frame = FourierFrame::new(params)?;
            bath.validate()?;
            let at = |t: f64| frame.system_at(protocol.mu(t), protocol.temperature(t), bath, opts.zero_mode);
            let sys0 = at(0.0)?;
            let rho0 = sys0.initial_state(init, t0_bath.temperature);
            let scale = [0.0, protocol.t_final()]
                .iter()
                .map(|&t| {
                    at(t).map(|s| s.energies.iter().sum::<f64>() + 4.0 * s.gamma * s.jumps.iter().map(|j| j.rate).sum::<f64>())
                })
                .collect::<Result<Vec<f64>, _>>()?
                .into_iter()
                .fold(0.0, f64::max);
            converge(
                |t, rho| Ok(at(t)?.rhs(rho)),
                |t, rho| Ok(at(t)?.mode_occupations(rho).into_iter().map(|(_, n)| n).collect()),
                &rho0,
                times,
                scale,
                opts,
            )
        }
    }
}

/// Result of comparing the dense oracle with the factorized evolution.
#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub name: String,
    pub length: usize,
    pub samples: usize,
    /// Largest `|n_dense - n_fast|` over modes and sample times.
    pub max_deviation: f64,
    pub dense_step: f64,
}

/// Runs both evolutions on `samples` uniform times and reports the worst deviation.
pub fn compare_with_fast_path(
    name: &str,
    params: &ChainParams,
    bath: &BathParams,
    protocol: &Protocol,
    init: InitialState,
    samples: usize,
) -> Result<Comparison, OracleError> {
    let solver = SolverOptions::default().with_tolerances(1e-11, 1e-13);
    let fast = protocols::run_protocol(
        params,
        bath,
        protocol,
        init,
        &solver,
        &RunOptions::samples(samples).with_evolution(Evolution::Fourier),
    )?;
    let times: Vec<f64> = fast.samples.iter().map(|s| s.t).collect();
    let dense = evolve_protocol(params, bath, protocol, init, &times, &DenseOptions::default())?;
    let grid = params.grid();
    let half = params.length / 2;
    let mut worst = 0.0f64;
    for (fast_occ, dense_occ) in fast.occupations.iter().zip(&dense.occupations) {
        for (n, d) in dense_occ.iter().enumerate() {
            let rep = if n <= half { n } else { grid.partner(n) };
            worst = worst.max((d - fast_occ[rep]).abs());
        }
    }
    Ok(Comparison {
        name: name.to_string(),
        length: params.length,
        samples,
        max_deviation: worst,
        dense_step: dense.step,
    })
}

fn random_exponent(rng: &mut ChaCha8Rng) -> Exponent {
    if rng.random_bool(0.5) {
        Exponent::Infinite
    } else {
        Exponent::Finite(rng.random_range(1.2..3.0))
    }
}

/// Three random constant-parameter runs from the vacuum and one linear ramp
/// with `v = 0.5` through both critical points, each over `t in [0, 10]`.
pub fn equivalence_suite(length: usize, seed: u64) -> Result<Vec<Comparison>, OracleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for i in 0..3 {
        let params = ChainParams::new(
            length,
            rng.random_range(0.5..1.5),
            rng.random_range(0.5..1.5),
            rng.random_range(-2.0..2.0),
            random_exponent(&mut rng),
            random_exponent(&mut rng),
        )?;
        let bath = BathParams::ohmic(
            rng.random_range(0.1..1.0),
            rng.random_range(0.01..0.1),
            1.0,
            rng.random_range(5.0..50.0),
        )?;
        let protocol = Protocol::constant(params.chemical_potential, bath.temperature, 10.0)?;
        out.push(compare_with_fast_path(
            &format!("constant-{i}"),
            &params,
            &bath,
            &protocol,
            InitialState::Vacuum,
            21,
        )?);
    }
    let params = ChainParams::nearest_neighbor(length, 1.0, 1.0, -3.5)?;
    let bath = BathParams::ohmic(0.3, 0.05, 1.0, 10.0)?;
    let protocol = Protocol::linear_ramp(-3.5, 1.5, 0.5, bath.temperature)?;
    out.push(compare_with_fast_path(
        "ramp-v0.5",
        &params,
        &bath,
        &protocol,
        InitialState::Thermal(None),
        21,
    )?);
    Ok(out)
}

/// Evolves a two-site chain tuned to the `k = 0` critical point with both
/// forms of the zero-mode dissipator and returns the two `<eta_0^dagger eta_0>(t)`
/// series at `times`.
pub fn zero_mode_series(
    bath: &BathParams,
    init: InitialState,
    times: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), OracleError> {
    let params = ChainParams::nearest_neighbor(2, 1.0, 1.0, -1.0)?;
    let t_final = times.iter().copied().fold(0.0, f64::max);
    let protocol = Protocol::constant(-1.0, bath.temperature, t_final)?;
    let run = |zero_mode| {
        let opts = DenseOptions {
            zero_mode,
            ..DenseOptions::default()
        };
        evolve_protocol(&params, bath, &protocol, init, times, &opts)
            .map(|tr| tr.occupations.iter().map(|o| o[0]).collect::<Vec<f64>>())
    };
    Ok((run(ZeroMode::JumpPair)?, run(ZeroMode::Combined)?))
}
