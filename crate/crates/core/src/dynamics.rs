//! Two-point correlation dynamics of the open chain.
//!
//! Each `{k, -k}` pair of Fourier modes evolves independently. Three
//! equivalent formulations are available per pair: the 4x4 Majorana
//! correlation block, the Fourier-fermion pair `(<a_k^dagger a_k>,
//! <a_k^dagger a_{-k}^dagger>)` used in production, and the quasiparticle pair
//! `(<eta_k^dagger eta_k>, <eta_k^dagger eta_{-k}^dagger>)`, which needs the
//! rate of change of the Bogoliubov angle. The self-paired momenta `0` and
//! `pi` carry a single occupation each.
//!
//! Conventions: `lambda cos 2b = 2Jg + 2mu`, `lambda sin 2b = -Delta f` and
//! `eta_k^dagger = cos b a_k^dagger + i sin b a_{-k}`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{self, BathError, BathParams, BathRates};
use crate::model::{ChainParams, CouplingTable, ModeData};
use crate::solver::{OdeSystem, RhsError};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// State of one `{k, -k}` pair in the Fourier basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierBlockState {
    pub k: f64,
    /// `<a_k^dagger a_k>`, equal to `<a_{-k}^dagger a_{-k}>` for the states used here.
    pub n_a: f64,
    /// `<a_k^dagger a_{-k}^dagger>`.
    pub p: Complex64,
}

impl FourierBlockState {
    pub fn to_array(&self) -> [f64; 3] {
        [self.n_a, self.p.re, self.p.im]
    }

    pub fn from_slice(k: f64, y: &[f64]) -> Self {
        FourierBlockState {
            k,
            n_a: y[0],
            p: c(y[1], y[2]),
        }
    }
}

/// Occupation `<a_k^dagger a_k>` of a self-paired momentum `k in {0, pi}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfPairedState {
    pub k: f64,
    pub n_a: f64,
}

/// `C_ij = <w_i w_j> - delta_ij` for the Majoranas `w_1 = a_k + a_k^dagger`,
/// `w_2 = i (a_k - a_k^dagger)` and `w_3`, `w_4` likewise for `-k`.
/// Physical blocks are antisymmetric and purely imaginary.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationBlock {
    pub k: f64,
    pub c: Matrix4<Complex64>,
}

/// Upper-triangle index pairs in the order used for the flat real storage.
const UPPER: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

impl CorrelationBlock {
    /// Block of a pair state with `<a_{-k}^dagger a_{-k}> = <a_k^dagger a_k>`
    /// and no `<a_k^dagger a_{-k}>` coherence.
    pub fn from_fourier(s: &FourierBlockState) -> Self {
        Self::from_fourier_parts(s.k, s.n_a, s.n_a, s.p, Complex64::new(0.0, 0.0))
    }

    /// General pair block with `s = <a_k^dagger a_{-k}>`.
    pub fn from_fourier_parts(k: f64, n_k: f64, n_minus_k: f64, p: Complex64, s: Complex64) -> Self {
        let x = [
            2.0 * n_k - 1.0,
            2.0 * (p + s).im,
            -2.0 * (p - s).re,
            -2.0 * (p + s).re,
            -2.0 * (p - s).im,
            2.0 * n_minus_k - 1.0,
        ];
        Self::from_real(k, &x)
    }

    /// `C = i x` from the six upper-triangle entries of the real antisymmetric `x`.
    pub fn from_real(k: f64, x: &[f64]) -> Self {
        let mut m = Matrix4::zeros();
        for (v, &(i, j)) in x.iter().zip(UPPER.iter()) {
            m[(i, j)] = c(0.0, *v);
            m[(j, i)] = c(0.0, -*v);
        }
        CorrelationBlock { k, c: m }
    }

    pub fn to_real(&self) -> [f64; 6] {
        UPPER.map(|(i, j)| self.c[(i, j)].im)
    }

    /// `<a_k^dagger a_k>`.
    pub fn n_k(&self) -> f64 {
        0.5 * (1.0 + self.c[(0, 1)].im)
    }

    /// `<a_{-k}^dagger a_{-k}>`.
    pub fn n_minus_k(&self) -> f64 {
        0.5 * (1.0 + self.c[(2, 3)].im)
    }

    /// `<a_k^dagger a_{-k}^dagger>`.
    pub fn p(&self) -> Complex64 {
        let m = &self.c;
        0.25 * (m[(0, 2)] + I * m[(0, 3)] + I * m[(1, 2)] - m[(1, 3)])
    }

    pub fn fourier(&self) -> FourierBlockState {
        FourierBlockState {
            k: self.k,
            n_a: self.n_k(),
            p: self.p(),
        }
    }

    /// Largest violation of antisymmetry and of `C` being purely imaginary.
    pub fn structure_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((self.c[(i, j)] + self.c[(j, i)]).norm());
                worst = worst.max(self.c[(i, j)].re.abs());
            }
        }
        worst
    }
}

/// Quasiparticle pair state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaBlockState {
    pub k: f64,
    /// `<eta_k^dagger eta_k>`.
    pub n_eta: f64,
    /// `<eta_k^dagger eta_{-k}^dagger>`.
    pub q: Complex64,
}

impl EtaBlockState {
    pub fn to_array(&self) -> [f64; 3] {
        [self.n_eta, self.q.re, self.q.im]
    }

    pub fn from_slice(k: f64, y: &[f64]) -> Self {
        EtaBlockState {
            k,
            n_eta: y[0],
            q: c(y[1], y[2]),
        }
    }
}

/// Correlations of the whole chain: one block per pair `k in (0, pi)` plus
/// the two self-paired momenta.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub pairs: Vec<FourierBlockState>,
    pub self0: SelfPairedState,
    pub selfpi: SelfPairedState,
    pub t: f64,
}

impl ChainState {
    pub fn length(&self) -> usize {
        2 * self.pairs.len() + 2
    }

    /// Real degrees of freedom: three per pair plus one per self-paired mode.
    pub fn degrees_of_freedom(&self) -> usize {
        3 * self.pairs.len() + 2
    }
}

/// `H_{k,-k}` with `H_S = sum w . H w` on the pair's Majoranas.
pub fn h_block(mode: &ModeData) -> Matrix4<Complex64> {
    let (c2, s2) = (mode.cos2b(), mode.sin2b());
    let z = c(0.0, 0.0);
    let r = |x: f64| c(x, 0.0);
    Matrix4::new(
        z, r(-c2), r(-s2), z, //
        r(c2), z, z, r(s2), //
        r(s2), z, z, r(-c2), //
        z, r(-s2), r(c2), z,
    ) * c(0.0, 0.25 * mode.lambda)
}

/// `M_{k,-k} = sum_mu l_mu (x) l_mu^*` for the pair's two jump operators.
pub fn m_block(mode: &ModeData, rates: &BathRates, gamma: f64) -> Matrix4<Complex64> {
    let (c2, s2) = (mode.cos2b(), mode.sin2b());
    let g1 = c(rates.sum, 0.0);
    let a = rates.diff * c2;
    let b = rates.diff * s2;
    let z = c(0.0, 0.0);
    Matrix4::new(
        g1, c(0.0, -a), c(0.0, -b), z, //
        c(0.0, a), g1, z, c(0.0, b), //
        c(0.0, b), z, g1, c(0.0, -a), //
        z, c(0.0, -b), c(0.0, a), g1,
    ) * c(0.25 * gamma, 0.0)
}

/// `dC/dt = -2 [X^T C + C X + 4i Im M]` with `X = -2i H + 2 Re M`.
pub fn block_rhs(block: &CorrelationBlock, mode: &ModeData, rates: &BathRates, gamma: f64) -> Matrix4<Complex64> {
    let h = h_block(mode);
    let m = m_block(mode, rates, gamma);
    let m_re = m.map(|z| c(z.re, 0.0));
    let m_im = m.map(|z| c(z.im, 0.0));
    let x = h * c(0.0, -2.0) + m_re * c(2.0, 0.0);
    (x.transpose() * block.c + block.c * x + m_im * c(0.0, 4.0)) * c(-2.0, 0.0)
}

/// Pair dynamics in the Fourier basis; returns `(d n_a/dt, dp/dt)`.
pub fn fourier_rhs(s: &FourierBlockState, mode: &ModeData, rates: &BathRates, gamma: f64) -> (f64, Complex64) {
    fourier_rhs_raw(s.n_a, s.p, mode.lambda, mode.cos2b(), mode.sin2b(), rates, gamma)
}

fn fourier_rhs_raw(n: f64, p: Complex64, lambda: f64, c2: f64, s2: f64, r: &BathRates, gamma: f64) -> (f64, Complex64) {
    let dn = gamma * (r.sum + r.diff * c2 - 2.0 * r.sum * n) - lambda * s2 * 2.0 * p.re;
    let dp = gamma * (c(0.0, r.diff * s2) - 2.0 * r.sum * p) + lambda * (s2 * (2.0 * n - 1.0) + 2.0 * I * c2 * p);
    (dn, dp)
}

/// Occupation dynamics of a self-paired momentum, where `f = 0` removes the
/// pairing partner: the pair equation with `p` dropped.
pub fn selfpaired_rhs(s: &SelfPairedState, mode: &ModeData, rates: &BathRates, gamma: f64) -> f64 {
    gamma * (rates.sum + rates.diff * mode.cos2b() - 2.0 * rates.sum * s.n_a)
}

/// Pair dynamics in the quasiparticle basis; returns `(d n_eta/dt, dq/dt)`.
pub fn eta_rhs(s: &EtaBlockState, mode: &ModeData, rates: &BathRates, gamma: f64, beta_dot: f64) -> (f64, Complex64) {
    eta_rhs_raw(s.n_eta, s.q, mode.lambda, rates, gamma, beta_dot)
}

fn eta_rhs_raw(n: f64, q: Complex64, lambda: f64, r: &BathRates, gamma: f64, beta_dot: f64) -> (f64, Complex64) {
    let dn = -gamma * (2.0 * r.sum * n - r.diff - r.sum) + (I * beta_dot * (q.conj() - q)).re;
    let dq = -2.0 * gamma * r.sum * q - 2.0 * I * beta_dot * (n - 0.5) + 2.0 * I * lambda * q;
    (dn, dq)
}

/// Rate equation `dn/dt = -2 gamma Gamma_1 (n - n_FD)`, written through the
/// rates so that it also holds at `T = 0`.
pub fn rate_rhs(n_eta: f64, rates: &BathRates, gamma: f64) -> f64 {
    -gamma * (2.0 * rates.sum * n_eta - rates.diff - rates.sum)
}

/// `<eta_k^dagger eta_k> = cos 2b (n_a - 1/2) + sin 2b Im p + 1/2`.
pub fn occupation_from_fourier(s: &FourierBlockState, mode: &ModeData) -> f64 {
    mode.cos2b() * (s.n_a - 0.5) + mode.sin2b() * s.p.im + 0.5
}

/// Quasiparticle occupation of a self-paired momentum.
pub fn selfpaired_occupation(s: &SelfPairedState, mode: &ModeData) -> f64 {
    mode.cos2b() * (s.n_a - 0.5) + 0.5
}

pub fn eta_from_fourier(s: &FourierBlockState, mode: &ModeData) -> EtaBlockState {
    let (c2, s2) = (mode.cos2b(), mode.sin2b());
    let cos_sq = 0.5 * (1.0 + c2);
    let sin_sq = 0.5 * (1.0 - c2);
    EtaBlockState {
        k: s.k,
        n_eta: occupation_from_fourier(s, mode),
        q: cos_sq * s.p + sin_sq * s.p.conj() + c(0.0, 0.5 * s2 * (1.0 - 2.0 * s.n_a)),
    }
}

pub fn fourier_from_eta(e: &EtaBlockState, mode: &ModeData) -> FourierBlockState {
    let (c2, s2) = (mode.cos2b(), mode.sin2b());
    let cos_sq = 0.5 * (1.0 + c2);
    let sin_sq = 0.5 * (1.0 - c2);
    FourierBlockState {
        k: e.k,
        n_a: c2 * (e.n_eta - 0.5) - s2 * e.q.im + 0.5,
        p: cos_sq * e.q + sin_sq * e.q.conj() - c(0.0, 0.5 * s2 * (1.0 - 2.0 * e.n_eta)),
    }
}

/// Starting state of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum InitialState {
    /// Gibbs state at the given temperature, or at the bath temperature.
    Thermal(Option<f64>),
    /// Quasiparticle vacuum of the initial Hamiltonian.
    Vacuum,
    /// Every quasiparticle mode occupied.
    FullyExcited,
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialState::Thermal(None) => write!(f, "thermal"),
            InitialState::Thermal(Some(t)) => write!(f, "thermal({t})"),
            InitialState::Vacuum => write!(f, "vacuum"),
            InitialState::FullyExcited => write!(f, "fully-excited"),
        }
    }
}

impl FromStr for InitialState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "thermal" => return Ok(InitialState::Thermal(None)),
            "vacuum" => return Ok(InitialState::Vacuum),
            "fully-excited" => return Ok(InitialState::FullyExcited),
            _ => {}
        }
        let inner = s
            .strip_prefix("thermal(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| format!("unknown initial state {s:?} (expected thermal, thermal(T), vacuum or fully-excited)"))?;
        let t: f64 = inner
            .trim()
            .parse()
            .map_err(|e| format!("bad temperature in {s:?}: {e}"))?;
        if !(t >= 0.0) || !t.is_finite() {
            return Err(format!("initial temperature must be finite and nonnegative, got {t}"));
        }
        Ok(InitialState::Thermal(Some(t)))
    }
}

impl TryFrom<String> for InitialState {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<InitialState> for String {
    fn from(s: InitialState) -> String {
        s.to_string()
    }
}

impl InitialState {
    /// Quasiparticle occupation of a mode of energy `lambda`.
    pub fn occupation(&self, lambda: f64, bath_temperature: f64) -> f64 {
        match *self {
            InitialState::Thermal(t) => bath::fermi_dirac(lambda, t.unwrap_or(bath_temperature)),
            InitialState::Vacuum => 0.0,
            InitialState::FullyExcited => 1.0,
        }
    }
}

/// Fourier pair state with quasiparticle occupation `n_eta` and no anomalous
/// quasiparticle correlation.
pub fn pair_with_occupation(mode: &ModeData, n_eta: f64) -> FourierBlockState {
    fourier_from_eta(
        &EtaBlockState {
            k: mode.k,
            n_eta,
            q: c(0.0, 0.0),
        },
        mode,
    )
}

fn selfpaired_with_occupation(mode: &ModeData, n_eta: f64) -> SelfPairedState {
    SelfPairedState {
        k: mode.k,
        n_a: mode.cos2b() * (n_eta - 0.5) + 0.5,
    }
}

/// Chain state built from per-mode quasiparticle occupations.
pub fn prepare_state(table: &CouplingTable, params: &ChainParams, occupation: impl Fn(&ModeData) -> f64) -> ChainState {
    let grid = table.grid();
    let pairs = grid
        .pair_representatives()
        .map(|n| {
            let mode = table.mode(n, params);
            pair_with_occupation(&mode, occupation(&mode))
        })
        .collect();
    let m0 = table.mode(0, params);
    let mpi = table.mode(grid.len() / 2, params);
    ChainState {
        pairs,
        self0: selfpaired_with_occupation(&m0, occupation(&m0)),
        selfpi: selfpaired_with_occupation(&mpi, occupation(&mpi)),
        t: 0.0,
    }
}

pub fn initial_state(table: &CouplingTable, params: &ChainParams, init: InitialState, bath_temperature: f64) -> ChainState {
    prepare_state(table, params, |m| init.occupation(m.lambda, bath_temperature))
}

/// Gibbs state of the chain at the bath temperature: the fixed point of the
/// pair equations, `n_a = (1 - cos 2b tanh(lambda/2T))/2`,
/// `p = -(i/2) sin 2b tanh(lambda/2T)`.
pub fn thermal_state(params: &ChainParams, bath: &BathParams) -> ChainState {
    let table = CouplingTable::new(params);
    initial_state(&table, params, InitialState::Thermal(None), bath.temperature)
}

/// `(k, <eta_k^dagger eta_k>)` for every grid momentum in grid order.
pub fn mode_occupations(state: &ChainState, table: &CouplingTable, params: &ChainParams) -> Vec<(f64, f64)> {
    let grid = table.grid();
    let length = grid.len();
    let mut out = vec![(0.0, 0.0); length];
    let m0 = table.mode(0, params);
    out[0] = (m0.k, selfpaired_occupation(&state.self0, &m0));
    let mpi = table.mode(length / 2, params);
    out[length / 2] = (mpi.k, selfpaired_occupation(&state.selfpi, &mpi));
    for (s, n) in state.pairs.iter().zip(grid.pair_representatives()) {
        let mode = table.mode(n, params);
        let occ = occupation_from_fourier(s, &mode);
        out[n] = (mode.k, occ);
        let partner = grid.partner(n);
        out[partner] = (grid.momentum(partner), occ);
    }
    out
}

/// `E = (1/L) sum_k <eta_k^dagger eta_k>`, summed in grid order.
pub fn excitation_density_with(state: &ChainState, table: &CouplingTable, params: &ChainParams) -> f64 {
    let occ = mode_occupations(state, table, params);
    occ.iter().map(|&(_, n)| n).sum::<f64>() / occ.len() as f64
}

pub fn excitation_density(state: &ChainState, params: &ChainParams) -> f64 {
    excitation_density_with(state, &CouplingTable::new(params), params)
}

/// Time dependence of the control parameters seen by the mode equations.
pub trait Drive: Sync {
    fn mu(&self, t: f64) -> f64;
    fn mu_dot(&self, t: f64) -> f64;
    fn temperature(&self, t: f64) -> f64;
}

/// Time-independent parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fixed {
    pub mu: f64,
    pub temperature: f64,
}

impl Drive for Fixed {
    fn mu(&self, _t: f64) -> f64 {
        self.mu
    }
    fn mu_dot(&self, _t: f64) -> f64 {
        0.0
    }
    fn temperature(&self, _t: f64) -> f64 {
        self.temperature
    }
}

/// Instantaneous coefficients of one momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Instant {
    pub lambda: f64,
    pub cos2b: f64,
    pub sin2b: f64,
    pub rates: BathRates,
    pub beta_dot: f64,
}

/// Everything needed to evaluate the equations of one momentum at any time.
pub struct ModeCoefficients<'a, D: Drive + ?Sized> {
    pub k: f64,
    pub g: f64,
    pub f: f64,
    pub hopping: f64,
    pub pairing: f64,
    pub bath: &'a BathParams,
    pub drive: &'a D,
}

impl<D: Drive + ?Sized> Clone for ModeCoefficients<'_, D> {
    fn clone(&self) -> Self {
        ModeCoefficients { ..*self }
    }
}

impl<'a, D: Drive + ?Sized> ModeCoefficients<'a, D> {
    pub fn new(table: &CouplingTable, n: usize, params: &ChainParams, bath: &'a BathParams, drive: &'a D) -> Self {
        ModeCoefficients {
            k: table.grid().momentum(n),
            g: table.g(n),
            f: table.f(n),
            hopping: params.hopping,
            pairing: params.pairing,
            bath,
            drive,
        }
    }

    pub fn at(&self, t: f64) -> Result<Instant, BathError> {
        let mu = self.drive.mu(t);
        let diag = 2.0 * self.hopping * self.g + 2.0 * mu;
        let off = -self.pairing * self.f;
        let lambda = diag.hypot(off);
        let (cos2b, sin2b, beta_dot) = if lambda == 0.0 {
            (1.0, 0.0, 0.0)
        } else {
            let bd = if self.f == 0.0 {
                0.0
            } else {
                self.drive.mu_dot(t) * self.pairing * self.f / (lambda * lambda)
            };
            (diag / lambda, off / lambda, bd)
        };
        let rates = if self.bath.gamma == 0.0 {
            BathRates::from_up_down(0.0, 0.0)
        } else {
            bath::rates_at(lambda, self.bath, self.drive.temperature(t))?
        };
        Ok(Instant {
            lambda,
            cos2b,
            sin2b,
            rates,
            beta_dot,
        })
    }

    fn instant(&self, t: f64) -> Result<Instant, RhsError> {
        self.at(t).map_err(|e| RhsError(format!("k={}: {e}", self.k)))
    }

    /// Mode data at time `t` (with the angle itself, not only its cosine and sine).
    pub fn mode(&self, t: f64, params: &ChainParams) -> ModeData {
        ModeData::from_couplings(self.k, self.g, self.f, &params.with_mu(self.drive.mu(t)))
    }
}

/// `y = (n_a, Re p, Im p)`.
pub struct FourierPairSystem<'a, D: Drive + ?Sized>(pub ModeCoefficients<'a, D>);

impl<D: Drive + ?Sized> OdeSystem for FourierPairSystem<'_, D> {
    fn dim(&self) -> usize {
        3
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), RhsError> {
        let m = self.0.instant(t)?;
        let (dn, dp) = fourier_rhs_raw(y[0], c(y[1], y[2]), m.lambda, m.cos2b, m.sin2b, &m.rates, self.0.bath.gamma);
        dy[0] = dn;
        dy[1] = dp.re;
        dy[2] = dp.im;
        Ok(())
    }

    fn jacobian(&self, t: f64, _y: &[f64], jac: &mut DMatrix<f64>) -> Result<bool, RhsError> {
        let m = self.0.instant(t)?;
        let d = -2.0 * self.0.bath.gamma * m.rates.sum;
        let ls = 2.0 * m.lambda * m.sin2b;
        let lc = 2.0 * m.lambda * m.cos2b;
        jac.copy_from_slice(&[d, ls, 0.0, -ls, d, lc, 0.0, -lc, d]);
        Ok(true)
    }
}

/// `y = (n_eta, Re q, Im q)`.
pub struct EtaPairSystem<'a, D: Drive + ?Sized>(pub ModeCoefficients<'a, D>);

impl<D: Drive + ?Sized> OdeSystem for EtaPairSystem<'_, D> {
    fn dim(&self) -> usize {
        3
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), RhsError> {
        let m = self.0.instant(t)?;
        let (dn, dq) = eta_rhs_raw(y[0], c(y[1], y[2]), m.lambda, &m.rates, self.0.bath.gamma, m.beta_dot);
        dy[0] = dn;
        dy[1] = dq.re;
        dy[2] = dq.im;
        Ok(())
    }

    fn jacobian(&self, t: f64, _y: &[f64], jac: &mut DMatrix<f64>) -> Result<bool, RhsError> {
        let m = self.0.instant(t)?;
        let d = -2.0 * self.0.bath.gamma * m.rates.sum;
        let b = 2.0 * m.beta_dot;
        let l = 2.0 * m.lambda;
        // Column-major.
        jac.copy_from_slice(&[d, 0.0, -b, 0.0, d, l, b, -l, d]);
        Ok(true)
    }
}

/// Quasiparticle occupation under the rate equation alone, `y = (n_eta)`.
pub struct RateSystem<'a, D: Drive + ?Sized>(pub ModeCoefficients<'a, D>);

impl<D: Drive + ?Sized> OdeSystem for RateSystem<'_, D> {
    fn dim(&self) -> usize {
        1
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), RhsError> {
        let m = self.0.instant(t)?;
        dy[0] = rate_rhs(y[0], &m.rates, self.0.bath.gamma);
        Ok(())
    }

    fn jacobian(&self, t: f64, _y: &[f64], jac: &mut DMatrix<f64>) -> Result<bool, RhsError> {
        let m = self.0.instant(t)?;
        jac[(0, 0)] = -2.0 * self.0.bath.gamma * m.rates.sum;
        Ok(true)
    }
}

/// Self-paired momentum in the Fourier basis, `y = (n_a)`.
pub struct SelfPairedSystem<'a, D: Drive + ?Sized>(pub ModeCoefficients<'a, D>);

impl<D: Drive + ?Sized> OdeSystem for SelfPairedSystem<'_, D> {
    fn dim(&self) -> usize {
        1
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), RhsError> {
        let m = self.0.instant(t)?;
        let r = &m.rates;
        dy[0] = self.0.bath.gamma * (r.sum + r.diff * m.cos2b - 2.0 * r.sum * y[0]);
        Ok(())
    }

    fn jacobian(&self, t: f64, _y: &[f64], jac: &mut DMatrix<f64>) -> Result<bool, RhsError> {
        let m = self.0.instant(t)?;
        jac[(0, 0)] = -2.0 * self.0.bath.gamma * m.rates.sum;
        Ok(true)
    }
}

/// Full 4x4 Majorana block, `y` = upper triangle of `x` where `C = i x`.
pub struct BlockSystem<'a, D: Drive + ?Sized> {
    pub coeffs: ModeCoefficients<'a, D>,
    pub params: &'a ChainParams,
}

impl<D: Drive + ?Sized> OdeSystem for BlockSystem<'_, D> {
    fn dim(&self) -> usize {
        6
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), RhsError> {
        let m = self.coeffs.instant(t)?;
        let mode = ModeData {
            lambda: m.lambda,
            ..self.coeffs.mode(t, self.params)
        };
        let block = CorrelationBlock::from_real(self.coeffs.k, y);
        let d = block_rhs(&block, &mode, &m.rates, self.coeffs.bath.gamma);
        for (out, &(i, j)) in dy.iter_mut().zip(UPPER.iter()) {
            *out = d[(i, j)].im;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Exponent;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn mode(lambda: f64, beta: f64) -> ModeData {
        ModeData {
            k: 0.7,
            lambda,
            beta,
            g: 0.0,
            f: 0.0,
        }
    }

    fn thermal_rates(lambda: f64, t: f64) -> BathRates {
        bath::rates(lambda, &BathParams::ohmic(t, 0.01, 1.0, 4000.0).unwrap()).unwrap()
    }

    fn thermal_pair(m: &ModeData, t: f64) -> FourierBlockState {
        let th = (m.lambda / (2.0 * t)).tanh();
        FourierBlockState {
            k: m.k,
            n_a: 0.5 * (1.0 - m.cos2b() * th),
            p: c(0.0, -0.5 * m.sin2b() * th),
        }
    }

    fn max_norm(m: &Matrix4<Complex64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn h_block_structure() {
        let h = h_block(&mode(2.0, 0.0));
        assert!(max_norm(&(h + h.transpose())) < 1e-15);
        assert_eq!(h[(0, 2)], c(0.0, 0.0));
        assert_eq!(h[(1, 3)], c(0.0, 0.0));
        assert_relative_eq!(h[(0, 1)].im, -0.5);
        assert_relative_eq!(h[(2, 3)].im, -0.5);

        let h = h_block(&mode(2.0, std::f64::consts::FRAC_PI_4));
        let expect = Matrix4::new(
            0.0, 0.0, -0.5, 0.0, //
            0.0, 0.0, 0.0, 0.5, //
            0.5, 0.0, 0.0, 0.0, //
            0.0, -0.5, 0.0, 0.0,
        )
        .map(|x| c(0.0, x));
        assert!(max_norm(&(h - expect)) < 1e-15, "{h}");
    }

    #[test]
    fn m_block_structure() {
        let r = thermal_rates(1.3, 0.4);
        let m = m_block(&mode(1.3, 0.3), &r, 0.01);
        assert!(max_norm(&(m - m.adjoint())) < 1e-15);
        assert_relative_eq!(m.trace().re, 0.01 * r.sum, max_relative = 1e-14);
        for i in 0..4 {
            assert_relative_eq!(m[(i, i)].re, 0.01 * r.sum / 4.0);
        }
        let m = m_block(&mode(1.3, 0.3), &BathRates::from_up_down(2.0, 2.0), 0.5);
        assert!(max_norm(&(m - Matrix4::identity() * c(0.5, 0.0))) < 1e-15);
    }

    #[test]
    fn fourier_thermal_fixed_point() {
        for (lambda, beta, t) in [(1.0, 0.3, 0.5), (2.5, -1.1, 0.181), (0.4, 1.4, 2.0)] {
            let m = mode(lambda, beta);
            let r = thermal_rates(lambda, t);
            let (dn, dp) = fourier_rhs(&thermal_pair(&m, t), &m, &r, 0.01);
            assert!(dn.abs() < 1e-14 && dp.norm() < 1e-14, "{dn} {dp}");
        }
    }

    #[test]
    fn fourier_limits() {
        let m = mode(1.7, 0.0);
        let s = FourierBlockState {
            k: 0.7,
            n_a: 0.3,
            p: c(0.1, -0.2),
        };
        let (dn, dp) = fourier_rhs(&s, &m, &BathRates::from_up_down(0.0, 0.0), 0.0);
        assert_eq!(dn, 0.0);
        assert!((dp - 2.0 * I * 1.7 * s.p).norm() < 1e-15);

        let r = thermal_rates(0.8, 0.3);
        let (dn, _) = fourier_rhs(&s, &mode(0.0, 0.0), &r, 0.02);
        assert_relative_eq!(dn, 0.02 * (r.sum + r.diff - 2.0 * r.sum * 0.3), max_relative = 1e-14);
    }

    #[test]
    fn block_rhs_matches_fourier_rhs() {
        let m = mode(1.9, 0.45);
        let r = thermal_rates(1.9, 0.6);
        let s = FourierBlockState {
            k: 0.7,
            n_a: 0.35,
            p: c(0.12, -0.27),
        };
        let d = block_rhs(&CorrelationBlock::from_fourier(&s), &m, &r, 0.03);
        let (dn, dp) = fourier_rhs(&s, &m, &r, 0.03);
        // Derivatives map linearly: dn = d x_12 / 2, dp from the same combination as p.
        assert_relative_eq!(0.5 * d[(0, 1)].im, dn, epsilon = 1e-14);
        assert_relative_eq!(0.5 * d[(2, 3)].im, dn, epsilon = 1e-14);
        let dp_block = 0.25 * (d[(0, 2)] + I * d[(0, 3)] + I * d[(1, 2)] - d[(1, 3)]);
        assert!((dp_block - dp).norm() < 1e-14);
    }

    #[test]
    fn block_thermal_fixed_point() {
        let m = mode(1.2, -0.8);
        let r = thermal_rates(1.2, 0.25);
        let block = CorrelationBlock::from_fourier(&thermal_pair(&m, 0.25));
        assert!(max_norm(&block_rhs(&block, &m, &r, 0.01)) < 1e-12);
    }

    #[test]
    fn closed_diagonal_block_is_stationary() {
        let s = FourierBlockState {
            k: 0.7,
            n_a: 0.2,
            p: c(0.0, 0.0),
        };
        let d = block_rhs(&CorrelationBlock::from_fourier(&s), &mode(0.0, 0.0), &BathRates::from_up_down(0.0, 0.0), 0.0);
        assert!(max_norm(&d) < 1e-15);
    }

    #[test]
    fn block_round_trip() {
        let b = CorrelationBlock::from_fourier_parts(0.3, 0.2, 0.6, c(0.1, -0.3), c(0.05, 0.02));
        assert!(b.structure_defect() < 1e-15);
        assert_relative_eq!(b.n_k(), 0.2, epsilon = 1e-15);
        assert_relative_eq!(b.n_minus_k(), 0.6, epsilon = 1e-15);
        let x = b.to_real();
        assert_eq!(CorrelationBlock::from_real(0.3, &x), b);
        let s = FourierBlockState {
            k: 0.3,
            n_a: 0.4,
            p: c(-0.2, 0.15),
        };
        let back = CorrelationBlock::from_fourier(&s).fourier();
        assert_relative_eq!(back.n_a, s.n_a, epsilon = 1e-15);
        assert!((back.p - s.p).norm() < 1e-15);
    }

    #[test]
    fn selfpaired_examples() {
        let m = mode(2.0, 0.0);
        let r = thermal_rates(2.0, 0.3);
        let fd = bath::fermi_dirac(2.0, 0.3);
        let s = SelfPairedState { k: 0.0, n_a: fd };
        assert!(selfpaired_rhs(&s, &m, &r, 0.01).abs() < 1e-16);
        let s = SelfPairedState { k: 0.0, n_a: 0.7 };
        assert_relative_eq!(selfpaired_rhs(&s, &m, &r, 0.01), -2.0 * 0.01 * r.sum * (0.7 - fd), max_relative = 1e-12);

        let zero = BathParams::ohmic(0.0, 0.01, 1.0, 4000.0).unwrap();
        let r0 = bath::rates(2.0, &zero).unwrap();
        assert_relative_eq!(selfpaired_rhs(&s, &m, &r0, 0.01), -2.0 * 0.01 * r0.sum * 0.7, max_relative = 1e-14);

        // Gapless mode: rate 2 gamma (2 pi delta T) towards 1/2.
        let t = 0.181;
        let rc = bath::rates(0.0, &BathParams::ohmic(t, 0.01, 1.0, 4000.0).unwrap()).unwrap();
        let s = SelfPairedState { k: 0.0, n_a: 0.9 };
        let rate = -selfpaired_rhs(&s, &mode(0.0, 0.0), &rc, 0.01) / (0.9 - 0.5);
        assert_relative_eq!(rate, 2.0 * 0.01 * 2.0 * std::f64::consts::PI * t, max_relative = 1e-14);
    }

    #[test]
    fn eta_reduces_to_rate_equation() {
        let r = thermal_rates(1.4, 0.5);
        let s = EtaBlockState {
            k: 0.7,
            n_eta: 0.3,
            q: c(0.02, 0.05),
        };
        let (dn, _) = eta_rhs(&s, &mode(1.4, 0.2), &r, 0.01, 0.0);
        assert_relative_eq!(dn, rate_rhs(0.3, &r, 0.01), max_relative = 1e-14);
        let fd = bath::fermi_dirac(1.4, 0.5);
        assert_relative_eq!(dn, -2.0 * 0.01 * r.sum * (0.3 - fd), max_relative = 1e-12);
    }

    #[test]
    fn occupation_examples() {
        let s = FourierBlockState {
            k: 0.7,
            n_a: 0.3,
            p: c(0.0, 0.0),
        };
        assert_relative_eq!(occupation_from_fourier(&s, &mode(1.0, 0.0)), 0.3, epsilon = 1e-15);
        let x: f64 = 0.8;
        let s = FourierBlockState {
            k: 0.7,
            n_a: 0.5,
            p: c(0.0, -0.5 * x.tanh()),
        };
        assert_relative_eq!(
            occupation_from_fourier(&s, &mode(1.0, std::f64::consts::FRAC_PI_4)),
            0.5 * (1.0 - x.tanh()),
            epsilon = 1e-15
        );
        let s = FourierBlockState {
            k: 0.7,
            n_a: 0.5,
            p: c(0.0, 0.0),
        };
        for beta in [-1.2, 0.0, 0.4, 1.5] {
            assert_relative_eq!(occupation_from_fourier(&s, &mode(1.0, beta)), 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn thermal_state_properties() {
        let params = ChainParams::nearest_neighbor(16, 1.0, 1.0, -0.5).unwrap();
        let bath = BathParams::ohmic(0.4, 0.01, 1.0, 4000.0).unwrap();
        let table = CouplingTable::new(&params);
        let state = thermal_state(&params, &bath);
        assert_eq!(state.pairs.len(), 7);
        assert_eq!(state.degrees_of_freedom(), 3 * 7 + 2);
        for (s, n) in state.pairs.iter().zip(table.grid().pair_representatives()) {
            let m = table.mode(n, &params);
            let r = bath::rates(m.lambda, &bath).unwrap();
            let (dn, dp) = fourier_rhs(s, &m, &r, bath.gamma);
            assert!(dn.abs() < 1e-12 && dp.norm() < 1e-12);
        }
        let expect: f64 = table
            .modes(&params)
            .iter()
            .map(|m| bath::fermi_dirac(m.lambda, 0.4))
            .sum::<f64>()
            / 16.0;
        assert_relative_eq!(excitation_density(&state, &params), expect, max_relative = 1e-12);

        let cold = thermal_state(&params, &bath.with_temperature(0.0));
        for (_, n) in mode_occupations(&cold, &table, &params) {
            assert!(n.abs() < 1e-15);
        }
        assert!(excitation_density(&cold, &params).abs() < 1e-15);

        let hot = thermal_state(&params, &bath.with_temperature(1e12));
        for s in &hot.pairs {
            assert!((s.n_a - 0.5).abs() < 1e-9 && s.p.norm() < 1e-9);
        }

        let full = initial_state(&table, &params, InitialState::FullyExcited, 0.4);
        assert_relative_eq!(excitation_density_with(&full, &table, &params), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn initial_state_parsing() {
        assert_eq!("thermal".parse::<InitialState>().unwrap(), InitialState::Thermal(None));
        assert_eq!("thermal(0.181)".parse::<InitialState>().unwrap(), InitialState::Thermal(Some(0.181)));
        assert_eq!("vacuum".parse::<InitialState>().unwrap(), InitialState::Vacuum);
        assert_eq!("fully-excited".parse::<InitialState>().unwrap(), InitialState::FullyExcited);
        assert!("thermal(-1)".parse::<InitialState>().is_err());
        assert!("hot".parse::<InitialState>().is_err());
        for s in [InitialState::Thermal(Some(0.5)), InitialState::Vacuum] {
            assert_eq!(s.to_string().parse::<InitialState>().unwrap(), s);
        }
    }

    #[test]
    fn coefficients_match_mode_data() {
        let params = ChainParams::new(12, 1.0, 0.7, -0.4, Exponent::Finite(1.7), Exponent::Finite(2.3)).unwrap();
        let bath = BathParams::ohmic(0.3, 0.01, 1.0, 4000.0).unwrap();
        let table = CouplingTable::new(&params);
        let drive = Fixed {
            mu: -0.4,
            temperature: 0.3,
        };
        for n in 0..12 {
            let coeffs = ModeCoefficients::new(&table, n, &params, &bath, &drive);
            let inst = coeffs.at(0.0).unwrap();
            let m = table.mode(n, &params);
            assert_relative_eq!(inst.lambda, m.lambda, max_relative = 1e-15);
            assert!((inst.cos2b - m.cos2b()).abs() < 1e-14);
            assert!((inst.sin2b - m.sin2b()).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn conversions_are_inverse(beta in -1.5f64..1.5, n in 0.0f64..1.0, pr in -0.5f64..0.5, pi in -0.5f64..0.5) {
            let m = mode(1.0, beta);
            let s = FourierBlockState { k: 0.7, n_a: n, p: c(pr, pi) };
            let back = fourier_from_eta(&eta_from_fourier(&s, &m), &m);
            prop_assert!((back.n_a - s.n_a).abs() < 1e-14);
            prop_assert!((back.p - s.p).norm() < 1e-14);
        }

        #[test]
        fn eta_rhs_is_fourier_rhs_in_the_rotating_frame(
            beta in -1.5f64..1.5, lambda in 0.1f64..5.0, t in 0.05f64..3.0,
            n in 0.0f64..1.0, pr in -0.4f64..0.4, pi in -0.4f64..0.4,
        ) {
            // At fixed angle (beta_dot = 0) the two formulations are related by a
            // constant linear map, so their vector fields must correspond.
            let m = mode(lambda, beta);
            let r = thermal_rates(lambda, t);
            let s = FourierBlockState { k: 0.7, n_a: n, p: c(pr, pi) };
            let e = eta_from_fourier(&s, &m);
            let (dn, dp) = fourier_rhs(&s, &m, &r, 0.05);
            let (den, deq) = eta_rhs(&e, &m, &r, 0.05, 0.0);
            let ds = FourierBlockState { k: 0.7, n_a: dn, p: dp };
            // Linear part of the conversion applied to the derivative.
            let c2 = m.cos2b();
            let s2 = m.sin2b();
            let dn_eta = c2 * ds.n_a + s2 * ds.p.im;
            let dq = 0.5 * (1.0 + c2) * ds.p + 0.5 * (1.0 - c2) * ds.p.conj() - c(0.0, s2 * ds.n_a);
            prop_assert!((dn_eta - den).abs() < 1e-12);
            prop_assert!((dq - deq).norm() < 1e-12);
        }

        #[test]
        fn block_rhs_preserves_structure(
            beta in -1.5f64..1.5, lambda in 0.0f64..5.0, t in 0.05f64..3.0,
            x in proptest::array::uniform6(-1.0f64..1.0),
        ) {
            let m = mode(lambda, beta);
            let r = thermal_rates(lambda.max(1e-3), t);
            let d = block_rhs(&CorrelationBlock::from_real(0.7, &x), &m, &r, 0.05);
            let out = CorrelationBlock { k: 0.7, c: d };
            prop_assert!(out.structure_defect() < 1e-12);
        }
    }
}
