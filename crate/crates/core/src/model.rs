//! The long-range Kitaev chain on a periodic ring.
//!
//! Hopping and pairing amplitudes decay with distance as `d_l^-phi` and
//! `d_l^-alpha`. After a Fourier transform the Hamiltonian splits into
//! independent `{k, -k}` pairs, each diagonalized by a Bogoliubov rotation
//! with angle `beta_k` and quasiparticle energy `lambda_k >= 0`.
//!
//! Angle convention: `lambda cos(2 beta) = 2 J g(k) + 2 mu` and
//! `lambda sin(2 beta) = -Delta f(k)`, with `beta` in `(-pi/2, pi/2]`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("chain length L must be even and at least 2, got {0}")]
    BadLength(usize),
    #[error("{name} must exceed 1, got {value}")]
    ExponentTooSmall { name: &'static str, value: f64 },
    #[error("{name} must be finite, got {value}")]
    NotFinite { name: &'static str, value: f64 },
    #[error("distance index l={l} outside 1..={max} for L={length}")]
    DistanceOutOfRange { l: usize, max: usize, length: usize },
}

/// Power-law decay exponent. `Infinite` selects the nearest-neighbour closed
/// forms (`cos k`, `sin k`) rather than a large float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    /// `2^(1/zeta)`, which is exactly 1 for an infinite exponent.
    pub fn half_ring_factor(self) -> f64 {
        match self {
            Exponent::Finite(z) => 2f64.powf(1.0 / z),
            Exponent::Infinite => 1.0,
        }
    }

    fn validate(self, name: &'static str) -> Result<(), ModelError> {
        match self {
            Exponent::Infinite => Ok(()),
            Exponent::Finite(z) if z.is_nan() => Err(ModelError::NotFinite { name, value: z }),
            Exponent::Finite(z) if z <= 1.0 => Err(ModelError::ExponentTooSmall { name, value: z }),
            Exponent::Finite(_) => Ok(()),
        }
    }
}

impl From<f64> for Exponent {
    fn from(value: f64) -> Self {
        if value == f64::INFINITY {
            Exponent::Infinite
        } else {
            Exponent::Finite(value)
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(z) => write!(f, "{z}"),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(Exponent::Infinite);
        }
        s.parse::<f64>()
            .map(Exponent::from)
            .map_err(|e| format!("invalid exponent {s:?}: {e}"))
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(z) => serializer.serialize_f64(*z),
            Exponent::Infinite => serializer.serialize_f64(f64::INFINITY),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(x) => Ok(Exponent::from(x)),
            Raw::Int(i) => Ok(Exponent::Finite(i as f64)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Static Hamiltonian parameters of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainParams {
    #[serde(rename = "L")]
    pub length: usize,
    #[serde(rename = "J")]
    pub hopping: f64,
    #[serde(rename = "Delta")]
    pub pairing: f64,
    #[serde(rename = "mu")]
    pub chemical_potential: f64,
    #[serde(rename = "phi")]
    pub hopping_exponent: Exponent,
    #[serde(rename = "alpha")]
    pub pairing_exponent: Exponent,
}

impl ChainParams {
    pub fn new(
        length: usize,
        hopping: f64,
        pairing: f64,
        chemical_potential: f64,
        hopping_exponent: Exponent,
        pairing_exponent: Exponent,
    ) -> Result<Self, ModelError> {
        let params = ChainParams {
            length,
            hopping,
            pairing,
            chemical_potential,
            hopping_exponent,
            pairing_exponent,
        };
        params.validate()?;
        Ok(params)
    }

    /// Kitaev's original chain with nearest-neighbour hopping and pairing.
    pub fn nearest_neighbor(
        length: usize,
        hopping: f64,
        pairing: f64,
        chemical_potential: f64,
    ) -> Result<Self, ModelError> {
        Self::new(
            length,
            hopping,
            pairing,
            chemical_potential,
            Exponent::Infinite,
            Exponent::Infinite,
        )
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.length < 2 || self.length % 2 != 0 {
            return Err(ModelError::BadLength(self.length));
        }
        for (name, value) in [
            ("J", self.hopping),
            ("Delta", self.pairing),
            ("mu", self.chemical_potential),
        ] {
            if !value.is_finite() {
                return Err(ModelError::NotFinite { name, value });
            }
        }
        self.hopping_exponent.validate("phi")?;
        self.pairing_exponent.validate("alpha")?;
        Ok(())
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        ChainParams {
            chemical_potential: mu,
            ..self.clone()
        }
    }

    pub fn grid(&self) -> ModeGrid {
        ModeGrid::new(self.length)
    }
}

/// The `L` lattice momenta `k_n = 2 pi n / L`, `n = 0..L`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeGrid {
    length: usize,
    momenta: Vec<f64>,
}

impl ModeGrid {
    pub fn new(length: usize) -> Self {
        let momenta = (0..length).map(|n| grid_momentum(n, length)).collect();
        ModeGrid { length, momenta }
    }

    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0
    }

    pub fn momenta(&self) -> &[f64] {
        &self.momenta
    }

    pub fn momentum(&self, n: usize) -> f64 {
        self.momenta[n]
    }

    /// Index of the partner momentum `-k mod 2 pi`.
    pub fn partner(&self, n: usize) -> usize {
        (self.length - n) % self.length
    }

    pub fn is_self_paired(&self, n: usize) -> bool {
        self.partner(n) == n
    }

    /// Indices of the self-paired momenta `k = 0` and (even `L`) `k = pi`.
    pub fn self_paired(&self) -> Vec<usize> {
        (0..self.length).filter(|&n| self.is_self_paired(n)).collect()
    }

    /// Representatives `n = 1..L/2` of the `{k, -k}` pairs, i.e. `k in (0, pi)`.
    pub fn pair_representatives(&self) -> std::ops::Range<usize> {
        1..self.length / 2
    }
}

fn grid_momentum(n: usize, length: usize) -> f64 {
    if 2 * n == length {
        PI
    } else {
        2.0 * PI * n as f64 / length as f64
    }
}

/// Per-momentum diagonalization data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeData {
    pub k: f64,
    pub lambda: f64,
    pub beta: f64,
    pub g: f64,
    pub f: f64,
}

impl ModeData {
    /// Builds the mode from precomputed coupling sums.
    pub fn from_couplings(k: f64, g: f64, f: f64, params: &ChainParams) -> Self {
        let diag = 2.0 * params.hopping * g + 2.0 * params.chemical_potential;
        let off = -params.pairing * f;
        let (lambda, beta) = energy_and_angle(diag, off);
        ModeData { k, lambda, beta, g, f }
    }

    pub fn cos2b(&self) -> f64 {
        (2.0 * self.beta).cos()
    }

    pub fn sin2b(&self) -> f64 {
        (2.0 * self.beta).sin()
    }
}

/// `(lambda, beta)` from `lambda cos 2b = diag`, `lambda sin 2b = off`.
pub(crate) fn energy_and_angle(diag: f64, off: f64) -> (f64, f64) {
    let lambda = diag.hypot(off);
    if lambda == 0.0 {
        return (0.0, 0.0);
    }
    let mut two_beta = off.atan2(diag);
    if two_beta <= -PI {
        two_beta = PI;
    }
    (lambda, 0.5 * two_beta)
}

/// Effective distance `d_l`, with the `2^(1/phi)` correction at `l = L/2`.
pub fn effective_distance(l: usize, length: usize, phi: Exponent) -> Result<f64, ModelError> {
    let max = length / 2;
    if l == 0 || l > max {
        return Err(ModelError::DistanceOutOfRange { l, max, length });
    }
    if 2 * l == length {
        Ok(phi.half_ring_factor() * l as f64)
    } else {
        Ok(l as f64)
    }
}

/// Pairwise (cascade) summation.
pub(crate) fn pairwise_sum(terms: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if terms.len() <= BLOCK {
        terms.iter().sum()
    } else {
        let (lo, hi) = terms.split_at(terms.len() / 2);
        pairwise_sum(lo) + pairwise_sum(hi)
    }
}

fn is_self_paired_momentum(k: f64) -> bool {
    let r = k.rem_euclid(2.0 * PI);
    r == 0.0 || r == PI
}

/// Hopping decay weights `d_l^-phi` for `l = 1..=L/2`.
fn hopping_weights(length: usize, phi: f64) -> Vec<f64> {
    let phi_exp = Exponent::Finite(phi);
    (1..=length / 2)
        .map(|l| {
            let d = effective_distance(l, length, phi_exp).expect("l within range");
            d.powf(-phi)
        })
        .collect()
}

/// Pairing decay weights `l^-alpha`; the half-ring correction only enters hopping.
fn pairing_weights(length: usize, alpha: f64) -> Vec<f64> {
    (1..=length / 2).map(|l| (l as f64).powf(-alpha)).collect()
}

/// `g_phi(k) = sum_l d_l^-phi cos(k l)`.
pub fn coupling_g(k: f64, params: &ChainParams) -> f64 {
    match params.hopping_exponent {
        Exponent::Infinite => k.cos(),
        Exponent::Finite(phi) => {
            let terms: Vec<f64> = hopping_weights(params.length, phi)
                .into_iter()
                .enumerate()
                .map(|(i, w)| w * (k * (i + 1) as f64).cos())
                .collect();
            pairwise_sum(&terms)
        }
    }
}

/// `f_alpha(k) = sum_l l^-alpha sin(k l)`; exactly zero at `k = 0, pi`.
pub fn coupling_f(k: f64, params: &ChainParams) -> f64 {
    if is_self_paired_momentum(k) {
        return 0.0;
    }
    match params.pairing_exponent {
        Exponent::Infinite => k.sin(),
        Exponent::Finite(alpha) => {
            let terms: Vec<f64> = pairing_weights(params.length, alpha)
                .into_iter()
                .enumerate()
                .map(|(i, w)| w * (k * (i + 1) as f64).sin())
                .collect();
            pairwise_sum(&terms)
        }
    }
}

pub fn mode_data(k: f64, params: &ChainParams) -> ModeData {
    ModeData::from_couplings(k, coupling_g(k, params), coupling_f(k, params), params)
}

/// Quasiparticle energy `lambda(k) = sqrt((2Jg + 2mu)^2 + (Delta f)^2)`.
pub fn dispersion(k: f64, params: &ChainParams) -> f64 {
    mode_data(k, params).lambda
}

pub fn bogoliubov_angle(k: f64, params: &ChainParams) -> f64 {
    mode_data(k, params).beta
}

/// Coupling sums `g(k_n)`, `f(k_n)` for every grid momentum. These depend only
/// on `L`, `phi` and `alpha`, so ramps of `mu` reuse one table.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTable {
    grid: ModeGrid,
    g: Vec<f64>,
    f: Vec<f64>,
}

impl CouplingTable {
    pub fn new(params: &ChainParams) -> Self {
        let length = params.length;
        let grid = ModeGrid::new(length);
        // cos/sin of 2 pi m / L, indexed by the exactly reduced phase m = n l mod L.
        let phase = |m: usize| grid_momentum(m, length);
        let cos_table: Vec<f64> = (0..length)
            .map(|m| if m == 0 { 1.0 } else { phase(m).cos() })
            .collect();
        let sin_table: Vec<f64> = (0..length)
            .map(|m| if 2 * m == length || m == 0 { 0.0 } else { phase(m).sin() })
            .collect();

        let half = length / 2;
        let hop = match params.hopping_exponent {
            Exponent::Finite(phi) => Some(hopping_weights(length, phi)),
            Exponent::Infinite => None,
        };
        let pair = match params.pairing_exponent {
            Exponent::Finite(alpha) => Some(pairing_weights(length, alpha)),
            Exponent::Infinite => None,
        };

        let mut g = Vec::with_capacity(length);
        let mut f = Vec::with_capacity(length);
        let mut scratch = vec![0.0; half];
        for n in 0..length {
            g.push(match &hop {
                None => cos_table[n],
                Some(w) => {
                    for (l, s) in scratch.iter_mut().enumerate() {
                        *s = w[l] * cos_table[(n * (l + 1)) % length];
                    }
                    pairwise_sum(&scratch)
                }
            });
            f.push(if grid.is_self_paired(n) {
                0.0
            } else {
                match &pair {
                    None => sin_table[n],
                    Some(w) => {
                        for (l, s) in scratch.iter_mut().enumerate() {
                            *s = w[l] * sin_table[(n * (l + 1)) % length];
                        }
                        pairwise_sum(&scratch)
                    }
                }
            });
        }
        CouplingTable { grid, g, f }
    }

    pub fn grid(&self) -> &ModeGrid {
        &self.grid
    }

    pub fn g(&self, n: usize) -> f64 {
        self.g[n]
    }

    pub fn f(&self, n: usize) -> f64 {
        self.f[n]
    }

    /// Mode data at grid index `n` for the given (possibly ramped) parameters.
    pub fn mode(&self, n: usize, params: &ChainParams) -> ModeData {
        ModeData::from_couplings(self.grid.momentum(n), self.g[n], self.f[n], params)
    }

    pub fn modes(&self, params: &ChainParams) -> Vec<ModeData> {
        (0..self.grid.len()).map(|n| self.mode(n, params)).collect()
    }
}

/// The `V` and `S` blocks of the combined Fourier/Bogoliubov transformation
/// `c = V eta + S eta^dagger`.
#[derive(Debug, Clone)]
pub struct TransformPair {
    pub v: DMatrix<Complex64>,
    pub s: DMatrix<Complex64>,
}

impl TransformPair {
    /// `V + S^*`, the matrix whose unitarity collapses the dissipator onto
    /// single-mode jump operators.
    pub fn phi(&self) -> DMatrix<Complex64> {
        &self.v + self.s.map(|z| z.conj())
    }
}

/// Dense `V`, `S` with `V_jk = e^{-ijk} cos(beta_k)/sqrt(L)` and
/// `S_jk = -i e^{ijk} sin(beta_k)/sqrt(L)`, sites `j = 1..=L`. O(L^2) storage.
pub fn build_transform(params: &ChainParams) -> TransformPair {
    let table = CouplingTable::new(params);
    let length = params.length;
    let norm = 1.0 / (length as f64).sqrt();
    let modes = table.modes(params);
    let v = DMatrix::from_fn(length, length, |row, col| {
        let j = (row + 1) as f64;
        let m = &modes[col];
        Complex64::from_polar(norm * m.beta.cos(), -j * m.k)
    });
    let s = DMatrix::from_fn(length, length, |row, col| {
        let j = (row + 1) as f64;
        let m = &modes[col];
        Complex64::new(0.0, -1.0) * Complex64::from_polar(norm * m.beta.sin(), j * m.k)
    });
    TransformPair { v, s }
}

/// Which gap closure a boundary line tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapClosure {
    /// `k = 0`: `mu/J = -g(0)`.
    ZeroMomentum,
    /// `k = pi`: `mu/J = -g(pi)`.
    PiMomentum,
}

/// Which long-range exponent is varied; the other is nearest-neighbour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExponentFamily {
    /// `alpha = inf`, `zeta = phi`.
    Hopping,
    /// `phi = inf`, `zeta = alpha`; the boundaries are the constant lines `-1`, `+1`.
    Pairing,
}

/// Critical `mu/J` at which the `k = 0` or `k = pi` gap closes.
pub fn phase_boundary(
    zeta: Exponent,
    which: GapClosure,
    family: ExponentFamily,
    length: usize,
) -> Result<f64, ModelError> {
    let (phi, alpha) = match family {
        ExponentFamily::Hopping => (zeta, Exponent::Infinite),
        ExponentFamily::Pairing => (Exponent::Infinite, zeta),
    };
    let params = ChainParams::new(length, 1.0, 1.0, 0.0, phi, alpha)?;
    let k = match which {
        GapClosure::ZeroMomentum => 0.0,
        GapClosure::PiMomentum => PI,
    };
    Ok(-coupling_g(k, &params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn nn(length: usize, j: f64, delta: f64, mu: f64) -> ChainParams {
        ChainParams::nearest_neighbor(length, j, delta, mu).unwrap()
    }

    #[test]
    fn effective_distance_branches() {
        let phi2 = Exponent::Finite(2.0);
        assert_eq!(effective_distance(3, 8, phi2).unwrap(), 3.0);
        assert_relative_eq!(
            effective_distance(4, 8, phi2).unwrap(),
            4.0 * 2f64.sqrt(),
            epsilon = 1e-14
        );
        assert_relative_eq!(effective_distance(4, 8, phi2).unwrap(), 5.65685, epsilon = 1e-5);
        assert_eq!(effective_distance(4, 8, Exponent::Infinite).unwrap(), 4.0);
        assert!(effective_distance(0, 8, phi2).is_err());
        assert!(effective_distance(5, 8, phi2).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(
            ChainParams::nearest_neighbor(7, 1.0, 1.0, 0.0),
            Err(ModelError::BadLength(7))
        );
        assert!(ChainParams::nearest_neighbor(0, 1.0, 1.0, 0.0).is_err());
        let err = ChainParams::new(8, 1.0, 1.0, 0.0, Exponent::Finite(0.5), Exponent::Infinite)
            .unwrap_err();
        assert_eq!(err.to_string(), "phi must exceed 1, got 0.5");
        assert!(ChainParams::new(8, 1.0, 1.0, 0.0, Exponent::Infinite, Exponent::Finite(1.0)).is_err());
    }

    #[test]
    fn grid_pairing_is_an_involution() {
        for length in [2, 4, 6, 16] {
            let grid = ModeGrid::new(length);
            assert_eq!(grid.len(), length);
            for n in 0..length {
                assert_eq!(grid.partner(grid.partner(n)), n);
            }
            assert_eq!(grid.self_paired(), vec![0, length / 2]);
            assert_eq!(grid.momentum(length / 2), PI);
            assert_eq!(grid.pair_representatives().len(), length / 2 - 1);
        }
    }

    #[test]
    fn nearest_neighbor_couplings() {
        let p = nn(8, 1.0, 1.0, 0.0);
        assert_eq!(coupling_g(0.0, &p), 1.0);
        assert_eq!(coupling_g(PI, &p), -1.0);
        assert_eq!(coupling_f(0.0, &p), 0.0);
        assert_eq!(coupling_f(PI, &p), 0.0);
        assert_eq!(coupling_f(PI / 2.0, &p), 1.0);
        let lr = ChainParams::new(8, 1.0, 1.0, 0.0, Exponent::Finite(2.0), Exponent::Finite(1.5))
            .unwrap();
        assert_eq!(coupling_f(0.0, &lr), 0.0);
        assert_eq!(coupling_f(PI, &lr), 0.0);
    }

    #[test]
    fn dispersion_examples() {
        assert_eq!(dispersion(0.0, &nn(8, 1.0, 1.0, -1.0)), 0.0);
        assert_eq!(dispersion(PI, &nn(8, 1.0, 1.0, 0.0)), 2.0);
        assert_relative_eq!(dispersion(PI / 2.0, &nn(8, 1.0, 1.0, 0.0)), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn angle_examples() {
        assert_eq!(bogoliubov_angle(0.0, &nn(8, 1.0, 1.0, 0.3)), 0.0);
        assert_relative_eq!(
            bogoliubov_angle(PI / 2.0, &nn(8, 1.0, 1.0, 0.0)),
            -PI / 4.0,
            epsilon = 1e-15
        );
        // Below the k=0 gap closing the diagonal term is negative: beta = pi/2.
        assert_eq!(bogoliubov_angle(0.0, &nn(8, 1.0, 1.0, -2.0)), PI / 2.0);
        // Degenerate point.
        assert_eq!(bogoliubov_angle(0.0, &nn(8, 1.0, 1.0, -1.0)), 0.0);

        let p = nn(6, 1.0, 0.5, -0.2);
        let m = mode_data(PI / 3.0, &p);
        assert_relative_eq!(m.lambda * m.cos2b(), 0.6, epsilon = 1e-14);
        assert_relative_eq!(m.lambda * m.sin2b(), -0.25 * 3f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(m.lambda * m.sin2b(), -0.4330127, epsilon = 1e-7);
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let p = ChainParams::new(64, 0.7, 1.3, -0.4, Exponent::Finite(1.7), Exponent::Finite(2.5))
            .unwrap();
        let table = CouplingTable::new(&p);
        for n in 0..64 {
            let k = table.grid().momentum(n);
            assert_relative_eq!(table.g(n), coupling_g(k, &p), epsilon = 1e-13);
            assert_relative_eq!(table.f(n), coupling_f(k, &p), epsilon = 1e-13);
        }
    }

    #[test]
    fn nn_dispersion_closed_form() {
        for &mu in &[-1.7, -0.5, 0.0, 0.9] {
            let p = nn(32, 1.0, 0.8, mu);
            let table = CouplingTable::new(&p);
            for n in 0..32 {
                let k = table.grid().momentum(n);
                let closed = ((2.0 * k.cos() + 2.0 * mu).powi(2) + (0.8 * k.sin()).powi(2)).sqrt();
                assert_relative_eq!(table.mode(n, &p).lambda, closed, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn phase_boundaries_nearest_neighbor() {
        for family in [ExponentFamily::Hopping, ExponentFamily::Pairing] {
            let b0 = phase_boundary(Exponent::Infinite, GapClosure::ZeroMomentum, family, 1500);
            let bpi = phase_boundary(Exponent::Infinite, GapClosure::PiMomentum, family, 1500);
            assert_eq!(b0.unwrap(), -1.0);
            assert_eq!(bpi.unwrap(), 1.0);
        }
        let b = phase_boundary(Exponent::Finite(3.0), GapClosure::ZeroMomentum, ExponentFamily::Pairing, 1500);
        assert_eq!(b.unwrap(), -1.0);
    }

    #[test]
    fn transform_small_chains() {
        // L = 4, Delta = 0: only beta = 0 or pi/2 occur, S nonzero only in those columns.
        let p = nn(4, 1.0, 0.0, -0.3);
        let t = build_transform(&p);
        let modes = CouplingTable::new(&p).modes(&p);
        for (col, m) in modes.iter().enumerate() {
            let col_norm: f64 = (0..4).map(|r| t.s[(r, col)].norm()).sum();
            if m.beta.sin().abs() < 1e-15 {
                assert!(col_norm < 1e-15);
            } else {
                assert!(col_norm > 0.1);
            }
        }
        let t2 = build_transform(&nn(2, 1.0, 1.0, 0.2));
        let id = DMatrix::<Complex64>::identity(2, 2);
        let a = &t2.v * t2.v.adjoint() + &t2.s * t2.s.adjoint();
        assert!((a - id).norm() < 1e-14);
    }

    fn transform_residuals(p: &ChainParams) -> [f64; 6] {
        let TransformPair { v, s } = build_transform(p);
        let id = DMatrix::<Complex64>::identity(p.length, p.length);
        let conj = |m: &DMatrix<Complex64>| m.map(|z| z.conj());
        let phi = TransformPair { v: v.clone(), s: s.clone() }.phi();
        [
            (&v * v.adjoint() + &s * s.adjoint() - &id).norm(),
            (v.adjoint() * &v + s.transpose() * conj(&s) - &id).norm(),
            (&v * s.transpose() + &s * v.transpose()).norm(),
            (s.transpose() * conj(&v) + v.adjoint() * &s).norm(),
            (v.transpose() * &s + s.adjoint() * conj(&v)).norm(),
            (phi.adjoint() * &phi - &id).norm(),
        ]
    }

    #[test]
    fn transform_unitary_example() {
        let r = transform_residuals(&nn(8, 1.0, 1.0, -0.5));
        assert!(r[5] < 1e-12, "{r:?}");
    }

    #[test]
    fn g_zero_matches_compensated_sum() {
        let p = ChainParams::new(1500, 1.0, 1.0, 0.0, Exponent::Finite(2.0), Exponent::Infinite).unwrap();
        // Neumaier summation of the 750 terms, largest first.
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for l in 1..=750usize {
            let d = if l == 750 { 2f64.sqrt() * 750.0 } else { l as f64 };
            let x = 1.0 / (d * d);
            let t = sum + x;
            comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
            sum = t;
        }
        assert!((coupling_g(0.0, &p) - (sum + comp)).abs() < 1e-12);
    }

    #[test]
    fn spectrum_is_even_in_k() {
        let p = ChainParams::new(16, 0.7, 1.3, -0.4, Exponent::Finite(1.5), Exponent::Finite(2.5)).unwrap();
        let grid = p.grid();
        for n in 0..16 {
            let (a, b) = (mode_data(grid.momentum(n), &p), mode_data(grid.momentum(grid.partner(n)), &p));
            assert_relative_eq!(a.lambda, b.lambda, epsilon = 1e-13);
            assert_relative_eq!(a.cos2b(), b.cos2b(), epsilon = 1e-13);
            assert_relative_eq!(a.sin2b(), -b.sin2b(), epsilon = 1e-13);
        }
    }

    proptest::proptest! {
        #[test]
        fn transform_invariants(
            half in 1usize..=4,
            j in -2.0f64..2.0,
            delta in -2.0f64..2.0,
            mu in -3.0f64..3.0,
            phi in 1.1f64..6.0,
            alpha in 1.1f64..6.0,
        ) {
            let length = [2, 4, 8, 16][half - 1];
            let p = ChainParams::new(length, j, delta, mu, Exponent::Finite(phi), Exponent::Finite(alpha)).unwrap();
            for r in transform_residuals(&p) {
                proptest::prop_assert!(r < 1e-12);
            }
        }
    }
}
