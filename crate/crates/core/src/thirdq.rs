//! Third-quantization data for the open chain.
//!
//! In the quasiparticle Majorana basis `w_{2n-1} = eta + eta^dagger`,
//! `w_{2n} = i (eta - eta^dagger)` the structure matrix is block diagonal with
//! one 4x4 block per mode, so every quantity here is computed mode by mode.
//! [`full_structure_matrix`] assembles the whole `4L x 4L` matrix from the
//! Hamiltonian and jump-operator coefficient vectors and exists to check that
//! factorization on small chains.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;
use thiserror::Error;

use crate::bath::{self, BathError, BathParams, BathRates};
use crate::model::{ChainParams, CouplingTable, ModeData};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn im(x: f64) -> Complex64 {
    Complex64::new(0.0, x)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThirdQuantError {
    #[error("mode k={k} has a zero rapidity; the steady state is not unique")]
    ZeroRapidity { k: f64 },
    #[error("mode k={k}: {reason}")]
    UnsupportedRates { k: f64, reason: &'static str },
    #[error("full structure matrix is limited to L <= {max}, got {length}")]
    TooLarge { length: usize, max: usize },
    #[error(transparent)]
    Bath(#[from] BathError),
}

/// The 4x4 block `A_n` of the structure matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureBlock {
    pub k: f64,
    pub a: Matrix4<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RapidityPair {
    pub plus: Complex64,
    pub minus: Complex64,
}

impl RapidityPair {
    /// `{r_+, -r_+, r_-, -r_-}`.
    pub fn signed_spectrum(&self) -> [Complex64; 4] {
        [self.plus, -self.plus, self.minus, -self.minus]
    }
}

/// Steady-state `<w_j w_k> - delta_jk` for the Majorana pair of one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct NessBlock {
    pub k: f64,
    pub corr: Matrix2<Complex64>,
}

impl NessBlock {
    /// `<eta^dagger eta> = (1 + i <w_2 w_1>) / 2`.
    pub fn occupation(&self) -> f64 {
        0.5 * (1.0 + (I * self.corr[(1, 0)]).re)
    }
}

/// `R` couples `w_{2n-1}` with the partner of `w_{2n}` in the doubled space.
pub fn rotation_matrix() -> Matrix4<Complex64> {
    let o = re(0.0);
    let p = re(1.0);
    let m = re(-1.0);
    Matrix4::new(
        o, o, p, o, //
        o, o, o, p, //
        m, o, o, o, //
        o, m, o, o,
    )
}

/// Dissipative block `B_{x,y}`.
pub fn dissipation_matrix(x: f64, y: f64) -> Matrix4<Complex64> {
    let o = re(0.0);
    Matrix4::new(
        o, im(x / 2.0), im(-y / 2.0), re(y / 2.0), //
        im(-x / 2.0), o, re(y / 2.0), im(y / 2.0), //
        im(y / 2.0), re(-y / 2.0), o, im(x / 2.0), //
        re(-y / 2.0), im(-y / 2.0), im(-x / 2.0), o,
    )
}

/// `A_n = -(lambda/2) R + gamma B_{Gamma_1, Gamma_2}`.
pub fn structure_block(mode: &ModeData, rates: &BathRates, gamma: f64) -> StructureBlock {
    let a = rotation_matrix() * re(-mode.lambda / 2.0) + dissipation_matrix(rates.sum, rates.diff) * re(gamma);
    StructureBlock { k: mode.k, a }
}

/// `r_pm = (gamma Gamma_1 +- i lambda) / 2`.
pub fn rapidities(mode: &ModeData, rates: &BathRates, gamma: f64) -> RapidityPair {
    let damping = 0.5 * gamma * rates.sum;
    RapidityPair {
        plus: Complex64::new(damping, 0.5 * mode.lambda),
        minus: Complex64::new(damping, -0.5 * mode.lambda),
    }
}

/// Normalized eigenvector rows of `A_n`, satisfying `V V^T = 1 (x) sigma^x`.
///
/// Rows 1-4 are right eigenvectors of `A_n` with eigenvalues
/// `r_-, -r_-, r_+, -r_+`.
pub fn v_block(mode: &ModeData, rates: &BathRates) -> Result<Matrix4<Complex64>, ThirdQuantError> {
    if !(rates.up > 0.0) || !(rates.down > 0.0) {
        return Err(ThirdQuantError::UnsupportedRates {
            k: mode.k,
            reason: "eigenvector normalization needs Gamma_+ > 0 and Gamma_- > 0",
        });
    }
    let rho = rates.diff / rates.sum;
    let zm = (rates.sum / (2.0 * rates.down)).sqrt();
    let zp = (rates.sum / (2.0 * rates.up)).sqrt();
    let a = 0.5 * zm * (1.0 + rho);
    let b = 0.5 * zp * (1.0 - rho);
    let cm = 0.5 / zm;
    let cp = 0.5 / zp;
    Ok(Matrix4::new(
        re(a), im(-cm), im(a), re(cm), //
        re(cm), im(cm), im(-cm), re(cm), //
        re(-b), im(cp), im(b), re(cp), //
        re(-cp), im(-cp), im(-cp), re(cp),
    ))
}

/// Steady-state Majorana correlations from the eigenvector rows:
/// `<w_j w_k> = delta_jk + 1/2 sum_m (V_{2m,2j-1} - i V_{2m,2j}) (V_{2m-1,2k-1} - i V_{2m-1,2k})`.
pub fn ness_correlation(
    mode: &ModeData,
    rates: &BathRates,
    gamma: f64,
) -> Result<NessBlock, ThirdQuantError> {
    let r = rapidities(mode, rates, gamma);
    if r.plus.norm() == 0.0 {
        return Err(ThirdQuantError::ZeroRapidity { k: mode.k });
    }
    let v = v_block(mode, rates)?;
    let mut corr = Matrix2::zeros();
    for j in 0..2 {
        for k in 0..2 {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..2 {
                let left = v[(2 * m + 1, 2 * j)] - I * v[(2 * m + 1, 2 * j + 1)];
                let right = v[(2 * m, 2 * k)] - I * v[(2 * m, 2 * k + 1)];
                acc += left * right;
            }
            corr[(j, k)] = 0.5 * acc;
        }
    }
    Ok(NessBlock { k: mode.k, corr })
}

/// Fermi-Dirac occupation of the thermal steady state.
pub fn ness_occupation(mode: &ModeData, temperature: f64) -> f64 {
    bath::fermi_dirac(mode.lambda, temperature)
}

/// Full structure data for a small chain.
#[derive(Debug, Clone)]
pub struct FullStructure {
    /// Antisymmetric `H` with `H_S = w . H w` (2L x 2L).
    pub h: DMatrix<Complex64>,
    /// `M = sum_mu l_mu (x) l_mu^*` (2L x 2L).
    pub m: DMatrix<Complex64>,
    /// Structure matrix (4L x 4L).
    pub a: DMatrix<Complex64>,
    /// `X = -2i H + 2 Re M` (2L x 2L), whose eigenvalues are the rapidities.
    pub x: DMatrix<Complex64>,
    pub modes: Vec<ModeData>,
    pub rates: Vec<BathRates>,
}

impl FullStructure {
    /// Largest magnitude of any entry of `A` outside the per-mode 4x4 blocks.
    pub fn off_block_max(&self) -> f64 {
        let n = self.a.nrows();
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in 0..n {
                if r / 4 != c / 4 {
                    worst = worst.max(self.a[(r, c)].norm());
                }
            }
        }
        worst
    }

    pub fn mode_block(&self, n: usize) -> Matrix4<Complex64> {
        self.a.fixed_view::<4, 4>(4 * n, 4 * n).into_owned()
    }
}

pub const FULL_STRUCTURE_MAX_L: usize = 16;

/// Assembles `H`, `M`, `A` and `X` for the whole chain in the quasiparticle
/// Majorana basis; mode `n` owns Majoranas `2n, 2n+1` (zero based).
pub fn full_structure_matrix(
    params: &ChainParams,
    bath: &BathParams,
) -> Result<FullStructure, ThirdQuantError> {
    let length = params.length;
    if length > FULL_STRUCTURE_MAX_L {
        return Err(ThirdQuantError::TooLarge {
            length,
            max: FULL_STRUCTURE_MAX_L,
        });
    }
    let modes = CouplingTable::new(params).modes(params);
    let rates = modes
        .iter()
        .map(|m| bath::rates(m.lambda, bath))
        .collect::<Result<Vec<_>, _>>()?;

    let dim = 2 * length;
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    let sqrt_gamma = bath.gamma.sqrt();
    for (n, (mode, r)) in modes.iter().zip(&rates).enumerate() {
        let (odd, even) = (2 * n, 2 * n + 1);
        // (i/2) lambda w_{2n} w_{2n-1}, split antisymmetrically.
        h[(even, odd)] = im(mode.lambda / 4.0);
        h[(odd, even)] = im(-mode.lambda / 4.0);
        // L_{k,+-} = sqrt(gamma Gamma_+-)/2 (w_{2n-1} +- i w_{2n}).
        for (rate, sign) in [(r.up, 1.0), (r.down, -1.0)] {
            let amp = 0.5 * sqrt_gamma * rate.sqrt();
            let l = [re(amp), im(sign * amp)];
            let idx = [odd, even];
            for a in 0..2 {
                for b in 0..2 {
                    m[(idx[a], idx[b])] += l[a] * l[b].conj();
                }
            }
        }
    }

    let mut a = DMatrix::<Complex64>::zeros(2 * dim, 2 * dim);
    for j in 0..dim {
        for k in 0..dim {
            a[(2 * j, 2 * k)] = -2.0 * I * h[(j, k)] - m[(k, j)] + m[(j, k)];
            a[(2 * j, 2 * k + 1)] = 2.0 * I * m[(k, j)];
            a[(2 * j + 1, 2 * k)] = -2.0 * I * m[(j, k)];
            a[(2 * j + 1, 2 * k + 1)] = -2.0 * I * h[(j, k)] + m[(k, j)] - m[(j, k)];
        }
    }
    let x = h.map(|z| -2.0 * I * z) + m.map(|z| re(2.0 * z.re));
    Ok(FullStructure {
        h,
        m,
        a,
        x,
        modes,
        rates,
    })
}
