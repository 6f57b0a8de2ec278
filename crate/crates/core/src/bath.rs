//! Thermal environment: spectral densities, Bose-Einstein occupations and the
//! per-mode jump rates `Gamma_{k,+} = J(lambda) n_BE(lambda)` (excitation) and
//! `Gamma_{k,-} = J(lambda) (n_BE(lambda) + 1)` (decay).

use std::f64::consts::PI;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BathError {
    #[error("mode energy must be nonnegative, got {0}")]
    NegativeEnergy(f64),
    #[error("{name} is invalid: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("spectral density is nonzero at zero energy, so the zero-mode rates diverge at T = {0}")]
    DivergentZeroMode(f64),
    #[error("spectrum table line {line}: {reason}")]
    Table { line: usize, reason: String },
    #[error("cannot read spectrum table {path}: {reason}")]
    Io { path: String, reason: String },
}

/// Tabulated spectral density, linearly interpolated and zero outside the table.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable {
    energies: Vec<f64>,
    values: Vec<f64>,
}

impl SpectrumTable {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, BathError> {
        if points.len() < 2 {
            return Err(BathError::Table {
                line: 0,
                reason: "need at least two rows".into(),
            });
        }
        for (i, w) in points.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return Err(BathError::Table {
                    line: i + 2,
                    reason: format!("energies must be strictly increasing ({} after {})", w[1].0, w[0].0),
                });
            }
        }
        for (i, &(e, v)) in points.iter().enumerate() {
            if !e.is_finite() || !v.is_finite() || v < 0.0 || e < 0.0 {
                return Err(BathError::Table {
                    line: i + 1,
                    reason: format!("row ({e}, {v}) must be finite and nonnegative"),
                });
            }
        }
        let (energies, values) = points.into_iter().unzip();
        Ok(SpectrumTable { energies, values })
    }

    /// Parses two whitespace- or comma-separated columns `(lambda, J(lambda))`.
    /// Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, BathError> {
        let mut points = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            if cols.len() != 2 {
                return Err(BathError::Table {
                    line: i + 1,
                    reason: format!("expected two columns, found {}", cols.len()),
                });
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| BathError::Table {
                    line: i + 1,
                    reason: format!("{s:?}: {e}"),
                })
            };
            points.push((parse(cols[0])?, parse(cols[1])?));
        }
        let table = Self::new(points).map_err(|e| match e {
            BathError::Table { line: 0, reason } => BathError::Table { line: 0, reason },
            other => other,
        })?;
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, BathError> {
        let text = std::fs::read_to_string(path).map_err(|e| BathError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.energies.iter().copied().zip(self.values.iter().copied())
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        let e = &self.energies;
        if lambda < e[0] || lambda > e[e.len() - 1] {
            return 0.0;
        }
        let i = e.partition_point(|&x| x <= lambda).clamp(1, e.len() - 1);
        let (x0, x1) = (e[i - 1], e[i]);
        let (y0, y1) = (self.values[i - 1], self.values[i]);
        y0 + (y1 - y0) * (lambda - x0) / (x1 - x0)
    }

    /// `lim_{lambda -> 0+} J(lambda) / lambda` when `J(0) = 0`, else `None`.
    fn zero_slope(&self) -> Option<f64> {
        let e = &self.energies;
        if e[0] > 0.0 {
            return Some(0.0);
        }
        if self.values[0] != 0.0 {
            return None;
        }
        Some((self.values[1] - self.values[0]) / (e[1] - e[0]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Spectrum {
    /// `J(lambda) = pi delta lambda exp(-lambda / lambda_c)`.
    Ohmic,
    /// `J(lambda) = pi delta`, cutoff-free.
    Flat,
    /// Tabulated `J(lambda)`; `delta` is ignored.
    Tabulated(SpectrumTable),
}

impl Spectrum {
    pub fn name(&self) -> &'static str {
        match self {
            Spectrum::Ohmic => "ohmic",
            Spectrum::Flat => "flat",
            Spectrum::Tabulated(_) => "tabulated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BathParams {
    /// Temperature `T` in energy units (`k_B = 1`).
    pub temperature: f64,
    /// System-bath coupling strength `gamma`.
    pub gamma: f64,
    /// Ohmic prefactor `delta`.
    pub delta: f64,
    /// Cutoff frequency `lambda_c`.
    pub cutoff: f64,
    pub spectrum: Spectrum,
}

impl BathParams {
    pub fn ohmic(temperature: f64, gamma: f64, delta: f64, cutoff: f64) -> Result<Self, BathError> {
        let bath = BathParams {
            temperature,
            gamma,
            delta,
            cutoff,
            spectrum: Spectrum::Ohmic,
        };
        bath.validate()?;
        Ok(bath)
    }

    pub fn validate(&self) -> Result<(), BathError> {
        let bad = |name: &'static str, reason: &str| BathError::InvalidParameter {
            name,
            reason: reason.to_string(),
        };
        if !(self.temperature >= 0.0) || !self.temperature.is_finite() {
            return Err(bad("T", "must be finite and nonnegative"));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(bad("gamma", "must be finite and nonnegative"));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(bad("delta", "must be finite and positive"));
        }
        if !(self.cutoff > 0.0) {
            return Err(bad("lambda_c", "must be positive"));
        }
        Ok(())
    }

    pub fn with_temperature(&self, temperature: f64) -> Self {
        BathParams {
            temperature,
            ..self.clone()
        }
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        BathParams {
            gamma,
            ..self.clone()
        }
    }
}

/// Jump rates of one quasiparticle mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathRates {
    /// `Gamma_{k,+}`: thermal excitation.
    pub up: f64,
    /// `Gamma_{k,-}`: decay.
    pub down: f64,
    /// `Gamma_{k,1} = Gamma_+ + Gamma_-`.
    pub sum: f64,
    /// `Gamma_{k,2} = Gamma_+ - Gamma_-`.
    pub diff: f64,
}

impl BathRates {
    pub fn from_up_down(up: f64, down: f64) -> Self {
        BathRates {
            up,
            down,
            sum: up + down,
            diff: up - down,
        }
    }

    /// `Gamma_2 / Gamma_1`, which equals `-tanh(lambda / 2T)`; zero when both vanish.
    pub fn ratio(&self) -> f64 {
        if self.sum == 0.0 {
            0.0
        } else {
            self.diff / self.sum
        }
    }
}

pub fn spectral_density(lambda: f64, bath: &BathParams) -> Result<f64, BathError> {
    if lambda < 0.0 || lambda.is_nan() {
        return Err(BathError::NegativeEnergy(lambda));
    }
    Ok(density(lambda, bath))
}

fn density(lambda: f64, bath: &BathParams) -> f64 {
    match &bath.spectrum {
        Spectrum::Ohmic => PI * bath.delta * lambda * (-lambda / bath.cutoff).exp(),
        Spectrum::Flat => PI * bath.delta,
        Spectrum::Tabulated(table) => table.eval(lambda),
    }
}

/// `n_BE(lambda) = 1 / (e^{lambda/T} - 1)`. Zero at `T = 0`; infinite at
/// `lambda = 0`, where callers must use the limit-aware [`rates`].
pub fn bose_einstein(lambda: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return if lambda > 0.0 { 0.0 } else { f64::INFINITY };
    }
    if lambda == 0.0 {
        return f64::INFINITY;
    }
    1.0 / (lambda / temperature).exp_m1()
}

/// `1 / (e^{lambda/T} + 1)`, with `T = 0` giving 0 for gapped and 1/2 for gapless modes.
pub fn fermi_dirac(lambda: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return if lambda > 0.0 { 0.0 } else { 0.5 };
    }
    let x = lambda / temperature;
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (x.exp() + 1.0)
    }
}

/// Jump rates for a mode of energy `lambda`.
///
/// At `lambda = 0` and `T > 0` the product `J(lambda) n_BE(lambda)` is replaced
/// by its limit `T J'(0)` (`pi delta T` for the ohmic density), so both rates
/// are finite and equal.
pub fn rates(lambda: f64, bath: &BathParams) -> Result<BathRates, BathError> {
    rates_at(lambda, bath, bath.temperature)
}

/// [`rates`] with the temperature overridden, for time-dependent schedules.
pub fn rates_at(lambda: f64, bath: &BathParams, t: f64) -> Result<BathRates, BathError> {
    let j = spectral_density(lambda, bath)?;
    if t == 0.0 {
        return Ok(BathRates {
            up: 0.0,
            down: j,
            sum: j,
            diff: -j,
        });
    }
    if lambda == 0.0 {
        let slope = match &bath.spectrum {
            Spectrum::Ohmic => PI * bath.delta,
            Spectrum::Flat => return Err(BathError::DivergentZeroMode(t)),
            Spectrum::Tabulated(table) => table.zero_slope().ok_or(BathError::DivergentZeroMode(t))?,
        };
        let r = slope * t;
        return Ok(BathRates {
            up: r,
            down: r,
            sum: 2.0 * r,
            diff: 0.0,
        });
    }
    let up = j / (lambda / t).exp_m1();
    let down = j + up;
    Ok(BathRates {
        up,
        down,
        sum: up + down,
        diff: -j,
    })
}
