//! Propagation loss for surface-to-surface links on Earth and Mars.
//!
//! The model is deliberately minimal: a free-space term whose distance
//! exponent depends on the planet, plus a linear dust-storm term on Mars.
//! Fading, shadowing and multi-path are not modeled.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default LoRa carrier in the EU868 band.
pub const DEFAULT_FREQUENCY_HZ: f64 = 868e6;

/// Smallest distance for which path loss is evaluated.
pub const MIN_DISTANCE_M: f64 = 1.0;

/// Dielectric permittivity of Martian dust, real part.
pub const DUST_EPS_REAL: f64 = 2.9038;
/// Dielectric permittivity of Martian dust, imaginary part.
pub const DUST_EPS_IMAG: f64 = 0.1278;

const DUST_SCALE: f64 = 1.029e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Environment {
    #[default]
    Earth,
    Mars,
}

impl Environment {
    /// Distance exponent of the free-space term.
    pub fn fspl_exponent(self) -> f64 {
        match self {
            Environment::Earth => 2.0,
            Environment::Mars => 3.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Environment::Earth => "earth",
            Environment::Mars => "mars",
        }
    }
}

impl fmt::Display for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Environment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "earth" => Ok(Environment::Earth),
            "mars" => Ok(Environment::Mars),
            other => Err(format!(
                "unknown environment `{other}` (expected earth or mars)"
            )),
        }
    }
}

/// Storm intensity presets. Each fixes the particle density and mean radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DustIntensity {
    Low,
    Moderate,
    Severe,
}

impl DustIntensity {
    pub const ALL: [DustIntensity; 3] = [Self::Low, Self::Moderate, Self::Severe];

    /// `(particles per m^3, mean radius in m)`.
    pub fn density_and_radius(self) -> (f64, f64) {
        match self {
            DustIntensity::Low => (1e6, 1.5e-6),
            DustIntensity::Moderate => (1e7, 4.5e-6),
            DustIntensity::Severe => (3e7, 20e-6),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DustIntensity::Low => "low",
            DustIntensity::Moderate => "moderate",
            DustIntensity::Severe => "severe",
        }
    }
}

impl FromStr for DustIntensity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Ok(DustIntensity::Low),
            "moderate" => Ok(DustIntensity::Moderate),
            "severe" => Ok(DustIntensity::Severe),
            other => Err(format!(
                "unknown dust preset `{other}` (expected low, moderate or severe)"
            )),
        }
    }
}

/// Suspended dust parameters. Permittivities are dimensionless relative values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DustStorm {
    pub eps_real: f64,
    pub eps_imag: f64,
    /// Particles per cubic meter.
    pub particle_density: f64,
    /// Mean particle radius in meters.
    pub mean_radius: f64,
}

impl DustStorm {
    pub fn new(
        eps_real: f64,
        eps_imag: f64,
        particle_density: f64,
        mean_radius: f64,
    ) -> Result<Self> {
        let storm = DustStorm {
            eps_real,
            eps_imag,
            particle_density,
            mean_radius,
        };
        storm.validate()?;
        Ok(storm)
    }

    pub fn preset(intensity: DustIntensity) -> Self {
        let (particle_density, mean_radius) = intensity.density_and_radius();
        DustStorm {
            eps_real: DUST_EPS_REAL,
            eps_imag: DUST_EPS_IMAG,
            particle_density,
            mean_radius,
        }
    }

    pub fn with_mean_radius(mut self, mean_radius: f64) -> Self {
        self.mean_radius = mean_radius;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_real > 0.0 && self.eps_real.is_finite()) {
            return Err(Error::invalid(
                "eps_real",
                format!("must be > 0, got {}", self.eps_real),
            ));
        }
        if !(self.eps_imag >= 0.0 && self.eps_imag.is_finite()) {
            return Err(Error::invalid(
                "eps_imag",
                format!("must be >= 0, got {}", self.eps_imag),
            ));
        }
        if !(self.particle_density >= 0.0 && self.particle_density.is_finite()) {
            return Err(Error::invalid(
                "particle_density",
                format!("must be >= 0, got {}", self.particle_density),
            ));
        }
        if !(self.mean_radius >= 0.0 && self.mean_radius.is_finite()) {
            return Err(Error::invalid(
                "mean_radius",
                format!("must be >= 0, got {}", self.mean_radius),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub environment: Environment,
    /// Carrier frequency in Hz.
    pub frequency: f64,
    /// Ignored on Earth.
    pub dust: Option<DustStorm>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            environment: Environment::Earth,
            frequency: DEFAULT_FREQUENCY_HZ,
            dust: None,
        }
    }
}

impl ChannelConfig {
    pub fn earth(frequency: f64) -> Self {
        ChannelConfig {
            environment: Environment::Earth,
            frequency,
            dust: None,
        }
    }

    pub fn mars(frequency: f64, dust: Option<DustStorm>) -> Self {
        ChannelConfig {
            environment: Environment::Mars,
            frequency,
            dust,
        }
    }

    pub fn validate(&self) -> Result<()> {
        wavelength(self.frequency)?;
        if let Some(storm) = &self.dust {
            storm.validate()?;
        }
        Ok(())
    }

    /// The storm actually applied to the link; always `None` on Earth.
    pub fn effective_dust(&self) -> Option<&DustStorm> {
        match self.environment {
            Environment::Earth => None,
            Environment::Mars => self.dust.as_ref(),
        }
    }
}

/// Carrier wavelength in meters.
pub fn wavelength(frequency: f64) -> Result<f64> {
    if !(frequency > 0.0 && frequency.is_finite()) {
        return Err(Error::invalid(
            "frequency",
            format!("must be > 0 Hz, got {frequency}"),
        ));
    }
    Ok(SPEED_OF_LIGHT / frequency)
}

/// Free-space loss `10 * exponent * log10(4*pi*d / lambda)` in dB.
pub fn fspl_db(distance: f64, wavelength: f64, exponent: f64) -> Result<f64> {
    if distance.is_nan() || distance < MIN_DISTANCE_M {
        return Err(Error::OutOfDomain { distance });
    }
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(Error::invalid(
            "wavelength",
            format!("must be > 0 m, got {wavelength}"),
        ));
    }
    if exponent != 2.0 && exponent != 3.0 {
        return Err(Error::invalid(
            "exponent",
            format!("must be 2 or 3, got {exponent}"),
        ));
    }
    Ok(10.0 * exponent * (4.0 * PI * distance / wavelength).log10())
}

/// Specific attenuation of a dust storm, in dB per kilometer, with every
/// input in SI units.
pub fn dust_attenuation_db_per_km(wavelength: f64, storm: &DustStorm) -> Result<f64> {
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(Error::invalid(
            "wavelength",
            format!("must be > 0 m, got {wavelength}"),
        ));
    }
    storm.validate()?;
    let DustStorm {
        eps_real,
        eps_imag,
        particle_density,
        mean_radius,
    } = *storm;
    let denom = wavelength * ((eps_real + 2.0).powi(2) + eps_imag.powi(2));
    Ok(DUST_SCALE * eps_imag / denom * particle_density * mean_radius.powi(3))
}

/// Total link loss in dB: free-space term plus, on Mars, dust attenuation
/// over the path length.
pub fn total_path_loss_db(distance: f64, config: &ChannelConfig) -> Result<f64> {
    let lambda = wavelength(config.frequency)?;
    let free_space = fspl_db(distance, lambda, config.environment.fspl_exponent())?;
    let dust = match config.effective_dust() {
        Some(storm) => dust_attenuation_db_per_km(lambda, storm)? * distance / 1000.0,
        None => 0.0,
    };
    Ok(free_space + dust)
}
