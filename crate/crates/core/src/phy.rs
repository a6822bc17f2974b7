//! LoRa physical-layer arithmetic.

use std::fmt;

use crate::error::{Error, Result};

pub const MIN_SF: u8 = 7;
pub const MAX_SF: u8 = 12;
/// One above the LoRa radio FIFO limit, so the 256-byte packet experiments
/// can be expressed directly.
pub const MAX_PAYLOAD_BYTES: u32 = 256;

/// LoRa spreading factor, 7 through 12.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpreadingFactor(u8);

impl SpreadingFactor {
    pub const SF7: Self = SpreadingFactor(7);
    pub const SF12: Self = SpreadingFactor(12);

    pub fn new(value: u8) -> Result<Self> {
        if (MIN_SF..=MAX_SF).contains(&value) {
            Ok(SpreadingFactor(value))
        } else {
            Err(Error::invalid(
                "sf",
                format!("must be in 7..=12, got {value}"),
            ))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Position in `[SF7, ..., SF12]`.
    pub fn index(self) -> usize {
        (self.0 - MIN_SF) as usize
    }

    pub fn all() -> impl Iterator<Item = SpreadingFactor> {
        (MIN_SF..=MAX_SF).map(SpreadingFactor)
    }

    /// Chips per symbol.
    pub fn chips(self) -> u32 {
        1 << self.0
    }
}

impl fmt::Display for SpreadingFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SF{}", self.0)
    }
}

/// Result of SF assignment. Derived ordering puts `OutOfRange` above SF12.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SfAssignment {
    InRange(SpreadingFactor),
    OutOfRange,
}

impl SfAssignment {
    pub fn sf(self) -> Option<SpreadingFactor> {
        match self {
            SfAssignment::InRange(sf) => Some(sf),
            SfAssignment::OutOfRange => None,
        }
    }
}

/// Coding rate `4/(4+k)`, stored as the denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodingRate(u8);

impl CodingRate {
    pub const CR4_5: Self = CodingRate(5);

    pub fn new(denominator: u8) -> Result<Self> {
        if (5..=8).contains(&denominator) {
            Ok(CodingRate(denominator))
        } else {
            Err(Error::invalid(
                "coding_rate",
                format!("denominator must be in 5..=8, got {denominator}"),
            ))
        }
    }

    pub fn denominator(self) -> u8 {
        self.0
    }

    pub fn fraction(self) -> f64 {
        4.0 / self.0 as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhyParams {
    /// Hz.
    pub bandwidth: f64,
    pub coding_rate: CodingRate,
    pub preamble_symbols: u32,
    pub explicit_header: bool,
    pub crc_enabled: bool,
}

impl Default for PhyParams {
    fn default() -> Self {
        PhyParams {
            bandwidth: 125e3,
            coding_rate: CodingRate::CR4_5,
            preamble_symbols: 8,
            explicit_header: true,
            crc_enabled: true,
        }
    }
}

impl PhyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(Error::invalid(
                "bandwidth",
                format!("must be > 0 Hz, got {}", self.bandwidth),
            ));
        }
        Ok(())
    }

    pub fn symbol_duration(&self, sf: SpreadingFactor) -> f64 {
        sf.chips() as f64 / self.bandwidth
    }

    /// Low-data-rate optimization is mandatory once symbols exceed 16 ms,
    /// which at 125 kHz means SF11 and SF12.
    pub fn low_data_rate_optimize(&self, sf: SpreadingFactor) -> bool {
        self.symbol_duration(sf) > 0.016
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioConfig {
    /// dBm.
    pub tx_power: f64,
    /// dBi.
    pub tx_antenna_gain: f64,
    /// dBi.
    pub rx_antenna_gain: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            tx_power: 14.0,
            tx_antenna_gain: 0.0,
            rx_antenna_gain: 0.0,
        }
    }
}

// Endpoints at SF7 and SF12, linear in dB between them.
const SENSITIVITY_DBM: [f64; 6] = [-132.0, -134.2, -136.4, -138.6, -140.8, -143.0];

/// Gateway receive sensitivity for the given SF.
pub fn sensitivity_dbm(sf: SpreadingFactor) -> f64 {
    SENSITIVITY_DBM[sf.index()]
}

/// Raw LoRa bit rate `SF * B * CR / 2^SF`.
pub fn bit_rate_bps(sf: SpreadingFactor, params: &PhyParams) -> f64 {
    sf.value() as f64 * params.bandwidth * params.coding_rate.fraction() / sf.chips() as f64
}

/// Number of payload symbols, including the 8 fixed symbols after the preamble.
pub fn payload_symbols(payload_bytes: u32, sf: SpreadingFactor, params: &PhyParams) -> Result<u32> {
    if !(1..=MAX_PAYLOAD_BYTES).contains(&payload_bytes) {
        return Err(Error::invalid(
            "payload_bytes",
            format!("must be in 1..={MAX_PAYLOAD_BYTES}, got {payload_bytes}"),
        ));
    }
    let sf_i = sf.value() as i64;
    let crc = params.crc_enabled as i64;
    let implicit_header = !params.explicit_header as i64;
    let de = params.low_data_rate_optimize(sf) as i64;
    let numerator = 8 * payload_bytes as i64 - 4 * sf_i + 28 + 16 * crc - 20 * implicit_header;
    let denominator = 4 * (sf_i - 2 * de);
    let blocks = div_ceil(numerator, denominator).max(0);
    Ok(8 + (blocks * params.coding_rate.denominator() as i64) as u32)
}

fn div_ceil(a: i64, b: i64) -> i64 {
    let q = a / b;
    if (a % b != 0) && ((a > 0) == (b > 0)) {
        q + 1
    } else {
        q
    }
}

/// Frame airtime in seconds.
pub fn time_on_air_s(payload_bytes: u32, sf: SpreadingFactor, params: &PhyParams) -> Result<f64> {
    let n_payload = payload_symbols(payload_bytes, sf, params)?;
    let symbols = params.preamble_symbols as f64 + 4.25 + n_payload as f64;
    Ok(symbols * params.symbol_duration(sf))
}

/// Link-budget receive power in dBm.
pub fn received_power_dbm(radio: &RadioConfig, path_loss_db: f64) -> f64 {
    radio.tx_power + radio.tx_antenna_gain + radio.rx_antenna_gain - path_loss_db
}

/// Lowest SF whose sensitivity the received power meets.
pub fn assign_sf(received_power: f64) -> SfAssignment {
    SpreadingFactor::all()
        .find(|&sf| received_power >= sensitivity_dbm(sf))
        .map_or(SfAssignment::OutOfRange, SfAssignment::InRange)
}
