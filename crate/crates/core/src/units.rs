//! Decimal SI unit conversions. Sizes are carried in bits, rates in bits/s.

pub const BITS_PER_MB: u64 = 8_000_000;
pub const BITS_PER_GB: u64 = 8_000_000_000;
pub const BPS_PER_MBPS: u64 = 1_000_000;
pub const BPS_PER_GBPS: u64 = 1_000_000_000;

/// Gigabytes (possibly fractional) to bits, rounded to the nearest bit.
pub fn gb_to_bits(gb: f64) -> u64 {
    (gb * BITS_PER_GB as f64).round() as u64
}

pub fn gbps_to_bps(gbps: f64) -> u64 {
    (gbps * BPS_PER_GBPS as f64).round() as u64
}

pub fn mb_to_bits(mb: f64) -> u64 {
    (mb * BITS_PER_MB as f64).round() as u64
}

pub fn mbps_to_bps(mbps: f64) -> u64 {
    (mbps * BPS_PER_MBPS as f64).round() as u64
}
