//! Unit conversions. Mbps figures assume 1500-byte packets.

pub const PACKET_BYTES: f64 = 1500.0;

pub fn mbps_to_pps(mbps: f64) -> f64 {
    mbps * 1e6 / (PACKET_BYTES * 8.0)
}

pub fn pps_to_mbps(pps: f64) -> f64 {
    pps * PACKET_BYTES * 8.0 / 1e6
}
