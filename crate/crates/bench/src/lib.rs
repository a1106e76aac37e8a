//! Shared fixtures for the benchmarks.

use bicm_core::{Constellation, Labeling, Snr};

/// Equally spaced 2^bits-PAM with its BRGC and NBC labelings.
pub struct Setup {
    pub constellation: Constellation,
    pub brgc: Labeling,
    pub nbc: Labeling,
}

pub fn pam(bits: u32) -> Setup {
    Setup {
        constellation: Constellation::equally_spaced(bits).expect("valid size"),
        brgc: Labeling::brgc(bits).expect("valid size"),
        nbc: Labeling::nbc(bits).expect("valid size"),
    }
}

pub fn db(v: f64) -> Snr {
    Snr::from_db(v).expect("finite SNR")
}
