//! Detector electronics noise.
//!
//! Two references are in play. [`add_electronics_noise`] takes its floor
//! relative to the noiseless shot-noise level (unit variance per detector).
//! The corrected-level arithmetic in [`electronics_correct`] works relative
//! to the *measured* shot-noise level, which already contains the
//! electronics contribution; [`floor_rel_noiseless`] converts between them.

use super::rng::{standard_normals, Purpose, StreamId};
use super::TimeTrace;
use crate::error::{invalid, Error, Result};

/// Adds independent white noise of variance `10^(floor/10)` (relative to the
/// noiseless SNL) to every channel of `trace`. A floor of `-inf` leaves the
/// trace unchanged.
pub fn add_electronics_noise(
    mut trace: TimeTrace,
    floor_db_rel_snl: f64,
    seed: u64,
    workers: Option<usize>,
) -> Result<TimeTrace> {
    if floor_db_rel_snl == f64::NEG_INFINITY {
        return Ok(trace);
    }
    if !floor_db_rel_snl.is_finite() {
        return Err(invalid("floor_db_rel_snl", "must be finite or -inf"));
    }
    let sd = 10f64.powf(floor_db_rel_snl / 20.0);
    let len = trace.len();
    for ch in 0..trace.n_channels() {
        let noise = standard_normals(
            len,
            seed,
            StreamId::new(Purpose::Electronics, ch as u16),
            workers,
        );
        trace
            .channel_at_mut(ch)
            .iter_mut()
            .zip(noise)
            .for_each(|(v, n)| *v += sd * n);
    }
    Ok(trace)
}

/// Converts an electronics floor quoted against the measured SNL into the
/// equivalent floor against the noiseless SNL: `e = E/(1-E)` in linear units.
pub fn floor_rel_noiseless(floor_db_rel_measured: f64) -> Result<f64> {
    if floor_db_rel_measured == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    if !(floor_db_rel_measured.is_finite() && floor_db_rel_measured < 0.0) {
        return Err(invalid(
            "electronics_floor_db",
            format!("must be -inf or finite and below 0 dB, got {floor_db_rel_measured}"),
        ));
    }
    let e = 10f64.powf(floor_db_rel_measured / 10.0);
    Ok(10.0 * (e / (1.0 - e)).log10())
}

/// Removes an electronics floor `floor_db` from a measured level, both in dB
/// relative to the measured SNL:
/// `10·log10((10^(M/10) − 10^(E/10)) / (1 − 10^(E/10)))`.
pub fn electronics_correct(measured_db: f64, floor_db: f64) -> Result<f64> {
    if floor_db == f64::NEG_INFINITY {
        return Ok(measured_db);
    }
    let m = 10f64.powf(measured_db / 10.0);
    let e = 10f64.powf(floor_db / 10.0);
    if m.is_nan() || e.is_nan() || m <= e || e >= 1.0 {
        return Err(Error::NotCorrectable {
            measured_db,
            floor_db,
        });
    }
    Ok(10.0 * ((m - e) / (1.0 - e)).log10())
}
