//! Uniform time-grid helpers shared by the marching solvers.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Number of steps of size `dt` covering `[t_start, t_end]`. The span must
/// be an integer multiple of `dt` to within a relative slack of 1e-8.
pub fn step_count(t_start: f64, t_end: f64, dt: f64) -> Result<usize> {
    let span = t_end - t_start;
    if !(dt > 0.0) || !(span > 0.0) {
        return Err(Error::TimeGrid { span, dt });
    }
    let steps = libm::round(span / dt);
    if (span / dt - steps).abs() > 1e-8 * (1.0 + steps) {
        return Err(Error::TimeGrid { span, dt });
    }
    Ok(steps as usize)
}

/// Times `t_start + k dt` for `k = 0..=n_steps`.
pub fn time_axis(t_start: f64, dt: f64, n_steps: usize) -> Vec<f64> {
    (0..=n_steps).map(|k| t_start + k as f64 * dt).collect()
}

/// Index of the recorded time nearest to `t`. Errors if `t` lies outside
/// the axis by more than half a step, so no requested time is silently
/// dropped.
pub fn nearest_index(times: &[f64], t: f64) -> Result<usize> {
    if times.is_empty() {
        return Err(Error::Series {
            why: alloc::string::String::from("empty time axis"),
        });
    }
    let dt = if times.len() > 1 {
        times[1] - times[0]
    } else {
        1.0
    };
    let lo = times[0] - 0.5 * dt;
    let hi = times[times.len() - 1] + 0.5 * dt;
    if t < lo || t > hi {
        return Err(Error::Invalid {
            what: "snapshot time",
            why: alloc::format!("{t} outside the recorded span [{}, {}]", times[0], times[times.len() - 1]),
        });
    }
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, &tk) in times.iter().enumerate() {
        let d = (tk - t).abs();
        if d < best_d {
            best_d = d;
            best = k;
        }
    }
    Ok(best)
}
