//! Threshold grids for sweeps.

use crate::error::{Error, Result};

/// Thresholds 0.0, 0.1, ..., 1.0.
pub fn default_taus() -> Vec<f64> {
    tau_grid(0.0, 1.0, 0.1).expect("default grid is valid")
}

/// Evenly spaced thresholds from `start` to `end` inclusive, rounded to 10 decimals
/// so that `0.1 * 3` prints and compares as `0.3`.
pub fn tau_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&end) || start > end {
        return Err(Error::param("taus", format!("range {start}:{end} must lie within [0, 1]")));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::param("taus", format!("step {step} must be positive")));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| round10(start + i as f64 * step))
        .collect())
}

/// Parse `start:end:step`.
pub fn parse_tau_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, end, step] = parts.as_slice() else {
        return Err(Error::param("taus", format!("expected start:end:step, got `{text}`")));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::param("taus", format!("`{s}` is not a number")))
    };
    tau_grid(num(start)?, num(end)?, num(step)?)
}

fn round10(x: f64) -> f64 {
    (x * 1e10).round() / 1e10
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_eleven_clean_points() {
        let g = default_taus();
        assert_eq!(g.len(), 11);
        assert_eq!(g[3], 0.3);
        assert_eq!(g[7], 0.7);
        assert_eq!(g[10], 1.0);
    }

    #[test]
    fn parse_grid() {
        assert_eq!(parse_tau_grid("0.2:0.6:0.2").unwrap(), vec![0.2, 0.4, 0.6]);
        assert_eq!(parse_tau_grid("0.5:0.5:0.1").unwrap(), vec![0.5]);
        assert!(parse_tau_grid("0:1").is_err());
        assert!(parse_tau_grid("0:2:0.1").is_err());
        assert!(parse_tau_grid("0:1:0").is_err());
        assert!(parse_tau_grid("a:1:0.1").is_err());
    }
}
