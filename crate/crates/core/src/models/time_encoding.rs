use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed cosine time encoder `psi(dt) = cos(dt * w)` with
/// `w_i = a^{-(i-1)/b}`, `a = b = sqrt(d_t)`. Never trained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeEncoder {
    freqs: Vec<f64>,
}

impl TimeEncoder {
    pub fn new(dim: usize) -> Self {
        let a = (dim as f64).sqrt();
        let freqs = (0..dim).map(|i| a.powf(-(i as f64) / a)).collect();
        TimeEncoder { freqs }
    }

    pub fn dim(&self) -> usize {
        self.freqs.len()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.freqs
    }

    /// Encodes an elapsed time. Negative deltas mean a future event leaked in.
    pub fn encode(&self, dt: f64) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.dim());
        self.encode_into(dt, &mut out)?;
        Ok(out)
    }

    pub fn encode_into(&self, dt: f64, out: &mut Vec<f64>) -> Result<()> {
        if !(dt >= 0.0) {
            return Err(Error::validation(format!(
                "time delta must be non-negative, got {dt}"
            )));
        }
        out.extend(self.freqs.iter().map(|w| (dt * w).cos()));
        Ok(())
    }
}
