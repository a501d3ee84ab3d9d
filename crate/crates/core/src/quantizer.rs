//! Uniform mid-tread quantizer with `2R + 1` levels `{2zσ : |z| ≤ R}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuantizerRepr", into = "QuantizerRepr")]
pub struct UniformQuantizer {
    r: u64,
    sigma: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuantizerRepr {
    #[serde(rename = "R")]
    r: u64,
    sigma: f64,
}

impl TryFrom<QuantizerRepr> for UniformQuantizer {
    type Error = Error;
    fn try_from(q: QuantizerRepr) -> Result<Self> {
        Self::new(q.r, q.sigma)
    }
}

impl From<UniformQuantizer> for QuantizerRepr {
    fn from(q: UniformQuantizer) -> Self {
        Self { r: q.r, sigma: q.sigma }
    }
}

impl UniformQuantizer {
    pub fn new(r: u64, sigma: f64) -> Result<Self> {
        if r == 0 {
            return Err(Error::Parameter("quantizer R must be a positive integer".into()));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Parameter(format!("quantizer sigma must be positive, got {sigma}")));
        }
        Ok(Self { r, sigma })
    }

    pub fn r(&self) -> u64 {
        self.r
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn levels(&self) -> u64 {
        2 * self.r + 1
    }

    /// Largest input magnitude with error at most `σ`, i.e. `(2R+1)σ`.
    pub fn range(&self) -> f64 {
        (2 * self.r + 1) as f64 * self.sigma
    }

    fn level(&self, z: i64) -> f64 {
        2.0 * z as f64 * self.sigma
    }

    fn edge(&self, k: i64) -> f64 {
        k as f64 * self.sigma
    }

    /// Level index `z ∈ [−R, R]` of the quantized value.
    pub fn index(&self, chi: f64) -> i64 {
        if chi <= -self.sigma {
            return -self.index(-chi);
        }
        if chi < self.sigma {
            return 0;
        }
        let r = self.r as i64;
        if chi >= self.edge(2 * r + 1) {
            return r;
        }
        let mut z = (((chi / self.sigma) + 1.0) / 2.0).floor() as i64;
        z = z.clamp(1, r);
        while z > 1 && chi < self.edge(2 * z - 1) {
            z -= 1;
        }
        while z < r && chi >= self.edge(2 * z + 1) {
            z += 1;
        }
        z
    }

    pub fn quantize_scalar(&self, chi: f64) -> f64 {
        self.level(self.index(chi))
    }

    pub fn quantize_vector(&self, beta: &[f64]) -> Vec<f64> {
        beta.iter().map(|&c| self.quantize_scalar(c)).collect()
    }

    /// `‖β‖∞ ≤ (2R+1)σ`; vacuously true for an empty vector.
    pub fn in_range(&self, beta: &[f64]) -> bool {
        let lim = self.range();
        beta.iter().all(|c| c.abs() <= lim)
    }

    /// Level index of a legal output value.
    pub fn encode(&self, value: f64) -> Result<i64> {
        let z = (value / (2.0 * self.sigma)).round();
        if !z.is_finite() || z.abs() > self.r as f64 {
            return Err(Error::Parameter(format!("{value} is outside the quantizer levels")));
        }
        let z = z as i64;
        if (value - self.level(z)).abs() > 1e-9 * self.sigma {
            return Err(Error::Parameter(format!("{value} is not a quantizer level")));
        }
        Ok(z)
    }

    pub fn decode(&self, z: i64) -> Result<f64> {
        if z.unsigned_abs() > self.r {
            return Err(Error::Parameter(format!("level index {z} outside [-{0}, {0}]", self.r)));
        }
        Ok(self.level(z))
    }
}

/// Bits needed to index `levels` distinct symbols: `ceil(log2(levels))`.
pub fn bits_required(levels: u64) -> u32 {
    assert!(levels >= 1, "at least one level");
    if levels == 1 {
        0
    } else {
        u64::BITS - (levels - 1).leading_zeros()
    }
}
