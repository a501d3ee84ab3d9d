use serde::{Deserialize, Serialize};

use super::{spectral_norm, spectral_radius, Matrix};
use crate::error::{Error, Result};

pub const DEFAULT_P_CHECK: usize = 10_000;

/// Witness that `‖M^p‖ ≤ c·d0^p` for every `p ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub d0: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub p_star: usize,
}

impl DecayCertificate {
    pub fn bound(&self, p: usize) -> f64 {
        self.c * self.d0.powi(p as i32)
    }

    /// First `p` in `1..=p_max` where `‖M^p‖ > c·d0^p`, with the offending
    /// ratio `‖M^p‖/d0^p`.
    pub fn first_violation(&self, m: &Matrix, p_max: usize) -> Result<Option<(usize, f64)>> {
        first_violation(m, self.c, self.d0, p_max)
    }
}

/// Smallest `C` with `‖M^p‖ ≤ C·d0^p` for all `p`, found by walking powers
/// until one contracts below `d0^p`. Past that index sub-multiplicativity
/// keeps every later power under the running maximum.
pub fn power_decay_certificate(m: &Matrix, d0: f64, p_check: usize) -> Result<DecayCertificate> {
    let rho = spectral_radius(m)?;
    if !(d0 > rho && d0 < 1.0) {
        return Err(Error::Certificate(format!(
            "d0 = {d0} must lie in (spectral radius {rho}, 1)"
        )));
    }
    let blocks = split_blocks(m, d0);
    let mut powers: Vec<Matrix> = blocks.clone();
    let mut c: f64 = 1.0;
    for p in 1..=p_check {
        let ratio = powers.iter().map(spectral_norm).fold(0.0, f64::max);
        if ratio <= 1.0 {
            return Ok(DecayCertificate { d0, c, p_star: p });
        }
        c = c.max(ratio);
        for (pw, b) in powers.iter_mut().zip(&blocks) {
            *pw = &*pw * b;
        }
    }
    Err(Error::Certificate(format!(
        "no p <= {p_check} with ‖M^p‖ <= d0^p (d0 = {d0}, spectral radius {rho}, running max ratio {c})"
    )))
}

/// `‖M^p‖ / d0^p` for `p = 1..=p_max`.
pub fn decay_ratios(m: &Matrix, d0: f64, p_max: usize) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if d0 <= 0.0 {
        return Err(Error::Parameter(format!("d0 must be positive, got {d0}")));
    }
    let blocks = split_blocks(m, d0);
    let mut powers = blocks.clone();
    let mut out = Vec::with_capacity(p_max);
    for _ in 0..p_max {
        out.push(powers.iter().map(spectral_norm).fold(0.0, f64::max));
        for (pw, b) in powers.iter_mut().zip(&blocks) {
            *pw = &*pw * b;
        }
    }
    Ok(out)
}

pub(crate) fn first_violation(m: &Matrix, c: f64, d0: f64, p_max: usize) -> Result<Option<(usize, f64)>> {
    Ok(decay_ratios(m, d0, p_max)?
        .into_iter()
        .enumerate()
        .find(|&(_, r)| r > c)
        .map(|(i, r)| (i + 1, r)))
}

/// Splits `m / d0` into the principal submatrices of its connected
/// sparsity components. Norms of powers are the max over these pieces.
fn split_blocks(m: &Matrix, d0: f64) -> Vec<Matrix> {
    let n = m.rows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && m[(i, j)] != 0.0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
        .iter()
        .map(|idx| {
            let mut b = Matrix::zeros(idx.len(), idx.len());
            for (a, &i) in idx.iter().enumerate() {
                for (c, &j) in idx.iter().enumerate() {
                    b[(a, c)] = m[(i, j)] / d0;
                }
            }
            b
        })
        .collect()
}
