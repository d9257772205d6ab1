//! Analytic spectrum and eigenbasis of the harmonic oscillator `-Δ + |x|²`.
//!
//! Level `m` has energy `2m + N` and multiplicity `C(m + N - 1, N - 1)`; its
//! eigenspace is spanned by products of 1-D Hermite functions whose orders sum
//! to `m`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the order of a 1-D Hermite factor.
pub const DEFAULT_MAX_ORDER: usize = 12;

/// Binomial coefficient for the small arguments used here.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Multiplicity of level `m` in dimension `dim`.
pub fn level_multiplicity(dim: usize, m: usize) -> usize {
    binomial(m + dim - 1, dim - 1)
}

/// Number of eigenvalues (with multiplicity) in levels `0..=m`.
pub fn cumulative_count(dim: usize, m: usize) -> usize {
    binomial(m + dim, dim)
}

/// Energy of level `m`.
pub fn level_value(dim: usize, m: usize) -> f64 {
    (2 * m + dim) as f64
}

/// Level containing the 1-based index `n` of the flattened spectrum.
pub fn level_of(dim: usize, n: usize) -> usize {
    assert!(n >= 1, "eigenvalue indices are 1-based");
    let mut m = 0;
    while cumulative_count(dim, m) < n {
        m += 1;
    }
    m
}

/// The n-th eigenvalue (1-based, counted with multiplicity).
pub fn nth_eigenvalue(dim: usize, n: usize) -> f64 {
    level_value(dim, level_of(dim, n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub value: f64,
    pub multiplicity: usize,
}

/// The first few oscillator levels in a given dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSpectrum {
    pub dim: usize,
    pub levels: Vec<Level>,
}

impl HarmonicSpectrum {
    /// Levels `0..=max_level`.
    pub fn new(dim: usize, max_level: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        let levels = (0..=max_level)
            .map(|m| Level {
                value: level_value(dim, m),
                multiplicity: level_multiplicity(dim, m),
            })
            .collect();
        Ok(HarmonicSpectrum { dim, levels })
    }

    /// Eigenvalues with multiplicity, non-decreasing.
    pub fn flattened(&self) -> Vec<f64> {
        self.levels
            .iter()
            .flat_map(|l| std::iter::repeat(l.value).take(l.multiplicity))
            .collect()
    }
}

/// Bookkeeping for the degenerate block containing the n-th eigenvalue.
///
/// The block occupies 1-based indices `n - j_n ..= n - j_n + kappa_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenBlock {
    pub n: usize,
    pub level: usize,
    pub j_n: usize,
    pub kappa_n: usize,
    /// Gap from `λ_n` to the next distinct level.
    pub delta_n: f64,
    /// Half the gap between `√λ_n` and the square root of the previous
    /// level, with `λ_0 := 0`.
    pub r1: f64,
}

impl EigenBlock {
    /// 1-based index of the first eigenvalue in the block.
    pub fn first_index(&self) -> usize {
        self.n - self.j_n
    }

    /// 1-based index of the last eigenvalue in the block.
    pub fn last_index(&self) -> usize {
        self.n - self.j_n + self.kappa_n
    }
}

pub fn eigen_block(dim: usize, n: usize) -> EigenBlock {
    let m = level_of(dim, n);
    let first = if m == 0 {
        1
    } else {
        cumulative_count(dim, m - 1) + 1
    };
    let lambda_n = level_value(dim, m);
    let previous = if m == 0 { 0.0 } else { level_value(dim, m - 1) };
    EigenBlock {
        n,
        level: m,
        j_n: n - first,
        kappa_n: level_multiplicity(dim, m) - 1,
        delta_n: level_value(dim, m + 1) - lambda_n,
        r1: 0.5 * (lambda_n.sqrt() - previous.sqrt()),
    }
}

/// A product Hermite function labelled by its multi-index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HermiteMode {
    pub multi_index: Vec<usize>,
}

impl HermiteMode {
    pub fn new(multi_index: Vec<usize>) -> Self {
        HermiteMode { multi_index }
    }

    pub fn dim(&self) -> usize {
        self.multi_index.len()
    }

    pub fn order(&self) -> usize {
        self.multi_index.iter().sum()
    }

    pub fn eigenvalue(&self) -> f64 {
        level_value(self.dim(), self.order())
    }
}

/// All multi-indices of total order `m` in `dim` dimensions, in
/// lexicographically decreasing order.
pub fn level_modes(dim: usize, m: usize) -> Vec<HermiteMode> {
    fn rec(dim: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<HermiteMode>) {
        if prefix.len() + 1 == dim {
            prefix.push(left);
            out.push(HermiteMode::new(prefix.clone()));
            prefix.pop();
            return;
        }
        for k in (0..=left).rev() {
            prefix.push(k);
            rec(dim, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, m, &mut Vec::with_capacity(dim), &mut out);
    out
}

/// Values `h_0(t), …, h_max(t)` of the L²-normalised Hermite functions,
/// computed by the stable normalised three-term recurrence.
pub fn hermite_functions(max_order: usize, t: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(max_order + 1);
    h.push(PI.powf(-0.25) * (-0.5 * t * t).exp());
    if max_order >= 1 {
        h.push(t * 2f64.sqrt() * h[0]);
    }
    for k in 2..=max_order {
        let kf = k as f64;
        let next = t * (2.0 / kf).sqrt() * h[k - 1] - ((kf - 1.0) / kf).sqrt() * h[k - 2];
        h.push(next);
    }
    h
}

/// Single normalised Hermite function `h_k(t)`.
pub fn hermite_function(k: usize, t: f64) -> f64 {
    hermite_functions(k, t)[k]
}

/// Values of the normalised product Hermite function at each point.
///
/// Fails when any 1-D order exceeds `max_order` or a point has the wrong
/// dimension.
pub fn hermite_mode_values_capped(
    mode: &HermiteMode,
    points: &[Vec<f64>],
    max_order: usize,
) -> Result<Vec<f64>> {
    check_order(mode, max_order)?;
    points
        .iter()
        .map(|p| {
            if p.len() != mode.dim() {
                return Err(Error::DimensionMismatch {
                    expected: mode.dim(),
                    got: p.len(),
                });
            }
            Ok(p.iter()
                .zip(&mode.multi_index)
                .map(|(&t, &k)| hermite_function(k, t))
                .product())
        })
        .collect()
}

/// [`hermite_mode_values_capped`] with the default order cap.
pub fn hermite_mode_values(mode: &HermiteMode, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    hermite_mode_values_capped(mode, points, DEFAULT_MAX_ORDER)
}

pub(crate) fn check_order(mode: &HermiteMode, max_order: usize) -> Result<()> {
    match mode.multi_index.iter().copied().max() {
        Some(k) if k > max_order => Err(Error::Config(format!(
            "Hermite order {k} exceeds the cap {max_order}"
        ))),
        None => Err(Error::Config("empty Hermite multi-index".into())),
        _ => Ok(()),
    }
}
