//! Compact potential wells Σ and the confining potential `V = dist(·, Σ)²`.
//!
//! Every shipped shape has a closed-form Euclidean distance. Sampling appears
//! only in the Hausdorff fallback, which reports the resolution of its nets.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometric description of a well. Construct through [`PotentialWell`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WellShape {
    /// Σ = {0}; the potential is the harmonic `|x|²`.
    PointAtOrigin { dim: usize },
    /// A non-empty finite set of points.
    FinitePointSet { dim: usize, points: Vec<Vec<f64>> },
    /// The circle `x₁² + x₂² = R², x₃ = 0` in ℝ³.
    Circle { radius: f64 },
    /// The torus whose meridian is the circle of radius `tube` centred at
    /// distance `outer - tube` from the x₃-axis, so `outer` is the largest
    /// |x| on the surface.
    Torus { tube: f64, outer: f64 },
    /// The closed annulus `inner ≤ |x| ≤ outer` (a ball when `inner = 0`).
    Shell { dim: usize, inner: f64, outer: f64 },
}

/// A validated, immutable potential well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PotentialWell(WellShape);

/// Distance from the origin to the nearest and farthest point of Σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellParams {
    pub delta_sigma: f64,
    pub r_sigma: f64,
}

/// Hausdorff distance, exact or sampled.
///
/// The true value lies in `[value, value + resolution]`; closed forms have
/// zero resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HausdorffEstimate {
    pub value: f64,
    pub resolution: f64,
    pub exact: bool,
}

impl HausdorffEstimate {
    fn exact(value: f64) -> Self {
        HausdorffEstimate {
            value,
            resolution: 0.0,
            exact: true,
        }
    }

    /// Largest value compatible with the estimate.
    pub fn upper(&self) -> f64 {
        self.value + self.resolution
    }
}

/// Minimum number of samples per well in the sampled Hausdorff fallback.
pub const MIN_HAUSDORFF_SAMPLES: usize = 10_000;

fn check_dim(dim: usize) -> Result<()> {
    if (1..=3).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl PotentialWell {
    pub fn point(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(PotentialWell(WellShape::PointAtOrigin { dim }))
    }

    pub fn points(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        check_dim(dim)?;
        if points.is_empty() {
            return Err(Error::Config("finite point set must be non-empty".into()));
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config("point coordinates must be finite".into()));
            }
        }
        Ok(PotentialWell(WellShape::FinitePointSet { dim, points }))
    }

    pub fn circle(radius: f64) -> Result<Self> {
        positive("circle radius", radius)?;
        Ok(PotentialWell(WellShape::Circle { radius }))
    }

    /// Torus with tube radius `tube` and outer radius `outer`; requires
    /// `0 < 2·tube < outer`.
    pub fn torus(tube: f64, outer: f64) -> Result<Self> {
        positive("torus tube radius", tube)?;
        positive("torus outer radius", outer)?;
        if 2.0 * tube >= outer {
            return Err(Error::Config(format!(
                "torus requires 0 < 2r < R, got r = {tube}, R = {outer}"
            )));
        }
        Ok(PotentialWell(WellShape::Torus { tube, outer }))
    }

    pub fn shell(dim: usize, inner: f64, outer: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(inner.is_finite() && inner >= 0.0) {
            return Err(Error::Config(format!(
                "shell inner radius must be >= 0, got {inner}"
            )));
        }
        if !(outer.is_finite() && outer > inner) {
            return Err(Error::Config(format!(
                "shell requires outer > inner, got inner = {inner}, outer = {outer}"
            )));
        }
        Ok(PotentialWell(WellShape::Shell { dim, inner, outer }))
    }

    pub fn shape(&self) -> &WellShape {
        &self.0
    }

    pub fn dim(&self) -> usize {
        match &self.0 {
            WellShape::PointAtOrigin { dim }
            | WellShape::FinitePointSet { dim, .. }
            | WellShape::Shell { dim, .. } => *dim,
            WellShape::Circle { .. } | WellShape::Torus { .. } => 3,
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            })
        }
    }

    /// Exact Euclidean distance from `x` to Σ.
    pub fn distance(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.distance_unchecked(x))
    }

    /// `V(x) = dist(x, Σ)²`.
    pub fn potential(&self, x: &[f64]) -> Result<f64> {
        self.distance(x).map(|d| d * d)
    }

    /// Distance without the dimension check; `x.len()` must equal `dim()`.
    pub(crate) fn distance_unchecked(&self, x: &[f64]) -> f64 {
        match &self.0 {
            WellShape::PointAtOrigin { .. } => norm(x),
            WellShape::FinitePointSet { points, .. } => points
                .iter()
                .map(|p| {
                    p.iter()
                        .zip(x)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(f64::INFINITY, f64::min),
            WellShape::Circle { radius } => {
                let rho = x[0].hypot(x[1]);
                (rho - radius).hypot(x[2])
            }
            WellShape::Torus { tube, outer } => {
                let rho = x[0].hypot(x[1]);
                let core = outer - tube;
                ((rho - core).hypot(x[2]) - tube).abs()
            }
            WellShape::Shell { inner, outer, .. } => {
                let s = norm(x);
                (inner - s).max(s - outer).max(0.0)
            }
        }
    }

    /// `(δ_Σ, R_Σ) = (min |x|, max |x|)` over Σ.
    pub fn params(&self) -> WellParams {
        let (delta_sigma, r_sigma) = match &self.0 {
            WellShape::PointAtOrigin { .. } => (0.0, 0.0),
            WellShape::FinitePointSet { points, .. } => points
                .iter()
                .map(|p| norm(p))
                .fold((f64::INFINITY, 0.0_f64), |(lo, hi), r| {
                    (lo.min(r), hi.max(r))
                }),
            WellShape::Circle { radius } => (*radius, *radius),
            WellShape::Torus { tube, outer } => (outer - 2.0 * tube, *outer),
            WellShape::Shell { inner, outer, .. } => (*inner, *outer),
        };
        WellParams {
            delta_sigma,
            r_sigma,
        }
    }

    /// A uniform parameter net covering Σ, plus its covering radius: every
    /// point of Σ lies within that radius of some net point.
    ///
    /// `n` is a lower bound on the number of samples for continuous shapes.
    pub fn sample_net(&self, n: usize) -> (Vec<Vec<f64>>, f64) {
        let n = n.max(1);
        match &self.0 {
            WellShape::PointAtOrigin { dim } => (vec![vec![0.0; *dim]], 0.0),
            WellShape::FinitePointSet { points, .. } => (points.clone(), 0.0),
            WellShape::Circle { radius } => {
                let pts = (0..n)
                    .map(|i| {
                        let t = 2.0 * PI * i as f64 / n as f64;
                        vec![radius * t.cos(), radius * t.sin(), 0.0]
                    })
                    .collect();
                (pts, 2.0 * radius * (PI / (2.0 * n as f64)).sin())
            }
            WellShape::Torus { tube, outer } => {
                let core = outer - tube;
                // Aspect follows the two circumferences.
                let ratio = (outer / tube).max(1.0);
                let n_major = ((n as f64 * ratio).sqrt().ceil() as usize).max(3);
                let n_minor = n.div_ceil(n_major).max(3);
                let mut pts = Vec::with_capacity(n_major * n_minor);
                for i in 0..n_major {
                    let t = 2.0 * PI * i as f64 / n_major as f64;
                    for j in 0..n_minor {
                        let p = 2.0 * PI * j as f64 / n_minor as f64;
                        let rho = core + tube * p.cos();
                        pts.push(vec![rho * t.cos(), rho * t.sin(), tube * p.sin()]);
                    }
                }
                let s_major = outer * 2.0 * PI / n_major as f64;
                let s_minor = tube * 2.0 * PI / n_minor as f64;
                (pts, 0.5 * (s_major + s_minor))
            }
            WellShape::Shell { dim, inner, outer } => shell_net(*dim, *inner, *outer, n),
        }
    }
}

fn shell_net(dim: usize, inner: f64, outer: f64, n: usize) -> (Vec<Vec<f64>>, f64) {
    match dim {
        1 => {
            let m = n.div_ceil(2).max(2);
            let dr = (outer - inner) / (m - 1) as f64;
            let mut pts = Vec::with_capacity(2 * m);
            for i in 0..m {
                let r = inner + dr * i as f64;
                pts.push(vec![r]);
                pts.push(vec![-r]);
            }
            (pts, 0.5 * dr)
        }
        2 => {
            let n_r = ((n as f64).sqrt().ceil() as usize / 4).max(2);
            let n_t = n.div_ceil(n_r).max(8);
            let dr = (outer - inner) / (n_r - 1) as f64;
            let dt = 2.0 * PI / n_t as f64;
            let mut pts = Vec::with_capacity(n_r * n_t);
            for i in 0..n_r {
                let r = inner + dr * i as f64;
                for j in 0..n_t {
                    let t = dt * j as f64;
                    pts.push(vec![r * t.cos(), r * t.sin()]);
                }
            }
            (pts, 0.5 * dr + 0.5 * outer * dt)
        }
        _ => {
            let n_r = ((n as f64).cbrt().ceil() as usize / 2).max(2);
            let n_ang = n.div_ceil(n_r);
            let n_pol = ((n_ang as f64 / 2.0).sqrt().ceil() as usize).max(4);
            let n_az = (2 * n_pol).max(8);
            let dr = (outer - inner) / (n_r - 1) as f64;
            let dp = PI / (n_pol - 1) as f64;
            let da = 2.0 * PI / n_az as f64;
            let mut pts = Vec::with_capacity(n_r * n_pol * n_az);
            for i in 0..n_r {
                let r = inner + dr * i as f64;
                for j in 0..n_pol {
                    let p = dp * j as f64;
                    for k in 0..n_az {
                        let a = da * k as f64;
                        pts.push(vec![
                            r * p.sin() * a.cos(),
                            r * p.sin() * a.sin(),
                            r * p.cos(),
                        ]);
                    }
                }
            }
            // Radial offset, then polar arc, then azimuthal arc on the worst
            // latitude circle.
            (pts, 0.5 * dr + 0.5 * outer * dp + 0.5 * outer * da)
        }
    }
}

/// Hausdorff distance between two wells of the same dimension.
pub fn hausdorff_distance(a: &PotentialWell, b: &PotentialWell) -> Result<HausdorffEstimate> {
    hausdorff_distance_with(a, b, MIN_HAUSDORFF_SAMPLES)
}

/// As [`hausdorff_distance`], with an explicit sample count for the fallback
/// (clamped to at least [`MIN_HAUSDORFF_SAMPLES`]).
pub fn hausdorff_distance_with(
    a: &PotentialWell,
    b: &PotentialWell,
    samples: usize,
) -> Result<HausdorffEstimate> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    if a == b {
        return Ok(HausdorffEstimate::exact(0.0));
    }
    if let Some(v) = closed_form_hausdorff(a, b).or_else(|| closed_form_hausdorff(b, a)) {
        return Ok(HausdorffEstimate::exact(v));
    }
    let samples = samples.max(MIN_HAUSDORFF_SAMPLES);
    let (na, ra) = a.sample_net(samples);
    let (nb, rb) = b.sample_net(samples);
    let directed = |net: &[Vec<f64>], other: &PotentialWell| {
        net.iter()
            .map(|p| other.distance_unchecked(p))
            .fold(0.0_f64, f64::max)
    };
    let value = directed(&na, b).max(directed(&nb, a));
    let exact = ra == 0.0 && rb == 0.0;
    Ok(HausdorffEstimate {
        value,
        resolution: ra.max(rb),
        exact,
    })
}

fn closed_form_hausdorff(a: &PotentialWell, b: &PotentialWell) -> Option<f64> {
    use WellShape::*;
    match (a.shape(), b.shape()) {
        // dist(0, Σ) = δ ≤ R and the farthest point of Σ from 0 is at R.
        (PointAtOrigin { .. }, _) => Some(b.params().r_sigma),
        (Circle { radius: r1 }, Circle { radius: r2 }) => Some((r1 - r2).abs()),
        // Meridian circle of radius r at distance R - r from the axis versus
        // the point at distance c: farthest torus point is |R - r - c| + r.
        (Torus { tube, outer }, Circle { radius }) => Some((outer - tube - radius).abs() + tube),
        (
            Shell {
                inner: d1,
                outer: r1,
                ..
            },
            Shell {
                inner: d2,
                outer: r2,
                ..
            },
        ) => Some((d1 - d2).abs().max((r1 - r2).abs())),
        (FinitePointSet { points: pa, .. }, FinitePointSet { points: pb, .. }) => {
            let directed = |from: &[Vec<f64>], to: &PotentialWell| {
                from.iter()
                    .map(|p| to.distance_unchecked(p))
                    .fold(0.0_f64, f64::max)
            };
            Some(directed(pa, b).max(directed(pb, a)))
        }
        _ => None,
    }
}

impl fmt::Display for PotentialWell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            WellShape::PointAtOrigin { .. } => write!(f, "point"),
            WellShape::FinitePointSet { points, .. } => {
                let s: Vec<String> = points
                    .iter()
                    .map(|p| {
                        p.iter()
                            .map(|v| format!("{v}"))
                            .collect::<Vec<_>>()
                            .join(",")
                    })
                    .collect();
                write!(f, "points:{}", s.join(";"))
            }
            WellShape::Circle { radius } => write!(f, "circle:{radius}"),
            WellShape::Torus { tube, outer } => write!(f, "torus:{tube}:{outer}"),
            WellShape::Shell { inner, outer, .. } => write!(f, "shell:{inner}:{outer}"),
        }
    }
}

/// Parses the textual well syntax used in run configurations, with the
/// ambient dimension supplied for shapes that need one.
///
/// `point`, `points:x,y,z;x,y,z`, `circle:R`, `torus:r:R`, `shell:δ:R`.
pub fn parse_well(text: &str, dim: usize) -> Result<PotentialWell> {
    let text = text.trim();
    let mut parts = text.split(':');
    let kind = parts.next().unwrap_or_default().trim();
    let args: Vec<&str> = parts.map(str::trim).collect();
    let num = |s: &str| {
        f64::from_str(s).map_err(|_| Error::Config(format!("bad number {s:?} in well {text:?}")))
    };
    let arity = |want: usize| {
        if args.len() == want {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "well {text:?}: expected {want} parameter(s), got {}",
                args.len()
            )))
        }
    };
    match kind {
        "point" => {
            arity(0)?;
            PotentialWell::point(dim)
        }
        "circle" => {
            arity(1)?;
            PotentialWell::circle(num(args[0])?)
        }
        "torus" => {
            arity(2)?;
            PotentialWell::torus(num(args[0])?, num(args[1])?)
        }
        "shell" => {
            arity(2)?;
            PotentialWell::shell(dim, num(args[0])?, num(args[1])?)
        }
        "points" => {
            arity(1)?;
            let pts = args[0]
                .split(';')
                .map(|p| {
                    p.split(',')
                        .map(|c| num(c.trim()))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            PotentialWell::points(dim, pts)
        }
        other => Err(Error::Config(format!("unknown well kind {other:?}"))),
    }
}
