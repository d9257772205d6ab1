//! Explicit constants of the estimates and their instantiation as checked
//! inequalities `lhs ≤ rhs` with an error budget.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_op::{decay_base, grad_energy, tail_masses, weighted_moment, DiscreteField};
use crate::oscillator::{
    check_order, eigen_block, hermite_functions, level_modes, nth_eigenvalue, DEFAULT_MAX_ORDER,
};
use crate::par;
use crate::wells::{HausdorffEstimate, PotentialWell, WellShape};

/// Truncation threshold for the infinite products.
pub const PRODUCT_TOL: f64 = 1e-12;

const MAX_PRODUCT_TERMS: usize = 10_000;

/// Default floor for the circle non-collapse ratio.
pub const DEFAULT_RATIO_FLOOR: f64 = 0.5;

/// Largest relative change of `‖VΨ‖₂` between refinements.
pub const DOMAIN_DRIFT_TOL: f64 = 0.05;

/// Width of the boundary layer excluded from far-field checks.
pub const BOUNDARY_LAYER: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Inconclusive,
    Fail,
}

impl Verdict {
    /// Classifies `lhs ≤ rhs` given an error budget `eps ≥ 0`: a pass needs
    /// slack of at least `eps`, a failure a violation beyond `eps`, and
    /// anything in between is inconclusive.
    pub fn classify(lhs: f64, rhs: f64, eps: f64) -> Verdict {
        if !(lhs.is_finite() && rhs.is_finite()) {
            return Verdict::Fail;
        }
        let eps = eps.max(0.0);
        if lhs + eps <= rhs {
            Verdict::Pass
        } else if lhs <= rhs + eps {
            Verdict::Inconclusive
        } else {
            Verdict::Fail
        }
    }

    pub fn is_failure(self, strict: bool) -> bool {
        match self {
            Verdict::Pass => false,
            Verdict::Inconclusive => strict,
            Verdict::Fail => true,
        }
    }

    fn rank(self) -> u8 {
        match self {
            Verdict::Pass => 0,
            Verdict::Inconclusive => 1,
            Verdict::Fail => 2,
        }
    }
}

/// One inequality instantiated with computed data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub eps_budget: f64,
    pub verdict: Verdict,
    pub citation: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, eps: f64, citation: &str) -> Self {
        let eps = eps.abs();
        BoundReport {
            name: name.into(),
            lhs,
            rhs,
            eps_budget: eps,
            verdict: Verdict::classify(lhs, rhs, eps),
            citation: citation.to_string(),
            note: String::new(),
        }
    }

    /// Appends to the note, separated by `"; "`.
    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        let note = note.into();
        if self.note.is_empty() {
            self.note = note;
        } else if !note.is_empty() {
            self.note = format!("{}; {note}", self.note);
        }
        self
    }

    /// A report that could not be evaluated on the available data.
    pub fn inconclusive(name: impl Into<String>, citation: &str, why: impl Into<String>) -> Self {
        BoundReport {
            name: name.into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            eps_budget: 0.0,
            verdict: Verdict::Inconclusive,
            citation: citation.to_string(),
            note: why.into(),
        }
    }

    /// `lhs ≤ rhs + eps_budget`.
    pub fn holds_within_budget(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

pub mod citation {
    pub const TWO_SIDED: &str =
        "two-sided comparison: sqrt(lambda_n) - R <= sqrt(lambda_n(V)) <= sqrt(lambda_n)";
    pub const HAUSDORFF: &str =
        "Hausdorff stability: |lambda_n(V1) - lambda_n(V2)| <= d_H * max{4 + lambda_n/2, 2 lambda_n}";
    pub const POINCARE: &str = "Poincare lower bound: lambda_1(V) >= 1/C_{N,R}";
    pub const SUP: &str = "sup-norm bound: ||Psi_n||_inf <= M_N lambda_n^{N/4}";
    pub const MOMENT: &str = "second moment: int |x|^2 |Psi_n|^2 <= 4R^2 + 4 lambda_n";
    pub const MOMENT_SPLIT: &str = "split moment with sigma = 2: int |x|^2 |Psi|^2 <= 4R^2 int_{B_2R} |Psi|^2 + 4 int_{|x|>2R} V |Psi|^2";
    pub const CONTRACTION: &str =
        "tail contraction: m(rho+1) <= Theta/(1+Theta) m(rho) for rho >= R_0";
    pub const L2_DECAY: &str = "L2 decay: m(rho) <= C_1 exp(-rho log alpha)";
    pub const POINTWISE: &str = "pointwise decay: |Psi_n(x)| <= C_2 exp(-|x| log(alpha)/2)";
    pub const EIGENSPACE: &str = "eigenspace stability: dist_L2(Psi_n, W_n) <= C_3 sqrt(R)";
    pub const SQRT_SCALING: &str = "sqrt(R) scaling of the eigenspace distance";
    pub const SHELL: &str =
        "shell collapse: lambda_n(V) <= lambda_Dir(ball of radius (R - delta)/2)";
    pub const NONCOLLAPSE: &str = "circle non-collapse: lambda_1(V) >= beta > 0 for every R";
    pub const DOMAIN: &str = "operator domain: V Psi_n in L2, stable under refinement";
    pub const MONOTONE: &str = "monotonicity of eigenvalues along a family of wells";
    pub const SIGN: &str = "ground state has constant sign";
    pub const CONTRAST: &str =
        "shells collapse while circles do not: lambda_1 ratios along each family";
}

/// Volume of the unit ball in dimension 1, 2 or 3.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => PI,
        _ => 4.0 * PI / 3.0,
    }
}

/// Sharp Sobolev constant `N(N−2)π(Γ(N/2)/Γ(N))^{2/N}`; defined for `N ≥ 3`.
pub fn sobolev_constant(dim: usize) -> Option<f64> {
    if dim < 3 {
        return None;
    }
    let n = dim as f64;
    Some(n * (n - 2.0) * PI * (gamma_half(dim) / gamma_half(2 * dim)).powf(2.0 / n))
}

/// `Γ(k/2)` for a positive integer `k`.
fn gamma_half(k: usize) -> f64 {
    let mut g = if k % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut x = if k % 2 == 0 { 1.0 } else { 0.5 };
    while x < k as f64 / 2.0 - 1e-9 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Constant of the ladyzhenskaya inequality with `q = 4`.
pub const LADYZHENSKAYA_4: f64 = PI;

/// The Poincaré constant `C_{N,R}`, with `1/C_{N,R} ≤ λ₁(V)`.
pub fn poincare_constant(dim: usize, r: f64) -> f64 {
    let s = (r + 1.0) * (r + 1.0);
    match dim {
        1 => (16.0 * s).max(2.0),
        2 => s.max(2.0),
        _ => {
            let t = sobolev_constant(3).unwrap();
            (unit_ball_volume(3).powf(2.0 / 3.0) * s / t).max(1.0)
        }
    }
}

/// `exp(Σ_i log_term(i))`, stopped at the first term whose magnitude falls
/// below [`PRODUCT_TOL`] (the leading term always counts). Returns the product and the number of terms used.
fn truncated_product<F: Fn(usize) -> f64>(log_term: F) -> (f64, usize) {
    let mut sum = 0.0;
    for i in 0..MAX_PRODUCT_TERMS {
        let t = log_term(i);
        sum += t;
        if i > 0 && t.abs() < PRODUCT_TOL {
            return (sum.exp(), i + 1);
        }
    }
    (sum.exp(), MAX_PRODUCT_TERMS)
}

/// Iteration ratio of the Moser exponents: `N/(N−2)` for `N ≥ 3`, `2` for
/// `N = 2`.
fn moser_ratio(dim: usize) -> f64 {
    if dim >= 3 {
        dim as f64 / (dim as f64 - 2.0)
    } else {
        2.0
    }
}

/// `M_N` with `‖Ψ_n‖_∞ ≤ M_N λ_n^{N/4}`, and the product truncation index
/// (zero when no product is involved).
pub fn moser_constant(dim: usize) -> (f64, usize) {
    match dim {
        1 => (2f64.sqrt(), 0),
        2 => {
            // ‖Ψ‖_{2θ_{i+1}} ≤ (λθ_i/π)^{1/(4θ_i)} ‖Ψ‖_{2θ_i}, θ_i = 2^i
            let (p, terms) = truncated_product(|i| {
                let th = 2f64.powi(i as i32);
                th.ln() / (4.0 * th)
            });
            (p / LADYZHENSKAYA_4.sqrt(), terms)
        }
        _ => {
            let q = moser_ratio(dim);
            let (p, terms) = truncated_product(|i| {
                let th = q.powi(i as i32);
                th.ln() / (2.0 * th)
            });
            let t = sobolev_constant(dim).unwrap();
            (p * t.powf(-(dim as f64) / 4.0), terms)
        }
    }
}

/// Constant `C` of the far-field estimate
/// `‖Ψ_n‖_{L∞(|x| > ρ+1)} ≤ C ‖Ψ_n‖_{L²(|x| > ρ)}`.
pub fn tail_constant(dim: usize, lambda_n: f64) -> (f64, usize) {
    match dim {
        1 => (2f64.sqrt() * (4.0 * lambda_n + 10.0).powf(0.25), 0),
        2 => truncated_product(|i| {
            let th = 2f64.powi(i as i32);
            (10.0 * th / LADYZHENSKAYA_4 * (lambda_n + 4f64.powi(i as i32 + 1))).ln() / (4.0 * th)
        }),
        _ => {
            let t = sobolev_constant(dim).unwrap();
            let q = moser_ratio(dim);
            truncated_product(|i| {
                let th = q.powi(i as i32);
                (10.0 * th / t * (lambda_n + 4f64.powi(i as i32 + 1))).ln() / (2.0 * th)
            })
        }
    }
}

/// `C₃(N, n)` with `dist_L2(Ψ_n, W_n) ≤ C₃ √R`.
pub fn eigenspace_constant(dim: usize, n: usize) -> f64 {
    let b = eigen_block(dim, n);
    let lam = |i: usize| if i == 0 { 0.0 } else { nth_eigenvalue(dim, i) };
    let lambda_n = lam(n);
    let below = b.first_index() - 1;
    let r1 = b.r1;
    let small_r = if below == 0 {
        1.0 / b.delta_n
    } else {
        let lp = lam(below);
        let a = ((lambda_n.sqrt() + lp.sqrt()) / 2.0).powi(2) - lp;
        // ∫|x|²Φ_k² = λ_k/2 for oscillator eigenstates
        let sum: f64 = (1..=below).map(|k| lam(k) / 2.0 + r1 + 1.0).sum();
        let moment = 4.0 * r1 * r1 + 4.0 * lambda_n + r1 + 1.0;
        1.0 / b.delta_n + r1 / (a * a) * (1.0 + (lambda_n - lam(1)) / b.delta_n) * moment * sum
    };
    (1.0 / r1).max(small_r).sqrt()
}

/// Every explicit constant for dimension `N`, index `n` and `R = R_Σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsTable {
    pub dim: usize,
    pub n: usize,
    pub r: f64,
    /// Oscillator eigenvalue `λ_n`.
    pub lambda_n: f64,
    /// Sobolev constant `𝒯_N`; absent below dimension 3.
    pub t_n: Option<f64>,
    pub l4: f64,
    pub c_nr: f64,
    pub m_n: f64,
    pub m_n_terms: usize,
    /// True when `M_N` comes from re-deriving the iteration rather than a
    /// printed closed form.
    pub m_n_derived: bool,
    pub alpha: f64,
    pub theta: f64,
    pub r0: f64,
    pub c1: f64,
    pub c_tail: f64,
    pub c_tail_terms: usize,
    pub c2: f64,
    pub c3: f64,
}

impl ConstantsTable {
    /// Contraction factor `Θ/(1+Θ)`.
    pub fn contraction(&self) -> f64 {
        self.theta / (1.0 + self.theta)
    }
}

pub fn constants(dim: usize, n: usize, r: f64) -> Result<ConstantsTable> {
    if !(1..=3).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    if n == 0 {
        return Err(Error::Config("eigenvalue indices are 1-based".into()));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::Config(format!("R must be non-negative, got {r}")));
    }
    let lambda_n = nth_eigenvalue(dim, n);
    let alpha = decay_base(dim);
    let theta = 1.0 / lambda_n + 1.0;
    let r0 = (2.0 * lambda_n).sqrt() + r;
    let c1 = 2f64.powf(r0 + 1.0);
    let (m_n, m_n_terms) = moser_constant(dim);
    let (c_tail, c_tail_terms) = tail_constant(dim, lambda_n);
    let c2 = (alpha.sqrt() * m_n * lambda_n.powf(dim as f64 / 4.0)).max(c_tail * alpha * c1.sqrt());
    Ok(ConstantsTable {
        dim,
        n,
        r,
        lambda_n,
        t_n: sobolev_constant(dim),
        l4: LADYZHENSKAYA_4,
        c_nr: poincare_constant(dim, r),
        m_n,
        m_n_terms,
        m_n_derived: dim == 2,
        alpha,
        theta,
        r0,
        c1,
        c_tail,
        c_tail_terms,
        c2,
        c3: eigenspace_constant(dim, n),
    })
}

/// Error of `√λ` induced by an error `eps` on `λ`.
fn sqrt_error(lambda: f64, eps: f64) -> f64 {
    let lo = (lambda - eps).max(0.0).sqrt();
    let hi = (lambda + eps).sqrt();
    (lambda.sqrt() - lo).max(hi - lambda.sqrt())
}

/// `√λ_n − R ≤ √λ_n(V) ≤ √λ_n`, reported as the signed excess of
/// `√λ_n(V)` outside the interval (non-positive when it lies inside).
pub fn check_two_sided(dim: usize, n: usize, r: f64, lam_v: f64, eps_disc: f64) -> BoundReport {
    let s = nth_eigenvalue(dim, n).sqrt();
    let sv = lam_v.max(0.0).sqrt();
    let lower = s - r;
    let excess = (lower - sv).max(sv - s);
    BoundReport::new(
        format!("two_sided[n={n},R={r}]"),
        excess,
        0.0,
        sqrt_error(lam_v, eps_disc),
        citation::TWO_SIDED,
    )
    .with_note(format!(
        "sqrt(lambda_V) = {sv:.10}, interval [{lower:.10}, {s:.10}]"
    ))
}

/// An eigenvalue with its discretisation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub eps: f64,
}

impl Estimate {
    pub fn new(value: f64, eps: f64) -> Self {
        Estimate { value, eps }
    }
}

pub fn check_hausdorff_stability(
    dim: usize,
    n: usize,
    a: Estimate,
    b: Estimate,
    dh: &HausdorffEstimate,
) -> BoundReport {
    let lam = nth_eigenvalue(dim, n);
    let factor = (4.0 + lam / 2.0).max(2.0 * lam);
    BoundReport::new(
        format!("hausdorff[n={n}]"),
        (a.value - b.value).abs(),
        dh.value * factor,
        a.eps + b.eps + dh.resolution * factor,
        citation::HAUSDORFF,
    )
    .with_note(format!(
        "d_H = {} ({})",
        dh.value,
        if dh.exact { "exact" } else { "sampled" }
    ))
}

pub fn check_poincare(dim: usize, r: f64, lam1: Estimate) -> BoundReport {
    BoundReport::new(
        format!("poincare[R={r}]"),
        1.0 / poincare_constant(dim, r),
        lam1.value,
        lam1.eps,
        citation::POINCARE,
    )
}

fn require_normalized(field: &DiscreteField) -> Result<()> {
    if field.is_normalized() {
        Ok(())
    } else {
        Err(Error::Precondition(
            "bound check needs a field normalised in discrete L2".into(),
        ))
    }
}

/// Sup-norm bound with the well-independent right-hand side.
pub fn check_sup_bound(
    dim: usize,
    n: usize,
    field: &DiscreteField,
    eps: f64,
) -> Result<BoundReport> {
    require_normalized(field)?;
    let (m, _) = moser_constant(dim);
    Ok(BoundReport::new(
        format!("sup[n={n}]"),
        field.sup_norm(),
        m * nth_eigenvalue(dim, n).powf(dim as f64 / 4.0),
        eps,
        citation::SUP,
    ))
}

pub fn check_moment_bound(
    field: &DiscreteField,
    dim: usize,
    n: usize,
    r: f64,
    eps: f64,
) -> Result<BoundReport> {
    require_normalized(field)?;
    Ok(BoundReport::new(
        format!("moment[n={n}]"),
        weighted_moment(field, 0),
        4.0 * r * r + 4.0 * nth_eigenvalue(dim, n),
        eps,
        citation::MOMENT,
    ))
}

/// The split second-moment estimate with `σ = 2`, whose right-hand side is
/// evaluated on the field itself.
pub fn check_split_moment(
    field: &DiscreteField,
    well: &PotentialWell,
    eps: f64,
) -> Result<BoundReport> {
    require_normalized(field)?;
    check_grid_dim(field, well)?;
    let g = field.grid;
    let r = well.params().r_sigma;
    let inner_sq = (2.0 * r) * (2.0 * r);
    let u = &field.values;
    let sums = par::chunked_sum_vec(u.len(), 3, |range, acc| {
        for i in range {
            let x = u[i];
            if x == 0.0 {
                continue;
            }
            let r2 = g.radius_sq(i);
            acc[0] += r2 * x * x;
            if r2 < inner_sq {
                acc[1] += x * x;
            } else {
                let p = g.point(i);
                let d = well.distance_unchecked(&p[..g.dim]);
                acc[2] += d * d * x * x;
            }
        }
    });
    let vol = g.cell_volume();
    Ok(BoundReport::new(
        "moment_split",
        sums[0] * vol,
        (4.0 * r * r * sums[1] + 4.0 * sums[2]) * vol,
        eps,
        citation::MOMENT_SPLIT,
    ))
}

fn check_grid_dim(field: &DiscreteField, well: &PotentialWell) -> Result<()> {
    if field.grid.dim == well.dim() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: well.dim(),
            got: field.grid.dim,
        })
    }
}

/// One radius of a tail profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailSample {
    pub rho: f64,
    pub tail_mass: f64,
    /// `C₁ e^{−ρ log α}`.
    pub bound: f64,
    pub eps: f64,
}

/// Results of the L² tail audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailAudit {
    pub contraction: BoundReport,
    pub integrated: BoundReport,
    pub profile: Vec<TailSample>,
}

/// Picks the worst of a family of reports (highest verdict rank, then the
/// largest excess relative to the budget).
fn worst(reports: Vec<BoundReport>) -> Option<BoundReport> {
    let score = |r: &BoundReport| {
        let excess = r.lhs - r.rhs;
        if r.eps_budget > 0.0 {
            excess / r.eps_budget
        } else if excess > 0.0 {
            f64::INFINITY
        } else {
            excess
        }
    };
    reports.into_iter().max_by(|a, b| {
        a.verdict
            .rank()
            .cmp(&b.verdict.rank())
            .then(score(a).total_cmp(&score(b)))
    })
}

/// Absolute error budget on tail masses: the two-grid difference (when a
/// coarse companion is supplied) plus the eigenvector error `eta`, which
/// perturbs `m(ρ)` by at most `2η√m + η²`.
fn mass_budget(fine: f64, coarse: Option<f64>, eta: f64) -> f64 {
    coarse.map_or(0.0, |c| (fine - c).abs()) + 2.0 * eta * fine.sqrt() + eta * eta
}

/// Shell contraction `m(ρ+1) ≤ Θ/(1+Θ) m(ρ)` for integers
/// `ρ ∈ [⌈R₀⌉, L − 3]`, and the integrated bound `m(ρ) ≤ C₁ α^{−ρ}` on the
/// same range.
///
/// `eta` bounds the L² error of the computed eigenvector; `coarse` is the
/// same eigenstate on a coarser grid.
pub fn check_tail_contraction(
    field: &DiscreteField,
    coarse: Option<&DiscreteField>,
    n: usize,
    r: f64,
    eta: f64,
) -> Result<TailAudit> {
    require_normalized(field)?;
    let dim = field.grid.dim;
    let c = constants(dim, n, r)?;
    let l = field.grid.half_width;
    let start = c.r0.ceil();
    let stop = (l - BOUNDARY_LAYER - 1.0).floor();
    if c.r0 + 2.0 > l - BOUNDARY_LAYER || stop < start {
        let why = format!(
            "box half-width {l} too small: need R_0 + 2 <= L - 2 with R_0 = {:.4}",
            c.r0
        );
        return Ok(TailAudit {
            contraction: BoundReport::inconclusive("tail_contraction", citation::CONTRACTION, &why),
            integrated: BoundReport::inconclusive("tail_integrated", citation::L2_DECAY, why),
            profile: Vec::new(),
        });
    }
    let rhos: Vec<f64> = (0..=((stop - start) as usize + 1))
        .map(|i| start + i as f64)
        .collect();
    let masses = tail_masses(field, &rhos);
    let coarse_masses = coarse.map(|f| tail_masses(f, &rhos));
    let eps: Vec<f64> = (0..rhos.len())
        .map(|i| mass_budget(masses[i], coarse_masses.as_ref().map(|m| m[i]), eta))
        .collect();
    let q = c.contraction();
    let contraction: Vec<BoundReport> = (0..rhos.len() - 1)
        .map(|i| {
            BoundReport::new(
                format!("tail_contraction[rho={}]", rhos[i]),
                masses[i + 1],
                q * masses[i],
                eps[i + 1] + q * eps[i],
                citation::CONTRACTION,
            )
        })
        .collect();
    let profile: Vec<TailSample> = rhos[..rhos.len() - 1]
        .iter()
        .enumerate()
        .map(|(i, &rho)| TailSample {
            rho,
            tail_mass: masses[i],
            bound: c.c1 * (-rho * c.alpha.ln()).exp(),
            eps: eps[i],
        })
        .collect();
    let integrated: Vec<BoundReport> = profile
        .iter()
        .map(|s| {
            BoundReport::new(
                format!("tail_integrated[rho={}]", s.rho),
                s.tail_mass,
                s.bound,
                s.eps,
                citation::L2_DECAY,
            )
        })
        .collect();
    let range = format!("rho in [{start}, {stop}], factor {q:.6}");
    let contraction = worst(contraction).unwrap();
    let integrated = worst(integrated).unwrap();
    Ok(TailAudit {
        contraction: BoundReport {
            note: format!("worst of {range}"),
            name: "tail_contraction".into(),
            ..contraction
        },
        integrated: BoundReport {
            note: format!("worst of {range}"),
            name: "tail_integrated".into(),
            ..integrated
        },
        profile,
    })
}

/// One radial shell of the pointwise envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSample {
    pub radius: f64,
    /// Largest `|Ψ(x)|` with `|x|` in `[radius, radius + 1)`.
    pub sup: f64,
    /// `C₂ e^{−radius log(α)/2}`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayEnvelope {
    pub report: BoundReport,
    pub profile: Vec<EnvelopeSample>,
}

/// `max |Ψ(x)| α^{|x|/2} ≤ C₂` over nodes with `R₀ + 1 ≤ |x| ≤ L − 2`.
///
/// `eta_sup` bounds the pointwise error of the computed field.
pub fn check_pointwise_decay(
    field: &DiscreteField,
    n: usize,
    r: f64,
    eta_sup: f64,
) -> Result<DecayEnvelope> {
    require_normalized(field)?;
    let g = field.grid;
    let c = constants(g.dim, n, r)?;
    let inner = c.r0 + 1.0;
    let outer = g.half_width - BOUNDARY_LAYER;
    if inner > outer {
        return Ok(DecayEnvelope {
            report: BoundReport::inconclusive(
                "pointwise_decay",
                citation::POINTWISE,
                format!(
                    "box half-width {} too small for R_0 + 1 = {inner:.4}",
                    g.half_width
                ),
            ),
            profile: Vec::new(),
        });
    }
    let half_log = 0.5 * c.alpha.ln();
    let shells = (outer - inner).floor() as usize + 1;
    let u = &field.values;
    // per shell: sup |v|, and max (|v| + eta) e^{|x| log(α)/2}
    let partial = par::map_indices(u.len().div_ceil(par::CHUNK), |ci| {
        let lo = ci * par::CHUNK;
        let hi = (lo + par::CHUNK).min(u.len());
        let mut sup = vec![0.0f64; shells];
        let mut weighted = 0.0f64;
        let mut weighted_eta = 0.0f64;
        for i in lo..hi {
            let rad = g.radius_sq(i).sqrt();
            if rad < inner || rad > outer {
                continue;
            }
            let s = ((rad - inner).floor() as usize).min(shells - 1);
            let a = u[i].abs();
            sup[s] = sup[s].max(a);
            let w = (rad * half_log).exp();
            weighted = weighted.max(a * w);
            weighted_eta = weighted_eta.max(eta_sup * w);
        }
        (sup, weighted, weighted_eta)
    });
    let mut sup = vec![0.0f64; shells];
    let mut lhs = 0.0f64;
    let mut eps = 0.0f64;
    for (s, w, we) in partial {
        for (a, b) in sup.iter_mut().zip(s) {
            *a = a.max(b);
        }
        lhs = lhs.max(w);
        eps = eps.max(we);
    }
    let profile = sup
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let radius = inner + i as f64;
            EnvelopeSample {
                radius,
                sup: s,
                bound: c.c2 * (-radius * half_log).exp(),
            }
        })
        .collect();
    Ok(DecayEnvelope {
        report: BoundReport::new("pointwise_decay", lhs, c.c2, eps, citation::POINTWISE)
            .with_note(format!("nodes with {inner:.4} <= |x| <= {outer:.4}")),
        profile,
    })
}

/// Distance of a computed eigenstate to the oscillator eigenspace of the
/// same level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenspaceDistance {
    pub dist_l2: f64,
    /// Discrete `H¹(|x|²)` norm of the residual `Ψ − Σ c_k Φ_k`.
    pub dist_weighted: f64,
    pub coefficients: Vec<f64>,
}

/// Samples the Hermite modes of the level containing `λ_n` on the field's
/// grid, re-orthonormalised in the discrete inner product.
pub fn sampled_block(grid: &crate::grid_op::BoxGrid, n: usize) -> Result<Vec<DiscreteField>> {
    let dim = grid.dim;
    let modes = level_modes(dim, eigen_block(dim, n).level);
    for m in &modes {
        check_order(m, DEFAULT_MAX_ORDER)?;
    }
    let max_order = eigen_block(dim, n).level;
    let table: Vec<Vec<f64>> = (0..grid.cells)
        .map(|i| hermite_functions(max_order, grid.coord(i)))
        .collect();
    let mut basis: Vec<Vec<f64>> = modes
        .iter()
        .map(|mode| {
            par::map_indices(grid.len(), |idx| {
                let ix = grid.unravel(idx);
                mode.multi_index
                    .iter()
                    .enumerate()
                    .map(|(a, &k)| table[ix[a]][k])
                    .product()
            })
        })
        .collect();
    let vol = grid.cell_volume();
    for j in 0..basis.len() {
        for _ in 0..2 {
            let (done, rest) = basis.split_at_mut(j);
            let coeffs = par::multi_dot(done, &rest[0]);
            par::subtract_combination(&mut rest[0], done, &coeffs);
        }
        let nrm = (par::dot(&basis[j], &basis[j]) * vol).sqrt();
        par::scale(&mut basis[j], 1.0 / nrm);
    }
    basis
        .into_iter()
        .map(|v| {
            let mut f = DiscreteField::new(*grid, v)?;
            f.mark_normalized();
            Ok(f)
        })
        .collect()
}

pub fn eigenspace_distance(field: &DiscreteField, n: usize) -> Result<EigenspaceDistance> {
    require_normalized(field)?;
    let block = sampled_block(&field.grid, n)?;
    let coefficients: Vec<f64> = block.iter().map(|phi| field.inner(phi)).collect();
    let captured: f64 = coefficients.iter().map(|c| c * c).sum();
    let mut residual = field.values.clone();
    for (phi, c) in block.iter().zip(&coefficients) {
        par::axpy(&mut residual, -c, &phi.values);
    }
    let residual = DiscreteField::new(field.grid, residual)?;
    let dist_weighted = (grad_energy(&residual) + weighted_moment(&residual, 0)).sqrt();
    Ok(EigenspaceDistance {
        dist_l2: (1.0 - captured).max(0.0).sqrt(),
        dist_weighted,
        coefficients,
    })
}

pub fn check_eigenspace(dim: usize, n: usize, r: f64, dist: Estimate) -> BoundReport {
    BoundReport::new(
        format!("eigenspace[n={n},R={r}]"),
        dist.value,
        eigenspace_constant(dim, n) * r.sqrt(),
        dist.eps,
        citation::EIGENSPACE,
    )
}

/// `max_R d(R)/√R ≤ factor · d(R_ref)/√R_ref`, where `R_ref` is the largest
/// radius in the sweep. Samples are `(R, d, eps)`.
pub fn check_sqrt_scaling(
    name: &str,
    samples: &[(f64, Estimate)],
    factor: f64,
) -> Result<BoundReport> {
    let reference = samples
        .iter()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| Error::Precondition("sqrt scaling needs samples".into()))?;
    let mut lhs = f64::NEG_INFINITY;
    let mut eps = 0.0f64;
    for &(r, d) in samples {
        if !(r > 0.0) {
            return Err(Error::Precondition(format!(
                "radius must be positive, got {r}"
            )));
        }
        let ratio = d.value / r.sqrt();
        if ratio > lhs {
            lhs = ratio;
            eps = d.eps / r.sqrt();
        }
    }
    let (r_ref, d_ref) = *reference;
    Ok(BoundReport::new(
        name,
        lhs,
        factor * d_ref.value / r_ref.sqrt(),
        eps + factor * d_ref.eps / r_ref.sqrt(),
        citation::SQRT_SCALING,
    )
    .with_note(format!("reference R = {r_ref}, factor {factor}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    NonIncreasing,
    NonDecreasing,
}

/// Monotonicity of `value` along a sequence ordered by its parameter.
/// Each consecutive pair may violate the trend by the sum of their errors.
pub fn check_monotone(
    name: &str,
    samples: &[(f64, Estimate)],
    trend: Trend,
) -> Result<BoundReport> {
    if samples.len() < 2 {
        return Err(Error::Precondition("monotonicity needs two samples".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let reports = sorted
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0].1, w[1].1);
            let rise = match trend {
                Trend::NonIncreasing => b.value - a.value,
                Trend::NonDecreasing => a.value - b.value,
            };
            BoundReport::new(name, rise, 0.0, a.eps + b.eps, citation::MONOTONE)
                .with_note(format!("between parameters {} and {}", w[0].0, w[1].0))
        })
        .collect();
    Ok(worst(reports).unwrap())
}

/// `λ₁(V) ≤ π² (2/(R − δ))²` for the shell `δ ≤ |x| ≤ R` in ℝ³.
pub fn check_shell_collapse(lam1: Estimate, well: &PotentialWell) -> Result<BoundReport> {
    let (inner, outer) = match well.shape() {
        WellShape::Shell {
            dim: 3,
            inner,
            outer,
        } => (*inner, *outer),
        _ => {
            return Err(Error::Precondition(
                "shell collapse applies to three-dimensional shells".into(),
            ))
        }
    };
    let radius = (outer - inner) / 2.0;
    Ok(BoundReport::new(
        format!("shell_collapse[{inner},{outer}]"),
        lam1.value,
        PI * PI / (radius * radius),
        lam1.eps,
        citation::SHELL,
    ))
}

/// `min λ₁ ≥ floor · λ₁(first radius)` over a sweep of circle radii.
/// Samples are `(R, λ₁)`, at least three with `R ≥ 2`.
pub fn check_circle_noncollapse(samples: &[(f64, Estimate)], floor: f64) -> Result<BoundReport> {
    if samples.len() < 3 {
        return Err(Error::Precondition(format!(
            "non-collapse needs at least 3 radii, got {}",
            samples.len()
        )));
    }
    if let Some((r, _)) = samples.iter().find(|(r, _)| *r < 2.0) {
        return Err(Error::Precondition(format!(
            "non-collapse radii must be at least 2, got {r}"
        )));
    }
    let first = samples[0].1;
    let min = samples
        .iter()
        .map(|s| s.1)
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .unwrap();
    let values: Vec<String> = samples
        .iter()
        .map(|(r, l)| format!("{r}:{}", l.value))
        .collect();
    let positive = samples.iter().all(|(_, l)| l.value > 0.0);
    let report = BoundReport::new(
        "circle_noncollapse",
        floor * first.value,
        if positive {
            min.value
        } else {
            f64::NEG_INFINITY
        },
        floor * first.eps + min.eps,
        citation::NONCOLLAPSE,
    );
    Ok(report.with_note(format!(
        "ratio floor {floor} (pilot-derived surrogate for beta); lambda_1 by radius {}",
        values.join(", ")
    )))
}

/// Largest entry of the wrong sign relative to the dominant one, as a
/// fraction of the sup norm, against the tolerance `1e-6`.
pub fn check_ground_state_sign(field: &DiscreteField) -> BoundReport {
    let v = &field.values;
    let (sup, sign) = v.iter().fold((0.0f64, 1.0f64), |(m, s), &x| {
        if x.abs() > m {
            (x.abs(), x.signum())
        } else {
            (m, s)
        }
    });
    let wrong = v.iter().fold(0.0f64, |m, &x| m.max(-sign * x));
    let lhs = if sup > 0.0 { wrong / sup } else { f64::NAN };
    BoundReport::new("ground_state_sign", lhs, 1e-6, 0.0, citation::SIGN)
}

/// `λ₁(last)/λ₁(first)` along a shell sweep stays below the same ratio's
/// minimum along a circle sweep: the shell family drops where the circle
/// family is bounded below.
pub fn check_collapse_contrast(shells: &[Estimate], circles: &[Estimate]) -> Result<BoundReport> {
    if shells.len() < 2 || circles.len() < 2 {
        return Err(Error::Precondition(
            "collapse contrast needs two shells and two circles".into(),
        ));
    }
    let ratio = |a: Estimate, b: Estimate| {
        let q = a.value / b.value;
        (q, q * (a.eps / a.value.abs() + b.eps / b.value.abs()))
    };
    let (shell_q, shell_e) = ratio(shells[shells.len() - 1], shells[0]);
    let (circle_q, circle_e) = circles
        .iter()
        .skip(1)
        .map(|&c| ratio(c, circles[0]))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap();
    Ok(BoundReport::new(
        "collapse_contrast",
        shell_q,
        circle_q,
        shell_e + circle_e,
        citation::CONTRAST,
    )
    .with_note(format!(
        "shell ratio {shell_q:.6}, circle ratio {circle_q:.6}"
    )))
}

/// Discrete `‖VΨ‖₂`.
pub fn potential_l2(field: &DiscreteField, well: &PotentialWell) -> Result<f64> {
    check_grid_dim(field, well)?;
    let g = field.grid;
    let u = &field.values;
    let s = par::chunked_sum(u.len(), |range| {
        range
            .map(|i| {
                let p = g.point(i);
                let v = well.distance_unchecked(&p[..g.dim]).powi(2);
                (v * u[i]).powi(2)
            })
            .sum()
    });
    Ok((s * g.cell_volume()).sqrt())
}

/// Relative change of `‖VΨ‖₂` between a coarse and a fine solve is at most
/// [`DOMAIN_DRIFT_TOL`].
pub fn check_domain_h2(
    fine: &DiscreteField,
    coarse: &DiscreteField,
    well: &PotentialWell,
) -> Result<BoundReport> {
    let a = potential_l2(fine, well)?;
    let b = potential_l2(coarse, well)?;
    let drift = if a == 0.0 && b == 0.0 {
        0.0
    } else {
        (a - b).abs() / a.max(b)
    };
    Ok(
        BoundReport::new("domain_h2", drift, DOMAIN_DRIFT_TOL, 0.0, citation::DOMAIN)
            .with_note(format!("||V Psi|| fine {a:.10}, coarse {b:.10}")),
    )
}
