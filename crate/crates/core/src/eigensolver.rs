//! Lowest eigenpairs of symmetric matrix-free operators.
//!
//! The main path is a thick-restart block Lanczos method with full
//! (two-pass classical Gram–Schmidt) reorthogonalisation. It keeps the
//! relation `A V_p = V_{p+b} H` between the orthonormal basis and a small
//! dense matrix, extracts Ritz pairs from the leading `p × p` block of `H`
//! and restarts by compressing the basis onto its best Ritz vectors.
//! Small problems are solved densely.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, NotConverged, Result};
use crate::grid_op::{DiscreteField, DiscreteOperator};
use crate::par;

/// Symmetric linear operator acting on flat vectors.
pub trait SymmetricOperator: Sync {
    fn size(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// Guaranteed bounds `(lower, upper)` on the spectrum, if cheaply known.
    /// Enables polynomial filtering.
    fn spectral_bounds(&self) -> Option<(f64, f64)> {
        None
    }
}

impl SymmetricOperator for DiscreteOperator {
    fn size(&self) -> usize {
        self.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        DiscreteOperator::apply(self, x, y)
    }

    fn spectral_bounds(&self) -> Option<(f64, f64)> {
        // -Δ_h and V are both positive semi-definite.
        Some((0.0, self.gershgorin_upper()))
    }
}

/// `T_d((A - c)/e)`: keeps the part of the spectrum inside `[c - e, c + e]`
/// in `[-1, 1]` and amplifies everything below it.
struct ChebyshevFilter<'a, O: SymmetricOperator> {
    op: &'a O,
    degree: usize,
    center: f64,
    half_width: f64,
}

impl<O: SymmetricOperator> SymmetricOperator for ChebyshevFilter<'_, O> {
    fn size(&self) -> usize {
        self.op.size()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (c, e) = (self.center, self.half_width);
        let mut prev = x.to_vec();
        let mut cur = vec![0.0; x.len()];
        self.op.apply(x, &mut cur);
        par::for_each_chunk_mut(&mut cur, par::CHUNK, |start, chunk| {
            for (t, xi) in chunk.iter_mut().zip(&x[start..]) {
                *t = (*t - c * xi) / e;
            }
        });
        let mut tmp = vec![0.0; x.len()];
        for _ in 2..=self.degree {
            self.op.apply(&cur, &mut tmp);
            let (cur_r, prev_r) = (&cur, &prev);
            par::for_each_chunk_mut(&mut tmp, par::CHUNK, |start, chunk| {
                let end = start + chunk.len();
                for ((t, u), v) in chunk
                    .iter_mut()
                    .zip(&cur_r[start..end])
                    .zip(&prev_r[start..end])
                {
                    *t = 2.0 * (*t - c * u) / e - v;
                }
            });
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut tmp);
        }
        y.copy_from_slice(&cur);
    }
}

/// Upper cap on the memory held by the Krylov basis.
const BASIS_MEMORY_BYTES: usize = 1_500_000_000;

/// A new direction is treated as linearly dependent when orthogonalisation
/// shrinks it below this fraction of `‖A q‖`.
const DEFLATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Number of requested eigenpairs.
    pub k: usize,
    /// Extra Ritz vectors carried along but not required to converge.
    pub buffer: usize,
    /// Relative residual tolerance: `‖Ax - θx‖ ≤ tol · max(θ, 1)`.
    pub tol: f64,
    /// Maximum number of block expansion steps.
    pub max_iter: usize,
    pub seed: u64,
    /// Block size; 0 picks a default from `k`.
    pub block_size: usize,
    /// Maximum basis size before a restart; 0 picks a default.
    pub max_basis: usize,
    /// Problems up to this size are solved with a dense eigendecomposition.
    pub dense_threshold: usize,
    /// Use Chebyshev-filtered subspace iteration when the operator provides
    /// spectral bounds; otherwise (or when false) use block Lanczos.
    pub filter: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            k: 1,
            buffer: 5,
            tol: 1e-8,
            max_iter: 5000,
            seed: 42,
            block_size: 0,
            max_basis: 0,
            dense_threshold: 512,
            filter: true,
        }
    }
}

impl SolverConfig {
    pub fn new(k: usize) -> Self {
        SolverConfig {
            k,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    fn effective_block(&self) -> usize {
        match self.block_size {
            0 if self.k == 1 => 2,
            0 => 4,
            b => b,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub field: DiscreteField,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub pairs: Vec<EigenPair>,
    pub iterations: usize,
    pub matvecs: usize,
}

impl EigenResult {
    pub fn values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.residual).collect()
    }
}

/// Converged pairs on raw vectors of unit Euclidean norm.
#[derive(Debug, Clone)]
pub struct RawEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub matvecs: usize,
}

/// The `k` smallest eigenpairs of the discretised operator, with fields
/// normalised in the discrete L² norm.
pub fn smallest_eigenpairs(op: &DiscreteOperator, cfg: &SolverConfig) -> Result<EigenResult> {
    let raw = lowest_eigenpairs(op, cfg)?;
    let w = op.grid.cell_volume().sqrt().recip();
    let pairs = raw
        .values
        .iter()
        .zip(raw.vectors)
        .zip(&raw.residuals)
        .map(|((&value, mut v), &residual)| {
            par::scale(&mut v, w);
            let mut field = DiscreteField::new(op.grid, v)?;
            field.mark_normalized();
            Ok(EigenPair {
                value,
                field,
                residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EigenResult {
        pairs,
        iterations: raw.iterations,
        matvecs: raw.matvecs,
    })
}

/// True iff the ground state has constant sign up to `1e-6 · sup`.
pub fn ground_state_sign_check(result: &EigenResult) -> bool {
    let Some(first) = result.pairs.first() else {
        return false;
    };
    let v = &first.field.values;
    let (sup, sign) = v.iter().fold((0.0f64, 1.0f64), |(m, s), &x| {
        if x.abs() > m {
            (x.abs(), x.signum())
        } else {
            (m, s)
        }
    });
    v.iter().all(|&x| sign * x >= -1e-6 * sup)
}

/// Fixes the global sign so that the first entry above `1e-8 · sup` in
/// magnitude is positive.
fn canonical_sign(v: &mut [f64]) {
    let sup = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(&first) = v.iter().find(|x| x.abs() > 1e-8 * sup) {
        if first < 0.0 {
            par::scale(v, -1.0);
        }
    }
}

fn residual_norm<O: SymmetricOperator>(op: &O, x: &[f64], theta: f64, ax: &mut [f64]) -> f64 {
    op.apply(x, ax);
    par::axpy(ax, -theta, x);
    par::norm(ax)
}

/// Sorts pairs ascending by value, fixes signs and builds the result.
fn finish(
    mut values: Vec<f64>,
    mut vectors: Vec<Vec<f64>>,
    mut residuals: Vec<f64>,
    iterations: usize,
    matvecs: usize,
) -> RawEigen {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    values = order.iter().map(|&i| values[i]).collect();
    residuals = order.iter().map(|&i| residuals[i]).collect();
    let mut taken: Vec<Option<Vec<f64>>> = vectors.drain(..).map(Some).collect();
    vectors = order.iter().map(|&i| taken[i].take().unwrap()).collect();
    for v in &mut vectors {
        canonical_sign(v);
    }
    RawEigen {
        values,
        vectors,
        residuals,
        iterations,
        matvecs,
    }
}

/// Sorted eigen-decomposition of a small symmetric matrix.
fn sorted_eigen(t: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = t.nrows();
    let m = faer::Mat::<f64>::from_fn(n, n, |i, j| t[(i, j)]);
    let eig = m.selfadjoint_eigendecomposition(faer::Side::Lower);
    let s = eig.s().column_vector();
    let u = eig.u();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s.read(a).total_cmp(&s.read(b)));
    let values = order.iter().map(|&i| s.read(i)).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| u.read(r, order[c]));
    (values, vectors)
}

/// The `k` smallest eigenpairs of a symmetric operator on unit vectors.
pub fn lowest_eigenpairs<O: SymmetricOperator>(op: &O, cfg: &SolverConfig) -> Result<RawEigen> {
    cfg.validate()?;
    let n = op.size();
    if cfg.k > n {
        return Err(Error::Precondition(format!(
            "requested {} eigenpairs of an operator of size {n}",
            cfg.k
        )));
    }
    if n <= cfg.dense_threshold {
        return dense_eigenpairs(op, cfg);
    }
    match op.spectral_bounds().filter(|_| cfg.filter) {
        Some((lower, upper)) => filtered_subspace_iteration(op, cfg, lower, upper),
        None => BlockLanczos::new(op, cfg)?.run(),
    }
}

/// Largest filter degree.
const MAX_FILTER_DEGREE: usize = 400;

/// `acosh` of the largest amplification a single filter sweep may apply;
/// keeps the filtered block well enough conditioned for Gram–Schmidt.
const MAX_AMPLIFICATION_ACOSH: f64 = 19.1;

/// Orthonormalises `vs` in place by two-pass Gram–Schmidt, replacing
/// numerically dependent vectors by random ones.
fn orthonormalize(vs: &mut [Vec<f64>], rng: &mut ChaCha8Rng) {
    for j in 0..vs.len() {
        let (done, rest) = vs.split_at_mut(j);
        let w = &mut rest[0];
        let mut start = par::norm(w);
        loop {
            for _ in 0..2 {
                let c = par::multi_dot(done, w);
                par::subtract_combination(w, done, &c);
            }
            let nw = par::norm(w);
            if nw > DEFLATION_TOL * start && nw > 0.0 {
                par::scale(w, 1.0 / nw);
                break;
            }
            for x in w.iter_mut() {
                *x = rng.gen::<f64>() - 0.5;
            }
            start = par::norm(w);
        }
    }
}

/// Rayleigh–Ritz on the orthonormal block `x` given `ax = A x`: rotates both
/// onto the Ritz vectors and returns Ritz values and residual norms.
fn rayleigh_ritz(x: &mut [Vec<f64>], ax: &mut [Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let s = x.len();
    let g = par::block_dot(x, ax);
    let t = DMatrix::from_fn(s, s, |i, j| 0.5 * (g[j][i] + g[i][j]));
    let (theta, w) = sorted_eigen(t);
    let coeffs: Vec<Vec<f64>> = (0..s)
        .map(|j| w.column(j).iter().copied().collect())
        .collect();
    par::transform_in_place(x, &coeffs);
    par::transform_in_place(ax, &coeffs);
    let res = x
        .iter()
        .zip(ax.iter())
        .zip(&theta)
        .map(|((xj, axj), &th)| {
            par::chunked_sum(xj.len(), |r| {
                axj[r.clone()]
                    .iter()
                    .zip(&xj[r])
                    .map(|(a, b)| (a - th * b) * (a - th * b))
                    .sum()
            })
            .sqrt()
        })
        .collect();
    (theta, res)
}

/// Chebyshev-filtered subspace iteration. Each sweep damps the spectrum
/// above the largest current Ritz value (an upper bound on the eigenvalue of
/// the same index) and amplifies everything below it, followed by a
/// Rayleigh–Ritz step with the original operator.
fn filtered_subspace_iteration<O: SymmetricOperator>(
    op: &O,
    cfg: &SolverConfig,
    lower: f64,
    upper: f64,
) -> Result<RawEigen> {
    let n = op.size();
    let k = cfg.k;
    let s = (k + cfg.buffer.max(1)).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x: Vec<Vec<f64>> = (0..s)
        .map(|_| (0..n).map(|_| rng.gen::<f64>() - 0.5).collect())
        .collect();
    orthonormalize(&mut x, &mut rng);
    let mut ax = apply_all(op, &x);
    let mut matvecs = s;
    let (mut theta, mut res) = rayleigh_ritz(&mut x, &mut ax);
    let mut iterations = 0;
    loop {
        let converged = (0..k).all(|j| res[j] <= cfg.tol * theta[j].abs().max(1.0));
        if converged {
            x.truncate(k);
            return Ok(finish(
                theta[..k].to_vec(),
                x,
                res[..k].to_vec(),
                iterations,
                matvecs,
            ));
        }
        if iterations >= cfg.max_iter {
            let worst = res[..k].iter().copied().fold(0.0, f64::max);
            return Err(NotConverged {
                iterations,
                values: theta[..k].to_vec(),
                residuals: res[..k].to_vec(),
                worst_residual: worst,
            }
            .into());
        }
        let cut = theta[s - 1];
        let lowest = theta[0];
        let center = 0.5 * (upper + cut);
        let half_width = 0.5 * (upper - cut);
        if !(half_width > 0.0) {
            return BlockLanczos::new(op, cfg)?.run();
        }
        let ratio = (upper - cut) / (cut - lowest).max(1e-12 * upper);
        let limit =
            MAX_AMPLIFICATION_ACOSH / ((center - lower) / half_width).max(1.0 + 1e-15).acosh();
        let degree = ((3.0 * ratio.sqrt()).ceil() as usize)
            .min(limit.floor() as usize)
            .clamp(2, MAX_FILTER_DEGREE);
        let filter = ChebyshevFilter {
            op,
            degree,
            center,
            half_width,
        };
        let mut y = apply_all(&filter, &x);
        matvecs += s * degree;
        orthonormalize(&mut y, &mut rng);
        x = y;
        ax = apply_all(op, &x);
        matvecs += s;
        (theta, res) = rayleigh_ritz(&mut x, &mut ax);
        iterations += 1;
    }
}

fn apply_all<O: SymmetricOperator>(op: &O, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    x.iter()
        .map(|v| {
            let mut out = vec![0.0; v.len()];
            op.apply(v, &mut out);
            out
        })
        .collect()
}

fn dense_eigenpairs<O: SymmetricOperator>(op: &O, cfg: &SolverConfig) -> Result<RawEigen> {
    let n = op.size();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        e[j] = 0.0;
        for i in 0..n {
            a[(i, j)] = col[i];
        }
    }
    let a = (&a + a.transpose()) * 0.5;
    let (values, vecs) = sorted_eigen(a);
    let mut out_vals = Vec::with_capacity(cfg.k);
    let mut out_vecs = Vec::with_capacity(cfg.k);
    let mut residuals = Vec::with_capacity(cfg.k);
    let mut ax = vec![0.0; n];
    for j in 0..cfg.k {
        let mut v: Vec<f64> = vecs.column(j).iter().copied().collect();
        let nv = par::norm(&v);
        par::scale(&mut v, 1.0 / nv);
        residuals.push(residual_norm(op, &v, values[j], &mut ax));
        out_vals.push(values[j]);
        out_vecs.push(v);
    }
    Ok(finish(out_vals, out_vecs, residuals, 0, n + cfg.k))
}

struct BlockLanczos<'a, O: SymmetricOperator> {
    op: &'a O,
    cfg: &'a SolverConfig,
    n: usize,
    b: usize,
    nev: usize,
    m_max: usize,
    rng: ChaCha8Rng,
    basis: Vec<Vec<f64>>,
    h: DMatrix<f64>,
    p: usize,
    iterations: usize,
    matvecs: usize,
}

impl<'a, O: SymmetricOperator> BlockLanczos<'a, O> {
    fn new(op: &'a O, cfg: &'a SolverConfig) -> Result<Self> {
        let n = op.size();
        let b = cfg.effective_block().min(n);
        let nev = (cfg.k + cfg.buffer).min(n / 2).max(cfg.k);
        let memory_cap = (BASIS_MEMORY_BYTES / (8 * n)).max(3 * b + nev);
        let wanted = if cfg.max_basis > 0 {
            cfg.max_basis
        } else {
            (2 * nev + 2 * b).max(nev + 40)
        };
        let m_max = wanted.min(memory_cap).max(nev + 3 * b).min(n - b);
        let m_max = m_max - m_max % b;
        if m_max < nev + 2 * b {
            return Err(Error::Precondition(format!(
                "operator of size {n} too small for block Lanczos with block {b}"
            )));
        }
        Ok(BlockLanczos {
            op,
            cfg,
            n,
            b,
            nev,
            m_max,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            basis: Vec::with_capacity(m_max + b),
            h: DMatrix::zeros(m_max + b, m_max + b),
            p: 0,
            iterations: 0,
            matvecs: 0,
        })
    }

    fn random_vector(&mut self) -> Vec<f64> {
        (0..self.n).map(|_| self.rng.gen::<f64>() - 0.5).collect()
    }

    /// Two passes of classical Gram–Schmidt of `w` against `basis[..upto]`
    /// and the extra vectors `fresh`.
    fn orthogonalize_one(&self, w: &mut [f64], upto: usize, fresh: &[Vec<f64>]) {
        for _ in 0..2 {
            let c = par::multi_dot(&self.basis[..upto], w);
            par::subtract_combination(w, &self.basis[..upto], &c);
            for q in fresh {
                let c = par::dot(q, w);
                par::axpy(w, -c, q);
            }
        }
    }

    /// A random unit vector orthogonal to the basis and `fresh`.
    fn random_orthogonal(&mut self, upto: usize, fresh: &[Vec<f64>]) -> Vec<f64> {
        loop {
            let mut w = self.random_vector();
            let before = par::norm(&w);
            self.orthogonalize_one(&mut w, upto, fresh);
            let nw = par::norm(&w);
            if nw > 1e-6 * before {
                par::scale(&mut w, 1.0 / nw);
                return w;
            }
        }
    }

    /// Orthonormalises a block against the current basis and within itself.
    /// Returns the new vectors and the upper-triangular coefficient block
    /// `r[i][j]` with `w_j = Σ_i q_i r[i][j]` (rank-deficient columns get a
    /// random replacement and a zero diagonal).
    fn qr_block(
        &mut self,
        mut ws: Vec<Vec<f64>>,
        scales: &[f64],
    ) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let b = ws.len();
        let upto = self.basis.len();
        let mut r = vec![vec![0.0; b]; b];
        let mut qs: Vec<Vec<f64>> = Vec::with_capacity(b);
        for (j, mut w) in ws.drain(..).enumerate() {
            let start = par::norm(&w);
            for _ in 0..2 {
                for (i, q) in qs.iter().enumerate() {
                    let c = par::dot(q, &w);
                    par::axpy(&mut w, -c, q);
                    r[i][j] += c;
                }
            }
            let mut nw = par::norm(&w);
            if nw < 0.1 * start && nw > DEFLATION_TOL * scales[j] {
                // Heavy cancellation: restore orthogonality to the basis.
                // The basis part of the correction is dropped from the
                // relation, which only perturbs it at rounding level.
                self.orthogonalize_one(&mut w, upto, &[]);
                for _ in 0..2 {
                    for (i, q) in qs.iter().enumerate() {
                        let c = par::dot(q, &w);
                        par::axpy(&mut w, -c, q);
                        r[i][j] += c;
                    }
                }
                nw = par::norm(&w);
            }
            if nw > DEFLATION_TOL * scales[j] {
                r[j][j] = nw;
                par::scale(&mut w, 1.0 / nw);
                qs.push(w);
            } else {
                let q = self.random_orthogonal(upto, &qs);
                qs.push(q);
            }
        }
        (qs, r)
    }

    fn start(&mut self) {
        let ws: Vec<Vec<f64>> = (0..self.b).map(|_| self.random_vector()).collect();
        let scales: Vec<f64> = ws.iter().map(|w| par::norm(w)).collect();
        let (qs, _) = self.qr_block(ws, &scales);
        self.basis = qs;
        self.p = 0;
    }

    /// One block step: extends the basis by the image of its last block.
    fn expand(&mut self) {
        let (p, b) = (self.p, self.b);
        let mut ws: Vec<Vec<f64>> = Vec::with_capacity(b);
        for j in 0..b {
            let mut w = vec![0.0; self.n];
            self.op.apply(&self.basis[p + j], &mut w);
            ws.push(w);
        }
        self.matvecs += b;
        let scales: Vec<f64> = ws.iter().map(|w| par::norm(w)).collect();
        for _ in 0..2 {
            let c = par::block_dot(&self.basis, &ws);
            par::block_subtract(&mut ws, &self.basis, &c);
            for (j, cj) in c.iter().enumerate() {
                for (i, &x) in cj.iter().enumerate() {
                    self.h[(i, p + j)] += x;
                }
            }
        }
        let (qs, r) = self.qr_block(ws, &scales);
        for j in 0..b {
            for i in 0..=j {
                self.h[(p + b + i, p + j)] = r[i][j];
            }
        }
        self.basis.extend(qs);
        self.p += b;
        self.iterations += 1;
    }

    /// Ritz values, coefficient vectors and residual estimates for the
    /// current basis.
    fn ritz(&self) -> (Vec<f64>, DMatrix<f64>, Vec<f64>) {
        let p = self.p;
        let t = self.h.view((0, 0), (p, p)).into_owned();
        let t = (&t + t.transpose()) * 0.5;
        let (theta, y) = sorted_eigen(t);
        let bottom = self.h.view((p, 0), (self.b, p));
        let s = bottom * &y;
        let res = (0..p).map(|j| s.column(j).norm()).collect();
        (theta, y, res)
    }

    fn restart(&mut self, theta: &[f64], y: &DMatrix<f64>) {
        let (p, b) = (self.p, self.b);
        let keep = (self.nev + (self.m_max - self.nev) / 2)
            .min(p - b)
            .max(self.nev);
        let coeffs: Vec<Vec<f64>> = (0..keep)
            .map(|j| y.column(j).iter().copied().collect())
            .collect();
        par::transform_in_place(&mut self.basis, &coeffs);
        self.basis.drain(keep..p);
        let y_keep = y.columns(0, keep).into_owned();
        let s = self.h.view((p, 0), (b, p)) * y_keep;
        self.h.fill(0.0);
        for j in 0..keep {
            self.h[(j, j)] = theta[j];
            for i in 0..b {
                self.h[(keep + i, j)] = s[(i, j)];
            }
        }
        self.p = keep;
    }

    fn converged_count(&self, theta: &[f64], res: &[f64], tol: f64) -> usize {
        (0..self.cfg.k)
            .take_while(|&j| res[j] <= tol * theta[j].abs().max(1.0))
            .count()
    }

    /// Forms the wanted Ritz vectors and verifies their residuals directly.
    fn verify(&self, y: &DMatrix<f64>) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>, bool) {
        let k = self.cfg.k;
        let coeffs: Vec<Vec<f64>> = (0..k)
            .map(|j| y.column(j).iter().copied().collect())
            .collect();
        let mut vectors = par::combine(&self.basis[..self.p], &coeffs);
        let mut values = Vec::with_capacity(k);
        let mut residuals = Vec::with_capacity(k);
        let mut ax = vec![0.0; self.n];
        let mut ok = true;
        for v in vectors.iter_mut() {
            let nv = par::norm(v);
            par::scale(v, 1.0 / nv);
            self.op.apply(v, &mut ax);
            let value = par::dot(v, &ax);
            par::axpy(&mut ax, -value, v);
            let r = par::norm(&ax);
            ok &= r <= self.cfg.tol * value.abs().max(1.0);
            values.push(value);
            residuals.push(r);
        }
        (values, vectors, residuals, ok)
    }

    fn run(mut self) -> Result<RawEigen> {
        self.start();
        let mut tol = 0.5 * self.cfg.tol;
        let mut y_last;
        loop {
            self.expand();
            if self.p < self.nev {
                continue;
            }
            let (theta, y, res) = self.ritz();
            if self.converged_count(&theta, &res, tol) == self.cfg.k {
                let (values, vectors, residuals, ok) = self.verify(&y);
                self.matvecs += self.cfg.k;
                if ok {
                    return Ok(finish(
                        values,
                        vectors,
                        residuals,
                        self.iterations,
                        self.matvecs,
                    ));
                }
                tol *= 0.1;
            }
            y_last = y.clone();
            if self.iterations >= self.cfg.max_iter {
                break;
            }
            if self.p + self.b > self.m_max {
                self.restart(&theta, &y);
            }
        }
        let (values, _, residuals, _) = self.verify(&y_last);
        let worst = residuals.iter().copied().fold(0.0, f64::max);
        Err(NotConverged {
            iterations: self.iterations,
            values,
            residuals,
            worst_residual: worst,
        }
        .into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Diagonal operator with prescribed entries.
    struct Diagonal(Vec<f64>);

    impl SymmetricOperator for Diagonal {
        fn size(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            for ((yi, xi), d) in y.iter_mut().zip(x).zip(&self.0) {
                *yi = d * xi;
            }
        }
    }

    /// 1-D Dirichlet Laplacian of size n (eigenvalues 2 - 2cos(jπ/(n+1))).
    struct Path(usize);

    impl SymmetricOperator for Path {
        fn size(&self) -> usize {
            self.0
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            let n = self.0;
            for i in 0..n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                y[i] = 2.0 * x[i] - l - r;
            }
        }
    }

    fn krylov(k: usize) -> SolverConfig {
        SolverConfig {
            dense_threshold: 0,
            ..SolverConfig::new(k)
        }
    }

    #[test]
    fn path_laplacian_matches_closed_form() {
        let n = 400;
        let op = Path(n);
        for cfg in [
            krylov(5),
            SolverConfig {
                dense_threshold: 1000,
                ..SolverConfig::new(5)
            },
        ] {
            let r = lowest_eigenpairs(&op, &cfg).unwrap();
            for (j, v) in r.values.iter().enumerate() {
                let exact =
                    2.0 - 2.0 * ((j + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
                assert!((v - exact).abs() < 1e-9, "{j}: {v} vs {exact}");
            }
            assert!(r.residuals.iter().all(|&x| x <= 1e-8));
        }
    }

    #[test]
    fn degenerate_cluster_is_resolved() {
        let mut d: Vec<f64> = (0..2000).map(|i| 10.0 + i as f64 * 0.01).collect();
        d[100] = 1.0;
        d[700] = 2.0;
        d[701] = 2.0;
        d[1500] = 2.0;
        let r = lowest_eigenpairs(&Diagonal(d), &krylov(4)).unwrap();
        let expect = [1.0, 2.0, 2.0, 2.0];
        for (v, e) in r.values.iter().zip(expect) {
            assert!((v - e).abs() < 1e-9);
        }
        for i in 0..4 {
            for j in 0..i {
                assert!(par::dot(&r.vectors[i], &r.vectors[j]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn multiplicity_above_block_size() {
        let mut d: Vec<f64> = (0..1500).map(|i| 5.0 + i as f64 * 0.003).collect();
        for x in d.iter_mut().take(300).step_by(50) {
            *x = 1.0;
        }
        let cfg = SolverConfig {
            block_size: 2,
            ..krylov(6)
        };
        let r = lowest_eigenpairs(&Diagonal(d), &cfg).unwrap();
        assert!(
            r.values.iter().all(|v| (v - 1.0).abs() < 1e-9),
            "{:?}",
            r.values
        );
    }

    #[test]
    fn runs_are_bit_identical() {
        let op = Path(600);
        let a = lowest_eigenpairs(&op, &krylov(3)).unwrap();
        let b = lowest_eigenpairs(&op, &krylov(3)).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
    }

    #[test]
    fn exhausted_budget_reports_best_residuals() {
        let cfg = SolverConfig {
            max_iter: 3,
            ..krylov(2)
        };
        match lowest_eigenpairs(&Path(5000), &cfg) {
            Err(Error::NotConverged(nc)) => {
                assert_eq!(nc.iterations, 3);
                assert_eq!(nc.values.len(), 2);
                assert!(nc.worst_residual > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(lowest_eigenpairs(&Path(10), &SolverConfig::new(0)).is_err());
        assert!(lowest_eigenpairs(&Path(10), &SolverConfig::new(11)).is_err());
        let bad_tol = SolverConfig {
            tol: 0.0,
            ..SolverConfig::new(1)
        };
        assert!(lowest_eigenpairs(&Path(10), &bad_tol).is_err());
    }

    /// 1-D oscillator stencil, a stiff spectrum that forces many restarts.
    struct Oscillator1d {
        potential: Vec<f64>,
        h: f64,
    }

    impl SymmetricOperator for Oscillator1d {
        fn size(&self) -> usize {
            self.potential.len()
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            let n = x.len();
            let ih = 1.0 / (self.h * self.h);
            for i in 0..n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                y[i] = (2.0 * ih + self.potential[i]) * x[i] - ih * (l + r);
            }
        }
    }

    fn relation_error<O: SymmetricOperator>(s: &BlockLanczos<'_, O>) -> f64 {
        let mut worst: f64 = 0.0;
        let mut av = vec![0.0; s.n];
        for j in 0..s.p {
            s.op.apply(&s.basis[j], &mut av);
            for i in 0..s.p + s.b {
                par::axpy(&mut av, -s.h[(i, j)], &s.basis[i]);
            }
            worst = worst.max(par::norm(&av));
        }
        worst
    }

    #[test]
    fn krylov_relation_survives_restarts() {
        let n = 2000;
        let h = 24.0 / n as f64;
        let op = Oscillator1d {
            potential: (0..n)
                .map(|i| (-12.0 + (i as f64 + 0.5) * h).powi(2))
                .collect(),
            h,
        };
        let cfg = SolverConfig {
            block_size: 4,
            max_basis: 120,
            ..krylov(3)
        };
        let mut s = BlockLanczos::new(&op, &cfg).unwrap();
        s.start();
        let mut restarts = 0;
        while restarts < 4 {
            s.expand();
            if s.p + s.b > s.m_max {
                let (theta, y, _) = s.ritz();
                s.restart(&theta, &y);
                restarts += 1;
                assert!(relation_error(&s) < 1e-9);
            }
        }
        assert!(relation_error(&s) < 1e-9);
        for i in 0..s.basis.len() {
            for j in 0..i {
                assert!(par::dot(&s.basis[i], &s.basis[j]).abs() < 1e-12);
            }
        }
    }

    /// Exposes spectral bounds so the filtered path is taken.
    struct Bounded<T>(T, f64, f64);

    impl<T: SymmetricOperator> SymmetricOperator for Bounded<T> {
        fn size(&self) -> usize {
            self.0.size()
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            self.0.apply(x, y)
        }
        fn spectral_bounds(&self) -> Option<(f64, f64)> {
            Some((self.1, self.2))
        }
    }

    #[test]
    fn filtered_iteration_matches_closed_form_and_lanczos() {
        let n = 1500;
        let op = Bounded(Path(n), 0.0, 4.0);
        let cfg = SolverConfig::new(4);
        let f = lowest_eigenpairs(&op, &cfg).unwrap();
        let l = lowest_eigenpairs(&Path(n), &krylov(4)).unwrap();
        for j in 0..4 {
            let exact = 2.0 - 2.0 * ((j + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((f.values[j] - exact).abs() < 1e-10);
            assert!((f.values[j] - l.values[j]).abs() < 1e-10);
            assert!(par::dot(&f.vectors[j], &l.vectors[j]).abs() > 1.0 - 1e-6);
        }
    }

    #[test]
    fn filtered_iteration_resolves_degeneracy_and_is_deterministic() {
        let mut d: Vec<f64> = (0..3000).map(|i| 8.0 + i as f64 * 0.01).collect();
        d[10] = 1.0;
        d[2000] = 3.0;
        d[2001] = 3.0;
        d[77] = 3.0;
        let op = Bounded(Diagonal(d), 0.0, 40.0);
        let a = lowest_eigenpairs(&op, &SolverConfig::new(4)).unwrap();
        let b = lowest_eigenpairs(&op, &SolverConfig::new(4)).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
        for (v, e) in a.values.iter().zip([1.0, 3.0, 3.0, 3.0]) {
            assert!((v - e).abs() < 1e-10);
        }
    }

    #[test]
    fn filtered_iteration_reports_non_convergence() {
        let cfg = SolverConfig {
            max_iter: 1,
            tol: 1e-14,
            ..SolverConfig::new(2)
        };
        match lowest_eigenpairs(&Bounded(Path(4000), 0.0, 4.0), &cfg) {
            Err(Error::NotConverged(nc)) => assert_eq!(nc.values.len(), 2),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn sign_convention_makes_first_significant_entry_positive() {
        let mut v = vec![0.0, -1e-12, -0.5, 0.3];
        canonical_sign(&mut v);
        assert_eq!(v[2], 0.5);
    }
}
