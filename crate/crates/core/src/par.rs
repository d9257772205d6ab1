//! Data-parallel kernels with a sequential fallback.
//!
//! Every reduction is split into fixed-size chunks whose partial results are
//! combined in index order, so results are bit-identical whether or not the
//! `parallel` feature is enabled and whatever the thread count.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Number of entries per reduction chunk.
pub const CHUNK: usize = 1 << 12;

fn chunk_ranges(len: usize) -> impl Iterator<Item = Range<usize>> + Clone {
    (0..len.div_ceil(CHUNK)).map(move |c| c * CHUNK..((c + 1) * CHUNK).min(len))
}

/// Sums `f(range)` over consecutive chunks of `0..len` in a fixed order.
pub fn chunked_sum<F>(len: usize, f: F) -> f64
where
    F: Fn(Range<usize>) -> f64 + Sync + Send,
{
    let ranges: Vec<Range<usize>> = chunk_ranges(len).collect();
    #[cfg(feature = "parallel")]
    let partials: Vec<f64> = ranges.into_par_iter().map(f).collect();
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<f64> = ranges.into_iter().map(f).collect();
    partials.iter().sum()
}

/// Component-wise chunked sums of a vector-valued function.
///
/// `f` receives a chunk range and an accumulator of length `width`, which it
/// must add into. Partial accumulators are combined in chunk order.
pub fn chunked_sum_vec<F>(len: usize, width: usize, f: F) -> Vec<f64>
where
    F: Fn(Range<usize>, &mut [f64]) + Sync + Send,
{
    let ranges: Vec<Range<usize>> = chunk_ranges(len).collect();
    let run = |r: Range<usize>| {
        let mut acc = vec![0.0; width];
        f(r, &mut acc);
        acc
    };
    #[cfg(feature = "parallel")]
    let partials: Vec<Vec<f64>> = ranges.into_par_iter().map(run).collect();
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<Vec<f64>> = ranges.into_iter().map(run).collect();
    let mut total = vec![0.0; width];
    for p in &partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}

/// Maximum of `f(range)` over chunks; `f` must return a value for every chunk.
pub fn chunked_max<F>(len: usize, f: F) -> f64
where
    F: Fn(Range<usize>) -> f64 + Sync + Send,
{
    let ranges: Vec<Range<usize>> = chunk_ranges(len).collect();
    #[cfg(feature = "parallel")]
    let partials: Vec<f64> = ranges.into_par_iter().map(f).collect();
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<f64> = ranges.into_iter().map(f).collect();
    partials.into_iter().fold(0.0, f64::max)
}

/// Runs `f(start_index, chunk)` over mutable chunks of `out` of length `chunk`.
pub fn for_each_chunk_mut<F>(out: &mut [f64], chunk: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    out.par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(c, s)| f(c * chunk, s));
    #[cfg(not(feature = "parallel"))]
    out.chunks_mut(chunk)
        .enumerate()
        .for_each(|(c, s)| f(c * chunk, s));
}

/// Order-preserving map over `0..len`.
pub fn map_indices<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Order-preserving mutable visit of a slice of items.
pub fn for_each_mut<T, F>(items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    items.par_iter_mut().enumerate().for_each(|(i, t)| f(i, t));
    #[cfg(not(feature = "parallel"))]
    items.iter_mut().enumerate().for_each(|(i, t)| f(i, t));
}

/// Dot product of two equal-length slices with eight independent
/// accumulators combined in a fixed tree, so the compiler can vectorise it
/// without changing the result between builds.
#[inline]
pub fn dot_kernel(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let split = n - n % 8;
    let mut acc = [0.0f64; 8];
    for (x, y) in a[..split].chunks_exact(8).zip(b[..split].chunks_exact(8)) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for (x, y) in a[split..n].iter().zip(&b[split..n]) {
        s += x * y;
    }
    s
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    chunked_sum(a.len(), |r| dot_kernel(&a[r.clone()], &b[r]))
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn scale(a: &mut [f64], s: f64) {
    for_each_chunk_mut(a, CHUNK, |_, c| c.iter_mut().for_each(|x| *x *= s));
}

/// `y += s * x`
pub fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    for_each_chunk_mut(y, CHUNK, |start, c| {
        for (yi, xi) in c.iter_mut().zip(&x[start..]) {
            *yi += s * xi;
        }
    });
}

/// Inner products of `w` with every vector of `basis`, in one pass over `w`.
pub fn multi_dot(basis: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    chunked_sum_vec(w.len(), basis.len(), |r, acc| {
        let wc = &w[r.clone()];
        for (a, v) in acc.iter_mut().zip(basis) {
            *a += dot_kernel(&v[r.clone()], wc);
        }
    })
}

/// `w -= Σ coeffs[i] * basis[i]`
pub fn subtract_combination(w: &mut [f64], basis: &[Vec<f64>], coeffs: &[f64]) {
    for_each_chunk_mut(w, CHUNK, |start, c| {
        let end = start + c.len();
        for (v, &s) in basis.iter().zip(coeffs) {
            if s != 0.0 {
                for (wi, vi) in c.iter_mut().zip(&v[start..end]) {
                    *wi -= s * vi;
                }
            }
        }
    });
}

/// Output vectors `out[j] = Σ_i coeffs[(i, j)] * basis[i]`, with `coeffs`
/// given column-major as `coeffs[j][i]`.
pub fn combine(basis: &[Vec<f64>], coeffs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = basis.first().map_or(0, Vec::len);
    let mut out: Vec<Vec<f64>> = coeffs.iter().map(|_| vec![0.0; n]).collect();
    for_each_mut(&mut out, |j, o| {
        for (v, &s) in basis.iter().zip(&coeffs[j]) {
            if s != 0.0 {
                for (oi, vi) in o.iter_mut().zip(v) {
                    *oi += s * vi;
                }
            }
        }
    });
    out
}

/// Splits every vector into [`CHUNK`]-sized pieces and regroups them so that
/// entry `c` holds the `c`-th piece of each vector.
fn chunk_slices_mut(vecs: &mut [Vec<f64>]) -> Vec<Vec<&mut [f64]>> {
    let len = vecs.first().map_or(0, Vec::len);
    let mut out: Vec<Vec<&mut [f64]>> = (0..len.div_ceil(CHUNK))
        .map(|_| Vec::with_capacity(vecs.len()))
        .collect();
    for v in vecs.iter_mut() {
        debug_assert_eq!(v.len(), len);
        for (c, s) in v.chunks_mut(CHUNK).enumerate() {
            out[c].push(s);
        }
    }
    out
}

fn for_each_chunk_group<F>(groups: &mut [Vec<&mut [f64]>], f: F)
where
    F: Fn(usize, &mut Vec<&mut [f64]>) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    groups
        .par_iter_mut()
        .enumerate()
        .for_each(|(c, g)| f(c * CHUNK, g));
    #[cfg(not(feature = "parallel"))]
    groups
        .iter_mut()
        .enumerate()
        .for_each(|(c, g)| f(c * CHUNK, g));
}

/// Inner products `out[j][i] = ⟨basis[i], ws[j]⟩`, reading the basis once.
pub fn block_dot(basis: &[Vec<f64>], ws: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let p = basis.len();
    let len = ws.first().map_or(0, Vec::len);
    if p == 0 {
        return vec![Vec::new(); ws.len()];
    }
    let flat = chunked_sum_vec(len, p * ws.len(), |r, acc| {
        for (i, v) in basis.iter().enumerate() {
            let vc = &v[r.clone()];
            for (j, w) in ws.iter().enumerate() {
                acc[j * p + i] += dot_kernel(vc, &w[r.clone()]);
            }
        }
    });
    flat.chunks(p).map(<[f64]>::to_vec).collect()
}

/// `ws[j] -= Σ_i coeffs[j][i] * basis[i]` for every `j`.
pub fn block_subtract(ws: &mut [Vec<f64>], basis: &[Vec<f64>], coeffs: &[Vec<f64>]) {
    let mut groups = chunk_slices_mut(ws);
    for_each_chunk_group(&mut groups, |start, g| {
        for (j, w) in g.iter_mut().enumerate() {
            let end = start + w.len();
            for (v, &s) in basis.iter().zip(&coeffs[j]) {
                if s != 0.0 {
                    for (wi, vi) in w.iter_mut().zip(&v[start..end]) {
                        *wi -= s * vi;
                    }
                }
            }
        }
    });
}

/// Replaces `basis[..coeffs.len()]` by the combinations
/// `Σ_i coeffs[j][i] * basis[i]` over the first `coeffs[j].len()` vectors,
/// working chunk by chunk so no full-size temporaries are allocated.
pub fn transform_in_place(basis: &mut [Vec<f64>], coeffs: &[Vec<f64>]) {
    let p = coeffs.first().map_or(0, Vec::len);
    assert!(coeffs.len() <= p && p <= basis.len());
    let mut groups = chunk_slices_mut(&mut basis[..p]);
    for_each_chunk_group(&mut groups, |_, g| {
        let len = g[0].len();
        let mut tmp = vec![0.0; coeffs.len() * len];
        for (j, c) in coeffs.iter().enumerate() {
            let t = &mut tmp[j * len..(j + 1) * len];
            for (v, &s) in g.iter().zip(c) {
                if s != 0.0 {
                    for (ti, vi) in t.iter_mut().zip(v.iter()) {
                        *ti += s * vi;
                    }
                }
            }
        }
        for (j, v) in g.iter_mut().take(coeffs.len()).enumerate() {
            v.copy_from_slice(&tmp[j * len..(j + 1) * len]);
        }
    });
}

/// Configures the global thread pool from `WELLSPEC_THREADS`, if set.
///
/// Returns the thread count in use (always 1 without the `parallel` feature).
pub fn init_threads_from_env() -> usize {
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = std::env::var("WELLSPEC_THREADS")
            .ok()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
        {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_reductions_match_naive_sums() {
        let n = 3 * CHUNK + 17;
        let a: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.11).cos()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-10);
        let md = multi_dot(&[a.clone(), b.clone()], &b);
        assert_eq!(md[0], dot(&a, &b));
        assert_eq!(md[1], dot(&b, &b));
    }

    #[test]
    fn combination_and_subtraction_are_consistent() {
        let n = CHUNK + 5;
        let basis: Vec<Vec<f64>> = (0..3)
            .map(|k| (0..n).map(|i| ((i + k) as f64).sqrt()).collect())
            .collect();
        let coeffs = vec![vec![1.0, -2.0, 0.5]];
        let mut w = combine(&basis, &coeffs).pop().unwrap();
        subtract_combination(&mut w, &basis, &coeffs[0]);
        assert!(w.iter().all(|x| x.abs() < 1e-9));
    }

    #[test]
    fn block_kernels_match_single_vector_versions() {
        let n = 2 * CHUNK + 301;
        let basis: Vec<Vec<f64>> = (0..4)
            .map(|k| {
                (0..n)
                    .map(|i| ((i * (k + 1)) as f64 * 0.013).sin())
                    .collect()
            })
            .collect();
        let ws: Vec<Vec<f64>> = (0..3)
            .map(|k| (0..n).map(|i| ((i + 7 * k) as f64 * 0.029).cos()).collect())
            .collect();
        let bd = block_dot(&basis, &ws);
        for (j, w) in ws.iter().enumerate() {
            assert_eq!(bd[j], multi_dot(&basis, w));
        }
        let mut a = ws.clone();
        block_subtract(&mut a, &basis, &bd);
        for (j, w) in ws.iter().enumerate() {
            let mut b = w.clone();
            subtract_combination(&mut b, &basis, &bd[j]);
            assert_eq!(a[j], b);
        }
    }

    #[test]
    fn in_place_transform_matches_combine() {
        let n = CHUNK + 99;
        let mut basis: Vec<Vec<f64>> = (0..5)
            .map(|k| (0..n).map(|i| ((i + k * k) as f64 * 0.7).sin()).collect())
            .collect();
        let coeffs = vec![vec![0.5, 1.0, -1.0, 0.0], vec![0.0, 2.0, 0.25, 1.5]];
        let expected = combine(&basis[..4], &coeffs);
        let tail = basis[4].clone();
        transform_in_place(&mut basis, &coeffs);
        for j in 0..2 {
            for (x, y) in basis[j].iter().zip(&expected[j]) {
                assert!((x - y).abs() < 1e-13);
            }
        }
        assert_eq!(basis[4], tail);
    }

    #[test]
    fn axpy_and_scale() {
        let mut y = vec![1.0; 10];
        axpy(&mut y, 2.0, &[3.0; 10]);
        scale(&mut y, 0.5);
        assert!(y.iter().all(|&v| v == 3.5));
        assert_eq!(chunked_max(4, |_| 2.0), 2.0);
    }
}
