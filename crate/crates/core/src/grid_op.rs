//! Uniform cell-centred box grids, the matrix-free discretisation of
//! `-Δ + V` with Dirichlet ghost zeros, and the discrete functionals used by
//! the bound checks.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oscillator::nth_eigenvalue;
use crate::par;
use crate::wells::PotentialWell;

/// Smallest admissible number of cells per axis.
pub const MIN_CELLS: usize = 16;

/// Tolerance on the discrete norm of a field flagged as normalised.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// The box `(-L, L)^N` split into `M` cells per axis, nodes at cell centres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxGrid {
    pub dim: usize,
    pub half_width: f64,
    pub cells: usize,
    pub spacing: f64,
}

impl BoxGrid {
    pub fn new(dim: usize, half_width: f64, cells: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Config(format!(
                "box half-width must be positive, got {half_width}"
            )));
        }
        if cells < MIN_CELLS {
            return Err(Error::Config(format!(
                "need at least {MIN_CELLS} cells per axis, got {cells}"
            )));
        }
        Ok(BoxGrid {
            dim,
            half_width,
            cells,
            spacing: 2.0 * half_width / cells as f64,
        })
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.cells.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `h^N`, the quadrature weight of every node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Coordinate of node `i` along any axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing
    }

    /// Stride of `axis` in the row-major layout (last axis fastest).
    pub fn stride(&self, axis: usize) -> usize {
        self.cells.pow((self.dim - 1 - axis) as u32)
    }

    /// Per-axis indices of a flat node index.
    #[inline]
    pub fn unravel(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for axis in (0..self.dim).rev() {
            out[axis] = idx % self.cells;
            idx /= self.cells;
        }
        out
    }

    pub fn ravel(&self, ix: &[usize]) -> usize {
        ix.iter().fold(0, |acc, &i| acc * self.cells + i)
    }

    /// Coordinates of node `idx`; only the first `dim` entries are meaningful.
    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let ix = self.unravel(idx);
        let mut p = [0.0; 3];
        for axis in 0..self.dim {
            p[axis] = self.coord(ix[axis]);
        }
        p
    }

    #[inline]
    pub fn radius_sq(&self, idx: usize) -> f64 {
        let p = self.point(idx);
        p[..self.dim].iter().map(|x| x * x).sum()
    }

    /// All node coordinates as owned points, in layout order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|i| self.point(i)[..self.dim].to_vec())
            .collect()
    }
}

/// Real values sampled at the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    pub grid: BoxGrid,
    pub values: Vec<f64>,
    normalized: bool,
}

impl DiscreteField {
    pub fn new(grid: BoxGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("field has non-finite values".into()));
        }
        Ok(DiscreteField {
            grid,
            values,
            normalized: false,
        })
    }

    pub fn zeros(grid: BoxGrid) -> Self {
        DiscreteField {
            grid,
            values: vec![0.0; grid.len()],
            normalized: false,
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn<F>(grid: BoxGrid, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Sync + Send,
    {
        let values = par::map_indices(grid.len(), |i| {
            let p = grid.point(i);
            f(&p[..grid.dim])
        });
        DiscreteField {
            grid,
            values,
            normalized: false,
        }
    }

    /// Discrete inner product `Σ u v h^N`.
    pub fn inner(&self, other: &DiscreteField) -> f64 {
        par::dot(&self.values, &other.values) * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        (par::dot(&self.values, &self.values) * self.grid.cell_volume()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        let v = &self.values;
        par::chunked_max(v.len(), |r| {
            v[r].iter().fold(0.0, |m, x| f64::max(m, x.abs()))
        })
    }

    /// Rescales to unit discrete L² norm and flags the field as normalised.
    pub fn normalize(&mut self) -> Result<()> {
        let n = self.l2_norm();
        if n == 0.0 {
            return Err(Error::Precondition("cannot normalise a zero field".into()));
        }
        par::scale(&mut self.values, 1.0 / n);
        self.normalized = true;
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    /// True when flagged normalised and the discrete norm is one to within
    /// [`NORMALIZATION_TOL`].
    pub fn is_normalized(&self) -> bool {
        self.normalized && (self.l2_norm() - 1.0).abs() <= NORMALIZATION_TOL
    }

    /// Checks the normalisation numerically regardless of the flag.
    pub fn has_unit_norm(&self) -> bool {
        (self.l2_norm() - 1.0).abs() <= NORMALIZATION_TOL
    }

    pub(crate) fn mark_normalized(&mut self) {
        self.normalized = true;
    }

    pub fn scaled(&self, c: f64) -> DiscreteField {
        let mut values = self.values.clone();
        par::scale(&mut values, c);
        DiscreteField {
            grid: self.grid,
            values,
            normalized: false,
        }
    }

    /// Writes `x1,..,xN,value` rows for every node.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.grid.dim).map(|a| format!("x{a}")).collect();
        writeln!(w, "{},value", header.join(","))?;
        for (i, v) in self.values.iter().enumerate() {
            let p = self.grid.point(i);
            for x in &p[..self.grid.dim] {
                write!(w, "{x:.16e},")?;
            }
            writeln!(w, "{v:.16e}")?;
        }
        Ok(())
    }
}

/// Matrix-free `-Δ_h + V` on a box grid with homogeneous Dirichlet ghosts.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub grid: BoxGrid,
    pub well: PotentialWell,
    pub potential: Vec<f64>,
}

pub fn build_operator(well: &PotentialWell, grid: &BoxGrid) -> Result<DiscreteOperator> {
    if well.dim() != grid.dim {
        return Err(Error::DimensionMismatch {
            expected: grid.dim,
            got: well.dim(),
        });
    }
    let potential = par::map_indices(grid.len(), |i| {
        let p = grid.point(i);
        let d = well.distance_unchecked(&p[..grid.dim]);
        d * d
    });
    Ok(DiscreteOperator {
        grid: *grid,
        well: well.clone(),
        potential,
    })
}

impl DiscreteOperator {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// `out = A u` on raw node vectors.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let m = g.cells;
        let dim = g.dim;
        assert_eq!(u.len(), g.len());
        assert_eq!(out.len(), g.len());
        let inv_h2 = 1.0 / (g.spacing * g.spacing);
        let diag = 2.0 * dim as f64 * inv_h2;
        let lines_per_chunk = (par::CHUNK / m).max(1);
        let v = &self.potential;
        par::for_each_chunk_mut(out, lines_per_chunk * m, |start, chunk| {
            for (l, line) in chunk.chunks_mut(m).enumerate() {
                let base = start + l * m;
                let uline = &u[base..base + m];
                let vline = &v[base..base + m];
                for j in 0..m {
                    let left = if j > 0 { uline[j - 1] } else { 0.0 };
                    let right = if j + 1 < m { uline[j + 1] } else { 0.0 };
                    line[j] = (diag + vline[j]) * uline[j] - inv_h2 * (left + right);
                }
                // Neighbours along the slower axes are whole lines.
                let ix = g.unravel(base);
                for axis in 0..dim - 1 {
                    let stride = g.stride(axis);
                    if ix[axis] > 0 {
                        let nb = &u[base - stride..base - stride + m];
                        for (o, x) in line.iter_mut().zip(nb) {
                            *o -= inv_h2 * x;
                        }
                    }
                    if ix[axis] + 1 < m {
                        let nb = &u[base + stride..base + stride + m];
                        for (o, x) in line.iter_mut().zip(nb) {
                            *o -= inv_h2 * x;
                        }
                    }
                }
            }
        });
    }

    pub fn apply_vec(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.apply(u, &mut out);
        out
    }

    pub fn apply_field(&self, f: &DiscreteField) -> DiscreteField {
        DiscreteField {
            grid: f.grid,
            values: self.apply_vec(&f.values),
            normalized: false,
        }
    }

    /// `⟨u, Au⟩ / ⟨u, u⟩`.
    pub fn rayleigh_quotient(&self, f: &DiscreteField) -> f64 {
        let au = self.apply_vec(&f.values);
        par::dot(&f.values, &au) / par::dot(&f.values, &f.values)
    }

    /// Upper bound on the spectrum from Gershgorin discs.
    pub fn gershgorin_upper(&self) -> f64 {
        let h2 = self.grid.spacing * self.grid.spacing;
        let vmax = par::chunked_max(self.potential.len(), |r| {
            self.potential[r].iter().copied().fold(0.0, f64::max)
        });
        4.0 * self.grid.dim as f64 / h2 + vmax
    }
}

/// Discrete norms and energies of a field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteNorms {
    pub l2: f64,
    pub sup: f64,
    pub grad_energy: f64,
    pub potential_energy: Option<f64>,
}

/// Forward-difference Dirichlet energy `Σ |δv/h|² h^N`, including the edges
/// to the ghost zeros on both ends of every grid line.
pub fn grad_energy(field: &DiscreteField) -> f64 {
    let g = &field.grid;
    let m = g.cells;
    let u = &field.values;
    let lines = g.len() / m;
    let inv_h2 = 1.0 / (g.spacing * g.spacing);
    let lines_per_chunk = (par::CHUNK / m).max(1);
    let n_chunks = lines.div_ceil(lines_per_chunk);
    let total = par::chunked_sum(n_chunks, |r| {
        let mut acc = 0.0;
        for c in r {
            let first = c * lines_per_chunk;
            let last = (first + lines_per_chunk).min(lines);
            for l in first..last {
                let base = l * m;
                let line = &u[base..base + m];
                // fastest axis
                let mut prev = 0.0;
                for &x in line {
                    acc += (x - prev) * (x - prev);
                    prev = x;
                }
                acc += prev * prev;
                // slower axes: edge from this line to the previous one, plus
                // the ghost edge past the last line
                let ix = g.unravel(base);
                for axis in 0..g.dim - 1 {
                    let stride = g.stride(axis);
                    if ix[axis] > 0 {
                        let nb = &u[base - stride..base - stride + m];
                        acc += line
                            .iter()
                            .zip(nb)
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>();
                    } else {
                        acc += line.iter().map(|a| a * a).sum::<f64>();
                    }
                    if ix[axis] + 1 == m {
                        acc += line.iter().map(|a| a * a).sum::<f64>();
                    }
                }
            }
        }
        acc
    });
    total * inv_h2 * g.cell_volume()
}

/// `Σ V v² h^N`.
pub fn potential_energy(field: &DiscreteField, op: &DiscreteOperator) -> f64 {
    let u = &field.values;
    let v = &op.potential;
    par::chunked_sum(u.len(), |r| {
        u[r.clone()].iter().zip(&v[r]).map(|(a, w)| w * a * a).sum()
    }) * field.grid.cell_volume()
}

pub fn discrete_norms(field: &DiscreteField, op: Option<&DiscreteOperator>) -> DiscreteNorms {
    DiscreteNorms {
        l2: field.l2_norm(),
        sup: field.sup_norm(),
        grad_energy: grad_energy(field),
        potential_energy: op.map(|op| potential_energy(field, op)),
    }
}

/// Weighted sum `Σ w(|x|²) v² h^N` over all nodes.
fn radial_sum<F>(field: &DiscreteField, w: F) -> f64
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    let g = field.grid;
    let u = &field.values;
    par::chunked_sum(u.len(), |r| {
        r.map(|i| {
            let x = u[i];
            if x == 0.0 {
                0.0
            } else {
                w(g.radius_sq(i)) * x * x
            }
        })
        .sum()
    }) * g.cell_volume()
}

/// Tail mass `m(ρ) = Σ_{|x| ≥ ρ} v² h^N`.
pub fn tail_mass(field: &DiscreteField, rho: f64) -> f64 {
    let rho_sq = rho.max(0.0).powi(2);
    radial_sum(field, |r2| if r2 >= rho_sq { 1.0 } else { 0.0 })
}

/// Tail masses at every radius in `rhos`, in one pass over the field.
pub fn tail_masses(field: &DiscreteField, rhos: &[f64]) -> Vec<f64> {
    let g = field.grid;
    let u = &field.values;
    let thresholds: Vec<f64> = rhos.iter().map(|r| r.max(0.0).powi(2)).collect();
    let sums = par::chunked_sum_vec(u.len(), rhos.len(), |r, acc| {
        for i in r {
            let x = u[i];
            if x == 0.0 {
                continue;
            }
            let r2 = g.radius_sq(i);
            for (a, &t) in acc.iter_mut().zip(&thresholds) {
                if r2 >= t {
                    *a += x * x;
                }
            }
        }
    });
    sums.into_iter().map(|s| s * g.cell_volume()).collect()
}

/// `Σ |x|^{2k+2} v² h^N`.
pub fn weighted_moment(field: &DiscreteField, k: u32) -> f64 {
    radial_sum(field, |r2| r2.powi(k as i32 + 1))
}

/// Two-grid extrapolation and conservative discretisation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RichardsonEstimate {
    pub extrapolated: f64,
    pub eps_disc: f64,
}

pub fn richardson_estimate(coarse: f64, fine: f64, ratio: f64) -> Result<RichardsonEstimate> {
    if !(ratio > 1.0) {
        return Err(Error::Precondition(format!(
            "refinement ratio must exceed 1, got {ratio}"
        )));
    }
    Ok(RichardsonEstimate {
        extrapolated: fine + (fine - coarse) / (ratio * ratio - 1.0),
        eps_disc: (fine - coarse).abs(),
    })
}

/// The decay base `(2N + 1)/(N + 1)`.
pub fn decay_base(dim: usize) -> f64 {
    (2 * dim + 1) as f64 / (dim + 1) as f64
}

/// Smallest half-width with `2^{R₀+1} α^{-L} ≤ tail_tol`, where
/// `R₀ = √(2λ_{n_max}) + R_Σ`, clamped below by `R_Σ + 4`.
pub fn choose_box(well: &PotentialWell, dim: usize, n_max: usize, tail_tol: f64) -> f64 {
    let r = well.params().r_sigma;
    let lambda = nth_eigenvalue(dim, n_max.max(1));
    let r0 = (2.0 * lambda).sqrt() + r;
    let l = ((r0 + 1.0) * std::f64::consts::LN_2 - tail_tol.ln()) / decay_base(dim).ln();
    l.max(r + 4.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h0(t: f64) -> f64 {
        std::f64::consts::PI.powf(-0.25) * (-0.5 * t * t).exp()
    }

    #[test]
    fn grid_nodes_are_interior_and_symmetric() {
        let g = BoxGrid::new(2, 3.0, 16).unwrap();
        assert_eq!(g.len(), 256);
        assert!(g.coord(0) > -3.0 && g.coord(15) < 3.0);
        assert!((g.coord(0) + g.coord(15)).abs() < 1e-15);
        let idx = g.ravel(&[3, 7]);
        assert_eq!(&g.unravel(idx)[..2], &[3, 7]);
        assert!(BoxGrid::new(1, 1.0, 8).is_err());
        assert!(BoxGrid::new(4, 1.0, 16).is_err());
    }

    #[test]
    fn laplacian_of_constant_vanishes_inside() {
        let g = BoxGrid::new(2, 4.0, 32).unwrap();
        let well = PotentialWell::shell(2, 0.0, 10.0).unwrap();
        let op = build_operator(&well, &g).unwrap();
        let out = op.apply_vec(&vec![1.0; g.len()]);
        for i in 0..g.len() {
            let ix = g.unravel(i);
            if (1..31).contains(&ix[0]) && (1..31).contains(&ix[1]) {
                assert!(out[i].abs() < 1e-10);
            }
        }
    }

    #[test]
    fn oscillator_ground_state_is_nearly_fixed() {
        let g = BoxGrid::new(1, 10.0, 2000).unwrap();
        let op = build_operator(&PotentialWell::point(1).unwrap(), &g).unwrap();
        let f = DiscreteField::from_fn(g, |x| h0(x[0]));
        let af = op.apply_field(&f);
        let err = af
            .values
            .iter()
            .zip(&f.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 0.5 * g.spacing * g.spacing, "{err}");
    }

    #[test]
    fn energies_match_quadratic_form() {
        let g = BoxGrid::new(3, 3.0, 16).unwrap();
        let well = PotentialWell::circle(1.0).unwrap();
        let op = build_operator(&well, &g).unwrap();
        let f = DiscreteField::from_fn(g, |x| (x[0] * 1.3).sin() + x[1] * x[2] - 0.2);
        let n = discrete_norms(&f, Some(&op));
        let form = par::dot(&f.values, &op.apply_vec(&f.values)) * g.cell_volume();
        let sum = n.grad_energy + n.potential_energy.unwrap();
        assert!((sum - form).abs() < 1e-10 * form.abs(), "{sum} vs {form}");
    }

    #[test]
    fn norms_of_sampled_ground_state() {
        let g = BoxGrid::new(1, 10.0, 2000).unwrap();
        let op = build_operator(&PotentialWell::point(1).unwrap(), &g).unwrap();
        let f = DiscreteField::from_fn(g, |x| h0(x[0]));
        let n = discrete_norms(&f, Some(&op));
        assert!((n.l2 - 1.0).abs() < 1e-4);
        assert!((n.grad_energy + n.potential_energy.unwrap() - 1.0).abs() < 1e-3);
        let z = discrete_norms(&DiscreteField::zeros(g), Some(&op));
        assert_eq!((z.l2, z.sup, z.grad_energy), (0.0, 0.0, 0.0));
        let s = discrete_norms(&f.scaled(-3.0), Some(&op));
        assert!((s.l2 - 3.0 * n.l2).abs() < 1e-12);
        assert!((s.grad_energy - 9.0 * n.grad_energy).abs() < 1e-10);
    }

    #[test]
    fn richardson_arithmetic() {
        let r = richardson_estimate(3.12, 3.03, 1.5).unwrap();
        assert!((r.extrapolated - 2.958).abs() < 1e-12);
        assert!((r.eps_disc - 0.09).abs() < 1e-12);
        let same = richardson_estimate(2.0, 2.0, 2.0).unwrap();
        assert_eq!((same.extrapolated, same.eps_disc), (2.0, 0.0));
        assert!(richardson_estimate(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn choose_box_closed_form() {
        let l = choose_box(&PotentialWell::point(3).unwrap(), 3, 1, 1e-10);
        let r0 = 6f64.sqrt();
        let expected = ((r0 + 1.0) * 2f64.ln() + 10.0 * 10f64.ln()) / 1.75f64.ln();
        assert!((l - expected).abs() < 1e-12);
        let c1 = 2f64.powf(r0 + 1.0);
        assert!(c1 * (-l * 1.75f64.ln()).exp() <= 1e-10 * (1.0 + 1e-12));
    }

    #[test]
    fn tail_masses_agree_with_single_queries() {
        let g = BoxGrid::new(2, 5.0, 40).unwrap();
        let f = DiscreteField::from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1])).exp())
            .normalized()
            .unwrap();
        let rhos = [0.0, 0.5, 1.0, 2.5, 10.0];
        let many = tail_masses(&f, &rhos);
        for (&r, &m) in rhos.iter().zip(&many) {
            assert!((tail_mass(&f, r) - m).abs() < 1e-15);
        }
        assert!((many[0] - 1.0).abs() < 1e-12);
        assert_eq!(many[4], 0.0);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let g = BoxGrid::new(1, 1.0, 16).unwrap();
        let f = DiscreteField::from_fn(g, |x| x[0]);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x1,value\n"));
        assert_eq!(text.lines().count(), 17);
    }
}
