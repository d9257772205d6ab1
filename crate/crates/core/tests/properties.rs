mod common;

use proptest::prelude::*;

use wellspec::bounds::{self, Verdict};
use wellspec::eigensolver::{lowest_eigenpairs, SolverConfig, SymmetricOperator};
use wellspec::grid_op::{BoxGrid, DiscreteField};
use wellspec::oscillator::{hermite_function, hermite_mode_values, HermiteMode};
use wellspec::wells::PotentialWell;

#[test]
fn operator_is_symmetric_on_random_pairs() {
    common::operator_symmetry(100, 1).unwrap();
}

#[test]
fn eigenvalue_error_is_second_order() {
    common::convergence_order().unwrap();
}

#[test]
fn reruns_are_bit_identical() {
    common::determinism(
        "experiment = harmonic-baseline\ndimension = 2\ncells = 48\ncoarse_cells = 32\n",
    )
    .unwrap();
}

#[test]
fn potential_inequalities_hold() {
    common::potential_inequalities(100_000, 3).unwrap();
}

#[test]
fn hermite_gram_is_identity() {
    common::hermite_gram().unwrap();
}

#[test]
fn second_hermite_function_has_unit_norm() {
    let (l, m) = (12.0, 4000);
    let h = 2.0 * l / m as f64;
    let s: f64 = (0..m)
        .map(|i| hermite_function(2, -l + (i as f64 + 0.5) * h).powi(2))
        .sum::<f64>()
        * h;
    assert!((s - 1.0).abs() < 1e-10, "{s}");
}

/// `-d²/dx² + ω²x²` on the cell-centred grid with Dirichlet closure.
struct ScaledOscillator {
    omega: f64,
    grid: BoxGrid,
}

impl SymmetricOperator for ScaledOscillator {
    fn size(&self) -> usize {
        self.grid.cells
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let m = self.grid.cells;
        let ih2 = 1.0 / (self.grid.spacing * self.grid.spacing);
        for i in 0..m {
            let left = if i > 0 { x[i - 1] } else { 0.0 };
            let right = if i + 1 < m { x[i + 1] } else { 0.0 };
            let t = self.grid.coord(i);
            y[i] = ih2 * (2.0 * x[i] - left - right) + self.omega.powi(2) * t * t * x[i];
        }
    }

    fn spectral_bounds(&self) -> Option<(f64, f64)> {
        let l = self.grid.half_width;
        let ih2 = 1.0 / (self.grid.spacing * self.grid.spacing);
        Some((0.0, 4.0 * ih2 + self.omega.powi(2) * l * l))
    }
}

#[test]
fn eigenvalues_scale_with_frequency() {
    for omega in [1.0, 4.0] {
        let grid = BoxGrid::new(1, 10.0, 2000).unwrap();
        let op = ScaledOscillator { omega, grid };
        let mut cfg = SolverConfig::new(3);
        cfg.tol = 1e-9;
        let res = lowest_eigenpairs(&op, &cfg).unwrap();
        for (n, v) in res.values.iter().enumerate() {
            let exact = omega * (2 * n + 1) as f64;
            assert!(
                (v - exact).abs() / exact < 1e-3,
                "omega {omega}: {v} vs {exact}"
            );
        }
    }
}

#[test]
fn constants_are_sane() {
    for dim in 1..=3 {
        for n in [1, 2, 5] {
            for r in [0.0, 0.5, 2.0] {
                let c = bounds::constants(dim, n, r).unwrap();
                assert!(c.alpha > 1.0);
                assert!((0.5..1.0).contains(&c.contraction()));
                assert!(c.c_nr >= 1.0);
            }
        }
        let q: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&r| bounds::poincare_constant(dim, r) / (r * r))
            .collect();
        assert!(q.iter().all(|v| *v > 0.0 && v.is_finite()));
        assert!((q[2] - q[1]).abs() < (q[1] - q[0]).abs() + 1e-15);
    }
}

#[test]
fn eigenspace_distance_limits() {
    let grid = BoxGrid::new(2, 8.0, 64).unwrap();
    let pts = grid.points();
    let phi = hermite_mode_values(&HermiteMode::new(vec![0, 0]), &pts).unwrap();
    let in_block = DiscreteField::new(grid, phi).unwrap().normalized().unwrap();
    let d = bounds::eigenspace_distance(&in_block, 1).unwrap();
    assert!(d.dist_l2 < 1e-6, "{}", d.dist_l2);
    let other = hermite_mode_values(&HermiteMode::new(vec![2, 0]), &pts).unwrap();
    let outside = DiscreteField::new(grid, other)
        .unwrap()
        .normalized()
        .unwrap();
    let d = bounds::eigenspace_distance(&outside, 1).unwrap();
    assert!((d.dist_l2 - 1.0).abs() < 1e-6, "{}", d.dist_l2);
}

fn well_strategy() -> impl Strategy<Value = PotentialWell> {
    prop_oneof![
        (1usize..=3).prop_map(|d| PotentialWell::point(d).unwrap()),
        (0.1f64..3.0).prop_map(|r| PotentialWell::circle(r).unwrap()),
        (0.05f64..0.45, 1.0f64..3.0).prop_map(|(t, r)| PotentialWell::torus(t * r, r).unwrap()),
        (0.1f64..1.0, 1.2f64..4.0).prop_map(|(a, b)| PotentialWell::shell(3, a, b).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn distance_is_one_lipschitz(
        well in well_strategy(),
        x in prop::array::uniform3(-6.0f64..6.0),
        y in prop::array::uniform3(-6.0f64..6.0),
    ) {
        let d = well.dim();
        let gap: f64 = x[..d].iter().zip(&y[..d]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let dx = well.distance(&x[..d]).unwrap();
        let dy = well.distance(&y[..d]).unwrap();
        prop_assert!((dx - dy).abs() <= gap + 1e-12);
    }

    #[test]
    fn thin_torus_is_close_to_its_core_circle(
        tube in 0.005f64..0.45,
        x in prop::array::uniform3(-4.0f64..4.0),
    ) {
        let torus = PotentialWell::torus(tube, 1.0).unwrap();
        let core = PotentialWell::circle(1.0 - tube).unwrap();
        let gap = (torus.distance(&x).unwrap() - core.distance(&x).unwrap()).abs();
        prop_assert!(gap <= tube + 1e-12);
    }

    #[test]
    fn shrinking_budget_only_sharpens_verdicts(
        lhs in -10.0f64..10.0,
        rhs in -10.0f64..10.0,
        eps in 0.0f64..5.0,
        shrink in 0.0f64..1.0,
    ) {
        let wide = Verdict::classify(lhs, rhs, eps);
        let narrow = Verdict::classify(lhs, rhs, eps * shrink);
        if wide == Verdict::Fail {
            prop_assert_eq!(narrow, Verdict::Fail);
        }
        if wide == Verdict::Pass {
            prop_assert_eq!(narrow, Verdict::Pass);
        }
    }
}
