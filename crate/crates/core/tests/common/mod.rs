//! Property checks shared by the acceptance target and the property tests.
//! Each returns a one-line summary on success and a description on failure.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wellspec::cli::{self, RunConfig};
use wellspec::eigensolver::{smallest_eigenpairs, SolverConfig};
use wellspec::grid_op::{build_operator, BoxGrid};
use wellspec::oscillator::hermite_functions;
use wellspec::wells::PotentialWell;

pub type Outcome = Result<String, String>;

/// A well of every shape, in every dimension it supports.
pub fn sample_wells() -> Vec<PotentialWell> {
    vec![
        PotentialWell::point(1).unwrap(),
        PotentialWell::point(2).unwrap(),
        PotentialWell::point(3).unwrap(),
        PotentialWell::points(1, vec![vec![-1.0], vec![0.5]]).unwrap(),
        PotentialWell::points(3, vec![vec![1.0, 0.0, 0.0], vec![0.0, -0.5, 0.25]]).unwrap(),
        PotentialWell::circle(1.0).unwrap(),
        PotentialWell::circle(0.25).unwrap(),
        PotentialWell::torus(0.1, 1.0).unwrap(),
        PotentialWell::torus(0.3, 2.0).unwrap(),
        PotentialWell::shell(2, 0.5, 1.5).unwrap(),
        PotentialWell::shell(3, 1.0, 5.0).unwrap(),
    ]
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `|⟨Au, v⟩ − ⟨u, Av⟩| ≤ 1e-12 ‖Au‖‖v‖` on random pairs over small grids
/// of every sample well.
pub fn operator_symmetry(pairs: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let wells = sample_wells();
    let mut worst = 0.0f64;
    for i in 0..pairs {
        let well = &wells[i % wells.len()];
        let dim = well.dim();
        let cells = match dim {
            1 => rng.gen_range(16..200),
            2 => rng.gen_range(16..40),
            _ => rng.gen_range(16..22),
        };
        let l = well.params().r_sigma + rng.gen_range(2.0..6.0);
        let grid = BoxGrid::new(dim, l, cells).map_err(|e| e.to_string())?;
        let op = build_operator(well, &grid).map_err(|e| e.to_string())?;
        let u: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let au = op.apply_vec(&u);
        let av = op.apply_vec(&v);
        let scale = (norm(&au) * norm(&v)).max(norm(&u) * norm(&av));
        let rel = (dot(&au, &v) - dot(&u, &av)).abs() / scale;
        worst = worst.max(rel);
        if !(rel <= 1e-12) {
            return Err(format!(
                "pair {i} on {well} (M={cells}): relative asymmetry {rel:e}"
            ));
        }
    }
    Ok(format!(
        "{pairs} pairs, worst relative asymmetry {worst:.2e}"
    ))
}

/// Observed order of the eigenvalue error for the 1-D oscillator on
/// `L = 12` over three refinements, each in `[1.7, 2.3]`.
pub fn convergence_order() -> Outcome {
    let well = PotentialWell::point(1).unwrap();
    let cells = [500, 1000, 2000];
    let mut cfg = SolverConfig::new(3);
    cfg.tol = 1e-9;
    let mut errors = Vec::new();
    for &m in &cells {
        let grid = BoxGrid::new(1, 12.0, m).unwrap();
        let op = build_operator(&well, &grid).unwrap();
        let res = smallest_eigenpairs(&op, &cfg).map_err(|e| e.to_string())?;
        let e: Vec<f64> = res
            .values()
            .iter()
            .zip([1.0, 3.0, 5.0])
            .map(|(v, exact)| (v - exact).abs())
            .collect();
        errors.push(e);
    }
    let mut orders = Vec::new();
    for n in 0..3 {
        for w in errors.windows(2) {
            orders.push((w[0][n] / w[1][n]).log2());
        }
    }
    if orders.iter().all(|p| (1.7..=2.3).contains(p)) {
        let shown: Vec<String> = orders.iter().map(|p| format!("{p:.3}")).collect();
        Ok(format!("orders {}", shown.join(", ")))
    } else {
        Err(format!("orders {orders:?} outside [1.7, 2.3]"))
    }
}

/// Two runs of the same configuration give identical reports apart from
/// timing.
pub fn determinism(config: &str) -> Outcome {
    let cfg = RunConfig::parse(config).map_err(|e| e.to_string())?;
    let mut a = cli::run(&cfg).map_err(|e| e.to_string())?;
    let mut b = cli::run(&cfg).map_err(|e| e.to_string())?;
    a.timing = Default::default();
    b.timing = Default::default();
    let (ja, jb) = (a.to_json().unwrap(), b.to_json().unwrap());
    if ja == jb {
        Ok(format!("{} bytes of report identical", ja.len()))
    } else {
        Err("reports differ between identical runs".into())
    }
}

const EPSILONS: [f64; 4] = [0.01, 0.5, 1.0, 10.0];

/// The upper, lower and ε-weighted comparisons between `V` and `|x|²` on
/// `points` random points per well.
pub fn potential_inequalities(points: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0usize;
    for well in sample_wells() {
        let dim = well.dim();
        let p = well.params();
        let (net, _) = well.sample_net(48);
        let box_r = p.r_sigma + 3.0;
        for _ in 0..points {
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-box_r..box_r)).collect();
            let v = well.potential(&x).map_err(|e| e.to_string())?;
            let r2 = dot(&x, &x);
            let slack = 1e-12 * (1.0 + r2);
            for y in &net {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
                if v > d2 + slack {
                    return Err(format!("{well}: V({x:?}) = {v} exceeds |x - y|^2 = {d2}"));
                }
            }
            let lower = (r2.sqrt() - p.r_sigma).max(0.0).powi(2);
            if v + slack < lower {
                return Err(format!(
                    "{well}: V({x:?}) = {v} below (|x| - R)^2 = {lower}"
                ));
            }
            for eps in EPSILONS {
                let up = (1.0 + eps) * r2 + (1.0 + 1.0 / eps) * p.delta_sigma.powi(2);
                if v > up + slack {
                    return Err(format!("{well}, eps {eps}: V = {v} above {up}"));
                }
                let back = (1.0 + eps) * v + (1.0 + 1.0 / eps) * p.r_sigma.powi(2);
                if r2 > back + slack {
                    return Err(format!("{well}, eps {eps}: |x|^2 = {r2} above {back}"));
                }
            }
            checked += 1;
        }
    }
    Ok(format!(
        "{checked} points over {} wells",
        sample_wells().len()
    ))
}

/// Discrete Gram matrix of sampled Hermite functions of order ≤ 8 on
/// `[−10, 10]` against the identity.
pub fn hermite_gram() -> Outcome {
    let grid = BoxGrid::new(1, 10.0, 2000).unwrap();
    let h = grid.spacing;
    let table: Vec<Vec<f64>> = (0..grid.cells)
        .map(|i| hermite_functions(8, grid.coord(i)))
        .collect();
    let mut worst = 0.0f64;
    for a in 0..=8 {
        for b in 0..=8 {
            let g: f64 = table.iter().map(|row| row[a] * row[b]).sum::<f64>() * h;
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    if worst <= 1e-6 {
        Ok(format!("max |G - I| = {worst:.2e}"))
    } else {
        Err(format!("max |G - I| = {worst:e} exceeds 1e-6"))
    }
}
