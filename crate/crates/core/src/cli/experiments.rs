//! Experiment pipelines: wells → grids → two-grid solves → bound checks.

use std::time::Instant;

use crate::bounds::{self, BoundReport, Estimate, Trend};
use crate::cli::config::{Experiment, RunConfig};
use crate::cli::report::{
    EigenvalueRow, GridInfo, RunReport, RunStatus, SolveTiming, StabilityRow,
};
use crate::eigensolver::{smallest_eigenpairs, EigenResult, SolverConfig};
use crate::error::{Error, Result};
use crate::grid_op::{
    build_operator, choose_box, richardson_estimate, weighted_moment, BoxGrid, DiscreteField,
};
use crate::oscillator::{eigen_block, level_multiplicity, level_of, nth_eigenvalue};
use crate::wells::{hausdorff_distance, parse_well, PotentialWell};

const DEFAULT_TAIL_TOL: f64 = 1e-8;
const SCALING_FACTOR: f64 = 1.5;
const ANALYTIC_TOL_1D: f64 = 1e-3;
const ANALYTIC_TOL: f64 = 1e-2;
const VIRIAL_TOL: f64 = 1e-3;

/// Default `(fine, coarse)` cells per axis.
fn default_cells(dim: usize, reduced: bool) -> (usize, usize) {
    match (dim, reduced) {
        (1, false) => (2000, 1000),
        (1, true) => (1000, 500),
        (2, false) => (256, 128),
        (2, true) => (128, 64),
        (_, false) => (96, 64),
        (_, true) => (64, 48),
    }
}

/// Default half-width: a dimension-dependent floor, widened to keep a
/// fixed margin around the well.
fn default_half_width(dim: usize, r_sigma: f64) -> f64 {
    let (floor, margin) = match dim {
        1 => (12.0, 8.0),
        2 => (10.0, 7.0),
        _ => (8.0, 6.0),
    };
    f64::max(floor, r_sigma + margin)
}

/// Runs the configured experiment. Configuration problems are returned as
/// errors; solver non-convergence yields a partial report with status
/// [`RunStatus::NotConverged`].
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let exp = cfg.experiment()?;
    let started = Instant::now();
    let mut runner = Runner {
        cfg,
        report: RunReport::new(exp.name(), cfg.echo(), cfg.strict()),
        reduced: exp == Experiment::FullSuite,
        prefix: String::new(),
    };
    let outcome = runner.dispatch(exp);
    let mut report = runner.report;
    report.timing.total_seconds = started.elapsed().as_secs_f64();
    match outcome {
        Ok(()) => report.finalize(),
        Err(Error::NotConverged(e)) => {
            report.status = RunStatus::NotConverged;
            report.error = Some(e.to_string());
        }
        Err(e) => return Err(e),
    }
    Ok(report)
}

/// A two-grid solve of one well.
struct Solved {
    label: String,
    well: PotentialWell,
    fine: EigenResult,
    coarse: EigenResult,
    estimates: Vec<Estimate>,
}

impl Solved {
    fn dim(&self) -> usize {
        self.well.dim()
    }

    fn lambda(&self, n: usize) -> Estimate {
        self.estimates[n - 1]
    }

    fn field(&self, n: usize) -> &DiscreteField {
        &self.fine.pairs[n - 1].field
    }

    fn coarse_field(&self, n: usize) -> &DiscreteField {
        &self.coarse.pairs[n - 1].field
    }

    /// A field functional on the fine grid, with the two-grid difference as
    /// its error.
    fn functional(&self, n: usize, f: impl Fn(&DiscreteField) -> f64) -> Estimate {
        let a = f(self.field(n));
        let b = f(self.coarse_field(n));
        Estimate::new(a, (a - b).abs())
    }

    fn r_sigma(&self) -> f64 {
        self.well.params().r_sigma
    }
}

struct Runner<'a> {
    cfg: &'a RunConfig,
    report: RunReport,
    reduced: bool,
    prefix: String,
}

impl<'a> Runner<'a> {
    fn dispatch(&mut self, exp: Experiment) -> Result<()> {
        match exp {
            Experiment::HarmonicBaseline => self.harmonic_baseline(self.cfg.dimension()),
            Experiment::TwoSidedSweep => self.two_sided_sweep(),
            Experiment::HausdorffPair => {
                let dim = self.cfg.dimension();
                let a = parse_well(self.cfg.well_a.as_deref().unwrap_or_default(), dim)?;
                let b = parse_well(self.cfg.well_b.as_deref().unwrap_or_default(), dim)?;
                self.hausdorff_pair(a, b, self.cfg.levels.unwrap_or(3))
            }
            Experiment::TorusReduction => self.torus_reduction(),
            Experiment::DecayAudit => {
                let well = parse_well(self.cfg.well.as_deref().unwrap_or_default(), 3)?;
                self.decay_audit(well, self.cfg.levels.unwrap_or(1))
            }
            Experiment::StabilitySweep => self.stability_sweep(),
            Experiment::ShellCollapse => self.shell_collapse().map(|_| ()),
            Experiment::CircleNoncollapse => self.circle_noncollapse().map(|_| ()),
            Experiment::FullSuite => self.full_suite(),
        }
    }

    /// Every experiment with its defaults on reduced grids; only solver
    /// settings, `tail_tol` and `ratio_floor` are taken from the config.
    fn full_suite(&mut self) -> Result<()> {
        self.section("harmonic-baseline-1d", |r| r.harmonic_baseline(1))?;
        self.section("harmonic-baseline-3d", |r| r.harmonic_baseline(3))?;
        self.section("two-sided-sweep", |r| r.two_sided_sweep())?;
        self.section("hausdorff-pair-circles", |r| {
            r.hausdorff_pair(PotentialWell::circle(1.0)?, PotentialWell::circle(1.1)?, 3)
        })?;
        self.section("hausdorff-pair-torus", |r| {
            r.hausdorff_pair(
                PotentialWell::torus(0.05, 1.0)?,
                PotentialWell::circle(0.95)?,
                3,
            )
        })?;
        self.section("torus-reduction", |r| r.torus_reduction())?;
        self.section("decay-audit", |r| {
            r.decay_audit(PotentialWell::circle(1.0)?, 1)
        })?;
        self.section("stability-sweep", |r| r.stability_sweep())?;
        let mut shells = Vec::new();
        let mut circles = Vec::new();
        self.section("shell-collapse", |r| {
            shells = r.shell_collapse()?;
            Ok(())
        })?;
        self.section("circle-noncollapse", |r| {
            circles = r.circle_noncollapse()?;
            Ok(())
        })?;
        let contrast = bounds::check_collapse_contrast(&shells, &circles)?;
        self.push(contrast);
        Ok(())
    }

    fn section(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<()>) -> Result<()> {
        self.prefix = format!("{name}/");
        let out = f(self);
        self.prefix.clear();
        out
    }

    fn full_suite_mode(&self) -> bool {
        self.reduced
    }

    /// Experiment-specific list from the config, or the default when running
    /// the full suite or when unset.
    fn list<T: Clone>(&self, value: &Option<Vec<T>>, default: &[T]) -> Vec<T> {
        match value {
            Some(v) if !self.full_suite_mode() => v.clone(),
            _ => default.to_vec(),
        }
    }

    fn scalar<T: Copy>(&self, value: Option<T>, default: T) -> T {
        if self.full_suite_mode() {
            default
        } else {
            value.unwrap_or(default)
        }
    }

    fn push(&mut self, mut report: BoundReport) {
        report.name = format!("{}{}", self.prefix, report.name);
        self.report.checks.push(report);
    }

    fn push_for(&mut self, label: &str, mut report: BoundReport) {
        report.name = format!("{}@{label}", report.name);
        self.push(report);
    }

    fn record_constants(&mut self, dim: usize, n: usize, r: f64) -> Result<()> {
        let seen = self
            .report
            .constants
            .iter()
            .any(|c| c.dim == dim && c.n == n && c.r == r);
        if !seen {
            self.report.constants.push(bounds::constants(dim, n, r)?);
        }
        Ok(())
    }

    fn solver(&self, k: usize) -> SolverConfig {
        let mut s = SolverConfig::new(k);
        if let Some(tol) = self.cfg.tol {
            s.tol = tol;
        }
        if let Some(seed) = self.cfg.seed {
            s.seed = seed;
        }
        s
    }

    fn cells(&self, dim: usize) -> (usize, usize) {
        let (f, c) = default_cells(dim, self.reduced);
        if self.reduced {
            return (f, c);
        }
        match (self.cfg.cells, self.cfg.coarse_cells) {
            (Some(f), Some(c)) => (f, c),
            (Some(f), None) => (f, (f * 2 / 3).max(crate::grid_op::MIN_CELLS)),
            (None, Some(c)) => (f.max(c + 1), c),
            (None, None) => (f, c),
        }
    }

    fn half_width(&self, well: &PotentialWell) -> f64 {
        match self.cfg.half_width {
            Some(l) if !self.reduced => l,
            _ => default_half_width(well.dim(), well.params().r_sigma),
        }
    }

    fn k(&self, default: usize) -> usize {
        self.scalar(self.cfg.k, default).max(default)
    }

    /// Fine and coarse solves on the same box, with Richardson estimates.
    fn solve(&mut self, well: &PotentialWell, k: usize, half_width: f64) -> Result<Solved> {
        let dim = well.dim();
        let label = well.to_string();
        let row_label = format!("{}{label}", self.prefix);
        let (mf, mc) = self.cells(dim);
        let cfg = self.solver(k);
        let mut results = Vec::with_capacity(2);
        for (tag, m) in [("fine", mf), ("coarse", mc)] {
            let grid = BoxGrid::new(dim, half_width, m)?;
            let op = build_operator(well, &grid)?;
            let t = Instant::now();
            let res = smallest_eigenpairs(&op, &cfg)?;
            self.report.timing.solves.push(SolveTiming {
                label: format!("{row_label} {tag} M={m}"),
                seconds: t.elapsed().as_secs_f64(),
                iterations: res.iterations,
                matvecs: res.matvecs,
            });
            results.push(res);
        }
        let coarse = results.pop().unwrap();
        let fine = results.pop().unwrap();
        let ratio = mf as f64 / mc as f64;
        let mut estimates = Vec::with_capacity(k);
        for n in 1..=k {
            let (f, c) = (&fine.pairs[n - 1], &coarse.pairs[n - 1]);
            let rich = richardson_estimate(c.value, f.value, ratio)?;
            estimates.push(Estimate::new(rich.extrapolated, rich.eps_disc));
            self.report.eigenvalues.push(EigenvalueRow {
                label: row_label.clone(),
                n,
                fine: f.value,
                coarse: c.value,
                extrapolated: rich.extrapolated,
                eps_disc: rich.eps_disc,
                residual: f.residual,
            });
        }
        self.report.grids.push(GridInfo {
            label: row_label,
            dim,
            half_width,
            cells: mf,
            coarse_cells: mc,
            spacing: 2.0 * half_width / mf as f64,
        });
        Ok(Solved {
            label,
            well: well.clone(),
            fine,
            coarse,
            estimates,
        })
    }

    fn solve_default(&mut self, well: &PotentialWell, k: usize) -> Result<Solved> {
        let l = self.half_width(well);
        self.solve(well, k, l)
    }

    fn sup_checks(&mut self, s: &Solved, levels: usize) -> Result<()> {
        for n in 1..=levels {
            let eps = s.functional(n, DiscreteField::sup_norm).eps;
            let r = bounds::check_sup_bound(s.dim(), n, s.field(n), eps)?;
            self.push_for(&s.label, r);
        }
        Ok(())
    }

    fn moment_check(&mut self, s: &Solved) -> Result<()> {
        let eps = s.functional(1, |f| weighted_moment(f, 0)).eps;
        self.record_constants(s.dim(), 1, s.r_sigma())?;
        let r = bounds::check_moment_bound(s.field(1), s.dim(), 1, s.r_sigma(), eps)?;
        self.push_for(&s.label, r);
        Ok(())
    }

    fn poincare_check(&mut self, s: &Solved) {
        let r = bounds::check_poincare(s.dim(), s.r_sigma(), s.lambda(1));
        self.push_for(&s.label, r);
    }

    fn two_sided_checks(&mut self, s: &Solved, levels: usize) -> Result<()> {
        for n in 1..=levels {
            self.record_constants(s.dim(), n, s.r_sigma())?;
            let e = s.lambda(n);
            let r = bounds::check_two_sided(s.dim(), n, s.r_sigma(), e.value, e.eps);
            self.push_for(&s.label, r);
        }
        Ok(())
    }

    fn harmonic_baseline(&mut self, dim: usize) -> Result<()> {
        let well = PotentialWell::point(dim)?;
        let default_k = match dim {
            1 => 3,
            _ => 1 + dim,
        };
        let k = self.k(default_k);
        let s = self.solve_default(&well, k)?;
        let tol = if dim == 1 {
            ANALYTIC_TOL_1D
        } else {
            ANALYTIC_TOL
        };
        for n in 1..=k {
            let exact = nth_eigenvalue(dim, n);
            let e = s.lambda(n);
            let r = BoundReport::new(
                format!("analytic[n={n}]"),
                (e.value - exact).abs() / exact,
                tol,
                e.eps / exact,
                "harmonic oscillator spectrum: lambda_n = 2|alpha| + N",
            );
            self.push(r);
        }
        // Complete degenerate levels inside the solved range.
        let mut first = 1;
        while first <= k {
            let level = level_of(dim, first);
            let last = first + level_multiplicity(dim, level) - 1;
            if last > k {
                break;
            }
            if last > first {
                let vals: Vec<Estimate> = (first..=last).map(|n| s.lambda(n)).collect();
                let hi = vals.iter().map(|e| e.value).fold(f64::MIN, f64::max);
                let lo = vals.iter().map(|e| e.value).fold(f64::MAX, f64::min);
                let eps = vals.iter().map(|e| e.eps).fold(0.0, f64::max);
                self.push(BoundReport::new(
                    format!("degenerate_spread[level={level}]"),
                    hi - lo,
                    2.0 * eps,
                    0.0,
                    "degenerate oscillator levels: spread within 2 eps_disc",
                ));
            }
            first = last + 1;
        }
        // Absolute on the line, relative to lambda_1/2 otherwise.
        let m = s.functional(1, |f| weighted_moment(f, 0));
        let half = nth_eigenvalue(dim, 1) / 2.0;
        let (scale, tol) = if dim == 1 {
            (1.0, VIRIAL_TOL)
        } else {
            (half, ANALYTIC_TOL)
        };
        self.push(BoundReport::new(
            "virial[n=1]",
            (m.value - half).abs() / scale,
            tol,
            m.eps / scale,
            "oscillator virial identity: int |x|^2 |Phi_n|^2 = lambda_n / 2",
        ));
        self.sup_checks(&s, k)?;
        self.moment_check(&s)?;
        let split_eps = s.functional(1, |f| weighted_moment(f, 0)).eps;
        let split = bounds::check_split_moment(s.field(1), &well, split_eps)?;
        self.push(split);
        self.poincare_check(&s);
        let domain = bounds::check_domain_h2(s.field(1), s.coarse_field(1), &well)?;
        self.push(domain);
        self.push(bounds::check_ground_state_sign(s.field(1)));
        Ok(())
    }

    fn two_sided_sweep(&mut self) -> Result<()> {
        let radii = self.list(&self.cfg.radii, &[0.25, 0.5, 1.0]);
        let levels = self.scalar(self.cfg.levels, 6);
        let k = self.k(levels);
        let mut solved = Vec::new();
        for &r in &radii {
            let well = PotentialWell::circle(r)?;
            let s = self.solve_default(&well, k)?;
            self.two_sided_checks(&s, levels)?;
            self.sup_checks(&s, levels)?;
            self.moment_check(&s)?;
            self.poincare_check(&s);
            solved.push((r, s));
        }
        if solved.len() >= 2 {
            for n in 1..=levels {
                let samples: Vec<(f64, Estimate)> =
                    solved.iter().map(|(r, s)| (*r, s.lambda(n))).collect();
                let rep = bounds::check_monotone(
                    &format!("monotone_in_R[n={n}]"),
                    &samples,
                    Trend::NonIncreasing,
                )?;
                self.push(rep);
            }
        }
        Ok(())
    }

    fn hausdorff_pair(&mut self, a: PotentialWell, b: PotentialWell, levels: usize) -> Result<()> {
        let k = self.k(levels);
        let dh = hausdorff_distance(&a, &b)?;
        let sa = self.solve_default(&a, k)?;
        let sb = self.solve_default(&b, k)?;
        for n in 1..=levels {
            let r = bounds::check_hausdorff_stability(a.dim(), n, sa.lambda(n), sb.lambda(n), &dh);
            self.push(r);
        }
        for s in [&sa, &sb] {
            self.two_sided_checks(s, levels)?;
            self.sup_checks(s, levels)?;
        }
        Ok(())
    }

    fn torus_reduction(&mut self) -> Result<()> {
        let tubes = self.list(&self.cfg.torus_radii, &[0.2, 0.1, 0.05]);
        let outer = self.scalar(self.cfg.outer_radius, 1.0);
        let circle = PotentialWell::circle(outer)?;
        let sc = self.solve_default(&circle, 1)?;
        let s1 = sc.lambda(1);
        let mut diffs = Vec::new();
        for &r in &tubes {
            let torus = PotentialWell::torus(r, outer)?;
            let st = self.solve_default(&torus, 1)?;
            let t = st.lambda(1);
            diffs.push((r, Estimate::new((t.value - s1.value).abs(), t.eps + s1.eps)));
            let dh = hausdorff_distance(&torus, &circle)?;
            let rep = bounds::check_hausdorff_stability(3, 1, t, s1, &dh);
            self.push_for(&st.label, rep);
            self.two_sided_checks(&st, 1)?;
            self.sup_checks(&st, 1)?;
        }
        if diffs.len() >= 2 {
            let rep = bounds::check_monotone("torus_gap_shrinks", &diffs, Trend::NonDecreasing)?;
            let values: Vec<String> = diffs
                .iter()
                .map(|(r, d)| format!("r={r}: {:.6e}", d.value))
                .collect();
            self.push(rep.with_note(format!(
                "|lambda_1(T) - lambda_1(S)| by tube: {}",
                values.join(", ")
            )));
        }
        Ok(())
    }

    fn decay_audit(&mut self, well: PotentialWell, n: usize) -> Result<()> {
        let tail_tol = self.cfg.tail_tol.unwrap_or(DEFAULT_TAIL_TOL);
        let l = match self.cfg.half_width {
            Some(l) if !self.reduced => l,
            _ => choose_box(&well, 3, n, tail_tol),
        };
        let s = self.solve(&well, n + 1, l)?;
        let r = s.r_sigma();
        self.record_constants(3, n, r)?;
        let pair = &s.fine.pairs[n - 1];
        let gap = s.fine.pairs[n].value - pair.value;
        let eta = if gap > 0.0 {
            pair.residual / gap
        } else {
            f64::INFINITY
        };
        let eta_sup = eta / s.field(n).grid.cell_volume().sqrt();
        let audit = bounds::check_tail_contraction(s.field(n), Some(s.coarse_field(n)), n, r, eta)?;
        let note = format!("eigenvector error bound eta = {eta:.3e} (residual / spectral gap)");
        self.push(audit.contraction.with_note(note.clone()));
        self.push(audit.integrated.with_note(note));
        self.report.decay_profile.extend(audit.profile);
        let env = bounds::check_pointwise_decay(s.field(n), n, r, eta_sup)?;
        self.push(env.report);
        self.report.envelope.extend(env.profile);
        self.sup_checks(&s, n)?;
        self.moment_check(&s)?;
        Ok(())
    }

    fn stability_sweep(&mut self) -> Result<()> {
        let radii = self.list(&self.cfg.radii, &[0.05, 0.1, 0.2, 0.4]);
        let n = self.scalar(self.cfg.levels, 1);
        let k = self.k(n);
        let block = eigen_block(3, n);
        let mut l2 = Vec::new();
        let mut weighted = Vec::new();
        for &r in &radii {
            let well = PotentialWell::circle(r)?;
            let s = self.solve_default(&well, k)?;
            let df = bounds::eigenspace_distance(s.field(n), n)?;
            let dc = bounds::eigenspace_distance(s.coarse_field(n), n)?;
            let d = Estimate::new(df.dist_l2, (df.dist_l2 - dc.dist_l2).abs());
            let w = Estimate::new(
                df.dist_weighted,
                (df.dist_weighted - dc.dist_weighted).abs(),
            );
            self.record_constants(3, n, r)?;
            let rep = bounds::check_eigenspace(3, n, r, d);
            self.push(rep.with_note(format!(
                "block level {}, first index {}",
                block.level,
                block.n - block.j_n
            )));
            if !w.value.is_finite() {
                self.push(BoundReport::new(
                    format!("dist_weighted_finite[R={r}]"),
                    f64::INFINITY,
                    0.0,
                    0.0,
                    bounds::citation::SQRT_SCALING,
                ));
            }
            self.report.stability.push(StabilityRow {
                radius: r,
                dist_l2: d.value,
                dist_weighted: w.value,
                dist_over_sqrt_r: d.value / r.sqrt(),
                eps_l2: d.eps,
                eps_weighted: w.eps,
            });
            l2.push((r, d));
            weighted.push((r, w));
        }
        if radii.len() >= 2 {
            let checks = [
                bounds::check_monotone("stability_monotone_l2", &l2, Trend::NonDecreasing)?,
                bounds::check_sqrt_scaling("stability_sqrt_scaling_l2", &l2, SCALING_FACTOR)?,
                bounds::check_monotone(
                    "stability_monotone_weighted",
                    &weighted,
                    Trend::NonDecreasing,
                )?,
                bounds::check_sqrt_scaling(
                    "stability_sqrt_scaling_weighted",
                    &weighted,
                    SCALING_FACTOR,
                )?,
            ];
            for c in checks {
                self.push(c);
            }
        }
        Ok(())
    }

    /// Returns the ground-state estimates in sweep order.
    fn shell_collapse(&mut self) -> Result<Vec<Estimate>> {
        let shells = self.list(&self.cfg.shells, &[(1.0, 5.0), (1.0, 9.0)]);
        let mut lams = Vec::new();
        for &(inner, outer) in &shells {
            let well = PotentialWell::shell(3, inner, outer)?;
            let s = self.solve_default(&well, 1)?;
            let rep = bounds::check_shell_collapse(s.lambda(1), &well)?;
            self.push(rep);
            self.two_sided_checks(&s, 1)?;
            self.sup_checks(&s, 1)?;
            self.poincare_check(&s);
            lams.push((outer - inner, s.lambda(1)));
        }
        if lams.len() >= 2 {
            let rep =
                bounds::check_monotone("shell_lambda1_decreases", &lams, Trend::NonIncreasing)?;
            self.push(rep);
        }
        Ok(lams.into_iter().map(|(_, e)| e).collect())
    }

    fn circle_noncollapse(&mut self) -> Result<Vec<Estimate>> {
        let radii = self.list(&self.cfg.radii, &[2.0, 4.0, 8.0]);
        let floor = self.cfg.ratio_floor.unwrap_or(bounds::DEFAULT_RATIO_FLOOR);
        let mut samples = Vec::new();
        for &r in &radii {
            let well = PotentialWell::circle(r)?;
            let s = self.solve_default(&well, 1)?;
            self.two_sided_checks(&s, 1)?;
            self.poincare_check(&s);
            samples.push((r, s.lambda(1)));
        }
        let rep = bounds::check_circle_noncollapse(&samples, floor)?;
        self.push(rep);
        Ok(samples.into_iter().map(|(_, e)| e).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> RunConfig {
        RunConfig::parse(text).unwrap()
    }

    #[test]
    fn one_dimensional_baseline_passes() {
        let cfg = config(
            "experiment = harmonic-baseline\ndimension = 1\ncells = 400\ncoarse_cells = 200\n",
        );
        let report = run(&cfg).unwrap();
        assert_eq!(report.status, RunStatus::Ok, "{:#?}", report.failures());
        assert_eq!(report.eigenvalues.len(), 3);
        for (row, exact) in report.eigenvalues.iter().zip([1.0, 3.0, 5.0]) {
            assert!((row.extrapolated - exact).abs() < 1e-3);
        }
        assert!(report.check("ground_state_sign").is_some());
        assert!(report.checks.iter().all(|c| !c.citation.is_empty()));
    }

    #[test]
    fn incomplete_config_is_rejected_before_solving() {
        let cfg = config("experiment = hausdorff-pair\nwell_a = circle:1\n");
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn iteration_cap_gives_partial_report() {
        let cfg = config(
            "experiment = harmonic-baseline\ndimension = 1\ncells = 600\ncoarse_cells = 300\ntol = 1e-300\n",
        );
        let report = run(&cfg).unwrap();
        assert_eq!(report.status, RunStatus::NotConverged);
        assert_eq!(report.status.exit_code(), 3);
        assert!(report.error.is_some());
    }
}
