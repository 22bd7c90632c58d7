//! Lasso estimation by cyclic coordinate descent with BIC tuning.
//!
//! Every equation of the simulator is estimated here. Columns are
//! standardised to unit (population) variance on the fly, the intercept is
//! never penalised, and the criterion minimised at a fixed `lambda` is
//!
//! ```text
//! || y - a - X b ||^2 + lambda * sum_j s_j |b_j|
//! ```
//!
//! where `s_j` is the standard deviation of column `j`, which is the plain
//! lasso objective written on the standardised scale. Along a decreasing
//! grid the solver warm-starts, restricts sweeps to a working set chosen by
//! the sequential strong rule, and verifies the KKT conditions on all
//! columns before accepting a solution.

mod column;

pub use column::Column;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `sign(z) * max(|z| - gamma, 0)`
#[inline]
pub fn soft_threshold<F: Scalar>(z: F, gamma: F) -> F {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        F::zero()
    }
}

/// Bayesian information criterion `n ln(rss / n) + k ln(n)`.
///
/// A perfect fit (`rss == 0`) yields negative infinity.
pub fn bic<F: Scalar>(rss: F, n: usize, k: usize) -> F {
    if rss <= F::zero() {
        return F::neg_infinity();
    }
    let nf = F::from_count(n);
    nf * (rss / nf).ln() + F::from_count(k) * nf.ln()
}

/// Response plus borrowed design columns, with the column moments needed
/// for standardisation.
#[derive(Debug, Clone)]
pub struct DesignProblem<'a, F> {
    response: &'a [F],
    columns: Vec<Column<'a, F>>,
    means: Vec<F>,
    column_scales: Vec<F>,
    centered_sums: Vec<F>,
}

impl<'a, F: Scalar> DesignProblem<'a, F> {
    pub fn new(response: &'a [F], columns: Vec<Column<'a, F>>) -> Result<Self> {
        let n = response.len();
        if n < 2 {
            return Err(Error::InsufficientHistory {
                what: "lasso observations".into(),
                required: 2,
                available: n,
            });
        }
        if response.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("lasso response".into()));
        }
        let nf = F::from_count(n);
        let mut means = Vec::with_capacity(columns.len());
        let mut column_scales = Vec::with_capacity(columns.len());
        let mut centered_sums = Vec::with_capacity(columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != n {
                return Err(Error::DimensionMismatch {
                    what: format!("lasso design column {j}"),
                    expected: n,
                    found: c.len(),
                });
            }
            if !c.all_finite() {
                return Err(Error::NonFinite(format!("lasso design column {j}")));
            }
            let m = c.sum() / nf;
            let var = c.centered_sum_sq(m) / nf;
            means.push(m);
            column_scales.push(var.sqrt());
            centered_sums.push(c.sum() - nf * m);
        }
        Ok(Self {
            response,
            columns,
            means,
            column_scales,
            centered_sums,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.response.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn response(&self) -> &[F] {
        self.response
    }

    pub fn columns(&self) -> &[Column<'a, F>] {
        &self.columns
    }

    pub fn column_scales(&self) -> &[F] {
        &self.column_scales
    }

    pub fn column_means(&self) -> &[F] {
        &self.means
    }

    fn is_screened_out(&self, j: usize) -> bool {
        let tiny = F::epsilon() * F::lit(100.0) * (F::one() + self.means[j].abs());
        !(self.column_scales[j] > tiny)
    }

    /// Lasso objective on the original scale for a candidate solution.
    pub fn objective(&self, intercept: F, coefficients: &[F], lambda: F) -> F {
        let n = self.n_obs();
        let mut fitted = vec![intercept; n];
        for (c, &b) in self.columns.iter().zip(coefficients) {
            if b != F::zero() {
                c.add_scaled(b, &mut fitted);
            }
        }
        let rss: F = self
            .response
            .iter()
            .zip(&fitted)
            .map(|(&y, &f)| (y - f) * (y - f))
            .sum();
        let pen: F = coefficients
            .iter()
            .zip(&self.column_scales)
            .map(|(&b, &s)| s * b.abs())
            .sum();
        rss + lambda * pen
    }
}

/// Decreasing logarithmic grid from `lambda_max` down to `lambda_max * min_ratio`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    pub points: usize,
    pub min_ratio: f64,
    /// Stop descending once the BIC has failed to improve on its running
    /// minimum for this many consecutive grid points. `None` walks the
    /// whole grid.
    pub patience: Option<usize>,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        Self {
            points: 100,
            min_ratio: 1e-4,
            patience: Some(10),
        }
    }
}

impl LambdaGrid {
    pub fn full() -> Self {
        Self {
            patience: None,
            ..Self::default()
        }
    }

    pub fn values<F: Scalar>(&self, lambda_max: F) -> Vec<F> {
        if self.points <= 1 {
            return vec![lambda_max];
        }
        let lo = self.min_ratio.ln();
        (0..self.points)
            .map(|k| {
                let t = k as f64 / (self.points - 1) as f64;
                lambda_max * F::lit((lo * t).exp())
            })
            .collect()
    }
}

/// Solver controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoOptions {
    /// Convergence threshold on the largest coefficient change per sweep,
    /// measured with both columns and response standardised.
    pub tolerance: f64,
    pub max_sweeps: usize,
    /// Record the objective after every sweep (diagnostics and tests).
    pub trace: bool,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-7,
            max_sweeps: 1000,
            trace: false,
        }
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub lambda: f64,
    pub df: usize,
    pub rss: f64,
    pub bic: f64,
}

/// Selected solution.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit<F> {
    /// One entry per design column, original scale; screened columns are 0.
    pub coefficients: Vec<F>,
    pub intercept: F,
    pub lambda: F,
    pub bic: F,
    pub rss: F,
    pub df: usize,
    /// `response - fitted`
    pub residuals: Vec<F>,
    pub converged: bool,
    pub path: Vec<PathPoint>,
    /// Objective after each sweep of the final solve, when tracing.
    pub objective_trace: Vec<F>,
}

impl<F: Scalar> LassoFit<F> {
    pub fn active(&self) -> impl Iterator<Item = (usize, F)> + '_ {
        self.coefficients
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, b)| *b != F::zero())
    }

    pub fn fitted(&self, problem: &DesignProblem<'_, F>) -> Vec<F> {
        let mut out = vec![self.intercept; problem.n_obs()];
        for (j, b) in self.active() {
            problem.columns[j].add_scaled(b, &mut out);
        }
        out
    }
}

/// Working state of one problem along the path.
struct Solver<'p, 'a, F> {
    problem: &'p DesignProblem<'a, F>,
    options: LassoOptions,
    n: F,
    centered_y: Vec<F>,
    sum_centered_y: F,
    /// Screened-in column indices.
    usable: Vec<usize>,
    /// `z_j . y_c` for every column (0 for screened).
    q: Vec<F>,
    /// Standardised coefficients.
    gamma: Vec<F>,
    /// Working set, as column indices, and its Gram matrix.
    working: Vec<usize>,
    in_working: Vec<bool>,
    gram: Vec<Vec<F>>,
    /// Gradient `z_j . r` per working-set position.
    grad: Vec<F>,
    /// Full gradient at the last accepted solution (all usable columns).
    full_grad: Vec<F>,
    residual: Vec<F>,
    tol: F,
    trace: Vec<F>,
}

impl<'p, 'a, F: Scalar> Solver<'p, 'a, F> {
    fn new(problem: &'p DesignProblem<'a, F>, options: LassoOptions) -> Self {
        let n_obs = problem.n_obs();
        let n = F::from_count(n_obs);
        let ybar = crate::scalar::sum(problem.response) / n;
        let centered_y: Vec<F> = problem.response.iter().map(|&y| y - ybar).collect();
        let sum_centered_y = crate::scalar::sum(&centered_y);
        let sd_y = (centered_y.iter().map(|&v| v * v).sum::<F>() / n).sqrt();
        let p = problem.n_columns();
        let usable: Vec<usize> = (0..p).filter(|&j| !problem.is_screened_out(j)).collect();
        let mut q = vec![F::zero(); p];
        for &j in &usable {
            q[j] = (problem.columns[j].dot(&centered_y) - problem.means[j] * sum_centered_y)
                / problem.column_scales[j];
        }
        let full_grad = q.clone();
        Self {
            problem,
            options,
            n,
            residual: centered_y.clone(),
            centered_y,
            sum_centered_y,
            usable,
            q,
            gamma: vec![F::zero(); p],
            working: Vec::new(),
            in_working: vec![false; p],
            gram: Vec::new(),
            grad: Vec::new(),
            full_grad,
            tol: F::lit(options.tolerance) * sd_y,
            trace: Vec::new(),
        }
    }

    fn lambda_max(&self) -> F {
        let m = self
            .usable
            .iter()
            .map(|&j| self.q[j].abs())
            .fold(F::zero(), F::max);
        m + m
    }

    fn cross(&self, j: usize, k: usize) -> F {
        let p = self.problem;
        let raw = p.columns[j].centered_cross(
            p.means[j],
            &p.columns[k],
            p.means[k],
            p.centered_sums[j],
            p.centered_sums[k],
        );
        raw / (p.column_scales[j] * p.column_scales[k])
    }

    fn add_to_working(&mut self, j: usize) {
        if self.in_working[j] {
            return;
        }
        let row: Vec<F> = self.working.iter().map(|&k| self.cross(j, k)).collect();
        let self_cross = self.cross(j, j);
        for (r, &v) in self.gram.iter_mut().zip(&row) {
            r.push(v);
        }
        let mut new_row = row;
        new_row.push(self_cross);
        // gradient of a new member from the current coefficients
        let mut g = self.q[j];
        for (pos, &k) in self.working.iter().enumerate() {
            if self.gamma[k] != F::zero() {
                g -= new_row[pos] * self.gamma[k];
            }
        }
        self.gram.push(new_row);
        self.grad.push(g);
        self.working.push(j);
        self.in_working[j] = true;
    }

    /// Coordinate descent restricted to the working set.
    fn sweep_working(&mut self, lambda: F) -> bool {
        let half_lambda = lambda / (F::one() + F::one());
        let m = self.working.len();
        for _ in 0..self.options.max_sweeps {
            let mut max_delta = F::zero();
            for a in 0..m {
                let j = self.working[a];
                let gjj = self.gram[a][a];
                let old = self.gamma[j];
                let rho = self.grad[a] + gjj * old;
                let new = soft_threshold(rho, half_lambda) / gjj;
                let delta = new - old;
                if delta != F::zero() {
                    self.gamma[j] = new;
                    for (b, g) in self.grad.iter_mut().enumerate() {
                        *g -= delta * self.gram[a][b];
                    }
                    max_delta = max_delta.max(delta.abs());
                }
            }
            if self.options.trace {
                self.refresh_residual();
                let rss: F = self.residual.iter().map(|&v| v * v).sum();
                let pen: F = self.gamma.iter().map(|g| g.abs()).sum();
                self.trace.push(rss + lambda * pen);
            }
            if max_delta <= self.tol {
                return true;
            }
        }
        false
    }

    fn refresh_residual(&mut self) {
        let p = self.problem;
        let mut shift = F::zero();
        self.residual.copy_from_slice(&self.centered_y);
        for &j in &self.working {
            let g = self.gamma[j];
            if g != F::zero() {
                let b = g / p.column_scales[j];
                shift += b * p.means[j];
                p.columns[j].add_scaled(-b, &mut self.residual);
            }
        }
        if shift != F::zero() {
            for r in self.residual.iter_mut() {
                *r += shift;
            }
        }
    }

    fn refresh_full_gradient(&mut self) {
        let p = self.problem;
        let sr = crate::scalar::sum(&self.residual);
        for &j in &self.usable {
            self.full_grad[j] = (p.columns[j].dot(&self.residual) - p.means[j] * sr) / p.column_scales[j];
        }
    }

    /// Solves at `lambda`, given the previous grid value for the strong rule.
    fn solve(&mut self, lambda: F, previous: F) -> bool {
        let two = F::one() + F::one();
        let threshold = two * lambda - previous;
        let candidates: Vec<usize> = self
            .usable
            .iter()
            .copied()
            .filter(|&j| !self.in_working[j] && two * self.full_grad[j].abs() >= threshold)
            .collect();
        for j in candidates {
            self.add_to_working(j);
        }
        self.trace.clear();
        let slack = lambda * F::lit(1e-9) + F::epsilon() * F::lit(1e3) * self.n;
        let mut converged;
        loop {
            converged = self.sweep_working(lambda);
            self.refresh_residual();
            self.refresh_full_gradient();
            let violators: Vec<usize> = self
                .usable
                .iter()
                .copied()
                .filter(|&j| !self.in_working[j] && two * self.full_grad[j].abs() > lambda + slack)
                .collect();
            if violators.is_empty() {
                break;
            }
            for j in violators {
                self.add_to_working(j);
            }
        }
        // keep the working-set gradients consistent with the fresh residual
        for (a, &j) in self.working.iter().enumerate() {
            self.grad[a] = self.full_grad[j];
        }
        let _ = self.sum_centered_y;
        converged
    }

    fn df(&self) -> usize {
        self.gamma.iter().filter(|g| **g != F::zero()).count()
    }

    fn snapshot(&self, lambda: F, converged: bool) -> LassoFit<F> {
        let p = self.problem;
        let n = p.n_obs();
        let coefficients: Vec<F> = self
            .gamma
            .iter()
            .zip(&p.column_scales)
            .enumerate()
            .map(|(j, (&g, &s))| if g == F::zero() || !self.in_working[j] { F::zero() } else { g / s })
            .collect();
        let ybar = crate::scalar::sum(p.response) / self.n;
        let mut intercept = ybar;
        for (j, &b) in coefficients.iter().enumerate() {
            if b != F::zero() {
                intercept -= b * p.means[j];
            }
        }
        let mut fitted = vec![intercept; n];
        for (j, &b) in coefficients.iter().enumerate() {
            if b != F::zero() {
                p.columns[j].add_scaled(b, &mut fitted);
            }
        }
        let residuals: Vec<F> = p.response.iter().zip(&fitted).map(|(&y, &f)| y - f).collect();
        let rss: F = residuals.iter().map(|&r| r * r).sum();
        let df = coefficients.iter().filter(|b| **b != F::zero()).count();
        LassoFit {
            coefficients,
            intercept,
            lambda,
            bic: bic(rss, n, df),
            rss,
            df,
            residuals,
            converged,
            path: Vec::new(),
            objective_trace: self.trace.clone(),
        }
    }
}

fn intercept_only<F: Scalar>(problem: &DesignProblem<'_, F>) -> LassoFit<F> {
    let n = problem.n_obs();
    let mean = crate::scalar::sum(problem.response) / F::from_count(n);
    let residuals: Vec<F> = problem.response.iter().map(|&y| y - mean).collect();
    let rss: F = residuals.iter().map(|&r| r * r).sum();
    LassoFit {
        coefficients: vec![F::zero(); problem.n_columns()],
        intercept: mean,
        lambda: F::zero(),
        bic: bic(rss, n, 0),
        rss,
        df: 0,
        residuals,
        converged: true,
        path: Vec::new(),
        objective_trace: Vec::new(),
    }
}

fn response_is_constant<F: Scalar>(y: &[F]) -> bool {
    y.iter().all(|&v| v == y[0])
}

/// Smallest penalty with an all-zero solution.
pub fn lambda_max<F: Scalar>(problem: &DesignProblem<'_, F>) -> F {
    Solver::new(problem, LassoOptions::default()).lambda_max()
}

/// Lasso solution at one fixed penalty.
pub fn fit_lambda<F: Scalar>(problem: &DesignProblem<'_, F>, lambda: F, options: LassoOptions) -> Result<LassoFit<F>> {
    if !(lambda >= F::zero()) || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    if response_is_constant(problem.response) {
        return Ok(intercept_only(problem));
    }
    let mut solver = Solver::new(problem, options);
    let lmax = solver.lambda_max();
    if lambda >= lmax {
        let mut fit = solver.snapshot(lambda, true);
        fit.path.push(PathPoint {
            lambda: lambda.as_f64(),
            df: 0,
            rss: fit.rss.as_f64(),
            bic: fit.bic.as_f64(),
        });
        return Ok(fit);
    }
    let converged = solver.solve(lambda, lmax);
    let mut fit = solver.snapshot(lambda, converged);
    fit.path.push(PathPoint {
        lambda: lambda.as_f64(),
        df: fit.df,
        rss: fit.rss.as_f64(),
        bic: fit.bic.as_f64(),
    });
    Ok(fit)
}

/// Runs the warm-started path and returns the BIC-minimising fit.
pub fn fit_path<F: Scalar>(problem: &DesignProblem<'_, F>, grid: &LambdaGrid, options: LassoOptions) -> Result<LassoFit<F>> {
    if response_is_constant(problem.response) {
        return Ok(intercept_only(problem));
    }
    let mut solver = Solver::new(problem, options);
    let lmax = solver.lambda_max();
    if !(lmax > F::zero()) {
        return Ok(intercept_only(problem));
    }
    let lambdas = grid.values(lmax);
    let n = problem.n_obs();
    let mut path = Vec::with_capacity(lambdas.len());
    let mut best: Option<LassoFit<F>> = None;
    let mut since_best = 0usize;
    let mut previous = lmax;
    let last = lambdas.len() - 1;
    // a fit still improving at the end of the grid is continued to the
    // unpenalised limit
    let lambdas = lambdas.iter().copied().chain(std::iter::once(F::zero()));
    for (k, lambda) in lambdas.enumerate() {
        if k > last && since_best > 0 {
            break;
        }
        let converged = if k == 0 { true } else { solver.solve(lambda, previous) };
        previous = lambda;
        let df = solver.df();
        let fit = solver.snapshot(lambda, converged);
        path.push(PathPoint {
            lambda: lambda.as_f64(),
            df,
            rss: fit.rss.as_f64(),
            bic: fit.bic.as_f64(),
        });
        let improves = match &best {
            None => true,
            Some(b) => fit.bic < b.bic,
        };
        if improves {
            best = Some(fit);
            since_best = 0;
        } else {
            since_best += 1;
        }
        if let Some(patience) = grid.patience {
            if since_best >= patience {
                break;
            }
        }
        if df + 1 >= n {
            break;
        }
    }
    let mut best = best.expect("grid has at least one point");
    best.path = path;
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(5.0, 2.0), 3.0);
        assert_eq!(soft_threshold(-1.0, 2.0), 0.0);
        assert_eq!(soft_threshold(-5.0, 2.0), -3.0);
        assert_eq!(soft_threshold(2.0f32, 2.0), 0.0);
    }

    #[test]
    fn bic_cases() {
        assert_eq!(bic(50.0, 50, 0), 0.0);
        assert!((bic(100.0f64, 100, 2) - 2.0 * 100f64.ln()).abs() < 1e-12);
        assert!((bic(100.0f64, 100, 2) - 9.2103).abs() < 1e-4);
        let k = 3;
        assert!((bic(10.0f64, 40, 2 * k) - bic(10.0, 40, k) - k as f64 * 40f64.ln()).abs() < 1e-12);
        assert_eq!(bic(0.0, 10, 1), f64::NEG_INFINITY);
    }

    fn random_problem(seed: u64, n: usize, p: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect()).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| 1.0 + 2.0 * cols[0][i] - 3.0 * cols[1 % p][i] + 0.1 * (rng.random::<f64>() - 0.5))
            .collect();
        (y, cols)
    }

    #[test]
    fn large_lambda_gives_zero_solution() {
        let (y, cols) = random_problem(1, 60, 5);
        let prob = DesignProblem::new(&y, cols.iter().map(|c| Column::Dense(c)).collect()).unwrap();
        let lmax = lambda_max(&prob);
        let fit = fit_lambda(&prob, lmax * 1.5, LassoOptions::default()).unwrap();
        assert!(fit.coefficients.iter().all(|&b| b == 0.0));
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        assert!((fit.intercept - mean).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_column_is_screened() {
        let (y, mut cols) = random_problem(2, 40, 3);
        cols.push(vec![4.0; 40]);
        let prob = DesignProblem::new(&y, cols.iter().map(|c| Column::Dense(c)).collect()).unwrap();
        let fit = fit_path(&prob, &LambdaGrid::default(), LassoOptions::default()).unwrap();
        assert_eq!(fit.coefficients[3], 0.0);
        assert!(fit.coefficients[0] != 0.0);
    }

    #[test]
    fn constant_response_gives_intercept_only() {
        let y = vec![3.5; 20];
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let prob = DesignProblem::new(&y, vec![Column::Dense(&x)]).unwrap();
        let fit = fit_path(&prob, &LambdaGrid::default(), LassoOptions::default()).unwrap();
        assert_eq!(fit.intercept, 3.5);
        assert_eq!(fit.coefficients, vec![0.0]);
        assert_eq!(fit.bic, f64::NEG_INFINITY);
    }

    #[test]
    fn rejects_bad_inputs() {
        let y = vec![1.0, f64::NAN, 2.0];
        let x = vec![1.0, 2.0, 3.0];
        assert!(matches!(DesignProblem::new(&y, vec![Column::Dense(&x)]), Err(Error::NonFinite(_))));
        let y = vec![1.0, 2.0, 3.0];
        let short = vec![1.0, 2.0];
        assert!(matches!(
            DesignProblem::new(&y, vec![Column::Dense(&short)]),
            Err(Error::DimensionMismatch { .. })
        ));
        let one = vec![1.0];
        assert!(DesignProblem::new(&one, vec![]).is_err());
    }

    #[test]
    fn residuals_are_response_minus_fitted() {
        let (y, cols) = random_problem(3, 80, 6);
        let prob = DesignProblem::new(&y, cols.iter().map(|c| Column::Dense(c)).collect()).unwrap();
        let fit = fit_path(&prob, &LambdaGrid::default(), LassoOptions::default()).unwrap();
        let fitted = fit.fitted(&prob);
        for i in 0..y.len() {
            assert_eq!(fit.residuals[i], y[i] - fitted[i]);
        }
    }

    #[test]
    fn kkt_holds_at_selected_solution() {
        let (y, cols) = random_problem(4, 120, 12);
        let prob = DesignProblem::new(&y, cols.iter().map(|c| Column::Dense(c)).collect()).unwrap();
        let fit = fit_path(&prob, &LambdaGrid::full(), LassoOptions::default()).unwrap();
        let sr: f64 = fit.residuals.iter().sum();
        for j in 0..cols.len() {
            let s = prob.column_scales()[j];
            let m = prob.column_means()[j];
            let g = 2.0 * (Column::Dense(&cols[j]).dot(&fit.residuals) - m * sr) / s;
            if fit.coefficients[j] == 0.0 {
                assert!(g.abs() <= fit.lambda * (1.0 + 1e-6) + 1e-8, "col {j}: {g} > {}", fit.lambda);
            } else {
                let want = fit.lambda * fit.coefficients[j].signum();
                assert!((g - want).abs() <= 1e-4 * (1.0 + fit.lambda), "col {j}: {g} vs {want}");
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let (y, cols) = random_problem(5, 100, 4);
        let y32: Vec<f32> = y.iter().map(|&v| v as f32).collect();
        let c32: Vec<Vec<f32>> = cols.iter().map(|c| c.iter().map(|&v| v as f32).collect()).collect();
        let prob = DesignProblem::new(&y32, c32.iter().map(|c| Column::Dense(c)).collect()).unwrap();
        let opts = LassoOptions {
            tolerance: 1e-5,
            ..LassoOptions::default()
        };
        let fit = fit_path(&prob, &LambdaGrid::default(), opts).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 0.1);
        assert!((fit.coefficients[1] + 3.0).abs() < 0.1);
    }
}
