#![allow(clippy::needless_range_loop)]

use epsim::lasso::{fit_lambda, fit_path, lambda_max, Column, DesignProblem, LambdaGrid, LassoOptions};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_problem(rng: &mut ChaCha8Rng, n: usize, p: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let cols: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
        .collect();
    let beta: Vec<f64> = (0..p).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
    let y = (0..n)
        .map(|i| 0.5 + (0..p).map(|j| beta[j] * cols[j][i]).sum::<f64>() + 0.3 * (rng.random::<f64>() - 0.5))
        .collect();
    (y, cols)
}

fn normal_equations(y: &[f64], cols: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let n = y.len();
    let p = cols.len();
    let x = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { cols[j - 1][i] });
    let yv = DVector::from_column_slice(y);
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * yv;
    let b = xtx.cholesky().expect("full rank").solve(&xty);
    (b[0], b.iter().skip(1).copied().collect())
}

#[test]
fn unpenalized_limit_matches_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let opts = LassoOptions {
        tolerance: 1e-12,
        max_sweeps: 100_000,
        ..LassoOptions::default()
    };
    for _ in 0..10 {
        let (y, cols) = random_problem(&mut rng, 200, 20);
        let prob = DesignProblem::new(&y, cols.iter().map(|c| Column::Dense(c)).collect()).unwrap();
        let fit = fit_lambda(&prob, 0.0, opts).unwrap();
        let (a, b) = normal_equations(&y, &cols);
        for j in 0..b.len() {
            assert!((fit.coefficients[j] - b[j]).abs() <= 1e-6 * b[j].abs().max(1e-3), "{j}");
        }
        assert!((fit.intercept - a).abs() <= 1e-6 * a.abs().max(1e-3));
    }
}

#[test]
fn three_column_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (y, cols) = random_problem(&mut rng, 50, 3);
    let prob = DesignProblem::new(&y, cols.iter().map(|c| Column::Dense(c)).collect()).unwrap();
    let opts = LassoOptions {
        tolerance: 1e-13,
        max_sweeps: 100_000,
        ..LassoOptions::default()
    };
    let fit = fit_lambda(&prob, 0.0, opts).unwrap();
    let (_, b) = normal_equations(&y, &cols);
    for j in 0..3 {
        assert!(((fit.coefficients[j] - b[j]) / b[j]).abs() < 1e-6);
    }
}

/// Objective `||y - a - X b||^2 + lambda * sum s_j |b_j|` with the
/// intercept profiled out, evaluated from sufficient statistics.
struct Quadratic {
    yy: f64,
    xy: [f64; 2],
    xx: [[f64; 2]; 2],
    s: [f64; 2],
}

impl Quadratic {
    fn new(y: &[f64], x: [&[f64]; 2]) -> Self {
        let n = y.len() as f64;
        let my = y.iter().sum::<f64>() / n;
        let m = [x[0].iter().sum::<f64>() / n, x[1].iter().sum::<f64>() / n];
        let c = |v: &[f64], mv: f64, w: &[f64], mw: f64| v.iter().zip(w).map(|(a, b)| (a - mv) * (b - mw)).sum::<f64>();
        let xx = [
            [c(x[0], m[0], x[0], m[0]), c(x[0], m[0], x[1], m[1])],
            [c(x[1], m[1], x[0], m[0]), c(x[1], m[1], x[1], m[1])],
        ];
        Self {
            yy: c(y, my, y, my),
            xy: [c(x[0], m[0], y, my), c(x[1], m[1], y, my)],
            s: [(xx[0][0] / n).sqrt(), (xx[1][1] / n).sqrt()],
            xx,
        }
    }

    fn eval(&self, b: [f64; 2], lambda: f64) -> f64 {
        let quad = b[0] * b[0] * self.xx[0][0] + 2.0 * b[0] * b[1] * self.xx[0][1] + b[1] * b[1] * self.xx[1][1];
        self.yy - 2.0 * (b[0] * self.xy[0] + b[1] * self.xy[1]) + quad + lambda * (self.s[0] * b[0].abs() + self.s[1] * b[1].abs())
    }

    fn grid_argmin(&self, lambda: f64, centre: [f64; 2], half: f64, steps: usize) -> [f64; 2] {
        let mut best = (f64::INFINITY, centre);
        for i in 0..=steps {
            for k in 0..=steps {
                let b = [
                    centre[0] - half + 2.0 * half * i as f64 / steps as f64,
                    centre[1] - half + 2.0 * half * k as f64 / steps as f64,
                ];
                let v = self.eval(b, lambda);
                if v < best.0 {
                    best = (v, b);
                }
            }
        }
        best.1
    }
}

#[test]
fn orthonormal_two_column_matches_grid_search() {
    let x1 = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
    let x2 = [1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0];
    let x3 = [1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0];
    let y: Vec<f64> = (0..8).map(|i| 2.0 + 3.0 * x1[i] + 0.3 * x3[i]).collect();
    let lambda = 1.0;

    let q = Quadratic::new(&y, [&x1, &x2]);
    let coarse = q.grid_argmin(lambda, [3.0, 0.0], 1.0, 2000);
    let fine = q.grid_argmin(lambda, coarse, 2e-3, 400);

    let prob = DesignProblem::new(&y, vec![Column::Dense(&x1), Column::Dense(&x2)]).unwrap();
    let fit = fit_lambda(&prob, lambda, LassoOptions::default()).unwrap();
    assert!((fit.coefficients[0] - fine[0]).abs() < 2e-5, "{} vs {}", fit.coefficients[0], fine[0]);
    assert!((fit.coefficients[1] - fine[1]).abs() < 2e-5);
    assert_eq!(fit.coefficients[1], 0.0);
    assert!((fit.intercept - 2.0).abs() < 1e-12);
}

#[test]
fn objective_never_increases_between_sweeps() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let opts = LassoOptions {
        trace: true,
        ..LassoOptions::default()
    };
    for _ in 0..10 {
        let (y, cols) = random_problem(&mut rng, 120, 15);
        let prob = DesignProblem::new(&y, cols.iter().map(|c| Column::Dense(c)).collect()).unwrap();
        let lmax = lambda_max(&prob);
        for frac in [0.5, 0.1, 0.01, 0.0] {
            let fit = fit_lambda(&prob, lmax * frac, opts).unwrap();
            for w in fit.objective_trace.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{} -> {}", w[0], w[1]);
            }
        }
    }
}

#[test]
fn active_set_weakly_shrinks_with_lambda() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (y, cols) = random_problem(&mut rng, 150, 30);
    let prob = DesignProblem::new(&y, cols.iter().map(|c| Column::Dense(c)).collect()).unwrap();
    let fit = fit_path(&prob, &LambdaGrid::full(), LassoOptions::default()).unwrap();
    // one extra unpenalised point when the BIC is still falling at the grid end
    assert!(fit.path.len() == 100 || fit.path.len() == 101);
    let df: Vec<usize> = fit.path.iter().map(|p| p.df).collect();
    let violations = df.windows(2).filter(|w| w[1] < w[0]).count();
    assert_eq!(violations, 0, "{df:?}");
    let min = fit.path.iter().map(|p| p.bic).fold(f64::INFINITY, f64::min);
    assert_eq!(min, fit.bic);
}

#[test]
fn early_stop_selects_same_model_as_full_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..5 {
        let (y, cols) = random_problem(&mut rng, 200, 25);
        let prob = DesignProblem::new(&y, cols.iter().map(|c| Column::Dense(c)).collect()).unwrap();
        let a = fit_path(&prob, &LambdaGrid::default(), LassoOptions::default()).unwrap();
        let b = fit_path(&prob, &LambdaGrid::full(), LassoOptions::default()).unwrap();
        assert_eq!(a.df, b.df);
        assert!((a.bic - b.bic).abs() < 1e-9 * b.bic.abs().max(1.0));
    }
}

#[test]
fn sparse_columns_match_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 300;
    let rows: Vec<Vec<u32>> = (0..4).map(|k| (0..n as u32).filter(|i| i % 7 == k).collect()).collect();
    let ones: Vec<Vec<f64>> = rows.iter().map(|r| vec![1.0; r.len()]).collect();
    let dense: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![0.0; n];
            for &i in r {
                v[i as usize] = 1.0;
            }
            v
        })
        .collect();
    let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| x[i] * 2.0 + dense[0][i] * 3.0 - dense[2][i] + 0.1 * rng.random::<f64>())
        .collect();
    let mut sp = vec![Column::Dense(&x[..])];
    let mut de = vec![Column::Dense(&x[..])];
    for k in 0..4 {
        sp.push(Column::Sparse {
            len: n,
            rows: &rows[k],
            values: &ones[k],
        });
        de.push(Column::Dense(&dense[k]));
    }
    let a = fit_path(&DesignProblem::new(&y, sp).unwrap(), &LambdaGrid::default(), LassoOptions::default()).unwrap();
    let b = fit_path(&DesignProblem::new(&y, de).unwrap(), &LambdaGrid::default(), LassoOptions::default()).unwrap();
    assert_eq!(a.df, b.df);
    for j in 0..5 {
        assert!((a.coefficients[j] - b.coefficients[j]).abs() < 1e-9);
    }
}
