//! Borrowed design columns, dense or sparse.

use crate::scalar::{dot, sum, Scalar};

/// One design column borrowed from wherever the data lives.
///
/// Lagged regressors are plain shifted slices of the underlying series, so
/// they are passed as `Dense` without copying. Calendar indicators are
/// mostly zero and are passed as `Sparse` (sorted row indices with values).
#[derive(Debug, Clone, Copy)]
pub enum Column<'a, F> {
    Dense(&'a [F]),
    Sparse {
        len: usize,
        rows: &'a [u32],
        values: &'a [F],
    },
}

impl<'a, F: Scalar> Column<'a, F> {
    pub fn len(&self) -> usize {
        match self {
            Column::Dense(v) => v.len(),
            Column::Sparse { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sum(&self) -> F {
        match self {
            Column::Dense(v) => sum(v),
            Column::Sparse { values, .. } => sum(values),
        }
    }

    pub fn all_finite(&self) -> bool {
        match self {
            Column::Dense(v) => v.iter().all(|x| x.is_finite()),
            Column::Sparse { values, .. } => values.iter().all(|x| x.is_finite()),
        }
    }

    /// `Σ (x_i - mean)^2`
    pub fn centered_sum_sq(&self, mean: F) -> F {
        match self {
            Column::Dense(v) => v.iter().map(|&x| (x - mean) * (x - mean)).sum(),
            Column::Sparse { len, rows, values } => {
                let nnz: F = values.iter().map(|&x| (x - mean) * (x - mean)).sum();
                nnz + F::from_count(len - rows.len()) * mean * mean
            }
        }
    }

    /// `Σ x_i r_i`
    pub fn dot(&self, r: &[F]) -> F {
        match self {
            Column::Dense(v) => dot(v, r),
            Column::Sparse { rows, values, .. } => rows
                .iter()
                .zip(values.iter())
                .map(|(&i, &x)| x * r[i as usize])
                .sum(),
        }
    }

    /// `out += alpha * x`
    pub fn add_scaled(&self, alpha: F, out: &mut [F]) {
        match self {
            Column::Dense(v) => {
                for (o, &x) in out.iter_mut().zip(v.iter()) {
                    *o += alpha * x;
                }
            }
            Column::Sparse { rows, values, .. } => {
                for (&i, &x) in rows.iter().zip(values.iter()) {
                    out[i as usize] += alpha * x;
                }
            }
        }
    }

    /// `Σ (x_i - mx)(y_i - my)` computed without forming either centered column.
    ///
    /// `cy` is `Σ (y_i - my)` (zero in exact arithmetic, kept for accuracy).
    pub fn centered_cross(&self, mx: F, other: &Column<'_, F>, my: F, cx: F, cy: F) -> F {
        match (self, other) {
            (Column::Dense(a), Column::Dense(b)) => a
                .iter()
                .zip(b.iter())
                .map(|(&x, &y)| (x - mx) * (y - my))
                .sum(),
            (Column::Sparse { rows, values, .. }, Column::Dense(b)) => {
                let s: F = rows
                    .iter()
                    .zip(values.iter())
                    .map(|(&i, &x)| x * (b[i as usize] - my))
                    .sum();
                s - mx * cy
            }
            (Column::Dense(_), Column::Sparse { .. }) => other.centered_cross(my, self, mx, cy, cx),
            (
                Column::Sparse {
                    len,
                    rows: ra,
                    values: va,
                },
                Column::Sparse {
                    rows: rb, values: vb, ..
                },
            ) => {
                // Σ x y over shared rows, then expand the centering.
                let (mut i, mut j) = (0, 0);
                let mut sxy = F::zero();
                while i < ra.len() && j < rb.len() {
                    match ra[i].cmp(&rb[j]) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            sxy += va[i] * vb[j];
                            i += 1;
                            j += 1;
                        }
                    }
                }
                let sx = sum(va);
                let sy = sum(vb);
                sxy - my * sx - mx * sy + F::from_count(*len) * mx * my
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn densify(c: &Column<'_, f64>) -> Vec<f64> {
        let mut out = vec![0.0; c.len()];
        c.add_scaled(1.0, &mut out);
        out
    }

    #[test]
    fn sparse_and_dense_agree() {
        let rows = [1u32, 4, 5];
        let vals = [2.0, -1.0, 3.0];
        let sp = Column::Sparse {
            len: 7,
            rows: &rows,
            values: &vals,
        };
        let dense_v = densify(&sp);
        let de = Column::Dense(&dense_v);
        let r = [0.5, 1.0, -2.0, 3.0, 0.25, 1.5, -1.0];
        assert!((sp.dot(&r) - de.dot(&r)).abs() < 1e-12);
        let m = sp.sum() / 7.0;
        assert!((sp.centered_sum_sq(m) - de.centered_sum_sq(m)).abs() < 1e-12);

        let other_v = [1.0, 0.0, 2.0, 2.0, -3.0, 1.0, 0.5];
        let other = Column::Dense(&other_v[..]);
        let mo = other.sum() / 7.0;
        let co: f64 = other_v.iter().map(|x| x - mo).sum();
        let cs: f64 = dense_v.iter().map(|x| x - m).sum();
        let a = sp.centered_cross(m, &other, mo, cs, co);
        let b = de.centered_cross(m, &other, mo, cs, co);
        let c = other.centered_cross(mo, &sp, m, co, cs);
        assert!((a - b).abs() < 1e-12 && (a - c).abs() < 1e-12);

        let rows2 = [0u32, 4, 6];
        let vals2 = [1.0, 1.0, 2.0];
        let sp2 = Column::Sparse {
            len: 7,
            rows: &rows2,
            values: &vals2,
        };
        let d2 = densify(&sp2);
        let m2 = sp2.sum() / 7.0;
        let c2: f64 = d2.iter().map(|x| x - m2).sum();
        let ss = sp.centered_cross(m, &sp2, m2, cs, c2);
        let dd = de.centered_cross(m, &Column::Dense(&d2), m2, cs, c2);
        assert!((ss - dd).abs() < 1e-12);
    }
}
