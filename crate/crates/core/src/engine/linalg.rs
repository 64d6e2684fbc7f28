//! Small dense kernels used by the preprocessing operators.

use crate::scalar::Scalar;

pub fn mean<S: Scalar>(xs: &[S]) -> S {
    if xs.is_empty() {
        return S::zero();
    }
    xs.iter().copied().sum::<S>() / S::of_usize(xs.len())
}

/// Population standard deviation (divisor `n`).
pub fn population_std<S: Scalar>(xs: &[S]) -> S {
    if xs.is_empty() {
        return S::zero();
    }
    let m = mean(xs);
    let var = xs.iter().map(|&x| (x - m) * (x - m)).sum::<S>() / S::of_usize(xs.len());
    var.sqrt()
}

pub fn median<S: Scalar>(xs: &[S]) -> S {
    if xs.is_empty() {
        return S::zero();
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / S::lit(2.0)
    }
}

/// Sample covariance matrix (divisor `n - 1`, or `n` for a single row) of
/// row-major data, with the column means.
pub fn covariance<S: Scalar>(rows: &[Vec<S>]) -> (Vec<Vec<S>>, Vec<S>) {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    let means: Vec<S> = (0..d)
        .map(|j| mean(&rows.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .collect();
    let denom = S::of_usize(if n > 1 { n - 1 } else { n.max(1) });
    let mut cov = vec![vec![S::zero(); d]; d];
    for i in 0..d {
        for j in i..d {
            let s = rows
                .iter()
                .map(|r| (r[i] - means[i]) * (r[j] - means[j]))
                .sum::<S>()
                / denom;
            cov[i][j] = s;
            cov[j][i] = s;
        }
    }
    (cov, means)
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues sorted non-increasing and the matching unit
/// eigenvectors as rows. Each eigenvector is signed so that its largest
/// magnitude entry is positive.
#[allow(clippy::needless_range_loop)]
pub fn symmetric_eigen<S: Scalar>(matrix: &[Vec<S>]) -> (Vec<S>, Vec<Vec<S>>) {
    let n = matrix.len();
    let mut a: Vec<Vec<S>> = matrix.to_vec();
    let mut v: Vec<Vec<S>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { S::one() } else { S::zero() })
                .collect()
        })
        .collect();
    let two = S::lit(2.0);

    let scale = a
        .iter()
        .flatten()
        .fold(S::zero(), |acc, &x| acc + x * x)
        .sqrt()
        .max(S::min_positive_value());
    let tol = S::epsilon() * scale;

    for _sweep in 0..100 {
        let mut off = S::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off + a[i][j] * a[i][j];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() <= S::min_positive_value() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (two * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + S::one()).sqrt());
                let c = S::one() / (t * t + S::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep their original index order
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).expect("finite eigenvalues"));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut col: Vec<S> = (0..n).map(|k| v[k][i]).collect();
            let lead =
                col.iter().copied().fold(
                    S::zero(),
                    |best, x| if x.abs() > best.abs() { x } else { best },
                );
            if lead < S::zero() {
                col.iter_mut().for_each(|x| *x = -*x);
            }
            col
        })
        .collect();
    (values, vectors)
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn population_std_of_1_2_3() {
        assert_abs_diff_eq!(
            population_std(&[1.0, 2.0, 3.0]),
            (2.0f64 / 3.0).sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn eigen_of_known_matrix() {
        // [[2,1],[1,2]] has eigenvalues 3 and 1 with vectors (1,1)/√2, (1,-1)/√2
        let (vals, vecs) = symmetric_eigen::<f64>(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert_abs_diff_eq!(vals[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 1.0, epsilon = 1e-12);
        let h = 0.5f64.sqrt();
        assert_abs_diff_eq!(vecs[0][0].abs(), h, epsilon = 1e-12);
        assert_abs_diff_eq!(vecs[0][1].abs(), h, epsilon = 1e-12);
        assert_abs_diff_eq!(dot(&vecs[0], &vecs[1]), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let m = vec![
            vec![4.0, 1.0, -2.0, 0.5],
            vec![1.0, 3.0, 0.0, 1.5],
            vec![-2.0, 0.0, 5.0, -1.0],
            vec![0.5, 1.5, -1.0, 2.0],
        ];
        let (vals, vecs) = symmetric_eigen(&m);
        for w in vals.windows(2) {
            assert!(w[0] >= w[1]);
        }
        for i in 0..4 {
            for j in 0..4 {
                let r: f64 = (0..4).map(|k| vals[k] * vecs[k][i] * vecs[k][j]).sum();
                assert_abs_diff_eq!(r, m[i][j], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn eigen_in_f32() {
        let (vals, _) = symmetric_eigen(&[vec![2.0f32, 0.0], vec![0.0, 5.0]]);
        assert_eq!(vals, vec![5.0f32, 2.0]);
    }
}
