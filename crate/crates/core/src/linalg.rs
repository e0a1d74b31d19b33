//! Dense kernels over row-major matrices.
//!
//! `A` is stored row-major, so `Aᵀr` is accumulated as a sum of scaled rows
//! rather than through strided column dot products.

use ndarray::{Array1, ArrayView1, ArrayView2, Zip};

pub fn norm(x: ArrayView1<f64>) -> f64 {
    x.dot(&x).sqrt()
}

pub fn norm_sq(x: ArrayView1<f64>) -> f64 {
    x.dot(&x)
}

pub fn norm_l1(x: ArrayView1<f64>) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

pub fn dist(x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
    Zip::from(x)
        .and(y)
        .fold(0.0, |acc, &a, &b| acc + (a - b) * (a - b))
        .sqrt()
}

pub fn all_finite(x: ArrayView1<f64>) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// `A x`.
pub fn mat_vec(a: ArrayView2<f64>, x: ArrayView1<f64>) -> Array1<f64> {
    debug_assert_eq!(a.ncols(), x.len());
    a.rows().into_iter().map(|row| row.dot(&x)).collect()
}

/// `Aᵀ r`.
pub fn mat_t_vec(a: ArrayView2<f64>, r: ArrayView1<f64>) -> Array1<f64> {
    debug_assert_eq!(a.nrows(), r.len());
    let mut out = Array1::zeros(a.ncols());
    for (row, &ri) in a.rows().into_iter().zip(r.iter()) {
        if ri != 0.0 {
            out.scaled_add(ri, &row);
        }
    }
    out
}

/// `AᵀA x` through two passes over `A`.
pub fn gram_vec(a: ArrayView2<f64>, x: ArrayView1<f64>) -> Array1<f64> {
    mat_t_vec(a, mat_vec(a, x).view())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn kernels_match_ndarray_dot() {
        let a = array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]];
        let x = array![1.0, -1.0, 2.0];
        let r = array![0.5, -2.0];
        assert_eq!(mat_vec(a.view(), x.view()), a.dot(&x));
        assert_eq!(mat_t_vec(a.view(), r.view()), a.t().dot(&r));
        assert_eq!(gram_vec(a.view(), x.view()), a.t().dot(&a.dot(&x)));
    }

    #[test]
    fn norms() {
        let x = array![3.0, -4.0];
        assert_eq!(norm(x.view()), 5.0);
        assert_eq!(norm_sq(x.view()), 25.0);
        assert_eq!(norm_l1(x.view()), 7.0);
        assert_eq!(dist(x.view(), array![0.0, 0.0].view()), 5.0);
    }
}
