//! Small dense complex helpers shared by the channel, signal and optimizer code.

use crate::{CMatrix, CVector, C64};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// `|a^H b|²`
pub fn inner_sq(a: &CVector, b: &CVector) -> f64 {
    a.dotc(b).norm_sqr()
}

/// `v v^H`
pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Circularly-symmetric complex Gaussian sample with `E|x|² = variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(s * re, s * im)
}

/// Largest entry-wise deviation from Hermitian symmetry.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenpairs of a Hermitian matrix, eigenvalues in descending order.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

/// Real part of `tr(A B)` for Hermitian `A`, `B` of equal size.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}
