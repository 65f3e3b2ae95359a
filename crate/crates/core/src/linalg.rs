//! Dense Hermitian helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Eigen-decomposition G = V·diag(λ)·V† of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(g: &CMatrix) -> Self {
        let eig = SymmetricEigen::new(g.clone());
        HermitianEigen {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }

    /// exp(−i·s·G).
    pub fn exp_minus_i(&self, scale: f64) -> CMatrix {
        let v = &self.vectors;
        let n = v.nrows();
        let phases: Vec<Complex64> = self
            .values
            .iter()
            .map(|&l| Complex64::from_polar(1.0, -scale * l))
            .collect();
        let mut scaled = v.clone();
        for j in 0..n {
            for r in 0..n {
                scaled[(r, j)] *= phases[j];
            }
        }
        scaled * v.adjoint()
    }

    /// exp(−i·s·G)·ψ without forming the matrix.
    pub fn apply_exp_minus_i(&self, scale: f64, psi: &CVector) -> CVector {
        let mut coeffs = self.vectors.ad_mul(psi);
        for (c, &l) in coeffs.iter_mut().zip(&self.values) {
            *c *= Complex64::from_polar(1.0, -scale * l);
        }
        &self.vectors * coeffs
    }

    /// Divided differences of f(λ) = e^{−iλ}, the kernel of the Fréchet
    /// derivative of exp(−iG) in the eigenbasis.
    pub fn exp_derivative_kernel(&self) -> CMatrix {
        let n = self.values.len();
        CMatrix::from_fn(n, n, |j, k| {
            let (a, b) = (self.values[j], self.values[k]);
            let half = 0.5 * (a - b);
            let sinc = if half.abs() < 1e-8 {
                1.0 - half * half / 6.0
            } else {
                half.sin() / half
            };
            -I * Complex64::from_polar(sinc, -0.5 * (a + b))
        })
    }
}

/// max |A_ij − A_ji*|.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((a[(r, c)] - a[(c, r)].conj()).norm());
        }
    }
    worst
}

/// max |(U†U − 1)_ij|.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    let prod = u.ad_mul(u);
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in 0..n {
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((prod[(r, c)] - target).norm());
        }
    }
    worst
}
