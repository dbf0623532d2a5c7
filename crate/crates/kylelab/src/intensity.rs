//! Information intensity of the insider's signal.
//!
//! The Gram matrix of noise-adjusted payoff densities,
//!
//! ```text
//! L^2 = [ integral eta(x, s_i) eta(x, s_j) / sigma^2 dx ]_{i,j}
//! ```
//!
//! its positive-semidefinite square root `L`, and the Moore-Penrose
//! pseudoinverse `L^-1` drive the whitening `d -> L d` that reduces the
//! trading game to its canonical form and scale the informed demand.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::SignalModel;

/// Relative eigenvalue cutoff applied to the largest eigenvalue.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;

/// Gram matrix, PSD square root, and pseudoinverse for one signal model.
#[derive(Debug, Clone)]
pub struct IntensityMatrix {
    /// `L^2`.
    pub gram: DMatrix<f64>,
    /// `L`, the PSD square root.
    pub sqrt: DMatrix<f64>,
    /// Moore-Penrose pseudoinverse of `L`; the true inverse at full rank.
    pub pinv: DMatrix<f64>,
    pub rank: usize,
    /// Absolute eigenvalue cutoff used (relative tol times largest
    /// eigenvalue of the Gram matrix).
    pub eigen_tol: f64,
}

impl IntensityMatrix {
    /// Build from a model with constant noise intensity.
    pub fn from_model(model: &SignalModel) -> Result<Self> {
        Self::build(gram_matrix(model, false)?)
    }

    /// Build allowing per-state noise intensity (inference-only
    /// experiments; the equilibrium reduction requires constant sigma).
    pub fn from_model_varying_sigma(model: &SignalModel) -> Result<Self> {
        Self::build(gram_matrix(model, true)?)
    }

    fn build(gram: DMatrix<f64>) -> Result<Self> {
        let max_eig = symmetric_eigenvalue_max(&gram);
        let eigen_tol = DEFAULT_EIGEN_TOL * max_eig.max(f64::MIN_POSITIVE);
        let sqrt = matrix_sqrt(&gram, eigen_tol)?;
        let (pinv, rank) = pseudo_inverse(&sqrt, eigen_tol.sqrt());
        Ok(Self { gram, sqrt, pinv, rank, eigen_tol })
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }
}

/// `[ integral eta_i eta_j / sigma^2 dx ]` via trapezoid quadrature.
///
/// Varying noise intensity is rejected unless `allow_varying_sigma` is set:
/// the canonical-game reduction is only valid for constant sigma.
pub fn gram_matrix(model: &SignalModel, allow_varying_sigma: bool) -> Result<DMatrix<f64>> {
    if !model.noise.is_constant() && !allow_varying_sigma {
        return Err(Error::VaryingSigma);
    }
    let count = model.signal_count();
    let n = model.grid.n;
    let mut g = DMatrix::zeros(count, count);
    let mut prod = vec![0.0; n];
    for i in 0..count {
        for j in i..count {
            for k in 0..n {
                let s = model.noise.at(k);
                prod[k] = model.densities[i][k] * model.densities[j][k] / (s * s);
            }
            let v = model.grid.trapezoid(&prod);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

fn symmetric_eigenvalue_max(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .fold(0.0f64, |a, &b| a.max(b))
}

/// Symmetric PSD square root via eigendecomposition.
///
/// Eigenvalues in `[-eigen_tol, 0)` are clipped to zero; anything below
/// `-eigen_tol` signals a numerically broken Gram computation and is an
/// error.
pub fn matrix_sqrt(gram: &DMatrix<f64>, eigen_tol: f64) -> Result<DMatrix<f64>> {
    check_symmetric(gram)?;
    let eig = SymmetricEigen::new(gram.clone());
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        if *v < -eigen_tol {
            return Err(Error::NotPsd(*v));
        }
        *v = v.max(0.0).sqrt();
    }
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&vals) * v.transpose())
}

/// Moore-Penrose pseudoinverse of a symmetric PSD matrix; equals the true
/// inverse at full rank. Returns the matrix and its numerical rank.
pub fn pseudo_inverse(sqrt: &DMatrix<f64>, eigen_tol: f64) -> (DMatrix<f64>, usize) {
    let eig = SymmetricEigen::new(sqrt.clone());
    let mut vals = eig.eigenvalues.clone();
    let mut rank = 0;
    for v in vals.iter_mut() {
        if *v > eigen_tol {
            rank += 1;
            *v = 1.0 / *v;
        } else {
            *v = 0.0;
        }
    }
    let v = &eig.eigenvectors;
    (v * DMatrix::from_diagonal(&vals) * v.transpose(), rank)
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    let scale = m.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1.0);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::DimensionMismatch(format!(
                    "matrix not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_signal_model, DistributionSpec, NoiseIntensity, StateGrid};
    use approx::assert_relative_eq;

    use crate::testutil::orthonormal_block_model;

    fn two_normals(mu1: f64, mu2: f64) -> crate::model::SignalModel {
        let grid = StateGrid::new(-8.0 + mu1.min(mu2), 8.0 + mu1.max(mu2), 1601).unwrap();
        build_signal_model(
            grid,
            &[
                DistributionSpec::Normal { mu: mu1, sigma: 1.0 },
                DistributionSpec::Normal { mu: mu2, sigma: 1.0 },
            ],
            &[0.5, 0.5],
            NoiseIntensity::Constant(1.0),
        )
        .unwrap()
    }

    #[test]
    fn gram_of_disjoint_unit_blocks_is_identity() {
        let m = orthonormal_block_model();
        let g = gram_matrix(&m, false).unwrap();
        assert_relative_eq!(g[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(g[(1, 1)], 1.0, epsilon = 1e-12);
        assert_eq!(g[(0, 1)], 0.0);
    }

    #[test]
    fn gram_of_identical_standard_normals() {
        // integral phi(x)^2 dx = 1 / (2 sqrt(pi))
        let c = 0.2820947917738781;
        let m = two_normals(0.0, 0.0);
        let g = gram_matrix(&m, false).unwrap();
        for v in g.iter() {
            assert_relative_eq!(*v, c, epsilon = 1e-10);
        }
    }

    #[test]
    fn gram_of_shifted_normals_off_diagonal() {
        // integral phi(x) phi(x - 1) dx = e^{-1/4} / (2 sqrt(pi))
        let m = two_normals(0.0, 1.0);
        let g = gram_matrix(&m, false).unwrap();
        assert_relative_eq!(g[(0, 1)], 0.2196956447338612, epsilon = 1e-10);
    }

    #[test]
    fn gram_rejects_varying_sigma_without_flag() {
        let mut m = two_normals(0.0, 1.0);
        m.noise = NoiseIntensity::PerState(vec![1.0; m.grid.n]);
        assert!(matches!(gram_matrix(&m, false), Err(Error::VaryingSigma)));
        assert!(gram_matrix(&m, true).is_ok());
    }

    #[test]
    fn sqrt_of_diagonal() {
        let g = DMatrix::from_diagonal(&nalgebra::dvector![4.0, 9.0]);
        let s = matrix_sqrt(&g, 1e-12).unwrap();
        assert_relative_eq!(s[(0, 0)], 2.0, epsilon = 1e-12);
        assert_relative_eq!(s[(1, 1)], 3.0, epsilon = 1e-12);
        assert!(s[(0, 1)].abs() < 1e-12);
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(matrix_sqrt(&id, 1e-12).unwrap(), id);
    }

    #[test]
    fn sqrt_squares_back() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let s = matrix_sqrt(&g, 1e-12).unwrap();
        let back = &s * &s;
        // eigenvalues 1 and 3
        for (a, b) in back.iter().zip(g.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]); // eigenvalues 3, -1
        assert!(matches!(matrix_sqrt(&g, 1e-10), Err(Error::NotPsd(_))));
    }

    #[test]
    fn pinv_diagonal_and_rank_one() {
        let (p, rank) = pseudo_inverse(&DMatrix::from_diagonal(&nalgebra::dvector![2.0, 3.0]), 1e-12);
        assert_eq!(rank, 2);
        assert_relative_eq!(p[(0, 0)], 0.5, epsilon = 1e-12);
        assert_relative_eq!(p[(1, 1)], 1.0 / 3.0, epsilon = 1e-12);

        let ones = DMatrix::from_element(2, 2, 1.0);
        let (p, rank) = pseudo_inverse(&ones, 1e-12);
        assert_eq!(rank, 1);
        for v in p.iter() {
            assert_relative_eq!(*v, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn pinv_satisfies_moore_penrose_conditions() {
        use crate::mc::{fill_standard_normal, substream};
        let mut vals = vec![0.0; 16];
        fill_standard_normal(&mut substream(5, 0), &mut vals);
        let b = DMatrix::from_row_slice(4, 4, &vals);
        let a = &b * b.transpose(); // symmetric PSD
        let (p, _) = pseudo_inverse(&a, 1e-12);
        let apa = &a * &p * &a;
        let pap = &p * &a * &p;
        let ap = &a * &p;
        let pa = &p * &a;
        for i in 0..4 {
            for j in 0..4 {
                assert!((apa[(i, j)] - a[(i, j)]).abs() < 1e-8);
                assert!((pap[(i, j)] - p[(i, j)]).abs() < 1e-8);
                assert!((ap[(i, j)] - ap[(j, i)]).abs() < 1e-8);
                assert!((pa[(i, j)] - pa[(j, i)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn intensity_matrix_invariants() {
        let m = two_normals(0.0, 1.0);
        let li = IntensityMatrix::from_model(&m).unwrap();
        assert_eq!(li.rank, 2);
        let back = &li.sqrt * &li.sqrt;
        let scale = li.gram.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        for (a, b) in back.iter().zip(li.gram.iter()) {
            assert!((a - b).abs() < 1e-8 * scale);
        }
        let id = &li.pinv * &li.sqrt;
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn scaling_densities_scales_gram_quadratically() {
        let m = two_normals(0.0, 1.0);
        let mut scaled = m.clone();
        for d in &mut scaled.densities {
            for v in d.iter_mut() {
                *v *= 3.0;
            }
        }
        let g = gram_matrix(&m, false).unwrap();
        let gs = gram_matrix(&scaled, false).unwrap();
        let s = matrix_sqrt(&g, 1e-12).unwrap();
        let ss = matrix_sqrt(&gs, 1e-12).unwrap();
        for (a, b) in gs.iter().zip(g.iter()) {
            assert_relative_eq!(*a, 9.0 * b, epsilon = 1e-10);
        }
        for (a, b) in ss.iter().zip(s.iter()) {
            assert_relative_eq!(*a, 3.0 * b, epsilon = 1e-10);
        }
    }

    #[test]
    fn gram_permutation_consistency() {
        let grid = StateGrid::new(-8.0, 10.0, 1601).unwrap();
        let specs = [
            DistributionSpec::Normal { mu: 0.0, sigma: 1.0 },
            DistributionSpec::Normal { mu: 1.0, sigma: 1.2 },
            DistributionSpec::Normal { mu: 2.0, sigma: 0.8 },
        ];
        let prior = [1.0 / 3.0; 3];
        let m = build_signal_model(grid, &specs, &prior, NoiseIntensity::Constant(1.0)).unwrap();
        let perm = [2usize, 0, 1];
        let permuted_specs: Vec<_> = perm.iter().map(|&i| specs[i].clone()).collect();
        let mp =
            build_signal_model(grid, &permuted_specs, &prior, NoiseIntensity::Constant(1.0))
                .unwrap();
        let g = gram_matrix(&m, false).unwrap();
        let gp = gram_matrix(&mp, false).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                assert_relative_eq!(gp[(a, b)], g[(perm[a], perm[b])], epsilon = 1e-12);
            }
        }
    }
}
