//! Gaussian-state algebra for a handful of optical modes.
//!
//! Quadratures are ordered `(X1, Y1, X2, Y2, ...)` and normalised so that the
//! vacuum variance of every quadrature is 1. The shot-noise limit of a
//! two-mode sum or difference such as `X1 + X2` is therefore 2.
//!
//! Phase rotations follow the usual counter-clockwise convention on the
//! `(X, Y)` plane: a rotation by `θ = π/2` sends `X → -Y` and `Y → X` in the
//! sense `X' = -Y`, `Y' = X`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Tolerance for algebraic identities on small matrices.
pub const ALGEBRAIC_TOL: f64 = 1e-10;
/// Tolerance on symplectic eigenvalues when checking physicality.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Sign of the pump/seed relative phase of a parametric amplifier.
///
/// `Deamplify` squeezes `X1 + X2` and `Y1 - Y2`; `Amplify` squeezes
/// `X1 - X2` and `Y1 + Y2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParametricMode {
    Amplify,
    Deamplify,
}

/// The symplectic form for `n` modes in `(X1, Y1, ...)` ordering.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

fn check_symmetric(cov: &DMatrix<f64>) -> Result<()> {
    if !cov.is_square() {
        return Err(Error::DimensionMismatch {
            expected: cov.nrows(),
            got: cov.ncols(),
        });
    }
    let asym = max_abs(&(cov - cov.transpose()));
    if asym > ALGEBRAIC_TOL * max_abs(cov).max(1.0) {
        return Err(Error::NotSymmetric {
            max_asymmetry: asym,
        });
    }
    Ok(())
}

/// Symplectic eigenvalues of a covariance matrix, in descending order.
///
/// These are the moduli of the eigenvalues of `i·Ω·cov`; each appears twice
/// in that spectrum and is reported once here.
pub fn symplectic_eigenvalues(cov: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_symmetric(cov)?;
    if !cov.nrows().is_multiple_of(2) {
        return Err(Error::DimensionMismatch {
            expected: cov.nrows() + 1,
            got: cov.nrows(),
        });
    }
    let n = cov.nrows() / 2;
    let sym = (cov + cov.transpose()) * 0.5;
    let eig = sym.clone().symmetric_eigen();
    let mut moduli: Vec<f64> = if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        // M = √σ·Ω·√σ is antisymmetric with eigenvalues ±iν, so MᵀM is
        // symmetric with eigenvalues ν² and can use the symmetric solver.
        let root = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
            * eig.eigenvectors.transpose();
        let m = &root * symplectic_form(n) * &root;
        (m.transpose() * m)
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .map(|&l| l.max(0.0).sqrt())
            .collect()
    } else {
        (symplectic_form(n) * sym)
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .collect()
    };
    moduli.sort_by(|a, b| b.total_cmp(a));
    Ok(moduli.into_iter().step_by(2).collect())
}

/// Mean vector and covariance matrix of an `n`-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Builds a state, checking dimensions, symmetry and physicality.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if !mean.len().is_multiple_of(2) || mean.is_empty() {
            return Err(invalid("mean", "length must be a positive even number"));
        }
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                got: cov.nrows(),
            });
        }
        let nu = symplectic_eigenvalues(&cov)?;
        let min = nu.iter().copied().fold(f64::INFINITY, f64::min);
        if min < 1.0 - PHYSICALITY_TOL {
            return Err(Error::Unphysical {
                min_eigenvalue: min,
            });
        }
        Ok(Self { mean, cov })
    }

    pub fn vacuum(n_modes: usize) -> Self {
        Self {
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    /// Pure two-mode squeezed vacuum, the output of [`SymplecticTransform::two_mode_squeezer`]
    /// acting on vacuum.
    pub fn two_mode_squeezed(r: f64, mode: ParametricMode) -> Result<Self> {
        let s = SymplecticTransform::two_mode_squeezer(r, mode)?;
        Self::vacuum(2).apply_symplectic(&s)
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    fn check_mode(&self, index: usize) -> Result<()> {
        if index >= self.n_modes() {
            return Err(Error::InvalidMode {
                index,
                n_modes: self.n_modes(),
            });
        }
        Ok(())
    }

    /// `mean' = S·mean`, `cov' = S·cov·Sᵀ`.
    pub fn apply_symplectic(&self, s: &SymplecticTransform) -> Result<Self> {
        if s.matrix.nrows() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: s.matrix.nrows(),
            });
        }
        let m = &s.matrix;
        let cov = m * &self.cov * m.transpose();
        Ok(Self {
            mean: m * &self.mean,
            cov: (&cov + cov.transpose()) * 0.5,
        })
    }

    /// Pure-loss channel on one mode: the mode is mixed with vacuum on a
    /// beamsplitter of transmissivity `η`.
    pub fn apply_loss(&self, channel: &LossChannel) -> Result<Self> {
        self.check_mode(channel.mode)?;
        let dim = self.mean.len();
        let root = channel.transmissivity.sqrt();
        let mut scale = DMatrix::<f64>::identity(dim, dim);
        let mut added = DMatrix::<f64>::zeros(dim, dim);
        for q in [2 * channel.mode, 2 * channel.mode + 1] {
            scale[(q, q)] = root;
            added[(q, q)] = 1.0 - channel.transmissivity;
        }
        let cov = &scale * &self.cov * &scale + added;
        Ok(Self {
            mean: &scale * &self.mean,
            cov: (&cov + cov.transpose()) * 0.5,
        })
    }

    pub fn displace(&self, mode: usize, dx: f64, dy: f64) -> Result<Self> {
        self.check_mode(mode)?;
        let mut out = self.clone();
        out.mean[2 * mode] += dx;
        out.mean[2 * mode + 1] += dy;
        Ok(out)
    }

    /// Variance `cᵀ·cov·c` of the quadrature combination `c`.
    pub fn combo_variance(&self, coeffs: &[f64]) -> Result<f64> {
        let c = self.coeffs(coeffs)?;
        Ok(c.dot(&(&self.cov * &c)))
    }

    /// Mean `cᵀ·mean` of the quadrature combination `c`.
    pub fn combo_mean(&self, coeffs: &[f64]) -> Result<f64> {
        let c = self.coeffs(coeffs)?;
        Ok(c.dot(&self.mean))
    }

    fn coeffs(&self, coeffs: &[f64]) -> Result<DVector<f64>> {
        if coeffs.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: coeffs.len(),
            });
        }
        Ok(DVector::from_column_slice(coeffs))
    }

    /// Appends `k` vacuum modes after the existing ones.
    pub fn with_vacuum_modes(&self, k: usize) -> Self {
        let dim = self.mean.len();
        let mut mean = DVector::zeros(dim + 2 * k);
        mean.rows_mut(0, dim).copy_from(&self.mean);
        let mut cov = DMatrix::identity(dim + 2 * k, dim + 2 * k);
        cov.view_mut((0, 0), (dim, dim)).copy_from(&self.cov);
        Self { mean, cov }
    }

    /// Marginal state of the listed modes, in the given order.
    pub fn reduce(&self, modes: &[usize]) -> Result<Self> {
        for &m in modes {
            self.check_mode(m)?;
        }
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let mean = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.mean[i]));
        let cov = DMatrix::from_fn(idx.len(), idx.len(), |a, b| self.cov[(idx[a], idx[b])]);
        Ok(Self { mean, cov })
    }

    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        symplectic_eigenvalues(&self.cov).expect("state covariance is symmetric")
    }

    pub fn is_physical(&self) -> bool {
        self.symplectic_eigenvalues()
            .iter()
            .all(|&nu| nu >= 1.0 - PHYSICALITY_TOL)
    }
}

/// A real symplectic matrix acting on quadratures.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticTransform {
    matrix: DMatrix<f64>,
}

impl SymplecticTransform {
    /// Wraps a matrix after checking `S·Ω·Sᵀ = Ω`.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || !matrix.nrows().is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows() + matrix.nrows() % 2,
                got: matrix.ncols(),
            });
        }
        let s = Self { matrix };
        let residual = s.symplectic_residual();
        if residual > ALGEBRAIC_TOL * max_abs(&s.matrix).max(1.0).powi(2) {
            return Err(invalid(
                "matrix",
                format!("not symplectic (residual {residual:e})"),
            ));
        }
        Ok(s)
    }

    pub fn identity(n_modes: usize) -> Self {
        Self {
            matrix: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    /// Two-mode squeezer on modes (1, 2) with squeezing parameter `r`.
    ///
    /// Acting on vacuum it gives `Var(X1+X2) = Var(Y1-Y2) = 2e^{-2r}` in
    /// `Deamplify` mode; `Amplify` squeezes `X1-X2` and `Y1+Y2` instead.
    pub fn two_mode_squeezer(r: f64, mode: ParametricMode) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(invalid("r", format!("must be finite and >= 0, got {r}")));
        }
        let ch = r.cosh();
        let sh = match mode {
            ParametricMode::Amplify => r.sinh(),
            ParametricMode::Deamplify => -r.sinh(),
        };
        #[rustfmt::skip]
        let matrix = DMatrix::from_row_slice(4, 4, &[
            ch, 0.0, sh, 0.0,
            0.0, ch, 0.0, -sh,
            sh, 0.0, ch, 0.0,
            0.0, -sh, 0.0, ch,
        ]);
        Ok(Self { matrix })
    }

    /// Lossless beamsplitter of intensity transmissivity `t` between modes
    /// `i` and `j`: `a_i' = √t·a_i + √(1-t)·a_j`, `a_j' = -√(1-t)·a_i + √t·a_j`.
    pub fn beamsplitter(n_modes: usize, t: f64, modes: (usize, usize)) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(invalid("T", format!("must lie in [0, 1], got {t}")));
        }
        let (i, j) = modes;
        for index in [i, j] {
            if index >= n_modes {
                return Err(Error::InvalidMode { index, n_modes });
            }
        }
        if i == j {
            return Err(invalid("modes", "beamsplitter needs two distinct modes"));
        }
        let (ct, st) = (t.sqrt(), (1.0 - t).sqrt());
        let mut matrix = DMatrix::identity(2 * n_modes, 2 * n_modes);
        for q in 0..2 {
            matrix[(2 * i + q, 2 * i + q)] = ct;
            matrix[(2 * i + q, 2 * j + q)] = st;
            matrix[(2 * j + q, 2 * i + q)] = -st;
            matrix[(2 * j + q, 2 * j + q)] = ct;
        }
        Ok(Self { matrix })
    }

    /// Phase rotation of mode `index` by `theta` radians.
    pub fn phase_shift(n_modes: usize, theta: f64, index: usize) -> Result<Self> {
        if !theta.is_finite() {
            return Err(invalid("theta", "must be finite"));
        }
        if index >= n_modes {
            return Err(Error::InvalidMode { index, n_modes });
        }
        let (s, c) = theta.sin_cos();
        let mut matrix = DMatrix::identity(2 * n_modes, 2 * n_modes);
        let k = 2 * index;
        matrix[(k, k)] = c;
        matrix[(k, k + 1)] = -s;
        matrix[(k + 1, k)] = s;
        matrix[(k + 1, k + 1)] = c;
        Ok(Self { matrix })
    }

    /// Single-mode squeezer: `X → e^{-r}X`, `Y → e^{r}Y`.
    pub fn single_mode_squeezer(n_modes: usize, r: f64, index: usize) -> Result<Self> {
        if !r.is_finite() {
            return Err(invalid("r", "must be finite"));
        }
        if index >= n_modes {
            return Err(Error::InvalidMode { index, n_modes });
        }
        let mut matrix = DMatrix::identity(2 * n_modes, 2 * n_modes);
        matrix[(2 * index, 2 * index)] = (-r).exp();
        matrix[(2 * index + 1, 2 * index + 1)] = r.exp();
        Ok(Self { matrix })
    }

    /// Lifts a transform on `k` modes into an `n_modes` system, acting on the
    /// listed target modes in order.
    pub fn embed(&self, n_modes: usize, targets: &[usize]) -> Result<Self> {
        if targets.len() != self.n_modes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes(),
                got: targets.len(),
            });
        }
        for (k, &t) in targets.iter().enumerate() {
            if t >= n_modes {
                return Err(Error::InvalidMode { index: t, n_modes });
            }
            if targets[..k].contains(&t) {
                return Err(invalid("targets", "duplicate mode index"));
            }
        }
        let mut matrix = DMatrix::identity(2 * n_modes, 2 * n_modes);
        for (a, &ta) in targets.iter().enumerate() {
            for (b, &tb) in targets.iter().enumerate() {
                for p in 0..2 {
                    for q in 0..2 {
                        matrix[(2 * ta + p, 2 * tb + q)] = self.matrix[(2 * a + p, 2 * b + q)];
                    }
                }
            }
        }
        Ok(Self { matrix })
    }

    /// `self ∘ first`: applies `first`, then `self`.
    pub fn after(&self, first: &SymplecticTransform) -> Result<Self> {
        if self.matrix.nrows() != first.matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.nrows(),
                got: first.matrix.nrows(),
            });
        }
        Ok(Self {
            matrix: &self.matrix * &first.matrix,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `‖S·Ω·Sᵀ − Ω‖_max`.
    pub fn symplectic_residual(&self) -> f64 {
        let omega = symplectic_form(self.n_modes());
        max_abs(&(&self.matrix * &omega * self.matrix.transpose() - omega))
    }
}

/// Pure loss on a single mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossChannel {
    pub mode: usize,
    pub transmissivity: f64,
}

impl LossChannel {
    pub fn new(mode: usize, transmissivity: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&transmissivity) {
            return Err(invalid(
                "transmissivity",
                format!("must lie in [0, 1], got {transmissivity}"),
            ));
        }
        Ok(Self {
            mode,
            transmissivity,
        })
    }
}

/// Coefficient vectors for the two EPR combinations probed by the Bell
/// measurement, `X1 + X2` and `Y1 - Y2`.
pub const SUM_X: [f64; 4] = [1.0, 0.0, 1.0, 0.0];
pub const DIFF_Y: [f64; 4] = [0.0, 1.0, 0.0, -1.0];
pub const DIFF_X: [f64; 4] = [1.0, 0.0, -1.0, 0.0];
pub const SUM_Y: [f64; 4] = [0.0, 1.0, 0.0, 1.0];

/// `cᵀ·Ω·c'`: the commutator coefficient of two quadrature combinations.
pub fn commutator(c: &[f64], c_prime: &[f64]) -> Result<f64> {
    if c.len() != c_prime.len() || !c.len().is_multiple_of(2) {
        return Err(Error::DimensionMismatch {
            expected: c.len(),
            got: c_prime.len(),
        });
    }
    let omega = symplectic_form(c.len() / 2);
    let a = DVector::from_column_slice(c);
    let b = DVector::from_column_slice(c_prime);
    Ok(a.dot(&(omega * b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    const R_NOMINAL: f64 = 0.6215;

    /// Naive triple loop, kept apart from nalgebra's product.
    fn naive_sandwich(s: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
        let n = s.nrows();
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    for l in 0..n {
                        acc += s[(i, k)] * c[(k, l)] * s[(j, l)];
                    }
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    #[test]
    fn zero_squeezing_is_identity() {
        let s = SymplecticTransform::two_mode_squeezer(0.0, ParametricMode::Deamplify).unwrap();
        assert_eq!(s.matrix(), SymplecticTransform::identity(2).matrix());
        let st = GaussianState::vacuum(2).apply_symplectic(&s).unwrap();
        for c in [SUM_X, DIFF_X, SUM_Y, DIFF_Y] {
            assert_abs_diff_eq!(st.combo_variance(&c).unwrap(), 2.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn deamplify_squeezes_sum_x_and_diff_y() {
        let st = GaussianState::two_mode_squeezed(R_NOMINAL, ParametricMode::Deamplify).unwrap();
        let sq = 2.0 * (-2.0 * R_NOMINAL).exp();
        let anti = 2.0 * (2.0 * R_NOMINAL).exp();
        assert_abs_diff_eq!(st.combo_variance(&SUM_X).unwrap(), sq, epsilon = 1e-12);
        assert_abs_diff_eq!(st.combo_variance(&DIFF_Y).unwrap(), sq, epsilon = 1e-12);
        assert_abs_diff_eq!(st.combo_variance(&DIFF_X).unwrap(), anti, epsilon = 1e-12);
        assert_abs_diff_eq!(st.combo_variance(&SUM_Y).unwrap(), anti, epsilon = 1e-12);
        // -5.4 dB re SNL: 0.2884 per combination, 0.5768 absolute
        assert_abs_diff_eq!(sq / 2.0, 0.2884, epsilon = 2e-4);
        assert_abs_diff_eq!(sq, 0.5768, epsilon = 4e-4);
        assert_abs_diff_eq!(10.0 * (sq / 2.0).log10(), -5.4, epsilon = 5e-3);
    }

    #[test]
    fn amplify_matches_explicit_matrix_product() {
        let s = SymplecticTransform::two_mode_squeezer(0.5, ParametricMode::Amplify).unwrap();
        let cov = naive_sandwich(s.matrix(), &DMatrix::identity(4, 4));
        let c = [1.0, 0.0, -1.0, 0.0];
        let mut v = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                v += c[i] * cov[(i, j)] * c[j];
            }
        }
        assert_abs_diff_eq!(v, 2.0 * (-1.0_f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(v, 0.7358, epsilon = 1e-4);
        let st = GaussianState::vacuum(2).apply_symplectic(&s).unwrap();
        assert_abs_diff_eq!(st.combo_variance(&DIFF_X).unwrap(), v, epsilon = 1e-12);
        assert_abs_diff_eq!(st.combo_variance(&SUM_Y).unwrap(), v, epsilon = 1e-12);
    }

    #[test]
    fn squeezer_rejects_bad_r() {
        for r in [-0.1, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                SymplecticTransform::two_mode_squeezer(r, ParametricMode::Deamplify),
                Err(Error::InvalidParameter { .. })
            ));
        }
    }

    #[test]
    fn tms_covariance_blocks() {
        let r = 0.37;
        let st = GaussianState::two_mode_squeezed(r, ParametricMode::Deamplify).unwrap();
        let cov = st.cov();
        for q in 0..4 {
            assert_abs_diff_eq!(cov[(q, q)], (2.0 * r).cosh(), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(cov[(0, 2)], -(2.0 * r).sinh(), epsilon = 1e-12);
        assert_abs_diff_eq!(cov[(1, 3)], (2.0 * r).sinh(), epsilon = 1e-12);
        assert_abs_diff_eq!(cov[(0, 1)], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn beamsplitter_cases() {
        let id = SymplecticTransform::beamsplitter(2, 1.0, (0, 1)).unwrap();
        assert_eq!(id.matrix(), SymplecticTransform::identity(2).matrix());

        let alpha = 1.7;
        let st = GaussianState::vacuum(2)
            .displace(0, alpha, 0.0)
            .unwrap()
            .displace(1, alpha, 0.0)
            .unwrap();
        let bs = SymplecticTransform::beamsplitter(2, 0.5, (0, 1)).unwrap();
        let out = st.apply_symplectic(&bs).unwrap();
        let m = out.mean();
        assert_abs_diff_eq!(m[0], 2f64.sqrt() * alpha, epsilon = 1e-12);
        assert_abs_diff_eq!(m[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m[2], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m[3], 0.0, epsilon = 1e-12);

        assert!(SymplecticTransform::beamsplitter(2, 1.2, (0, 1)).is_err());
        assert!(SymplecticTransform::beamsplitter(2, -0.2, (0, 1)).is_err());
        assert!(matches!(
            SymplecticTransform::beamsplitter(2, 0.5, (0, 2)),
            Err(Error::InvalidMode { .. })
        ));
    }

    #[test]
    fn phase_and_split_reproduce_bell_combinations() {
        // π/2 on beam 1 then a balanced split: the quadratures along the
        // nominal output carriers (angles π/4 and -π/4) sum to X1 + X2 and
        // differ by Y1 - Y2.
        let st = GaussianState::two_mode_squeezed(R_NOMINAL, ParametricMode::Deamplify).unwrap();
        let ps = SymplecticTransform::phase_shift(2, FRAC_PI_2, 0).unwrap();
        let bs = SymplecticTransform::beamsplitter(2, 0.5, (0, 1)).unwrap();
        let out = st.apply_symplectic(&bs.after(&ps).unwrap()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let d_c = [h, h, 0.0, 0.0];
        let d_d = [0.0, 0.0, h, -h];
        let plus: Vec<f64> = d_c.iter().zip(&d_d).map(|(a, b)| (a + b) * h).collect();
        let minus: Vec<f64> = d_c.iter().zip(&d_d).map(|(a, b)| (b - a) * h).collect();
        assert_abs_diff_eq!(
            out.combo_variance(&plus).unwrap(),
            st.combo_variance(&SUM_X).unwrap() / 2.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            out.combo_variance(&minus).unwrap(),
            st.combo_variance(&DIFF_Y).unwrap() / 2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn phase_shift_conventions() {
        let id = SymplecticTransform::phase_shift(1, 0.0, 0).unwrap();
        assert_eq!(id.matrix(), SymplecticTransform::identity(1).matrix());

        let q = SymplecticTransform::phase_shift(1, FRAC_PI_2, 0).unwrap();
        let st = GaussianState::vacuum(1).displace(0, 1.0, 0.0).unwrap();
        let rotated = st.apply_symplectic(&q).unwrap();
        assert_abs_diff_eq!(rotated.mean()[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rotated.mean()[1], 1.0, epsilon = 1e-15);

        let twice = q.after(&q).unwrap();
        let pi = SymplecticTransform::phase_shift(1, std::f64::consts::PI, 0).unwrap();
        assert!((twice.matrix() - pi.matrix()).amax() < 1e-15);
        assert!((twice.matrix() + DMatrix::<f64>::identity(2, 2)).amax() < 1e-15);
        assert!(SymplecticTransform::phase_shift(1, f64::NAN, 0).is_err());
    }

    #[test]
    fn loss_cases() {
        let st = GaussianState::two_mode_squeezed(R_NOMINAL, ParametricMode::Deamplify)
            .unwrap()
            .displace(0, 0.8, -0.3)
            .unwrap();
        let same = st.apply_loss(&LossChannel::new(0, 1.0).unwrap()).unwrap();
        assert_eq!(same, st);

        let gone = st.apply_loss(&LossChannel::new(0, 0.0).unwrap()).unwrap();
        assert_eq!(gone.mean()[0], 0.0);
        assert_eq!(gone.mean()[1], 0.0);
        assert_eq!(gone.cov()[(0, 0)], 1.0);
        assert_eq!(gone.cov()[(1, 1)], 1.0);
        assert_eq!(gone.cov()[(0, 2)], 0.0);

        // oracle: Var(√η X1 + √(1-η) V + X2) = η c + (1-η) + c - 2√η s
        let eta = 0.5;
        let half = st.apply_loss(&LossChannel::new(0, eta).unwrap()).unwrap();
        let (c, s) = ((2.0 * R_NOMINAL).cosh(), (2.0 * R_NOMINAL).sinh());
        let expected = eta * c + (1.0 - eta) + c - 2.0 * eta.sqrt() * s;
        assert_abs_diff_eq!(
            half.combo_variance(&SUM_X).unwrap(),
            expected,
            epsilon = 1e-12
        );
        assert!(LossChannel::new(0, 1.5).is_err());
        assert!(matches!(
            st.apply_loss(&LossChannel::new(3, 0.5).unwrap()),
            Err(Error::InvalidMode { .. })
        ));
    }

    #[test]
    fn displacement_cases() {
        let vac = GaussianState::vacuum(2);
        assert_eq!(vac.displace(1, 0.0, 0.0).unwrap(), vac);
        let d = GaussianState::vacuum(1).displace(0, 2.0, 0.0).unwrap();
        assert_eq!(d.mean().as_slice(), &[2.0, 0.0]);
        assert_eq!(d.cov(), &DMatrix::<f64>::identity(2, 2));
        assert!(matches!(
            vac.displace(2, 1.0, 0.0),
            Err(Error::InvalidMode { .. })
        ));

        let st = GaussianState::two_mode_squeezed(0.4, ParametricMode::Deamplify).unwrap();
        let bs = SymplecticTransform::beamsplitter(2, 0.3, (0, 1)).unwrap();
        let a = st
            .displace(0, 1.1, -0.4)
            .unwrap()
            .apply_symplectic(&bs)
            .unwrap();
        // split first, then displace each output by the split displacement
        let moved = bs.matrix() * DVector::from_column_slice(&[1.1, -0.4, 0.0, 0.0]);
        let b = st
            .apply_symplectic(&bs)
            .unwrap()
            .displace(0, moved[0], moved[1])
            .unwrap()
            .displace(1, moved[2], moved[3])
            .unwrap();
        assert!((a.mean() - b.mean()).amax() < 1e-12);
        assert!((a.cov() - b.cov()).amax() < 1e-12);
    }

    #[test]
    fn marginals_and_padding() {
        let st = GaussianState::two_mode_squeezed(0.5, ParametricMode::Deamplify)
            .unwrap()
            .displace(1, 0.2, 0.1)
            .unwrap();
        let padded = st.with_vacuum_modes(1);
        assert_eq!(padded.n_modes(), 3);
        assert_eq!(padded.reduce(&[0, 1]).unwrap(), st);
        assert_eq!(padded.reduce(&[2]).unwrap(), GaussianState::vacuum(1));
        let swapped = st.reduce(&[1, 0]).unwrap();
        assert_eq!(swapped.mean().as_slice(), &[0.2, 0.1, 0.0, 0.0]);
        assert!(matches!(st.reduce(&[2]), Err(Error::InvalidMode { .. })));
    }

    #[test]
    fn combo_variance_cases() {
        let vac = GaussianState::vacuum(2);
        assert_eq!(vac.combo_variance(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 1.0);
        assert!(matches!(
            vac.combo_variance(&[1.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    /// Closed-form two-mode symplectic spectrum, independent of the
    /// eigen-solver: ν±² = (Δ ± √(Δ² − 4 det Σ)) / 2 with
    /// Δ = det A + det B + 2 det C.
    fn two_mode_nu(cov: &DMatrix<f64>) -> (f64, f64) {
        let det2 = |r: usize, c: usize| {
            cov[(r, c)] * cov[(r + 1, c + 1)] - cov[(r, c + 1)] * cov[(r + 1, c)]
        };
        let delta = det2(0, 0) + det2(2, 2) + 2.0 * det2(0, 2);
        let det = cov.determinant();
        let disc = (delta * delta - 4.0 * det).max(0.0).sqrt();
        (((delta + disc) / 2.0).sqrt(), ((delta - disc) / 2.0).sqrt())
    }

    #[test]
    fn symplectic_eigenvalue_cases() {
        let nu = symplectic_eigenvalues(&DMatrix::identity(4, 4)).unwrap();
        assert_eq!(nu.len(), 2);
        for v in nu {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        }
        for r in [0.0, 0.3, 0.6215, 1.5] {
            let st = GaussianState::two_mode_squeezed(r, ParametricMode::Deamplify).unwrap();
            for v in st.symplectic_eigenvalues() {
                assert_abs_diff_eq!(v, 1.0, epsilon = 1e-9);
            }
        }
        let lossy = GaussianState::two_mode_squeezed(R_NOMINAL, ParametricMode::Deamplify)
            .unwrap()
            .apply_loss(&LossChannel::new(0, 0.5).unwrap())
            .unwrap()
            .apply_loss(&LossChannel::new(1, 0.5).unwrap())
            .unwrap();
        // symmetric loss leaves a degenerate spectrum ν = √(a² − c²)
        let nu = lossy.symplectic_eigenvalues();
        let (a, c) = (lossy.cov()[(0, 0)], lossy.cov()[(0, 2)]);
        for v in &nu {
            assert_abs_diff_eq!(*v, (a * a - c * c).sqrt(), epsilon = 1e-12);
        }
        assert!(nu[0] > 1.0 + 1e-3);

        let one_arm = GaussianState::two_mode_squeezed(R_NOMINAL, ParametricMode::Deamplify)
            .unwrap()
            .apply_loss(&LossChannel::new(0, 0.3).unwrap())
            .unwrap();
        let nu = one_arm.symplectic_eigenvalues();
        let (hi, lo) = two_mode_nu(one_arm.cov());
        assert_abs_diff_eq!(nu[0], hi, epsilon = 1e-9);
        assert_abs_diff_eq!(nu[1], lo, epsilon = 1e-9);
        assert!(nu.iter().all(|&v| v >= 1.0 - 1e-12));

        let mut bad = DMatrix::<f64>::identity(4, 4);
        bad[(0, 1)] = 0.3;
        assert!(matches!(
            symplectic_eigenvalues(&bad),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn unphysical_states_are_rejected() {
        let cov = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.5, 0.5]));
        assert!(matches!(
            GaussianState::new(DVector::zeros(2), cov),
            Err(Error::Unphysical { .. })
        ));
        let ok = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.5, 2.0]));
        assert!(GaussianState::new(DVector::zeros(2), ok).is_ok());
    }

    #[test]
    fn sum_x_and_diff_y_commute() {
        assert_eq!(commutator(&SUM_X, &DIFF_Y).unwrap(), 0.0);
        assert_ne!(commutator(&SUM_X, &SUM_Y).unwrap(), 0.0);
        let st = GaussianState::two_mode_squeezed(0.2, ParametricMode::Deamplify).unwrap();
        assert!(st.combo_variance(&SUM_X).unwrap() < 2.0);
        assert!(st.combo_variance(&DIFF_Y).unwrap() < 2.0);
    }

    #[test]
    fn pure_tms_product_and_symmetry() {
        for r in [0.0, 0.1, 0.6215, 1.3] {
            let st = GaussianState::two_mode_squeezed(r, ParametricMode::Deamplify).unwrap();
            let p = st.combo_variance(&SUM_X).unwrap() * st.combo_variance(&DIFF_X).unwrap();
            assert_abs_diff_eq!(p, 4.0, epsilon = 1e-10);
            assert_abs_diff_eq!(
                st.combo_variance(&SUM_X).unwrap(),
                st.combo_variance(&DIFF_Y).unwrap(),
                epsilon = 1e-14
            );
        }
    }
}
