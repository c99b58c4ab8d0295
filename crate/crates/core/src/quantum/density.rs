//! Density operators, time evolution and action read-out.

use nalgebra::{Complex, ComplexField, DMatrix};

use super::frame::{lit, to_f64, DecisionFrame, Scalar};
use super::lindblad::{devectorize, vectorize, Superoperator};
use crate::error::{Error, Result};

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator<T: Scalar> {
    matrix: DMatrix<Complex<T>>,
}

impl<T: Scalar> DensityOperator<T> {
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-10;
    pub const PSD_TOL: f64 = 1e-9;

    pub fn new(matrix: DMatrix<Complex<T>>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                what: "density operator columns",
                expected: matrix.nrows(),
                actual: matrix.ncols(),
            });
        }
        let d = matrix.nrows();
        if d == 0 {
            return Err(Error::invalid("density operator is empty"));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NumericalFailure("density operator has non-finite entries".into()));
        }
        let herm_tol: T = lit(Self::HERMITIAN_TOL);
        for i in 0..d {
            for j in 0..d {
                if (matrix[(i, j)] - matrix[(j, i)].conj()).modulus() > herm_tol {
                    return Err(Error::invalid(format!("density operator is not Hermitian at ({i}, {j})")));
                }
            }
        }
        let trace = matrix.trace();
        if (trace.re - T::one()).abs() > lit(Self::TRACE_TOL) || trace.im.abs() > lit(Self::TRACE_TOL) {
            return Err(Error::invalid(format!(
                "density operator trace is {}+{}i, expected 1",
                to_f64(trace.re),
                to_f64(trace.im)
            )));
        }
        let min_eig = min_eigenvalue(&matrix);
        if min_eig < -lit::<T>(Self::PSD_TOL) {
            return Err(Error::invalid(format!(
                "density operator has negative eigenvalue {}",
                to_f64(min_eig)
            )));
        }
        Ok(Self { matrix })
    }

    /// The maximally mixed state `I / d`.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("density operator is empty"));
        }
        let w = Complex::new(T::one() / lit::<T>(dim as f64), T::zero());
        Ok(Self { matrix: DMatrix::identity(dim, dim) * w })
    }

    /// `G G^dag / tr(G G^dag)` for any nonzero square `G`.
    pub fn from_factor(factor: &DMatrix<Complex<T>>) -> Result<Self> {
        let gram = factor * factor.adjoint();
        let tr = gram.trace().re;
        if !(tr > T::zero()) {
            return Err(Error::invalid("factor must be nonzero"));
        }
        Self::new(hermitian_part(&gram) / Complex::new(tr, T::zero()))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.matrix
    }

    pub fn min_eigenvalue(&self) -> T {
        min_eigenvalue(&self.matrix)
    }

    /// `Tr(P_a rho P_a^dag)` for every action `a`.
    pub fn action_distribution(&self, frame: &DecisionFrame<T>) -> Result<ActionDistribution<T>> {
        action_marginal(&self.matrix, frame)
    }
}

pub(crate) fn hermitian_part<T: Scalar>(m: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    (m + m.adjoint()) * Complex::new(lit::<T>(0.5), T::zero())
}

fn min_eigenvalue<T: Scalar>(m: &DMatrix<Complex<T>>) -> T {
    let eig = hermitian_part(m).symmetric_eigen();
    eig.eigenvalues.iter().copied().fold(T::max_value().unwrap_or(lit(f64::MAX)), |a, b| if b < a { b } else { a })
}

/// Projects the diagonal of `rho` onto the action marginal.
pub(crate) fn action_marginal<T: Scalar>(
    rho: &DMatrix<Complex<T>>,
    frame: &DecisionFrame<T>,
) -> Result<ActionDistribution<T>> {
    if rho.nrows() != frame.dim() {
        return Err(Error::DimensionMismatch { what: "density operator", expected: frame.dim(), actual: rho.nrows() });
    }
    let mut probs = vec![T::zero(); frame.n_actions()];
    for s in 0..frame.n_states() {
        for (a, p) in probs.iter_mut().enumerate() {
            let i = frame.basis_index(s, a);
            *p += rho[(i, i)].re;
        }
    }
    ActionDistribution::new(probs)
}

/// `rho(t) = exp(L t) vec(rho0)`.
pub fn evolve<T: Scalar>(superop: &Superoperator<T>, rho0: &DensityOperator<T>, t: T) -> Result<DensityOperator<T>> {
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::invalid(format!("evolution time must be finite and >= 0, got {}", to_f64(t))));
    }
    if rho0.dim() != superop.dim() {
        return Err(Error::DimensionMismatch { what: "initial state", expected: superop.dim(), actual: rho0.dim() });
    }
    if t == T::zero() {
        return Ok(rho0.clone());
    }
    let raw = evolve_raw(superop, rho0.matrix(), t)?;
    DensityOperator::new(hermitian_part(&raw)).map_err(|e| match e {
        Error::InvalidParameter(msg) => Error::NumericalFailure(format!("evolved state is invalid: {msg}")),
        other => other,
    })
}

pub(crate) fn evolve_raw<T: Scalar>(
    superop: &Superoperator<T>,
    rho0: &DMatrix<Complex<T>>,
    t: T,
) -> Result<DMatrix<Complex<T>>> {
    let propagator = (superop.generator() * Complex::new(t, T::zero())).exp();
    let out = devectorize(&(propagator * vectorize(rho0)), superop.dim());
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericalFailure(format!("evolution to t={} produced non-finite entries", to_f64(t))));
    }
    Ok(out)
}

/// Probability distribution over actions read off a density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution<T>(Vec<T>);

impl<T: Scalar> ActionDistribution<T> {
    pub const NEGATIVE_TOL: f64 = 1e-12;
    pub const SUM_TOL: f64 = 1e-9;

    /// Entries down to `-1e-12` are clamped to zero; the result is then
    /// renormalized.
    pub fn new(mut probabilities: Vec<T>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::invalid("action distribution is empty"));
        }
        let floor: T = -lit::<T>(Self::NEGATIVE_TOL);
        let mut sum = T::zero();
        for p in probabilities.iter_mut() {
            if !p.is_finite() {
                return Err(Error::NumericalFailure("non-finite action probability".into()));
            }
            if *p < floor {
                return Err(Error::NumericalFailure(format!("negative action probability {}", to_f64(*p))));
            }
            if *p < T::zero() {
                *p = T::zero();
            }
            sum += *p;
        }
        if (sum - T::one()).abs() > lit(Self::SUM_TOL) {
            return Err(Error::NumericalFailure(format!("action probabilities sum to {}", to_f64(sum))));
        }
        for p in probabilities.iter_mut() {
            *p /= sum;
        }
        Ok(Self(probabilities))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, a: usize) -> T {
        self.0[a]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), |m, x| if x > m { x } else { m })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{assemble_lindbladian, BeliefVector, PsychParams};

    fn pd() -> DecisionFrame<f64> {
        DecisionFrame::prisoners_dilemma(20.0, 5.0, 10.0, 25.0).unwrap()
    }

    #[test]
    fn rejects_invalid_states() {
        let mut m = DMatrix::<Complex<f64>>::identity(2, 2) * Complex::new(0.5, 0.0);
        assert!(DensityOperator::new(m.clone()).is_ok());
        m[(0, 1)] = Complex::new(0.0, 0.1);
        assert!(DensityOperator::new(m.clone()).is_err());
        let neg = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex::new(1.5, 0.0),
            Complex::new(-0.5, 0.0),
        ]));
        assert!(DensityOperator::new(neg).is_err());
        let tr2 = DMatrix::<Complex<f64>>::identity(2, 2);
        assert!(DensityOperator::new(tr2).is_err());
    }

    #[test]
    fn action_distribution_clamps_tiny_negatives() {
        let a = ActionDistribution::new(vec![-1e-13, 1.0]).unwrap();
        assert_eq!(a.get(0), 0.0);
        assert!(ActionDistribution::new(vec![-1e-6, 1.0 + 1e-6]).is_err());
        assert!(ActionDistribution::new(vec![0.5, 0.6]).is_err());
    }

    #[test]
    fn zero_time_returns_input() {
        let frame = pd();
        let params = PsychParams::new(0.5, 2.0, 0.5).unwrap();
        let eta = BeliefVector::new(vec![0.5, 0.5]).unwrap();
        let l = assemble_lindbladian(&frame, &params, &eta).unwrap();
        let rho0 = DensityOperator::maximally_mixed(4).unwrap();
        assert_eq!(evolve(&l, &rho0, 0.0).unwrap(), rho0);
        assert!(evolve(&l, &rho0, -1.0).is_err());
    }

    #[test]
    fn evolution_keeps_trace() {
        let frame = pd();
        let params = PsychParams::new(0.812, 10.495, 0.9).unwrap();
        let eta = BeliefVector::new(vec![0.0, 1.0]).unwrap();
        let l = assemble_lindbladian(&frame, &params, &eta).unwrap();
        let rho0 = DensityOperator::maximally_mixed(4).unwrap();
        for t in [0.1, 1.0, 10.0, 100.0] {
            let rho = evolve(&l, &rho0, t).unwrap();
            assert!((rho.matrix().trace().re - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn marginal_sums_diagonal_by_action() {
        let frame = pd();
        let diag = [0.1, 0.2, 0.3, 0.4].map(|x| Complex::new(x, 0.0));
        let rho = DensityOperator::new(DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&diag))).unwrap();
        let gamma = rho.action_distribution(&frame).unwrap();
        assert!((gamma.get(0) - 0.4).abs() < 1e-15);
        assert!((gamma.get(1) - 0.6).abs() < 1e-15);
    }
}
