//! Construction of the parameterized Lindblad generator.
//!
//! Density operators are vectorized column-major: element `(i, j)` of a
//! `d x d` matrix sits at index `i + d * j`.

use nalgebra::{Complex, DMatrix, DVector};

use super::frame::{lit, to_f64, BeliefVector, DecisionFrame, PsychParams, Scalar};
use crate::error::{Error, Result};

/// Block-diagonal subjective choice matrix `Pi(lambda)`.
///
/// Block `l` repeats the softmax row `p(a_j | state l) = u(a_j|l)^lambda /
/// sum_j u(a_j|l)^lambda` on each of its `A` rows. The powers are taken in
/// log space with the row maximum subtracted.
pub fn subjective_choice_matrix<T: Scalar>(frame: &DecisionFrame<T>, lambda: T) -> Result<DMatrix<T>> {
    if !(lambda >= T::zero()) {
        return Err(Error::invalid(format!("lambda must be >= 0, got {}", to_f64(lambda))));
    }
    let (n, a_count) = (frame.n_states(), frame.n_actions());
    let d = frame.dim();
    let mut pi = DMatrix::zeros(d, d);
    for state in 0..n {
        let logs: Vec<T> = (0..a_count).map(|a| lambda * frame.utility(a, state).ln()).collect();
        let max = logs.iter().copied().fold(logs[0], |m, x| if x > m { x } else { m });
        let weights: Vec<T> = logs.iter().map(|&l| (l - max).exp()).collect();
        let total = weights.iter().fold(T::zero(), |s, &w| s + w);
        if !total.is_finite() || !(total > T::zero()) {
            return Err(Error::NumericalFailure(format!(
                "choice probabilities are not finite for lambda={}",
                to_f64(lambda)
            )));
        }
        for row in 0..a_count {
            for (col, &w) in weights.iter().enumerate() {
                let p = w / total;
                if !p.is_finite() {
                    return Err(Error::NumericalFailure("non-finite choice probability".into()));
                }
                pi[(frame.basis_index(state, row), frame.basis_index(state, col))] = p;
            }
        }
    }
    Ok(pi)
}

/// Belief coupling matrix `B(eta)`: the row of basis state `(s, a)` places
/// mass `eta(s')` on `(s', a)` for every state `s'`.
pub fn belief_matrix<T: Scalar>(frame: &DecisionFrame<T>, eta: &BeliefVector<T>) -> Result<DMatrix<T>> {
    if eta.len() != frame.n_states() {
        return Err(Error::DimensionMismatch {
            what: "belief vector",
            expected: frame.n_states(),
            actual: eta.len(),
        });
    }
    let d = frame.dim();
    let mut b = DMatrix::zeros(d, d);
    for s in 0..frame.n_states() {
        for a in 0..frame.n_actions() {
            let row = frame.basis_index(s, a);
            for s2 in 0..frame.n_states() {
                b[(row, frame.basis_index(s2, a))] = eta.get(s2);
            }
        }
    }
    Ok(b)
}

/// Cognitive matrix `C = (1 - phi) Pi^T(lambda) + phi B^T`. Entry `(m, n)`
/// is the dissipation rate of the jump `|n> -> |m>`.
pub fn cognitive_matrix<T: Scalar>(
    frame: &DecisionFrame<T>,
    params: &PsychParams<T>,
    eta: &BeliefVector<T>,
) -> Result<DMatrix<T>> {
    let pi = subjective_choice_matrix(frame, params.lambda())?;
    let b = belief_matrix(frame, eta)?;
    let phi = params.phi();
    Ok(pi.transpose() * (T::one() - phi) + b.transpose() * phi)
}

/// Hamiltonian `diag(1_A, ..., 1_A)`: one all-ones `A x A` block per state.
pub fn hamiltonian<T: Scalar>(frame: &DecisionFrame<T>) -> DMatrix<T> {
    let d = frame.dim();
    let a_count = frame.n_actions();
    DMatrix::from_fn(d, d, |i, j| if i / a_count == j / a_count { T::one() } else { T::zero() })
}

/// The individual pieces of a Lindbladian, kept so the map can be applied
/// directly without forming the `d^2 x d^2` generator.
#[derive(Debug, Clone)]
pub struct LindbladTerms<T: Scalar> {
    pub alpha: T,
    pub hamiltonian: DMatrix<T>,
    pub rates: DMatrix<T>,
}

impl<T: Scalar> LindbladTerms<T> {
    pub fn new(frame: &DecisionFrame<T>, params: &PsychParams<T>, eta: &BeliefVector<T>) -> Result<Self> {
        Ok(Self {
            alpha: params.alpha(),
            hamiltonian: hamiltonian(frame),
            rates: cognitive_matrix(frame, params, eta)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    /// Applies `-i(1-alpha)[H, X] + alpha * sum_{m,n} gamma_mn D[L_mn](X)`
    /// with `L_mn = |m><n|`.
    ///
    /// With `L = |m><n|`, `L X L^dag = X_nn |m><m|` and `L^dag L = |n><n|`,
    /// so the dissipator reduces to a diagonal feed minus an anticommutator
    /// with `G = diag(sum_m gamma_mn)`.
    pub fn apply(&self, x: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
        let d = self.dim();
        let h = self.hamiltonian.map(|v| Complex::new(v, T::zero()));
        let coherent = (&h * x - x * &h) * Complex::new(T::zero(), -(T::one() - self.alpha));

        let mut dissipative = DMatrix::<Complex<T>>::zeros(d, d);
        let outflow: Vec<T> = (0..d).map(|n| self.rates.column(n).sum()).collect();
        for m in 0..d {
            let mut feed = Complex::new(T::zero(), T::zero());
            for n in 0..d {
                feed += x[(n, n)] * self.rates[(m, n)];
            }
            dissipative[(m, m)] += feed;
        }
        let half: T = lit(0.5);
        for i in 0..d {
            for j in 0..d {
                dissipative[(i, j)] -= x[(i, j)] * ((outflow[i] + outflow[j]) * half);
            }
        }
        coherent + dissipative * Complex::new(self.alpha, T::zero())
    }
}

/// Vectorized Lindblad generator acting on `vec(rho)`.
#[derive(Debug, Clone)]
pub struct Superoperator<T: Scalar> {
    dim: usize,
    generator: DMatrix<Complex<T>>,
}

impl<T: Scalar> Superoperator<T> {
    /// Builds the generator column by column from the action of `terms` on
    /// the matrix units `|i><j|`.
    pub fn from_terms(terms: &LindbladTerms<T>) -> Self {
        let d = terms.dim();
        let mut generator = DMatrix::zeros(d * d, d * d);
        let mut unit = DMatrix::<Complex<T>>::zeros(d, d);
        for j in 0..d {
            for i in 0..d {
                unit[(i, j)] = Complex::new(T::one(), T::zero());
                let image = terms.apply(&unit);
                generator.set_column(i + d * j, &vectorize(&image));
                unit[(i, j)] = Complex::new(T::zero(), T::zero());
            }
        }
        Self { dim: d, generator }
    }

    /// Hilbert-space dimension `d`; the generator is `d^2 x d^2`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generator(&self) -> &DMatrix<Complex<T>> {
        &self.generator
    }

    pub fn apply(&self, x: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
        devectorize(&(&self.generator * vectorize(x)), self.dim)
    }
}

/// Assembles the generator for `frame` under `params` with belief `eta`.
pub fn assemble_lindbladian<T: Scalar>(
    frame: &DecisionFrame<T>,
    params: &PsychParams<T>,
    eta: &BeliefVector<T>,
) -> Result<Superoperator<T>> {
    Ok(Superoperator::from_terms(&LindbladTerms::new(frame, params, eta)?))
}

pub fn vectorize<T: Scalar>(x: &DMatrix<Complex<T>>) -> DVector<Complex<T>> {
    DVector::from_column_slice(x.as_slice())
}

pub fn devectorize<T: Scalar>(v: &DVector<Complex<T>>, dim: usize) -> DMatrix<Complex<T>> {
    DMatrix::from_column_slice(dim, dim, v.as_slice())
}
