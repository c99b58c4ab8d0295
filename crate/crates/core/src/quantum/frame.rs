//! Parameter, frame and belief types shared by the quantum decision model.

use nalgebra::RealField;

use crate::error::{Error, Result};

/// Scalar types the quantum core can run on.
pub trait Scalar: RealField + Copy {}

impl<T: RealField + Copy> Scalar for T {}

pub(crate) fn lit<T: Scalar>(x: f64) -> T {
    nalgebra::convert(x)
}

pub(crate) fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_subset().unwrap_or(f64::NAN)
}

/// Tolerance that never drops below a few hundred ulps of `T`.
pub(crate) fn tol<T: Scalar>(nominal: f64, ulps: f64) -> T {
    let eps = to_f64(T::default_epsilon());
    lit(nominal.max(ulps * eps))
}

/// Psychological parameters `(alpha, lambda, phi)` of the Lindbladian.
///
/// `alpha` weighs dissipative (Markovian) against coherent evolution,
/// `lambda` sharpens utility discrimination and `phi` couples the belief
/// about the state of nature into the dissipation rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsychParams<T> {
    alpha: T,
    lambda: T,
    phi: T,
}

impl<T: Scalar> PsychParams<T> {
    pub fn new(alpha: T, lambda: T, phi: T) -> Result<Self> {
        let (zero, one) = (T::zero(), T::one());
        if !(alpha >= zero && alpha <= one) {
            return Err(Error::invalid(format!("alpha must lie in [0,1], got {}", to_f64(alpha))));
        }
        if !(lambda >= zero) || !lambda.is_finite() {
            return Err(Error::invalid(format!(
                "lambda must be finite and >= 0, got {}",
                to_f64(lambda)
            )));
        }
        if !(phi >= zero && phi <= one) {
            return Err(Error::invalid(format!("phi must lie in [0,1], got {}", to_f64(phi))));
        }
        Ok(Self { alpha, lambda, phi })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn phi(&self) -> T {
        self.phi
    }

    /// `weight * self + (1 - weight) * other`, component-wise.
    pub fn interpolate(&self, other: &Self, weight: T) -> Result<Self> {
        let rest = T::one() - weight;
        Self::new(
            weight * self.alpha + rest * other.alpha,
            weight * self.lambda + rest * other.lambda,
            weight * self.phi + rest * other.phi,
        )
    }

    pub fn to_f64(&self) -> [f64; 3] {
        [to_f64(self.alpha), to_f64(self.lambda), to_f64(self.phi)]
    }
}

/// State space, action space and the utility table `u(a|x)`.
///
/// Basis vectors of the joint space are ordered state-major: index
/// `state * n_actions + action`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionFrame<T> {
    n_states: usize,
    n_actions: usize,
    // row-major, utility[a * n_states + x]
    utility: Vec<T>,
}

impl<T: Scalar> DecisionFrame<T> {
    /// `utility[a][x]` is the payoff of action `a` in state `x`.
    pub fn new(utility: Vec<Vec<T>>) -> Result<Self> {
        let n_actions = utility.len();
        if n_actions == 0 {
            return Err(Error::invalid("utility table has no actions"));
        }
        let n_states = utility[0].len();
        if n_states == 0 {
            return Err(Error::invalid("utility table has no states"));
        }
        let mut flat = Vec::with_capacity(n_actions * n_states);
        for row in &utility {
            if row.len() != n_states {
                return Err(Error::DimensionMismatch {
                    what: "utility row",
                    expected: n_states,
                    actual: row.len(),
                });
            }
            for &u in row {
                if !(u > T::zero()) || !u.is_finite() {
                    return Err(Error::invalid(format!(
                        "utilities must be finite and strictly positive, got {}",
                        to_f64(u)
                    )));
                }
                flat.push(u);
            }
        }
        Ok(Self { n_states, n_actions, utility: flat })
    }

    /// Two-player Prisoner's Dilemma frame. States and actions are
    /// `0 = cooperate`, `1 = defect`; `cc = u(C|C)`, `cd = u(C|D)`,
    /// `dd = u(D|D)`, `dc = u(D|C)`.
    pub fn prisoners_dilemma(cc: T, cd: T, dd: T, dc: T) -> Result<Self> {
        Self::new(vec![vec![cc, cd], vec![dc, dd]])
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Dimension `n * A` of the joint Hilbert space.
    pub fn dim(&self) -> usize {
        self.n_states * self.n_actions
    }

    pub fn utility(&self, action: usize, state: usize) -> T {
        self.utility[action * self.n_states + state]
    }

    pub fn basis_index(&self, state: usize, action: usize) -> usize {
        state * self.n_actions + action
    }
}

/// Probability vector over states of nature.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefVector<T>(Vec<T>);

impl<T: Scalar> BeliefVector<T> {
    pub fn new(probabilities: Vec<T>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::invalid("belief vector is empty"));
        }
        let mut sum = T::zero();
        for &p in &probabilities {
            if !(p >= T::zero()) || !p.is_finite() {
                return Err(Error::invalid(format!(
                    "belief entries must be finite and >= 0, got {}",
                    to_f64(p)
                )));
            }
            sum += p;
        }
        let slack: T = tol(1e-12, 16.0 * probabilities.len() as f64);
        if (sum - T::one()).abs() > slack {
            return Err(Error::invalid(format!(
                "belief must sum to 1, got {}",
                to_f64(sum)
            )));
        }
        Ok(Self(probabilities))
    }

    /// Normalizes nonnegative weights onto the simplex.
    pub fn from_weights(weights: Vec<T>) -> Result<Self> {
        let sum = weights.iter().fold(T::zero(), |acc, &w| acc + w);
        if !(sum > T::zero()) || !sum.is_finite() {
            return Err(Error::invalid("belief weights must have a positive finite sum"));
        }
        Self::new(weights.into_iter().map(|w| w / sum).collect())
    }

    pub fn point_mass(len: usize, index: usize) -> Result<Self> {
        if index >= len {
            return Err(Error::DimensionMismatch { what: "point mass index", expected: len, actual: index });
        }
        let mut v = vec![T::zero(); len];
        v[index] = T::one();
        Ok(Self(v))
    }

    pub fn uniform(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::invalid("belief vector is empty"));
        }
        let w = T::one() / lit::<T>(len as f64);
        Ok(Self(vec![w; len]))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn get(&self, i: usize) -> T {
        self.0[i]
    }
}
