//! Steady-state action distribution of the Lindbladian.
//!
//! The primary route takes the null space of the vectorized generator from
//! its SVD. When the null space is not one-dimensional the state is found by
//! evolving `I/d` for doubling times until two probes agree.

use nalgebra::{Complex, ComplexField, DMatrix};

use super::density::{action_marginal, evolve_raw, hermitian_part, ActionDistribution, DensityOperator};
use super::frame::{lit, to_f64, BeliefVector, DecisionFrame, PsychParams, Scalar};
use super::lindblad::{assemble_lindbladian, devectorize, Superoperator};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateConfig<T> {
    /// Singular values below `null_tol * max(1, sigma_max)` count as zero.
    pub null_tol: T,
    /// Agreement required between probes at `t` and `2t`.
    pub probe_tol: T,
    pub probe_start: T,
    pub max_doublings: usize,
}

impl<T: Scalar> Default for SteadyStateConfig<T> {
    fn default() -> Self {
        Self { null_tol: lit(1e-9), probe_tol: lit(1e-8), probe_start: lit(50.0), max_doublings: 12 }
    }
}

/// How a steady state was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SteadyStateMethod {
    NullSpace,
    /// Long-time evolution; carries the later probe time.
    Evolution { t: f64 },
}

#[derive(Debug, Clone)]
pub struct SteadyState<T: Scalar> {
    pub rho: DMatrix<Complex<T>>,
    pub gamma: ActionDistribution<T>,
    pub method: SteadyStateMethod,
}

/// `Gamma^eta(a)`, the stationary action distribution at belief `eta`.
pub fn steady_state_distribution<T: Scalar>(
    frame: &DecisionFrame<T>,
    params: &PsychParams<T>,
    eta: &BeliefVector<T>,
) -> Result<ActionDistribution<T>> {
    Ok(steady_state(frame, params, eta, &SteadyStateConfig::default())?.gamma)
}

pub fn steady_state<T: Scalar>(
    frame: &DecisionFrame<T>,
    params: &PsychParams<T>,
    eta: &BeliefVector<T>,
    config: &SteadyStateConfig<T>,
) -> Result<SteadyState<T>> {
    if !(params.alpha() > T::zero()) {
        return Err(Error::UnsupportedParameter(
            "alpha = 0 is purely Hamiltonian and has no steady state".into(),
        ));
    }
    let superop = assemble_lindbladian(frame, params, eta)?;
    steady_state_of(&superop, frame, config)
}

pub fn steady_state_of<T: Scalar>(
    superop: &Superoperator<T>,
    frame: &DecisionFrame<T>,
    config: &SteadyStateConfig<T>,
) -> Result<SteadyState<T>> {
    if let Some(rho) = null_space_state(superop, config) {
        if let Ok(gamma) = action_marginal(&rho, frame) {
            return Ok(SteadyState { rho, gamma, method: SteadyStateMethod::NullSpace });
        }
    }
    let start = DensityOperator::maximally_mixed(superop.dim())?;
    long_time_state(superop, frame, start.matrix(), config)
}

/// Unique trace-normalized null vector of the generator, if there is one.
fn null_space_state<T: Scalar>(superop: &Superoperator<T>, config: &SteadyStateConfig<T>) -> Option<DMatrix<Complex<T>>> {
    let svd = superop.generator().clone().svd(false, true);
    let v_t = svd.v_t.as_ref()?;
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().copied().fold(T::zero(), |m, x| if x > m { x } else { m });
    let cutoff = config.null_tol * if sigma_max > T::one() { sigma_max } else { T::one() };
    let null: Vec<usize> = (0..sigma.len()).filter(|&i| sigma[i] <= cutoff).collect();
    if null.len() != 1 {
        return None;
    }
    // Rows of V^dag are conjugated right singular vectors.
    let v = v_t.row(null[0]).transpose().map(|z| z.conj());
    let rho = devectorize(&v, superop.dim());
    let trace = rho.trace();
    if trace.modulus() <= lit(1e-12) {
        return None;
    }
    Some(hermitian_part(&(rho / trace)))
}

/// Evolves `rho0` to `t` and `2t` for `t = probe_start * 2^k` until the two
/// action distributions agree within `probe_tol`.
pub fn long_time_state<T: Scalar>(
    superop: &Superoperator<T>,
    frame: &DecisionFrame<T>,
    rho0: &DMatrix<Complex<T>>,
    config: &SteadyStateConfig<T>,
) -> Result<SteadyState<T>> {
    let two: T = lit(2.0);
    let mut t = config.probe_start;
    let mut first = action_marginal(&evolve_raw(superop, rho0, t)?, frame)?;
    let mut last_gap = T::zero();
    let mut last_first = first.clone();
    let mut last_second = first.clone();
    for _ in 0..=config.max_doublings {
        let rho = evolve_raw(superop, rho0, t * two)?;
        let second = action_marginal(&rho, frame)?;
        let gap = first.max_abs_diff(&second);
        if gap <= config.probe_tol {
            return Ok(SteadyState {
                rho: hermitian_part(&rho),
                gamma: second,
                method: SteadyStateMethod::Evolution { t: to_f64(t * two) },
            });
        }
        last_gap = gap;
        last_first = first;
        last_second = second.clone();
        first = second;
        t *= two;
    }
    Err(Error::SteadyStateNonConvergence {
        t: to_f64(t / two),
        gap: to_f64(last_gap),
        first: last_first.as_slice().iter().map(|&x| to_f64(x)).collect(),
        second: last_second.as_slice().iter().map(|&x| to_f64(x)).collect(),
    })
}
