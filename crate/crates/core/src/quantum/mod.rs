//! Open-quantum (Lindblad) model of a single agent's decision.
//!
//! An agent with a belief `eta` over states of nature evolves a density
//! operator under a Lindbladian parameterized by `(alpha, lambda, phi)`; the
//! stationary state, projected onto actions, is the agent's choice
//! distribution.

mod density;
mod frame;
mod lindblad;
mod steady;
mod stp;

use std::io::Write;

use nalgebra::{Complex, DMatrix};

pub use density::{evolve, ActionDistribution, DensityOperator};
pub use frame::{BeliefVector, DecisionFrame, PsychParams, Scalar};
pub use lindblad::{
    assemble_lindbladian, belief_matrix, cognitive_matrix, devectorize, hamiltonian, subjective_choice_matrix,
    vectorize, LindbladTerms, Superoperator,
};
pub use stp::{certain_defection, sure_thing_sweep, unit_sweep, SureThingRow, SureThingSweep, DEFECT};
pub use steady::{
    long_time_state, steady_state, steady_state_distribution, steady_state_of, SteadyState, SteadyStateConfig,
    SteadyStateMethod,
};

pub(crate) use frame::to_f64;

use crate::error::Result;

/// Writes `m` as CSV rows `row,col,re,im`, row-major.
pub fn write_matrix_csv<T: Scalar, W: Write>(m: &DMatrix<Complex<T>>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["row", "col", "re", "im"])?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            w.write_record(&[i.to_string(), j.to_string(), to_f64(z.re).to_string(), to_f64(z.im).to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_csv_layout() {
        let m = DMatrix::from_row_slice(2, 2, &[
            Complex::new(1.0, 0.0),
            Complex::new(0.0, -2.5),
            Complex::new(0.0, 2.5),
            Complex::new(3.0, 0.0),
        ]);
        let mut buf = Vec::new();
        write_matrix_csv(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "row,col,re,im\n0,0,1,0\n0,1,0,-2.5\n1,0,0,2.5\n1,1,3,0\n");
    }
}
