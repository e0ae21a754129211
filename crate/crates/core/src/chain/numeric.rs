use nalgebra::{DMatrix, DVector};

use super::distribution::{SolveMethod, StationaryDistribution};
use super::matrix::TransitionMatrix;
use crate::error::ModelError;

/// Values this close below zero are treated as round-off.
const NEGATIVE_ROUNDOFF: f64 = 1e-12;

/// Solves `πP = π`, `Σπ = 1` by a dense LU solve.
///
/// The last balance equation is replaced by the normalization row. At `p = 0`
/// and `p = 1` the chain is absorbing and the point mass is returned instead.
pub fn stationary_numeric(matrix: &TransitionMatrix) -> Result<StationaryDistribution, ModelError> {
    let params = matrix.params();
    let space = matrix.space().clone();
    if params.p() == 0.0 {
        return Ok(StationaryDistribution::point_mass(
            space,
            1,
            SolveMethod::Numeric,
        ));
    }
    if params.p() == 1.0 {
        let full = space.capacity();
        return Ok(StationaryDistribution::point_mass(
            space,
            full,
            SolveMethod::Numeric,
        ));
    }

    let n = space.len();
    let mut system: DMatrix<f64> = matrix.entries().transpose() - DMatrix::identity(n, n);
    system.row_mut(n - 1).fill(1.0);
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;

    let solution = system.lu().solve(&rhs).ok_or(ModelError::SingularSystem)?;
    let pi = solution
        .iter()
        .map(|&x| {
            if (-NEGATIVE_ROUNDOFF..0.0).contains(&x) {
                0.0
            } else {
                x
            }
        })
        .collect();
    Ok(StationaryDistribution::new(space, pi, SolveMethod::Numeric))
}
