//! Linearization of `‖v‖² ≤ E·c` as the arrow-shaped block
//! `[[I_q, v], [vᵀ, E·c]] ⪰ 0` (Schur complement against the identity).

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use super::problem::{arrow_matrix, ArrowBlock};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArrowError {
    /// `c = 0`: the reference matrix already satisfies the rank condition.
    #[error("scale c = {0} is not positive")]
    NonPositiveScale(f64),
}

/// Template for `[[I_q, v], [vᵀ, E·c]]` with `v` and `E` affine in the decision vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArrowConstraint<T> {
    pub scale: T,
    pub dim: usize,
}

pub fn arrow_constraint<T: Real>(scale: T, dim: usize) -> Result<ArrowConstraint<T>, ArrowError> {
    if !(scale > T::zero()) {
        return Err(ArrowError::NonPositiveScale(scale.to_f64_lossy()));
    }
    Ok(ArrowConstraint { scale, dim })
}

impl<T: Real> ArrowConstraint<T> {
    /// The dense matrix for given `v` and `E`.
    pub fn matrix(&self, v: &DVector<T>, e: T) -> DMatrix<T> {
        assert_eq!(v.len(), self.dim);
        arrow_matrix(v, e * self.scale)
    }

    /// Whether `‖v‖² ≤ E·c`.
    pub fn holds(&self, v: &DVector<T>, e: T) -> bool {
        v.norm_squared() <= e * self.scale
    }

    /// Block with `v(x) = v_constant + v_coef x` and `E = x[e_var]`.
    pub fn instantiate(
        &self,
        v_constant: DVector<T>,
        v_coef: DMatrix<T>,
        e_var: usize,
    ) -> ArrowBlock<T> {
        let m = v_coef.ncols();
        let mut t_coef = DVector::zeros(m);
        t_coef[e_var] = self.scale;
        ArrowBlock {
            v_constant,
            v_coef,
            t_constant: T::zero(),
            t_coef,
        }
    }

    /// Block with a fixed `E` (no decision variable for it).
    pub fn instantiate_fixed(&self, v_constant: DVector<T>, v_coef: DMatrix<T>, e: T) -> ArrowBlock<T> {
        let m = v_coef.ncols();
        ArrowBlock {
            v_constant,
            v_coef,
            t_constant: e * self.scale,
            t_coef: DVector::zeros(m),
        }
    }
}
