//! Semidefinite programs in primal form: minimize a linear form over a
//! decision vector subject to affine matrix inequalities and equalities.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("block {block}: coefficient matrix for variable {var} is not symmetric")]
    NotSymmetric { block: usize, var: usize },
    #[error("block {block}: matrix has size {got}, block size is {expected}")]
    BlockSize { block: usize, expected: usize, got: usize },
    #[error("variable index {var} out of range (problem has {nvars})")]
    VariableOutOfRange { var: usize, nvars: usize },
    #[error("vector of length {got} where {expected} was expected")]
    Length { expected: usize, got: usize },
}

/// `F_0 + Σ_j x_j F_j ⪰ 0` with symmetric `F`.
#[derive(Clone, Debug, PartialEq)]
pub struct PsdBlock<T: Real> {
    pub size: usize,
    pub constant: DMatrix<T>,
    /// `(j, F_j)` for the variables that appear in the block.
    pub terms: Vec<(usize, DMatrix<T>)>,
}

impl<T: Real> PsdBlock<T> {
    pub fn new(constant: DMatrix<T>) -> Self {
        PsdBlock {
            size: constant.nrows(),
            constant,
            terms: Vec::new(),
        }
    }

    pub fn with_term(mut self, var: usize, coef: DMatrix<T>) -> Self {
        self.terms.push((var, coef));
        self
    }

    pub fn evaluate(&self, x: &DVector<T>) -> DMatrix<T> {
        let mut m = self.constant.clone();
        for (j, f) in &self.terms {
            m += f * x[*j];
        }
        m
    }
}

/// Arrow-shaped block `[[I_q, v(x)], [v(x)ᵀ, t(x)]] ⪰ 0`, equivalent to
/// `t(x) ≥ ‖v(x)‖²`. Stored by its border only.
#[derive(Clone, Debug, PartialEq)]
pub struct ArrowBlock<T: Real> {
    pub v_constant: DVector<T>,
    /// `q × m` coefficients of the border vector.
    pub v_coef: DMatrix<T>,
    pub t_constant: T,
    pub t_coef: DVector<T>,
}

impl<T: Real> ArrowBlock<T> {
    pub fn dim(&self) -> usize {
        self.v_constant.len()
    }

    pub fn border(&self, x: &DVector<T>) -> (DVector<T>, T) {
        let v = &self.v_constant + &self.v_coef * x;
        let t = self.t_constant + self.t_coef.dot(x);
        (v, t)
    }

    /// The `(q + 1) × (q + 1)` matrix at `x`.
    pub fn dense(&self, x: &DVector<T>) -> DMatrix<T> {
        let (v, t) = self.border(x);
        arrow_matrix(&v, t)
    }
}

/// `[[I_q, v], [vᵀ, t]]`.
pub fn arrow_matrix<T: Real>(v: &DVector<T>, t: T) -> DMatrix<T> {
    let q = v.len();
    let mut m = DMatrix::identity(q + 1, q + 1);
    for i in 0..q {
        m[(i, q)] = v[i];
        m[(q, i)] = v[i];
    }
    m[(q, q)] = t;
    m
}

/// Componentwise `a + B x ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct NonnegBlock<T: Real> {
    pub constant: DVector<T>,
    pub coef: DMatrix<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Block<T: Real> {
    Psd(PsdBlock<T>),
    Arrow(ArrowBlock<T>),
    Nonneg(NonnegBlock<T>),
}

/// `coef · x + constant = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Equality<T: Real> {
    pub coef: DVector<T>,
    pub constant: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem<T: Real> {
    nvars: usize,
    pub objective: DVector<T>,
    pub objective_constant: T,
    pub blocks: Vec<Block<T>>,
    pub equalities: Vec<Equality<T>>,
}

impl<T: Real> SdpProblem<T> {
    pub fn new(nvars: usize) -> Self {
        SdpProblem {
            nvars,
            objective: DVector::zeros(nvars),
            objective_constant: T::zero(),
            blocks: Vec::new(),
            equalities: Vec::new(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn set_objective(&mut self, coef: DVector<T>, constant: T) -> Result<(), ProblemError> {
        self.check_len(coef.len())?;
        self.objective = coef;
        self.objective_constant = constant;
        Ok(())
    }

    pub fn add_psd(&mut self, block: PsdBlock<T>) -> Result<usize, ProblemError> {
        let id = self.blocks.len();
        let sym_tol = T::lit(1e3) * T::eps();
        let check = |var: usize, m: &DMatrix<T>| -> Result<(), ProblemError> {
            if m.nrows() != block.size || m.ncols() != block.size {
                return Err(ProblemError::BlockSize {
                    block: id,
                    expected: block.size,
                    got: m.nrows().max(m.ncols()),
                });
            }
            let scale = m.amax().max(T::one());
            if (m - m.transpose()).amax() > sym_tol * scale {
                return Err(ProblemError::NotSymmetric { block: id, var });
            }
            Ok(())
        };
        check(usize::MAX, &block.constant)?;
        for (j, f) in &block.terms {
            if *j >= self.nvars {
                return Err(ProblemError::VariableOutOfRange {
                    var: *j,
                    nvars: self.nvars,
                });
            }
            check(*j, f)?;
        }
        self.blocks.push(Block::Psd(block));
        Ok(id)
    }

    pub fn add_arrow(&mut self, block: ArrowBlock<T>) -> Result<usize, ProblemError> {
        let q = block.v_constant.len();
        if block.v_coef.nrows() != q {
            return Err(ProblemError::Length {
                expected: q,
                got: block.v_coef.nrows(),
            });
        }
        self.check_len(block.v_coef.ncols())?;
        self.check_len(block.t_coef.len())?;
        self.blocks.push(Block::Arrow(block));
        Ok(self.blocks.len() - 1)
    }

    pub fn add_nonneg(&mut self, block: NonnegBlock<T>) -> Result<usize, ProblemError> {
        if block.coef.nrows() != block.constant.len() {
            return Err(ProblemError::Length {
                expected: block.constant.len(),
                got: block.coef.nrows(),
            });
        }
        self.check_len(block.coef.ncols())?;
        self.blocks.push(Block::Nonneg(block));
        Ok(self.blocks.len() - 1)
    }

    pub fn add_equality(&mut self, coef: DVector<T>, constant: T) -> Result<(), ProblemError> {
        self.check_len(coef.len())?;
        self.equalities.push(Equality { coef, constant });
        Ok(())
    }

    fn check_len(&self, len: usize) -> Result<(), ProblemError> {
        if len != self.nvars {
            return Err(ProblemError::Length {
                expected: self.nvars,
                got: len,
            });
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &DVector<T>) -> T {
        self.objective.dot(x) + self.objective_constant
    }

    /// Block `b` materialized as a dense symmetric matrix (a column for non-negative blocks).
    pub fn block_value(&self, b: usize, x: &DVector<T>) -> DMatrix<T> {
        match &self.blocks[b] {
            Block::Psd(p) => p.evaluate(x),
            Block::Arrow(a) => a.dense(x),
            Block::Nonneg(n) => {
                let v = &n.constant + &n.coef * x;
                DMatrix::from_column_slice(v.len(), 1, v.as_slice())
            }
        }
    }

    /// Smallest eigenvalue (or entry, for non-negative blocks) of block `b` at `x`.
    pub fn block_min_eig(&self, b: usize, x: &DVector<T>) -> T {
        match &self.blocks[b] {
            Block::Nonneg(n) => (&n.constant + &n.coef * x)
                .iter()
                .fold(T::max_value().unwrap(), |a, &v| a.min(v)),
            _ => crate::linalg::min_eigenvalue(&self.block_value(b, x)),
        }
    }

    /// Largest violation of the equality constraints at `x`.
    pub fn equality_residual(&self, x: &DVector<T>) -> T {
        self.equalities
            .iter()
            .map(|e| (e.coef.dot(x) + e.constant).abs())
            .fold(T::zero(), |a, v| a.max(v))
    }
}
