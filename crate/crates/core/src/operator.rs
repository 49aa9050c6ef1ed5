//! The `2N x 2N` Schwarz iteration matrix `T` and its matrix-free action.
//!
//! With `r = delta / ell`, `T` is built from four `2 x 2` generators
//!
//! ```text
//! T1 = | 0  1-r |   T2 = |  r   0 |   T1~ = | 0  1-r |   T2~ = |  0   0 |
//!      | 0   r  |        | 1-r  0 |         | 0   0  |         | 1-r  0 |
//! ```
//!
//! laid out block-tridiagonally: block-row 1 is `(0, T2~, 0, ...)`, block-row
//! `j` for `2 <= j <= N-1` has `T1` in block-column `j-1` and `T2` in
//! block-column `j+1`, and block-row `N` is `(..., 0, T1~, 0)`. The zero rows
//! of `T1~` and `T2~` carry the homogeneous boundary conditions.
//!
//! Interface vectors are stored as `N` blocks of two slots. Block indices in
//! this module's API are 0-based; documentation uses the 1-based convention.

use thiserror::Error;

use crate::geometry::Decomposition;
use crate::numerics::Scalar;

/// Default cap on the dense dimension `2N`.
pub const DEFAULT_DENSE_CAP: usize = 20_000;

pub type Pair<S> = [S; 2];
pub type Block<S> = [[S; 2]; 2];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("dimension mismatch: operator has {expected} blocks, vector has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("interface vectors need at least 2 blocks (got {0})")]
    TooFewBlocks(usize),
    #[error("flat interface vector has odd length {0}")]
    OddLength(usize),
    #[error("dense dimension {dim} exceeds cap {cap}")]
    SizeCap { dim: usize, cap: usize },
    #[error("block relation precondition violated: {0}")]
    Precondition(String),
}

pub(crate) fn block_mul<S: Scalar>(m: &Block<S>, v: &Pair<S>) -> Pair<S> {
    [
        m[0][0].clone() * v[0].clone() + m[0][1].clone() * v[1].clone(),
        m[1][0].clone() * v[0].clone() + m[1][1].clone() * v[1].clone(),
    ]
}

pub(crate) fn pair_add<S: Scalar>(x: Pair<S>, y: Pair<S>) -> Pair<S> {
    let [x0, x1] = x;
    let [y0, y1] = y;
    [x0 + y0, x1 + y1]
}

/// Slot swap `P (x, y) = (y, x)`.
pub fn swap<S: Clone>(v: &Pair<S>) -> Pair<S> {
    [v[1].clone(), v[0].clone()]
}

/// The four generator blocks for a given overlap ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorBlocks<S> {
    pub ratio: S,
    pub t1: Block<S>,
    pub t2: Block<S>,
    pub t1_tilde: Block<S>,
    pub t2_tilde: Block<S>,
}

impl<S: Scalar> GeneratorBlocks<S> {
    pub fn new(decomposition: &Decomposition<S>) -> Self {
        Self::from_ratio(decomposition.overlap_ratio())
    }

    /// Evaluates the block formulas for any `r`, without checking that `r`
    /// comes from a valid decomposition.
    pub fn from_ratio(ratio: S) -> Self {
        let z = S::zero;
        let r = ratio.clone();
        let s = S::one() - ratio.clone();
        GeneratorBlocks {
            t1: [[z(), s.clone()], [z(), r.clone()]],
            t2: [[r, z()], [s.clone(), z()]],
            t1_tilde: [[z(), s.clone()], [z(), z()]],
            t2_tilde: [[z(), z()], [s, z()]],
            ratio,
        }
    }
}

/// An element of `R^{2N}` viewed as `N` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceVector<S> {
    blocks: Vec<Pair<S>>,
}

impl<S: Scalar> InterfaceVector<S> {
    pub fn from_blocks(blocks: Vec<Pair<S>>) -> Self {
        InterfaceVector { blocks }
    }

    /// Splits `(v_1, ..., v_{2N})` into consecutive pairs.
    pub fn from_flat(values: Vec<S>) -> Result<Self, OperatorError> {
        if !values.len().is_multiple_of(2) {
            return Err(OperatorError::OddLength(values.len()));
        }
        let mut it = values.into_iter();
        let mut blocks = Vec::new();
        while let (Some(x), Some(y)) = (it.next(), it.next()) {
            blocks.push([x, y]);
        }
        Ok(InterfaceVector { blocks })
    }

    /// The all-ones vector `1_N`.
    pub fn ones(n: usize) -> Self {
        Self::constant(n, S::one())
    }

    pub fn zeros(n: usize) -> Self {
        Self::constant(n, S::zero())
    }

    pub fn constant(n: usize, value: S) -> Self {
        InterfaceVector {
            blocks: vec![[value.clone(), value]; n],
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Pair<S>] {
        &self.blocks
    }

    pub fn block(&self, j: usize) -> &Pair<S> {
        &self.blocks[j]
    }

    pub fn flatten(&self) -> Vec<S> {
        self.blocks.iter().flat_map(|b| b.iter().cloned()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &S> {
        self.blocks.iter().flat_map(|b| b.iter())
    }

    /// Maximum absolute component.
    pub fn norm_inf(&self) -> S {
        self.iter()
            .map(Scalar::abs)
            .fold(S::zero(), |acc, x| S::max_of(acc, x))
    }

    pub fn to_f64(&self) -> InterfaceVector<f64> {
        InterfaceVector {
            blocks: self
                .blocks
                .iter()
                .map(|[x, y]| [x.to_f64(), y.to_f64()])
                .collect(),
        }
    }
}

/// `w = T v` evaluated blockwise:
/// `w_1 = T2~ v_2`, `w_j = T1 v_{j-1} + T2 v_{j+1}`, `w_N = T1~ v_{N-1}`.
pub fn apply_blocks<S: Scalar>(
    blocks: &GeneratorBlocks<S>,
    v: &InterfaceVector<S>,
) -> Result<InterfaceVector<S>, OperatorError> {
    let n = v.num_blocks();
    if n < 2 {
        return Err(OperatorError::TooFewBlocks(n));
    }
    let vb = v.blocks();
    let out = (0..n)
        .map(|j| {
            if j == 0 {
                block_mul(&blocks.t2_tilde, &vb[1])
            } else if j == n - 1 {
                block_mul(&blocks.t1_tilde, &vb[n - 2])
            } else {
                pair_add(
                    block_mul(&blocks.t1, &vb[j - 1]),
                    block_mul(&blocks.t2, &vb[j + 1]),
                )
            }
        })
        .collect();
    Ok(InterfaceVector::from_blocks(out))
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<S> {
    dim: usize,
    data: Vec<S>,
}

impl<S: Scalar> DenseMatrix<S> {
    pub fn zeros(dim: usize) -> Self {
        DenseMatrix {
            dim,
            data: vec![S::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, S::one());
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: S) {
        self.data[i * self.dim + j] = value;
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[S]> {
        self.data.chunks(self.dim.max(1))
    }

    pub fn entries(&self) -> impl Iterator<Item = &S> {
        self.data.iter()
    }

    /// `self * other`, skipping zero entries of `self`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * n + j;
                    out.data[idx] = out.data[idx].clone() + a.clone() * b.clone();
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.dim, "mul_vec dimension mismatch");
        self.rows()
            .map(|row| {
                row.iter()
                    .zip(v)
                    .fold(S::zero(), |acc, (a, x)| acc + a.clone() * x.clone())
            })
            .collect()
    }

    pub fn row_sums(&self) -> Vec<S> {
        self.rows()
            .map(|row| row.iter().cloned().fold(S::zero(), |acc, x| acc + x))
            .collect()
    }

    /// Induced infinity norm: maximum absolute row sum.
    pub fn norm_inf(&self) -> S {
        self.rows()
            .map(|row| {
                row.iter()
                    .map(Scalar::abs)
                    .fold(S::zero(), |acc, x| acc + x)
            })
            .fold(S::zero(), S::max_of)
    }

    pub fn to_f64(&self) -> DenseMatrix<f64> {
        DenseMatrix {
            dim: self.dim,
            data: self.data.iter().map(Scalar::to_f64).collect(),
        }
    }
}

impl DenseMatrix<f64> {
    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }
}

/// A decomposition together with its generator blocks.
///
/// [`from_parts`](Self::from_parts) accepts arbitrary blocks so verifiers can
/// be exercised against deliberately corrupted operators.
#[derive(Debug, Clone, PartialEq)]
pub struct SchwarzOperator<S> {
    decomposition: Decomposition<S>,
    blocks: GeneratorBlocks<S>,
}

impl<S: Scalar> SchwarzOperator<S> {
    pub fn new(decomposition: Decomposition<S>) -> Self {
        let blocks = GeneratorBlocks::new(&decomposition);
        SchwarzOperator {
            decomposition,
            blocks,
        }
    }

    pub fn from_parts(decomposition: Decomposition<S>, blocks: GeneratorBlocks<S>) -> Self {
        SchwarzOperator {
            decomposition,
            blocks,
        }
    }

    pub fn decomposition(&self) -> &Decomposition<S> {
        &self.decomposition
    }

    pub fn blocks(&self) -> &GeneratorBlocks<S> {
        &self.blocks
    }

    /// Same operator on the float backend, blocks converted entrywise.
    pub fn to_f64(&self) -> SchwarzOperator<f64> {
        let conv = |b: &Block<S>| b.clone().map(|row| row.map(|x| x.to_f64()));
        SchwarzOperator {
            decomposition: self.decomposition.to_f64(),
            blocks: GeneratorBlocks {
                ratio: self.blocks.ratio.to_f64(),
                t1: conv(&self.blocks.t1),
                t2: conv(&self.blocks.t2),
                t1_tilde: conv(&self.blocks.t1_tilde),
                t2_tilde: conv(&self.blocks.t2_tilde),
            },
        }
    }

    pub fn subdomains(&self) -> usize {
        self.decomposition.subdomains()
    }

    pub fn dim(&self) -> usize {
        2 * self.subdomains()
    }

    pub fn apply(&self, v: &InterfaceVector<S>) -> Result<InterfaceVector<S>, OperatorError> {
        self.check_len(v)?;
        apply_blocks(&self.blocks, v)
    }

    /// `T^n v` by `n` matrix-free applications.
    pub fn power_apply(
        &self,
        v: &InterfaceVector<S>,
        n: usize,
    ) -> Result<InterfaceVector<S>, OperatorError> {
        self.check_len(v)?;
        let mut w = v.clone();
        for _ in 0..n {
            w = apply_blocks(&self.blocks, &w)?;
        }
        Ok(w)
    }

    /// Iterates `v, T v, T^2 v, ...` lazily.
    pub fn orbit(&self, v: InterfaceVector<S>) -> Result<Orbit<'_, S>, OperatorError> {
        self.check_len(&v)?;
        Ok(Orbit {
            blocks: &self.blocks,
            next: Some(v),
        })
    }

    pub fn assemble_dense(&self, cap: usize) -> Result<IterationMatrix<S>, OperatorError> {
        let dim = self.dim();
        if dim > cap {
            return Err(OperatorError::SizeCap { dim, cap });
        }
        let n = self.subdomains();
        let mut dense = DenseMatrix::zeros(dim);
        let mut put = |block_row: usize, block_col: usize, b: &Block<S>| {
            for (p, row) in b.iter().enumerate() {
                for (q, x) in row.iter().enumerate() {
                    dense.set(2 * block_row + p, 2 * block_col + q, x.clone());
                }
            }
        };
        put(0, 1, &self.blocks.t2_tilde);
        for j in 1..n - 1 {
            put(j, j - 1, &self.blocks.t1);
            put(j, j + 1, &self.blocks.t2);
        }
        put(n - 1, n - 2, &self.blocks.t1_tilde);
        Ok(IterationMatrix {
            operator: self.clone(),
            dense,
        })
    }

    fn check_len(&self, v: &InterfaceVector<S>) -> Result<(), OperatorError> {
        if v.num_blocks() != self.subdomains() {
            return Err(OperatorError::DimensionMismatch {
                expected: self.subdomains(),
                found: v.num_blocks(),
            });
        }
        Ok(())
    }
}

pub struct Orbit<'a, S> {
    blocks: &'a GeneratorBlocks<S>,
    next: Option<InterfaceVector<S>>,
}

impl<S: Scalar> Iterator for Orbit<'_, S> {
    type Item = InterfaceVector<S>;

    fn next(&mut self) -> Option<Self::Item> {
        let current = self.next.take()?;
        self.next = apply_blocks(self.blocks, &current).ok();
        Some(current)
    }
}

/// Materialized iteration matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationMatrix<S> {
    operator: SchwarzOperator<S>,
    dense: DenseMatrix<S>,
}

impl<S: Scalar> IterationMatrix<S> {
    pub fn operator(&self) -> &SchwarzOperator<S> {
        &self.operator
    }

    pub fn dense(&self) -> &DenseMatrix<S> {
        &self.dense
    }

    pub fn mul_vector(&self, v: &InterfaceVector<S>) -> Result<InterfaceVector<S>, OperatorError> {
        self.operator.check_len(v)?;
        InterfaceVector::from_flat(self.dense.mul_vec(&v.flatten()))
    }
}

/// Outcome of checking the three generator-block relations on one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockRelationReport {
    /// `b 1 < T1 (a, b) + T2 1 < 1`.
    pub bounded_by_one: bool,
    /// `b 1 <= T1 (a, b) + T2 (c, d) <= c 1`, with both equalities iff `b = c`.
    pub sandwiched: bool,
    /// `b == c` for this sample, i.e. `sandwiched` exercised the equality case.
    pub equality_case: bool,
    /// `T1 1 + T2 1 = 1`.
    pub partition_of_unity: bool,
    /// `T1 (a, b) + T2 (c, d) = P (T1 (d, c) + T2 (b, a))`.
    pub swap_conjugation: bool,
}

impl BlockRelationReport {
    pub fn all_pass(&self) -> bool {
        self.bounded_by_one && self.sandwiched && self.partition_of_unity && self.swap_conjugation
    }
}

fn all_lt<S: Scalar>(x: &Pair<S>, y: &Pair<S>) -> bool {
    x[0] < y[0] && x[1] < y[1]
}

fn all_le<S: Scalar>(x: &Pair<S>, y: &Pair<S>) -> bool {
    x[0] <= y[0] && x[1] <= y[1]
}

/// Checks the generator relations for `a < b <= c < d` in `[0, 1)`.
pub fn check_block_relations<S: Scalar>(
    a: &S,
    b: &S,
    c: &S,
    d: &S,
    blocks: &GeneratorBlocks<S>,
) -> Result<BlockRelationReport, OperatorError> {
    let (zero, one) = (S::zero(), S::one());
    for (name, x) in [("a", a), ("b", b), ("c", c), ("d", d)] {
        if *x < zero || *x >= one {
            return Err(OperatorError::Precondition(format!(
                "{name} = {x} is outside [0, 1)"
            )));
        }
    }
    if !(a < b && b <= c && c < d) {
        return Err(OperatorError::Precondition(format!(
            "need a < b <= c < d, got ({a}, {b}, {c}, {d})"
        )));
    }

    let ones: Pair<S> = [one.clone(), one.clone()];
    let ab = [a.clone(), b.clone()];
    let cd = [c.clone(), d.clone()];
    let b1 = [b.clone(), b.clone()];
    let c1 = [c.clone(), c.clone()];

    let lhs2 = pair_add(block_mul(&blocks.t1, &ab), block_mul(&blocks.t2, &ones));
    let bounded_by_one = all_lt(&b1, &lhs2) && all_lt(&lhs2, &ones);

    let mid = pair_add(block_mul(&blocks.t1, &ab), block_mul(&blocks.t2, &cd));
    let equality_case = b == c;
    let sandwiched = if equality_case {
        mid == b1 && mid == c1
    } else {
        all_lt(&b1, &mid) && all_lt(&mid, &c1)
    } && all_le(&b1, &mid)
        && all_le(&mid, &c1);

    let partition_of_unity =
        pair_add(block_mul(&blocks.t1, &ones), block_mul(&blocks.t2, &ones)) == ones;
    let dc = [d.clone(), c.clone()];
    let ba = [b.clone(), a.clone()];
    let mirrored = swap(&pair_add(
        block_mul(&blocks.t1, &dc),
        block_mul(&blocks.t2, &ba),
    ));
    let swap_conjugation = mid == mirrored;

    Ok(BlockRelationReport {
        bounded_by_one,
        sandwiched,
        equality_case,
        partition_of_unity,
        swap_conjugation,
    })
}
