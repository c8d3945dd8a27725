//! Dense complex linear algebra for multipartite operators.
//!
//! Operators are plain `D × D` complex matrices tagged with the tensor
//! factorisation `D = d₁·…·dₙ` they live on. Systems are indexed 1-based
//! throughout the public API.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance used when enforcing Hermiticity at construction.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Tolerance used when enforcing density-state invariants at construction.
pub const DENSITY_TOL: f64 = 1e-10;

pub type CMatrix = DMatrix<Complex64>;

/// The tensor factorisation of a multipartite Hilbert space: local
/// dimensions `d₁…dₙ`, each at least 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemShape {
    dims: Vec<usize>,
}

impl SystemShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidShape("need at least one system".into()));
        }
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidShape(format!(
                "local dimension {d} < 2 is not allowed"
            )));
        }
        Ok(Self { dims })
    }

    /// Shape of a single system of dimension `d`.
    pub fn single(d: usize) -> Result<Self> {
        Self::new(vec![d])
    }

    /// Shape of `n` identical systems of local dimension `d`.
    pub fn uniform(d: usize, n: usize) -> Result<Self> {
        Self::new(vec![d; n])
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total Hilbert-space dimension `D = ∏ dᵢ`.
    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Validates a 1-based subsystem subset: sorted, strictly increasing,
    /// within `1..=n`.
    pub fn validate_subset(&self, subset: &[usize]) -> Result<()> {
        for w in subset.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidSubset(format!(
                    "subset {subset:?} must be strictly increasing"
                )));
            }
        }
        if subset.iter().any(|&k| k == 0 || k > self.n()) {
            return Err(Error::InvalidSubset(format!(
                "subset {subset:?} out of range 1..={}",
                self.n()
            )));
        }
        Ok(())
    }

    /// The systems not in `subset`, 1-based and sorted.
    pub fn complement(&self, subset: &[usize]) -> Vec<usize> {
        (1..=self.n()).filter(|k| !subset.contains(k)).collect()
    }

    /// Shape restricted to `subset` (1-based, sorted).
    pub fn subshape(&self, subset: &[usize]) -> Result<SystemShape> {
        self.validate_subset(subset)?;
        if subset.is_empty() {
            return Err(Error::InvalidSubset("empty subset has no shape".into()));
        }
        SystemShape::new(subset.iter().map(|&k| self.dims[k - 1]).collect())
    }

    /// Dimension of the tensor factor spanned by `subset`.
    pub fn subset_dim(&self, subset: &[usize]) -> usize {
        subset.iter().map(|&k| self.dims[k - 1]).product()
    }
}

/// Lookup tables for composite row/column indices: `maps.0[x]` is the
/// contribution of the `subset` digits, `maps.1[y]` of the complement
/// digits, so that every full index is `maps.0[x] + maps.1[y]`.
fn index_maps(shape: &SystemShape, subset: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let n = shape.n();
    let dims = shape.dims();
    let mut stride = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        stride[i] = stride[i + 1] * dims[i + 1];
    }
    let build = |positions: &[usize]| -> Vec<usize> {
        let total: usize = positions.iter().map(|&k| dims[k - 1]).product();
        let mut map = vec![0usize; total.max(1)];
        for (x, slot) in map.iter_mut().enumerate() {
            let mut rem = x;
            let mut full = 0usize;
            for &k in positions.iter().rev() {
                let d = dims[k - 1];
                full += (rem % d) * stride[k - 1];
                rem /= d;
            }
            *slot = full;
        }
        map
    };
    let comp = shape.complement(subset);
    (build(subset), build(&comp))
}

/// A Hermitian operator on a multipartite space. Hermiticity is enforced at
/// construction (symmetrised when within tolerance, rejected otherwise);
/// values are immutable afterwards.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    shape: SystemShape,
    matrix: CMatrix,
}

impl HermitianOperator {
    pub fn new(shape: SystemShape, matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(shape, matrix, HERMITICITY_TOL)
    }

    /// As [`Self::new`] but with a caller-chosen Hermiticity tolerance
    /// (problem files published to few digits need a looser gate).
    pub fn with_tolerance(shape: SystemShape, matrix: CMatrix, tol: f64) -> Result<Self> {
        let d = shape.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: matrix.nrows(),
            });
        }
        let adj = matrix.adjoint();
        let deviation = (&matrix - &adj).camax();
        if deviation > tol {
            return Err(Error::NotHermitian { deviation, tol });
        }
        let matrix = (matrix + adj).scale(0.5);
        Ok(Self { shape, matrix })
    }

    /// Wraps a matrix that is Hermitian by construction. Symmetrises
    /// unconditionally to absorb round-off; panics on a dimension mismatch,
    /// which is a programming error at the call site.
    pub(crate) fn from_parts(shape: SystemShape, matrix: CMatrix) -> Self {
        assert_eq!(matrix.nrows(), shape.total_dim(), "operator/shape mismatch");
        assert_eq!(matrix.ncols(), shape.total_dim(), "operator must be square");
        let matrix = (&matrix + matrix.adjoint()).scale(0.5);
        Self { shape, matrix }
    }

    pub fn identity(shape: SystemShape) -> Self {
        let d = shape.total_dim();
        Self {
            shape,
            matrix: CMatrix::identity(d, d),
        }
    }

    pub fn zeros(shape: SystemShape) -> Self {
        let d = shape.total_dim();
        Self {
            shape,
            matrix: CMatrix::zeros(d, d),
        }
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Trace, real by Hermiticity.
    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Hilbert-Schmidt inner product `Tr(AB)`, real for Hermitian `A`, `B`.
    pub fn hs_inner(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "hs_inner: dimension mismatch");
        // Tr(AB) = Σᵢⱼ Aᵢⱼ Bⱼᵢ = Σᵢⱼ Aᵢⱼ conj(Bᵢⱼ) for Hermitian B.
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.matrix - &other.matrix).camax()
    }

    /// Largest entrywise absolute value.
    pub fn max_abs(&self) -> f64 {
        self.matrix.camax()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            matrix: self.matrix.scale(factor),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.shape, other.shape, "add: shape mismatch");
        Self {
            shape: self.shape.clone(),
            matrix: &self.matrix + &other.matrix,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.shape, other.shape, "sub: shape mismatch");
        Self {
            shape: self.shape.clone(),
            matrix: &self.matrix - &other.matrix,
        }
    }

    /// Adds `factor * other` into a copy of `self`.
    pub fn add_scaled(&self, factor: f64, other: &Self) -> Self {
        assert_eq!(self.shape, other.shape, "add_scaled: shape mismatch");
        Self {
            shape: self.shape.clone(),
            matrix: &self.matrix + other.matrix.scale(factor),
        }
    }

    /// Kronecker product of the given operators, in order; the resulting
    /// shape is the concatenation of the operand shapes.
    pub fn kron(ops: &[&HermitianOperator]) -> HermitianOperator {
        assert!(!ops.is_empty(), "kron of no operators");
        let dims: Vec<usize> = ops.iter().flat_map(|o| o.shape.dims().to_vec()).collect();
        let mut matrix = ops[0].matrix.clone();
        for op in &ops[1..] {
            matrix = matrix.kronecker(&op.matrix);
        }
        HermitianOperator {
            shape: SystemShape::new(dims).expect("operand shapes are valid"),
            matrix,
        }
    }

    /// Partial trace over the 1-based systems in `traced`; the result lives
    /// on the remaining systems (or a 1×1 scalar when all are traced) and
    /// has the same trace as the input.
    pub fn partial_trace(&self, traced: &[usize]) -> Result<HermitianOperator> {
        self.shape.validate_subset(traced)?;
        let kept = self.shape.complement(traced);
        if kept.is_empty() {
            let mut m = CMatrix::zeros(1, 1);
            m[(0, 0)] = self.matrix.trace();
            // A scalar has no tensor factors; representing it on a 1-system
            // shape of dimension 1 is disallowed, so callers trace all
            // systems via `trace()` instead. Kept reachable for uniformity.
            return Err(Error::InvalidSubset(
                "cannot trace out every system; use trace()".into(),
            ));
        }
        let (kept_map, traced_map) = index_maps(&self.shape, &kept);
        let dk = kept_map.len();
        let mut out = CMatrix::zeros(dk, dk);
        for (r, &fr) in kept_map.iter().enumerate() {
            for (c, &fc) in kept_map.iter().enumerate() {
                let mut acc = Complex64::default();
                for &ft in &traced_map {
                    acc += self.matrix[(fr + ft, fc + ft)];
                }
                out[(r, c)] = acc;
            }
        }
        Ok(HermitianOperator::from_parts(
            self.shape.subshape(&kept)?,
            out,
        ))
    }

    /// Embeds an operator living on `subset` (1-based, sorted) of `full`
    /// into the full space, padding the remaining systems with identities
    /// at their correct tensor positions.
    pub fn embed(&self, full: &SystemShape, subset: &[usize]) -> Result<HermitianOperator> {
        full.validate_subset(subset)?;
        let sub_dims: Vec<usize> = subset.iter().map(|&k| full.dims()[k - 1]).collect();
        if sub_dims != self.shape.dims() {
            return Err(Error::InvalidSubset(format!(
                "operator dims {:?} do not match subset {subset:?} of shape {:?}",
                self.shape.dims(),
                full.dims()
            )));
        }
        let (sub_map, comp_map) = index_maps(full, subset);
        let d = full.total_dim();
        let mut out = CMatrix::zeros(d, d);
        for (r, &fr) in sub_map.iter().enumerate() {
            for (c, &fc) in sub_map.iter().enumerate() {
                let v = self.matrix[(r, c)];
                if v != Complex64::default() {
                    for &fp in &comp_map {
                        out[(fr + fp, fc + fp)] = v;
                    }
                }
            }
        }
        Ok(HermitianOperator::from_parts(full.clone(), out))
    }

    /// All eigenvalues, ascending. Exact Hermitian symmetry is guaranteed
    /// by construction, so the symmetric eigensolver applies directly.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A density state: Hermitian, unit trace, positive semidefinite (within
/// construction tolerances).
#[derive(Debug, Clone)]
pub struct DensityState {
    op: HermitianOperator,
}

impl DensityState {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        Self::with_tolerance(op, DENSITY_TOL)
    }

    pub fn with_tolerance(op: HermitianOperator, tol: f64) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).abs() > tol {
            return Err(Error::NotDensity(format!(
                "trace {tr} deviates from 1 by more than {tol:.1e}"
            )));
        }
        let min_eig = op.min_eigenvalue();
        if min_eig < -tol {
            return Err(Error::NotDensity(format!(
                "minimum eigenvalue {min_eig:.3e} below -{tol:.1e}"
            )));
        }
        Ok(Self { op })
    }

    /// Rank-one state |ψ⟩⟨ψ| from (not necessarily normalised) amplitudes.
    pub fn from_pure(shape: SystemShape, amplitudes: &[Complex64]) -> Result<Self> {
        let d = shape.total_dim();
        if amplitudes.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: amplitudes.len(),
            });
        }
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm_sq <= 0.0 {
            return Err(Error::NotDensity("zero state vector".into()));
        }
        let mut m = CMatrix::zeros(d, d);
        for (i, a) in amplitudes.iter().enumerate() {
            for (j, b) in amplitudes.iter().enumerate() {
                m[(i, j)] = a * b.conj() / norm_sq;
            }
        }
        Ok(Self {
            op: HermitianOperator::from_parts(shape, m),
        })
    }

    /// Maximally mixed state 1/D.
    pub fn maximally_mixed(shape: SystemShape) -> Self {
        let d = shape.total_dim();
        Self {
            op: HermitianOperator::identity(shape).scale(1.0 / d as f64),
        }
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn shape(&self) -> &SystemShape {
        self.op.shape()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    /// Partial trace of a state is again a state; no re-validation needed.
    pub fn partial_trace(&self, traced: &[usize]) -> Result<DensityState> {
        Ok(DensityState {
            op: self.op.partial_trace(traced)?,
        })
    }

    /// Convex mixture `(1-w)·self + w·other`.
    pub fn mix(&self, w: f64, other: &DensityState) -> DensityState {
        DensityState {
            op: self.op.scale(1.0 - w).add_scaled(w, other.op()),
        }
    }
}

/// Minimum eigenvalue of a raw Hermitian matrix block.
pub(crate) fn min_eig_of(m: &CMatrix) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// σ_x as a single-qubit operator.
pub fn pauli_x() -> HermitianOperator {
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 1)] = Complex64::new(1.0, 0.0);
    m[(1, 0)] = Complex64::new(1.0, 0.0);
    HermitianOperator::from_parts(SystemShape::single(2).unwrap(), m)
}

/// σ_y as a single-qubit operator.
pub fn pauli_y() -> HermitianOperator {
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 1)] = Complex64::new(0.0, -1.0);
    m[(1, 0)] = Complex64::new(0.0, 1.0);
    HermitianOperator::from_parts(SystemShape::single(2).unwrap(), m)
}

/// σ_z as a single-qubit operator.
pub fn pauli_z() -> HermitianOperator {
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 0)] = Complex64::new(1.0, 0.0);
    m[(1, 1)] = Complex64::new(-1.0, 0.0);
    HermitianOperator::from_parts(SystemShape::single(2).unwrap(), m)
}

trait MaxAbs {
    fn camax(&self) -> f64;
}

impl MaxAbs for CMatrix {
    fn camax(&self) -> f64 {
        self.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}
