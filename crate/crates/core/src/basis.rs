//! Orthogonal Hermitian operator bases.
//!
//! Per site of dimension `d` the basis is `B₁ = 1/d` followed by the
//! generalised Gell-Mann matrices (symmetric, antisymmetric, diagonal
//! families) scaled by `1/√(2d)`, which gives exactly
//!
//! ```text
//! B₁ = 1/d,   Tr(B_m) = δ_{1m},   Tr(B_m B_n) = δ_{mn}/d.
//! ```
//!
//! Tensor products `B_𝐦 = ⊗ₖ B_{k,m_k}` then form an orthogonal basis of
//! the full operator space with `Tr(B_𝐦 B_𝐧) = δ_𝐦𝐧/D`. Multi-indices with
//! some component equal to 1 (the set `I_C`) carry an identity factor and
//! are fixed by partial-trace data; the rest (`I \ I_C`) are tensor
//! products of traceless operators and span the partial-trace kernel.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::{CMatrix, HermitianOperator, SystemShape};

/// The `d²` single-site basis operators for one system of dimension `d`.
#[derive(Debug)]
pub struct SiteBasis {
    d: usize,
    elements: Vec<HermitianOperator>,
}

impl SiteBasis {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    /// Basis element by 1-based index `m ∈ 1..=d²`; `element(1)` is `1/d`.
    pub fn element(&self, m: usize) -> &HermitianOperator {
        &self.elements[m - 1]
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }
}

fn build_site_basis(d: usize) -> SiteBasis {
    let shape = SystemShape::single(d).unwrap();
    let mut elements = Vec::with_capacity(d * d);
    elements.push(HermitianOperator::identity(shape.clone()).scale(1.0 / d as f64));
    let scale = 1.0 / (2.0 * d as f64).sqrt();
    // Symmetric family: |j⟩⟨k| + |k⟩⟨j|, j < k.
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = CMatrix::zeros(d, d);
            m[(j, k)] = Complex64::new(1.0, 0.0);
            m[(k, j)] = Complex64::new(1.0, 0.0);
            elements.push(HermitianOperator::from_parts(shape.clone(), m.scale(scale)));
        }
    }
    // Antisymmetric family: -i|j⟩⟨k| + i|k⟩⟨j|, j < k.
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = CMatrix::zeros(d, d);
            m[(j, k)] = Complex64::new(0.0, -1.0);
            m[(k, j)] = Complex64::new(0.0, 1.0);
            elements.push(HermitianOperator::from_parts(shape.clone(), m.scale(scale)));
        }
    }
    // Diagonal family: √(2/(l(l+1))) (Σ_{j<l}|j⟩⟨j| - l|l⟩⟨l|), l = 1..d-1.
    for l in 1..d {
        let mut m = CMatrix::zeros(d, d);
        let f = (2.0 / (l as f64 * (l + 1) as f64)).sqrt();
        for j in 0..l {
            m[(j, j)] = Complex64::new(f, 0.0);
        }
        m[(l, l)] = Complex64::new(-(l as f64) * f, 0.0);
        elements.push(HermitianOperator::from_parts(shape.clone(), m.scale(scale)));
    }
    SiteBasis { d, elements }
}

/// Returns the (cached) single-site basis for local dimension `d ≥ 2`.
pub fn site_basis(d: usize) -> Result<Arc<SiteBasis>> {
    if d < 2 {
        return Err(Error::InvalidShape(format!("site basis needs d ≥ 2, got {d}")));
    }
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<SiteBasis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    Ok(guard
        .entry(d)
        .or_insert_with(|| Arc::new(build_site_basis(d)))
        .clone())
}

/// A multi-index `𝐦 = (m₁,…,mₙ)` with `1 ≤ m_k ≤ d_k²`, addressing one
/// tensor-product basis element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(components: Vec<usize>, shape: &SystemShape) -> Result<Self> {
        if components.len() != shape.n() {
            return Err(Error::InvalidIndex(format!(
                "index length {} does not match n = {}",
                components.len(),
                shape.n()
            )));
        }
        for (k, (&m, &d)) in components.iter().zip(shape.dims()).enumerate() {
            if m == 0 || m > d * d {
                return Err(Error::InvalidIndex(format!(
                    "component m_{} = {m} out of range 1..={}",
                    k + 1,
                    d * d
                )));
            }
        }
        Ok(Self(components))
    }

    pub(crate) fn from_components(components: Vec<usize>) -> Self {
        Self(components)
    }

    pub fn components(&self) -> &[usize] {
        &self.0
    }

    /// In `I_C`: some component equals 1, so the element carries at least
    /// one identity factor and its coefficient is fixed by partial traces.
    pub fn is_fixed(&self) -> bool {
        self.0.iter().any(|&m| m == 1)
    }

    /// Systems (1-based) carrying a non-identity factor.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &m)| m != 1)
            .map(|(k, _)| k + 1)
            .collect()
    }

    /// The witness slot this fixed index is attributed to: the first system
    /// whose component equals 1. `None` outside `I_C`.
    pub fn owner(&self) -> Option<usize> {
        self.0.iter().position(|&m| m == 1).map(|k| k + 1)
    }
}

/// All multi-indices for `shape`, lexicographic with `m₁` slowest. This is
/// the one enumeration order used everywhere (SDP variables, files).
pub fn all_indices(shape: &SystemShape) -> Vec<MultiIndex> {
    let limits: Vec<usize> = shape.dims().iter().map(|&d| d * d).collect();
    let total: usize = limits.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut current = vec![1usize; shape.n()];
    loop {
        out.push(MultiIndex(current.clone()));
        let mut k = shape.n();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if current[k] < limits[k] {
                current[k] += 1;
                break;
            }
            current[k] = 1;
        }
    }
}

/// `I_C`: indices with at least one identity component.
pub fn fixed_indices(shape: &SystemShape) -> Vec<MultiIndex> {
    all_indices(shape).into_iter().filter(|m| m.is_fixed()).collect()
}

/// `I \ I_C`: tensor products of traceless factors; these span the
/// directions invisible to every partial trace.
pub fn free_indices(shape: &SystemShape) -> Vec<MultiIndex> {
    all_indices(shape).into_iter().filter(|m| !m.is_fixed()).collect()
}

/// `I_k`: indices with the identity at system `k` (1-based).
pub fn indices_with_identity_at(shape: &SystemShape, k: usize) -> Vec<MultiIndex> {
    all_indices(shape)
        .into_iter()
        .filter(|m| m.components()[k - 1] == 1)
        .collect()
}

/// The tensor-product basis element `B_𝐦 = ⊗ₖ B_{k,m_k}`.
pub fn basis_element(shape: &SystemShape, m: &MultiIndex) -> Result<HermitianOperator> {
    if m.components().len() != shape.n() {
        return Err(Error::InvalidIndex("index/shape length mismatch".into()));
    }
    let sites: Vec<Arc<SiteBasis>> = shape
        .dims()
        .iter()
        .map(|&d| site_basis(d))
        .collect::<Result<_>>()?;
    for (k, (&mk, site)) in m.components().iter().zip(&sites).enumerate() {
        if mk == 0 || mk > site.len() {
            return Err(Error::InvalidIndex(format!(
                "component m_{} = {mk} out of range",
                k + 1
            )));
        }
    }
    let factors: Vec<&HermitianOperator> = m
        .components()
        .iter()
        .zip(&sites)
        .map(|(&mk, site)| site.element(mk))
        .collect();
    Ok(HermitianOperator::kron(&factors))
}

/// Expansion coefficient `z_𝐦 = D·Tr(Z B_𝐦)`, real for Hermitian `Z`.
pub fn coefficient(z: &HermitianOperator, m: &MultiIndex) -> Result<f64> {
    let b = basis_element(z.shape(), m)?;
    Ok(z.shape().total_dim() as f64 * z.hs_inner(&b))
}

/// Full expansion `Z = Σ z_𝐦 B_𝐦` in enumeration order.
pub fn expand(z: &HermitianOperator) -> Result<Vec<(MultiIndex, f64)>> {
    all_indices(z.shape())
        .into_iter()
        .map(|m| coefficient(z, &m).map(|c| (m, c)))
        .collect()
}

/// Rebuilds `Σ z_𝐦 B_𝐦` from coefficients.
pub fn reconstruct(
    shape: &SystemShape,
    coeffs: &[(MultiIndex, f64)],
) -> Result<HermitianOperator> {
    let d = shape.total_dim();
    let mut acc = DMatrix::<Complex64>::zeros(d, d);
    for (m, z) in coeffs {
        if *z != 0.0 {
            acc += basis_element(shape, m)?.matrix().scale(*z);
        }
    }
    HermitianOperator::new(shape.clone(), acc)
}
