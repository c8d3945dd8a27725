//! Sets of reduced states and the operators they pin down.
//!
//! A [`MarginalSet`] is a list of reduced states labelled by the subsystem
//! subsets they describe. In *full* mode all `n` subsets of size `n-1` are
//! present; *partial* mode holds arbitrary proper subsets. Overlapping
//! entries must agree on their common reduction; [`MarginalSet::build_b0`]
//! assembles the unique operator component fixed by the data, and
//! [`MarginalSet::delta`] evaluates the alternating-sum necessary
//! condition.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::basis::{self, MultiIndex};
use crate::error::{Error, Result};
use crate::tensor::{DensityState, HermitianOperator, SystemShape};

/// Max-norm tolerance for overlap consistency. Looser than the 1e-10
/// construction tolerance so that states published to few digits still
/// pass.
pub const CONSISTENCY_TOL: f64 = 1e-8;
/// Eigenvalue tolerance on the Δ verdicts.
pub const DELTA_TOL: f64 = 1e-9;

/// One violated overlap equation: entries `a` and `b` disagree on their
/// common subsystems.
#[derive(Debug, Clone)]
pub struct ConsistencyViolation {
    pub subset_a: Vec<usize>,
    pub subset_b: Vec<usize>,
    pub overlap: Vec<usize>,
    pub deviation: f64,
}

/// Outcome of checking every pair of overlapping entries.
#[derive(Debug, Clone, Default)]
pub struct ConsistencyReport {
    pub violations: Vec<ConsistencyViolation>,
    pub max_deviation: f64,
}

impl ConsistencyReport {
    pub fn is_consistent(&self) -> bool {
        self.violations.is_empty()
    }
}

/// The Δ operator together with its eigenvalue range and the two verdicts
/// of the necessary condition (lower bound for odd `n`, upper bound for
/// all-qubit systems).
#[derive(Debug, Clone)]
pub struct DeltaReport {
    pub delta: HermitianOperator,
    pub min_eig: f64,
    pub max_eig: f64,
    pub lower_bound_applicable: bool,
    pub lower_bound_satisfied: bool,
    pub upper_bound_applicable: bool,
    pub upper_bound_satisfied: bool,
}

impl DeltaReport {
    /// True when every applicable bound holds.
    pub fn passes(&self) -> bool {
        (!self.lower_bound_applicable || self.lower_bound_satisfied)
            && (!self.upper_bound_applicable || self.upper_bound_satisfied)
    }
}

/// A collection of reduced states, each labelled by the (1-based, sorted)
/// subset of systems it describes.
#[derive(Debug, Clone)]
pub struct MarginalSet {
    shape: SystemShape,
    entries: Vec<(Vec<usize>, DensityState)>,
    full_mode: bool,
}

impl MarginalSet {
    pub fn new(shape: SystemShape, entries: Vec<(Vec<usize>, DensityState)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidSubset("marginal set has no entries".into()));
        }
        let n = shape.n();
        let mut seen: Vec<&[usize]> = Vec::new();
        for (subset, state) in &entries {
            shape.validate_subset(subset)?;
            if subset.is_empty() || subset.len() >= n {
                return Err(Error::InvalidSubset(format!(
                    "subset {subset:?} must be a proper nonempty subset of 1..={n}"
                )));
            }
            if seen.contains(&subset.as_slice()) {
                return Err(Error::InvalidSubset(format!("duplicate subset {subset:?}")));
            }
            seen.push(subset);
            let want = shape.subset_dim(subset);
            if state.op().dim() != want {
                return Err(Error::DimensionMismatch {
                    expected: want,
                    got: state.op().dim(),
                });
            }
        }
        let full_mode = (1..=n).all(|k| {
            let omit: Vec<usize> = (1..=n).filter(|&j| j != k).collect();
            entries.iter().any(|(s, _)| *s == omit)
        });
        Ok(Self {
            shape,
            entries,
            full_mode,
        })
    }

    /// Full set of `(n-1)`-party marginals derived from one global state.
    pub fn from_state(rho: &DensityState) -> Result<Self> {
        let shape = rho.shape().clone();
        let n = shape.n();
        let mut entries = Vec::with_capacity(n);
        for k in 1..=n {
            let subset: Vec<usize> = (1..=n).filter(|&j| j != k).collect();
            entries.push((subset, rho.partial_trace(&[k])?));
        }
        Self::new(shape, entries)
    }

    /// The marginals of the maximally mixed state, in full mode.
    pub fn maximally_mixed(shape: SystemShape) -> Result<Self> {
        Self::from_state(&DensityState::maximally_mixed(shape))
    }

    /// Three identical two-qubit marginals `|Ψ₊⟩⟨Ψ₊|` on a three-qubit
    /// system: pairwise consistent, yet compatible with no global state.
    pub fn bell_triple() -> Self {
        Self::butterley_family(1.0)
    }

    /// The one-parameter family `(1-p)·Tr_k σ + p·|Ψ₊⟩⟨Ψ₊|` of two-qubit
    /// marginals, with `σ = |1⟩⟨1| ⊗ 1 ⊗ 1 / 4`. At `p = 0` the set is
    /// compatible, at `p = 1` it is the Bell triple.
    pub fn butterley_family(p: f64) -> Self {
        assert!((0.0..=1.0).contains(&p), "p must lie in [0,1]");
        let shape = SystemShape::uniform(2, 3).unwrap();
        let c0 = Complex64::new(0.0, 0.0);
        let c1 = Complex64::new(1.0, 0.0);
        let bell =
            DensityState::from_pure(SystemShape::uniform(2, 2).unwrap(), &[c1, c0, c0, c1])
                .unwrap();
        let mut sigma = DMatrix::<Complex64>::zeros(8, 8);
        for i in 4..8 {
            sigma[(i, i)] = Complex64::new(0.25, 0.0);
        }
        let sigma = DensityState::new(
            HermitianOperator::new(shape.clone(), sigma).unwrap(),
        )
        .unwrap();
        let mut entries = Vec::new();
        for k in 1..=3 {
            let subset: Vec<usize> = (1..=3).filter(|&j| j != k).collect();
            let trk = sigma.partial_trace(&[k]).unwrap();
            entries.push((subset, trk.mix(p, &bell)));
        }
        Self::new(shape, entries).unwrap()
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn entries(&self) -> &[(Vec<usize>, DensityState)] {
        &self.entries
    }

    /// Whether all `n` marginals of size `n-1` are present.
    pub fn is_full(&self) -> bool {
        self.full_mode
    }

    /// The `(n-1)`-party marginal omitting system `k` (full mode only).
    pub fn marginal_omitting(&self, k: usize) -> Result<&DensityState> {
        let omit: Vec<usize> = (1..=self.shape.n()).filter(|&j| j != k).collect();
        self.entries
            .iter()
            .find(|(s, _)| *s == omit)
            .map(|(_, st)| st)
            .ok_or(Error::PartialMode)
    }

    /// Checks every pair of overlapping entries for agreement on the
    /// overlap, within [`CONSISTENCY_TOL`] in max-norm. Violations are
    /// reported, not thrown.
    pub fn check_consistency(&self) -> ConsistencyReport {
        let mut report = ConsistencyReport::default();
        for i in 0..self.entries.len() {
            for j in (i + 1)..self.entries.len() {
                let (sa, sta) = &self.entries[i];
                let (sb, stb) = &self.entries[j];
                let overlap: Vec<usize> = sa.iter().copied().filter(|k| sb.contains(k)).collect();
                if overlap.is_empty() {
                    continue;
                }
                let ra = reduce_entry(sta, sa, &overlap).expect("overlap is a sub-subset");
                let rb = reduce_entry(stb, sb, &overlap).expect("overlap is a sub-subset");
                let deviation = ra.op().max_abs_diff(rb.op());
                report.max_deviation = report.max_deviation.max(deviation);
                if deviation > CONSISTENCY_TOL {
                    report.violations.push(ConsistencyViolation {
                        subset_a: sa.clone(),
                        subset_b: sb.clone(),
                        overlap,
                        deviation,
                    });
                }
            }
        }
        report
    }

    /// The reduced state on `subset`, obtained by partially tracing the
    /// first entry that covers it.
    pub fn derive_submarginal(&self, subset: &[usize]) -> Result<DensityState> {
        self.shape.validate_subset(subset)?;
        if subset.is_empty() {
            return Err(Error::InvalidSubset("empty subset".into()));
        }
        for (entry_subset, state) in &self.entries {
            if subset.iter().all(|k| entry_subset.contains(k)) {
                return reduce_entry(state, entry_subset, subset);
            }
        }
        Err(Error::SubsetNotCovered(subset.to_vec()))
    }

    /// Whether the expansion coefficient with this multi-index is pinned by
    /// a known reduced state (its support is covered by some entry).
    pub fn coefficient_is_known(&self, m: &MultiIndex) -> bool {
        let support = m.support();
        if support.len() >= self.shape.n() {
            return false;
        }
        if support.is_empty() {
            return true; // trace normalisation
        }
        self.entries
            .iter()
            .any(|(s, _)| support.iter().all(|k| s.contains(k)))
    }

    /// The operator component fixed by the marginals: the coefficient of
    /// every basis element whose support is covered by a known entry, with
    /// the others left at zero. In full mode that is every element of
    /// `I_C`, so `Tr_k(B₀)` reproduces each given marginal exactly.
    ///
    /// Errors on inconsistent inputs.
    pub fn build_b0(&self) -> Result<HermitianOperator> {
        let report = self.check_consistency();
        if !report.is_consistent() {
            return Err(Error::InconsistentMarginals {
                max_deviation: report.max_deviation,
            });
        }
        let d = self.shape.total_dim();
        let mut acc = DMatrix::<Complex64>::zeros(d, d);
        let mut reduced_cache: HashMap<Vec<usize>, DensityState> = HashMap::new();
        for m in basis::fixed_indices(&self.shape) {
            if !self.coefficient_is_known(&m) {
                continue;
            }
            let support = m.support();
            let z = if support.is_empty() {
                1.0
            } else {
                let sigma = match reduced_cache.get(&support) {
                    Some(s) => s.clone(),
                    None => {
                        let s = self.derive_submarginal(&support)?;
                        reduced_cache.insert(support.clone(), s.clone());
                        s
                    }
                };
                // z_𝐦 = d_S · Tr(σ_S ⊗_{k∈S} B_{k,m_k}); the identity factors
                // outside S contribute exactly the d_S/D rescaling.
                let sub_shape = self.shape.subshape(&support)?;
                let sub_components: Vec<usize> = support
                    .iter()
                    .map(|&k| m.components()[k - 1])
                    .collect();
                let sub_m = MultiIndex::new(sub_components, &sub_shape)?;
                basis::coefficient(sigma.op(), &sub_m)?
            };
            if z != 0.0 {
                acc += basis::basis_element(&self.shape, &m)?.matrix().scale(z);
            }
        }
        HermitianOperator::new(self.shape.clone(), acc)
    }

    /// The same operator by the inclusion-exclusion formula
    /// `B₀ = -Σ_{∅≠A⊆N} (-1)^{|A|}/d_A · ρ_{N∖A} ⊗ 1_A` (full mode only).
    pub fn build_b0_inclusion_exclusion(&self) -> Result<HermitianOperator> {
        if !self.full_mode {
            return Err(Error::PartialMode);
        }
        let report = self.check_consistency();
        if !report.is_consistent() {
            return Err(Error::InconsistentMarginals {
                max_deviation: report.max_deviation,
            });
        }
        let n = self.shape.n();
        let big_d = self.shape.total_dim();
        let mut acc = DMatrix::<Complex64>::zeros(big_d, big_d);
        for a in nonempty_subsets(n) {
            let d_a = self.shape.subset_dim(&a) as f64;
            let sign = if a.len() % 2 == 0 { 1.0 } else { -1.0 };
            let factor = -sign / d_a;
            let rest = self.shape.complement(&a);
            if rest.is_empty() {
                // ρ_∅ is the scalar 1; the term is a multiple of the identity.
                for i in 0..big_d {
                    acc[(i, i)] += Complex64::new(factor, 0.0);
                }
            } else {
                let rho = self.derive_submarginal(&rest)?;
                let padded = rho.op().embed(&self.shape, &rest)?;
                acc += padded.matrix().scale(factor);
            }
        }
        HermitianOperator::new(self.shape.clone(), acc)
    }

    /// The alternating sum `Δ = Σ_{A ⊂ N} (-1)^{|A|} ρ_A` over proper
    /// subsets including `A = ∅` (whose term is the unnormalised identity),
    /// each reduced state padded with identities. Requires full mode.
    pub fn delta(&self) -> Result<DeltaReport> {
        if !self.full_mode {
            return Err(Error::PartialMode);
        }
        let n = self.shape.n();
        let delta = self.delta_operator()?;
        let eigs = delta.eigenvalues();
        let min_eig = eigs[0];
        let max_eig = eigs[eigs.len() - 1];
        let lower_bound_applicable = n % 2 == 1;
        let upper_bound_applicable = self.shape.dims().iter().all(|&d| d == 2);
        Ok(DeltaReport {
            delta,
            min_eig,
            max_eig,
            lower_bound_applicable,
            lower_bound_satisfied: min_eig >= -DELTA_TOL,
            upper_bound_applicable,
            upper_bound_satisfied: max_eig <= 1.0 + DELTA_TOL,
        })
    }

    fn delta_operator(&self) -> Result<HermitianOperator> {
        let n = self.shape.n();
        let big_d = self.shape.total_dim();
        let mut acc = DMatrix::<Complex64>::identity(big_d, big_d); // A = ∅
        for a in nonempty_subsets(n) {
            if a.len() == n {
                continue; // proper subsets only
            }
            let sign = if a.len() % 2 == 0 { 1.0 } else { -1.0 };
            let rho = self.derive_submarginal(&a)?;
            let padded = rho.op().embed(&self.shape, &a)?;
            acc += padded.matrix().scale(sign);
        }
        HermitianOperator::new(self.shape.clone(), acc)
    }

    /// Entrywise mixture with the maximally mixed marginals: each entry
    /// becomes `(1-w)·1/d_A + w·ρ_A`.
    pub fn mix_with_maximally_mixed(&self, w: f64) -> MarginalSet {
        let entries = self
            .entries
            .iter()
            .map(|(s, st)| {
                let sub = self.shape.subshape(s).expect("entry subsets are valid");
                let mixed = DensityState::maximally_mixed(sub).mix(w, st);
                (s.clone(), mixed)
            })
            .collect();
        MarginalSet {
            shape: self.shape.clone(),
            entries,
            full_mode: self.full_mode,
        }
    }
}

/// Reduces `state` (living on `entry_subset` of some global shape) to
/// `target`, a sub-subset of `entry_subset`.
fn reduce_entry(
    state: &DensityState,
    entry_subset: &[usize],
    target: &[usize],
) -> Result<DensityState> {
    debug_assert!(target.iter().all(|k| entry_subset.contains(k)));
    // Positions inside the entry's local shape that must be traced out.
    let local_traced: Vec<usize> = entry_subset
        .iter()
        .enumerate()
        .filter(|(_, k)| !target.contains(k))
        .map(|(i, _)| i + 1)
        .collect();
    if local_traced.is_empty() {
        return Ok(state.clone());
    }
    state.partial_trace(&local_traced)
}

/// All nonempty subsets of `{1..n}`, deterministic order (binary counting).
pub(crate) fn nonempty_subsets(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity((1usize << n) - 1);
    for mask in 1u32..(1u32 << n) {
        out.push((1..=n).filter(|k| mask & (1 << (k - 1)) != 0).collect());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis;

    fn qubits(n: usize) -> SystemShape {
        SystemShape::uniform(2, n).unwrap()
    }

    fn ket(bits: &str) -> Vec<Complex64> {
        let d = 1 << bits.len();
        let mut v = vec![Complex64::new(0.0, 0.0); d];
        v[usize::from_str_radix(bits, 2).unwrap()] = Complex64::new(1.0, 0.0);
        v
    }

    #[test]
    fn bell_triple_is_consistent() {
        let ms = MarginalSet::bell_triple();
        assert!(ms.is_full());
        let report = ms.check_consistency();
        assert!(report.is_consistent(), "deviation {}", report.max_deviation);
        // every single-qubit overlap is maximally mixed
        for k in 1..=3 {
            let r = ms.derive_submarginal(&[k]).unwrap();
            let half = HermitianOperator::identity(SystemShape::single(2).unwrap()).scale(0.5);
            assert!(r.op().max_abs_diff(&half) < 1e-12);
        }
    }

    #[test]
    fn inconsistent_pair_is_reported() {
        let shape = qubits(3);
        let two = qubits(2);
        let rho12 = DensityState::from_pure(two.clone(), &ket("00")).unwrap();
        let mut amps = vec![Complex64::new(0.0, 0.0); 4];
        amps[0] = Complex64::new(1.0, 0.0);
        amps[3] = Complex64::new(1.0, 0.0);
        let rho23 = DensityState::from_pure(two, &amps).unwrap();
        let ms = MarginalSet::new(shape, vec![(vec![1, 2], rho12), (vec![2, 3], rho23)]).unwrap();
        assert!(!ms.is_full());
        let report = ms.check_consistency();
        assert_eq!(report.violations.len(), 1);
        let v = &report.violations[0];
        assert_eq!(v.overlap, vec![2]);
        // |0⟩⟨0| vs 1/2: deviation 1/2
        assert!((v.deviation - 0.5).abs() < 1e-12);
        assert!(matches!(
            ms.build_b0(),
            Err(Error::InconsistentMarginals { .. })
        ));
    }

    #[test]
    fn butterley_submarginal_closed_form() {
        let p = 0.3;
        let ms = MarginalSet::butterley_family(p);
        let r1 = ms.derive_submarginal(&[1]).unwrap();
        // (1-p)|1⟩⟨1| + p·1/2
        assert!((r1.matrix()[(0, 0)].re - p / 2.0).abs() < 1e-12);
        assert!((r1.matrix()[(1, 1)].re - (1.0 - p + p / 2.0)).abs() < 1e-12);
        // identity case: requesting an entry's own subset returns it unchanged
        let e = ms.derive_submarginal(&[2, 3]).unwrap();
        assert!(e.op().max_abs_diff(ms.marginal_omitting(1).unwrap().op()) < 1e-15);
    }

    #[test]
    fn b0_maximally_mixed_is_scaled_identity() {
        let ms = MarginalSet::maximally_mixed(qubits(3)).unwrap();
        let b0 = ms.build_b0().unwrap();
        let want = HermitianOperator::identity(qubits(3)).scale(1.0 / 8.0);
        assert!(b0.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn b0_reproduces_marginals_and_routes_agree() {
        for p in [0.0, 0.25, 1.0] {
            let ms = MarginalSet::butterley_family(p);
            let b0 = ms.build_b0().unwrap();
            assert!((b0.trace() - 1.0).abs() < 1e-10);
            for k in 1..=3 {
                let tr = b0.partial_trace(&[k]).unwrap();
                let dev = tr.max_abs_diff(ms.marginal_omitting(k).unwrap().op());
                assert!(dev < 1e-9, "p={p} k={k} dev={dev}");
            }
            let alt = ms.build_b0_inclusion_exclusion().unwrap();
            assert!(b0.max_abs_diff(&alt) < 1e-10, "p={p}");
        }
    }

    #[test]
    fn partial_mode_b0_fixes_only_covered_coefficients() {
        let shape = qubits(3);
        let bell = DensityState::from_pure(qubits(2), &{
            let mut v = vec![Complex64::new(0.0, 0.0); 4];
            v[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            v[3] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            v
        })
        .unwrap();
        let ms = MarginalSet::new(shape.clone(), vec![(vec![1, 2], bell.clone())]).unwrap();
        assert!(!ms.is_full());
        let b0 = ms.build_b0().unwrap();
        // Coefficients supported inside {1,2} match the entry; others vanish.
        for (m, z) in basis::expand(&b0).unwrap() {
            if !ms.coefficient_is_known(&m) {
                assert!(z.abs() < 1e-12, "uncovered {m:?} has z={z}");
            }
        }
        let tr3 = b0.partial_trace(&[3]).unwrap();
        assert!(tr3.max_abs_diff(bell.op()) < 1e-10);
        assert!(matches!(ms.delta(), Err(Error::PartialMode)));
        assert!(matches!(
            ms.build_b0_inclusion_exclusion(),
            Err(Error::PartialMode)
        ));
    }

    #[test]
    fn delta_matches_closed_form_on_butterley() {
        // Δ(σ(p)) = (1-p)/4·1 + 3p/2(|φ₁⟩⟨φ₁|+|φ₂⟩⟨φ₂|) - p/2(|ψ₁⟩⟨ψ₁|+|ψ₂⟩⟨ψ₂|)
        let shape = qubits(3);
        let amp = |coeffs: &[(usize, f64)], norm: f64| {
            let mut v = vec![Complex64::new(0.0, 0.0); 8];
            for &(i, c) in coeffs {
                v[i] = Complex64::new(c / norm, 0.0);
            }
            v
        };
        let s12 = 12f64.sqrt();
        let phi1 = amp(&[(0b000, 3.0), (0b011, 1.0), (0b101, 1.0), (0b110, 1.0)], s12);
        let phi2 = amp(&[(0b001, 1.0), (0b010, 1.0), (0b100, 1.0), (0b111, 3.0)], s12);
        let psi1 = amp(&[(0b000, 1.0), (0b011, -1.0), (0b101, -1.0), (0b110, -1.0)], 2.0);
        let psi2 = amp(&[(0b001, 1.0), (0b010, 1.0), (0b100, 1.0), (0b111, -1.0)], 2.0);
        let proj = |v: &Vec<Complex64>| {
            DensityState::from_pure(shape.clone(), v).unwrap().op().clone()
        };
        for p in [0.0, 0.25, 1.0 / 3.0, 1.0] {
            let report = MarginalSet::butterley_family(p).delta().unwrap();
            let closed = HermitianOperator::identity(shape.clone())
                .scale((1.0 - p) / 4.0)
                .add_scaled(1.5 * p, &proj(&phi1).add(&proj(&phi2)))
                .add_scaled(-0.5 * p, &proj(&psi1).add(&proj(&psi2)));
            assert!(
                report.delta.max_abs_diff(&closed) < 1e-12,
                "closed form mismatch at p={p}"
            );
            assert!(report.lower_bound_applicable && report.upper_bound_applicable);
        }
        // p = 1/3 is the boundary of the conjectured condition; p = 1 has
        // min eigenvalue -1/2.
        let third = MarginalSet::butterley_family(1.0 / 3.0).delta().unwrap();
        assert!(third.passes(), "min {} max {}", third.min_eig, third.max_eig);
        let bell = MarginalSet::bell_triple().delta().unwrap();
        assert!((bell.min_eig + 0.5).abs() < 1e-10);
        assert!(!bell.passes());
    }

    #[test]
    fn delta_is_affine_in_the_marginals() {
        let alpha = 0.4;
        let da = MarginalSet::butterley_family(0.2).delta().unwrap().delta;
        let db = MarginalSet::butterley_family(0.8).delta().unwrap().delta;
        // Mixing the family parameter mixes each marginal entry linearly.
        let dm = MarginalSet::butterley_family(alpha * 0.2 + (1.0 - alpha) * 0.8)
            .delta()
            .unwrap()
            .delta;
        let combo = da.scale(alpha).add_scaled(1.0 - alpha, &db);
        assert!(dm.max_abs_diff(&combo) < 1e-12);
    }

    #[test]
    fn mixing_toward_identity_mixes_b0() {
        let ms = MarginalSet::bell_triple().mix_with_maximally_mixed(0.5);
        let b0 = ms.build_b0().unwrap();
        let mm = MarginalSet::maximally_mixed(qubits(3)).unwrap().build_b0().unwrap();
        let bell_b0 = MarginalSet::bell_triple().build_b0().unwrap();
        let want = mm.scale(0.5).add_scaled(0.5, &bell_b0);
        assert!(b0.max_abs_diff(&want) < 1e-12);
    }
}
