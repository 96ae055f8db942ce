//! Quantum multi-measures on tuples of projectors and their positive
//! multilinear extension.
//!
//! A multi-measure built from a frame function sums the frame function over
//! tensor combinations of orthonormal bases of the projector ranges. The
//! audits here replay the argument that this value does not depend on the
//! chosen bases, and the dyadic decomposition `x = ‖x‖ Σⱼ 2⁻ʲ pⱼ` carries
//! values from projectors to positive operators.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::bases::{haar_rotate_within, PatchworkConfig};
use crate::error::{Error, Result};
use crate::frame::{sum_over, FrameFunction};
use crate::linalg::{
    hermitian_eig, kron_op, rng_from_seed, unflatten, Operator, Projector, SpaceSpec, UnitVector, CHECK_TOL,
};

/// Values below `-MEASURE_SLACK` break positivity.
pub const MEASURE_SLACK: f64 = 1e-9;
/// Spread allowed by [`well_definedness_audit`].
pub const WELL_DEFINED_TOL: f64 = 1e-9;
/// Default truncation depth for [`extend_to_positives`].
pub const DEFAULT_DYADIC_DEPTH: usize = 30;
/// The budget `Π‖xₖ‖·n·2^(−J+c)` uses this `c`.
pub const DYADIC_BUDGET_SLACK_BITS: i32 = 5;

pub type MeasureFn = Arc<dyn Fn(&[Projector]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum MeasureSource {
    FromFrame(FrameFunction),
    Tabulated(MeasureFn),
}

impl fmt::Debug for MeasureSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::FromFrame(frame) => f.debug_tuple("FromFrame").field(frame).finish(),
            Self::Tabulated(_) => f.write_str("Tabulated(..)"),
        }
    }
}

/// A map on `P(H₁) × ⋯ × P(Hₙ)`, additive on orthogonal projectors in each slot.
#[derive(Debug, Clone)]
pub struct MultiMeasure {
    space: SpaceSpec,
    source: MeasureSource,
    positive: bool,
}

impl MultiMeasure {
    /// The caller vouches for orthoadditivity; positivity is checked on
    /// every evaluation when `positive` is set.
    pub fn tabulated(
        space: SpaceSpec,
        positive: bool,
        f: impl Fn(&[Projector]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { space, source: MeasureSource::Tabulated(Arc::new(f)), positive }
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn source(&self) -> &MeasureSource {
        &self.source
    }

    pub fn is_positive(&self) -> bool {
        self.positive
    }

    fn check_slots(&self, ps: &[Projector]) -> Result<()> {
        if ps.len() != self.space.n_factors() {
            return Err(Error::SpaceMismatch(format!("{} projectors for space {}", ps.len(), self.space)));
        }
        for (p, &d) in ps.iter().zip(self.space.dims()) {
            if p.dim() != d {
                return Err(Error::SpaceMismatch(format!("projector of dimension {} for space {}", p.dim(), self.space)));
            }
        }
        Ok(())
    }

    pub fn eval(&self, ps: &[Projector]) -> Result<f64> {
        self.check_slots(ps)?;
        let value = match &self.source {
            MeasureSource::Tabulated(f) => f(ps),
            MeasureSource::FromFrame(f) => {
                let bases: Vec<Vec<UnitVector>> = ps.iter().map(Projector::range_basis).collect();
                sum_over_ranges(f, &bases)?
            }
        };
        if !value.is_finite() {
            return Err(Error::NonFinite);
        }
        if self.positive && value < -MEASURE_SLACK {
            return Err(Error::PositivityViolation(value));
        }
        Ok(value)
    }

    /// `m(1, …, 1)`.
    pub fn total(&self) -> Result<f64> {
        let ids: Vec<Projector> = self.space.dims().iter().map(|&d| Projector::identity(d)).collect();
        self.eval(&ids)
    }
}

/// `Σ f(ξ_{j₁} ⊗ ⋯ ⊗ ξ_{jₙ})` over all tensor combinations of the given range bases.
pub fn sum_over_ranges(f: &FrameFunction, range_bases: &[Vec<UnitVector>]) -> Result<f64> {
    if range_bases.iter().any(Vec::is_empty) {
        return Ok(0.0);
    }
    let counts: Vec<usize> = range_bases.iter().map(Vec::len).collect();
    let total: usize = counts.iter().product();
    let mut sum = 0.0;
    for flat in 0..total {
        let idx = unflatten(flat, &counts);
        let tuple: Vec<UnitVector> = idx.iter().zip(range_bases).map(|(&i, b)| b[i].clone()).collect();
        sum += crate::frame::eval_frame(f, &tuple)?;
    }
    Ok(sum)
}

/// `m(e₁,…,eₙ) = Σ f(ξ ⊗ ⋯)` over orthonormal bases of the ranges.
pub fn multimeasure_from_frame(f: FrameFunction) -> MultiMeasure {
    MultiMeasure { space: f.space().clone(), source: MeasureSource::FromFrame(f), positive: true }
}

// ---------------------------------------------------------------------------
// Well-definedness

#[derive(Debug, Clone, Serialize)]
pub struct WellDefinednessReport {
    #[serde(skip)]
    pub projectors: Vec<Projector>,
    pub ranks: Vec<usize>,
    pub seed: u64,
    pub values: Vec<f64>,
    pub spread: f64,
    pub tolerance: f64,
    pub verdict: String,
}

impl WellDefinednessReport {
    pub fn is_well_defined(&self) -> bool {
        self.spread <= self.tolerance
    }
}

/// Evaluate the defining sum of `m(e₁,…,eₙ)` under independently
/// Haar-rotated bases of every range.
pub fn well_definedness_audit(
    f: &FrameFunction,
    e: &[Projector],
    repeats: usize,
    seed: u64,
) -> Result<WellDefinednessReport> {
    if repeats < 2 {
        return Err(Error::InvalidArgument("at least two repeats are needed".into()));
    }
    let m = multimeasure_from_frame(f.clone());
    m.check_slots(e)?;
    let base: Vec<Vec<UnitVector>> = e.iter().map(Projector::range_basis).collect();
    let mut rng = rng_from_seed(seed);
    let values = (0..repeats)
        .map(|_| {
            let rotated: Vec<Vec<UnitVector>> = base.iter().map(|b| haar_rotate_within(b, &mut rng)).collect();
            sum_over_ranges(f, &rotated)
        })
        .collect::<Result<Vec<f64>>>()?;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi - lo;
    let verdict = if spread <= WELL_DEFINED_TOL { "basis-independent" } else { "basis-dependent" };
    Ok(WellDefinednessReport {
        projectors: e.to_vec(),
        ranks: e.iter().map(Projector::rank).collect(),
        seed,
        values,
        spread,
        tolerance: WELL_DEFINED_TOL,
        verdict: verdict.to_string(),
    })
}

/// Block sums of a patchwork configuration.
#[derive(Debug, Clone, Serialize)]
pub struct ExchangeReplay {
    /// Σ over the all-in-range block with the primed bases.
    pub primed_block: f64,
    /// The same block with the unprimed bases.
    pub unprimed_block: f64,
    /// Σ over tuples touching a complement; common to both bases.
    pub shared: f64,
    /// `|primed_block − unprimed_block|`.
    pub defect: f64,
}

/// Replays the basis-exchange identity: both full bases sum to the weight,
/// they share every tuple that touches a complement, so the all-in-range
/// blocks must agree.
pub fn basis_exchange_replay(f: &FrameFunction, cfg: &PatchworkConfig) -> Result<ExchangeReplay> {
    let blocks = cfg.blocks()?;
    let primed_block = sum_over(f, &blocks.primed)?;
    let unprimed_block = sum_over(f, &blocks.unprimed)?;
    let shared = sum_over(f, &blocks.shared)?;
    Ok(ExchangeReplay { primed_block, unprimed_block, shared, defect: (primed_block - unprimed_block).abs() })
}

// ---------------------------------------------------------------------------
// Orthoadditivity

/// `|m(…, Σᵢ pᵢ, …) − Σᵢ m(…, pᵢ, …)|` in `slot`, with `fixed` filling the
/// other slots in order.
pub fn orthoadditivity_check(
    m: &MultiMeasure,
    slot: usize,
    partition: &[Projector],
    fixed: &[Projector],
) -> Result<f64> {
    let n = m.space().n_factors();
    if slot >= n || fixed.len() + 1 != n {
        return Err(Error::InvalidArgument(format!("slot {slot} with {} fixed projectors for {n} slots", fixed.len())));
    }
    let d = m.space().dims()[slot];
    for (a, p) in partition.iter().enumerate() {
        if p.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: p.dim() });
        }
        for q in &partition[..a] {
            let defect = (p.matrix() * q.matrix()).norm();
            if defect > MEASURE_SLACK {
                return Err(Error::NotOrthogonal(defect));
            }
        }
    }
    let total = partition.iter().fold(Operator::zeros(d), |acc, p| acc.add(p.op()));
    let joined = Projector::new(total.hermitian_part()).map_err(|e| match e {
        Error::NotProjector { idempotence, .. } => Error::NotOrthogonal(idempotence),
        other => other,
    })?;
    let with = |p: &Projector| -> Vec<Projector> {
        let mut ps = fixed.to_vec();
        ps.insert(slot, p.clone());
        ps
    };
    let whole = m.eval(&with(&joined))?;
    let parts: f64 = partition.iter().map(|p| m.eval(&with(p))).sum::<Result<f64>>()?;
    Ok((whole - parts).abs())
}

// ---------------------------------------------------------------------------
// Dyadic decomposition

/// `x ≈ scale · Σⱼ₌₁ᴶ 2⁻ʲ pⱼ` with commuting projectors `pⱼ`.
#[derive(Debug, Clone)]
pub struct DyadicDecomposition {
    pub scale: f64,
    pub projections: Vec<Projector>,
    pub truncation: usize,
    /// `bits[j][i]`: whether eigenvector `i` belongs to `p_{j+1}`.
    bits: Vec<Vec<bool>>,
    eigenvectors: Vec<UnitVector>,
}

impl DyadicDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvectors.len()
    }

    pub fn reconstruct(&self) -> Operator {
        let mut acc = Operator::zeros(self.dim());
        let mut weight = 1.0;
        for p in &self.projections {
            weight *= 0.5;
            acc = acc.add(&p.op().scale(weight));
        }
        acc.scale(self.scale)
    }

    /// `scale · 2⁻ᴶ · √dim`.
    pub fn error_bound(&self) -> f64 {
        self.scale * 2f64.powi(-(self.truncation as i32)) * (self.dim() as f64).sqrt()
    }

    /// Largest `‖[pⱼ, pₖ]‖_F`.
    pub fn max_commutator(&self) -> f64 {
        let mut worst = 0.0f64;
        for (a, p) in self.projections.iter().enumerate() {
            for q in &self.projections[a + 1..] {
                let c = p.matrix() * q.matrix() - q.matrix() * p.matrix();
                worst = worst.max(c.norm());
            }
        }
        worst
    }

    /// Distinct projectors with their total coefficient `scale · Σ 2⁻ʲ`.
    pub fn grouped(&self) -> Vec<(f64, Projector)> {
        let mut groups: Vec<(Vec<bool>, f64, Projector)> = Vec::new();
        let mut weight = self.scale;
        for (pattern, p) in self.bits.iter().zip(&self.projections) {
            weight *= 0.5;
            if !pattern.iter().any(|&b| b) {
                continue;
            }
            match groups.iter_mut().find(|(pat, _, _)| pat == pattern) {
                Some(g) => g.1 += weight,
                None => groups.push((pattern.clone(), weight, p.clone())),
            }
        }
        groups.into_iter().map(|(_, w, p)| (w, p)).collect()
    }
}

/// Binary digits of `r ∈ [0,1]`; `1` expands as `0.111…₂`.
fn binary_digits(r: f64, depth: usize) -> Vec<bool> {
    if r >= 1.0 {
        return vec![true; depth];
    }
    let mut r = r.max(0.0);
    (0..depth)
        .map(|_| {
            r *= 2.0;
            let bit = r >= 1.0;
            if bit {
                r -= 1.0;
            }
            bit
        })
        .collect()
}

pub fn dyadic_decompose(x: &Operator, depth: usize) -> Result<DyadicDecomposition> {
    let eig = hermitian_eig(x).map_err(|e| match e {
        Error::NotHermitian(d) => Error::NotPsd(d),
        other => other,
    })?;
    let min = eig.values.last().copied().unwrap_or(0.0);
    if min < -CHECK_TOL {
        return Err(Error::NotPsd(min));
    }
    let scale = eig.values[0];
    if scale <= 0.0 {
        return Err(Error::ZeroOperator);
    }
    let digits: Vec<Vec<bool>> = eig.values.iter().map(|&l| binary_digits((l / scale).clamp(0.0, 1.0), depth)).collect();
    let d = x.dim();
    let mut bits = Vec::with_capacity(depth);
    let mut projections = Vec::with_capacity(depth);
    for j in 0..depth {
        let pattern: Vec<bool> = digits.iter().map(|ds| ds[j]).collect();
        let members: Vec<UnitVector> =
            eig.vectors.iter().zip(&pattern).filter(|(_, &b)| b).map(|(v, _)| v.clone()).collect();
        projections.push(Projector::from_orthonormal(d, &members)?);
        bits.push(pattern);
    }
    Ok(DyadicDecomposition { scale, projections, truncation: depth, bits, eigenvectors: eig.vectors })
}

// ---------------------------------------------------------------------------
// Positive multilinear extension

/// `Re Tr((x₁ ⊗ ⋯ ⊗ xₙ) T)`.
pub fn trace_route(xs: &[Operator], t: &Operator) -> Result<f64> {
    let k = kron_op(xs)?;
    if k.dim() != t.dim() {
        return Err(Error::DimensionMismatch { expected: t.dim(), found: k.dim() });
    }
    Ok(k.mul(t).trace().re)
}

/// Tolerance `Π‖xₖ‖ · n · 2^(−J+c)` shared by both evaluation routes.
pub fn dyadic_budget(xs: &[Operator], depth: usize) -> f64 {
    let norms: f64 = xs.iter().map(Operator::operator_norm).product();
    norms * xs.len() as f64 * 2f64.powi(DYADIC_BUDGET_SLACK_BITS - depth as i32)
}

/// `M(x₁,…,xₙ)` for positive `xₖ`, expanding each slot dyadically and
/// summing `m` over projector tuples. When `linear` holds an operator `T̂`
/// representing `m`, the trace route must agree within [`dyadic_budget`].
pub fn extend_to_positives(
    m: &MultiMeasure,
    xs: &[Operator],
    depth: usize,
    linear: Option<&Operator>,
) -> Result<f64> {
    let dims = m.space().dims();
    if xs.len() != dims.len() {
        return Err(Error::SpaceMismatch(format!("{} operators for space {}", xs.len(), m.space())));
    }
    let mut slots: Vec<Vec<(f64, Projector)>> = Vec::with_capacity(xs.len());
    for (x, &d) in xs.iter().zip(dims) {
        if x.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: x.dim() });
        }
        match dyadic_decompose(x, depth) {
            Ok(dec) => slots.push(dec.grouped()),
            // multilinear in each slot
            Err(Error::ZeroOperator) => return Ok(0.0),
            Err(e) => return Err(e),
        }
    }
    let counts: Vec<usize> = slots.iter().map(Vec::len).collect();
    let total: usize = counts.iter().product();
    let mut value = 0.0;
    for flat in 0..total {
        let idx = unflatten(flat, &counts);
        let mut coef = 1.0;
        let mut ps = Vec::with_capacity(idx.len());
        for (&i, slot) in idx.iter().zip(&slots) {
            coef *= slot[i].0;
            ps.push(slot[i].1.clone());
        }
        value += coef * m.eval(&ps)?;
    }
    let budget = dyadic_budget(xs, depth);
    if let Some(t) = linear {
        let other = trace_route(xs, t)?;
        let difference = (value - other).abs();
        if difference > budget {
            return Err(Error::TruncationBudgetExceeded { difference, budget });
        }
    }
    if m.is_positive() && value < -budget {
        return Err(Error::PositivityViolation(value));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{eval_frame, Profile};
    use crate::linalg::{rank1_projector, random_psd, C64};

    fn dims(d: &[usize]) -> SpaceSpec {
        SpaceSpec::new(d.to_vec()).unwrap()
    }

    fn induced(d: &[usize], seed: u64) -> (FrameFunction, Operator) {
        let spec = dims(d);
        let t = random_psd(spec.total_dim(), seed);
        (FrameFunction::operator_induced(spec, t.clone()).unwrap(), t)
    }

    fn random_projector<R: rand::Rng>(d: usize, rank: usize, rng: &mut R) -> Projector {
        let u = crate::linalg::haar_unitary_with(d, rng);
        let cols: Vec<UnitVector> =
            (0..rank).map(|j| UnitVector::normalize(u.matrix().column(j).into_owned()).unwrap()).collect();
        Projector::from_orthonormal(d, &cols).unwrap()
    }

    #[test]
    fn multimeasure_matches_trace() {
        let (f, t) = induced(&[3, 3], 2);
        let m = multimeasure_from_frame(f);
        let mut rng = rng_from_seed(3);
        for _ in 0..20 {
            let e = [random_projector(3, 2, &mut rng), random_projector(3, 1, &mut rng)];
            let expect = trace_route(&[e[0].op().clone(), e[1].op().clone()], &t).unwrap();
            assert!((m.eval(&e).unwrap() - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_slot_gives_zero() {
        let (f, _) = induced(&[3, 3], 2);
        let m = multimeasure_from_frame(f);
        assert_eq!(m.eval(&[Projector::zero(3), Projector::identity(3)]).unwrap(), 0.0);
    }

    #[test]
    fn product_operator_example() {
        // T = A⊗B, A = diag(1,2,3)/6, B = I/3; m(P₀+P₁, P₀) = (3/6)(1/3)
        let a = Operator::diag(&[1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]);
        let b = Operator::identity(3).scale(1.0 / 3.0);
        let t = kron_op(&[a, b]).unwrap();
        let f = FrameFunction::operator_induced(dims(&[3, 3]), t).unwrap();
        let m = multimeasure_from_frame(f);
        let e1 = Projector::from_orthonormal(3, &[UnitVector::basis(3, 0), UnitVector::basis(3, 1)]).unwrap();
        let e2 = rank1_projector(&UnitVector::basis(3, 0));
        assert!((m.eval(&[e1, e2]).unwrap() - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn well_definedness_for_induced_frame() {
        let (f, _) = induced(&[3, 3], 5);
        let mut rng = rng_from_seed(6);
        let e = [random_projector(3, 2, &mut rng), random_projector(3, 2, &mut rng)];
        let r = well_definedness_audit(&f, &e, 20, 7).unwrap();
        assert!(r.spread < 1e-9, "{}", r.spread);
        assert!(r.is_well_defined());
        let e = [random_projector(3, 1, &mut rng), random_projector(3, 1, &mut rng)];
        let r = well_definedness_audit(&f, &e, 20, 8).unwrap();
        assert!(r.spread < 1e-12);
        assert!(well_definedness_audit(&f, &e, 1, 8).is_err());
    }

    #[test]
    fn well_definedness_pathological_factor_is_recorded() {
        let q = FrameFunction::dim2_pathological(Profile::Sine, UnitVector::basis(2, 0)).unwrap();
        let (h, _) = induced(&[3], 4);
        let f = FrameFunction::product(vec![q, h]).unwrap();
        let mut rng = rng_from_seed(9);
        let e = [Projector::identity(2), random_projector(3, 2, &mut rng)];
        let r = well_definedness_audit(&f, &e, 20, 10).unwrap();
        assert_eq!(r.values.len(), 20);
        assert!(r.spread >= 0.0);
        let json = serde_json::to_value(&r).unwrap();
        for key in ["values", "spread", "tolerance", "verdict"] {
            assert!(json.get(key).is_some());
        }
    }

    #[test]
    fn exchange_identity_holds_for_induced_frame() {
        let (f, _) = induced(&[3, 3], 11);
        let mut rng = rng_from_seed(12);
        for _ in 0..5 {
            let cfg = PatchworkConfig::random(&dims(&[3, 3]), &mut rng).unwrap();
            let r = basis_exchange_replay(&f, &cfg).unwrap();
            assert!(r.defect < 1e-9);
        }
    }

    #[test]
    fn orthoadditivity_partitions() {
        let (f, _) = induced(&[3, 3], 13);
        let m = multimeasure_from_frame(f);
        let mut rng = rng_from_seed(14);
        let u = crate::bases::OrthonormalBasis::random_factor(3, &mut rng).unwrap();
        let parts: Vec<Projector> = u.vectors().iter().map(rank1_projector).collect();
        let fixed = [random_projector(3, 2, &mut rng)];
        assert!(orthoadditivity_check(&m, 0, &parts, &fixed).unwrap() < 1e-9);
        assert!(orthoadditivity_check(&m, 1, &parts[..2], &fixed).unwrap() < 1e-9);
        let p = random_projector(3, 1, &mut rng);
        assert!(orthoadditivity_check(&m, 0, &[p, Projector::zero(3)], &fixed).unwrap() < 1e-12);
    }

    #[test]
    fn orthoadditivity_rejects_overlap() {
        let (f, _) = induced(&[2, 2], 1);
        let m = multimeasure_from_frame(f);
        let p = rank1_projector(&UnitVector::basis(2, 0));
        let err = orthoadditivity_check(&m, 0, &[p.clone(), p], &[Projector::identity(2)]).unwrap_err();
        assert!(matches!(err, Error::NotOrthogonal(_)));
    }

    #[test]
    fn binary_digits_of_two_thirds() {
        let d = binary_digits(2.0 / 3.0, 6);
        assert_eq!(d, vec![true, false, true, false, true, false]);
        assert_eq!(binary_digits(1.0, 3), vec![true; 3]);
        assert_eq!(binary_digits(0.0, 3), vec![false; 3]);
    }

    #[test]
    fn dyadic_diag_example() {
        let x = Operator::diag(&[0.75, 0.5]);
        let dec = dyadic_decompose(&x, 20).unwrap();
        assert_eq!(dec.scale, 0.75);
        assert_eq!(dec.projections[0].op(), &Operator::diag(&[1.0, 1.0]));
        assert_eq!(dec.projections[1].op(), &Operator::diag(&[1.0, 0.0]));
        assert_eq!(dec.projections[2].op(), &Operator::diag(&[1.0, 1.0]));
        let err = dec.reconstruct().sub(&x).frobenius_norm();
        assert!(err <= dec.error_bound(), "{err}");
    }

    #[test]
    fn dyadic_projector_is_all_ones() {
        let p = rank1_projector(&UnitVector::basis(3, 1));
        let dec = dyadic_decompose(p.op(), 30).unwrap();
        assert_eq!(dec.scale, 1.0);
        assert!(dec.projections.iter().all(|q| q.op().sub(p.op()).frobenius_norm() < 1e-15));
        assert_eq!(dec.grouped().len(), 1);
    }

    #[test]
    fn dyadic_random_psd() {
        let x = random_psd(6, 8);
        let dec = dyadic_decompose(&x, 40).unwrap();
        assert!(dec.reconstruct().sub(&x).frobenius_norm() < 1e-10);
        assert!(dec.max_commutator() < 1e-9);
    }

    #[test]
    fn dyadic_errors() {
        assert!(matches!(dyadic_decompose(&Operator::zeros(3), 10), Err(Error::ZeroOperator)));
        assert!(matches!(dyadic_decompose(&Operator::diag(&[1.0, -1.0]), 10), Err(Error::NotPsd(_))));
        let skew = Operator::from_rows(&[vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)], vec![C64::new(0.0, 0.0); 2]])
            .unwrap();
        assert!(matches!(dyadic_decompose(&skew, 10), Err(Error::NotPsd(_))));
    }

    #[test]
    fn extension_on_identities_is_trace() {
        let (f, t) = induced(&[3, 3], 21);
        let m = multimeasure_from_frame(f);
        let ids = [Operator::identity(3), Operator::identity(3)];
        let v = extend_to_positives(&m, &ids, 30, Some(&t)).unwrap();
        assert!((v - t.trace().re).abs() <= dyadic_budget(&ids, 30));
    }

    #[test]
    fn extension_on_projectors_is_m() {
        let (f, _) = induced(&[3, 3], 22);
        let m = multimeasure_from_frame(f);
        let mut rng = rng_from_seed(23);
        let e = [random_projector(3, 2, &mut rng), random_projector(3, 1, &mut rng)];
        let direct = m.eval(&e).unwrap();
        let xs = [e[0].op().clone(), e[1].op().clone()];
        let ext = extend_to_positives(&m, &xs, 30, None).unwrap();
        assert!((direct - ext).abs() <= dyadic_budget(&xs, 30));
        let exact = extend_to_positives(&m, &xs, 52, None).unwrap();
        assert!((direct - exact).abs() < 1e-14);
    }

    #[test]
    fn extension_matches_trace_route_on_random_psd() {
        let (f, t) = induced(&[3, 3], 24);
        let m = multimeasure_from_frame(f);
        let xs = [random_psd(3, 25), random_psd(3, 26)];
        let v = extend_to_positives(&m, &xs, 30, Some(&t)).unwrap();
        assert!((v - trace_route(&xs, &t).unwrap()).abs() < 1e-6);
        let doubled = [xs[0].scale(2.0), xs[1].clone()];
        let v2 = extend_to_positives(&m, &doubled, 30, None).unwrap();
        assert!((v2 - 2.0 * v).abs() <= 1e-6 * v.abs());
    }

    #[test]
    fn extension_detects_wrong_linear_route() {
        let (f, _) = induced(&[2, 2], 30);
        let m = multimeasure_from_frame(f);
        let xs = [random_psd(2, 31), random_psd(2, 32)];
        let wrong = Operator::identity(4);
        assert!(matches!(
            extend_to_positives(&m, &xs, 30, Some(&wrong)),
            Err(Error::TruncationBudgetExceeded { .. })
        ));
    }

    #[test]
    fn tabulated_positivity_is_enforced() {
        let m = MultiMeasure::tabulated(dims(&[2]), true, |_| -0.5);
        assert!(matches!(m.eval(&[Projector::identity(2)]), Err(Error::PositivityViolation(_))));
        let f = FrameFunction::custom(dims(&[2]), None, |_| 0.5);
        assert!(eval_frame(&f, &[UnitVector::basis(2, 0)]).is_ok());
    }
}
