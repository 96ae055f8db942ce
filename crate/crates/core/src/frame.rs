//! Frame functions on unit simple tensors and audits of their basis sums.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bases::{
    branching_basis_with, random_patchwork_basis, random_product_basis, search_unentangled_basis_with, BasisKind,
    OrthonormalBasis, SearchOutcome,
};
use crate::error::{Error, Result};
use crate::linalg::{rank1_projector, tensor_vec, Operator, SpaceSpec, UnitVector, CHECK_TOL};
use crate::multimeasure::MultiMeasure;

/// Negative values down to this are numerical residue and clamp to zero.
pub const POSITIVITY_SLACK: f64 = 1e-10;

/// Candidate draws allowed per searched basis in an audit.
pub const AUDIT_SEARCH_ATTEMPTS: usize = 2_000;

// ---------------------------------------------------------------------------
// Dimension-2 profiles

/// A function `q` on `[0,1]` with `q(t) + q(1 − t) = 1`, used on `ℂ²` as
/// `x ↦ q(|⟨x, axis⟩|²)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// `q(t) = sin²(πt/2)`.
    Sine,
}

impl Profile {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            Profile::Sine => {
                let s = (std::f64::consts::FRAC_PI_2 * t).sin();
                s * s
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::Sine => "sine",
        }
    }
}

pub fn pathological_profile(name: &str) -> Result<Profile> {
    match name {
        "sine" => Ok(Profile::Sine),
        other => Err(Error::UnknownProfile(other.to_string())),
    }
}

/// Smallest uniform deviation `max_t |q(t) − (a + b t)|` over affine
/// functions, on a grid of `points` values of `t ∈ [0,1]`.
///
/// On `ℂ²`, averaging `⟨x, T x⟩` over the relative phase of `x` in the
/// `{axis, axis⊥}` frame leaves an affine function of `t = |⟨x, axis⟩|²`, and
/// averaging cannot increase a uniform deviation. So no Hermitian `T` matches
/// the profile to better than this value.
pub fn affine_minimax_deviation(profile: Profile, points: usize) -> (f64, f64, f64) {
    let ts: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
    let spread = |b: f64| -> (f64, f64) {
        let (lo, hi) = ts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| {
            let r = profile.eval(t) - b * t;
            (lo.min(r), hi.max(r))
        });
        ((hi - lo) / 2.0, (hi + lo) / 2.0)
    };
    // the half-range of the residual is convex in the slope
    let (mut lo, mut hi) = (-4.0f64, 4.0f64);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if spread(m1).0 <= spread(m2).0 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let slope = (lo + hi) / 2.0;
    let (dev, intercept) = spread(slope);
    (dev, slope, intercept)
}

// ---------------------------------------------------------------------------
// FrameFunction

pub type FrameFn = Arc<dyn Fn(&[UnitVector]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum FrameVariant {
    /// `ν ↦ Tr((⊗ₖ νₖνₖ†) T)`.
    OperatorInduced(Operator),
    /// `ν ↦ Πⱼ fⱼ(νⱼ)`, each `fⱼ` consuming its own block of factors.
    ProductOfFrames(Vec<FrameFunction>),
    Dim2Pathological { profile: Profile, axis: UnitVector },
    FromMultiMeasure(Arc<MultiMeasure>),
    Custom(FrameFn),
}

impl fmt::Debug for FrameVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::OperatorInduced(t) => f.debug_tuple("OperatorInduced").field(t).finish(),
            Self::ProductOfFrames(fs) => f.debug_tuple("ProductOfFrames").field(fs).finish(),
            Self::Dim2Pathological { profile, axis } => {
                f.debug_struct("Dim2Pathological").field("profile", profile).field("axis", axis).finish()
            }
            Self::FromMultiMeasure(m) => f.debug_tuple("FromMultiMeasure").field(m).finish(),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FrameFunction {
    space: SpaceSpec,
    variant: FrameVariant,
    declared_weight: Option<f64>,
}

impl FrameFunction {
    /// Requires `T` positive semidefinite within `1e-8`.
    pub fn operator_induced(space: SpaceSpec, t: Operator) -> Result<Self> {
        if t.dim() != space.total_dim() {
            return Err(Error::DimensionMismatch { expected: space.total_dim(), found: t.dim() });
        }
        let eig = crate::linalg::hermitian_eig(&t)?;
        let min = eig.values.last().copied().unwrap_or(0.0);
        if min < -CHECK_TOL {
            return Err(Error::NotPsd(min));
        }
        let w = t.trace().re;
        Ok(Self { space, variant: FrameVariant::OperatorInduced(t), declared_weight: Some(w) })
    }

    pub fn product(frames: Vec<FrameFunction>) -> Result<Self> {
        let spaces: Vec<SpaceSpec> = frames.iter().map(|f| f.space.clone()).collect();
        let space = SpaceSpec::concat(&spaces)?;
        let declared_weight = frames.iter().map(|f| f.declared_weight).product::<Option<f64>>();
        Ok(Self { space, variant: FrameVariant::ProductOfFrames(frames), declared_weight })
    }

    pub fn dim2_pathological(profile: Profile, axis: UnitVector) -> Result<Self> {
        if axis.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: axis.dim() });
        }
        Ok(Self {
            space: SpaceSpec::single(2)?,
            variant: FrameVariant::Dim2Pathological { profile, axis },
            declared_weight: Some(1.0),
        })
    }

    pub fn custom(
        space: SpaceSpec,
        declared_weight: Option<f64>,
        f: impl Fn(&[UnitVector]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { space, variant: FrameVariant::Custom(Arc::new(f)), declared_weight }
    }

    pub fn with_declared_weight(mut self, w: Option<f64>) -> Self {
        self.declared_weight = w;
        self
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn variant(&self) -> &FrameVariant {
        &self.variant
    }

    pub fn declared_weight(&self) -> Option<f64> {
        self.declared_weight
    }

    pub fn eval(&self, factors: &[UnitVector]) -> Result<f64> {
        eval_frame(self, factors)
    }

    fn eval_raw(&self, factors: &[UnitVector]) -> Result<f64> {
        match &self.variant {
            FrameVariant::OperatorInduced(t) => {
                let v = tensor_vec(factors)?;
                let z = t.expectation(&v);
                if z.im.abs() > POSITIVITY_SLACK * z.re.abs().max(1.0) {
                    return Err(Error::ImaginaryResidue(z.im));
                }
                Ok(z.re)
            }
            FrameVariant::ProductOfFrames(frames) => {
                let mut offset = 0;
                let mut value = 1.0;
                for f in frames {
                    let n = f.space.n_factors();
                    value *= eval_frame(f, &factors[offset..offset + n])?;
                    offset += n;
                }
                Ok(value)
            }
            FrameVariant::Dim2Pathological { profile, axis } => {
                let t = axis.inner(&factors[0]).norm_sqr().clamp(0.0, 1.0);
                Ok(profile.eval(t))
            }
            FrameVariant::FromMultiMeasure(m) => {
                let ps: Vec<_> = factors.iter().map(rank1_projector).collect();
                m.eval(&ps)
            }
            FrameVariant::Custom(f) => Ok(f(factors)),
        }
    }
}

/// `f(ν₁ ⊗ ⋯ ⊗ νₙ)`.
pub fn eval_frame(f: &FrameFunction, factors: &[UnitVector]) -> Result<f64> {
    let dims = f.space.dims();
    if factors.len() != dims.len() {
        return Err(Error::SpaceMismatch(format!("{} factors for space {}", factors.len(), f.space)));
    }
    for (v, &d) in factors.iter().zip(dims) {
        if v.dim() != d {
            return Err(Error::SpaceMismatch(format!("factor of dimension {} for space {}", v.dim(), f.space)));
        }
    }
    let value = f.eval_raw(factors)?;
    if !value.is_finite() {
        return Err(Error::NonFinite);
    }
    if value < -POSITIVITY_SLACK {
        return Err(Error::PositivityViolation(value));
    }
    Ok(value.max(0.0))
}

/// `ν ↦ m(ν₁ν₁†, …, νₙνₙ†)`.
pub fn frame_from_multimeasure(m: MultiMeasure) -> FrameFunction {
    let space = m.space().clone();
    let declared_weight = m.total().ok();
    FrameFunction { space, variant: FrameVariant::FromMultiMeasure(Arc::new(m)), declared_weight }
}

/// Sum of `f` over explicit factor tuples.
pub fn sum_over(f: &FrameFunction, tuples: &[Vec<UnitVector>]) -> Result<f64> {
    tuples.iter().map(|t| eval_frame(f, t)).sum()
}

/// `Σᵢ f(ξᵢ)` over an unentangled basis.
pub fn basis_sum(f: &FrameFunction, b: &OrthonormalBasis) -> Result<f64> {
    if b.space() != f.space() {
        return Err(Error::SpaceMismatch(format!("basis over {} for frame over {}", b.space(), f.space())));
    }
    sum_over(f, &b.factored()?)
}

// ---------------------------------------------------------------------------
// Sample files

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSample {
    pub factors: Vec<UnitVector>,
    pub value: f64,
}

/// `{"space": [...], "samples": [{"factors": [...], "value": v}, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSamples {
    pub space: SpaceSpec,
    pub samples: Vec<FrameSample>,
}

impl FrameSamples {
    pub fn evaluate(f: &FrameFunction, tuples: Vec<Vec<UnitVector>>) -> Result<Self> {
        let samples = tuples
            .into_iter()
            .map(|factors| Ok(FrameSample { value: eval_frame(f, &factors)?, factors }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { space: f.space().clone(), samples })
    }

    /// Every sample must match the space factor by factor.
    pub fn check(&self) -> Result<()> {
        for (i, s) in self.samples.iter().enumerate() {
            let dims: Vec<usize> = s.factors.iter().map(UnitVector::dim).collect();
            if dims != self.space.dims() {
                return Err(Error::SpaceMismatch(format!("sample {i} has factor dimensions {dims:?}")));
            }
            if !s.value.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Weight audit

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisFamily {
    Product,
    Branching,
    Patchwork,
    Searched,
}

impl BasisFamily {
    pub const ALL: [BasisFamily; 4] =
        [BasisFamily::Product, BasisFamily::Branching, BasisFamily::Patchwork, BasisFamily::Searched];

    pub fn kind(self) -> BasisKind {
        match self {
            BasisFamily::Product => BasisKind::Product,
            BasisFamily::Branching => BasisKind::Branching,
            BasisFamily::Patchwork => BasisKind::Patchwork,
            BasisFamily::Searched => BasisKind::UnentangledSearched,
        }
    }

    fn stream(self) -> u64 {
        match self {
            BasisFamily::Product => 1,
            BasisFamily::Branching => 2,
            BasisFamily::Patchwork => 3,
            BasisFamily::Searched => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BasisFamily::Product => "product",
            BasisFamily::Branching => "branching",
            BasisFamily::Patchwork => "patchwork",
            BasisFamily::Searched => "searched",
        }
    }

    /// Draw one basis; `None` when the searcher gives up.
    pub fn sample<R: Rng + ?Sized>(self, spec: &SpaceSpec, rng: &mut R) -> Result<Option<OrthonormalBasis>> {
        Ok(match self {
            BasisFamily::Product => Some(random_product_basis(spec, rng)?),
            BasisFamily::Branching => Some(branching_basis_with(spec, rng)?),
            BasisFamily::Patchwork => Some(random_patchwork_basis(spec, rng)?),
            BasisFamily::Searched => match search_unentangled_basis_with(spec, rng, AUDIT_SEARCH_ATTEMPTS)? {
                SearchOutcome::Found(b) => Some(b),
                SearchOutcome::Failed(_) => None,
            },
        })
    }
}

impl FromStr for BasisFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "product" => Ok(Self::Product),
            "branching" => Ok(Self::Branching),
            "patchwork" => Ok(Self::Patchwork),
            "searched" | "unentangled-searched" => Ok(Self::Searched),
            other => Err(Error::InvalidArgument(format!("unknown basis family `{other}`"))),
        }
    }
}

impl fmt::Display for BasisFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub(crate) fn family_rng(seed: u64, family: BasisFamily) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(family.stream());
    rng
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyAudit {
    pub family: BasisFamily,
    pub requested: usize,
    /// Trials where the searcher gave up.
    pub skipped: usize,
    pub sums: Vec<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub spread: Option<f64>,
    /// `None` when every trial was skipped.
    pub constant: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub family: BasisFamily,
    pub trial: usize,
    pub sum: f64,
    pub basis: OrthonormalBasis,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum AuditVerdict {
    ConstantWithin { tol: f64 },
    Violation { witnesses: Vec<Witness> },
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightAuditReport {
    pub space: SpaceSpec,
    pub seed: u64,
    pub trials: usize,
    pub tolerance: f64,
    pub sums: Vec<(BasisKind, f64)>,
    pub families: Vec<FamilyAudit>,
    pub spread: f64,
    pub declared_weight: Option<f64>,
    /// Largest `|sum − declared_weight|`.
    pub declared_weight_defect: Option<f64>,
    pub verdict: AuditVerdict,
}

impl WeightAuditReport {
    pub fn is_constant(&self) -> bool {
        matches!(self.verdict, AuditVerdict::ConstantWithin { .. })
    }

    pub fn family(&self, family: BasisFamily) -> Option<&FamilyAudit> {
        self.families.iter().find(|a| a.family == family)
    }
}

struct Extreme {
    family: BasisFamily,
    trial: usize,
    sum: f64,
    basis: OrthonormalBasis,
}

/// Sample `trials` bases from every family, sum `f` over each and compare.
pub fn audit_weight(
    f: &FrameFunction,
    spec: &SpaceSpec,
    families: &[BasisFamily],
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<WeightAuditReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if spec != f.space() {
        return Err(Error::SpaceMismatch(format!("audit over {spec} for frame over {}", f.space())));
    }
    let mut sums = Vec::new();
    let mut audits = Vec::new();
    let mut lowest: Option<Extreme> = None;
    let mut highest: Option<Extreme> = None;
    let mut worst_declared: Option<(f64, Extreme)> = None;

    for &family in families {
        let mut rng = family_rng(seed, family);
        let mut fam_sums = Vec::with_capacity(trials);
        let mut skipped = 0;
        for trial in 0..trials {
            let Some(basis) = family.sample(spec, &mut rng)? else {
                skipped += 1;
                continue;
            };
            let sum = basis_sum(f, &basis)?;
            fam_sums.push(sum);
            sums.push((family.kind(), sum));
            if lowest.as_ref().is_none_or(|e| sum < e.sum) {
                lowest = Some(Extreme { family, trial, sum, basis: basis.clone() });
            }
            if highest.as_ref().is_none_or(|e| sum > e.sum) {
                highest = Some(Extreme { family, trial, sum, basis: basis.clone() });
            }
            if let Some(w) = f.declared_weight() {
                let defect = (sum - w).abs();
                if worst_declared.as_ref().is_none_or(|(d, _)| defect > *d) {
                    worst_declared = Some((defect, Extreme { family, trial, sum, basis }));
                }
            }
        }
        let min = fam_sums.iter().copied().reduce(f64::min);
        let max = fam_sums.iter().copied().reduce(f64::max);
        let spread = min.zip(max).map(|(lo, hi)| hi - lo);
        audits.push(FamilyAudit {
            family,
            requested: trials,
            skipped,
            sums: fam_sums,
            min,
            max,
            spread,
            constant: spread.map(|s| s <= tol),
        });
    }

    let spread = match (&lowest, &highest) {
        (Some(lo), Some(hi)) => hi.sum - lo.sum,
        _ => 0.0,
    };
    let declared_weight_defect = worst_declared.as_ref().map(|(d, _)| *d);
    let declared_ok = declared_weight_defect.is_none_or(|d| d <= tol);
    let verdict = if spread <= tol && declared_ok {
        AuditVerdict::ConstantWithin { tol }
    } else {
        let mut witnesses = Vec::new();
        if spread > tol {
            witnesses.extend([lowest, highest].into_iter().flatten());
        } else if let Some((_, e)) = worst_declared {
            witnesses.push(e);
        }
        AuditVerdict::Violation {
            witnesses: witnesses
                .into_iter()
                .map(|e| Witness { family: e.family, trial: e.trial, sum: e.sum, basis: e.basis })
                .collect(),
        }
    };
    Ok(WeightAuditReport {
        space: spec.clone(),
        seed,
        trials,
        tolerance: tol,
        sums,
        families: audits,
        spread,
        declared_weight: f.declared_weight(),
        declared_weight_defect,
        verdict,
    })
}
