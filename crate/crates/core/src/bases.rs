//! Orthonormal bases of tensor-product spaces whose vectors are simple tensors.
//!
//! Product bases are the obvious family. Branching bases let the basis of a
//! later factor depend on the index chosen in earlier factors, so they are
//! unentangled without being products. Patchwork bases are the union bases
//! used to show that a multi-measure built from an unentangled frame function
//! does not depend on the choice of range bases.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    entanglement_indicator, haar_unitary_with, nearest_simple_tensor, rng_from_seed, simple_tensor_factor,
    simplicity_residual, tensor_vec, unflatten, Operator, Projector, SpaceSpec, UnitVector, BUILD_TOL, C64,
    CHECK_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    Generic,
    Product,
    Branching,
    Patchwork,
    UnentangledSearched,
}

impl BasisKind {
    pub fn is_unentangled(self) -> bool {
        self != BasisKind::Generic
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct BasisJson {
    kind: BasisKind,
    space: SpaceSpec,
    vectors: Vec<UnitVector>,
}

/// A complete orthonormal family in `H₁ ⊗ ⋯ ⊗ Hₙ`, tagged with how it was built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisJson", into = "BasisJson")]
pub struct OrthonormalBasis {
    kind: BasisKind,
    space: SpaceSpec,
    vectors: Vec<UnitVector>,
}

impl OrthonormalBasis {
    /// Checks completeness, orthonormality and (for unentangled kinds) that
    /// every vector is a simple tensor.
    pub fn new(space: SpaceSpec, vectors: Vec<UnitVector>, kind: BasisKind) -> Result<Self> {
        let b = Self::new_unchecked(space, vectors, kind);
        let total = b.space.total_dim();
        if b.vectors.len() != total {
            return Err(Error::DimensionMismatch { expected: total, found: b.vectors.len() });
        }
        if let Some(v) = b.vectors.iter().find(|v| v.dim() != total) {
            return Err(Error::DimensionMismatch { expected: total, found: v.dim() });
        }
        let overlap = max_overlap(&b.vectors);
        if overlap > BUILD_TOL {
            return Err(Error::NotOrthonormal(overlap));
        }
        if kind.is_unentangled() {
            for (index, v) in b.vectors.iter().enumerate() {
                let s = entanglement_indicator(v, &b.space)?;
                if s > CHECK_TOL {
                    return Err(Error::NotUnentangledBasis { index, singular_value: s });
                }
            }
        }
        Ok(b)
    }

    /// No validation; pair with [`validate_basis`].
    pub fn new_unchecked(space: SpaceSpec, vectors: Vec<UnitVector>, kind: BasisKind) -> Self {
        Self { kind, space, vectors }
    }

    pub fn standard(d: usize) -> Result<Self> {
        let space = SpaceSpec::single(d)?;
        Ok(Self::new_unchecked(space, (0..d).map(|i| UnitVector::basis(d, i)).collect(), BasisKind::Generic))
    }

    /// The columns of a unitary.
    pub fn from_unitary(space: SpaceSpec, u: &Operator, kind: BasisKind) -> Result<Self> {
        if u.dim() != space.total_dim() {
            return Err(Error::DimensionMismatch { expected: space.total_dim(), found: u.dim() });
        }
        let vectors = (0..u.dim())
            .map(|j| UnitVector::normalize(u.matrix().column(j).into_owned()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, vectors, kind)
    }

    /// Haar-random basis of a single factor `ℂᵈ`.
    pub fn random_factor<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Self> {
        Self::from_unitary(SpaceSpec::single(d)?, &haar_unitary_with(d, rng), BasisKind::Generic)
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn vectors(&self) -> &[UnitVector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Factor every vector over the basis space.
    pub fn factored(&self) -> Result<Vec<Vec<UnitVector>>> {
        self.vectors
            .iter()
            .enumerate()
            .map(|(index, v)| match simple_tensor_factor(v, &self.space, CHECK_TOL)? {
                crate::linalg::Factoring::Simple(f) => Ok(f),
                crate::linalg::Factoring::NotSimple { second_singular_value, .. } => {
                    Err(Error::NotUnentangledBasis { index, singular_value: second_singular_value })
                }
            })
            .collect()
    }
}

impl TryFrom<BasisJson> for OrthonormalBasis {
    type Error = Error;
    fn try_from(j: BasisJson) -> Result<Self> {
        Self::new(j.space, j.vectors, j.kind)
    }
}

impl From<OrthonormalBasis> for BasisJson {
    fn from(b: OrthonormalBasis) -> Self {
        BasisJson { kind: b.kind, space: b.space, vectors: b.vectors }
    }
}

fn max_overlap(vectors: &[UnitVector]) -> f64 {
    let mut worst = 0.0f64;
    for (a, u) in vectors.iter().enumerate() {
        for w in &vectors[a + 1..] {
            worst = worst.max(u.inner(w).norm());
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// Product and branching bases

/// All tensor combinations of one basis per factor, in lexicographic order.
pub fn product_basis(factor_bases: &[OrthonormalBasis]) -> Result<OrthonormalBasis> {
    match factor_bases {
        [] => Err(Error::InvalidArgument("no factor bases".into())),
        [only] => Ok(only.clone()),
        _ => {
            let spaces: Vec<SpaceSpec> = factor_bases.iter().map(|b| b.space.clone()).collect();
            let space = SpaceSpec::concat(&spaces)?;
            let counts: Vec<usize> = factor_bases.iter().map(OrthonormalBasis::len).collect();
            for (b, s) in factor_bases.iter().zip(&spaces) {
                if b.len() != s.total_dim() {
                    return Err(Error::DimensionMismatch { expected: s.total_dim(), found: b.len() });
                }
            }
            let vectors = (0..space.total_dim())
                .map(|flat| {
                    let idx = unflatten(flat, &counts);
                    let parts: Vec<UnitVector> =
                        idx.iter().zip(factor_bases).map(|(&i, b)| b.vectors[i].clone()).collect();
                    tensor_vec(&parts)
                })
                .collect::<Result<Vec<_>>>()?;
            OrthonormalBasis::new(space, vectors, BasisKind::Product)
        }
    }
}

/// A basis of the first factor and, below each of its vectors, a branching
/// spec for the remaining factors.
#[derive(Debug, Clone)]
pub enum BranchingSpec {
    Leaf(OrthonormalBasis),
    Node { basis: OrthonormalBasis, children: Vec<BranchingSpec> },
}

impl BranchingSpec {
    pub fn random<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self> {
        match dims {
            [] => Err(Error::InvalidArgument("no factors".into())),
            [d] => Ok(Self::Leaf(OrthonormalBasis::random_factor(*d, rng)?)),
            [d, rest @ ..] => {
                let basis = OrthonormalBasis::random_factor(*d, rng)?;
                let children = (0..*d).map(|_| Self::random(rest, rng)).collect::<Result<Vec<_>>>()?;
                Ok(Self::Node { basis, children })
            }
        }
    }

    /// Every branch uses the same bases, which realizes a product basis.
    pub fn uniform(factor_bases: &[OrthonormalBasis]) -> Result<Self> {
        match factor_bases {
            [] => Err(Error::InvalidArgument("no factors".into())),
            [b] => Ok(Self::Leaf(b.clone())),
            [b, rest @ ..] => {
                let child = Self::uniform(rest)?;
                Ok(Self::Node { basis: b.clone(), children: vec![child; b.len()] })
            }
        }
    }

    fn space(&self) -> Result<SpaceSpec> {
        match self {
            Self::Leaf(b) => Ok(b.space.clone()),
            Self::Node { basis, children } => {
                let child = children.first().ok_or_else(|| Error::InvalidArgument("node without children".into()))?;
                SpaceSpec::concat(&[basis.space.clone(), child.space()?])
            }
        }
    }

    fn collect(&self, out: &mut Vec<Vec<UnitVector>>) -> Result<()> {
        match self {
            Self::Leaf(b) => out.extend(b.vectors.iter().map(|v| vec![v.clone()])),
            Self::Node { basis, children } => {
                if children.len() != basis.len() {
                    return Err(Error::DimensionMismatch { expected: basis.len(), found: children.len() });
                }
                for (v, child) in basis.vectors.iter().zip(children) {
                    let mut sub = Vec::new();
                    child.collect(&mut sub)?;
                    out.extend(sub.into_iter().map(|mut tail| {
                        tail.insert(0, v.clone());
                        tail
                    }));
                }
            }
        }
        Ok(())
    }

    /// Factor tuples of the realized basis, lexicographic in (branch, leaf).
    pub fn factor_tuples(&self) -> Result<Vec<Vec<UnitVector>>> {
        let mut out = Vec::new();
        self.collect(&mut out)?;
        Ok(out)
    }

    pub fn realize(&self) -> Result<OrthonormalBasis> {
        let space = self.space()?;
        let vectors = self.factor_tuples()?.iter().map(|t| tensor_vec(t)).collect::<Result<Vec<_>>>()?;
        OrthonormalBasis::new(space, vectors, BasisKind::Branching)
    }
}

pub fn branching_basis(spec: &SpaceSpec, seed: u64) -> Result<OrthonormalBasis> {
    branching_basis_with(spec, &mut rng_from_seed(seed))
}

pub fn branching_basis_with<R: Rng + ?Sized>(spec: &SpaceSpec, rng: &mut R) -> Result<OrthonormalBasis> {
    if spec.n_factors() < 2 {
        return Err(Error::InvalidArgument("branching bases need at least two factors".into()));
    }
    BranchingSpec::random(spec.dims(), rng)?.realize()
}

pub fn random_product_basis<R: Rng + ?Sized>(spec: &SpaceSpec, rng: &mut R) -> Result<OrthonormalBasis> {
    let factors =
        spec.dims().iter().map(|&d| OrthonormalBasis::random_factor(d, rng)).collect::<Result<Vec<_>>>()?;
    let mut b = product_basis(&factors)?;
    b.kind = BasisKind::Product;
    Ok(b)
}

/// Whether an unentangled basis is a product basis: in every slot the
/// factors take exactly `dₖ` distinct values up to phase.
pub fn is_product_form(b: &OrthonormalBasis, tol: f64) -> Result<bool> {
    let tuples = b.factored()?;
    for (k, &d) in b.space.dims().iter().enumerate() {
        let mut distinct: Vec<&UnitVector> = Vec::new();
        for t in &tuples {
            if !distinct.iter().any(|u| u.phase_distance(&t[k]) <= tol) {
                distinct.push(&t[k]);
                if distinct.len() > d {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Patchwork bases

/// Range projectors `eₖ` with orthonormal bases of each range (unprimed and
/// primed) and of each complement.
#[derive(Debug, Clone)]
pub struct PatchworkConfig {
    pub projectors: Vec<Projector>,
    pub inner: Vec<Vec<UnitVector>>,
    pub inner_primed: Vec<Vec<UnitVector>>,
    pub outer: Vec<Vec<UnitVector>>,
}

/// Factor tuples split the way the basis-exchange argument needs them.
#[derive(Debug, Clone)]
pub struct PatchworkBlocks {
    /// `⊗ₖ ξ′` over all-in-range indices.
    pub primed: Vec<Vec<UnitVector>>,
    /// `⊗ₖ ξ` over the same indices.
    pub unprimed: Vec<Vec<UnitVector>>,
    /// Tuples with at least one complement index; shared by both bases.
    pub shared: Vec<Vec<UnitVector>>,
}

impl PatchworkConfig {
    /// The two-factor layout: `e₁, e₂`; bases `{ξⱼ}`, `{ψᵢ}` of the ranges,
    /// alternatives `{ξ′ⱼ}`, `{ψ′ᵢ}`, and bases of the complements.
    #[allow(clippy::too_many_arguments)]
    pub fn bipartite(
        e1: Projector,
        e2: Projector,
        xi: Vec<UnitVector>,
        psi: Vec<UnitVector>,
        xi_primed: Vec<UnitVector>,
        psi_primed: Vec<UnitVector>,
        xi_perp: Vec<UnitVector>,
        psi_perp: Vec<UnitVector>,
    ) -> Self {
        Self {
            projectors: vec![e1, e2],
            inner: vec![xi, psi],
            inner_primed: vec![xi_primed, psi_primed],
            outer: vec![xi_perp, psi_perp],
        }
    }

    /// Random ranges of the given ranks, with the primed range bases rotated
    /// by an independent Haar unitary inside each range.
    pub fn with_ranks<R: Rng + ?Sized>(spec: &SpaceSpec, ranks: &[usize], rng: &mut R) -> Result<Self> {
        if ranks.len() != spec.n_factors() {
            return Err(Error::DimensionMismatch { expected: spec.n_factors(), found: ranks.len() });
        }
        let mut cfg = Self { projectors: vec![], inner: vec![], inner_primed: vec![], outer: vec![] };
        for (&d, &r) in spec.dims().iter().zip(ranks) {
            if r > d {
                return Err(Error::InvalidArgument(format!("rank {r} exceeds dimension {d}")));
            }
            let u = haar_unitary_with(d, rng);
            let cols: Vec<UnitVector> =
                (0..d).map(|j| UnitVector::from_raw(u.matrix().column(j).into_owned())).collect();
            let inner = cols[..r].to_vec();
            let primed = rotate_within(&inner, rng);
            cfg.projectors.push(Projector::from_orthonormal(d, &inner)?);
            cfg.inner.push(inner);
            cfg.inner_primed.push(primed);
            cfg.outer.push(cols[r..].to_vec());
        }
        Ok(cfg)
    }

    /// Ranks drawn uniformly from `1..dₖ` in each factor.
    pub fn random<R: Rng + ?Sized>(spec: &SpaceSpec, rng: &mut R) -> Result<Self> {
        let ranks: Vec<usize> = spec.dims().iter().map(|&d| rng.random_range(1..d)).collect();
        Self::with_ranks(spec, &ranks, rng)
    }

    pub fn space(&self) -> Result<SpaceSpec> {
        SpaceSpec::new(self.projectors.iter().map(Projector::dim).collect())
    }

    fn check(&self) -> Result<SpaceSpec> {
        let n = self.projectors.len();
        if self.inner.len() != n || self.inner_primed.len() != n || self.outer.len() != n {
            return Err(Error::SubspaceMismatch("one range basis and one complement basis per factor".into()));
        }
        let space = self.space()?;
        for k in 0..n {
            let e = &self.projectors[k];
            let rank = e.rank();
            let d = e.dim();
            let check_family = |family: &[UnitVector], in_range: bool, label: &str| -> Result<()> {
                let expected = if in_range { rank } else { d - rank };
                if family.len() != expected {
                    return Err(Error::SubspaceMismatch(format!(
                        "factor {k}: {label} has {} vectors, expected {expected}",
                        family.len()
                    )));
                }
                for v in family {
                    if v.dim() != d {
                        return Err(Error::DimensionMismatch { expected: d, found: v.dim() });
                    }
                    let image = e.matrix() * v.as_vector();
                    let defect = if in_range { (image - v.as_vector()).norm() } else { image.norm() };
                    if defect > CHECK_TOL {
                        return Err(Error::SubspaceMismatch(format!(
                            "factor {k}: {label} vector leaves its subspace by {defect:e}"
                        )));
                    }
                }
                let overlap = max_overlap(family);
                if overlap > CHECK_TOL {
                    return Err(Error::SubspaceMismatch(format!("factor {k}: {label} is not orthonormal")));
                }
                Ok(())
            };
            check_family(&self.inner[k], true, "range basis")?;
            check_family(&self.inner_primed[k], true, "primed range basis")?;
            check_family(&self.outer[k], false, "complement basis")?;
        }
        Ok(space)
    }

    pub fn blocks(&self) -> Result<PatchworkBlocks> {
        self.check()?;
        let counts: Vec<usize> = self.projectors.iter().map(Projector::dim).collect();
        let total: usize = counts.iter().product();
        let mut blocks = PatchworkBlocks { primed: vec![], unprimed: vec![], shared: vec![] };
        for flat in 0..total {
            let idx = unflatten(flat, &counts);
            let all_inner = idx.iter().enumerate().all(|(k, &i)| i < self.inner[k].len());
            let pick = |k: usize, i: usize, primed: bool| -> UnitVector {
                let r = self.inner[k].len();
                if i < r {
                    if primed { self.inner_primed[k][i].clone() } else { self.inner[k][i].clone() }
                } else {
                    self.outer[k][i - r].clone()
                }
            };
            if all_inner {
                blocks.primed.push(idx.iter().enumerate().map(|(k, &i)| pick(k, i, true)).collect());
                blocks.unprimed.push(idx.iter().enumerate().map(|(k, &i)| pick(k, i, false)).collect());
            } else {
                blocks.shared.push(idx.iter().enumerate().map(|(k, &i)| pick(k, i, false)).collect());
            }
        }
        Ok(blocks)
    }
}

fn rotate_within<R: Rng + ?Sized>(family: &[UnitVector], rng: &mut R) -> Vec<UnitVector> {
    let r = family.len();
    if r == 0 {
        return Vec::new();
    }
    let w = haar_unitary_with(r, rng);
    (0..r)
        .map(|j| {
            let mut v = DVector::<C64>::zeros(family[0].dim());
            for (a, f) in family.iter().enumerate() {
                v += f.as_vector() * w.matrix()[(a, j)];
            }
            UnitVector::from_raw(v)
        })
        .collect()
}

/// Rotate an orthonormal family by a Haar unitary within its span.
pub fn haar_rotate_within<R: Rng + ?Sized>(family: &[UnitVector], rng: &mut R) -> Vec<UnitVector> {
    rotate_within(family, rng)
}

/// The union basis: primed vectors on the all-in-range block, unprimed
/// vectors everywhere else.
pub fn patchwork_basis(cfg: &PatchworkConfig) -> Result<OrthonormalBasis> {
    let space = cfg.check()?;
    let counts: Vec<usize> = cfg.projectors.iter().map(Projector::dim).collect();
    let vectors = (0..space.total_dim())
        .map(|flat| {
            let idx = unflatten(flat, &counts);
            let all_inner = idx.iter().enumerate().all(|(k, &i)| i < cfg.inner[k].len());
            let parts: Vec<UnitVector> = idx
                .iter()
                .enumerate()
                .map(|(k, &i)| {
                    let r = cfg.inner[k].len();
                    match (i < r, all_inner) {
                        (true, true) => cfg.inner_primed[k][i].clone(),
                        (true, false) => cfg.inner[k][i].clone(),
                        (false, _) => cfg.outer[k][i - r].clone(),
                    }
                })
                .collect();
            tensor_vec(&parts)
        })
        .collect::<Result<Vec<_>>>()?;
    OrthonormalBasis::new(space, vectors, BasisKind::Patchwork)
}

pub fn random_patchwork_basis<R: Rng + ?Sized>(spec: &SpaceSpec, rng: &mut R) -> Result<OrthonormalBasis> {
    patchwork_basis(&PatchworkConfig::random(spec, rng)?)
}

// ---------------------------------------------------------------------------
// Greedy search

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchFailed {
    pub attempts: usize,
    pub best_found: usize,
}

#[derive(Debug, Clone)]
pub enum SearchOutcome {
    Found(OrthonormalBasis),
    Failed(SearchFailed),
}

impl SearchOutcome {
    pub fn basis(self) -> Option<OrthonormalBasis> {
        match self {
            SearchOutcome::Found(b) => Some(b),
            SearchOutcome::Failed(_) => None,
        }
    }
}

const SEARCH_INNER_ITERS: usize = 400;
const SEARCH_STALL: usize = 8;

/// Alternates between projecting onto the orthogonal complement of `chosen`
/// and snapping to the nearest simple tensor.
fn fit_candidate<R: Rng + ?Sized>(
    spec: &SpaceSpec,
    chosen: &[UnitVector],
    rng: &mut R,
) -> Option<UnitVector> {
    let mut factors: Vec<UnitVector> = spec.dims().iter().map(|&d| UnitVector::random(d, rng)).collect();
    for _ in 0..SEARCH_INNER_ITERS {
        let x = tensor_vec(&factors).ok()?;
        let ortho = chosen.iter().map(|c| c.inner(&x).norm()).fold(0.0, f64::max);
        if ortho < BUILD_TOL {
            return Some(x);
        }
        let mut y = x.as_vector().clone();
        for c in chosen {
            let a = c.as_vector().dotc(&y);
            y -= c.as_vector() * a;
        }
        if y.norm() < 1e-6 {
            return None;
        }
        let y = y.unscale(y.norm());
        factors = nearest_simple_tensor(&y, spec, Some(factors), 1);
    }
    None
}

/// Best-effort construction of an unentangled basis beyond the branching form.
///
/// `attempts` bounds the number of candidate vectors drawn in total. After a
/// run of consecutive rejections the partial basis is discarded and the
/// search starts over.
pub fn search_unentangled_basis(spec: &SpaceSpec, seed: u64, attempts: usize) -> Result<SearchOutcome> {
    search_unentangled_basis_with(spec, &mut rng_from_seed(seed), attempts)
}

pub fn search_unentangled_basis_with<R: Rng + ?Sized>(
    spec: &SpaceSpec,
    rng: &mut R,
    attempts: usize,
) -> Result<SearchOutcome> {
    if spec.n_factors() < 2 {
        return Err(Error::InvalidArgument("search needs at least two factors".into()));
    }
    let total = spec.total_dim();
    let mut chosen: Vec<UnitVector> = Vec::with_capacity(total);
    let mut best = 0;
    let mut stall = 0;
    for _ in 0..attempts {
        match fit_candidate(spec, &chosen, rng) {
            Some(v) => {
                chosen.push(v);
                stall = 0;
                best = best.max(chosen.len());
                if chosen.len() == total {
                    let b = OrthonormalBasis::new(spec.clone(), chosen, BasisKind::UnentangledSearched)?;
                    return Ok(SearchOutcome::Found(b));
                }
            }
            None => {
                stall += 1;
                if stall >= SEARCH_STALL {
                    chosen.clear();
                    stall = 0;
                }
            }
        }
    }
    Ok(SearchOutcome::Failed(SearchFailed { attempts, best_found: best }))
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub kind: BasisKind,
    pub count: usize,
    pub expected_count: usize,
    /// Largest `|⟨vᵢ, vⱼ⟩|` over `i ≠ j`.
    pub max_overlap: f64,
    /// `‖Σ vᵢvᵢ† − I‖_F`.
    pub completeness_defect: f64,
    /// Per-vector distance to the nearest simple tensor; empty for generic bases.
    pub simplicity_residuals: Vec<f64>,
    pub max_simplicity_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn validate_basis(b: &OrthonormalBasis, tol: f64) -> Result<ValidationReport> {
    let total = b.space.total_dim();
    let mut sum = nalgebra::DMatrix::<C64>::zeros(total, total);
    for v in &b.vectors {
        if v.dim() != total {
            return Err(Error::DimensionMismatch { expected: total, found: v.dim() });
        }
        sum += v.as_vector() * v.as_vector().adjoint();
    }
    let completeness_defect = (sum - nalgebra::DMatrix::<C64>::identity(total, total)).norm();
    let max_overlap = max_overlap(&b.vectors);
    let simplicity_residuals = if b.kind.is_unentangled() {
        b.vectors.iter().map(|v| simplicity_residual(v, &b.space)).collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let max_simplicity_residual = simplicity_residuals.iter().copied().fold(0.0, f64::max);
    let passed = b.vectors.len() == total
        && max_overlap <= tol
        && completeness_defect <= tol
        && max_simplicity_residual <= tol;
    Ok(ValidationReport {
        kind: b.kind,
        count: b.vectors.len(),
        expected_count: total,
        max_overlap,
        completeness_defect,
        simplicity_residuals,
        max_simplicity_residual,
        tolerance: tol,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Factoring;

    fn dims(d: &[usize]) -> SpaceSpec {
        SpaceSpec::new(d.to_vec()).unwrap()
    }

    #[test]
    fn standard_product_basis_is_standard() {
        let e3 = OrthonormalBasis::standard(3).unwrap();
        let b = product_basis(&[e3.clone(), e3]).unwrap();
        assert_eq!(b.kind(), BasisKind::Product);
        for (i, v) in b.vectors().iter().enumerate() {
            assert_eq!(v, &UnitVector::basis(9, i));
        }
    }

    #[test]
    fn haar_product_basis_validates() {
        let sp = SpaceSpec::single(3).unwrap();
        let b1 = OrthonormalBasis::from_unitary(sp.clone(), &crate::linalg::haar_unitary(3, 1), BasisKind::Generic)
            .unwrap();
        let b2 = OrthonormalBasis::from_unitary(sp, &crate::linalg::haar_unitary(3, 2), BasisKind::Generic).unwrap();
        let b = product_basis(&[b1.clone(), b2]).unwrap();
        assert!(validate_basis(&b, 1e-10).unwrap().passed);
        assert_eq!(product_basis(std::slice::from_ref(&b1)).unwrap(), b1);
    }

    #[test]
    fn branching_basis_is_unentangled_but_not_product() {
        let b = branching_basis(&dims(&[3, 3]), 3).unwrap();
        assert_eq!(b.len(), 9);
        let report = validate_basis(&b, 1e-10).unwrap();
        assert!(report.passed, "{report:?}");
        assert!(report.max_overlap < 1e-10 && report.completeness_defect < 1e-10);
        assert!(!is_product_form(&b, 1e-8).unwrap());
    }

    #[test]
    fn branching_three_factors_all_simple() {
        let spec = dims(&[2, 3, 3]);
        let b = branching_basis(&spec, 9).unwrap();
        assert_eq!(b.len(), 18);
        for v in b.vectors() {
            assert!(matches!(simple_tensor_factor(v, &spec, 1e-8).unwrap(), Factoring::Simple(_)));
        }
    }

    #[test]
    fn uniform_branching_spec_is_product_basis() {
        let mut rng = rng_from_seed(21);
        let fb: Vec<OrthonormalBasis> =
            [2, 3].iter().map(|&d| OrthonormalBasis::random_factor(d, &mut rng).unwrap()).collect();
        let via_branch = BranchingSpec::uniform(&fb).unwrap().realize().unwrap();
        let via_product = product_basis(&fb).unwrap();
        assert_eq!(via_branch.vectors(), via_product.vectors());
        assert!(is_product_form(&via_branch, 1e-8).unwrap());
    }

    #[test]
    fn patchwork_identity_projectors_degenerate_to_product() {
        let e3 = OrthonormalBasis::standard(3).unwrap();
        let cfg = PatchworkConfig::bipartite(
            Projector::identity(3),
            Projector::identity(3),
            e3.vectors().to_vec(),
            e3.vectors().to_vec(),
            e3.vectors().to_vec(),
            e3.vectors().to_vec(),
            vec![],
            vec![],
        );
        let b = patchwork_basis(&cfg).unwrap();
        let p = product_basis(&[e3.clone(), e3]).unwrap();
        assert_eq!(b.vectors(), p.vectors());
    }

    #[test]
    fn rotated_patchwork_is_valid_and_not_product() {
        let spec = dims(&[3, 3]);
        let mut rng = rng_from_seed(4);
        let cfg = PatchworkConfig::with_ranks(&spec, &[2, 2], &mut rng).unwrap();
        let b = patchwork_basis(&cfg).unwrap();
        assert!(validate_basis(&b, 1e-10).unwrap().passed);
        assert!(!is_product_form(&b, 1e-8).unwrap());
    }

    #[test]
    fn zero_rank_patchwork_uses_complement_only() {
        let spec = dims(&[3, 3]);
        let mut rng = rng_from_seed(5);
        let cfg = PatchworkConfig::with_ranks(&spec, &[0, 2], &mut rng).unwrap();
        let blocks = cfg.blocks().unwrap();
        assert!(blocks.primed.is_empty());
        assert_eq!(blocks.shared.len(), 9);
        let b = patchwork_basis(&cfg).unwrap();
        assert!(validate_basis(&b, 1e-10).unwrap().passed);
        // every vector's first factor lies in E₁⊥ = everything
        for t in &blocks.shared {
            assert!(cfg.outer[0].iter().any(|u| u.phase_distance(&t[0]) < 1e-12));
        }
    }

    #[test]
    fn patchwork_rejects_wrong_subspace() {
        let e = Projector::from_orthonormal(3, &[UnitVector::basis(3, 0)]).unwrap();
        let bad = PatchworkConfig::bipartite(
            e.clone(),
            e,
            vec![UnitVector::basis(3, 1)],
            vec![UnitVector::basis(3, 0)],
            vec![UnitVector::basis(3, 0)],
            vec![UnitVector::basis(3, 0)],
            vec![UnitVector::basis(3, 1), UnitVector::basis(3, 2)],
            vec![UnitVector::basis(3, 1), UnitVector::basis(3, 2)],
        );
        assert!(matches!(patchwork_basis(&bad), Err(Error::SubspaceMismatch(_))));
    }

    #[test]
    fn patchwork_is_complete_over_many_configurations() {
        let mut rng = rng_from_seed(77);
        for d in [&[2usize, 3][..], &[3, 3], &[2, 2, 3]] {
            let spec = dims(d);
            for _ in 0..10 {
                let b = random_patchwork_basis(&spec, &mut rng).unwrap();
                let r = validate_basis(&b, 1e-8).unwrap();
                assert!(r.completeness_defect < 1e-8);
                assert_eq!(b.len(), spec.total_dim());
            }
        }
    }

    #[test]
    fn search_two_qubits() {
        let spec = dims(&[2, 2]);
        if let SearchOutcome::Found(b) = search_unentangled_basis(&spec, 11, 2000).unwrap() {
            let r = validate_basis(&b, 1e-9).unwrap();
            assert!(r.passed, "{r:?}");
            assert_eq!(b.kind(), BasisKind::UnentangledSearched);
        }
    }

    #[test]
    fn search_with_no_attempts_fails() {
        let out = search_unentangled_basis(&dims(&[2, 2]), 1, 0).unwrap();
        assert!(matches!(out, SearchOutcome::Failed(SearchFailed { attempts: 0, .. })));
    }

    #[test]
    fn search_three_by_three() {
        match search_unentangled_basis(&dims(&[3, 3]), 13, 10_000).unwrap() {
            SearchOutcome::Found(b) => assert!(validate_basis(&b, 1e-9).unwrap().passed),
            SearchOutcome::Failed(f) => eprintln!("search skipped: {f:?}"),
        }
    }

    #[test]
    fn validate_flags_duplicates() {
        let e = OrthonormalBasis::standard(4).unwrap();
        let r = validate_basis(&e, 1e-12).unwrap();
        assert_eq!((r.max_overlap, r.completeness_defect), (0.0, 0.0));
        let mut v = e.vectors().to_vec();
        v[1] = v[0].clone();
        let dup = OrthonormalBasis::new_unchecked(e.space().clone(), v, BasisKind::Generic);
        let r = validate_basis(&dup, 1e-10).unwrap();
        assert!((r.max_overlap - 1.0).abs() < 1e-15);
        assert!(!r.passed);
    }

    #[test]
    fn basis_json_round_trip_preserves_kind() {
        let b = branching_basis(&dims(&[2, 2]), 8).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        assert!(s.starts_with(r#"{"kind":"branching","space":[2,2],"vectors":[{"dim":4"#));
        let back: OrthonormalBasis = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
    }
}
