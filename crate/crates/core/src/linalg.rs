//! Dense complex linear algebra on finite-dimensional tensor-product spaces.
//!
//! Everything here uses one fixed row-major Kronecker convention: the
//! component of `x₁ ⊗ ⋯ ⊗ xₙ` at multi-index `(i₁,…,iₙ)` lives at flat index
//! `((i₁·d₂ + i₂)·d₃ + ⋯)·dₙ + iₙ`. Operators follow the same convention on
//! both row and column indices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest total dimension any constructor will accept.
pub const MAX_TOTAL_DIM: usize = 1_000_000;
/// Tolerance applied when a value is constructed.
pub const BUILD_TOL: f64 = 1e-10;
/// Tolerance applied on downstream checks.
pub const CHECK_TOL: f64 = 1e-8;

pub(crate) fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Thin SVD `m = u · diag(s) · v_t`, singular values nonincreasing.
///
/// nalgebra's complex SVD mis-factors some rank-deficient inputs, which are
/// the normal case when peeling simple tensors, so this goes through faer.
#[derive(Debug, Clone)]
pub(crate) struct Svd {
    pub u: DMatrix<C64>,
    pub s: DVector<f64>,
    pub v_t: DMatrix<C64>,
}

impl Svd {
    /// `V · diag(1/s) · U† · b` over singular values above `eps`.
    pub fn solve(&self, b: &DVector<C64>, eps: f64) -> DVector<C64> {
        let mut y = self.u.adjoint() * b;
        for (k, yk) in y.iter_mut().enumerate() {
            *yk = if self.s[k] > eps { *yk / self.s[k] } else { C64::new(0.0, 0.0) };
        }
        self.v_t.adjoint() * y
    }

    pub fn pseudo_inverse(&self, eps: f64) -> DMatrix<C64> {
        let mut ut = self.u.adjoint();
        for (k, mut row) in ut.row_iter_mut().enumerate() {
            let inv = if self.s[k] > eps { 1.0 / self.s[k] } else { 0.0 };
            row *= C64::new(inv, 0.0);
        }
        self.v_t.adjoint() * ut
    }
}

fn to_faer(m: &DMatrix<C64>) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub(crate) fn svd(m: &DMatrix<C64>) -> Result<Svd> {
    let f = to_faer(m).thin_svd().map_err(|e| Error::SolverFailure(format!("SVD: {e:?}")))?;
    let (u, v, s) = (f.U(), f.V(), f.S().column_vector());
    let k = s.nrows();
    Ok(Svd {
        u: DMatrix::from_fn(m.nrows(), k, |i, j| u[(i, j)]),
        s: DVector::from_fn(k, |i, _| s[i].re),
        v_t: DMatrix::from_fn(k, m.ncols(), |i, j| v[(j, i)].conj()),
    })
}

pub(crate) fn singular_values(m: &DMatrix<C64>) -> Result<DVector<f64>> {
    let s = to_faer(m).singular_values().map_err(|e| Error::SolverFailure(format!("SVD: {e:?}")))?;
    Ok(DVector::from_vec(s))
}

pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn check_total(dims: &[usize]) -> Result<usize> {
    dims.iter().try_fold(1usize, |acc, &d| {
        acc.checked_mul(d)
            .filter(|&t| t <= MAX_TOTAL_DIM)
            .ok_or(Error::DimensionOverflow {
                requested: dims.iter().fold(1usize, |a, &d| a.saturating_mul(d)),
                max: MAX_TOTAL_DIM,
            })
    })
}

/// Row-major multi-index of a flat index.
pub(crate) fn unflatten(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = flat % dims[k];
        flat /= dims[k];
    }
    out
}

// ---------------------------------------------------------------------------
// SpaceSpec

/// The factor dimensions `(d₁,…,dₙ)` of a tensor-product space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SpaceSpec {
    factor_dims: Vec<usize>,
}

impl SpaceSpec {
    pub fn new(factor_dims: Vec<usize>) -> Result<Self> {
        if factor_dims.is_empty() {
            return Err(Error::InvalidSpace("at least one factor is required".into()));
        }
        if let Some(d) = factor_dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidSpace(format!("factor dimension {d} is below 2")));
        }
        check_total(&factor_dims)?;
        Ok(Self { factor_dims })
    }

    pub fn single(d: usize) -> Result<Self> {
        Self::new(vec![d])
    }

    /// Concatenates the factors of several spaces.
    pub fn concat(spaces: &[SpaceSpec]) -> Result<Self> {
        Self::new(spaces.iter().flat_map(|s| s.factor_dims.iter().copied()).collect())
    }

    pub fn dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn n_factors(&self) -> usize {
        self.factor_dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.factor_dims.iter().product()
    }

    pub fn contains_dim2(&self) -> bool {
        self.factor_dims.contains(&2)
    }
}

impl TryFrom<Vec<usize>> for SpaceSpec {
    type Error = Error;
    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Self::new(dims)
    }
}

impl From<SpaceSpec> for Vec<usize> {
    fn from(s: SpaceSpec) -> Self {
        s.factor_dims
    }
}

impl std::fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.factor_dims.iter().map(|d| d.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

// ---------------------------------------------------------------------------
// UnitVector

#[derive(Debug, Serialize, Deserialize)]
struct VectorJson {
    dim: usize,
    components: Vec<[f64; 2]>,
}

/// A complex vector of Euclidean norm 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VectorJson", into = "VectorJson")]
pub struct UnitVector(DVector<C64>);

impl UnitVector {
    pub fn new(v: DVector<C64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::InvalidArgument("empty vector".into()));
        }
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm = v.norm();
        if (norm - 1.0).abs() > BUILD_TOL {
            return Err(Error::NotUnitVector { norm });
        }
        Ok(Self(v))
    }

    pub fn from_components(c: Vec<C64>) -> Result<Self> {
        Self::new(DVector::from_vec(c))
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalize(v: DVector<C64>) -> Result<Self> {
        let norm = v.norm();
        if !norm.is_finite() {
            return Err(Error::NonFinite);
        }
        if norm < 1e-300 {
            return Err(Error::InvalidArgument("cannot normalize the zero vector".into()));
        }
        Ok(Self(v.unscale(norm)))
    }

    /// Standard basis vector `e_i` of `ℂᵈ`.
    pub fn basis(d: usize, i: usize) -> Self {
        let mut v = DVector::zeros(d);
        v[i] = C64::new(1.0, 0.0);
        Self(v)
    }

    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        loop {
            let v = DVector::from_fn(d, |_, _| complex_gaussian(rng));
            if let Ok(u) = Self::normalize(v) {
                return u;
            }
        }
    }

    pub(crate) fn from_raw(v: DVector<C64>) -> Self {
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<C64> {
        self.0
    }

    /// `⟨self, other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &UnitVector) -> C64 {
        self.0.dotc(&other.0)
    }

    pub fn scale_phase(&self, phase: C64) -> Self {
        Self(self.0.map(|z| z * phase))
    }

    /// Distance to `other` after removing the best global phase.
    pub fn phase_distance(&self, other: &UnitVector) -> f64 {
        let overlap = self.inner(other);
        let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
        (other.0.clone() - self.0.map(|z| z * phase)).norm()
    }
}

impl TryFrom<VectorJson> for UnitVector {
    type Error = Error;
    fn try_from(j: VectorJson) -> Result<Self> {
        if j.components.len() != j.dim {
            return Err(Error::DimensionMismatch { expected: j.dim, found: j.components.len() });
        }
        Self::from_components(j.components.iter().map(|[re, im]| C64::new(*re, *im)).collect())
    }
}

impl From<UnitVector> for VectorJson {
    fn from(v: UnitVector) -> Self {
        VectorJson { dim: v.dim(), components: v.0.iter().map(|z| [z.re, z.im]).collect() }
    }
}

// ---------------------------------------------------------------------------
// Operator

#[derive(Debug, Serialize, Deserialize)]
struct OperatorJson {
    dim: usize,
    entries: Vec<Vec<[f64; 2]>>,
}

/// A square complex matrix with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorJson", into = "OperatorJson")]
pub struct Operator(DMatrix<C64>);

impl Operator {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidArgument("empty operator".into()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let d = rows.len();
        for r in rows {
            if r.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: r.len() });
            }
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn identity(d: usize) -> Self {
        Self(DMatrix::identity(d, d))
    }

    pub fn zeros(d: usize) -> Self {
        Self(DMatrix::zeros(d, d))
    }

    pub fn diag(values: &[f64]) -> Self {
        let d = values.len();
        Self(DMatrix::from_fn(d, d, |i, j| if i == j { C64::new(values[i], 0.0) } else { C64::new(0.0, 0.0) }))
    }

    pub(crate) fn from_raw(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    pub fn add(&self, other: &Operator) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Operator) -> Self {
        Self(&self.0 - &other.0)
    }

    pub fn mul(&self, other: &Operator) -> Self {
        Self(&self.0 * &other.0)
    }

    /// `‖x − x†‖_F`.
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.0 - self.0.adjoint()).norm()
    }

    /// `½(x + x†)`.
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()).scale(0.5))
    }

    /// `⟨v, x v⟩`.
    pub fn expectation(&self, v: &UnitVector) -> C64 {
        v.as_vector().dotc(&(&self.0 * v.as_vector()))
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        singular_values(&self.0).map_or(f64::NAN, |s| s.max())
    }

    /// Whether the operator is Hermitian with spectrum `≥ −tol` (both within `tol`).
    pub fn is_psd(&self, tol: f64) -> bool {
        match hermitian_eig(self) {
            Ok(eig) => self.hermiticity_defect() <= tol && eig.values.last().is_none_or(|&l| l >= -tol),
            Err(_) => false,
        }
    }
}

impl TryFrom<OperatorJson> for Operator {
    type Error = Error;
    fn try_from(j: OperatorJson) -> Result<Self> {
        if j.entries.len() != j.dim {
            return Err(Error::DimensionMismatch { expected: j.dim, found: j.entries.len() });
        }
        let rows: Vec<Vec<C64>> = j
            .entries
            .iter()
            .map(|r| r.iter().map(|[re, im]| C64::new(*re, *im)).collect())
            .collect();
        Self::from_rows(&rows)
    }
}

impl From<Operator> for OperatorJson {
    fn from(op: Operator) -> Self {
        let d = op.dim();
        OperatorJson {
            dim: d,
            entries: (0..d).map(|i| (0..d).map(|j| [op.0[(i, j)].re, op.0[(i, j)].im]).collect()).collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Projector

/// An orthogonal projection: `P² = P = P†`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Operator", into = "Operator")]
pub struct Projector(Operator);

impl Projector {
    pub fn new(op: Operator) -> Result<Self> {
        let m = op.matrix();
        let idempotence = (m * m - m).norm();
        let hermiticity = op.hermiticity_defect();
        if idempotence > BUILD_TOL || hermiticity > BUILD_TOL {
            return Err(Error::NotProjector { idempotence, hermiticity });
        }
        Ok(Self(op))
    }

    /// Projector onto the span of an orthonormal family of vectors of dimension `d`.
    pub fn from_orthonormal(d: usize, vectors: &[UnitVector]) -> Result<Self> {
        let mut m = DMatrix::zeros(d, d);
        for (a, v) in vectors.iter().enumerate() {
            if v.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: v.dim() });
            }
            for w in &vectors[..a] {
                let overlap = w.inner(v).norm();
                if overlap > BUILD_TOL {
                    return Err(Error::NotOrthonormal(overlap));
                }
            }
            m += v.as_vector() * v.as_vector().adjoint();
        }
        Ok(Self(Operator(m)))
    }

    pub fn zero(d: usize) -> Self {
        Self(Operator::zeros(d))
    }

    pub fn identity(d: usize) -> Self {
        Self(Operator::identity(d))
    }

    pub fn op(&self) -> &Operator {
        &self.0
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        self.0.matrix()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn rank(&self) -> usize {
        self.0.trace().re.round().max(0.0) as usize
    }

    /// `1 − P`.
    pub fn complement(&self) -> Self {
        Self(Operator::identity(self.dim()).sub(&self.0))
    }

    /// An orthonormal basis of the range, from the spectral decomposition.
    pub fn range_basis(&self) -> Vec<UnitVector> {
        if self.rank() == 0 {
            return Vec::new();
        }
        let eig = hermitian_eig(&self.0).expect("projectors are Hermitian");
        eig.values
            .iter()
            .zip(eig.vectors)
            .filter(|(l, _)| **l > 0.5)
            .map(|(_, v)| v)
            .collect()
    }
}

impl TryFrom<Operator> for Projector {
    type Error = Error;
    fn try_from(op: Operator) -> Result<Self> {
        Self::new(op)
    }
}

impl From<Projector> for Operator {
    fn from(p: Projector) -> Self {
        p.0
    }
}

// ---------------------------------------------------------------------------
// Tensor products

/// Kronecker product of unit vectors.
pub fn tensor_vec(factors: &[UnitVector]) -> Result<UnitVector> {
    if factors.is_empty() {
        return Err(Error::InvalidArgument("tensor product of zero factors".into()));
    }
    let dims: Vec<usize> = factors.iter().map(UnitVector::dim).collect();
    let total = check_total(&dims)?;
    let mut out: Vec<C64> = Vec::with_capacity(total);
    out.push(C64::new(1.0, 0.0));
    for f in factors {
        out = out.iter().flat_map(|&a| f.0.iter().map(move |&b| a * b)).collect();
    }
    Ok(UnitVector(DVector::from_vec(out)))
}

/// Kronecker product of operators.
pub fn kron_op(factors: &[Operator]) -> Result<Operator> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("tensor product of zero factors".into()))?;
    let dims: Vec<usize> = factors.iter().map(Operator::dim).collect();
    check_total(&dims)?;
    let m = rest.iter().fold(first.0.clone(), |acc, x| acc.kronecker(&x.0));
    Ok(Operator(m))
}

/// `v v†`.
pub fn rank1_projector(v: &UnitVector) -> Projector {
    Projector(Operator(v.as_vector() * v.as_vector().adjoint()))
}

// ---------------------------------------------------------------------------
// Spectral decomposition

#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Descending.
    pub values: Vec<f64>,
    pub vectors: Vec<UnitVector>,
}

impl HermitianEigen {
    /// `Σ λᵢ vᵢvᵢ†`.
    pub fn recompose(&self) -> Operator {
        let d = self.vectors.first().map_or(0, UnitVector::dim);
        let mut m = DMatrix::zeros(d, d);
        for (l, v) in self.values.iter().zip(&self.vectors) {
            m += (v.as_vector() * v.as_vector().adjoint()).scale(*l);
        }
        Operator(m)
    }
}

pub fn hermitian_eig(x: &Operator) -> Result<HermitianEigen> {
    let defect = x.hermiticity_defect();
    if defect > CHECK_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let eig = x.hermitian_part().0.symmetric_eigen();
    let mut order: Vec<usize> = (0..x.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| UnitVector::normalize(eig.eigenvectors.column(i).into_owned()))
        .collect::<Result<Vec<_>>>()?;
    Ok(HermitianEigen { values, vectors })
}

// ---------------------------------------------------------------------------
// Randomness

/// Haar-distributed `d×d` unitary: QR of a complex Gaussian matrix with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn haar_unitary(d: usize, seed: u64) -> Operator {
    haar_unitary_with(d, &mut rng_from_seed(seed))
}

pub fn haar_unitary_with<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Operator {
    let g = DMatrix::from_fn(d, d, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    Operator(q)
}

/// Random positive semidefinite `G G† / d` with `G` complex Gaussian.
pub fn random_psd(d: usize, seed: u64) -> Operator {
    random_psd_with(d, &mut rng_from_seed(seed))
}

pub fn random_psd_with<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Operator {
    let g = DMatrix::from_fn(d, d, |_, _| complex_gaussian(rng));
    let m = (&g * g.adjoint()).unscale(d as f64);
    Operator(m).hermitian_part()
}

pub fn random_hermitian(d: usize, seed: u64) -> Operator {
    let mut rng = rng_from_seed(seed);
    let g = DMatrix::from_fn(d, d, |_, _| complex_gaussian(&mut rng));
    Operator(g).hermitian_part()
}

// ---------------------------------------------------------------------------
// Simple tensors

/// Outcome of trying to write a vector as `x₁ ⊗ ⋯ ⊗ xₙ`.
#[derive(Debug, Clone)]
pub enum Factoring {
    Simple(Vec<UnitVector>),
    /// The matricization after `cut` factors has this second singular value.
    NotSimple { cut: usize, second_singular_value: f64 },
}

impl Factoring {
    pub fn factors(self) -> Option<Vec<UnitVector>> {
        match self {
            Factoring::Simple(f) => Some(f),
            Factoring::NotSimple { .. } => None,
        }
    }
}

struct Peel {
    factors: Vec<UnitVector>,
    worst_second: f64,
    worst_cut: usize,
}

fn peel(v: &DVector<C64>, dims: &[usize]) -> Result<Peel> {
    let mut factors = Vec::with_capacity(dims.len());
    let mut rest = v.clone();
    let mut worst_second = 0.0f64;
    let mut worst_cut = 0;
    for (k, &d) in dims.iter().enumerate().take(dims.len() - 1) {
        let cols = rest.len() / d;
        let m = DMatrix::from_fn(d, cols, |i, r| rest[i * cols + r]);
        let svd = svd(&m)?;
        let s = &svd.s;
        let second = if s.len() > 1 { s[1] } else { 0.0 };
        if second > worst_second {
            worst_second = second;
            worst_cut = k + 1;
        }
        let u = svd.u.column(0).into_owned();
        let v_t = svd.v_t.row(0).transpose();
        factors.push(UnitVector::normalize(u).unwrap_or_else(|_| UnitVector::basis(d, 0)));
        // M ≈ s₀ u₀ v₀†, whose rows read v₀† = (v_t row 0).
        rest = v_t.scale(s[0]);
    }
    let last = *dims.last().expect("nonempty dims");
    factors.push(UnitVector::normalize(rest).unwrap_or_else(|_| UnitVector::basis(last, 0)));
    Ok(Peel { factors, worst_second, worst_cut })
}

/// Aligns the global phase of `factors` so that their tensor product matches `v`.
fn align_phase(factors: &mut [UnitVector], v: &DVector<C64>) {
    let t = tensor_vec(factors).expect("dimensions already validated");
    let overlap = t.as_vector().dotc(v);
    if overlap.norm() > 0.0 {
        let phase = overlap / overlap.norm();
        factors[0] = factors[0].scale_phase(phase);
    }
}

/// Factor `v` as a simple tensor over `spec` by iterative peeling.
pub fn simple_tensor_factor(v: &UnitVector, spec: &SpaceSpec, tol: f64) -> Result<Factoring> {
    if v.dim() != spec.total_dim() {
        return Err(Error::DimensionMismatch { expected: spec.total_dim(), found: v.dim() });
    }
    let mut p = peel(&v.0, spec.dims())?;
    if p.worst_second > tol {
        return Ok(Factoring::NotSimple { cut: p.worst_cut, second_singular_value: p.worst_second });
    }
    align_phase(&mut p.factors, &v.0);
    Ok(Factoring::Simple(p.factors))
}

/// Largest second singular value met while peeling `v` (0 for a simple tensor).
pub fn entanglement_indicator(v: &UnitVector, spec: &SpaceSpec) -> Result<f64> {
    if v.dim() != spec.total_dim() {
        return Err(Error::DimensionMismatch { expected: spec.total_dim(), found: v.dim() });
    }
    Ok(peel(&v.0, spec.dims())?.worst_second)
}

/// Distance from `v` to the simple tensor found by peeling followed by
/// alternating refinement.
pub fn simplicity_residual(v: &UnitVector, spec: &SpaceSpec) -> Result<f64> {
    if v.dim() != spec.total_dim() {
        return Err(Error::DimensionMismatch { expected: spec.total_dim(), found: v.dim() });
    }
    let factors = nearest_simple_tensor(&v.0, spec, None, 4);
    let t = tensor_vec(&factors)?;
    Ok(t.phase_distance(v))
}

/// Best rank-one approximation of `target` by alternating least squares.
/// Returns unit factors; the optimal coefficient is `⟨⊗xₖ, target⟩`.
pub fn nearest_simple_tensor(
    target: &DVector<C64>,
    spec: &SpaceSpec,
    init: Option<Vec<UnitVector>>,
    sweeps: usize,
) -> Vec<UnitVector> {
    let dims = spec.dims();
    let mut factors = init.unwrap_or_else(|| match peel(target, dims) {
        Ok(p) => p.factors,
        // alternating least squares converges from any start
        Err(_) => dims.iter().map(|&d| UnitVector::basis(d, 0)).collect(),
    });
    if dims.len() == 1 {
        return vec![UnitVector::normalize(target.clone()).unwrap_or_else(|_| UnitVector::basis(dims[0], 0))];
    }
    let total = target.len();
    let indices: Vec<Vec<usize>> = (0..total).map(|f| unflatten(f, dims)).collect();
    for _ in 0..sweeps {
        for k in 0..dims.len() {
            let mut acc = DVector::<C64>::zeros(dims[k]);
            for (flat, idx) in indices.iter().enumerate() {
                let mut w = target[flat];
                for (l, &i) in idx.iter().enumerate() {
                    if l != k {
                        w *= factors[l].0[i].conj();
                    }
                }
                acc[idx[k]] += w;
            }
            if let Ok(u) = UnitVector::normalize(acc) {
                factors[k] = u;
            }
        }
    }
    factors
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn tensor_vec_index_arithmetic() {
        let v = tensor_vec(&[UnitVector::basis(2, 0), UnitVector::basis(3, 2)]).unwrap();
        assert_eq!(v, UnitVector::basis(6, 2));
        let v = tensor_vec(&[UnitVector::basis(3, 0), UnitVector::basis(3, 0)]).unwrap();
        assert_eq!(v, UnitVector::basis(9, 0));
        let plus = UnitVector::from_components(vec![c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]).unwrap();
        let v = tensor_vec(&[plus, UnitVector::basis(2, 0)]).unwrap();
        let expect = [FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2, 0.0];
        for (z, e) in v.as_vector().iter().zip(expect) {
            assert_abs_diff_eq!(z.re, e, epsilon = 1e-15);
            assert_abs_diff_eq!(z.im, 0.0);
        }
    }

    #[test]
    fn tensor_vec_component_is_product_of_factor_components() {
        let mut rng = rng_from_seed(3);
        let fs: Vec<UnitVector> = [2, 3, 2].iter().map(|&d| UnitVector::random(d, &mut rng)).collect();
        let v = tensor_vec(&fs).unwrap();
        assert_abs_diff_eq!(v.as_vector().norm(), 1.0, epsilon = 1e-12);
        for flat in 0..12 {
            let idx = unflatten(flat, &[2, 3, 2]);
            let expect = fs[0].as_vector()[idx[0]] * fs[1].as_vector()[idx[1]] * fs[2].as_vector()[idx[2]];
            assert!((v.as_vector()[flat] - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn overflow_is_rejected() {
        let big = UnitVector::basis(1001, 0);
        let err = tensor_vec(&[big.clone(), big]).unwrap_err();
        assert!(matches!(err, Error::DimensionOverflow { .. }));
        assert!(SpaceSpec::new(vec![1000, 1001]).is_err());
        assert!(SpaceSpec::new(vec![0, 3]).is_err());
        assert!(SpaceSpec::new(vec![]).is_err());
    }

    #[test]
    fn kron_op_examples() {
        let k = kron_op(&[Operator::diag(&[1.0, 2.0]), Operator::identity(2)]).unwrap();
        assert_abs_diff_eq!(k.trace().re, 6.0);
        let k = kron_op(&[Operator::identity(3), Operator::identity(3)]).unwrap();
        assert_eq!(k, Operator::identity(9));
        let p = rank1_projector(&UnitVector::basis(2, 0));
        let k = kron_op(&[p.op().clone(), p.op().clone()]).unwrap();
        assert_eq!(k, Operator::diag(&[1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn rank1_projector_examples() {
        let p = rank1_projector(&UnitVector::basis(2, 0));
        assert_eq!(p.op(), &Operator::diag(&[1.0, 0.0]));
        let s = FRAC_1_SQRT_2;
        let p = rank1_projector(&UnitVector::from_components(vec![c(s, 0.0), c(s, 0.0)]).unwrap());
        for z in p.matrix().iter() {
            assert_abs_diff_eq!(z.re, 0.5, epsilon = 1e-15);
        }
        let p = rank1_projector(&UnitVector::from_components(vec![c(s, 0.0), c(0.0, s)]).unwrap());
        let m = p.matrix();
        assert!((m[(0, 1)] - c(0.0, -0.5)).norm() < 1e-15);
        assert!((m[(1, 0)] - c(0.0, 0.5)).norm() < 1e-15);
        assert!((p.op().trace() - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn hermitian_eig_examples() {
        let e = hermitian_eig(&Operator::diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);

        let x = Operator::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]]).unwrap();
        let e = hermitian_eig(&x).unwrap();
        assert_abs_diff_eq!(e.values[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], -1.0, epsilon = 1e-14);
        let plus = UnitVector::from_components(vec![c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]).unwrap();
        let minus = UnitVector::from_components(vec![c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)]).unwrap();
        assert!(e.vectors[0].phase_distance(&plus) < 1e-12);
        assert!(e.vectors[1].phase_distance(&minus) < 1e-12);

        let h = random_hermitian(5, 7);
        let e = hermitian_eig(&h).unwrap();
        assert!(e.recompose().sub(&h).frobenius_norm() < 1e-10);
        for a in 0..5 {
            for b in 0..5 {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((e.vectors[a].inner(&e.vectors[b]).norm() - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn hermitian_eig_rejects_non_hermitian() {
        let x = Operator::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]]).unwrap();
        assert!(matches!(hermitian_eig(&x), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn haar_unitary_contract() {
        let u = haar_unitary(1, 99);
        assert_abs_diff_eq!(u.matrix()[(0, 0)].norm(), 1.0, epsilon = 1e-14);
        let u = haar_unitary(4, 42);
        let gram = u.adjoint().mul(&u);
        assert!(gram.sub(&Operator::identity(4)).frobenius_norm() < 1e-10);
        assert_eq!(haar_unitary(4, 42), haar_unitary(4, 42));
        assert_ne!(haar_unitary(4, 42), haar_unitary(4, 43));
    }

    #[test]
    fn simple_tensor_factor_round_trip() {
        let spec = SpaceSpec::new(vec![3, 3]).unwrap();
        let v = tensor_vec(&[UnitVector::basis(3, 1), UnitVector::basis(3, 2)]).unwrap();
        let f = simple_tensor_factor(&v, &spec, 1e-8).unwrap().factors().unwrap();
        assert!(f[0].phase_distance(&UnitVector::basis(3, 1)) < 1e-12);
        assert!(f[1].phase_distance(&UnitVector::basis(3, 2)) < 1e-12);
        assert!(tensor_vec(&f).unwrap().phase_distance(&v) < 1e-12);
    }

    #[test]
    fn bell_vector_is_not_simple() {
        let spec = SpaceSpec::new(vec![2, 2]).unwrap();
        let s = FRAC_1_SQRT_2;
        let bell = UnitVector::from_components(vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]).unwrap();
        match simple_tensor_factor(&bell, &spec, 1e-8).unwrap() {
            Factoring::NotSimple { second_singular_value, cut } => {
                assert_abs_diff_eq!(second_singular_value, s, epsilon = 1e-12);
                assert_eq!(cut, 1);
            }
            Factoring::Simple(_) => panic!("Bell vector factored"),
        }
    }

    #[test]
    fn three_factor_recovery_up_to_phase() {
        let spec = SpaceSpec::new(vec![2, 3, 3]).unwrap();
        let mut rng = rng_from_seed(5);
        let fs: Vec<UnitVector> = spec.dims().iter().map(|&d| UnitVector::random(d, &mut rng)).collect();
        let v = tensor_vec(&fs).unwrap();
        let got = simple_tensor_factor(&v, &spec, 1e-8).unwrap().factors().unwrap();
        for (a, b) in got.iter().zip(&fs) {
            assert!(a.phase_distance(b) < 1e-9);
        }
        // the aligned product matches without any phase freedom
        let t = tensor_vec(&got).unwrap();
        assert!((t.as_vector() - v.as_vector()).norm() < 1e-9);
    }

    #[test]
    fn factoring_survives_rank_deficient_svd() {
        // a unit rank-one 2x6 matricization that nalgebra's complex SVD mis-factors
        let seed = 8003211327135707196u64;
        let nu: Vec<UnitVector> = [2usize, 2, 3]
            .iter()
            .enumerate()
            .map(|(k, &d)| UnitVector::normalize(haar_unitary(d, seed ^ (k as u64) << 32).0.column(0).into_owned()).unwrap())
            .collect();
        let v = tensor_vec(&nu).unwrap();
        let spec = SpaceSpec::new(vec![2, 2, 3]).unwrap();
        let fs = simple_tensor_factor(&v, &spec, 1e-10).unwrap().factors().unwrap();
        assert!(tensor_vec(&fs).unwrap().phase_distance(&v) < 1e-12);
        let s = svd(&DMatrix::from_fn(2, 6, |i, r| v.0[i * 6 + r])).unwrap();
        assert!((s.s[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nearest_simple_tensor_improves_on_peeling() {
        let spec = SpaceSpec::new(vec![2, 2, 2]).unwrap();
        let mut rng = rng_from_seed(17);
        let v = UnitVector::random(8, &mut rng);
        let peeled = peel(v.as_vector(), spec.dims()).unwrap().factors;
        let overlap0 = tensor_vec(&peeled).unwrap().inner(&v).norm();
        let refined = nearest_simple_tensor(v.as_vector(), &spec, Some(peeled), 20);
        let overlap1 = tensor_vec(&refined).unwrap().inner(&v).norm();
        assert!(overlap1 + 1e-12 >= overlap0);
    }

    #[test]
    fn json_formats() {
        let v = UnitVector::from_components(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"{"dim":2,"components":[[0.6,0.0],[0.0,0.8]]}"#);
        assert_eq!(serde_json::from_str::<UnitVector>(&s).unwrap(), v);
        let op = Operator::diag(&[1.0, 2.0]);
        let s = serde_json::to_string(&op).unwrap();
        assert_eq!(s, r#"{"dim":2,"entries":[[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[2.0,0.0]]]}"#);
        assert!(serde_json::from_str::<UnitVector>(r#"{"dim":2,"components":[[1.0,0.0],[1.0,0.0]]}"#).is_err());
        assert!(serde_json::from_str::<SpaceSpec>("[0,3]").is_err());
    }
}
