//! Recovering the self-adjoint operator `T` with
//! `f(ν₁⊗⋯⊗νₙ) = Tr((p₁⊗⋯⊗pₙ)T)` from frame-function values.
//!
//! The unknown is `vec(T)` in the realigned order
//! `((i₁,j₁),…,(iₙ,jₙ)) ↦ T[(i₁…iₙ),(j₁…jₙ)]`. In that order a product
//! sample contributes the row `a₁ ⊗ ⋯ ⊗ aₙ` with `aₖ[(i,j)] = conj(νₖ[i])·νₖ[j]`,
//! so the design built from per-factor spanning families is the Kronecker
//! product of small square matrices and can be inverted factor by factor.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{eval_frame, FrameFunction, FrameSample, FrameSamples};
use crate::linalg::{
    rank1_projector, rng_from_seed, singular_values, svd, tensor_vec, unflatten, Operator, Projector, SpaceSpec, UnitVector,
    Svd, C64, MAX_TOTAL_DIM,
};

/// Singular values below `RANK_RTOL · σ_max` count as zero.
pub const RANK_RTOL: f64 = 1e-10;
/// Largest number of unknowns accepted by the dense least-squares path.
pub const MAX_DENSE_UNKNOWNS: usize = 6_561;

/// `d²` rank-one projectors spanning the `d×d` matrices.
#[derive(Debug, Clone)]
pub struct SpanningFamily {
    dim: usize,
    vectors: Vec<UnitVector>,
    projectors: Vec<Projector>,
}

impl SpanningFamily {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vectors(&self) -> &[UnitVector] {
        &self.vectors
    }

    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }

    /// Rows `vec(P)ᵀ` for each member.
    pub fn vectorized(&self) -> DMatrix<C64> {
        let d = self.dim;
        DMatrix::from_fn(d * d, d * d, |r, c| self.projectors[r].matrix()[(c / d, c % d)])
    }

    pub fn numerical_rank(&self) -> usize {
        singular_values(&self.vectorized()).map_or(0, |s| numerical_rank(&s))
    }
}

/// `P(eᵢ)` for every `i`, then `P((eᵢ+eⱼ)/√2)` and `P((eᵢ+i·eⱼ)/√2)` for `i<j`.
pub fn build_spanning_family(d: usize) -> Result<SpanningFamily> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("spanning family needs d >= 2, got {d}")));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut vectors: Vec<UnitVector> = (0..d).map(|i| UnitVector::basis(d, i)).collect();
    for i in 0..d {
        for j in i + 1..d {
            for phase in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
                let mut v = DVector::zeros(d);
                v[i] = C64::new(s, 0.0);
                v[j] = phase * s;
                vectors.push(UnitVector::new(v)?);
            }
        }
    }
    let projectors = vectors.iter().map(rank1_projector).collect();
    Ok(SpanningFamily { dim: d, vectors, projectors })
}

fn numerical_rank(sv: &DVector<f64>) -> usize {
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_RTOL * max).count()
}

/// `conj(ν[i])·ν[j]` at column `i·d + j`.
fn design_row(v: &UnitVector) -> impl Iterator<Item = C64> + '_ {
    let x = v.as_vector();
    let d = x.len();
    (0..d * d).map(move |c| x[c / d].conj() * x[c % d])
}

/// Row of the full design for a product sample, as a Kronecker product.
fn product_row(factors: &[UnitVector]) -> Vec<C64> {
    factors.iter().fold(vec![C64::new(1.0, 0.0)], |acc, v| {
        let a: Vec<C64> = design_row(v).collect();
        acc.iter().flat_map(|&x| a.iter().map(move |&y| x * y)).collect()
    })
}

/// Realigned `vec(T)` back to the operator.
fn unrealign(x: &[C64], dims: &[usize]) -> Operator {
    let total: usize = dims.iter().product();
    let pair_dims: Vec<usize> = dims.iter().map(|d| d * d).collect();
    let mut m = DMatrix::zeros(total, total);
    for (flat, &value) in x.iter().enumerate() {
        let pairs = unflatten(flat, &pair_dims);
        let (mut row, mut col) = (0, 0);
        for (&p, &d) in pairs.iter().zip(dims) {
            row = row * d + p / d;
            col = col * d + p % d;
        }
        m[(row, col)] = value;
    }
    Operator::from_raw(m)
}

#[derive(Debug, Clone)]
struct FactorDesign {
    matrix: DMatrix<C64>,
    pinv: DMatrix<C64>,
    singular_values: DVector<f64>,
}

impl FactorDesign {
    fn new(family: &SpanningFamily) -> Result<Self> {
        let rows: Vec<C64> = family.vectors.iter().flat_map(design_row).collect();
        let n = family.dim * family.dim;
        let matrix = DMatrix::from_row_slice(n, n, &rows);
        let svd = svd(&matrix)?;
        let pinv = svd.pseudo_inverse(RANK_RTOL * svd.s.max());
        Ok(Self { matrix, pinv, singular_values: svd.s })
    }
}

#[derive(Debug, Clone)]
enum Layout {
    /// Cartesian product of per-factor spanning families.
    Grid(Vec<FactorDesign>),
    /// Arbitrary sample tuples, solved densely.
    Scattered(Box<Svd>),
}

/// The linear system `A·vec(T) = b` over product samples.
#[derive(Debug, Clone)]
pub struct DesignSystem {
    space: SpaceSpec,
    rows: Vec<Vec<UnitVector>>,
    values: Vec<f64>,
    layout: Layout,
    rank: usize,
    condition: f64,
}

impl DesignSystem {
    /// Dense least squares over whatever samples are given.
    pub fn from_samples(samples: &FrameSamples) -> Result<Self> {
        samples.check()?;
        if samples.samples.is_empty() {
            return Err(Error::InvalidArgument("no samples".into()));
        }
        let space = samples.space.clone();
        let unknowns = space.total_dim().pow(2);
        if unknowns > MAX_DENSE_UNKNOWNS {
            return Err(Error::DimensionOverflow { requested: unknowns, max: MAX_DENSE_UNKNOWNS });
        }
        let rows: Vec<Vec<UnitVector>> = samples.samples.iter().map(|s| s.factors.clone()).collect();
        let values: Vec<f64> = samples.samples.iter().map(|s| s.value).collect();
        let flat: Vec<C64> = rows.iter().flat_map(|r| product_row(r)).collect();
        let a = DMatrix::from_row_slice(rows.len(), unknowns, &flat);
        let svd = svd(&a)?;
        let rank = numerical_rank(&svd.s);
        let condition = if svd.s.len() < unknowns { f64::INFINITY } else { svd.s.max() / svd.s.min() };
        Ok(Self { space, rows, values, layout: Layout::Scattered(Box::new(svd)), rank, condition })
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn rows(&self) -> &[Vec<UnitVector>] {
        &self.rows
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn unknowns(&self) -> usize {
        self.space.total_dim().pow(2)
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn is_grid(&self) -> bool {
        matches!(self.layout, Layout::Grid(_))
    }

    pub fn samples(&self) -> FrameSamples {
        let samples = self
            .rows
            .iter()
            .zip(&self.values)
            .map(|(factors, &value)| FrameSample { factors: factors.clone(), value })
            .collect();
        FrameSamples { space: self.space.clone(), samples }
    }

    /// The explicit design matrix, built row by row from the samples.
    pub fn matrix(&self) -> DMatrix<C64> {
        let flat: Vec<C64> = self.rows.iter().flat_map(|r| product_row(r)).collect();
        DMatrix::from_row_slice(self.rows.len(), self.unknowns(), &flat)
    }

    /// The same matrix from the per-factor blocks, when the layout is a grid.
    pub fn kronecker_matrix(&self) -> Option<DMatrix<C64>> {
        match &self.layout {
            Layout::Grid(fs) => {
                let first = fs[0].matrix.clone();
                Some(fs[1..].iter().fold(first, |acc, f| acc.kronecker(&f.matrix)))
            }
            Layout::Scattered(_) => None,
        }
    }

    fn solve_raw(&self) -> Result<Vec<C64>> {
        let b: Vec<C64> = self.values.iter().map(|&v| C64::new(v, 0.0)).collect();
        match &self.layout {
            Layout::Grid(fs) => {
                let mats: Vec<&DMatrix<C64>> = fs.iter().map(|f| &f.pinv).collect();
                Ok(apply_modes(&mats, b))
            }
            Layout::Scattered(svd) => {
                let x = svd.solve(&DVector::from_vec(b), RANK_RTOL * svd.s.max());
                Ok(x.iter().copied().collect())
            }
        }
    }
}

/// `(M₁ ⊗ ⋯ ⊗ Mₙ)·x` without forming the Kronecker product.
fn apply_modes(mats: &[&DMatrix<C64>], mut x: Vec<C64>) -> Vec<C64> {
    let mut sizes: Vec<usize> = mats.iter().map(|m| m.ncols()).collect();
    for (k, m) in mats.iter().enumerate() {
        let left: usize = sizes[..k].iter().product();
        let right: usize = sizes[k + 1..].iter().product();
        let (rows, cols) = m.shape();
        let mut out = vec![C64::new(0.0, 0.0); left * rows * right];
        for l in 0..left {
            for o in 0..rows {
                let dst = &mut out[(l * rows + o) * right..(l * rows + o + 1) * right];
                for i in 0..cols {
                    let c = m[(o, i)];
                    if c == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let src = &x[(l * cols + i) * right..(l * cols + i + 1) * right];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += c * s;
                    }
                }
            }
        }
        sizes[k] = rows;
        x = out;
    }
    x
}

/// Evaluate `f` on every tuple of the per-factor spanning families.
pub fn assemble_design(spec: &SpaceSpec, f: &FrameFunction) -> Result<DesignSystem> {
    if f.space() != spec {
        return Err(Error::SpaceMismatch(format!("frame function on {} for design on {spec}", f.space())));
    }
    let unknowns = spec.total_dim().pow(2);
    if unknowns > MAX_TOTAL_DIM {
        return Err(Error::DimensionOverflow { requested: unknowns, max: MAX_TOTAL_DIM });
    }
    let families = spec.dims().iter().map(|&d| build_spanning_family(d)).collect::<Result<Vec<_>>>()?;
    let factors = families.iter().map(FactorDesign::new).collect::<Result<Vec<_>>>()?;
    let counts: Vec<usize> = families.iter().map(|s| s.vectors.len()).collect();
    let mut rows = Vec::with_capacity(unknowns);
    let mut values = Vec::with_capacity(unknowns);
    for flat in 0..unknowns {
        let idx = unflatten(flat, &counts);
        let tuple: Vec<UnitVector> = idx.iter().zip(&families).map(|(&i, s)| s.vectors[i].clone()).collect();
        values.push(eval_frame(f, &tuple)?);
        rows.push(tuple);
    }
    // singular values of a Kronecker product are the products of the factors'
    let mut sv = vec![1.0f64];
    for fd in &factors {
        sv = sv.iter().flat_map(|&a| fd.singular_values.iter().map(move |&b| a * b)).collect();
    }
    let rank = numerical_rank(&DVector::from_vec(sv));
    let condition = factors.iter().map(|fd| fd.singular_values.max() / fd.singular_values.min()).product();
    Ok(DesignSystem { space: spec.clone(), rows, values, layout: Layout::Grid(factors), rank, condition })
}

mod finite_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// `{"T", "residual", "condition", "unique", "rank"}`; an infinite condition
/// number serializes as `null`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconstructionResult {
    #[serde(rename = "T")]
    pub t_hat: Operator,
    pub residual: f64,
    #[serde(with = "finite_or_null")]
    pub condition: f64,
    pub unique: bool,
    pub rank: usize,
}

impl ReconstructionResult {
    /// `Re ⟨ν, T̂ ν⟩` for `ν = ν₁ ⊗ ⋯ ⊗ νₙ`.
    pub fn predict(&self, factors: &[UnitVector]) -> Result<f64> {
        let v = tensor_vec(factors)?;
        if v.dim() != self.t_hat.dim() {
            return Err(Error::DimensionMismatch { expected: self.t_hat.dim(), found: v.dim() });
        }
        Ok(self.t_hat.expectation(&v).re)
    }
}

/// Least squares for `vec(T)` followed by `T ← ½(T + T†)`.
pub fn solve_t(ds: &DesignSystem) -> Result<ReconstructionResult> {
    if ds.rank == 0 {
        if ds.values.iter().all(|&v| v == 0.0) {
            let d = ds.space.total_dim();
            return Ok(ReconstructionResult {
                t_hat: Operator::zeros(d),
                residual: 0.0,
                condition: ds.condition,
                unique: false,
                rank: 0,
            });
        }
        return Err(Error::SolverFailure("design matrix is numerically zero".into()));
    }
    let x = ds.solve_raw()?;
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SolverFailure("least-squares solution is not finite".into()));
    }
    let t_hat = unrealign(&x, ds.space.dims()).hermitian_part();
    let mut result =
        ReconstructionResult { t_hat, residual: 0.0, condition: ds.condition, unique: ds.rank == ds.unknowns(), rank: ds.rank };
    let mut residual = 0.0f64;
    for (row, &b) in ds.rows.iter().zip(&ds.values) {
        residual = residual.max((result.predict(row)? - b).abs());
    }
    result.residual = residual;
    Ok(result)
}

pub fn reconstruct(f: &FrameFunction) -> Result<ReconstructionResult> {
    solve_t(&assemble_design(f.space(), f)?)
}

pub fn random_simple_tensor<R: Rng + ?Sized>(spec: &SpaceSpec, rng: &mut R) -> Vec<UnitVector> {
    spec.dims().iter().map(|&d| UnitVector::random(d, rng)).collect()
}

/// Largest `|f(ν) − Tr(p_ν T̂)|` over random unit simple tensors.
pub fn holdout_validate(f: &FrameFunction, r: &ReconstructionResult, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidArgument("holdout needs at least one trial".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let tuple = random_simple_tensor(f.space(), &mut rng);
        worst = worst.max((eval_frame(f, &tuple)? - r.predict(&tuple)?).abs());
    }
    Ok(worst)
}
