//! Hermitian linear algebra: density operators, binary tests, spectral
//! decompositions, matrix powers and tensor powers.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;

use crate::config::Config;
use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Largest `|M_ij - conj(M_ji)|`.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let d = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..d {
        for j in i..d {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// `(M + M^H) / 2`.
pub fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    max_abs(&(a * b - b * a))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues in descending order.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let d = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `V diag(values) V^H`.
pub fn from_eigen(values: &[f64], vectors: &CMatrix) -> CMatrix {
    let d = vectors.nrows();
    let mut scaled = vectors.clone();
    for (c, &v) in values.iter().enumerate() {
        scaled.column_mut(c).scale_mut(v);
    }
    let m = scaled * vectors.adjoint();
    debug_assert_eq!(m.nrows(), d);
    symmetrize(&m)
}

/// Largest deviation of `V^H V` from the identity.
pub fn unitarity_deviation(v: &CMatrix) -> f64 {
    let g = v.adjoint() * v;
    let d = g.nrows();
    let mut dev = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    dev
}

fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(())
}

fn hermitian_part(m: &CMatrix, tol: f64) -> Result<CMatrix> {
    check_square(m)?;
    let deviation = hermiticity_deviation(m);
    if deviation.is_nan() || deviation > tol {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(symmetrize(m))
}

#[derive(Clone, Debug)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: CMatrix, cfg: &Config) -> Result<Self> {
        Ok(HermitianOperator { matrix: hermitian_part(&matrix, cfg.hermiticity_tol)? })
    }

    /// For matrices Hermitian by construction; symmetrizes away roundoff.
    pub(crate) fn from_hermitian(matrix: &CMatrix) -> Self {
        HermitianOperator { matrix: symmetrize(matrix) }
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
}

/// Positive semidefinite, unit-trace operator with a cached eigendecomposition.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    matrix: CMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl DensityOperator {
    pub fn new(matrix: CMatrix, cfg: &Config) -> Result<Self> {
        let h = hermitian_part(&matrix, cfg.hermiticity_tol)?;
        let (mut values, vectors) = hermitian_eigen(&h);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -cfg.psd_tol {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        for v in values.iter_mut() {
            *v = v.max(0.0);
        }
        let trace: f64 = values.iter().sum();
        if (trace - 1.0).abs() > cfg.trace_tol && !cfg.normalize {
            return Err(Error::TraceNotOne { trace });
        }
        if trace <= 0.0 {
            return Err(Error::TraceNotOne { trace });
        }
        for v in values.iter_mut() {
            *v /= trace;
        }
        let deviation = unitarity_deviation(&vectors);
        if deviation > 1e-10 {
            return Err(Error::InternalInconsistency(format!(
                "eigenvector matrix not unitary (deviation {deviation:e})"
            )));
        }
        let matrix = from_eigen(&values, &vectors);
        Ok(DensityOperator { matrix, eigenvalues: values, eigenvectors: vectors })
    }

    pub fn diagonal(probs: &[f64], cfg: &Config) -> Result<Self> {
        let d = probs.len();
        let m = CMatrix::from_fn(d, d, |i, j| if i == j { C64::new(probs[i], 0.0) } else { C64::new(0.0, 0.0) });
        Self::new(m, cfg)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Columns are eigenvectors, in the order of [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Number of eigenvalues above `support_tol`.
    pub fn rank(&self, support_tol: f64) -> usize {
        self.eigenvalues.iter().filter(|&&a| a > support_tol).count()
    }

    /// Orthogonal projector onto the eigenspace with eigenvalues `<= support_tol`.
    pub fn kernel_projector(&self, support_tol: f64) -> CMatrix {
        let mask: Vec<f64> = self.eigenvalues.iter().map(|&a| if a > support_tol { 0.0 } else { 1.0 }).collect();
        from_eigen(&mask, &self.eigenvectors)
    }

    pub fn support_projector(&self, support_tol: f64) -> CMatrix {
        let mask: Vec<f64> = self.eigenvalues.iter().map(|&a| if a > support_tol { 1.0 } else { 0.0 }).collect();
        from_eigen(&mask, &self.eigenvectors)
    }

    /// Applies `f` to the eigenvalues.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> HermitianOperator {
        let values: Vec<f64> = self.eigenvalues.iter().map(|&a| f(a)).collect();
        HermitianOperator { matrix: from_eigen(&values, &self.eigenvectors) }
    }
}

/// Operator `A` with `0 <= A <= 1`.
#[derive(Clone, Debug)]
pub struct BinaryTest {
    matrix: CMatrix,
}

impl BinaryTest {
    pub fn new(matrix: CMatrix, cfg: &Config) -> Result<Self> {
        let h = hermitian_part(&matrix, cfg.hermiticity_tol)?;
        let (values, vectors) = hermitian_eigen(&h);
        let slack = cfg.psd_tol;
        if let Some(&bad) = values.iter().find(|&&v| v < -slack || v > 1.0 + slack) {
            return Err(Error::NotATest { eigenvalue: bad });
        }
        let clipped: Vec<f64> = values.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Ok(BinaryTest { matrix: from_eigen(&clipped, &vectors) })
    }

    /// Projector onto the span of the given orthonormal columns.
    pub fn projector(columns: &CMatrix) -> Self {
        BinaryTest { matrix: symmetrize(&(columns * columns.adjoint())) }
    }

    pub fn identity(dim: usize) -> Self {
        BinaryTest { matrix: CMatrix::identity(dim, dim) }
    }

    pub fn zero(dim: usize) -> Self {
        BinaryTest { matrix: CMatrix::zeros(dim, dim) }
    }

    /// `w A + (1 - w) B`.
    pub fn mix(&self, other: &BinaryTest, weight: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        let w = weight.clamp(0.0, 1.0);
        Ok(BinaryTest { matrix: self.matrix.scale(w) + other.matrix.scale(1.0 - w) })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `(alpha, beta) = (Tr rho (1 - A), Tr sigma A)`, clipped to `[0, 1]`.
    pub fn errors(&self, rho: &CMatrix, sigma: &CMatrix) -> Result<(f64, f64)> {
        if rho.nrows() != self.dim() || sigma.nrows() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: rho.nrows() });
        }
        let accept = trace_product(rho, &self.matrix);
        let beta = trace_product(sigma, &self.matrix);
        Ok(((1.0 - accept).clamp(0.0, 1.0), beta.clamp(0.0, 1.0)))
    }
}

/// `Re Tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let d = a.nrows();
    let mut acc = 0.0;
    for i in 0..d {
        for k in 0..d {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

#[derive(Clone, Debug)]
pub struct SpectralCluster {
    /// Mean of the clustered eigenvalues.
    pub value: f64,
    /// The individual eigenvalues, in descending order.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal basis of the eigenspace, one column per eigenvalue.
    pub vectors: CMatrix,
}

impl SpectralCluster {
    pub fn projector(&self) -> CMatrix {
        &self.vectors * self.vectors.adjoint()
    }

    pub fn multiplicity(&self) -> usize {
        self.vectors.ncols()
    }
}

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub clusters: Vec<SpectralCluster>,
    dim: usize,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn reconstruct(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for c in &self.clusters {
            m += c.projector().scale(c.value);
        }
        m
    }
}

/// Eigenvalues grouped into clusters whose consecutive gaps are below
/// `degeneracy_tol`; one projector per cluster, clusters in descending order.
pub fn spectral(op: &HermitianOperator, degeneracy_tol: f64) -> SpectralDecomposition {
    let (values, vectors) = hermitian_eigen(op.matrix());
    let d = values.len();
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=d {
        if i == d || values[i - 1] - values[i] >= degeneracy_tol {
            groups.push((start, i));
            start = i;
        }
    }
    let clusters = groups
        .into_iter()
        .map(|(a, b)| {
            let eigenvalues = values[a..b].to_vec();
            let value = eigenvalues.iter().sum::<f64>() / (b - a) as f64;
            SpectralCluster { value, eigenvalues, vectors: vectors.columns(a, b - a).into_owned() }
        })
        .collect();
    SpectralDecomposition { clusters, dim: d }
}

/// `d^n`, or `DimensionCapExceeded`.
pub fn tensor_dim(d: usize, n: usize, dim_cap: usize) -> Result<usize> {
    let mut dim: usize = 1;
    for _ in 0..n {
        dim = match dim.checked_mul(d) {
            Some(v) if v <= dim_cap => v,
            Some(v) => return Err(Error::DimensionCapExceeded { dim: v, cap: dim_cap }),
            None => return Err(Error::DimensionCapExceeded { dim: usize::MAX, cap: dim_cap }),
        };
    }
    Ok(dim)
}

/// Kronecker power `op^{⊗n}`.
pub fn tensor_power(op: &CMatrix, n: usize, dim_cap: usize) -> Result<CMatrix> {
    check_square(op)?;
    if n == 0 {
        return Err(Error::InvalidConfig("tensor power needs n >= 1".into()));
    }
    tensor_dim(op.nrows(), n, dim_cap)?;
    let mut out = op.clone();
    for _ in 1..n {
        out = out.kronecker(op);
    }
    Ok(out)
}

/// Kronecker power of a vector of diagonal entries.
pub fn tensor_power_diagonal(diag: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 0..n {
        out = out.iter().flat_map(|&x| diag.iter().map(move |&y| x * y)).collect();
    }
    out
}

/// Fractional power of a density operator. Negative exponents require
/// `support_only` and act as zero on the kernel.
pub fn matrix_power(op: &DensityOperator, exponent: f64, support_only: bool, support_tol: f64) -> Result<HermitianOperator> {
    if exponent < 0.0 && !support_only {
        if let Some(&a) = op.eigenvalues().iter().find(|&&a| a <= support_tol) {
            return Err(Error::NegativePowerOfKernel { eigenvalue: a });
        }
    }
    Ok(op.map_spectrum(|a| {
        if a > support_tol {
            a.powf(exponent)
        } else if exponent == 0.0 && !support_only {
            1.0
        } else if exponent > 0.0 && !support_only {
            a.max(0.0).powf(exponent)
        } else {
            0.0
        }
    }))
}

/// `Im rho ⊂ Im sigma`: the compression of `rho` onto `ker sigma` vanishes.
pub fn support_condition(rho: &DensityOperator, sigma: &DensityOperator, support_tol: f64) -> bool {
    if rho.dim() != sigma.dim() {
        return false;
    }
    let k = sigma.kernel_projector(support_tol);
    max_abs(&(&k * rho.matrix() * &k)) < support_tol
}
