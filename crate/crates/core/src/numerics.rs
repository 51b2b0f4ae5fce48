//! Shared numerical kernels: normalized sinc, unitary DFT, Hermitian
//! positive-definite solves and seeded random streams.
//!
//! Everything here is a pure function over value inputs (or owns its state),
//! so drop workers can call into it concurrently.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("transform length must be at least 1")]
    EmptyTransform,
    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not positive definite (pivot {pivot} = {value:.3e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
}

/// Normalized sinc, `sin(pi x) / (pi x)` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Floor that absorbs floating-point error just below an integer, so that
/// e.g. `10 * sin(pi/6)` counts as 5.
pub(crate) fn tolerant_floor(x: f64) -> i64 {
    (x + 1e-9).floor() as i64
}

/// Planned unitary DFT of a fixed length.
///
/// Forward transform: `X[n] = (1/sqrt(N)) * sum_m x[m] exp(-j 2 pi n m / N)`.
#[derive(Clone)]
pub struct Dft {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl fmt::Debug for Dft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dft").field("len", &self.len).finish()
    }
}

impl Dft {
    pub fn new(len: usize) -> Result<Self, NumericsError> {
        if len == 0 {
            return Err(NumericsError::EmptyTransform);
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            scale: 1.0 / (len as f64).sqrt(),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn check(&self, buf: &[Complex64]) -> Result<(), NumericsError> {
        if buf.len() != self.len {
            return Err(NumericsError::LengthMismatch { expected: self.len, actual: buf.len() });
        }
        Ok(())
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64]) -> Result<(), NumericsError> {
        self.check(buf)?;
        self.forward.process(buf);
        buf.iter_mut().for_each(|v| *v *= self.scale);
        Ok(())
    }

    pub fn inverse_in_place(&self, buf: &mut [Complex64]) -> Result<(), NumericsError> {
        self.check(buf)?;
        self.inverse.process(buf);
        buf.iter_mut().for_each(|v| *v *= self.scale);
        Ok(())
    }

    pub fn forward(&self, x: &[Complex64]) -> Result<Vec<Complex64>, NumericsError> {
        let mut out = x.to_vec();
        self.forward_in_place(&mut out)?;
        Ok(out)
    }

    pub fn inverse(&self, x: &[Complex64]) -> Result<Vec<Complex64>, NumericsError> {
        let mut out = x.to_vec();
        self.inverse_in_place(&mut out)?;
        Ok(out)
    }
}

/// Unitary DFT of `x` (length taken from the input).
pub fn dft(x: &[Complex64]) -> Result<Vec<Complex64>, NumericsError> {
    Dft::new(x.len())?.forward(x)
}

/// Unitary inverse DFT of `x`.
pub fn idft(x: &[Complex64]) -> Result<Vec<Complex64>, NumericsError> {
    Dft::new(x.len())?.inverse(x)
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major data.
    pub fn from_rows(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::LengthMismatch { expected: rows * cols, actual: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Adds `scale * v v^H` in place.
    pub fn add_outer(&mut self, v: &[Complex64], scale: f64) {
        debug_assert_eq!(v.len(), self.rows);
        debug_assert_eq!(self.rows, self.cols);
        for (r, vr) in v.iter().enumerate() {
            if *vr == Complex64::new(0.0, 0.0) {
                continue;
            }
            let vr = vr * scale;
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (dst, vc) in row.iter_mut().zip(v) {
                *dst += vr * vc.conj();
            }
        }
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Lower-triangular Cholesky factor `A = L L^H` of a Hermitian
/// positive-definite matrix. Only the lower triangle of `A` is read.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    lower: Vec<Complex64>,
}

impl Cholesky {
    pub fn factor(a: &CMatrix) -> Result<Self, NumericsError> {
        if a.rows != a.cols {
            return Err(NumericsError::LengthMismatch { expected: a.rows, actual: a.cols });
        }
        let n = a.rows;
        let mut l = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            let mut diag = a[(j, j)].re;
            for k in 0..j {
                diag -= l[j * n + k].norm_sqr();
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(NumericsError::NotPositiveDefinite { pivot: j, value: diag });
            }
            let ljj = diag.sqrt();
            l[j * n + j] = Complex64::new(ljj, 0.0);
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / ljj;
            }
        }
        Ok(Self { n, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>, NumericsError> {
        let n = self.n;
        if b.len() != n {
            return Err(NumericsError::LengthMismatch { expected: n, actual: b.len() });
        }
        let l = &self.lower;
        // forward: L y = b
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i].re;
        }
        // backward: L^H x = y
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[k * n + i].conj() * y[k];
            }
            y[i] = s / l[i * n + i].re;
        }
        Ok(y)
    }
}

/// Solves `A x = b` for Hermitian positive-definite `A` via Cholesky.
pub fn hpd_solve(a: &CMatrix, b: &[Complex64]) -> Result<Vec<Complex64>, NumericsError> {
    if a.rows != a.cols || b.len() != a.rows {
        return Err(NumericsError::LengthMismatch {
            expected: a.rows,
            actual: if a.rows != a.cols { a.cols } else { b.len() },
        });
    }
    let asym = a.max_asymmetry();
    if asym > 1e-10 * a.max_abs().max(f64::MIN_POSITIVE) {
        return Err(NumericsError::NotHermitian(asym));
    }
    Cholesky::factor(a)?.solve(b)
}

/// Covariance of the form `diag(d) + scale * sum_j g_j g_j^H`.
///
/// Solves go through the Woodbury identity when the number of rank-one
/// terms is smaller than the dimension, otherwise through a dense Cholesky
/// factor. Both routes factor a Hermitian positive-definite matrix; neither
/// forms an explicit inverse.
#[derive(Debug, Clone)]
pub struct DiagPlusLowRank {
    diag: Vec<f64>,
    scale: f64,
    factors: Vec<Vec<Complex64>>,
}

enum Solver {
    Dense(Cholesky),
    Woodbury {
        /// D^{-1} g_j for every factor
        scaled: Vec<Vec<Complex64>>,
        capacitance: Cholesky,
    },
}

/// A factored [`DiagPlusLowRank`] ready for repeated solves.
pub struct FactoredCovariance<'a> {
    cov: &'a DiagPlusLowRank,
    solver: Solver,
}

impl DiagPlusLowRank {
    pub fn new(diag: Vec<f64>, scale: f64) -> Self {
        Self { diag, scale, factors: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Adds a rank-one term. All-zero vectors are skipped.
    pub fn push(&mut self, g: Vec<Complex64>) {
        debug_assert_eq!(g.len(), self.diag.len());
        if g.iter().any(|v| v.re != 0.0 || v.im != 0.0) {
            self.factors.push(g);
        }
    }

    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    /// Materializes the full matrix.
    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::from_diag(&self.diag);
        for g in &self.factors {
            m.add_outer(g, self.scale);
        }
        m
    }

    /// Quadratic form `u^H C u`.
    pub fn quad_form(&self, u: &[Complex64]) -> f64 {
        let mut acc: f64 = u.iter().zip(&self.diag).map(|(v, d)| v.norm_sqr() * d).sum();
        for g in &self.factors {
            acc += self.scale * inner(g, u).norm_sqr();
        }
        acc
    }

    pub fn factor(&self) -> Result<FactoredCovariance<'_>, NumericsError> {
        let n = self.dim();
        let r = self.factors.len();
        if let Some((pivot, &value)) = self.diag.iter().enumerate().find(|(_, d)| !(**d > 0.0)) {
            return Err(NumericsError::NotPositiveDefinite { pivot, value });
        }
        let solver = if r >= n {
            Solver::Dense(Cholesky::factor(&self.to_dense())?)
        } else {
            let scaled: Vec<Vec<Complex64>> =
                self.factors.iter().map(|g| g.iter().zip(&self.diag).map(|(v, d)| v / d).collect()).collect();
            // I / scale + G^H D^{-1} G
            let mut cap = CMatrix::zeros(r, r);
            for a in 0..r {
                for b in 0..=a {
                    let v = inner(&self.factors[a], &scaled[b]);
                    cap[(a, b)] = v;
                    cap[(b, a)] = v.conj();
                }
                cap[(a, a)] += 1.0 / self.scale;
            }
            Solver::Woodbury { scaled, capacitance: Cholesky::factor(&cap)? }
        };
        Ok(FactoredCovariance { cov: self, solver })
    }
}

impl FactoredCovariance<'_> {
    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>, NumericsError> {
        let cov = self.cov;
        if rhs.len() != cov.dim() {
            return Err(NumericsError::LengthMismatch { expected: cov.dim(), actual: rhs.len() });
        }
        match &self.solver {
            Solver::Dense(ch) => ch.solve(rhs),
            Solver::Woodbury { scaled, capacitance } => {
                let mut x: Vec<Complex64> = rhs.iter().zip(&cov.diag).map(|(v, d)| v / d).collect();
                let proj: Vec<Complex64> = cov.factors.iter().map(|g| inner(g, &x)).collect();
                let w = capacitance.solve(&proj)?;
                for (s, wj) in scaled.iter().zip(&w) {
                    for (xi, si) in x.iter_mut().zip(s) {
                        *xi -= si * wj;
                    }
                }
                Ok(x)
            }
        }
    }
}

/// `a^H b`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum()
}

/// Deterministic random stream addressed by `(seed, label)`.
///
/// The same pair always yields the same sequence; distinct labels hash to
/// unrelated ChaCha keys.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    label: String,
    rng: ChaCha12Rng,
}

impl RandomStream {
    pub fn new(seed: u64, label: impl Into<String>) -> Self {
        let label = label.into();
        let mut hasher = Sha256::new();
        hasher.update(seed.to_le_bytes());
        hasher.update(label.as_bytes());
        let digest = hasher.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        Self { seed, label, rng: ChaCha12Rng::from_seed(key) }
    }

    /// Independent child stream labelled `"{label}/{suffix}"`.
    pub fn substream(&self, suffix: &str) -> Self {
        Self::new(self.seed, format!("{}/{}", self.label, suffix))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Circularly-symmetric complex Gaussian sample with total variance `var`.
    pub fn cscg(&mut self, var: f64) -> Complex64 {
        let s = (var / 2.0).sqrt();
        Complex64::new(s * self.standard_normal(), s * self.standard_normal())
    }

    /// Unit-modulus sample with uniform phase.
    pub fn unit_phasor(&mut self) -> Complex64 {
        Complex64::from_polar(1.0, self.uniform(0.0, 2.0 * PI))
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
