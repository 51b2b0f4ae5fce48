//! Scalar quantization and fronthaul-constrained bit allocation.
//!
//! Every RRH quantizes the real and imaginary parts of each selected
//! antenna's samples with `b` bits. The error variance is modeled as
//! `3 rho / 4^b`, and the bits are spread over antennas by reverse
//! water-filling on that model, followed by threshold rounding.

use num_complex::Complex64;
use thiserror::Error;

/// Bits used on every antenna when the fronthaul is treated as unlimited.
pub const UNCONSTRAINED_BITS: u32 = 16;

/// Default tolerance for both bisections.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantizerError {
    #[error("no probing samples")]
    EmptyProbe,
    #[error("every antenna has zero received power; nothing to allocate")]
    NoAllocatableAntenna,
    #[error("fronthaul budget must be positive and finite, got {0}")]
    InvalidBudget(f64),
    #[error("zero bits: the stream is dropped, not quantized")]
    ZeroBits,
    #[error("quantizer power must be positive, got {0}")]
    NonPositivePower(f64),
}

/// Mean received power over probing samples.
pub fn probe_power(samples: &[Complex64]) -> Result<f64, QuantizerError> {
    if samples.is_empty() {
        return Err(QuantizerError::EmptyProbe);
    }
    Ok(samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64)
}

/// Quantization error variance model for `bits` bits per real dimension.
pub fn error_variance(rho: f64, bits: u32) -> f64 {
    3.0 * rho * 0.25f64.powi(bits as i32)
}

/// Sum of modeled distortions for a (possibly fractional) allocation.
pub fn distortion(rho: &[f64], bits: &[f64]) -> f64 {
    rho.iter().zip(bits).map(|(r, b)| 3.0 * r * 4f64.powf(-b)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedAllocation {
    pub bits: Vec<f64>,
    /// Optimal multiplier, in units where `6 rho_max ln 2 = 1`.
    pub lambda: f64,
    pub iterations: usize,
}

fn water_level(rho_scaled: &[f64], lambda: f64) -> impl Iterator<Item = f64> + '_ {
    rho_scaled.iter().map(move |r| if *r > 0.0 { (0.5 * (r / lambda).log2()).max(0.0) } else { 0.0 })
}

/// Real-valued allocation `b'_q = max(log2(6 rho_q ln2 / lambda) / 2, 0)`
/// with `lambda` bisected until the bits sum to `budget` within `tol`.
pub fn solve_relaxed_allocation(rho: &[f64], budget: f64, tol: f64) -> Result<RelaxedAllocation, QuantizerError> {
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(QuantizerError::InvalidBudget(budget));
    }
    let rho_max = rho.iter().cloned().fold(0.0, f64::max);
    if rho_max <= 0.0 {
        return Err(QuantizerError::NoAllocatableAntenna);
    }
    // scale so the bracket is [0, 1]
    let scaled: Vec<f64> = rho.iter().map(|r| r.max(0.0) / rho_max).collect();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut lambda;
    let mut iterations = 0;
    loop {
        iterations += 1;
        lambda = 0.5 * (lo + hi);
        let total: f64 = water_level(&scaled, lambda).sum();
        if (total - budget).abs() <= tol {
            break;
        }
        if total > budget {
            lo = lambda;
        } else {
            hi = lambda;
        }
        // relative width keeps the bit sum accurate when lambda is tiny
        if hi - lo <= tol * hi || hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(RelaxedAllocation { bits: water_level(&scaled, lambda).collect(), lambda, iterations })
}

fn rounded(b: &[f64], beta: f64) -> Vec<u32> {
    b.iter()
        .map(|&x| {
            let fl = x.floor();
            if x - fl <= beta {
                fl as u32
            } else {
                fl as u32 + 1
            }
        })
        .collect()
}

/// Integer allocation: fractional parts above the smallest feasible
/// threshold `beta` round up, the rest round down.
pub fn round_allocation(relaxed: &[f64], budget: f64, tol: f64) -> Vec<u32> {
    // snap values sitting on an integer up to bisection noise
    let b: Vec<f64> = relaxed
        .iter()
        .map(|&x| {
            let r = x.round();
            if (x - r).abs() <= 1e-7 {
                r.max(0.0)
            } else {
                x.max(0.0)
            }
        })
        .collect();
    let feasible = |beta: f64| {
        let bits = rounded(&b, beta);
        (bits.iter().map(|&v| v as f64).sum::<f64>() <= budget + 1e-9).then_some(bits)
    };
    if let Some(bits) = feasible(0.0) {
        return bits;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if feasible(mid).is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    feasible(hi).unwrap_or_else(|| rounded(&b, 1.0))
}

/// Integer bits per antenna with the probed powers that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct BitAllocation {
    pub rho: Vec<f64>,
    pub bits: Vec<u32>,
}

impl BitAllocation {
    /// Relaxed water-filling followed by rounding; `budget` is bits per sample.
    pub fn optimize(rho: &[f64], budget: f64, tol: f64) -> Result<Self, QuantizerError> {
        let relaxed = solve_relaxed_allocation(rho, budget, tol)?;
        Ok(Self { rho: rho.to_vec(), bits: round_allocation(&relaxed.bits, budget, tol) })
    }

    /// Unlimited fronthaul: every antenna that sees any power gets 16 bits.
    pub fn unconstrained(rho: &[f64]) -> Self {
        Self { rho: rho.to_vec(), bits: rho.iter().map(|&r| if r > 0.0 { UNCONSTRAINED_BITS } else { 0 }).collect() }
    }

    /// Antennas with a nonzero allocation, in index order.
    pub fn selected(&self) -> Vec<usize> {
        (0..self.bits.len()).filter(|&q| self.bits[q] > 0).collect()
    }

    pub fn total_bits(&self) -> u64 {
        self.bits.iter().map(|&b| b as u64).sum()
    }

    pub fn error_variance(&self, q: usize) -> f64 {
        error_variance(self.rho[q], self.bits[q])
    }

    pub fn quantizer(&self, q: usize) -> Result<UniformQuantizer, QuantizerError> {
        UniformQuantizer::new(self.rho[q], self.bits[q])
    }
}

/// Mid-rise uniform quantizer with `2^b` levels over `[-3 sigma, 3 sigma]`
/// per real dimension, where `sigma^2 = rho / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformQuantizer {
    step: f64,
    half_levels: f64,
}

impl UniformQuantizer {
    pub fn new(rho: f64, bits: u32) -> Result<Self, QuantizerError> {
        if bits == 0 {
            return Err(QuantizerError::ZeroBits);
        }
        if !(rho > 0.0) {
            return Err(QuantizerError::NonPositivePower(rho));
        }
        let levels = 2f64.powi(bits as i32);
        Ok(Self { step: 6.0 * (rho / 2.0).sqrt() / levels, half_levels: levels / 2.0 })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    fn real(&self, x: f64) -> f64 {
        let cell = (x / self.step).floor().clamp(-self.half_levels, self.half_levels - 1.0);
        (cell + 0.5) * self.step
    }

    pub fn quantize(&self, y: Complex64) -> Complex64 {
        Complex64::new(self.real(y.re), self.real(y.im))
    }

    pub fn quantize_block(&self, y: &mut [Complex64]) {
        for v in y {
            *v = self.quantize(*v);
        }
    }
}

/// Quantizes one sample; fails on `b = 0` since such streams are not forwarded.
pub fn quantize(y: Complex64, rho: f64, bits: u32) -> Result<Complex64, QuantizerError> {
    Ok(UniformQuantizer::new(rho, bits)?.quantize(y))
}
