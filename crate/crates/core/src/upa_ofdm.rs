//! UPA + OFDM benchmark receive chain.
//!
//! Each user sends OFDM symbols with a cyclic prefix; the RRHs quantize the
//! time-domain samples of their selected UPA antennas and the CU strips the
//! prefix and applies a DFT, so every subcarrier sees a flat channel
//! `h~_k[n] = sum_d h_k[d] exp(-j 2 pi n d / N)`. Pilots are designed so the
//! stacked frequency-domain pilot matrix has orthogonal columns, channel
//! taps are LS estimated in the time domain, and per-subcarrier MMSE
//! combining is evaluated with perfect or estimated CSI.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::channel::{StreamChannel, UserSignals};
use crate::lens_rx::zadoff_chu;
use crate::numerics::{CMatrix, Cholesky, Dft, NumericsError, RandomStream};
use crate::quantizer::UniformQuantizer;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OfdmError {
    #[error("invalid OFDM configuration: {0}")]
    InvalidConfig(String),
    #[error("expected {expected} pilot symbols of {n} subcarriers")]
    ObservationShape { expected: usize, n: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// OFDM numerology and frame layout in OFDM symbols.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OfdmConfig {
    /// Subcarriers N.
    pub n: usize,
    /// Cyclic prefix length mu, samples.
    pub mu: usize,
    pub tau_a: usize,
    pub tau_p: usize,
    pub tau_f: usize,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        Self { n: 256, mu: 20, tau_a: 1, tau_p: 3, tau_f: 30 }
    }
}

impl OfdmConfig {
    pub fn validate(&self, num_users: usize, d_max: usize) -> Result<(), OfdmError> {
        let bad = |m: String| Err(OfdmError::InvalidConfig(m));
        if self.n == 0 || self.tau_p == 0 {
            return bad("n and tau_p must be positive".into());
        }
        if self.tau_p * self.n < num_users * (d_max + 1) {
            return bad(format!(
                "tau_p N = {} is below K (d_max + 1) = {}",
                self.tau_p * self.n,
                num_users * (d_max + 1)
            ));
        }
        // shifted pilot groups must not wrap around the symbol
        let groups = num_users.div_ceil(self.tau_p);
        if groups * (d_max + 1) > self.n {
            return bad(format!("{groups} pilot groups of {} taps exceed N = {}", d_max + 1, self.n));
        }
        if self.tau_a + self.tau_p >= self.tau_f {
            return bad("no data symbols left in the frame".into());
        }
        Ok(())
    }

    /// Samples per OFDM symbol including the prefix.
    pub fn symbol_len(&self) -> usize {
        self.n + self.mu
    }

    /// Fraction of OFDM symbols left for data.
    pub fn overhead_prefactor(&self) -> f64 {
        1.0 - (self.tau_a + self.tau_p) as f64 / self.tau_f as f64
    }
}

/// Frequency-domain pilots `[t][k][n]` for `tau_p` symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmPilots {
    pub d_max: usize,
    pub power: f64,
    pub symbols: Vec<Vec<Vec<Complex64>>>,
}

/// User `k` is assigned orthogonal cover `omega = k mod tau_p` across
/// symbols and delay group `kappa = k / tau_p`, which shifts its taps by
/// `kappa (d_max + 1)` through a linear phase over subcarriers.
pub fn make_ofdm_pilots(num_users: usize, d_max: usize, cfg: &OfdmConfig, power: f64) -> Result<OfdmPilots, OfdmError> {
    cfg.validate(num_users, d_max)?;
    let (n, tau_p) = (cfg.n, cfg.tau_p);
    let base = zadoff_chu(1, n);
    let amp = power.sqrt();
    let symbols = (0..tau_p)
        .map(|t| {
            (0..num_users)
                .map(|k| {
                    let (kappa, omega) = (k / tau_p, k % tau_p);
                    let cover = Complex64::from_polar(1.0, -2.0 * PI * (t * omega) as f64 / tau_p as f64);
                    let shift = (kappa * (d_max + 1)) as f64;
                    (0..n)
                        .map(|i| {
                            amp * cover * base[i] * Complex64::from_polar(1.0, -2.0 * PI * shift * i as f64 / n as f64)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(OfdmPilots { d_max, power, symbols })
}

impl OfdmPilots {
    pub fn num_symbols(&self) -> usize {
        self.symbols.len()
    }

    pub fn num_users(&self) -> usize {
        self.symbols.first().map_or(0, |s| s.len())
    }

    pub fn n(&self) -> usize {
        self.symbols.first().and_then(|s| s.first()).map_or(0, |v| v.len())
    }

    /// Column `(k, d)` of the stacked pilot matrix, length `tau_p N`.
    pub fn column(&self, k: usize, d: usize) -> Vec<Complex64> {
        let n = self.n();
        self.symbols
            .iter()
            .flat_map(|sym| {
                (0..n).map(move |i| sym[k][i] * Complex64::from_polar(1.0, -2.0 * PI * (i * d) as f64 / n as f64))
            })
            .collect()
    }

    pub fn gram(&self) -> Vec<Vec<Complex64>> {
        let cols: Vec<Vec<Complex64>> = (0..self.num_users())
            .flat_map(|k| (0..=self.d_max).map(move |d| (k, d)))
            .map(|(k, d)| self.column(k, d))
            .collect();
        cols.iter().map(|a| cols.iter().map(|b| crate::numerics::inner(a, b)).collect()).collect()
    }
}

/// Time-domain waveforms with CP for frequency-domain symbols `[t][k][n]`,
/// preceded by `history` zero samples.
pub fn ofdm_waveform(
    symbols: &[Vec<Vec<Complex64>>],
    mu: usize,
    history: usize,
    dft: &Dft,
) -> Result<UserSignals, OfdmError> {
    let n = dft.len();
    let num_users = symbols.first().map_or(0, |s| s.len());
    let mut samples = vec![vec![ZERO; history]; num_users];
    for sym in symbols {
        for (k, x) in sym.iter().enumerate() {
            let time = dft.inverse(x)?;
            samples[k].extend_from_slice(&time[n - mu..]);
            samples[k].extend_from_slice(&time);
        }
    }
    Ok(UserSignals { history, samples })
}

/// Per-symbol frequency-domain observations on one stream: convolution,
/// AWGN, optional time-domain quantization, CP removal and DFT.
#[allow(clippy::too_many_arguments)]
pub fn ofdm_transmit_receive(
    channel: &StreamChannel,
    stream: usize,
    signals: &UserSignals,
    num_symbols: usize,
    mu: usize,
    noise_var: f64,
    quantizer: Option<&UniformQuantizer>,
    rng: &mut RandomStream,
    dft: &Dft,
) -> Result<Vec<Vec<Complex64>>, OfdmError> {
    let n = dft.len();
    let mut y = channel.receive(stream, signals);
    if noise_var > 0.0 {
        for v in &mut y {
            *v += rng.cscg(noise_var);
        }
    }
    if let Some(q) = quantizer {
        q.quantize_block(&mut y);
    }
    (0..num_symbols)
        .map(|t| {
            let start = t * (n + mu) + mu;
            Ok(dft.forward(&y[start..start + n])?)
        })
        .collect()
}

/// `h~[n] = sqrt(N) F h`: subcarrier response of zero-padded taps.
pub fn frequency_response(taps: &[Complex64], dft: &Dft) -> Result<Vec<Complex64>, OfdmError> {
    let n = dft.len();
    let mut buf = vec![ZERO; n];
    buf[..taps.len()].copy_from_slice(taps);
    dft.forward_in_place(&mut buf)?;
    let s = (n as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= s);
    Ok(buf)
}

/// Per-subcarrier model `sum_k h~_k[n] X_k[n]` (noiseless) for one symbol.
pub fn frequency_model(
    channel: &StreamChannel,
    stream: usize,
    symbol: &[Vec<Complex64>],
    dft: &Dft,
) -> Result<Vec<Complex64>, OfdmError> {
    let mut out = vec![ZERO; dft.len()];
    for (k, x) in symbol.iter().enumerate() {
        let h = frequency_response(channel.user_taps(stream, k), dft)?;
        for ((o, hv), xv) in out.iter_mut().zip(&h).zip(x) {
            *o += hv * xv;
        }
    }
    Ok(out)
}

/// Time-domain LS estimate `h_hat = X^H y / (tau_p N P)` of all
/// `K (d_max + 1)` taps from `tau_p` frequency-domain pilot observations.
pub fn ofdm_ls_estimate(obs: &[Vec<Complex64>], pilots: &OfdmPilots, dft: &Dft) -> Result<Vec<Complex64>, OfdmError> {
    let n = pilots.n();
    if obs.len() != pilots.num_symbols() || obs.iter().any(|o| o.len() != n) || dft.len() != n {
        return Err(OfdmError::ObservationShape { expected: pilots.num_symbols(), n });
    }
    let scale = (n as f64).sqrt() / (pilots.num_symbols() as f64 * n as f64 * pilots.power);
    let mut out = Vec::with_capacity(pilots.num_users() * (pilots.d_max + 1));
    for k in 0..pilots.num_users() {
        let mut z = vec![ZERO; n];
        for (sym, y) in pilots.symbols.iter().zip(obs) {
            for ((zv, x), yv) in z.iter_mut().zip(&sym[k]).zip(y) {
                *zv += x.conj() * yv;
            }
        }
        dft.inverse_in_place(&mut z)?;
        out.extend(z[..=pilots.d_max].iter().map(|v| v * scale));
    }
    Ok(out)
}

/// Gram statistics of one subcarrier accumulated over streams:
/// `g = H_hat^H D^{-1} H_hat` and `b = H_hat^H D^{-1} H`, where columns of
/// `H_hat` (beamformer design) and `H` (evaluation) are per-user responses.
#[derive(Debug, Clone)]
struct SubcarrierGram {
    g: Vec<Complex64>,
    b: Vec<Complex64>,
}

/// Streaming per-subcarrier MMSE evaluator. Feed each stream's design and
/// true frequency responses with [`SubcarrierMmse::add_stream`], then read
/// per-user, per-subcarrier SINRs.
#[derive(Debug, Clone)]
pub struct SubcarrierMmse {
    num_users: usize,
    power: f64,
    grams: Vec<SubcarrierGram>,
}

impl SubcarrierMmse {
    pub fn new(num_users: usize, n: usize, power: f64) -> Self {
        let kk = num_users * num_users;
        Self { num_users, power, grams: vec![SubcarrierGram { g: vec![ZERO; kk], b: vec![ZERO; kk] }; n] }
    }

    /// `design[k][n]` and `truth[k][n]` are frequency responses of one stream
    /// whose noise-plus-quantization variance is `noise`.
    pub fn add_stream(&mut self, design: &[Vec<Complex64>], truth: &[Vec<Complex64>], noise: f64) {
        let kn = self.num_users;
        let w = 1.0 / noise;
        for (idx, gram) in self.grams.iter_mut().enumerate() {
            for a in 0..kn {
                let ha = design[a][idx].conj() * w;
                for c in 0..kn {
                    gram.g[a * kn + c] += ha * design[c][idx];
                    gram.b[a * kn + c] += ha * truth[c][idx];
                }
            }
        }
    }

    /// SINR `[k][n]` of the MMSE combiner built from the design responses,
    /// evaluated on the true responses.
    pub fn sinr(&self) -> Result<Vec<Vec<f64>>, OfdmError> {
        let kn = self.num_users;
        let mut out = vec![Vec::with_capacity(self.grams.len()); kn];
        for gram in &self.grams {
            // u_k is proportional to D^{-1} H_hat c_k with c_k = (I + P G)^{-1} e_k
            let mut m = CMatrix::identity(kn);
            for a in 0..kn {
                for c in 0..kn {
                    m[(a, c)] += self.power * gram.g[a * kn + c];
                }
            }
            let chol = Cholesky::factor(&m)?;
            for (k, row) in out.iter_mut().enumerate() {
                let mut e = vec![ZERO; kn];
                e[k] = Complex64::new(1.0, 0.0);
                let c = chol.solve(&e)?;
                // u^H h_j = c^H b[:, j];  u^H D u = c^H g c
                let proj = |j: usize| -> Complex64 { (0..kn).map(|a| c[a].conj() * gram.b[a * kn + j]).sum() };
                let mut interference = 0.0;
                let mut signal = 0.0;
                for j in 0..kn {
                    let p = self.power * proj(j).norm_sqr();
                    if j == k {
                        signal = p;
                    } else {
                        interference += p;
                    }
                }
                let mut noise = 0.0;
                for a in 0..kn {
                    let gc: Complex64 = (0..kn).map(|j| gram.g[a * kn + j] * c[j]).sum();
                    noise += (c[a].conj() * gc).re;
                }
                row.push(if signal == 0.0 { 0.0 } else { signal / (interference + noise) });
            }
        }
        Ok(out)
    }
}

/// Closed-form per-subcarrier MMSE SINR for explicit channel vectors
/// `h[k]` (over streams): `P h_k^H C_k^{-1} h_k`.
pub fn mmse_per_subcarrier(h: &[Vec<Complex64>], noise: &[f64], power: f64) -> Result<Vec<f64>, OfdmError> {
    let mut acc = SubcarrierMmse::new(h.len(), 1, power);
    for (i, &nv) in noise.iter().enumerate() {
        let col: Vec<Vec<Complex64>> = h.iter().map(|hk| vec![hk[i]]).collect();
        acc.add_stream(&col, &col, nv);
    }
    Ok(acc.sinr()?.into_iter().map(|v| v[0]).collect())
}

/// SINR of combiner `u` for user `k` on one subcarrier.
pub fn subcarrier_sinr(h: &[Vec<Complex64>], noise: &[f64], power: f64, k: usize, u: &[Complex64]) -> f64 {
    let proj = |hk: &[Complex64]| crate::numerics::inner(u, hk).norm_sqr();
    let signal = power * proj(&h[k]);
    let interference: f64 = h.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, hj)| power * proj(hj)).sum();
    let noise: f64 = u.iter().zip(noise).map(|(v, d)| v.norm_sqr() * d).sum();
    signal / (interference + noise)
}

/// Per-user rate `(1 / (N + mu)) sum_n log2(1 + sinr[n])`, bps/Hz.
pub fn ofdm_rate(sinr_per_subcarrier: &[f64], mu: usize) -> f64 {
    let n = sinr_per_subcarrier.len();
    sinr_per_subcarrier.iter().map(|g| (1.0 + g).log2()).sum::<f64>() / (n + mu) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Stream;

    fn random_channel(rng: &mut RandomStream, streams: usize, users: usize, d_max: usize) -> StreamChannel {
        let taps: Vec<Vec<Complex64>> = (0..streams)
            .map(|_| {
                (0..users * (d_max + 1))
                    .map(|_| if rng.uniform(0.0, 1.0) < 0.4 { rng.cscg(1.0) } else { ZERO })
                    .collect()
            })
            .collect();
        StreamChannel {
            d_max,
            num_users: users,
            streams: (0..streams).map(|i| Stream::facing(0, i)).collect(),
            path_coeffs: vec![vec![Vec::new(); users]; streams],
            taps,
        }
    }

    #[test]
    fn frame_prefactor() {
        let cfg = OfdmConfig::default();
        assert!((cfg.overhead_prefactor() - 26.0 / 30.0).abs() < 1e-15);
        assert_eq!(cfg.symbol_len(), 276);
        assert!(cfg.validate(6, 20).is_ok());
        assert!(OfdmConfig { n: 16, tau_p: 1, ..cfg }.validate(6, 20).is_err());
    }

    #[test]
    fn pilot_gram_and_modulus() {
        let cfg = OfdmConfig::default();
        let p = make_ofdm_pilots(6, 20, &cfg, 0.2).unwrap();
        assert!(p.symbols.iter().flatten().flatten().all(|v| (v.norm() - 0.2f64.sqrt()).abs() < 1e-12));
        let g = p.gram();
        let c = 3.0 * 256.0 * 0.2;
        for (a, row) in g.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                let want = if a == b { c } else { 0.0 };
                assert!((v - want).norm() <= 1e-9 * c, "({a},{b}) {v}");
            }
        }
        let single = make_ofdm_pilots(1, 3, &OfdmConfig { n: 8, tau_p: 1, ..cfg }, 4.0).unwrap();
        assert!(single.symbols[0][0].iter().all(|v| (v.norm() - 2.0).abs() < 1e-12));
    }

    #[test]
    fn flat_channel_response() {
        let dft = Dft::new(16).unwrap();
        let h = frequency_response(&[Complex64::new(1.0, 0.0), ZERO, ZERO], &dft).unwrap();
        assert!(h.iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-12));
    }

    fn random_symbols(rng: &mut RandomStream, t: usize, k: usize, n: usize) -> Vec<Vec<Vec<Complex64>>> {
        (0..t).map(|_| (0..k).map(|_| (0..n).map(|_| rng.cscg(1.0)).collect()).collect()).collect()
    }

    fn max_model_error(mu: usize, d_max: usize, seed: u64) -> f64 {
        let mut rng = RandomStream::new(seed, "equivalence");
        let (n, users) = (32, 3);
        let dft = Dft::new(n).unwrap();
        let ch = random_channel(&mut rng, 2, users, d_max);
        let symbols = random_symbols(&mut rng, 2, users, n);
        let signals = ofdm_waveform(&symbols, mu, d_max, &dft).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            let obs = ofdm_transmit_receive(&ch, i, &signals, 2, mu, 0.0, None, &mut rng, &dft).unwrap();
            for (t, sym) in symbols.iter().enumerate() {
                let model = frequency_model(&ch, i, sym, &dft).unwrap();
                let num: f64 = obs[t].iter().zip(&model).map(|(a, b)| (a - b).norm_sqr()).sum();
                let den: f64 = model.iter().map(|v| v.norm_sqr()).sum();
                worst = worst.max((num / den).sqrt());
            }
        }
        worst
    }

    #[test]
    fn waveform_matches_frequency_model() {
        for seed in 0..10 {
            assert!(max_model_error(6, 6, seed) < 1e-9);
            assert!(max_model_error(8, 5, seed) < 1e-9);
        }
        assert!(max_model_error(3, 6, 0) > 1e-3);
    }

    #[test]
    fn ofdm_ls_exact_without_noise() {
        let cfg = OfdmConfig { n: 32, mu: 5, tau_a: 1, tau_p: 2, tau_f: 10 };
        let mut rng = RandomStream::new(1, "ofdm-ls");
        let (users, d_max) = (3, 5);
        let dft = Dft::new(32).unwrap();
        let ch = random_channel(&mut rng, 2, users, d_max);
        let pilots = make_ofdm_pilots(users, d_max, &cfg, 0.7).unwrap();
        let signals = ofdm_waveform(&pilots.symbols, cfg.mu, d_max, &dft).unwrap();
        for i in 0..2 {
            let obs = ofdm_transmit_receive(&ch, i, &signals, 2, cfg.mu, 0.0, None, &mut rng, &dft).unwrap();
            let h = ofdm_ls_estimate(&obs, &pilots, &dft).unwrap();
            for (a, b) in h.iter().zip(&ch.taps[i]) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn ofdm_ls_mse_matches_theory() {
        let cfg = OfdmConfig { n: 32, mu: 5, tau_a: 1, tau_p: 2, tau_f: 10 };
        let mut rng = RandomStream::new(2, "ofdm-mse");
        let (users, d_max, power, noise) = (3, 5, 0.5, 0.4);
        let dft = Dft::new(32).unwrap();
        let ch = random_channel(&mut rng, 1, users, d_max);
        let pilots = make_ofdm_pilots(users, d_max, &cfg, power).unwrap();
        let signals = ofdm_waveform(&pilots.symbols, cfg.mu, d_max, &dft).unwrap();
        let trials = 3000;
        let mut acc = 0.0;
        for _ in 0..trials {
            let obs = ofdm_transmit_receive(&ch, 0, &signals, 2, cfg.mu, noise, None, &mut rng, &dft).unwrap();
            let h = ofdm_ls_estimate(&obs, &pilots, &dft).unwrap();
            acc += h.iter().zip(&ch.taps[0]).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
        }
        let expect = noise * (users * (d_max + 1)) as f64 / (2.0 * 32.0 * power);
        assert!((acc / trials as f64 / expect - 1.0).abs() < 0.05);
    }

    #[test]
    fn scalar_subcarrier_sinr() {
        let g = Complex64::new(0.2, 0.1);
        let s = mmse_per_subcarrier(&[vec![g]], &[0.01], 3.0).unwrap();
        assert!((s[0] - 3.0 * 0.05 / 0.01).abs() < 1e-9);
        // CP penalty on a flat channel
        let r = ofdm_rate(&vec![s[0]; 256], 20);
        assert!((r - (256.0 / 276.0) * (1.0 + s[0]).log2()).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_direct_solve_and_beats_random() {
        let mut rng = RandomStream::new(3, "ofdm-mmse");
        for _ in 0..5 {
            let (q, users) = (5, 3);
            let h: Vec<Vec<Complex64>> = (0..users).map(|_| (0..q).map(|_| rng.cscg(1.0)).collect()).collect();
            let noise: Vec<f64> = (0..q).map(|_| rng.uniform(0.1, 1.0)).collect();
            let sinr = mmse_per_subcarrier(&h, &noise, 0.8).unwrap();
            for k in 0..users {
                let mut cov = crate::numerics::DiagPlusLowRank::new(noise.clone(), 0.8);
                for (j, hj) in h.iter().enumerate() {
                    if j != k {
                        cov.push(hj.clone());
                    }
                }
                let u = cov.factor().unwrap().solve(&h[k]).unwrap();
                let direct = 0.8 * crate::numerics::inner(&h[k], &u).re;
                assert!((direct - sinr[k]).abs() <= 1e-9 * direct);
                assert!((subcarrier_sinr(&h, &noise, 0.8, k, &u) - direct).abs() <= 1e-9 * direct);
                for _ in 0..2000 {
                    let v: Vec<Complex64> = (0..q).map(|_| rng.cscg(1.0)).collect();
                    assert!(subcarrier_sinr(&h, &noise, 0.8, k, &v) <= sinr[k] * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn mismatched_design_is_evaluated_on_truth() {
        let mut rng = RandomStream::new(4, "ofdm-mismatch");
        let (q, users, power) = (4, 2, 1.0);
        let truth: Vec<Vec<Complex64>> = (0..users).map(|_| (0..q).map(|_| rng.cscg(1.0)).collect()).collect();
        let design: Vec<Vec<Complex64>> = truth.iter().map(|h| h.iter().map(|v| v + rng.cscg(0.3)).collect()).collect();
        let noise = vec![0.2; q];
        let mut acc = SubcarrierMmse::new(users, 1, power);
        for i in 0..q {
            let d: Vec<Vec<Complex64>> = design.iter().map(|h| vec![h[i]]).collect();
            let t: Vec<Vec<Complex64>> = truth.iter().map(|h| vec![h[i]]).collect();
            acc.add_stream(&d, &t, noise[i]);
        }
        let got = acc.sinr().unwrap();
        let best = mmse_per_subcarrier(&truth, &noise, power).unwrap();
        for k in 0..users {
            let mut cov = crate::numerics::DiagPlusLowRank::new(noise.clone(), power);
            for (j, hj) in design.iter().enumerate() {
                if j != k {
                    cov.push(hj.clone());
                }
            }
            let u = cov.factor().unwrap().solve(&design[k]).unwrap();
            let direct = subcarrier_sinr(&truth, &noise, power, k, &u);
            assert!((got[k][0] - direct).abs() <= 1e-9 * direct);
            assert!(got[k][0] <= best[k] * (1.0 + 1e-12));
        }
    }
}
