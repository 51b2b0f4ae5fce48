//! Lens-array receive chain at the central unit.
//!
//! Streams are delay compensated per user: every stream is advanced by the
//! delay of that user's strongest path on it, so the user's dominant
//! component lines up at offset zero across streams and the remaining taps
//! become inter-symbol or inter-user interference. With perfect CSI an MMSE
//! combiner over all streams is applied; with estimated CSI the CU uses
//! Zadoff-Chu pilots, keeps only streams whose estimated strongest tap
//! clears a threshold, and builds a reduced MMSE combiner from thresholded
//! estimates.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::channel::{StreamChannel, UserSignals};
use crate::numerics::{inner, DiagPlusLowRank, NumericsError, RandomStream};
use crate::quantizer::UniformQuantizer;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LensError {
    #[error("pilot length {t_p} is below K (d_max + 1) = {required}")]
    PilotTooShort { t_p: usize, required: usize },
    #[error("pilot observation has {actual} samples, expected {expected}")]
    ObservationLength { expected: usize, actual: usize },
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Frame timing in symbols: probing, pilots, data and two guard intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameConfig {
    pub t_a: usize,
    pub t_p: usize,
    pub t_f: usize,
    pub d_max: usize,
}

impl FrameConfig {
    /// Probing of `n + d_max` symbols and minimum-length pilots.
    pub fn new(num_users: usize, d_max: usize, n_subcarriers: usize, t_f: usize) -> Result<Self, LensError> {
        let frame = Self { t_a: n_subcarriers + d_max, t_p: num_users * (d_max + 1), t_f, d_max };
        frame.validate()?;
        Ok(frame)
    }

    pub fn validate(&self) -> Result<(), LensError> {
        if self.t_a < self.d_max + 1 {
            return Err(LensError::InvalidFrame(format!("t_a = {} shorter than d_max + 1", self.t_a)));
        }
        if self.t_a + self.t_p + 2 * self.d_max >= self.t_f {
            return Err(LensError::InvalidFrame(format!("no data symbols left in a frame of {}", self.t_f)));
        }
        Ok(())
    }

    /// Data symbols per frame.
    pub fn t_d(&self) -> usize {
        self.t_f - self.t_a - self.t_p - 2 * self.d_max
    }

    /// Fraction of the frame left for data.
    pub fn overhead_prefactor(&self) -> f64 {
        1.0 - (self.t_a + self.t_p + 2 * self.d_max) as f64 / self.t_f as f64
    }
}

/// Zadoff-Chu sequence of the given root and length.
pub fn zadoff_chu(root: usize, len: usize) -> Vec<Complex64> {
    let (u, n) = (root as f64, len as f64);
    (0..len)
        .map(|i| {
            let i = i as f64;
            let arg = if len.is_multiple_of(2) { PI * u * i * i / n } else { PI * u * i * (i + 1.0) / n };
            Complex64::from_polar(1.0, -arg)
        })
        .collect()
}

/// Per-user unit-modulus pilots: cyclic shifts of one Zadoff-Chu root.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBlock {
    pub d_max: usize,
    pub power: f64,
    pub sequences: Vec<Vec<Complex64>>,
}

pub fn make_pilots(num_users: usize, d_max: usize, t_p: usize, power: f64) -> Result<PilotBlock, LensError> {
    let required = num_users * (d_max + 1);
    if t_p < required || t_p == 0 {
        return Err(LensError::PilotTooShort { t_p, required });
    }
    let root = zadoff_chu(1, t_p);
    let sequences = (0..num_users)
        .map(|k| {
            let shift = k * (d_max + 1);
            (0..t_p).map(|n| root[(n + t_p - shift) % t_p]).collect()
        })
        .collect();
    Ok(PilotBlock { d_max, power, sequences })
}

impl PilotBlock {
    pub fn len(&self) -> usize {
        self.sequences.first().map_or(0, |s| s.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_users(&self) -> usize {
        self.sequences.len()
    }

    /// Transmitted pilot waveforms with a `d_max`-symbol cyclic prefix.
    pub fn signals(&self) -> UserSignals {
        let amp = self.power.sqrt();
        let t_p = self.len();
        let samples = self
            .sequences
            .iter()
            .map(|s| (0..t_p + self.d_max).map(|n| amp * s[(n + t_p - self.d_max) % t_p]).collect())
            .collect();
        UserSignals { history: self.d_max, samples }
    }

    /// Column `(k, d)` of the pilot matrix: user k's sequence circularly delayed by d, times sqrt(P).
    pub fn column(&self, k: usize, d: usize) -> Vec<Complex64> {
        let t_p = self.len();
        let amp = self.power.sqrt();
        (0..t_p).map(|n| amp * self.sequences[k][(n + t_p - d) % t_p]).collect()
    }

    /// `X^H X` over all `K (d_max + 1)` columns.
    pub fn gram(&self) -> Vec<Vec<Complex64>> {
        let cols: Vec<Vec<Complex64>> = (0..self.num_users())
            .flat_map(|k| (0..=self.d_max).map(move |d| (k, d)))
            .map(|(k, d)| self.column(k, d))
            .collect();
        cols.iter().map(|a| cols.iter().map(|b| inner(a, b)).collect()).collect()
    }
}

/// Received pilot block on one stream after CP removal, with AWGN and optional quantization.
pub fn pilot_observation(
    channel: &StreamChannel,
    stream: usize,
    pilots: &UserSignals,
    noise_var: f64,
    quantizer: Option<&UniformQuantizer>,
    rng: &mut RandomStream,
) -> Vec<Complex64> {
    let mut y = channel.receive(stream, pilots);
    if noise_var > 0.0 {
        for v in &mut y {
            *v += rng.cscg(noise_var);
        }
    }
    if let Some(q) = quantizer {
        q.quantize_block(&mut y);
    }
    y
}

/// Correlator LS estimate `h_hat = X^H y / (P T_p)` of all `K (d_max + 1)` taps.
pub fn ls_estimate(y: &[Complex64], pilots: &PilotBlock) -> Result<Vec<Complex64>, LensError> {
    let t_p = pilots.len();
    if y.len() != t_p {
        return Err(LensError::ObservationLength { expected: t_p, actual: y.len() });
    }
    let scale = 1.0 / (pilots.power.sqrt() * t_p as f64);
    let mut h = Vec::with_capacity(pilots.num_users() * (pilots.d_max + 1));
    for s in &pilots.sequences {
        for d in 0..=pilots.d_max {
            let mut acc = Complex64::new(0.0, 0.0);
            for (n, yn) in y.iter().enumerate() {
                acc += s[(n + t_p - d) % t_p].conj() * yn;
            }
            h.push(acc * scale);
        }
    }
    Ok(h)
}

fn argmax_abs(v: &[Complex64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        // strict comparison keeps the smallest index on ties
        if x.norm_sqr() > v[best].norm_sqr() {
            best = i;
        }
    }
    best
}

/// Delay of the largest-magnitude estimated tap, `[stream][user]`.
pub fn estimate_strongest_delays(h_hat: &[Vec<Complex64>], num_users: usize, d_max: usize) -> Vec<Vec<usize>> {
    let w = d_max + 1;
    h_hat.iter().map(|h| (0..num_users).map(|k| argmax_abs(&h[k * w..(k + 1) * w])).collect()).collect()
}

/// True strongest-path delays `[stream][user]`; ties go to the first path.
pub fn strongest_path_delays(channel: &StreamChannel) -> Vec<Vec<usize>> {
    channel
        .path_coeffs
        .iter()
        .map(|per_user| {
            per_user
                .iter()
                .map(|paths| {
                    let mut best: Option<(f64, usize)> = None;
                    for (c, d) in paths {
                        if best.is_none_or(|(g, _)| c.norm_sqr() > g) {
                            best = Some((c.norm_sqr(), *d));
                        }
                    }
                    best.map_or(0, |(_, d)| d)
                })
                .collect()
        })
        .collect()
}

/// Streams per user whose estimated strongest tap has post-quantization
/// SNR of at least `eta`; falls back to the single strongest stream.
pub fn select_streams(
    h_hat: &[Vec<Complex64>],
    delays: &[Vec<usize>],
    eta: f64,
    power: f64,
    noise: &[f64],
    d_max: usize,
) -> Vec<Vec<usize>> {
    let num_users = delays.first().map_or(0, |d| d.len());
    let w = d_max + 1;
    (0..num_users)
        .map(|k| {
            let gain = |i: usize| h_hat[i][k * w + delays[i][k]].norm_sqr();
            let chosen: Vec<usize> = (0..h_hat.len()).filter(|&i| power * gain(i) / noise[i] >= eta).collect();
            if !chosen.is_empty() || h_hat.is_empty() {
                return chosen;
            }
            let mut best = 0;
            for i in 1..h_hat.len() {
                if gain(i) > gain(best) {
                    best = i;
                }
            }
            vec![best]
        })
        .collect()
}

/// Delay-compensated channel seen by one reference user on a set of streams.
///
/// `vectors[k' * (2 d_max + 1) + (nu + d_max)]` holds, over the listed
/// streams, the coefficient of user `k'` at delay offset `nu` from the
/// reference delay of each stream.
#[derive(Debug, Clone, PartialEq)]
pub struct CompensatedChannel {
    pub user: usize,
    pub num_users: usize,
    pub d_max: usize,
    pub streams: Vec<usize>,
    pub vectors: Vec<Vec<Complex64>>,
}

impl CompensatedChannel {
    fn zeros(user: usize, num_users: usize, d_max: usize, streams: &[usize]) -> Self {
        let offsets = 2 * d_max + 1;
        Self {
            user,
            num_users,
            d_max,
            streams: streams.to_vec(),
            vectors: vec![vec![Complex64::new(0.0, 0.0); streams.len()]; num_users * offsets],
        }
    }

    fn slot(&self, user: usize, nu: isize) -> usize {
        user * (2 * self.d_max + 1) + (nu + self.d_max as isize) as usize
    }

    pub fn get(&self, user: usize, nu: isize) -> &[Complex64] {
        &self.vectors[self.slot(user, nu)]
    }

    /// Coefficient vector of the reference user at offset zero.
    pub fn desired(&self) -> &[Complex64] {
        self.get(self.user, 0)
    }

    /// All offset/user pairs except the desired one.
    pub fn interference(&self) -> impl Iterator<Item = &[Complex64]> {
        let skip = self.slot(self.user, 0);
        self.vectors.iter().enumerate().filter(move |(j, _)| *j != skip).map(|(_, v)| v.as_slice())
    }
}

/// Re-indexes taps to offsets from `reference[j]`, the reference delay of
/// listed stream `streams[j]`. Taps are `[stream][k (d_max + 1) + d]`.
pub fn delay_compensate(
    taps: &[Vec<Complex64>],
    streams: &[usize],
    reference: &[usize],
    user: usize,
    num_users: usize,
    d_max: usize,
) -> CompensatedChannel {
    let mut out = CompensatedChannel::zeros(user, num_users, d_max, streams);
    let w = d_max + 1;
    for (j, (&i, &d_ref)) in streams.iter().zip(reference).enumerate() {
        for kp in 0..num_users {
            for d in 0..w {
                let h = taps[i][kp * w + d];
                if h.re != 0.0 || h.im != 0.0 {
                    let slot = out.slot(kp, d as isize - d_ref as isize);
                    out.vectors[slot][j] = h;
                }
            }
        }
    }
    out
}

/// Thresholded estimates on the selected streams of one user. The
/// reference user's own offset-zero estimate is always kept so a fallback
/// stream below threshold still carries the desired signal.
#[allow(clippy::too_many_arguments)]
pub fn threshold_estimates(
    h_hat: &[Vec<Complex64>],
    delays: &[Vec<usize>],
    streams: &[usize],
    user: usize,
    eta: f64,
    power: f64,
    noise: &[f64],
    num_users: usize,
    d_max: usize,
) -> CompensatedChannel {
    let reference: Vec<usize> = streams.iter().map(|&i| delays[i][user]).collect();
    let mut out = delay_compensate(h_hat, streams, &reference, user, num_users, d_max);
    let keep_slot = out.slot(user, 0);
    for (slot, v) in out.vectors.iter_mut().enumerate() {
        if slot == keep_slot {
            continue;
        }
        for (j, &i) in streams.iter().enumerate() {
            if power * v[j].norm_sqr() / noise[i] < eta {
                v[j] = Complex64::new(0.0, 0.0);
            }
        }
    }
    out
}

fn covariance(view: &CompensatedChannel, noise: &[f64], power: f64) -> DiagPlusLowRank {
    let diag: Vec<f64> = view.streams.iter().map(|&i| noise[i]).collect();
    let mut cov = DiagPlusLowRank::new(diag, power);
    for g in view.interference() {
        cov.push(g.to_vec());
    }
    cov
}

/// SINR of beamformer `u` (over the view's streams) against the given channel.
pub fn evaluate_sinr(view: &CompensatedChannel, noise: &[f64], power: f64, u: &[Complex64]) -> f64 {
    let signal = power * inner(u, view.desired()).norm_sqr();
    let denom = covariance(view, noise, power).quad_form(u);
    if signal == 0.0 {
        0.0
    } else {
        signal / denom
    }
}

/// MMSE combiner and its SINR `P h^H C^{-1} h`.
pub fn mmse_beamformer(
    view: &CompensatedChannel,
    noise: &[f64],
    power: f64,
) -> Result<(Vec<Complex64>, f64), LensError> {
    let cov = covariance(view, noise, power);
    let h = view.desired();
    let u = cov.factor()?.solve(h)?;
    let sinr = power * inner(h, &u).re;
    Ok((u, sinr.max(0.0)))
}

/// Per-user SINR with perfect CSI over all streams of `channel`.
/// `noise[i]` is `sigma^2 + eps_i^2` for stream `i`.
pub fn mmse_perfect(channel: &StreamChannel, noise: &[f64], power: f64) -> Result<Vec<f64>, LensError> {
    let all: Vec<usize> = (0..channel.len()).collect();
    let delays = strongest_path_delays(channel);
    (0..channel.num_users)
        .map(|k| {
            let reference: Vec<usize> = delays.iter().map(|d| d[k]).collect();
            let view = delay_compensate(&channel.taps, &all, &reference, k, channel.num_users, channel.d_max);
            Ok(mmse_beamformer(&view, noise, power)?.1)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedOutcome {
    /// SINR of the estimated combiner evaluated on the true channel.
    pub sinr: Vec<f64>,
    /// Selected streams per user.
    pub streams: Vec<Vec<usize>>,
}

/// Reduced approximate MMSE from LS estimates `h_hat[stream]`.
pub fn mmse_reduced(
    channel: &StreamChannel,
    h_hat: &[Vec<Complex64>],
    noise: &[f64],
    power: f64,
    eta: f64,
) -> Result<ReducedOutcome, LensError> {
    let (num_users, d_max) = (channel.num_users, channel.d_max);
    let delays = estimate_strongest_delays(h_hat, num_users, d_max);
    let streams = select_streams(h_hat, &delays, eta, power, noise, d_max);
    let mut sinr = Vec::with_capacity(num_users);
    for (k, selected) in streams.iter().enumerate() {
        let est = threshold_estimates(h_hat, &delays, selected, k, eta, power, noise, num_users, d_max);
        let reference: Vec<usize> = selected.iter().map(|&i| delays[i][k]).collect();
        let truth = delay_compensate(&channel.taps, selected, &reference, k, num_users, d_max);
        let (u, _) = mmse_beamformer(&est, noise, power)?;
        sinr.push(evaluate_sinr(&truth, noise, power, &u));
    }
    Ok(ReducedOutcome { sinr, streams })
}

pub fn sum_rate(sinr: &[f64]) -> f64 {
    sinr.iter().map(|g| (1.0 + g).log2()).sum()
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::arrays::UpaGeometry;
    use crate::channel::{stream_taps, Path, PathSet, Stream};

    const C0: Complex64 = Complex64::new(0.0, 0.0);

    fn taps_channel(taps: Vec<Vec<Complex64>>, num_users: usize, d_max: usize) -> StreamChannel {
        let n = taps.len();
        let path_coeffs = taps
            .iter()
            .map(|h| {
                (0..num_users)
                    .map(|k| {
                        (0..=d_max)
                            .filter(|&d| h[k * (d_max + 1) + d] != C0)
                            .map(|d| (h[k * (d_max + 1) + d], d))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        StreamChannel { d_max, num_users, streams: (0..n).map(|i| Stream::facing(0, i)).collect(), taps, path_coeffs }
    }

    fn random_channel(
        rng: &mut RandomStream,
        streams: usize,
        users: usize,
        d_max: usize,
        density: f64,
    ) -> StreamChannel {
        let taps = (0..streams)
            .map(|_| {
                (0..users * (d_max + 1))
                    .map(|_| if rng.uniform(0.0, 1.0) < density { rng.cscg(1.0) } else { C0 })
                    .collect()
            })
            .collect();
        taps_channel(taps, users, d_max)
    }

    #[test]
    fn frame_arithmetic() {
        let f = FrameConfig::new(6, 20, 256, 8280).unwrap();
        assert_eq!((f.t_a, f.t_p, f.t_d()), (276, 126, 8280 - 442));
        assert!((f.overhead_prefactor() - (1.0 - 442.0 / 8280.0)).abs() < 1e-15);
        assert!((f.overhead_prefactor() - 0.9466).abs() < 1e-4);
        assert!(FrameConfig::new(6, 20, 256, 400).is_err());
    }

    #[test]
    fn pilot_gram_is_scaled_identity() {
        let p = make_pilots(6, 20, 126, 0.2).unwrap();
        assert_eq!(p.len(), 126);
        let g = p.gram();
        let c = 0.2 * 126.0;
        for (a, row) in g.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                let want = if a == b { c } else { 0.0 };
                assert!((v - want).norm() <= 1e-10 * c, "({a},{b}) = {v}");
            }
        }
        assert!(p.sequences.iter().flatten().all(|s| (s.norm() - 1.0).abs() < 1e-12));
        assert_eq!(make_pilots(6, 20, 125, 1.0), Err(LensError::PilotTooShort { t_p: 125, required: 126 }));
    }

    #[test]
    fn single_user_autocorrelation() {
        let p = make_pilots(1, 20, 63, 1.0).unwrap();
        let c0 = p.column(0, 0);
        assert!((inner(&c0, &c0).re - 63.0).abs() < 1e-10);
        for d in 1..=20 {
            assert!(inner(&c0, &p.column(0, d)).norm() < 1e-10);
        }
    }

    #[test]
    fn ls_recovers_noiseless_taps() {
        let mut rng = RandomStream::new(4, "ls-noiseless");
        let ch = random_channel(&mut rng, 3, 4, 6, 0.4);
        let pilots = make_pilots(4, 6, 28, 0.5).unwrap();
        let signals = pilots.signals();
        for i in 0..3 {
            let y = pilot_observation(&ch, i, &signals, 0.0, None, &mut rng);
            let h = ls_estimate(&y, &pilots).unwrap();
            for (a, b) in h.iter().zip(&ch.taps[i]) {
                assert!((a - b).norm() < 1e-12);
            }
        }
        assert!(ls_estimate(&[C0; 5], &pilots).is_err());
    }

    fn ls_mse(t_p: usize, trials: usize) -> f64 {
        let (users, d_max, power, noise) = (2, 5, 1.0, 0.3);
        let mut rng = RandomStream::new(17, format!("ls-mse-{t_p}"));
        let ch = random_channel(&mut rng, 1, users, d_max, 0.5);
        let pilots = make_pilots(users, d_max, t_p, power).unwrap();
        let signals = pilots.signals();
        let mut acc = 0.0;
        for _ in 0..trials {
            let y = pilot_observation(&ch, 0, &signals, noise, None, &mut rng);
            let h = ls_estimate(&y, &pilots).unwrap();
            acc += h.iter().zip(&ch.taps[0]).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
        }
        acc / trials as f64
    }

    #[test]
    fn ls_mse_matches_theory_and_halves_with_pilot_length() {
        let short = ls_mse(12, 4000);
        let expect = 0.3 * 12.0 / 12.0;
        assert!((short / expect - 1.0).abs() < 0.05, "{short} vs {expect}");
        let long = ls_mse(24, 4000);
        assert!((short / long - 2.0).abs() < 0.15);
    }

    #[test]
    fn strongest_delay_examples() {
        let mut h = vec![C0; 2 * 11];
        h[7] = Complex64::new(0.0, 1.0);
        h[11 + 2] = Complex64::new(1.0, 0.0);
        h[11 + 9] = Complex64::new(0.3, 0.0);
        assert_eq!(estimate_strongest_delays(&[h], 2, 10), vec![vec![7, 2]]);
        // ties go to the smaller delay; all-zero picks delay 0
        let mut t = vec![C0; 11];
        t[4] = Complex64::new(1.0, 0.0);
        t[6] = Complex64::new(0.0, -1.0);
        assert_eq!(estimate_strongest_delays(&[t, vec![C0; 11]], 1, 10), vec![vec![4], vec![0]]);

        let mut rng = RandomStream::new(8, "delay-mc");
        let mut hits = 0;
        for _ in 0..5000 {
            let mut t: Vec<Complex64> = (0..11).map(|_| rng.cscg(1e-4)).collect();
            t[2] += 1.0;
            t[9] += 0.3;
            hits += (estimate_strongest_delays(&[t], 1, 10)[0][0] == 2) as usize;
        }
        assert!(hits as f64 / 5000.0 >= 0.999);
    }

    #[test]
    fn stream_selection_threshold_and_fallback() {
        let h = vec![vec![Complex64::new(10f64.sqrt(), 0.0)], vec![Complex64::new(0.5, 0.0)]];
        let delays = vec![vec![0], vec![0]];
        assert_eq!(select_streams(&h, &delays, 2.0, 1.0, &[1.0, 1.0], 0), vec![vec![0]]);
        // nothing clears the bar: keep the strongest only
        assert_eq!(select_streams(&h, &delays, 100.0, 1.0, &[1.0, 1.0], 0), vec![vec![0]]);
        // exactly at threshold counts as passing
        assert_eq!(select_streams(&h, &delays, 0.25, 1.0, &[1.0, 1.0], 0), vec![vec![0, 1]]);
    }

    #[test]
    fn thresholding_rules() {
        let d_max = 2;
        // stream 0, users 0 and 1, taps d = 0..2
        let h = vec![vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, 0.9),
            C0,
            Complex64::new(3.0, 0.0),
        ]];
        let delays = vec![vec![0, 2]];
        let est = threshold_estimates(&h, &delays, &[0], 1, 1.0, 1.0, &[1.0], 2, d_max);
        // reference delay 2 for user 1; user-0 tap 0 sits at offset -2
        assert_eq!(est.get(0, -2)[0], Complex64::new(2.0, 0.0));
        assert_eq!(est.get(0, -1)[0], Complex64::new(1.0, 0.0));
        assert_eq!(est.get(0, 0)[0], C0);
        assert_eq!(est.get(1, -2)[0], C0);
        assert_eq!(est.get(1, 0)[0], Complex64::new(3.0, 0.0));
        // no tap exists at offsets +1, +2 relative to delay 2
        assert_eq!(est.get(1, 1)[0], C0);
        assert_eq!(est.get(1, 2)[0], C0);
    }

    #[test]
    fn delay_compensation_examples() {
        let d_max = 6;
        let mut taps = vec![C0; d_max + 1];
        taps[3] = Complex64::new(0.7, 0.1);
        taps[5] = Complex64::new(0.2, -0.3);
        let ch = taps_channel(vec![taps], 1, d_max);
        let refs = strongest_path_delays(&ch);
        assert_eq!(refs, vec![vec![3]]);
        let view = delay_compensate(&ch.taps, &[0], &[3], 0, 1, d_max);
        assert_eq!(view.desired()[0], Complex64::new(0.7, 0.1));
        assert_eq!(view.get(0, 2)[0], Complex64::new(0.2, -0.3));
        let total: f64 = (-(d_max as isize)..=d_max as isize).map(|nu| view.get(0, nu)[0].norm_sqr()).sum();
        assert!((total - 0.5 - 0.13).abs() < 1e-15);
    }

    #[test]
    fn compensated_view_resynthesizes_shifted_output() {
        let mut rng = RandomStream::new(2, "resynth");
        let (users, d_max, len) = (3, 4, 40);
        let ch = random_channel(&mut rng, 2, users, d_max, 0.5);
        let signals = UserSignals {
            history: 2 * d_max,
            samples: (0..users).map(|_| (0..len + 3 * d_max).map(|_| rng.cscg(1.0)).collect()).collect(),
        };
        let x = |k: usize, n: isize| signals.samples[k][(n + signals.history as isize) as usize];
        for i in 0..2 {
            let y = ch.receive(i, &signals);
            for (k, d_ref) in [(0usize, 1usize), (2, 3)] {
                let view = delay_compensate(&ch.taps, &[i], &[d_ref], k, users, d_max);
                // y[n + d_ref] = sum_{k', nu} hbar[nu] x_{k'}[n - nu]
                for n in 0..(len - d_ref) as isize {
                    let mut acc = C0;
                    for kp in 0..users {
                        for nu in -(d_max as isize)..=d_max as isize {
                            acc += view.get(kp, nu)[0] * x(kp, n - nu);
                        }
                    }
                    assert!((acc - y[n as usize + d_ref]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn energy_conserved_with_distinct_delays() {
        let cfg = crate::channel::ScenarioConfig::default();
        let drop = crate::channel::generate_drop(&cfg, 0, &RandomStream::new(5, "drop-0")).unwrap();
        let upa = UpaGeometry::new(10.0, 10.0);
        let ch = stream_taps(&drop.paths, &upa, &[Stream::facing(2, 11), Stream::facing(4, 399)]);
        let refs = strongest_path_delays(&ch);
        for k in 0..6 {
            let r: Vec<usize> = refs.iter().map(|d| d[k]).collect();
            let view = delay_compensate(&ch.taps, &[0, 1], &r, k, 6, ch.d_max);
            for kp in 0..6 {
                for j in 0..2 {
                    let comp: f64 = (-20..=20).map(|nu| view.get(kp, nu)[j].norm_sqr()).sum();
                    let taps: f64 = ch.user_taps(j, kp).iter().map(|h| h.norm_sqr()).sum();
                    assert!((comp - taps).abs() <= 1e-12 * taps.max(1e-300));
                }
            }
        }
    }

    #[test]
    fn scalar_mmse_and_scaling_invariance() {
        let g = Complex64::new(0.3, -0.4);
        let ch = taps_channel(vec![vec![g]], 1, 0);
        let sinr = mmse_perfect(&ch, &[0.1], 2.0).unwrap();
        assert!((sinr[0] - 2.0 * 0.25 / 0.1).abs() < 1e-12);

        let mut rng = RandomStream::new(6, "scale");
        let ch = random_channel(&mut rng, 4, 2, 2, 0.6);
        let noise = [0.2, 0.3, 0.1, 0.5];
        let view = delay_compensate(&ch.taps, &[0, 1, 2, 3], &[0, 1, 2, 0], 1, 2, 2);
        let u: Vec<Complex64> = (0..4).map(|_| rng.cscg(1.0)).collect();
        let s = evaluate_sinr(&view, &noise, 1.0, &u);
        let scaled: Vec<Complex64> = u.iter().map(|v| v * Complex64::new(-3.0, 0.5)).collect();
        assert!((evaluate_sinr(&view, &noise, 1.0, &scaled) - s).abs() <= 1e-12 * s);
    }

    #[test]
    fn mmse_beats_random_beamformers() {
        let mut rng = RandomStream::new(9, "mmse-opt");
        for _ in 0..5 {
            let ch = random_channel(&mut rng, 4, 2, 3, 0.5);
            let noise: Vec<f64> = (0..4).map(|_| rng.uniform(0.05, 0.5)).collect();
            let refs = strongest_path_delays(&ch);
            for k in 0..2 {
                let r: Vec<usize> = refs.iter().map(|d| d[k]).collect();
                let view = delay_compensate(&ch.taps, &[0, 1, 2, 3], &r, k, 2, 3);
                let (u, best) = mmse_beamformer(&view, &noise, 1.0).unwrap();
                assert!((evaluate_sinr(&view, &noise, 1.0, &u) - best).abs() <= 1e-9 * best);
                for _ in 0..2000 {
                    let v: Vec<Complex64> = (0..4).map(|_| rng.cscg(1.0)).collect();
                    assert!(evaluate_sinr(&view, &noise, 1.0, &v) <= best * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn reduced_mmse_degenerates_to_full_and_never_exceeds_it() {
        let mut rng = RandomStream::new(10, "reduced");
        let ch = random_channel(&mut rng, 5, 3, 4, 0.4);
        let noise = vec![0.05; 5];
        let full = mmse_perfect(&ch, &noise, 1.0).unwrap();
        // perfect estimates, zero threshold: every stream and every coefficient kept
        let reduced = mmse_reduced(&ch, &ch.taps, &noise, 1.0, 0.0).unwrap();
        let refs_est = estimate_strongest_delays(&ch.taps, 3, 4);
        let refs_true = strongest_path_delays(&ch);
        assert_eq!(refs_est, refs_true);
        for k in 0..3 {
            assert_eq!(reduced.streams[k], vec![0, 1, 2, 3, 4]);
            assert!((reduced.sinr[k] - full[k]).abs() <= 1e-9 * full[k]);
        }

        for trial in 0..20 {
            let ch = random_channel(&mut rng, 6, 3, 4, 0.3);
            let noise = vec![0.1; 6];
            let pilots = make_pilots(3, 4, 15, 1.0).unwrap();
            let signals = pilots.signals();
            let h_hat: Vec<Vec<Complex64>> = (0..6)
                .map(|i| ls_estimate(&pilot_observation(&ch, i, &signals, 0.1, None, &mut rng), &pilots).unwrap())
                .collect();
            let est = mmse_reduced(&ch, &h_hat, &noise, 1.0, 2.0).unwrap();
            // compare against the full MMSE on the same references and streams
            let delays = estimate_strongest_delays(&h_hat, 3, 4);
            for k in 0..3 {
                assert!(!est.streams[k].is_empty());
                let r: Vec<usize> = est.streams[k].iter().map(|&i| delays[i][k]).collect();
                let truth = delay_compensate(&ch.taps, &est.streams[k], &r, k, 3, 4);
                let (_, bound) = mmse_beamformer(&truth, &noise, 1.0).unwrap();
                assert!(est.sinr[k] <= bound * (1.0 + 1e-9), "trial {trial} user {k}");
            }
        }
    }

    #[test]
    fn high_snr_estimates_approach_perfect_rates() {
        let mut rng = RandomStream::new(12, "consistency");
        let ch = random_channel(&mut rng, 4, 2, 3, 0.4);
        let noise = vec![1e-6; 4];
        let pilots = make_pilots(2, 3, 8, 1.0).unwrap();
        let signals = pilots.signals();
        let h_hat: Vec<Vec<Complex64>> = (0..4)
            .map(|i| ls_estimate(&pilot_observation(&ch, i, &signals, 1e-6, None, &mut rng), &pilots).unwrap())
            .collect();
        let est = mmse_reduced(&ch, &h_hat, &noise, 1.0, 1.0).unwrap();
        let delays = estimate_strongest_delays(&h_hat, 2, 3);
        for k in 0..2 {
            let r: Vec<usize> = est.streams[k].iter().map(|&i| delays[i][k]).collect();
            let truth = delay_compensate(&ch.taps, &est.streams[k], &r, k, 2, 3);
            let (_, bound) = mmse_beamformer(&truth, &noise, 1.0).unwrap();
            assert!(((1.0 + est.sinr[k]).log2() - (1.0 + bound).log2()).abs() < 0.01);
        }
    }

    #[test]
    fn single_path_lens_like_link() {
        // one stream, one user, one path: no interference terms at all
        let paths = PathSet {
            d_max: 3,
            paths: vec![vec![vec![Path { gain: Complex64::new(0.01, 0.0), delay: 2, theta: 0.0, phi: 0.0 }]]],
        };
        let upa = UpaGeometry::new(10.0, 10.0);
        let ch = stream_taps(&paths, &upa, &[Stream::facing(0, 0)]);
        let sinr = mmse_perfect(&ch, &[1e-6], 1.0).unwrap();
        assert!((sinr[0] - 0.25 * 1e-4 / 1e-6).abs() < 1e-9);
        assert!((sum_rate(&sinr) - (1.0 + sinr[0]).log2()).abs() < 1e-15);
    }
}
