//! Scenario drops and multipath channel realizations.
//!
//! A drop places `M` RRHs on the corners of a hexagon and `K` users inside
//! it, then draws a sparse geometric channel (1 to 3 paths) for every
//! RRH/user pair. Channels are flattened into per-stream tap vectors for any
//! array geometry, so the lens and UPA chains consume the same paths.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arrays::ArrayGeometry;
use crate::numerics::RandomStream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("could not place user {user} at least {min_distance} m from every RRH after {attempts} attempts")]
    Unsatisfiable { user: usize, min_distance: f64, attempts: usize },
}

/// Statistical scenario. Defaults reproduce the desk-scale mmWave cluster:
/// six RRHs on a hexagon of side 50/sqrt(3) m, six users, 28 GHz, 200 MHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// RRH count (M).
    pub num_rrhs: usize,
    /// User count (K).
    pub num_users: usize,
    /// Sectors per RRH (J).
    pub sectors_per_rrh: usize,
    /// Hexagon side, m.
    pub hex_side_m: f64,
    /// RRH antenna height, m.
    pub rrh_height_m: f64,
    /// User height range, m.
    pub user_height_m: (f64, f64),
    /// Minimum ground distance between any user and any RRH, m.
    pub min_ground_distance_m: f64,
    pub carrier_hz: f64,
    /// Bandwidth W, Hz (also the symbol rate).
    pub bandwidth_hz: f64,
    /// Path-count choices and their probabilities.
    pub path_counts: Vec<usize>,
    pub path_count_probs: Vec<f64>,
    /// Delay spread truncation, s. Sets d_max = ceil(truncation * W).
    pub max_delay_s: f64,
    /// Delay distribution mean is `delay_scale * delay_mean_s` (r_zeta * mu_zeta).
    pub delay_mean_s: f64,
    pub delay_scale: f64,
    /// Per-path power decay constant, s.
    pub power_decay_s: f64,
    /// Linear prefactor of the per-path power law.
    pub power_prefactor: f64,
    /// Per-path shadowing standard deviation, dB.
    pub shadowing_db: f64,
    /// Path loss `intercept + slope * log10(d)` dB.
    pub path_loss_intercept_db: f64,
    pub path_loss_slope_db: f64,
    /// Half-widths of the uniform angle perturbations around LoS, rad.
    pub elevation_spread_rad: f64,
    pub azimuth_spread_rad: f64,
    pub noise_psd_dbm_hz: f64,
    pub noise_figure_db: f64,
    /// Inter-sector/inter-cluster interference treated as noise, dBm.
    pub interference_dbm: f64,
    /// Per-user transmit power, dBm.
    pub tx_power_dbm: f64,
    /// Attempts per user before giving up on the min-distance rule.
    pub max_placement_attempts: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_rrhs: 6,
            num_users: 6,
            sectors_per_rrh: 3,
            hex_side_m: 50.0 / 3f64.sqrt(),
            rrh_height_m: 30.0,
            user_height_m: (1.0, 25.0),
            min_ground_distance_m: 2.0,
            carrier_hz: 28e9,
            bandwidth_hz: 200e6,
            path_counts: vec![1, 2, 3],
            path_count_probs: vec![1.0 / 3.0; 3],
            max_delay_s: 100e-9,
            delay_mean_s: 67e-9,
            delay_scale: 0.25,
            power_decay_s: 31.4e-9,
            power_prefactor: 0.613,
            shadowing_db: 9.4,
            path_loss_intercept_db: 61.4,
            path_loss_slope_db: 34.1,
            elevation_spread_rad: PI / 12.0,
            azimuth_spread_rad: PI / 6.0,
            noise_psd_dbm_hz: -174.0,
            noise_figure_db: 6.0,
            interference_dbm: -80.0,
            tx_power_dbm: 23.0,
            max_placement_attempts: 10_000,
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

impl ScenarioConfig {
    /// Maximum tap delay in symbols.
    pub fn d_max(&self) -> usize {
        (self.max_delay_s * self.bandwidth_hz - 1e-9).ceil().max(0.0) as usize
    }

    pub fn tx_power_w(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm)
    }

    pub fn path_loss_db(&self, distance_m: f64) -> f64 {
        path_loss_db(self.path_loss_intercept_db, self.path_loss_slope_db, distance_m)
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let bad = |msg: String| Err(ChannelError::InvalidConfig(msg));
        if self.num_rrhs == 0 || self.num_users == 0 || self.sectors_per_rrh == 0 {
            return bad("num_rrhs, num_users and sectors_per_rrh must be positive".into());
        }
        if self.sectors_per_rrh * self.num_rrhs < self.num_users {
            return bad(format!(
                "sectors_per_rrh * num_rrhs = {} is below num_users = {}",
                self.sectors_per_rrh * self.num_rrhs,
                self.num_users
            ));
        }
        if self.path_counts.is_empty() || self.path_counts.len() != self.path_count_probs.len() {
            return bad("path_counts and path_count_probs must be non-empty and of equal length".into());
        }
        if self.path_counts.contains(&0) {
            return bad("path_counts entries must be at least 1".into());
        }
        let total: f64 = self.path_count_probs.iter().sum();
        if self.path_count_probs.iter().any(|p| *p < 0.0) || (total - 1.0).abs() > 1e-9 {
            return bad("path_count_probs must be non-negative and sum to 1".into());
        }
        if !(self.bandwidth_hz > 0.0 && self.max_delay_s > 0.0 && self.hex_side_m > 0.0) {
            return bad("bandwidth_hz, max_delay_s and hex_side_m must be positive".into());
        }
        let (lo, hi) = self.user_height_m;
        if !(lo <= hi && hi < self.rrh_height_m) {
            return bad("user heights must satisfy lo <= hi < rrh_height_m".into());
        }
        if self.delay_mean_s <= 0.0 || self.delay_scale <= 0.0 || self.power_decay_s <= 0.0 {
            return bad("delay and decay constants must be positive".into());
        }
        Ok(())
    }
}

pub fn path_loss_db(intercept_db: f64, slope_db: f64, distance_m: f64) -> f64 {
    intercept_db + slope_db * distance_m.log10()
}

/// AWGN plus interference power per antenna, watts.
pub fn noise_floor(cfg: &ScenarioConfig) -> f64 {
    let thermal_dbm = cfg.noise_psd_dbm_hz + 10.0 * cfg.bandwidth_hz.log10() + cfg.noise_figure_db;
    dbm_to_watts(thermal_dbm) + dbm_to_watts(cfg.interference_dbm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrhSite {
    pub x: f64,
    pub y: f64,
    pub height: f64,
    /// Boresight azimuth of the sector facing the cluster center, rad.
    pub boresight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserSite {
    pub x: f64,
    pub y: f64,
    pub height: f64,
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub gain: Complex64,
    /// Tap delay, symbols.
    pub delay: usize,
    /// Elevation of arrival, positive below the array horizon, rad.
    pub theta: f64,
    /// Azimuth of arrival relative to the sector boresight, rad.
    pub phi: f64,
}

/// Paths for every (RRH, user) pair, indexed `[m][k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    pub d_max: usize,
    pub paths: Vec<Vec<Vec<Path>>>,
}

impl PathSet {
    pub fn num_rrhs(&self) -> usize {
        self.paths.len()
    }

    pub fn num_users(&self) -> usize {
        self.paths.first().map_or(0, |p| p.len())
    }

    pub fn get(&self, rrh: usize, user: usize) -> &[Path] {
        &self.paths[rrh][user]
    }
}

/// Geometry and channels of one Monte-Carlo drop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Drop {
    pub id: usize,
    pub rrhs: Vec<RrhSite>,
    pub users: Vec<UserSite>,
    /// Sector index (0 = facing the cluster) serving each user at each RRH, `[m][k]`.
    pub sectors: Vec<Vec<usize>>,
    /// Free-space received power, `[m][k]`, watts.
    pub rx_power_w: Vec<Vec<f64>>,
    pub paths: PathSet,
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = (a + PI).rem_euclid(2.0 * PI) - PI;
    if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

fn inside_hexagon(x: f64, y: f64, side: f64) -> bool {
    // flat-top hexagon with corners at angles 0, 60, ..., 300 degrees
    let (ax, ay) = (x.abs(), y.abs());
    let h = side * 3f64.sqrt() / 2.0;
    ay < h && 3f64.sqrt() * ax + ay < 3f64.sqrt() * side
}

fn draw_path_count(cfg: &ScenarioConfig, rng: &mut RandomStream) -> usize {
    let u = rng.uniform(0.0, 1.0);
    let mut acc = 0.0;
    for (count, p) in cfg.path_counts.iter().zip(&cfg.path_count_probs) {
        acc += p;
        if u < acc {
            return *count;
        }
    }
    *cfg.path_counts.last().expect("validated non-empty")
}

/// Exponential delay conditioned on not exceeding the truncation.
fn draw_delay(cfg: &ScenarioConfig, rng: &mut RandomStream) -> f64 {
    let mean = cfg.delay_scale * cfg.delay_mean_s;
    loop {
        let u: f64 = rng.uniform(0.0, 1.0);
        let zeta = -mean * (1.0 - u).ln();
        if zeta <= cfg.max_delay_s {
            return zeta;
        }
    }
}

/// Maps a continuous delay onto the symbol grid.
pub fn delay_to_tap(zeta_s: f64, bandwidth_hz: f64, d_max: usize) -> usize {
    let d = (zeta_s * bandwidth_hz).round();
    d.clamp(0.0, d_max as f64) as usize
}

/// Relative path powers `kappa_bar`, normalized to sum to one.
pub fn relative_powers(shadowing_db: &[f64], delays_s: &[f64], prefactor: f64, decay_s: f64) -> Vec<f64> {
    let kappa: Vec<f64> = shadowing_db
        .iter()
        .zip(delays_s)
        .map(|(z, zeta)| 10f64.powf(z / 10.0) * prefactor * (-zeta / decay_s).exp())
        .collect();
    let total: f64 = kappa.iter().sum();
    kappa.iter().map(|k| k / total).collect()
}

/// Places RRHs and users and draws the multipath channels for one drop.
pub fn generate_drop(cfg: &ScenarioConfig, id: usize, rng: &RandomStream) -> Result<Drop, ChannelError> {
    cfg.validate()?;
    let d_max = cfg.d_max();
    let rrhs: Vec<RrhSite> = (0..cfg.num_rrhs)
        .map(|m| {
            let a = 2.0 * PI * m as f64 / cfg.num_rrhs as f64;
            let (x, y) = (cfg.hex_side_m * a.cos(), cfg.hex_side_m * a.sin());
            RrhSite { x, y, height: cfg.rrh_height_m, boresight: (-y).atan2(-x) }
        })
        .collect();

    let mut geo = rng.substream("geometry");
    let mut users = Vec::with_capacity(cfg.num_users);
    for k in 0..cfg.num_users {
        let mut placed = None;
        for _ in 0..cfg.max_placement_attempts {
            let x = geo.uniform(-cfg.hex_side_m, cfg.hex_side_m);
            let y = geo.uniform(-cfg.hex_side_m, cfg.hex_side_m);
            if !inside_hexagon(x, y, cfg.hex_side_m) {
                continue;
            }
            let far_enough =
                rrhs.iter().all(|r| ((x - r.x).powi(2) + (y - r.y).powi(2)).sqrt() >= cfg.min_ground_distance_m);
            if far_enough {
                placed = Some((x, y));
                break;
            }
        }
        let (x, y) = placed.ok_or(ChannelError::Unsatisfiable {
            user: k,
            min_distance: cfg.min_ground_distance_m,
            attempts: cfg.max_placement_attempts,
        })?;
        let height = geo.uniform(cfg.user_height_m.0, cfg.user_height_m.1);
        users.push(UserSite { x, y, height });
    }

    let sector_width = 2.0 * PI / cfg.sectors_per_rrh as f64;
    let p_tx = cfg.tx_power_w();
    let mut sectors = vec![vec![0; cfg.num_users]; cfg.num_rrhs];
    let mut rx_power_w = vec![vec![0.0; cfg.num_users]; cfg.num_rrhs];
    let mut paths = vec![vec![Vec::new(); cfg.num_users]; cfg.num_rrhs];
    for (m, rrh) in rrhs.iter().enumerate() {
        for (k, user) in users.iter().enumerate() {
            let (dx, dy) = (user.x - rrh.x, user.y - rrh.y);
            let ground = (dx * dx + dy * dy).sqrt();
            let dh = rrh.height - user.height;
            let distance = (ground * ground + dh * dh).sqrt();
            let los_theta = dh.atan2(ground);
            let los_phi = wrap_angle(dy.atan2(dx) - rrh.boresight);
            let sector =
                ((los_phi + sector_width / 2.0).rem_euclid(2.0 * PI) / sector_width) as usize % cfg.sectors_per_rrh;
            sectors[m][k] = sector;
            let pr = p_tx * 10f64.powf(-cfg.path_loss_db(distance) / 10.0);
            rx_power_w[m][k] = pr;

            let mut prng = rng.substream(&format!("paths/m{m}/k{k}"));
            let count = draw_path_count(cfg, &mut prng);
            let delays: Vec<f64> = (0..count).map(|_| draw_delay(cfg, &mut prng)).collect();
            let shadow: Vec<f64> = (0..count).map(|_| cfg.shadowing_db * prng.standard_normal()).collect();
            let kbar = relative_powers(&shadow, &delays, cfg.power_prefactor, cfg.power_decay_s);
            let list: Vec<Path> = (0..count)
                .map(|l| {
                    let gain = Complex64::from_polar((kbar[l] * pr).sqrt(), prng.uniform(0.0, 2.0 * PI));
                    let theta = los_theta + prng.uniform(-cfg.elevation_spread_rad, cfg.elevation_spread_rad);
                    let phi = los_phi + prng.uniform(-cfg.azimuth_spread_rad, cfg.azimuth_spread_rad);
                    Path { gain, delay: delay_to_tap(delays[l], cfg.bandwidth_hz, d_max), theta, phi }
                })
                .collect();
            // only the facing sector's array is simulated; other sectors drop the signal
            if sector == 0 {
                paths[m][k] = list;
            }
        }
    }

    Ok(Drop { id, rrhs, users, sectors, rx_power_w, paths: PathSet { d_max, paths } })
}

/// Writes a human-readable dump of a drop for reproducibility audits.
pub fn write_drop_dump<W: Write>(drop: &Drop, mut out: W) -> io::Result<()> {
    writeln!(out, "# drop {}", drop.id)?;
    writeln!(out, "d_max = {}", drop.paths.d_max)?;
    for (m, r) in drop.rrhs.iter().enumerate() {
        writeln!(out, "rrh {m} x={:.6} y={:.6} h={:.3} boresight={:.6}", r.x, r.y, r.height, r.boresight)?;
    }
    for (k, u) in drop.users.iter().enumerate() {
        writeln!(out, "user {k} x={:.6} y={:.6} h={:.6}", u.x, u.y, u.height)?;
    }
    for (m, per_user) in drop.paths.paths.iter().enumerate() {
        for (k, list) in per_user.iter().enumerate() {
            writeln!(
                out,
                "link m={m} k={k} sector={} rx_power_dbm={:.4} paths={}",
                drop.sectors[m][k],
                watts_to_dbm(drop.rx_power_w[m][k]),
                list.len()
            )?;
            for p in list {
                writeln!(
                    out,
                    "  path gain_re={:.6e} gain_im={:.6e} delay={} theta={:.6} phi={:.6}",
                    p.gain.re, p.gain.im, p.delay, p.theta, p.phi
                )?;
            }
        }
    }
    Ok(())
}

/// A stream is one selected antenna of one sector array of one RRH.
/// Sector 0 faces the cluster; the other sectors only see noise and
/// inter-sector interference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Stream {
    pub rrh: usize,
    pub sector: usize,
    pub antenna: usize,
}

impl Stream {
    pub fn facing(rrh: usize, antenna: usize) -> Self {
        Stream { rrh, sector: 0, antenna }
    }
}

/// Time-domain taps for a set of streams.
///
/// `taps[i]` is the flattened vector `h_i = [h_{i,1}; ...; h_{i,K}]`, each
/// block of length `d_max + 1`. `path_coeffs[i][k]` keeps the individual
/// path coefficients `(alpha * a_q, delay)` in path order.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamChannel {
    pub d_max: usize,
    pub num_users: usize,
    pub streams: Vec<Stream>,
    pub taps: Vec<Vec<Complex64>>,
    pub path_coeffs: Vec<Vec<Vec<(Complex64, usize)>>>,
}

/// Accumulates every path into its tap for the given streams.
pub fn stream_taps(paths: &PathSet, geom: &dyn ArrayGeometry, streams: &[Stream]) -> StreamChannel {
    let (d_max, num_users) = (paths.d_max, paths.num_users());
    let taps_per_user = d_max + 1;
    let mut taps = Vec::with_capacity(streams.len());
    let mut coeffs = Vec::with_capacity(streams.len());
    for s in streams {
        let mut h = vec![Complex64::new(0.0, 0.0); num_users * taps_per_user];
        let mut per_user = Vec::with_capacity(num_users);
        for k in 0..num_users {
            let incident: &[Path] = if s.sector == 0 { paths.get(s.rrh, k) } else { &[] };
            let list: Vec<(Complex64, usize)> =
                incident.iter().map(|p| (p.gain * geom.element_response(s.antenna, p.theta, p.phi), p.delay)).collect();
            for (c, d) in &list {
                h[k * taps_per_user + d] += c;
            }
            per_user.push(list);
        }
        taps.push(h);
        coeffs.push(per_user);
    }
    StreamChannel { d_max, num_users, streams: streams.to_vec(), taps, path_coeffs: coeffs }
}

/// Transmitted user signals with `history` samples preceding time 0.
#[derive(Debug, Clone, PartialEq)]
pub struct UserSignals {
    pub history: usize,
    pub samples: Vec<Vec<Complex64>>,
}

impl UserSignals {
    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, |s| s.len() - self.history)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl StreamChannel {
    pub fn len(&self) -> usize {
        self.streams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.streams.is_empty()
    }

    pub fn user_taps(&self, stream: usize, user: usize) -> &[Complex64] {
        let w = self.d_max + 1;
        &self.taps[stream][user * w..(user + 1) * w]
    }

    /// True when no path reaches the stream.
    pub fn is_silent(&self, stream: usize) -> bool {
        self.taps[stream].iter().all(|h| h.norm_sqr() == 0.0)
    }

    /// Subset of streams, in the given order.
    pub fn select(&self, indices: &[usize]) -> StreamChannel {
        StreamChannel {
            d_max: self.d_max,
            num_users: self.num_users,
            streams: indices.iter().map(|&i| self.streams[i]).collect(),
            taps: indices.iter().map(|&i| self.taps[i].clone()).collect(),
            path_coeffs: indices.iter().map(|&i| self.path_coeffs[i].clone()).collect(),
        }
    }

    /// Noiseless received samples `y[n] = sum_k sum_d h_{i,k}[d] x_k[n - d]`
    /// for `n = 0 .. signals.len()`. Needs `signals.history >= d_max`.
    pub fn receive(&self, stream: usize, signals: &UserSignals) -> Vec<Complex64> {
        assert!(signals.history >= self.d_max, "signal history shorter than d_max");
        let len = signals.len();
        let mut y = vec![Complex64::new(0.0, 0.0); len];
        for (k, x) in signals.samples.iter().enumerate() {
            for (d, h) in self.user_taps(stream, k).iter().enumerate() {
                if h.re == 0.0 && h.im == 0.0 {
                    continue;
                }
                let offset = signals.history - d;
                for (yn, xn) in y.iter_mut().zip(&x[offset..offset + len]) {
                    *yn += h * xn;
                }
            }
        }
        y
    }
}
