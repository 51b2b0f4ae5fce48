//! Experiment runner: fronthaul sweeps over seeded Monte-Carlo drops.
//!
//! Every drop draws one channel realization that all architectures, CSI
//! modes and budgets share. Noise streams are keyed by drop, RRH, sector
//! and antenna index, so lens and UPA see the same noise draws wherever
//! their antenna indices overlap and every budget reuses the same draws.
//!
//! Each RRH has `sectors_per_rrh` arrays. The cluster lies in the sector
//! facing it; the others only see noise and inter-sector interference but
//! are still probed and compete for fronthaul bits.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arrays::{enumerate_lens_elements, ArrayGeometry, LensConvention, LensGeometry, UpaGeometry};
use crate::channel::{
    generate_drop, noise_floor, stream_taps, watts_to_dbm, write_drop_dump, ChannelError, Drop, ScenarioConfig, Stream,
    StreamChannel, UserSignals,
};
use crate::lens_rx::{self, make_pilots, pilot_observation, FrameConfig, LensError};
use crate::numerics::{Dft, NumericsError, RandomStream};
use crate::quantizer::{probe_power, BitAllocation, QuantizerError};
use crate::rates::{summarize, Architecture, Budget, Csi, DropResult, RatesError, Summary};
use crate::upa_ofdm::{
    self, make_ofdm_pilots, ofdm_transmit_receive, ofdm_waveform, OfdmConfig, OfdmError, SubcarrierMmse,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration at `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("could not parse configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Quantizer(#[from] QuantizerError),
    #[error(transparent)]
    Lens(#[from] LensError),
    #[error(transparent)]
    Ofdm(#[from] OfdmError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Rates(#[from] RatesError),
}

fn config_error(field: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Config { field: field.to_string(), message: message.into() }
}

/// Lens aperture and angular coverage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LensSettings {
    /// Aperture, wavelengths.
    pub d_y: f64,
    pub d_z: f64,
    /// Coverage half-angles, rad.
    pub theta_minus: f64,
    pub theta_plus: f64,
    pub phi_minus: f64,
    pub phi_plus: f64,
    pub convention: LensConvention,
    /// Frame length T_f, symbols.
    pub frame_len: usize,
}

impl Default for LensSettings {
    fn default() -> Self {
        Self {
            d_y: 10.0,
            d_z: 10.0,
            theta_minus: PI / 6.0,
            theta_plus: FRAC_PI_2,
            phi_minus: PI / 3.0,
            phi_plus: PI / 3.0,
            convention: LensConvention::Trimmed,
            frame_len: 8280,
        }
    }
}

/// UPA aperture in wavelengths (half-wavelength spacing).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UpaSettings {
    pub d_y: f64,
    pub d_z: f64,
}

impl Default for UpaSettings {
    fn default() -> Self {
        Self { d_y: 10.0, d_z: 10.0 }
    }
}

/// Which antennas share one fronthaul budget during bit allocation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllocationScope {
    /// One budget per RRH, shared by the antennas of all its sectors.
    #[default]
    Rrh,
    /// Each sector array gets its own per-sector capacity.
    Sector,
}

/// Everything a run needs. Loaded from TOML; omitted keys take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub scenario: ScenarioConfig,
    pub ofdm: OfdmConfig,
    pub lens: LensSettings,
    pub upa: UpaSettings,
    /// Fronthaul capacities per sector, Gbps; `inf` means unconstrained.
    pub sweep_gbps: Vec<f64>,
    pub drops: usize,
    pub seed: u64,
    pub modes: Vec<Architecture>,
    pub csi: Vec<Csi>,
    /// Stream/coefficient selection threshold, dB.
    pub eta_db: f64,
    /// Bisection tolerance for bit allocation.
    pub tolerance: f64,
    pub allocation_scope: AllocationScope,
    pub out_dir: PathBuf,
    pub dump_drops: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            ofdm: OfdmConfig::default(),
            lens: LensSettings::default(),
            upa: UpaSettings::default(),
            sweep_gbps: vec![0.4, 2.0, 4.0, 8.0, 20.0, 40.0, 60.0, 100.0, 200.0],
            drops: 20,
            seed: 1,
            modes: vec![Architecture::Lens, Architecture::Upa],
            csi: vec![Csi::Perfect, Csi::Estimated],
            eta_db: 3.0,
            tolerance: crate::quantizer::DEFAULT_TOLERANCE,
            allocation_scope: AllocationScope::Rrh,
            out_dir: PathBuf::from("results"),
            dump_drops: false,
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let spec: Self = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.scenario.validate().map_err(|e| config_error("scenario", e.to_string()))?;
        let (k, d_max) = (self.scenario.num_users, self.scenario.d_max());
        self.ofdm.validate(k, d_max).map_err(|e| config_error("ofdm", e.to_string()))?;
        self.lens_frame().map_err(|e| config_error("lens.frame_len", e.to_string()))?;
        if self.sweep_gbps.is_empty() {
            return Err(config_error("sweep_gbps", "at least one budget is required"));
        }
        if let Some(b) = self.sweep_gbps.iter().find(|b| !(**b > 0.0)) {
            return Err(config_error("sweep_gbps", format!("budgets must be positive, got {b}")));
        }
        if self.drops == 0 {
            return Err(config_error("drops", "must be at least 1"));
        }
        if self.modes.is_empty() {
            return Err(config_error("modes", "select at least one of lens, upa"));
        }
        if self.csi.is_empty() {
            return Err(config_error("csi", "select at least one of perfect, estimated"));
        }
        if !(self.tolerance > 0.0) {
            return Err(config_error("tolerance", "must be positive"));
        }
        let l = &self.lens;
        let in_range = |a: f64| a > 0.0 && a <= FRAC_PI_2;
        if !(l.d_y > 0.0 && l.d_z > 0.0)
            || ![l.theta_minus, l.theta_plus, l.phi_minus, l.phi_plus].into_iter().all(in_range)
        {
            return Err(config_error("lens", "apertures must be positive and coverage angles in (0, pi/2]"));
        }
        if self.upa.d_y < 0.5 || self.upa.d_z < 0.5 {
            return Err(config_error("upa", "apertures must be at least half a wavelength"));
        }
        Ok(())
    }

    pub fn lens_frame(&self) -> Result<FrameConfig, LensError> {
        FrameConfig::new(self.scenario.num_users, self.scenario.d_max(), self.ofdm.n, self.lens.frame_len)
    }

    pub fn lens_geometry(&self) -> LensGeometry {
        let l = &self.lens;
        enumerate_lens_elements(l.d_y, l.d_z, l.theta_minus, l.theta_plus, l.phi_minus, l.phi_plus, l.convention)
    }

    pub fn upa_geometry(&self) -> UpaGeometry {
        UpaGeometry::new(self.upa.d_y, self.upa.d_z)
    }

    /// Quantization bits per sample for one RRH: all of its sectors' capacity over 2W.
    pub fn bits_per_rrh(&self, gbps_per_sector: f64) -> f64 {
        self.scenario.sectors_per_rrh as f64 * gbps_per_sector * 1e9 / (2.0 * self.scenario.bandwidth_hz)
    }

    pub fn eta(&self) -> f64 {
        10f64.powf(self.eta_db / 10.0)
    }
}

/// One row of the allocation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationRow {
    pub drop: usize,
    pub budget: Budget,
    pub architecture: Architecture,
    pub rrh: usize,
    pub sector: usize,
    /// Lens: elevation/azimuth indices. UPA: vertical/horizontal grid indices.
    pub q_e: i64,
    pub q_a: i64,
    pub rho_dbm: f64,
    pub bits: u32,
}

/// Everything produced by one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct DropOutcome {
    pub drop: Drop,
    pub results: Vec<DropResult>,
    pub allocations: Vec<AllocationRow>,
}

/// Geometry-independent per-drop inputs shared by both architectures.
struct DropContext<'a> {
    spec: &'a ExperimentSpec,
    drop: Drop,
    rng: RandomStream,
    noise: f64,
    power: f64,
    probe: UserSignals,
}

enum Geometry {
    Lens(LensGeometry),
    Upa(UpaGeometry),
}

impl Geometry {
    fn as_dyn(&self) -> &dyn ArrayGeometry {
        match self {
            Geometry::Lens(g) => g,
            Geometry::Upa(g) => g,
        }
    }

    fn indices(&self, q: usize) -> (i64, i64) {
        match self {
            Geometry::Lens(g) => {
                let e = g.elements()[q];
                (e.q_e as i64, e.q_a as i64)
            }
            Geometry::Upa(g) => ((q / g.q_y) as i64, (q % g.q_y) as i64),
        }
    }
}

fn noise_label(kind: &str, s: Stream) -> String {
    format!("{kind}/m{}/j{}/q{}", s.rrh, s.sector, s.antenna)
}

fn add_noise(y: &mut [Complex64], var: f64, rng: &mut RandomStream) {
    for v in y {
        *v += rng.cscg(var);
    }
}

/// Runs every configured mode of one drop.
pub fn run_drop(spec: &ExperimentSpec, id: usize) -> Result<DropOutcome, HarnessError> {
    let rng = RandomStream::new(spec.seed, format!("drop-{id}"));
    let drop = generate_drop(&spec.scenario, id, &rng)?;
    let d_max = spec.scenario.d_max();
    let frame = spec.lens_frame()?;
    // constant-amplitude random-phase probing symbols, with d_max lead-in
    let probe = UserSignals {
        history: d_max,
        samples: (0..spec.scenario.num_users)
            .map(|k| {
                let mut r = rng.substream(&format!("probe-symbols/k{k}"));
                let amp = spec.scenario.tx_power_w().sqrt();
                (0..frame.t_a + d_max).map(|_| amp * r.unit_phasor()).collect()
            })
            .collect(),
    };
    let ctx =
        DropContext { spec, noise: noise_floor(&spec.scenario), power: spec.scenario.tx_power_w(), drop, rng, probe };
    let mut results = Vec::new();
    let mut allocations = Vec::new();
    for &arch in &spec.modes {
        let geom = match arch {
            Architecture::Lens => Geometry::Lens(spec.lens_geometry()),
            Architecture::Upa => Geometry::Upa(spec.upa_geometry()),
        };
        run_architecture(&ctx, arch, &geom, &mut results, &mut allocations)?;
    }
    Ok(DropOutcome { drop: ctx.drop, results, allocations })
}

fn run_architecture(
    ctx: &DropContext<'_>,
    arch: Architecture,
    geom: &Geometry,
    results: &mut Vec<DropResult>,
    allocations: &mut Vec<AllocationRow>,
) -> Result<(), HarnessError> {
    let spec = ctx.spec;
    let q = geom.as_dyn().num_elements();
    let m_count = spec.scenario.num_rrhs;
    let j_count = spec.scenario.sectors_per_rrh;
    // every sector array of an RRH competes for the RRH's fronthaul budget
    let per_rrh = j_count * q;
    let streams: Vec<Stream> = (0..m_count)
        .flat_map(|m| (0..per_rrh).map(move |a| Stream { rrh: m, sector: a / q, antenna: a % q }))
        .collect();
    let all = stream_taps(&ctx.drop.paths, geom.as_dyn(), &streams);

    let rho: Vec<f64> = streams
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut y = all.receive(i, &ctx.probe);
            add_noise(&mut y, ctx.noise, &mut ctx.rng.substream(&noise_label("probe-noise", *s)));
            probe_power(&y)
        })
        .collect::<Result<_, _>>()?;

    for &gbps in &spec.sweep_gbps {
        let budget = Budget(gbps);
        let bits_per_rrh = if budget.is_unconstrained() { f64::INFINITY } else { spec.bits_per_rrh(gbps) };
        let mut selected = Vec::new();
        let mut alloc_bits = Vec::new();
        let mut antennas_per_rrh = Vec::with_capacity(m_count);
        let (group, group_bits) = match spec.allocation_scope {
            AllocationScope::Rrh => (per_rrh, bits_per_rrh),
            AllocationScope::Sector => (q, bits_per_rrh / j_count as f64),
        };
        for m in 0..m_count {
            let mut facing = 0;
            for start in (0..per_rrh).step_by(group) {
                let offset = m * per_rrh + start;
                let rho_g = &rho[offset..offset + group];
                let alloc = if budget.is_unconstrained() {
                    BitAllocation::unconstrained(rho_g)
                } else {
                    BitAllocation::optimize(rho_g, group_bits, spec.tolerance)?
                };
                for g in alloc.selected() {
                    let a = start + g;
                    if a < q {
                        facing += 1;
                    }
                    let (q_e, q_a) = geom.indices(a % q);
                    allocations.push(AllocationRow {
                        drop: ctx.drop.id,
                        budget,
                        architecture: arch,
                        rrh: m,
                        sector: a / q,
                        q_e,
                        q_a,
                        rho_dbm: watts_to_dbm(alloc.rho[g]),
                        bits: alloc.bits[g],
                    });
                    selected.push(m * per_rrh + a);
                    alloc_bits.push((alloc.rho[g], alloc.bits[g]));
                }
            }
            // the cluster's signals only reach the facing sector
            antennas_per_rrh.push(facing);
        }
        let channel = all.select(&selected);
        let noise: Vec<f64> =
            alloc_bits.iter().map(|&(r, b)| ctx.noise + crate::quantizer::error_variance(r, b)).collect();
        // with known channels a signal-free stream is independent of every
        // other stream and cannot change the MMSE output, so it is skipped
        let live: Vec<usize> = (0..channel.len()).filter(|&i| !channel.is_silent(i)).collect();
        let live_channel = channel.select(&live);
        let live_noise: Vec<f64> = live.iter().map(|&i| noise[i]).collect();
        for &csi in &spec.csi {
            let (sinr, rates, streams_per_user) = match (arch, csi) {
                (Architecture::Lens, Csi::Perfect) => lens_perfect(ctx, &live_channel, &live_noise)?,
                (Architecture::Upa, Csi::Perfect) => upa(ctx, &live_channel, &live_noise, &[], csi)?,
                (Architecture::Lens, Csi::Estimated) => lens_estimated(ctx, &channel, &noise, &alloc_bits)?,
                (Architecture::Upa, Csi::Estimated) => upa(ctx, &channel, &noise, &alloc_bits, csi)?,
            };
            results.push(DropResult {
                drop: ctx.drop.id,
                architecture: arch,
                csi,
                budget,
                bits_per_rrh,
                sinr,
                rates,
                antennas_per_rrh: antennas_per_rrh.clone(),
                streams_per_user,
            });
        }
    }
    Ok(())
}

type ModeOutput = (Vec<f64>, Vec<f64>, Vec<usize>);

fn lens_perfect(ctx: &DropContext<'_>, channel: &StreamChannel, noise: &[f64]) -> Result<ModeOutput, HarnessError> {
    let sinr = lens_rx::mmse_perfect(channel, noise, ctx.power)?;
    let rates = sinr.iter().map(|g| (1.0 + g).log2()).collect();
    Ok((sinr, rates, vec![channel.len(); channel.num_users]))
}

fn quantized(
    rng: &RandomStream,
    s: Stream,
    rho: f64,
    bits: u32,
) -> Result<(RandomStream, crate::quantizer::UniformQuantizer), HarnessError> {
    Ok((rng.substream(&noise_label("pilot-noise", s)), crate::quantizer::UniformQuantizer::new(rho, bits)?))
}

fn lens_estimated(
    ctx: &DropContext<'_>,
    channel: &StreamChannel,
    noise: &[f64],
    alloc: &[(f64, u32)],
) -> Result<ModeOutput, HarnessError> {
    let spec = ctx.spec;
    let frame = spec.lens_frame()?;
    let pilots = make_pilots(spec.scenario.num_users, spec.scenario.d_max(), frame.t_p, ctx.power)?;
    let signals = pilots.signals();
    let mut h_hat = Vec::with_capacity(channel.len());
    for (i, s) in channel.streams.iter().enumerate() {
        let (mut rng, quant) = quantized(&ctx.rng, *s, alloc[i].0, alloc[i].1)?;
        let y = pilot_observation(channel, i, &signals, ctx.noise, Some(&quant), &mut rng);
        h_hat.push(lens_rx::ls_estimate(&y, &pilots)?);
    }
    let out = lens_rx::mmse_reduced(channel, &h_hat, noise, ctx.power, spec.eta())?;
    let pre = frame.overhead_prefactor();
    let rates = out.sinr.iter().map(|g| pre * (1.0 + g).log2()).collect();
    Ok((out.sinr, rates, out.streams.iter().map(|s| s.len()).collect()))
}

fn upa(
    ctx: &DropContext<'_>,
    channel: &StreamChannel,
    noise: &[f64],
    alloc: &[(f64, u32)],
    csi: Csi,
) -> Result<ModeOutput, HarnessError> {
    let spec = ctx.spec;
    let cfg = &spec.ofdm;
    let (k_users, d_max) = (spec.scenario.num_users, spec.scenario.d_max());
    let dft = Dft::new(cfg.n)?;
    let mut acc = SubcarrierMmse::new(k_users, cfg.n, ctx.power);
    let pilots = match csi {
        Csi::Estimated => Some(make_ofdm_pilots(k_users, d_max, cfg, ctx.power)?),
        Csi::Perfect => None,
    };
    let signals = match &pilots {
        Some(p) => Some(ofdm_waveform(&p.symbols, cfg.mu, d_max, &dft)?),
        None => None,
    };
    for (i, s) in channel.streams.iter().enumerate() {
        let truth: Vec<Vec<Complex64>> = (0..k_users)
            .map(|k| upa_ofdm::frequency_response(channel.user_taps(i, k), &dft))
            .collect::<Result<_, _>>()?;
        match (&pilots, &signals) {
            (Some(p), Some(sig)) => {
                let (mut rng, quant) = quantized(&ctx.rng, *s, alloc[i].0, alloc[i].1)?;
                let obs =
                    ofdm_transmit_receive(channel, i, sig, cfg.tau_p, cfg.mu, ctx.noise, Some(&quant), &mut rng, &dft)?;
                let h_hat = upa_ofdm::ofdm_ls_estimate(&obs, p, &dft)?;
                let w = d_max + 1;
                let design: Vec<Vec<Complex64>> = (0..k_users)
                    .map(|k| upa_ofdm::frequency_response(&h_hat[k * w..(k + 1) * w], &dft))
                    .collect::<Result<_, _>>()?;
                acc.add_stream(&design, &truth, noise[i]);
            }
            _ => acc.add_stream(&truth, &truth, noise[i]),
        }
    }
    let per_sc = acc.sinr()?;
    let pre = if csi == Csi::Estimated { cfg.overhead_prefactor() } else { 1.0 };
    let rates = per_sc.iter().map(|g| pre * upa_ofdm::ofdm_rate(g, cfg.mu)).collect();
    let sinr = per_sc.iter().map(|g| g.iter().sum::<f64>() / g.len() as f64).collect();
    Ok((sinr, rates, vec![channel.len(); k_users]))
}

/// All outputs of a run, before they are written.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub summaries: Vec<Summary>,
    pub results: Vec<DropResult>,
    pub allocations: Vec<AllocationRow>,
    pub drops: Vec<Drop>,
}

/// Runs all drops (in parallel) and aggregates them.
pub fn simulate(spec: &ExperimentSpec) -> Result<RunOutput, HarnessError> {
    spec.validate()?;
    let outcomes: Vec<DropOutcome> =
        (0..spec.drops).into_par_iter().map(|id| run_drop(spec, id)).collect::<Result<_, _>>()?;
    let mut results = Vec::new();
    let mut allocations = Vec::new();
    let mut drops = Vec::new();
    for o in outcomes {
        results.extend(o.results);
        allocations.extend(o.allocations);
        drops.push(o.drop);
    }
    Ok(RunOutput { summaries: summarize(&results)?, results, allocations, drops })
}

pub const RESULTS_HEADER: &str =
    "budget_gbps_per_sector,mode,csi,mean_rate_bps_hz,stderr,mean_antennas_per_rrh,mean_streams_per_user,drops,seed";

pub const ALLOCATIONS_HEADER: &str = "drop,budget_gbps_per_sector,array,rrh,sector,q_e,q_a,rho_dbm,bits";

pub fn results_csv(summaries: &[Summary], seed: u64) -> String {
    let mut s = String::from(RESULTS_HEADER);
    s.push('\n');
    for r in summaries {
        let _ = writeln!(
            s,
            "{},{},{},{:.6},{:.6},{:.4},{:.4},{},{}",
            r.budget,
            r.architecture,
            r.csi,
            r.mean_rate,
            r.stderr,
            r.mean_antennas_per_rrh,
            r.mean_streams_per_user,
            r.drops,
            seed
        );
    }
    s
}

pub fn allocations_csv(rows: &[AllocationRow]) -> String {
    let mut s = String::from(ALLOCATIONS_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{:.4},{}",
            r.drop, r.budget, r.architecture, r.rrh, r.sector, r.q_e, r.q_a, r.rho_dbm, r.bits
        );
    }
    s
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })
}

/// Simulates and writes `results.csv`, `allocations.csv` and optional drop dumps.
pub fn run(spec: &ExperimentSpec) -> Result<RunOutput, HarnessError> {
    let out = simulate(spec)?;
    let dir = &spec.out_dir;
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io { path: dir.clone(), source })?;
    write_file(&dir.join("results.csv"), results_csv(&out.summaries, spec.seed).as_bytes())?;
    write_file(&dir.join("allocations.csv"), allocations_csv(&out.allocations).as_bytes())?;
    if spec.dump_drops {
        let drops_dir = dir.join("drops");
        fs::create_dir_all(&drops_dir).map_err(|source| HarnessError::Io { path: drops_dir.clone(), source })?;
        for d in &out.drops {
            let mut buf = Vec::new();
            let path = drops_dir.join(format!("drop-{:04}.txt", d.id));
            write_drop_dump(d, &mut buf).map_err(|source| HarnessError::Io { path: path.clone(), source })?;
            write_file(&path, &buf)?;
        }
    }
    Ok(out)
}
