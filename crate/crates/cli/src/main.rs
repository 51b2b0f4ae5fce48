use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};
use lenscran::harness::{run, AllocationScope, ExperimentSpec};
use lenscran::rates::{Architecture, Csi};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScopeArg {
    Rrh,
    Sector,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CsiArg {
    Perfect,
    Estimated,
    Both,
}

/// Fronthaul sweep of lens-array vs UPA-OFDM uplink cloud RAN.
#[derive(Debug, Parser)]
#[command(name = "lenscran", version)]
struct Args {
    /// TOML experiment file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated fronthaul capacities per sector in Gbps; `inf` = unconstrained.
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<f64>>,
    #[arg(long)]
    drops: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated architectures: lens, upa.
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<String>>,
    #[arg(long, value_enum)]
    csi: Option<CsiArg>,
    /// Share one budget per RRH across its sectors, or give each sector its own.
    #[arg(long, value_enum)]
    allocation_scope: Option<ScopeArg>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write drops/drop-NNNN.txt with geometry and paths.
    #[arg(long)]
    dump_drops: bool,
}

fn main() -> Result<()> {
    let args = Args::parse();
    let mut spec = match &args.config {
        Some(path) => ExperimentSpec::from_file(path)?,
        None => ExperimentSpec::default(),
    };
    if let Some(sweep) = args.sweep {
        spec.sweep_gbps = sweep;
    }
    if let Some(d) = args.drops {
        spec.drops = d;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(modes) = args.modes {
        spec.modes = modes.iter().map(|m| m.parse::<Architecture>()).collect::<Result<_, _>>().context("--modes")?;
    }
    if let Some(csi) = args.csi {
        spec.csi = match csi {
            CsiArg::Perfect => vec![Csi::Perfect],
            CsiArg::Estimated => vec![Csi::Estimated],
            CsiArg::Both => vec![Csi::Perfect, Csi::Estimated],
        };
    }
    if let Some(scope) = args.allocation_scope {
        spec.allocation_scope = match scope {
            ScopeArg::Rrh => AllocationScope::Rrh,
            ScopeArg::Sector => AllocationScope::Sector,
        };
    }
    if let Some(out) = args.out {
        spec.out_dir = out;
    }
    spec.dump_drops |= args.dump_drops;
    spec.validate()?;

    let start = Instant::now();
    let out = run(&spec)?;
    println!(
        "{:>10} {:>5} {:>10} {:>10} {:>8} {:>10} {:>10}",
        "Gbps/sec", "mode", "csi", "rate", "stderr", "ant/RRH", "str/user"
    );
    for s in &out.summaries {
        println!(
            "{:>10} {:>5} {:>10} {:>10.4} {:>8.4} {:>10.2} {:>10.2}",
            s.budget.to_string(),
            s.architecture.to_string(),
            s.csi.to_string(),
            s.mean_rate,
            s.stderr,
            s.mean_antennas_per_rrh,
            s.mean_streams_per_user
        );
    }
    eprintln!("{} drops in {:.1} s; wrote {}", spec.drops, start.elapsed().as_secs_f64(), spec.out_dir.display());
    Ok(())
}
