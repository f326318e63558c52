mod settings;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use chdr_rt::chdr::{decode_header, CaptureReader, HEADER_BYTES};
use chdr_rt::harness::realtime::{bench_upols, run_udp_loopback, RealtimeConfig};
use chdr_rt::harness::{run_scenario, Precision, ScenarioReport};
use clap::{Args, Parser, Subcommand};

use settings::Settings;

#[derive(Parser)]
#[command(name = "chdr-rt", version, about = "CHDR streaming and channel emulation on a virtual clock")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its report.
    Run(ScenarioArgs),
    /// Run a scenario and check only the estimated channel.
    Verify {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Largest acceptable channel error.
        #[arg(long, default_value_t = -80.0, allow_hyphen_values = true)]
        threshold_db: f64,
    },
    /// Time the UPOLS engine, or a UDP loopback round trip with --udp.
    Bench(BenchArgs),
    /// Dump the packet headers of a capture file.
    Decode {
        capture: PathBuf,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Flat key = value settings file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    spp: Option<String>,
    /// Sample rate in Hz.
    #[arg(long)]
    fs: Option<String>,
    /// Falls back to the config file, then CHDR_RT_SEED, then 0.
    #[arg(long)]
    seed: Option<String>,
    /// CIR file, text or raw complex64.
    #[arg(long)]
    cir: Option<String>,
    #[arg(long)]
    ports: Option<String>,
    #[arg(long)]
    precision: Option<String>,
    /// One-way link latency in ticks, both directions.
    #[arg(long)]
    latency: Option<String>,
    /// Per-packet link jitter bound in ticks, both directions.
    #[arg(long)]
    jitter: Option<String>,
    /// Comma-separated uplink send ordinals to lose.
    #[arg(long)]
    uplink_drops: Option<String>,
    /// Comma-separated downlink send ordinals to lose.
    #[arg(long)]
    downlink_drops: Option<String>,
    /// Tx timestamp headroom in ticks.
    #[arg(long)]
    lead: Option<String>,
    /// Directory for report.txt, report.csv and histogram.csv.
    #[arg(long, short)]
    out: Option<String>,
    /// Any other setting, as key=value. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 256)]
    spp: usize,
    #[arg(long, default_value_t = 512)]
    cir_len: usize,
    #[arg(long, default_value_t = 1)]
    ports: usize,
    #[arg(long, default_value_t = 10_000)]
    blocks: u64,
    #[arg(long, default_value = "single")]
    precision: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Measure this many UDP loopback round trips instead.
    #[arg(long)]
    udp: Option<usize>,
}

enum Failure {
    Usage(String),
    Run(String),
}

impl ScenarioArgs {
    fn settings(&self) -> Result<Settings, Failure> {
        let mut s = match &self.config {
            Some(p) => Settings::load(p).map_err(Failure::Usage)?,
            None => Settings::default(),
        };
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            s.set(k.trim(), v.trim()).map_err(Failure::Usage)?;
        }
        for (key, value) in [
            ("mode", &self.mode),
            ("spp", &self.spp),
            ("fs", &self.fs),
            ("seed", &self.seed),
            ("cir", &self.cir),
            ("ports", &self.ports),
            ("precision", &self.precision),
            ("latency", &self.latency),
            ("jitter", &self.jitter),
            ("uplink_drops", &self.uplink_drops),
            ("downlink_drops", &self.downlink_drops),
            ("lead", &self.lead),
            ("out", &self.out),
        ] {
            s.override_with(key, value.clone());
        }
        Ok(s)
    }

    fn run(&self) -> Result<(ScenarioReport, Option<PathBuf>), Failure> {
        let s = self.settings()?;
        let cfg = s.scenario().map_err(Failure::Usage)?;
        let report = run_scenario(&cfg).map_err(|e| Failure::Run(e.to_string()))?;
        Ok((report, s.out_dir()))
    }
}

fn write_reports(dir: &Path, r: &ScenarioReport) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Run(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join("report.txt"), r.to_text()).map_err(io)?;
    std::fs::write(dir.join("report.csv"), r.to_csv()).map_err(io)?;
    std::fs::write(dir.join("histogram.csv"), r.histogram.to_csv()).map_err(io)?;
    Ok(())
}

fn verify(args: &ScenarioArgs, threshold_db: f64) -> Result<(), Failure> {
    let (r, out) = args.run()?;
    if let Some(dir) = out {
        write_reports(&dir, &r)?;
    }
    if r.channel.is_empty() {
        return Err(Failure::Run("no channel estimate (output carried no signal)".into()));
    }
    for c in &r.channel {
        let verdict = if c.error_db < threshold_db { "ok" } else { "FAIL" };
        println!("h[{}][{}] error {:.2} dB {verdict}", c.output, c.input, c.error_db);
    }
    let worst = r.worst_channel_error_db();
    if worst < threshold_db {
        Ok(())
    } else {
        Err(Failure::Run(format!("worst channel error {worst:.2} dB not below {threshold_db} dB")))
    }
}

fn bench(a: &BenchArgs) -> Result<(), Failure> {
    if let Some(packets) = a.udp {
        let cfg = RealtimeConfig { packets, spp: a.spp, timeout: Duration::from_millis(200), ..Default::default() };
        let r = run_udp_loopback(&cfg).map_err(|e| Failure::Run(e.to_string()))?;
        let show = |name: &str, h: &chdr_rt::harness::DelayHistogram| {
            println!(
                "{name:<10} n={} min={:.3} p50={:.3} p99={:.3} p99.99={:.3} max={:.3} us",
                h.total, h.min_us, h.p50_us, h.p99_us, h.p9999_us, h.max_us
            )
        };
        show("host", &r.histogram);
        show("round trip", &r.round_trip);
        println!("lost       {}", r.lost);
        return Ok(());
    }
    let precision: Precision = a.precision.parse().map_err(|e: chdr_rt::harness::HarnessError| Failure::Usage(e.to_string()))?;
    let r = bench_upols(a.spp, a.cir_len, a.ports, a.blocks, precision, a.seed).map_err(|e| match e {
        chdr_rt::harness::HarnessError::Config(m) => Failure::Usage(m),
        e => Failure::Run(e.to_string()),
    })?;
    print!("{}", r.to_text());
    Ok(())
}

fn decode(path: &Path) -> Result<(), Failure> {
    let buf = std::fs::read(path).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))?;
    let mut reader = CaptureReader::new(&buf);
    let mut n = 0usize;
    loop {
        let offset = reader.offset();
        match reader.next() {
            None => break,
            Some(Ok(pkt)) => {
                let raw = u64::from_le_bytes(buf[offset..offset + HEADER_BYTES].try_into().unwrap());
                let h = decode_header(raw).expect("reader validated the header");
                let ts = pkt.timestamp.map_or("-".to_string(), |t| t.to_string());
                println!(
                    "{n:>6} @{offset:<8} {raw:#018x} {:<12} seq={:<5} len={:<5} epid={:<5} vc={} eob={} eov={} mdata={} ts={ts}",
                    format!("{:?}", h.pkt_type),
                    h.seq_num,
                    h.length,
                    h.dst_epid,
                    h.vc,
                    h.eob as u8,
                    h.eov as u8,
                    h.num_mdata,
                );
                n += 1;
            }
            Some(Err(e)) => return Err(Failure::Run(format!("packet {n} at byte {offset}: {e}"))),
        }
    }
    println!("{n} packets, {} bytes", buf.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => args.run().and_then(|(r, out)| {
            print!("{}", r.to_text());
            out.map_or(Ok(()), |dir| write_reports(&dir, &r))
        }),
        Command::Verify { scenario, threshold_db } => verify(scenario, *threshold_db),
        Command::Bench(a) => bench(a),
        Command::Decode { capture } => decode(capture),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("chdr-rt: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Run(m)) => {
            eprintln!("chdr-rt: {m}");
            ExitCode::from(1)
        }
    }
}
