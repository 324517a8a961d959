use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adsc_core::analytics::pipeline::{
    decode_file, fixes_from_records, read_adsb, read_decoded, read_samples, write_samples,
};
use adsc_core::analytics::{decode_stream, stats_from_decoded, write_emissions, RunConfig};
use adsc_core::assembly::{
    fuse, match_adsb, propagate_identity, resample, segment_flights, write_state_vectors, FusionConfig,
    DEFAULT_GAP_THRESHOLD_S, DEFAULT_MATCH_PAD_S, DEFAULT_RESAMPLE_DT_S, DEFAULT_SPEED_GATE_KN, DEFAULT_TIE_WINDOW_S,
};
use adsc_core::contract::scenario::{run_scenario, Scenario};
use adsc_core::fuel::{compare_paths, FuelTable};
use adsc_core::geo::{country_crossings, crossing_table, CountryPolygons};
use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "adsc",
    version,
    about = "ADS-C decoding, ADS-B fusion and trajectory analytics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decode raw-frame JSONL into report JSONL
    Decode {
        #[arg(short, long)]
        input: PathBuf,
        /// Output file; stdout when omitted
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Fail when the error rate reaches this fraction
        #[arg(long, default_value_t = 0.01)]
        error_ceiling: f64,
    },
    /// Dataset statistics over decoded report JSONL
    Stats {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Split decoded reports into flights
    Segment {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_GAP_THRESHOLD_S)]
        gap_threshold_s: f64,
    },
    /// Fuse decoded reports with ADS-B state vectors, one trajectory per flight
    Fuse(FuseArgs),
    /// Country-crossing table for a set of trajectories
    Countries {
        /// GeoJSON feature collection
        #[arg(long)]
        boundaries: PathBuf,
        /// Feature property holding the country code
        #[arg(long)]
        code_key: Option<String>,
        /// Total flight count for percentages; defaults to the number of trajectories
        #[arg(long)]
        total: Option<u64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Trajectory JSONL files
        #[arg(required = true)]
        trajectories: Vec<PathBuf>,
    },
    /// Fuel on a fused trajectory against its great-circle baseline
    FuelCompare {
        #[arg(short, long)]
        trajectory: PathBuf,
        /// Family name or ICAO type designator
        #[arg(long, default_value = "A350")]
        family: String,
        /// Fuel parameter table; the shipped table when omitted
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Run a contract scenario and write frames, ADS-B, truth and tag ledger
    Simulate {
        #[arg(short, long)]
        scenario: PathBuf,
        #[arg(short, long)]
        output_dir: PathBuf,
    },
    /// End-to-end batch run
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct FuseArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long)]
    adsb: Option<PathBuf>,
    #[arg(long)]
    adsb_metric: bool,
    #[arg(short, long)]
    output_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_GAP_THRESHOLD_S)]
    gap_threshold_s: f64,
    #[arg(long, default_value_t = DEFAULT_RESAMPLE_DT_S)]
    resample_dt_s: f64,
    #[arg(long, default_value_t = DEFAULT_SPEED_GATE_KN)]
    speed_gate_kn: f64,
    #[arg(long, default_value_t = DEFAULT_TIE_WINDOW_S)]
    tie_window_s: f64,
    #[arg(long, default_value_t = DEFAULT_MATCH_PAD_S)]
    match_pad_s: f64,
}

#[derive(Args)]
struct PipelineArgs {
    /// TOML run configuration; flags override its fields
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    adsc_input: Option<PathBuf>,
    #[arg(long)]
    adsb_input: Option<PathBuf>,
    #[arg(long)]
    adsb_metric: bool,
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    gap_threshold_s: Option<f64>,
    #[arg(long)]
    resample_dt_s: Option<f64>,
    #[arg(long)]
    speed_gate_kn: Option<f64>,
    #[arg(long)]
    fuel_params: Option<PathBuf>,
    #[arg(long)]
    fuel_family: Option<String>,
    #[arg(long)]
    boundaries: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    truth: Option<PathBuf>,
}

/// Failure tagged with its exit code.
enum Failure {
    Input(anyhow::Error),
    Config(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

fn config_err<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Config(e.into())
}

type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> CmdResult {
    match command {
        Command::Decode {
            input,
            output,
            error_ceiling,
        } => decode(&input, output.as_deref(), error_ceiling),
        Command::Stats { input, output } => stats(&input, output.as_deref()),
        Command::Segment {
            input,
            output,
            gap_threshold_s,
        } => segment(&input, output.as_deref(), gap_threshold_s),
        Command::Fuse(args) => fuse_cmd(&args),
        Command::Countries {
            boundaries,
            code_key,
            total,
            output,
            trajectories,
        } => countries(
            &boundaries,
            code_key.as_deref(),
            total,
            output.as_deref(),
            &trajectories,
        ),
        Command::FuelCompare {
            trajectory,
            family,
            params,
        } => fuel_compare(&trajectory, &family, params.as_deref()),
        Command::Simulate { scenario, output_dir } => simulate(&scenario, &output_dir),
        Command::Pipeline(args) => pipeline(args),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn check_ratio(name: &str, v: f64) -> CmdResult {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(config_err(anyhow!("{name} must lie in [0, 1], got {v}")))
    }
}

fn check_positive(name: &str, v: f64) -> CmdResult {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_err(anyhow!("{name} must be positive, got {v}")))
    }
}

fn decode(input: &Path, output: Option<&Path>, ceiling: f64) -> CmdResult {
    check_ratio("error ceiling", ceiling)?;
    let summary = decode_stream(open(input)?, sink(output)?).map_err(anyhow::Error::from)?;
    eprintln!("{}", serde_json::to_string(&summary).map_err(anyhow::Error::from)?);
    if summary.within_ceiling(ceiling) {
        Ok(())
    } else {
        Err(Failure::Input(anyhow!(
            "error rate {:.4} reached the ceiling {ceiling}",
            summary.error_rate()
        )))
    }
}

fn stats(input: &Path, output: Option<&Path>) -> CmdResult {
    let (stats, bad) = stats_from_decoded(open(input)?).map_err(anyhow::Error::from)?;
    if bad > 0 {
        log::warn!("{bad} unparsable lines skipped");
    }
    write_json(output, &stats)?;
    Ok(())
}

fn segment(input: &Path, output: Option<&Path>, gap: f64) -> CmdResult {
    check_positive("gap threshold", gap)?;
    let records = read_decoded(open(input)?).map_err(anyhow::Error::from)?;
    let mut fixes = fixes_from_records(&records);
    propagate_identity(&mut fixes, gap);
    let seg = segment_flights(&fixes, gap);
    let mut w = sink(output)?;
    for s in &seg.segments {
        serde_json::to_writer(&mut w, s).map_err(anyhow::Error::from)?;
        writeln!(w).map_err(anyhow::Error::from)?;
    }
    w.flush().map_err(anyhow::Error::from)?;
    eprintln!(
        "{} flights, {} fixes rejected without callsign",
        seg.segments.len(),
        seg.rejects.len()
    );
    Ok(())
}

fn fuse_cmd(a: &FuseArgs) -> CmdResult {
    for (name, v) in [
        ("gap threshold", a.gap_threshold_s),
        ("resample step", a.resample_dt_s),
        ("speed gate", a.speed_gate_kn),
        ("tie window", a.tie_window_s),
        ("match pad", a.match_pad_s),
    ] {
        check_positive(name, v)?;
    }
    let records = if a.input.extension().is_some_and(|e| e == "jsonl") && is_raw_frames(&a.input)? {
        decode_file(&a.input).map_err(anyhow::Error::from)?.0
    } else {
        read_decoded(open(&a.input)?).map_err(anyhow::Error::from)?
    };
    let adsb = match &a.adsb {
        Some(p) => read_adsb(p, a.adsb_metric).map_err(anyhow::Error::from)?.0,
        None => Vec::new(),
    };
    let mut fixes = fixes_from_records(&records);
    propagate_identity(&mut fixes, a.gap_threshold_s);
    let seg = segment_flights(&fixes, a.gap_threshold_s);
    fs::create_dir_all(&a.output_dir).map_err(anyhow::Error::from)?;
    let config = FusionConfig {
        tie_window_s: a.tie_window_s,
        speed_gate_kn: a.speed_gate_kn,
    };
    for s in &seg.segments {
        let matched = match_adsb(s, &adsb, a.match_pad_s);
        let result = fuse(s, &matched, &config)
            .map_err(anyhow::Error::from)
            .and_then(|f| Ok(resample(&f.trajectory, a.resample_dt_s)?));
        match result {
            Ok(t) => {
                let path = a.output_dir.join(format!("{}.jsonl", s.flight_id));
                let f = File::create(&path).map_err(anyhow::Error::from)?;
                write_samples(BufWriter::new(f), &t.samples).map_err(anyhow::Error::from)?;
                println!("{}\t{}", s.flight_id, t.len());
            }
            Err(e) => log::warn!("flight {}: {e:#}", s.flight_id),
        }
    }
    Ok(())
}

/// Whether the first record of a JSONL file is a raw frame.
fn is_raw_frames(path: &Path) -> Result<bool> {
    let mut first = String::new();
    open(path)?.read_line(&mut first)?;
    Ok(first.contains("\"payload_hex\""))
}

fn countries(
    boundaries: &Path,
    code_key: Option<&str>,
    total: Option<u64>,
    output: Option<&Path>,
    trajectories: &[PathBuf],
) -> CmdResult {
    let polygons = CountryPolygons::from_geojson_file(boundaries, code_key).map_err(config_err)?;
    let mut sets: Vec<(String, BTreeSet<String>)> = Vec::new();
    for p in trajectories {
        let traj = read_samples(open(p)?).map_err(anyhow::Error::from)?;
        sets.push((p.display().to_string(), country_crossings(&traj, &polygons)));
    }
    let table = crossing_table(&sets, total.unwrap_or(sets.len() as u64)).map_err(anyhow::Error::from)?;
    let mut w = sink(output)?;
    w.write_all(table.to_csv().as_bytes()).map_err(anyhow::Error::from)?;
    w.flush().map_err(anyhow::Error::from)?;
    Ok(())
}

fn fuel_compare(trajectory: &Path, family: &str, params: Option<&Path>) -> CmdResult {
    let table = match params {
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .map_err(Failure::Config)?;
            FuelTable::from_toml(&text).map_err(config_err)?
        }
        None => FuelTable::builtin(),
    };
    let model = table
        .by_name(family)
        .or_else(|| table.by_typecode(family))
        .ok_or_else(|| config_err(anyhow!("no fuel parameters for `{family}`")))?;
    let traj = read_samples(open(trajectory)?).map_err(anyhow::Error::from)?;
    let report = compare_paths(&traj, model).map_err(anyhow::Error::from)?;
    write_json(None, &report)?;
    Ok(())
}

fn simulate(scenario: &Path, out: &Path) -> CmdResult {
    let text = fs::read_to_string(scenario).with_context(|| format!("reading {}", scenario.display()))?;
    let sc = Scenario::from_toml(&text).map_err(config_err)?;
    let run = run_scenario(&sc).map_err(config_err)?;
    fs::create_dir_all(out).map_err(anyhow::Error::from)?;
    let frames = BufWriter::new(File::create(out.join("frames.jsonl")).map_err(anyhow::Error::from)?);
    write_emissions(frames, &run.frames).map_err(anyhow::Error::from)?;
    let adsb = BufWriter::new(File::create(out.join("adsb.csv")).map_err(anyhow::Error::from)?);
    write_state_vectors(adsb, &run.adsb).map_err(anyhow::Error::from)?;
    write_json(Some(&out.join("truth.json")), &run.truth)?;
    let ledger: std::collections::BTreeMap<String, u64> =
        run.clean.ledger.iter().map(|(t, n)| (format!("{t:02}"), *n)).collect();
    write_json(Some(&out.join("ledger.json")), &ledger)?;
    eprintln!(
        "{} frames ({} before degradation), {} ADS-B samples",
        run.frames.len(),
        run.clean.emissions.len(),
        run.adsb.len()
    );
    Ok(())
}

fn pipeline(a: PipelineArgs) -> CmdResult {
    let mut config = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .map_err(Failure::Config)?;
            RunConfig::from_toml(&text).map_err(config_err)?
        }
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($field:ident) => {
            if let Some(v) = a.$field {
                config.$field = v;
            }
        };
        (opt $field:ident) => {
            if a.$field.is_some() {
                config.$field = a.$field;
            }
        };
    }
    set!(adsc_input);
    set!(opt adsb_input);
    set!(output_dir);
    set!(gap_threshold_s);
    set!(resample_dt_s);
    set!(speed_gate_kn);
    set!(opt fuel_params);
    set!(fuel_family);
    set!(opt boundaries);
    set!(workers);
    set!(seed);
    set!(opt truth);
    config.adsb_metric |= a.adsb_metric;
    let summary = adsc_core::analytics::run_pipeline(&config).map_err(|e| {
        if e.is_config() {
            Failure::Config(e.into())
        } else {
            Failure::Input(e.into())
        }
    })?;
    println!("{}", serde_json::to_string(&summary).map_err(anyhow::Error::from)?);
    Ok(())
}
