//! `fibham`: band structure, count tables, dimension reports, transport
//! sweeps, and trace-map orbits from the command line.
//!
//! Every command validates its parameters before any computation starts,
//! writes deterministic output (same config, same bytes), and carries a
//! metadata header with the tool version, the canonical config echo, and
//! the working precision. Exit codes: 2 for configuration errors, 3 for
//! computation errors, 4 for I/O errors.

use clap::{Parser, Subcommand, ValueEnum};
use fibham::bands::{enumerate_bands, extend_bands, BandHierarchy};
use fibham::combinatorics::{envelope_check, CountTable};
use fibham::dimension::dimension_report;
use fibham::dynamics::{geometric_grid, transport_exponents, LatticeOperator};
use fibham::prec::{format_real, parse_real};
use fibham::trace::{spectrum_membership, trace_sequence, MembershipStatus};
use rug::Float;
use serde_json::{json, Value};
use std::io::{BufReader, Write};
use std::path::PathBuf;

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "FIBHAM_OUT_DIR";

#[derive(Parser)]
#[command(name = "fibham", version, about = "Fibonacci Hamiltonian spectral and transport computations")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Enumerate the certified band hierarchy of the periodic approximants.
    Bands(BandsArgs),
    /// Exact type-A/type-B band count table (and entropy envelope report).
    Counts(CountsArgs),
    /// Box-counting dimension report with the analytic bounds.
    Dims(DimsArgs),
    /// Finite-lattice transport sweep: moments, exponents, outside mass.
    Dynamics(DynamicsArgs),
    /// Trace-map orbit along the spectral line, with membership verdict.
    Orbit(OrbitArgs),
}

#[derive(clap::Args)]
struct BandsArgs {
    /// Coupling constant; must exceed 4.
    #[arg(long)]
    lambda: String,
    /// Deepest approximant level to enumerate.
    #[arg(long)]
    kmax: u32,
    /// Edge-enclosure precision in bits.
    #[arg(long, default_value_t = 128)]
    precision: u32,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Resume from a previously exported JSON hierarchy.
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(clap::Args)]
struct CountsArgs {
    #[arg(long)]
    kmax: u32,
    /// Emit the entropy-envelope report at level kmax instead of the table.
    #[arg(long)]
    envelope: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct DimsArgs {
    #[arg(long)]
    lambda: String,
    /// Cover level for the box-count fit (hierarchy runs one level deeper).
    #[arg(long)]
    level: u32,
    #[arg(long, default_value_t = 96)]
    precision: u32,
    /// Reuse an exported band hierarchy instead of enumerating.
    #[arg(long)]
    bands: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct DynamicsArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    /// Lattice half-width: sites run over [-nmax, nmax].
    #[arg(long)]
    nmax: i64,
    #[arg(long, default_value_t = 10.0)]
    tmin: f64,
    #[arg(long, default_value_t = 1000.0)]
    tmax: f64,
    #[arg(long, default_value_t = 6)]
    tpoints: usize,
    /// Comma-separated moment orders, strictly increasing.
    #[arg(long, default_value = "1,2,5,10")]
    plist: String,
    /// Half-line operator on [1, nmax] with u(0) = 0.
    #[arg(long)]
    half_line: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct OrbitArgs {
    #[arg(long)]
    energy: String,
    #[arg(long)]
    lambda: String,
    #[arg(long, default_value_t = 30)]
    kmax: u32,
    #[arg(long, default_value_t = 256)]
    precision: u32,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failures carrying their process exit code.
enum CliError {
    Config(String),
    Compute(fibham::Error),
    Io(std::io::Error),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Config(m) => m.clone(),
            CliError::Compute(e) => e.to_string(),
            CliError::Io(e) => e.to_string(),
        }
    }
}

impl From<fibham::Error> for CliError {
    fn from(e: fibham::Error) -> Self {
        match e {
            fibham::Error::Io(io) => CliError::Io(io),
            other => CliError::Compute(other),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn check_precision(bits: u32) -> CliResult<()> {
    if !(32..=4096).contains(&bits) {
        return Err(config_err(format!(
            "--precision must lie in [32, 4096], got {bits}"
        )));
    }
    Ok(())
}

fn parse_lambda(s: &str, prec: u32) -> CliResult<Float> {
    parse_real(prec, s).ok_or_else(|| config_err(format!("cannot parse --lambda {s:?}")))
}

/// CSV metadata header shared by all commands.
fn csv_header(config: &str, precision: u32) -> String {
    format!(
        "# fibham {}\n# config: {}\n# precision_bits: {}\n",
        env!("CARGO_PKG_VERSION"),
        config,
        precision
    )
}

/// JSON envelope shared by all commands.
fn json_wrap(config: &str, precision: u32, data: Value) -> Vec<u8> {
    let doc = json!({
        "meta": {
            "tool": "fibham",
            "version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "precision_bits": precision,
        },
        "data": data,
    });
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("serializable document");
    bytes.push(b'\n');
    bytes
}

fn write_output(out: &Option<PathBuf>, default_name: &str, bytes: &[u8]) -> CliResult<()> {
    let path = match out {
        Some(p) => Some(p.clone()),
        None => std::env::var_os(OUT_DIR_ENV).map(|dir| PathBuf::from(dir).join(default_name)),
    };
    match path {
        Some(p) => std::fs::write(&p, bytes).map_err(CliError::Io),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(CliError::Io),
    }
}

fn load_hierarchy(path: &PathBuf) -> CliResult<BandHierarchy> {
    let file = std::fs::File::open(path).map_err(CliError::Io)?;
    let value: Value = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| config_err(format!("cannot parse band file: {e}")))?;
    // accept both the wrapped CLI document and a bare library export
    let payload = value.get("data").cloned().unwrap_or(value);
    let bytes = serde_json::to_vec(&payload).expect("re-serializable payload");
    Ok(BandHierarchy::read_json(&bytes[..])?)
}

fn run_bands(args: &BandsArgs) -> CliResult<()> {
    check_precision(args.precision)?;
    if args.kmax < 2 {
        return Err(config_err("--kmax must be ≥ 2"));
    }
    let lambda = parse_lambda(&args.lambda, args.precision + 64)?;
    if lambda <= 4 {
        return Err(config_err("band enumeration requires λ > 4"));
    }
    let config = format!(
        "bands --lambda {} --kmax {} --precision {}",
        args.lambda, args.kmax, args.precision
    );

    let h = match &args.resume {
        Some(path) => {
            let mut h = load_hierarchy(path)?;
            if Float::with_val(64, &h.lambda - &lambda).to_f64().abs() > 0.0 {
                return Err(config_err("--lambda does not match the resumed hierarchy"));
            }
            extend_bands(&mut h, args.kmax)?;
            h
        }
        None => enumerate_bands(&lambda, args.kmax, args.precision)?,
    };

    let bytes = match args.format {
        Format::Csv => {
            let mut buf = csv_header(&config, args.precision).into_bytes();
            h.write_csv(&mut buf)?;
            buf
        }
        Format::Json => {
            let mut raw = Vec::new();
            h.write_json(&mut raw)?;
            let data: Value =
                serde_json::from_slice(&raw).expect("hierarchy export is valid JSON");
            json_wrap(&config, args.precision, data)
        }
    };
    let ext = if args.format == Format::Csv { "csv" } else { "json" };
    write_output(
        &args.out,
        &format!("bands_lambda{}_k{}.{ext}", args.lambda, args.kmax),
        &bytes,
    )
}

fn run_counts(args: &CountsArgs) -> CliResult<()> {
    if args.kmax < 2 {
        return Err(config_err("--kmax must be ≥ 2"));
    }
    if args.kmax > 100_000 {
        return Err(config_err("--kmax too large"));
    }
    let config = format!(
        "counts --kmax {}{}",
        args.kmax,
        if args.envelope { " --envelope" } else { "" }
    );
    let table = CountTable::new(args.kmax);
    let bytes = if args.envelope {
        let rep = envelope_check(&table, args.kmax)?;
        match args.format {
            Format::Csv => {
                let mut buf = csv_header(&config, 128).into_bytes();
                rep.write_csv(&mut buf)?;
                buf
            }
            Format::Json => json_wrap(
                &config,
                128,
                serde_json::to_value(&rep).expect("serializable report"),
            ),
        }
    } else {
        match args.format {
            Format::Csv => {
                let mut buf = csv_header(&config, 0).into_bytes();
                table.write_csv(&mut buf)?;
                buf
            }
            Format::Json => {
                let mut raw = Vec::new();
                table.write_json(&mut raw)?;
                let data: Value =
                    serde_json::from_slice(&raw).expect("table export is valid JSON");
                json_wrap(&config, 0, data)
            }
        }
    };
    let ext = if args.format == Format::Csv { "csv" } else { "json" };
    let kind = if args.envelope { "envelope" } else { "counts" };
    write_output(&args.out, &format!("{kind}_k{}.{ext}", args.kmax), &bytes)
}

fn run_dims(args: &DimsArgs) -> CliResult<()> {
    check_precision(args.precision)?;
    if args.level < 4 {
        return Err(config_err("--level must be ≥ 4 for a usable fit window"));
    }
    let lambda = parse_lambda(&args.lambda, args.precision + 64)?;
    if lambda <= 4 {
        return Err(config_err("dimension bounds require λ > 4"));
    }
    let config = format!(
        "dims --lambda {} --level {} --precision {}",
        args.lambda, args.level, args.precision
    );
    let h = match &args.bands {
        Some(path) => {
            let mut h = load_hierarchy(path)?;
            extend_bands(&mut h, args.level + 1)?;
            h
        }
        None => enumerate_bands(&lambda, args.level + 1, args.precision)?,
    };
    let report = dimension_report(&h, args.level, None)?;
    let bytes = match args.format {
        Format::Json => json_wrap(
            &config,
            args.precision,
            serde_json::to_value(&report).expect("serializable report"),
        ),
        Format::Csv => {
            let mut buf = csv_header(&config, args.precision).into_bytes();
            buf.extend_from_slice(
                format!(
                    "# lower_bound: {:.6}, upper_bound: {}, empirical_dim: {:.6}\n",
                    report.lower_bound,
                    report
                        .upper_bound
                        .map(|u| format!("{u:.6}"))
                        .unwrap_or_else(|| "none".into()),
                    report.empirical_dim
                )
                .as_bytes(),
            );
            report.write_fit_csv(&mut buf)?;
            buf
        }
    };
    let ext = if args.format == Format::Csv { "csv" } else { "json" };
    write_output(
        &args.out,
        &format!("dims_lambda{}_level{}.{ext}", args.lambda, args.level),
        &bytes,
    )
}

fn run_dynamics(args: &DynamicsArgs) -> CliResult<()> {
    if args.lambda < 0.0 {
        return Err(config_err("--lambda must be ≥ 0"));
    }
    if !(0.0..1.0).contains(&args.theta) {
        return Err(config_err("--theta must lie in [0, 1)"));
    }
    if !(1..=20_000).contains(&args.nmax) {
        return Err(config_err("--nmax must lie in [1, 20000]"));
    }
    if !(args.tmin > 0.0 && args.tmax > args.tmin) {
        return Err(config_err("need 0 < tmin < tmax"));
    }
    if args.tpoints < 6 {
        return Err(config_err("--tpoints must be ≥ 6"));
    }
    let p_list: Vec<f64> = args
        .plist
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| config_err(format!("bad moment order {s:?} in --plist")))
        })
        .collect::<CliResult<_>>()?;
    if p_list.is_empty() || p_list.iter().any(|&p| p <= 0.0) {
        return Err(config_err("--plist needs positive moment orders"));
    }
    if p_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(config_err("--plist must be strictly increasing"));
    }
    let config = format!(
        "dynamics --lambda {} --theta {} --nmax {} --tmin {} --tmax {} --tpoints {} --plist {}{}",
        args.lambda,
        args.theta,
        args.nmax,
        args.tmin,
        args.tmax,
        args.tpoints,
        args.plist,
        if args.half_line { " --half-line" } else { "" }
    );

    let h = LatticeOperator::new(args.lambda, args.theta, args.nmax, args.half_line)?;
    let grid = geometric_grid(args.tmin, args.tmax, args.tpoints)?;
    let result = transport_exponents(&h, &p_list, &grid)?;
    let bytes = match args.format {
        Format::Json => json_wrap(
            &config,
            53,
            serde_json::to_value(&result).expect("serializable result"),
        ),
        Format::Csv => {
            let mut buf = csv_header(&config, 53).into_bytes();
            result.write_pout_csv(&mut buf)?;
            buf
        }
    };
    let ext = if args.format == Format::Csv { "csv" } else { "json" };
    write_output(
        &args.out,
        &format!("dynamics_lambda{}_n{}.{ext}", args.lambda, args.nmax),
        &bytes,
    )
}

fn run_orbit(args: &OrbitArgs) -> CliResult<()> {
    check_precision(args.precision)?;
    if args.kmax == 0 || args.kmax > 200 {
        return Err(config_err("--kmax must lie in [1, 200]"));
    }
    let energy = parse_real(args.precision, &args.energy)
        .ok_or_else(|| config_err(format!("cannot parse --energy {:?}", args.energy)))?;
    let lambda = parse_lambda(&args.lambda, args.precision)?;
    let config = format!(
        "orbit --energy {} --lambda {} --kmax {} --precision {}",
        args.energy, args.lambda, args.kmax, args.precision
    );

    let seq = trace_sequence(&energy, &lambda, args.kmax, args.precision)?;
    let verdict = spectrum_membership(&energy, &lambda, args.kmax)?;
    let verdict_json = match verdict.status {
        MembershipStatus::Bounded { k_cap } => json!({
            "status": "bounded",
            "k_cap": k_cap,
            "heuristic": verdict.heuristic,
            "precision_used": verdict.precision_used,
        }),
        MembershipStatus::Escaped { level } => json!({
            "status": "escaped",
            "level": level,
            "heuristic": verdict.heuristic,
            "precision_used": verdict.precision_used,
        }),
    };

    let bytes = match args.format {
        Format::Csv => {
            let mut buf = csv_header(&config, args.precision).into_bytes();
            buf.extend_from_slice(format!("# membership: {verdict_json}\n").as_bytes());
            buf.extend_from_slice(b"k,x_k,dx_k\n");
            for (i, (x, dx)) in seq.iter().enumerate() {
                let k = i as i64 - 1;
                buf.extend_from_slice(
                    format!("{k},{},{}\n", format_real(x), format_real(dx)).as_bytes(),
                );
            }
            buf
        }
        Format::Json => {
            let rows: Vec<Value> = seq
                .iter()
                .enumerate()
                .map(|(i, (x, dx))| {
                    json!({
                        "k": i as i64 - 1,
                        "x": format_real(x),
                        "dx": format_real(dx),
                    })
                })
                .collect();
            json_wrap(
                &config,
                args.precision,
                json!({ "membership": verdict_json, "sequence": rows }),
            )
        }
    };
    let ext = if args.format == Format::Csv { "csv" } else { "json" };
    write_output(
        &args.out,
        &format!("orbit_lambda{}_k{}.{ext}", args.lambda, args.kmax),
        &bytes,
    )
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Bands(a) => run_bands(a),
        Cmd::Counts(a) => run_counts(a),
        Cmd::Dims(a) => run_dims(a),
        Cmd::Dynamics(a) => run_dynamics(a),
        Cmd::Orbit(a) => run_orbit(a),
    };
    if let Err(e) = result {
        let doc = json!({ "error": e.message(), "exit": e.code() });
        eprintln!("{doc}");
        std::process::exit(e.code());
    }
}
