//! `acf`: ring and ideal inspection, computation rates, rate sweeps and
//! end-to-end simulation.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 when the input is
//! well formed but degenerate (inert prime, zero coefficients, and so on).

mod parse;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use acf_core::ideal::{classify_prime, usable_primes, IdealError, PrimeIdeal, PrimeKind};
use acf_core::lattice::{count_points_in_ball, point_count_bounds, GammaChoice, LatticeError};
use acf_core::rate::{
    best_coefficients, computation_rate, ChannelVector, RateError, SearchOptions,
};
use acf_core::ring::{Ring, RingError, XiCase};
use acf_core::rng;
use acf_core::sim::{
    db_to_power, rate_sweep, run_e2e, ChannelMatrix, ChannelMode, E2EChannel, E2EConfig, SimError,
    SweepConfig,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::json;

const DEFAULT_SEED: u64 = 1;

#[derive(Parser, Debug)]
#[command(
    name = "acf",
    version,
    about = "Compute-and-forward over imaginary quadratic rings"
)]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Basis, discriminant and usable primes of a ring.
    RingInfo(RingInfoArgs),
    /// Decomposition of p and the ideal used for Construction A.
    PrimeInfo(PrimeInfoArgs),
    /// Computation rate of a coefficient vector, or the best one.
    Rate(RateArgs),
    /// Average network rates over an SNR grid.
    Sweep(SweepArgs),
    /// End-to-end transmission trials.
    E2e(E2eArgs),
    /// Lattice point counts in balls against the volume bounds.
    LemmaCheck(LemmaArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Key-value file (`key = value` per line); flags given on the command
    /// line take precedence.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RingInfoArgs {
    #[command(flatten)]
    common: Common,
    #[arg(short, allow_negative_numbers = true)]
    d: i64,
    /// List usable primes below this bound.
    #[arg(long, default_value_t = 60)]
    primes_below: u64,
}

#[derive(Args, Debug)]
struct PrimeInfoArgs {
    #[command(flatten)]
    common: Common,
    #[arg(short, allow_negative_numbers = true)]
    d: i64,
    #[arg(short)]
    p: u64,
    /// Range of coordinates in the sample of σ values.
    #[arg(long, default_value_t = 2)]
    samples: i64,
}

#[derive(Args, Debug)]
struct RateArgs {
    #[command(flatten)]
    common: Common,
    /// Number of users.
    #[arg(short = 'K')]
    users: usize,
    /// Channel coefficients, comma separated (`a+bj`).
    #[arg(long, value_parser = parse::complex_list, allow_hyphen_values = true)]
    h: std::vec::Vec<Complex64>,
    /// Coefficients `a+bj` meaning `a + bξ`; searched for when omitted.
    #[arg(long, value_parser = parse::complex_list, allow_hyphen_values = true)]
    a: Option<std::vec::Vec<Complex64>>,
    /// Linear SNR.
    #[arg(short = 'P', conflicts_with = "snr")]
    power: Option<f64>,
    /// SNR in dB.
    #[arg(long, allow_negative_numbers = true)]
    snr: Option<f64>,
    #[arg(short, default_value_t = -1, allow_negative_numbers = true)]
    d: i64,
    #[arg(long, default_value_t = SearchOptions::default().coord_cap)]
    coord_cap: i64,
}

#[derive(Args, Debug, Clone)]
struct ChannelArgs {
    /// Full channel matrix, rows separated by `;` (row m is relay m).
    #[arg(long, value_parser = parse::complex_matrix, allow_hyphen_values = true)]
    h_matrix: Option<std::vec::Vec<Vec<Complex64>>>,
    #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
    h11: Option<Complex64>,
    #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
    h12: Option<Complex64>,
    #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
    h21: Option<Complex64>,
    #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
    h22: Option<Complex64>,
}

impl ChannelArgs {
    fn matrix(&self) -> Result<Option<ChannelMatrix>, Fail> {
        let entries = [self.h11, self.h12, self.h21, self.h22];
        if entries.iter().any(Option::is_some) {
            if self.h_matrix.is_some() {
                return Err(Fail::Usage("give either --h-matrix or --h11..--h22".into()));
            }
            let [Some(a), Some(b), Some(c), Some(d)] = entries else {
                return Err(Fail::Usage(
                    "--h11, --h12, --h21 and --h22 go together".into(),
                ));
            };
            return Ok(Some(vec![vec![a, b], vec![c, d]]));
        }
        Ok(self.h_matrix.clone())
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum SweepMode {
    Fixed,
    Rayleigh,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "rayleigh")]
    mode: SweepMode,
    /// Number of users (and relays) for Rayleigh draws.
    #[arg(short = 'K', default_value_t = 2)]
    users: usize,
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long, value_parser = parse::int_list, allow_hyphen_values = true, default_value = "-1,-2,-3,-5,-6,-7")]
    rings: std::vec::Vec<i64>,
    /// `start:step:stop` or a list of dB values.
    #[arg(long, value_parser = parse::snr_grid, allow_hyphen_values = true, default_value = "0:5:30")]
    snr: std::vec::Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = SearchOptions::default().coord_cap)]
    coord_cap: i64,
    #[arg(long, default_value_t = SearchOptions::default().list_len)]
    list_len: usize,
    /// Keep per-draw records in the JSON report.
    #[arg(long)]
    per_trial: bool,
    #[arg(long, env = "ACF_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    /// Output file stem.
    #[arg(long, default_value = "sweep")]
    name: String,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum E2eChannelKind {
    Rayleigh,
    Fixed,
    Integer,
}

#[derive(Args, Debug)]
struct E2eArgs {
    #[command(flatten)]
    common: Common,
    #[arg(short, default_value_t = -1, allow_negative_numbers = true)]
    d: i64,
    #[arg(short, default_value_t = 13)]
    p: u64,
    /// Block length.
    #[arg(short = 'N', default_value_t = 4)]
    block_len: usize,
    #[arg(long, default_value_t = 0)]
    m_c: usize,
    #[arg(long, default_value_t = 2)]
    m_f: usize,
    #[arg(short = 'K', default_value_t = 2)]
    users: usize,
    #[arg(long, default_value_t = 25.0, allow_negative_numbers = true)]
    snr: f64,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "rayleigh")]
    channel: E2eChannelKind,
    #[command(flatten)]
    h: ChannelArgs,
    /// Coefficient matrix; an entry `a+bj` stands for `a + bξ`.
    #[arg(long, value_parser = parse::complex_matrix, allow_hyphen_values = true)]
    a_matrix: Option<std::vec::Vec<Vec<Complex64>>>,
    #[arg(long)]
    noiseless: bool,
    /// `closed-form`, `matched`, or a number.
    #[arg(long, default_value = "matched")]
    gamma: String,
    /// Monte Carlo samples for `--gamma matched`.
    #[arg(long, default_value_t = 100_000)]
    gamma_trials: usize,
    /// Scale a fixed channel so that its network rate exceeds the design
    /// rate by this many bits.
    #[arg(long)]
    rate_gap: Option<f64>,
    #[arg(long, default_value_t = 64)]
    code_candidates: usize,
    #[arg(long, default_value_t = SearchOptions::default().coord_cap)]
    coord_cap: i64,
    #[arg(long, env = "ACF_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, default_value = "e2e")]
    name: String,
}

#[derive(Args, Debug)]
struct LemmaArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_parser = parse::int_list, allow_hyphen_values = true, default_value = "-1,-2,-3,-5,-6,-7")]
    rings: std::vec::Vec<i64>,
    /// Block lengths to check (1 or 2).
    #[arg(long, value_parser = parse::int_list, default_value = "1,2")]
    len: std::vec::Vec<i64>,
    /// Random balls per ring and block length.
    #[arg(long, default_value_t = 20)]
    cases: usize,
    #[arg(long, default_value_t = 10.0)]
    max_r: f64,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug)]
enum Fail {
    Usage(String),
    Input(String),
}

impl From<SimError> for Fail {
    fn from(e: SimError) -> Fail {
        match e {
            SimError::Config(m) => Fail::Usage(m),
            e => Fail::Input(e.to_string()),
        }
    }
}

macro_rules! input_error {
    ($($t:ty),*) => {$(
        impl From<$t> for Fail {
            fn from(e: $t) -> Fail {
                Fail::Input(e.to_string())
            }
        }
    )*};
}

input_error!(RingError, IdealError, RateError, LatticeError, io::Error);

/// Splices `--config` file entries in front of the command-line flags so
/// that the later command-line values win.
fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, Fail> {
    let mut path = None;
    for (i, arg) in argv.iter().enumerate() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            path = argv.get(i + 1).map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = path else {
        return Ok(argv);
    };
    if argv.len() < 2 {
        return Ok(argv);
    }
    let extra = parse::config_args(&path).map_err(Fail::Usage)?;
    let mut out = argv[..2].to_vec();
    out.extend(extra.into_iter().map(OsString::from));
    out.extend_from_slice(&argv[2..]);
    Ok(out)
}

fn echo_config(value: serde_json::Value) {
    eprintln!("config: {value}");
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Fail> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn ring_info(args: &RingInfoArgs, out: &mut dyn Write) -> Result<(), Fail> {
    echo_config(json!({"command": "ring-info", "d": args.d, "primes_below": args.primes_below}));
    let ring = Ring::new(args.d)?;
    let xi = match ring.xi_case() {
        XiCase::Whole => format!("√{}", ring.d()),
        XiCase::Half => format!("(1+√{})/2", ring.d()),
    };
    writeln!(out, "ring {ring}")?;
    writeln!(out, "xi = {xi}")?;
    writeln!(out, "discriminant {}", ring.discriminant())?;
    writeln!(out, "covolume {:.6}", ring.covolume())?;
    writeln!(out, "units {}", ring.units().len())?;
    let primes: Vec<String> = usable_primes(&ring, args.primes_below)
        .into_iter()
        .map(|(p, k)| format!("{p} ({k})"))
        .collect();
    writeln!(
        out,
        "usable primes below {}: {}",
        args.primes_below,
        primes.join(", ")
    )?;
    Ok(())
}

fn prime_info(args: &PrimeInfoArgs, out: &mut dyn Write) -> Result<(), Fail> {
    echo_config(
        json!({"command": "prime-info", "d": args.d, "p": args.p, "samples": args.samples}),
    );
    let ring = Ring::new(args.d)?;
    let kind = classify_prime(&ring, args.p)?;
    if kind == PrimeKind::Inert {
        return Err(Fail::Input(format!(
            "{} is inert in {ring}: no ideal of norm p to build codes from",
            args.p
        )));
    }
    let id = PrimeIdeal::above(&ring, args.p)?;
    writeln!(out, "{kind}, ideal {id}, N={}", id.norm())?;
    writeln!(out, "sigma(xi) = {}", id.xi_image())?;
    let n = args.samples.clamp(0, 10);
    for a in -n..=n {
        let row: Vec<String> = (-n..=n)
            .map(|b| {
                let x = ring.elem(a, b);
                Ok(format!("{x}->{}", id.sigma(&x)?.value()))
            })
            .collect::<Result<_, IdealError>>()?;
        writeln!(out, "{}", row.join("  "))?;
    }
    Ok(())
}

fn ring_coords(z: Complex64) -> Result<(i64, i64), Fail> {
    if z.re.fract() != 0.0 || z.im.fract() != 0.0 {
        return Err(Fail::Usage(format!(
            "coefficient {z} is not a ring element"
        )));
    }
    Ok((z.re as i64, z.im as i64))
}

fn rate(args: &RateArgs, out: &mut dyn Write) -> Result<(), Fail> {
    let power = match (args.power, args.snr) {
        (Some(p), _) => p,
        (None, Some(db)) => db_to_power(db),
        (None, None) => return Err(Fail::Usage("give -P or --snr".into())),
    };
    echo_config(json!({
        "command": "rate", "K": args.users, "d": args.d, "P": power,
        "h": args.h.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        "a": args.a.as_ref().map(|a| a.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()),
        "coord_cap": args.coord_cap,
    }));
    if args.h.len() != args.users {
        return Err(Fail::Usage(format!(
            "-K {} but {} channel gains",
            args.users,
            args.h.len()
        )));
    }
    let ring = Ring::new(args.d)?;
    let ch = ChannelVector::new(args.h.clone(), power)?;
    match &args.a {
        Some(a) => {
            if a.len() != args.users {
                return Err(Fail::Usage(format!(
                    "-K {} but {} coefficients",
                    args.users,
                    a.len()
                )));
            }
            let a = a
                .iter()
                .map(|&z| ring_coords(z).map(|(x, y)| ring.elem(x, y)))
                .collect::<Result<Vec<_>, _>>()?;
            writeln!(out, "{:.4}", computation_rate(&ch, &a)?)?;
        }
        None => {
            let opts = SearchOptions {
                coord_cap: args.coord_cap,
                ..SearchOptions::default()
            };
            let search = best_coefficients(&ch, &ring, opts)?;
            let best = search.best(&ch, &ring);
            writeln!(out, "{:.4}", best.rate)?;
            let shown: Vec<String> = best.a.iter().map(ToString::to_string).collect();
            writeln!(out, "a = ({})", shown.join(", "))?;
            if search.capped {
                writeln!(out, "best within |coordinate| <= {}", args.coord_cap)?;
            }
        }
    }
    Ok(())
}

fn sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<(), Fail> {
    let fixed_h = args.channel.matrix()?;
    let (mode, users) = match args.mode {
        SweepMode::Fixed => {
            let h = fixed_h
                .as_ref()
                .ok_or_else(|| Fail::Usage("fixed mode needs --h-matrix or --h11..--h22".into()))?;
            (ChannelMode::Fixed, h.len())
        }
        SweepMode::Rayleigh => {
            if fixed_h.is_some() {
                return Err(Fail::Usage(
                    "a channel matrix is only used in fixed mode".into(),
                ));
            }
            (ChannelMode::Rayleigh, args.users)
        }
    };
    let cfg = SweepConfig {
        mode,
        users,
        snr_db: args.snr.clone(),
        rings: args.rings.clone(),
        trials: args.trials,
        seed: args.seed.unwrap_or(DEFAULT_SEED),
        fixed_h,
        search: SearchOptions {
            coord_cap: args.coord_cap,
            list_len: args.list_len,
        },
        keep_trials: args.per_trial,
    };
    echo_config(
        json!({"command": "sweep", "sweep": cfg, "out_dir": args.out_dir, "name": args.name}),
    );
    let report = rate_sweep(&cfg)?;
    let csv = report.to_csv();
    write_file(
        &args.out_dir.join(format!("{}.csv", args.name)),
        csv.as_bytes(),
    )?;
    write_file(
        &args.out_dir.join(format!("{}.json", args.name)),
        report.to_json().as_bytes(),
    )?;
    out.write_all(csv.as_bytes())?;
    Ok(())
}

fn coeff_coords(a: &[Vec<Complex64>]) -> Result<Vec<Vec<(i64, i64)>>, Fail> {
    a.iter()
        .map(|row| row.iter().map(|&z| ring_coords(z)).collect())
        .collect()
}

fn e2e(args: &E2eArgs, out: &mut dyn Write) -> Result<(), Fail> {
    let h = args.h.matrix()?;
    let a = args
        .a_matrix
        .as_ref()
        .map(|a| coeff_coords(a))
        .transpose()?;
    let channel = match args.channel {
        E2eChannelKind::Rayleigh => {
            if h.is_some() || a.is_some() {
                return Err(Fail::Usage(
                    "Rayleigh trials take no channel or coefficients".into(),
                ));
            }
            E2EChannel::Rayleigh
        }
        E2eChannelKind::Fixed => E2EChannel::Fixed {
            h: h.ok_or_else(|| {
                Fail::Usage("fixed channel needs --h-matrix or --h11..--h22".into())
            })?,
            a,
        },
        E2eChannelKind::Integer => E2EChannel::Integer {
            a: a.ok_or_else(|| Fail::Usage("integer channel needs --a-matrix".into()))?,
        },
    };
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    let gamma = match args.gamma.as_str() {
        "closed-form" => GammaChoice::ClosedForm,
        "matched" => GammaChoice::PowerMatched {
            trials: args.gamma_trials,
            seed: seed.wrapping_add(1),
        },
        g => GammaChoice::Fixed {
            gamma: g.parse().map_err(|_| {
                Fail::Usage(format!(
                    "--gamma {g:?}: expected closed-form, matched or a number"
                ))
            })?,
        },
    };
    let mut cfg = E2EConfig::new(args.d, args.p, args.block_len, args.m_c, args.m_f);
    cfg.users = args.users;
    cfg.snr_db = args.snr;
    cfg.trials = args.trials;
    cfg.seed = seed;
    cfg.channel = channel;
    cfg.noiseless = args.noiseless;
    cfg.gamma = gamma;
    cfg.rate_gap = args.rate_gap;
    cfg.code_candidates = args.code_candidates;
    cfg.search.coord_cap = args.coord_cap;
    echo_config(json!({"command": "e2e", "e2e": cfg, "out_dir": args.out_dir, "name": args.name}));

    let report = run_e2e(&cfg)?;
    let log_path = args.out_dir.join(format!("{}.jsonl", args.name));
    if let Some(dir) = log_path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut log = BufWriter::new(File::create(&log_path)?);
    report.write_jsonl(&mut log)?;
    log.flush()?;
    eprintln!("wrote {}", log_path.display());
    let summary = report.summary_json();
    write_file(
        &args.out_dir.join(format!("{}_summary.json", args.name)),
        summary.as_bytes(),
    )?;
    writeln!(
        out,
        "success {}/{} ({:.4}), design rate {:.4}, ideal {}",
        report.successes, report.trials, report.success_rate, report.design_rate, report.ideal
    )?;
    if let Some(r) = report.network_rate {
        writeln!(out, "network rate {r:.4}, channel gain {:.6}", report.gain)?;
    }
    Ok(())
}

fn lemma_check(args: &LemmaArgs, out: &mut dyn Write) -> Result<(), Fail> {
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    echo_config(json!({
        "command": "lemma-check", "rings": args.rings, "len": args.len,
        "cases": args.cases, "max_r": args.max_r, "seed": seed,
    }));
    if !(args.max_r > 0.0 && args.max_r <= 20.0) {
        return Err(Fail::Usage("--max-r must lie in (0, 20]".into()));
    }
    let mut s = rng::stream(seed, 0);
    let mut violations = 0;
    writeln!(out, "d,N,r,count,lower,upper,ok")?;
    for &d in &args.rings {
        let ring = Ring::new(d)?;
        for &len in &args.len {
            if !(1..=2).contains(&len) {
                return Err(Fail::Usage(format!(
                    "block length {len} not supported (1 or 2)"
                )));
            }
            let len = len as usize;
            for _ in 0..args.cases {
                let center: Vec<f64> = (0..2 * len)
                    .map(|_| 20.0 * rng::uniform(&mut s) - 10.0)
                    .collect();
                let r = args.max_r * rng::uniform(&mut s);
                let count = count_points_in_ball(&ring, len, &center, r)?;
                let (lo, hi) = point_count_bounds(&ring, len, r);
                let ok = (count as f64) >= lo && (count as f64) <= hi;
                violations += usize::from(!ok);
                writeln!(out, "{d},{len},{r:.6},{count},{lo:.3},{hi:.3},{ok}")?;
            }
        }
    }
    writeln!(out, "violations: {violations}")?;
    Ok(())
}

fn run(argv: Vec<OsString>, out: &mut dyn Write) -> Result<(), Fail> {
    let argv = expand_config(argv)?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // help and version
            write!(out, "{e}")?;
            return Ok(());
        }
        Err(e) => return Err(Fail::Usage(e.render().to_string())),
    };
    match &cli.command {
        Command::RingInfo(a) => ring_info(a, out),
        Command::PrimeInfo(a) => prime_info(a, out),
        Command::Rate(a) => rate(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::E2e(a) => e2e(a, out),
        Command::LemmaCheck(a) => lemma_check(a, out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(std::env::args_os().collect(), &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Usage(m)) => {
            eprintln!("{}", m.trim_end());
            ExitCode::from(1)
        }
        Err(Fail::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
