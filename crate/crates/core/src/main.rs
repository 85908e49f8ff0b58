use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};

use irs_hst::harness::{
    emit_csv, experiment_frame, format_sig9, parse_schemes, run_frame_experiment, run_sweep, run_throughput_experiment,
    trial_channel, write_csv, Axis, Scheme, SweepSpec,
};
use irs_hst::scenario::{build_schedule, ScenarioConfig, CONFIG_KEYS};

fn long_version() -> String {
    format!(
        "{} ({}-{}, {} build)",
        env!("CARGO_PKG_VERSION"),
        std::env::consts::ARCH,
        std::env::consts::OS,
        if cfg!(debug_assertions) { "debug" } else { "optimized" }
    )
}

fn seed_args() -> [Arg; 2] {
    [
        Arg::new("seed")
            .long("seed")
            .value_parser(value_parser!(u64))
            .default_value("1")
            .help("Master random seed"),
        Arg::new("trial")
            .long("trial")
            .value_parser(value_parser!(u64))
            .default_value("0")
            .help("Trial index"),
    ]
}

fn schemes_arg(default: &'static str) -> Arg {
    Arg::new("schemes")
        .long("schemes")
        .default_value(default)
        .help("Comma-separated schemes: proposed, proposed_no_pa, nce, sr, rps, no_irs")
}

fn cli() -> Command {
    let mut cmd =
        Command::new("irs-hst")
            .about("Refracting-surface assisted NOMA for high-speed trains: link-level simulator")
            .version(env!("CARGO_PKG_VERSION"))
            .long_version(long_version())
            .subcommand_required(true)
            .arg_required_else_help(true)
            .arg(
                Arg::new("config")
                    .long("config")
                    .global(true)
                    .value_parser(value_parser!(PathBuf))
                    .help("Scenario file of key = value lines; command-line keys override it"),
            )
            .subcommand(
                Command::new("sweep")
                    .about("Monte-Carlo sweep over one parameter, written as CSV")
                    .arg(Arg::new("axis").long("axis").required(true).help(
                        "users_per_cluster, irs_elements, k_factor, quant_bits or speed (km/h, reports throughput)",
                    ))
                    .arg(
                        Arg::new("values")
                            .long("values")
                            .required(true)
                            .help("Comma-separated, strictly increasing axis values"),
                    )
                    .arg(
                        Arg::new("trials")
                            .long("trials")
                            .value_parser(value_parser!(usize))
                            .default_value("200"),
                    )
                    .arg(schemes_arg("proposed,nce,sr,rps,no_irs"))
                    .arg(seed_args()[0].clone())
                    .arg(
                        Arg::new("out")
                            .long("out")
                            .value_parser(value_parser!(PathBuf))
                            .help("Output CSV path (default: standard output)"),
                    )
                    .arg(
                        Arg::new("workers")
                            .long("workers")
                            .value_parser(value_parser!(usize))
                            .help("Worker threads (default: all cores)"),
                    ),
            )
            .subcommand(
                Command::new("frame")
                    .about("Designs one frame with every scheme and prints the rates")
                    .args(seed_args())
                    .arg(schemes_arg("proposed,nce,sr,rps,no_irs"))
                    .arg(
                        Arg::new("trace")
                            .long("trace")
                            .value_parser(value_parser!(PathBuf))
                            .help("Write the alternating-optimization trace CSV here"),
                    ),
            )
            .subcommand(
                Command::new("throughput")
                    .about("Window throughput over the served frames, with and without power allocation")
                    .args(seed_args())
                    .arg(schemes_arg("proposed,proposed_no_pa"))
                    .arg(
                        Arg::new("no-pa")
                            .long("no-pa")
                            .action(ArgAction::SetTrue)
                            .help("Skip power allocation for every scheme"),
                    )
                    .arg(
                        Arg::new("pa-trace")
                            .long("pa-trace")
                            .value_parser(value_parser!(PathBuf))
                            .help("Write the power-allocation traces of the first allocating scheme here"),
                    ),
            )
            .subcommand(
                Command::new("dump-channel")
                    .about("Writes channel realizations as frame,link,row,col,re,im")
                    .args(seed_args())
                    .arg(
                        Arg::new("all-frames")
                            .long("all-frames")
                            .action(ArgAction::SetTrue)
                            .help("Dump every served frame instead of the experiment frame"),
                    )
                    .arg(
                        Arg::new("out")
                            .long("out")
                            .value_parser(value_parser!(PathBuf))
                            .help("Output CSV path (default: standard output)"),
                    ),
            );
    for key in CONFIG_KEYS {
        let dashed = key.replace('_', "-");
        let mut arg = Arg::new(*key)
            .long(*key)
            .global(true)
            .value_name("VALUE")
            .help_heading("Scenario overrides");
        if dashed != *key {
            arg = arg.visible_alias(dashed);
        }
        cmd = cmd.arg(arg);
    }
    cmd
}

fn load_config(m: &ArgMatches) -> Result<ScenarioConfig> {
    let mut cfg = match m.get_one::<PathBuf>("config") {
        Some(path) => ScenarioConfig::from_file(path)?,
        None => ScenarioConfig::default(),
    };
    for key in CONFIG_KEYS {
        if let Some(value) = m.get_one::<String>(key) {
            cfg.set(key, value).map_err(anyhow::Error::msg)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("{}: cannot create", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).with_context(|| format!("{}: cannot create", path.display()))?);
    f(&mut out)
        .and_then(|_| out.flush())
        .with_context(|| format!("{}: write failed", path.display()))
}

fn parse_values(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("invalid axis value '{s}'"))
        })
        .collect()
}

fn sweep(m: &ArgMatches, cfg: &ScenarioConfig) -> Result<()> {
    let spec = SweepSpec {
        axis: m.get_one::<String>("axis").expect("required").parse::<Axis>()?,
        values: parse_values(m.get_one::<String>("values").expect("required"))?,
        trials: *m.get_one::<usize>("trials").expect("defaulted"),
        schemes: parse_schemes(m.get_one::<String>("schemes").expect("defaulted"))?,
        seed: *m.get_one::<u64>("seed").expect("defaulted"),
        workers: m.get_one::<usize>("workers").copied(),
    };
    let result = run_sweep(&spec, cfg)?;
    for e in &result.errors {
        eprintln!("warning: {} = {} skipped: {}", spec.axis, e.value, e.message);
    }
    match m.get_one::<PathBuf>("out") {
        Some(path) => emit_csv(&result, path)?,
        None => {
            let mut out = output(None)?;
            write_csv(&result, &mut out)?;
            out.flush()?;
        }
    }
    if result.rows.is_empty() && !result.errors.is_empty() {
        bail!("every axis value failed");
    }
    Ok(())
}

fn seed_trial(m: &ArgMatches) -> (u64, u64) {
    (
        *m.get_one::<u64>("seed").expect("defaulted"),
        *m.get_one::<u64>("trial").expect("defaulted"),
    )
}

fn frame(m: &ArgMatches, cfg: &ScenarioConfig) -> Result<()> {
    let (seed, trial) = seed_trial(m);
    let schemes = parse_schemes(m.get_one::<String>("schemes").expect("defaulted"))?;
    let outcomes = run_frame_experiment(cfg, &schemes, seed, trial)?;
    let mut out = output(None)?;
    writeln!(out, "# frame = {}", experiment_frame(cfg)?)?;
    writeln!(out, "scheme,rate,gain")?;
    for o in &outcomes {
        writeln!(out, "{},{},{}", o.scheme, format_sig9(o.rate), format_sig9(o.gain))?;
    }
    out.flush()?;
    if let Some(path) = m.get_one::<PathBuf>("trace") {
        let ao = match outcomes.iter().find_map(|o| o.ao.as_ref()) {
            Some(ao) => ao.clone(),
            None => run_frame_experiment(cfg, &[Scheme::Proposed], seed, trial)?
                .remove(0)
                .ao
                .expect("proposed scheme records its optimization"),
        };
        write_file(path, |w| ao.write_trace(w))?;
    }
    Ok(())
}

fn throughput(m: &ArgMatches, cfg: &ScenarioConfig) -> Result<()> {
    let (seed, trial) = seed_trial(m);
    let schemes = parse_schemes(m.get_one::<String>("schemes").expect("defaulted"))?;
    let with_pa = !m.get_flag("no-pa");
    let outcomes = run_throughput_experiment(cfg, &schemes, with_pa, seed, trial)?;
    let mut out = output(None)?;
    writeln!(out, "scheme,throughput,equal_split,allocated")?;
    for o in &outcomes {
        let allocated = o.allocated.map_or_else(|| "none".to_string(), format_sig9);
        writeln!(
            out,
            "{},{},{},{}",
            o.scheme,
            format_sig9(o.throughput()),
            format_sig9(o.equal_split),
            allocated
        )?;
    }
    out.flush()?;
    if let Some(path) = m.get_one::<PathBuf>("pa-trace") {
        let Some(o) = outcomes.iter().find(|o| !o.windows.is_empty()) else {
            bail!("no scheme ran power allocation, so there is no trace to write");
        };
        write_file(path, |w| {
            writeln!(w, "window,iteration,mu,max_dlambda,max_dbeta,objective")?;
            for (i, win) in o.windows.iter().enumerate() {
                let mut buf = Vec::new();
                win.write_trace(&mut buf)?;
                for line in String::from_utf8_lossy(&buf).lines().skip(1) {
                    writeln!(w, "{i},{line}")?;
                }
            }
            Ok(())
        })?;
    }
    Ok(())
}

fn dump_channel(m: &ArgMatches, cfg: &ScenarioConfig) -> Result<()> {
    let (seed, trial) = seed_trial(m);
    let frames: Vec<usize> = if m.get_flag("all-frames") {
        build_schedule(cfg)?.served_frames().collect()
    } else {
        vec![experiment_frame(cfg)?]
    };
    let mut out = output(m.get_one::<PathBuf>("out"))?;
    writeln!(out, "frame,link,row,col,re,im")?;
    for k in frames {
        let ch = trial_channel(cfg, k, seed, trial)?;
        let mut buf = Vec::new();
        ch.write_dump(&mut buf)?;
        // Each dump starts with its own header.
        for line in String::from_utf8_lossy(&buf).lines().skip(1) {
            writeln!(out, "{line}")?;
        }
    }
    out.flush()?;
    Ok(())
}

fn run() -> Result<()> {
    let m = cli().try_get_matches().unwrap_or_else(|e| e.exit());
    let cfg = load_config(&m)?;
    match m.subcommand() {
        Some(("sweep", sub)) => sweep(sub, &cfg),
        Some(("frame", sub)) => frame(sub, &cfg),
        Some(("throughput", sub)) => throughput(sub, &cfg),
        Some(("dump-channel", sub)) => dump_channel(sub, &cfg),
        _ => unreachable!("a subcommand is required"),
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<io::Error>())
        .any(|io| io.kind() == io::ErrorKind::BrokenPipe)
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            let mut message = String::new();
            for cause in e.chain().map(ToString::to_string) {
                if !message.contains(&cause) {
                    if !message.is_empty() {
                        message.push_str(": ");
                    }
                    message.push_str(&cause);
                }
            }
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
