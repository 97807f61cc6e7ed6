//! Command-line front end: parses flags and config files, runs one
//! experiment from [`commands`], and writes the report bundle.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::parser::ValueSource;
use clap::{Arg, ArgAction, ArgMatches, Command};
use serde_json::{json, Value};

use commands::{CmdError, CommandSpec, COMMANDS};
use config::{ConfigError, ParamSpec, RunConfig, GLOBAL_PARAMS};
use report::{write_bundle, Outcome, Report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

fn param_args(cmd: Command, params: &'static [ParamSpec]) -> Command {
    params.iter().fold(cmd, |cmd, p| {
        cmd.arg(
            Arg::new(p.key)
                .long(p.key)
                .value_name("VALUE")
                .allow_hyphen_values(true)
                .help(format!("{} [default: {}]", p.help, p.default)),
        )
    })
}

/// The clap command tree. Every config key is also a `--key VALUE` flag.
pub fn cli() -> Command {
    let mut app = Command::new("wermer")
        .about("Numerical experiments on Wermer-type sets and their potentials")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(Arg::new("config").long("config").value_name("FILE").global(true).help("flat key = value config file"))
        .arg(
            Arg::new("print-config")
                .long("print-config")
                .action(ArgAction::SetTrue)
                .global(true)
                .help("print the resolved configuration and exit"),
        )
        .arg(
            Arg::new("selftest")
                .long("selftest")
                .action(ArgAction::SetTrue)
                .global(true)
                .help("run the invariant suite at reduced scale"),
        )
        .arg(
            Arg::new("threads")
                .long("threads")
                .value_name("N")
                .value_parser(clap::value_parser!(usize))
                .global(true)
                .help("cap on worker threads"),
        )
        .arg(
            Arg::new("out")
                .long("out")
                .value_name("DIR")
                .global(true)
                .help("write report.json, CSV tables and heatmaps here"),
        );
    for spec in COMMANDS {
        let sub = param_args(param_args(Command::new(spec.name).about(spec.about), GLOBAL_PARAMS), spec.params);
        app = app.subcommand(sub);
    }
    app.subcommand(param_args(
        Command::new("selftest").about("Run every subcommand's reduced-scale invariant suite"),
        GLOBAL_PARAMS,
    ))
}

fn all_params(spec: &CommandSpec) -> Vec<ParamSpec> {
    GLOBAL_PARAMS.iter().chain(spec.params).copied().collect()
}

fn flag_overrides(m: &ArgMatches, params: &[ParamSpec]) -> Vec<(String, String)> {
    params
        .iter()
        .filter(|p| m.value_source(p.key) == Some(ValueSource::CommandLine))
        .filter_map(|p| m.get_one::<String>(p.key).map(|v| (p.key.to_string(), v.clone())))
        .collect()
}

struct Invocation {
    file: Option<(String, String)>,
    overrides: Vec<(String, String)>,
    selftest: bool,
}

impl Invocation {
    fn config(&self, spec: &CommandSpec, selftest: bool) -> Result<RunConfig, ConfigError> {
        let (mode, preset) = if selftest { ("selftest", spec.selftest_preset) } else { ("run", &[][..]) };
        let file = self.file.as_ref().map(|(n, t)| (n.as_str(), t.as_str()));
        RunConfig::resolve(spec.name, mode, &all_params(spec), preset, file, &self.overrides)
    }
}

fn execute(spec: &CommandSpec, cfg: &RunConfig) -> Result<(Report, Outcome), ConfigError> {
    let start = Instant::now();
    let seed = cfg.seed()?;
    let f = if cfg.mode() == "selftest" { spec.selftest } else { spec.run };
    let outcome = match f(cfg) {
        Ok(o) => o,
        Err(CmdError::Config(e)) => return Err(e),
        Err(CmdError::Compute(e)) => {
            let mut o = Outcome::default();
            o.check("completed", false, e.to_string());
            o
        }
    };
    let report = Report {
        command: spec.name.to_string(),
        config_hash: cfg.hash(),
        seed,
        results: Value::Object(outcome.results.clone()),
        invariants: outcome.invariants.clone(),
        timing_ms: start.elapsed().as_millis() as u64,
    };
    Ok((report, outcome))
}

/// Runs every subcommand in selftest mode.
fn selftest_all(inv: &Invocation, out_dir: Option<&PathBuf>) -> Result<(Report, Outcome), String> {
    let start = Instant::now();
    let mut combined = Outcome::default();
    let mut echo = String::new();
    let mut seed = 0;
    for spec in COMMANDS {
        let cfg = inv.config(spec, true).map_err(|e| e.to_string())?;
        seed = cfg.seed().map_err(|e| e.to_string())?;
        echo.push_str(&cfg.echo());
        let (report, outcome) = execute(spec, &cfg).map_err(|e| e.to_string())?;
        if let Some(dir) = out_dir {
            write_bundle(&dir.join(spec.name), &report, &outcome).map_err(|e| e.to_string())?;
        }
        combined.set(spec.name, json!({"pass": outcome.all_pass(), "config_hash": report.config_hash}));
        for i in outcome.invariants {
            combined.check(&format!("{}/{}", spec.name, i.name), i.pass, i.detail);
        }
    }
    use sha2::{Digest, Sha256};
    let hash = Sha256::digest(echo.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    let report = Report {
        command: "selftest".into(),
        config_hash: hash,
        seed,
        results: Value::Object(combined.results.clone()),
        invariants: combined.invariants.clone(),
        timing_ms: start.elapsed().as_millis() as u64,
    };
    Ok((report, combined))
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code: 0 when every invariant passes, 1 when one fails,
/// 2 on usage or configuration errors.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(stdout, "{}", e.render());
            return EXIT_OK;
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let file = match sub.get_one::<String>("config") {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => Some((path.clone(), text)),
            Err(e) => {
                let _ = writeln!(stderr, "error: cannot read config file {path}: {e}");
                return EXIT_USAGE;
            }
        },
        None => None,
    };
    let spec = commands::find(name);
    let params = spec.map(all_params).unwrap_or_else(|| GLOBAL_PARAMS.to_vec());
    let inv = Invocation { file, overrides: flag_overrides(sub, &params), selftest: sub.get_flag("selftest") };
    let out_dir = sub.get_one::<String>("out").map(PathBuf::from);

    if sub.get_flag("print-config") {
        let specs: Vec<&CommandSpec> = match spec {
            Some(s) => vec![s],
            None => COMMANDS.iter().collect(),
        };
        for s in specs {
            match inv.config(s, inv.selftest || spec.is_none()) {
                Ok(cfg) => {
                    let _ = write!(stdout, "{}", cfg.echo());
                }
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    return EXIT_USAGE;
                }
            }
        }
        return EXIT_OK;
    }

    let work = || -> Result<(Report, Outcome), String> {
        match spec {
            Some(s) => {
                let cfg = inv.config(s, inv.selftest).map_err(|e| e.to_string())?;
                execute(s, &cfg).map_err(|e| e.to_string())
            }
            None => selftest_all(&inv, out_dir.as_ref()),
        }
    };
    let result = match sub.get_one::<usize>("threads") {
        Some(&n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(work),
            Err(e) => Err(format!("cannot build thread pool: {e}")),
        },
        None => work(),
    };
    let (report, outcome) = match result {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let _ = write!(stdout, "{}", report.to_json());
    if let Some(dir) = &out_dir {
        if let Err(e) = write_bundle(dir, &report, &outcome) {
            let _ = writeln!(stderr, "error: cannot write {}: {e}", dir.display());
            return EXIT_USAGE;
        }
    }
    for i in report.invariants.iter().filter(|i| !i.pass) {
        let _ = writeln!(stderr, "invariant failed: {}: {}", i.name, i.detail);
    }
    if report.invariants.iter().all(|i| i.pass) {
        EXIT_OK
    } else {
        EXIT_INVARIANT
    }
}
