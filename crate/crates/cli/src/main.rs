//! Command-line experiment runner.

mod commands;
mod config;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use config::ExperimentConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Exponent,
    GrowthTest,
    UhCheck,
    Steer,
    PlanSegment,
    Castle,
    FreqBound,
    Surgery,
    DemoHopf,
    Selftest,
}

/// Runs one experiment. Any other `--key=value` argument (dotted keys allowed, e.g. `--base.grid=8192`) overrides the configuration.
#[derive(Debug, Parser)]
#[command(name = "cocycle-lab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads for grid sweeps.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory; defaults to the `output` field, then `$COCYCLE_LAB_OUT`, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

const CLAP_FLAGS: [&str; 5] = ["--config", "--threads", "--out", "--help", "--version"];

type Overrides = Vec<(String, String)>;

/// Separates clap's own arguments from `--key=value` overrides.
fn split_args(args: Vec<String>) -> Result<(Vec<String>, Overrides), String> {
    let mut clap_args = Vec::new();
    let mut overrides = Vec::new();
    for arg in args {
        let flag = arg.split('=').next().unwrap_or("");
        if !arg.starts_with("--") || CLAP_FLAGS.contains(&flag) {
            clap_args.push(arg);
        } else if let Some((key, value)) = arg[2..].split_once('=') {
            overrides.push((key.to_string(), value.to_string()));
        } else {
            return Err(format!("override `{arg}` needs the form --key=value"));
        }
    }
    Ok((clap_args, overrides))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (clap_args, overrides) = match split_args(std::env::args().collect()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(clap_args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let cfg = match ExperimentConfig::load(cli.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let out = cfg.output_dir(cli.out.as_deref());
    match commands::run(cli.command, &cfg, &out) {
        Ok(commands::Status::Pass) => ExitCode::SUCCESS,
        Ok(commands::Status::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_are_separated_from_flags() {
        let args = ["bin", "castle", "--threads", "2", "--out=dir", "--height=7", "--base.kind=silver"];
        let (clap_args, overrides) = split_args(args.iter().map(|s| s.to_string()).collect()).unwrap();
        assert_eq!(clap_args, ["bin", "castle", "--threads", "2", "--out=dir"]);
        assert_eq!(overrides, [("height".to_string(), "7".to_string()), ("base.kind".to_string(), "silver".to_string())]);
        assert!(split_args(vec!["--height".into()]).is_err());
    }
}
