//! `key=value` config files merged into the command line.
//!
//! A bare key applies to every subcommand that has a flag of that name; `run.n=6` applies to
//! one subcommand only. Flags given on the command line win, then `VECSUB_*` variables, then
//! the file.

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Command};
use std::collections::BTreeMap;
use std::path::Path;

pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!(vecsub::Error::parse(i + 1, 1, format!("config line needs key=value: `{line}`")));
        };
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// Path from `--config X`, `--config=X` or `VECSUB_CONFIG`.
pub fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    std::env::var("VECSUB_CONFIG").ok().filter(|s| !s.is_empty())
}

/// Append config values as flags for the subcommand found in `args`.
pub fn merge(cmd: &Command, args: &[String], cfg: &BTreeMap<String, String>) -> Vec<String> {
    let mut out = args.to_vec();
    let Some(sub) = args.iter().skip(1).find_map(|a| cmd.find_subcommand(a)) else {
        return out;
    };
    let given = |long: &str| args.iter().any(|a| a == &format!("--{long}") || a.starts_with(&format!("--{long}=")));
    for arg in sub.get_arguments().chain(cmd.get_arguments()) {
        let Some(long) = arg.get_long() else { continue };
        if long == "config" || given(long) {
            continue;
        }
        if arg.get_env().and_then(|e| std::env::var_os(e)).is_some() {
            continue;
        }
        let scoped = format!("{}.{long}", sub.get_name());
        let Some(v) = cfg.get(&scoped).or_else(|| cfg.get(long)) else { continue };
        match arg.get_action() {
            ArgAction::SetTrue => {
                if matches!(v.as_str(), "1" | "true" | "yes" | "on") {
                    out.push(format!("--{long}"));
                }
            }
            ArgAction::Append => {
                for part in v.split_whitespace() {
                    out.push(format!("--{long}={part}"));
                }
            }
            _ => out.push(format!("--{long}={v}")),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::{Arg, Command};

    fn cmd() -> Command {
        Command::new("t")
            .arg(Arg::new("strict").long("strict").global(true).action(ArgAction::SetTrue))
            .subcommand(Command::new("run").arg(Arg::new("n").long("n")))
            .subcommand(Command::new("rate").arg(Arg::new("n0").long("n0")))
    }

    #[test]
    fn scoped_and_bare_keys() {
        let cfg = parse_config("n = 4\nrate.n0=3 # comment\nstrict=true\n").unwrap();
        let args: Vec<String> = ["t", "run"].iter().map(|s| s.to_string()).collect();
        assert_eq!(merge(&cmd(), &args, &cfg), ["t", "run", "--n=4", "--strict"]);
        let args: Vec<String> = ["t", "run", "--n", "7"].iter().map(|s| s.to_string()).collect();
        assert_eq!(merge(&cmd(), &args, &cfg), ["t", "run", "--n", "7", "--strict"]);
        let args: Vec<String> = ["t", "rate"].iter().map(|s| s.to_string()).collect();
        assert_eq!(merge(&cmd(), &args, &cfg), ["t", "rate", "--n0=3", "--strict"]);
    }

    #[test]
    fn bad_line() {
        assert!(parse_config("novalue\n").is_err());
    }
}
