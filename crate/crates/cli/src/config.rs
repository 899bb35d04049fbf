//! `key = value` config files, merged into the argument list as flags.
//!
//! Keys are long flag names without the leading dashes. A key is only
//! injected when the command line does not already set it, so the command
//! line wins. Keys that the chosen subcommand does not accept are ignored.
//! Boolean flags take `true` or `false`.

use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Command};

/// Parsed `key = value` pairs in file order.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected key = value", no + 1);
        };
        let key = k.trim().trim_start_matches("--").to_string();
        if key.is_empty() {
            bail!("config line {}: empty key", no + 1);
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

fn sets_flag(args: &[String], name: &str) -> bool {
    let long = format!("--{name}");
    let eq = format!("--{name}=");
    args.iter().any(|a| *a == long || a.starts_with(&eq))
}

/// Appends config-file flags to `args` (program name first).
pub fn merge(cmd: &Command, args: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path)).with_context(|| format!("reading config {path}"))?;
    let pairs = parse(&text)?;
    let sub = args
        .iter()
        .skip(1)
        .find_map(|a| cmd.find_subcommand(a))
        .cloned();
    let known = |name: &str| {
        cmd.get_arguments()
            .chain(sub.iter().flat_map(|s| s.get_arguments()))
            .find(|a| a.get_long() == Some(name))
            .cloned()
    };
    let mut out = args.clone();
    for (key, value) in pairs {
        if key == "config" || sets_flag(&args, &key) {
            continue;
        }
        let Some(arg) = known(&key) else { continue };
        match arg.get_action() {
            ArgAction::SetTrue => match value.as_str() {
                "true" => out.push(format!("--{key}")),
                "false" => {}
                _ => bail!("config key {key}: expected true or false, got {value:?}"),
            },
            _ => out.push(format!("--{key}={value}")),
        }
    }
    Ok(out)
}
