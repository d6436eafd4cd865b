//! `key = value` config files merged into argv.  Keys are long flag names of
//! the chosen subcommand (or global flags); a flag given on the command line
//! replaces the config entry of the same name.

use std::ffi::OsString;
use std::path::Path;

use clap::{ArgAction, Command};

/// Value of `--config` in `args`, if present.
fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

fn given_on_command_line(args: &[OsString], long: &str) -> bool {
    let flag = format!("--{long}");
    let prefix = format!("--{long}=");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&prefix)
    })
}

/// `args` with config entries inserted right after the subcommand name.
pub fn merge(cmd: &Command, args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&args) else { return Ok(args) };
    let text = std::fs::read_to_string(Path::new(&path)).map_err(|e| format!("{}: {e}", path.to_string_lossy()))?;
    let kv = rankbound::io::parse_kv(&text).map_err(|e| format!("{}: {e}", path.to_string_lossy()))?;
    let Some(pos) = args.iter().position(|a| cmd.find_subcommand(a.to_string_lossy().as_ref()).is_some()) else {
        return Ok(args);
    };
    let sub = cmd.find_subcommand(args[pos].to_string_lossy().as_ref()).unwrap();
    let known = sub.get_arguments().chain(cmd.get_arguments());
    let mut extra: Vec<OsString> = Vec::new();
    for arg in known {
        let Some(long) = arg.get_long() else { continue };
        if long == "config" || given_on_command_line(&args, long) {
            continue;
        }
        let Some(value) = kv.get(long) else { continue };
        match arg.get_action() {
            ArgAction::SetTrue => match value.as_str() {
                "true" => extra.push(format!("--{long}").into()),
                "false" => {}
                v => return Err(format!("config key {long}: expected true or false, got {v}")),
            },
            ArgAction::Append => {
                for v in value.split([',', ' ']).filter(|v| !v.is_empty()) {
                    extra.push(format!("--{long}={v}").into());
                }
            }
            _ => extra.push(format!("--{long}={value}").into()),
        }
    }
    let mut out = args[..=pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}
