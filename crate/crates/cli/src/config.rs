//! `key = value` config files, spliced into the argument list as long flags.
//! Flags given on the command line come later and therefore win.

use std::ffi::OsString;
use std::path::Path;

const BOOL_FLAGS: [&str; 2] = ["strict", "oracle"];
const GLOBAL_WITH_VALUE: [&str; 2] = ["--config", "--out"];

pub fn parse_config(text: &str, origin: &Path) -> Result<Vec<OsString>, String> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!(
                "{}:{}: expected 'key = value', got '{line}'",
                origin.display(),
                n + 1
            ));
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(format!(
                "{}:{}: invalid key '{key}'",
                origin.display(),
                n + 1
            ));
        }
        if BOOL_FLAGS.contains(&key.as_str()) {
            match value {
                "true" => out.push(format!("--{key}").into()),
                "false" => {}
                _ => {
                    return Err(format!(
                        "{}:{}: '{key}' takes true or false",
                        origin.display(),
                        n + 1
                    ))
                }
            }
        } else {
            out.push(format!("--{key}").into());
            out.push(value.into());
        }
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// Index just past the subcommand name, where config flags are inserted.
fn insertion_point(args: &[OsString]) -> usize {
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if GLOBAL_WITH_VALUE.contains(&s.as_ref()) {
            i += 2;
        } else if s.starts_with('-') {
            i += 1;
        } else {
            return i + 1;
        }
    }
    args.len()
}

pub fn expand_args(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let extra = parse_config(&text, path)?;
    let at = insertion_point(&args);
    let mut out = args[..at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[at..]);
    Ok(out)
}
