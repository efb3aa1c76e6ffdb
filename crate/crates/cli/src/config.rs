//! `key = value` config files, spliced into the argument list as flags so
//! that explicit command-line flags override them.

use std::fs;

use crate::CliError;

pub const SUBCOMMANDS: &[&str] = &["gen", "rip", "recover", "phase", "embed", "baseline"];

/// Parses a config file into `--key value` pairs. Blank lines and lines
/// starting with `#` are ignored. `true` becomes a bare flag, `false` drops it.
pub fn parse_config(text: &str) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Argument(format!("config line {}: expected key = value", lineno + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() {
            return Err(CliError::Argument(format!("config line {}: empty key", lineno + 1)));
        }
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            _ => {
                out.push(format!("--{key}"));
                out.push(value.to_string());
            }
        }
    }
    Ok(out)
}

/// Removes `--config FILE` from `args` and inserts the file's flags right
/// after the subcommand name.
pub fn expand(args: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            let p = it
                .next()
                .ok_or_else(|| CliError::Argument("--config needs a file".into()))?;
            path = Some(p);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Argument(format!("cannot read config {path}: {e}")))?;
    let extra = parse_config(&text)?;
    let at = rest
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.as_str()))
        .map_or(rest.len(), |i| i + 1);
    rest.splice(at..at, extra);
    Ok(rest)
}
