//! `key=value` config files.
//!
//! `--config FILE` presets any long flag of the invoked subcommand. The
//! file holds one `key=value` pair per line (`#` starts a comment); each
//! pair expands to `--key value` injected right after the subcommand
//! token, so flags given on the command line — which come later — win.

use crate::CliError;

/// Parses config text into `(key, value)` pairs.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "config line {}: expected key=value, got `{line}`",
                idx + 1
            )));
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", idx + 1)));
        }
        pairs.push((key.to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

/// Expands `--config FILE` in raw argv into injected flags, dropping the
/// `--config` tokens themselves. Returns the rewritten argument vector.
pub fn expand_args(argv: Vec<String>) -> Result<Vec<String>, CliError> {
    // Strip --config while recording its value and the subcommand token.
    let mut stripped: Vec<String> = Vec::with_capacity(argv.len());
    let mut config_path: Option<String> = None;
    let mut subcommand_pos: Option<usize> = None;
    let mut i = 0;
    while i < argv.len() {
        let arg = &argv[i];
        if i > 0 {
            if arg == "--config" {
                if i + 1 >= argv.len() {
                    return Err(CliError::Usage("--config requires a path".into()));
                }
                config_path = Some(argv[i + 1].clone());
                i += 2;
                continue;
            }
            if let Some(path) = arg.strip_prefix("--config=") {
                config_path = Some(path.to_string());
                i += 1;
                continue;
            }
            if subcommand_pos.is_none() && !arg.starts_with('-') {
                subcommand_pos = Some(stripped.len());
            }
        }
        stripped.push(arg.clone());
        i += 1;
    }

    let Some(path) = config_path else {
        return Ok(stripped);
    };
    let Some(sub_pos) = subcommand_pos else {
        // No subcommand; let clap report the usage error.
        return Ok(stripped);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Io(format!("reading config {path}: {e}")))?;
    let pairs = parse_pairs(&text)?;

    // Flags given explicitly win: skip config keys the user already set.
    let explicit: Vec<&str> = stripped[sub_pos + 1..]
        .iter()
        .filter_map(|arg| {
            let flag = arg.strip_prefix("--")?;
            Some(flag.split_once('=').map_or(flag, |(k, _)| k))
        })
        .collect();

    let mut out = stripped[..=sub_pos].to_vec();
    for (key, value) in pairs {
        if explicit.contains(&key.as_str()) {
            continue;
        }
        out.push(format!("--{key}"));
        out.push(value);
    }
    out.extend_from_slice(&stripped[sub_pos + 1..]);
    Ok(out)
}
