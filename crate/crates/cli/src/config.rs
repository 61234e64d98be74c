use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Splices the keys of a flat TOML document into the argument list as `--key value`
/// after the subcommand, skipping any key whose flag is already on the command line.
pub fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(pos) = args.iter().position(|a| a == "--config") else {
        return Ok(args);
    };
    let Some(path) = args.get(pos + 1) else {
        bail!("--config needs a file");
    };
    let text = std::fs::read_to_string(Path::new(path))
        .with_context(|| format!("reading config {}", path.to_string_lossy()))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| hyperdimer::Error::Invalid(format!("config {}: {e}", path.to_string_lossy())))?;

    let mut rest: Vec<OsString> = args[..pos].to_vec();
    rest.extend_from_slice(&args[pos + 2..]);
    // the subcommand is the first argument after the program name that is not a flag
    let sub = rest
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map(|i| i + 2)
        .unwrap_or(rest.len());
    let mut extra = Vec::new();
    for (key, value) in &table {
        let flag = format!("--{}", key.replace('_', "-"));
        if rest.iter().any(|a| a == flag.as_str()) {
            continue;
        }
        match value {
            toml::Value::Boolean(true) => extra.push(OsString::from(&flag)),
            toml::Value::Boolean(false) => {}
            toml::Value::String(s) => {
                extra.push(OsString::from(&flag));
                extra.push(OsString::from(s));
            }
            toml::Value::Integer(i) => {
                extra.push(OsString::from(&flag));
                extra.push(OsString::from(i.to_string()));
            }
            toml::Value::Float(x) => {
                extra.push(OsString::from(&flag));
                extra.push(OsString::from(x.to_string()));
            }
            toml::Value::Array(items) => {
                let parts: Vec<String> = items
                    .iter()
                    .map(|v| match v {
                        toml::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect();
                extra.push(OsString::from(&flag));
                extra.push(OsString::from(parts.join(",")));
            }
            _ => {
                return Err(hyperdimer::Error::Invalid(format!(
                    "config key {key:?} must be a string, number, boolean or array"
                ))
                .into())
            }
        }
    }
    let mut out = rest[..sub.min(rest.len())].to_vec();
    out.extend(extra);
    out.extend_from_slice(&rest[sub.min(rest.len())..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_keys_become_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "d = 2\nn = 3\nseed = 9\nn_list = [2, 3]\ncftp = true\n").unwrap();
        let args: Vec<OsString> = ["hyperdimer", "count", "--config", path.to_str().unwrap(), "--n", "4"]
            .iter()
            .map(OsString::from)
            .collect();
        let merged: Vec<String> = merge_config(args)
            .unwrap()
            .into_iter()
            .map(|a| a.into_string().unwrap())
            .collect();
        assert_eq!(
            merged,
            ["hyperdimer", "count", "--cftp", "--d", "2", "--n-list", "2,3", "--seed", "9", "--n", "4"]
        );
    }
}
