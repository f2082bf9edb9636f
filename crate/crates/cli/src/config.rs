//! `--config file.toml`: keys mirror the flags; flags given on the command line win.
//!
//! Top-level keys are global flags (`seed`, `out_dir`). A table named after a
//! subcommand path holds that command's flags, e.g. `[approx]` or `[gen.perm]`.
//! Arrays become repeated flags and `true` booleans bare switches.

use toml::{Table, Value};

const GLOBAL_WITH_VALUE: &[&str] = &["--config", "--seed", "--out-dir"];
const NESTED: &[&str] = &["gen", "analyze", "check"];

/// Position of the config path in `args`, if any.
fn config_path(args: &[String]) -> Option<String> {
    args.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            args.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        }
    })
}

/// Subcommand words, e.g. `["gen", "perm"]`, skipping global flags before them.
fn command_path(args: &[String]) -> Vec<String> {
    let mut path = Vec::new();
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if a.starts_with('-') {
            if GLOBAL_WITH_VALUE.contains(&a.as_str()) {
                i += 1;
            }
        } else {
            path.push(a.clone());
            if path.len() == 2 || !NESTED.contains(&path[0].as_str()) {
                break;
            }
        }
        i += 1;
    }
    path
}

fn flag_given(args: &[String], flag: &str) -> bool {
    args.iter().any(|a| a == flag || a.starts_with(&format!("{flag}=")))
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Integer(i) => Some(i.to_string()),
        Value::Float(f) => Some(f.to_string()),
        _ => None,
    }
}

/// Flags from `table` not already present in `args`. Nested tables are skipped.
fn flags_from(table: &Table, args: &[String]) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for (key, v) in table {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag_given(args, &flag) {
            continue;
        }
        match v {
            Value::Table(_) => {}
            Value::Boolean(true) => out.push(flag),
            Value::Boolean(false) => {}
            Value::Array(items) => {
                for it in items {
                    let s = scalar(it).ok_or_else(|| format!("config key `{key}`: unsupported array entry"))?;
                    out.push(flag.clone());
                    out.push(s);
                }
            }
            other => {
                let s = scalar(other).ok_or_else(|| format!("config key `{key}`: unsupported value"))?;
                out.push(flag);
                out.push(s);
            }
        }
    }
    Ok(out)
}

/// Returns `args` with config-file flags merged in.
pub fn apply(args: Vec<String>) -> Result<Vec<String>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let table: Table = text.parse().map_err(|e| format!("bad config {path}: {e}"))?;
    let cmd = command_path(&args);
    let global = flags_from(&table, &args)?;
    let mut sub = Vec::new();
    let mut node = Some(&table);
    for word in &cmd {
        node = node.and_then(|t| t.get(word)).and_then(Value::as_table);
    }
    if let (Some(t), false) = (node, cmd.is_empty()) {
        sub = flags_from(t, &args)?;
    }
    let mut merged = Vec::with_capacity(args.len() + global.len() + sub.len());
    merged.push(args[0].clone());
    merged.extend(global);
    merged.extend(args.into_iter().skip(1));
    merged.extend(sub);
    Ok(merged)
}
