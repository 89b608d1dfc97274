// SPDX-License-Identifier: Apache-2.0

//! Layering a TOML config file under command-line flags.
//!
//! Config values are spliced into argv as ordinary flags, placed before any
//! flag the user typed; with `args_override_self` the later occurrence wins.
//! Top-level keys are globals or shared defaults (applied only where the
//! subcommand has such a flag). A table named after the subcommand, e.g.
//! `[train]` or `[pattern.pgm]`, holds keys for that subcommand only, and
//! unknown keys there are rejected.

use std::ffi::OsString;
use std::path::Path;

use clap::Command;

use crate::args::VALUE_GLOBALS;

const GLOBAL_KEYS: [&str; 2] = ["seed", "threads"];

/// Index just past the next subcommand token starting at `from`, skipping
/// global flags and their values.
fn subcommand_end(argv: &[OsString], from: usize) -> Option<usize> {
    let mut i = from;
    while i < argv.len() {
        let tok = argv[i].to_string_lossy();
        if !tok.starts_with('-') {
            return Some(i + 1);
        }
        i += if !tok.contains('=') && VALUE_GLOBALS.contains(&tok.as_ref()) { 2 } else { 1 };
    }
    None
}

/// The `--config` value from raw argv, if present.
pub fn find_config(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter().skip(1);
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

fn flag_values(key: &str, value: &toml::Value) -> Result<Vec<OsString>, String> {
    let flag = format!("--{}", key.replace('_', "-"));
    let scalar = |v: &toml::Value| match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        other => Err(format!("config key '{key}': unsupported value {other}")),
    };
    Ok(match value {
        toml::Value::Boolean(true) => vec![flag.into()],
        toml::Value::Boolean(false) => vec![],
        toml::Value::Array(items) => {
            let parts = items.iter().map(scalar).collect::<Result<Vec<_>, _>>()?;
            vec![flag.into(), parts.join(",").into()]
        }
        v => vec![flag.into(), scalar(v)?.into()],
    })
}

fn has_flag(cmd: &Command, key: &str) -> bool {
    let long = key.replace('_', "-");
    cmd.get_arguments().any(|a| a.get_long() == Some(long.as_str()))
}

/// Returns argv with the config file's values spliced in.
pub fn layer(cmd: &Command, argv: Vec<OsString>, path: &Path) -> Result<Vec<OsString>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| format!("config {}: {e}", path.display()))?;

    // walk to the leaf subcommand
    let mut names = Vec::new();
    let mut leaf = cmd;
    let mut insert_at = 1;
    while leaf.has_subcommands() {
        let Some(end) = subcommand_end(&argv, insert_at) else {
            return Ok(argv); // clap will report the missing subcommand
        };
        let name = argv[end - 1].to_string_lossy().into_owned();
        let Some(sub) = leaf.find_subcommand(&name) else {
            return Ok(argv);
        };
        names.push(sub.get_name().to_string());
        leaf = sub;
        insert_at = end;
    }

    let mut globals = Vec::new();
    let mut locals = Vec::new();
    for (k, v) in &table {
        if v.is_table() {
            continue;
        }
        if GLOBAL_KEYS.contains(&k.as_str()) {
            globals.extend(flag_values(k, v)?);
        } else if k == "config" || k == "out" {
            return Err(format!("config key '{k}' is only accepted as a flag"));
        } else if has_flag(leaf, k) {
            locals.extend(flag_values(k, v)?);
        }
    }
    // the table for this subcommand, e.g. [pattern.pgm]
    let mut section = Some(&table);
    for n in &names {
        section = section.and_then(|t| t.get(n)).and_then(|v| v.as_table());
    }
    if let Some(sec) = section.filter(|_| !names.is_empty()) {
        for (k, v) in sec {
            if v.is_table() {
                continue;
            }
            if !has_flag(leaf, k) {
                return Err(format!("config [{}]: unknown key '{k}'", names.join(".")));
            }
            locals.extend(flag_values(k, v)?);
        }
    }

    let mut out = Vec::with_capacity(argv.len() + globals.len() + locals.len());
    out.push(argv[0].clone());
    out.extend(globals);
    out.extend(argv[1..insert_at].iter().cloned());
    out.extend(locals);
    out.extend(argv[insert_at..].iter().cloned());
    Ok(out)
}
