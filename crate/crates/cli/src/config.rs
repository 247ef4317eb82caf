//! Config files hold `key = value` lines whose keys are long flag names of
//! the subcommands (`_` and `-` are interchangeable). Values are spliced into
//! the argument list right after the subcommand, so flags given on the
//! command line override them.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Command};

use crate::error::CliError;

pub fn parse(text: &str, path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Data(format!("{}:{}: expected key = value, got `{line}`", path.display(), n + 1))
        })?;
        out.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

/// Position of the subcommand name in `argv` and the config path given on
/// the command line before it, if any.
fn locate(argv: &[OsString]) -> (Option<usize>, Option<PathBuf>) {
    let mut config = None;
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].to_string_lossy();
        if a == "--config" {
            config = argv.get(i + 1).map(PathBuf::from);
            i += 2;
        } else if let Some(p) = a.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
            i += 1;
        } else if a.starts_with('-') {
            i += 1;
        } else {
            return (Some(i), config);
        }
    }
    (None, config)
}

fn config_after_subcommand(argv: &[OsString], from: usize) -> Option<PathBuf> {
    let mut it = argv[from..].iter().map(|a| a.to_string_lossy());
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(|p| PathBuf::from(p.as_ref()));
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Inserts config values for the chosen subcommand into `argv`.
pub fn splice(cmd: &Command, argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let (Some(pos), early) = locate(&argv) else { return Ok(argv) };
    let path = early
        .or_else(|| config_after_subcommand(&argv, pos + 1))
        .or_else(|| std::env::var_os("ANAPHORA_EVAL_CONFIG").filter(|v| !v.is_empty()).map(PathBuf::from));
    let Some(path) = path else { return Ok(argv) };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
    let entries = parse(&text, &path)?;
    let name = argv[pos].to_string_lossy().into_owned();
    let Some(sub) = cmd.find_subcommand(&name) else { return Ok(argv) };

    let known_anywhere = |key: &str| {
        cmd.get_subcommands().any(|s| s.get_arguments().any(|a| a.get_long() == Some(key)))
    };
    let mut extra: Vec<OsString> = Vec::new();
    for (key, value) in entries {
        let Some(arg) = sub.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            if !known_anywhere(&key) {
                return Err(CliError::Usage(format!("{}: unknown config key `{key}`", path.display())));
            }
            continue;
        };
        match arg.get_action() {
            ArgAction::SetTrue => match value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => extra.push(format!("--{key}").into()),
                "false" | "no" | "0" => {}
                _ => return Err(CliError::Usage(format!("{}: `{key}` needs true or false", path.display()))),
            },
            ArgAction::Set => extra.push(format!("--{key}={value}").into()),
            _ => return Err(CliError::Usage(format!("{}: `{key}` cannot be set from a config file", path.display()))),
        }
    }
    let mut out = argv[..=pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    fn argv(args: &[&str]) -> Vec<OsString> {
        args.iter().map(OsString::from).collect()
    }

    fn conf(text: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), text).unwrap();
        f
    }

    #[test]
    fn parse_skips_comments_and_normalizes_keys() {
        let got = parse("# c\n\nmax_epochs = 4\n  tau=0.5 \n", Path::new("x")).unwrap();
        assert_eq!(got, [("max-epochs".to_string(), "4".to_string()), ("tau".to_string(), "0.5".to_string())]);
        let err = parse("a = 1\nnonsense\n", Path::new("run.conf")).unwrap_err().to_string();
        assert!(err.contains("run.conf:2"), "{err}");
    }

    #[test]
    fn values_go_right_after_the_subcommand() {
        let cmd = crate::args::Cli::command();
        let f = conf("tau = 0.5\npermissive = true\nepochs = 3\n");
        let path = f.path().to_str().unwrap();
        let out = splice(&cmd, argv(&["bin", "--config", path, "filter", "--tau", "0.9"])).unwrap();
        assert_eq!(out, argv(&["bin", "--config", path, "filter", "--tau=0.5", "--permissive", "--tau", "0.9"]));
    }

    #[test]
    fn false_switch_is_dropped_and_bad_switch_rejected() {
        let cmd = crate::args::Cli::command();
        let f = conf("permissive = no\n");
        let path = f.path().to_str().unwrap();
        let out = splice(&cmd, argv(&["bin", "filter", "--config", path])).unwrap();
        assert_eq!(out, argv(&["bin", "filter", "--config", path]));
        let g = conf("permissive = maybe\n");
        let bad = splice(&cmd, argv(&["bin", "filter", "--config", g.path().to_str().unwrap()]));
        assert!(matches!(bad, Err(CliError::Usage(_))));
    }

    #[test]
    fn no_subcommand_leaves_argv_alone() {
        let cmd = crate::args::Cli::command();
        let args = argv(&["bin", "--help"]);
        assert_eq!(splice(&cmd, args.clone()).unwrap(), args);
    }
}
