use std::fmt::Write as _;
use std::path::Path;

use ks1d::grid::{Grid, NodalField};
use serde::Serialize;

use crate::CliError;

/// Shortest decimal that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn profile_table(grid: &Grid, u: &NodalField, phi: &NodalField, v: &NodalField) -> String {
    let mut s = String::from("x,u,phi,v_eff\n");
    for i in 0..grid.n_nodes() {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            num(grid.nodes()[i]),
            num(u[i]),
            num(phi[i]),
            num(v[i])
        );
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

/// Columns of a profile table as read back from disk.
pub fn read_profile(text: &str) -> Result<Vec<[f64; 4]>, CliError> {
    let mut lines = text.lines();
    match lines.next() {
        Some("x,u,phi,v_eff") => {}
        other => return Err(CliError::Io(format!("unexpected profile header {other:?}"))),
    }
    lines
        .map(|line| {
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| CliError::Io(format!("{s}: {e}")))
                })
                .collect::<Result<_, _>>()?;
            <[f64; 4]>::try_from(vals)
                .map_err(|_| CliError::Io(format!("bad profile row {line:?}")))
        })
        .collect()
}
