//! Output plumbing: full-precision number formatting, CSV assembly, and
//! atomic file writes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cvqkd_core::fidelity::BoundRow;
use cvqkd_core::optimizer::SweepRow;

/// 17 significant digits; round-trips every finite double.
pub fn g17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so a failed run never leaves a partial output file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp: PathBuf = {
        let mut name = path.file_name().unwrap_or_default().to_os_string();
        name.push(".tmp");
        dir.unwrap_or(Path::new(".")).join(name)
    };
    {
        let mut f = fs::File::create(&tmp)
            .with_context(|| format!("cannot create {}", tmp.display()))?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("cannot move output into {}", path.display()))?;
    Ok(())
}

/// Sends `contents` to the file if given, stdout otherwise.
pub fn deliver(output: Option<&Path>, contents: &str) -> Result<()> {
    match output {
        Some(path) => write_atomic(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

/// CSV for a single-noise sweep: `loss,rate,alpha,x_th,kappa,gamma,beta`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("loss,rate,alpha,x_th,kappa,gamma,beta\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            g17(r.loss),
            g17(r.rate),
            g17(r.alpha),
            g17(r.x_th),
            g17(r.kappa),
            g17(r.gamma),
            g17(r.beta)
        ));
    }
    out
}

/// Combined CSV over several noise values, with a leading `xi` column.
pub fn sweep_csv_multi(tables: &[(f64, Vec<SweepRow>)]) -> String {
    let mut out = String::from("xi,loss,rate,alpha,x_th,kappa,gamma,beta\n");
    for (xi, rows) in tables {
        for r in rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                g17(*xi),
                g17(r.loss),
                g17(r.rate),
                g17(r.alpha),
                g17(r.x_th),
                g17(r.kappa),
                g17(r.gamma),
                g17(r.beta)
            ));
        }
    }
    out
}

/// CSV for the fidelity-bound comparison: `xi,exact,lambda,theorem1`.
pub fn bounds_csv(rows: &[BoundRow]) -> String {
    let mut out = String::from("xi,exact,lambda,theorem1\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            g17(r.xi),
            g17(r.exact),
            g17(r.lambda),
            g17(r.theorem1)
        ));
    }
    out
}

/// One JSON object per line is unfriendly for arrays; reports are compact
/// single-line JSON followed by a newline.
pub fn json_line<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(format!("{}\n", serde_json::to_string(value)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_round_trips() {
        for &v in &[0.0, 1.0 / 3.0, 0.95, 2.5e-17, 123456.789] {
            let s = g17(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "string {s}");
        }
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "first").unwrap();
        write_atomic(&path, "second").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "second");
        assert!(!dir.path().join("out.csv.tmp").exists());
    }
}
