//! Deterministic report writers.

use std::path::PathBuf;

use serde::Serialize;
use volcomp::jacobi::JacobiSolution;
use volcomp::models::model_density;

use crate::config::Format;
use crate::CliError;

/// Shortest round-trip decimal form; `NaN`/`inf` spelled out.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Csv { text }
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            self.text.push_str(c.as_ref());
        }
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    config_hash: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    report: &'a T,
}

pub struct Output {
    pub dir: PathBuf,
    pub format: Format,
    pub hash: String,
    pub seed: Option<u64>,
    pub written: Vec<PathBuf>,
}

impl Output {
    pub fn new(dir: PathBuf, format: Format, hash: String) -> Result<Self, CliError> {
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Output { dir, format, hash, seed: None, written: Vec::new() })
    }

    fn write(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, command: &str, report: &T) -> Result<(), CliError> {
        if !self.format.json() {
            return Ok(());
        }
        let env = Envelope { command, config_hash: &self.hash, seed: self.seed, report };
        let mut body = serde_json::to_string_pretty(&env).map_err(|e| CliError::Io(e.to_string()))?;
        body.push('\n');
        self.write(&format!("{name}.json"), &body)
    }

    pub fn csv(&mut self, name: &str, csv: Csv) -> Result<(), CliError> {
        if !self.format.csv() {
            return Ok(());
        }
        self.write(&format!("{name}.csv"), &csv.finish())
    }
}

/// Per-direction profile dump: `t, detA, s_c_pow, psi, Phi`.
pub fn profile_csv(sol: &JacobiSolution) -> Csv {
    let mut csv = Csv::new(&["t", "detA", "s_c_pow", "psi", "Phi"]);
    for (i, &t) in sol.grid.iter().enumerate() {
        csv.row(&[num(t), num(sol.det_a[i]), num(model_density(&sol.consts, t)), opt(sol.psi[i]), opt(sol.phi[i])]);
    }
    csv
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0, 1e-7, 123456.789, -2.5e300, std::f64::consts::PI] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(1.0), "1.0");
        assert_eq!(num(f64::NAN), "nan");
    }

    #[test]
    fn csv_uses_lf() {
        let mut csv = Csv::new(&["a", "b"]);
        csv.row(&["1", "2"]);
        assert_eq!(csv.finish(), "a,b\n1,2\n");
    }
}
