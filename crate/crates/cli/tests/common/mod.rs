#![allow(dead_code)]

use std::fs;
use std::path::Path;
use std::process::Command;

use nalgebra::DMatrix;
use taxicab_core::ContingencyTable;

pub const DEMO_CA_PATH: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/demoCA.csv");

pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the `taxicab` binary with `cwd` as working directory.
pub fn run_cli(args: &[&str], cwd: &Path) -> CliOutput {
    let out = Command::new(env!("CARGO_BIN_EXE_taxicab"))
        .args(args)
        .current_dir(cwd)
        .env_remove("TAXICAB_LOG")
        .output()
        .expect("spawn taxicab");
    CliOutput {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("{prefix}{k}")).collect()
}

/// Writes a labeled table (`r1..`, `c1..`) with full-precision values.
pub fn write_csv(path: &Path, rows: &[Vec<f64>]) {
    let mut text = String::from("id");
    for c in labels("c", rows[0].len()) {
        text.push(',');
        text.push_str(&c);
    }
    text.push('\n');
    for (label, row) in labels("r", rows.len()).iter().zip(rows) {
        text.push_str(label);
        for v in row {
            text.push_str(&format!(",{v}"));
        }
        text.push('\n');
    }
    fs::write(path, text).expect("write csv");
}

/// The table `write_csv` produces, built in memory.
pub fn table_from_rows(rows: &[Vec<f64>]) -> ContingencyTable {
    ContingencyTable::from_rows(rows, labels("r", rows.len()), labels("c", rows[0].len())).expect("table")
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap_or_default()).unwrap_or(serde_json::Value::Null)
}

/// Byte-compares every file under two directory trees.
pub fn same_files(a: &Path, b: &Path) -> bool {
    let list = |d: &Path| {
        let mut names: Vec<_> = fs::read_dir(d)
            .map(|it| it.filter_map(|e| e.ok()).map(|e| e.file_name()).collect())
            .unwrap_or_default();
        names.sort();
        names
    };
    let (na, nb) = (list(a), list(b));
    if na != nb {
        return false;
    }
    na.iter().all(|name| {
        let (pa, pb) = (a.join(name), b.join(name));
        if pa.is_dir() {
            pb.is_dir() && same_files(&pa, &pb)
        } else {
            fs::read(&pa).ok() == fs::read(&pb).ok()
        }
    })
}

/// max over every u in {-1,+1}^J of ||X u||_1, with no symmetry shortcut.
pub fn brute_force_delta(x: &DMatrix<f64>) -> f64 {
    let cols = x.ncols();
    let mut best = 0.0f64;
    for mask in 0u64..(1 << cols) {
        let u: Vec<f64> = (0..cols).map(|j| if mask >> j & 1 == 1 { 1.0 } else { -1.0 }).collect();
        let value: f64 = x
            .row_iter()
            .map(|row| row.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>().abs())
            .sum();
        best = best.max(value);
    }
    best
}
