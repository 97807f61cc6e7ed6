//! Report bundle: JSON summary, CSV tables and 16-bit PGM heatmaps.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Invariant {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Invariant {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, detail: detail.into() }
    }
}

/// CSV table; the writer prepends `seed` and `param_hash` to every row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, seed: u64, param_hash: &str) -> io::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["seed".to_string(), "param_hash".to_string()];
        header.extend(self.header.iter().cloned());
        w.write_record(&header)?;
        let seed = seed.to_string();
        for row in &self.rows {
            w.write_record(std::iter::once(seed.as_str()).chain([param_hash]).chain(row.iter().map(String::as_str)))?;
        }
        w.into_inner().map_err(|e| e.into_error())
    }
}

/// Shortest round-trip decimal; non-finite values as `NaN`, `inf`, `-inf`.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        ryu::Buffer::new().format_finite(x).to_string()
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Grayscale image over a rectangular window; `NaN` marks undefined pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub name: String,
    pub width: usize,
    pub height: usize,
    /// Row-major, first row at the top.
    pub values: Vec<f64>,
    /// Extra sidecar fields.
    pub meta: Value,
}

impl Heatmap {
    /// Finite range of the values, or `(0, 0)` if none is finite.
    pub fn range(&self) -> (f64, f64) {
        let finite = self.values.iter().copied().filter(|v| v.is_finite());
        let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if lo <= hi {
            (lo, hi)
        } else {
            (0.0, 0.0)
        }
    }

    /// Binary PGM (P5, maxval 65535, big-endian). Non-finite pixels are 0;
    /// finite values map linearly from `[vmin, vmax]` onto `[1, 65535]`.
    pub fn to_pgm(&self) -> Vec<u8> {
        let (lo, hi) = self.range();
        let mut out = format!("P5\n{} {}\n65535\n", self.width, self.height).into_bytes();
        for &v in &self.values {
            let g: u16 = if !v.is_finite() {
                0
            } else if hi > lo {
                (1.0 + (v - lo) / (hi - lo) * 65534.0).round() as u16
            } else {
                1
            };
            out.extend_from_slice(&g.to_be_bytes());
        }
        out
    }

    pub fn sidecar(&self) -> Value {
        let (lo, hi) = self.range();
        let undefined = self.values.iter().filter(|v| !v.is_finite()).count();
        json!({
            "image": format!("{}.pgm", self.name),
            "width": self.width,
            "height": self.height,
            "vmin": lo,
            "vmax": hi,
            "gray_min": 1,
            "gray_max": 65535,
            "undefined_gray": 0,
            "undefined_pixels": undefined,
            "meta": self.meta,
        })
    }
}

/// What a command produces before it is wrapped into a [`Report`].
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub results: serde_json::Map<String, Value>,
    pub invariants: Vec<Invariant>,
    pub tables: Vec<Table>,
    pub images: Vec<Heatmap>,
}

impl Outcome {
    pub fn set(&mut self, key: &str, value: impl Serialize) {
        self.results.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.invariants.push(Invariant::new(name, pass, detail));
    }

    pub fn all_pass(&self) -> bool {
        self.invariants.iter().all(|i| i.pass)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub results: Value,
    pub invariants: Vec<Invariant>,
    /// Wall time; the only field that may differ between identical runs.
    pub timing_ms: u64,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Writes `report.json`, one CSV per table and a PGM plus JSON sidecar per
/// image into `dir`.
pub fn write_bundle(dir: &Path, report: &Report, outcome: &Outcome) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), report.to_json())?;
    let param_hash = &report.config_hash[..16];
    for t in &outcome.tables {
        fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv(report.seed, param_hash)?)?;
    }
    for img in &outcome.images {
        fs::write(dir.join(format!("{}.pgm", img.name)), img.to_pgm())?;
        let mut f = fs::File::create(dir.join(format!("{}.json", img.name)))?;
        writeln!(f, "{}", serde_json::to_string_pretty(&img.sidecar()).expect("sidecar serializes"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows_carry_seed_and_hash() {
        let mut t = Table::new("t", &["x", "label"]);
        t.push(vec![num(0.1), "a,b".into()]);
        t.push(vec![num(1e-300), "+-".into()]);
        let s = String::from_utf8(t.to_csv(7, "abcd").unwrap()).unwrap();
        assert_eq!(s, "seed,param_hash,x,label\n7,abcd,0.1,\"a,b\"\n7,abcd,1e-300,+-\n");
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-17, 6.02214076e23, f64::MIN_POSITIVE, f64::NEG_INFINITY] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.1), "0.1");
        assert!(num(f64::NAN).parse::<f64>().unwrap().is_nan());
    }

    #[test]
    fn pgm_layout() {
        let img = Heatmap {
            name: "m".into(),
            width: 2,
            height: 2,
            values: vec![0.0, 1.0, f64::NAN, 0.5],
            meta: Value::Null,
        };
        let bytes = img.to_pgm();
        let header = b"P5\n2 2\n65535\n";
        assert_eq!(&bytes[..header.len()], header);
        let px: Vec<u16> = bytes[header.len()..].chunks(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
        assert_eq!(px, vec![1, 65535, 0, 32768]);
        assert_eq!(img.sidecar()["vmax"], 1.0);
        assert_eq!(img.sidecar()["undefined_pixels"], 1);
    }
}
