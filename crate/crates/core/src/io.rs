//! CSV and JSON emission. Floats are written as shortest round-trip decimals.

use crate::error::Result;
use crate::graph::{BondTable, GraphFile, RegularGraph};
use crate::kernel::GradedKernel;
use std::io::Write;
use std::path::Path;

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

/// A CSV table with a mandatory header row.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(&self.header)?;
        for r in &self.rows {
            wr.write_record(r)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.write_to(std::fs::File::create(path)?)
    }

    pub fn read(path: &Path) -> Result<Table> {
        let mut rd = csv::Reader::from_path(path)?;
        let header = rd.headers()?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in rd.records() {
            rows.push(rec?.iter().map(String::from).collect());
        }
        Ok(Table { header, rows })
    }
}

/// Kernel dump with rows `(k, path_id, re, im)`.
pub fn kernel_table(k: &GradedKernel) -> Table {
    let mut t = Table::new(&["k", "path_id", "re", "im"]);
    for (kk, shell) in &k.shells {
        for (id, v) in shell.values.iter().enumerate() {
            t.push(vec![kk.to_string(), id.to_string(), fmt_f64(v.re), fmt_f64(v.im)]);
        }
    }
    t
}

pub fn write_graph(path: &Path, g: &RegularGraph, bonds: Option<&BondTable>) -> Result<()> {
    let f = GraphFile::from_graph(g, bonds);
    std::fs::write(path, serde_json::to_string_pretty(&f)?)?;
    Ok(())
}

pub fn read_graph(path: &Path) -> Result<(RegularGraph, BondTable)> {
    let f: GraphFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    f.into_graph()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_roundtrip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5e-7] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.1), "0.1");
    }

    #[test]
    fn table_roundtrip() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        let dir = std::env::temp_dir().join(format!("qelab-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("t.csv");
        t.write(&p).unwrap();
        assert_eq!(Table::read(&p).unwrap(), t);
        std::fs::remove_dir_all(&dir).ok();
    }
}
