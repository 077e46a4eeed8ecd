use std::io::Write;

use crate::config::CliError;

/// `log2(prev / current)` when both are positive.
pub fn rate(prev: f64, current: f64) -> Option<f64> {
    (prev > 0.0 && current > 0.0).then(|| (prev / current).log2())
}

/// Rate of a column of per-level values; `None` on the first row.
pub fn rates(values: &[f64]) -> Vec<Option<f64>> {
    std::iter::once(None)
        .chain(values.windows(2).map(|w| rate(w[0], w[1])))
        .take(values.len())
        .collect()
}

pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// A CSV table preceded by `#` metadata lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub meta: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Table {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            ..Table::default()
        }
    }

    pub fn write_csv(&self, out: &mut dyn Write) -> Result<(), CliError> {
        for m in &self.meta {
            writeln!(out, "# {m}").map_err(csv::Error::from)?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Column-aligned rendering for terminals.
    pub fn render(&self) -> String {
        let widths: Vec<usize> = (0..self.header.len())
            .map(|j| {
                self.rows
                    .iter()
                    .map(|r| r[j].len())
                    .chain([self.header[j].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| {
            let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
            parts.join("  ").trim_end().to_string()
        };
        let mut s = String::new();
        for m in &self.meta {
            s += &format!("# {m}\n");
        }
        s += &line(&self.header);
        s.push('\n');
        for r in &self.rows {
            s += &line(r);
            s.push('\n');
        }
        s
    }
}
