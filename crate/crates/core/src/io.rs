//! CSV export. Every file starts with a `#` comment line naming the run.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::convergence::EgorovReport;
use crate::dsops::DsReport;
use crate::error::Result;
use crate::maximal::WeakTypeRow;
use crate::measure::Field;
use crate::symmetric::RearrangementProfile;
use crate::weights::LimsupProfile;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }

    pub fn write<W: Write>(&self, out: W, comment: &str) -> Result<()> {
        let mut out = out;
        writeln!(out, "# {comment}")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_file(&self, path: &Path, comment: &str) -> Result<()> {
        self.write(File::create(path)?, comment)
    }
}

/// Shortest round-trip decimal form, so reruns are byte-identical.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn field_table(f: &Field) -> Table {
    let mut t = Table::new(&["cell", "weight", "re", "im"]);
    for ((cell, w), z) in f.space().cells().iter().zip(f.space().weights()).zip(f.values()) {
        t.push([cell.to_string(), num(*w), num(z.re), num(z.im)]);
    }
    t
}

/// `(t, value)` pairs under the given column names.
pub fn pairs_table(x: &str, y: &str, rows: &[(f64, f64)]) -> Table {
    let mut t = Table::new(&[x, y]);
    for (a, b) in rows {
        t.push([num(*a), num(*b)]);
    }
    t
}

pub fn ds_table(report: &DsReport) -> Table {
    let mut t = Table::new(&["time", "max_l1_ratio", "max_linf_ratio"]);
    for r in &report.rows {
        t.push([num(r.time), num(r.max_l1_ratio), num(r.max_linf_ratio)]);
    }
    t
}

pub fn weak_type_table(rows: &[WeakTypeRow]) -> Table {
    let mut t = Table::new(&["lambda", "measure", "bound", "ratio", "pass"]);
    for r in rows {
        t.push([num(r.lambda), num(r.measure), num(r.bound), num(r.ratio), r.pass.to_string()]);
    }
    t
}

pub fn egorov_table(report: &EgorovReport) -> Table {
    let mut t = Table::new(&["t0", "tail_sup", "kept_measure"]);
    for r in &report.rows {
        t.push([num(r.t0), num(r.tail_sup), num(r.kept_measure)]);
    }
    t
}

pub fn rearrangement_table(profile: &RearrangementProfile) -> Table {
    let mut t = Table::new(&["t", "level", "cumulative"]);
    for ((b, l), c) in profile.breakpoints.iter().zip(&profile.levels).zip(&profile.cumulative) {
        t.push([num(*b), num(*l), num(*c)]);
    }
    t
}

pub fn limsup_table(profile: &LimsupProfile) -> Table {
    let mut t = Table::new(&["t", "mean_deviation", "tail_sup"]);
    for r in &profile.rows {
        t.push([num(r.t), num(r.deviation), num(r.tail_sup)]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::MeasureSpace;

    #[test]
    fn field_csv_layout() {
        let space = MeasureSpace::counting(0, 2).unwrap();
        let f = Field::from_real(space, &[1.5, -0.25]).unwrap();
        let mut buf = Vec::new();
        field_table(&f).write(&mut buf, "scenario=demo seed=1").unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "# scenario=demo seed=1\ncell,weight,re,im\n0,1,1.5,0\n1,1,-0.25,0\n");
    }

    #[test]
    fn rearrangement_csv() {
        let profile = RearrangementProfile { breakpoints: vec![1.0, 3.0], levels: vec![2.0, 0.5], cumulative: vec![2.0, 3.0] };
        let mut buf = Vec::new();
        rearrangement_table(&profile).write(&mut buf, "x").unwrap();
        assert!(String::from_utf8(buf).unwrap().ends_with("t,level,cumulative\n1,2,2\n3,0.5,3\n"));
    }
}
