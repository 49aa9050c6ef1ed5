//! File formats.
//!
//! Every tabular output is built as a [`Table`] and written either as CSV or
//! as a JSON array with the same cells, so the two formats never drift.
//! Scalars are rendered with [`Scalar::to_literal`]: `p/q` for rationals and
//! 17 significant digits for floats.

use std::io::{Read, Write};
use std::str::FromStr;

use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use crate::analysis::{CheckOutcome, NormSequence, SweepReport};
use crate::geometry::Decomposition;
use crate::numerics::{NumericsError, Scalar};
use crate::operator::{DenseMatrix, InterfaceVector, Pair};
use crate::psm::{sample_curve, PsmTrace};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

/// Rows of string cells with an optional header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn with_header(header: &[&str]) -> Self {
        Table {
            header: Some(header.iter().map(|s| s.to_string()).collect()),
            rows: Vec::new(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), IoError> {
        let mut w = csv::WriterBuilder::new().flexible(false).from_writer(out);
        if let Some(h) = &self.header {
            w.write_record(h)?;
        }
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Array of objects keyed by the header, or array of arrays without one.
    pub fn to_json(&self) -> Json {
        let rows = self.rows.iter().map(|row| match &self.header {
            Some(h) => Json::Object(
                h.iter()
                    .cloned()
                    .zip(row.iter().map(|c| Json::String(c.clone())))
                    .collect::<Map<_, _>>(),
            ),
            None => Json::Array(row.iter().map(|c| Json::String(c.clone())).collect()),
        });
        Json::Array(rows.collect())
    }

    pub fn write<W: Write>(&self, format: Format, mut out: W) -> Result<(), IoError> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, &self.to_json())?;
                writeln!(out)?;
                Ok(())
            }
        }
    }
}

/// Row-major dense matrix, `2N` cells per row, no header.
pub fn dense_matrix_table<S: Scalar>(m: &DenseMatrix<S>) -> Table {
    Table {
        header: None,
        rows: m
            .rows()
            .map(|row| row.iter().map(Scalar::to_literal).collect())
            .collect(),
    }
}

/// Columns `index, block, slot, x, value`; indices are 1-based.
pub fn interface_vector_table<S: Scalar>(
    decomposition: &Decomposition<S>,
    v: &InterfaceVector<S>,
) -> Table {
    let mut t = Table::with_header(&["index", "block", "slot", "x", "value"]);
    let points = decomposition.interface_points();
    for (i, (x, value)) in points.iter().zip(v.iter()).enumerate() {
        t.rows.push(vec![
            (i + 1).to_string(),
            (i / 2 + 1).to_string(),
            (i % 2 + 1).to_string(),
            x.to_literal(),
            value.to_literal(),
        ]);
    }
    t
}

/// Columns `n, j, a_j, b_j, left_value, right_value`.
pub fn trace_table<S: Scalar>(trace: &PsmTrace<S>) -> Table {
    let mut t = Table::with_header(&["n", "j", "a_j", "b_j", "left_value", "right_value"]);
    let d = trace.decomposition();
    for (n, sols) in trace.iterations().iter().enumerate() {
        for s in sols {
            t.rows.push(vec![
                n.to_string(),
                (s.index + 1).to_string(),
                d.left()[s.index].to_literal(),
                d.right()[s.index].to_literal(),
                s.left_value.to_literal(),
                s.right_value.to_literal(),
            ]);
        }
    }
    t
}

/// Columns `n, j, x, e`, with `samples` points per subdomain.
pub fn curve_table<S: Scalar>(trace: &PsmTrace<S>, samples: usize) -> Table {
    let mut t = Table::with_header(&["n", "j", "x", "e"]);
    for (n, sols) in trace.iterations().iter().enumerate() {
        for s in sols {
            for (x, y) in sample_curve(s, trace.decomposition(), samples) {
                t.rows.push(vec![
                    n.to_string(),
                    (s.index + 1).to_string(),
                    x.to_literal(),
                    y.to_literal(),
                ]);
            }
        }
    }
    t
}

/// Columns `n, norm, ratio`; the ratio cell is empty where undefined.
pub fn norms_table<S: Scalar>(seq: &NormSequence<S>) -> Table {
    let mut t = Table::with_header(&["n", "norm", "ratio"]);
    for e in &seq.entries {
        t.rows.push(vec![
            e.n.to_string(),
            e.norm.to_literal(),
            e.ratio.as_ref().map(Scalar::to_literal).unwrap_or_default(),
        ]);
    }
    t
}

pub fn sweep_table<S: Scalar>(report: &SweepReport<S>) -> Table {
    let mut t = Table::with_header(&[
        "N",
        "ell",
        "delta",
        "tol",
        "iterations",
        "onset",
        "rho",
        "bound",
        "slope_note",
    ]);
    let note = format!("ols_slope={:.6}", report.slope);
    for r in &report.rows {
        t.rows.push(vec![
            r.subdomains.to_string(),
            report.ell.to_literal(),
            report.delta.to_literal(),
            report.tol.to_literal(),
            r.iterations.to_string(),
            r.onset.to_string(),
            r.rho.to_literal(),
            r.bound.to_literal(),
            note.clone(),
        ]);
    }
    t
}

/// Rows `name, range_tested, pass, first_violation, backend, asserted`.
pub fn checks_table(checks: &[CheckOutcome]) -> Table {
    let mut t = Table::with_header(&[
        "name",
        "range_tested",
        "pass",
        "first_violation",
        "backend",
        "asserted",
    ]);
    for c in checks {
        t.rows.push(vec![
            c.name.clone(),
            c.range_tested.clone(),
            c.pass.to_string(),
            c.first_violation.clone().unwrap_or_default(),
            c.backend.to_string(),
            c.asserted.to_string(),
        ]);
    }
    t
}

/// Verification report: one object per decomposition, each with its checks.
pub fn verification_json<S: Scalar>(runs: &[(Decomposition<S>, Vec<CheckOutcome>)]) -> Json {
    let pass = runs
        .iter()
        .flat_map(|(_, c)| c)
        .all(|c| c.pass || !c.asserted);
    json!({
        "backend": S::BACKEND,
        "pass": pass,
        "runs": runs
            .iter()
            .map(|(d, checks)| json!({ "decomposition": d.to_json(), "checks": checks }))
            .collect::<Vec<_>>(),
    })
}

/// Reads per-subdomain endpoint values: one `left,right` line per subdomain,
/// no header, `#` comments allowed.
pub fn read_endpoints_csv<S: Scalar, R: Read>(input: R) -> Result<Vec<Pair<S>>, IoError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(IoError::Malformed {
                line: i + 1,
                msg: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        out.push([S::parse_literal(&rec[0])?, S::parse_literal(&rec[1])?]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::norm_via_ones;
    use crate::numerics::{parse_rational, Exact};
    use crate::operator::{SchwarzOperator, DEFAULT_DENSE_CAP};
    use crate::psm::Initialization;

    fn q(s: &str) -> Exact {
        parse_rational(s).unwrap()
    }

    fn csv_string(t: &Table) -> String {
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn dense_matrix_csv() {
        let d = Decomposition::new(2, q("1"), q("1/2")).unwrap();
        let m = SchwarzOperator::new(d)
            .assemble_dense(DEFAULT_DENSE_CAP)
            .unwrap();
        assert_eq!(
            csv_string(&dense_matrix_table(m.dense())),
            "0,0,0,0\n0,0,1/2,0\n0,1/2,0,0\n0,0,0,0\n"
        );
        let f = SchwarzOperator::new(Decomposition::new(2, 1.0, 0.5).unwrap())
            .assemble_dense(DEFAULT_DENSE_CAP)
            .unwrap();
        let text = csv_string(&dense_matrix_table(f.dense()));
        assert!(text.starts_with("0.0000000000000000e0,"), "{text}");
    }

    #[test]
    fn norms_csv_two_subdomains() {
        let d = Decomposition::new(2, q("1"), q("1/2")).unwrap();
        let seq = norm_via_ones(&SchwarzOperator::new(d), 3);
        assert_eq!(
            csv_string(&norms_table(&seq)),
            "n,norm,ratio\n0,1,\n1,1/2,1/2\n2,1/4,1/2\n3,1/8,1/2\n"
        );
    }

    #[test]
    fn interface_vector_csv() {
        let d = Decomposition::new(2, q("1"), q("1/2")).unwrap();
        let v = SchwarzOperator::new(d.clone())
            .apply(&InterfaceVector::ones(2))
            .unwrap();
        assert_eq!(
            csv_string(&interface_vector_table(&d, &v)),
            "index,block,slot,x,value\n1,1,1,0,0\n2,1,2,1/2,1/2\n3,2,1,1,1/2\n4,2,2,3/2,0\n"
        );
    }

    #[test]
    fn trace_and_curves() {
        let d = Decomposition::new(2, q("1"), q("1/2")).unwrap();
        let trace = PsmTrace::run(&d, &Initialization::Ones, 1).unwrap();
        let text = csv_string(&trace_table(&trace));
        assert_eq!(
            text,
            "n,j,a_j,b_j,left_value,right_value\n0,1,0,1,1,1\n0,2,1/2,3/2,1,1\n1,1,0,1,0,1\n1,2,1/2,3/2,1,0\n"
        );
        let curves = curve_table(&trace, 3);
        assert_eq!(curves.rows.len(), 2 * 2 * 3);
        assert_eq!(curves.rows[7], ["1", "1", "1/2", "1/2"]);
    }

    #[test]
    fn json_mirrors_csv() {
        let d = Decomposition::new(2, q("1"), q("1/2")).unwrap();
        let t = norms_table(&norm_via_ones(&SchwarzOperator::new(d), 1));
        assert_eq!(
            t.to_json(),
            serde_json::json!([
                {"n": "0", "norm": "1", "ratio": ""},
                {"n": "1", "norm": "1/2", "ratio": "1/2"}
            ])
        );
    }

    #[test]
    fn endpoints_file() {
        let text = "# left,right\n1/2, 1\n0,-3/4\n";
        let v: Vec<Pair<Exact>> = read_endpoints_csv(text.as_bytes()).unwrap();
        assert_eq!(v, vec![[q("1/2"), q("1")], [q("0"), q("-3/4")]]);
        assert!(read_endpoints_csv::<Exact, _>("1,2,3\n".as_bytes()).is_err());
        assert!(read_endpoints_csv::<Exact, _>("0.5,1\n".as_bytes()).is_err());
        let f: Vec<Pair<f64>> = read_endpoints_csv("0.5,1/4\n".as_bytes()).unwrap();
        assert_eq!(f, vec![[0.5, 0.25]]);
    }
}
