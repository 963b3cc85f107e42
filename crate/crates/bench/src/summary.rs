//! Aggregation of result rows by `(method, P, Q, R)`.

use std::path::Path;

use serde::Serialize;

use crate::runner::{ResultRow, RESULT_HEADER};
use crate::BenchError;

/// Mean and population standard deviation (divisor `n`) per metric. Missing
/// values are skipped; a metric with no values is left empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: String,
    #[serde(rename = "P")]
    pub p: usize,
    #[serde(rename = "Q")]
    pub q: usize,
    #[serde(rename = "R")]
    pub r: String,
    pub n: usize,
    pub fscore_prod_mean: Option<f64>,
    pub fscore_prod_std: Option<f64>,
    pub fscore_p_mean: Option<f64>,
    pub fscore_p_std: Option<f64>,
    pub fscore_q_mean: Option<f64>,
    pub fscore_q_std: Option<f64>,
    pub commutativity_mean: Option<f64>,
    pub commutativity_std: Option<f64>,
    pub wall_time_s_mean: Option<f64>,
    pub wall_time_s_std: Option<f64>,
}

fn mean_std(values: impl Iterator<Item = Option<f64>>) -> (Option<f64>, Option<f64>) {
    let v: Vec<f64> = values.flatten().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return (None, None);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (Some(mean), Some(var.sqrt()))
}

/// Groups rows in order of first appearance.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, usize, usize, String)> = Vec::new();
    for r in rows {
        let k = (r.method.clone(), r.p, r.q, r.r.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(method, p, q, r)| {
            let g: Vec<&ResultRow> = rows.iter().filter(|x| x.method == method && x.p == p && x.q == q && x.r == r).collect();
            let (fscore_prod_mean, fscore_prod_std) = mean_std(g.iter().map(|x| Some(x.fscore_prod)));
            let (fscore_p_mean, fscore_p_std) = mean_std(g.iter().map(|x| x.fscore_p));
            let (fscore_q_mean, fscore_q_std) = mean_std(g.iter().map(|x| x.fscore_q));
            let (commutativity_mean, commutativity_std) = mean_std(g.iter().map(|x| x.commutativity));
            let (wall_time_s_mean, wall_time_s_std) = mean_std(g.iter().map(|x| Some(x.wall_time_s)));
            SummaryRow {
                method,
                p,
                q,
                r,
                n: g.len(),
                fscore_prod_mean,
                fscore_prod_std,
                fscore_p_mean,
                fscore_p_std,
                fscore_q_mean,
                fscore_q_std,
                commutativity_mean,
                commutativity_std,
                wall_time_s_mean,
                wall_time_s_std,
            }
        })
        .collect()
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    if rows.is_empty() {
        return String::new();
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<(), BenchError> {
    std::fs::write(path, summary_to_csv(rows)).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))
}

/// Parses a `results.csv`; any header other than the runner's is a schema
/// mismatch.
pub fn parse_results(text: &str, origin: &str) -> Result<Vec<ResultRow>, BenchError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| BenchError::SchemaMismatch(format!("{origin}: {e}")))?.clone();
    if header.iter().ne(RESULT_HEADER.iter().copied()) {
        return Err(BenchError::SchemaMismatch(format!(
            "{origin}: header {:?} does not match {:?}",
            header.iter().collect::<Vec<_>>(),
            RESULT_HEADER
        )));
    }
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| BenchError::SchemaMismatch(format!("{origin}: row {}: {e}", i + 1))))
        .collect()
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>, BenchError> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
    parse_results(&text, &path.display().to_string())
}
