use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::Scheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    /// The outer loop met its tolerance.
    Optimal,
    /// An iteration cap was hit; the returned point is feasible.
    MaxIter,
    Infeasible,
    Failed,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Optimal => "optimal",
            CellStatus::MaxIter => "max_iter",
            CellStatus::Infeasible => "infeasible",
            CellStatus::Failed => "failed",
        }
    }

    /// Whether the row carries an optimizer result.
    pub fn has_result(self) -> bool {
        matches!(self, CellStatus::Optimal | CellStatus::MaxIter)
    }
}

impl fmt::Display for CellStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CellStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimal" => Ok(CellStatus::Optimal),
            "max_iter" => Ok(CellStatus::MaxIter),
            "infeasible" => Ok(CellStatus::Infeasible),
            "failed" => Ok(CellStatus::Failed),
            other => Err(Error::invalid(format!("unknown status '{other}'"))),
        }
    }
}

/// One experiment cell. Rates are in bits per subcarrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub snr_db: f64,
    pub scheme: Scheme,
    pub strategy: u8,
    pub pilot_count: usize,
    pub sum_rate: f64,
    pub common_rate: f64,
    /// Private rate `R_k` per user.
    pub user_rates: Vec<f64>,
    /// Smallest `Λ̄ - J_thr` over the jammed pilots; empty without AUs.
    pub jam_margin: Option<f64>,
    /// Outer iterations.
    pub iters: usize,
    pub wall_ms: u64,
    pub status: CellStatus,
}

/// `(snr_db, sum_rate)` points of one `(scheme, pilot_count)` curve.
pub type Curve = ((Scheme, usize), Vec<(f64, f64)>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub users: usize,
    pub rows: Vec<ResultRow>,
}

pub fn csv_header(users: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "snr_db",
        "scheme",
        "strategy",
        "pilot_count",
        "sum_rate",
        "common_rate",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend((1..=users).map(|k| format!("rate_u{k}")));
    h.extend(
        ["jam_margin", "iters", "wall_ms", "status"]
            .iter()
            .map(|s| s.to_string()),
    );
    h
}

impl ResultTable {
    pub fn to_csv(&self) -> Result<String> {
        if self.rows.is_empty() {
            return Err(Error::invalid("result table is empty"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(csv_header(self.users))?;
        for r in &self.rows {
            if r.user_rates.len() != self.users {
                return Err(Error::invalid("row has the wrong number of user rates"));
            }
            let mut rec = vec![
                r.snr_db.to_string(),
                r.scheme.to_string(),
                r.strategy.to_string(),
                r.pilot_count.to_string(),
                r.sum_rate.to_string(),
                r.common_rate.to_string(),
            ];
            rec.extend(r.user_rates.iter().map(f64::to_string));
            rec.push(r.jam_margin.map(|m| m.to_string()).unwrap_or_default());
            rec.push(r.iters.to_string());
            rec.push(r.wall_ms.to_string());
            rec.push(r.status.to_string());
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
    }

    /// `(scheme, pilot_count)` curves in order of first appearance, each a
    /// list of `(snr_db, sum_rate)` over rows with a result.
    pub fn curves(&self) -> Vec<Curve> {
        let mut out: Vec<Curve> = Vec::new();
        for r in &self.rows {
            let key = (r.scheme, r.pilot_count);
            let idx = match out.iter().position(|(k, _)| *k == key) {
                Some(i) => i,
                None => {
                    out.push((key, Vec::new()));
                    out.len() - 1
                }
            };
            if r.status.has_result() {
                out[idx].1.push((r.snr_db, r.sum_rate));
            }
        }
        out
    }

    pub fn row(&self, snr_db: f64, scheme: Scheme, pilot_count: usize) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.snr_db == snr_db && r.scheme == scheme && r.pilot_count == pilot_count)
    }
}

fn field<T: FromStr>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    rec.get(i)
        .ok_or_else(|| Error::invalid(format!("missing column {name}")))?
        .parse()
        .map_err(|_| Error::invalid(format!("bad value in column {name}: '{}'", &rec[i])))
}

pub fn parse_csv(text: &str) -> Result<ResultTable> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers()?.clone();
    let users = header
        .len()
        .checked_sub(10)
        .ok_or_else(|| Error::invalid("CSV header is too short"))?;
    let expected = csv_header(users);
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::invalid(
            "CSV header does not match the result layout",
        ));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let scheme: Scheme = rec[1].parse()?;
        let user_rates = (0..users)
            .map(|k| field(&rec, 6 + k, &expected[6 + k]))
            .collect::<Result<Vec<f64>>>()?;
        let j = 6 + users;
        let jam_margin = match &rec[j] {
            "" => None,
            _ => Some(field(&rec, j, "jam_margin")?),
        };
        rows.push(ResultRow {
            snr_db: field(&rec, 0, "snr_db")?,
            scheme,
            strategy: field(&rec, 2, "strategy")?,
            pilot_count: field(&rec, 3, "pilot_count")?,
            sum_rate: field(&rec, 4, "sum_rate")?,
            common_rate: field(&rec, 5, "common_rate")?,
            user_rates,
            jam_margin,
            iters: field(&rec, j + 1, "iters")?,
            wall_ms: field(&rec, j + 2, "wall_ms")?,
            status: rec[j + 3].parse()?,
        });
    }
    Ok(ResultTable { users, rows })
}
