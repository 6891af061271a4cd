//! Point clouds: samples that double as empirical measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `N` points in `R^n` plus the seed that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CloudRepr", into = "CloudRepr")]
pub struct PointCloud {
    dim: usize,
    data: Vec<f64>,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CloudRepr {
    points: Vec<Vec<f64>>,
    #[serde(default)]
    seed: u64,
}

impl TryFrom<CloudRepr> for PointCloud {
    type Error = Error;
    fn try_from(r: CloudRepr) -> Result<Self> {
        PointCloud::from_rows(&r.points, r.seed)
    }
}

impl From<PointCloud> for CloudRepr {
    fn from(c: PointCloud) -> Self {
        CloudRepr { points: c.rows().map(|r| r.to_vec()).collect(), seed: c.seed }
    }
}

impl PointCloud {
    pub fn from_rows(rows: &[Vec<f64>], seed: u64) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.is_empty() || dim == 0 {
            return Err(Error::InvalidArgument("point cloud needs at least one point of positive dimension".into()));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidArgument("point cloud rows have unequal lengths".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("point cloud contains a non-finite coordinate".into()));
        }
        Ok(Self { dim, data: rows.iter().flatten().copied().collect(), seed })
    }

    pub(crate) fn from_flat(dim: usize, data: Vec<f64>, seed: u64) -> Self {
        debug_assert!(dim > 0 && data.len().is_multiple_of(dim) && !data.is_empty());
        Self { dim, data, seed }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + Clone {
        self.data.chunks(self.dim)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(|r| r.to_vec()).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for r in self.rows() {
            for (a, b) in m.iter_mut().zip(r) {
                *a += b;
            }
        }
        let n = self.len() as f64;
        m.iter_mut().for_each(|a| *a /= n);
        m
    }

    pub fn coordinate_median(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|k| {
                let col: Vec<f64> = self.rows().map(|r| r[k]).collect();
                crate::numeric::quantile(&col, 0.5)
            })
            .collect()
    }

    /// The first `count` points.
    pub fn prefix(&self, count: usize) -> PointCloud {
        let count = count.clamp(1, self.len());
        Self { dim: self.dim, data: self.data[..count * self.dim].to_vec(), seed: self.seed }
    }

    /// CSV with header `x1,...,xn`, one row per point.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header: Vec<String> = (1..=self.dim).map(|k| format!("x{k}")).collect();
        let mut rows = vec![header];
        rows.extend(self.rows().map(|r| r.iter().map(|v| format!("{v}")).collect()));
        for r in rows {
            w.write_record(&r).expect("writing to memory cannot fail");
        }
        String::from_utf8(w.into_inner().expect("flushing to memory cannot fail")).expect("CSV output is UTF-8")
    }

    pub fn from_csv(text: &str, seed: u64) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let dim = reader.headers().map_err(csv_error)?.len();
        if dim == 0 {
            return Err(Error::Serialization("empty CSV".into()));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(csv_error)?;
            let row = record
                .iter()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::Serialization(format!("bad CSV value: {e}")))?;
            rows.push(row);
        }
        Self::from_rows(&rows, seed)
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Serialization(format!("CSV: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let c = PointCloud::from_rows(&[vec![0.1, -2.5e-17], vec![1.0 / 3.0, 7.0]], 9).unwrap();
        let back = PointCloud::from_csv(&c.to_csv(), 9).unwrap();
        assert_eq!(c, back);
        assert!(c.to_csv().starts_with("x1,x2\n"));
    }

    #[test]
    fn rejects_ragged_and_non_finite() {
        assert!(PointCloud::from_rows(&[vec![1.0], vec![1.0, 2.0]], 0).is_err());
        assert!(PointCloud::from_rows(&[vec![f64::NAN]], 0).is_err());
        assert!(PointCloud::from_rows(&[], 0).is_err());
    }
}
