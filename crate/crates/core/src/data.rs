//! Synthetic datasets and CSV I/O in the `[-1, 1]^d` domain.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::net::Dataset;
use crate::numfmt::sig9;
use crate::rng::{stream_rng, streams};

fn clip(v: f64) -> f64 {
    v.clamp(-1.0, 1.0)
}

/// Isotropic Gaussian blobs. Row `i` has label `i % centers.len()`.
pub fn gen_blobs(n: usize, centers: &[Vec<f64>], spread: f64, seed: u64) -> Result<Dataset> {
    if !(spread.is_finite() && spread > 0.0) {
        return Err(Error::param("spread", format!("must be > 0, got {spread}")));
    }
    let first = centers
        .first()
        .ok_or_else(|| Error::param("centers", "need at least one center"))?;
    let dim = first.len();
    if dim == 0 {
        return Err(Error::param("centers", "centers must have dimension >= 1"));
    }
    for c in centers {
        if c.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: c.len(),
            });
        }
        if c.iter().any(|v| !(-1.0..=1.0).contains(v)) {
            return Err(Error::param("centers", "centers must lie in [-1, 1]^d"));
        }
    }
    let k = centers.len();
    let mut inputs = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = stream_rng(seed, streams::DATA, i as u64);
        let c = &centers[i % k];
        for v in c {
            let g: f64 = rng.sample(StandardNormal);
            inputs.push(clip(v + spread * g));
        }
        labels.push(i % k);
    }
    Dataset::new(dim, k, inputs, labels)
}

/// Scale and offset mapping the raw moons into `[-0.9, 0.9] x [-0.45, 0.45]`.
pub const MOONS_SCALE: f64 = 0.6;
pub const MOONS_OFFSET: [f64; 2] = [0.5, 0.25];

/// Two interleaved half circles: class 0 on `(cos t, sin t)`, class 1 on
/// `(1 - cos t, 1/2 - sin t)`, `t` uniform on `[0, pi]`, before scaling.
pub fn gen_two_moons(n: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    if !(noise_sd.is_finite() && noise_sd >= 0.0) {
        return Err(Error::param("noise_sd", format!("must be >= 0, got {noise_sd}")));
    }
    let mut inputs = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = stream_rng(seed, streams::DATA, i as u64);
        let t = rng.random::<f64>() * std::f64::consts::PI;
        let label = i % 2;
        let raw = if label == 0 {
            [t.cos(), t.sin()]
        } else {
            [1.0 - t.cos(), 0.5 - t.sin()]
        };
        for (r, off) in raw.iter().zip(MOONS_OFFSET) {
            let g: f64 = if noise_sd > 0.0 {
                rng.sample(StandardNormal)
            } else {
                0.0
            };
            inputs.push(clip((r - off) * MOONS_SCALE + noise_sd * g));
        }
        labels.push(label);
    }
    Dataset::new(2, 2, inputs, labels)
}

/// Header `f1,...,fd,label`; values at 9 significant digits.
pub fn write_csv(data: &Dataset, path: &Path) -> Result<()> {
    std::fs::write(path, to_csv_string(data)?)?;
    Ok(())
}

pub fn to_csv_string(data: &Dataset) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (1..=data.dim()).map(|j| format!("f{j}")).collect();
    header.push("label".into());
    w.write_record(&header).map_err(|e| Error::Csv(e.to_string()))?;
    for i in 0..data.len() {
        let mut rec: Vec<String> = data.x(i).iter().map(|v| sig9(*v)).collect();
        rec.push(data.y(i).to_string());
        w.write_record(&rec).map_err(|e| Error::Csv(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Csv(e.to_string()))
}

pub fn load_csv(path: &Path) -> Result<Dataset> {
    parse_csv(&std::fs::read_to_string(path)?)
}

/// Parse a dataset. Row numbers in errors count data rows from 0.
pub fn parse_csv(text: &str) -> Result<Dataset> {
    if text.trim().is_empty() {
        return Err(Error::Csv("file is empty; expected header f1,...,fd,label".into()));
    }
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    let n_cols = header.len();
    let expected: Vec<String> = (1..n_cols)
        .map(|j| format!("f{j}"))
        .chain(["label".to_string()])
        .collect();
    if n_cols < 2 || header.iter().map(str::trim).ne(expected.iter().map(String::as_str)) {
        return Err(Error::Csv(format!(
            "header must be `{}`, found `{}`",
            expected.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let dim = n_cols - 1;
    let mut inputs = Vec::new();
    let mut labels = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Csv(format!("row {row}: {e}")))?;
        for column in 0..dim {
            let field = rec[column].trim();
            let value: f64 = field
                .parse()
                .map_err(|_| Error::Csv(format!("row {row}, column {column}: `{field}` is not a number")))?;
            if !(-1.0..=1.0).contains(&value) {
                return Err(Error::OutOfDomain { row, column, value });
            }
            inputs.push(value);
        }
        let raw = rec[dim].trim();
        let label: usize = raw.parse().map_err(|_| Error::BadLabel {
            row,
            value: raw.to_string(),
        })?;
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let num_classes = labels.iter().max().unwrap() + 1;
    let mut seen = vec![false; num_classes];
    labels.iter().for_each(|&y| seen[y] = true);
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::NonContiguousLabels { missing });
    }
    Dataset::new(dim, num_classes, inputs, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_centers() -> Vec<Vec<f64>> {
        vec![vec![-0.5, 0.0], vec![0.5, 0.0]]
    }

    #[test]
    fn blobs_are_balanced_and_reproducible() {
        let d = gen_blobs(100, &two_centers(), 0.1, 4).unwrap();
        assert_eq!(d.labels().iter().filter(|y| **y == 0).count(), 50);
        assert_eq!(d, gen_blobs(100, &two_centers(), 0.1, 4).unwrap());
        assert_eq!(
            to_csv_string(&d).unwrap(),
            to_csv_string(&gen_blobs(100, &two_centers(), 0.1, 4).unwrap()).unwrap()
        );
        assert_ne!(d, gen_blobs(100, &two_centers(), 0.1, 5).unwrap());
        let odd = gen_blobs(7, &[vec![0.0], vec![0.1], vec![0.2]], 0.1, 1).unwrap();
        let counts: Vec<usize> = (0..3)
            .map(|k| odd.labels().iter().filter(|y| **y == k).count())
            .collect();
        assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
    }

    #[test]
    fn blob_means_match_centers() {
        let (n, spread) = (4000, 0.1);
        let centers = two_centers();
        let d = gen_blobs(n, &centers, spread, 11).unwrap();
        for (k, c) in centers.iter().enumerate() {
            for (j, cj) in c.iter().enumerate() {
                let vals: Vec<f64> = (0..n).filter(|i| d.y(*i) == k).map(|i| d.x(i)[j]).collect();
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                assert!((mean - cj).abs() <= 4.0 * spread / ((n / 2) as f64).sqrt());
            }
        }
    }

    #[test]
    fn blob_errors() {
        assert!(gen_blobs(10, &two_centers(), 0.0, 1).is_err());
        assert!(gen_blobs(10, &[], 0.1, 1).is_err());
        assert!(gen_blobs(10, &[vec![0.0], vec![0.0, 1.0]], 0.1, 1).is_err());
    }

    #[test]
    fn noiseless_moons_lie_on_arcs() {
        let d = gen_two_moons(200, 0.0, 3).unwrap();
        for i in 0..d.len() {
            let x = d.x(i);
            let raw = [
                x[0] / MOONS_SCALE + MOONS_OFFSET[0],
                x[1] / MOONS_SCALE + MOONS_OFFSET[1],
            ];
            let (c, upper) = if d.y(i) == 0 {
                ([0.0, 0.0], true)
            } else {
                ([1.0, 0.5], false)
            };
            let r = ((raw[0] - c[0]).powi(2) + (raw[1] - c[1]).powi(2)).sqrt();
            assert!((r - 1.0).abs() <= 1e-9);
            assert!(if upper { raw[1] >= -1e-12 } else { raw[1] <= 0.5 + 1e-12 });
        }
        assert_eq!(d.labels().iter().filter(|y| **y == 1).count(), 100);
        assert!(gen_two_moons(10, -0.1, 1).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let d = gen_two_moons(50, 0.1, 9).unwrap();
        let s = to_csv_string(&d).unwrap();
        assert!(s.starts_with("f1,f2,label\n"));
        let back = parse_csv(&s).unwrap();
        assert_eq!(back.labels(), d.labels());
        for (a, b) in back.inputs().iter().zip(d.inputs()) {
            // Half a unit in the ninth significant digit.
            assert!((a - b).abs() <= 5e-9 * b.abs() + 1e-300);
        }
        assert_eq!(to_csv_string(&back).unwrap(), s);
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(parse_csv(""), Err(Error::Csv(_))));
        assert!(matches!(parse_csv("f1,label\n"), Err(Error::EmptyDataset)));
        assert!(matches!(
            parse_csv("f1,f2,label\n0.1,0.2,0\n0.3,1.5,1\n"),
            Err(Error::OutOfDomain { row: 1, column: 1, .. })
        ));
        assert!(matches!(
            parse_csv("f1,label\n0.1,0.5\n"),
            Err(Error::BadLabel { row: 0, .. })
        ));
        assert!(matches!(
            parse_csv("f1,label\n0.1,0\n0.2,2\n"),
            Err(Error::NonContiguousLabels { missing: 1 })
        ));
        assert!(matches!(parse_csv("x,y\n0.1,0\n"), Err(Error::Csv(_))));
        assert!(matches!(parse_csv("f1,label\nabc,0\n"), Err(Error::Csv(_))));
    }
}
