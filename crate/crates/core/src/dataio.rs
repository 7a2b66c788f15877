//! Dataset loading (CSV, IDX), export, and class-based subsampling.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::scalar::Scalar;

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub source: String,
    /// Global `(min, max)` of the raw values before rescaling.
    pub original_range: (f64, f64),
    /// Whether values were rescaled into `[0, 1]`.
    pub rescaled: bool,
    /// Bounds the values are expected to stay within.
    pub value_range: (f64, f64),
    /// Classes that had fewer samples than a subsampling request.
    pub shortfall_classes: Vec<usize>,
}

/// Samples as columns of `x`, with dense ground-truth labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    pub x: DataMatrix<T>,
    pub truth: Vec<usize>,
    pub names: Option<Vec<String>>,
    pub meta: DatasetMeta,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(x: DataMatrix<T>, truth: Vec<usize>, meta: DatasetMeta) -> Result<Self> {
        if truth.len() != x.n_samples() {
            return Err(Error::DimensionMismatch {
                expected: x.n_samples(),
                found: truth.len(),
            });
        }
        if x.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("non-finite value in data".into()));
        }
        Ok(Self {
            x,
            truth,
            names: None,
            meta,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.x.n_samples()
    }

    pub fn n_classes(&self) -> usize {
        self.truth.iter().max().map_or(0, |&m| m + 1)
    }

    fn select(&self, keep: &[usize]) -> Self {
        Self {
            x: self.x.select(keep),
            truth: keep.iter().map(|&i| self.truth[i]).collect(),
            names: self
                .names
                .as_ref()
                .map(|names| keep.iter().map(|&i| names[i].clone()).collect()),
            meta: self.meta.clone(),
        }
    }
}

/// Maps arbitrary label values onto `0..c` in ascending value order.
fn reindex<L: Ord + Copy>(labels: &[L]) -> Vec<usize> {
    let mut ids = BTreeMap::new();
    for &l in labels {
        ids.entry(l).or_insert(0);
    }
    for (next, v) in ids.values_mut().enumerate() {
        *v = next;
    }
    labels.iter().map(|l| ids[l]).collect()
}

/// Reads a CSV file with one sample per row. `label_column` defaults to the
/// last column. A first row that does not parse as numbers is a header.
pub fn load_csv<T: Scalar>(path: &Path, label_column: Option<usize>) -> Result<Dataset<T>> {
    let text = fs::read_to_string(path)?;
    parse_csv(&text, label_column, &path.display().to_string())
}

pub fn parse_csv<T: Scalar>(text: &str, label_column: Option<usize>, source: &str) -> Result<Dataset<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            column: 0,
            message: e.to_string(),
        })?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let line = rec.position().map_or(0, |p| p.line() as usize);
        records.push((line, rec));
    }
    let mut rows: Vec<(usize, Vec<&str>)> = records
        .iter()
        .map(|(line, rec)| (*line, rec.iter().collect()))
        .collect();
    if let Some((_, first)) = rows.first() {
        if first.iter().any(|f| f.parse::<f64>().is_err()) {
            rows.remove(0);
        }
    }
    if rows.is_empty() {
        return Err(Error::NoSamples);
    }
    let width = rows[0].1.len();
    if width < 2 {
        return Err(Error::Format("need at least one feature and a label column".into()));
    }
    let label_col = label_column.unwrap_or(width - 1);
    if label_col >= width {
        return Err(Error::InvalidParameter(format!(
            "label column {label_col} out of range for {width} columns"
        )));
    }

    let mut raw = Vec::with_capacity(rows.len() * (width - 1));
    let mut labels = Vec::with_capacity(rows.len());
    for (line, fields) in &rows {
        if fields.len() != width {
            return Err(Error::Parse {
                line: *line,
                column: fields.len().min(width) + 1,
                message: format!("expected {width} fields, found {}", fields.len()),
            });
        }
        for (c, f) in fields.iter().enumerate() {
            if c == label_col {
                labels.push(parse_label(f).ok_or_else(|| Error::Parse {
                    line: *line,
                    column: c + 1,
                    message: if f.is_empty() {
                        "missing label".to_string()
                    } else {
                        format!("label {f:?} is not an integer")
                    },
                })?);
            } else {
                let v: f64 = f.parse().map_err(|_| Error::Parse {
                    line: *line,
                    column: c + 1,
                    message: format!("{f:?} is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line: *line,
                        column: c + 1,
                        message: "non-finite value".into(),
                    });
                }
                raw.push(v);
            }
        }
    }
    let (lo, hi) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let rescaled = lo < 0.0 || hi > 1.0;
    let span = if hi > lo { hi - lo } else { 1.0 };
    let values = raw
        .into_iter()
        .map(|v| T::of(if rescaled { (v - lo) / span } else { v }))
        .collect();
    let x = DataMatrix::from_column_major(width - 1, rows.len(), values);
    let meta = DatasetMeta {
        source: source.to_string(),
        original_range: (lo, hi),
        rescaled,
        value_range: (0.0, 1.0),
        shortfall_classes: Vec::new(),
    };
    Dataset::new(x, reindex(&labels), meta)
}

fn parse_label(field: &str) -> Option<i64> {
    field.parse::<i64>().ok().or_else(|| {
        let v: f64 = field.parse().ok()?;
        (v.fract() == 0.0 && v.abs() < 9.0e15).then_some(v as i64)
    })
}

/// Writes one sample per row with its label in the last column.
pub fn save_csv<T: Scalar>(ds: &Dataset<T>, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (i, sample) in ds.x.samples().enumerate() {
        let mut record: Vec<String> = sample.iter().map(|v| v.as_f64().to_string()).collect();
        record.push(ds.truth[i].to_string());
        w.write_record(&record).map_err(|e| Error::Format(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    write_atomic(path, &bytes)
}

/// Writes to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn read_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format(format!("truncated {what} header")))
}

/// Reads an IDX image file (`0x00000803`) and its label file (`0x00000801`).
pub fn load_idx<T: Scalar>(images_path: &Path, labels_path: &Path) -> Result<Dataset<T>> {
    let images = fs::read(images_path)?;
    let labels = fs::read(labels_path)?;
    let mut ds = parse_idx(&images, &labels)?;
    ds.meta.source = images_path.display().to_string();
    Ok(ds)
}

pub fn parse_idx<T: Scalar>(images: &[u8], labels: &[u8]) -> Result<Dataset<T>> {
    let magic = read_u32(images, 0, "image")?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Format(format!("bad image magic {magic:#010x}")));
    }
    let magic = read_u32(labels, 0, "label")?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::Format(format!("bad label magic {magic:#010x}")));
    }
    let n = read_u32(images, 4, "image")? as usize;
    let rows = read_u32(images, 8, "image")? as usize;
    let cols = read_u32(images, 12, "image")? as usize;
    let n_labels = read_u32(labels, 4, "label")? as usize;
    if n != n_labels {
        return Err(Error::Format(format!(
            "image count {n} does not match label count {n_labels}"
        )));
    }
    let dim = rows * cols;
    let pixels = images
        .get(16..16 + n * dim)
        .ok_or_else(|| Error::Format("truncated image payload".into()))?;
    let raw_labels = labels
        .get(8..8 + n)
        .ok_or_else(|| Error::Format("truncated label payload".into()))?;
    let values = pixels.iter().map(|&p| T::of(p as f64 / 255.0)).collect();
    let x = DataMatrix::from_column_major(dim, n, values);
    let meta = DatasetMeta {
        source: String::new(),
        original_range: (0.0, 255.0),
        rescaled: true,
        value_range: (0.0, 1.0),
        shortfall_classes: Vec::new(),
    };
    Dataset::new(x, reindex(raw_labels), meta)
}

/// Encodes images (row-major pixels, one image after another) and labels in
/// the IDX layout.
pub fn encode_idx(rows: usize, cols: usize, pixels: &[u8], labels: &[u8]) -> (Vec<u8>, Vec<u8>) {
    assert_eq!(pixels.len(), labels.len() * rows * cols);
    let mut img = Vec::with_capacity(16 + pixels.len());
    img.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    img.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    img.extend_from_slice(&(rows as u32).to_be_bytes());
    img.extend_from_slice(&(cols as u32).to_be_bytes());
    img.extend_from_slice(pixels);
    let mut lab = Vec::with_capacity(8 + labels.len());
    lab.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    lab.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    lab.extend_from_slice(labels);
    (img, lab)
}

/// Draws `per_class` samples per class uniformly without replacement.
/// Classes with fewer samples are kept whole and recorded as shortfalls.
/// The output keeps the original sample order.
pub fn subsample_per_class<T: Scalar>(ds: &Dataset<T>, per_class: usize, seed: u64) -> Dataset<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); ds.n_classes()];
    for (i, &c) in ds.truth.iter().enumerate() {
        members[c].push(i);
    }
    let mut keep = vec![false; ds.n_samples()];
    let mut shortfall = Vec::new();
    for (class, idx) in members.iter().enumerate() {
        if idx.len() <= per_class {
            if idx.len() < per_class {
                shortfall.push(class);
            }
            idx.iter().for_each(|&i| keep[i] = true);
        } else {
            for pick in index::sample(&mut rng, idx.len(), per_class) {
                keep[idx[pick]] = true;
            }
        }
    }
    let kept: Vec<usize> = (0..ds.n_samples()).filter(|&i| keep[i]).collect();
    let mut out = ds.select(&kept);
    out.meta.shortfall_classes = shortfall;
    out
}

/// Keeps the samples of the first `k` classes in order of first appearance.
pub fn first_k_classes<T: Scalar>(ds: &Dataset<T>, k: usize) -> Result<Dataset<T>> {
    let mut order = Vec::new();
    for &c in &ds.truth {
        if !order.contains(&c) {
            order.push(c);
        }
    }
    if k == 0 || k > order.len() {
        return Err(Error::InvalidParameter(format!(
            "k must lie in [1, {}], got {k}",
            order.len()
        )));
    }
    let wanted = &order[..k];
    let kept: Vec<usize> = (0..ds.n_samples())
        .filter(|&i| wanted.contains(&ds.truth[i]))
        .collect();
    let mut out = ds.select(&kept);
    out.truth = reindex(&out.truth);
    Ok(out)
}
