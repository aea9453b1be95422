//! Binary containers for feature dumps (`LINF`), linear heads (`LINH`),
//! contribution matrices (`LINC`) and the toy model's hidden layer (`LINM`).
//!
//! All four share the same conventions: a 4-byte ASCII magic, a `u32`
//! version (currently 1), a fixed header of little-endian integers, then a
//! payload of IEEE-754 `f32` values, row-major. Nothing is compressed and
//! files are written whole; a failed write never leaves a partial file at
//! the destination.
//!
//! ```text
//! LINF  magic | u32 version | u64 n_samples | u32 dim_q | u32 label_flag
//!       | n_samples*dim_q f32 | (label_flag=1) n_samples u32 labels
//! LINH  magic | u32 version | u32 dim_q | u32 n_classes
//!       | dim_q*n_classes f32 (neuron-major) | n_classes f32 bias
//! LINC  magic | u32 version | u32 dim_q | u32 n_classes | u32 approx
//!       | n_classes u64 counts | dim_q*n_classes f32
//! LINM  magic | u32 version | u32 dim_in | u32 dim_hidden
//!       | dim_in*dim_hidden f32 | dim_hidden f32 bias
//! ```
//!
//! Every reader validates the decoded value before returning it, so an
//! invariant violation (non-finite entry, negative contribution, zero
//! dimension) surfaces at read time rather than inside a computation.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

const MAGIC_FEATURES: [u8; 4] = *b"LINF";
const MAGIC_HEAD: [u8; 4] = *b"LINH";
const MAGIC_CONTRIB: [u8; 4] = *b"LINC";
const MAGIC_HIDDEN: [u8; 4] = *b"LINM";

/// Penultimate-layer activations for one dataset split.
///
/// `tag` is in-memory metadata only; the container has no field for it, so
/// readers fill it from the file stem.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDump {
    pub dim_q: usize,
    /// `n_samples * dim_q` values, row-major.
    pub features: Vec<f32>,
    pub labels: Option<Vec<u32>>,
    pub tag: String,
}

impl FeatureDump {
    pub fn new(
        dim_q: usize,
        features: Vec<f32>,
        labels: Option<Vec<u32>>,
        tag: impl Into<String>,
    ) -> Result<Self> {
        let dump = FeatureDump {
            dim_q,
            features,
            labels,
            tag: tag.into(),
        };
        dump.validate()?;
        Ok(dump)
    }

    pub fn n_samples(&self) -> usize {
        self.features.len().checked_div(self.dim_q).unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.features[i * self.dim_q..(i + 1) * self.dim_q]
    }

    pub fn row_f64(&self, i: usize) -> Vec<f64> {
        self.row(i).iter().map(|&v| f64::from(v)).collect()
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.features.chunks_exact(self.dim_q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim_q == 0 {
            return Err(Error::invalid("feature dump has dim_q = 0"));
        }
        if self.features.is_empty() {
            return Err(Error::invalid("feature dump has no samples"));
        }
        if !self.features.len().is_multiple_of(self.dim_q) {
            return Err(Error::DimMismatch {
                context: "feature matrix length",
                expected: self.features.len() / self.dim_q * self.dim_q,
                got: self.features.len(),
            });
        }
        check_finite("features", &self.features)?;
        if let Some(labels) = &self.labels {
            if labels.len() != self.n_samples() {
                return Err(Error::DimMismatch {
                    context: "label count",
                    expected: self.n_samples(),
                    got: labels.len(),
                });
            }
        }
        Ok(())
    }

    /// Checks every label against the class count of the head this dump is
    /// paired with.
    pub fn validate_labels(&self, n_classes: usize) -> Result<()> {
        if let Some(labels) = &self.labels {
            for (sample, &label) in labels.iter().enumerate() {
                if label as usize >= n_classes {
                    return Err(Error::LabelOutOfRange {
                        sample,
                        label,
                        n_classes,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let n = self.n_samples();
        let mut buf = Vec::with_capacity(24 + self.features.len() * 4 + n * 4);
        buf.extend_from_slice(&MAGIC_FEATURES);
        put_u32(&mut buf, FORMAT_VERSION);
        put_u64(&mut buf, n as u64);
        put_u32(&mut buf, to_u32(self.dim_q, "dim_q")?);
        put_u32(&mut buf, u32::from(self.labels.is_some()));
        put_f32s(&mut buf, &self.features);
        if let Some(labels) = &self.labels {
            for &l in labels {
                put_u32(&mut buf, l);
            }
        }
        Ok(buf)
    }

    pub fn from_bytes(bytes: &[u8], tag: impl Into<String>) -> Result<Self> {
        let mut r = Reader::new(bytes, "LINF");
        r.magic(MAGIC_FEATURES)?;
        r.version()?;
        let n_samples = r.u64("header")?;
        let dim_q = r.u32("header")? as usize;
        let label_flag = r.u32("header")?;
        if label_flag > 1 {
            return Err(Error::invalid(format!("LINF label_flag {label_flag}")));
        }
        if n_samples == 0 || dim_q == 0 {
            return Err(Error::invalid(format!(
                "LINF header has n_samples={n_samples}, dim_q={dim_q}"
            )));
        }
        let n = usize::try_from(n_samples)
            .map_err(|_| Error::invalid("LINF n_samples exceeds address space"))?;
        let count = checked_len(n, dim_q)?;
        let features = r.f32s(count, "features")?;
        let labels = if label_flag == 1 {
            Some(r.u32s(n, "labels")?)
        } else {
            None
        };
        r.finish()?;
        FeatureDump::new(dim_q, features, labels, tag)
    }
}

/// Final linear classifier: `logits = Wᵀ h + b` with `W` stored neuron-major
/// (`weights[i * n_classes + l]` is the weight from neuron `i` to class `l`).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead {
    pub dim_q: usize,
    pub n_classes: usize,
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

impl LinearHead {
    pub fn new(dim_q: usize, n_classes: usize, weights: Vec<f32>, bias: Vec<f32>) -> Result<Self> {
        let head = LinearHead {
            dim_q,
            n_classes,
            weights,
            bias,
        };
        head.validate()?;
        Ok(head)
    }

    pub fn zeros(dim_q: usize, n_classes: usize) -> Self {
        LinearHead {
            dim_q,
            n_classes,
            weights: vec![0.0; dim_q * n_classes],
            bias: vec![0.0; n_classes],
        }
    }

    #[inline]
    pub fn weight(&self, neuron: usize, class: usize) -> f64 {
        f64::from(self.weights[neuron * self.n_classes + class])
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim_q == 0 || self.n_classes == 0 {
            return Err(Error::invalid(format!(
                "head has dim_q={}, n_classes={}",
                self.dim_q, self.n_classes
            )));
        }
        if self.weights.len() != self.dim_q * self.n_classes {
            return Err(Error::DimMismatch {
                context: "head weights",
                expected: self.dim_q * self.n_classes,
                got: self.weights.len(),
            });
        }
        if self.bias.len() != self.n_classes {
            return Err(Error::DimMismatch {
                context: "head bias",
                expected: self.n_classes,
                got: self.bias.len(),
            });
        }
        check_finite("head weights", &self.weights)?;
        check_finite("head bias", &self.bias)
    }

    pub fn check_features(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.dim_q {
            return Err(Error::DimMismatch {
                context: "feature vector vs head",
                expected: self.dim_q,
                got: features.len(),
            });
        }
        Ok(())
    }

    /// `Wᵀ h + b`. Sums run over neurons in ascending order and the bias is
    /// added last; the masked forward pass in the detector relies on the
    /// same order to reproduce these values bit-for-bit when nothing is
    /// masked.
    pub fn logits(&self, features: &[f64]) -> Vec<f64> {
        debug_assert_eq!(features.len(), self.dim_q);
        let mut out = vec![0.0f64; self.n_classes];
        for (row, &a) in self.weights.chunks_exact(self.n_classes).zip(features) {
            for (acc, &w) in out.iter_mut().zip(row) {
                *acc += f64::from(w) * a;
            }
        }
        for (acc, &b) in out.iter_mut().zip(&self.bias) {
            *acc += f64::from(b);
        }
        out
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let mut buf = Vec::with_capacity(16 + (self.weights.len() + self.bias.len()) * 4);
        buf.extend_from_slice(&MAGIC_HEAD);
        put_u32(&mut buf, FORMAT_VERSION);
        put_u32(&mut buf, to_u32(self.dim_q, "dim_q")?);
        put_u32(&mut buf, to_u32(self.n_classes, "n_classes")?);
        put_f32s(&mut buf, &self.weights);
        put_f32s(&mut buf, &self.bias);
        Ok(buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "LINH");
        r.magic(MAGIC_HEAD)?;
        r.version()?;
        let dim_q = r.u32("header")? as usize;
        let n_classes = r.u32("header")? as usize;
        if dim_q == 0 || n_classes == 0 {
            return Err(Error::invalid(format!(
                "LINH header has dim_q={dim_q}, n_classes={n_classes}"
            )));
        }
        let weights = r.f32s(checked_len(dim_q, n_classes)?, "weights")?;
        let bias = r.f32s(n_classes, "bias")?;
        r.finish()?;
        LinearHead::new(dim_q, n_classes, weights, bias)
    }
}

/// Which Shapley approximation produced a contribution matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Approx {
    Taylor,
    IntGrad,
}

impl Approx {
    fn code(self) -> u32 {
        match self {
            Approx::Taylor => 0,
            Approx::IntGrad => 1,
        }
    }

    fn from_code(code: u32) -> Result<Self> {
        match code {
            0 => Ok(Approx::Taylor),
            1 => Ok(Approx::IntGrad),
            other => Err(Error::invalid(format!("LINC approx code {other}"))),
        }
    }
}

impl std::str::FromStr for Approx {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "taylor" => Ok(Approx::Taylor),
            "intgrad" => Ok(Approx::IntGrad),
            other => Err(Error::invalid(format!(
                "unknown approximation {other:?} (expected taylor or intgrad)"
            ))),
        }
    }
}

/// Class-averaged neuron contributions, `dim_q × n_classes`, neuron-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ContributionMatrix {
    pub dim_q: usize,
    pub n_classes: usize,
    pub values: Vec<f32>,
    pub samples_per_class: Vec<u64>,
    pub approx: Approx,
}

impl ContributionMatrix {
    #[inline]
    pub fn value(&self, neuron: usize, class: usize) -> f32 {
        self.values[neuron * self.n_classes + class]
    }

    pub fn column(&self, class: usize) -> Vec<f32> {
        (0..self.dim_q).map(|i| self.value(i, class)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim_q == 0 || self.n_classes == 0 {
            return Err(Error::invalid(format!(
                "contribution matrix has dim_q={}, n_classes={}",
                self.dim_q, self.n_classes
            )));
        }
        if self.values.len() != self.dim_q * self.n_classes {
            return Err(Error::DimMismatch {
                context: "contribution values",
                expected: self.dim_q * self.n_classes,
                got: self.values.len(),
            });
        }
        if self.samples_per_class.len() != self.n_classes {
            return Err(Error::DimMismatch {
                context: "contribution sample counts",
                expected: self.n_classes,
                got: self.samples_per_class.len(),
            });
        }
        check_finite("contributions", &self.values)?;
        if let Some((index, &value)) = self.values.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::Negative {
                what: "contributions",
                index,
                value,
            });
        }
        let missing: Vec<usize> = self
            .samples_per_class
            .iter()
            .enumerate()
            .filter(|(_, &n)| n == 0)
            .map(|(l, _)| l)
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingClasses(missing));
        }
        Ok(())
    }

    pub fn check_head(&self, head: &LinearHead) -> Result<()> {
        if self.dim_q != head.dim_q {
            return Err(Error::DimMismatch {
                context: "contribution dim_q vs head",
                expected: head.dim_q,
                got: self.dim_q,
            });
        }
        if self.n_classes != head.n_classes {
            return Err(Error::DimMismatch {
                context: "contribution n_classes vs head",
                expected: head.n_classes,
                got: self.n_classes,
            });
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let mut buf = Vec::with_capacity(20 + self.n_classes * 8 + self.values.len() * 4);
        buf.extend_from_slice(&MAGIC_CONTRIB);
        put_u32(&mut buf, FORMAT_VERSION);
        put_u32(&mut buf, to_u32(self.dim_q, "dim_q")?);
        put_u32(&mut buf, to_u32(self.n_classes, "n_classes")?);
        put_u32(&mut buf, self.approx.code());
        for &n in &self.samples_per_class {
            put_u64(&mut buf, n);
        }
        put_f32s(&mut buf, &self.values);
        Ok(buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "LINC");
        r.magic(MAGIC_CONTRIB)?;
        r.version()?;
        let dim_q = r.u32("header")? as usize;
        let n_classes = r.u32("header")? as usize;
        let approx = Approx::from_code(r.u32("header")?)?;
        if dim_q == 0 || n_classes == 0 {
            return Err(Error::invalid(format!(
                "LINC header has dim_q={dim_q}, n_classes={n_classes}"
            )));
        }
        let samples_per_class = r.u64s(n_classes, "counts")?;
        let values = r.f32s(checked_len(dim_q, n_classes)?, "values")?;
        r.finish()?;
        let c = ContributionMatrix {
            dim_q,
            n_classes,
            values,
            samples_per_class,
            approx,
        };
        c.validate()?;
        Ok(c)
    }
}

/// First (input → hidden) layer of the toy network, `dim_in × dim_hidden`,
/// input-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer {
    pub dim_in: usize,
    pub dim_hidden: usize,
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

impl HiddenLayer {
    pub fn validate(&self) -> Result<()> {
        if self.dim_in == 0 || self.dim_hidden == 0 {
            return Err(Error::invalid(format!(
                "hidden layer has dim_in={}, dim_hidden={}",
                self.dim_in, self.dim_hidden
            )));
        }
        if self.weights.len() != self.dim_in * self.dim_hidden {
            return Err(Error::DimMismatch {
                context: "hidden weights",
                expected: self.dim_in * self.dim_hidden,
                got: self.weights.len(),
            });
        }
        if self.bias.len() != self.dim_hidden {
            return Err(Error::DimMismatch {
                context: "hidden bias",
                expected: self.dim_hidden,
                got: self.bias.len(),
            });
        }
        check_finite("hidden weights", &self.weights)?;
        check_finite("hidden bias", &self.bias)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let mut buf = Vec::with_capacity(16 + (self.weights.len() + self.bias.len()) * 4);
        buf.extend_from_slice(&MAGIC_HIDDEN);
        put_u32(&mut buf, FORMAT_VERSION);
        put_u32(&mut buf, to_u32(self.dim_in, "dim_in")?);
        put_u32(&mut buf, to_u32(self.dim_hidden, "dim_hidden")?);
        put_f32s(&mut buf, &self.weights);
        put_f32s(&mut buf, &self.bias);
        Ok(buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "LINM");
        r.magic(MAGIC_HIDDEN)?;
        r.version()?;
        let dim_in = r.u32("header")? as usize;
        let dim_hidden = r.u32("header")? as usize;
        if dim_in == 0 || dim_hidden == 0 {
            return Err(Error::invalid(format!(
                "LINM header has dim_in={dim_in}, dim_hidden={dim_hidden}"
            )));
        }
        let weights = r.f32s(checked_len(dim_in, dim_hidden)?, "weights")?;
        let bias = r.f32s(dim_hidden, "bias")?;
        r.finish()?;
        let layer = HiddenLayer {
            dim_in,
            dim_hidden,
            weights,
            bias,
        };
        layer.validate()?;
        Ok(layer)
    }
}

pub fn write_feature_dump(dump: &FeatureDump, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &dump.to_bytes()?)
}

pub fn read_feature_dump(path: impl AsRef<Path>) -> Result<FeatureDump> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let tag = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    FeatureDump::from_bytes(&bytes, tag)
}

pub fn write_head(head: &LinearHead, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &head.to_bytes()?)
}

pub fn read_head(path: impl AsRef<Path>) -> Result<LinearHead> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    LinearHead::from_bytes(&bytes)
}

pub fn write_contrib(c: &ContributionMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &c.to_bytes()?)
}

pub fn read_contrib(path: impl AsRef<Path>) -> Result<ContributionMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    ContributionMatrix::from_bytes(&bytes)
}

pub fn write_hidden(layer: &HiddenLayer, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &layer.to_bytes()?)
}

pub fn read_hidden(path: impl AsRef<Path>) -> Result<HiddenLayer> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    HiddenLayer::from_bytes(&bytes)
}

/// Writes `bytes` to a temporary sibling of `path` and renames it into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.flush().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn check_finite(what: &'static str, values: &[f32]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { what, index }),
        None => Ok(()),
    }
}

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::invalid(format!("{what}={v} does not fit in u32")))
}

fn checked_len(a: usize, b: usize) -> Result<usize> {
    a.checked_mul(b)
        .filter(|n| n.checked_mul(4).is_some())
        .ok_or_else(|| Error::invalid(format!("payload size {a}×{b} overflows")))
}

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_f32s(buf: &mut Vec<u8>, values: &[f32]) {
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    format: &'static str,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], format: &'static str) -> Self {
        Reader {
            bytes,
            pos: 0,
            format,
        }
    }

    fn take(&mut self, n: usize, section: &'static str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(Error::Truncated {
                format: self.format,
                section,
            }),
        }
    }

    fn magic(&mut self, expected: [u8; 4]) -> Result<()> {
        let found: [u8; 4] = self.take(4, "magic")?.try_into().unwrap();
        if found != expected {
            return Err(Error::BadMagic { expected, found });
        }
        Ok(())
    }

    fn version(&mut self) -> Result<()> {
        let found = self.u32("version")?;
        if found != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                format: self.format,
                expected: FORMAT_VERSION,
                found,
            });
        }
        Ok(())
    }

    fn u32(&mut self, section: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, section)?.try_into().unwrap()))
    }

    fn u64(&mut self, section: &'static str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, section)?.try_into().unwrap()))
    }

    fn u32s(&mut self, n: usize, section: &'static str) -> Result<Vec<u32>> {
        let raw = self.take(n * 4, section)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn u64s(&mut self, n: usize, section: &'static str) -> Result<Vec<u64>> {
        let len = n
            .checked_mul(8)
            .ok_or_else(|| Error::invalid("payload size overflows"))?;
        let raw = self.take(len, section)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn f32s(&mut self, n: usize, section: &'static str) -> Result<Vec<f32>> {
        let raw = self.take(n * 4, section)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn finish(self) -> Result<()> {
        let extra = self.bytes.len() - self.pos;
        if extra != 0 {
            return Err(Error::TrailingBytes {
                format: self.format,
                extra,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_dump(labels: bool) -> FeatureDump {
        FeatureDump::new(
            3,
            vec![0.0, 1.5, 2.25, 3.0, 0.125, 7.0],
            labels.then(|| vec![1, 0]),
            "small",
        )
        .unwrap()
    }

    fn small_head() -> LinearHead {
        LinearHead::new(2, 3, vec![1.0, -2.0, 0.5, 0.25, 0.0, -1.0], vec![0.1, 0.2, 0.3]).unwrap()
    }

    fn small_contrib() -> ContributionMatrix {
        ContributionMatrix {
            dim_q: 2,
            n_classes: 2,
            values: vec![0.5, 0.0, 1.25, 3.0],
            samples_per_class: vec![4, 9],
            approx: Approx::IntGrad,
        }
    }

    fn small_hidden() -> HiddenLayer {
        HiddenLayer {
            dim_in: 2,
            dim_hidden: 2,
            weights: vec![0.5, -0.5, 1.0, 2.0],
            bias: vec![0.0, -0.25],
        }
    }

    #[test]
    fn one_by_one_dump_rewrites_identically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.linf");
        let dump = FeatureDump::new(1, vec![0.5], None, "one").unwrap();
        write_feature_dump(&dump, &path).unwrap();
        let first = fs::read(&path).unwrap();
        let back = read_feature_dump(&path).unwrap();
        assert_eq!(back, dump);
        write_feature_dump(&back, &path).unwrap();
        assert_eq!(fs::read(&path).unwrap(), first);
        assert_eq!(first.len(), 4 + 4 + 8 + 4 + 4 + 4);
    }

    #[test]
    fn nan_dump_is_refused_before_writing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nan.linf");
        let dump = FeatureDump {
            dim_q: 2,
            features: vec![1.0, f32::NAN],
            labels: None,
            tag: "nan".into(),
        };
        assert!(matches!(
            write_feature_dump(&dump, &path),
            Err(Error::NonFinite { index: 1, .. })
        ));
        assert!(!path.exists());
    }

    #[test]
    fn layout_is_little_endian() {
        let bytes = small_dump(true).to_bytes().unwrap();
        assert_eq!(&bytes[0..4], b"LINF");
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        assert_eq!(&bytes[8..16], &[2, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(&bytes[16..20], &[3, 0, 0, 0]);
        assert_eq!(&bytes[20..24], &[1, 0, 0, 0]);
        assert_eq!(&bytes[28..32], &1.5f32.to_le_bytes());
        assert_eq!(&bytes[bytes.len() - 8..], &[1, 0, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn bad_magic_is_reported() {
        let mut bytes = small_dump(false).to_bytes().unwrap();
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(
            FeatureDump::from_bytes(&bytes, "x"),
            Err(Error::BadMagic { found, .. }) if &found == b"XXXX"
        ));
        let mut head = small_head().to_bytes().unwrap();
        head[..4].copy_from_slice(b"LINF");
        assert!(matches!(LinearHead::from_bytes(&head), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn version_mismatch_is_reported() {
        let mut bytes = small_contrib().to_bytes().unwrap();
        bytes[4] = 2;
        assert!(matches!(
            ContributionMatrix::from_bytes(&bytes),
            Err(Error::VersionMismatch { found: 2, .. })
        ));
    }

    #[test]
    fn non_finite_payload_is_rejected_on_read() {
        let mut bytes = small_head().to_bytes().unwrap();
        bytes[16..20].copy_from_slice(&f32::INFINITY.to_le_bytes());
        assert!(matches!(
            LinearHead::from_bytes(&bytes),
            Err(Error::NonFinite { what: "head weights", index: 0 })
        ));
    }

    #[test]
    fn negative_contribution_is_rejected_on_read() {
        let mut bytes = small_contrib().to_bytes().unwrap();
        let off = bytes.len() - 4;
        bytes[off..].copy_from_slice(&(-1.0f32).to_le_bytes());
        assert!(matches!(
            ContributionMatrix::from_bytes(&bytes),
            Err(Error::Negative { index: 3, .. })
        ));
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let mut bytes = small_hidden().to_bytes().unwrap();
        bytes.push(0);
        assert!(matches!(
            HiddenLayer::from_bytes(&bytes),
            Err(Error::TrailingBytes { extra: 1, .. })
        ));
    }

    #[test]
    fn every_truncation_is_rejected_as_truncated() {
        type Parse = fn(&[u8]) -> Result<()>;
        let blobs: Vec<(Vec<u8>, Parse)> = vec![
            (small_dump(true).to_bytes().unwrap(), |b| {
                FeatureDump::from_bytes(b, "t").map(|_| ())
            }),
            (small_dump(false).to_bytes().unwrap(), |b| {
                FeatureDump::from_bytes(b, "t").map(|_| ())
            }),
            (small_head().to_bytes().unwrap(), |b| {
                LinearHead::from_bytes(b).map(|_| ())
            }),
            (small_contrib().to_bytes().unwrap(), |b| {
                ContributionMatrix::from_bytes(b).map(|_| ())
            }),
            (small_hidden().to_bytes().unwrap(), |b| {
                HiddenLayer::from_bytes(b).map(|_| ())
            }),
        ];
        for (bytes, parse) in blobs {
            parse(&bytes).unwrap();
            for cut in 0..bytes.len() {
                match parse(&bytes[..cut]) {
                    Err(Error::Truncated { .. }) => {}
                    other => panic!("cut at {cut}: {other:?}"),
                }
            }
        }
    }

    #[test]
    fn truncation_names_the_section() {
        let bytes = small_dump(true).to_bytes().unwrap();
        let section = |cut: usize| match FeatureDump::from_bytes(&bytes[..cut], "t") {
            Err(Error::Truncated { section, .. }) => section,
            other => panic!("{other:?}"),
        };
        assert_eq!(section(0), "magic");
        assert_eq!(section(6), "version");
        assert_eq!(section(24), "features");
        assert_eq!(section(24 + 6 * 4), "labels");
    }

    #[test]
    fn label_range_is_checked_against_head() {
        let dump = small_dump(true);
        dump.validate_labels(2).unwrap();
        assert!(matches!(
            dump.validate_labels(1),
            Err(Error::LabelOutOfRange { sample: 0, label: 1, .. })
        ));
    }

    #[test]
    fn head_logits_match_hand_computation() {
        let head = small_head();
        let z = head.logits(&[2.0, 4.0]);
        assert_eq!(z, vec![2.0 + 1.0 + 0.1f32 as f64, -4.0 + 0.2f32 as f64, 1.0 - 4.0 + 0.3f32 as f64]);
    }

    #[test]
    fn zero_count_class_is_invalid() {
        let mut c = small_contrib();
        c.samples_per_class[1] = 0;
        assert!(matches!(c.validate(), Err(Error::MissingClasses(v)) if v == vec![1]));
    }

    #[test]
    fn approx_parses_from_names() {
        assert_eq!("taylor".parse::<Approx>().unwrap(), Approx::Taylor);
        assert_eq!("intgrad".parse::<Approx>().unwrap(), Approx::IntGrad);
        assert!("shap".parse::<Approx>().is_err());
    }
}
