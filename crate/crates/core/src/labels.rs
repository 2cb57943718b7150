//! Label-file formats.
//!
//! Two on-disk formats feed the baselines module:
//!
//! * class-label CSV with header `sample_id,class`,
//! * the `TCLB` dense-array container: a little-endian header
//!   `{magic "TCLB", version u32 = 1, sample_count u64, rank u32,
//!   dims u32 x rank, dtype u8 (0 = f32, 1 = f64)}` followed by all samples
//!   contiguously, sample-major.
//!
//! [`TclbReader`] exposes a file as a [`DenseLabelSource`] so per-element
//! statistics can stream over it without loading every sample.

use std::fs::File;
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use thiserror::Error;

use crate::baselines::{BaselinesError, DenseLabels, DenseLabelSource};

pub const TCLB_MAGIC: [u8; 4] = *b"TCLB";
pub const TCLB_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LabelIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a dense-label file: bad magic")]
    BadMagic,
    #[error("unsupported dense-label version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed dense-label header: {0}")]
    BadHeader(String),
    #[error("class CSV row {row}: {reason}")]
    Csv { row: usize, reason: String },
    #[error("non-finite label value at sample {sample}, element {element}")]
    NonFinite { sample: u64, element: u64 },
}

/// Element type stored in a dense-label file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelDtype {
    F32,
    F64,
}

impl LabelDtype {
    pub fn code(self) -> u8 {
        match self {
            LabelDtype::F32 => 0,
            LabelDtype::F64 => 1,
        }
    }

    pub fn width(self) -> u64 {
        match self {
            LabelDtype::F32 => 4,
            LabelDtype::F64 => 8,
        }
    }

    fn from_code(code: u8) -> Result<Self, LabelIoError> {
        match code {
            0 => Ok(LabelDtype::F32),
            1 => Ok(LabelDtype::F64),
            other => Err(LabelIoError::BadHeader(format!("unknown dtype {other}"))),
        }
    }
}

/// Writes a dense-label file. `values` holds all samples sample-major and
/// must contain `sample_count * product(dims)` elements.
pub fn write_tclb(
    path: &Path,
    dims: &[u32],
    dtype: LabelDtype,
    values: &[f64],
    sample_count: u64,
) -> Result<(), LabelIoError> {
    let elements: u64 = dims.iter().map(|&d| u64::from(d)).product::<u64>().max(1);
    let expected = sample_count
        .checked_mul(elements)
        .ok_or_else(|| LabelIoError::BadHeader("label shape overflows".into()))?;
    if values.len() as u64 != expected {
        return Err(LabelIoError::BadHeader(format!(
            "{} values but {sample_count} samples of {elements} elements declared",
            values.len()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&TCLB_MAGIC)?;
    w.write_all(&TCLB_VERSION.to_le_bytes())?;
    w.write_all(&sample_count.to_le_bytes())?;
    w.write_all(&(dims.len() as u32).to_le_bytes())?;
    for &d in dims {
        w.write_all(&d.to_le_bytes())?;
    }
    w.write_all(&[dtype.code()])?;
    match dtype {
        LabelDtype::F32 => {
            for &v in values {
                w.write_all(&(v as f32).to_le_bytes())?;
            }
        }
        LabelDtype::F64 => {
            for &v in values {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Streaming reader for a dense-label file.
pub struct TclbReader {
    file: File,
    dims: Vec<u32>,
    dtype: LabelDtype,
    sample_count: u64,
    elements: u64,
    data_offset: u64,
}

impl TclbReader {
    pub fn open(path: &Path) -> Result<Self, LabelIoError> {
        let mut file = File::open(path)?;
        let mut magic = [0u8; 4];
        file.read_exact(&mut magic)?;
        if magic != TCLB_MAGIC {
            return Err(LabelIoError::BadMagic);
        }
        let version = read_u32(&mut file)?;
        if version != TCLB_VERSION {
            return Err(LabelIoError::UnsupportedVersion(version));
        }
        let sample_count = read_u64(&mut file)?;
        let rank = read_u32(&mut file)?;
        if rank > 8 {
            return Err(LabelIoError::BadHeader(format!("rank {rank} too large")));
        }
        let mut dims = Vec::with_capacity(rank as usize);
        for _ in 0..rank {
            let d = read_u32(&mut file)?;
            if d == 0 {
                return Err(LabelIoError::BadHeader("zero dimension".into()));
            }
            dims.push(d);
        }
        let mut dtype_code = [0u8; 1];
        file.read_exact(&mut dtype_code)?;
        let dtype = LabelDtype::from_code(dtype_code[0])?;
        let elements: u64 = dims.iter().map(|&d| u64::from(d)).product::<u64>().max(1);
        let data_offset = file.stream_position()?;
        let expected = sample_count
            .checked_mul(elements)
            .and_then(|n| n.checked_mul(dtype.width()))
            .ok_or_else(|| LabelIoError::BadHeader("label shape overflows".into()))?;
        let actual = file.metadata()?.len() - data_offset;
        if actual != expected {
            return Err(LabelIoError::BadHeader(format!(
                "payload holds {actual} bytes, header declares {expected}"
            )));
        }
        Ok(Self {
            file,
            dims,
            dtype,
            sample_count,
            elements,
            data_offset,
        })
    }

    pub fn dtype(&self) -> LabelDtype {
        self.dtype
    }

    /// Loads the whole file into memory. Suitable for evaluation sets that
    /// fit comfortably; streaming statistics should use the source trait.
    pub fn read_all(&mut self) -> Result<DenseLabels, LabelIoError> {
        let total = self
            .sample_count
            .checked_mul(self.elements)
            .and_then(|n| usize::try_from(n).ok())
            .ok_or_else(|| LabelIoError::BadHeader("label shape overflows".into()))?;
        self.file.seek(SeekFrom::Start(self.data_offset))?;
        let mut values = vec![0.0f64; total];
        let width = self.dtype.width() as usize;
        let mut raw = vec![0u8; total * width];
        self.file.read_exact(&mut raw)?;
        for (i, chunk) in raw.chunks_exact(width).enumerate() {
            values[i] = match self.dtype {
                LabelDtype::F32 => f32::from_le_bytes(chunk.try_into().unwrap()) as f64,
                LabelDtype::F64 => f64::from_le_bytes(chunk.try_into().unwrap()),
            };
        }
        DenseLabels::new(self.dims.clone(), values).map_err(|e| match e {
            BaselinesError::NonFiniteLabel {
                sample, element, ..
            } => LabelIoError::NonFinite { sample, element },
            other => LabelIoError::BadHeader(other.to_string()),
        })
    }
}

impl DenseLabelSource for TclbReader {
    fn sample_count(&self) -> u64 {
        self.sample_count
    }

    fn dims(&self) -> &[u32] {
        &self.dims
    }

    fn read_element_block(
        &mut self,
        first: u64,
        count: u64,
        out: &mut [f64],
    ) -> Result<(), BaselinesError> {
        let width = self.dtype.width();
        let mut raw = vec![0u8; (count * width) as usize];
        for s in 0..self.sample_count {
            let offset = self.data_offset + (s * self.elements + first) * width;
            self.file.seek(SeekFrom::Start(offset))?;
            self.file.read_exact(&mut raw)?;
            for (e, chunk) in raw.chunks_exact(width as usize).enumerate() {
                let v = match self.dtype {
                    LabelDtype::F32 => f32::from_le_bytes(chunk.try_into().unwrap()) as f64,
                    LabelDtype::F64 => f64::from_le_bytes(chunk.try_into().unwrap()),
                };
                out[e * self.sample_count as usize + s as usize] = v;
            }
        }
        Ok(())
    }
}

/// Parses a class-label CSV (`sample_id,class`) into class indices in row
/// order.
pub fn parse_class_csv(text: &str) -> Result<Vec<u64>, LabelIoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| LabelIoError::Csv {
            row: 0,
            reason: e.to_string(),
        })?
        .clone();
    let expected = ["sample_id", "class"];
    let names: Vec<&str> = headers.iter().collect();
    if names != expected {
        return Err(LabelIoError::Csv {
            row: 0,
            reason: format!("header must be 'sample_id,class', got '{}'", names.join(",")),
        });
    }
    let mut classes = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| LabelIoError::Csv {
            row,
            reason: e.to_string(),
        })?;
        let class_field = record.get(1).ok_or_else(|| LabelIoError::Csv {
            row,
            reason: "missing class field".into(),
        })?;
        let class = class_field
            .trim()
            .parse::<u64>()
            .map_err(|e| LabelIoError::Csv {
                row,
                reason: format!("bad class index '{class_field}': {e}"),
            })?;
        classes.push(class);
    }
    Ok(classes)
}

fn read_u32(r: &mut impl Read) -> Result<u32, LabelIoError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read) -> Result<u64, LabelIoError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}
