//! NTensor: a minimal self-describing container for dense `f64` arrays.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! b"NTNS" | u32 header_len | header_len bytes of UTF-8 JSON | payload
//! ```
//!
//! The header is `{"dtype":"f64","shape":[...],"order":"C"}` and the payload
//! is the row-major array as raw little-endian IEEE-754 doubles.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub const MAGIC: &[u8; 4] = b"NTNS";

#[derive(Debug, thiserror::Error)]
pub enum NTensorError {
    #[error("bad magic {found:?}, expected \"NTNS\"")]
    BadMagic { found: [u8; 4] },

    #[error("truncated file: {0}")]
    Truncated(String),

    #[error("shape {shape:?} needs {expected} values but payload holds {found}")]
    PayloadMismatch {
        shape: Vec<usize>,
        expected: usize,
        found: usize,
    },

    #[error("invalid header: {0}")]
    Header(String),

    #[error("refusing to store non-finite value at offset {0}")]
    NonFinite(usize),

    #[error("slab {index} out of range for leading dimension {len}")]
    SlabOutOfRange { index: usize, len: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

type Result<T> = std::result::Result<T, NTensorError>;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    dtype: String,
    shape: Vec<usize>,
    order: String,
}

impl Header {
    fn new(shape: &[usize]) -> Self {
        Header {
            dtype: "f64".into(),
            shape: shape.to_vec(),
            order: "C".into(),
        }
    }

    fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("header serialises")
    }

    fn parse(bytes: &[u8]) -> Result<Self> {
        let h: Header =
            serde_json::from_slice(bytes).map_err(|e| NTensorError::Header(e.to_string()))?;
        if h.dtype != "f64" {
            return Err(NTensorError::Header(format!("unsupported dtype {}", h.dtype)));
        }
        if h.order != "C" {
            return Err(NTensorError::Header(format!("unsupported order {}", h.order)));
        }
        Ok(h)
    }
}

/// An owned dense array.
#[derive(Clone, Debug, PartialEq)]
pub struct NTensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl NTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(NTensorError::PayloadMismatch {
                shape,
                expected,
                found: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    /// Number of elements in one slab along axis 0.
    pub fn slab_len(&self) -> usize {
        self.shape.iter().skip(1).product()
    }

    pub fn slab(&self, i: usize) -> &[f64] {
        let n = self.slab_len();
        &self.data[i * n..(i + 1) * n]
    }
}

fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(NTensorError::NonFinite(i)),
        None => Ok(()),
    }
}

fn encode_header(shape: &[usize]) -> Vec<u8> {
    let header = Header::new(shape).to_bytes();
    let mut out = Vec::with_capacity(8 + header.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    out
}

pub fn encode(shape: &[usize], data: &[f64]) -> Result<Vec<u8>> {
    let expected: usize = shape.iter().product();
    if expected != data.len() {
        return Err(NTensorError::PayloadMismatch {
            shape: shape.to_vec(),
            expected,
            found: data.len(),
        });
    }
    check_finite(data)?;
    let mut out = encode_header(shape);
    out.reserve(data.len() * 8);
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Parses the fixed prefix, returning the header and the payload offset.
fn decode_prefix(bytes: &[u8]) -> Result<(Header, usize)> {
    if bytes.len() < 8 {
        return Err(NTensorError::Truncated(format!(
            "{} bytes is shorter than the 8-byte prefix",
            bytes.len()
        )));
    }
    let mut found = [0u8; 4];
    found.copy_from_slice(&bytes[..4]);
    if &found != MAGIC {
        return Err(NTensorError::BadMagic { found });
    }
    let header_len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    if bytes.len() < 8 + header_len {
        return Err(NTensorError::Truncated(format!(
            "header declares {header_len} bytes, only {} available",
            bytes.len() - 8
        )));
    }
    Ok((Header::parse(&bytes[8..8 + header_len])?, 8 + header_len))
}

pub fn decode(bytes: &[u8]) -> Result<NTensor> {
    let (header, offset) = decode_prefix(bytes)?;
    let payload = &bytes[offset..];
    if payload.len() % 8 != 0 {
        return Err(NTensorError::Truncated(format!(
            "payload of {} bytes is not a whole number of f64 values",
            payload.len()
        )));
    }
    let expected: usize = header.shape.iter().product();
    let found = payload.len() / 8;
    if found != expected {
        return Err(NTensorError::PayloadMismatch {
            shape: header.shape,
            expected,
            found,
        });
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(NTensor {
        shape: header.shape,
        data,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> NTensorError + '_ {
    move |source| NTensorError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".partial");
    path.with_file_name(name)
}

/// Writes atomically: the data lands in a sibling temporary file which is
/// renamed over `path` once complete.
pub fn write(path: impl AsRef<Path>, shape: &[usize], data: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(shape, data)?;
    let tmp = tmp_path(path);
    std::fs::write(&tmp, &bytes).map_err(io_err(&tmp))?;
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn read(path: impl AsRef<Path>) -> Result<NTensor> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    decode(&bytes)
}

/// Streams an array to disk slab by slab along axis 0.
pub struct NTensorWriter {
    path: PathBuf,
    tmp: PathBuf,
    out: BufWriter<File>,
    shape: Vec<usize>,
    written: usize,
}

impl NTensorWriter {
    pub fn create(path: impl AsRef<Path>, shape: &[usize]) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let tmp = tmp_path(&path);
        let file = File::create(&tmp).map_err(io_err(&tmp))?;
        let mut out = BufWriter::new(file);
        out.write_all(&encode_header(shape)).map_err(io_err(&tmp))?;
        Ok(Self {
            path,
            tmp,
            out,
            shape: shape.to_vec(),
            written: 0,
        })
    }

    pub fn append(&mut self, values: &[f64]) -> Result<()> {
        check_finite(values).map_err(|e| match e {
            NTensorError::NonFinite(i) => NTensorError::NonFinite(self.written + i),
            e => e,
        })?;
        let total: usize = self.shape.iter().product();
        if self.written + values.len() > total {
            return Err(NTensorError::PayloadMismatch {
                shape: self.shape.clone(),
                expected: total,
                found: self.written + values.len(),
            });
        }
        for v in values {
            self.out.write_all(&v.to_le_bytes()).map_err(io_err(&self.tmp))?;
        }
        self.written += values.len();
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        let total: usize = self.shape.iter().product();
        if self.written != total {
            return Err(NTensorError::PayloadMismatch {
                shape: self.shape,
                expected: total,
                found: self.written,
            });
        }
        self.out.flush().map_err(io_err(&self.tmp))?;
        drop(self.out);
        std::fs::rename(&self.tmp, &self.path).map_err(io_err(&self.path))
    }
}

/// Random access to slabs along axis 0 without loading the whole file.
pub struct NTensorReader {
    path: PathBuf,
    file: BufReader<File>,
    shape: Vec<usize>,
    payload_offset: u64,
}

impl NTensorReader {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path).map_err(io_err(&path))?;
        let file_len = file.metadata().map_err(io_err(&path))?.len();
        let mut file = BufReader::new(file);
        let mut prefix = [0u8; 8];
        file.read_exact(&mut prefix)
            .map_err(|_| NTensorError::Truncated("missing 8-byte prefix".into()))?;
        let mut found = [0u8; 4];
        found.copy_from_slice(&prefix[..4]);
        if &found != MAGIC {
            return Err(NTensorError::BadMagic { found });
        }
        let header_len = u32::from_le_bytes(prefix[4..8].try_into().unwrap()) as usize;
        let mut header = vec![0u8; header_len];
        file.read_exact(&mut header)
            .map_err(|_| NTensorError::Truncated("header cut short".into()))?;
        let header = Header::parse(&header)?;
        let payload_offset = 8 + header_len as u64;
        let payload = file_len - payload_offset;
        if payload % 8 != 0 {
            return Err(NTensorError::Truncated(format!(
                "payload of {payload} bytes is not a whole number of f64 values"
            )));
        }
        let expected: usize = header.shape.iter().product();
        if payload / 8 != expected as u64 {
            return Err(NTensorError::PayloadMismatch {
                shape: header.shape,
                expected,
                found: (payload / 8) as usize,
            });
        }
        Ok(Self {
            path,
            file,
            shape: header.shape,
            payload_offset,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.first().copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn slab_len(&self) -> usize {
        self.shape.iter().skip(1).product()
    }

    pub fn read_slab(&mut self, index: usize) -> Result<Vec<f64>> {
        if index >= self.len() {
            return Err(NTensorError::SlabOutOfRange {
                index,
                len: self.len(),
            });
        }
        let n = self.slab_len();
        let offset = self.payload_offset + (index * n * 8) as u64;
        self.file
            .seek(SeekFrom::Start(offset))
            .map_err(io_err(&self.path))?;
        let mut bytes = vec![0u8; n * 8];
        self.file.read_exact(&mut bytes).map_err(io_err(&self.path))?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}
