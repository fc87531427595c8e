//! Reading and writing dense float arrays in the npy v1.0 layout.
//!
//! Only little-endian `<f4` / `<f8` element types in C (row-major) order are
//! supported. Fortran-order files are rejected instead of being transposed, so
//! a read followed by a write always reproduces the original bytes.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::embedding::EmbeddingMatrix;
use crate::error::{validation, Result, ToraError};

/// The npy magic number.
pub const MAGIC: [u8; 6] = *b"\x93NUMPY";

const PREAMBLE_ALIGN: usize = 64;
// magic + version + u16 header length
const FIXED_PREAMBLE: usize = 10;

/// Element width tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    pub fn descr(self) -> &'static str {
        match self {
            Dtype::F32 => "<f4",
            Dtype::F64 => "<f8",
        }
    }

    fn from_descr(descr: &str) -> Result<Self> {
        match descr {
            "<f4" => Ok(Dtype::F32),
            "<f8" => Ok(Dtype::F64),
            other => Err(ToraError::Format(format!(
                "unsupported descr '{other}' (expected '<f4' or '<f8')"
            ))),
        }
    }
}

/// Element buffer in its on-disk width.
#[derive(Debug, Clone, PartialEq)]
pub enum ArrayData {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl ArrayData {
    pub fn len(&self) -> usize {
        match self {
            ArrayData::F32(v) => v.len(),
            ArrayData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> Dtype {
        match self {
            ArrayData::F32(_) => Dtype::F32,
            ArrayData::F64(_) => Dtype::F64,
        }
    }

    /// Values widened to 64-bit.
    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            ArrayData::F32(v) => v.iter().map(|&x| f64::from(x)).collect(),
            ArrayData::F64(v) => v.clone(),
        }
    }
}

/// A row-major array as stored in an npy file.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayFile {
    pub shape: Vec<usize>,
    pub data: ArrayData,
}

impl ArrayFile {
    pub fn new(shape: Vec<usize>, data: ArrayData) -> Result<Self> {
        let file = Self { shape, data };
        file.validate()?;
        Ok(file)
    }

    /// Builds a file from 64-bit values, narrowing to `dtype` if needed.
    pub fn from_f64(shape: Vec<usize>, values: Vec<f64>, dtype: Dtype) -> Result<Self> {
        let data = match dtype {
            Dtype::F64 => ArrayData::F64(values),
            Dtype::F32 => ArrayData::F32(values.into_iter().map(|x| x as f32).collect()),
        };
        Self::new(shape, data)
    }

    pub fn from_matrix(matrix: &EmbeddingMatrix, dtype: Dtype) -> Result<Self> {
        Self::from_f64(
            vec![matrix.tokens(), matrix.dim()],
            matrix.to_row_major(),
            dtype,
        )
    }

    /// Stacks equally shaped matrices into a `(B, V, d)` array.
    pub fn from_stack(matrices: &[EmbeddingMatrix], dtype: Dtype) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| validation!("cannot stack zero matrices"))?;
        let (v, d) = (first.tokens(), first.dim());
        let mut values = Vec::with_capacity(matrices.len() * v * d);
        for m in matrices {
            if (m.tokens(), m.dim()) != (v, d) {
                return Err(validation!(
                    "stacked matrices differ in shape: {v}x{d} vs {}x{}",
                    m.tokens(),
                    m.dim()
                ));
            }
            values.extend(m.to_row_major());
        }
        Self::from_f64(vec![matrices.len(), v, d], values, dtype)
    }

    pub fn dtype(&self) -> Dtype {
        self.data.dtype()
    }

    pub fn element_count(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        if self.element_count() != self.data.len() {
            return Err(validation!(
                "shape {:?} holds {} elements but payload has {}",
                self.shape,
                self.element_count(),
                self.data.len()
            ));
        }
        Ok(())
    }

    /// Interprets a rank-2 array as an embedding matrix.
    pub fn to_matrix(&self) -> Result<EmbeddingMatrix> {
        match self.shape.as_slice() {
            &[v, d] => EmbeddingMatrix::from_row_slice(v, d, &self.data.to_f64()),
            other => Err(validation!("expected a rank-2 (V, d) array, got shape {other:?}")),
        }
    }

    /// Interprets a rank-2 array as a single-element stack and a rank-3 array
    /// as `B` matrices of shape `(V, d)`.
    pub fn to_stack(&self) -> Result<Vec<EmbeddingMatrix>> {
        match self.shape.as_slice() {
            &[_, _] => Ok(vec![self.to_matrix()?]),
            &[b, v, d] => {
                let values = self.data.to_f64();
                (0..b)
                    .map(|i| {
                        EmbeddingMatrix::from_row_slice(v, d, &values[i * v * d..(i + 1) * v * d])
                    })
                    .collect()
            }
            other => Err(validation!(
                "expected a (V, d) or (B, V, d) array, got shape {other:?}"
            )),
        }
    }
}

impl From<&DMatrix<f64>> for ArrayFile {
    fn from(m: &DMatrix<f64>) -> Self {
        let mut values = Vec::with_capacity(m.len());
        for r in m.row_iter() {
            values.extend(r.iter().copied());
        }
        Self {
            shape: vec![m.nrows(), m.ncols()],
            data: ArrayData::F64(values),
        }
    }
}

pub fn read_array(path: impl AsRef<Path>) -> Result<ArrayFile> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| ToraError::io(path, e))?;
    decode(&bytes)
}

pub fn write_array(path: impl AsRef<Path>, array: &ArrayFile) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(array)?;
    fs::write(path, bytes).map_err(|e| ToraError::io(path, e))
}

/// Serializes an array to npy bytes.
pub fn encode(array: &ArrayFile) -> Result<Vec<u8>> {
    array.validate()?;
    let header = header_text(array.dtype(), &array.shape);
    let header_len = u16::try_from(header.len())
        .map_err(|_| validation!("header too long for npy v1.0 ({} bytes)", header.len()))?;

    let width = array.dtype().width();
    let mut out = Vec::with_capacity(FIXED_PREAMBLE + header.len() + array.data.len() * width);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&header_len.to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    match &array.data {
        ArrayData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        ArrayData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
    }
    Ok(out)
}

fn header_text(dtype: Dtype, shape: &[usize]) -> String {
    let shape_text = match shape {
        [single] => format!("({single},)"),
        dims => format!(
            "({})",
            dims.iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(", ")
        ),
    };
    let mut header = format!(
        "{{'descr': '{}', 'fortran_order': False, 'shape': {shape_text}, }}",
        dtype.descr()
    );
    // pad so that magic + version + length + header (incl. newline) is aligned
    let unpadded = FIXED_PREAMBLE + header.len() + 1;
    let padding = (PREAMBLE_ALIGN - unpadded % PREAMBLE_ALIGN) % PREAMBLE_ALIGN;
    header.extend(std::iter::repeat_n(' ', padding));
    header.push('\n');
    header
}

/// Parses npy bytes.
pub fn decode(bytes: &[u8]) -> Result<ArrayFile> {
    if bytes.len() < MAGIC.len() || bytes[..MAGIC.len()] != MAGIC {
        return Err(ToraError::Format("missing npy magic sequence".into()));
    }
    if bytes.len() < FIXED_PREAMBLE {
        return Err(ToraError::Truncated {
            expected: FIXED_PREAMBLE,
            found: bytes.len(),
        });
    }
    let (major, minor) = (bytes[6], bytes[7]);
    if (major, minor) != (1, 0) {
        return Err(ToraError::Format(format!(
            "unsupported npy version {major}.{minor}"
        )));
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let payload_start = FIXED_PREAMBLE + header_len;
    if bytes.len() < payload_start {
        return Err(ToraError::Truncated {
            expected: payload_start,
            found: bytes.len(),
        });
    }
    let header = std::str::from_utf8(&bytes[FIXED_PREAMBLE..payload_start])
        .map_err(|_| ToraError::Format("header is not ASCII".into()))?;
    let dict = HeaderDict::parse(header)?;
    if dict.fortran_order {
        return Err(ToraError::UnsupportedLayout(
            "fortran_order=True (column-major) arrays are not supported".into(),
        ));
    }

    let count: usize = dict.shape.iter().product();
    let width = dict.dtype.width();
    let payload = &bytes[payload_start..];
    let expected = count * width;
    if payload.len() != expected {
        return Err(ToraError::Truncated {
            expected,
            found: payload.len(),
        });
    }
    let data = match dict.dtype {
        Dtype::F32 => ArrayData::F32(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")))
                .collect(),
        ),
        Dtype::F64 => ArrayData::F64(
            payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect(),
        ),
    };
    Ok(ArrayFile {
        shape: dict.shape,
        data,
    })
}

#[derive(Debug)]
struct HeaderDict {
    dtype: Dtype,
    fortran_order: bool,
    shape: Vec<usize>,
}

#[derive(Debug)]
enum Literal {
    Str(String),
    Bool(bool),
    Tuple(Vec<usize>),
}

impl HeaderDict {
    fn parse(text: &str) -> Result<Self> {
        let mut parser = LiteralParser {
            src: text.trim_end().as_bytes(),
            pos: 0,
        };
        let entries = parser.dict()?;

        let mut descr = None;
        let mut fortran_order = None;
        let mut shape = None;
        for (key, value) in entries {
            match (key.as_str(), value) {
                ("descr", Literal::Str(s)) => descr = Some(Dtype::from_descr(&s)?),
                ("fortran_order", Literal::Bool(b)) => fortran_order = Some(b),
                ("shape", Literal::Tuple(t)) => shape = Some(t),
                (k, v) => {
                    return Err(ToraError::Format(format!(
                        "unexpected header entry '{k}': {v:?}"
                    )))
                }
            }
        }
        Ok(Self {
            dtype: descr.ok_or_else(|| ToraError::Format("header lacks 'descr'".into()))?,
            fortran_order: fortran_order
                .ok_or_else(|| ToraError::Format("header lacks 'fortran_order'".into()))?,
            shape: shape.ok_or_else(|| ToraError::Format("header lacks 'shape'".into()))?,
        })
    }
}

/// Minimal parser for the Python dict literal used in npy headers.
struct LiteralParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl LiteralParser<'_> {
    fn err(&self, what: &str) -> ToraError {
        ToraError::Format(format!("bad header near byte {}: {what}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn dict(&mut self) -> Result<Vec<(String, Literal)>> {
        self.expect(b'{')?;
        let mut entries = Vec::new();
        loop {
            if self.peek() == Some(b'}') {
                self.pos += 1;
                break;
            }
            let key = self.string()?;
            self.expect(b':')?;
            let value = self.value()?;
            entries.push((key, value));
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b'}') => {}
                _ => return Err(self.err("expected ',' or '}'")),
            }
        }
        if self.peek().is_some() {
            return Err(self.err("trailing characters after header dict"));
        }
        Ok(entries)
    }

    fn string(&mut self) -> Result<String> {
        let quote = match self.peek() {
            Some(q @ (b'\'' | b'"')) => q,
            _ => return Err(self.err("expected string")),
        };
        self.pos += 1;
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos] != quote {
            self.pos += 1;
        }
        if self.pos >= self.src.len() {
            return Err(self.err("unterminated string"));
        }
        let s = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
        self.pos += 1;
        Ok(s)
    }

    fn value(&mut self) -> Result<Literal> {
        match self.peek() {
            Some(b'\'' | b'"') => Ok(Literal::Str(self.string()?)),
            Some(b'(') => self.tuple(),
            Some(_) => {
                let rest = &self.src[self.pos..];
                if rest.starts_with(b"True") {
                    self.pos += 4;
                    Ok(Literal::Bool(true))
                } else if rest.starts_with(b"False") {
                    self.pos += 5;
                    Ok(Literal::Bool(false))
                } else {
                    Err(self.err("unrecognized value"))
                }
            }
            None => Err(self.err("unexpected end of header")),
        }
    }

    fn tuple(&mut self) -> Result<Literal> {
        self.expect(b'(')?;
        let mut dims = Vec::new();
        loop {
            match self.peek() {
                Some(b')') => {
                    self.pos += 1;
                    break;
                }
                Some(c) if c.is_ascii_digit() => {
                    let start = self.pos;
                    while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                    let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                    dims.push(text.parse().map_err(|_| self.err("dimension overflow"))?);
                    match self.peek() {
                        Some(b',') => self.pos += 1,
                        Some(b')') => {}
                        _ => return Err(self.err("expected ',' or ')' in shape")),
                    }
                }
                _ => return Err(self.err("expected dimension")),
            }
        }
        Ok(Literal::Tuple(dims))
    }
}
