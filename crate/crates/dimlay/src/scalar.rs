//! Element types and values.

use std::fmt;

/// The element type at the leaf of a layout.
///
/// The supported set is fixed here; adding a variant (with its size and the
/// names below) is the single extension point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScalarType {
    I32,
    I64,
    F32,
    F64,
}

impl ScalarType {
    pub fn size_bytes(&self) -> usize {
        match self {
            ScalarType::I32 | ScalarType::F32 => 4,
            ScalarType::I64 | ScalarType::F64 => 8,
        }
    }

    /// Leaf name used when printing signatures.
    pub fn leaf_name(&self) -> &'static str {
        match self {
            ScalarType::I32 => "Int",
            ScalarType::I64 => "Long",
            ScalarType::F32 => "Float",
            ScalarType::F64 => "Double",
        }
    }

    /// Name used when rendering datatype construction calls.
    pub fn mpi_name(&self) -> &'static str {
        match self {
            ScalarType::I32 => "MPI_INT",
            ScalarType::I64 => "MPI_LONG",
            ScalarType::F32 => "MPI_FLOAT",
            ScalarType::F64 => "MPI_DOUBLE",
        }
    }

    pub fn all() -> [ScalarType; 4] {
        [ScalarType::I32, ScalarType::I64, ScalarType::F32, ScalarType::F64]
    }
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.leaf_name())
    }
}

/// A single element moved in or out of a bag. Stored in native byte order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScalarValue {
    I32(i32),
    I64(i64),
    F32(f32),
    F64(f64),
}

impl ScalarValue {
    pub fn scalar_type(&self) -> ScalarType {
        match self {
            ScalarValue::I32(_) => ScalarType::I32,
            ScalarValue::I64(_) => ScalarType::I64,
            ScalarValue::F32(_) => ScalarType::F32,
            ScalarValue::F64(_) => ScalarType::F64,
        }
    }

    pub fn write_to(&self, buf: &mut [u8]) {
        match self {
            ScalarValue::I32(v) => buf[..4].copy_from_slice(&v.to_ne_bytes()),
            ScalarValue::I64(v) => buf[..8].copy_from_slice(&v.to_ne_bytes()),
            ScalarValue::F32(v) => buf[..4].copy_from_slice(&v.to_ne_bytes()),
            ScalarValue::F64(v) => buf[..8].copy_from_slice(&v.to_ne_bytes()),
        }
    }

    pub fn read_from(ty: ScalarType, buf: &[u8]) -> ScalarValue {
        match ty {
            ScalarType::I32 => ScalarValue::I32(i32::from_ne_bytes(buf[..4].try_into().unwrap())),
            ScalarType::I64 => ScalarValue::I64(i64::from_ne_bytes(buf[..8].try_into().unwrap())),
            ScalarType::F32 => ScalarValue::F32(f32::from_ne_bytes(buf[..4].try_into().unwrap())),
            ScalarType::F64 => ScalarValue::F64(f64::from_ne_bytes(buf[..8].try_into().unwrap())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_names() {
        assert_eq!(ScalarType::I32.size_bytes(), 4);
        assert_eq!(ScalarType::F64.size_bytes(), 8);
        assert_eq!(ScalarType::I32.leaf_name(), "Int");
        assert_eq!(ScalarType::F64.mpi_name(), "MPI_DOUBLE");
    }

    #[test]
    fn value_roundtrip() {
        let mut buf = [0u8; 8];
        ScalarValue::F64(1.5).write_to(&mut buf);
        assert_eq!(ScalarValue::read_from(ScalarType::F64, &buf), ScalarValue::F64(1.5));
        ScalarValue::I32(-7).write_to(&mut buf);
        assert_eq!(ScalarValue::read_from(ScalarType::I32, &buf), ScalarValue::I32(-7));
    }
}
