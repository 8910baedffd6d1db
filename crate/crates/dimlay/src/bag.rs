//! Bags: byte buffers addressed through a layout.

use crate::dim::IndexState;
use crate::error::LayoutError;
use crate::layout::Layout;
use crate::scalar::{ScalarType, ScalarValue};

/// Anything that pairs a layout with the bytes it addresses.
pub trait BagLike {
    fn layout(&self) -> &Layout;
    fn bytes(&self) -> &[u8];
    fn bytes_mut(&mut self) -> &mut [u8];

    fn load(&self, state: &IndexState) -> Result<ScalarValue, LayoutError> {
        let off = self.layout().offset_bytes(state)?;
        let ty = self.layout().scalar_type();
        Ok(ScalarValue::read_from(ty, &self.bytes()[off..]))
    }

    fn store(&mut self, state: &IndexState, value: ScalarValue) -> Result<(), LayoutError> {
        let expected = self.layout().scalar_type();
        if value.scalar_type() != expected {
            return Err(LayoutError::ScalarMismatch { expected, got: value.scalar_type() });
        }
        let off = self.layout().offset_bytes(state)?;
        value.write_to(&mut self.bytes_mut()[off..]);
        Ok(())
    }

    fn f64_at(&self, state: &IndexState) -> Result<f64, LayoutError> {
        match self.load(state)? {
            ScalarValue::F64(v) => Ok(v),
            other => Err(LayoutError::ScalarMismatch {
                expected: ScalarType::F64,
                got: other.scalar_type(),
            }),
        }
    }

    fn set_f64(&mut self, state: &IndexState, v: f64) -> Result<(), LayoutError> {
        self.store(state, ScalarValue::F64(v))
    }
}

/// An owning bag: allocates exactly the layout's footprint, zero-filled.
#[derive(Clone, Debug)]
pub struct Bag {
    layout: Layout,
    data: Vec<u8>,
}

impl Bag {
    pub fn allocate(layout: Layout) -> Result<Bag, LayoutError> {
        let size = layout.size_bytes()?;
        Ok(Bag { layout, data: vec![0; size] })
    }

    pub fn from_bytes(layout: Layout, data: Vec<u8>) -> Result<Bag, LayoutError> {
        let needed = layout.size_bytes()?;
        if data.len() < needed {
            return Err(LayoutError::BufferTooSmall { needed, got: data.len() });
        }
        Ok(Bag { layout, data })
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.data
    }
}

impl BagLike for Bag {
    fn layout(&self) -> &Layout {
        &self.layout
    }

    fn bytes(&self) -> &[u8] {
        &self.data
    }

    fn bytes_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }
}

/// A bag over borrowed bytes, e.g. a region of somebody else's allocation.
#[derive(Debug)]
pub struct BagView<'a> {
    layout: Layout,
    data: &'a mut [u8],
}

impl<'a> BagView<'a> {
    pub fn bind(layout: Layout, data: &'a mut [u8]) -> Result<BagView<'a>, LayoutError> {
        let needed = layout.size_bytes()?;
        if data.len() < needed {
            return Err(LayoutError::BufferTooSmall { needed, got: data.len() });
        }
        Ok(BagView { layout, data })
    }
}

impl BagLike for BagView<'_> {
    fn layout(&self) -> &Layout {
        &self.layout
    }

    fn bytes(&self) -> &[u8] {
        self.data
    }

    fn bytes_mut(&mut self) -> &mut [u8] {
        self.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrips_values_through_layout() {
        let layout = Layout::new(ScalarType::I32)
            .vector("i", 2)
            .unwrap()
            .vector("j", 3)
            .unwrap();
        let mut bag = Bag::allocate(layout).unwrap();
        assert_eq!(bag.bytes().len(), 24);
        for j in 0..3 {
            for i in 0..2 {
                let s = IndexState::new().bind("i", i).bind("j", j);
                bag.store(&s, ScalarValue::I32((10 * j + i) as i32)).unwrap();
            }
        }
        let s = IndexState::new().bind("i", 1).bind("j", 2);
        assert_eq!(bag.load(&s).unwrap(), ScalarValue::I32(21));
        // Column-major: the element after (1, 0) in memory is (0, 1).
        let raw = bag.bytes();
        assert_eq!(i32::from_ne_bytes(raw[8..12].try_into().unwrap()), 10);
    }

    #[test]
    fn rejects_wrong_scalar() {
        let layout = Layout::new(ScalarType::I32).vector("i", 2).unwrap();
        let mut bag = Bag::allocate(layout).unwrap();
        let err = bag
            .store(&IndexState::new().bind("i", 0), ScalarValue::F64(1.0))
            .unwrap_err();
        assert_eq!(
            err,
            LayoutError::ScalarMismatch { expected: ScalarType::I32, got: ScalarType::F64 }
        );
    }

    #[test]
    fn view_checks_buffer_size() {
        let layout = Layout::new(ScalarType::F64).vector("i", 4).unwrap();
        let mut buf = vec![0u8; 16];
        let err = BagView::bind(layout, &mut buf).unwrap_err();
        assert_eq!(err, LayoutError::BufferTooSmall { needed: 32, got: 16 });
    }
}
