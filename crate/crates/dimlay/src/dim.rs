//! Dimension names and index assignments.

use std::fmt;

use crate::error::LayoutError;

/// A short symbolic dimension name such as `i`, `j`, or `blk`.
///
/// Names are 1 to 8 bytes of UTF-8 stored inline, so `Dim` is `Copy` and
/// cheap to compare and hash.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dim([u8; 8]);

impl Dim {
    /// Builds a dimension name, panicking on invalid input.
    /// Use [`Dim::parse`] when the name comes from untrusted text.
    pub fn new(name: &str) -> Dim {
        Dim::parse(name).expect("invalid dimension name")
    }

    pub fn parse(name: &str) -> Result<Dim, LayoutError> {
        if name.is_empty() || name.len() > 8 || name.bytes().any(|b| b == 0) {
            return Err(LayoutError::BadDimName(name.to_string()));
        }
        let mut bytes = [0u8; 8];
        bytes[..name.len()].copy_from_slice(name.as_bytes());
        Ok(Dim(bytes))
    }

    pub fn as_str(&self) -> &str {
        let len = self.0.iter().position(|&b| b == 0).unwrap_or(8);
        std::str::from_utf8(&self.0[..len]).expect("dim names are valid UTF-8")
    }
}

impl From<char> for Dim {
    fn from(c: char) -> Dim {
        let mut buf = [0u8; 4];
        Dim::new(c.encode_utf8(&mut buf))
    }
}

impl From<&str> for Dim {
    fn from(s: &str) -> Dim {
        Dim::new(s)
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "'{}'", self.as_str())
    }
}

/// A partial assignment of indices to dimensions, kept sorted by name.
///
/// States may bind more dimensions than a consumer needs; lookups that only
/// care about a subset simply ignore the rest.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IndexState {
    entries: Vec<(Dim, usize)>,
}

impl IndexState {
    pub fn new() -> IndexState {
        IndexState::default()
    }

    pub fn from_pairs<D: Into<Dim>>(pairs: impl IntoIterator<Item = (D, usize)>) -> IndexState {
        let mut s = IndexState::new();
        for (d, v) in pairs {
            s.set(d, v);
        }
        s
    }

    /// Builder-style insert.
    pub fn bind(mut self, dim: impl Into<Dim>, index: usize) -> IndexState {
        self.set(dim, index);
        self
    }

    /// Inserts or replaces a binding.
    pub fn set(&mut self, dim: impl Into<Dim>, index: usize) {
        let dim = dim.into();
        match self.entries.binary_search_by_key(&dim, |e| e.0) {
            Ok(pos) => self.entries[pos].1 = index,
            Err(pos) => self.entries.insert(pos, (dim, index)),
        }
    }

    pub fn get(&self, dim: impl Into<Dim>) -> Option<usize> {
        let dim = dim.into();
        self.entries
            .binary_search_by_key(&dim, |e| e.0)
            .ok()
            .map(|pos| self.entries[pos].1)
    }

    pub fn contains(&self, dim: impl Into<Dim>) -> bool {
        self.get(dim).is_some()
    }

    pub fn remove(&mut self, dim: impl Into<Dim>) -> Option<usize> {
        let dim = dim.into();
        match self.entries.binary_search_by_key(&dim, |e| e.0) {
            Ok(pos) => Some(self.entries.remove(pos).1),
            Err(_) => None,
        }
    }

    /// Returns a copy with every binding of `other` added (overriding twins).
    pub fn merged(&self, other: &IndexState) -> IndexState {
        let mut s = self.clone();
        for (d, v) in other.iter() {
            s.set(d, v);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Dim, usize)> + '_ {
        self.entries.iter().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dim_roundtrip() {
        assert_eq!(Dim::new("i").as_str(), "i");
        assert_eq!(Dim::from('ξ').as_str(), "ξ");
        assert_eq!(Dim::new("blk0").to_string(), "blk0");
        assert!(Dim::parse("").is_err());
        assert!(Dim::parse("overlong!!").is_err());
    }

    #[test]
    fn state_binds_and_overrides() {
        let mut s = IndexState::from_pairs([('j', 2), ('i', 1)]);
        assert_eq!(s.get('i'), Some(1));
        assert_eq!(s.get('k'), None);
        s.set('i', 7);
        assert_eq!(s.get('i'), Some(7));
        assert_eq!(s.len(), 2);
        let t = s.merged(&IndexState::from_pairs([('k', 0), ('i', 3)]));
        assert_eq!(t.get('i'), Some(3));
        assert_eq!(t.get('k'), Some(0));
    }
}
