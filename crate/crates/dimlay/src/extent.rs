//! Dimension lengths and the constraint system that deduces open ones.

use crate::dim::Dim;
use crate::error::LayoutError;

/// A dimension length: either known or still open, to be deduced from
/// multiplicative constraints (or set explicitly) later.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extent {
    Known(usize),
    Open,
}

impl Extent {
    pub fn known(&self) -> Option<usize> {
        match self {
            Extent::Known(n) => Some(*n),
            Extent::Open => None,
        }
    }

    pub fn is_open(&self) -> bool {
        matches!(self, Extent::Open)
    }
}

impl From<usize> for Extent {
    fn from(n: usize) -> Extent {
        Extent::Known(n)
    }
}

pub(crate) type ExtId = usize;

/// Extent slots shared by the dimensions of one layout or traverser, plus
/// the constraints connecting them. Solving runs a fixpoint over the
/// constraint list: any product with exactly one open member is solved,
/// fully-known products are verified, and bounds are checked once known.
#[derive(Clone, Debug, Default)]
pub(crate) struct ExtentTable {
    slots: Vec<Option<usize>>,
    constraints: Vec<Constraint>,
}

#[derive(Clone, Debug)]
pub(crate) enum Constraint {
    /// whole == major * minor
    Product { whole: ExtId, major: ExtId, minor: ExtId, dim: Dim },
    /// a == b (shared dimension between traverser sources)
    Equal { a: ExtId, b: ExtId, dim: Dim },
    /// Once known, the extent must be at least `min`; `fail` names the
    /// operation that imposed the bound.
    AtLeast { ext: ExtId, min: usize, fail: FailKind },
}

/// What to report when an `AtLeast` bound is violated. The extent value is
/// only known at solve time, so the error is assembled there.
#[derive(Clone, Debug)]
pub(crate) enum FailKind {
    FixIndex { dim: Dim, index: usize },
    SliceBounds { dim: Dim, start: usize, len: usize },
}

impl FailKind {
    fn to_error(&self, extent: usize) -> LayoutError {
        match *self {
            FailKind::FixIndex { dim, index } => {
                LayoutError::IndexOutOfRange { dim, index, extent }
            }
            FailKind::SliceBounds { dim, start, len } => {
                LayoutError::SliceOutOfBounds { dim, start, len, extent }
            }
        }
    }
}

impl ExtentTable {
    pub fn fresh(&mut self, value: Option<usize>) -> ExtId {
        self.slots.push(value);
        self.slots.len() - 1
    }

    pub fn fresh_extent(&mut self, extent: Extent) -> ExtId {
        self.fresh(extent.known())
    }

    pub fn get(&self, id: ExtId) -> Option<usize> {
        self.slots[id]
    }

    pub fn get_or(&self, id: ExtId, dim: Dim) -> Result<usize, LayoutError> {
        self.slots[id].ok_or(LayoutError::OpenExtent(dim))
    }

    pub fn set(&mut self, id: ExtId, value: usize, dim: Dim) -> Result<(), LayoutError> {
        match self.slots[id] {
            Some(existing) if existing != value => Err(LayoutError::ExtentConflict {
                dim,
                existing,
                requested: value,
            }),
            _ => {
                self.slots[id] = Some(value);
                Ok(())
            }
        }
    }

    pub fn push_constraint(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    /// Copies another table into this one; returns the id offset to add to
    /// the other table's ids.
    pub fn import(&mut self, other: &ExtentTable) -> usize {
        let shift = self.slots.len();
        self.slots.extend_from_slice(&other.slots);
        for c in &other.constraints {
            self.constraints.push(match c {
                Constraint::Product { whole, major, minor, dim } => Constraint::Product {
                    whole: whole + shift,
                    major: major + shift,
                    minor: minor + shift,
                    dim: *dim,
                },
                Constraint::Equal { a, b, dim } => Constraint::Equal {
                    a: a + shift,
                    b: b + shift,
                    dim: *dim,
                },
                Constraint::AtLeast { ext, min, fail } => Constraint::AtLeast {
                    ext: ext + shift,
                    min: *min,
                    fail: fail.clone(),
                },
            });
        }
        shift
    }

    pub fn solve(&mut self) -> Result<(), LayoutError> {
        loop {
            let mut changed = false;
            for k in 0..self.constraints.len() {
                match self.constraints[k].clone() {
                    Constraint::Product { whole, major, minor, dim } => {
                        let w = self.slots[whole];
                        let a = self.slots[major];
                        let b = self.slots[minor];
                        match (w, a, b) {
                            (Some(w), Some(a), Some(b)) => {
                                if w != a * b {
                                    return Err(LayoutError::ExtentContradiction {
                                        dim,
                                        expected: w,
                                        actual: a * b,
                                    });
                                }
                            }
                            (Some(w), Some(a), None) => {
                                if a == 0 || w % a != 0 {
                                    return Err(LayoutError::NonDivisible {
                                        dim,
                                        whole: w,
                                        divisor: a,
                                    });
                                }
                                self.slots[minor] = Some(w / a);
                                changed = true;
                            }
                            (Some(w), None, Some(b)) => {
                                if b == 0 || w % b != 0 {
                                    return Err(LayoutError::NonDivisible {
                                        dim,
                                        whole: w,
                                        divisor: b,
                                    });
                                }
                                self.slots[major] = Some(w / b);
                                changed = true;
                            }
                            (None, Some(a), Some(b)) => {
                                self.slots[whole] = Some(a * b);
                                changed = true;
                            }
                            _ => {}
                        }
                    }
                    Constraint::Equal { a, b, dim } => match (self.slots[a], self.slots[b]) {
                        (Some(x), Some(y)) => {
                            if x != y {
                                return Err(LayoutError::ExtentConflict {
                                    dim,
                                    existing: x,
                                    requested: y,
                                });
                            }
                        }
                        (Some(x), None) => {
                            self.slots[b] = Some(x);
                            changed = true;
                        }
                        (None, Some(y)) => {
                            self.slots[a] = Some(y);
                            changed = true;
                        }
                        (None, None) => {}
                    },
                    Constraint::AtLeast { ext, min, fail } => {
                        if let Some(v) = self.slots[ext] {
                            if v < min {
                                return Err(fail.to_error(v));
                            }
                        }
                    }
                }
            }
            if !changed {
                return Ok(());
            }
        }
    }
}
