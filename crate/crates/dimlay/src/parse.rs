//! Textual layout construction for the CLI and test fixtures:
//! `scalar:f64 ^ vector:i:64 ^ into_blocks:i:I:8 ^ hoist:j`.
//! Whitespace is insignificant; open extents are written `?`.

use crate::dim::{Dim, IndexState};
use crate::error::LayoutError;
use crate::extent::Extent;
use crate::layout::{Layout, Proto};
use crate::scalar::ScalarType;

fn bad(msg: String) -> LayoutError {
    LayoutError::Parse(msg)
}

fn dim(tok: &str) -> Result<Dim, LayoutError> {
    Dim::parse(tok)
}

fn extent(tok: &str) -> Result<Extent, LayoutError> {
    if tok == "?" {
        return Ok(Extent::Open);
    }
    tok.parse::<usize>()
        .map(Extent::Known)
        .map_err(|_| bad(format!("expected an extent or '?', got {tok:?}")))
}

fn number(tok: &str) -> Result<usize, LayoutError> {
    tok.parse::<usize>()
        .map_err(|_| bad(format!("expected a number, got {tok:?}")))
}

fn scalar(tok: &str) -> Result<ScalarType, LayoutError> {
    match tok {
        "i32" => Ok(ScalarType::I32),
        "i64" => Ok(ScalarType::I64),
        "f32" => Ok(ScalarType::F32),
        "f64" => Ok(ScalarType::F64),
        other => Err(bad(format!("unknown scalar type {other:?}"))),
    }
}

fn proto(tok: &str) -> Result<Proto, LayoutError> {
    let parts: Vec<&str> = tok.split(':').collect();
    match (parts[0], parts.len()) {
        ("vector", 3) => Ok(Proto::vector(dim(parts[1])?, extent(parts[2])?)),
        ("into_blocks", 4) => Ok(Proto::into_blocks(dim(parts[1])?, dim(parts[2])?, extent(parts[3])?)),
        ("into_blocks", 5) => Ok(Proto::into_blocks_named(
            dim(parts[1])?,
            dim(parts[2])?,
            dim(parts[3])?,
            extent(parts[4])?,
        )),
        ("merge_blocks", 4) => Ok(Proto::merge_blocks(dim(parts[1])?, dim(parts[2])?, dim(parts[3])?)),
        ("hoist", 2) => Ok(Proto::hoist(dim(parts[1])?)),
        ("fix", 3) => Ok(Proto::fix(IndexState::new().bind(dim(parts[1])?, number(parts[2])?))),
        ("set_length", 3) => Ok(Proto::set_length(dim(parts[1])?, number(parts[2])?)),
        ("slice", 4) => Ok(Proto::slice(dim(parts[1])?, number(parts[2])?, number(parts[3])?)),
        ("bcast", 3) => Ok(Proto::bcast(dim(parts[1])?, extent(parts[2])?)),
        _ => Err(bad(format!("unknown token {tok:?}"))),
    }
}

/// Parses a `^`-separated transform list (no scalar head).
pub fn parse_protos(src: &str) -> Result<Vec<Proto>, LayoutError> {
    let compact: String = src.chars().filter(|c| !c.is_whitespace()).collect();
    compact.split('^').map(proto).collect()
}

/// Parses a full layout: a `scalar:<type>` head followed by transforms.
pub fn parse_layout(src: &str) -> Result<Layout, LayoutError> {
    let compact: String = src.chars().filter(|c| !c.is_whitespace()).collect();
    let mut tokens = compact.split('^');
    let head = tokens.next().unwrap_or("");
    let ty = match head.strip_prefix("scalar:") {
        Some(t) => scalar(t)?,
        None => return Err(bad(format!("layout must start with scalar:<type>, got {head:?}"))),
    };
    let mut layout = Layout::new(ty);
    for tok in tokens {
        layout = layout.apply(&proto(tok)?)?;
    }
    Ok(layout)
}
