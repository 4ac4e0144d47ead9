//! STL reader and writers (binary and ASCII).
//!
//! Binary layout: 80-byte header, little-endian `u32` facet count, then per
//! facet twelve little-endian `f32` (normal, three corners) and a `u16`
//! attribute, 50 bytes in total. The attribute word becomes the facet label.
//! In ASCII files the label is the index of the enclosing `solid` block.

use std::io::Write;
use std::path::Path;

use super::{StlError, SurfaceMesh, WeldMode};
use crate::error::Error;
use crate::{Point, Vector};

const HEADER_LEN: usize = 80;
const FACET_LEN: usize = 50;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ParseOptions {
    pub weld: WeldMode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StlFormat {
    Ascii,
    Binary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParseReport {
    pub format: StlFormat,
    pub facets_read: usize,
    pub degenerate_dropped: usize,
    /// Facets whose stored normal pointed more than 90 degrees away from
    /// the winding normal. The stored value is ignored either way.
    pub normal_disagreements: usize,
}

struct RawFacet {
    normal: [f32; 3],
    corners: [Point; 3],
    label: u16,
}

pub fn parse_stl(bytes: &[u8], options: ParseOptions) -> Result<(SurfaceMesh, ParseReport), StlError> {
    let (format, raw) = if let Some(count) = declared_binary_count(bytes) {
        (StlFormat::Binary, parse_binary(bytes, count)?)
    } else if looks_ascii(bytes) {
        (StlFormat::Ascii, parse_ascii(bytes)?)
    } else if bytes.len() >= HEADER_LEN + 4 {
        let declared = u32::from_le_bytes(bytes[80..84].try_into().unwrap());
        let expected = HEADER_LEN as u64 + 4 + FACET_LEN as u64 * declared as u64;
        let actual = (bytes.len() - HEADER_LEN - 4) as u64 / FACET_LEN as u64;
        if (bytes.len() as u64) < expected {
            return Err(StlError::Truncated(format!(
                "{} bytes, header declares {declared} facets ({expected} bytes)",
                bytes.len()
            )));
        }
        return Err(StlError::CountMismatch { declared, actual });
    } else {
        return Err(StlError::Truncated(format!(
            "{} bytes is shorter than a binary header",
            bytes.len()
        )));
    };

    if raw.is_empty() {
        return Err(StlError::NoFacets);
    }
    let triangles: Vec<[Point; 3]> = raw.iter().map(|f| f.corners).collect();
    let labels: Vec<u16> = raw.iter().map(|f| f.label).collect();
    let normal_disagreements = raw
        .iter()
        .filter(|f| {
            let stored = Vector::new(f.normal[0] as f64, f.normal[1] as f64, f.normal[2] as f64);
            let [a, b, c] = f.corners;
            let computed = (b - a).cross(&(c - a));
            stored.norm() > 0.0 && stored.dot(&computed) < 0.0
        })
        .count();
    let (mesh, build) = SurfaceMesh::from_soup(&triangles, &labels, options.weld)?;
    Ok((
        mesh,
        ParseReport {
            format,
            facets_read: raw.len(),
            degenerate_dropped: build.degenerate_dropped,
            normal_disagreements,
        },
    ))
}

pub fn read_stl(path: impl AsRef<Path>, options: ParseOptions) -> Result<(SurfaceMesh, ParseReport), Error> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_stl(&bytes, options)?)
}

fn declared_binary_count(bytes: &[u8]) -> Option<u32> {
    if bytes.len() < HEADER_LEN + 4 {
        return None;
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap());
    let expected = HEADER_LEN as u64 + 4 + FACET_LEN as u64 * count as u64;
    (bytes.len() as u64 == expected).then_some(count)
}

fn looks_ascii(bytes: &[u8]) -> bool {
    let start = bytes
        .iter()
        .position(|b| !b.is_ascii_whitespace())
        .unwrap_or(bytes.len());
    bytes[start..].starts_with(b"solid")
}

fn parse_binary(bytes: &[u8], count: u32) -> Result<Vec<RawFacet>, StlError> {
    let mut out = Vec::with_capacity(count as usize);
    let body = &bytes[HEADER_LEN + 4..];
    for rec in body.chunks_exact(FACET_LEN) {
        let f = |i: usize| f32::from_le_bytes(rec[4 * i..4 * i + 4].try_into().unwrap());
        let p = |i: usize| Point::new(f(i) as f64, f(i + 1) as f64, f(i + 2) as f64);
        out.push(RawFacet {
            normal: [f(0), f(1), f(2)],
            corners: [p(3), p(6), p(9)],
            label: u16::from_le_bytes([rec[48], rec[49]]),
        });
    }
    Ok(out)
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .flat_map(|(n, line)| line.split_whitespace().map(move |t| (n + 1, t)))
            .collect();
        Tokens { items, pos: 0 }
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.items.get(self.pos).copied()
    }

    fn line(&self) -> usize {
        self.items.get(self.pos).or(self.items.last()).map(|t| t.0).unwrap_or(0)
    }

    fn next(&mut self) -> Result<(usize, &'a str), StlError> {
        let t = self
            .peek()
            .ok_or_else(|| StlError::Truncated(format!("unexpected end of ascii input after line {}", self.line())))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, word: &str) -> Result<(), StlError> {
        let (line, t) = self.next()?;
        if t.eq_ignore_ascii_case(word) {
            Ok(())
        } else {
            Err(StlError::Syntax {
                line,
                message: format!("expected `{word}`, found `{t}`"),
            })
        }
    }

    fn number(&mut self) -> Result<f32, StlError> {
        let (line, t) = self.next()?;
        t.parse::<f32>().map_err(|_| StlError::Syntax {
            line,
            message: format!("expected a number, found `{t}`"),
        })
    }

    fn skip_line(&mut self, line: usize) {
        while matches!(self.peek(), Some((l, _)) if l == line) {
            self.pos += 1;
        }
    }
}

fn parse_ascii(bytes: &[u8]) -> Result<Vec<RawFacet>, StlError> {
    let text = std::str::from_utf8(bytes).map_err(|e| StlError::Syntax {
        line: 0,
        message: format!("not utf-8: {e}"),
    })?;
    let mut tokens = Tokens::new(text);
    let mut out = Vec::new();
    let mut solid: u16 = 0;
    while let Some((line, _)) = tokens.peek() {
        tokens.expect("solid")?;
        tokens.skip_line(line); // solid name
        loop {
            let (line, word) = tokens.next()?;
            if word.eq_ignore_ascii_case("endsolid") {
                tokens.skip_line(line);
                break;
            }
            if !word.eq_ignore_ascii_case("facet") {
                return Err(StlError::Syntax {
                    line,
                    message: format!("expected `facet` or `endsolid`, found `{word}`"),
                });
            }
            tokens.expect("normal")?;
            let normal = [tokens.number()?, tokens.number()?, tokens.number()?];
            tokens.expect("outer")?;
            tokens.expect("loop")?;
            let mut corners = [Point::origin(); 3];
            for c in &mut corners {
                tokens.expect("vertex")?;
                let (x, y, z) = (tokens.number()?, tokens.number()?, tokens.number()?);
                *c = Point::new(x as f64, y as f64, z as f64);
            }
            tokens.expect("endloop")?;
            tokens.expect("endfacet")?;
            out.push(RawFacet {
                normal,
                corners,
                label: solid,
            });
        }
        solid = solid.saturating_add(1);
    }
    Ok(out)
}

fn f32s(p: &Point) -> [f32; 3] {
    [p.x as f32, p.y as f32, p.z as f32]
}

pub fn write_stl_binary(mesh: &SurfaceMesh, mut out: impl Write) -> std::io::Result<()> {
    let mut header = [0u8; HEADER_LEN];
    let tag = b"binary STL written by cutcell";
    header[..tag.len()].copy_from_slice(tag);
    out.write_all(&header)?;
    out.write_all(&(mesh.facet_count() as u32).to_le_bytes())?;
    for f in 0..mesh.facet_count() {
        let n = mesh.normals()[f];
        let mut rec = Vec::with_capacity(FACET_LEN);
        for v in [n.x as f32, n.y as f32, n.z as f32] {
            rec.extend_from_slice(&v.to_le_bytes());
        }
        for p in mesh.triangle(f) {
            for v in f32s(&p) {
                rec.extend_from_slice(&v.to_le_bytes());
            }
        }
        rec.extend_from_slice(&mesh.labels()[f].to_le_bytes());
        out.write_all(&rec)?;
    }
    Ok(())
}

/// ASCII writer; a new `solid` block starts whenever the facet label
/// changes, so contiguous label runs survive a round trip.
pub fn write_stl_ascii(mesh: &SurfaceMesh, mut out: impl Write) -> std::io::Result<()> {
    let mut current: Option<u16> = None;
    for f in 0..mesh.facet_count() {
        let label = mesh.labels()[f];
        if current != Some(label) {
            if current.is_some() {
                writeln!(out, "endsolid")?;
            }
            writeln!(out, "solid region{label}")?;
            current = Some(label);
        }
        let n = mesh.normals()[f];
        writeln!(out, "  facet normal {:e} {:e} {:e}", n.x as f32, n.y as f32, n.z as f32)?;
        writeln!(out, "    outer loop")?;
        for p in mesh.triangle(f) {
            let [x, y, z] = f32s(&p);
            writeln!(out, "      vertex {x:e} {y:e} {z:e}")?;
        }
        writeln!(out, "    endloop")?;
        writeln!(out, "  endfacet")?;
    }
    writeln!(out, "endsolid")?;
    Ok(())
}
