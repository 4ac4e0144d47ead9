//! Legacy VTK unstructured-grid output.
//!
//! Two files per discretisation: the interior (uncut inside cells as
//! hexahedra, cut-cell interior polytopes as centroid-fan tetrahedra) and
//! the boundary pieces as triangles carrying their facet and label.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::report::EmbeddedDiscretisation;
use crate::{Error, Point, Result};

const VTK_TRIANGLE: u8 = 5;
const VTK_TETRA: u8 = 10;
const VTK_HEXAHEDRON: u8 = 12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Ascii,
    Binary,
}

/// Cells in the order they are written, with one scalar per cell.
struct Grid {
    points: Vec<Point>,
    cells: Vec<(u8, Vec<u32>)>,
    data: Vec<(&'static str, Vec<i32>)>,
}

impl Grid {
    fn push(&mut self, kind: u8, pts: &[Point]) {
        let base = self.points.len() as u32;
        self.points.extend_from_slice(pts);
        self.cells.push((kind, (base..base + pts.len() as u32).collect()));
    }

    fn write(&self, title: &str, format: Format, mut out: impl Write) -> std::io::Result<()> {
        let binary = format == Format::Binary;
        writeln!(out, "# vtk DataFile Version 3.0")?;
        writeln!(out, "{title}")?;
        writeln!(out, "{}", if binary { "BINARY" } else { "ASCII" })?;
        writeln!(out, "DATASET UNSTRUCTURED_GRID")?;

        writeln!(out, "POINTS {} double", self.points.len())?;
        if binary {
            for p in &self.points {
                for x in p.iter() {
                    out.write_all(&x.to_be_bytes())?;
                }
            }
            writeln!(out)?;
        } else {
            for p in &self.points {
                writeln!(out, "{} {} {}", p.x, p.y, p.z)?;
            }
        }

        let size: usize = self.cells.iter().map(|c| c.1.len() + 1).sum();
        writeln!(out, "CELLS {} {}", self.cells.len(), size)?;
        if binary {
            for (_, ids) in &self.cells {
                out.write_all(&(ids.len() as i32).to_be_bytes())?;
                for &i in ids {
                    out.write_all(&(i as i32).to_be_bytes())?;
                }
            }
            writeln!(out)?;
        } else {
            for (_, ids) in &self.cells {
                let ids: Vec<String> = ids.iter().map(u32::to_string).collect();
                writeln!(out, "{} {}", ids.len(), ids.join(" "))?;
            }
        }

        writeln!(out, "CELL_TYPES {}", self.cells.len())?;
        for (kind, _) in &self.cells {
            if binary {
                out.write_all(&(*kind as i32).to_be_bytes())?;
            } else {
                writeln!(out, "{kind}")?;
            }
        }
        if binary {
            writeln!(out)?;
        }

        if !self.data.is_empty() {
            writeln!(out, "CELL_DATA {}", self.cells.len())?;
            for (name, values) in &self.data {
                writeln!(out, "SCALARS {name} int 1")?;
                writeln!(out, "LOOKUP_TABLE default")?;
                for v in values {
                    if binary {
                        out.write_all(&v.to_be_bytes())?;
                    } else {
                        writeln!(out, "{v}")?;
                    }
                }
                if binary {
                    writeln!(out)?;
                }
            }
        }
        Ok(())
    }
}

fn interior_grid(disc: &EmbeddedDiscretisation) -> Grid {
    let mut g = Grid {
        points: Vec::new(),
        cells: Vec::new(),
        data: Vec::new(),
    };
    let mut cell_ids = Vec::new();
    let mut cut_flag = Vec::new();
    let dims = disc.mesh.dims();
    for c in disc.interior_cells() {
        let ijk = dims.cell_ijk(c);
        let b = disc.mesh.cell_box(ijk);
        let (lo, hi) = (b.min, b.max);
        // VTK hexahedron order: bottom quad then top quad, counter-clockwise
        let pts = [
            Point::new(lo.x, lo.y, lo.z),
            Point::new(hi.x, lo.y, lo.z),
            Point::new(hi.x, hi.y, lo.z),
            Point::new(lo.x, hi.y, lo.z),
            Point::new(lo.x, lo.y, hi.z),
            Point::new(hi.x, lo.y, hi.z),
            Point::new(hi.x, hi.y, hi.z),
            Point::new(lo.x, hi.y, hi.z),
        ];
        g.push(VTK_HEXAHEDRON, &pts);
        cell_ids.push(c as i32);
        cut_flag.push(0);
    }
    for cut in &disc.cuts {
        for p in &cut.interior {
            for t in p.tetrahedra() {
                // positive orientation for VTK
                let [a, b, c, d] = t;
                let t = if (b - a).cross(&(c - a)).dot(&(d - a)) < 0.0 {
                    [a, c, b, d]
                } else {
                    t
                };
                g.push(VTK_TETRA, &t);
                cell_ids.push(cut.cell as i32);
                cut_flag.push(1);
            }
        }
    }
    g.data = vec![("cell", cell_ids), ("cut", cut_flag)];
    g
}

fn boundary_grid(disc: &EmbeddedDiscretisation) -> Grid {
    let mut g = Grid {
        points: Vec::new(),
        cells: Vec::new(),
        data: Vec::new(),
    };
    let mut facet = Vec::new();
    let mut label = Vec::new();
    for piece in disc.boundary_pieces() {
        let p = &piece.polygon;
        for k in 1..p.len().saturating_sub(1) {
            g.push(VTK_TRIANGLE, &[p[0], p[k], p[k + 1]]);
            facet.push(piece.facet as i32);
            label.push(piece.label as i32);
        }
    }
    g.data = vec![("facet", facet), ("label", label)];
    g
}

pub fn write_interior(disc: &EmbeddedDiscretisation, format: Format, out: impl Write) -> std::io::Result<()> {
    interior_grid(disc).write("interior cells and cut-cell polytopes", format, out)
}

pub fn write_boundary(disc: &EmbeddedDiscretisation, format: Format, out: impl Write) -> std::io::Result<()> {
    boundary_grid(disc).write("boundary pieces", format, out)
}

/// Writes `interior.vtk` and `boundary.vtk` into `dir`, creating it if
/// needed.
pub fn export_vtk(disc: &EmbeddedDiscretisation, dir: &Path, format: Format) -> Result<[PathBuf; 2]> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let interior = dir.join("interior.vtk");
    let boundary = dir.join("boundary.vtk");
    let write = |path: &Path, f: &dyn Fn(&mut BufWriter<File>) -> std::io::Result<()>| {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
    };
    write(&interior, &|w| write_interior(disc, format, w))?;
    write(&boundary, &|w| write_boundary(disc, format, w))?;
    Ok([interior, boundary])
}
