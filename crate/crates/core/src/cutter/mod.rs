//! Per-cell intersection of the surface with background cells.
//!
//! For one cell the touching facets are clipped to the closed cell box.
//! The resulting patch is split into convex sub-patches by planes through
//! its reflex edges, each paired with the convex piece of the cell that
//! contains it, and every piece is then clipped by the planes of its
//! sub-patch. The removed parts are kept so interior and exterior volumes
//! partition the cell.

mod decompose;

pub use decompose::{clip_piece, convex_decompose, ConvexPart, PartKind, PatchFacet};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::background::{candidate_cells, BackgroundMesh, CellBlock};
use crate::classify::Location;
use crate::exec::ExecPolicy;
use crate::geom::{clip_polygon, point_polygon_distance, polygon_area, FaceTag, Plane, Polytope};
use crate::surface::{bounding_box, SurfaceMesh, SurfaceTopology};
use crate::Point;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CutError {
    #[error("decomposition stall in cell {cell} (depth limit {depth})")]
    DecompositionStall { cell: usize, depth: usize },
    #[error("inconsistent seed for face {side} of cell {cell}")]
    InconsistentSeed { cell: usize, side: usize },
    #[error("inconsistent seed for node {node} of cell {cell}")]
    InconsistentNodeSeed { cell: usize, node: usize },
    #[error("surface box {surface} escapes the background domain {domain}")]
    SurfaceOutside { surface: String, domain: String },
}

/// Tolerances and limits of the cutter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutParams {
    /// Distance tolerance relative to the cell diagonal.
    pub tol_rel: f64,
    /// Dihedral angle below which an edge counts as flat, in radians.
    pub tau_reflex: f64,
    pub max_depth: usize,
}

impl Default for CutParams {
    fn default() -> Self {
        CutParams {
            tol_rel: 1e-9,
            tau_reflex: 1e-6,
            max_depth: 32,
        }
    }
}

impl CutParams {
    pub fn tol(&self, mesh: &BackgroundMesh) -> f64 {
        self.tol_rel * mesh.cell_diagonal()
    }
}

/// Surface with the derived data every cell needs: edge table, reflex
/// flags and facet planes (outward normal on the positive side).
#[derive(Clone, Debug)]
pub struct PreparedSurface {
    mesh: SurfaceMesh,
    topo: SurfaceTopology,
    reflex: Vec<bool>,
    planes: Vec<Plane>,
}

impl PreparedSurface {
    pub fn new(mesh: &SurfaceMesh, tau_reflex: f64) -> Self {
        let topo = SurfaceTopology::build(mesh);
        let reflex = crate::geom::reflex_edges(mesh, &topo, tau_reflex);
        let planes = (0..mesh.facet_count())
            .map(|f| {
                Plane::through(&mesh.triangle(f)[0], mesh.normals()[f])
                    .expect("non-degenerate facets have unit normals")
            })
            .collect();
        PreparedSurface {
            mesh: mesh.clone(),
            topo,
            reflex,
            planes,
        }
    }

    pub fn mesh(&self) -> &SurfaceMesh {
        &self.mesh
    }

    pub fn topology(&self) -> &SurfaceTopology {
        &self.topo
    }

    pub fn plane(&self, facet: u32) -> &Plane {
        &self.planes[facet as usize]
    }

    pub fn is_reflex(&self, edge: usize) -> bool {
        self.reflex[edge]
    }
}

/// A piece of surface inside a cut cell.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPiece {
    pub facet: u32,
    pub label: u16,
    pub polygon: Vec<Point>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellCut {
    pub cell: usize,
    pub ijk: [usize; 3],
    pub interior: Vec<Polytope>,
    pub exterior: Vec<Polytope>,
    pub boundary: Vec<BoundaryPiece>,
    /// Sides ordered -x, +x, -y, +y, -z, +z.
    pub face_seeds: [Location; 6],
    /// Corner `c` sits at offset `(c & 1, c >> 1 & 1, c >> 2 & 1)`.
    pub node_seeds: [Location; 8],
    /// Half-space clips performed for this cell.
    pub clip_ops: usize,
}

impl CellCut {
    pub fn interior_volume(&self) -> f64 {
        self.interior.iter().map(Polytope::volume).sum()
    }

    pub fn exterior_volume(&self) -> f64 {
        self.exterior.iter().map(Polytope::volume).sum()
    }

    pub fn boundary_area(&self) -> f64 {
        self.boundary.iter().map(|b| polygon_area(&b.polygon)).sum()
    }
}

fn box_planes(b: &crate::surface::Aabb) -> [Plane; 6] {
    std::array::from_fn(|side| {
        let a = side / 2;
        if side % 2 == 0 {
            Plane::axis(a, b.min[a], false)
        } else {
            Plane::axis(a, b.max[a], true)
        }
    })
}

/// Threshold below which clipped polygons are treated as contact only.
pub(crate) fn area_eps(tol: f64, diag: f64) -> f64 {
    tol * diag
}

/// Intersects cell `ijk` with the given facets. `Ok(None)` when no facet
/// meets the open cell.
pub fn intersect_cell(
    mesh: &BackgroundMesh,
    surface: &PreparedSurface,
    ijk: [usize; 3],
    facets: &[u32],
    params: &CutParams,
) -> Result<Option<CellCut>, CutError> {
    let cell = mesh.dims().cell_index(ijk);
    let tol = params.tol(mesh);
    let b = mesh.cell_box(ijk);
    let planes = box_planes(&b);
    let eps = area_eps(tol, mesh.cell_diagonal());

    let mut facets = facets.to_vec();
    facets.sort_unstable();
    facets.dedup();
    let mut patch = Vec::new();
    for &f in &facets {
        let mut poly = surface.mesh.triangle(f as usize).to_vec();
        for p in &planes {
            poly = clip_polygon(&poly, p, tol);
            if poly.is_empty() {
                break;
            }
        }
        if poly.len() < 3 || polygon_area(&poly) <= eps {
            continue;
        }
        let n = surface.mesh.normals()[f as usize];
        let on_face = (0..6).find(|&side| poly.iter().all(|p| planes[side].signed_distance(p).abs() <= tol));
        if let Some(side) = on_face {
            if n.dot(&planes[side].normal()) <= 0.0 {
                continue;
            }
        }
        patch.push(PatchFacet {
            facet: f,
            polygon: poly,
        });
    }
    if patch.is_empty() {
        return Ok(None);
    }

    let boundary: Vec<BoundaryPiece> = patch
        .iter()
        .map(|p| BoundaryPiece {
            facet: p.facet,
            label: surface.mesh.labels()[p.facet as usize],
            polygon: p.polygon.clone(),
        })
        .collect();

    let cube = Polytope::cuboid(b.min, b.max);
    let parts = convex_decompose(&cube, patch, surface, tol, eps, params.max_depth)
        .map_err(|depth| CutError::DecompositionStall { cell, depth })?;
    let mut interior = Vec::new();
    let mut exterior = Vec::new();
    let mut clip_ops = 0;
    for part in parts {
        let (inn, out, ops) = clip_piece(&part, surface, tol);
        clip_ops += ops;
        if !inn.is_empty() {
            interior.push(inn);
        }
        exterior.extend(out);
    }

    let mut cut = CellCut {
        cell,
        ijk,
        interior,
        exterior,
        boundary,
        face_seeds: [Location::Undefined; 6],
        node_seeds: [Location::Undefined; 8],
        clip_ops,
    };
    cut.face_seeds = face_seeds(&cut, &b, &planes, tol)?;
    cut.node_seeds = node_seeds(&cut, &b, tol)?;
    Ok(Some(cut))
}

fn tagged_area(polys: &[Polytope], side: usize) -> f64 {
    polys
        .iter()
        .flat_map(|p| {
            p.faces()
                .iter()
                .enumerate()
                .filter(|(_, f)| f.tag == FaceTag::CellFace(side as u8))
                .map(move |(i, _)| p.face_area(i))
        })
        .sum()
}

fn face_seeds(
    cut: &CellCut,
    b: &crate::surface::Aabb,
    planes: &[Plane; 6],
    tol: f64,
) -> Result<[Location; 6], CutError> {
    let e = b.extent();
    let mut seeds = [Location::Undefined; 6];
    for (side, seed) in seeds.iter_mut().enumerate() {
        let touched = cut
            .boundary
            .iter()
            .flat_map(|p| p.polygon.iter())
            .any(|p| planes[side].signed_distance(p).abs() <= tol);
        if touched {
            *seed = Location::Cut;
            continue;
        }
        let a = side / 2;
        let area = e[(a + 1) % 3] * e[(a + 2) % 3];
        let inn = tagged_area(&cut.interior, side);
        let out = tagged_area(&cut.exterior, side);
        *seed = if (inn - area).abs() <= 1e-6 * area && out <= 1e-6 * area {
            Location::In
        } else if (out - area).abs() <= 1e-6 * area && inn <= 1e-6 * area {
            Location::Out
        } else {
            return Err(CutError::InconsistentSeed { cell: cut.cell, side });
        };
    }
    Ok(seeds)
}

fn node_seeds(cut: &CellCut, b: &crate::surface::Aabb, tol: f64) -> Result<[Location; 8], CutError> {
    let mut seeds = [Location::Undefined; 8];
    for (c, seed) in seeds.iter_mut().enumerate() {
        let corner = Point::from(std::array::from_fn::<f64, 3, _>(|a| {
            if c >> a & 1 == 0 {
                b.min[a]
            } else {
                b.max[a]
            }
        }));
        if cut
            .boundary
            .iter()
            .any(|p| point_polygon_distance(&corner, &p.polygon) <= tol)
        {
            *seed = Location::Cut;
            continue;
        }
        let has = |polys: &[Polytope]| {
            polys
                .iter()
                .any(|p| p.vertices().iter().any(|v| (v - corner).norm() <= tol))
        };
        *seed = match (has(&cut.interior), has(&cut.exterior)) {
            (true, false) => Location::In,
            (false, true) => Location::Out,
            _ => {
                return Err(CutError::InconsistentNodeSeed {
                    cell: cut.cell,
                    node: c,
                })
            }
        };
    }
    Ok(seeds)
}

/// Facets overlapping each cell of `block`, keyed by global cell index.
/// Only `facets` are considered.
pub fn bin_facets(
    mesh: &BackgroundMesh,
    surface: &SurfaceMesh,
    facets: impl IntoIterator<Item = u32>,
    block: &CellBlock,
    tol: f64,
) -> BTreeMap<usize, Vec<u32>> {
    let mut bins: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    for f in facets {
        for c in candidate_cells(mesh, &surface.triangle(f as usize), tol) {
            if block.contains(mesh.dims().cell_ijk(c)) {
                bins.entry(c).or_default().push(f);
            }
        }
    }
    bins
}

/// Cuts every listed cell; output is in the order of `cells`, skipping
/// cells that turn out not to be cut.
pub fn cut_cells(
    mesh: &BackgroundMesh,
    surface: &PreparedSurface,
    cells: &[(usize, Vec<u32>)],
    params: &CutParams,
    policy: ExecPolicy,
) -> Result<Vec<CellCut>, CutError> {
    let results = policy.map(cells, |(c, facets)| {
        intersect_cell(mesh, surface, mesh.dims().cell_ijk(*c), facets, params)
    });
    let mut out = Vec::new();
    for r in results {
        if let Some(cut) = r? {
            out.push(cut);
        }
    }
    Ok(out)
}

pub(crate) fn check_inside_domain(mesh: &BackgroundMesh, surface: &SurfaceMesh, tol: f64) -> Result<(), CutError> {
    let sb = bounding_box(surface).map_err(|_| CutError::SurfaceOutside {
        surface: "empty".into(),
        domain: format!("{:?}", mesh.domain()),
    })?;
    if !mesh.domain().inflated(tol).contains_box(&sb) {
        return Err(CutError::SurfaceOutside {
            surface: format!("[{:?}, {:?}]", sb.min.coords.as_slice(), sb.max.coords.as_slice()),
            domain: format!(
                "[{:?}, {:?}]",
                mesh.domain().min.coords.as_slice(),
                mesh.domain().max.coords.as_slice()
            ),
        });
    }
    Ok(())
}

/// All cut cells of the mesh, ascending by cell index.
pub fn cut_serial(
    mesh: &BackgroundMesh,
    surface: &PreparedSurface,
    params: &CutParams,
    policy: ExecPolicy,
) -> Result<Vec<CellCut>, CutError> {
    let tol = params.tol(mesh);
    check_inside_domain(mesh, &surface.mesh, tol)?;
    let bins = bin_facets(
        mesh,
        &surface.mesh,
        0..surface.mesh.facet_count() as u32,
        &CellBlock::whole(mesh.dims()),
        tol,
    );
    let cells: Vec<(usize, Vec<u32>)> = bins.into_iter().collect();
    cut_cells(mesh, surface, &cells, params, policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::build_background_mesh;
    use crate::shapes;
    use crate::Vector;

    fn unit_grid(n: usize) -> BackgroundMesh {
        BackgroundMesh::new(Point::origin(), Vector::repeat(1.0 / n as f64), [n; 3]).unwrap()
    }

    fn all_facets(s: &SurfaceMesh) -> Vec<u32> {
        (0..s.facet_count() as u32).collect()
    }

    #[test]
    fn slab_cell() {
        let solid = shapes::cuboid(Point::new(-5.0, -5.0, -5.0), Point::new(0.3, 5.0, 5.0));
        let s = PreparedSurface::new(&solid, 1e-6);
        let mesh = unit_grid(1);
        let cut = intersect_cell(&mesh, &s, [0, 0, 0], &all_facets(&solid), &CutParams::default())
            .unwrap()
            .unwrap();
        assert!((cut.interior_volume() - 0.3).abs() < 1e-15);
        assert!((cut.exterior_volume() - 0.7).abs() < 1e-15);
        assert!((cut.boundary_area() - 1.0).abs() < 1e-15);
        use Location::*;
        assert_eq!(cut.face_seeds, [In, Out, Cut, Cut, Cut, Cut]);
        assert_eq!(cut.node_seeds, [In, Out, In, Out, In, Out, In, Out]);
    }

    #[test]
    fn corner_contact_is_not_a_cut() {
        // tetra touching the cell only at its corner (1,1,1)
        let t = shapes::tetrahedron().transformed(1.0, Vector::repeat(1.0));
        let s = PreparedSurface::new(&t, 1e-6);
        let got = intersect_cell(&unit_grid(1), &s, [0, 0, 0], &all_facets(&t), &CutParams::default()).unwrap();
        assert!(got.is_none());
    }

    #[test]
    fn facet_on_cell_face_cuts_the_inner_cell_only() {
        // cube [0,1]^3 on a grid with planes at 0 and 1
        let cube = shapes::unit_cube();
        let s = PreparedSurface::new(&cube, 1e-6);
        let mesh = BackgroundMesh::new(Point::new(-1.0, -1.0, -1.0), Vector::repeat(1.0), [3, 3, 3]).unwrap();
        let cuts = cut_serial(&mesh, &s, &CutParams::default(), ExecPolicy::Sequential).unwrap();
        assert_eq!(cuts.len(), 1);
        assert_eq!(cuts[0].ijk, [1, 1, 1]);
        assert!((cuts[0].interior_volume() - 1.0).abs() < 1e-15);
        assert!((cuts[0].boundary_area() - 6.0).abs() < 1e-14);
        assert_eq!(cuts[0].face_seeds, [Location::Cut; 6]);
    }

    #[test]
    fn cube_in_four_cubed_grid() {
        let cube = shapes::unit_cube();
        let s = PreparedSurface::new(&cube, 1e-6);
        let mesh = build_background_mesh(&bounding_box(&cube).unwrap(), [4, 4, 4], 0.4).unwrap();
        let cuts = cut_serial(&mesh, &s, &CutParams::default(), ExecPolicy::Parallel).unwrap();
        // brute force: cells whose closed box meets the boundary of the cube
        let mut want = Vec::new();
        for c in CellBlock::whole(mesh.dims()).cells() {
            let b = mesh.cell_box(c);
            let meets = (0..cube.facet_count()).any(|f| crate::background::triangle_box_overlap(&cube.triangle(f), &b));
            if meets {
                want.push(mesh.dims().cell_index(c));
            }
        }
        let got: Vec<usize> = cuts.iter().map(|c| c.cell).collect();
        assert_eq!(got, want);
        let vin: f64 = cuts.iter().map(CellCut::interior_volume).sum();
        // the central 2x2x2 block of cells lies wholly inside
        assert!((vin - (1.0 - 0.7f64.powi(3))).abs() < 1e-14, "{vin}");
        let area: f64 = cuts.iter().map(CellCut::boundary_area).sum();
        assert!((area - 6.0).abs() < 1e-13);
        for c in &cuts {
            let v = c.interior_volume() + c.exterior_volume();
            assert!((v - mesh.cell_volume()).abs() < 1e-10 * mesh.cell_volume());
        }
    }

    #[test]
    fn surface_must_fit_the_domain() {
        let cube = shapes::unit_cube();
        let s = PreparedSurface::new(&cube, 1e-6);
        let shifted = PreparedSurface::new(&cube.transformed(1.0, Vector::repeat(0.5)), 1e-6);
        let err = cut_serial(&unit_grid(2), &shifted, &CutParams::default(), ExecPolicy::Sequential);
        assert!(matches!(err, Err(CutError::SurfaceOutside { .. })));
        assert!(cut_serial(&unit_grid(2), &s, &CutParams::default(), ExecPolicy::Sequential).is_ok());
    }

    #[test]
    fn deterministic_under_facet_order() {
        let l = shapes::l_prism();
        let s = PreparedSurface::new(&l, 1e-6);
        let mesh = build_background_mesh(&bounding_box(&l).unwrap(), [3, 3, 2], 0.4).unwrap();
        let mut facets = all_facets(&l);
        let a = intersect_cell(&mesh, &s, [1, 1, 0], &facets, &CutParams::default()).unwrap();
        facets.reverse();
        let b = intersect_cell(&mesh, &s, [1, 1, 0], &facets, &CutParams::default()).unwrap();
        assert_eq!(a, b);
    }
}
