//! Oriented boundary triangulations: STL ingestion, topology and measures.

mod stl;

use std::collections::HashMap;

use thiserror::Error;

use crate::{Point, Vector};

pub use stl::{parse_stl, read_stl, write_stl_ascii, write_stl_binary, ParseOptions, ParseReport};

#[derive(Debug, Error, PartialEq)]
pub enum StlError {
    #[error("no facets")]
    NoFacets,
    #[error("all {0} facets are degenerate")]
    AllDegenerate(usize),
    #[error("truncated stream: {0}")]
    Truncated(String),
    #[error("facet count mismatch: header declares {declared}, stream holds {actual}")]
    CountMismatch { declared: u32, actual: u64 },
    #[error("ascii syntax error on line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("facet {facet} references vertex {index} but only {count} vertices exist")]
    BadIndex { facet: usize, index: u32, count: usize },
    #[error("empty mesh")]
    EmptyMesh,
}

/// How duplicated STL corner coordinates are merged into shared vertices.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum WeldMode {
    /// Coordinates must match bit for bit (with `-0.0 == 0.0`).
    #[default]
    Exact,
    /// Points closer than the given distance are merged.
    Tolerance(f64),
}

/// Axis-aligned box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn new(min: Point, max: Point) -> Self {
        debug_assert!((0..3).all(|a| min[a] <= max[a]));
        Aabb { min, max }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let (mut min, mut max) = (first, first);
        for p in it {
            for a in 0..3 {
                min[a] = min[a].min(p[a]);
                max[a] = max[a].max(p[a]);
            }
        }
        Some(Aabb { min, max })
    }

    pub fn extent(&self) -> Vector {
        self.max - self.min
    }

    pub fn center(&self) -> Point {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e.x * e.y * e.z
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    /// Closed containment of `other`.
    pub fn contains_box(&self, other: &Aabb) -> bool {
        (0..3).all(|a| self.min[a] <= other.min[a] && other.max[a] <= self.max[a])
    }

    pub fn contains_point(&self, p: &Point) -> bool {
        (0..3).all(|a| self.min[a] <= p[a] && p[a] <= self.max[a])
    }

    /// Closed overlap test.
    pub fn overlaps(&self, other: &Aabb) -> bool {
        (0..3).all(|a| self.min[a] <= other.max[a] && other.min[a] <= self.max[a])
    }

    pub fn inflated(&self, by: f64) -> Aabb {
        let d = Vector::repeat(by);
        Aabb {
            min: self.min - d,
            max: self.max + d,
        }
    }
}

/// The oriented boundary triangulation.
///
/// Facet normals always follow the right-hand rule on the stored winding;
/// whatever normal the source file carried is discarded.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceMesh {
    vertices: Vec<Point>,
    facets: Vec<[u32; 3]>,
    normals: Vec<Vector>,
    labels: Vec<u16>,
}

/// Counters collected while building a mesh from raw triangles.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub input_facets: usize,
    pub degenerate_dropped: usize,
}

impl SurfaceMesh {
    /// Builds a mesh from indexed triangles. Degenerate facets are dropped
    /// and counted; it is an error only if nothing survives.
    pub fn new(
        vertices: Vec<Point>,
        facets: Vec<[u32; 3]>,
        labels: Option<Vec<u16>>,
    ) -> Result<(Self, BuildReport), StlError> {
        if facets.is_empty() {
            return Err(StlError::NoFacets);
        }
        let labels = labels.unwrap_or_else(|| vec![0; facets.len()]);
        assert_eq!(labels.len(), facets.len(), "one label per facet");
        for (f, tri) in facets.iter().enumerate() {
            for &i in tri {
                if i as usize >= vertices.len() {
                    return Err(StlError::BadIndex {
                        facet: f,
                        index: i,
                        count: vertices.len(),
                    });
                }
            }
        }

        let mut report = BuildReport {
            input_facets: facets.len(),
            ..Default::default()
        };
        let mut kept = Vec::with_capacity(facets.len());
        let mut kept_labels = Vec::with_capacity(facets.len());
        let mut normals = Vec::with_capacity(facets.len());
        for (tri, label) in facets.into_iter().zip(labels) {
            match facet_normal(&vertices, tri) {
                Some(n) => {
                    kept.push(tri);
                    kept_labels.push(label);
                    normals.push(n);
                }
                None => report.degenerate_dropped += 1,
            }
        }
        if kept.is_empty() {
            return Err(StlError::AllDegenerate(report.input_facets));
        }
        Ok((
            SurfaceMesh {
                vertices,
                facets: kept,
                normals,
                labels: kept_labels,
            },
            report,
        ))
    }

    /// Welds a triangle soup into an indexed mesh.
    pub fn from_soup(
        triangles: &[[Point; 3]],
        labels: &[u16],
        weld: WeldMode,
    ) -> Result<(Self, BuildReport), StlError> {
        if triangles.is_empty() {
            return Err(StlError::NoFacets);
        }
        let mut welder = Welder::new(weld);
        let facets: Vec<[u32; 3]> = triangles
            .iter()
            .map(|t| [welder.insert(t[0]), welder.insert(t[1]), welder.insert(t[2])])
            .collect();
        SurfaceMesh::new(welder.vertices, facets, Some(labels.to_vec()))
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn facets(&self) -> &[[u32; 3]] {
        &self.facets
    }

    pub fn normals(&self) -> &[Vector] {
        &self.normals
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn facet_count(&self) -> usize {
        self.facets.len()
    }

    pub fn triangle(&self, f: usize) -> [Point; 3] {
        let [a, b, c] = self.facets[f];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn facet_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.triangle(f);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Same surface with every facet's winding (and normal) reversed.
    pub fn flipped(&self) -> SurfaceMesh {
        SurfaceMesh {
            vertices: self.vertices.clone(),
            facets: self.facets.iter().map(|&[a, b, c]| [a, c, b]).collect(),
            normals: self.normals.iter().map(|n| -n).collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn transformed(&self, scale: f64, shift: Vector) -> SurfaceMesh {
        let vertices: Vec<Point> = self
            .vertices
            .iter()
            .map(|p| Point::from(p.coords * scale + shift))
            .collect();
        let (mesh, _) = SurfaceMesh::new(vertices, self.facets.clone(), Some(self.labels.clone()))
            .expect("transform keeps a valid mesh");
        mesh
    }

    /// Disjoint union; vertex indices of `other` are offset.
    pub fn merged(&self, other: &SurfaceMesh) -> SurfaceMesh {
        let off = self.vertices.len() as u32;
        let mut out = self.clone();
        out.vertices.extend_from_slice(&other.vertices);
        out.facets
            .extend(other.facets.iter().map(|t| [t[0] + off, t[1] + off, t[2] + off]));
        out.normals.extend_from_slice(&other.normals);
        out.labels.extend_from_slice(&other.labels);
        out
    }

    pub fn with_labels(mut self, labels: Vec<u16>) -> SurfaceMesh {
        assert_eq!(labels.len(), self.facets.len());
        self.labels = labels;
        self
    }
}

fn facet_normal(vertices: &[Point], [a, b, c]: [u32; 3]) -> Option<Vector> {
    if a == b || b == c || a == c {
        return None;
    }
    let (pa, pb, pc) = (vertices[a as usize], vertices[b as usize], vertices[c as usize]);
    let cross = (pb - pa).cross(&(pc - pa));
    let scale = (pb - pa)
        .norm_squared()
        .max((pc - pa).norm_squared())
        .max((pc - pb).norm_squared());
    let len = cross.norm();
    if len.is_nan() || len <= 1e-14 * scale {
        return None;
    }
    Some(cross / len)
}

struct Welder {
    mode: WeldMode,
    vertices: Vec<Point>,
    exact: HashMap<[u64; 3], u32>,
    grid: HashMap<[i64; 3], Vec<u32>>,
}

impl Welder {
    fn new(mode: WeldMode) -> Self {
        Welder {
            mode,
            vertices: Vec::new(),
            exact: HashMap::new(),
            grid: HashMap::new(),
        }
    }

    fn insert(&mut self, p: Point) -> u32 {
        match self.mode {
            WeldMode::Exact => {
                // +0.0 normalizes the sign of zero
                let key = [(p.x + 0.0).to_bits(), (p.y + 0.0).to_bits(), (p.z + 0.0).to_bits()];
                let next = self.vertices.len() as u32;
                let idx = *self.exact.entry(key).or_insert(next);
                if idx == next {
                    self.vertices.push(p);
                }
                idx
            }
            WeldMode::Tolerance(tol) => {
                let cell = |x: f64| (x / tol).floor() as i64;
                let key = [cell(p.x), cell(p.y), cell(p.z)];
                for dx in -1..=1 {
                    for dy in -1..=1 {
                        for dz in -1..=1 {
                            let k = [key[0] + dx, key[1] + dy, key[2] + dz];
                            if let Some(list) = self.grid.get(&k) {
                                for &i in list {
                                    if (self.vertices[i as usize] - p).norm() < tol {
                                        return i;
                                    }
                                }
                            }
                        }
                    }
                }
                let idx = self.vertices.len() as u32;
                self.vertices.push(p);
                self.grid.entry(key).or_default().push(idx);
                idx
            }
        }
    }
}

pub fn bounding_box(mesh: &SurfaceMesh) -> Result<Aabb, StlError> {
    Aabb::from_points(mesh.vertices()).ok_or(StlError::EmptyMesh)
}

/// One use of an undirected edge by a facet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeUse {
    pub facet: u32,
    /// The facet walks the edge from `vertices[0]` to `vertices[1]`.
    pub forward: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    /// Sorted endpoint indices.
    pub vertices: [u32; 2],
    pub uses: Vec<EdgeUse>,
}

impl Edge {
    pub fn is_manifold(&self) -> bool {
        self.uses.len() == 2 && self.uses[0].forward != self.uses[1].forward
    }
}

/// Undirected edge table of a welded mesh. Edge indices are the rank of the
/// sorted endpoint pair, so they are stable for a given mesh.
#[derive(Clone, Debug)]
pub struct SurfaceTopology {
    edges: Vec<Edge>,
    facet_edges: Vec<[u32; 3]>,
}

impl SurfaceTopology {
    pub fn build(mesh: &SurfaceMesh) -> Self {
        let mut half: Vec<([u32; 2], u32, u8, bool)> = Vec::with_capacity(mesh.facets.len() * 3);
        for (f, tri) in mesh.facets.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                half.push(([a.min(b), a.max(b)], f as u32, k as u8, a < b));
            }
        }
        half.sort_unstable_by_key(|h| (h.0, h.1, h.2));
        let mut edges: Vec<Edge> = Vec::new();
        let mut facet_edges = vec![[u32::MAX; 3]; mesh.facets.len()];
        for (key, facet, k, forward) in half {
            if edges.last().map(|e| e.vertices) != Some(key) {
                edges.push(Edge {
                    vertices: key,
                    uses: Vec::with_capacity(2),
                });
            }
            let id = edges.len() - 1;
            edges[id].uses.push(EdgeUse { facet, forward });
            facet_edges[facet as usize][k as usize] = id as u32;
        }
        SurfaceTopology { edges, facet_edges }
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edge ids of facet `f`, edge k running from corner k to corner k+1.
    pub fn facet_edges(&self, f: usize) -> [u32; 3] {
        self.facet_edges[f]
    }

    /// For a manifold edge, the facet across from `f`.
    pub fn neighbour(&self, edge: usize, f: u32) -> Option<u32> {
        let e = &self.edges[edge];
        if !e.is_manifold() {
            return None;
        }
        e.uses.iter().map(|u| u.facet).find(|&g| g != f)
    }
}

/// Diagnostics of the closed-manifold check.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WatertightReport {
    pub open_edges: Vec<[u32; 2]>,
    pub non_manifold_edges: Vec<[u32; 2]>,
    pub misoriented_edges: Vec<[u32; 2]>,
}

impl WatertightReport {
    pub fn is_watertight(&self) -> bool {
        self.open_edges.is_empty() && self.non_manifold_edges.is_empty() && self.misoriented_edges.is_empty()
    }
}

/// Every edge must be used by exactly two facets walking it in opposite
/// directions.
pub fn is_watertight(mesh: &SurfaceMesh) -> WatertightReport {
    let topo = SurfaceTopology::build(mesh);
    let mut report = WatertightReport::default();
    for e in topo.edges() {
        match e.uses.len() {
            1 => report.open_edges.push(e.vertices),
            2 if e.uses[0].forward == e.uses[1].forward => report.misoriented_edges.push(e.vertices),
            2 => {}
            _ => report.non_manifold_edges.push(e.vertices),
        }
    }
    report
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceMeasures {
    pub enclosed_volume: f64,
    pub surface_area: f64,
    /// False when the mesh is not watertight; the volume is then meaningless.
    pub volume_reliable: bool,
}

/// Enclosed volume by the divergence theorem and total area.
pub fn surface_measures(mesh: &SurfaceMesh) -> SurfaceMeasures {
    // signed tetrahedra against the box centre keep the sum well conditioned
    // under translation
    let c = bounding_box(mesh)
        .map(|b| b.center())
        .unwrap_or_else(|_| Point::origin());
    let mut volume = 0.0;
    let mut area = 0.0;
    for f in 0..mesh.facet_count() {
        let [a, b, d] = mesh.triangle(f);
        let (a, b, d) = (a - c, b - c, d - c);
        volume += a.cross(&b).dot(&d);
        area += 0.5 * (b - a).cross(&(d - a)).norm();
    }
    SurfaceMeasures {
        enclosed_volume: volume / 6.0,
        surface_area: area,
        volume_reliable: is_watertight(mesh).is_watertight(),
    }
}
