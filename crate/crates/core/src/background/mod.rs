//! Cartesian background mesh, its integer topology and block partition.
//!
//! Cells, faces and nodes are addressed lexicographically with x fastest.
//! Faces normal to axis `a` form their own `n + e_a` lattice; the global
//! face index concatenates the x, y and z lattices.

mod sat;

pub use sat::triangle_box_overlap;

use thiserror::Error;

use crate::surface::Aabb;
use crate::{Point, Vector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("cell counts must be at least 1 per axis, got {0:?}")]
    InvalidCells([usize; 3]),
    #[error("enlargement must be finite and non-negative, got {0}")]
    InvalidEnlargement(f64),
    #[error("bounding box is not finite")]
    NonFiniteBox,
    #[error("part counts must be at least 1 per axis, got {0:?}")]
    InvalidParts([usize; 3]),
    #[error("{parts} parts exceed {cells} cells on axis {axis}")]
    PartsExceedCells { axis: usize, parts: usize, cells: usize },
}

/// Cell, face and node counting for an `n[0] x n[1] x n[2]` grid of cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridDims {
    pub n: [usize; 3],
}

impl GridDims {
    pub fn new(n: [usize; 3]) -> Self {
        GridDims { n }
    }

    pub fn cell_count(&self) -> usize {
        self.n.iter().product()
    }

    pub fn cell_index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.n[0] * (ijk[1] + self.n[1] * ijk[2])
    }

    pub fn cell_ijk(&self, idx: usize) -> [usize; 3] {
        [
            idx % self.n[0],
            (idx / self.n[0]) % self.n[1],
            idx / (self.n[0] * self.n[1]),
        ]
    }

    pub fn face_dims(&self, axis: usize) -> [usize; 3] {
        let mut d = self.n;
        d[axis] += 1;
        d
    }

    fn face_offset(&self, axis: usize) -> usize {
        (0..axis).map(|a| self.face_dims(a).iter().product::<usize>()).sum()
    }

    pub fn face_count(&self) -> usize {
        self.face_offset(3)
    }

    /// Face normal to `axis` whose low corner is node `ijk`.
    pub fn face_index(&self, axis: usize, ijk: [usize; 3]) -> usize {
        let d = self.face_dims(axis);
        self.face_offset(axis) + ijk[0] + d[0] * (ijk[1] + d[1] * ijk[2])
    }

    pub fn face_axis_ijk(&self, face: usize) -> (usize, [usize; 3]) {
        let mut axis = 0;
        while face >= self.face_offset(axis + 1) {
            axis += 1;
        }
        let d = self.face_dims(axis);
        let r = face - self.face_offset(axis);
        (axis, [r % d[0], (r / d[0]) % d[1], r / (d[0] * d[1])])
    }

    /// Face on `side` of a cell; sides are ordered -x, +x, -y, +y, -z, +z.
    pub fn cell_face(&self, ijk: [usize; 3], side: usize) -> usize {
        let axis = side / 2;
        let mut f = ijk;
        f[axis] += side % 2;
        self.face_index(axis, f)
    }

    pub fn cell_faces(&self, ijk: [usize; 3]) -> [usize; 6] {
        std::array::from_fn(|side| self.cell_face(ijk, side))
    }

    /// Cells below and above a face, if inside the grid.
    pub fn face_cells(&self, face: usize) -> [Option<[usize; 3]>; 2] {
        let (axis, ijk) = self.face_axis_ijk(face);
        let below = (ijk[axis] > 0).then(|| {
            let mut c = ijk;
            c[axis] -= 1;
            c
        });
        let above = (ijk[axis] < self.n[axis]).then_some(ijk);
        [below, above]
    }

    pub fn neighbour(&self, ijk: [usize; 3], side: usize) -> Option<[usize; 3]> {
        let axis = side / 2;
        let mut c = ijk;
        if side.is_multiple_of(2) {
            c[axis] = c[axis].checked_sub(1)?;
        } else {
            c[axis] += 1;
            if c[axis] >= self.n[axis] {
                return None;
            }
        }
        Some(c)
    }
}

/// Half-open box of cell coordinates `lo <= ijk < hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CellBlock {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl CellBlock {
    pub fn whole(dims: GridDims) -> Self {
        CellBlock { lo: [0; 3], hi: dims.n }
    }

    pub fn dims(&self) -> GridDims {
        GridDims::new(std::array::from_fn(|a| self.hi[a] - self.lo[a]))
    }

    pub fn count(&self) -> usize {
        self.dims().cell_count()
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|a| self.hi[a] <= self.lo[a])
    }

    pub fn contains(&self, ijk: [usize; 3]) -> bool {
        (0..3).all(|a| self.lo[a] <= ijk[a] && ijk[a] < self.hi[a])
    }

    /// Cell coordinates in lexicographic order, x fastest.
    pub fn cells(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let d = self.dims();
        (0..d.cell_count()).map(move |i| {
            let l = d.cell_ijk(i);
            [l[0] + self.lo[0], l[1] + self.lo[1], l[2] + self.lo[2]]
        })
    }

    /// Cells touching the block boundary.
    pub fn shell(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        self.cells()
            .filter(|c| (0..3).any(|a| c[a] == self.lo[a] || c[a] + 1 == self.hi[a]))
    }

    pub fn local_index(&self, ijk: [usize; 3]) -> usize {
        self.dims().cell_index(std::array::from_fn(|a| ijk[a] - self.lo[a]))
    }
}

/// Uniform Cartesian mesh; cell `(i,j,k)` spans
/// `origin + (i,j,k) * spacing .. origin + (i+1,j+1,k+1) * spacing`.
#[derive(Clone, Debug, PartialEq)]
pub struct BackgroundMesh {
    origin: Point,
    spacing: Vector,
    dims: GridDims,
}

/// Relative padding given to a flat axis of the input box.
const FLAT_AXIS_PAD: f64 = 1e-3;

/// Mesh over `bbox` grown by `enlargement` times its extent on each axis,
/// split evenly on both sides.
pub fn build_background_mesh(bbox: &Aabb, cells: [usize; 3], enlargement: f64) -> Result<BackgroundMesh, MeshError> {
    if cells.contains(&0) {
        return Err(MeshError::InvalidCells(cells));
    }
    if enlargement < 0.0 || !enlargement.is_finite() {
        return Err(MeshError::InvalidEnlargement(enlargement));
    }
    let ext = bbox.extent();
    if !ext.iter().chain(bbox.min.iter()).all(|x| x.is_finite()) {
        return Err(MeshError::NonFiniteBox);
    }
    let max_ext = ext.max();
    let pad = if max_ext > 0.0 { FLAT_AXIS_PAD * max_ext } else { 1.0 };
    let mut origin = bbox.min;
    let mut spacing = Vector::zeros();
    for a in 0..3 {
        let (lo, len) = if ext[a] > 0.0 {
            (bbox.min[a], ext[a])
        } else {
            (bbox.min[a] - pad / 2.0, pad)
        };
        let grown = (1.0 + enlargement) * len;
        origin[a] = lo - enlargement * len / 2.0;
        spacing[a] = grown / cells[a] as f64;
    }
    Ok(BackgroundMesh {
        origin,
        spacing,
        dims: GridDims::new(cells),
    })
}

impl BackgroundMesh {
    pub fn new(origin: Point, spacing: Vector, cells: [usize; 3]) -> Result<Self, MeshError> {
        if cells.contains(&0) {
            return Err(MeshError::InvalidCells(cells));
        }
        Ok(BackgroundMesh {
            origin,
            spacing,
            dims: GridDims::new(cells),
        })
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn spacing(&self) -> Vector {
        self.spacing
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn cell_count(&self) -> usize {
        self.dims.cell_count()
    }

    pub fn node(&self, ijk: [usize; 3]) -> Point {
        Point::from(std::array::from_fn::<f64, 3, _>(|a| {
            self.origin[a] + ijk[a] as f64 * self.spacing[a]
        }))
    }

    pub fn cell_box(&self, ijk: [usize; 3]) -> Aabb {
        Aabb::new(self.node(ijk), self.node(ijk.map(|i| i + 1)))
    }

    pub fn cell_center(&self, ijk: [usize; 3]) -> Point {
        self.cell_box(ijk).center()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.product()
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.spacing.norm()
    }

    pub fn domain(&self) -> Aabb {
        Aabb::new(self.origin, self.node(self.dims.n))
    }

    pub fn block_box(&self, block: &CellBlock) -> Aabb {
        Aabb::new(self.node(block.lo), self.node(block.hi))
    }

    /// Cells whose closed boxes may overlap `b` (a superset: one layer of
    /// slack on each side). `None` when `b` misses the domain.
    pub fn cell_range(&self, b: &Aabb) -> Option<CellBlock> {
        let mut lo = [0; 3];
        let mut hi = [0; 3];
        for a in 0..3 {
            let n = self.dims.n[a] as f64;
            let t0 = ((b.min[a] - self.origin[a]) / self.spacing[a]).floor() - 1.0;
            let t1 = ((b.max[a] - self.origin[a]) / self.spacing[a]).floor() + 1.0;
            if t1 < 0.0 || t0 >= n || t0.is_nan() || t1.is_nan() {
                return None;
            }
            lo[a] = t0.max(0.0) as usize;
            hi[a] = (t1.min(n - 1.0) as usize) + 1;
        }
        Some(CellBlock { lo, hi })
    }
}

/// Block partition of a mesh into `parts[0] x parts[1] x parts[2]` ranks,
/// numbered lexicographically with x fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarsePartition {
    parts: [usize; 3],
    dims: GridDims,
    /// Per axis, the `parts + 1` block boundaries.
    splits: [Vec<usize>; 3],
}

/// Axis of `n` cells into `p` blocks of `n / p` or `n / p + 1` cells; the
/// larger blocks come first.
fn axis_splits(n: usize, p: usize) -> Vec<usize> {
    let (q, r) = (n / p, n % p);
    let mut out = Vec::with_capacity(p + 1);
    let mut at = 0;
    out.push(0);
    for b in 0..p {
        at += q + usize::from(b < r);
        out.push(at);
    }
    out
}

pub fn build_partition(mesh: &BackgroundMesh, parts: [usize; 3]) -> Result<CoarsePartition, MeshError> {
    if parts.contains(&0) {
        return Err(MeshError::InvalidParts(parts));
    }
    for (axis, (&parts, &cells)) in parts.iter().zip(&mesh.dims.n).enumerate() {
        if parts > cells {
            return Err(MeshError::PartsExceedCells { axis, parts, cells });
        }
    }
    Ok(CoarsePartition {
        parts,
        dims: mesh.dims,
        splits: std::array::from_fn(|a| axis_splits(mesh.dims.n[a], parts[a])),
    })
}

impl CoarsePartition {
    pub fn parts(&self) -> [usize; 3] {
        self.parts
    }

    pub fn rank_count(&self) -> usize {
        self.parts.iter().product()
    }

    /// The coarse mesh: one cell per rank.
    pub fn coarse_dims(&self) -> GridDims {
        GridDims::new(self.parts)
    }

    pub fn rank_coords(&self, rank: usize) -> [usize; 3] {
        self.coarse_dims().cell_ijk(rank)
    }

    pub fn block(&self, rank: usize) -> CellBlock {
        let c = self.rank_coords(rank);
        CellBlock {
            lo: std::array::from_fn(|a| self.splits[a][c[a]]),
            hi: std::array::from_fn(|a| self.splits[a][c[a] + 1]),
        }
    }

    pub fn owner(&self, ijk: [usize; 3]) -> usize {
        let c = std::array::from_fn(|a| self.splits[a][1..].partition_point(|&s| s <= ijk[a]));
        self.coarse_dims().cell_index(c)
    }

    /// Face-neighbour ranks as `(side, rank)`, sides ordered -x, +x, -y,
    /// +y, -z, +z.
    pub fn neighbours(&self, rank: usize) -> Vec<(usize, usize)> {
        let cd = self.coarse_dims();
        let c = self.rank_coords(rank);
        (0..6)
            .filter_map(|side| cd.neighbour(c, side).map(|n| (side, cd.cell_index(n))))
            .collect()
    }
}

/// Global indices of the owned cells of `rank` touching the boundary of its
/// block, ascending.
pub fn subdomain_boundary_cells(partition: &CoarsePartition, rank: usize) -> Vec<usize> {
    let block = partition.block(rank);
    let mut out: Vec<usize> = block.shell().map(|c| partition.dims.cell_index(c)).collect();
    out.sort_unstable();
    out
}

/// Cells whose closed box, inflated by `tol`, overlaps the triangle.
/// Ascending global indices; empty when the triangle misses the domain.
pub fn candidate_cells(mesh: &BackgroundMesh, tri: &[Point; 3], tol: f64) -> Vec<usize> {
    let Some(tb) = Aabb::from_points(tri.iter()) else {
        return Vec::new();
    };
    let Some(range) = mesh.cell_range(&tb.inflated(tol)) else {
        return Vec::new();
    };
    let mut out: Vec<usize> = range
        .cells()
        .filter(|&c| {
            let b = mesh.cell_box(c);
            b.overlaps(&tb.inflated(tol)) && triangle_box_overlap(tri, &b.inflated(tol))
        })
        .map(|c| mesh.dims.cell_index(c))
        .collect();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> Aabb {
        Aabb::new(Point::origin(), Point::new(1.0, 1.0, 1.0))
    }

    #[test]
    fn centered_enlargement() {
        let m = build_background_mesh(&unit_box(), [8, 8, 8], 0.4).unwrap();
        for a in 0..3 {
            assert!((m.origin()[a] + 0.2).abs() < 1e-15);
            assert!((m.spacing()[a] - 0.175).abs() < 1e-15);
            assert!((m.domain().max[a] - 1.2).abs() < 1e-14);
        }
        let id = build_background_mesh(&unit_box(), [1, 1, 1], 0.0).unwrap();
        assert_eq!(id.cell_box([0, 0, 0]), unit_box());
        let big = build_background_mesh(&unit_box(), [120, 160, 160], 0.4).unwrap();
        assert_eq!(big.cell_count(), 3_072_000);
    }

    #[test]
    fn flat_axis_is_padded() {
        let flat = Aabb::new(Point::origin(), Point::new(1.0, 1.0, 0.0));
        let m = build_background_mesh(&flat, [2, 2, 2], 0.0).unwrap();
        assert!((m.domain().extent().z - 1e-3).abs() < 1e-15);
        assert!(m.domain().contains_box(&flat));
        assert!(build_background_mesh(&flat, [0, 2, 2], 0.0).is_err());
        assert!(build_background_mesh(&flat, [2, 2, 2], -0.1).is_err());
    }

    #[test]
    fn face_topology_round_trips() {
        let d = GridDims::new([3, 2, 4]);
        assert_eq!(d.face_count(), 4 * 2 * 4 + 3 * 3 * 4 + 3 * 2 * 5);
        for f in 0..d.face_count() {
            let (a, ijk) = d.face_axis_ijk(f);
            assert_eq!(d.face_index(a, ijk), f);
        }
        for c in CellBlock::whole(d).cells() {
            for side in 0..6 {
                let f = d.cell_face(c, side);
                let [lo, hi] = d.face_cells(f);
                let me = if side.is_multiple_of(2) { hi } else { lo };
                assert_eq!(me, Some(c));
                let other = if side.is_multiple_of(2) { lo } else { hi };
                assert_eq!(other, d.neighbour(c, side));
            }
        }
    }

    #[test]
    fn partitions() {
        let m = build_background_mesh(&unit_box(), [8, 8, 8], 0.4).unwrap();
        let p = build_partition(&m, [1, 1, 4]).unwrap();
        assert_eq!(p.rank_count(), 4);
        for r in 0..4 {
            let b = p.block(r);
            assert_eq!(b.dims().n, [8, 8, 2]);
            assert_eq!(subdomain_boundary_cells(&p, r).len(), 128);
        }
        assert_eq!(build_partition(&m, [3, 4, 4]).unwrap().rank_count(), 48);
        let serial = build_partition(&m, [1, 1, 1]).unwrap();
        assert!(CellBlock::whole(m.dims()).cells().all(|c| serial.owner(c) == 0));
        assert_eq!(subdomain_boundary_cells(&serial, 0).len(), 8 * 8 * 8 - 6 * 6 * 6);
        assert!(matches!(
            build_partition(&m, [9, 1, 1]),
            Err(MeshError::PartsExceedCells { axis: 0, .. })
        ));
    }

    #[test]
    fn uneven_blocks_front_load() {
        assert_eq!(axis_splits(10, 3), vec![0, 4, 7, 10]);
        assert_eq!(axis_splits(8, 4), vec![0, 2, 4, 6, 8]);
        let m = BackgroundMesh::new(Point::origin(), Vector::repeat(1.0), [10, 7, 5]).unwrap();
        let p = build_partition(&m, [3, 2, 2]).unwrap();
        let mut seen = vec![0usize; m.cell_count()];
        for r in 0..p.rank_count() {
            for c in p.block(r).cells() {
                seen[m.dims().cell_index(c)] += 1;
                assert_eq!(p.owner(c), r);
            }
        }
        assert!(seen.iter().all(|&s| s == 1));
    }

    #[test]
    fn shell_of_cube_block() {
        let m = BackgroundMesh::new(Point::origin(), Vector::repeat(1.0), [8, 8, 8]).unwrap();
        let p = build_partition(&m, [2, 2, 2]).unwrap();
        assert_eq!(subdomain_boundary_cells(&p, 5).len(), 4 * 4 * 4 - 2 * 2 * 2);
        assert_eq!(p.neighbours(0), vec![(1, 1), (3, 2), (5, 4)]);
        assert_eq!(p.neighbours(7).len(), 3);
    }

    #[test]
    fn candidates() {
        let m = BackgroundMesh::new(Point::origin(), Vector::repeat(1.0), [4, 4, 4]).unwrap();
        let inside = [
            Point::new(1.2, 1.2, 1.5),
            Point::new(1.8, 1.2, 1.5),
            Point::new(1.2, 1.8, 1.5),
        ];
        assert_eq!(candidate_cells(&m, &inside, 0.0), vec![m.dims().cell_index([1, 1, 1])]);
        let row = [
            Point::new(0.0, 1.5, 2.5),
            Point::new(4.0, 1.5, 2.5),
            Point::new(0.0, 1.6, 2.6),
        ];
        let want: Vec<usize> = (0..4).map(|i| m.dims().cell_index([i, 1, 2])).collect();
        assert_eq!(candidate_cells(&m, &row, 0.0), want);
        let outside = [
            Point::new(9.0, 9.0, 9.0),
            Point::new(10.0, 9.0, 9.0),
            Point::new(9.0, 10.0, 9.0),
        ];
        assert!(candidate_cells(&m, &outside, 0.0).is_empty());
        let point = [Point::new(2.5, 0.5, 0.5); 3];
        assert_eq!(candidate_cells(&m, &point, 0.0), vec![2]);
    }

    #[test]
    fn cell_volumes_sum_to_domain() {
        let m = build_background_mesh(&unit_box(), [5, 6, 7], 0.4).unwrap();
        let sum: f64 = CellBlock::whole(m.dims()).cells().map(|c| m.cell_box(c).volume()).sum();
        assert!((sum - m.domain().volume()).abs() <= 1e-12 * m.domain().volume());
    }
}
