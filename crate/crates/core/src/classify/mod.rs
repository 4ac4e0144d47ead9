//! Inside/outside labelling of cells and faces.
//!
//! Cut cells seed the labels of their faces; uncut cells then inherit the
//! label of any labelled face through integer adjacency alone. Components
//! without a seed fall back to a crossing count along a ray.

mod ray;

pub use ray::{point_in_solid, RAY_ATTEMPTS};

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::background::{BackgroundMesh, CellBlock, GridDims};
use crate::cutter::CellCut;
use crate::surface::SurfaceMesh;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("face {axis}/{ijk:?} seeded both inside and outside")]
    FaceConflict { axis: usize, ijk: [usize; 3] },
    #[error("inconsistent geometry orientation at cell {ijk:?}")]
    InconsistentOrientation { ijk: [usize; 3] },
    #[error("ray from {point:?} kept hitting facet edges after {attempts} attempts")]
    RayAmbiguous { point: [f64; 3], attempts: usize },
    #[error("cell {ijk:?} is still undefined")]
    Incomplete { ijk: [usize; 3] },
}

#[repr(u8)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Location {
    #[default]
    Undefined = 0,
    In = 1,
    Out = 2,
    Cut = 3,
}

impl Location {
    pub fn from_u8(b: u8) -> Option<Location> {
        Some(match b {
            0 => Location::Undefined,
            1 => Location::In,
            2 => Location::Out,
            3 => Location::Cut,
            _ => return None,
        })
    }

    pub fn is_in_or_out(self) -> bool {
        matches!(self, Location::In | Location::Out)
    }

    pub fn flipped(self) -> Location {
        match self {
            Location::In => Location::Out,
            Location::Out => Location::In,
            x => x,
        }
    }

    /// Combines two reports for the same entity: a defined value beats
    /// `Undefined`, `Cut` beats `In`/`Out`, `In` against `Out` is a
    /// conflict.
    pub fn merge(self, other: Location) -> Option<Location> {
        use Location::*;
        match (self, other) {
            (Undefined, x) | (x, Undefined) => Some(x),
            (Cut, _) | (_, Cut) => Some(Cut),
            (a, b) if a == b => Some(a),
            _ => None,
        }
    }
}

/// Cell and face labels over a block of a global grid. Faces are those of
/// the block's cells, including the ones on its boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocationMap {
    dims: GridDims,
    block: CellBlock,
    cells: Vec<Location>,
    faces: Vec<Location>,
}

impl LocationMap {
    pub fn new(dims: GridDims, block: CellBlock) -> Self {
        let local = block.dims();
        LocationMap {
            dims,
            block,
            cells: vec![Location::Undefined; local.cell_count()],
            faces: vec![Location::Undefined; local.face_count()],
        }
    }

    pub fn whole(dims: GridDims) -> Self {
        LocationMap::new(dims, CellBlock::whole(dims))
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn block(&self) -> CellBlock {
        self.block
    }

    fn local(&self, ijk: [usize; 3]) -> [usize; 3] {
        std::array::from_fn(|a| ijk[a] - self.block.lo[a])
    }

    pub fn cell(&self, ijk: [usize; 3]) -> Location {
        self.cells[self.block.local_index(ijk)]
    }

    pub fn set_cell(&mut self, ijk: [usize; 3], loc: Location) {
        let i = self.block.local_index(ijk);
        self.cells[i] = loc;
    }

    /// Face normal to `axis` with global low corner `ijk`.
    pub fn face(&self, axis: usize, ijk: [usize; 3]) -> Location {
        self.faces[self.block.dims().face_index(axis, self.local(ijk))]
    }

    pub fn set_face(&mut self, axis: usize, ijk: [usize; 3], loc: Location) {
        let i = self.block.dims().face_index(axis, self.local(ijk));
        self.faces[i] = loc;
    }

    pub fn cell_face(&self, ijk: [usize; 3], side: usize) -> Location {
        let (axis, f) = face_of(ijk, side);
        self.face(axis, f)
    }

    /// Merges `loc` into a face label.
    pub fn merge_face(&mut self, axis: usize, ijk: [usize; 3], loc: Location) -> Result<(), ClassifyError> {
        let merged = self
            .face(axis, ijk)
            .merge(loc)
            .ok_or(ClassifyError::FaceConflict { axis, ijk })?;
        self.set_face(axis, ijk, merged);
        Ok(())
    }

    /// `(ijk, label)` in lexicographic cell order.
    pub fn cells(&self) -> impl Iterator<Item = ([usize; 3], Location)> + '_ {
        self.block.cells().zip(self.cells.iter().copied())
    }

    /// `(axis, global ijk, label)` in local face order.
    pub fn faces(&self) -> impl Iterator<Item = (usize, [usize; 3], Location)> + '_ {
        let local = self.block.dims();
        self.faces.iter().enumerate().map(move |(i, &l)| {
            let (a, f) = local.face_axis_ijk(i);
            (a, std::array::from_fn(|k| f[k] + self.block.lo[k]), l)
        })
    }

    pub fn cell_labels(&self) -> &[Location] {
        &self.cells
    }

    pub fn face_labels(&self) -> &[Location] {
        &self.faces
    }

    /// Counts of (in, out, cut, undefined) cells.
    pub fn counts(&self) -> [usize; 4] {
        let mut c = [0; 4];
        for l in &self.cells {
            c[match l {
                Location::In => 0,
                Location::Out => 1,
                Location::Cut => 2,
                Location::Undefined => 3,
            }] += 1;
        }
        c
    }

    /// Labels of the faces on one side of the block, in lexicographic order
    /// of their global coordinates.
    pub fn boundary_faces(&self, side: usize) -> Vec<Location> {
        block_side_faces(&self.block, side)
            .map(|f| self.face(side / 2, f))
            .collect()
    }

    pub fn set_boundary_faces(&mut self, side: usize, labels: &[Location]) {
        let faces: Vec<_> = block_side_faces(&self.block, side).collect();
        for (f, &l) in faces.into_iter().zip(labels) {
            self.set_face(side / 2, f, l);
        }
    }

    /// Swaps `In` and `Out` everywhere.
    pub fn flipped(&self) -> LocationMap {
        let mut m = self.clone();
        m.cells.iter_mut().for_each(|l| *l = l.flipped());
        m.faces.iter_mut().for_each(|l| *l = l.flipped());
        m
    }
}

/// Axis and global low corner of the face on `side` of a cell.
pub fn face_of(ijk: [usize; 3], side: usize) -> (usize, [usize; 3]) {
    let axis = side / 2;
    let mut f = ijk;
    f[axis] += side % 2;
    (axis, f)
}

/// Global low corners of the faces on one side of a block, x fastest.
pub fn block_side_faces(block: &CellBlock, side: usize) -> impl Iterator<Item = [usize; 3]> {
    let axis = side / 2;
    let mut lo = block.lo;
    let mut hi = block.hi;
    let at = if side.is_multiple_of(2) {
        block.lo[axis]
    } else {
        block.hi[axis]
    };
    lo[axis] = at;
    hi[axis] = at + 1;
    let plate = CellBlock { lo, hi };
    plate.cells().collect::<Vec<_>>().into_iter()
}

/// Location map over `block` with the cut cells marked and their face seeds
/// merged in. Cuts outside the block are ignored.
pub fn seed_locations(dims: GridDims, block: CellBlock, cuts: &[CellCut]) -> Result<LocationMap, ClassifyError> {
    let mut map = LocationMap::new(dims, block);
    seed_into(&mut map, cuts)?;
    Ok(map)
}

pub fn seed_into(map: &mut LocationMap, cuts: &[CellCut]) -> Result<(), ClassifyError> {
    for cut in cuts {
        if !map.block.contains(cut.ijk) {
            continue;
        }
        map.set_cell(cut.ijk, Location::Cut);
        for (side, &seed) in cut.face_seeds.iter().enumerate() {
            let (axis, f) = face_of(cut.ijk, side);
            map.merge_face(axis, f, seed)?;
        }
    }
    Ok(())
}

/// Traversal order of the propagation; the result does not depend on it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Strategy {
    #[default]
    DepthFirst,
    BreadthFirst,
}

/// Cells of the map's block taking part in a propagation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Scope {
    All,
    /// Indexed by block-local cell index.
    Mask(Vec<bool>),
}

impl Scope {
    pub fn cells(block: &CellBlock, cells: impl IntoIterator<Item = [usize; 3]>) -> Scope {
        let mut mask = vec![false; block.count()];
        for c in cells {
            mask[block.local_index(c)] = true;
        }
        Scope::Mask(mask)
    }

    fn contains(&self, local: usize) -> bool {
        match self {
            Scope::All => true,
            Scope::Mask(m) => m[local],
        }
    }
}

struct Frontier {
    items: VecDeque<usize>,
    strategy: Strategy,
}

impl Frontier {
    fn push(&mut self, x: usize) {
        self.items.push_back(x);
    }

    fn pop(&mut self) -> Option<usize> {
        match self.strategy {
            Strategy::DepthFirst => self.items.pop_back(),
            Strategy::BreadthFirst => self.items.pop_front(),
        }
    }
}

/// Spreads `In`/`Out` from labelled faces and cells to the uncut, undefined
/// cells of `scope` and to their undefined faces. Cut cells and cut faces
/// stop the spread. Only the grid's integer dimensions are read from
/// `mesh`.
pub fn propagate_location(
    mesh: &BackgroundMesh,
    seeds: &LocationMap,
    scope: &Scope,
    strategy: Strategy,
) -> Result<LocationMap, ClassifyError> {
    assert_eq!(mesh.dims(), seeds.dims, "location map belongs to another grid");
    let mut map = seeds.clone();
    propagate_in_place(&mut map, scope, strategy)?;
    Ok(map)
}

pub fn propagate_in_place(map: &mut LocationMap, scope: &Scope, strategy: Strategy) -> Result<(), ClassifyError> {
    let block = map.block;
    let local = block.dims();
    let mut frontier = Frontier {
        items: VecDeque::new(),
        strategy,
    };

    // labelled in-scope cells hand their label to their undefined faces
    for c in 0..local.cell_count() {
        let loc = map.cells[c];
        if !scope.contains(c) || !loc.is_in_or_out() {
            continue;
        }
        label_faces(map, local, local.cell_ijk(c), loc, &mut frontier)?;
    }
    for (f, l) in map.faces.iter().enumerate() {
        if l.is_in_or_out() {
            frontier.push(f);
        }
    }

    while let Some(f) = frontier.pop() {
        let loc = map.faces[f];
        for c in local.face_cells(f).into_iter().flatten() {
            let ci = local.cell_index(c);
            if !scope.contains(ci) {
                continue;
            }
            match map.cells[ci] {
                Location::Cut => {}
                Location::Undefined => {
                    map.cells[ci] = loc;
                    label_faces(map, local, c, loc, &mut frontier)?;
                }
                l if l == loc => {}
                _ => {
                    return Err(ClassifyError::InconsistentOrientation {
                        ijk: std::array::from_fn(|a| c[a] + block.lo[a]),
                    })
                }
            }
        }
    }
    Ok(())
}

fn label_faces(
    map: &mut LocationMap,
    local: GridDims,
    c: [usize; 3],
    loc: Location,
    frontier: &mut Frontier,
) -> Result<(), ClassifyError> {
    for f in local.cell_faces(c) {
        match map.faces[f] {
            Location::Undefined => {
                map.faces[f] = loc;
                frontier.push(f);
            }
            Location::Cut => {}
            l if l == loc => {}
            _ => {
                return Err(ClassifyError::InconsistentOrientation {
                    ijk: std::array::from_fn(|a| c[a] + map.block.lo[a]),
                })
            }
        }
    }
    Ok(())
}

/// Labels cell `ijk` and floods from it.
pub(crate) fn fill_from(
    map: &mut LocationMap,
    ijk: [usize; 3],
    loc: Location,
    scope: &Scope,
    strategy: Strategy,
) -> Result<(), ClassifyError> {
    map.set_cell(ijk, loc);
    propagate_in_place(map, scope, strategy)
}

/// Resolves every undefined cell of `scope` by one crossing-count query per
/// remaining component, taken at the lowest undefined cell's center.
pub fn resolve_undefined(
    map: &mut LocationMap,
    mesh: &BackgroundMesh,
    surface: &SurfaceMesh,
    scope: &Scope,
    strategy: Strategy,
    tol: f64,
) -> Result<usize, ClassifyError> {
    let mut queries = 0;
    loop {
        let next = map
            .cells()
            .enumerate()
            .find(|(i, (_, l))| *l == Location::Undefined && scope.contains(*i))
            .map(|(_, (c, _))| c);
        let Some(c) = next else {
            return Ok(queries);
        };
        let inside = point_in_solid(surface, &mesh.cell_center(c), tol)?;
        queries += 1;
        let loc = if inside { Location::In } else { Location::Out };
        fill_from(map, c, loc, scope, strategy)?;
    }
}

/// Labels every cell of the mesh from a complete set of cuts.
pub fn classify_serial(
    mesh: &BackgroundMesh,
    surface: &SurfaceMesh,
    cuts: &[CellCut],
    strategy: Strategy,
    tol: f64,
) -> Result<LocationMap, ClassifyError> {
    let mut map = seed_locations(mesh.dims(), CellBlock::whole(mesh.dims()), cuts)?;
    propagate_in_place(&mut map, &Scope::All, strategy)?;
    resolve_undefined(&mut map, mesh, surface, &Scope::All, strategy, tol)?;
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Point, Vector};

    fn row_mesh(n: [usize; 3]) -> BackgroundMesh {
        BackgroundMesh::new(Point::origin(), Vector::repeat(1.0), n).unwrap()
    }

    fn slab_seeds(dims: GridDims, cut: [usize; 3]) -> LocationMap {
        let mut m = LocationMap::whole(dims);
        m.set_cell(cut, Location::Cut);
        let seeds = [
            Location::In,
            Location::Out,
            Location::Cut,
            Location::Cut,
            Location::Cut,
            Location::Cut,
        ];
        for (side, s) in seeds.into_iter().enumerate() {
            let (a, f) = face_of(cut, side);
            m.set_face(a, f, s);
        }
        m
    }

    #[test]
    fn merge_rules() {
        use Location::*;
        assert_eq!(Undefined.merge(In), Some(In));
        assert_eq!(Out.merge(Undefined), Some(Out));
        assert_eq!(In.merge(Cut), Some(Cut));
        assert_eq!(In.merge(In), Some(In));
        assert_eq!(In.merge(Out), None);
        for b in 0..4 {
            assert_eq!(Location::from_u8(b).unwrap() as u8, b);
        }
        assert!(Location::from_u8(4).is_none());
    }

    #[test]
    fn row_flood() {
        let mesh = row_mesh([4, 1, 1]);
        let seeds = slab_seeds(mesh.dims(), [1, 0, 0]);
        let out = propagate_location(&mesh, &seeds, &Scope::All, Strategy::DepthFirst).unwrap();
        let labels: Vec<_> = out.cells().map(|(_, l)| l).collect();
        assert_eq!(labels, [Location::In, Location::Cut, Location::Out, Location::Out]);
        // fixpoint
        let again = propagate_location(&mesh, &out, &Scope::All, Strategy::BreadthFirst).unwrap();
        assert_eq!(again, out);
    }

    #[test]
    fn ring_around_cut_center() {
        let mesh = row_mesh([3, 3, 1]);
        let mut seeds = LocationMap::whole(mesh.dims());
        seeds.set_cell([1, 1, 0], Location::Cut);
        for side in 0..4 {
            let (a, f) = face_of([1, 1, 0], side);
            seeds.set_face(a, f, Location::Out);
        }
        for side in 4..6 {
            let (a, f) = face_of([1, 1, 0], side);
            seeds.set_face(a, f, Location::Cut);
        }
        let out = propagate_location(&mesh, &seeds, &Scope::All, Strategy::BreadthFirst).unwrap();
        assert_eq!(out.counts(), [0, 8, 1, 0]);
    }

    #[test]
    fn scope_limits_writes() {
        let mesh = row_mesh([4, 1, 1]);
        let seeds = slab_seeds(mesh.dims(), [1, 0, 0]);
        let scope = Scope::cells(&CellBlock::whole(mesh.dims()), [[0, 0, 0], [1, 0, 0], [2, 0, 0]]);
        let out = propagate_location(&mesh, &seeds, &scope, Strategy::DepthFirst).unwrap();
        assert_eq!(out.cell([3, 0, 0]), Location::Undefined);
        assert_eq!(out.cell([2, 0, 0]), Location::Out);
    }

    #[test]
    fn conflicting_seeds_fail() {
        let mesh = row_mesh([3, 1, 1]);
        let mut seeds = LocationMap::whole(mesh.dims());
        seeds.set_face(0, [0, 0, 0], Location::In);
        seeds.set_face(0, [3, 0, 0], Location::Out);
        let err = propagate_location(&mesh, &seeds, &Scope::All, Strategy::DepthFirst).unwrap_err();
        assert!(matches!(err, ClassifyError::InconsistentOrientation { .. }));
    }

    #[test]
    fn sub_block_maps() {
        let dims = GridDims::new([4, 4, 4]);
        let block = CellBlock {
            lo: [2, 0, 0],
            hi: [4, 4, 2],
        };
        let mut m = LocationMap::new(dims, block);
        m.set_face(0, [2, 1, 1], Location::In);
        assert_eq!(m.boundary_faces(0).iter().filter(|&&l| l == Location::In).count(), 1);
        m.set_face(0, [4, 3, 1], Location::Out);
        let plus_x = m.boundary_faces(1);
        assert_eq!(plus_x.len(), 8);
        assert_eq!(plus_x[3 + 4], Location::Out);
        let mut other = LocationMap::new(dims, block);
        other.set_boundary_faces(1, &plus_x);
        assert_eq!(other.face(0, [4, 3, 1]), Location::Out);
    }
}
