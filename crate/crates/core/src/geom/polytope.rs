use std::collections::{BTreeMap, HashMap, HashSet};

use super::polygon::{crossing, polygon_area, polygon_normal};
use super::{classify, Plane, Side};
use crate::surface::Aabb;
use crate::Point;

/// What generated a polytope face.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaceTag {
    Untagged,
    /// One of the six faces of the background cell: `2 * axis + (0 for the
    /// low side, 1 for the high side)`.
    CellFace(u8),
    /// Cap produced by the plane of a surface facet.
    Facet(u32),
    /// Cap produced by an auxiliary splitting plane.
    Split,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Face {
    /// Counter-clockwise seen from outside.
    pub vertices: Vec<u32>,
    pub tag: FaceTag,
}

/// Convex polytope in boundary representation.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polytope {
    vertices: Vec<Point>,
    faces: Vec<Face>,
}

const CUBOID_FACES: [[u32; 4]; 6] = [
    [0, 4, 6, 2],
    [1, 3, 7, 5],
    [0, 1, 5, 4],
    [2, 6, 7, 3],
    [0, 2, 3, 1],
    [4, 5, 7, 6],
];

impl Polytope {
    pub fn empty() -> Self {
        Polytope::default()
    }

    /// Box with faces tagged `CellFace(0..6)` in the order -x, +x, -y, +y,
    /// -z, +z.
    pub fn cuboid(min: Point, max: Point) -> Self {
        let vertices = (0..8u32)
            .map(|i| {
                Point::new(
                    if i & 1 == 0 { min.x } else { max.x },
                    if i & 2 == 0 { min.y } else { max.y },
                    if i & 4 == 0 { min.z } else { max.z },
                )
            })
            .collect();
        let faces = CUBOID_FACES
            .iter()
            .enumerate()
            .map(|(side, f)| Face {
                vertices: f.to_vec(),
                tag: FaceTag::CellFace(side as u8),
            })
            .collect();
        Polytope { vertices, faces }
    }

    pub fn tetrahedron(p: [Point; 4]) -> Self {
        let mut faces = vec![[0u32, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]];
        if (p[1] - p[0]).cross(&(p[2] - p[0])).dot(&(p[3] - p[0])) < 0.0 {
            for f in &mut faces {
                f.swap(1, 2);
            }
        }
        Polytope {
            vertices: p.to_vec(),
            faces: faces
                .into_iter()
                .map(|f| Face {
                    vertices: f.to_vec(),
                    tag: FaceTag::Untagged,
                })
                .collect(),
        }
    }

    pub fn from_parts(vertices: Vec<Point>, faces: Vec<Face>) -> Self {
        Polytope { vertices, faces }
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face_points(&self, face: usize) -> Vec<Point> {
        self.faces[face]
            .vertices
            .iter()
            .map(|&i| self.vertices[i as usize])
            .collect()
    }

    pub fn face_plane(&self, face: usize) -> Option<Plane> {
        let pts = self.face_points(face);
        let n = polygon_normal(&pts);
        let c = pts.iter().fold(Point::origin(), |acc, p| acc + p.coords) / pts.len() as f64;
        Plane::through(&c, n)
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len().max(1) as f64;
        self.vertices.iter().fold(Point::origin(), |acc, p| acc + p.coords) / n
    }

    pub fn bounds(&self) -> Option<Aabb> {
        Aabb::from_points(&self.vertices)
    }

    pub fn volume(&self) -> f64 {
        self.tetrahedra()
            .iter()
            .map(|[a, b, c, d]| (b - a).cross(&(c - a)).dot(&(d - a)) / 6.0)
            .sum::<f64>()
            .max(0.0)
    }

    pub fn face_area(&self, face: usize) -> f64 {
        polygon_area(&self.face_points(face))
    }

    /// Centroid fan: one tetrahedron per triangle of each face fan, with
    /// the vertex mean as apex. Positively oriented for a valid polytope.
    pub fn tetrahedra(&self) -> Vec<[Point; 4]> {
        if self.is_empty() {
            return Vec::new();
        }
        let c = self.centroid();
        let mut out = Vec::new();
        for f in &self.faces {
            let v0 = self.vertices[f.vertices[0] as usize];
            for w in f.vertices[1..].windows(2) {
                out.push([c, v0, self.vertices[w[0] as usize], self.vertices[w[1] as usize]]);
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        let mut edges = HashSet::new();
        for f in &self.faces {
            for k in 0..f.vertices.len() {
                let (a, b) = (f.vertices[k], f.vertices[(k + 1) % f.vertices.len()]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        edges.len()
    }

    /// `V - E + F`; 2 for any nonempty valid polytope.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count() as i64 + self.faces.len() as i64
    }

    /// Every face has three or more vertices and is planar within `tol`,
    /// and every vertex lies on the inner side of every face plane.
    pub fn is_convex(&self, tol: f64) -> bool {
        (0..self.faces.len()).all(|f| {
            if self.faces[f].vertices.len() < 3 {
                return false;
            }
            let Some(plane) = self.face_plane(f) else {
                return false;
            };
            self.faces[f]
                .vertices
                .iter()
                .all(|&i| plane.signed_distance(&self.vertices[i as usize]).abs() <= tol)
                && self.vertices.iter().all(|v| plane.signed_distance(v) <= tol)
        })
    }

    /// Intersection with the closed half-space `{x : plane(x) <= 0}`.
    /// The new cap face carries `cap`.
    pub fn clip(&self, plane: &Plane, tol: f64, cap: FaceTag) -> Polytope {
        if self.is_empty() {
            return Polytope::empty();
        }
        let d: Vec<f64> = self.vertices.iter().map(|v| plane.signed_distance(v)).collect();
        let s: Vec<Side> = d.iter().map(|&x| classify(x, tol)).collect();
        if s.iter().all(|&x| x != Side::Positive) {
            return self.clone();
        }
        if s.iter().all(|&x| x != Side::Negative) {
            return Polytope::empty();
        }

        let mut vertices = Vec::with_capacity(self.vertices.len() + 4);
        let mut on_plane = Vec::with_capacity(self.vertices.len() + 4);
        let mut remap = vec![u32::MAX; self.vertices.len()];
        for (i, v) in self.vertices.iter().enumerate() {
            match s[i] {
                Side::Positive => {}
                Side::Negative => {
                    remap[i] = vertices.len() as u32;
                    vertices.push(*v);
                    on_plane.push(false);
                }
                Side::On => {
                    remap[i] = vertices.len() as u32;
                    vertices.push(plane.project(v));
                    on_plane.push(true);
                }
            }
        }

        let mut crossings: HashMap<(u32, u32), u32> = HashMap::new();
        let mut faces = Vec::with_capacity(self.faces.len() + 1);
        // cap edge q -> p for every kept face edge p -> q lying in the plane
        let mut cap_next: BTreeMap<u32, u32> = BTreeMap::new();
        let mut cap_consistent = true;
        for face in &self.faces {
            let m = face.vertices.len();
            let mut out = Vec::with_capacity(m + 1);
            for k in 0..m {
                let a = face.vertices[k] as usize;
                let b = face.vertices[(k + 1) % m] as usize;
                if s[a] != Side::Positive {
                    out.push(remap[a]);
                }
                let crosses = matches!(
                    (s[a], s[b]),
                    (Side::Negative, Side::Positive) | (Side::Positive, Side::Negative)
                );
                if crosses {
                    let key = (a.min(b) as u32, a.max(b) as u32);
                    let idx = *crossings.entry(key).or_insert_with(|| {
                        vertices.push(crossing(&self.vertices[a], d[a], &self.vertices[b], d[b], plane));
                        on_plane.push(true);
                        (vertices.len() - 1) as u32
                    });
                    out.push(idx);
                }
            }
            if out.len() < 3 {
                continue;
            }
            for k in 0..out.len() {
                let (p, q) = (out[k], out[(k + 1) % out.len()]);
                if on_plane[p as usize] && on_plane[q as usize] && cap_next.insert(q, p).is_some() {
                    cap_consistent = false;
                }
            }
            faces.push(Face {
                vertices: out,
                tag: face.tag,
            });
        }

        let cap_cycle = cap_consistent
            .then(|| chain(&cap_next))
            .flatten()
            .unwrap_or_else(|| angular_cap(&vertices, &faces, &on_plane, plane));
        if cap_cycle.len() >= 3 {
            faces.push(Face {
                vertices: cap_cycle,
                tag: cap,
            });
        }
        compact(vertices, faces)
    }

    /// `(negative part, positive part)`; both caps carry `cap`.
    pub fn split(&self, plane: &Plane, tol: f64, cap: FaceTag) -> (Polytope, Polytope) {
        (self.clip(plane, tol, cap), self.clip(&plane.flipped(), tol, cap))
    }
}

fn chain(next: &BTreeMap<u32, u32>) -> Option<Vec<u32>> {
    let (&start, _) = next.iter().next()?;
    let mut cycle = vec![start];
    let mut cur = *next.get(&start)?;
    while cur != start {
        if cycle.len() > next.len() {
            return None;
        }
        cycle.push(cur);
        cur = *next.get(&cur)?;
    }
    (cycle.len() == next.len()).then_some(cycle)
}

/// Cap ordered by angle around its centroid; used when face edges do not
/// chain into a single cycle (tolerance-level degeneracies).
fn angular_cap(vertices: &[Point], faces: &[Face], on_plane: &[bool], plane: &Plane) -> Vec<u32> {
    let mut ids: Vec<u32> = faces
        .iter()
        .flat_map(|f| f.vertices.iter().copied())
        .filter(|&i| on_plane[i as usize])
        .collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() < 3 {
        return Vec::new();
    }
    let n = plane.normal();
    let c = ids
        .iter()
        .fold(Point::origin(), |acc, &i| acc + vertices[i as usize].coords)
        / ids.len() as f64;
    let u = if n.x.abs() < 0.9 {
        n.cross(&crate::Vector::x())
    } else {
        n.cross(&crate::Vector::y())
    }
    .normalize();
    let v = n.cross(&u);
    let angle = |i: u32| {
        let r = vertices[i as usize] - c;
        r.dot(&v).atan2(r.dot(&u))
    };
    ids.sort_by(|&a, &b| angle(a).total_cmp(&angle(b)));
    ids
}

fn compact(vertices: Vec<Point>, mut faces: Vec<Face>) -> Polytope {
    let mut used = vec![u32::MAX; vertices.len()];
    let mut kept = Vec::with_capacity(vertices.len());
    for f in &mut faces {
        for i in &mut f.vertices {
            let slot = &mut used[*i as usize];
            if *slot == u32::MAX {
                *slot = kept.len() as u32;
                kept.push(vertices[*i as usize]);
            }
            *i = *slot;
        }
    }
    Polytope { vertices: kept, faces }
}

/// `p` intersected with `{x : h(x) <= 0}`; untagged cap.
pub fn clip_half_space(p: &Polytope, h: &Plane, tol: f64) -> Polytope {
    p.clip(h, tol, FaceTag::Untagged)
}

pub fn polytope_volume(p: &Polytope) -> f64 {
    p.volume()
}

pub fn polytope_face_area(p: &Polytope, face: usize) -> f64 {
    p.face_area(face)
}
