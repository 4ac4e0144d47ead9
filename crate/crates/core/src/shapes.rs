//! Closed test solids with known measures.

use std::collections::HashMap;

use crate::surface::SurfaceMesh;
use crate::{Point, Vector};

fn build(vertices: Vec<Point>, facets: Vec<[u32; 3]>) -> SurfaceMesh {
    SurfaceMesh::new(vertices, facets, None)
        .expect("generated solids are valid")
        .0
}

const CUBE_QUADS: [[u32; 4]; 6] = [
    [0, 4, 6, 2],
    [1, 3, 7, 5],
    [0, 1, 5, 4],
    [2, 6, 7, 3],
    [0, 2, 3, 1],
    [4, 5, 7, 6],
];

/// Axis-aligned box as 12 outward-wound triangles.
pub fn cuboid(min: Point, max: Point) -> SurfaceMesh {
    let vertices = (0..8u32)
        .map(|i| {
            Point::new(
                if i & 1 == 0 { min.x } else { max.x },
                if i & 2 == 0 { min.y } else { max.y },
                if i & 4 == 0 { min.z } else { max.z },
            )
        })
        .collect();
    let facets = CUBE_QUADS
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    build(vertices, facets)
}

pub fn unit_cube() -> SurfaceMesh {
    cuboid(Point::origin(), Point::new(1.0, 1.0, 1.0))
}

/// Unit cube with its last triangle removed: three open edges.
pub fn unit_cube_missing_facet() -> SurfaceMesh {
    let cube = unit_cube();
    let mut facets = cube.facets().to_vec();
    facets.pop();
    build(cube.vertices().to_vec(), facets)
}

pub fn single_triangle() -> SurfaceMesh {
    build(
        vec![Point::origin(), Point::new(1.0, 0.0, 0.0), Point::new(0.0, 1.0, 0.0)],
        vec![[0, 1, 2]],
    )
}

/// The corner tetrahedron (0,0,0), e_x, e_y, e_z; volume 1/6.
pub fn tetrahedron() -> SurfaceMesh {
    build(
        vec![
            Point::origin(),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.0, 0.0, 1.0),
        ],
        vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]],
    )
}

/// Unit-radius icosphere with `20 * 4^level` facets.
pub fn icosphere(level: u32) -> SurfaceMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point::from(Vector::new(x, y, z).normalize()))
    .collect();
    let mut facets: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, vertices: &mut Vec<Point>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let m = (vertices[a as usize].coords + vertices[b as usize].coords).normalize();
                vertices.push(Point::from(m));
                (vertices.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(facets.len() * 4);
        for [a, b, c] in facets {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        facets = next;
    }
    build(vertices, facets)
}

/// Right prism over a counter-clockwise polygon in the xy plane. The
/// polygon must be star-shaped with respect to its first vertex, which
/// anchors the cap fans.
pub fn prism(polygon: &[(f64, f64)], z0: f64, z1: f64) -> SurfaceMesh {
    let n = polygon.len() as u32;
    let mut vertices = Vec::with_capacity(2 * polygon.len());
    for &z in &[z0, z1] {
        vertices.extend(polygon.iter().map(|&(x, y)| Point::new(x, y, z)));
    }
    let mut facets = Vec::new();
    for i in 1..n - 1 {
        facets.push([0, i + 1, i]);
        facets.push([n, n + i, n + i + 1]);
    }
    for i in 0..n {
        let j = (i + 1) % n;
        facets.push([i, j, n + j]);
        facets.push([i, n + j, n + i]);
    }
    build(vertices, facets)
}

/// L-shaped prism: one reflex edge running along z at (0.43, 0.37).
/// Volume 0.6391 * 0.71.
pub fn l_prism() -> SurfaceMesh {
    prism(
        &[
            (0.0, 0.0),
            (1.0, 0.0),
            (1.0, 0.37),
            (0.43, 0.37),
            (0.43, 1.0),
            (0.0, 1.0),
        ],
        0.0,
        0.71,
    )
}

pub const L_PRISM_VOLUME: f64 = (1.0 * 0.37 + 0.43 * 0.63) * 0.71;
