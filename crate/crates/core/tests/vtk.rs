use std::collections::BTreeMap;

use cutcell::background::BackgroundMesh;
use cutcell::classify::{Location, LocationMap};
use cutcell::vtk::{export_vtk, write_boundary, write_interior, Format};
use cutcell::{pipeline, shapes, EmbeddedDiscretisation, Measures, Point, RunConfig, Vector};

struct Parsed {
    points: Vec<Point>,
    cells: Vec<Vec<usize>>,
    types: Vec<u8>,
}

fn parse_ascii(text: &str) -> Parsed {
    let mut lines = text.lines();
    let mut points = Vec::new();
    let mut cells = Vec::new();
    let mut types = Vec::new();
    assert_eq!(lines.next(), Some("# vtk DataFile Version 3.0"));
    lines.next();
    assert_eq!(lines.next(), Some("ASCII"));
    while let Some(l) = lines.next() {
        let w: Vec<&str> = l.split_whitespace().collect();
        match w.first().copied() {
            Some("POINTS") => {
                for _ in 0..w[1].parse::<usize>().unwrap() {
                    let v: Vec<f64> = lines.next().unwrap().split(' ').map(|x| x.parse().unwrap()).collect();
                    points.push(Point::new(v[0], v[1], v[2]));
                }
            }
            Some("CELLS") => {
                for _ in 0..w[1].parse::<usize>().unwrap() {
                    let v: Vec<usize> = lines.next().unwrap().split(' ').map(|x| x.parse().unwrap()).collect();
                    assert_eq!(v[0], v.len() - 1);
                    cells.push(v[1..].to_vec());
                }
            }
            Some("CELL_TYPES") => {
                for _ in 0..w[1].parse::<usize>().unwrap() {
                    types.push(lines.next().unwrap().parse().unwrap());
                }
            }
            _ => {}
        }
    }
    Parsed { points, cells, types }
}

fn tet_volume(p: &[Point]) -> f64 {
    (p[1] - p[0]).cross(&(p[2] - p[0])).dot(&(p[3] - p[0])) / 6.0
}

fn render(
    disc: &EmbeddedDiscretisation,
    f: fn(&EmbeddedDiscretisation, Format, &mut Vec<u8>) -> std::io::Result<()>,
) -> String {
    let mut buf = Vec::new();
    f(disc, Format::Ascii, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

fn slab() -> EmbeddedDiscretisation {
    let s = shapes::cuboid(Point::new(0.0, 0.0, 0.0), Point::new(1.0, 1.0, 0.3));
    pipeline::run(
        &s,
        &RunConfig {
            cells: [6, 6, 6],
            ..RunConfig::default()
        },
    )
    .unwrap()
}

#[test]
fn interior_volume_resums() {
    for disc in [
        slab(),
        pipeline::run(
            &shapes::l_prism(),
            &RunConfig {
                cells: [7; 3],
                ..RunConfig::default()
            },
        )
        .unwrap(),
    ] {
        let v = parse_ascii(&render(&disc, |d, f, w| write_interior(d, f, w)));
        let mut total = 0.0;
        for (ids, &t) in v.cells.iter().zip(&v.types) {
            let p: Vec<Point> = ids.iter().map(|&i| v.points[i]).collect();
            total += match t {
                10 => {
                    let vol = tet_volume(&p);
                    assert!(vol >= 0.0);
                    vol
                }
                12 => {
                    let e = p[6] - p[0];
                    e.x * e.y * e.z
                }
                _ => panic!("cell type {t}"),
            };
        }
        let expect = disc.measures.v_interior;
        assert!((total - expect).abs() <= 1e-12 * expect, "{total} vs {expect}");
    }
}

#[test]
fn boundary_triangle_count() {
    let disc = slab();
    let expect: usize = disc.boundary_pieces().map(|p| p.polygon.len() - 2).sum();
    let v = parse_ascii(&render(&disc, |d, f, w| write_boundary(d, f, w)));
    assert_eq!(v.cells.len(), expect);
    assert!(v.types.iter().all(|&t| t == 5));
    let area: f64 = v
        .cells
        .iter()
        .map(|c| {
            0.5 * (v.points[c[1]] - v.points[c[0]])
                .cross(&(v.points[c[2]] - v.points[c[0]]))
                .norm()
        })
        .sum();
    assert!((area - disc.measures.a_boundary).abs() < 1e-12 * area);
}

#[test]
fn empty_interior_is_a_valid_file() {
    let mesh = BackgroundMesh::new(Point::origin(), Vector::repeat(1.0), [2, 2, 2]).unwrap();
    let mut map = LocationMap::whole(mesh.dims());
    for c in 0..8 {
        map.set_cell(mesh.dims().cell_ijk(c), Location::Out);
    }
    let measures = Measures::compute(&mesh, &map, &[], None);
    let disc = EmbeddedDiscretisation {
        mesh,
        parts: [1; 3],
        map,
        cuts: Vec::new(),
        measures,
        timings: BTreeMap::new(),
        trace: Vec::new(),
    };
    let text = render(&disc, |d, f, w| write_interior(d, f, w));
    assert!(text.contains("POINTS 0 double\nCELLS 0 0\nCELL_TYPES 0\n"), "{text}");
    assert_eq!(parse_ascii(&text).cells.len(), 0);
}

#[test]
fn files_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let disc = slab();
    for format in [Format::Ascii, Format::Binary] {
        let [a, b] = export_vtk(&disc, &dir.path().join(format!("{format:?}")), format).unwrap();
        assert!(std::fs::metadata(&a).unwrap().len() > 0);
        assert!(std::fs::metadata(&b).unwrap().len() > 0);
    }
    let bin = std::fs::read(dir.path().join("Binary/interior.vtk")).unwrap();
    assert!(bin.starts_with(b"# vtk DataFile Version 3.0\n"));
    assert!(bin.windows(6).any(|w| w == b"BINARY"));
}
