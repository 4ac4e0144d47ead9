use proptest::prelude::*;

use cutcell::surface::surface_measures;
use cutcell::{pipeline, shapes, Point, RunConfig, Vector};

fn run(s: &cutcell::surface::SurfaceMesh, cells: [usize; 3]) -> cutcell::EmbeddedDiscretisation {
    pipeline::run(
        s,
        &RunConfig {
            cells,
            ..RunConfig::default()
        },
    )
    .unwrap()
}

#[test]
fn slab_counts() {
    // 1 x 1 x 0.3 slab: volume 0.3, area 2 * (1 + 0.3 + 0.3)
    let s = shapes::cuboid(Point::origin(), Point::new(1.0, 1.0, 0.3));
    let d = run(&s, [7, 7, 7]);
    let m = d.measures;
    assert!((m.v_interior - 0.3).abs() < 1e-13);
    assert!((m.a_boundary - 3.2).abs() < 1e-13);
    assert_eq!(d.counts().undefined, 0);
    assert_eq!(d.counts().cut + d.counts().interior + d.counts().exterior, 343);
}

#[test]
fn tetrahedron_and_l_prism_measures() {
    for (s, v, a) in [
        (shapes::tetrahedron(), 1.0 / 6.0, 1.5 + 3f64.sqrt() / 2.0),
        (
            shapes::l_prism(),
            shapes::L_PRISM_VOLUME,
            surface_measures(&shapes::l_prism()).surface_area,
        ),
    ] {
        for n in [5, 9, 16] {
            let m = run(&s, [n, n + 1, n + 2]).measures;
            assert!((m.v_interior - v).abs() < 1e-12 * v, "{n}: {}", m.v_interior);
            assert!((m.a_boundary - a).abs() < 1e-12 * a);
            assert!(m.e_bbox < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // any box on any grid: the cut measures reproduce the analytic ones
    #[test]
    fn random_boxes(
        lo in (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64),
        ext in (0.05..3.0f64, 0.05..3.0f64, 0.05..3.0f64),
        cells in (2usize..14, 2usize..14, 2usize..14),
        enlargement in 0.05..1.0f64,
    ) {
        let min = Point::new(lo.0, lo.1, lo.2);
        let e = Vector::new(ext.0, ext.1, ext.2);
        let s = shapes::cuboid(min, min + e);
        let d = pipeline::run(&s, &RunConfig {
            cells: [cells.0, cells.1, cells.2],
            enlargement,
            ..RunConfig::default()
        }).unwrap();
        let v = e.x * e.y * e.z;
        let a = 2.0 * (e.x * e.y + e.y * e.z + e.x * e.z);
        prop_assert!((d.measures.v_interior - v).abs() <= 1e-11 * v);
        prop_assert!((d.measures.a_boundary - a).abs() <= 1e-11 * a);
        prop_assert!(d.measures.e_bbox < 1e-12);
        prop_assert_eq!(d.counts().undefined, 0);
    }
}
