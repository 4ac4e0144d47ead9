use super::PreparedSurface;
use crate::geom::{
    plane_through_reflex_edge, point_polygon_distance, polygon_area, split_polygon, FaceTag, Plane, Polytope,
};

/// A surface facet clipped to the current cell piece.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchFacet {
    pub facet: u32,
    pub polygon: Vec<crate::Point>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartKind {
    /// The piece holds a convex sub-patch and must be clipped by it.
    Cut,
    /// No surface in the piece; it lies wholly inside.
    Inside,
    /// No surface in the piece; it lies wholly outside.
    Outside,
}

/// Convex cell piece with the convex sub-patch it contains.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPart {
    pub piece: Polytope,
    pub patch: Vec<PatchFacet>,
    pub kind: PartKind,
}

/// Splits `piece` and `patch` until every sub-patch is convex. Splitting
/// planes pass through reflex edges of the patch (lowest edge index
/// first); when pieces of the patch are convex locally but not globally
/// (several sheets in one piece) the plane of the lowest offending facet is
/// used. Errs with the depth reached when it exceeds `max_depth`.
pub fn convex_decompose(
    piece: &Polytope,
    patch: Vec<PatchFacet>,
    surface: &PreparedSurface,
    tol: f64,
    area_eps: f64,
    max_depth: usize,
) -> Result<Vec<ConvexPart>, usize> {
    let mut out = Vec::new();
    recurse(piece.clone(), patch, surface, tol, area_eps, max_depth, 0, &mut out)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    piece: Polytope,
    patch: Vec<PatchFacet>,
    surface: &PreparedSurface,
    tol: f64,
    area_eps: f64,
    max_depth: usize,
    depth: usize,
    out: &mut Vec<ConvexPart>,
) -> Result<(), usize> {
    if depth > max_depth {
        return Err(depth);
    }
    let mut candidates: Vec<Plane> = reflex_planes(&patch, surface, tol);
    let violating = violating_facet(&patch, surface, tol);
    if candidates.is_empty() && violating.is_none() {
        out.push(ConvexPart {
            piece,
            patch,
            kind: PartKind::Cut,
        });
        return Ok(());
    }
    if let Some(f) = violating {
        candidates.push(*surface.plane(f));
    }
    for plane in candidates {
        let (neg_patch, pos_patch) = split_patch(&patch, &plane, tol, area_eps);
        if neg_patch.is_empty() || pos_patch.is_empty() {
            continue;
        }
        let (neg, pos) = piece.split(&plane, tol, FaceTag::Split);
        if neg.is_empty() || pos.is_empty() {
            continue;
        }
        for (child, child_patch) in [(neg, neg_patch), (pos, pos_patch)] {
            recurse(child, child_patch, surface, tol, area_eps, max_depth, depth + 1, out)?;
        }
        return Ok(());
    }
    // only a split leaving one side without surface is left: take it and
    // fill the empty side from the nearest surface
    let plane = *surface.plane(violating.unwrap_or(patch[0].facet));
    let (neg_patch, pos_patch) = split_patch(&patch, &plane, tol, area_eps);
    let (neg, pos) = piece.split(&plane, tol, FaceTag::Split);
    if neg.is_empty() || pos.is_empty() {
        return Err(depth);
    }
    for (child, child_patch) in [(neg, neg_patch), (pos, pos_patch)] {
        if child_patch.is_empty() {
            let kind = fill_kind(&child, &patch, surface, tol);
            out.push(ConvexPart {
                piece: child,
                patch: Vec::new(),
                kind,
            });
        } else {
            recurse(child, child_patch, surface, tol, area_eps, max_depth, depth + 1, out)?;
        }
    }
    Ok(())
}

/// Splitting planes of the reflex edges shared by two facets of the patch,
/// by ascending edge index.
fn reflex_planes(patch: &[PatchFacet], surface: &PreparedSurface, tol: f64) -> Vec<Plane> {
    let topo = surface.topology();
    let present = |f: u32| patch.binary_search_by_key(&f, |p| p.facet).is_ok();
    let mut edges: Vec<u32> = patch
        .iter()
        .flat_map(|p| topo.facet_edges(p.facet as usize))
        .filter(|&e| surface.is_reflex(e as usize) && topo.edges()[e as usize].uses.iter().all(|u| present(u.facet)))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    edges
        .into_iter()
        .filter_map(|e| {
            let edge = &topo.edges()[e as usize];
            let (f1, f2) = crate::geom::reflex::edge_facets(topo, e as usize)?;
            let v = surface.mesh().vertices();
            let (a, b) = (v[edge.vertices[0] as usize], v[edge.vertices[1] as usize]);
            let n = surface.mesh().normals();
            plane_through_reflex_edge(&a, &b, &n[f1 as usize], &n[f2 as usize], tol)
        })
        .collect()
}

/// Lowest facet of the patch whose plane has another patch vertex strictly
/// on its positive side.
fn violating_facet(patch: &[PatchFacet], surface: &PreparedSurface, tol: f64) -> Option<u32> {
    patch.iter().map(|p| p.facet).find(|&f| {
        let plane = surface.plane(f);
        patch
            .iter()
            .flat_map(|q| q.polygon.iter())
            .any(|v| plane.signed_distance(v) > tol)
    })
}

/// Polygons lying in the plane go to the side their facet normal points
/// away from.
fn split_patch(patch: &[PatchFacet], plane: &Plane, tol: f64, area_eps: f64) -> (Vec<PatchFacet>, Vec<PatchFacet>) {
    let mut neg = Vec::new();
    let mut pos = Vec::new();
    for p in patch {
        if p.polygon.iter().all(|v| plane.signed_distance(v).abs() <= tol) {
            let normal = crate::geom::polygon_normal(&p.polygon);
            if normal.dot(&plane.normal()) > 0.0 {
                neg.push(p.clone());
            } else {
                pos.push(p.clone());
            }
            continue;
        }
        let (a, b) = split_polygon(&p.polygon, plane, tol);
        for (poly, side) in [(a, &mut neg), (b, &mut pos)] {
            if poly.len() >= 3 && polygon_area(&poly) > area_eps {
                side.push(PatchFacet {
                    facet: p.facet,
                    polygon: poly,
                });
            }
        }
    }
    (neg, pos)
}

/// Inside/outside status of a surface-free piece, from the side of the
/// nearest polygon of the parent patch. Among equally near polygons the
/// one with the clearest plane distance decides.
fn fill_kind(piece: &Polytope, parent: &[PatchFacet], surface: &PreparedSurface, tol: f64) -> PartKind {
    let c = piece.centroid();
    let samples = std::iter::once(c).chain(
        piece
            .vertices()
            .iter()
            .map(|v| crate::Point::from((c.coords + v.coords) / 2.0)),
    );
    for x in samples {
        let dist: Vec<f64> = parent.iter().map(|p| point_polygon_distance(&x, &p.polygon)).collect();
        let best = dist.iter().copied().fold(f64::INFINITY, f64::min);
        let d = parent
            .iter()
            .zip(&dist)
            .filter(|(_, &d)| d <= best + tol)
            .map(|(p, _)| surface.plane(p.facet).signed_distance(&x))
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(0.0);
        if d.abs() > tol {
            return if d > 0.0 { PartKind::Outside } else { PartKind::Inside };
        }
    }
    PartKind::Outside
}

/// Clips a convex part by the planes of its sub-patch, in facet order.
/// Returns the interior polytope, the removed exterior parts and the
/// number of half-space clips performed.
pub fn clip_piece(part: &ConvexPart, surface: &PreparedSurface, tol: f64) -> (Polytope, Vec<Polytope>, usize) {
    match part.kind {
        PartKind::Inside => return (part.piece.clone(), Vec::new(), 0),
        PartKind::Outside => return (Polytope::empty(), vec![part.piece.clone()], 0),
        PartKind::Cut => {}
    }
    let mut inside = part.piece.clone();
    let mut exterior = Vec::new();
    let mut ops = 0;
    let mut last: Option<u32> = None;
    for p in &part.patch {
        if last == Some(p.facet) || inside.is_empty() {
            continue;
        }
        last = Some(p.facet);
        let plane = surface.plane(p.facet);
        let (inn, out) = inside.split(plane, tol, FaceTag::Facet(p.facet));
        ops += 2;
        if !out.is_empty() {
            exterior.push(out);
        }
        inside = inn;
    }
    (inside, exterior, ops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::polygon_area;
    use crate::surface::SurfaceMesh;
    use crate::{shapes, Point, Vector};

    fn quad(mesh: &SurfaceMesh, f: u32) -> PatchFacet {
        PatchFacet {
            facet: f,
            polygon: mesh.triangle(f as usize).to_vec(),
        }
    }

    fn unit_cell() -> Polytope {
        Polytope::cuboid(Point::origin(), Point::new(1.0, 1.0, 1.0))
    }

    #[test]
    fn single_facet_is_one_part() {
        // a large triangle in the plane x = 0.3, normal +x
        let mesh = SurfaceMesh::new(
            vec![
                Point::new(0.3, -5.0, -5.0),
                Point::new(0.3, 10.0, -5.0),
                Point::new(0.3, -5.0, 10.0),
            ],
            vec![[0, 1, 2]],
            None,
        )
        .unwrap()
        .0;
        let s = PreparedSurface::new(&mesh, 1e-6);
        let parts = convex_decompose(&unit_cell(), vec![quad(&mesh, 0)], &s, 1e-12, 1e-15, 32).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].piece, unit_cell());
        let (inn, out, ops) = clip_piece(&parts[0], &s, 1e-12);
        assert!((inn.volume() - 0.3).abs() < 1e-15);
        assert!((out[0].volume() - 0.7).abs() < 1e-15);
        assert_eq!(ops, 2);
    }

    #[test]
    fn valley_splits_into_two() {
        // L-prism reflex edge at (0.43, 0.37); the cell straddles it
        let mesh = shapes::l_prism();
        let s = PreparedSurface::new(&mesh, 1e-6);
        let cell = Polytope::cuboid(Point::new(0.3, 0.2, 0.1), Point::new(0.6, 0.5, 0.4));
        let b = cell.bounds().unwrap();
        let patch: Vec<PatchFacet> = (0..mesh.facet_count() as u32)
            .filter_map(|f| {
                let mut poly = mesh.triangle(f as usize).to_vec();
                for side in 0..6 {
                    let a = side / 2;
                    let pl = if side % 2 == 0 {
                        Plane::axis(a, b.min[a], false)
                    } else {
                        Plane::axis(a, b.max[a], true)
                    };
                    poly = crate::geom::clip_polygon(&poly, &pl, 1e-12);
                }
                (poly.len() >= 3 && polygon_area(&poly) > 1e-15).then_some(PatchFacet {
                    facet: f,
                    polygon: poly,
                })
            })
            .collect();
        assert!(!patch.is_empty());
        let parts = convex_decompose(&cell, patch, &s, 1e-12, 1e-15, 32).unwrap();
        assert_eq!(parts.len(), 2);
        let total: f64 = parts.iter().map(|p| p.piece.volume()).sum();
        assert!((total - cell.volume()).abs() < 1e-12 * cell.volume());
        let inside: f64 = parts.iter().map(|p| clip_piece(p, &s, 1e-12).0.volume()).sum();
        // solid minus notch {x > 0.43, y > 0.37} within the cell
        let want = 0.3f64.powi(3) - (0.6 - 0.43) * (0.5 - 0.37) * 0.3;
        assert!((inside - want).abs() < 1e-14, "{inside} vs {want}");
    }

    #[test]
    fn two_sheets_need_global_split() {
        // two opposite half-spaces x <= 0.3 and x >= 0.6 inside, as two
        // separate outward facets
        let big = |x: f64, nx: f64| {
            let (a, b) = if nx > 0.0 {
                (Point::new(x, 10.0, -5.0), Point::new(x, -5.0, 10.0))
            } else {
                (Point::new(x, -5.0, 10.0), Point::new(x, 10.0, -5.0))
            };
            vec![Point::new(x, -5.0, -5.0), a, b]
        };
        let mut vertices = big(0.3, 1.0);
        vertices.extend(big(0.6, -1.0));
        let mesh = SurfaceMesh::new(vertices, vec![[0, 1, 2], [3, 4, 5]], None).unwrap().0;
        assert!(mesh.normals()[0].x > 0.0 && mesh.normals()[1].x < 0.0);
        let s = PreparedSurface::new(&mesh, 1e-6);
        let patch = vec![quad(&mesh, 0), quad(&mesh, 1)];
        let parts = convex_decompose(&unit_cell(), patch, &s, 1e-12, 1e-15, 32).unwrap();
        assert_eq!(parts.len(), 2);
        let inside: f64 = parts.iter().map(|p| clip_piece(p, &s, 1e-12).0.volume()).sum();
        assert!((inside - 0.7).abs() < 1e-15);
        let _ = Vector::x();
    }

    #[test]
    fn depth_limit_reports_stall() {
        let mesh = shapes::l_prism();
        let s = PreparedSurface::new(&mesh, 1e-6);
        let cell = Polytope::cuboid(Point::new(-0.1, -0.1, -0.1), Point::new(1.1, 1.1, 0.8));
        let patch: Vec<PatchFacet> = (0..mesh.facet_count() as u32).map(|f| quad(&mesh, f)).collect();
        assert!(convex_decompose(&cell, patch.clone(), &s, 1e-12, 1e-15, 0).is_err());
        let parts = convex_decompose(&cell, patch, &s, 1e-12, 1e-15, 32).unwrap();
        let inside: f64 = parts.iter().map(|p| clip_piece(p, &s, 1e-12).0.volume()).sum();
        assert!((inside - shapes::L_PRISM_VOLUME).abs() < 1e-14);
    }
}
