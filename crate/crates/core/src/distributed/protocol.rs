use std::time::Instant;

use serde::Serialize;

use super::sim::{run_simulated, ExecMode};
use super::transport::{Event, Phase, TraceRecord, Transport};
use super::{decode, encode, ProtocolError};
use crate::background::{BackgroundMesh, CellBlock, CoarsePartition};
use crate::classify::{
    face_of, fill_from, point_in_solid, propagate_in_place, resolve_undefined, seed_into, ClassifyError, Location,
    LocationMap, Scope, Strategy,
};
use crate::cutter::{bin_facets, check_inside_domain, cut_cells, CellCut, CutParams, PreparedSurface};
use crate::exec::ExecPolicy;
use crate::surface::Aabb;
use crate::Result;

/// Everything a rank needs besides its transport. All ranks see the same
/// setup; each only touches its own block.
#[derive(Clone, Copy)]
pub struct ProtocolSetup<'a> {
    pub mesh: &'a BackgroundMesh,
    pub partition: &'a CoarsePartition,
    pub surface: &'a PreparedSurface,
    pub params: CutParams,
    pub strategy: Strategy,
    /// Data parallelism inside a rank.
    pub policy: ExecPolicy,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RankStats {
    pub local_facets: usize,
    pub shell_cells: usize,
    pub shell_cut: usize,
    pub bulk_cut: usize,
    pub shell_clip_ops: usize,
    pub bulk_clip_ops: usize,
    pub ray_queries: usize,
    /// Every cell took the coarse label.
    pub filled_from_coarse: bool,
    pub shell_seconds: f64,
    pub bulk_seconds: f64,
    pub total_seconds: f64,
}

/// What a rank ends up holding. For the coarse rank `map` is the coarse
/// location map and `cuts` is empty.
#[derive(Clone, Debug)]
pub struct RankOutput {
    pub rank: usize,
    pub map: LocationMap,
    pub cuts: Vec<CellCut>,
    pub stats: RankStats,
}

/// Runs one rank of the protocol.
pub async fn distributed_intersection<T: Transport>(t: &T, setup: &ProtocolSetup<'_>) -> Result<RankOutput> {
    if t.fine_ranks() != setup.partition.rank_count() {
        return Err(ProtocolError::Transport {
            phase: Phase::Interface,
            message: format!(
                "{} fine ranks for {} blocks",
                t.fine_ranks(),
                setup.partition.rank_count()
            ),
        }
        .into());
    }
    let out = if t.is_coarse() {
        coarse_rank(t, setup).await
    } else {
        fine_rank(t, setup).await
    };
    t.note(Event::Finished);
    out
}

/// One label for a whole block side: the interior/exterior label if the
/// side carries only one of them, cut if it carries both.
fn aggregate(labels: &[Location]) -> Location {
    let has = |l| labels.contains(&l);
    match (has(Location::In), has(Location::Out)) {
        (true, true) => Location::Cut,
        (true, false) => Location::In,
        (false, true) => Location::Out,
        (false, false) if has(Location::Cut) => Location::Cut,
        _ => Location::Undefined,
    }
}

fn on_shell(block: &CellBlock, c: [usize; 3]) -> bool {
    (0..3).any(|a| c[a] == block.lo[a] || c[a] + 1 == block.hi[a])
}

fn clip_ops(cuts: &[CellCut]) -> usize {
    cuts.iter().map(|c| c.clip_ops).sum()
}

async fn fine_rank<T: Transport>(t: &T, s: &ProtocolSetup<'_>) -> Result<RankOutput> {
    let start = Instant::now();
    let rank = t.rank();
    let mesh = s.mesh;
    let block = s.partition.block(rank);
    let tol = s.params.tol(mesh);
    let sm = s.surface.mesh();

    // local surface: facets whose box reaches the block
    let reach = mesh.block_box(&block).inflated(tol);
    let local: Vec<u32> = (0..sm.facet_count() as u32)
        .filter(|&f| Aabb::from_points(&sm.triangle(f as usize)).is_some_and(|b| b.overlaps(&reach)))
        .collect();
    let (shell_bins, bulk_bins): (Vec<_>, Vec<_>) = bin_facets(mesh, sm, local.iter().copied(), &block, tol)
        .into_iter()
        .partition(|(c, _)| on_shell(&block, mesh.dims().cell_ijk(*c)));

    let shell_cuts = cut_cells(mesh, s.surface, &shell_bins, &s.params, s.policy)?;
    let mut map = LocationMap::new(mesh.dims(), block);
    seed_into(&mut map, &shell_cuts)?;
    let shell_scope = Scope::cells(&block, block.shell());
    propagate_in_place(&mut map, &shell_scope, s.strategy)?;
    let shell_seconds = start.elapsed().as_secs_f64();
    t.note(Event::ShellDone);

    for (side, peer) in s.partition.neighbours(rank) {
        let mine = map.boundary_faces(side);
        let theirs = decode(&t.sendrecv(peer, encode(&mine)).await?, Phase::Interface, peer)?;
        if theirs.len() != mine.len() {
            return Err(ProtocolError::Malformed {
                phase: Phase::Interface,
                src: peer,
            }
            .into());
        }
        let merged = mine
            .iter()
            .zip(&theirs)
            .enumerate()
            .map(|(index, (a, b))| {
                a.merge(*b).ok_or(ProtocolError::InterfaceConflict {
                    phase: Phase::Interface,
                    rank,
                    peer,
                    index,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        map.set_boundary_faces(side, &merged);
    }
    // labels from neighbours reach the rest of the shell
    propagate_in_place(&mut map, &shell_scope, s.strategy)?;
    t.note(Event::InterfaceDone);

    let mut summary = vec![if shell_cuts.is_empty() {
        Location::Undefined
    } else {
        Location::Cut
    }];
    summary.extend((0..6).map(|side| aggregate(&map.boundary_faces(side))));
    t.gather(encode(&summary)).await?;
    t.note(Event::Gathered);

    // the coarse rank works while the bulk is cut
    let bulk_start = Instant::now();
    let bulk_cuts = cut_cells(mesh, s.surface, &bulk_bins, &s.params, s.policy)?;
    seed_into(&mut map, &bulk_cuts)?;
    propagate_in_place(&mut map, &Scope::All, s.strategy)?;
    let bulk_seconds = bulk_start.elapsed().as_secs_f64();
    t.note(Event::BulkDone);

    t.note(Event::AwaitScatter);
    let coarse = decode(&t.scatter(None).await?, Phase::Scatter, t.coarse_rank())?;
    t.note(Event::Scattered);
    let coarse = match coarse[..] {
        [l] => l,
        _ => {
            return Err(ProtocolError::Malformed {
                phase: Phase::Scatter,
                src: t.coarse_rank(),
            }
            .into())
        }
    };

    let mut stats = RankStats {
        local_facets: local.len(),
        shell_cells: shell_bins.len(),
        shell_cut: shell_cuts.len(),
        bulk_cut: bulk_cuts.len(),
        shell_clip_ops: clip_ops(&shell_cuts),
        bulk_clip_ops: clip_ops(&bulk_cuts),
        shell_seconds,
        bulk_seconds,
        ..RankStats::default()
    };
    if shell_cuts.is_empty() && bulk_cuts.is_empty() {
        if !coarse.is_in_or_out() {
            return Err(ProtocolError::Malformed {
                phase: Phase::Scatter,
                src: t.coarse_rank(),
            }
            .into());
        }
        fill_uniform(&mut map, coarse)?;
        stats.filled_from_coarse = true;
    } else {
        // pockets sealed off by cut faces inside the block
        stats.ray_queries = resolve_undefined(&mut map, mesh, sm, &Scope::All, s.strategy, tol)?;
    }
    let mut cuts = shell_cuts;
    cuts.extend(bulk_cuts);
    cuts.sort_by_key(|c| c.cell);
    stats.total_seconds = start.elapsed().as_secs_f64();
    Ok(RankOutput { rank, map, cuts, stats })
}

fn fill_uniform(map: &mut LocationMap, loc: Location) -> Result<(), ClassifyError> {
    let cells: Vec<_> = map.cells().collect();
    for (c, l) in cells {
        if l.merge(loc) != Some(loc) {
            return Err(ClassifyError::InconsistentOrientation { ijk: c });
        }
        map.set_cell(c, loc);
    }
    let faces: Vec<_> = map.faces().filter(|f| f.2 == Location::Undefined).collect();
    for (axis, f, _) in faces {
        map.set_face(axis, f, loc);
    }
    Ok(())
}

async fn coarse_rank<T: Transport>(t: &T, s: &ProtocolSetup<'_>) -> Result<RankOutput> {
    let start = Instant::now();
    let payloads = t.gather(Vec::new()).await?.ok_or_else(|| ProtocolError::Transport {
        phase: Phase::Gather,
        message: "coarse rank received nothing".into(),
    })?;
    let p = s.partition;
    let mut cmap = LocationMap::whole(p.coarse_dims());
    for (r, bytes) in payloads.iter().enumerate() {
        let l = decode(bytes, Phase::Gather, r)?;
        if l.len() != 7 {
            return Err(ProtocolError::Malformed {
                phase: Phase::Gather,
                src: r,
            }
            .into());
        }
        let c = p.rank_coords(r);
        cmap.set_cell(c, l[0]);
        for side in 0..6 {
            let (axis, f) = face_of(c, side);
            if cmap.merge_face(axis, f, l[1 + side]).is_err() {
                let peer = p.neighbours(r).into_iter().find(|n| n.0 == side).map_or(r, |n| n.1);
                return Err(ProtocolError::InterfaceConflict {
                    phase: Phase::Gather,
                    rank: r,
                    peer,
                    index: side,
                }
                .into());
            }
        }
    }
    propagate_in_place(&mut cmap, &Scope::All, s.strategy)?;

    // components no block summary reached: one query each, at the first
    // fine cell of the block
    let tol = s.params.tol(s.mesh);
    let mut queries = 0;
    loop {
        let Some((c, _)) = cmap.cells().find(|(_, l)| *l == Location::Undefined) else {
            break;
        };
        let lo = p.block(p.coarse_dims().cell_index(c)).lo;
        let inside = point_in_solid(s.surface.mesh(), &s.mesh.cell_center(lo), tol)?;
        queries += 1;
        let loc = if inside { Location::In } else { Location::Out };
        fill_from(&mut cmap, c, loc, &Scope::All, s.strategy)?;
    }
    t.note(Event::CoarseDone);

    let out = (0..p.rank_count())
        .map(|r| encode(&[cmap.cell(p.rank_coords(r))]))
        .collect();
    t.scatter(Some(out)).await?;
    Ok(RankOutput {
        rank: t.rank(),
        map: cmap,
        cuts: Vec::new(),
        stats: RankStats {
            ray_queries: queries,
            total_seconds: start.elapsed().as_secs_f64(),
            ..RankStats::default()
        },
    })
}

/// Result of a simulated distributed run.
#[derive(Debug)]
pub struct DistributedRun {
    /// Fine ranks in rank order.
    pub ranks: Vec<RankOutput>,
    pub coarse: RankOutput,
    pub trace: Vec<TraceRecord>,
    pub events: Vec<Vec<Event>>,
}

impl DistributedRun {
    /// The fine location maps assembled over the whole grid.
    pub fn location_map(&self) -> Result<LocationMap> {
        let dims = self.ranks[0].map.dims();
        let mut m = LocationMap::whole(dims);
        for r in &self.ranks {
            for (c, l) in r.map.cells() {
                m.set_cell(c, l);
            }
            for (axis, f, l) in r.map.faces() {
                m.merge_face(axis, f, l)?;
            }
        }
        Ok(m)
    }

    /// Cut cells of all ranks, ascending by cell index.
    pub fn cuts(&self) -> Vec<CellCut> {
        let mut all: Vec<CellCut> = self.ranks.iter().flat_map(|r| r.cuts.iter().cloned()).collect();
        all.sort_by_key(|c| c.cell);
        all
    }

    pub fn clip_ops(&self) -> Vec<usize> {
        self.ranks
            .iter()
            .map(|r| r.stats.shell_clip_ops + r.stats.bulk_clip_ops)
            .collect()
    }

    /// Whether every fine rank finished its bulk before waiting on the
    /// coarse result.
    pub fn bulk_before_scatter_wait(&self) -> bool {
        self.events[..self.ranks.len()].iter().all(|ev| {
            let bulk = ev.iter().position(|&e| e == Event::BulkDone);
            let wait = ev.iter().position(|&e| e == Event::AwaitScatter);
            matches!((bulk, wait), (Some(b), Some(w)) if b < w)
        })
    }
}

/// Runs the protocol on the in-process transport.
pub fn run_distributed(setup: &ProtocolSetup<'_>, mode: ExecMode) -> Result<DistributedRun> {
    check_inside_domain(setup.mesh, setup.surface.mesh(), setup.params.tol(setup.mesh))?;
    let fine = setup.partition.rank_count();
    let sim = run_simulated(fine, mode, |t| async move { distributed_intersection(&t, setup).await })?;
    let mut ranks = sim.outputs;
    let coarse = ranks.pop().expect("coarse rank output");
    Ok(DistributedRun {
        ranks,
        coarse,
        trace: sim.trace,
        events: sim.events,
    })
}
