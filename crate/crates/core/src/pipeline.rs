//! End-to-end runs: surface in, labelled and cut background mesh out.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::background::{build_background_mesh, build_partition, BackgroundMesh};
use crate::classify::{classify_serial, Strategy};
use crate::cutter::{cut_serial, CutParams, PreparedSurface};
use crate::distributed::{run_distributed, ExecMode, ProtocolSetup};
use crate::exec::ExecPolicy;
use crate::report::{EmbeddedDiscretisation, Measures};
use crate::surface::{bounding_box, surface_measures, SurfaceMesh};
use crate::Result;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Serial,
    /// Two-level protocol on the in-process transport.
    Simulated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Background cells per axis.
    pub cells: [usize; 3],
    /// Blocks per axis; ignored in serial mode.
    pub parts: [usize; 3],
    /// Relative growth of the surface box on each axis.
    pub enlargement: f64,
    pub cut: CutParams,
    /// Weight of a cut cell in the redistribution weights.
    pub w_cut: f64,
    pub mode: Mode,
    pub policy: ExecPolicy,
    pub strategy: Strategy,
    pub exec: ExecMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            cells: [16; 3],
            parts: [1; 3],
            enlargement: 0.4,
            cut: CutParams::default(),
            w_cut: 1.0,
            mode: Mode::Serial,
            policy: ExecPolicy::default(),
            strategy: Strategy::default(),
            exec: ExecMode::default(),
        }
    }
}

/// Background mesh the pipeline uses for `surface`.
pub fn background_for(surface: &SurfaceMesh, config: &RunConfig) -> Result<BackgroundMesh> {
    Ok(build_background_mesh(
        &bounding_box(surface)?,
        config.cells,
        config.enlargement,
    )?)
}

pub fn run(surface: &SurfaceMesh, config: &RunConfig) -> Result<EmbeddedDiscretisation> {
    let mut timings = BTreeMap::new();
    let t0 = Instant::now();
    let mesh = background_for(surface, config)?;
    let prepared = PreparedSurface::new(surface, config.cut.tau_reflex);
    let sm = surface_measures(surface);
    let v_ref = sm.volume_reliable.then_some(sm.enclosed_volume);
    timings.insert("setup".to_string(), t0.elapsed().as_secs_f64());

    let (parts, map, cuts, trace) = match config.mode {
        Mode::Serial => {
            let t = Instant::now();
            let cuts = cut_serial(&mesh, &prepared, &config.cut, config.policy)?;
            timings.insert("cut".to_string(), t.elapsed().as_secs_f64());
            let t = Instant::now();
            let map = classify_serial(&mesh, surface, &cuts, config.strategy, config.cut.tol(&mesh))?;
            timings.insert("classify".to_string(), t.elapsed().as_secs_f64());
            ([1; 3], map, cuts, Vec::new())
        }
        Mode::Simulated => {
            let partition = build_partition(&mesh, config.parts)?;
            let setup = ProtocolSetup {
                mesh: &mesh,
                partition: &partition,
                surface: &prepared,
                params: config.cut,
                strategy: config.strategy,
                policy: config.policy,
            };
            let t = Instant::now();
            let run = run_distributed(&setup, config.exec)?;
            timings.insert("protocol".to_string(), t.elapsed().as_secs_f64());
            let slowest = |f: fn(&crate::distributed::RankStats) -> f64| {
                run.ranks.iter().map(|r| f(&r.stats)).fold(0.0, f64::max)
            };
            timings.insert("shell".to_string(), slowest(|s| s.shell_seconds));
            timings.insert("bulk".to_string(), slowest(|s| s.bulk_seconds));
            timings.insert("coarse".to_string(), run.coarse.stats.total_seconds);
            (config.parts, run.location_map()?, run.cuts(), run.trace)
        }
    };
    let measures = Measures::compute(&mesh, &map, &cuts, v_ref);
    timings.insert("total".to_string(), t0.elapsed().as_secs_f64());
    Ok(EmbeddedDiscretisation {
        mesh,
        parts,
        map,
        cuts,
        measures,
        timings,
        trace,
    })
}
