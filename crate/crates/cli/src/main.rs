use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cutcell::distributed::{compute_redistribute_weights, sim::trace_json_lines, weights_table, ExecMode};
use cutcell::report::MessageCounts;
use cutcell::surface::{bounding_box, is_watertight, read_stl, surface_measures, ParseOptions, SurfaceMesh};
use cutcell::vtk::{export_vtk, Format};
use cutcell::{pipeline, EmbeddedDiscretisation, Error, Mode, RunConfig};

#[derive(Parser)]
#[command(name = "cutcell", version, about = "Cut-cell geometry on STL surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Counts, closedness, bounding box, volume and area of an STL file
    Info { stl: PathBuf },
    /// Cut and classify; writes a JSON report and optionally VTK files
    Cut {
        stl: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Also write interior.vtk and boundary.vtk
        #[arg(long)]
        vtk: bool,
    },
    /// Classify only; writes the per-cell redistribution weights
    Classify {
        stl: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Simulated-distributed timings over a grid of runs, as CSV
    Bench {
        stl: PathBuf,
        /// Runs as `cells:parts` separated by `;`, e.g. `16:1,1,1;32:2,2,2`
        #[arg(long, default_value = DEFAULT_BENCH_GRID)]
        grid: String,
        #[arg(long, default_value_t = 0.4)]
        enlargement: f64,
        /// Rows slower per cut cell than this factor times the first row
        /// are flagged
        #[arg(long, default_value_t = 2.5)]
        flag_factor: f64,
    },
    /// Write VTK files only
    Export {
        stl: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        binary: bool,
    },
}

/// Weak-scaling rows at 10^3 and 40^3 cells per rank, then a strong-scaling
/// column at 32^3.
const DEFAULT_BENCH_GRID: &str = "10:1,1,1;20:2,2,2;40:1,1,1;80:2,2,2;32:1,1,1;32:1,1,2;32:1,2,2;32:2,2,2";

#[derive(Args, Clone)]
struct RunArgs {
    /// Background cells per axis
    #[arg(long, value_parser = triple, default_value = "16,16,16")]
    cells: [usize; 3],
    /// Blocks per axis (simulated mode only)
    #[arg(long, value_parser = triple, default_value = "1,1,1")]
    parts: [usize; 3],
    #[arg(long, default_value_t = 0.4)]
    enlargement: f64,
    /// Distance tolerance relative to the cell diagonal
    #[arg(long, default_value_t = 1e-9)]
    tol_geom: f64,
    /// Weight of a cut cell
    #[arg(long, default_value_t = 1.0)]
    w_cut: f64,
    #[arg(long, value_enum, default_value_t = CliMode::Serial)]
    mode: CliMode,
    /// Output directory; reports go to stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliMode {
    Serial,
    Sim,
}

fn triple(s: &str) -> Result<[usize; 3], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()?;
    <[usize; 3]>::try_from(v).map_err(|v| format!("expected three values, got {}", v.len()))
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, Failure> {
        let mode = match self.mode {
            CliMode::Serial => Mode::Serial,
            CliMode::Sim => Mode::Simulated,
        };
        if mode == Mode::Serial && self.parts != [1; 3] {
            return Err(Failure::Usage("--parts needs --mode sim".into()));
        }
        let mut c = RunConfig {
            cells: self.cells,
            parts: self.parts,
            enlargement: self.enlargement,
            w_cut: self.w_cut,
            mode,
            exec: ExecMode::Threaded,
            ..RunConfig::default()
        };
        c.cut.tol_rel = self.tol_geom;
        Ok(c)
    }

    fn mode_name(&self) -> &'static str {
        match self.mode {
            CliMode::Serial => "serial",
            CliMode::Sim => "sim",
        }
    }
}

fn load(path: &Path) -> Result<SurfaceMesh, Error> {
    Ok(read_stl(path, ParseOptions::default())?.0)
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `text` to `out/name`, or prints it.
fn emit(out: Option<&Path>, name: &str, text: &str) -> Result<(), Error> {
    match out {
        Some(dir) => {
            let path = dir.join(name);
            write_file(&path, text)?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn info(stl: &Path) -> Result<(), Failure> {
    let (mesh, parse) = read_stl(stl, ParseOptions::default())?;
    let wt = is_watertight(&mesh);
    let m = surface_measures(&mesh);
    let bbox = bounding_box(&mesh).map_err(Error::from)?;
    let closed = if wt.is_watertight() {
        "yes".to_string()
    } else {
        let mut why = Vec::new();
        for (n, what) in [
            (wt.open_edges.len(), "open"),
            (wt.non_manifold_edges.len(), "non-manifold"),
            (wt.misoriented_edges.len(), "misoriented"),
        ] {
            if n > 0 {
                why.push(format!("{n} {what} edges"));
            }
        }
        format!("no ({})", why.join(", "))
    };
    println!("format: {:?}", parse.format);
    println!("vertices: {}", mesh.vertices().len());
    println!("facets: {}", mesh.facet_count());
    if parse.degenerate_dropped > 0 {
        println!("degenerate facets dropped: {}", parse.degenerate_dropped);
    }
    println!("watertight: {closed}");
    println!(
        "bounding box: [{}, {}, {}] .. [{}, {}, {}]",
        bbox.min.x, bbox.min.y, bbox.min.z, bbox.max.x, bbox.max.y, bbox.max.z
    );
    println!("volume {}, area {}", m.enclosed_volume, m.surface_area);
    Ok(())
}

fn run(stl: &Path, args: &RunArgs) -> Result<EmbeddedDiscretisation, Failure> {
    let config = args.config()?;
    let surface = load(stl)?;
    Ok(pipeline::run(&surface, &config)?)
}

fn cut(stl: &Path, args: &RunArgs, vtk: bool) -> Result<(), Failure> {
    let disc = run(stl, args)?;
    let report = disc.report(args.mode_name());
    let out = args.out.as_deref();
    emit(out, "report.json", &(report.to_json() + "\n"))?;
    if !disc.trace.is_empty() {
        if let Some(dir) = out {
            write_file(&dir.join("trace.jsonl"), &trace_json_lines(&disc.trace))?;
        }
    }
    if vtk {
        let dir = out.unwrap_or(Path::new("."));
        for p in export_vtk(&disc, dir, Format::Ascii)? {
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn classify(stl: &Path, args: &RunArgs) -> Result<(), Failure> {
    let disc = run(stl, args)?;
    let weights = compute_redistribute_weights(&disc.map, args.w_cut).map_err(Error::from)?;
    let c = disc.counts();
    eprintln!("interior {} exterior {} cut {}", c.interior, c.exterior, c.cut);
    emit(args.out.as_deref(), "weights.txt", &weights_table(&weights))?;
    Ok(())
}

fn export(stl: &Path, args: &RunArgs, binary: bool) -> Result<(), Failure> {
    let disc = run(stl, args)?;
    let format = if binary { Format::Binary } else { Format::Ascii };
    for p in export_vtk(&disc, args.out.as_deref().unwrap_or(Path::new(".")), format)? {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

/// `(cells, parts)` of one bench run.
type GridRow = ([usize; 3], [usize; 3]);

fn parse_grid(grid: &str) -> Result<Vec<GridRow>, Failure> {
    grid.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|row| {
            let (cells, parts) = row
                .split_once(':')
                .ok_or_else(|| Failure::Usage(format!("grid row {row:?} is not cells:parts")))?;
            let cells = if cells.contains(',') {
                triple(cells)
            } else {
                cells.trim().parse::<usize>().map(|n| [n; 3]).map_err(|e| e.to_string())
            };
            let cells = cells.map_err(|e| Failure::Usage(format!("grid row {row:?}: {e}")))?;
            let parts = triple(parts).map_err(|e| Failure::Usage(format!("grid row {row:?}: {e}")))?;
            Ok((cells, parts))
        })
        .collect()
}

fn bench(stl: &Path, grid: &str, enlargement: f64, flag_factor: f64) -> Result<(), Failure> {
    let rows = parse_grid(grid)?;
    let surface = load(stl)?;
    let mut csv = String::from("N,S,local_cells,cut_cells,setup_s,shell_s,bulk_s,coarse_s,total_s,gather,scatter,sendrecv,bytes,per_cut_us,flag\n");
    let mut reference = None;
    for (cells, parts) in rows {
        let config = RunConfig {
            cells,
            parts,
            enlargement,
            mode: Mode::Simulated,
            exec: ExecMode::Threaded,
            ..RunConfig::default()
        };
        let disc = pipeline::run(&surface, &config)?;
        let n: usize = cells.iter().product();
        let s: usize = parts.iter().product();
        let t = |k: &str| disc.timings.get(k).copied().unwrap_or(0.0);
        let m = MessageCounts::from_trace(&disc.trace);
        let cut = disc.counts().cut;
        let per_cut = t("total") / cut.max(1) as f64 * 1e6;
        let base = *reference.get_or_insert(per_cut);
        let flag = if per_cut > flag_factor * base { "slow" } else { "" };
        let _ = writeln!(
            csv,
            "{n},{s},{},{cut},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{},{},{per_cut:.2},{flag}",
            n / s,
            t("setup"),
            t("shell"),
            t("bulk"),
            t("coarse"),
            t("total"),
            m.gather,
            m.scatter,
            m.sendrecv,
            m.bytes
        );
    }
    print!("{csv}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Info { stl } => info(stl),
        Command::Cut { stl, run, vtk } => cut(stl, run, *vtk),
        Command::Classify { stl, run } => classify(stl, run),
        Command::Bench {
            stl,
            grid,
            enlargement,
            flag_factor,
        } => bench(stl, grid, *enlargement, *flag_factor),
        Command::Export { stl, run, binary } => export(stl, run, *binary),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
