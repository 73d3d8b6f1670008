use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use afm::engine::AfmConfig;
use afm_cli::bench::{workers_from_env, BenchOptions};
use afm_cli::commands::{
    cmd_bench, cmd_generate, cmd_map, cmd_render, cmd_verify, CliError, CorpusSource, DomainArg, DomainParams, Engine,
    RenderArgs, RunManifest, VerifyArgs,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "afm", version, about = "Injective mapping of disk meshes onto convex and star-shaped polygons")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainFlag {
    Circle,
    Square,
    Star,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineFlag {
    Afm,
    Tutte,
}

#[derive(Args, Clone)]
struct DomainOpts {
    #[arg(long, value_enum, default_value = "circle")]
    domain: DomainFlag,
    /// Corners of the circle polygon.
    #[arg(long, default_value_t = 64)]
    circle_n: usize,
    #[arg(long, default_value_t = 5)]
    star_points: usize,
    /// Notch radius of the star relative to its tips.
    #[arg(long, default_value_t = 0.5)]
    star_ratio: f64,
}

impl DomainOpts {
    fn params(&self) -> DomainParams {
        let kind = match self.domain {
            DomainFlag::Circle => DomainArg::Circle,
            DomainFlag::Square => DomainArg::Square,
            DomainFlag::Star => DomainArg::Star,
        };
        DomainParams { kind, circle_n: self.circle_n, star_points: self.star_points, star_ratio: self.star_ratio }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Map a disk mesh onto a polygon.
    Map {
        input: PathBuf,
        #[command(flatten)]
        domain: DomainOpts,
        /// Shift the boundary correspondence by this many loop vertices.
        #[arg(long, default_value_t = 0)]
        rotation_offset: usize,
        #[arg(long, value_enum, default_value = "afm")]
        engine: EngineFlag,
        /// Abort when a single advancing move takes longer.
        #[arg(long)]
        timeout_ms: Option<u64>,
        /// Mapped mesh; its exact coordinates go to `<path>.exact`.
        #[arg(long, short = 'o', default_value = "target.obj")]
        target_out: PathBuf,
        /// Refined source mesh; exact coordinates go to `<path>.exact`.
        #[arg(long)]
        source_out: Option<PathBuf>,
        /// Statistics file (stdout when omitted).
        #[arg(long)]
        stats: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Keep rational coordinates instead of rounding after each move.
        #[arg(long)]
        no_snap: bool,
        /// Record the front every this many moves.
        #[arg(long)]
        trace_every: Option<u64>,
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Check a source/target pair for injectivity and compatibility.
    Verify {
        source: PathBuf,
        target: PathBuf,
        #[arg(long)]
        source_exact: Option<PathBuf>,
        #[arg(long)]
        target_exact: Option<PathBuf>,
        /// Also check that target boundary vertices lie on this polygon.
        #[arg(long, value_enum)]
        domain: Option<DomainFlag>,
        #[arg(long, default_value_t = 64)]
        circle_n: usize,
        #[arg(long, default_value_t = 5)]
        star_points: usize,
        #[arg(long, default_value_t = 0.5)]
        star_ratio: f64,
    },
    /// Map every corpus mesh onto circle, square and star.
    Bench {
        /// Directory of OBJ disks; a corpus is generated when omitted.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 200)]
        min_triangles: usize,
        #[arg(long, default_value_t = 20000)]
        max_triangles: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        circle_n: usize,
        #[arg(long, default_value_t = 5)]
        star_points: usize,
        #[arg(long, default_value_t = 0.5)]
        star_ratio: f64,
        #[arg(long, default_value_t = 0)]
        rotation_offset: usize,
        #[arg(long)]
        timeout_ms: Option<u64>,
        #[arg(long)]
        no_tutte: bool,
        #[arg(long)]
        no_verify: bool,
        /// Aggregate statistics file (stdout when omitted).
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
    /// Draw a planar mesh as SVG.
    Render {
        mesh: PathBuf,
        output: PathBuf,
        #[arg(long)]
        exact: Option<PathBuf>,
        /// Draw this polygon under the mesh.
        #[arg(long, value_enum)]
        domain: Option<DomainFlag>,
        #[arg(long, default_value_t = 64)]
        circle_n: usize,
        #[arg(long, default_value_t = 5)]
        star_points: usize,
        #[arg(long, default_value_t = 0.5)]
        star_ratio: f64,
        /// Front snapshots written by `map --trace-out`.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 800.0)]
        size: f64,
    },
    /// Write a random disk corpus as OBJ files.
    Generate {
        out_dir: PathBuf,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 200)]
        min_triangles: usize,
        #[arg(long, default_value_t = 20000)]
        max_triangles: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also write the star outline mesh with this many tips.
        #[arg(long)]
        star_outline: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        star_ratio: f64,
    },
}

fn optional_domain(
    kind: Option<DomainFlag>,
    circle_n: usize,
    star_points: usize,
    star_ratio: f64,
) -> Option<DomainParams> {
    kind.map(|domain| DomainOpts { domain, circle_n, star_points, star_ratio }.params())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Map {
            input,
            domain,
            rotation_offset,
            engine,
            timeout_ms,
            target_out,
            source_out,
            stats,
            svg,
            no_snap,
            trace_every,
            trace_out,
        } => {
            let manifest = RunManifest {
                input,
                domain: domain.params(),
                rotation_offset,
                engine: match engine {
                    EngineFlag::Afm => Engine::Afm,
                    EngineFlag::Tutte => Engine::Tutte,
                },
                timeout: timeout_ms.map(Duration::from_millis),
                snap_round: !no_snap,
                trace_every,
                source_out,
                target_out,
                stats_out: stats,
                svg_out: svg,
                trace_out,
            };
            cmd_map(&manifest).map(drop)
        }
        Cmd::Verify { source, target, source_exact, target_exact, domain, circle_n, star_points, star_ratio } => {
            let args = VerifyArgs {
                source,
                target,
                source_exact,
                target_exact,
                domain: optional_domain(domain, circle_n, star_points, star_ratio),
            };
            let report = cmd_verify(&args)?;
            print!("{report}");
            Ok(())
        }
        Cmd::Bench {
            corpus,
            count,
            min_triangles,
            max_triangles,
            seed,
            circle_n,
            star_points,
            star_ratio,
            rotation_offset,
            timeout_ms,
            no_tutte,
            no_verify,
            out,
        } => {
            let src = match corpus {
                Some(dir) => CorpusSource::Directory(dir),
                None => CorpusSource::Generate { count, min_triangles, max_triangles, seed },
            };
            let domains = DomainParams { kind: DomainArg::Circle, circle_n, star_points, star_ratio }
                .all()
                .map_err(|e| CliError::Input(e.to_string()))?;
            let opts = BenchOptions {
                domains,
                rotation_offset,
                config: AfmConfig { move_timeout: timeout_ms.map(Duration::from_millis), ..AfmConfig::default() },
                tutte: !no_tutte,
                verify: !no_verify,
                workers: workers_from_env(),
            };
            let (_, text) = cmd_bench(&src, &opts)?;
            match out {
                Some(p) => std::fs::write(&p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Cmd::Render { mesh, output, exact, domain, circle_n, star_points, star_ratio, trace, size } => {
            cmd_render(&RenderArgs {
                mesh,
                exact,
                output,
                domain: optional_domain(domain, circle_n, star_points, star_ratio),
                trace,
                size,
            })
        }
        Cmd::Generate { out_dir, count, min_triangles, max_triangles, seed, star_outline, star_ratio } => {
            let written = cmd_generate(
                &out_dir,
                count,
                min_triangles,
                max_triangles,
                seed,
                star_outline.map(|p| (p, star_ratio)),
            )?;
            for p in written {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("afm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
