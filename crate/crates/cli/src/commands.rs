//! Subcommand implementations behind the `afm` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use afm::domain::{make_circle, make_square, make_star, map_boundary, DomainError, DomainSpec};
use afm::engine::{map_mesh, AfmConfig, AfmError};
use afm::tutte::{count_flips, tutte_embed};
use afm::verify::{collect_stats, verify, VerifyReport};
use afm::{ExactPoint2, TriMesh};
use thiserror::Error;

use crate::bench::{run_bench, summarize, BenchOptions, BenchRun};
use crate::corpus::{generate_corpus, star_outline};
use crate::obj::ObjMesh;
use crate::sidecar;
use crate::svg::{render, trace_from_text, trace_to_text, RenderOptions};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Timeout(String),
    #[error("{0}")]
    Invariant(String),
    #[error("verification failed:\n{0}")]
    Verify(Box<VerifyReport>),
}

impl CliError {
    /// 0 success, 1 input error, 2 timeout, 3 internal invariant violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Verify(_) => 1,
            CliError::Timeout(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn read_obj(path: &Path) -> Result<ObjMesh, CliError> {
    ObjMesh::parse(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// `path` with `.exact` appended.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".exact");
    PathBuf::from(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainArg {
    Circle,
    Square,
    Star,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainParams {
    pub kind: DomainArg,
    pub circle_n: usize,
    pub star_points: usize,
    pub star_ratio: f64,
}

impl Default for DomainParams {
    fn default() -> Self {
        DomainParams { kind: DomainArg::Circle, circle_n: 64, star_points: 5, star_ratio: 0.5 }
    }
}

impl DomainParams {
    pub fn build(&self) -> Result<DomainSpec, DomainError> {
        match self.kind {
            DomainArg::Circle => make_circle(self.circle_n),
            DomainArg::Square => Ok(make_square()),
            DomainArg::Star => make_star(self.star_points, self.star_ratio),
        }
    }

    /// Circle, square and star with these parameters.
    pub fn all(&self) -> Result<Vec<DomainSpec>, DomainError> {
        Ok(vec![make_circle(self.circle_n)?, make_square(), make_star(self.star_points, self.star_ratio)?])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    #[default]
    Afm,
    Tutte,
}

/// Everything one `map` invocation needs.
#[derive(Debug, Clone, Default)]
pub struct RunManifest {
    pub input: PathBuf,
    pub domain: DomainParams,
    pub rotation_offset: usize,
    pub engine: Engine,
    pub timeout: Option<Duration>,
    pub snap_round: bool,
    pub trace_every: Option<u64>,
    pub source_out: Option<PathBuf>,
    pub target_out: PathBuf,
    pub stats_out: Option<PathBuf>,
    pub svg_out: Option<PathBuf>,
    pub trace_out: Option<PathBuf>,
}

impl RunManifest {
    pub fn validate(&self) -> Result<(), CliError> {
        let mut paths: Vec<PathBuf> = vec![self.input.clone(), self.target_out.clone(), sidecar_path(&self.target_out)];
        if let Some(p) = &self.source_out {
            paths.push(p.clone());
            paths.push(sidecar_path(p));
        }
        paths.extend(self.stats_out.iter().chain(&self.svg_out).chain(&self.trace_out).cloned());
        for (i, p) in paths.iter().enumerate() {
            if paths[..i].contains(p) {
                return Err(CliError::Input(format!("path {} is used twice", p.display())));
            }
        }
        if self.domain.circle_n < 3 || self.domain.star_points < 3 {
            return Err(CliError::Input("polygons need at least 3 corners".into()));
        }
        if !(self.domain.star_ratio > 0.0 && self.domain.star_ratio < 1.0) {
            return Err(CliError::Input("star ratio must lie in (0, 1)".into()));
        }
        if self.trace_out.is_some() && self.trace_every.is_none() {
            return Err(CliError::Input("a trace output needs --trace-every".into()));
        }
        Ok(())
    }
}

/// Maps the input mesh and writes every requested output. Returns the stats
/// text. On a timeout the partial stats are still written.
pub fn cmd_map(m: &RunManifest) -> Result<String, CliError> {
    m.validate()?;
    let obj = read_obj(&m.input)?;
    let input = obj.to_exact().map_err(input_err)?;
    let spec = m.domain.build().map_err(input_err)?;

    if m.engine == Engine::Tutte {
        let start = Instant::now();
        let bmap = map_boundary(&input, &spec, m.rotation_offset).map_err(input_err)?;
        let sol = tutte_embed(&input, &bmap).map_err(|e| CliError::Invariant(e.to_string()))?;
        let time = start.elapsed();
        let flips = count_flips(&sol.positions, &input.topo);
        let out = ObjMesh {
            positions: sol.positions.iter().map(|p| [p[0], p[1], 0.0]).collect(),
            triangles: input.triangles().to_vec(),
        };
        write(&m.target_out, &out.to_text())?;
        let stats = format!(
            "engine = tutte\ntriangles = {}\nflips_double = {flips}\niterations = {}\nresidual = {:e}\ntime_s = {}\n",
            input.num_triangles(),
            sol.iterations,
            sol.residual,
            time.as_secs_f64()
        );
        if let Some(p) = &m.svg_out {
            let polygon = Some(spec.polygon.iter().map(|q| q.to_f64()).collect());
            write(p, &render(&sol.positions, input.triangles(), &RenderOptions { polygon, ..Default::default() }))?;
        }
        emit_stats(m, &stats)?;
        return Ok(stats);
    }

    let config = AfmConfig {
        move_timeout: m.timeout,
        snap_round: m.snap_round,
        trace_every: m.trace_every,
        ..AfmConfig::default()
    };
    let run = map_mesh(input, &spec, m.rotation_offset, config);
    let stats = collect_stats(&run);
    let Some(state) = &run.state else {
        let e = run.result.expect_err("no state without an error");
        return Err(match e {
            AfmError::Invariant(_) | AfmError::Geom(_) => CliError::Invariant(e.to_string()),
            _ => CliError::Input(e.to_string()),
        });
    };
    let text = stats.to_text();
    emit_stats(m, &text)?;
    if let Err(e) = &run.result {
        return Err(match e {
            AfmError::Timeout { .. } => CliError::Timeout(e.to_string()),
            _ => CliError::Invariant(e.to_string()),
        });
    }

    let (m1, m2) = (state.source(), state.target());
    write(&m.target_out, &ObjMesh::from_target(m2).to_text())?;
    write(&sidecar_path(&m.target_out), &sidecar::write_2d(&m2.positions))?;
    if let Some(p) = &m.source_out {
        write(p, &ObjMesh::from_source(m1).to_text())?;
        write(&sidecar_path(p), &sidecar::write_3d(&m1.positions))?;
    }
    if let Some(p) = &m.trace_out {
        write(p, &trace_to_text(state.trace()))?;
    }
    if let Some(p) = &m.svg_out {
        let positions: Vec<[f64; 2]> = m2.positions.iter().map(|q| q.to_f64()).collect();
        let opts = RenderOptions {
            polygon: Some(spec.polygon.iter().map(|q| q.to_f64()).collect()),
            inverted: Some(afm::verify::check_injective(m2)),
            ..Default::default()
        };
        write(p, &render(&positions, m2.triangles(), &opts))?;
    }
    Ok(text)
}

fn emit_stats(m: &RunManifest, text: &str) -> Result<(), CliError> {
    match &m.stats_out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub struct VerifyArgs {
    pub source: PathBuf,
    pub target: PathBuf,
    pub source_exact: Option<PathBuf>,
    pub target_exact: Option<PathBuf>,
    pub domain: Option<DomainParams>,
}

/// Exact target mesh from an OBJ file and an optional sidecar.
pub fn load_target(obj_path: &Path, exact: Option<&Path>) -> Result<TriMesh<ExactPoint2>, CliError> {
    let obj = read_obj(obj_path)?;
    let mut mesh = obj.to_exact_2d().map_err(input_err)?;
    if let Some(p) = exact {
        let pts = sidecar::read_2d(&read(p)?).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
        if pts.len() != mesh.num_vertices() {
            return Err(CliError::Input(format!(
                "{}: {} vertices, mesh has {}",
                p.display(),
                pts.len(),
                mesh.num_vertices()
            )));
        }
        mesh.positions = pts;
    }
    Ok(mesh)
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<VerifyReport, CliError> {
    let obj = read_obj(&a.source)?;
    let mut m1 = obj.to_exact().map_err(input_err)?;
    if let Some(p) = &a.source_exact {
        let pts = sidecar::read_3d(&read(p)?).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
        if pts.len() != m1.num_vertices() {
            return Err(CliError::Input(format!(
                "{}: {} vertices, mesh has {}",
                p.display(),
                pts.len(),
                m1.num_vertices()
            )));
        }
        m1.positions = pts;
    }
    let m2 = load_target(&a.target, a.target_exact.as_deref())?;
    let spec = a.domain.as_ref().map(|d| d.build()).transpose().map_err(input_err)?;
    let report = verify(&m1, &m2, spec.as_ref());
    if report.is_empty() {
        Ok(report)
    } else {
        Err(CliError::Verify(Box::new(report)))
    }
}

pub enum CorpusSource {
    Directory(PathBuf),
    Generate { count: usize, min_triangles: usize, max_triangles: usize, seed: u64 },
}

pub fn load_corpus(src: &CorpusSource) -> Result<Vec<(String, ObjMesh)>, CliError> {
    let meshes = match src {
        CorpusSource::Directory(dir) => {
            let mut paths: Vec<PathBuf> = fs::read_dir(dir)
                .map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "obj"))
                .collect();
            paths.sort();
            paths
                .iter()
                .map(|p| Ok((p.file_stem().unwrap_or_default().to_string_lossy().into_owned(), read_obj(p)?)))
                .collect::<Result<Vec<_>, CliError>>()?
        }
        CorpusSource::Generate { count, min_triangles, max_triangles, seed } => {
            generate_corpus(*count, *min_triangles, *max_triangles, *seed)
                .map_err(input_err)?
                .into_iter()
                .map(|c| (c.name, c.mesh))
                .collect()
        }
    };
    if meshes.is_empty() {
        return Err(CliError::Input("corpus is empty".into()));
    }
    Ok(meshes)
}

/// Runs the corpus on circle, square and star and returns the runs with the
/// aggregate text.
pub fn cmd_bench(src: &CorpusSource, opts: &BenchOptions) -> Result<(Vec<BenchRun>, String), CliError> {
    let meshes = load_corpus(src)?;
    let runs = run_bench(&meshes, opts);
    let mut text = format!("meshes = {}\nworkers = {}\n", meshes.len(), opts.workers);
    for s in summarize(&runs) {
        text.push_str(&s.to_text());
    }
    Ok((runs, text))
}

pub struct RenderArgs {
    pub mesh: PathBuf,
    pub exact: Option<PathBuf>,
    pub output: PathBuf,
    pub domain: Option<DomainParams>,
    pub trace: Option<PathBuf>,
    pub size: f64,
}

pub fn cmd_render(a: &RenderArgs) -> Result<(), CliError> {
    let obj = read_obj(&a.mesh)?;
    if !obj.is_planar() {
        return Err(CliError::Input(format!("{}: mesh is not planar (z != 0)", a.mesh.display())));
    }
    let mut positions: Vec<[f64; 2]> = obj.positions.iter().map(|p| [p[0], p[1]]).collect();
    let mut inverted = None;
    if let Some(p) = &a.exact {
        let m = load_target(&a.mesh, Some(p))?;
        positions = m.positions.iter().map(|q| q.to_f64()).collect();
        inverted = Some(afm::verify::check_injective(&m));
    }
    let polygon = a
        .domain
        .as_ref()
        .map(|d| d.build())
        .transpose()
        .map_err(input_err)?
        .map(|s| s.polygon.iter().map(|q| q.to_f64()).collect());
    let frames =
        a.trace.as_ref().map(|p| read(p).and_then(|t| trace_from_text(&t).map_err(CliError::Input))).transpose()?;
    let opts = RenderOptions { polygon, inverted, trace: frames.as_deref(), origin: None, size: a.size };
    write(&a.output, &render(&positions, &obj.triangles, &opts))
}

/// Writes a generated corpus (and optionally the star outline mesh) into
/// `dir`; returns the written paths.
pub fn cmd_generate(
    dir: &Path,
    count: usize,
    min_triangles: usize,
    max_triangles: usize,
    seed: u64,
    star: Option<(usize, f64)>,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    if count > 0 {
        for c in generate_corpus(count, min_triangles, max_triangles, seed).map_err(input_err)? {
            let p = dir.join(format!("{}.obj", c.name));
            write(&p, &c.mesh.to_text())?;
            written.push(p);
        }
    }
    if let Some((points, ratio)) = star {
        let p = dir.join(format!("star-outline-{points}.obj"));
        write(&p, &star_outline(points, ratio).map_err(input_err)?.to_text())?;
        written.push(p);
    }
    Ok(written)
}
