//! Runs every mesh of a corpus against several target domains and aggregates
//! the statistics per domain.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use afm::domain::{is_strictly_convex, map_boundary, DomainKind, DomainSpec};
use afm::engine::{map_mesh, AfmConfig};
use afm::geom::exact_f64;
use afm::mesh::VertId;
use afm::tutte::{count_flips, tutte_embed};
use afm::verify::{collect_stats, verify, MapStats, VerifyReport};

use crate::obj::ObjMesh;

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "AFM_WORKERS";

pub fn workers_from_env() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn domain_label(spec: &DomainSpec) -> String {
    match spec.kind {
        DomainKind::Circle => format!("circle-{}", spec.polygon.len()),
        DomainKind::Square => "square".into(),
        DomainKind::Star => format!("star-{}", spec.polygon.len() / 2),
    }
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub domains: Vec<DomainSpec>,
    pub rotation_offset: usize,
    pub config: AfmConfig,
    /// Also run the Tutte embedding on strictly convex domains.
    pub tutte: bool,
    /// Run the full verification on every output.
    pub verify: bool,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TutteOutcome {
    pub flips: usize,
    pub time: Duration,
    pub error: Option<String>,
}

/// One mesh mapped onto one domain.
#[derive(Debug, Clone)]
pub struct BenchRun {
    pub mesh: String,
    pub domain: String,
    pub stats: MapStats,
    /// Refinement vertices that are interior in the final source mesh.
    pub refine_interior_vertices: u64,
    /// Target vertices placed by the engine (all but the input boundary), and
    /// how many of them ended with binary64 coordinates.
    pub inserted_vertices: u64,
    pub inserted_double: u64,
    pub verify: Option<VerifyReport>,
    pub tutte: Option<TutteOutcome>,
}

pub fn run_one(name: &str, mesh: &ObjMesh, spec: &DomainSpec, opts: &BenchOptions) -> BenchRun {
    let domain = domain_label(spec);
    let input = match mesh.to_exact() {
        Ok(m) => m,
        Err(e) => {
            let stats = MapStats { fraction_done: (0, 1), error: Some(e.to_string()), ..MapStats::default() };
            return BenchRun {
                mesh: name.into(),
                domain,
                stats,
                refine_interior_vertices: 0,
                inserted_vertices: 0,
                inserted_double: 0,
                verify: None,
                tutte: None,
            };
        }
    };
    let tutte = (opts.tutte && is_strictly_convex(&spec.polygon)).then(|| {
        let start = Instant::now();
        let res = map_boundary(&input, spec, opts.rotation_offset)
            .map_err(|e| e.to_string())
            .and_then(|b| tutte_embed(&input, &b).map_err(|e| e.to_string()));
        let time = start.elapsed();
        match res {
            Ok(sol) => TutteOutcome { flips: count_flips(&sol.positions, &input.topo), time, error: None },
            Err(e) => TutteOutcome { flips: 0, time, error: Some(e) },
        }
    });
    let n_in = input.num_vertices();
    let run = map_mesh(input, spec, opts.rotation_offset, opts.config.clone());
    let stats = collect_stats(&run);
    let (mut refine_interior_vertices, mut inserted_vertices, mut inserted_double, mut report) = (0, 0, 0, None);
    if let Some(s) = &run.state {
        refine_interior_vertices = s.events().refine_interior_vertices;
        let m2 = s.target();
        // everything except the input boundary was placed by the engine
        for v in 0..m2.num_vertices() {
            let fixed = v < n_in && m2.topo.is_boundary_vertex(v as VertId);
            if !fixed && !m2.topo.is_isolated(v as VertId) {
                inserted_vertices += 1;
                inserted_double += exact_f64(&m2.positions[v]).is_some() as u64;
            }
        }
        if opts.verify && stats.converged {
            report = Some(verify(s.source(), s.target(), Some(spec)));
        }
    }
    BenchRun {
        mesh: name.into(),
        domain,
        stats,
        refine_interior_vertices,
        inserted_vertices,
        inserted_double,
        verify: report,
        tutte,
    }
}

/// Every mesh against every domain, spread over `opts.workers` threads.
/// Results come back in mesh-major order.
pub fn run_bench(meshes: &[(String, ObjMesh)], opts: &BenchOptions) -> Vec<BenchRun> {
    let jobs: Vec<(usize, usize)> =
        (0..meshes.len()).flat_map(|m| (0..opts.domains.len()).map(move |d| (m, d))).collect();
    let next = AtomicUsize::new(0);
    let out: Mutex<Vec<Option<BenchRun>>> = Mutex::new(vec![None; jobs.len()]);
    std::thread::scope(|scope| {
        for _ in 0..opts.workers.clamp(1, jobs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(m, d)) = jobs.get(i) else { break };
                let (name, mesh) = &meshes[m];
                let run = run_one(name, mesh, &opts.domains[d], opts);
                out.lock().expect("no worker panicked")[i] = Some(run);
            });
        }
    });
    out.into_inner().expect("no worker panicked").into_iter().map(|r| r.expect("every job ran")).collect()
}

/// Aggregate of all runs on one domain.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DomainSummary {
    pub domain: String,
    pub runs: usize,
    pub converged: usize,
    pub failures: Vec<(String, String)>,
    pub moves: u64,
    pub splits: u64,
    pub flips: u64,
    pub convexifications: u64,
    pub refined_convexifications: u64,
    pub concavifications: u64,
    pub refinement_edge_splits: u64,
    pub growth_avg: f64,
    pub growth_max: f64,
    pub flips_rational: u64,
    pub flips_double: u64,
    pub models_with_double_flips: usize,
    pub snap_attempts: u64,
    pub snap_rounded: u64,
    pub inserted_vertices: u64,
    pub inserted_double: u64,
    pub time_avg: Duration,
    pub tutte_runs: usize,
    pub tutte_zero_flip: usize,
    pub tutte_time_avg: Duration,
}

fn pct(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        100.0 * a as f64 / b as f64
    }
}

impl DomainSummary {
    pub fn split_share(&self) -> f64 {
        pct(self.splits, self.moves)
    }

    pub fn flip_share(&self) -> f64 {
        pct(self.flips, self.moves)
    }

    /// Convexifications per edge flip, in percent.
    pub fn convexification_rate(&self) -> f64 {
        pct(self.convexifications, self.flips)
    }

    pub fn concavification_rate(&self) -> f64 {
        pct(self.concavifications, self.flips)
    }

    pub fn snap_success(&self) -> f64 {
        pct(self.inserted_double, self.inserted_vertices)
    }

    pub fn double_flip_model_share(&self) -> f64 {
        pct(self.models_with_double_flips as u64, self.converged as u64)
    }

    pub fn tutte_zero_flip_share(&self) -> f64 {
        pct(self.tutte_zero_flip as u64, self.tutte_runs as u64)
    }

    /// `key = value` lines, each key prefixed by the domain label.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let d = &self.domain;
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{d}.{k} = {v}");
        };
        put("runs", self.runs.to_string());
        put("converged", self.converged.to_string());
        put("failed", self.failures.len().to_string());
        put("moves", self.moves.to_string());
        put("splits", self.splits.to_string());
        put("splits_pct", format!("{:.2}", self.split_share()));
        put("flips", self.flips.to_string());
        put("flips_pct", format!("{:.2}", self.flip_share()));
        put("convexifications", self.convexifications.to_string());
        put("convexifications_pct", format!("{:.2}", self.convexification_rate()));
        put("refined_convexifications", self.refined_convexifications.to_string());
        put("concavifications", self.concavifications.to_string());
        put("concavifications_pct", format!("{:.3}", self.concavification_rate()));
        put("refinement_edge_splits", self.refinement_edge_splits.to_string());
        put("growth_avg_pct", format!("{:.2}", 100.0 * self.growth_avg));
        put("growth_max_pct", format!("{:.2}", 100.0 * self.growth_max));
        put("flips_rational", self.flips_rational.to_string());
        put("flips_double", self.flips_double.to_string());
        put("models_with_double_flips_pct", format!("{:.2}", self.double_flip_model_share()));
        put("snap_attempts", self.snap_attempts.to_string());
        put("snap_rounded", self.snap_rounded.to_string());
        put("inserted_vertices", self.inserted_vertices.to_string());
        put("inserted_double_pct", format!("{:.2}", self.snap_success()));
        put("time_avg_s", format!("{:.4}", self.time_avg.as_secs_f64()));
        if self.tutte_runs > 0 {
            put("tutte_runs", self.tutte_runs.to_string());
            put("tutte_zero_flip_pct", format!("{:.2}", self.tutte_zero_flip_share()));
            put("tutte_time_avg_s", format!("{:.4}", self.tutte_time_avg.as_secs_f64()));
        }
        for (mesh, err) in &self.failures {
            put("failure", format!("{mesh}: {err}"));
        }
        s
    }
}

/// Per-domain aggregates in order of first appearance.
pub fn summarize(runs: &[BenchRun]) -> Vec<DomainSummary> {
    let mut out: Vec<DomainSummary> = Vec::new();
    let mut times: Vec<(Duration, Duration)> = Vec::new();
    for r in runs {
        let i = match out.iter().position(|s| s.domain == r.domain) {
            Some(i) => i,
            None => {
                out.push(DomainSummary { domain: r.domain.clone(), ..Default::default() });
                times.push(Default::default());
                out.len() - 1
            }
        };
        let s = &mut out[i];
        s.runs += 1;
        if let Some(t) = &r.tutte {
            s.tutte_runs += 1;
            s.tutte_zero_flip += (t.error.is_none() && t.flips == 0) as usize;
            times[i].1 += t.time;
        }
        let st = &r.stats;
        if !st.converged {
            s.failures.push((r.mesh.clone(), st.error.clone().unwrap_or_else(|| "did not converge".into())));
            continue;
        }
        s.converged += 1;
        s.moves += st.moves;
        s.splits += st.splits;
        s.flips += st.flips;
        s.convexifications += st.convexifications;
        s.refined_convexifications += st.refined_convexifications;
        s.concavifications += st.concavifications;
        s.refinement_edge_splits += st.refinement_edge_splits;
        s.growth_avg += st.growth;
        s.growth_max = s.growth_max.max(st.growth);
        s.flips_rational += st.flips_rational;
        s.flips_double += st.flips_double;
        s.models_with_double_flips += (st.flips_double > 0) as usize;
        s.snap_attempts += st.snap_attempts;
        s.snap_rounded += st.snap_rounded;
        s.inserted_vertices += r.inserted_vertices;
        s.inserted_double += r.inserted_double;
        times[i].0 += st.time;
    }
    for (s, (afm, tutte)) in out.iter_mut().zip(times) {
        if s.converged > 0 {
            s.growth_avg /= s.converged as f64;
            s.time_avg = afm / s.converged as u32;
        }
        if s.tutte_runs > 0 {
            s.tutte_time_avg = tutte / s.tutte_runs as u32;
        }
    }
    out
}
