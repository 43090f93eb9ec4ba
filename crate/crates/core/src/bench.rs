//! Per-segment tear latency measurement.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::io::ScalpelPathFile;
use crate::mesh::Mesh;
use crate::particles::{ParticleError, SoftBodyParams, SoftBodyState};
use crate::tear::{apply_tear_segment_timed, plan_cells, prepare_samples, SegmentTiming, TearDelta, TearOptions};

pub const STAGES: [&str; 6] = ["broad_phase", "classify", "clip", "delta_apply", "cluster_repair", "segment"];
pub const WARMUP_RUNS: usize = 2;
pub const MIN_REPETITIONS: usize = 5;
/// Default p50 budget per segment, microseconds.
pub const DEFAULT_BUDGET_MICROS: f64 = 20_000.0;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("need at least {MIN_REPETITIONS} repetitions, got {0}")]
    TooFewRepetitions(usize),
    #[error(transparent)]
    Mesh(#[from] crate::mesh::MeshError),
    #[error(transparent)]
    Particles(#[from] ParticleError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    pub stage: String,
    pub faces_touched: u64,
    pub micros_p50: f64,
    pub micros_p95: f64,
    pub micros_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub mesh: String,
    pub environment: String,
    pub repetitions: usize,
    pub segments: usize,
    pub total_faces: usize,
    /// Largest broad-phase candidate count over the segments.
    pub faces_touched: u64,
    /// One-off clustering time, reported but not gated.
    pub clustering_micros: f64,
    /// Set when the run did no work.
    pub flagged: Option<String>,
    /// SHA-256 of the delta sequence of the last measured run.
    pub delta_digest: String,
    pub stages: Vec<StageStats>,
}

impl BenchReport {
    pub fn empty(mesh: &str) -> Self {
        BenchReport {
            mesh: mesh.into(),
            environment: environment(),
            repetitions: 0,
            segments: 0,
            total_faces: 0,
            faces_touched: 0,
            clustering_micros: 0.0,
            flagged: None,
            delta_digest: digest_deltas(&[]),
            stages: Vec::new(),
        }
    }

    pub fn stage(&self, name: &str) -> Option<&StageStats> {
        self.stages.iter().find(|s| s.stage == name)
    }

    pub fn touched_fraction(&self) -> f64 {
        if self.total_faces == 0 {
            0.0
        } else {
            self.faces_touched as f64 / self.total_faces as f64
        }
    }

    /// Whether the end-to-end segment p50 is under `budget_micros`.
    pub fn within_budget(&self, budget_micros: f64) -> bool {
        self.stage("segment").is_some_and(|s| s.micros_p50 < budget_micros)
    }
}

pub fn environment() -> String {
    format!(
        "{}-{} cpus={} profile={}",
        std::env::consts::OS,
        std::env::consts::ARCH,
        std::thread::available_parallelism().map_or(1, |n| n.get()),
        if cfg!(debug_assertions) { "debug" } else { "release" }
    )
}

pub fn digest_deltas(deltas: &[TearDelta]) -> String {
    let mut h = Sha256::new();
    for d in deltas {
        h.update(serde_json::to_vec(d).expect("delta serializes"));
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Nearest-rank percentile of ascending `sorted`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = (q * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

fn micros(d: Duration) -> f64 {
    d.as_secs_f64() * 1e6
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub repetitions: usize,
    /// Particle range for the cluster-repair stage; `None` skips it.
    pub particle_range: Option<f64>,
    pub blade_extent: crate::tear::BladeExtent,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            repetitions: 20,
            particle_range: Some(0.1),
            blade_extent: Default::default(),
        }
    }
}

/// Replays `path` on fresh copies of `mesh`, timing each segment. The first
/// [`WARMUP_RUNS`] repetitions are discarded.
pub fn run_tear_bench(
    mesh: &Mesh,
    mesh_name: &str,
    path: &ScalpelPathFile,
    cfg: &BenchConfig,
) -> Result<BenchReport, BenchError> {
    if cfg.repetitions < MIN_REPETITIONS {
        return Err(BenchError::TooFewRepetitions(cfg.repetitions));
    }
    let opts = TearOptions {
        width: path.width,
        spacing: path.spacing,
        min_dt: path.min_dt,
        blade_extent: cfg.blade_extent,
    };
    let mut report = BenchReport::empty(mesh_name);
    report.repetitions = cfg.repetitions;
    report.total_faces = mesh.live_face_count();

    let t = Instant::now();
    let clustering = match cfg.particle_range {
        Some(d) => Some(SoftBodyState::decompose(mesh, d, SoftBodyParams::default())?),
        None => None,
    };
    report.clustering_micros = micros(t.elapsed());

    let samples = prepare_samples(mesh, &path.samples, &opts);
    let (cells, _) = plan_cells(&samples, opts.width);
    report.segments = cells.len();

    let mut series: Vec<Vec<f64>> = vec![Vec::new(); STAGES.len()];
    let mut last = Vec::new();
    for rep in 0..cfg.repetitions {
        let mut m = mesh.clone();
        let mut soft = clustering.clone();
        let mut deltas = Vec::with_capacity(cells.len());
        for cell in &cells {
            let mut timing = SegmentTiming::default();
            let start = Instant::now();
            let delta = apply_tear_segment_timed(&m, cell, &mut timing);
            let t0 = Instant::now();
            m.apply_delta(&delta)?;
            let t1 = Instant::now();
            if let Some(s) = soft.as_mut() {
                s.update_after_tear(&delta, &m)?;
            }
            let t2 = Instant::now();
            if rep >= WARMUP_RUNS {
                let values = [
                    micros(timing.broad_phase),
                    micros(timing.classify),
                    micros(timing.clip),
                    micros(t1 - t0),
                    micros(t2 - t1),
                    micros(t2 - start),
                ];
                for (s, v) in series.iter_mut().zip(values) {
                    s.push(v);
                }
                report.faces_touched = report.faces_touched.max(timing.candidates as u64);
            }
            deltas.push(delta);
        }
        last = deltas;
    }
    report.delta_digest = digest_deltas(&last);

    if cells.is_empty() || last.iter().all(TearDelta::is_empty) {
        report.flagged = Some(if cells.is_empty() {
            "path has no tear segments".into()
        } else {
            "path misses the mesh".into()
        });
        for s in &mut series {
            s.iter_mut().for_each(|v| *v = 0.0);
        }
    }
    for (name, mut s) in STAGES.iter().zip(series) {
        s.sort_by(f64::total_cmp);
        report.stages.push(StageStats {
            stage: (*name).into(),
            faces_touched: report.faces_touched,
            micros_p50: percentile(&s, 0.5),
            micros_p95: percentile(&s, 0.95),
            micros_max: s.last().copied().unwrap_or(0.0),
        });
    }
    Ok(report)
}
