use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tearsim_client::{Client, DEFAULT_SERVER};
use tearsim_core::api::{BenchRequest, DecomposeRequest, TearRequest};
use tearsim_core::bench::DEFAULT_BUDGET_MICROS;
use tearsim_core::io::load_scalpel_path;
use tearsim_core::protocol::{Envelope, ModelSource};
use tearsim_core::tear::BladeExtent;

/// Command-line client for the tearing service.
#[derive(Parser)]
#[command(name = "tearsim", version)]
struct Cli {
    /// Service base URL.
    #[arg(long, env = "TEARSIM_SERVER", default_value = DEFAULT_SERVER, global = true)]
    server: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// `bunny`, `grid:N`, `cylinder:R,H,RINGS,SEGMENTS` or a path to an OBJ file.
    #[arg(long, default_value = "bunny")]
    model: String,
    /// Skin sidecar for an OBJ model.
    #[arg(long)]
    skin: Option<PathBuf>,
    /// Midpoint subdivision levels applied after loading.
    #[arg(long, default_value_t = 0)]
    subdivide: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Checks that the service is up.
    Health,
    /// Clusters a model into particles.
    Decompose {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0.1)]
        range: f64,
        /// Where to write the clustering document.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tears a model along a recorded scalpel path.
    Tear {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        path: PathBuf,
        /// Clamp the blade to the surface before cutting.
        #[arg(long)]
        clamp: bool,
        /// Where to write the torn mesh as OBJ.
        #[arg(long)]
        obj_out: Option<PathBuf>,
        /// Where to write the delta list as JSON.
        #[arg(long)]
        deltas_out: Option<PathBuf>,
    },
    /// Measures per-segment tear latency; exits with status 2 when the gate fails.
    Bench {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        path: PathBuf,
        #[arg(long, default_value_t = 20)]
        repetitions: usize,
        /// p50 budget per segment in milliseconds.
        #[arg(long, default_value_t = DEFAULT_BUDGET_MICROS / 1000.0)]
        budget_ms: f64,
        /// Skip the cluster-repair stage.
        #[arg(long)]
        no_clustering: bool,
        #[arg(long)]
        clamp: bool,
        /// Where to write the CSV report.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Replays a session transcript headlessly and prints the state digest.
    Replay {
        #[arg(long)]
        transcript: PathBuf,
        /// Fail unless the digest equals this value.
        #[arg(long)]
        expect: Option<String>,
    },
    /// Runs a script of envelopes (one JSON object per line) in a new session.
    Session {
        #[arg(long)]
        script: PathBuf,
        /// Where to write the recorded transcript.
        #[arg(long)]
        transcript_out: Option<PathBuf>,
    },
}

type CliResult = Result<ExitCode, String>;

fn read(path: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), String> {
    std::fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display()))
}

fn text(path: &Path) -> Result<String, String> {
    String::from_utf8(read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_model(args: &ModelArgs) -> Result<ModelSource, String> {
    let spec = args.model.as_str();
    let base = if spec == "bunny" {
        ModelSource::Bunny
    } else if let Some(n) = spec.strip_prefix("grid:") {
        ModelSource::Grid {
            n: n.parse().map_err(|_| format!("bad grid size `{n}`"))?,
        }
    } else if let Some(rest) = spec.strip_prefix("cylinder") {
        let rest = rest.strip_prefix(':').unwrap_or("0.1,1,20,16");
        let parts: Vec<&str> = rest.split(',').collect();
        let [r, h, rings, segs] = parts[..] else {
            return Err("cylinder takes R,H,RINGS,SEGMENTS".into());
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| format!("bad number `{s}`"));
        let int = |s: &str| s.parse::<usize>().map_err(|_| format!("bad count `{s}`"));
        ModelSource::Cylinder {
            radius: num(r)?,
            height: num(h)?,
            rings: int(rings)?,
            segments: int(segs)?,
        }
    } else {
        ModelSource::Obj {
            obj: text(Path::new(spec))?,
            skin: args.skin.as_deref().map(text).transpose()?,
        }
    };
    Ok(if args.subdivide > 0 {
        ModelSource::Subdivided {
            model: Box::new(base),
            levels: args.subdivide,
        }
    } else {
        base
    })
}

fn extent(clamp: bool) -> BladeExtent {
    if clamp {
        BladeExtent::ClampToSurface
    } else {
        BladeExtent::FullBlade
    }
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

async fn run(cli: Cli) -> CliResult {
    let client = Client::new(cli.server);
    let e = |e: tearsim_client::ClientError| e.to_string();
    match cli.command {
        Command::Health => print_json(&client.health().await.map_err(e)?),
        Command::Decompose { model, range, out } => {
            let r = client
                .decompose(&DecomposeRequest {
                    model: parse_model(&model)?,
                    range,
                })
                .await
                .map_err(e)?;
            if let Some(out) = out {
                write(&out, &r.clustering)?;
            }
            print_json(&serde_json::json!({
                "vertices": r.vertices,
                "particles": r.particles,
                "micros": r.micros,
            }));
        }
        Command::Tear {
            model,
            path,
            clamp,
            obj_out,
            deltas_out,
        } => {
            let path = load_scalpel_path(&read(&path)?).map_err(|e| e.to_string())?;
            let r = client
                .tear(&TearRequest {
                    model: parse_model(&model)?,
                    path,
                    blade_extent: extent(clamp),
                })
                .await
                .map_err(e)?;
            if let Some(out) = obj_out {
                write(&out, &r.obj)?;
            }
            if let Some(out) = deltas_out {
                write(&out, serde_json::to_vec_pretty(&r.deltas).expect("serializable"))?;
            }
            print_json(&serde_json::json!({
                "segments": r.deltas.len(),
                "skipped": r.skipped,
                "removed_faces": r.deltas.iter().map(|d| d.removed_faces.len()).sum::<usize>(),
                "vertices": r.vertices,
                "faces": r.faces,
                "delta_digest": r.delta_digest,
            }));
        }
        Command::Bench {
            model,
            path,
            repetitions,
            budget_ms,
            no_clustering,
            clamp,
            csv,
        } => {
            let path = load_scalpel_path(&read(&path)?).map_err(|e| e.to_string())?;
            let r = client
                .bench(&BenchRequest {
                    model: parse_model(&model)?,
                    mesh_name: None,
                    path,
                    repetitions,
                    particle_range: (!no_clustering).then_some(0.1),
                    blade_extent: extent(clamp),
                    budget_micros: budget_ms * 1000.0,
                })
                .await
                .map_err(e)?;
            if let Some(out) = csv {
                write(&out, &r.csv)?;
            }
            print!("{}", r.csv);
            let seg = r.report.stage("segment").map_or(0.0, |s| s.micros_p50);
            println!(
                "segments={} faces_touched={}/{} p50={:.1}us budget={:.1}us env=\"{}\"",
                r.report.segments, r.report.faces_touched, r.report.total_faces, seg, r.budget_micros, r.report.environment
            );
            if let Some(flag) = &r.report.flagged {
                eprintln!("flagged: {flag}");
            }
            if !r.passed {
                eprintln!("bench gate failed");
                return Ok(ExitCode::from(2));
            }
        }
        Command::Replay { transcript, expect } => {
            let t: Vec<Envelope> = serde_json::from_slice(&read(&transcript)?).map_err(|e| e.to_string())?;
            let r = client.replay(t).await.map_err(e)?;
            print_json(&r);
            if expect.is_some_and(|d| d != r.digest) {
                eprintln!("digest mismatch");
                return Ok(ExitCode::from(2));
            }
        }
        Command::Session { script, transcript_out } => {
            let id = client.create_session().await.map_err(e)?;
            for line in text(&script)?.lines().filter(|l| !l.trim().is_empty()) {
                for env in client.send_text(&id, line.to_string()).await.map_err(e)? {
                    println!("{}", env.to_json());
                }
            }
            if let Some(out) = transcript_out {
                let t = client.transcript(&id).await.map_err(e)?;
                write(&out, serde_json::to_vec_pretty(&t).expect("serializable"))?;
            }
            print_json(&client.digest(&id).await.map_err(e)?);
            client.delete_session(&id).await.map_err(e)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[tokio::main]
async fn main() -> ExitCode {
    match run(Cli::parse()).await {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
