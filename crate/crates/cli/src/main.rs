use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use liftfield::basis::{infer_basis, sample_domain, train_basis, write_trace_csv, BasisError, Shape};
use liftfield::geometry::hash_benchmark;
use liftfield::oracle::{Fem1DProblem, GridRect, OracleCache, OracleError, WeightProfile};
use liftfield::scenes_io::{export_trajectory, load_checkpoint_for, load_scene, save_checkpoint, Descriptor, Scene, SceneError};
use liftfield::service::{serve, ServeConfig, ServiceError};
use liftfield::sim::{displacement_objective, optimize_shape, simulate, SimError, Simulator};

#[derive(Parser)]
#[command(name = "liftfield", version, about = "Lifted neural fields for reduced elastodynamics")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a basis network for a scene and write a checkpoint.
    Train {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Loss trace CSV (epoch, loss, gram_penalty).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate the basis and its gradients at sampled points and dump them as CSV.
    Basis {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 1024)]
        points: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the reduced simulation and export the trajectory as NDJSON.
    Simulate {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Maximize the squared mean displacement over α.
    OptimizeShape {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Optimization trace CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        iterations: Option<usize>,
        /// Simulation steps per objective evaluation.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        alpha0: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare hashed clamped distance queries against brute force.
    BenchHash {
        #[arg(long, default_value_t = 10_000)]
        segments: usize,
        #[arg(long, default_value_t = 10_000)]
        queries: usize,
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compute finite-element reference modes of the scene's weighted Laplacian.
    Oracle {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long)]
        alpha: Option<f64>,
        /// Elements per axis.
        #[arg(long)]
        resolution: Option<usize>,
        /// Directory for cached results.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Run the live simulation endpoint.
    Serve {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8765)]
        port: u16,
        #[arg(long, default_value_t = 60.0)]
        max_fps: f64,
        #[arg(long)]
        step_rate: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

enum Failure {
    Validation(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 3,
            Failure::Numeric(_) => 4,
        }
    }
}

impl From<SceneError> for Failure {
    fn from(e: SceneError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<BasisError> for Failure {
    fn from(e: BasisError) -> Self {
        match e {
            BasisError::NonFinite { .. } | BasisError::SingularBasis => Failure::Numeric(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Basis(b) => b.into(),
            SimError::Invalid(_) => Failure::Validation(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::NoConvergence(_) => Failure::Numeric(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<ServiceError> for Failure {
    fn from(e: ServiceError) -> Self {
        Failure::Validation(e.to_string())
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::Validation(format!("{}: {e}", path.display()))
}

fn scene_with_seed(path: &Path, seed: Option<u64>) -> Result<Scene, Failure> {
    let mut scene = load_scene(path)?;
    if let Some(s) = seed {
        scene.seed = s;
        scene.training.seed = s;
    }
    Ok(scene)
}

fn simulator(scene: &Scene, checkpoint: &Path, alpha: Option<f64>) -> Result<Simulator, Failure> {
    let net = load_checkpoint_for(checkpoint, scene)?;
    let mut setup = scene.sim_setup(net)?;
    if let Some(a) = alpha {
        setup.alpha = a;
    }
    Ok(Simulator::new(setup)?)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Train {
            scene,
            out,
            trace,
            epochs,
            seed,
        } => {
            let mut scene = scene_with_seed(&scene, seed)?;
            if let Some(e) = epochs {
                scene.training.epochs = e;
            }
            let family = scene.family()?;
            let outcome = train_basis(&family, scene.network_spec(), &scene.training)?;
            save_checkpoint(&out, &Descriptor::for_scene(&scene, &outcome.network), &outcome.network)?;
            if let Some(path) = trace {
                write_trace_csv(path, &outcome.trace)?;
            }
            if let Some(last) = outcome.trace.last() {
                println!(
                    "trained {} epochs: loss {:.6e}, gram penalty {:.3e}",
                    last.epoch + 1,
                    last.loss,
                    last.gram_penalty
                );
            }
            println!("checkpoint written to {}", out.display());
        }
        Command::Basis {
            scene,
            checkpoint,
            out,
            alpha,
            points,
            seed,
        } => {
            let scene = scene_with_seed(&scene, seed)?;
            let net = load_checkpoint_for(&checkpoint, &scene)?;
            let family = scene.family()?;
            let alpha = alpha.unwrap_or(scene.lift.alpha);
            let xs = sample_domain(&family, alpha, points, scene.seed)?;
            let set = infer_basis(&net, &family, &xs, alpha)?;
            let (k, d) = (set.modes(), set.dim());
            let mut text = String::new();
            let coords = ["x", "y", "z"];
            let mut header: Vec<String> = coords[..d].iter().map(|s| s.to_string()).collect();
            header.extend((0..k).map(|j| format!("phi{j}")));
            for j in 0..k {
                header.extend(coords[..d].iter().map(|c| format!("dphi{j}_d{c}")));
            }
            writeln!(text, "{}", header.join(",")).unwrap();
            for i in 0..set.len() {
                let g = set.gradient(i);
                let mut row: Vec<String> = set.points[i].iter().map(f64::to_string).collect();
                row.extend((0..k).map(|j| set.values[[i, j]].to_string()));
                for j in 0..k {
                    row.extend((0..d).map(|p| g[(j, p)].to_string()));
                }
                writeln!(text, "{}", row.join(",")).unwrap();
            }
            std::fs::write(&out, text).map_err(io(&out))?;
            let gram = set.gram();
            let dev = (0..k)
                .flat_map(|i| (0..k).map(move |j| (i, j)))
                .map(|(i, j)| (gram[(i, j)] - f64::from(u8::from(i == j))).abs())
                .fold(0.0, f64::max);
            println!("{} points x {k} modes at α = {alpha}; |Gram - I|_inf = {dev:.4}", set.len());
        }
        Command::Simulate {
            scene,
            checkpoint,
            out,
            steps,
            alpha,
            seed,
        } => {
            let scene = scene_with_seed(&scene, seed)?;
            let mut sim = simulator(&scene, &checkpoint, alpha)?;
            let steps = steps.unwrap_or(scene.simulation.steps);
            let traj = simulate(&mut sim, steps)?;
            export_trajectory(&out, &traj)?;
            let mean = sim.mean_displacement();
            println!("{steps} steps, mean displacement {mean:?}; trajectory written to {}", out.display());
        }
        Command::OptimizeShape {
            scene,
            checkpoint,
            out,
            iterations,
            steps,
            alpha0,
            seed,
        } => {
            let mut scene = scene_with_seed(&scene, seed)?;
            if let Some(i) = iterations {
                scene.optimize.iterations = i;
            }
            let net = load_checkpoint_for(&checkpoint, &scene)?;
            let setup = scene.sim_setup(net)?;
            let steps = steps.unwrap_or(scene.simulation.steps);
            let alpha0 = alpha0.unwrap_or(scene.lift.alpha);
            let outcome = optimize_shape(
                |a| displacement_objective(&setup, a, steps),
                alpha0,
                scene.lift.alpha_range,
                &scene.optimize,
            )?;
            let mut text = String::from("iteration,alpha,objective,gradient,best\n");
            for r in &outcome.trace {
                writeln!(text, "{},{},{},{},{}", r.iteration, r.alpha, r.objective, r.gradient, r.best).unwrap();
                println!("iter {:>3}  α = {:.4}  J = {:.6e}  dJ/dα = {:+.3e}", r.iteration, r.alpha, r.objective, r.gradient);
            }
            if let Some(path) = out {
                std::fs::write(&path, text).map_err(io(&path))?;
            }
            println!(
                "best α = {:.4}, J = {:.6e} ({:+.1}% over α0 = {alpha0})",
                outcome.alpha,
                outcome.objective,
                100.0 * outcome.improvement()
            );
        }
        Command::BenchHash {
            segments,
            queries,
            threshold,
            seed,
        } => {
            let r = hash_benchmark(segments, queries, threshold, seed).map_err(|e| Failure::Validation(e.to_string()))?;
            println!("{:<12} {:>12} {:>12}", "method", "time [ms]", "per query [us]");
            for (name, t) in [("hash", r.hash_time), ("brute", r.brute_time)] {
                println!(
                    "{name:<12} {:>12.3} {:>12.3}",
                    t.as_secs_f64() * 1e3,
                    t.as_secs_f64() * 1e6 / queries.max(1) as f64
                );
            }
            println!(
                "build {:.3} ms, {} cells, {} entries, {} of {} queries within s = {}",
                r.build_time.as_secs_f64() * 1e3,
                r.cells,
                r.entries,
                r.near,
                r.queries,
                r.threshold
            );
            let verdict = if r.exact() { "PASS" } else { "FAIL" };
            println!(
                "{verdict} equality check: {} mismatches, max |d_hash - d_brute| = {:.3e}",
                r.mismatches, r.max_distance_diff
            );
            if !r.exact() {
                return Err(Failure::Numeric("hash and brute force disagree".into()));
            }
        }
        Command::Oracle {
            scene,
            out,
            k,
            alpha,
            resolution,
            cache,
        } => {
            let scene = load_scene(&scene)?;
            let family = scene.family()?;
            let alpha = alpha.unwrap_or(scene.lift.alpha);
            if !family.contains_alpha(alpha) {
                return Err(Failure::Validation(format!("α = {alpha} outside the scene range")));
            }
            if family.cut.is_some() {
                return Err(Failure::Validation("the oracle does not model cuts".into()));
            }
            let cache = OracleCache::new(cache.unwrap_or_else(|| std::env::temp_dir().join("liftfield-oracle")));
            let domain = family.domain_at(alpha);
            let Some(Shape::Box { min, max }) = domain.shapes.first().filter(|_| domain.shapes.len() == 1) else {
                return Err(Failure::Validation("the oracle needs a single box domain".into()));
            };
            let modes = match scene.dim {
                1 => {
                    let n = resolution.unwrap_or(400);
                    let (lo, hi) = (min[0], max[0]);
                    if lo != 0.0 || hi != 1.0 {
                        return Err(Failure::Validation("the 1D oracle works on [0, 1]".into()));
                    }
                    // piecewise-constant profile sampled at element midpoints
                    let mut profile = WeightProfile {
                        breaks: vec![],
                        weights: vec![family.weight(alpha, &[0.5 / n as f64])],
                    };
                    for e in 1..n {
                        let w = family.weight(alpha, &[(e as f64 + 0.5) / n as f64]);
                        if w != *profile.weights.last().unwrap() {
                            profile.breaks.push(e as f64 / n as f64);
                            profile.weights.push(w);
                        }
                    }
                    cache.modes_1d(&Fem1DProblem { elements: n, profile }, k)?
                }
                2 => {
                    let n = resolution.unwrap_or(40);
                    let grid = GridRect {
                        min: [min[0], min[1]],
                        max: [max[0], max[1]],
                        nx: n,
                        ny: n,
                    };
                    let label = format!("{}@{alpha}/{:?}", scene.lift.family, scene.material.weights);
                    cache.modes_2d(&grid, &label, &|x: &[f64]| family.weight(alpha, x), k)?
                }
                d => return Err(Failure::Validation(format!("no {d}D oracle"))),
            };
            let mut text = String::new();
            let coords = ["x", "y"];
            let mut header: Vec<String> = coords[..scene.dim].iter().map(|s| s.to_string()).collect();
            header.extend((0..k).map(|j| format!("mode{j}")));
            writeln!(text, "{}", header.join(",")).unwrap();
            for (i, x) in modes.nodes().iter().enumerate() {
                let mut row: Vec<String> = x.iter().map(f64::to_string).collect();
                row.extend((0..k).map(|j| modes.vectors[j][i].to_string()));
                writeln!(text, "{}", row.join(",")).unwrap();
            }
            std::fs::write(&out, text).map_err(io(&out))?;
            println!("eigenvalues: {:?}", modes.eigenvalues);
        }
        Command::Serve {
            scene,
            checkpoint,
            host,
            port,
            max_fps,
            step_rate,
            seed,
        } => {
            let scene = scene_with_seed(&scene, seed)?;
            let sim = simulator(&scene, &checkpoint, None)?;
            let config = ServeConfig {
                max_fps,
                step_rate,
                ..ServeConfig::default()
            };
            let handle = serve(sim, (host.as_str(), port), config)?;
            println!("listening on {}", handle.local_addr());
            handle.wait();
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Validation(m) | Failure::Numeric(m)) = &f;
            eprintln!("error: {m}");
            ExitCode::from(f.code())
        }
    }
}
