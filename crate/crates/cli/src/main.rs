//! `housesim`: serve sessions, replay and verify trajectories, evaluate,
//! validate houses, generate scenarios, and dump observations.
//!
//! Results go to stdout as JSON; diagnostics go to stderr. Exit codes:
//! 0 success, 1 usage error, 2 validation or verification failure, 3 I/O error.

use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::thread;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use housesim_core::evaluation::{manipulation_accuracy, navigation_error, EvalReport, RoomPoint};
use housesim_core::kinematics::{Action, StepConfig};
use housesim_core::observation::{observe, ObsConfig};
use housesim_core::samples::sample_house;
use housesim_core::scenario::{generate_scenario, load_house, ScenarioEntry, ScenarioError};
use housesim_core::scene::{validate_house, validate_world, House, WorldState};
use housesim_core::server::{self, Catalog, DEFAULT_BRIDGE_PORT, DEFAULT_PORT};
use housesim_core::trajectory::{self, decode, encode, extract_interactions, Demonstration};

#[derive(Parser)]
#[command(name = "housesim", version, about = "Deterministic headless house simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Host sessions over the stream socket and the browser bridge.
    Serve(ServeArgs),
    /// Replay a trajectory file; with --verify, check every recorded state.
    Replay(ReplayArgs),
    /// Navigation and manipulation metrics.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Validate a house file.
    Validate(ValidateArgs),
    /// Generate a seeded random scenario world.
    Gen(GenArgs),
    /// Dump the first-person observation of a world.
    Observe(ObserveArgs),
    /// Record a trajectory by applying a list of actions.
    Record(RecordArgs),
}

#[derive(Args)]
struct ServeArgs {
    /// Extra house files to serve alongside the bundled samples.
    #[arg(long = "house")]
    houses: Vec<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, env = "HOUSESIM_PORT", default_value_t = DEFAULT_PORT)]
    port: u16,
    #[arg(long, default_value_t = DEFAULT_BRIDGE_PORT)]
    bridge_port: u16,
    /// Do not start the browser bridge.
    #[arg(long)]
    no_bridge: bool,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    traj: PathBuf,
    /// House file or bundled house id; defaults to the trajectory's house id.
    #[arg(long)]
    house: Option<String>,
    #[arg(long)]
    verify: bool,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Navigation error between two points, given as `x,z,room`.
    Nav {
        #[arg(long)]
        house: String,
        #[arg(long)]
        agent: String,
        #[arg(long)]
        goal: String,
    },
    /// Manipulation F1 of one trajectory against a reference.
    Manip {
        #[arg(long)]
        agent_traj: PathBuf,
        #[arg(long)]
        ref_traj: PathBuf,
        /// House for the navigation error between the two final positions.
        #[arg(long)]
        house: Option<String>,
    },
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    house: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    house: String,
    /// JSON list of `{type, count}`.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ObserveArgs {
    #[arg(long)]
    world: PathBuf,
    #[arg(long)]
    house: Option<String>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 48)]
    height: usize,
    #[arg(long, default_value_t = 60.0)]
    fov: f64,
    #[arg(long, default_value_t = 20.0)]
    far: f64,
    /// Only list visible objects.
    #[arg(long)]
    no_raster: bool,
}

#[derive(Args)]
struct RecordArgs {
    #[arg(long)]
    house: String,
    /// Action names separated by commas or whitespace, or a JSON list, in a file.
    #[arg(long)]
    actions: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Start world; the house's initial world when omitted.
    #[arg(long)]
    world: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Invalid(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Invalid(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Invalid(m) | Failure::Io(m) => m,
        }
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Outcome {
    fs::write(path, bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn print(v: &Value) {
    println!("{}", serde_json::to_string(v).expect("JSON values serialize"));
}

fn scenario_failure(e: ScenarioError) -> Failure {
    Failure::Invalid(e.to_string())
}

/// A house from a file path, or a bundled house by id.
fn resolve_house(arg: &str) -> Result<House, Failure> {
    let path = Path::new(arg);
    if path.exists() {
        return load_house(&read(path)?).map_err(scenario_failure);
    }
    match sample_house(arg) {
        Some(h) => h.map_err(scenario_failure),
        None => Err(Failure::Io(format!("{arg}: no such file or bundled house"))),
    }
}

fn house_for(explicit: Option<&str>, house_id: &str) -> Result<House, Failure> {
    let house = resolve_house(explicit.unwrap_or(house_id))?;
    if house.house_id != house_id {
        return Err(Failure::Invalid(format!("file is for house `{house_id}`, not `{}`", house.house_id)));
    }
    Ok(house)
}

fn load_config(path: Option<&PathBuf>) -> Result<StepConfig, Failure> {
    match path {
        None => Ok(StepConfig::default()),
        Some(p) => serde_json::from_slice(&read(p)?)
            .map_err(|e| Failure::Invalid(format!("{}: {e}", p.display()))),
    }
}

fn load_world(path: &Path) -> Result<WorldState, Failure> {
    serde_json::from_slice(&read(path)?).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn load_trajectory(path: &Path) -> Result<Demonstration, Failure> {
    decode(&read(path)?).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn parse_point(s: &str) -> Result<RoomPoint, Failure> {
    let parts: Vec<&str> = s.splitn(3, ',').collect();
    let bad = || Failure::Usage(format!("expected `x,z,room`, got `{s}`"));
    if parts.len() != 3 || parts[2].is_empty() {
        return Err(bad());
    }
    let x = parts[0].trim().parse().map_err(|_| bad())?;
    let z = parts[1].trim().parse().map_err(|_| bad())?;
    Ok(RoomPoint::new(parts[2].trim(), x, z))
}

fn parse_actions(text: &str) -> Result<Vec<Action>, Failure> {
    if let Ok(list) = serde_json::from_str::<Vec<String>>(text) {
        return list.iter().map(|s| s.parse().map_err(|e| Failure::Invalid(format!("{e}")))).collect();
    }
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|e| Failure::Invalid(format!("{e}"))))
        .collect()
}

fn serve(args: ServeArgs) -> Outcome {
    let mut catalog = Catalog::with_samples();
    for p in &args.houses {
        catalog.insert(load_house(&read(p)?).map_err(scenario_failure)?);
    }
    let catalog = Arc::new(catalog);
    let bind = |port: u16| {
        TcpListener::bind((args.host.as_str(), port)).map_err(|e| Failure::Io(format!("{}:{port}: {e}", args.host)))
    };
    let tcp = bind(args.port)?;
    let tcp_addr = tcp.local_addr().map_err(|e| Failure::Io(e.to_string()))?;
    let bridge = if args.no_bridge { None } else { Some(bind(args.bridge_port)?) };
    let bridge_addr = match &bridge {
        Some(l) => Some(l.local_addr().map_err(|e| Failure::Io(e.to_string()))?.to_string()),
        None => None,
    };
    print(&json!({ "protocol": server::PROTOCOL, "tcp": tcp_addr.to_string(), "bridge": bridge_addr, "houses": catalog.ids() }));
    eprintln!("serving on {tcp_addr}");
    if let Some(l) = bridge {
        let c = catalog.clone();
        thread::spawn(move || server::run_bridge(l, c));
    }
    server::run_tcp(tcp, catalog).map_err(|e| Failure::Io(e.to_string()))
}

fn replay(args: ReplayArgs) -> Outcome {
    let demo = load_trajectory(&args.traj)?;
    let house = house_for(args.house.as_deref(), &demo.house_id)?;
    if args.verify {
        let report = validate_world(&house, &demo.start, &demo.config);
        let result = if report.is_valid() { demo.verify(&house).map_err(|d| d.to_string()) } else {
            Err("start state fails validation".to_string())
        };
        print(&json!({
            "house_id": demo.house_id,
            "steps": demo.steps.len(),
            "consistent": result.is_ok(),
            "divergence": result.as_ref().err(),
        }));
        return result.map_err(Failure::Invalid);
    }
    let replayed = trajectory::replay(&house, &demo.start, &demo.actions(), &demo.config)
        .map_err(|e| Failure::Invalid(e.to_string()))?;
    print(&json!({
        "house_id": replayed.house_id,
        "steps": replayed.steps.len(),
        "final_state": replayed.last_state(),
        "interactions": extract_interactions(&replayed),
    }));
    Ok(())
}

fn final_point(house: &House, demo: &Demonstration) -> Result<RoomPoint, Failure> {
    let p = demo.last_state().agent.position;
    let room = house.room_at(p).ok_or_else(|| Failure::Invalid("final agent position is outside every room".into()))?;
    Ok(RoomPoint::new(&room.room_id, p.x, p.z))
}

fn eval(cmd: EvalCommand) -> Outcome {
    match cmd {
        EvalCommand::Nav { house, agent, goal } => {
            let (agent, goal) = (parse_point(&agent)?, parse_point(&goal)?);
            let house = resolve_house(&house)?;
            let e = navigation_error(&house, &agent, &goal).map_err(|e| Failure::Invalid(e.to_string()))?;
            print(&serde_json::to_value(EvalReport { navigation_error_m: Some(e), ..EvalReport::default() }).unwrap());
            Ok(())
        }
        EvalCommand::Manip { agent_traj, ref_traj, house } => {
            let agent = load_trajectory(&agent_traj)?;
            let reference = load_trajectory(&ref_traj)?;
            let m = manipulation_accuracy(&extract_interactions(&agent), &extract_interactions(&reference));
            let mut report = EvalReport::default().with_match(m);
            let house = match house {
                Some(h) => Some(resolve_house(&h)?),
                None if agent.house_id == reference.house_id => {
                    sample_house(&agent.house_id).and_then(Result::ok)
                }
                None => None,
            };
            if let Some(h) = house {
                let e = navigation_error(&h, &final_point(&h, &agent)?, &final_point(&h, &reference)?)
                    .map_err(|e| Failure::Invalid(e.to_string()))?;
                report.navigation_error_m = Some(e);
            }
            print(&serde_json::to_value(report).unwrap());
            Ok(())
        }
    }
}

fn validate(args: ValidateArgs) -> Outcome {
    let bytes = read(&args.house)?;
    let house: House = serde_json::from_slice(&bytes).map_err(|e| {
        print(&json!({ "valid": false, "error": e.to_string() }));
        Failure::Invalid(format!("{}: {e}", args.house.display()))
    })?;
    let report = validate_house(&house);
    print(&json!({ "house_id": house.house_id, "valid": report.is_valid(), "violations": report.violations }));
    if report.is_valid() {
        Ok(())
    } else {
        Err(Failure::Invalid(format!("{} violation(s)", report.violations.len())))
    }
}

fn gen(args: GenArgs) -> Outcome {
    let house = resolve_house(&args.house)?;
    let config = load_config(args.config.as_ref())?;
    let spec: Vec<ScenarioEntry> = serde_json::from_slice(&read(&args.spec)?)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", args.spec.display())))?;
    let world = generate_scenario(&house, &config, &spec, args.seed).map_err(scenario_failure)?;
    let mut bytes = serde_json::to_vec_pretty(&world).expect("worlds serialize");
    bytes.push(b'\n');
    write(&args.out, &bytes)?;
    print(&json!({ "house_id": house.house_id, "seed": args.seed, "objects": world.objects.len(), "out": args.out }));
    Ok(())
}

fn observe_cmd(args: ObserveArgs) -> Outcome {
    let world = load_world(&args.world)?;
    let house = house_for(args.house.as_deref(), &world.house_id)?;
    let config = load_config(args.config.as_ref())?;
    let report = validate_world(&house, &world, &config);
    if !report.is_valid() {
        print(&json!({ "valid": false, "violations": report.violations }));
        return Err(Failure::Invalid("world fails validation".into()));
    }
    if args.width == 0 || args.height == 0 || !(args.fov > 0.0 && args.fov < 180.0) || !(args.far > 0.0) {
        return Err(Failure::Usage("raster size, field of view and far plane must be positive".into()));
    }
    let obs = ObsConfig { width: args.width, height: args.height, h_fov: args.fov, far: args.far, raster: !args.no_raster };
    let o = observe(&house, &world, &config, &obs);
    match args.out {
        Some(p) => {
            write(&p, &serde_json::to_vec(&o).expect("observations serialize"))?;
            print(&json!({ "visible": o.visible.len(), "out": p }));
        }
        None => print(&serde_json::to_value(&o).unwrap()),
    }
    Ok(())
}

fn record(args: RecordArgs) -> Outcome {
    let house = resolve_house(&args.house)?;
    let config = load_config(args.config.as_ref())?;
    let start = match &args.world {
        Some(p) => load_world(p)?,
        None => house.initial_world(),
    };
    let text = String::from_utf8(read(&args.actions)?).map_err(|e| Failure::Invalid(e.to_string()))?;
    let actions = parse_actions(&text)?;
    let demo = trajectory::replay(&house, &start, &actions, &config).map_err(|e| Failure::Invalid(e.to_string()))?;
    write(&args.out, &encode(&demo))?;
    print(&json!({
        "house_id": demo.house_id,
        "steps": demo.steps.len(),
        "interactions": extract_interactions(&demo).len(),
        "out": args.out,
    }));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Serve(a) => serve(a),
        Command::Replay(a) => replay(a),
        Command::Eval(c) => eval(c),
        Command::Validate(a) => validate(a),
        Command::Gen(a) => gen(a),
        Command::Observe(a) => observe_cmd(a),
        Command::Record(a) => record(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("housesim: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
