//! Session protocol for programmatic clients.
//!
//! Stream framing: a 4-byte big-endian payload length, then that many bytes
//! of UTF-8 JSON. The browser bridge carries the same JSON, one request per
//! WebSocket message. Every request is an object with a client-chosen `id`
//! and a `tag`; every response echoes the `id` and carries
//! `status: "ok" | "error"` (errors add `code` and `message`).
//!
//! A frame that is not JSON is answered with `malformed-frame` and the
//! connection is closed. Well-formed JSON with a bad shape is answered with
//! an error and the session continues.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;
use std::thread;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::evaluation::{manipulation_accuracy, navigation_error, EvalError, EvalReport, RoomPoint};
use crate::interaction::InteractionEvent;
use crate::kinematics::{apply_action, Action, Event, StepConfig};
use crate::observation::{observe, ObsConfig};
use crate::samples::sample_houses;
use crate::scenario::{generate_scenario, place_object, remove_object, ScenarioEntry, ScenarioError, SurfaceRef};
use crate::scene::{validate_house, validate_world, House, WorldState};
use crate::trajectory::coalesce;

pub const PROTOCOL: &str = "housesim/1";
pub const DEFAULT_PORT: u16 = 9361;
pub const DEFAULT_BRIDGE_PORT: u16 = 9362;
/// Largest accepted frame payload, bytes.
pub const MAX_FRAME: usize = 16 << 20;
/// Largest observation raster a client may request, cells.
pub const MAX_RASTER_CELLS: usize = 512 * 512;

/// Houses a server can start sessions in; immutable once serving starts.
#[derive(Clone, Debug, Default)]
pub struct Catalog {
    houses: BTreeMap<String, Arc<House>>,
}

impl Catalog {
    pub fn with_samples() -> Self {
        let mut c = Self::default();
        for h in sample_houses() {
            c.insert(h);
        }
        c
    }

    /// Adds or replaces a house under its id.
    pub fn insert(&mut self, house: House) {
        self.houses.insert(house.house_id.clone(), Arc::new(house));
    }

    pub fn get(&self, house_id: &str) -> Option<Arc<House>> {
        self.houses.get(house_id).cloned()
    }

    pub fn ids(&self) -> Vec<String> {
        self.houses.keys().cloned().collect()
    }
}

/// Whether the connection should stay open after a response.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Continue,
    Close,
}

struct Active {
    house: Arc<House>,
    config: StepConfig,
    start: WorldState,
    world: WorldState,
    step: usize,
    events: Vec<InteractionEvent>,
}

/// One client's world. Sessions share nothing but the immutable catalog.
pub struct Session {
    catalog: Arc<Catalog>,
    active: Option<Active>,
}

struct Failure {
    code: &'static str,
    message: String,
    detail: Option<Value>,
}

fn fail(code: &'static str, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into(), detail: None }
}

type Reply = Result<Map<String, Value>, Failure>;

fn fields<T: DeserializeOwned>(req: &Value) -> Result<T, Failure> {
    serde_json::from_value(req.clone()).map_err(|e| fail("bad-request", e.to_string()))
}

fn obj(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("protocol values serialize")
}

fn scenario_failure(e: ScenarioError) -> Failure {
    let code = match &e {
        ScenarioError::MalformedFile(_) => "malformed-house",
        ScenarioError::ValidationFailed(_) => "invalid-house",
        ScenarioError::OutOfBounds { .. } => "out-of-bounds",
        ScenarioError::CollisionAtTarget(_) => "collision-at-target",
        ScenarioError::UnknownSurface(_) => "unknown-surface",
        ScenarioError::UnknownType(_) => "unknown-type",
        ScenarioError::UnknownInstance(_) => "unknown-instance",
        ScenarioError::HeldObject(_) => "held-object",
        ScenarioError::PlacementBudgetExceeded(_) => "placement-budget-exceeded",
    };
    fail(code, e.to_string())
}

fn eval_failure(e: EvalError) -> Failure {
    let code = match e {
        EvalError::PointOutsideRoom { .. } => "point-outside-room",
        EvalError::Unreachable { .. } => "unreachable",
    };
    fail(code, e.to_string())
}

#[derive(Deserialize)]
struct InitRequest {
    house_id: Option<String>,
    house: Option<House>,
    world: Option<WorldState>,
    scenario: Option<Vec<ScenarioEntry>>,
    seed: Option<u64>,
    config: Option<StepConfig>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ObserveArg {
    Flag(bool),
    Config(ObsConfig),
}

#[derive(Deserialize)]
struct ActionRequest {
    name: String,
    observe: Option<ObserveArg>,
}

#[derive(Deserialize)]
struct PlaceRequest {
    #[serde(rename = "type")]
    type_id: String,
    #[serde(default)]
    yaw: f64,
    surface: String,
    container: Option<String>,
    x: f64,
    z: f64,
}

#[derive(Deserialize)]
struct RemoveRequest {
    instance: String,
}

#[derive(Deserialize)]
struct NavRequest {
    agent: Option<RoomPoint>,
    goal: RoomPoint,
}

#[derive(Deserialize)]
struct ManipRequest {
    agent: Option<Vec<InteractionEvent>>,
    reference: Vec<InteractionEvent>,
}

fn check_obs(obs: &ObsConfig) -> Result<(), Failure> {
    let cells = obs.width.checked_mul(obs.height).unwrap_or(usize::MAX);
    let ok = obs.width > 0
        && obs.height > 0
        && cells <= MAX_RASTER_CELLS
        && obs.h_fov > 0.0
        && obs.h_fov < 180.0
        && obs.far > 0.0
        && obs.far.is_finite();
    if ok {
        Ok(())
    } else {
        Err(fail("bad-request", "observation size or field of view out of range"))
    }
}

impl Session {
    pub fn new(catalog: Arc<Catalog>) -> Self {
        Self { catalog, active: None }
    }

    /// Current world, once initialized.
    pub fn world(&self) -> Option<&WorldState> {
        self.active.as_ref().map(|a| &a.world)
    }

    /// Handles one raw frame payload and returns the encoded response.
    pub fn handle_frame(&mut self, payload: &[u8]) -> (Vec<u8>, Outcome) {
        match serde_json::from_slice::<Value>(payload) {
            Ok(req) => {
                let (resp, outcome) = self.handle(&req);
                (serde_json::to_vec(&resp).expect("responses serialize"), outcome)
            }
            Err(e) => {
                let resp = error_response(&Value::Null, None, &fail("malformed-frame", e.to_string()));
                (serde_json::to_vec(&resp).expect("responses serialize"), Outcome::Close)
            }
        }
    }

    /// Handles one decoded request.
    pub fn handle(&mut self, req: &Value) -> (Value, Outcome) {
        let id = req.get("id").cloned().unwrap_or(Value::Null);
        if !req.is_object() {
            return (error_response(&id, None, &fail("bad-request", "request must be a JSON object")), Outcome::Continue);
        }
        let Some(tag) = req.get("tag").and_then(Value::as_str) else {
            return (error_response(&id, None, &fail("bad-request", "missing string `tag`")), Outcome::Continue);
        };
        let outcome = if tag == "bye" { Outcome::Close } else { Outcome::Continue };
        let reply = self.dispatch(tag, req);
        let resp = match reply {
            Ok(mut body) => {
                body.insert("id".into(), id);
                body.insert("tag".into(), Value::String(tag.to_string()));
                body.insert("status".into(), "ok".into());
                Value::Object(body)
            }
            Err(f) => error_response(&id, Some(tag), &f),
        };
        (resp, outcome)
    }

    fn dispatch(&mut self, tag: &str, req: &Value) -> Reply {
        match tag {
            "hello" => Ok(obj(json!({
                "server": format!("housesim {}", env!("CARGO_PKG_VERSION")),
                "protocol": PROTOCOL,
                "houses": self.catalog.ids(),
            }))),
            "init" => self.init(req),
            "bye" => Ok(Map::new()),
            "action" | "observe" | "state" | "place" | "remove" | "reset" | "eval-nav" | "eval-manip" => {
                let Some(active) = self.active.as_mut() else {
                    return Err(fail("not-initialized", "send `init` first"));
                };
                active.dispatch(tag, req)
            }
            other => Err(fail("unknown-tag", format!("unknown tag `{other}`"))),
        }
    }

    fn init(&mut self, req: &Value) -> Reply {
        let r: InitRequest = fields(req)?;
        let house = match (r.house, r.house_id) {
            (Some(h), _) => {
                let report = validate_house(&h);
                if !report.is_valid() {
                    let mut f = fail("invalid-house", "inline house failed validation");
                    f.detail = Some(to_value(&report));
                    return Err(f);
                }
                Arc::new(h)
            }
            (None, Some(id)) => {
                self.catalog.get(&id).ok_or_else(|| fail("unknown-house", format!("no house `{id}`")))?
            }
            (None, None) => return Err(fail("bad-request", "`init` needs `house_id` or `house`")),
        };
        let config = r.config.unwrap_or_default();
        config.validate_for(&house).map_err(|e| fail("invalid-config", e.to_string()))?;
        let world = match (r.world, r.scenario) {
            (Some(w), _) => w,
            (None, Some(spec)) => {
                generate_scenario(&house, &config, &spec, r.seed.unwrap_or(0)).map_err(scenario_failure)?
            }
            (None, None) => house.initial_world(),
        };
        let report = validate_world(&house, &world, &config);
        if !report.is_valid() {
            let mut f = fail("invalid-world", "start world failed validation");
            f.detail = Some(to_value(&report));
            return Err(f);
        }
        let body = obj(json!({ "house_id": house.house_id, "state": to_value(&world) }));
        self.active = Some(Active { house, config, start: world.clone(), world, step: 0, events: Vec::new() });
        Ok(body)
    }
}

impl Active {
    fn dispatch(&mut self, tag: &str, req: &Value) -> Reply {
        let house = self.house.clone();
        match tag {
            "action" => {
                let r: ActionRequest = fields(req)?;
                let action: Action = r.name.parse().map_err(|e: crate::kinematics::UnknownAction| {
                    fail("unknown-action", e.to_string())
                })?;
                let obs = match r.observe {
                    None | Some(ObserveArg::Flag(false)) => None,
                    Some(ObserveArg::Flag(true)) => Some(ObsConfig::default()),
                    Some(ObserveArg::Config(c)) => Some(c),
                };
                if let Some(o) = &obs {
                    check_obs(o)?;
                }
                let (next, events) = apply_action(&house, &self.world, action, &self.config);
                self.world = next;
                self.events.extend(events.iter().filter_map(Event::interaction));
                self.step += 1;
                let mut body = obj(json!({
                    "step": self.step,
                    "events": to_value(&events),
                    "state": to_value(&self.world),
                }));
                if let Some(o) = obs {
                    body.insert("observation".into(), to_value(&observe(&house, &self.world, &self.config, &o)));
                }
                Ok(body)
            }
            "observe" => {
                let o: ObsConfig = fields(req)?;
                check_obs(&o)?;
                Ok(obj(json!({ "observation": to_value(&observe(&house, &self.world, &self.config, &o)) })))
            }
            "state" => Ok(self.state_body()),
            "place" => {
                let r: PlaceRequest = fields(req)?;
                let target = match r.container {
                    Some(c) => SurfaceRef::Interior { container: c, surface: r.surface },
                    None => SurfaceRef::Room { surface: r.surface },
                };
                let (w, instance) = place_object(&house, &self.world, &self.config, &r.type_id, r.yaw, &target, r.x, r.z)
                    .map_err(scenario_failure)?;
                self.world = w;
                let mut body = self.state_body();
                body.insert("instance".into(), instance.into());
                Ok(body)
            }
            "remove" => {
                let r: RemoveRequest = fields(req)?;
                self.world = remove_object(&house, &self.world, &self.config, &r.instance).map_err(scenario_failure)?;
                Ok(self.state_body())
            }
            "reset" => {
                self.world = self.start.clone();
                self.step = 0;
                self.events.clear();
                Ok(self.state_body())
            }
            "eval-nav" => {
                let r: NavRequest = fields(req)?;
                let agent = match r.agent {
                    Some(a) => a,
                    None => {
                        let p = self.world.agent.position;
                        let room = house.room_at(p).map(|r| r.room_id.clone()).unwrap_or_default();
                        RoomPoint { room, x: p.x, z: p.z }
                    }
                };
                let e = navigation_error(&house, &agent, &r.goal).map_err(eval_failure)?;
                Ok(obj(to_value(&EvalReport { navigation_error_m: Some(e), ..EvalReport::default() })))
            }
            "eval-manip" => {
                let r: ManipRequest = fields(req)?;
                let agent = coalesce(r.agent.as_ref().unwrap_or(&self.events));
                let reference = coalesce(&r.reference);
                let m = manipulation_accuracy(&agent, &reference);
                Ok(obj(to_value(&EvalReport::default().with_match(m))))
            }
            _ => unreachable!("tags filtered by Session::dispatch"),
        }
    }

    fn state_body(&self) -> Map<String, Value> {
        obj(json!({ "step": self.step, "state": to_value(&self.world) }))
    }
}

fn error_response(id: &Value, tag: Option<&str>, f: &Failure) -> Value {
    let mut m = Map::new();
    m.insert("id".into(), id.clone());
    if let Some(t) = tag {
        m.insert("tag".into(), t.into());
    }
    m.insert("status".into(), "error".into());
    m.insert("code".into(), f.code.into());
    m.insert("message".into(), f.message.clone().into());
    if let Some(d) = &f.detail {
        m.insert("detail".into(), d.clone());
    }
    Value::Object(m)
}

/// Reads one length-prefixed frame; `Ok(None)` on a clean end of stream.
/// Oversized lengths are reported as `InvalidData` without reading the payload.
pub fn read_frame(r: &mut impl Read) -> io::Result<Option<Vec<u8>>> {
    let mut len = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut len[got..])? {
            0 if got == 0 => return Ok(None),
            0 => return Err(io::ErrorKind::UnexpectedEof.into()),
            n => got += n,
        }
    }
    let n = u32::from_be_bytes(len) as usize;
    if n > MAX_FRAME {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("frame of {n} bytes exceeds limit")));
    }
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf)?;
    Ok(Some(buf))
}

pub fn write_frame(w: &mut impl Write, payload: &[u8]) -> io::Result<()> {
    let n = u32::try_from(payload.len()).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "frame too large"))?;
    w.write_all(&n.to_be_bytes())?;
    w.write_all(payload)?;
    w.flush()
}

/// Serves one length-prefixed stream connection until the peer leaves,
/// says `bye`, or sends a malformed frame.
pub fn serve_stream<S: Read + Write>(catalog: Arc<Catalog>, stream: &mut S) -> io::Result<()> {
    let mut session = Session::new(catalog);
    loop {
        let payload = match read_frame(stream) {
            Ok(Some(p)) => p,
            Ok(None) => return Ok(()),
            Err(e) if e.kind() == io::ErrorKind::InvalidData => {
                let resp = error_response(&Value::Null, None, &fail("frame-too-large", e.to_string()));
                write_frame(stream, &serde_json::to_vec(&resp).expect("responses serialize"))?;
                return Ok(());
            }
            Err(e) => return Err(e),
        };
        let (resp, outcome) = session.handle_frame(&payload);
        write_frame(stream, &resp)?;
        if outcome == Outcome::Close {
            return Ok(());
        }
    }
}

/// Accepts stream connections forever, one thread per connection.
pub fn run_tcp(listener: TcpListener, catalog: Arc<Catalog>) -> io::Result<()> {
    for conn in listener.incoming() {
        let mut stream = match conn {
            Ok(s) => s,
            Err(e) => {
                eprintln!("accept failed: {e}");
                continue;
            }
        };
        let catalog = catalog.clone();
        thread::spawn(move || {
            let _ = stream.set_nodelay(true);
            if let Err(e) = serve_stream(catalog, &mut stream) {
                eprintln!("connection ended with error: {e}");
            }
        });
    }
    Ok(())
}

/// Serves one WebSocket connection: each text or binary message is a request.
pub fn serve_bridge_connection(catalog: Arc<Catalog>, stream: TcpStream) -> Result<(), tungstenite::Error> {
    use tungstenite::Message;
    let mut ws = tungstenite::accept(stream).map_err(|e| match e {
        tungstenite::HandshakeError::Failure(e) => e,
        tungstenite::HandshakeError::Interrupted(_) => tungstenite::Error::ConnectionClosed,
    })?;
    let mut session = Session::new(catalog);
    loop {
        let payload = match ws.read() {
            Ok(Message::Text(t)) => t.as_bytes().to_vec(),
            Ok(Message::Binary(b)) => b.to_vec(),
            Ok(Message::Close(_)) | Err(tungstenite::Error::ConnectionClosed) => return Ok(()),
            Ok(_) => continue,
            Err(e) => return Err(e),
        };
        let (resp, outcome) = session.handle_frame(&payload);
        ws.send(Message::text(String::from_utf8(resp).expect("JSON is UTF-8")))?;
        if outcome == Outcome::Close {
            let _ = ws.close(None);
            let _ = ws.flush();
            return Ok(());
        }
    }
}

/// Accepts bridge connections forever, one thread per connection.
pub fn run_bridge(listener: TcpListener, catalog: Arc<Catalog>) -> io::Result<()> {
    for conn in listener.incoming() {
        let stream = match conn {
            Ok(s) => s,
            Err(e) => {
                eprintln!("bridge accept failed: {e}");
                continue;
            }
        };
        let catalog = catalog.clone();
        thread::spawn(move || {
            if let Err(e) = serve_bridge_connection(catalog, stream) {
                eprintln!("bridge connection ended with error: {e}");
            }
        });
    }
    Ok(())
}
