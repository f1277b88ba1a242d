//! Single-session protocol server over any line-based transport.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;

use crate::env::{
    build_env_config, Environment, EnvError, GridEnv, SimFileConfig, TrainFileConfig,
};

use super::{Op, Request, Response, StepInfoJson, PROTOCOL_VERSION};

/// Protocol session state: one environment, strictly serial requests.
#[derive(Default)]
pub struct Session {
    env: Option<GridEnv>,
    episode_open: bool,
}

impl Session {
    pub fn new() -> Self {
        Self::default()
    }

    /// Handle one raw request line; never panics on malformed input.
    pub fn handle_line(&mut self, line: &str) -> (Response, bool) {
        let request: Request = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(_) => return (Response::error("bad_request"), false),
        };
        if request.v != PROTOCOL_VERSION {
            return (Response::error("bad_version"), false);
        }
        match request.op {
            Op::Init => (self.on_init(&request), false),
            Op::Spaces => (self.on_spaces(), false),
            Op::Reset => (self.on_reset(), false),
            Op::Step => (self.on_step(&request), false),
            Op::Close => (
                Response {
                    ok: true,
                    ..Default::default()
                },
                true,
            ),
        }
    }

    fn on_init(&mut self, request: &Request) -> Response {
        let (Some(sim_path), Some(train_path)) =
            (request.sim_config.as_ref(), request.train_config.as_ref())
        else {
            return Response::error("missing_config");
        };
        let built = SimFileConfig::from_path(sim_path).and_then(|sim| {
            let train = TrainFileConfig::from_path(train_path)?;
            let env_config = build_env_config(&sim, &train)?;
            GridEnv::with_distribution(
                env_config,
                sim.scenario_distribution(),
                request.seed.unwrap_or(0),
            )
        });
        match built {
            Ok(env) => {
                self.env = Some(env);
                self.episode_open = false;
                Response {
                    ok: true,
                    ..Default::default()
                }
            }
            Err(e) => Response::error(&format!("init_failed: {e}")),
        }
    }

    fn on_spaces(&self) -> Response {
        match &self.env {
            Some(env) => Response {
                ok: true,
                n_i: Some(env.observation_len()),
                n_o: Some(env.action_count()),
                ..Default::default()
            },
            None => Response::error("not_initialized"),
        }
    }

    fn on_reset(&mut self) -> Response {
        let Some(env) = self.env.as_mut() else {
            return Response::error("not_initialized");
        };
        match env.reset() {
            Ok(observation) => {
                self.episode_open = true;
                Response {
                    ok: true,
                    observation: Some(observation),
                    ..Default::default()
                }
            }
            Err(e) => Response::error(&format!("reset_failed: {e}")),
        }
    }

    fn on_step(&mut self, request: &Request) -> Response {
        let Some(env) = self.env.as_mut() else {
            return Response::error("not_initialized");
        };
        if !self.episode_open {
            return Response::error("not_initialized");
        }
        let Some(action) = request.action else {
            return Response::error("bad_action");
        };
        match env.step(action) {
            Ok(out) => {
                if out.done {
                    self.episode_open = false;
                }
                Response {
                    ok: true,
                    observation: Some(out.observation),
                    reward: Some(out.reward),
                    done: Some(out.done),
                    info: Some(StepInfoJson {
                        time: out.info.time,
                        invalid_action: out.info.invalid_action,
                        shed_pu: out.info.shed_pu,
                        synchronism_lost: out.info.synchronism_lost,
                    }),
                    ..Default::default()
                }
            }
            Err(EnvError::BadAction { .. }) => Response::error("bad_action"),
            Err(EnvError::EpisodeDone) => {
                self.episode_open = false;
                Response::error("episode_done")
            }
            Err(e) => Response::error(&format!("step_failed: {e}")),
        }
    }
}

/// Serve one session over a line-based reader/writer pair until `close`,
/// EOF, or a write failure.
pub fn serve_session<R: BufRead, W: Write>(reader: R, mut writer: W) -> std::io::Result<()> {
    let mut session = Session::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (response, quit) = session.handle_line(&line);
        let encoded = serde_json::to_string(&response).expect("response serializes");
        writer.write_all(encoded.as_bytes())?;
        writer.write_all(b"\n")?;
        writer.flush()?;
        if quit {
            break;
        }
    }
    Ok(())
}

/// Serve a single TCP client on `addr` (e.g. `127.0.0.1:7432`), then return.
pub fn serve_tcp(addr: &str) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr)?;
    let (stream, _) = listener.accept()?;
    let reader = BufReader::new(stream.try_clone()?);
    serve_session(reader, stream)
}

/// Serve over standard input/output.
pub fn serve_stdio() -> std::io::Result<()> {
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    serve_session(stdin.lock(), stdout.lock())
}
