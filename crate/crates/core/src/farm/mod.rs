//! Master side of the farm: launching workers, the slave registry,
//! environment export, remote evaluation and the scatter/gather pipeline.

mod slave;

pub use slave::{
    CloseOutcome, Directive, LaunchConfig, SlaveHandle, SlaveState, Transport, CLOSE_GRACE,
    DEFAULT_EVAL_TIMEOUT, DEFAULT_HANDSHAKE_TIMEOUT, WORKER_CMD_ENV,
};

use std::fmt;
use std::io;
use std::thread;
use std::time::Duration;

use log::{info, warn};
use thiserror::Error;

use crate::numeric::{build_tridiag, dot3, eigenvalues, Matrix, NumericError};
use crate::protocol::{Arg, ErrorCode, TaskExpr};
use crate::value::{chop, partition, Env, Rng, Value, ValueError, DEFAULT_CHOP_TOLERANCE};

#[derive(Debug, Error)]
pub enum FarmError {
    #[error("cannot start {transport} worker: {source}")]
    Spawn {
        transport: String,
        #[source]
        source: io::Error,
    },
    #[error("{transport} worker failed the handshake: {source}")]
    Handshake {
        transport: String,
        #[source]
        source: Box<FarmError>,
    },
    #[error("slave {processor_id}: {code} {message}")]
    Remote {
        processor_id: u64,
        code: ErrorCode,
        message: String,
    },
    #[error("slave {processor_id}: connection lost ({detail})")]
    ConnectionLost { processor_id: u64, detail: String },
    #[error("slave {processor_id}: protocol error: {detail}")]
    Protocol { processor_id: u64, detail: String },
    #[error("slave {processor_id}: no response within {after:?}")]
    Timeout { processor_id: u64, after: Duration },
    #[error("slave {processor_id} is {state:?}")]
    NotReady { processor_id: u64, state: SlaveState },
    #[error("no slave with id {0}")]
    NoSuchSlave(u64),
    #[error("need {needed} ready slaves, have {found}")]
    NotEnoughSlaves { needed: usize, found: usize },
    #[error("export failed on {}", .0.iter().map(|(id, e)| format!("slave {id} ({e})")).collect::<Vec<_>>().join(", "))]
    Export(Vec<(u64, FarmError)>),
    #[error("{stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<FarmError>,
    },
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Value(#[from] ValueError),
}

/// Steps of [`Registry::pipeline_parallel`], used to tag failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Export,
    Build,
    Scatter,
    Gather,
    Compute,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Export => "export environment",
            Stage::Build => "build",
            Stage::Scatter => "scatter",
            Stage::Gather => "gather",
            Stage::Compute => "compute",
        })
    }
}

fn staged<T>(stage: Stage, r: Result<T, impl Into<FarmError>>) -> Result<T, FarmError> {
    r.map_err(|e| FarmError::Stage {
        stage,
        source: Box::new(e.into()),
    })
}

/// Header row of [`Registry::info_table`].
pub const INFO_HEADER: [&str; 5] = ["ID", "host", "OS", "process", "Version"];

/// Parameters of the three tridiagonal programs of the parallel pipeline:
/// (diag, upper, lower). The first is built by the master, the others by
/// the first and second slave.
pub const PROGRAM_I: (f64, f64, f64) = (0.0, 1.2, 2.1);
pub const PROGRAM_II: (f64, f64, f64) = (0.0, 2.6, 1.8);
pub const PROGRAM_III: (f64, f64, f64) = (0.0, 2.0, 3.0);
pub const DATA_FILES: [&str; 2] = ["data1.dat", "data2.dat"];

/// What `close_slaves` observed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CloseReport {
    pub clean: Vec<u64>,
    pub crashed: Vec<(u64, String)>,
    pub killed: Vec<u64>,
}

impl CloseReport {
    pub fn is_clean(&self) -> bool {
        self.crashed.is_empty() && self.killed.is_empty()
    }
}

/// The master: its slaves, its global bindings and its generator.
pub struct Registry {
    config: LaunchConfig,
    slaves: Vec<SlaveHandle>,
    env: Env,
    rng: Rng,
    next_id: u64,
}

impl Registry {
    pub fn new(config: LaunchConfig, rng: Rng) -> Self {
        Registry {
            config,
            slaves: Vec::new(),
            env: Env::new(),
            rng,
            next_id: 1,
        }
    }

    pub fn config(&self) -> &LaunchConfig {
        &self.config
    }

    pub fn env(&self) -> &Env {
        &self.env
    }

    pub fn env_mut(&mut self) -> &mut Env {
        &mut self.env
    }

    pub fn rng_mut(&mut self) -> &mut Rng {
        &mut self.rng
    }

    /// Number of ready slaves.
    pub fn len(&self) -> usize {
        self.slaves.iter().filter(|s| s.is_ready()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn slaves(&self) -> &[SlaveHandle] {
        &self.slaves
    }

    pub fn slave(&self, id: u64) -> Option<&SlaveHandle> {
        self.slaves.iter().find(|s| s.processor_id() == id)
    }

    fn slave_mut(&mut self, id: u64) -> Result<&mut SlaveHandle, FarmError> {
        self.slaves
            .iter_mut()
            .find(|s| s.processor_id() == id)
            .ok_or(FarmError::NoSuchSlave(id))
    }

    /// Start a worker, handshake, and register it under the next id. A
    /// worker that fails to start is not registered and uses no id.
    pub fn launch_slave(&mut self, transport: Transport) -> Result<u64, FarmError> {
        let id = self.next_id;
        let handle = SlaveHandle::launch(&self.config, transport, id)?;
        info!(
            "slave {id} ready: {} pid {}",
            handle.transport(),
            handle.pid()
        );
        self.next_id += 1;
        self.slaves.push(handle);
        Ok(id)
    }

    /// Header row followed by `{ID, host, OS, process, Version}` per ready
    /// slave. A slave that fails INFO keeps its row, with the error in
    /// place of its identity.
    pub fn info_table(&mut self) -> Value {
        let timeout = self.config.handshake_timeout;
        let mut rows = vec![Value::list(INFO_HEADER.map(Value::text))];
        for s in self.slaves.iter_mut().filter(|s| s.is_ready()) {
            let id = Value::Integer(s.processor_id() as i64);
            rows.push(match s.fetch_info(timeout) {
                Ok(info) => Value::list([
                    id,
                    Value::text(info.machine_name),
                    Value::text(info.system_id),
                    Value::Integer(i64::from(info.process_id)),
                    Value::text(info.version),
                ]),
                Err(e) => {
                    let mark = Value::text(format!("!! {e}"));
                    Value::list([id, mark.clone(), mark.clone(), mark.clone(), mark])
                }
            });
        }
        Value::List(rows)
    }

    /// Send every master binding to every ready slave. Slaves that fail
    /// are reported together; the rest are still updated.
    pub fn export_environment(&mut self) -> Result<(), FarmError> {
        let env = &self.env;
        let mut failures = Vec::new();
        for s in self.slaves.iter_mut().filter(|s| s.is_ready()) {
            if let Some(e) = env
                .iter()
                .find_map(|(name, value)| s.set_global(name, value).err())
            {
                warn!("export to slave {} failed: {e}", s.processor_id());
                failures.push((s.processor_id(), e));
            }
        }
        if failures.is_empty() {
            Ok(())
        } else {
            Err(FarmError::Export(failures))
        }
    }

    pub fn remote_evaluate(&mut self, id: u64, directive: &Directive) -> Result<Value, FarmError> {
        self.slave_mut(id)?.evaluate(directive)
    }

    /// Run one directive per listed slave, all at once. Ids must be
    /// distinct; results come back in input order.
    pub fn evaluate_concurrently(
        &mut self,
        jobs: &[(u64, Directive)],
    ) -> Vec<Result<Value, FarmError>> {
        let mut slots: Vec<Option<&mut SlaveHandle>> = Vec::with_capacity(jobs.len());
        let mut pool: Vec<Option<&mut SlaveHandle>> = self.slaves.iter_mut().map(Some).collect();
        for (id, _) in jobs {
            let slot = pool
                .iter_mut()
                .find(|s| s.as_ref().is_some_and(|s| s.processor_id() == *id))
                .and_then(Option::take);
            slots.push(slot);
        }
        thread::scope(|scope| {
            let running: Vec<_> = slots
                .into_iter()
                .zip(jobs)
                .map(|(slot, (id, directive))| match slot {
                    Some(handle) => Ok(scope.spawn(move || handle.evaluate(directive))),
                    None => Err(FarmError::NoSuchSlave(*id)),
                })
                .collect();
            running
                .into_iter()
                .map(|r| r.and_then(|h| h.join().expect("evaluation thread panicked")))
                .collect()
        })
    }

    /// Ids of the first `n` ready slaves, in id order.
    fn links(&self, n: usize) -> Result<Vec<u64>, FarmError> {
        let ids: Vec<u64> = self
            .slaves
            .iter()
            .filter(|s| s.is_ready())
            .map(SlaveHandle::processor_id)
            .take(n)
            .collect();
        if ids.len() < n {
            return Err(FarmError::NotEnoughSlaves {
                needed: n,
                found: ids.len(),
            });
        }
        Ok(ids)
    }

    /// The three-program pipeline: the master builds program I, the first
    /// two slaves build programs II and III into files, the master reads
    /// them back and returns the chopped eigenvalues of the triple product.
    pub fn pipeline_parallel(&mut self, ns: i64) -> Result<Value, FarmError> {
        let links = self.links(2)?;
        self.env.bind("ns", Value::Integer(ns));
        staged(Stage::Export, self.export_environment())?;

        let (d, u, l) = PROGRAM_I;
        let mat1 = staged(Stage::Build, build_tridiag(ns, d, u, l))?;

        let remote = |(d, u, l): (f64, f64, f64)| {
            TaskExpr::new(
                "tridiag",
                vec![
                    Arg::Global("ns".into()),
                    Arg::Literal(Value::Real(d)),
                    Arg::Literal(Value::Real(u)),
                    Arg::Literal(Value::Real(l)),
                ],
            )
        };
        let scatter = [
            (
                links[0],
                Directive::Export {
                    file: DATA_FILES[0].into(),
                    task: remote(PROGRAM_II),
                },
            ),
            (
                links[1],
                Directive::Export {
                    file: DATA_FILES[1].into(),
                    task: remote(PROGRAM_III),
                },
            ),
        ];
        for r in self.evaluate_concurrently(&scatter) {
            staged(Stage::Scatter, r)?;
        }

        let gather = [
            (links[0], Directive::Read(DATA_FILES[0].into())),
            (links[1], Directive::Read(DATA_FILES[1].into())),
        ];
        let mut mats = Vec::with_capacity(2);
        for r in self.evaluate_concurrently(&gather) {
            let flat = staged(Stage::Gather, r)?;
            let rows = staged(Stage::Gather, partition(&flat, ns))?;
            mats.push(staged(Stage::Gather, Matrix::from_value(&rows))?);
        }

        let product = staged(Stage::Compute, dot3(&mat1, &mats[0], &mats[1]))?;
        let spectrum = staged(Stage::Compute, eigenvalues(&product))?;
        staged(Stage::Compute, chop(&spectrum.to_value(), DEFAULT_CHOP_TOLERANCE))
    }

    /// Close every slave. Crashes and forced kills are reported, not
    /// raised; afterwards the registry is empty.
    pub fn close_slaves(&mut self) -> CloseReport {
        self.close_with_grace(CLOSE_GRACE)
    }

    pub fn close_with_grace(&mut self, grace: Duration) -> CloseReport {
        let mut report = CloseReport::default();
        let slaves = std::mem::take(&mut self.slaves);
        let outcomes: Vec<(u64, CloseOutcome)> = thread::scope(|scope| {
            let running: Vec<_> = slaves
                .into_iter()
                .map(|mut s| {
                    scope.spawn(move || {
                        let id = s.processor_id();
                        (id, s.close(grace))
                    })
                })
                .collect();
            running
                .into_iter()
                .map(|h| h.join().expect("close thread panicked"))
                .collect()
        });
        for (id, outcome) in outcomes {
            match outcome {
                CloseOutcome::Clean => report.clean.push(id),
                CloseOutcome::Crashed(why) => {
                    warn!("slave {id} had crashed: {why}");
                    report.crashed.push((id, why));
                }
                CloseOutcome::Killed => {
                    warn!("slave {id} did not exit and was killed");
                    report.killed.push(id);
                }
            }
        }
        report
    }
}

impl Drop for Registry {
    fn drop(&mut self) {
        if !self.slaves.is_empty() {
            self.close_with_grace(Duration::from_millis(500));
        }
    }
}

/// The same computation as [`Registry::pipeline_parallel`] in a single
/// process, without files or workers.
pub fn pipeline_sequential(ns: i64) -> Result<Value, FarmError> {
    let build = |(d, u, l): (f64, f64, f64)| build_tridiag(ns, d, u, l);
    let product = dot3(&build(PROGRAM_I)?, &build(PROGRAM_II)?, &build(PROGRAM_III)?)?;
    Ok(chop(&eigenvalues(&product)?.to_value(), DEFAULT_CHOP_TOLERANCE)?)
}
