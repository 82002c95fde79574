//! The per-session writer task. It owns the [`SessionCore`], drains the
//! request queue, ticks on a fixed period, and publishes every event as an
//! immutable JSON string.

use std::sync::Arc;
use std::time::Duration;

use fieldnav_core::field::{FieldError, HumanoidField};
use fieldnav_core::session::{AckEvent, ErrorEvent, Event, MapSlice, SessionCore, StateFrame, PROTO};
use nalgebra::Vector3;
use tokio::sync::{broadcast, mpsc, oneshot};
use tokio::task::JoinHandle;
use tokio::time::MissedTickBehavior;

pub enum Request {
    Goal { x: f64, y: f64, reply: oneshot::Sender<Result<AckEvent, ErrorEvent>> },
    Teleport { x: f64, y: f64, reply: oneshot::Sender<Result<(), ErrorEvent>> },
}

/// Handle held by the router. Dropping the last one stops the task.
pub struct SessionHandle {
    pub requests: mpsc::Sender<Request>,
    pub events: broadcast::Sender<Arc<str>>,
    pub initial: StateFrame,
    pub scene_json: Arc<str>,
}

/// Full-resolution blocked mask of the scene, for the scene endpoint.
pub fn scene_body(core: &SessionCore, mask: MapSlice) -> String {
    serde_json::json!({ "proto": PROTO, "manifest": core.scene(), "map": mask }).to_string()
}

type Rebuild = (Vector3<f64>, JoinHandle<Result<HumanoidField, FieldError>>);

pub fn spawn_session(core: SessionCore, period: Duration, scene_json: String) -> SessionHandle {
    let (req_tx, req_rx) = mpsc::channel(32);
    let (ev_tx, _) = broadcast::channel(64);
    let handle = SessionHandle {
        requests: req_tx,
        events: ev_tx.clone(),
        initial: core.frame(),
        scene_json: scene_json.into(),
    };
    tokio::spawn(run(core, period, req_rx, ev_tx));
    handle
}

fn publish(events: &broadcast::Sender<Arc<str>>, ev: &Event) {
    // no subscribers is fine
    let _ = events.send(ev.to_json().into());
}

fn error_event(core: &SessionCore, message: String) -> ErrorEvent {
    ErrorEvent { proto: PROTO, tick: core.tick_count(), message }
}

async fn run(
    mut core: SessionCore,
    period: Duration,
    mut requests: mpsc::Receiver<Request>,
    events: broadcast::Sender<Arc<str>>,
) {
    let mut ticker = tokio::time::interval(period);
    ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);
    ticker.tick().await;
    let mut rebuild: Option<Rebuild> = None;
    loop {
        tokio::select! {
            biased;
            req = requests.recv() => match req {
                None => break,
                Some(Request::Goal { x, y, reply }) => {
                    let out = core.request_goal(x, y).map_err(|e| error_event(&core, e.to_string()));
                    if let Ok(ack) = &out {
                        // the ack goes out before any frame can carry the goal
                        publish(&events, &Event::Ack(ack.clone()));
                        let job = core.field_job();
                        let goal = Vector3::from(ack.goal);
                        rebuild = Some((goal, tokio::task::spawn_blocking(move || job.build(&goal))));
                    }
                    let _ = reply.send(out);
                }
                Some(Request::Teleport { x, y, reply }) => {
                    let _ = reply.send(core.teleport(x, y).map_err(|e| error_event(&core, e.to_string())));
                }
            },
            _ = ticker.tick() => {
                let mut swap = None;
                if rebuild.as_ref().is_some_and(|(_, h)| h.is_finished()) {
                    let (goal, h) = rebuild.take().expect("checked above");
                    match h.await {
                        Ok(Ok(field)) => swap = Some(Arc::new(field)),
                        Ok(Err(e)) => publish(&events, &Event::Error(error_event(&core, format!("field rebuild for {goal:?} failed: {e}")))),
                        Err(e) => publish(&events, &Event::Error(error_event(&core, format!("field rebuild aborted: {e}")))),
                    }
                }
                // late rebuilds leave the agent holding inside the core
                publish(&events, &core.tick(swap));
            }
        }
    }
}
