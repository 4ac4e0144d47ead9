//! Deterministic in-process transport.
//!
//! Messages are keyed by `(phase, kind, src, dst)` and each receive waits
//! for exactly one key, so the content every rank sees is independent of
//! scheduling. Ranks run either round-robin on the calling thread or on
//! one OS thread each; both give identical outputs and traces.
//!
//! The broker declares a deadlock when every unfinished rank is waiting on
//! a message that has not been posted, and fails all of them with a
//! snapshot of what each was waiting for.

use std::collections::BTreeMap;
use std::future::Future;
use std::pin::Pin;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::task::{Context, Poll, Wake, Waker};
use std::thread::Thread;

use super::transport::{Event, Kind, Phase, TraceRecord, Transport};
use super::ProtocolError;

type Key = (Phase, Kind, usize, usize);

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExecMode {
    /// All ranks polled in turn on the calling thread.
    #[default]
    Cooperative,
    /// One scoped OS thread per rank.
    Threaded,
}

struct State {
    mailbox: BTreeMap<Key, Vec<u8>>,
    waiting: Vec<Option<(Key, Waker)>>,
    finished: Vec<bool>,
    deadlock: Option<(Phase, String)>,
    trace: Vec<TraceRecord>,
    events: Vec<Vec<Event>>,
}

impl State {
    fn deadlocked(&self) -> bool {
        let mut any = false;
        for (r, w) in self.waiting.iter().enumerate() {
            if self.finished[r] {
                continue;
            }
            match w {
                Some((key, _)) if !self.mailbox.contains_key(key) => any = true,
                _ => return false,
            }
        }
        any
    }

    fn snapshot(&self) -> (Phase, String) {
        let mut phase = Phase::Scatter;
        let parts: Vec<String> = self
            .waiting
            .iter()
            .enumerate()
            .filter_map(|(r, w)| {
                let ((p, kind, src, _), _) = w.as_ref()?;
                phase = phase.min(*p);
                Some(format!("rank {r} awaits {kind:?} from {src} in {p}"))
            })
            .collect();
        (phase, parts.join("; "))
    }

    fn fail_all(&mut self) {
        let snap = self.snapshot();
        self.deadlock = Some(snap);
        for w in self.waiting.iter_mut() {
            if let Some((_, waker)) = w.take() {
                waker.wake();
            }
        }
    }
}

struct Broker {
    state: Mutex<State>,
}

impl Broker {
    fn new(ranks: usize) -> Self {
        Broker {
            state: Mutex::new(State {
                mailbox: BTreeMap::new(),
                waiting: (0..ranks).map(|_| None).collect(),
                finished: vec![false; ranks],
                deadlock: None,
                trace: Vec::new(),
                events: vec![Vec::new(); ranks],
            }),
        }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn post(&self, key: Key, payload: Vec<u8>) {
        let mut st = self.lock();
        let (phase, kind, src, dst) = key;
        st.trace.push(TraceRecord {
            phase,
            kind,
            src,
            dst,
            bytes: payload.len(),
        });
        st.mailbox.insert(key, payload);
        if st.waiting[dst].as_ref().is_some_and(|(k, _)| *k == key) {
            if let Some((_, w)) = st.waiting[dst].take() {
                w.wake();
            }
        }
    }

    fn finish(&self, rank: usize) {
        let mut st = self.lock();
        st.finished[rank] = true;
        if st.deadlock.is_none() && st.deadlocked() {
            st.fail_all();
        }
    }
}

struct Recv<'a> {
    broker: &'a Broker,
    rank: usize,
    key: Key,
}

impl Future for Recv<'_> {
    type Output = Result<Vec<u8>, ProtocolError>;

    fn poll(self: Pin<&mut Self>, cx: &mut Context<'_>) -> Poll<Self::Output> {
        let mut st = self.broker.lock();
        if let Some(p) = st.mailbox.remove(&self.key) {
            st.waiting[self.rank] = None;
            return Poll::Ready(Ok(p));
        }
        if let Some((phase, snapshot)) = st.deadlock.clone() {
            st.waiting[self.rank] = None;
            return Poll::Ready(Err(ProtocolError::Deadlock { phase, snapshot }));
        }
        st.waiting[self.rank] = Some((self.key, cx.waker().clone()));
        if st.deadlocked() {
            st.fail_all();
            let (phase, snapshot) = st.deadlock.clone().expect("just set");
            return Poll::Ready(Err(ProtocolError::Deadlock { phase, snapshot }));
        }
        Poll::Pending
    }
}

/// Handle of one rank on the simulated transport.
#[derive(Clone)]
pub struct SimTransport {
    rank: usize,
    fine: usize,
    broker: Arc<Broker>,
}

impl SimTransport {
    fn recv(&self, key: Key) -> Recv<'_> {
        Recv {
            broker: &self.broker,
            rank: self.rank,
            key,
        }
    }
}

impl Transport for SimTransport {
    fn rank(&self) -> usize {
        self.rank
    }

    fn fine_ranks(&self) -> usize {
        self.fine
    }

    async fn gather(&self, payload: Vec<u8>) -> Result<Option<Vec<Vec<u8>>>, ProtocolError> {
        let coarse = self.coarse_rank();
        if self.rank != coarse {
            self.broker
                .post((Phase::Gather, Kind::Gather, self.rank, coarse), payload);
            return Ok(None);
        }
        let mut out = Vec::with_capacity(self.fine);
        for src in 0..self.fine {
            out.push(self.recv((Phase::Gather, Kind::Gather, src, coarse)).await?);
        }
        Ok(Some(out))
    }

    async fn scatter(&self, payloads: Option<Vec<Vec<u8>>>) -> Result<Vec<u8>, ProtocolError> {
        let coarse = self.coarse_rank();
        if self.rank != coarse {
            return self.recv((Phase::Scatter, Kind::Scatter, coarse, self.rank)).await;
        }
        let payloads = payloads.ok_or_else(|| ProtocolError::Transport {
            phase: Phase::Scatter,
            message: "coarse rank scattered nothing".into(),
        })?;
        if payloads.len() != self.fine {
            return Err(ProtocolError::Transport {
                phase: Phase::Scatter,
                message: format!("{} payloads for {} ranks", payloads.len(), self.fine),
            });
        }
        for (dst, p) in payloads.into_iter().enumerate() {
            self.broker.post((Phase::Scatter, Kind::Scatter, coarse, dst), p);
        }
        Ok(Vec::new())
    }

    async fn sendrecv(&self, peer: usize, payload: Vec<u8>) -> Result<Vec<u8>, ProtocolError> {
        self.broker
            .post((Phase::Interface, Kind::Sendrecv, self.rank, peer), payload);
        self.recv((Phase::Interface, Kind::Sendrecv, peer, self.rank)).await
    }

    fn note(&self, event: Event) {
        self.broker.lock().events[self.rank].push(event);
    }
}

/// Per-rank outputs (fine ranks first, coarse rank last), the sorted
/// message trace and each rank's milestones.
#[derive(Debug)]
pub struct SimResult<R> {
    pub outputs: Vec<R>,
    pub trace: Vec<TraceRecord>,
    pub events: Vec<Vec<Event>>,
}

struct FlagWaker {
    ready: AtomicBool,
    thread: Option<Thread>,
}

impl Wake for FlagWaker {
    fn wake(self: Arc<Self>) {
        self.wake_by_ref();
    }

    fn wake_by_ref(self: &Arc<Self>) {
        self.ready.store(true, Ordering::Release);
        if let Some(t) = &self.thread {
            t.unpark();
        }
    }
}

fn block_on<F: Future>(fut: F) -> F::Output {
    let flag = Arc::new(FlagWaker {
        ready: AtomicBool::new(false),
        thread: Some(std::thread::current()),
    });
    let waker = Waker::from(flag.clone());
    let mut cx = Context::from_waker(&waker);
    let mut fut = std::pin::pin!(fut);
    loop {
        if let Poll::Ready(v) = fut.as_mut().poll(&mut cx) {
            return v;
        }
        while !flag.ready.swap(false, Ordering::Acquire) {
            std::thread::park();
        }
    }
}

/// Runs `program` on `fine + 1` ranks. Any rank error is returned; when
/// several ranks fail the lowest rank's error wins.
pub fn run_simulated<F, Fut, R, E>(fine: usize, mode: ExecMode, program: F) -> Result<SimResult<R>, E>
where
    F: Fn(SimTransport) -> Fut + Sync,
    Fut: Future<Output = Result<R, E>> + Send,
    R: Send,
    E: Send + From<ProtocolError>,
{
    assert!(fine >= 1, "at least one fine rank");
    let n = fine + 1;
    let broker = Arc::new(Broker::new(n));
    let handle = |rank| SimTransport {
        rank,
        fine,
        broker: broker.clone(),
    };

    let results: Vec<Result<R, E>> = match mode {
        ExecMode::Threaded => std::thread::scope(|s| {
            let threads: Vec<_> = (0..n)
                .map(|r| {
                    let t = handle(r);
                    let program = &program;
                    let broker = &broker;
                    s.spawn(move || {
                        let out = block_on(program(t));
                        broker.finish(r);
                        out
                    })
                })
                .collect();
            threads
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
                .collect()
        }),
        ExecMode::Cooperative => {
            let flags: Vec<Arc<FlagWaker>> = (0..n)
                .map(|_| {
                    Arc::new(FlagWaker {
                        ready: AtomicBool::new(true),
                        thread: None,
                    })
                })
                .collect();
            let mut futs: Vec<Pin<Box<Fut>>> = (0..n).map(|r| Box::pin(program(handle(r)))).collect();
            let mut done: Vec<Option<Result<R, E>>> = (0..n).map(|_| None).collect();
            loop {
                let mut progressed = false;
                for r in 0..n {
                    if done[r].is_some() || !flags[r].ready.swap(false, Ordering::Acquire) {
                        continue;
                    }
                    progressed = true;
                    let waker = Waker::from(flags[r].clone());
                    if let Poll::Ready(v) = futs[r].as_mut().poll(&mut Context::from_waker(&waker)) {
                        done[r] = Some(v);
                        broker.finish(r);
                    }
                }
                if done.iter().all(Option::is_some) {
                    break;
                }
                if !progressed {
                    let rank = done.iter().position(Option::is_none).unwrap_or(0);
                    return Err(ProtocolError::Unfinished {
                        phase: broker.lock().snapshot().0,
                        rank,
                    }
                    .into());
                }
            }
            done.into_iter().map(|d| d.expect("all done")).collect()
        }
    };

    let mut outputs = Vec::with_capacity(n);
    for r in results {
        outputs.push(r?);
    }
    let mut st = broker.lock();
    let mut trace = std::mem::take(&mut st.trace);
    trace.sort();
    Ok(SimResult {
        outputs,
        trace,
        events: std::mem::take(&mut st.events),
    })
}

/// Trace as line-delimited JSON records.
pub fn trace_json_lines(trace: &[TraceRecord]) -> String {
    trace
        .iter()
        .map(|r| serde_json::to_string(r).expect("plain record") + "\n")
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    async fn gather_scatter(t: SimTransport) -> Result<u8, ProtocolError> {
        let me = t.rank() as u8;
        if t.is_coarse() {
            let got = t.gather(Vec::new()).await?.expect("coarse gets payloads");
            let back = got.into_iter().map(|p| vec![p[0] * 10]).collect();
            t.scatter(Some(back)).await?;
            Ok(me)
        } else {
            t.gather(vec![me]).await?;
            Ok(t.scatter(None).await?[0])
        }
    }

    #[test]
    fn gather_then_scatter_in_both_modes() {
        for mode in [ExecMode::Cooperative, ExecMode::Threaded] {
            let r = run_simulated(2, mode, gather_scatter).unwrap();
            assert_eq!(r.outputs, [0, 10, 2]);
            let kinds: Vec<Kind> = r.trace.iter().map(|t| t.kind).collect();
            assert_eq!(kinds, [Kind::Gather, Kind::Gather, Kind::Scatter, Kind::Scatter]);
        }
    }

    #[test]
    fn traces_repeat_bitwise() {
        let a = trace_json_lines(&run_simulated(3, ExecMode::Threaded, gather_scatter).unwrap().trace);
        let b = trace_json_lines(&run_simulated(3, ExecMode::Cooperative, gather_scatter).unwrap().trace);
        assert_eq!(a, b);
        assert!(a.starts_with(r#"{"phase":"gather","kind":"gather","src":0,"dst":3,"bytes":1}"#));
    }

    #[test]
    fn ring_sendrecv() {
        let r = run_simulated(4, ExecMode::Threaded, |t: SimTransport| async move {
            if t.is_coarse() {
                return Ok::<_, ProtocolError>(0);
            }
            let s = t.fine_ranks();
            let right = (t.rank() + 1) % s;
            let left = (t.rank() + s - 1) % s;
            // even ranks go right first, odd left first; buffered sends make
            // any order safe
            let (a, b) = if t.rank().is_multiple_of(2) {
                (right, left)
            } else {
                (left, right)
            };
            let x = t.sendrecv(a, vec![t.rank() as u8]).await?[0];
            let y = t.sendrecv(b, vec![t.rank() as u8]).await?[0];
            Ok(x as usize + y as usize)
        })
        .unwrap();
        assert_eq!(r.outputs, [4, 2, 4, 2, 0]);
    }

    #[test]
    fn missing_scatter_is_a_deadlock() {
        for mode in [ExecMode::Cooperative, ExecMode::Threaded] {
            let err = run_simulated(2, mode, |t: SimTransport| async move {
                if t.is_coarse() {
                    t.gather(Vec::new()).await?;
                    Ok(())
                } else {
                    t.gather(vec![1]).await?;
                    t.scatter(None).await.map(|_| ())
                }
            })
            .unwrap_err();
            match err {
                ProtocolError::Deadlock { phase, snapshot } => {
                    assert_eq!(phase, Phase::Scatter);
                    assert!(snapshot.contains("rank 0 awaits Scatter"), "{snapshot}");
                }
                e => panic!("{e:?}"),
            }
        }
    }
}
