//! The untrusted solver.
//!
//! The service only ever sees encoded problems, parameters, and encoded
//! samples. Every exchange is appended to the transcript so the solver's
//! view can be audited byte for byte.

use std::io::Write;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde::{Deserialize, Serialize};

use super::wire::{codes, read_frame, write_frame, CombineRequest, Request, Response, SolveRequest, SolveResponse};
use crate::exec::Execution;
use crate::gauge::combine_encrypted;
use crate::ising::{IsingProblem, SampleSet, Spins};
use crate::samplers::{exact_boltzmann, simulated_annealing_with, AnnealParams};
use crate::{Error, Result};

/// How the service draws samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ServiceSampler {
    /// Simulated annealing with the request's parameters.
    #[default]
    Anneal,
    /// Independent draws from the exact Boltzmann distribution at `beta`,
    /// `num_reads` of them, seeded by the request. Ignores sweeps, the beta
    /// schedule, and `reverse_init`.
    Exact { beta: f64 },
}

/// A cloneable in-memory transcript sink.
#[derive(Debug, Clone, Default)]
pub struct TranscriptBuffer(Arc<Mutex<Vec<u8>>>);

impl TranscriptBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contents(&self) -> Vec<u8> {
        self.0.lock().expect("transcript lock").clone()
    }
}

impl Write for TranscriptBuffer {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().expect("transcript lock").extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

type Sink = Box<dyn Write + Send>;

/// Request handler shared by the TCP server and in-process endpoints.
pub struct Service {
    sampler: ServiceSampler,
    exec: Execution,
    transcript: Option<Mutex<Sink>>,
}

impl Service {
    pub fn new(sampler: ServiceSampler) -> Self {
        Service { sampler, exec: Execution::default(), transcript: None }
    }

    /// Appends every exchange to `sink` as two lines: `> ` followed by the
    /// raw request payload, then `< ` followed by the raw response payload.
    pub fn with_transcript(mut self, sink: impl Write + Send + 'static) -> Self {
        self.transcript = Some(Mutex::new(Box::new(sink)));
        self
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn sampler(&self) -> ServiceSampler {
        self.sampler
    }

    /// Handles one request payload and returns the response payload. Never
    /// panics on bad input; failures become error responses.
    pub fn handle_frame(&self, payload: &[u8]) -> Vec<u8> {
        let response = match serde_json::from_slice::<Request>(payload) {
            Ok(req) => self.handle(&req),
            Err(e) => Response::error(codes::MALFORMED, format!("malformed request: {e}")),
        };
        let bytes = serde_json::to_vec(&response).expect("responses serialize");
        self.record(payload, &bytes);
        bytes
    }

    fn record(&self, request: &[u8], response: &[u8]) {
        if let Some(sink) = &self.transcript {
            let mut sink = sink.lock().expect("transcript lock");
            let mut line = Vec::with_capacity(request.len() + response.len() + 6);
            line.extend_from_slice(b"> ");
            line.extend_from_slice(request);
            line.extend_from_slice(b"\n< ");
            line.extend_from_slice(response);
            line.push(b'\n');
            // A failing transcript sink must not take the service down.
            let _ = sink.write_all(&line).and_then(|()| sink.flush());
        }
    }

    pub fn handle(&self, req: &Request) -> Response {
        let result = match req {
            Request::Solve(r) => self.solve(r).map(Response::Solve),
            Request::Combine(r) => self.combine(r).map(Response::Combine),
        };
        result.unwrap_or_else(|e| Response::error(codes::INVALID, e.to_string()))
    }

    fn solve(&self, r: &SolveRequest) -> Result<SolveResponse> {
        let sampleset = self.sample(&r.problem, &r.params, r.reverse_init.as_ref())?;
        Ok(SolveResponse { sampleset, solver_info: self.info() })
    }

    fn combine(&self, r: &CombineRequest) -> Result<SolveResponse> {
        let summed = combine_encrypted(&r.first, &r.second)?;
        let sampleset = self.sample(&summed, &r.params, None)?;
        Ok(SolveResponse { sampleset, solver_info: self.info() })
    }

    fn sample(&self, p: &IsingProblem, params: &AnnealParams, init: Option<&Spins>) -> Result<SampleSet> {
        match self.sampler {
            ServiceSampler::Anneal => simulated_annealing_with(p, params, init, self.exec),
            ServiceSampler::Exact { beta } => {
                params.validate()?;
                exact_boltzmann(p, beta)?.sample(p, params.num_reads, params.seed)
            }
        }
    }

    fn info(&self) -> String {
        match self.sampler {
            ServiceSampler::Anneal => "simulated-annealing".to_string(),
            ServiceSampler::Exact { beta } => format!("exact-boltzmann beta={beta}"),
        }
    }
}

/// A running TCP solver. Dropping the handle stops accepting connections.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting and waits for the accept loop to exit. Connections
    /// already open finish on their own threads.
    pub fn shutdown(mut self) {
        self.stop_inner();
    }

    /// Blocks until the accept loop exits.
    pub fn join(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    fn stop_inner(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // Wake the blocking accept.
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if self.thread.is_some() {
            self.stop_inner();
        }
    }
}

/// Binds `addr` and serves requests, one thread per connection. Each
/// connection may carry any number of request frames.
pub fn serve(addr: impl ToSocketAddrs, service: Service) -> Result<ServerHandle> {
    let listener = TcpListener::bind(addr)?;
    let local = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let service = Arc::new(service);
    let flag = Arc::clone(&stop);
    let thread = std::thread::spawn(move || {
        for stream in listener.incoming() {
            if flag.load(Ordering::SeqCst) {
                break;
            }
            let Ok(stream) = stream else { continue };
            let service = Arc::clone(&service);
            std::thread::spawn(move || {
                let _ = handle_connection(stream, &service);
            });
        }
    });
    Ok(ServerHandle { addr: local, stop, thread: Some(thread) })
}

fn handle_connection(mut stream: TcpStream, service: &Service) -> Result<()> {
    stream.set_nodelay(true)?;
    loop {
        let payload = match read_frame(&mut stream) {
            Ok(Some(p)) => p,
            Ok(None) => return Ok(()),
            Err(Error::Protocol(msg)) => {
                let resp = serde_json::to_vec(&Response::error(codes::MALFORMED, msg))?;
                write_frame(&mut stream, &resp)?;
                return Ok(());
            }
            Err(e) => return Err(e),
        };
        let resp = service.handle_frame(&payload);
        write_frame(&mut stream, &resp)?;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve_payload(n: usize) -> Vec<u8> {
        let req = Request::Solve(SolveRequest {
            problem: IsingProblem::from_parts(n, [(0, 1.0)], [], 0.0).unwrap(),
            params: AnnealParams { num_reads: 5, sweeps: 10, seed: 3, ..Default::default() },
            reverse_init: None,
        });
        serde_json::to_vec(&req).unwrap()
    }

    #[test]
    fn malformed_input_gets_error_response() {
        let svc = Service::new(ServiceSampler::Anneal);
        for bad in [&b"not json"[..], br#"{"type":"solve","body":{}}"#, br#"{"type":"unknown","body":1}"#] {
            let resp: Response = serde_json::from_slice(&svc.handle_frame(bad)).unwrap();
            assert!(matches!(resp, Response::Error(ref e) if e.code == codes::MALFORMED), "{resp:?}");
        }
    }

    #[test]
    fn invalid_request_gets_error_response() {
        let svc = Service::new(ServiceSampler::Anneal);
        let req = Request::Solve(SolveRequest {
            problem: IsingProblem::new(2),
            params: AnnealParams { num_reads: 0, ..Default::default() },
            reverse_init: None,
        });
        let resp = svc.handle(&req);
        assert!(matches!(resp, Response::Error(ref e) if e.code == codes::INVALID));

        let req = Request::Combine(CombineRequest {
            first: IsingProblem::new(2),
            second: IsingProblem::new(3),
            params: AnnealParams::default(),
        });
        assert!(matches!(svc.handle(&req), Response::Error(_)));

        let exact = Service::new(ServiceSampler::Exact { beta: 1.0 });
        let big = Request::Solve(SolveRequest {
            problem: IsingProblem::new(30),
            params: AnnealParams::default(),
            reverse_init: None,
        });
        assert!(matches!(exact.handle(&big), Response::Error(_)));
    }

    #[test]
    fn transcript_records_raw_exchange() {
        let buf = TranscriptBuffer::new();
        let svc = Service::new(ServiceSampler::Anneal).with_transcript(buf.clone());
        let payload = solve_payload(2);
        let resp = svc.handle_frame(&payload);
        let mut expected = b"> ".to_vec();
        expected.extend_from_slice(&payload);
        expected.extend_from_slice(b"\n< ");
        expected.extend_from_slice(&resp);
        expected.push(b'\n');
        assert_eq!(buf.contents(), expected);
    }

    #[test]
    fn reverse_init_is_honored() {
        let svc = Service::new(ServiceSampler::Anneal);
        // At a huge beta nothing moves uphill, and a state with no downhill
        // move stays put.
        let p = IsingProblem::from_parts(2, [], [(0, 1, -1.0)], 0.0).unwrap();
        let init = Spins::new(vec![1, 1]).unwrap();
        let req = Request::Solve(SolveRequest {
            problem: p,
            params: AnnealParams { num_reads: 4, sweeps: 5, beta_initial: 1e6, beta_final: 1e6, seed: 0 },
            reverse_init: Some(init.clone()),
        });
        match svc.handle(&req) {
            Response::Solve(r) => assert!(r.sampleset.samples.iter().all(|s| s.spins == init)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tcp_roundtrip_and_bad_frame() {
        use std::io::Read;
        let server = serve("127.0.0.1:0", Service::new(ServiceSampler::Anneal)).unwrap();
        let mut stream = TcpStream::connect(server.local_addr()).unwrap();
        for _ in 0..2 {
            write_frame(&mut stream, &solve_payload(3)).unwrap();
            let resp: Response = serde_json::from_slice(&read_frame(&mut stream).unwrap().unwrap()).unwrap();
            match resp {
                Response::Solve(r) => assert_eq!(r.sampleset.total_occurrences(), 5),
                other => panic!("{other:?}"),
            }
        }
        drop(stream);

        let mut stream = TcpStream::connect(server.local_addr()).unwrap();
        stream.write_all(&[0xff, 0xff, 0xff, 0xff]).unwrap();
        let resp: Response = serde_json::from_slice(&read_frame(&mut stream).unwrap().unwrap()).unwrap();
        assert!(matches!(resp, Response::Error(ref e) if e.code == codes::MALFORMED));
        let mut rest = Vec::new();
        stream.read_to_end(&mut rest).unwrap();
        assert!(rest.is_empty());
        server.shutdown();
    }
}
