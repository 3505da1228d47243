//! Client side of the encrypted solve workflow.
//!
//! `client_solve` runs: encode under the key, embed (optional), send, receive,
//! unembed (optional), decode and verify energies. Only the encoded (and
//! possibly embedded) problem ever leaves the client.

use std::net::{TcpStream, ToSocketAddrs};
use std::sync::Arc;

use super::service::Service;
use super::wire::{read_frame, write_frame, CombineRequest, Request, Response, SolveRequest};
use crate::embedding::{default_chain_strength, embed_problem, unembed, ChainStats, Embedding};
use crate::gauge::{decode_sample, decode_sampleset, encode_problem, SecretKey};
use crate::ising::{IsingProblem, SampleSet, Spins};
use crate::samplers::AnnealParams;
use crate::topology::Topology;
use crate::{Error, Result};

/// Something that turns one request payload into one response payload.
pub trait Endpoint {
    fn exchange(&mut self, payload: &[u8]) -> Result<Vec<u8>>;
}

/// In-process endpoint that drives a [`Service`] directly through the same
/// byte-level interface as the network.
#[derive(Clone)]
pub struct Loopback {
    service: Arc<Service>,
}

impl Loopback {
    pub fn new(service: Service) -> Self {
        Loopback { service: Arc::new(service) }
    }

    pub fn service(&self) -> &Service {
        &self.service
    }
}

impl Endpoint for Loopback {
    fn exchange(&mut self, payload: &[u8]) -> Result<Vec<u8>> {
        Ok(self.service.handle_frame(payload))
    }
}

/// A persistent connection to a solver service.
pub struct TcpEndpoint {
    stream: TcpStream,
}

impl TcpEndpoint {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(TcpEndpoint { stream })
    }
}

impl Endpoint for TcpEndpoint {
    fn exchange(&mut self, payload: &[u8]) -> Result<Vec<u8>> {
        write_frame(&mut self.stream, payload)?;
        read_frame(&mut self.stream)?.ok_or_else(|| Error::Protocol("connection closed by solver".into()))
    }
}

/// Sends one request and parses the reply; error replies become
/// [`Error::Remote`].
pub fn call(endpoint: &mut dyn Endpoint, req: &Request) -> Result<Response> {
    let payload = serde_json::to_vec(req)?;
    let reply = endpoint.exchange(&payload)?;
    match serde_json::from_slice::<Response>(&reply)? {
        Response::Error(e) => Err(Error::Remote { code: e.code, message: e.message }),
        ok => Ok(ok),
    }
}

/// Embedding applied between encoding and sending.
#[derive(Debug, Clone, Copy)]
pub struct EmbeddingSpec<'a> {
    pub embedding: &'a Embedding,
    pub topology: &'a Topology,
    /// Defaults to twice the largest logical coefficient.
    pub chain_strength: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientSolveOutput {
    /// Logical samples with energies under the original problem.
    pub samples: SampleSet,
    /// Present when an embedding was used.
    pub chain_stats: Option<ChainStats>,
}

/// Sends `problem` as-is and returns the solver's samples, checked against
/// the sent problem. No encryption.
pub fn solve_plain(
    problem: &IsingProblem,
    params: &AnnealParams,
    reverse_init: Option<&Spins>,
    endpoint: &mut dyn Endpoint,
) -> Result<SampleSet> {
    let req =
        Request::Solve(SolveRequest { problem: problem.clone(), params: *params, reverse_init: reverse_init.cloned() });
    match call(endpoint, &req)? {
        Response::Solve(r) => {
            check_samples(&r.sampleset, problem)?;
            Ok(r.sampleset)
        }
        other => Err(unexpected(&other)),
    }
}

fn unexpected(r: &Response) -> Error {
    let kind = match r {
        Response::Solve(_) => "solve",
        Response::Combine(_) => "combine",
        Response::Error(_) => "error",
    };
    Error::Protocol(format!("unexpected '{kind}' response"))
}

fn check_samples(ss: &SampleSet, sent: &IsingProblem) -> Result<()> {
    for s in &ss.samples {
        if s.spins.len() != sent.n() {
            return Err(Error::DimensionMismatch { expected: sent.n(), actual: s.spins.len() });
        }
    }
    ss.verify(sent)
}

/// The full client workflow for one problem under one key.
///
/// `reverse_init`, if given, is a logical state of the original problem; it
/// is encoded (and embedded) before sending.
pub fn client_solve(
    problem: &IsingProblem,
    key: &SecretKey,
    embedding: Option<EmbeddingSpec<'_>>,
    params: &AnnealParams,
    reverse_init: Option<&Spins>,
    endpoint: &mut dyn Endpoint,
) -> Result<ClientSolveOutput> {
    let encoded = encode_problem(problem, key)?;
    let init = reverse_init.map(|s0| decode_sample(s0, key)).transpose()?;
    match embedding {
        None => {
            let raw = solve_plain(&encoded, params, init.as_ref(), endpoint)?;
            let samples = decode_sampleset(&raw, key, problem)?;
            Ok(ClientSolveOutput { samples, chain_stats: None })
        }
        Some(spec) => {
            let strength = spec.chain_strength.unwrap_or_else(|| default_chain_strength(problem));
            let physical = embed_problem(&encoded, spec.embedding, spec.topology, strength)?;
            let init = init.map(|s| spec.embedding.embed_state(&s, spec.topology.num_qubits())).transpose()?;
            let raw = solve_plain(&physical, params, init.as_ref(), endpoint)?;
            let (logical, stats) = unembed(&raw, spec.embedding, &encoded)?;
            let samples = decode_sampleset(&logical, key, problem)?;
            Ok(ClientSolveOutput { samples, chain_stats: Some(stats) })
        }
    }
}

/// Asks the solver to sum two problems encoded under a shared key and sample
/// the result. The returned samples are still encoded.
pub fn combine_and_solve(
    first: &IsingProblem,
    second: &IsingProblem,
    params: &AnnealParams,
    endpoint: &mut dyn Endpoint,
) -> Result<SampleSet> {
    if first.n() != second.n() {
        return Err(Error::DimensionMismatch { expected: first.n(), actual: second.n() });
    }
    let req = Request::Combine(CombineRequest { first: first.clone(), second: second.clone(), params: *params });
    match call(endpoint, &req)? {
        Response::Combine(r) => {
            check_samples(&r.sampleset, &first.add(second)?)?;
            Ok(r.sampleset)
        }
        other => Err(unexpected(&other)),
    }
}
