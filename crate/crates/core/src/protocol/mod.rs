//! Client/solver protocol: wire format, solver service, client workflow.

mod client;
mod service;
pub mod wire;

pub use client::{
    call, client_solve, combine_and_solve, solve_plain, ClientSolveOutput, EmbeddingSpec, Endpoint, Loopback,
    TcpEndpoint,
};
pub use service::{serve, ServerHandle, Service, ServiceSampler, TranscriptBuffer};
pub use wire::{CombineRequest, ErrorBody, Request, Response, SolveRequest, SolveResponse};
