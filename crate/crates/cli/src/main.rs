use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gaugecrypt::analysis::{gauge_experiment, ExperimentConfig, SamplerConfig};
use gaugecrypt::embedding::{default_chain_strength, embed_complete, embed_problem, unembed, Embedding};
use gaugecrypt::gauge::{decode_sampleset, encode_problem, keygen};
use gaugecrypt::problems::{nbmf_column_ising, ran1, random_nbmf, NbmfInstance};
use gaugecrypt::protocol::{client_solve, serve, EmbeddingSpec, Service, ServiceSampler, TcpEndpoint};
use gaugecrypt::samplers::{exact_boltzmann, simulated_annealing_with, AnnealParams};
use gaugecrypt::seed::rng_from_seed;
use gaugecrypt::topology::chimera;
use gaugecrypt::{Execution, IsingProblem, SampleSet, SecretKey, Spins, Topology};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Gauge-transform encryption for Ising problems.
#[derive(Parser)]
#[command(name = "gaugecrypt", version, about)]
struct Cli {
    /// Run every work item on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a secret key.
    Keygen {
        #[arg(long)]
        n: usize,
        /// Seed for a reproducible key; omit to use OS entropy.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: Output,
    },
    /// Encode a problem under a key.
    Encode {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Decode a sample set returned for an encoded problem.
    Decode {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        key: PathBuf,
        /// The original (unencoded) problem, used to verify energies.
        #[arg(long)]
        problem: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Embed a problem into a Chimera graph with the clique embedding.
    Embed {
        #[arg(long)]
        problem: PathBuf,
        /// Chimera size m.
        #[arg(long)]
        chimera: usize,
        #[arg(long)]
        chain_strength: Option<f64>,
        /// Where to write the embedding.
        #[arg(long)]
        embedding_out: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Map physical samples back to logical ones by majority vote.
    Unembed {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        embedding: PathBuf,
        /// The logical problem the samples are scored against.
        #[arg(long)]
        problem: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Write a Chimera topology.
    Chimera {
        #[arg(long)]
        m: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Generate a RAN1 instance on a Chimera graph.
    GenRan1 {
        #[arg(long)]
        chimera: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Generate a random NBMF instance.
    GenNbmf {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Ising problem for the binary update of one NBMF column.
    NbmfColumn {
        /// Instance JSON; alternatively give --a-csv and --b-csv.
        #[arg(long, conflicts_with_all = ["a_csv", "b_csv"])]
        instance: Option<PathBuf>,
        #[arg(long, requires = "b_csv")]
        a_csv: Option<PathBuf>,
        #[arg(long, requires = "a_csv")]
        b_csv: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        column: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Sample a problem locally.
    Sample {
        #[arg(long)]
        problem: PathBuf,
        #[command(flatten)]
        anneal: AnnealArgs,
        /// Draw from the exact Boltzmann distribution at this beta instead.
        #[arg(long)]
        exact_beta: Option<f64>,
        #[command(flatten)]
        out: Output,
    },
    /// Encrypt, send to a solver, and decode the answer.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        /// Key file; a fresh random key is used when omitted.
        #[arg(long)]
        key: Option<PathBuf>,
        /// Solver address, host:port.
        #[arg(long)]
        endpoint: String,
        /// Embed into chimera(m) before sending.
        #[arg(long)]
        chimera: Option<usize>,
        #[arg(long)]
        chain_strength: Option<f64>,
        /// Reverse-annealing start state, a JSON array of spins.
        #[arg(long)]
        reverse_init: Option<PathBuf>,
        #[command(flatten)]
        anneal: AnnealArgs,
        #[command(flatten)]
        out: Output,
    },
    /// Run a solver service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: String,
        /// Sample the exact Boltzmann distribution at this beta.
        #[arg(long)]
        exact_beta: Option<f64>,
        /// Append every exchange to this file.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Compare the energy CDF of a problem with and without gauge transforms.
    Analyze {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value_t = 10)]
        transforms: usize,
        #[arg(long, default_value_t = 10_000)]
        reads: usize,
        #[arg(long, default_value_t = 1000)]
        sweeps: usize,
        #[arg(long, default_value_t = 0.1)]
        beta_init: f64,
        #[arg(long, default_value_t = 3.0)]
        beta_final: f64,
        #[arg(long)]
        exact_beta: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the CDFs as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args)]
struct Output {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnnealArgs {
    #[arg(long, default_value_t = 100)]
    reads: usize,
    #[arg(long, default_value_t = 1000)]
    sweeps: usize,
    #[arg(long, default_value_t = 0.1)]
    beta_init: f64,
    #[arg(long, default_value_t = 3.0)]
    beta_final: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl AnnealArgs {
    fn params(&self) -> AnnealParams {
        AnnealParams {
            num_reads: self.reads,
            sweeps: self.sweeps,
            beta_initial: self.beta_init,
            beta_final: self.beta_final,
            seed: self.seed,
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(value: &T, out: &Output) -> Result<()> {
    match &out.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
            w.flush()?;
        }
        None => {
            let mut w = io::stdout().lock();
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

fn chimera_for(n: usize, m: usize) -> Result<(Topology, Embedding)> {
    let t = chimera(m)?;
    let e = embed_complete(n, &t).with_context(|| format!("embedding {n} variables into chimera({m})"))?;
    Ok((t, e))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match cli.command {
        Command::Keygen { n, seed, out } => {
            let key = match seed {
                Some(s) => keygen(n, &mut rng_from_seed(s)),
                None => keygen(n, &mut rand::rngs::OsRng),
            };
            write_json(&key, &out)
        }
        Command::Encode { problem, key, out } => {
            let p: IsingProblem = read_json(&problem)?;
            let k: SecretKey = read_json(&key)?;
            write_json(&encode_problem(&p, &k)?, &out)
        }
        Command::Decode { samples, key, problem, out } => {
            let ss: SampleSet = read_json(&samples)?;
            let k: SecretKey = read_json(&key)?;
            let p: IsingProblem = read_json(&problem)?;
            write_json(&decode_sampleset(&ss, &k, &p)?, &out)
        }
        Command::Embed { problem, chimera: m, chain_strength, embedding_out, out } => {
            let p: IsingProblem = read_json(&problem)?;
            let (t, e) = chimera_for(p.n(), m)?;
            let strength = chain_strength.unwrap_or_else(|| default_chain_strength(&p));
            let physical = embed_problem(&p, &e, &t, strength)?;
            write_json(&e, &Output { out: Some(embedding_out) })?;
            write_json(&physical, &out)
        }
        Command::Unembed { samples, embedding, problem, out } => {
            let ss: SampleSet = read_json(&samples)?;
            let e: Embedding = read_json(&embedding)?;
            let p: IsingProblem = read_json(&problem)?;
            let (logical, stats) = unembed(&ss, &e, &p)?;
            eprintln!("chain break fraction {:.4}, max chain length {}", stats.break_fraction, stats.max_chain_length);
            write_json(&logical, &out)
        }
        Command::Chimera { m, out } => write_json(&chimera(m)?, &out),
        Command::GenRan1 { chimera: m, seed, out } => write_json(&ran1(&chimera(m)?, &mut rng_from_seed(seed)), &out),
        Command::GenNbmf { rows, cols, rank, seed, out } => {
            write_json(&random_nbmf(rows, cols, rank, &mut rng_from_seed(seed)), &out)
        }
        Command::NbmfColumn { instance, a_csv, b_csv, column, out } => {
            let inst = match (instance, a_csv, b_csv) {
                (Some(path), _, _) => read_json::<NbmfInstance>(&path)?,
                (None, Some(a), Some(b)) => NbmfInstance::from_csv_paths(a, b)?,
                _ => bail!("give --instance or both --a-csv and --b-csv"),
            };
            write_json(&nbmf_column_ising(&inst, column)?, &out)
        }
        Command::Sample { problem, anneal, exact_beta, out } => {
            let p: IsingProblem = read_json(&problem)?;
            let params = anneal.params();
            let ss = match exact_beta {
                Some(beta) => exact_boltzmann(&p, beta)?.sample(&p, params.num_reads, params.seed)?,
                None => simulated_annealing_with(&p, &params, None, exec)?,
            };
            write_json(&ss, &out)
        }
        Command::Solve { problem, key, endpoint, chimera: m, chain_strength, reverse_init, anneal, out } => {
            let p: IsingProblem = read_json(&problem)?;
            let k = match key {
                Some(path) => read_json(&path)?,
                None => keygen(p.n(), &mut rand::rngs::OsRng),
            };
            let init: Option<Spins> = reverse_init.map(|path| read_json(&path)).transpose()?;
            let layout = m.map(|m| chimera_for(p.n(), m)).transpose()?;
            let spec = layout.as_ref().map(|(t, e)| EmbeddingSpec { embedding: e, topology: t, chain_strength });
            let mut ep = TcpEndpoint::connect(&endpoint).with_context(|| format!("connecting to {endpoint}"))?;
            let result = client_solve(&p, &k, spec, &anneal.params(), init.as_ref(), &mut ep)?;
            if let Some(stats) = result.chain_stats {
                eprintln!(
                    "chain break fraction {:.4}, max chain length {}",
                    stats.break_fraction, stats.max_chain_length
                );
            }
            write_json(&result.samples, &out)
        }
        Command::Serve { listen, exact_beta, transcript } => {
            let sampler = match exact_beta {
                Some(beta) => ServiceSampler::Exact { beta },
                None => ServiceSampler::Anneal,
            };
            let mut service = Service::new(sampler).with_execution(exec);
            if let Some(path) = transcript {
                let file = File::options()
                    .create(true)
                    .append(true)
                    .open(&path)
                    .with_context(|| format!("opening {}", path.display()))?;
                service = service.with_transcript(file);
            }
            let handle = serve(&listen, service)?;
            eprintln!("listening on {}", handle.local_addr());
            handle.join();
            Ok(())
        }
        Command::Analyze { problem, transforms, reads, sweeps, beta_init, beta_final, exact_beta, seed, csv, out } => {
            let p: IsingProblem = read_json(&problem)?;
            let sampler = match exact_beta {
                Some(beta) => SamplerConfig::Exact { beta },
                None => SamplerConfig::Anneal { sweeps, beta_initial: beta_init, beta_final },
            };
            let cfg = ExperimentConfig { num_transforms: transforms, reads, sampler, seed, exec, ..Default::default() };
            let report = gauge_experiment(&p, &cfg)?;
            eprintln!("average CDF difference {:+.4}%", report.avg_diff_percent);
            if let Some(path) = csv {
                let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                report.write_csv(BufWriter::new(file))?;
            }
            write_json(&report, &out)
        }
    }
}
