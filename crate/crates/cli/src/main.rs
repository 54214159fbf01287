use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rabecd_cli::{
    cmd_decrypt, cmd_delete, cmd_encrypt, cmd_keygen, cmd_register, cmd_run_game, cmd_setup, cmd_update, cmd_verify,
    CliError, EncryptArgs, Home, Result, SetupArgs,
};
use rabecd_core::{AdversaryKind, ExperimentKind, GameSpec, HandleMode, SchemeParams, SchemeTag};

/// Registered ABE with certified deletion, on a simulated quantum backend.
///
/// Exit codes: 0 ok, 1 protocol error, 2 bad configuration or arguments,
/// 3 certificate rejected, 4 decryption returned ⊥, 5 helper key stale (run
/// `update`), 6 file error. Failures print a JSON object with `error` and
/// `message` on stderr.
#[derive(Parser)]
#[command(name = "rabecd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create a deployment: config, crs, empty curator state and directory.
    Setup {
        #[arg(long, default_value = ".")]
        home: PathBuf,
        #[arg(long, value_parser = parse_scheme)]
        scheme: SchemeTag,
        #[arg(long, default_value_t = 16)]
        lambda: usize,
        #[arg(long, default_value_t = 4)]
        tau: usize,
        #[arg(long, default_value_t = 1)]
        ellm: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate a key pair for a policy such as `x0 & !x2 | x3`.
    Keygen {
        #[arg(long, default_value = ".")]
        home: PathBuf,
        #[arg(long)]
        name: String,
        #[arg(long)]
        policy: String,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Register a generated public key with the curator.
    Register {
        #[arg(long, default_value = ".")]
        home: PathBuf,
        #[arg(long)]
        name: String,
    },
    /// Issue a fresh helper key for a registered user.
    Update {
        #[arg(long, default_value = ".")]
        home: PathBuf,
        #[arg(long)]
        name: String,
    },
    /// Encrypt a message under an attribute; writes the ciphertext and its verification key.
    Encrypt {
        #[arg(long, default_value = ".")]
        home: PathBuf,
        /// Attribute bits, e.g. `0110`.
        #[arg(long)]
        attribute: String,
        /// Message bits.
        #[arg(long)]
        message: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        vk: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Decrypt; the measured ciphertext replaces the input unless `--out` is given.
    Decrypt {
        #[arg(long, default_value = ".")]
        home: PathBuf,
        #[arg(long)]
        name: String,
        #[arg(long)]
        ct: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Produce a deletion certificate; the measured ciphertext replaces the input unless `--out` is given.
    Delete {
        #[arg(long)]
        ct: PathBuf,
        #[arg(long)]
        cert: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a deletion certificate against a verification key.
    Verify {
        #[arg(long)]
        vk: PathBuf,
        #[arg(long)]
        cert: PathBuf,
    },
    /// Run a security or correctness experiment and print a JSON summary.
    RunGame {
        #[arg(long, value_parser = parse_experiment)]
        experiment: ExperimentKind,
        #[arg(long, value_parser = parse_scheme)]
        scheme: Option<SchemeTag>,
        #[arg(long, value_parser = parse_adversary)]
        adversary: AdversaryKind,
        /// Per challenge bit for indistinguishability experiments.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        lambda: usize,
        #[arg(long, default_value_t = 4)]
        tau: usize,
        #[arg(long, default_value_t = 1)]
        ellm: usize,
        #[arg(long, value_enum, default_value_t = Handle::Opaque)]
        handle: Handle,
        /// Worker threads; results do not depend on it.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Write every transcript here as JSON lines.
        #[arg(long)]
        transcripts: Option<PathBuf>,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Handle {
    Opaque,
    Opened,
}

fn parse_scheme(s: &str) -> std::result::Result<SchemeTag, String> {
    s.parse().map_err(|e: rabecd_core::ProtocolError| e.to_string())
}

fn parse_experiment(s: &str) -> std::result::Result<ExperimentKind, String> {
    s.parse().map_err(|e: rabecd_core::GameError| e.to_string())
}

fn parse_adversary(s: &str) -> std::result::Result<AdversaryKind, String> {
    s.parse().map_err(|e: rabecd_core::GameError| e.to_string())
}

fn run(command: Command) -> Result<serde_json::Value> {
    match command {
        Command::Setup { home, scheme, lambda, tau, ellm, seed } => cmd_setup(
            &Home(home),
            &SetupArgs { scheme, params: SchemeParams { lambda, tau, message_bits: ellm }, seed },
        ),
        Command::Keygen { home, name, policy, seed } => cmd_keygen(&Home(home), &name, &policy, seed),
        Command::Register { home, name } => cmd_register(&Home(home), &name),
        Command::Update { home, name } => cmd_update(&Home(home), &name),
        Command::Encrypt { home, attribute, message, out, vk, seed } => cmd_encrypt(
            &Home(home),
            &EncryptArgs { attribute: &attribute, message: &message, ct_out: &out, vk_out: &vk, seed },
        ),
        Command::Decrypt { home, name, ct, out, seed } => cmd_decrypt(&Home(home), &name, &ct, out.as_deref(), seed),
        Command::Delete { ct, cert, out, seed } => cmd_delete(&ct, &cert, out.as_deref(), seed),
        Command::Verify { vk, cert } => cmd_verify(&vk, &cert),
        Command::RunGame {
            experiment,
            scheme,
            adversary,
            trials,
            seed,
            lambda,
            tau,
            ellm,
            handle,
            jobs,
            transcripts,
            summary,
        } => {
            if jobs == 0 {
                return Err(CliError::Config("--jobs must be positive".into()));
            }
            let spec = GameSpec {
                experiment,
                scheme,
                adversary,
                trials,
                seed,
                params: SchemeParams { lambda, tau, message_bits: ellm },
                jobs,
                handle: match handle {
                    Handle::Opaque => HandleMode::Opaque,
                    Handle::Opened => HandleMode::Opened,
                },
                keep_transcripts: 0,
            };
            cmd_run_game(&spec, transcripts.as_deref(), summary.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(v) => {
            println!("{v}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.code())
        }
    }
}
