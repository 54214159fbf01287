//! Commands behind the `rabecd` binary.
//!
//! A *home* directory holds one deployment: `config.json`, the crs, the curator
//! state and the public directory, and a `keys/` folder. Ciphertexts, verification
//! keys and certificates live wherever the caller puts them. Every file is JSON
//! with a `format` tag and is replaced atomically.
//!
//! Ciphertext files embed simulator registers. They are a simulation artifact,
//! not a transport format for quantum data, and say so in their `note` field.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rabecd_core::encoding::{canonical_bytes, from_canonical_bytes, hash_parts};
use rabecd_core::games::{run_game, GameSpec};
use rabecd_core::protocols::{delete_any, PriVcd, PriVced, PubVcd, PubVced};
use rabecd_core::rabe::AuxState;
use rabecd_core::{
    Attribute, BitString, DecryptOutcome, DeletionCert, GameError, HybridCiphertext, Policy, ProtocolError, Scheme,
    SchemeParams, SchemeTag, VerificationKey,
};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;
const SIMULATION_NOTE: &str = "quantum registers are classical simulator state, not transportable quantum data";

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const PROTOCOL: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const VERIFICATION_FAILED: u8 = 3;
    pub const REJECTED: u8 = 4;
    pub const GET_UPDATE: u8 = 5;
    pub const IO: u8 = 6;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("certificate rejected")]
    VerificationFailed,
    #[error("decryption returned ⊥")]
    Rejected,
    #[error("helper key is older than the ciphertext; run `update` and retry")]
    GetUpdate,
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Io { .. } | CliError::Format { .. } => exit::IO,
            CliError::Protocol(_) => exit::PROTOCOL,
            CliError::Game(GameError::Parameter(_)) => exit::CONFIG,
            CliError::Game(_) => exit::PROTOCOL,
            CliError::VerificationFailed => exit::VERIFICATION_FAILED,
            CliError::Rejected => exit::REJECTED,
            CliError::GetUpdate => exit::GET_UPDATE,
        }
    }

    pub fn reason(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config-error",
            CliError::Io { .. } => "io-error",
            CliError::Format { .. } => "malformed-file",
            CliError::Protocol(_) => "protocol-error",
            CliError::Game(GameError::Parameter(_)) => "config-error",
            CliError::Game(_) => "game-error",
            CliError::VerificationFailed => "verification-failed",
            CliError::Rejected => "decryption-rejected",
            CliError::GetUpdate => "get-update",
        }
    }

    pub fn to_json(&self) -> Value {
        json!({ "error": self.reason(), "message": self.to_string() })
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Config {
    pub version: u32,
    pub scheme: SchemeTag,
    pub lambda: usize,
    pub tau: usize,
    pub message_bits: usize,
    pub seed: u64,
}

impl Config {
    pub fn params(&self) -> SchemeParams {
        SchemeParams { lambda: self.lambda, tau: self.tau, message_bits: self.message_bits }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != FORMAT_VERSION {
            return Err(CliError::Config(format!("config version {} is not {FORMAT_VERSION}", self.version)));
        }
        self.params().validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.tau > 64 {
            return Err(CliError::Config(format!("tau = {} exceeds 64", self.tau)));
        }
        Ok(())
    }
}

/// File layout of a deployment.
#[derive(Debug, Clone)]
pub struct Home(pub PathBuf);

impl Home {
    pub fn config(&self) -> PathBuf {
        self.0.join("config.json")
    }
    pub fn crs(&self) -> PathBuf {
        self.0.join("crs.json")
    }
    pub fn aux(&self) -> PathBuf {
        self.0.join("aux.json")
    }
    pub fn directory(&self) -> PathBuf {
        self.0.join("directory.json")
    }
    pub fn directory_jsonl(&self) -> PathBuf {
        self.0.join("directory.jsonl")
    }
    pub fn key(&self, name: &str, kind: &str) -> PathBuf {
        self.0.join("keys").join(format!("{name}.{kind}.json"))
    }

    pub fn load_config(&self) -> Result<Config> {
        let c: Config = read_json(&self.config())?;
        c.validate()?;
        Ok(c)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Format { path: path.to_path_buf(), message: e.to_string() })
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(contents).map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e.error })?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("values serialize");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Explicit seed, or one derived from the deployment seed and the command's
/// inputs, so reruns without `--seed` reproduce their outputs.
fn rng_for(seed: Option<u64>, config_seed: u64, label: &str) -> ChaCha20Rng {
    let s = seed.unwrap_or_else(|| {
        let d = hash_parts("rabecd/cli-seed", &[&config_seed.to_le_bytes(), label.as_bytes()]);
        u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
    });
    ChaCha20Rng::seed_from_u64(s)
}

fn ct_digest(ct: &HybridCiphertext) -> String {
    hex::encode(hash_parts("rabecd/ciphertext", &[&canonical_bytes(ct)]))
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        return Err(CliError::Config(format!("key name {name:?} must be non-empty [A-Za-z0-9_-]")));
    }
    Ok(())
}

fn parse_bits(what: &str, s: &str, len: usize) -> Result<BitString> {
    let b: BitString = s.parse().map_err(|e| CliError::Config(format!("{what} {s:?}: {e}")))?;
    if b.len() != len {
        return Err(CliError::Config(format!("{what} {s:?} has {} bits, expected {len}", b.len())));
    }
    Ok(b)
}

pub fn parse_policy(s: &str) -> Result<Policy> {
    s.parse().map_err(|e| CliError::Config(format!("policy {s:?}: {e}")))
}

macro_rules! with_scheme {
    ($tag:expr, $f:ident($($arg:expr),*)) => {
        match $tag {
            SchemeTag::PriVcd => $f::<PriVcd>($($arg),*),
            SchemeTag::PubVcd => $f::<PubVcd>($($arg),*),
            SchemeTag::PriVced => $f::<PriVced>($($arg),*),
            SchemeTag::PubVced => $f::<PubVced>($($arg),*),
        }
    };
}

#[derive(Serialize, Deserialize)]
struct PublicKeyFile<P> {
    format: String,
    scheme: SchemeTag,
    name: String,
    policy: String,
    pk: P,
}

#[derive(Serialize, Deserialize)]
struct Tagged<T> {
    format: String,
    scheme: SchemeTag,
    #[serde(flatten)]
    body: T,
}

fn tagged<T>(kind: &str, scheme: SchemeTag, body: T) -> Tagged<T> {
    Tagged { format: format!("rabecd/{kind}/v{FORMAT_VERSION}"), scheme, body }
}

fn read_tagged<T: DeserializeOwned>(path: &Path, kind: &str, scheme: SchemeTag) -> Result<T> {
    let t: Tagged<T> = read_json(path)?;
    let want = format!("rabecd/{kind}/v{FORMAT_VERSION}");
    if t.format != want {
        return Err(CliError::Format { path: path.to_path_buf(), message: format!("format {:?}, expected {want:?}", t.format) });
    }
    if t.scheme != scheme {
        return Err(CliError::Format {
            path: path.to_path_buf(),
            message: format!("written for {}, deployment is {scheme}", t.scheme),
        });
    }
    Ok(t.body)
}

#[derive(Serialize, Deserialize)]
struct Single<T> {
    value: T,
}

#[derive(Serialize, Deserialize)]
pub struct CiphertextFile {
    pub format: String,
    pub note: String,
    pub attribute: String,
    pub ciphertext: HybridCiphertext,
}

#[derive(Serialize, Deserialize)]
pub struct VerificationKeyFile {
    pub format: String,
    pub vk: VerificationKey,
}

/// Certificates travel as the hex of their canonical bytes.
#[derive(Serialize, Deserialize)]
pub struct CertFile {
    pub format: String,
    pub scheme: SchemeTag,
    pub cert: String,
}

fn read_ciphertext(path: &Path) -> Result<(Attribute, HybridCiphertext)> {
    let f: CiphertextFile = read_json(path)?;
    let bad = |message: String| CliError::Format { path: path.to_path_buf(), message };
    let x: Attribute = f.attribute.parse().map_err(|e| bad(format!("attribute: {e}")))?;
    f.ciphertext.check_shape().map_err(|e| bad(e.to_string()))?;
    Ok((x, f.ciphertext))
}

fn write_ciphertext(path: &Path, x: &Attribute, ct: &HybridCiphertext) -> Result<()> {
    write_json(
        path,
        &CiphertextFile {
            format: format!("rabecd/ciphertext/v{FORMAT_VERSION}"),
            note: SIMULATION_NOTE.into(),
            attribute: x.to_string(),
            ciphertext: ct.clone(),
        },
    )
}

pub struct SetupArgs {
    pub scheme: SchemeTag,
    pub params: SchemeParams,
    pub seed: u64,
}

pub fn cmd_setup(home: &Home, args: &SetupArgs) -> Result<Value> {
    let config = Config {
        version: FORMAT_VERSION,
        scheme: args.scheme,
        lambda: args.params.lambda,
        tau: args.params.tau,
        message_bits: args.params.message_bits,
        seed: args.seed,
    };
    config.validate()?;
    let mut rng = rng_for(None, config.seed, "setup");
    with_scheme!(config.scheme, setup_with(home, &config, &mut rng))?;
    write_json(&home.config(), &config)?;
    Ok(json!({ "command": "setup", "scheme": config.scheme, "home": home.0, "epoch": 0 }))
}

fn setup_with<S: Scheme>(home: &Home, config: &Config, rng: &mut ChaCha20Rng) -> Result<()> {
    let crs = S::setup(&config.params(), rng)?;
    let aux = S::new_aux(&crs);
    write_curator::<S>(home, &crs, &aux)?;
    write_json(&home.crs(), &tagged("crs", S::TAG, Single { value: crs }))
}

fn write_curator<S: Scheme>(home: &Home, crs: &S::Crs, aux: &S::Aux) -> Result<()> {
    write_json(&home.aux(), &tagged("aux", S::TAG, Single { value: aux }))?;
    write_json(&home.directory(), &tagged("directory", S::TAG, Single { value: S::directory(crs, aux) }))?;
    // RABE-layer curators also publish the slot list as JSON lines.
    if S::TAG.is_everlasting() {
        let v = serde_json::to_value(aux).expect("curator state serializes");
        if let Ok(state) = serde_json::from_value::<AuxState>(v) {
            write_atomic(&home.directory_jsonl(), state.export_jsonl().as_bytes())?;
        }
    }
    Ok(())
}

fn load_crs<S: Scheme>(home: &Home) -> Result<S::Crs> {
    Ok(read_tagged::<Single<S::Crs>>(&home.crs(), "crs", S::TAG)?.value)
}

fn load_aux<S: Scheme>(home: &Home) -> Result<S::Aux> {
    Ok(read_tagged::<Single<S::Aux>>(&home.aux(), "aux", S::TAG)?.value)
}

fn load_pk<S: Scheme>(home: &Home, name: &str) -> Result<(S::Pk, Policy)> {
    let path = home.key(name, "pk");
    let f: PublicKeyFile<S::Pk> = read_json(&path)?;
    if f.scheme != S::TAG || f.name != name {
        return Err(CliError::Format { path, message: format!("key for {} / {}", f.scheme, f.name) });
    }
    Ok((f.pk, parse_policy(&f.policy)?))
}

pub fn cmd_keygen(home: &Home, name: &str, policy: &str, seed: Option<u64>) -> Result<Value> {
    check_name(name)?;
    let config = home.load_config()?;
    let policy = parse_policy(policy)?;
    let mut rng = rng_for(seed, config.seed, &format!("keygen/{name}"));
    with_scheme!(config.scheme, keygen_with(home, name, &policy, &mut rng))?;
    Ok(json!({ "command": "keygen", "name": name, "policy": policy.to_string(), "pk": home.key(name, "pk") }))
}

fn keygen_with<S: Scheme>(home: &Home, name: &str, policy: &Policy, rng: &mut ChaCha20Rng) -> Result<()> {
    let crs = load_crs::<S>(home)?;
    let aux = load_aux::<S>(home)?;
    let (pk, sk) = S::keygen(&crs, Some(&aux), policy, rng)?;
    write_json(
        &home.key(name, "pk"),
        &PublicKeyFile {
            format: format!("rabecd/pk/v{FORMAT_VERSION}"),
            scheme: S::TAG,
            name: name.into(),
            policy: policy.to_string(),
            pk,
        },
    )?;
    write_json(&home.key(name, "sk"), &tagged("sk", S::TAG, Single { value: sk }))
}

pub fn cmd_register(home: &Home, name: &str) -> Result<Value> {
    check_name(name)?;
    let config = home.load_config()?;
    let epoch = with_scheme!(config.scheme, register_with(home, name))?;
    Ok(json!({ "command": "register", "name": name, "epoch": epoch }))
}

fn register_with<S: Scheme>(home: &Home, name: &str) -> Result<usize> {
    let crs = load_crs::<S>(home)?;
    let aux = load_aux::<S>(home)?;
    let (pk, policy) = load_pk::<S>(home, name)?;
    let (_, aux) = S::regpk(&crs, &aux, &pk, &policy)?;
    write_curator::<S>(home, &crs, &aux)?;
    Ok(S::epoch(&aux))
}

pub fn cmd_update(home: &Home, name: &str) -> Result<Value> {
    check_name(name)?;
    let config = home.load_config()?;
    let epoch = with_scheme!(config.scheme, update_with(home, name))?;
    Ok(json!({ "command": "update", "name": name, "epoch": epoch, "hsk": home.key(name, "hsk") }))
}

fn update_with<S: Scheme>(home: &Home, name: &str) -> Result<usize> {
    let crs = load_crs::<S>(home)?;
    let aux = load_aux::<S>(home)?;
    let (pk, _) = load_pk::<S>(home, name)?;
    let hsk = S::update(&crs, &aux, &pk)?;
    write_json(&home.key(name, "hsk"), &tagged("hsk", S::TAG, Single { value: &hsk }))?;
    Ok(S::hsk_epoch(&hsk))
}

pub struct EncryptArgs<'a> {
    pub attribute: &'a str,
    pub message: &'a str,
    pub ct_out: &'a Path,
    pub vk_out: &'a Path,
    pub seed: Option<u64>,
}

pub fn cmd_encrypt(home: &Home, args: &EncryptArgs) -> Result<Value> {
    let config = home.load_config()?;
    let x = parse_bits("attribute", args.attribute, config.tau)?;
    let mu = parse_bits("message", args.message, config.message_bits)?;
    let mut rng = rng_for(args.seed, config.seed, &format!("encrypt/{x}/{mu}"));
    let (vk, ct) = with_scheme!(config.scheme, encrypt_with(home, &x, &mu, &mut rng))?;
    write_ciphertext(args.ct_out, &x, &ct)?;
    write_json(args.vk_out, &VerificationKeyFile { format: format!("rabecd/vk/v{FORMAT_VERSION}"), vk })?;
    Ok(json!({ "command": "encrypt", "attribute": x.to_string(), "ciphertext": args.ct_out, "vk": args.vk_out }))
}

fn encrypt_with<S: Scheme>(
    home: &Home,
    x: &Attribute,
    mu: &BitString,
    rng: &mut ChaCha20Rng,
) -> Result<(VerificationKey, HybridCiphertext)> {
    let crs = load_crs::<S>(home)?;
    let dir = read_tagged::<Single<S::Directory>>(&home.directory(), "directory", S::TAG)?.value;
    Ok(S::encrypt(&crs, &dir, x, mu, rng)?)
}

/// Decryption measures the registers, so the post-measurement ciphertext is
/// written back (to `ct_out`, or over the input).
pub fn cmd_decrypt(home: &Home, name: &str, ct_path: &Path, ct_out: Option<&Path>, seed: Option<u64>) -> Result<Value> {
    check_name(name)?;
    let config = home.load_config()?;
    let (x, mut ct) = read_ciphertext(ct_path)?;
    if ct.scheme_tag != config.scheme {
        return Err(CliError::Config(format!("ciphertext is {}, deployment is {}", ct.scheme_tag, config.scheme)));
    }
    let mut rng = rng_for(seed, config.seed, &format!("decrypt/{name}/{}", ct_digest(&ct)));
    let outcome = with_scheme!(config.scheme, decrypt_with(home, name, &x, &mut ct, &mut rng))?;
    write_ciphertext(ct_out.unwrap_or(ct_path), &x, &ct)?;
    match outcome {
        DecryptOutcome::Plaintext(mu) => {
            Ok(json!({ "command": "decrypt", "outcome": "plaintext", "message": mu.to_string() }))
        }
        DecryptOutcome::Reject => Err(CliError::Rejected),
        DecryptOutcome::GetUpdate => Err(CliError::GetUpdate),
    }
}

fn decrypt_with<S: Scheme>(
    home: &Home,
    name: &str,
    x: &Attribute,
    ct: &mut HybridCiphertext,
    rng: &mut ChaCha20Rng,
) -> Result<DecryptOutcome<BitString>> {
    let sk = read_tagged::<Single<S::Sk>>(&home.key(name, "sk"), "sk", S::TAG)?.value;
    let hsk = read_tagged::<Single<S::Hsk>>(&home.key(name, "hsk"), "hsk", S::TAG)?.value;
    Ok(S::decrypt(&sk, &hsk, x, ct, rng))
}

/// Needs no deployment: the ciphertext carries its scheme.
pub fn cmd_delete(ct_path: &Path, cert_out: &Path, ct_out: Option<&Path>, seed: Option<u64>) -> Result<Value> {
    let (x, mut ct) = read_ciphertext(ct_path)?;
    let mut rng = rng_for(seed, 0, &format!("delete/{}", ct_digest(&ct)));
    let cert = delete_any(&mut ct, &mut rng)?;
    write_ciphertext(ct_out.unwrap_or(ct_path), &x, &ct)?;
    let file = CertFile {
        format: format!("rabecd/cert/v{FORMAT_VERSION}"),
        scheme: ct.scheme_tag,
        cert: hex::encode(canonical_bytes(&cert)),
    };
    write_json(cert_out, &file)?;
    Ok(json!({ "command": "delete", "scheme": ct.scheme_tag, "cert": cert_out }))
}

pub fn cmd_verify(vk_path: &Path, cert_path: &Path) -> Result<Value> {
    let vk = read_json::<VerificationKeyFile>(vk_path)?.vk;
    let file: CertFile = read_json(cert_path)?;
    let bad = |message: String| CliError::Format { path: cert_path.to_path_buf(), message };
    let bytes = hex::decode(&file.cert).map_err(|e| bad(e.to_string()))?;
    let cert: DeletionCert = from_canonical_bytes(&bytes).map_err(|e| bad(e.to_string()))?;
    if file.scheme != vk.tag() {
        return Err(CliError::VerificationFailed);
    }
    if !with_scheme!(vk.tag(), verify_with(&vk, &cert)) {
        return Err(CliError::VerificationFailed);
    }
    Ok(json!({ "command": "verify", "scheme": vk.tag(), "accepted": true }))
}

fn verify_with<S: Scheme>(vk: &VerificationKey, cert: &DeletionCert) -> bool {
    S::verify(vk, cert)
}

/// Runs a game; transcripts go to `transcripts_out` as JSON lines when given.
pub fn cmd_run_game(spec: &GameSpec, transcripts_out: Option<&Path>, summary_out: Option<&Path>) -> Result<Value> {
    spec.params.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let mut spec = spec.clone();
    spec.keep_transcripts = if transcripts_out.is_some() { usize::MAX } else { 0 };
    let report = run_game(&spec)?;
    if let Some(path) = transcripts_out {
        let mut text = String::new();
        for t in &report.transcripts {
            text.push_str(&t.to_json());
            text.push('\n');
        }
        write_atomic(path, text.as_bytes())?;
    }
    let mut summary_spec = serde_json::to_value(&report.spec).expect("specs serialize");
    summary_spec.as_object_mut().expect("object").remove("keep_transcripts");
    let summary = json!({
        "format": format!("rabecd/game-summary/v{FORMAT_VERSION}"),
        "spec": summary_spec,
        "handle": report.spec.handle,
        "advantage": report.advantage.as_ref().map(|a| a.advantage),
        "ci": report.advantage.as_ref().map(|a| [a.ci_low, a.ci_high]),
        "p0": report.advantage.as_ref().map(|a| a.p0),
        "p1": report.advantage.as_ref().map(|a| a.p1),
        "abort_rate": report.abort_rate,
        "success_rate": report.success_rate,
        "empirical_td": report.empirical_td,
        "exact_td": report.exact_td,
        "transcripts": report.transcripts.len(),
    });
    if let Some(path) = summary_out {
        write_json(path, &summary)?;
    }
    Ok(summary)
}
