use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn rabecd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rabecd")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Value {
    let out = rabecd(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn fails(args: &[&str], code: i32) -> Value {
    let out = rabecd(args);
    assert_eq!(out.status.code(), Some(code), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stderr).expect("json on stderr")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Deployment {
    _dir: tempfile::TempDir,
    home: PathBuf,
}

impl Deployment {
    fn new(scheme: &str, ellm: usize, users: &[(&str, &str)]) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let home = dir.path().join("home");
        let ellm = ellm.to_string();
        ok(&["setup", "--home", s(&home), "--scheme", scheme, "--lambda", "8", "--tau", "3", "--ellm", &ellm, "--seed", "5"]);
        for (name, policy) in users {
            ok(&["keygen", "--home", s(&home), "--name", name, "--policy", policy]);
            ok(&["register", "--home", s(&home), "--name", name]);
        }
        for (name, _) in users {
            ok(&["update", "--home", s(&home), "--name", name]);
        }
        Self { _dir: dir, home }
    }

    fn path(&self, file: &str) -> PathBuf {
        self.home.join(file)
    }

    fn encrypt(&self, attribute: &str, message: &str, tag: &str) -> (PathBuf, PathBuf) {
        let (ct, vk) = (self.path(&format!("{tag}.ct.json")), self.path(&format!("{tag}.vk.json")));
        ok(&[
            "encrypt", "--home", s(&self.home), "--attribute", attribute, "--message", message, "--out", s(&ct), "--vk",
            s(&vk),
        ]);
        (ct, vk)
    }
}

#[test]
fn privced_flow_in_six_commands() {
    let d = Deployment::new("privced", 1, &[("alice", "x0 & !x2")]);
    for bit in ["0", "1"] {
        let (ct, _) = d.encrypt("110", bit, bit);
        let out = ok(&["decrypt", "--home", s(&d.home), "--name", "alice", "--ct", s(&ct)]);
        assert_eq!(out["message"], bit);
    }
}

#[test]
fn every_scheme_decrypts_deletes_and_verifies() {
    for scheme in ["privcd", "pubvcd", "privced", "pubvced"] {
        let d = Deployment::new(scheme, 2, &[("alice", "x1"), ("bob", "!x1")]);
        let (ct, vk) = d.encrypt("010", "10", "a");
        let out = ok(&["decrypt", "--home", s(&d.home), "--name", "alice", "--ct", s(&ct), "--out", s(&d.path("m.json"))]);
        assert_eq!(out["message"], "10", "{scheme}");
        let err = fails(&["decrypt", "--home", s(&d.home), "--name", "bob", "--ct", s(&ct), "--out", s(&d.path("m.json"))], 4);
        assert_eq!(err["error"], "decryption-rejected");

        let cert = d.path("cert.json");
        ok(&["delete", "--ct", s(&ct), "--cert", s(&cert)]);
        assert_eq!(ok(&["verify", "--vk", s(&vk), "--cert", s(&cert)])["accepted"], true, "{scheme}");
    }
}

#[test]
fn tampered_certificate_exits_3() {
    let d = Deployment::new("pubvced", 1, &[("alice", "true")]);
    let (ct, vk) = d.encrypt("000", "1", "a");
    let cert = d.path("cert.json");
    ok(&["delete", "--ct", s(&ct), "--cert", s(&cert)]);
    ok(&["verify", "--vk", s(&vk), "--cert", s(&cert)]);

    let mut file: Value = serde_json::from_str(&fs::read_to_string(&cert).unwrap()).unwrap();
    let mut bytes = hex::decode(file["cert"].as_str().unwrap()).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    file["cert"] = Value::String(hex::encode(bytes));
    fs::write(&cert, file.to_string()).unwrap();
    let err = fails(&["verify", "--vk", s(&vk), "--cert", s(&cert)], 3);
    assert_eq!(err["error"], "verification-failed");
}

#[test]
fn pubvcd_key_is_one_shot() {
    let d = Deployment::new("pubvcd", 1, &[("alice", "true")]);
    let (ct, _) = d.encrypt("101", "1", "a");
    ok(&["decrypt", "--home", s(&d.home), "--name", "alice", "--ct", s(&ct)]);
    let err = fails(&["delete", "--ct", s(&ct), "--cert", s(&d.path("cert.json"))], 1);
    assert_eq!(err["error"], "protocol-error");

    let (ct, _) = d.encrypt("101", "1", "b");
    ok(&["delete", "--ct", s(&ct), "--cert", s(&d.path("cert.json"))]);
    fails(&["decrypt", "--home", s(&d.home), "--name", "alice", "--ct", s(&ct)], 4);
}

#[test]
fn stale_helper_key_asks_for_update() {
    let d = Deployment::new("privcd", 1, &[("alice", "x0")]);
    ok(&["keygen", "--home", s(&d.home), "--name", "carol", "--policy", "x2"]);
    ok(&["register", "--home", s(&d.home), "--name", "carol"]);
    let (ct, _) = d.encrypt("100", "1", "a");
    let err = fails(&["decrypt", "--home", s(&d.home), "--name", "alice", "--ct", s(&ct), "--out", s(&d.path("x.json"))], 5);
    assert_eq!(err["error"], "get-update");
    ok(&["update", "--home", s(&d.home), "--name", "alice"]);
    assert_eq!(ok(&["decrypt", "--home", s(&d.home), "--name", "alice", "--ct", s(&ct)])["message"], "1");
}

#[test]
fn seeded_deployments_are_byte_identical() {
    let a = Deployment::new("pubvced", 2, &[("alice", "x0 | x1")]);
    let b = Deployment::new("pubvced", 2, &[("alice", "x0 | x1")]);
    a.encrypt("100", "01", "c");
    b.encrypt("100", "01", "c");
    let files = ["config.json", "crs.json", "aux.json", "directory.json", "directory.jsonl", "keys/alice.sk.json"];
    for f in files.into_iter().chain(["keys/alice.hsk.json", "c.vk.json", "c.ct.json"]) {
        assert!(fs::read(a.path(f)).unwrap() == fs::read(b.path(f)).unwrap(), "{f} differs");
    }
    let (ca, cb) = (a.path("ca.json"), b.path("ca.json"));
    ok(&["delete", "--ct", s(&a.path("c.ct.json")), "--cert", s(&ca)]);
    ok(&["delete", "--ct", s(&b.path("c.ct.json")), "--cert", s(&cb)]);
    assert!(fs::read(ca).unwrap() == fs::read(cb).unwrap());
}

#[test]
fn bad_inputs_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let home = dir.path().join("h");
    let err = fails(&["setup", "--home", s(&home), "--scheme", "privced", "--lambda", "0"], 2);
    assert_eq!(err["error"], "config-error");
    let err = fails(&["register", "--home", s(&home), "--name", "nobody"], 6);
    assert_eq!(err["error"], "io-error");

    let d = Deployment::new("privced", 1, &[]);
    fails(&["keygen", "--home", s(&d.home), "--name", "a", "--policy", "x0 &"], 2);
    fails(&["keygen", "--home", s(&d.home), "--name", "../a", "--policy", "x0"], 2);
    let out = rabecd(&["encrypt", "--home", s(&d.home), "--attribute", "10", "--message", "1", "--out", "c", "--vk", "v"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_game_writes_summary_and_transcripts() {
    let dir = tempfile::tempdir().unwrap();
    let (tr, sum) = (dir.path().join("t.jsonl"), dir.path().join("s.json"));
    let args = [
        "run-game", "--experiment", "ced", "--scheme", "privced", "--adversary", "honest-deleter", "--trials", "20",
        "--lambda", "4", "--seed", "3", "--transcripts", s(&tr), "--summary", s(&sum),
    ];
    let out = ok(&args);
    assert_eq!(out["exact_td"], 0.0);
    assert_eq!(fs::read_to_string(&tr).unwrap().lines().count(), 40);
    let first = fs::read(&tr).unwrap();
    ok(&args);
    assert_eq!(fs::read(&tr).unwrap(), first);
    let saved: Value = serde_json::from_str(&fs::read_to_string(&sum).unwrap()).unwrap();
    assert_eq!(saved, out);
}

#[test]
fn honest_deleter_advantage_is_small() {
    let out = ok(&[
        "run-game", "--experiment", "cd", "--scheme", "privcd", "--adversary", "honest-deleter", "--trials", "2000",
        "--lambda", "16", "--ellm", "1", "--seed", "1", "--jobs", "4",
    ]);
    let adv = out["advantage"].as_f64().unwrap();
    assert!(adv <= 0.05, "advantage {adv}");
    assert!(out["ci"][0].as_f64().unwrap() <= adv);
}
