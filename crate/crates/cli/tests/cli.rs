//! End-to-end tests of the `geninv` binary: golden stdout, exit codes,
//! and byte-stable output under a fixed seed.

use std::path::PathBuf;
use std::process::{Command, Output};

fn geninv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geninv"))
        .args(args)
        .output()
        .expect("spawn geninv")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn exit(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn temp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("geninv-test-{}-{name}", std::process::id()))
}

#[test]
fn expand_golden() {
    let out = geninv(&["expand", "--spec", "g(1,2)*g(1,2)"]);
    assert_eq!(exit(&out), 0);
    assert_eq!(stdout(&out).trim(), "x1^2*y2^2 - 2*x1*x2*y1*y2 + x2^2*y1^2");
}

#[test]
fn translate_text_goldens() {
    let out = geninv(&["translate", "--spec", "g(1,2)*g(1,2)", "--format", "text"]);
    assert_eq!(exit(&out), 0);
    assert_eq!(stdout(&out).trim(), "(mu20*mu02 - mu11^2) / mu00^4");

    let out = geninv(&[
        "translate", "--spec", "g(1,2)*g(1,2)", "--to", "derivatives", "--format", "text",
    ]);
    assert_eq!(exit(&out), 0);
    assert_eq!(stdout(&out).trim(), "(Hxx*Hyy - Hxy^2) / J^2");
}

#[test]
fn translate_json_is_stable_and_parses() {
    let args = ["translate", "--spec", "g(1,2)*g(2,3)"];
    let a = geninv(&args);
    let b = geninv(&args);
    assert_eq!(exit(&a), 0);
    assert_eq!(a.stdout, b.stdout, "json output must be byte-stable");

    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).expect("valid json");
    assert_eq!(v["dim"], 2);
    assert_eq!(v["form"], "moments");
    assert_eq!(v["normalization"]["kind"], "mu00");
    assert_eq!(v["normalization"]["power"], 5);
    assert_eq!(v["meta"]["constant"], "-1"); // sign factored out during normalization
    assert_eq!(v["meta"]["source"], "g(1,2)*g(2,3)");

    // A written file must match stdout exactly (plus the trailing newline).
    let path = temp_path("expr.json");
    let out = geninv(&[
        "translate", "--spec", "g(1,2)*g(2,3)", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(exit(&out), 0);
    let written = std::fs::read_to_string(&path).expect("read out file");
    assert_eq!(written.trim_end(), stdout(&a).trim_end());

    // Feed a written expression back into verify as a subject. (The spec above
    // would be degenerate here: its moment form carries first-order central
    // moments, which vanish on every image.)
    let out = geninv(&[
        "translate", "--spec", "g(1,2)*g(1,2)", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(exit(&out), 0);
    let out = geninv(&[
        "verify", "--expr", path.to_str().unwrap(), "--trials", "5", "--format", "text",
    ]);
    assert_eq!(exit(&out), 0, "round-tripped expression should verify: {}", stdout(&out));
    std::fs::remove_file(&path).ok();
}

#[test]
fn generate_respects_affine_filter() {
    let out = geninv(&["generate", "--max-points", "2", "--max-order", "2"]);
    assert_eq!(exit(&out), 0);
    let all = stdout(&out);
    assert!(all.lines().any(|l| l == "g(1,2)*g(1,2)"));
    assert!(all.lines().any(|l| l == "f(1,1)"));

    let out = geninv(&["generate", "--max-points", "3", "--max-order", "2", "--affine-only"]);
    assert_eq!(exit(&out), 0);
    for line in stdout(&out).lines() {
        let g_count = line.matches("g(").count();
        assert!(g_count > 0 && g_count % 2 == 0, "odd g count in {line}");
    }
}

#[test]
fn verify_exit_codes() {
    // Absolute affine invariant on random images: pass.
    let out = geninv(&["verify", "--catalog", "aff1", "--trials", "10"]);
    assert_eq!(exit(&out), 0, "{}", stdout(&out));

    // Bare second moment is not invariant: fail.
    let out = geninv(&["verify", "--catalog", "mu20", "--trials", "10", "--format", "text"]);
    assert_eq!(exit(&out), 1);
    assert!(stdout(&out).starts_with("FAIL"));

    // A single point mass has no central moments: degenerate.
    let path = temp_path("one.csv");
    std::fs::write(&path, "dim=2\n0.5,0.25,1.0\n").unwrap();
    let out = geninv(&[
        "verify", "--catalog", "aff1", "--image", path.to_str().unwrap(), "--trials", "5",
    ]);
    assert_eq!(exit(&out), 2);
    std::fs::remove_file(&path).ok();

    // Malformed spec: usage error, also 2.
    let out = geninv(&["verify", "--spec", "g(1,2"]);
    assert_eq!(exit(&out), 2);
    assert!(!out.stderr.is_empty());
}

#[test]
fn verify_reads_image_csv() {
    let path = temp_path("img.csv");
    std::fs::write(
        &path,
        "dim=2\n0.1,0.2,0.03\n-0.4,0.5,0.06\n0.7,-0.8,0.02\n-0.3,-0.1,0.05\n",
    )
    .unwrap();
    let out = geninv(&[
        "verify", "--catalog", "aff1", "--image", path.to_str().unwrap(),
        "--trials", "20", "--format", "text",
    ]);
    assert_eq!(exit(&out), 0, "{}", stdout(&out));
    std::fs::remove_file(&path).ok();
}

#[test]
fn verify_output_is_deterministic() {
    let args = ["verify", "--catalog", "hu1", "--group", "rotation", "--trials", "20",
        "--seed", "42"];
    let a = geninv(&args);
    let b = geninv(&args);
    assert_eq!(exit(&a), 0);
    assert_eq!(a.stdout, b.stdout);

    let mut seq = args.to_vec();
    seq.push("--sequential");
    let c = geninv(&seq);
    assert_eq!(a.stdout, c.stdout, "parallel and sequential runs must agree");
}

#[test]
fn screen_accepts_and_rejects() {
    let out = geninv(&[
        "screen", "--spec", "g(1,2)*g(2,3)", "--trials", "10", "--points", "3",
    ]);
    assert_eq!(exit(&out), 0, "{}", stdout(&out));

    let out = geninv(&[
        "screen", "--catalog", "hessdet2d", "--trials", "10", "--points", "3",
        "--format", "text",
    ]);
    assert_eq!(exit(&out), 1);
    assert!(stdout(&out).contains("worst sample"));
}

#[test]
fn relation_and_conjecture_pass() {
    let out = geninv(&["relation", "--order", "2", "--trials", "10"]);
    assert_eq!(exit(&out), 0);

    let out = geninv(&[
        "conjecture", "--m", "2", "--trials", "10", "--points", "3", "--format", "text",
    ]);
    assert_eq!(exit(&out), 0);
    let text = stdout(&out);
    assert!(text.starts_with("SUPPORTED"));
    assert!(text.contains("(Hxx*Hy^2 - 2*Hxy*Hx*Hy + Hyy*Hx^2) / J^2"));
}
