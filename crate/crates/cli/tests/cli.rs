use std::path::Path;
use std::process::{Command, Output};

use chd_core::chd::read_truth;
use chd_core::{CHDType, PipelineConfig};

fn chd(args: &[&str], config: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_chd"));
    cmd.args(args).env_remove("CHD_PIPELINE_CONFIG");
    if let Some(c) = config {
        cmd.env("CHD_PIPELINE_CONFIG", c);
    }
    cmd.output().expect("run chd")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn print_config_round_trips() {
    let text = ok(&chd(&["--print-config"], None));
    assert_eq!(PipelineConfig::parse(&text).unwrap(), PipelineConfig::default());
    assert!(text.contains("emd_gate=0.01"));
}

#[test]
fn config_file_and_env_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("pipeline.cfg");
    std::fs::write(&cfg, "emd_gate=0.5\n").unwrap();
    let text = ok(&chd(&["--print-config"], Some(&cfg)));
    assert!(text.contains("emd_gate=0.5"));
    let text = ok(&chd(&["--print-config", "--config", p(&cfg)], None));
    assert!(text.contains("emd_gate=0.5"));
    std::fs::write(&cfg, "bogus=1\n").unwrap();
    assert!(!chd(&["--print-config"], Some(&cfg)).status.success());
}

#[test]
fn gen_phantom_normal_preset() {
    let dir = tempfile::tempdir().unwrap();
    let case = dir.path().join("normal-1");
    ok(&chd(&["gen-phantom", "--preset", "normal", "--out", p(&case)], None));
    assert_eq!(read_truth(&case).unwrap(), [CHDType::Normal].into());
    assert!(case.join("blood_pool.cvol").is_file());
    assert!(case.join("substructures.cvol").is_file());

    let spec = dir.path().join("from-spec");
    ok(&chd(&["gen-phantom", "--spec", p(&case.join("spec.json")), "--out", p(&spec)], None));
    assert_eq!(
        std::fs::read(case.join("blood_pool.cvol")).unwrap(),
        std::fs::read(spec.join("blood_pool.cvol")).unwrap()
    );
    assert!(!chd(&["gen-phantom", "--preset", "nope", "--out", p(&spec)], None).status.success());
}

#[test]
fn classify_without_library_fails() {
    let dir = tempfile::tempdir().unwrap();
    let case = dir.path().join("c");
    ok(&chd(&["gen-phantom", "--preset", "normal", "--out", p(&case)], None));
    let out = chd(
        &["classify", p(&case), "--library", p(&dir.path().join("missing")), "--out", p(dir.path())],
        None,
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("template library"));
}

#[test]
fn evaluate_baseline_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/table2_baseline.tsv");
    let text = ok(&chd(&["evaluate", "--matrix", p(&fixture), "--out", p(dir.path())], None));
    assert!(text.contains("coverage 88.8% selective accuracy 81.9% full accuracy 72.7%"), "{text}");
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["cases"], 187);
    assert!(dir.path().join("matrix.tsv").is_file());
    assert!(dir.path().join("table.txt").is_file());
}

#[test]
fn jobs_must_be_positive() {
    let dir = tempfile::tempdir().unwrap();
    let out = chd(&["--jobs", "0", "gen-phantom", "--preset", "normal", "--out", p(dir.path())], None);
    assert!(!out.status.success());
}

#[test]
fn end_to_end_library_classify_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let mut lib_cases = Vec::new();
    for name in ["normal", "daa", "cat", "pua", "pas", "iaa"] {
        let case = root.join("lib_cases").join(format!("{name}-101"));
        ok(&chd(&["gen-phantom", "--preset", name, "--seed", "101", "--out", p(&case)], None));
        lib_cases.push(case);
    }
    let mut args = vec!["--jobs", "2", "extract"];
    args.extend(lib_cases.iter().map(|c| p(c)));
    let skels = root.join("skels");
    args.extend(["--out", p(&skels)]);
    ok(&chd(&args, None));
    let lib = root.join("lib");
    let counts = ok(&chd(&["build-templates", p(&skels), "--out", p(&lib)], None));
    assert_eq!(counts.lines().count(), 6);

    let asd = root.join("cases").join("asd-1");
    ok(&chd(&["gen-phantom", "--preset", "asd", "--out", p(&asd)], None));
    let extract = chd(&["extract", p(&asd), "--out", p(&skels)], None);
    assert!(!extract.status.success(), "ASD implies no template category");

    let daa = root.join("cases").join("daa-1");
    ok(&chd(&["gen-phantom", "--preset", "daa", "--out", p(&daa)], None));
    let diag = root.join("diag");

    // default gate: deferred, still exit 0
    let text = ok(&chd(&["classify", p(&daa), "--library", p(&lib), "--out", p(&diag)], None));
    assert!(text.contains("Uncertain"), "{text}");

    let open = root.join("open.cfg");
    std::fs::write(&open, "emd_gate=1e9\n").unwrap();
    let text = ok(&chd(
        &["classify", p(&daa), p(&asd), "--library", p(&lib), "--out", p(&diag)],
        Some(&open),
    ));
    assert!(text.contains("daa-1\t{DAA}"), "{text}");
    assert!(text.contains("asd-1\t{ASD}"), "{text}");

    let report = root.join("report");
    let text = ok(&chd(
        &["evaluate", p(&diag), "--truth", p(&root.join("cases")), "--out", p(&report)],
        None,
    ));
    assert!(text.contains("cases 2 uncertain 0 correct 2"), "{text}");

    // a library built under another shape config is refused
    let other = root.join("other.cfg");
    std::fs::write(&other, "sample_count=64\n").unwrap();
    let out = chd(&["classify", p(&daa), "--library", p(&lib), "--out", p(&diag)], Some(&other));
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("fingerprint"));
}
