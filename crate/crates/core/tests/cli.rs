use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn gprtopo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gprtopo"))
        .args(args)
        .env_remove("GPRTOPO_THREADS")
        .output()
        .expect("spawn gprtopo")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    walkdir::WalkDir::new(root)
        .into_iter()
        .map(Result::unwrap)
        .filter(|e| e.file_type().is_file())
        .map(|e| (e.path().strip_prefix(root).unwrap().to_path_buf(), fs::read(e.path()).unwrap()))
        .collect()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn synth_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&gprtopo(&["synth", "--n", "3", "--seed", "9", "--out", p(out)]));
    }
    let ta = tree(&a);
    assert_eq!(ta, tree(&b));
    assert_eq!(ta.keys().filter(|k| k.starts_with("images")).count(), 3);
    let img = image::load_from_memory(&ta[Path::new("images/scene_00000.png")]).unwrap();
    assert_eq!(img.width(), 456);
}

#[test]
fn zero_items_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = gprtopo(&["synth", "--n", "0", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn topo_ring_and_constant_fixtures() {
    let dir = TempDir::new().unwrap();
    let ring = write(dir.path(), "ring.pgm", "P2\n3 3\n10\n1 1 1\n1 10 1\n1 1 1\n");
    let flat = write(dir.path(), "flat.pgm", "P2\n4 3\n255\n7 7 7 7\n7 7 7 7\n7 7 7 7\n");
    let out = dir.path().join("out");
    ok(&gprtopo(&["topo", p(&ring), p(&flat), "--out", p(&out)]));

    let csv = fs::read_to_string(out.join("ring_diagram.csv")).unwrap();
    let loops: Vec<&str> = csv.lines().filter(|l| l.starts_with("1,")).collect();
    assert_eq!(loops, ["1,0.1,1,0.9,8"]);
    let csv = fs::read_to_string(out.join("flat_diagram.csv")).unwrap();
    assert!(csv.lines().all(|l| !l.starts_with("1,")), "{csv}");
    assert!(out.join("ring_fused.png").exists());
}

#[test]
fn topo_output_independent_of_threads() {
    let dir = TempDir::new().unwrap();
    let mut inputs = Vec::new();
    for k in 0..8u32 {
        let body: String = (0..12 * 10).map(|i| format!("{} ", (i * (k + 3) + k) % 17)).collect();
        inputs.push(write(dir.path(), &format!("in{k}.pgm"), &format!("P2\n12 10\n16\n{body}\n")));
    }
    let mut trees = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("t{threads}"));
        let mut args = vec!["topo", "--threads", threads, "--out", p(&out)];
        args.extend(inputs.iter().map(|i| p(i)));
        ok(&gprtopo(&args));
        trees.push(tree(&out));
    }
    assert_eq!(trees[0].len(), 8 * 4);
    assert_eq!(trees[0], trees[1]);
}

#[test]
fn unreadable_input_fails_only_that_file() {
    let dir = TempDir::new().unwrap();
    let good = write(dir.path(), "good.pgm", "P2\n2 2\n3\n0 1\n2 3\n");
    let missing = dir.path().join("missing.pgm");
    let out = dir.path().join("out");
    let res = gprtopo(&["topo", p(&good), p(&missing), "--out", p(&out)]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("missing.pgm"));
    assert!(out.join("good_diagram.csv").exists());
}

fn eval(dir: &Path, preds: &str) -> (Output, String) {
    let labels = dir.join("labels");
    fs::create_dir_all(&labels).unwrap();
    fs::write(labels.join("a.txt"), "0 0.200000 0.200000 0.100000 0.100000\n0 0.700000 0.700000 0.100000 0.100000\n")
        .unwrap();
    let preds = write(dir, "preds.csv", preds);
    let report = dir.join("report");
    let out = gprtopo(&["eval", "--preds", p(&preds), "--labels", p(&labels), "--out", p(&report)]);
    let csv = fs::read_to_string(report.join("report.csv")).unwrap_or_default();
    (out, csv)
}

fn metric(csv: &str, name: &str) -> f64 {
    csv.lines()
        .find_map(|l| l.strip_prefix(&format!("{name},")))
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn eval_fixtures() {
    let header = "image_id,class_id,cx,cy,w,h,confidence\n";
    let dir = TempDir::new().unwrap();
    let (out, csv) = eval(dir.path(), &format!("{header}a,0,0.2,0.2,0.1,0.1,0.9\na,0,0.7,0.7,0.1,0.1,0.8\n"));
    ok(&out);
    assert_eq!(metric(&csv, "mAP@0.5"), 1.0);
    assert_eq!(metric(&csv, "mAP@0.5:0.95"), 1.0);

    let dir = TempDir::new().unwrap();
    let (out, csv) = eval(dir.path(), header);
    ok(&out);
    assert_eq!(metric(&csv, "mAP@0.5"), 0.0);

    let dir = TempDir::new().unwrap();
    let three = "a,0,0.2,0.2,0.1,0.1,0.9\na,0,0.45,0.45,0.1,0.1,0.8\na,0,0.7,0.7,0.1,0.1,0.7\n";
    let (out, csv) = eval(dir.path(), &format!("{header}{three}"));
    ok(&out);
    assert!((metric(&csv, "AP@0.50") - 5.0 / 6.0).abs() <= 1e-6);

    let dir = TempDir::new().unwrap();
    let (out, _) = eval(dir.path(), &format!("{header}a,0,0.2,0.2,0.1,0.1,0.9\na,0,oops,0.2,0.1,0.1,0.9\n"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn dumped_config_reproduces_the_run() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.txt");
    let a = dir.path().join("a");
    ok(&gprtopo(&[
        "synth", "--n", "2", "--seed", "31", "--set", "noise_rms=0.02", "--dump-config", p(&cfg), "--out", p(&a),
    ]));
    let b = dir.path().join("b");
    ok(&gprtopo(&["synth", "--n", "2", "--config", p(&cfg), "--out", p(&b)]));
    assert_eq!(tree(&a), tree(&b));
    let c = dir.path().join("c");
    ok(&gprtopo(&["synth", "--n", "2", "--config", p(&cfg), "--seed", "32", "--out", p(&c)]));
    assert_ne!(tree(&a), tree(&c));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = TempDir::new().unwrap();
    let out = gprtopo(&["synth", "--n", "1", "--set", "colour=blue", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn synth_preprocess_topo_export_chain() {
    let dir = TempDir::new().unwrap();
    let root = dir.path();
    let synth = root.join("synth");
    ok(&gprtopo(&["synth", "--n", "3", "--seed", "4", "--out", p(&synth)]));
    let bscans: Vec<PathBuf> = (0..3).map(|i| synth.join(format!("bscans/scene_{i:05}.gprb"))).collect();
    let pre = root.join("pre");
    let mut args = vec!["preprocess", "--agc-windows", "32,64", "--out", p(&pre)];
    args.extend(bscans.iter().map(|b| p(b)));
    ok(&gprtopo(&args));
    assert_eq!(fs::read_dir(&pre).unwrap().count(), 3 * 2 * 2);

    let export = root.join("dataset");
    let out = gprtopo(&["export", "--simulated", p(&synth), "--seed", "1", "--out", p(&export)]);
    ok(&out);
    let manifest = fs::read_to_string(export.join("manifest.txt")).unwrap();
    assert!(manifest.starts_with("# train simulated=2 field=0 val simulated=1 field=0\n"), "{manifest}");
    assert_eq!(manifest.lines().count(), 4);
}
