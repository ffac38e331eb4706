use std::path::Path;
use std::process::{Command, Output};

const STAR: &str = r#"{"thinfiber_schema":1,
 "vertices":[{"id":0},{"id":1},{"id":2},{"id":3}],
 "edges":[{"from":0,"to":1,"length":1.0},{"from":0,"to":2,"length":1.0},{"from":0,"to":3,"length":1.0}],
 "conditions":[{"vertex":0,"type":"kirchhoff"},{"vertex":1,"type":"dirichlet"},
               {"vertex":2,"type":"dirichlet"},{"vertex":3,"type":"dirichlet"}]}"#;

fn run(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_thinfiber"));
    cmd.args(args);
    if let Some(t) = threads {
        cmd.env("THINFIBER_THREADS", t);
    }
    cmd.output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn spectrum_csv_has_hash_header_and_frozen_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let g = write(tmp.path(), "star.json", STAR);
    let out = tmp.path().to_str().unwrap();
    let o = run(&["graph-spectrum", "--graph", &g, "--disk", "30", "--out", out], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("spectrum.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# config_hash=") && lines[0].len() == 14 + 64);
    assert_eq!(lines[1], "eps,mu_re,mu_im,multiplicity");
    let mus: Vec<(f64, usize)> = lines[2..]
        .iter()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[1].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect();
    let pi2 = std::f64::consts::PI.powi(2);
    assert_eq!(mus.len(), 3);
    for ((mu, m), (want, wm)) in mus.iter().zip([(pi2 / 4.0, 1), (pi2, 2), (9.0 * pi2 / 4.0, 1)]) {
        assert!((mu - want).abs() < 1e-8 && *m == wm);
    }
}

#[test]
fn reruns_are_bit_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let dom = serde_json::to_string(&thinfiber::waveguide::JunctionDomain2D::tee(
        0.5,
        thinfiber::waveguide::WallBc::Neumann,
    ))
    .unwrap();
    let d = write(tmp.path(), "tee.json", &dom);
    let mut outputs = Vec::new();
    for (k, threads) in ["1", "4"].iter().enumerate() {
        let out = tmp.path().join(format!("run{k}"));
        let o = run(
            &[
                "waveguide-scatter", "--domain", &d, "--lambda", "1:6:5", "--grid-h", "0.0625",
                "--out", out.to_str().unwrap(),
            ],
            Some(threads),
        );
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(std::fs::read_to_string(out.join("waveguide_scatter.csv")).unwrap());
    }
    assert!(outputs[0] == outputs[1], "outputs differ");
}

#[test]
fn hash_changes_with_input_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let hash = |body: &str, name: &str| {
        let g = write(tmp.path(), name, body);
        let out = tmp.path().join(name.replace(".json", ""));
        let o = run(&["graph-spectrum", "--graph", &g, "--disk", "20", "--out", out.to_str().unwrap()], None);
        assert_eq!(o.status.code(), Some(0));
        let csv = std::fs::read_to_string(out.join("spectrum.csv")).unwrap();
        csv.lines().next().unwrap().to_string()
    };
    assert_ne!(hash(STAR, "a.json"), hash(&STAR.replace("\"length\":1.0}]", "\"length\":1.5}]"), "b.json"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert_eq!(run(&["no-such-command"], None).status.code(), Some(64));
    assert_eq!(run(&[], None).status.code(), Some(64));

    let bad = write(tmp.path(), "bad.json", "{\"thinfiber_schema\":1,\"vertices\":[]}");
    let o = run(&["graph-spectrum", "--graph", &bad, "--disk", "10", "--out", out], None);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["exit_code"], 2);

    let missing = tmp.path().join("missing.json");
    let o = run(&["graph-spectrum", "--graph", missing.to_str().unwrap(), "--disk", "10", "--out", out], None);
    assert_eq!(o.status.code(), Some(2));

    // Source on a vertex is invalid input.
    let g = write(tmp.path(), "star.json", STAR);
    let o = run(&["graph-green", "--graph", &g, "--mu", "2", "--source", "0:0", "--out", out], None);
    assert_eq!(o.status.code(), Some(2));

    // μ on an eigenvalue: the system is singular.
    let mu = format!("{}", std::f64::consts::PI.powi(2));
    let o = run(&["graph-green", "--graph", &g, "--mu", &mu, "--source", "0:0.3", "--out", out], None);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn model1d_classify_reports_the_class() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write(tmp.path(), "v.json", "{\"values\":[4.0]}");
    let o = run(&["model1d-classify", "--potential", &p, "--out", tmp.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(tmp.path().join("classify.csv")).unwrap();
    assert!(csv.lines().nth(2).unwrap().starts_with("DirichletGeneric,"), "{csv}");
}

#[test]
fn every_subcommand_has_help() {
    for sub in [
        "graph-spectrum", "graph-green", "graph-scatter", "heat", "model1d-classify",
        "model1d-tr-converge", "waveguide-modes", "waveguide-scatter", "waveguide-threshold",
        "effpot-verify",
    ] {
        let o = run(&[sub, "--help"], None);
        assert_eq!(o.status.code(), Some(0), "{sub}");
    }
}
