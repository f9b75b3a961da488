use std::path::Path;
use std::process::{Command, Output};

fn roadmetric(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roadmetric"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn dist_on_an_empty_sample_is_all_hops() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.txt"), "2 3 4 0.5 0 0 0.5 0\n").unwrap();
    let o = roadmetric(
        dir.path(),
        &[
            "dist",
            "--epsilon",
            "0.5",
            "--x",
            "0,0",
            "--y",
            "1,0",
            "--sample-file",
            "empty.txt",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    for key in [
        "lower_certificate",
        "t_eps_upper",
        "kendall_recursive_upper",
    ] {
        let line = text.lines().find(|l| l.starts_with(key)).unwrap();
        let v: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
        assert_eq!(v, 2.0, "{line}");
    }
}

#[test]
fn field_and_csv_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let field_args = [
        "field",
        "--seed",
        "5",
        "--grid-n",
        "48",
        "--grid-half-width",
        "1",
        "--epsilon",
        "0.3",
    ];
    let qcp_args = [
        "qcp",
        "--seed",
        "5",
        "--t-list",
        "0.7,1",
        "--n-samples",
        "200",
        "--epsilon-ratio",
        "2",
    ];
    let out = dir.path().join("out");
    let mut runs = Vec::new();
    for _ in 0..2 {
        for args in [&field_args[..], &qcp_args[..]] {
            let mut a = args.to_vec();
            a.extend(["--out", out.to_str().unwrap()]);
            let o = roadmetric(dir.path(), &a);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        }
        runs.push(
            ["field.pgm", "field.pgm.meta", "qcp.csv", "qcp.csv.meta"]
                .map(|f| std::fs::read(out.join(f)).unwrap()),
        );
    }
    assert_eq!(runs[0], runs[1]);
    let header = String::from_utf8(runs[0][2].clone()).unwrap();
    assert!(header.starts_with("t,estimate_upper,estimate_cert,stderr,n\r\n"));
    let meta = String::from_utf8(runs[0][3].clone()).unwrap();
    assert!(meta.contains("master_seed = 5"));
}

#[test]
fn sample_writes_a_readable_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = roadmetric(
        dir.path(),
        &[
            "sample",
            "--seed",
            "3",
            "--epsilon",
            "0.5",
            "--window-radius",
            "2",
        ],
    );
    assert!(o.status.success());
    let f = std::fs::File::open(dir.path().join("sample.txt")).unwrap();
    let s = roadmetric::sampler::read_sample(std::io::BufReader::new(f)).unwrap();
    assert_eq!(s.seed, 3);
    assert!(stdout(&o).starts_with(&format!("{} roads", s.count())));
}

#[test]
fn exit_codes_follow_the_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| roadmetric(dir.path(), args).status.code().unwrap();
    assert_eq!(code(&["dist", "--bogus", "1"]), 1);
    assert_eq!(code(&["dist", "--gamma", "1.5"]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    std::fs::write(dir.path().join("bad.cfg"), "d = 2\ngamma = 2\n").unwrap();
    let o = roadmetric(dir.path(), &["--config", "bad.cfg", "dist"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("gamma") && err.contains("line 2"), "{err}");
    assert_eq!(code(&["--config", "missing.cfg", "dist"]), 3);
    assert_eq!(code(&["dist", "--sample-file", "missing.txt"]), 3);
    std::fs::write(dir.path().join("blocker"), "").unwrap();
    assert_eq!(code(&["sample", "--out", "blocker/sub"]), 3);
    assert_eq!(
        code(&[
            "bounds",
            "--n-samples",
            "200",
            "--r-seq",
            "1,0.5",
            "--v-seq",
            "2,1",
            "--scale-hi",
            "1",
            "--seed",
            "1"
        ]),
        0
    );
}
