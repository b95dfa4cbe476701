//! Black-box tests of the installed binary: exit codes, output formats,
//! determinism, and the gen -> sketch -> merge -> estimate -> exact loop.

use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_skewsketch");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn")
}

fn run_stdin(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(BIN)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(stdin.as_bytes())
        .unwrap();
    child.wait_with_output().expect("wait")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn exit_codes_split_usage_from_domain() {
    assert_eq!(code(&run(&["--nonsense"])), 2);
    assert_eq!(code(&run(&["estimate", "/nonexistent", "--method", "nope"])), 2);
    assert_eq!(code(&run(&["exact", "--alpha", "2.5"])), 3, "alpha domain");
    let parse = run_stdin(&["exact", "--alpha", "0.5"], "1 1.0\nbroken\n");
    assert_eq!(code(&parse), 3);
    assert!(
        String::from_utf8_lossy(&parse.stderr).contains("line 2"),
        "parse error must name the line"
    );
    let negative = run_stdin(&["exact", "--alpha", "0.5"], "4 -1.5\n");
    assert_eq!(code(&negative), 3);
    assert!(String::from_utf8_lossy(&negative.stderr).contains("index 4"));
    let missing = run(&["estimate", "/no/such/file.sks", "--method", "gm"]);
    assert_eq!(code(&missing), 3);
    assert!(
        String::from_utf8_lossy(&missing.stderr).contains("/no/such/file.sks"),
        "io errors must name the file"
    );
}

#[test]
fn exact_hand_values() {
    let out = run_stdin(&["exact", "--alpha", "0.5"], "1 7\n");
    assert_eq!(stdout(&out), "2.645751311\n");
    let cancel = run_stdin(&["exact", "--alpha", "0.5"], "1 5\n1 -5\n2 4\n");
    assert_eq!(stdout(&cancel), "2\n");
    let linear = run_stdin(&["exact", "--alpha", "1"], "3 1.25\n9 0.75\n# note\n");
    assert_eq!(stdout(&linear), "2\n");
}

#[test]
fn gen_is_deterministic_and_nonnegative() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    let args = |p: &Path| {
        vec![
            "gen".to_string(),
            "--domain".into(),
            "500".into(),
            "--updates".into(),
            "4000".into(),
            "--dist".into(),
            "zipf:1.3".into(),
            "--deletion-fraction".into(),
            "0.4".into(),
            "--seed".into(),
            "21".into(),
            "--out".into(),
            p.display().to_string(),
        ]
    };
    let run_vec = |v: Vec<String>| {
        let out = Command::new(BIN).args(&v).output().unwrap();
        assert!(out.status.success());
    };
    run_vec(args(&a));
    run_vec(args(&b));
    let bytes_a = std::fs::read(&a).unwrap();
    assert_eq!(bytes_a, std::fs::read(&b).unwrap(), "gen not byte-deterministic");
    assert!(bytes_a.iter().filter(|&&c| c == b'\n').count() == 4000);

    // The generated Turnstile stream must satisfy the oracle's
    // non-negativity precondition.
    let exact = run(&["exact", "--alpha", "0.7", a.to_str().unwrap()]);
    let value: f64 = stdout(&exact).trim().parse().unwrap();
    assert!(value > 0.0);

    let cash = run(&["gen", "--updates", "50", "--deletion-fraction", "0", "--seed", "1"]);
    for line in stdout(&cash).lines() {
        let delta: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
        assert!(delta > 0.0, "cash-register stream must only insert");
    }
}

#[test]
fn sketch_files_are_bit_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("s.txt");
    std::fs::write(&stream, "1 2.5\n7 -0.5\n7 1.5\n42 3\n").unwrap();
    let s1 = dir.path().join("s1.bin");
    let s2 = dir.path().join("s2.bin");
    for out in [&s1, &s2] {
        let o = run(&[
            "sketch",
            stream.to_str().unwrap(),
            "--alpha",
            "0.75",
            "--k",
            "64",
            "--seed",
            "1234",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    let bytes = std::fs::read(&s1).unwrap();
    assert_eq!(bytes, std::fs::read(&s2).unwrap());
    assert_eq!(bytes.len(), 34 + 8 * 64);
}

#[test]
fn estimate_row_round_trips_and_op_matches_mle_at_half() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("s.txt");
    let sketch = dir.path().join("s.bin");
    let gen = run(&[
        "gen", "--domain", "300", "--updates", "3000", "--deletion-fraction", "0.2",
        "--seed", "8", "--out", stream.to_str().unwrap(),
    ]);
    assert!(gen.status.success());
    let sk = run(&[
        "sketch", stream.to_str().unwrap(), "--alpha", "0.5", "--k", "150",
        "--seed", "99", "--out", sketch.to_str().unwrap(),
    ]);
    assert!(sk.status.success());

    let parse_estimate = |method: &str| -> (f64, f64) {
        let out = run(&["estimate", sketch.to_str().unwrap(), "--method", method]);
        let text = stdout(&out);
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "estimate,method,alpha,k,asymptotic_variance_factor,degenerate"
        );
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields[1], method);
        assert_eq!(fields[2].parse::<f64>().unwrap(), 0.5);
        assert_eq!(fields[3].parse::<u32>().unwrap(), 150);
        assert_eq!(fields[5], "false");
        (
            fields[0].parse().unwrap(),
            fields[4].parse().unwrap(),
        )
    };
    let (op, op_v) = parse_estimate("op");
    let (mle, mle_v) = parse_estimate("mle05");
    assert!((op / mle - 1.0).abs() <= 1e-9, "op {op} vs mle {mle}");
    assert_eq!(op_v, 0.5);
    assert_eq!(mle_v, 0.5);

    // The estimate is plausible against the exact oracle: within 6
    // standard deviations of the analytic variance.
    let exact: f64 = stdout(&run(&["exact", "--alpha", "0.5", stream.to_str().unwrap()]))
        .trim()
        .parse()
        .unwrap();
    let (gm, gm_v) = parse_estimate("gm");
    assert!(gm_v > 1.2337 && gm_v < 1.2338);
    assert!(
        (gm / exact - 1.0).abs() <= 6.0 * (gm_v / 150.0).sqrt(),
        "gm {gm} vs exact {exact}"
    );

    assert_eq!(code(&run(&["estimate", sketch.to_str().unwrap(), "--method", "gm-beta"])), 3);
    assert_eq!(code(&run(&["estimate", sketch.to_str().unwrap(), "--method", "hm"])), 0);
}

#[test]
fn split_merge_matches_one_pass_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("s.txt");
    let gen = run(&[
        "gen", "--domain", "200", "--updates", "2000", "--deletion-fraction", "0.3",
        "--seed", "5", "--out", stream.to_str().unwrap(),
    ]);
    assert!(gen.status.success());
    let text = std::fs::read_to_string(&stream).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let front = dir.path().join("front.txt");
    let back = dir.path().join("back.txt");
    std::fs::write(&front, lines[..700].join("\n") + "\n").unwrap();
    std::fs::write(&back, lines[700..].join("\n") + "\n").unwrap();

    let sketch_args = |input: &Path, out: &Path| {
        let o = run(&[
            "sketch", input.to_str().unwrap(), "--alpha", "1.5", "--k", "80",
            "--seed", "77", "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    };
    let whole = dir.path().join("whole.bin");
    let part1 = dir.path().join("p1.bin");
    let part2 = dir.path().join("p2.bin");
    sketch_args(&stream, &whole);
    sketch_args(&front, &part1);
    sketch_args(&back, &part2);
    let merged = dir.path().join("merged.bin");
    let m = run(&[
        "merge", part1.to_str().unwrap(), part2.to_str().unwrap(),
        "--out", merged.to_str().unwrap(),
    ]);
    assert!(m.status.success());

    let estimate = |p: &Path| -> f64 {
        stdout(&run(&["estimate", p.to_str().unwrap(), "--method", "gm"]))
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .next()
            .unwrap()
            .parse()
            .unwrap()
    };
    let whole_est = estimate(&whole);
    let merged_est = estimate(&merged);
    assert!(
        (whole_est / merged_est - 1.0).abs() <= 1e-9,
        "{whole_est} vs {merged_est}"
    );

    // Mismatched seeds must refuse to merge.
    let other = dir.path().join("other.bin");
    let o = run(&[
        "sketch", stream.to_str().unwrap(), "--alpha", "1.5", "--k", "80",
        "--seed", "78", "--out", other.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let bad = run(&[
        "merge", whole.to_str().unwrap(), other.to_str().unwrap(),
        "--out", dir.path().join("bad.bin").to_str().unwrap(),
    ]);
    assert_eq!(code(&bad), 3);
}

#[test]
fn empty_stream_gives_degenerate_zero_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let sketch = dir.path().join("empty.bin");
    let o = run_stdin(
        &["sketch", "--alpha", "0.5", "--k", "10", "--seed", "3", "--out",
          sketch.to_str().unwrap()],
        "# nothing but comments\n\n",
    );
    assert!(o.status.success());
    let out = stdout(&run(&["estimate", sketch.to_str().unwrap(), "--method", "gm"]));
    let row = out.lines().nth(1).unwrap();
    assert!(row.starts_with("0,gm,"), "row: {row}");
    assert!(row.ends_with(",true"), "degenerate flag expected: {row}");
}

#[test]
fn experiment_csvs_are_deterministic_with_expected_headers() {
    let variance = |seed: &str| {
        stdout(&run(&[
            "experiment-variance", "--alpha", "0.5", "--alpha", "1.5",
            "--k", "20", "--trials", "400", "--seed", seed,
        ]))
    };
    let v1 = variance("6");
    assert_eq!(
        v1.lines().next().unwrap(),
        "alpha,estimator,k,trials,empirical_mean,empirical_v,theoretical_v,epsilon,empirical_tail,bound_tail"
    );
    assert_eq!(v1.lines().count(), 1 + 5 + 3);
    assert_eq!(v1, variance("6"));
    assert_ne!(v1, variance("7"));

    let tails = stdout(&run(&[
        "experiment-tails", "--alpha", "0.5", "--method", "mle05",
        "--epsilon", "0.1", "--epsilon", "1.2", "--k", "25", "--trials", "500", "--seed", "4",
    ]));
    let rows: Vec<&str> = tails.lines().skip(1).collect();
    assert_eq!(rows.len(), 3, "left 0.1, right 0.1, right 1.2");
    assert!(rows[0].contains("mle05-left"));
    assert!(rows[1].contains("mle05-right"));
    assert_eq!(code(&run(&[
        "experiment-tails", "--alpha", "0.5", "--method", "op", "--epsilon", "0.1",
    ])), 3);
}

#[test]
fn bounds_table_modes_and_validation() {
    let alpha_mode = stdout(&run(&[
        "bounds-table", "--alpha", "0.5", "--epsilon", "0.2", "--epsilon", "2",
        "--method", "hm", "--delta-prob", "0.05",
    ]));
    assert_eq!(
        alpha_mode.lines().next().unwrap(),
        "estimator,alpha,delta,epsilon,g_right,g_left,near_one_approx,k"
    );
    let rows: Vec<Vec<&str>> = alpha_mode
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert!(!rows[0][5].is_empty(), "left constant expected at eps 0.2");
    assert!(rows[1][5].is_empty(), "no left constant at eps 2");
    for row in &rows {
        assert!(row[4].parse::<f64>().unwrap() > 0.0);
        assert!(row[7].parse::<u64>().unwrap() >= 2);
    }

    let delta_mode = stdout(&run(&[
        "bounds-table", "--mode", "delta", "--delta", "0.001", "--epsilon", "0.1",
    ]));
    assert_eq!(
        delta_mode.lines().next().unwrap(),
        "estimator,alpha,delta,epsilon,g_right,g_left,near_one_approx"
    );
    for line in delta_mode.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let g: f64 = f[4].parse().unwrap();
        let approx: f64 = f[6].parse().unwrap();
        assert!((g / approx - 1.0).abs() <= 0.05);
    }

    // Mode/grid mix-ups are refused.
    assert_eq!(code(&run(&[
        "bounds-table", "--mode", "delta", "--alpha", "0.5", "--delta", "0.001",
        "--epsilon", "0.1",
    ])), 3);
    assert_eq!(code(&run(&[
        "bounds-table", "--mode", "delta", "--delta", "0.001", "--epsilon", "0.1",
        "--method", "hm",
    ])), 3);
    assert_eq!(code(&run(&["bounds-table", "--epsilon", "0.1", "--mode", "sideways"])), 2);
}

#[test]
fn compensated_sketch_survives_huge_cancellation() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("s.txt");
    let mut text = String::from("1 1e16\n");
    for _ in 0..1000 {
        text.push_str("2 0.001\n");
    }
    text.push_str("1 -1e16\n");
    std::fs::write(&stream, &text).unwrap();
    let build = |flag: Option<&str>, out: &Path| {
        let mut args = vec![
            "sketch", stream.to_str().unwrap(), "--alpha", "0.5", "--k", "40",
            "--seed", "12", "--out", out.to_str().unwrap(),
        ];
        if let Some(f) = flag {
            args.push(f);
        }
        assert!(run(&args).status.success());
    };
    let plain = dir.path().join("plain.bin");
    let comp = dir.path().join("comp.bin");
    build(None, &plain);
    build(Some("--compensated"), &comp);
    let estimate = |p: &Path| -> f64 {
        stdout(&run(&["estimate", p.to_str().unwrap(), "--method", "mle05"]))
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .next()
            .unwrap()
            .parse()
            .unwrap()
    };
    // True moment: (1000 * 0.001)^0.5 = 1.
    let comp_est = estimate(&comp);
    assert!(
        comp_est > 0.3 && comp_est < 3.0,
        "compensated estimate should be near 1, got {comp_est}"
    );
    // The plain sketch has lost the small mass in the rounding of the
    // huge insert; its estimate collapses toward zero.
    assert!(estimate(&plain) < 1e-6);
}
