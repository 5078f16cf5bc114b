//! End-to-end tests of the `topolow` binary: exit codes, output formats,
//! manifest replay, and the seeding contract. Each test runs the compiled
//! binary in a fresh temporary directory with the seed env var cleared.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ndarray::Array2;

use topolow::io;

const BIN: &str = env!("CARGO_BIN_EXE_topolow");

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("EUCLIDIFY_SEED")
        .output()
        .expect("binary spawns")
}

fn assert_ok(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_text(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn simulate_input(dir: &Path) -> PathBuf {
    let out = run_in(
        dir,
        &["simulate", "--m", "12", "--clusters", "3", "--fraction", "0.2", "--seed", "3", "--out", "sim"],
    );
    assert_ok(&out, "simulate");
    dir.join("sim/input.csv")
}

#[test]
fn exit_codes_distinguish_usage_parse_invalid_and_io() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let input = simulate_input(dir);
    let input = input.to_str().unwrap();

    // Usage errors are clap's domain.
    let partial_theta = run_in(dir, &["euclidify", input, "--k0", "1.0"]);
    assert_eq!(partial_theta.status.code(), Some(2), "partial hyperparameters");
    let unknown = run_in(dir, &["euclidify", input, "--no-such-flag"]);
    assert_eq!(unknown.status.code(), Some(2), "unknown flag");

    // A malformed cell is a parse error naming the offending location.
    std::fs::write(
        dir.join("bad.csv"),
        ",a,b\na,0,oops\nb,oops,0\n",
    )
    .unwrap();
    let parse = run_in(dir, &["euclidify", "bad.csv"]);
    assert_eq!(parse.status.code(), Some(2), "malformed cell");
    let stderr = String::from_utf8_lossy(&parse.stderr);
    assert!(stderr.contains("oops"), "parse error should quote the token: {stderr}");

    // Structurally unusable input is rejected before fitting.
    std::fs::write(
        dir.join("split.csv"),
        ",a,b,c,d\na,0,1,NA,NA\nb,1,0,NA,NA\nc,NA,NA,0,2\nd,NA,NA,2,0\n",
    )
    .unwrap();
    let invalid = run_in(dir, &["euclidify", "split.csv"]);
    assert_eq!(invalid.status.code(), Some(3), "disconnected input");
    let stderr = String::from_utf8_lossy(&invalid.stderr);
    assert!(stderr.contains("components"), "should explain the connectivity failure: {stderr}");

    // Negative domain values pass clap and die in validation.
    let bad_theta = run_in(
        dir,
        &["euclidify", input, "--dim", "2", "--k0", "-1", "--c0", "0.01", "--alpha", "0.01"],
    );
    assert_eq!(bad_theta.status.code(), Some(3), "negative spring constant");

    let io_err = run_in(dir, &["euclidify", "no-such-file.csv"]);
    assert_eq!(io_err.status.code(), Some(4), "missing input file");
}

#[test]
fn bench_exits_nonzero_when_every_run_fails() {
    let tmp = tempfile::tempdir().unwrap();
    // 95% masking of 10 objects cannot stay connected, so every run fails.
    let out = run_in(
        tmp.path(),
        &[
            "bench", "--sizes", "10", "--fractions", "0.95", "--replicates", "2",
            "--methods", "topolow", "--seed", "5",
            "--initial", "2", "--amc-rounds", "0", "--folds", "3", "--max-iterations", "50",
        ],
    );
    assert_eq!(out.status.code(), Some(4), "all-failed bench should exit 4");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("failed"), "stderr should say why: {stderr}");
}

#[test]
fn manifest_replays_to_identical_outputs_without_the_env_var() {
    let tmp = tempfile::tempdir().unwrap();
    let dir_a = tmp.path().join("a");
    let dir_b = tmp.path().join("b");
    std::fs::create_dir_all(&dir_a).unwrap();
    std::fs::create_dir_all(&dir_b).unwrap();

    let input = simulate_input(&dir_a);
    std::fs::create_dir_all(dir_b.join("sim")).unwrap();
    std::fs::copy(&input, dir_b.join("sim/input.csv")).unwrap();

    // Original run takes its seed from the environment, not a flag.
    let out = Command::new(BIN)
        .args([
            "euclidify", "sim/input.csv", "--out", "fit",
            "--initial", "3", "--amc-rounds", "1", "--batch", "2", "--folds", "3",
            "--max-iterations", "120", "--max-dim", "4",
        ])
        .current_dir(&dir_a)
        .env("EUCLIDIFY_SEED", "77")
        .output()
        .unwrap();
    assert_ok(&out, "euclidify under EUCLIDIFY_SEED");

    let manifest: serde_json::Value =
        serde_json::from_str(&read_text(&dir_a.join("fit/manifest.json"))).unwrap();
    let argv: Vec<String> = manifest["argv"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    assert_eq!(argv[0], "euclidify");
    let seed_pos = argv.iter().position(|a| a == "--seed").expect("seed recorded");
    assert_eq!(argv[seed_pos + 1], "77", "env seed must be resolved into argv");

    // Replaying the recorded argv without the env var reproduces every byte.
    let replay = Command::new(BIN)
        .args(&argv)
        .current_dir(&dir_b)
        .env_remove("EUCLIDIFY_SEED")
        .output()
        .unwrap();
    assert_ok(&replay, "manifest replay");
    for f in ["coordinates.csv", "metadata.json", "history.csv"] {
        assert_eq!(
            std::fs::read(dir_a.join("fit").join(f)).unwrap(),
            std::fs::read(dir_b.join("fit").join(f)).unwrap(),
            "{f} differs between original and replay"
        );
    }
}

#[test]
fn search_history_matches_budget_and_best_candidate() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    simulate_input(dir);

    // A budget of one sample and no refinement leaves exactly one row.
    let out = run_in(
        dir,
        &[
            "search", "sim/input.csv", "--out", "one", "--seed", "11",
            "--initial", "1", "--amc-rounds", "0", "--folds", "3", "--max-iterations", "100",
            "--max-dim", "4",
        ],
    );
    assert_ok(&out, "single-candidate search");
    let history = read_text(&dir.join("one/history.csv"));
    let lines: Vec<&str> = history.lines().collect();
    assert_eq!(lines.len(), 2, "expected header plus one row:\n{history}");
    assert!(lines[0].starts_with("N,k0,c0,alpha,cv_log_likelihood"));

    // A larger budget: the stored best equals the argmax of the history.
    let out = run_in(
        dir,
        &[
            "search", "sim/input.csv", "--out", "srch", "--seed", "11",
            "--initial", "4", "--amc-rounds", "1", "--batch", "2", "--folds", "3",
            "--max-iterations", "100", "--max-dim", "4",
        ],
    );
    assert_ok(&out, "search");
    let history = read_text(&dir.join("srch/history.csv"));
    let rows: Vec<&str> = history.lines().skip(1).collect();
    assert!(
        rows.len() >= 4 && rows.len() <= 6,
        "4 initial + up to 2 refinement candidates, got {}",
        rows.len()
    );
    let max_cv = rows
        .iter()
        .map(|r| r.split(',').nth(4).unwrap().parse::<f64>().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    let best: serde_json::Value =
        serde_json::from_str(&read_text(&dir.join("srch/best.json"))).unwrap();
    let best_cv = best["cv_log_likelihood"].as_f64().unwrap();
    assert!(
        (best_cv - max_cv).abs() <= 1e-9 * max_cv.abs().max(1.0),
        "best.json reports {best_cv}, history maximum is {max_cv}"
    );
}

#[test]
fn evaluate_scores_true_coordinates_as_a_perfect_fit() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    let pts: [[f64; 2]; 6] = [
        [0.0, 0.0],
        [3.0, 0.0],
        [3.0, 4.0],
        [0.0, 4.0],
        [1.5, 2.0],
        [5.0, 1.0],
    ];
    let m = pts.len();
    let labels: Vec<String> = (0..m).map(|i| format!("p{i}")).collect();
    let mut truth = Array2::zeros((m, m));
    for i in 0..m {
        for j in 0..m {
            truth[(i, j)] =
                ((pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2)).sqrt();
        }
    }
    io::write_wide_dense(&dir.join("truth.csv"), &labels, &truth).unwrap();
    let coords = Array2::from_shape_fn((m, 2), |(i, k)| pts[i][k]);
    io::write_coordinates(&dir.join("coords.csv"), &labels, &coords).unwrap();

    let out = run_in(
        dir,
        &[
            "evaluate", "truth.csv", "--coords", "coords.csv", "--svg",
            "--method", "oracle", "--dataset", "square", "--out", "ev",
        ],
    );
    assert_ok(&out, "evaluate");

    let report = read_text(&dir.join("ev/report.csv"));
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(
        lines[0],
        "method,dataset,replicate,normalized_stress,pearson_r,r_squared,deviation_score,n_pairs"
    );
    let cols: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(cols[0], "oracle");
    assert_eq!(cols[1], "square");
    assert!(cols[3].parse::<f64>().unwrap() <= 1e-8, "stress {}", cols[3]);
    assert!(cols[4].parse::<f64>().unwrap() >= 1.0 - 1e-9, "pearson {}", cols[4]);
    assert!(cols[5].parse::<f64>().unwrap() >= 1.0 - 1e-9, "r^2 {}", cols[5]);
    assert!(cols[6].parse::<f64>().unwrap() <= 1e-8, "deviation {}", cols[6]);
    assert_eq!(cols[7], "15", "n_pairs should be m(m-1)/2");

    let shepard = read_text(&dir.join("ev/shepard.csv"));
    assert_eq!(shepard.lines().count(), 1 + 15, "one row per unordered pair");

    let svg = read_text(&dir.join("ev/shepard.svg"));
    assert!(svg.starts_with("<svg"));
    assert!(svg.ends_with("</svg>\n"));
}

#[test]
fn simulate_masks_the_requested_fraction() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = run_in(
        dir,
        &["simulate", "--m", "50", "--fraction", "0.3", "--seed", "1", "--out", "s"],
    );
    assert_ok(&out, "simulate");

    let na_cells = |text: &str| {
        text.lines()
            .skip(1)
            .flat_map(|l| l.split(','))
            .filter(|c| *c == "NA")
            .count()
    };
    let input = read_text(&dir.join("s/input.csv"));
    let masked_cells = na_cells(&input);
    assert_eq!(masked_cells % 2, 0, "masking must stay symmetric");
    assert_eq!(
        masked_cells / 2,
        (0.3 * (50.0 * 49.0 / 2.0)) as usize,
        "30% of the 1225 unordered pairs"
    );
    assert_eq!(na_cells(&read_text(&dir.join("s/truth.csv"))), 0, "truth stays complete");
    assert_eq!(read_text(&dir.join("s/coords.csv")).lines().count(), 51);

    let params: serde_json::Value =
        serde_json::from_str(&read_text(&dir.join("s/params.json"))).unwrap();
    assert_eq!(params["objects"], 50);
    assert_eq!(params["mask_fraction"], 0.3);
    assert_eq!(params["seed"], 1);

    let out = run_in(
        dir,
        &["simulate", "--m", "20", "--fraction", "0", "--seed", "1", "--out", "full"],
    );
    assert_ok(&out, "simulate --fraction 0");
    assert_eq!(na_cells(&read_text(&dir.join("full/input.csv"))), 0);
}

#[test]
fn bench_preset_sweeps_the_masking_fractions() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = run_in(
        dir,
        &[
            "bench", "--preset", "sparsity", "--sizes", "20", "--replicates", "1",
            "--seed", "5", "--initial", "2", "--amc-rounds", "0", "--folds", "3",
            "--max-iterations", "80", "--out", "bench",
        ],
    );
    assert_ok(&out, "bench preset");

    let hash_dir = std::fs::read_dir(dir.join("bench"))
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    let variants: serde_json::Value =
        serde_json::from_str(&read_text(&hash_dir.join("variants.json"))).unwrap();
    let fractions: Vec<f64> = variants
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["fraction"].as_f64().unwrap())
        .collect();
    assert_eq!(fractions, vec![0.3, 0.6, 0.9]);

    let summary = read_text(&hash_dir.join("summary.csv"));
    assert!(summary
        .lines()
        .next()
        .unwrap()
        .starts_with("method,m,fraction,mean_stress,stress_sd"));

    // One topolow and one classical-MDS row per variant, failures included.
    let results = read_text(&hash_dir.join("results.csv"));
    assert_eq!(results.lines().count(), 1 + 3 * 2);

    let plan: serde_json::Value =
        serde_json::from_str(&read_text(&hash_dir.join("plan.json"))).unwrap();
    assert_eq!(plan["base_seed"], 5);
}

#[test]
fn similarity_input_embeds_after_a_log_transform() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(
        dir.join("titers.csv"),
        ",a,b,c,d\n\
         a,1280,160,40,20\n\
         b,160,640,80,40\n\
         c,40,80,320,160\n\
         d,20,40,160,640\n",
    )
    .unwrap();
    let out = run_in(
        dir,
        &[
            "euclidify", "titers.csv", "--similarity", "--transform", "log:2",
            "--dim", "2", "--k0", "1.0", "--c0", "0.01", "--alpha", "0.01",
            "--max-iterations", "200", "--seed", "4", "--out", "fit",
        ],
    );
    assert_ok(&out, "similarity euclidify");
    let coords = read_text(&dir.join("fit/coordinates.csv"));
    assert_eq!(coords.lines().count(), 5, "header plus one row per antigen");
    assert!(coords.starts_with("label,dim_1,dim_2"));

    // The transform flag is rejected without --similarity.
    let out = run_in(dir, &["euclidify", "titers.csv", "--transform", "log:2"]);
    assert_eq!(out.status.code(), Some(2));
}
