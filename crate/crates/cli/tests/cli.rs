use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use bae_core::data::{
    load_scores_csv, parse_eval_csv, parse_histogram_csv, parse_pcc_csv, read_text, write_idx,
};
use bae_core::inference::load_sampler;
use bae_core::{Dataset, Family, Method, Split, Tensor};

fn bae(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bae"))
        .args(args)
        .current_dir(cwd)
        .env_remove("BAE_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> Output {
    let out = bae(args, cwd);
    assert!(
        out.status.success(),
        "bae {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

const SMALL: &str = "epochs=4\nbatch_size=32\nhidden=16\nlatent_dim=4\n";

/// Writes `SMALL` overridden by the `key=value` lines of `extra`.
fn write_config(dir: &Path, extra: &str) -> String {
    let key = |l: &str| l.split('=').next().unwrap().to_string();
    let overridden: Vec<String> = extra.lines().map(key).collect();
    let base: String = SMALL
        .lines()
        .filter(|l| !overridden.contains(&key(l)))
        .map(|l| format!("{l}\n"))
        .collect();
    let path = dir.join("exp.cfg");
    std::fs::write(&path, format!("{base}{extra}")).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn synthetic_smoke_run_writes_a_loadable_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "train_data=synthetic:mid_gray:200:8\nfamily=vae\n",
    );
    let start = Instant::now();
    ok(
        &[
            "train",
            "--config",
            &cfg,
            "--out-dir",
            "ck",
            "--samples",
            "7",
        ],
        dir.path(),
    );
    assert!(start.elapsed() < Duration::from_secs(60));
    let (sampler, manifest) = load_sampler(&dir.path().join("ck")).unwrap();
    assert_eq!(sampler.family(), Family::Vae);
    assert_eq!(sampler.samples(), 7);
    assert_eq!(manifest.get_str("height"), Some("8"));
    let log = std::fs::read_to_string(dir.path().join("ck/train_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 1 + 4);
}

#[test]
fn fixed_seed_pipeline_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "train_data=synthetic:mid_gray:120:8\n");
    for run in ["a", "b"] {
        ok(
            &[
                "train",
                "--config",
                &cfg,
                "--ensemble",
                "2",
                "--seed",
                "5",
                "--out-dir",
                run,
            ],
            dir.path(),
        );
        let out = format!("{run}/scores.csv");
        ok(
            &[
                "score",
                "--checkpoint",
                run,
                "--data",
                "synthetic:zero_heavy:30:8",
                "--out",
                &out,
            ],
            dir.path(),
        );
    }
    for f in [
        "member_00.bae",
        "member_01.bae",
        "manifest.txt",
        "train_log.csv",
        "scores.csv",
    ] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
    // rescoring unchanged checkpoints is idempotent
    ok(
        &[
            "score",
            "--checkpoint",
            "a",
            "--data",
            "synthetic:zero_heavy:30:8",
            "--out",
            "again.csv",
        ],
        dir.path(),
    );
    assert_eq!(
        std::fs::read(dir.path().join("again.csv")).unwrap(),
        std::fs::read(dir.path().join("a/scores.csv")).unwrap()
    );
}

#[test]
fn deterministic_scores_and_self_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "train_data=synthetic:mid_gray:100:8\n");
    ok(&["train", "--config", &cfg, "--out-dir", "ck"], dir.path());
    ok(
        &[
            "score",
            "--checkpoint",
            "ck",
            "--data",
            "synthetic:mid_gray:40:8:0.8:3",
            "--out",
            "s.csv",
            "--label",
            "in",
        ],
        dir.path(),
    );
    let rows = load_scores_csv(&dir.path().join("s.csv")).unwrap();
    assert_eq!(rows.len(), 40);
    for r in &rows {
        assert_eq!(r.label, "in");
        assert_eq!(r.report.var_ll, 0.0);
        assert_eq!(r.report.waic, r.report.e_ll - r.report.var_ll);
    }
    ok(
        &["eval", "--in", "s.csv", "--ood", "s.csv", "--out-dir", "ev"],
        dir.path(),
    );
    let eval = parse_eval_csv(&read_text(&dir.path().join("ev/eval.csv")).unwrap()).unwrap();
    assert_eq!(eval.len(), 4);
    assert!(eval
        .iter()
        .all(|r| r.result.auroc == 0.5 && r.result.n_in == 40 && r.result.n_out == 40));
    let pcc = parse_pcc_csv(&read_text(&dir.path().join("ev/pcc.csv")).unwrap()).unwrap();
    // MidGray has no zero pixels, so every correlation is undefined
    assert!(pcc.iter().all(|r| r.pcc.is_none()));
    let hist =
        parse_histogram_csv(&read_text(&dir.path().join("ev/histogram.csv")).unwrap()).unwrap();
    for m in Method::ALL {
        let bins: Vec<_> = hist.iter().filter(|h| h.method == m).collect();
        // both variances are zero for a single model; a constant column is one bin
        let constant = matches!(m, Method::VarLl | Method::VarXhat);
        assert_eq!(bins.len(), if constant { 1 } else { 20 });
        assert_eq!(bins.iter().map(|b| b.bin.count_in).sum::<usize>(), 40);
    }
}

#[test]
fn perfect_separation_gives_auroc_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "train_data=synthetic:mid_gray:100:8\nlikelihood=gaussian\nepochs=30\n",
    );
    ok(&["train", "--config", &cfg, "--out-dir", "ck"], dir.path());
    ok(
        &[
            "score",
            "--checkpoint",
            "ck",
            "--data",
            "synthetic:mid_gray:50:8:0.8:1",
            "--out",
            "in.csv",
        ],
        dir.path(),
    );
    ok(
        &[
            "score",
            "--checkpoint",
            "ck",
            "--data",
            "synthetic:zero_heavy:50:8",
            "--out",
            "ood.csv",
        ],
        dir.path(),
    );
    ok(
        &[
            "eval",
            "--in",
            "in.csv",
            "--ood",
            "ood.csv",
            "--out-dir",
            "ev",
        ],
        dir.path(),
    );
    let eval = parse_eval_csv(&read_text(&dir.path().join("ev/eval.csv")).unwrap()).unwrap();
    let e_ll = eval.iter().find(|r| r.method == Method::ELl).unwrap();
    assert_eq!(e_ll.result.auroc, 1.0);
}

#[test]
fn analyze_likelihood_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["analyze-likelihood", "--grid", "11"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("x,max_ll_bernoulli,max_ll_cb,max_ll_gaussian")
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0][1], 0.0);
    assert_eq!(rows[10][1], 0.0);
    assert!((rows[5][1] - 0.5f64.ln()).abs() < 1e-12);
    for r in &rows {
        assert_eq!(r[3], 0.0);
        assert!(r[2] >= r[1] + std::f64::consts::LN_2 - 1e-12);
    }
    assert_eq!(
        bae(&["analyze-likelihood", "--grid", "1"], dir.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn similarity_writes_scores_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "train_data=synthetic:mid_gray:60:8\nfamily=mc_dropout\n",
    );
    ok(
        &[
            "train",
            "--config",
            &cfg,
            "--out-dir",
            "ck",
            "--samples",
            "5",
        ],
        dir.path(),
    );
    ok(
        &[
            "similarity",
            "--checkpoint",
            "ck",
            "--data",
            "synthetic:zero_heavy:12:8",
            "--limit",
            "6",
            "--out-dir",
            "sim",
        ],
        dir.path(),
    );
    let text = std::fs::read_to_string(dir.path().join("sim/similarity.csv")).unwrap();
    assert_eq!(text.lines().count(), 7);
    for line in text.lines().skip(1) {
        let ssim: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(ssim <= 1.0);
    }
    let meta = std::fs::read_to_string(dir.path().join("sim/similarity_meta.txt")).unwrap();
    assert!(meta.contains("ssim_window=7") && meta.contains("nmi_bins=32"));
}

#[test]
fn sweep_trains_every_regularisation_strength() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "train_data=synthetic:mid_gray:40:8\nepochs=1\n");
    ok(
        &["train", "--config", &cfg, "--sweep", "--out-dir", "sw"],
        dir.path(),
    );
    for v in ["10", "2", "1", "0.1", "0.01", "0.001"] {
        let (_, kv) = load_sampler(&dir.path().join(format!("sw/lambda_{v}"))).unwrap();
        assert_eq!(kv.get_str("reg_scale"), Some(v));
    }
}

#[test]
fn data_directory_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let data_dir = tempfile::tempdir().unwrap();
    let pixels: Vec<f64> = (0..30 * 16)
        .map(|i| ((i * 37) % 256) as f64 / 255.0)
        .collect();
    let d = Dataset::new(
        "idx",
        Tensor::new(vec![30, 16], pixels).unwrap(),
        4,
        4,
        Split::Train,
    )
    .unwrap();
    let mut bytes = Vec::new();
    write_idx(&mut bytes, &d).unwrap();
    std::fs::write(data_dir.path().join("train-images.idx"), bytes).unwrap();
    let cfg = write_config(dir.path(), "train_data=train-images.idx\n");
    let out = Command::new(env!("CARGO_BIN_EXE_bae"))
        .args(["train", "--config", &cfg, "--out-dir", "ck"])
        .current_dir(dir.path())
        .env("BAE_DATA_DIR", data_dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        bae(&["train", "--config", &cfg, "--out-dir", "ck2"], dir.path())
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    // missing dataset fails before training and leaves no checkpoint
    let cfg = write_config(p, "train_data=missing.idx\n");
    assert_eq!(
        bae(&["train", "--config", &cfg, "--out-dir", "ck"], p)
            .status
            .code(),
        Some(4)
    );
    assert!(!p.join("ck").exists());

    let cfg = write_config(p, "train_data=synthetic:mid_gray:40:8\ncolour=blue\n");
    assert_eq!(bae(&["train", "--config", &cfg], p).status.code(), Some(2));
    let cfg = write_config(
        p,
        "train_data=synthetic:mid_gray:40:8\nlr_min=1e300\nlr_max=1e300\nhidden=8,8\n",
    );
    assert_eq!(
        bae(&["train", "--config", &cfg, "--out-dir", "div"], p)
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        bae(
            &[
                "train",
                "--data",
                "synthetic:mid_gray:40:8",
                "--ensemble",
                "1"
            ],
            p
        )
        .status
        .code(),
        Some(2)
    );

    let cfg = write_config(p, "train_data=synthetic:mid_gray:40:8\n");
    ok(&["train", "--config", &cfg, "--out-dir", "ck"], p);
    let mismatch = bae(
        &[
            "score",
            "--checkpoint",
            "ck",
            "--data",
            "synthetic:mid_gray:5:8",
            "--out",
            "x.csv",
            "--likelihood",
            "gaussian",
        ],
        p,
    );
    assert_eq!(mismatch.status.code(), Some(2));
    let wrong_size = bae(
        &[
            "score",
            "--checkpoint",
            "ck",
            "--data",
            "synthetic:mid_gray:5:6",
            "--out",
            "x.csv",
        ],
        p,
    );
    assert_eq!(wrong_size.status.code(), Some(2));
    assert_eq!(
        bae(
            &[
                "score",
                "--checkpoint",
                "nowhere",
                "--data",
                "synthetic:mid_gray:5:8",
                "--out",
                "x.csv"
            ],
            p
        )
        .status
        .code(),
        Some(4)
    );
    std::fs::write(p.join("bad.csv"), "label,e_ll\n").unwrap();
    assert_eq!(
        bae(&["eval", "--in", "bad.csv", "--ood", "bad.csv"], p)
            .status
            .code(),
        Some(4)
    );
    assert_eq!(bae(&["frobnicate"], p).status.code(), Some(2));
}
