//! End-to-end runs of the `ebm-bench` binary on tiny configs.

mod common;

use std::fs;
use std::path::{Path, PathBuf};

use common::{bench, outputs, run_all, TINY};

fn header(root: &Path, file: &str) -> String {
    fs::read_to_string(root.join(file)).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn runs_are_bit_identical_and_headers_stable() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_all(a.path());
    run_all(b.path());
    let (fa, fb) = (outputs(a.path()), outputs(b.path()));
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (name, bytes) in &fa {
        assert!(bytes == &fb[name], "{} differs between runs", name.display());
    }

    let golden = [
        ("pretrain/pretrain.csv", "seed,step,loss"),
        ("pretrain/pretrain-eval.csv", "seed,score"),
        ("online/metrics.csv", "seed,step,episode,score,loss,occupancy"),
        ("online/episodes.csv", "seed,episode,score"),
        ("eval/eval.csv", "seed,episode,score"),
        ("explore/explore.csv", "seed,policy,step,occupancy"),
        ("obstacle-gen/obstacle.csv", "seed,model,obstacle,score"),
        ("ablation-correlated/ablation.csv", "seed,model,mode,score"),
        ("diversity/diversity.csv", "seed,horizon,spread"),
        ("online/timing.csv", "seed,seconds"),
    ];
    for (file, expect) in golden {
        assert_eq!(header(a.path(), file), expect, "{file}");
    }
    for file in ["online/ebm-seed0.ckpt", "heatmap/energy-seed0.svg", "heatmap/visits-seed1.csv"] {
        assert!(a.path().join(file).exists(), "{file} missing");
    }
}

#[test]
fn seed_flag_overrides_the_seed_list() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    fs::write(&cfg, TINY).unwrap();
    let out = dir.path().join("out");
    let o = bench(&["diversity", "--seed", "7", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("diversity.csv"));
    let text = fs::read_to_string(out.join("diversity.csv")).unwrap();
    assert!(text.lines().skip(1).all(|l| l.starts_with("7,")), "{text}");
}

#[test]
fn contract_violations_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    };
    let out = dir.path().join("out");
    let cases: Vec<(&str, PathBuf, &str)> = vec![
        ("online", dir.path().join("missing.toml"), "cannot read"),
        ("online", write("bad.toml", "seeds = ["), "toml"),
        ("online", write("unknown.toml", "bogus = 1"), "bogus"),
        ("online", write("start.toml", "[env]\nkind = \"maze\"\nstart = [0.0, 0.0]"), "admissible"),
        ("heatmap", write("kind.toml", "kind = \"online\""), "online"),
        ("eval", write("nockpt.toml", ""), "checkpoint"),
        ("obstacle-gen", write("maze.toml", "[env]\nkind = \"maze\"\nstart = [-0.75, -0.75]"), "particle"),
        ("heatmap", write("reacher.toml", "[env]\nkind = \"reacher\"\nstart = [0.0, 0.0, 0.0, 0.0]\ngoal = [0.0, 0.0, 0.0, 0.0]\n[heatmap]\nsource = \"pretrain\"\n[pretrain]\ndataset_size = 10\nsteps = 1"), "2-D"),
    ];
    for (sub, cfg, needle) in cases {
        let o = bench(&[sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(!o.status.success(), "{sub} with {} succeeded", cfg.display());
        assert!(err.starts_with("ebm-bench: "), "{err}");
        assert!(err.to_lowercase().contains(&needle.to_lowercase()), "{} -> {err}", cfg.display());
    }
    assert!(!bench(&["frobnicate"]).status.success());
}
