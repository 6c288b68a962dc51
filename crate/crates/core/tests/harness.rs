use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use stirguard::harness::{
    compare, read_csv_with_hash, resolve_output_root, write_csv_with_hash, Aggregate, ConditionMetrics, ExperimentConfig, Harness,
    Metric, Overrides, Preset, METRICS_HEADER,
};
use stirguard::sim::Setup;
use stirguard::Error;

const TINY: &str = r#"
seed = 5

[sim]
n_particles = 6

[train]
episodes = 4
steps_per_episode = 15
batch_size = 8
actor_hidden = [8, 8]
critic_hidden = [8, 8]
eval_every = 2
eval_rollouts = 1

[eval]
episodes = 3
steps = 25
"#;

fn tiny() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(TINY, Path::new("tiny.toml"), &Overrides::default()).unwrap()
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn preset_fills_what_the_file_leaves_out() {
    let c = tiny();
    assert_eq!(c.preset, Preset::Desk);
    assert_eq!(c.seed, 5);
    assert_eq!(c.sim.n_particles, 6);
    assert_eq!(c.train.episodes, 4);
    // untouched keys come from the desk preset
    assert_eq!(c.train.gamma, ExperimentConfig::preset(Preset::Desk).train.gamma);
    assert_eq!(c.conditions.len(), 5);

    let paper = ExperimentConfig::from_toml_str("", Path::new("x"), &Overrides { preset: Some(Preset::Paper), seed: Some(9) }).unwrap();
    assert_eq!(paper.sim.n_particles, 40);
    assert_eq!(paper.train.episodes, 1500);
    assert_eq!(paper.eval.steps, 1000);
    assert_eq!(paper.seed, 9);
}

#[test]
fn config_errors_carry_line_numbers() {
    let text = "seed = 1\n[train]\nepisodes = \"many\"\n";
    let err = ExperimentConfig::from_toml_str(text, Path::new("bad.toml"), &Overrides::default()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let msg = err.to_string();
    assert!(msg.contains("bad.toml") && msg.contains("line 3"), "{msg}");

    let unknown = ExperimentConfig::from_toml_str("sed = 1\n", Path::new("u.toml"), &Overrides::default()).unwrap_err();
    assert!(unknown.to_string().contains("sed"), "{unknown}");
}

#[test]
fn condition_suffix_must_match_setup() {
    let text = r#"
[[condition]]
id = "mine-F"
setup = "unrestricted"
skills = ["stir"]
"#;
    let err = ExperimentConfig::from_toml_str(text, Path::new("c.toml"), &Overrides::default()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("mine-F"));

    let custom = r#"
[[condition]]
id = "mine-U"
setup = "unrestricted"
skills = ["stir", "prevent_slide"]
priority = ["slide"]
"#;
    let c = ExperimentConfig::from_toml_str(custom, Path::new("c.toml"), &Overrides::default()).unwrap();
    assert_eq!(c.conditions.len(), 1);
    assert_eq!(c.conditions[0].priority_table().unwrap().order().len(), 1);

    let uncovered = custom.replace("\"stir\", \"prevent_slide\"", "\"stir\"");
    assert!(ExperimentConfig::from_toml_str(&uncovered, Path::new("c.toml"), &Overrides::default()).is_err());
}

#[test]
fn environment_overrides_the_output_root() {
    assert_eq!(resolve_output_root(Path::new("runs"), None), Path::new("runs"));
    assert_eq!(resolve_output_root(Path::new("runs"), Some("/tmp/elsewhere".into())), Path::new("/tmp/elsewhere"));
    assert_eq!(resolve_output_root(Path::new("runs"), Some("".into())), Path::new("runs"));
}

#[test]
fn csv_files_carry_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.csv");
    write_csv_with_hash(&path, "abc123", |out| {
        out.extend_from_slice(b"x,y\n1,2\n");
        Ok(())
    })
    .unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# config_hash: abc123\n"));
    let (hash, mut reader) = read_csv_with_hash(&path).unwrap();
    assert_eq!(hash, "abc123");
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), ["x", "y"]);
}

#[test]
fn train_eval_trace_pipeline_is_reproducible() {
    let run = |root: &Path| {
        let h = Harness::new(tiny(), root).unwrap();
        for s in ["stir", "prevent_spill"] {
            let report = h.train(s).unwrap();
            assert_eq!(report.rows.len(), 4);
        }
        let fixed = h.eval("pi_b-F").unwrap();
        let l2 = h.eval("L2-F").unwrap();
        let trace = h.trace("pi_b-F", 2).unwrap();
        (h.config_hash().to_string(), fixed, l2, trace)
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (hash, fixed, l2, trace) = run(a.path());
    run(b.path());
    assert_eq!(files(a.path()), files(b.path()));

    // curve has one row per episode plus header and hash line
    let curve = std::fs::read_to_string(a.path().join("skills/stir/curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 2 + 4);
    assert!(curve.starts_with(&format!("# config_hash: {hash}")));

    // fixed setups report N/A for slide and overturn
    assert!(fixed.metrics.slide_d.is_none() && fixed.metrics.overturn_theta.is_none());
    let (read_back, read_hash) = ConditionMetrics::read(&a.path().join("pi_b-F/metrics.csv")).unwrap();
    assert_eq!(read_hash, hash);
    assert_eq!(read_back.slide_d, None);
    let metrics_text = std::fs::read_to_string(a.path().join("pi_b-F/metrics.csv")).unwrap();
    assert!(metrics_text.lines().nth(2).unwrap().ends_with("N/A,N/A,N/A,N/A"));

    // aggregates are exactly mean/std of episodes.csv
    let (_, mut reader) = read_csv_with_hash(&a.path().join("L2-F/episodes.csv")).unwrap();
    let stir: Vec<f64> = reader.records().map(|r| r.unwrap()[2].parse().unwrap()).collect();
    assert_eq!(stir.len(), 3);
    let mean = stir.iter().sum::<f64>() / 3.0;
    let std = (stir.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 2.0).sqrt();
    assert!((l2.metrics.stir_reward.mean - mean).abs() < 1e-12);
    assert!((l2.metrics.stir_reward.std - std).abs() < 1e-12);

    // trace: one row per step, constant base skill in the fixed setup
    assert_eq!(trace.rows.len(), 25);
    assert!(trace.rows.iter().all(|r| r.skill == "stir"));
    let h = Harness::new(tiny(), a.path()).unwrap();
    assert!(matches!(h.trace("pi_b-F", 6), Err(Error::ParticleIndex { index: 6, count: 6 })));

    // the condition's library file rebuilds against the shared skills
    let lib = stirguard::skill::Manifest::load(&a.path().join("L2-F/library.toml")).unwrap();
    assert_eq!(lib.build_library(&a.path().join("L2-F")).unwrap().len(), 2);
}

#[test]
fn missing_checkpoint_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let h = Harness::new(tiny(), dir.path()).unwrap();
    let err = h.eval("L4-U").unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("stir.ckpt"), "{err}");
}

fn metrics(id: &str, setup: Setup, stir: f64, spill: f64, slide: Option<f64>, overturn: Option<f64>) -> ConditionMetrics {
    let agg = |mean| Aggregate { mean, std: 0.1 };
    ConditionMetrics {
        condition: id.into(),
        setup,
        episodes: 20,
        steps: 300,
        stir_reward: agg(stir),
        spill_count: agg(spill),
        slide_d: slide.map(agg),
        overturn_theta: overturn.map(agg),
    }
}

fn write_metrics(dir: &Path, m: &ConditionMetrics) {
    write_csv_with_hash(&dir.join(&m.condition).join("metrics.csv"), "h", |out| {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(METRICS_HEADER)?;
        w.write_record(m.record())?;
        w.flush()?;
        Ok(())
    })
    .unwrap();
}

/// Reads the metrics files as plain text and orders every pair.
fn recompute_orderings(dir: &Path) -> Vec<(String, String, String, char)> {
    let mut rows = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path().join("metrics.csv");
        if p.is_file() {
            let text = std::fs::read_to_string(p).unwrap();
            let cells: Vec<String> = text.lines().nth(2).unwrap().split(',').map(String::from).collect();
            rows.push(cells);
        }
    }
    rows.sort();
    let mut out = Vec::new();
    for (metric, col) in [("stir_reward", 4), ("spill_count", 6), ("slide_d", 8), ("overturn_theta", 10)] {
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                let (a, b) = (&rows[i][col], &rows[j][col]);
                if a == "N/A" || b == "N/A" {
                    continue;
                }
                let (x, y): (f64, f64) = (a.parse().unwrap(), b.parse().unwrap());
                let rel = if x < y { '<' } else if x > y { '>' } else { '=' };
                out.push((metric.to_string(), rows[i][0].clone(), rows[j][0].clone(), rel));
            }
        }
    }
    out
}

#[test]
fn compare_matches_an_independent_recomputation() {
    let dir = tempfile::tempdir().unwrap();
    let all = [
        metrics("pi_b-F", Setup::Fixed, 3.0, 2.0, None, None),
        metrics("pi_b-U", Setup::Unrestricted, 2.5, 2.2, Some(0.11), Some(0.05)),
        metrics("L2-F", Setup::Fixed, 2.8, 0.4, None, None),
        metrics("L4-U", Setup::Unrestricted, 2.1, 0.2, Some(0.03), Some(0.05)),
        metrics("pi_c-U", Setup::Unrestricted, 1.0, 0.1, Some(0.02), Some(0.0)),
    ];
    for m in &all {
        write_metrics(dir.path(), m);
    }
    let report = compare(dir.path()).unwrap();
    let got: Vec<(String, String, String, char)> = report
        .pairs
        .iter()
        .map(|p| {
            let rel = match p.ordering {
                std::cmp::Ordering::Less => '<',
                std::cmp::Ordering::Greater => '>',
                std::cmp::Ordering::Equal => '=',
            };
            (p.metric.as_str().to_string(), p.a.clone(), p.b.clone(), rel)
        })
        .collect();
    assert_eq!(got, recompute_orderings(dir.path()));
    // 10 pairs for each always-present column, 3 among the unrestricted conditions
    assert_eq!(got.len(), 10 + 10 + 3 + 3);
    assert!(report.expected.iter().all(|e| e.holds == Some(true)), "{report}");
    assert_eq!(report.mean("L4-U", Metric::SpillCount), Some(0.2));

    let written = std::fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
    assert!(written.starts_with("# config_hash: h\n"));
    assert_eq!(written.lines().count(), 2 + got.len());
}

#[test]
fn compare_two_conditions_reports_the_spill_ordering() {
    let dir = tempfile::tempdir().unwrap();
    write_metrics(dir.path(), &metrics("pi_b-U", Setup::Unrestricted, 2.5, 2.2, Some(0.11), Some(0.05)));
    write_metrics(dir.path(), &metrics("L4-U", Setup::Unrestricted, 2.1, 0.2, Some(0.03), Some(0.05)));
    let report = compare(dir.path()).unwrap();
    let spill = report.pairs.iter().find(|p| p.metric == Metric::SpillCount).unwrap();
    assert_eq!((spill.a.as_str(), spill.b.as_str(), spill.ordering), ("L4-U", "pi_b-U", std::cmp::Ordering::Less));
    // orderings that need absent conditions are not judged
    assert!(report.expected.iter().any(|e| e.holds.is_none()));
}

#[test]
fn compare_single_file_has_no_pairs() {
    let dir = tempfile::tempdir().unwrap();
    write_metrics(dir.path(), &metrics("pi_b-F", Setup::Fixed, 3.0, 2.0, None, None));
    let report = compare(dir.path()).unwrap();
    assert_eq!(report.conditions.len(), 1);
    assert!(report.pairs.is_empty());
}

#[test]
fn cli_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_stirguard");
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("tiny.toml");
    std::fs::write(&config, TINY).unwrap();

    let missing = Command::new(bin)
        .args(["eval", "L4-U", "--config"])
        .arg(&config)
        .env("STIRGUARD_OUTPUT", dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&missing.stderr).contains(".ckpt"));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[eval]\nepisodes = -1\n").unwrap();
    let parse = Command::new(bin).args(["train", "stir", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(parse.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&parse.stderr).contains("line 2"));

    let out = Command::new(bin)
        .args(["train", "stir", "--seed", "2", "--config"])
        .arg(&config)
        .env("STIRGUARD_OUTPUT", dir.path().join("out"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out/skills/stir/stir.ckpt").is_file());
    let snapshot = std::fs::read_to_string(dir.path().join("out/skills/stir/config.snapshot")).unwrap();
    assert!(snapshot.contains("seed = 2"));
}
