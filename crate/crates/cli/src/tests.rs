//! End-to-end checks of the command line, run in-process.

use std::fs;
use std::path::{Path, PathBuf};

use knlab_core::experiments::Ladder;
use proptest::prelude::*;

use crate::app::main_with;
use crate::config::{ExperimentSpec, RunConfig};
use crate::run::FAILED_MARKER;

struct Outcome {
    code: u8,
    stdout: String,
    stderr: String,
}

fn knlab(args: &[&str], env_out: Option<&Path>) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("knlab").chain(args.iter().copied());
    let code = main_with(argv, env_out.map(Path::to_path_buf), &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn config_file(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn list_is_sorted_and_complete() {
    let o = knlab(&["list"], None);
    assert_eq!(o.code, 0);
    let names: Vec<&str> = o.stdout.lines().filter(|l| !l.starts_with(' ')).collect();
    assert!(names.contains(&"verify-theorem1"));
    assert!(names.contains(&"kn-maximal"));
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert!(o.stdout.contains("    eps_grid = [1.0, 0.5, 0.25, 0.125]"));
}

#[test]
fn delta_table_subcommand() {
    let o = knlab(&["delta-table"], None);
    assert_eq!(o.code, 0);
    let mut lines = o.stdout.lines();
    assert_eq!(lines.next(), Some("p,delta"));
    let want = [
        (2.0, 0.0),
        (3.0, 1.0 / 12.0),
        (4.0, 0.125),
        (6.0, 1.0 / 6.0),
        (8.0, 0.25),
        (f64::INFINITY, 0.5),
    ];
    for (line, (p, d)) in lines.zip(want) {
        let (a, b) = line.split_once(',').unwrap();
        assert_eq!(a.parse::<f64>().unwrap(), p);
        assert!((b.parse::<f64>().unwrap() - d).abs() <= 1e-15, "{line}");
    }
}

#[test]
fn delta_table_run_writes_ledger_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = config_file(dir.path(), "[[experiments]]\nname = \"delta-table\"\n");
    let o = knlab(&["--out", out.to_str().unwrap(), "run", cfg.to_str().unwrap()], None);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(
        files(&out),
        vec!["00-delta-table.csv", "00-delta-table.json", "manifest.json"]
    );
    let csv = fs::read_to_string(out.join("00-delta-table.csv")).unwrap();
    assert!(csv.starts_with("p,delta\n"), "{csv}");
    assert_eq!(csv.lines().count(), 7);
    let verdict: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("00-delta-table.json")).unwrap()).unwrap();
    assert_eq!(verdict["verdict"], "PASS");
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "pass");
    assert_eq!(manifest["tool"], "knlab");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn empty_config_writes_only_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = config_file(dir.path(), "seed = 3\n");
    let o = knlab(&["--out", out.to_str().unwrap(), "run", cfg.to_str().unwrap()], None);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(files(&out), vec!["manifest.json"]);
}

#[test]
fn invalid_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cases = [
        (
            "[[experiments]]\nname = \"delta-table\"\n\n[[experiments]]\nname = \"kn-maximal\"\neps_grid = [0.5]\n",
            "line 4, experiments[1].eps_grid",
        ),
        (
            "[[experiments]]\nname = \"no-such-thing\"\n",
            "line 1, experiments[0].name",
        ),
        ("colour = 1\n", "colour"),
        (
            "[[experiments]]\nname = \"verify-corollary2\"\np = 6.0\n",
            "line 1, experiments[0].p",
        ),
        ("[settings]\nresolution_scale = -1.0\n", "settings.resolution_scale"),
    ];
    for (text, needle) in cases {
        let cfg = config_file(dir.path(), text);
        let o = knlab(&["--out", out.to_str().unwrap(), "run", cfg.to_str().unwrap()], None);
        assert_eq!(o.code, 2, "{text}: {}", o.stderr);
        assert!(o.stderr.contains(needle), "{text}: {}", o.stderr);
    }
    assert!(!out.exists());
    assert_eq!(knlab(&["run"], None).code, 2);
    assert_eq!(knlab(&["kn", "spiral", "4"], None).code, 2);
}

#[test]
fn knlab_out_overrides_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let flag = dir.path().join("flag");
    let env = dir.path().join("env");
    let cfg = config_file(
        dir.path(),
        &format!("out = {:?}\n", dir.path().join("file").to_str().unwrap()),
    );
    let o = knlab(
        &["--out", flag.to_str().unwrap(), "run", cfg.to_str().unwrap()],
        Some(&env),
    );
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(env.join("manifest.json").exists());
    assert!(!flag.exists());
    let o = knlab(&["--out", flag.to_str().unwrap(), "run", cfg.to_str().unwrap()], None);
    assert_eq!(o.code, 0);
    assert!(flag.join("manifest.json").exists());
    let o = knlab(&["run", cfg.to_str().unwrap()], None);
    assert_eq!(o.code, 0);
    assert!(dir.path().join("file").join("manifest.json").exists());
}

#[test]
fn numerical_failure_leaves_a_marker() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = config_file(
        dir.path(),
        "[settings.sampler]\nlevels = 1\n\n[[experiments]]\nname = \"delta-table\"\n\n[[experiments]]\nname = \"kn-maximal\"\nk_range = [4]\n",
    );
    let o = knlab(&["--out", out.to_str().unwrap(), "run", cfg.to_str().unwrap()], None);
    assert_eq!(o.code, 3, "{}", o.stderr);
    assert!(o.stderr.contains("kn-maximal"), "{}", o.stderr);
    assert_eq!(
        files(&out),
        vec![
            "00-delta-table.csv",
            "00-delta-table.json",
            FAILED_MARKER,
            "manifest.json"
        ]
    );
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "failed");
    assert!(manifest["error"].as_str().unwrap().contains("experiments[1]"));

    // A clean rerun into the same directory clears the marker.
    let cfg = config_file(dir.path(), "[[experiments]]\nname = \"delta-table\"\n");
    assert_eq!(
        knlab(&["--out", out.to_str().unwrap(), "run", cfg.to_str().unwrap()], None).code,
        0
    );
    assert!(!out.join(FAILED_MARKER).exists());
}

#[test]
fn failing_verdict_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    // Neither family saturates the torus classification expected here.
    let cfg = config_file(
        dir.path(),
        "families = [{ family = \"torus_wave\" }]\n\n[[experiments]]\nname = \"verify-corollary2\"\nk_range = [4, 5, 6, 7, 8]\nfamilies = [{ family = \"highest_weight\" }, { family = \"zonal\" }]\n",
    );
    let o = knlab(&["--out", out.to_str().unwrap(), "run", cfg.to_str().unwrap()], None);
    assert_eq!(o.code, 1, "{}", o.stderr);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "fail");
}

#[test]
fn kn_subcommand_on_the_torus() {
    let o = knlab(&["--jobs", "1", "kn", "torus-wave", "16"], None);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
    let lambda = v["lambda"].as_f64().unwrap();
    let want = 2.0 * lambda.powf(-0.5) / (4.0 * std::f64::consts::PI.powi(2));
    assert!((v["value"].as_f64().unwrap() - want).abs() < 1e-9);
    assert_eq!(v["family"], "torus_wave");
}

#[test]
fn hash_tracks_meaningful_fields() {
    let base = RunConfig::parse("[[experiments]]\nname = \"lp-scaling\"\n").unwrap();
    let h = base.hash();
    // Spelling out a default does not change the run.
    let explicit = RunConfig::parse("[[experiments]]\nname = \"lp-scaling\"\nps = [3.0, 4.0, 6.0]\n").unwrap();
    assert_eq!(explicit.hash(), h);
    let mut c = base.clone();
    c.out = Some("elsewhere".into());
    assert_eq!(c.hash(), h);

    let mut changes: Vec<RunConfig> = Vec::new();
    let mut c = base.clone();
    c.experiments[0].ps = Some(vec![3.0, 4.0]);
    changes.push(c);
    let mut c = base.clone();
    c.seed = 9;
    changes.push(c);
    let mut c = base.clone();
    c.settings.resolution_scale = 1.5;
    changes.push(c);
    let mut c = base.clone();
    c.settings.sampler.levels = 3;
    changes.push(c);
    let mut c = base.clone();
    c.families = vec![Ladder::Zonal];
    changes.push(c);
    let mut c = base.clone();
    c.experiments.push(ExperimentSpec::named("delta-table"));
    changes.push(c);
    for c in &changes {
        assert_ne!(c.hash(), h, "{c:?}");
    }
}

fn ladder() -> impl Strategy<Value = Ladder> {
    prop_oneof![
        Just(Ladder::Zonal),
        Just(Ladder::HighestWeight),
        Just(Ladder::TorusWave),
        any::<u64>().prop_map(|seed| Ladder::RandomHarmonic { seed }),
    ]
}

fn spec() -> impl Strategy<Value = ExperimentSpec> {
    let names = crate::registry::REGISTRY.iter().map(|e| e.name).collect::<Vec<_>>();
    (
        prop::sample::select(names),
        prop::option::of(2.0f64..10.0),
        prop::option::of(prop::collection::vec(1usize..300, 5..9)),
        prop::option::of(prop::collection::vec(0.01f64..1.0, 1..5)),
        prop::option::of(prop::collection::vec(ladder(), 1..4)),
        prop::option::of(1usize..100),
    )
        .prop_map(|(name, p, k_range, eps_grid, families, count)| ExperimentSpec {
            name: name.to_string(),
            p,
            k_range,
            eps_grid,
            families,
            count,
            ..Default::default()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trips(
        seed in any::<u64>(),
        families in prop::collection::vec(ladder(), 1..4),
        scale in 0.1f64..4.0,
        levels in 2usize..8,
        experiments in prop::collection::vec(spec(), 0..5),
    ) {
        let mut c = RunConfig { seed, families, experiments, ..Default::default() };
        c.settings.resolution_scale = scale;
        c.settings.sampler.levels = levels;
        let text = c.to_toml();
        let back: RunConfig = toml::from_str(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.hash(), c.hash());
    }
}

#[test]
fn shipped_suite_is_valid() {
    let c = RunConfig::parse(include_str!("../../../configs/default-suite.toml")).unwrap();
    let names: Vec<&str> = c.experiments.iter().map(|e| e.name.as_str()).collect();
    for info in crate::registry::REGISTRY {
        if info.name != "kn-maximal" {
            assert!(names.contains(&info.name), "{}", info.name);
        }
    }
}
