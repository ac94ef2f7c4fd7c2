use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_risx");

const SMALL: &str = r#"
trials = 3

[sweep]
axis = "d_u"
values = [40.0, 80.0]

[model]
correlation_samples = 200

[relay]
split_grid = 11
"#;

fn risx(args: &[&str], dir: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("RISX_OUT_DIR")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("small.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn same_seed_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    for out in ["a", "b"] {
        let o = risx(
            &[
                "relay-compare",
                "--config",
                &cfg,
                "--seed",
                "7",
                "--out",
                out,
            ],
            tmp.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["relay-compare.csv", "relay-compare_plot.csv"] {
        let a = fs::read(tmp.path().join("a").join(name)).unwrap();
        let b = fs::read(tmp.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let other = risx(
        &[
            "relay-compare",
            "--config",
            &cfg,
            "--seed",
            "8",
            "--out",
            "c",
        ],
        tmp.path(),
    );
    assert!(other.status.success());
    assert_ne!(
        fs::read(tmp.path().join("a/relay-compare.csv")).unwrap(),
        fs::read(tmp.path().join("c/relay-compare.csv")).unwrap()
    );
}

#[test]
fn csv_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let o = risx(
        &[
            "--scenario",
            "relay-compare",
            "--config",
            &cfg,
            "--trials",
            "2",
            "--out",
            "r",
        ],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(tmp.path().join("r/relay-compare.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("scenario,sweep_name,sweep_value,trial,seed,metric,value")
    );
    // 2 grid points x 2 trials x 5 metrics
    assert_eq!(lines.count(), 20);
    let plot = fs::read_to_string(tmp.path().join("r/relay-compare_plot.csv")).unwrap();
    assert_eq!(
        plot.lines().next(),
        Some("scenario,sweep_name,sweep_value,metric,count,mean,std_error")
    );
    assert_eq!(plot.lines().count(), 1 + 2 * 5);
    let meta: toml::Table =
        toml::from_str(&fs::read_to_string(tmp.path().join("r/relay-compare_meta.toml")).unwrap())
            .unwrap();
    assert_eq!(meta["metadata"]["config.trials"].as_str(), Some("2"));
}

#[test]
fn environment_sets_the_default_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let target = tmp.path().join("from-env");
    let o = Command::new(BIN)
        .args(["relay-compare", "--config", &cfg, "--trials", "1"])
        .current_dir(tmp.path())
        .env("RISX_OUT_DIR", &target)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(target.join("relay-compare.csv").exists());
    assert!(!tmp.path().join("results").exists());
}

#[test]
fn failing_trials_give_a_nonzero_exit() {
    let tmp = tempfile::tempdir().unwrap();
    // a full-duplex relay with one antenna cannot be built
    let cfg = write_config(tmp.path(), &format!("{SMALL}antennas = 1\n"));
    let o = risx(
        &["relay-compare", "--config", &cfg, "--out", "f"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trials failed"));
    // the partial results are still written
    assert!(tmp.path().join("f/relay-compare_meta.toml").exists());
}

#[test]
fn bad_input_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let conflict = risx(&["single-user", "--scenario", "multi-ris"], tmp.path());
    assert_eq!(conflict.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&conflict.stderr).contains("conflicts"));

    let none = risx(&[], tmp.path());
    assert!(!none.status.success());

    let cfg = write_config(tmp.path(), "trials = 0\n");
    let zero = risx(&["multi-ris", "--config", &cfg], tmp.path());
    assert_eq!(zero.status.code(), Some(1));

    let cfg = write_config(tmp.path(), "[system]\nbogus = 1\n");
    let unknown = risx(&["multi-ris", "--config", &cfg], tmp.path());
    assert_eq!(unknown.status.code(), Some(1));
}

#[test]
fn dry_run_prints_the_resolved_config() {
    let tmp = tempfile::tempdir().unwrap();
    let o = risx(
        &["optimize-phases", "--seed", "42", "--dry-run"],
        tmp.path(),
    );
    assert!(o.status.success());
    let cfg: toml::Table = toml::from_str(&String::from_utf8_lossy(&o.stdout)).unwrap();
    assert_eq!(cfg["scenario"].as_str(), Some("optimize-phases"));
    assert_eq!(cfg["seed"].as_integer(), Some(42));
    assert!(!tmp.path().join("results").exists());
}
