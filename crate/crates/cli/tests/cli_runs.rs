use std::path::Path;
use std::process::{Command, Output};

use cartolab_cli::{run, validate_config, write_synthetic_corpus};

fn cartolab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cartolab"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn corpus(n: usize) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_synthetic_corpus(dir.path(), n, 300, 11).unwrap();
    dir
}

fn set_key(cfg: &Path, section: &str, line: &str) {
    let text = std::fs::read_to_string(cfg).unwrap();
    let header = format!("[{section}]\n");
    let text = if text.contains(&header) {
        text.replace(&header, &format!("{header}{line}\n"))
    } else {
        format!("{text}\n{header}{line}\n")
    };
    std::fs::write(cfg, text).unwrap();
}

#[test]
fn unknown_config_key_exits_one_and_names_it() {
    let dir = corpus(3);
    set_key(&dir.path().join("config.toml"), "cluster", "tsne = true");
    let out = cartolab(dir.path(), &["ingest"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tsne"));
}

#[test]
fn usage_error_exits_one() {
    let dir = corpus(1);
    let out = cartolab(dir.path(), &["rupture", "--strata", "decade"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_prior_step_is_fatal() {
    let dir = corpus(3);
    let out = cartolab(dir.path(), &["rupture"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mapels"));
}

#[test]
fn unreadable_image_is_skipped_with_exit_two() {
    let dir = corpus(4);
    std::fs::remove_file(dir.path().join("images/m002.png")).unwrap();
    let out = cartolab(dir.path(), &["mapels"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("m002"), "{stderr}");
    assert!(dir.path().join("out/mapels.json").exists());
}

#[test]
fn mosaic_grid_smaller_than_cluster_count_exits_one() {
    let dir = corpus(6);
    for step in ["mapels", "cluster"] {
        assert_eq!(cartolab(dir.path(), &[step]).status.code(), Some(0));
    }
    let cfg = dir.path().join("config.toml");
    let text = std::fs::read_to_string(&cfg).unwrap().replace("rows = 3\ncols = 3", "rows = 2\ncols = 2");
    std::fs::write(&cfg, text).unwrap();
    let out = cartolab(dir.path(), &["mosaic"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("2x2"), "{stderr}");
    assert!(!dir.path().join("out/mosaic.png").exists());
}

#[test]
fn seed_flag_changes_only_seeded_outputs() {
    let dir = corpus(6);
    let run_with = |seed: &str, out: &str| {
        for step in ["mapels", "cluster"] {
            let o = cartolab(dir.path(), &[step, "--seed", seed, "--out", out]);
            assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        }
        std::fs::read(dir.path().join(out).join("cluster.json")).unwrap()
    };
    let a = run_with("1", "a");
    let b = run_with("1", "b");
    let c = run_with("2", "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn report_aggregates_existing_outputs() {
    let dir = corpus(5);
    let cfg = validate_config(dir.path().join("config.toml")).unwrap();
    assert!(run("report", &cfg).is_err());
    run("ingest", &cfg).unwrap();
    run("report", &cfg).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(cfg.out_dir.join("report.json")).unwrap()).unwrap();
    let res = &v["result"];
    assert_eq!(res["analyses"]["ingest"]["records"], 5);
    assert!(res["missing"].as_array().unwrap().iter().any(|m| m == "rupture"));
    assert_eq!(v["provenance"]["analysis"], "report");
    assert_eq!(v["provenance"]["digest"].as_str().unwrap().len(), 64);
}

#[test]
fn rupture_by_country_gives_pairwise_matrix() {
    let dir = corpus(8);
    let mut cfg = validate_config(dir.path().join("config.toml")).unwrap();
    cfg.strata = cartolab::model::StrataVar::Country;
    for step in ["mapels", "cluster", "rupture"] {
        run(step, &cfg).unwrap();
    }
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(cfg.out_dir.join("rupture.json")).unwrap()).unwrap();
    let text = v["result"].to_string();
    assert!(text.contains("FRA") && text.contains("GBR"), "{text}");
    assert!(cfg.out_dir.join("rupture_table.png").exists());
}
