//! Runner artifacts: CSV layouts, summaries, manifests and config hashing.

use hypbm::config::{ExperimentConfig, ExperimentKind, ModelKind};
use hypbm::runner;

fn small(kind: ModelKind, dim: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.model.kind = kind;
    c.model.dim = dim;
    c.simulation.t_end = 50.0;
    c.simulation.n_paths = 1000;
    c.simulation.master_seed = 17;
    c.experiments.mixing_paths = 10_000;
    c.experiments.mixing_t_max = 4;
    c.experiments.flow_paths = 20;
    c.experiments.flow_time = 50.0;
    c
}

fn header(csv: &str) -> &str {
    csv.lines().next().unwrap()
}

#[test]
fn every_experiment_writes_its_csv_layout() {
    let mut c = small(ModelKind::H2, 2);
    c.experiments.list = ExperimentKind::ALL.to_vec();
    let tmp = tempfile::tempdir().unwrap();
    c.output.dir = tmp.path().to_path_buf();
    let out = runner::run(&c).unwrap();
    let expected = [
        ("drift", "path_id,r_half,r_T"),
        ("entropy", "path_id,neg_log_green_half,neg_log_green_T"),
        ("clt-distance", "path_id,r_T,normalized"),
        ("clt-green", "path_id,log_green_T,normalized"),
        ("busemann", "path_id,busemann_T"),
        ("contraction", "quantity,value,std_error"),
        ("mixing", "t,tv,noise_floor"),
        ("harmonic-measure", "path_id,x_T,confident"),
        ("equidistribution", "path_id,boundary_x,cusp_average,confident"),
        ("kernel-checks", "check,value,lo,hi,pass"),
        ("identities", "identity,lhs,rhs,band,pass"),
    ];
    assert_eq!(out.experiments.len(), expected.len());
    for (name, cols) in expected {
        let csv = std::fs::read_to_string(tmp.path().join(format!("{name}.csv"))).unwrap();
        assert_eq!(header(&csv), cols, "{name}");
        let width = cols.split(',').count();
        for line in csv.lines().skip(1).filter(|l| !l.starts_with('#')) {
            assert_eq!(line.split(',').count(), width, "{name}: {line}");
        }
        assert!(csv.lines().last().unwrap().starts_with("# summary: "), "{name}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config_hash"], out.config_hash);
    for e in summary["experiments"].as_array().unwrap() {
        assert_eq!(e["summary"]["config_hash"], out.config_hash);
        assert!(e["summary"]["pass"].is_boolean());
    }
}

#[test]
fn manifest_alone_reproduces_the_run() {
    let mut c = small(ModelKind::H3, 3);
    c.simulation.t_end = 10.0;
    c.simulation.n_paths = 300;
    c.experiments.list = vec![ExperimentKind::Drift, ExperimentKind::Busemann, ExperimentKind::Contraction];
    let tmp = tempfile::tempdir().unwrap();
    c.output.dir = tmp.path().join("first");
    let first = runner::run(&c).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(c.output.dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 17);
    assert_eq!(manifest["config_hash"], first.config_hash);
    let mut replay: ExperimentConfig = serde_json::from_value(manifest["config"].clone()).unwrap();
    replay.output.dir = tmp.path().join("second");
    replay.simulation.workers = 2;
    let second = runner::run(&replay).unwrap();
    assert_eq!(first.config_hash, second.config_hash);
    for name in ["drift.csv", "busemann.csv", "contraction.csv", "summary.json"] {
        let a = std::fs::read(c.output.dir.join(name)).unwrap();
        let b = std::fs::read(replay.output.dir.join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn config_hash_tracks_results_not_locations() {
    let base = ExperimentConfig::default();
    let mut moved = base.clone();
    moved.output.dir = "elsewhere".into();
    moved.simulation.workers = 7;
    assert_eq!(base.hash(), moved.hash());
    let mut reseeded = base.clone();
    reseeded.simulation.master_seed = 2;
    assert_ne!(base.hash(), reseeded.hash());
    let mut shorter = base.clone();
    shorter.simulation.t_end = 5.0;
    assert_ne!(base.hash(), shorter.hash());
}

#[test]
fn toml_round_trip() {
    let mut c = small(ModelKind::H3, 3);
    c.experiments.list = vec![ExperimentKind::Drift, ExperimentKind::Mixing];
    let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
    assert_eq!(back, c);
}

#[test]
fn invalid_configs_map_to_exit_code_two() {
    let cases = [
        "[model]\nkind = \"constant\"\ndim = 1\n",
        "[model]\na = 0.0\n",
        "[simulation]\nn_paths = 0\n",
        "[experiments]\nlist = [\"nope\"]\n",
        "[model]\nkind = \"rotsym\"\n",
    ];
    for text in cases {
        let err = ExperimentConfig::from_toml(text).and_then(|c| runner::execute(&c).map(|_| ()));
        let e = err.expect_err(text);
        assert_eq!(runner::exit_code_for(&e), runner::EXIT_INVALID_CONFIG, "{text}: {e}");
    }
}
