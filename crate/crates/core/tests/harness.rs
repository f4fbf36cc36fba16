use std::fs;
use std::path::Path;
use std::process::Command;

use proptest::prelude::*;

use psdlim::harness::config::*;
use psdlim::harness::io::{read_field, read_table};
use psdlim::harness::*;
use psdlim::lattice::{Direction, LaserPulse};

fn small(kind: InitialKind, particles: usize) -> ExperimentConfig {
    ExperimentConfig {
        name: "small".into(),
        assumptions: vec!["test grid".into()],
        grid: GridConfig { subdivision: 2, extent: 6, oversample: 4 },
        initial: InitialConfig { kind, sigma_r: 1.0, sigma_p: 0.8 },
        sequence: SequenceConfig::Pulses {
            pulses: vec![
                LaserPulse::new(Direction::Backward, 2.0, -2.0, 0.0, 0.0, 0.8).unwrap(),
                LaserPulse::new(Direction::Forward, 1.5, 1.0, 0.3, 0.5, 1.4).unwrap(),
            ],
        },
        integrator: IntegratorConfig { dt: 1e-3 },
        sampling: SamplingConfig { times: vec![0.0, 0.5, 1.0, 1.5] },
        semiclassical: SemiclassicalConfig { particles, seed: 5, cell_r: 0.25, cell_p: 0.25 },
        smoothing: SmoothingConfig { sigma_r: 0.5, sigma_p: 1.0 },
        output: OutputConfig::default(),
    }
}

fn written(cfg: &ExperimentConfig, threads: usize, dir: &Path) -> Vec<std::path::PathBuf> {
    let bundle = run_with_threads(cfg, threads).unwrap();
    write_bundle(&bundle, dir).unwrap()
}

#[test]
fn presets_match_their_descriptions() {
    let fig2 = preset("fig2").unwrap();
    let seq = fig2.pulses().unwrap();
    let dirs: Vec<Direction> = seq.pulses().iter().map(|p| p.direction).collect();
    assert_eq!(dirs, [Direction::Backward, Direction::Forward]);
    assert_eq!((fig2.semiclassical.cell_r, fig2.semiclassical.cell_p), (0.2, 0.1));
    assert_eq!(fig2.semiclassical.particles, 1_000_000);
    assert!(!fig2.assumptions.is_empty());
    assert_eq!(preset("fig3").unwrap().initial.kind, InitialKind::Delocalized);
    for name in PRESETS {
        preset(name).unwrap().validate().unwrap();
    }
    assert!(matches!(preset("fig4"), Err(psdlim::Error::UnknownPreset(_))));
}

#[test]
fn unknown_keys_and_bad_values_are_config_errors() {
    let mut text = small(InitialKind::Gaussian, 0).to_toml();
    text.push_str("\n[extra]\nx = 1\n");
    assert!(matches!(ExperimentConfig::from_toml(&text), Err(psdlim::Error::Config(_))));
    let mut cfg = small(InitialKind::Gaussian, 0);
    cfg.sampling.times = vec![1.0, 0.5];
    assert!(matches!(cfg.validate(), Err(psdlim::Error::Config(_))));
    cfg = small(InitialKind::Gaussian, 0);
    cfg.grid.oversample = 3;
    assert!(cfg.validate().is_err());
}

fn arb_pulse() -> impl Strategy<Value = LaserPulse> {
    (any::<bool>(), 0.0f64..5.0, -5.0f64..5.0, 0.0f64..6.3, 0.0f64..3.0, 0.01f64..3.0).prop_map(
        |(fwd, rabi, det, phase, start, len)| {
            let d = if fwd { Direction::Forward } else { Direction::Backward };
            LaserPulse::new(d, rabi, det, phase, start, start + len).unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn config_round_trips(
        s in 1usize..6,
        n in 2usize..10,
        sigma_r in 0.1f64..3.0,
        sigma_p in 0.1f64..3.0,
        pulses in prop::collection::vec(arb_pulse(), 0..4),
        pair in any::<bool>(),
        dt in 1e-5f64..1e-2,
        times in prop::collection::btree_set(0u32..10_000, 1..20),
        particles in 0usize..10_000_000,
        seed in any::<u64>(),
        dir in "[a-z/]{0,12}",
    ) {
        let mut cfg = small(InitialKind::Gaussian, particles);
        cfg.grid.subdivision = 2 * s;
        cfg.grid.extent = n;
        cfg.initial.sigma_r = sigma_r;
        cfg.initial.sigma_p = sigma_p;
        cfg.sequence = if pair {
            SequenceConfig::PiPair { rabi: 1.0 + sigma_r, detuning: -sigma_p }
        } else {
            SequenceConfig::Pulses { pulses }
        };
        cfg.integrator.dt = dt;
        cfg.sampling.times = times.into_iter().map(|t| t as f64 * 1e-3 * std::f64::consts::PI).collect();
        cfg.semiclassical.seed = seed;
        cfg.output.dir = dir.clone();
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        prop_assert_eq!(&back, &cfg);
        let mut moved = cfg.clone();
        moved.output.dir = format!("{dir}/elsewhere");
        prop_assert_eq!(moved.hash(), cfg.hash());
    }
}

#[test]
fn empty_sequence_keeps_every_gain_at_one() {
    let mut cfg = small(InitialKind::Delocalized, 0);
    cfg.sequence = SequenceConfig::Pulses { pulses: Vec::new() };
    let bundle = run(&cfg).unwrap();
    let Verdict::Hold(v) = &bundle.verdict else { panic!("{:?}", bundle.verdict) };
    let first = bundle.reports[0];
    for r in &bundle.reports {
        let g = r.gains(&first);
        for x in [g.d_vn, g.d_sh, g.d_vn_a, g.d_sh_a, g.d_sh_g, g.max_rho_a, g.max_q, g.d_wehrl] {
            assert!((x - 1.0).abs() < 1e-9, "{g:?}");
        }
    }
    assert!((v.max_gains.max_rho_a - 1.0).abs() < 1e-9);
    assert_eq!(bundle.exit_code(), 0);
}

#[test]
fn bundles_are_byte_identical_across_worker_counts() {
    let cfg = small(InitialKind::Gaussian, 4000);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let fa = written(&cfg, 1, a.path());
    let fb = written(&cfg, 3, b.path());
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.file_name(), y.file_name());
        assert!(fs::read(x).unwrap() == fs::read(y).unwrap(), "{} differs", x.display());
    }
}

#[test]
fn every_file_declares_the_config_hash() {
    let cfg = small(InitialKind::Gaussian, 1000);
    let dir = tempfile::tempdir().unwrap();
    let files = written(&cfg, 1, dir.path());
    let needle = format!("config_hash: {}", cfg.hash());
    for f in &files {
        let text = fs::read_to_string(f).unwrap();
        assert!(text.lines().take(8).any(|l| l.contains(&needle)), "{}", f.display());
    }
    let field = read_field(&dir.path().join("husimi_final.field")).unwrap();
    assert_eq!(field.config_hash, cfg.hash());
    assert_eq!(field.time, 1.5);
    let table = read_table(&dir.path().join("report.csv")).unwrap();
    assert_eq!(table.header[0], "time");
    assert_eq!(table.rows.len(), 4);
    let written_cfg = ExperimentConfig::load(&dir.path().join("config.toml")).unwrap();
    assert_eq!(written_cfg.hash(), cfg.hash());
}

#[test]
fn written_fields_round_trip() {
    let cfg = small(InitialKind::Gaussian, 0);
    let bundle = run(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_bundle(&bundle, dir.path()).unwrap();
    for nf in &bundle.fields {
        let back = read_field(&dir.path().join(format!("{}.field", nf.label))).unwrap();
        assert_eq!(back.label, nf.label);
        assert!(back.field.same_grid(&nf.field));
        assert_eq!(back.field.values(), nf.field.values());
    }
}

#[test]
fn compare_behaves_as_a_regression_check() {
    let cfg = small(InitialKind::Gaussian, 2000);
    let root = tempfile::tempdir().unwrap();
    let dir = |n: &str| root.path().join(n);
    written(&cfg, 1, &dir("base"));

    let same = compare(&dir("base"), &dir("base"), Tolerances::default()).unwrap();
    assert!(!same.diffs.is_empty());
    assert_eq!(same.max_over(|_| true), 0.0);

    let mut half = cfg.clone();
    half.integrator.dt /= 2.0;
    written(&half, 1, &dir("half"));
    let quantum = |d: &compare::Diff| d.file.ends_with(".field") && !d.file.starts_with("histogram");
    let r = compare_scoped(&dir("base"), &dir("half"), Tolerances::default(), Scope::Quantum).unwrap();
    assert!(r.max_over(quantum) < 1e-6, "{}", r.max_over(quantum));

    let mut reseeded = cfg.clone();
    reseeded.semiclassical.seed += 1;
    written(&reseeded, 1, &dir("seed"));
    let r = compare_scoped(&dir("base"), &dir("seed"), Tolerances::default(), Scope::Quantum).unwrap();
    assert!(r.diffs.iter().all(|d| !d.file.starts_with("histogram")));
    assert_eq!(r.max_over(|_| true), 0.0);

    let mut wider = cfg.clone();
    wider.grid.extent = 7;
    written(&wider, 1, &dir("wide"));
    assert!(matches!(
        compare(&dir("base"), &dir("wide"), Tolerances::default()),
        Err(psdlim::Error::IncompatibleBundles(_))
    ));
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_psdlim")).args(args).output().unwrap()
}

#[test]
fn command_line_exit_codes() {
    let root = tempfile::tempdir().unwrap();
    let list = cli(&["preset", "--list"]);
    assert!(list.status.success());
    assert_eq!(String::from_utf8(list.stdout).unwrap(), "fig2\nfig3\n");

    let fig3 = cli(&["preset", "fig3"]);
    let text = String::from_utf8(fig3.stdout).unwrap();
    assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), preset("fig3").unwrap());
    assert_eq!(cli(&["preset", "nope"]).status.code(), Some(4));

    let good = root.path().join("good.toml");
    fs::write(&good, small(InitialKind::Delocalized, 500).to_toml()).unwrap();
    let out_a = root.path().join("a");
    let out_b = root.path().join("b");
    let a = cli(&["run", "--config", good.to_str().unwrap(), "--out", out_a.to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert!(String::from_utf8(a.stdout).unwrap().contains("all bounds hold"));
    let b = cli(&[
        "run", "--config", good.to_str().unwrap(), "--out", out_b.to_str().unwrap(), "--threads", "2",
    ]);
    assert_eq!(b.status.code(), Some(0));
    assert_eq!(cli(&["compare", out_a.to_str().unwrap(), out_b.to_str().unwrap()]).status.code(), Some(0));
    let other = root.path().join("c");
    cli(&["run", "--config", good.to_str().unwrap(), "--out", other.to_str().unwrap(), "--seed", "9"]);
    let (a_dir, c_dir) = (out_a.to_str().unwrap(), other.to_str().unwrap());
    assert_eq!(cli(&["compare", a_dir, c_dir, "--quantum-only"]).status.code(), Some(0));
    let fine = root.path().join("fine");
    cli(&["run", "--config", good.to_str().unwrap(), "--out", fine.to_str().unwrap(), "--dt", "5e-4"]);
    let strict = ["--quantum-only", "--field-tol", "0", "--report-tol", "0"];
    let diff = cli(&[&["compare", a_dir, fine.to_str().unwrap()][..], &strict[..]].concat());
    assert_eq!(diff.status.code(), Some(1));
    assert!(String::from_utf8(diff.stdout).unwrap().contains("FAIL"));

    let bad = root.path().join("bad.toml");
    fs::write(&bad, "name = \"x\"\n").unwrap();
    assert_eq!(cli(&["run", "--config", bad.to_str().unwrap()]).status.code(), Some(4));
    assert_eq!(cli(&["run", "--preset", "nope"]).status.code(), Some(4));

    // a momentum cloud wider than the lattice is caught before integration
    let mut wide = small(InitialKind::Delocalized, 0);
    wide.initial.sigma_p = 5.0;
    let wide_path = root.path().join("wide.toml");
    fs::write(&wide_path, wide.to_toml()).unwrap();
    let out_w = root.path().join("w");
    assert_eq!(
        cli(&["run", "--config", wide_path.to_str().unwrap(), "--out", out_w.to_str().unwrap()]).status.code(),
        Some(3)
    );
}
