use std::path::Path;

use brownian_bench::config::{HLadder, Scale};
use brownian_bench::experiments::{run_finite_time_1d, run_lj_rdf, run_longtime_1d, run_ou_verify};
use brownian_bench::output::read_results_csv;
use brownian_bench::{emit_results, ConfigFile};
use brownian_core::SchemeId;

fn shipped(name: &str) -> ConfigFile {
    ConfigFile::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)).unwrap()
}

#[test]
fn shipped_configs_are_the_builtin_presets() {
    assert_eq!(shipped("desk.toml"), ConfigFile::builtin(Scale::Desk));
    assert_eq!(shipped("paper.toml"), ConfigFile::builtin(Scale::Paper));
}

#[test]
fn scales_differ_only_in_size_parameters() {
    let (d, p) = (ConfigFile::builtin(Scale::Desk), ConfigFile::builtin(Scale::Paper));
    let (dl, pl) = (d.longtime_1d.unwrap(), p.longtime_1d.unwrap());
    assert_eq!((dl.schemes, dl.beta, dl.bins), (pl.schemes, pl.beta, pl.bins));
    let (df, pf) = (d.finite_time_1d.unwrap(), p.finite_time_1d.unwrap());
    assert_eq!(df.h_ladder, pf.h_ladder);
    assert_eq!((df.baseline_h, df.snapshot_interval), (pf.baseline_h, pf.snapshot_interval));
    let (dj, pj) = (d.lj_rdf.unwrap(), p.lj_rdf.unwrap());
    assert_eq!((dj.beta, dj.sigma), (pj.beta, pj.sigma));
}

#[test]
fn emitted_outputs_are_reproducible() {
    let mut cfg = ConfigFile::builtin(Scale::Desk).longtime_1d.unwrap();
    cfg.total_time = 500.0;
    cfg.realizations = 2;
    cfg.equilibration_steps = 10;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        emit_results(&run_longtime_1d(&cfg).unwrap(), d.path()).unwrap();
    }
    for name in ["longtime-1d.csv", "longtime-1d.fits.csv", "longtime-1d.config.json", "longtime-1d-histograms/reference.csv"] {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let rows = read_results_csv(&dirs[0].path().join("longtime-1d.csv")).unwrap();
    assert_eq!(rows.len(), 3 * 8 * 2);
    for r in &rows {
        let scheme: SchemeId = r.scheme.parse().unwrap();
        let h = r.h.unwrap();
        let steps = 10 + (500.0 / h + 1e-9).floor() as u64;
        assert_eq!(r.force_evals, 2 * steps * scheme.force_evals_per_step());
    }
}

#[test]
fn lj_sidecar_records_sigma_from_beta() {
    let mut cfg = ConfigFile::builtin(Scale::Desk).lj_rdf.unwrap();
    cfg.total_time = 0.5;
    cfg.equilibration_steps = 10;
    cfg.realizations = 1;
    cfg.lm_realizations = 1;
    cfg.baseline_realizations = 1;
    cfg.baseline_h = 0.0016;
    cfg.h_ladder = HLadder::List(vec![0.004, 0.008, 0.01]);
    let out = run_lj_rdf(&cfg).unwrap();
    assert_eq!(out.resolved_config["sigma"].as_f64().unwrap(), 0.2f64.sqrt());
    assert_eq!(out.resolved_config["beta"].as_f64().unwrap(), 10.0);
    let base = out.rows_for("baseline", "baseline_samples").next().unwrap();
    assert_eq!(base.value, (0.5f64 / 0.0016).floor());
}

#[test]
fn closed_form_variance_error_orders() {
    let out = run_ou_verify(&ConfigFile::builtin(Scale::Desk).ou_verify.unwrap()).unwrap();
    let slope = |s: &str| out.fit(s, "formula_variance_error", None).unwrap().slope;
    // the closed-form EM error bends away from a pure power law over this ladder
    assert!((slope("em") - 1.0).abs() < 0.1, "{}", slope("em"));
    assert!((slope("heun") - 2.0).abs() < 0.1, "{}", slope("heun"));
}

#[test]
fn finite_time_rows_cover_every_snapshot() {
    let mut cfg = ConfigFile::builtin(Scale::Desk).finite_time_1d.unwrap();
    cfg.trajectories = 5000;
    let out = run_finite_time_1d(&cfg).unwrap();
    assert_eq!(out.rows.len(), 3 * 4 * 10);
    let r = out.rows_for("heun", "l2").find(|r| r.h == Some(0.48) && r.time == Some(0.96 * 9.0)).unwrap();
    assert_eq!(r.force_evals, 18 * 2 * 5000);
    assert!(out.fit("em", "l2", Some(0.96)).is_some());
    let err = run_finite_time_1d(&brownian_bench::config::FiniteTimeConfig {
        h_ladder: HLadder::List(vec![0.1, 0.2, 0.3]),
        ..cfg
    });
    assert!(err.is_err());
}
