use singik::benchmark::{self, generate_targets_safe, BenchSettings, KappaBin, Panel, SolverSuite};
use singik::learning::{self, MlpModel};
use singik::{KinematicChain, SolverKind};

const MODEL: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/models/panda_mlp.bin");

fn suite() -> SolverSuite {
    let model = MlpModel::load(MODEL).expect("bundled model");
    SolverSuite::with_defaults(&[SolverKind::Mlp, SolverKind::MlpDls], Some(model)).unwrap()
}

fn panel_a() -> benchmark::PanelReport {
    let chain = KinematicChain::panda();
    benchmark::run_panel_a(&suite(), &chain, &generate_targets_safe(&chain, 500, 42), &BenchSettings::for_chain(&chain))
        .unwrap()
}

#[test]
fn bundled_model_held_out_error_band() {
    let chain = KinematicChain::panda();
    let model = MlpModel::load(MODEL).unwrap();
    let (_, holdout) = learning::generate_dataset(&chain, 20_000, 42).split(0.1);
    let mm = learning::mean_position_error(&chain, &model, &holdout) * 1e3;
    assert!((3.0..=30.0).contains(&mm), "{mm} mm");
}

#[test]
fn raw_mlp_panel_a() {
    let rep = panel_a();
    let all = rep.group(SolverKind::Mlp, "all").unwrap();
    assert!(all.median_time_ms < 5.0);
    for bin in KappaBin::ALL {
        let g = rep.group(SolverKind::Mlp, &bin.label()).unwrap();
        assert!(g.n == 0 || g.mean_error_mm > 1.0, "{bin}: {:.3} mm", g.mean_error_mm);
    }
    assert!(all.success_rate <= 5.0, "raw MLP success {:.1}%", all.success_rate);
}

#[test]
fn warm_started_dls_panel_a() {
    let rep = panel_a();
    let g = rep.group(SolverKind::MlpDls, "all").unwrap();
    assert!(g.success_rate >= 99.0, "{:.1}%", g.success_rate);
    assert!((2.0..=20.0).contains(&g.median_init_error_mm), "{}", g.median_init_error_mm);
    let far: Vec<_> = rep.rows_for(SolverKind::MlpDls).filter(|r| r.init_error_mm >= 100.0).collect();
    if !far.is_empty() {
        assert!(far.iter().any(|r| r.success));
    }
}

#[test]
fn learned_panel_c() {
    let chain = KinematicChain::panda();
    let reports = benchmark::run_panels(&[Panel::C], &suite(), &chain, &BenchSettings::for_chain(&chain)).unwrap();
    let rep = &reports[0];
    let success = |k, d| rep.group(k, d).unwrap().success_rate;
    let train = success(SolverKind::MlpDls, "training");
    for d in ["near_singular", "workspace_shift"] {
        assert!(success(SolverKind::MlpDls, d) >= train - 10.0, "{d}: {:.1} vs {train:.1}", success(SolverKind::MlpDls, d));
    }
    let raw: Vec<f64> = ["training", "near_singular", "workspace_shift"].iter().map(|d| success(SolverKind::Mlp, d)).collect();
    assert!(raw.iter().all(|&s| s <= 5.0), "raw MLP success {raw:?}");
}
