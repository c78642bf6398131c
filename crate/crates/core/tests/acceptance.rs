//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use singik::benchmark::{self, generate_targets_safe, BenchSettings, KappaBin, PanelReport, QueryRow, SolverSuite};
use singik::learning::{self, batch_loss_gradient, generate_dataset, Loss, MlpModel, Normalization, TrainConfig};
use singik::riemannian::{self, spd_exp, spd_geodesic, spd_log, spd_sqrt};
use singik::{metrics, KinematicChain, SolverConfig, SolverKind, SpdMatrix};

const MODEL: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/models/panda_mlp.bin");
const SEED: u64 = 42;
const N_SAFE: usize = 500;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn load_model() -> Option<MlpModel> {
    Path::new(MODEL).exists().then(|| MlpModel::load(MODEL).ok()).flatten()
}

fn suite(kinds: &[SolverKind], model: Option<MlpModel>) -> SolverSuite {
    SolverSuite::with_defaults(kinds, model).unwrap()
}

fn panel_a(kinds: &[SolverKind], model: Option<MlpModel>) -> (PanelReport, f64) {
    let chain = KinematicChain::panda();
    let targets = generate_targets_safe(&chain, N_SAFE, SEED);
    let start = Instant::now();
    let rep = benchmark::run_panel_a(&suite(kinds, model), &chain, &targets, &BenchSettings::for_chain(&chain)).unwrap();
    (rep, start.elapsed().as_secs_f64())
}

fn criterion_1(classical: &PanelReport, seconds: f64) -> Verdict {
    let mut pass = seconds < 60.0;
    let mut parts = Vec::new();
    for kind in SolverKind::CLASSICAL {
        let s = classical.group(kind, "all").unwrap().success_rate;
        pass &= s >= 99.0;
        parts.push(format!("{kind} {s:.1}%"));
    }
    verdict(pass, format!("{}; runtime {seconds:.1} s", parts.join(", ")))
}

fn criterion_2(model: Option<&MlpModel>, learned: Option<&PanelReport>) -> Verdict {
    let (Some(model), Some(rep)) = (model, learned) else {
        return verdict(false, format!("model file not found at {MODEL}"));
    };
    let chain = KinematicChain::panda();
    let (_, holdout) = generate_dataset(&chain, 20_000, SEED).split(0.1);
    let held_mm = learning::mean_position_error(&chain, model, &holdout) * 1e3;
    let success = rep.group(SolverKind::Mlp, "all").unwrap().success_rate;
    let mut min_bin = f64::INFINITY;
    let mut bins = Vec::new();
    for bin in KappaBin::ALL {
        let g = rep.group(SolverKind::Mlp, &bin.label()).unwrap();
        if g.n > 0 {
            min_bin = min_bin.min(g.mean_error_mm);
            bins.push(format!("{bin} {:.2} mm", g.mean_error_mm));
        }
    }
    let pass = success <= 5.0 && (3.0..=30.0).contains(&held_mm) && min_bin >= 1.0;
    verdict(pass, format!("success {success:.1}%, held-out error {held_mm:.2} mm, bins [{}]", bins.join(", ")))
}

fn criterion_3(learned: Option<&PanelReport>) -> Verdict {
    let Some(rep) = learned else {
        return verdict(false, format!("model file not found at {MODEL}"));
    };
    let warm = rep.group(SolverKind::MlpDls, "all").unwrap();
    let dls = rep.group(SolverKind::Dls, "all").unwrap();
    let pass = warm.success_rate >= 99.0 && warm.mean_iters <= 0.5 * dls.mean_iters;
    verdict(
        pass,
        format!(
            "mlp+dls success {:.1}%, mean iterations {:.2} vs dls {:.2}",
            warm.success_rate, warm.mean_iters, dls.mean_iters
        ),
    )
}

fn criterion_4(classical: &PanelReport) -> Verdict {
    let med = |k| classical.group(k, "all").unwrap().median_iters;
    let (h, n, d) = (med(SolverKind::Halley), med(SolverKind::Newton), med(SolverKind::Dls));
    let pass = h < n && n < d && h <= 6.0 && (6.0..=15.0).contains(&n);
    verdict(pass, format!("median iterations halley {h}, newton {n}, dls {d}"))
}

fn random_spd(rng: &mut ChaCha8Rng) -> SpdMatrix {
    let g = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
    let shift = rng.random_range(0.01..1.0);
    SpdMatrix::new(&g * g.transpose() + DMatrix::identity(3, 3) * shift).unwrap()
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst_det: f64 = 0.0;
    let mut dominance_violations = 0usize;
    for _ in 0..10_000 {
        let (a, b) = (random_spd(&mut rng), random_spd(&mut rng));
        let (da, db) = (a.matrix().determinant(), b.matrix().determinant());
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            let g = spd_geodesic(&a, &b, t).unwrap();
            let expect = da.powf(1.0 - t) * db.powf(t);
            worst_det = worst_det.max(((g.matrix().determinant() - expect) / expect).abs());
            let e = riemannian::euclidean_interp(a.matrix(), b.matrix(), t);
            if e.determinant().sqrt() < g.sqrt_det() * (1.0 - 1e-12) {
                dominance_violations += 1;
            }
        }
    }

    let profile = |name: &str| {
        let chain = KinematicChain::by_name(name).unwrap();
        let ends = riemannian::bundled_endpoints(name).unwrap();
        let p = riemannian::interp_profile(&chain, &ends.well_conditioned, &ends.near_singular, 100).unwrap();
        (chain, ends, p)
    };
    let (_, _, planar) = profile("planar3r");
    let ratio = planar.max_overestimation();

    let (panda, ends, p) = profile("panda");
    let (well, near) = riemannian::endpoint_targets("panda").unwrap();
    let dev_well = riemannian::endpoint_deviation(&panda, &ends.well_conditioned, well).unwrap();
    let dev_near = riemannian::endpoint_deviation(&panda, &ends.near_singular, near).unwrap();
    let describe = |q| {
        let j = panda.task_jacobian(q).unwrap();
        format!("kappa {:.1} w {:.5}", metrics::condition_number(&j).unwrap(), metrics::manipulability(&j).unwrap())
    };
    let monotone = p.geodesic_strictly_decreasing();

    let pass = worst_det <= 1e-9
        && dominance_violations == 0
        && ratio >= 2.0
        && monotone
        && dev_well <= 0.1
        && dev_near <= 0.1;
    verdict(
        pass,
        format!(
            "(a) worst det rel {worst_det:.1e}; (b) violations {dominance_violations}; (c) planar ratio {ratio:.2}; \
             (d) monotone {monotone}, endpoints [{}] dev {:.1}%, [{}] dev {:.1}%",
            describe(&ends.well_conditioned),
            100.0 * dev_well,
            describe(&ends.near_singular),
            100.0 * dev_near
        ),
    )
}

fn criterion_6() -> Verdict {
    let chain = KinematicChain::panda();
    let targets = generate_targets_safe(&chain, N_SAFE, SEED);
    let high = targets.iter().filter(|t| t.bin.0 >= 3).count();
    let kmax = targets.iter().map(|t| t.kappa).fold(0.0, f64::max);
    let share = 100.0 * high as f64 / N_SAFE as f64;
    let pass = share < 1.0 && (30.0..=120.0).contains(&kmax);
    verdict(pass, format!("high-bin share {share:.1}%, kappa max {kmax:.1}"))
}

fn criterion_7() -> Verdict {
    let chain = KinematicChain::panda();
    let settings = BenchSettings::for_chain(&chain);
    let rep = benchmark::run_panel_b(&suite(&SolverKind::CLASSICAL, None), &chain, &settings).unwrap();
    let mut pass = settings.waypoints == 300;
    let mut parts = Vec::new();
    let mut min_w = f64::INFINITY;
    for kind in SolverKind::CLASSICAL {
        let s = rep.sweep(kind).unwrap();
        pass &= s.max_amplification <= 1.1;
        min_w = s.min_w_reference;
        parts.push(format!("{kind} {:.2}", s.max_amplification));
    }
    pass &= min_w >= 0.019 / 2.0 && min_w <= 0.019 * 2.0;
    verdict(pass, format!("max amplification [{}], min sweep w {min_w:.4}", parts.join(", ")))
}

fn fd_jacobian_error(chain: &KinematicChain, q: &DVector<f64>) -> f64 {
    let j = chain.jacobian_translational(q).unwrap();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for c in 0..chain.dof() {
        let mut qp = q.clone();
        qp[c] += h;
        let mut qm = q.clone();
        qm[c] -= h;
        let col = (chain.position(&qp).unwrap() - chain.position(&qm).unwrap()) / (2.0 * h);
        for r in 0..3 {
            worst = worst.max((col[r] - j[(r, c)]).abs());
        }
    }
    worst
}

fn backprop_error() -> f64 {
    let chain = KinematicChain::panda();
    let set = generate_dataset(&chain, 8, 5);
    let input = Normalization::z_score(&set.positions.iter().map(|p| DVector::from_column_slice(p.as_slice())).collect::<Vec<_>>());
    let output = Normalization::from_limits(chain.q_min(), chain.q_max());
    let model = MlpModel::init(&[3, 6, 5, 7], input, output, 9).unwrap();
    let loss = |m: &MlpModel| batch_loss_gradient(m, &chain, &set.positions, &set.configs, Loss::Position).0;
    let (_, grad) = batch_loss_gradient(&model, &chain, &set.positions, &set.configs, Loss::Position);
    let rebuild = |w: Vec<DMatrix<f64>>, b: Vec<DVector<f64>>| {
        MlpModel::new(w, b, model.activation(), model.input_normalization().clone(), model.output_normalization().clone())
            .unwrap()
    };
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-8);
    for l in 0..model.weights().len() {
        for idx in 0..model.weights()[l].len() {
            let shifted = |d: f64| {
                let mut w = model.weights().to_vec();
                w[l].as_mut_slice()[idx] += d;
                loss(&rebuild(w, model.biases().to_vec()))
            };
            worst = worst.max(rel((shifted(h) - shifted(-h)) / (2.0 * h), grad.weights[l].as_slice()[idx]));
        }
        for idx in 0..model.biases()[l].len() {
            let shifted = |d: f64| {
                let mut b = model.biases().to_vec();
                b[l][idx] += d;
                loss(&rebuild(model.weights().to_vec(), b))
            };
            worst = worst.max(rel((shifted(h) - shifted(-h)) / (2.0 * h), grad.biases[l][idx]));
        }
    }
    worst
}

fn non_timing(rows: &[QueryRow]) -> Vec<QueryRow> {
    rows.iter()
        .cloned()
        .map(|mut r| {
            r.time_ms = 0.0;
            r
        })
        .collect()
}

fn reproducible() -> bool {
    let chain = KinematicChain::panda();
    let settings = BenchSettings { n: 60, n_ood: 20, waypoints: 40, ..BenchSettings::for_chain(&chain) };
    let kinds = [SolverKind::Dls, SolverKind::Halley, SolverKind::Sdls, SolverKind::Qp];
    let panels = [benchmark::Panel::A, benchmark::Panel::B, benchmark::Panel::C];
    let run = || benchmark::run_panels(&panels, &suite(&kinds, None), &chain, &settings).unwrap();
    let (a, b) = (run(), run());
    let panels_equal = a.iter().zip(&b).all(|(x, y)| non_timing(&x.rows) == non_timing(&y.rows));

    let train = || {
        let set = generate_dataset(&chain, 200, SEED);
        let cfg = TrainConfig { hidden: vec![16, 16], epochs: 3, batch_size: 32, ..TrainConfig::default() };
        learning::mlp_train(&chain, &set, &cfg).unwrap().model.to_bytes()
    };
    let ends = riemannian::bundled_endpoints("panda").unwrap();
    let profile = || riemannian::interp_profile(&chain, &ends.well_conditioned, &ends.near_singular, 50).unwrap().to_csv();
    panels_equal && train() == train() && profile() == profile()
}

fn criterion_8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut jac: f64 = 0.0;
    for chain in [KinematicChain::panda(), KinematicChain::planar_3r()] {
        for _ in 0..200 {
            let q = DVector::from_fn(chain.dof(), |i, _| rng.random_range(chain.q_min()[i]..chain.q_max()[i]));
            jac = jac.max(fd_jacobian_error(&chain, &q));
        }
    }

    let bp = backprop_error();

    let chain = KinematicChain::panda();
    let cfg = SolverConfig { record_trace: true, ..SolverConfig::for_solver(SolverKind::Dls) };
    let mut logged = 0usize;
    let mut bound_violations = 0usize;
    for t in generate_targets_safe(&chain, 200, SEED) {
        let res = singik::solvers::solve_dls_fixed(&chain, &t.position, &chain.neutral(), &cfg).unwrap();
        for row in res.trace.unwrap() {
            logged += 1;
            if row.step_norm > row.error / (2.0 * cfg.damping) * (1.0 + 1e-12) {
                bound_violations += 1;
            }
        }
    }

    let mut spd: f64 = 0.0;
    for _ in 0..1000 {
        let a = random_spd(&mut rng);
        let scale = a.matrix().amax();
        let back = spd_exp(&spd_log(&a)).unwrap();
        spd = spd.max((back.matrix() - a.matrix()).amax() / scale);
        let r = spd_sqrt(&a);
        spd = spd.max((r.matrix() * r.matrix() - a.matrix()).amax() / scale);
    }

    let repro = reproducible();
    let pass = jac <= 1e-6 && bp <= 1e-4 && bound_violations == 0 && spd <= 1e-9 && repro;
    verdict(
        pass,
        format!(
            "jacobian fd {jac:.1e}, backprop fd rel {bp:.1e}, dls bound violations {bound_violations}/{logged}, \
             spd round-trip {spd:.1e}, bitwise reproducible {repro}"
        ),
    )
}

#[test]
fn acceptance() {
    let (classical, seconds) = panel_a(&SolverKind::CLASSICAL, None);
    let model = load_model();
    let learned = model
        .clone()
        .map(|m| panel_a(&[SolverKind::Dls, SolverKind::Mlp, SolverKind::MlpDls], Some(m)).0);

    let results = [
        criterion_1(&classical, seconds),
        criterion_2(model.as_ref(), learned.as_ref()),
        criterion_3(learned.as_ref()),
        criterion_4(&classical),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
    ];
    let mut failed = Vec::new();
    for (i, v) in results.iter().enumerate() {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {}: {tag}: {}", i + 1, v.detail);
        if !v.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
