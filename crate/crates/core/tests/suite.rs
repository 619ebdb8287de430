use impsel_core::analysis::{guarantee_pair, GuaranteeKind, GuaranteeParams};
use impsel_core::eval::{load_instances, run_suite, InstanceSource, PredictionMode, TrialConfig};
use impsel_core::graph::{FamilyId, InstanceFamily};
use impsel_core::rational::{ratio, to_f64};
use impsel_core::{MechanismSpec, RationalParam};

fn config(spec: MechanismSpec, source: InstanceSource, trials: u64, seed: u64) -> TrialConfig {
    TrialConfig { spec, trials, seed, source }
}

#[test]
fn fig3_suite_under_two_thirds() {
    let cfg = config(
        MechanismSpec::rho_permutation(RationalParam::from_ratio(2, 3).unwrap()),
        InstanceSource::Figure(InstanceFamily::minimal(FamilyId::Fig3OneSel)),
        50_000,
        8,
    );
    let instances = load_instances(&cfg.source).unwrap();
    let report = run_suite(&cfg, &instances).unwrap();
    assert_eq!(report.rows.len(), instances.len());
    let alpha = report.alpha_hat.expect("the family contains an accurate instance");
    let slack = report.rows.iter().map(|r| r.ci / r.delta_k.max(1) as f64).fold(0.0, f64::max);
    assert!((alpha - 2.0 / 3.0).abs() <= slack, "α̂ = {alpha}");
    assert!((report.beta_hat - 1.0 / 3.0).abs() <= slack, "β̂ = {}", report.beta_hat);
}

#[test]
fn empirical_pair_respects_theory_on_generated_suites() {
    for (k, seed) in [(2usize, 1u64), (3, 2)] {
        let rho = ratio(1, 2);
        let pair = guarantee_pair(GuaranteeKind::RhoPartition, &GuaranteeParams::default().rho(rho).k(k)).unwrap();
        for mode in [PredictionMode::Accurate, PredictionMode::Random] {
            let cfg = config(
                MechanismSpec::rho_partition(k, RationalParam::from_ratio(1, 2).unwrap()),
                InstanceSource::Random { n: 7, edge_prob: 0.35, count: 8, seed, k, mode },
                20_000,
                seed,
            );
            let report = run_suite(&cfg, &load_instances(&cfg.source).unwrap()).unwrap();
            for row in &report.rows {
                let slack = row.ci / row.delta_k.max(1) as f64;
                assert!(row.ratio >= to_f64(&pair.beta) - slack, "{row:?}");
                if row.accurate() {
                    assert!(row.ratio >= to_f64(&pair.alpha) - slack, "{row:?}");
                }
            }
        }
    }
}

#[test]
fn reports_are_byte_identical_for_a_fixed_seed() {
    let cfg = config(
        MechanismSpec::KPartitionBaseline { k: 2 },
        InstanceSource::Plurality { n: 6, count: 5, seed: 3, k: 2, mode: PredictionMode::Random },
        3_000,
        3,
    );
    let render = || {
        let report = run_suite(&cfg, &load_instances(&cfg.source).unwrap()).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        buf
    };
    assert_eq!(render(), render());
}

#[test]
fn empty_suite_is_rejected() {
    let cfg = config(MechanismSpec::UniformPermutation, InstanceSource::Figure(InstanceFamily::minimal(FamilyId::Fig3OneSel)), 10, 0);
    assert!(run_suite(&cfg, &[]).is_err());
}
