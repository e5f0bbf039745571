use fedmia_core::attacks::{run_attack, AttackTag, BlackBox, ShadowContext};
use fedmia_core::data::{gen_synthetic, Dataset, SyntheticSpec};
use fedmia_core::federation::{EnsembleView, RoundConfig, Strategy};
use fedmia_core::harness::{
    cross_validate, make_splits, model_seed, o_predict, o_train, split_seed, CvConfig, ModelHandle, AGGREGATE_SPLIT,
    SERVER_SUFFIX,
};
use fedmia_core::metrics::{accuracy, auc};
use fedmia_core::nn::{argmax, Architecture};

fn dataset() -> Dataset {
    let spec = SyntheticSpec { num_classes: 3, input_dim: 4, samples_per_class: 10, cluster_spread: 0.8 };
    gen_synthetic(&spec, 21).unwrap()
}

fn cv(strategy: Strategy, attacks: Vec<AttackTag>) -> CvConfig {
    let mut round = RoundConfig::new(strategy, 2, 2, 2);
    round.batch_size = 4;
    CvConfig {
        round,
        arch: Architecture::new(4, vec![8], 6, 3),
        num_splits: 4,
        member_fraction: 0.5,
        attacks,
        target_fpr: 0.1,
        seed: 17,
        workers: 0,
    }
}

#[test]
fn reruns_and_worker_counts_agree() {
    let data = dataset();
    let mut cfg = cv(Strategy::FedAvg, AttackTag::ALL.to_vec());
    let a = cross_validate(&cfg, &data).unwrap();
    let b = cross_validate(&cfg, &data).unwrap();
    cfg.workers = 1;
    let c = cross_validate(&cfg, &data).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn row_layout() {
    let data = dataset();
    let report = cross_validate(&cv(Strategy::FedAvg, vec![AttackTag::Entropy, AttackTag::Lira]), &data).unwrap();
    assert_eq!(report.rows.len(), 2 * 2 * 5);
    assert_eq!(report.curves.len(), 4);
    let splits: Vec<i64> = report.rows[..5].iter().map(|r| r.split_index).collect();
    assert_eq!(splits, vec![0, 1, 2, 3, AGGREGATE_SPLIT]);
    assert!(report.rows[..10].iter().all(|r| r.strategy == "fedavg"));
    assert!(report.rows[10..].iter().all(|r| r.strategy == format!("fedavg{SERVER_SUFFIX}")));
    assert_eq!(report.rows[5].attack, AttackTag::Lira);

    let local = cross_validate(&cv(Strategy::Local, vec![AttackTag::Mentr]), &data).unwrap();
    assert_eq!(local.rows.len(), 5);
    assert!(local.rows.iter().all(|r| r.comm_bytes == 0));

    let agg = report.aggregate("fedavg", AttackTag::Entropy).unwrap();
    let mean_auc = report.rows[..4].iter().map(|r| r.auc).sum::<f64>() / 4.0;
    assert!((agg.auc - mean_auc).abs() < 1e-12);
}

fn handles(cfg: &CvConfig, data: &Dataset) -> (Vec<fedmia_core::harness::SplitPlan>, Vec<ModelHandle>) {
    let plans =
        make_splits(data.len(), cfg.num_splits, cfg.member_fraction, cfg.round.num_clients, split_seed(cfg.seed))
            .unwrap();
    let handles = plans
        .iter()
        .map(|p| o_train(p, &cfg.round, &cfg.arch, data, model_seed(cfg.seed, p.split_index)).unwrap())
        .collect();
    (plans, handles)
}

#[test]
fn accuracy_is_mean_over_clients() {
    let data = dataset();
    let cfg = cv(Strategy::Local, vec![AttackTag::Entropy]);
    let report = cross_validate(&cfg, &data).unwrap();
    let (plans, handles) = handles(&cfg, &data);
    for (plan, handle) in plans.iter().zip(&handles) {
        let samples = data.select_features(&plan.nonmember_ids);
        let truth = data.select_labels(&plan.nonmember_ids);
        let per_client: Vec<f64> = o_predict(handle, samples.view())
            .unwrap()
            .iter()
            .map(|probs| {
                let predicted: Vec<usize> = probs.rows().into_iter().map(|r| argmax(r.iter().copied())).collect();
                accuracy(&predicted, &truth).unwrap()
            })
            .collect();
        assert_eq!(per_client.len(), 2);
        let expected = (per_client[0] + per_client[1]) / 2.0;
        assert!((report.rows[plan.split_index].accuracy - expected).abs() < 1e-12);
    }
}

#[test]
fn harness_scores_equal_black_box_queries() {
    let data = dataset();
    let cfg = cv(Strategy::FedMft, vec![AttackTag::Mentr, AttackTag::Lira]);
    let report = cross_validate(&cfg, &data).unwrap();
    let (plans, handles) = handles(&cfg, &data);

    for (a, tag) in cfg.attacks.iter().enumerate() {
        for (i, plan) in plans.iter().enumerate() {
            let mut aucs = Vec::new();
            for k in 0..2 {
                let views: Vec<_> = handles.iter().map(|h| h.view(EnsembleView::Client(k))).collect();
                let models: Vec<&dyn BlackBox> = views.iter().map(|v| v as &dyn BlackBox).collect();
                let ctx = ShadowContext { target_index: i, models: models.clone(), plans: &plans };
                let scores =
                    run_attack(*tag, models[i], &data, &plan.member_ids, &plan.nonmember_ids, Some(&ctx)).unwrap();
                aucs.push(auc(&scores).unwrap());
            }
            let row = &report.rows[a * 5 + i];
            assert_eq!((row.attack, row.split_index), (*tag, i as i64));
            assert!((row.auc - (aucs[0] + aucs[1]) / 2.0).abs() < 1e-12, "{tag} split {i}");
        }
    }
}

#[test]
fn invalid_requests_fail() {
    let data = dataset();
    let mut cfg = cv(Strategy::FedAvg, vec![AttackTag::Lira]);
    cfg.num_splits = 2;
    assert!(cross_validate(&cfg, &data).is_err());
    let mut cfg = cv(Strategy::FedAvg, vec![]);
    assert!(cross_validate(&cfg, &data).is_err());
    cfg.attacks = vec![AttackTag::Entropy];
    cfg.member_fraction = 1.0;
    assert!(cross_validate(&cfg, &data).is_err());
}
