use fedmia_core::data::{gen_synthetic, Dataset, SyntheticSpec};
use fedmia_core::federation::{
    aggregate_weights, ledger_bytes, local_update, run_strategy, ClientState, Direction, EnsembleView, LedgerInputs,
    Objective, PayloadKind, RoundConfig, Strategy,
};
use fedmia_core::nn::{init_network, Architecture, ModelParams, WIRE_BYTES_PER_SCALAR};
use fedmia_core::seed::{derive_seed, stream};

fn dataset() -> Dataset {
    let spec = SyntheticSpec { num_classes: 3, input_dim: 5, samples_per_class: 12, cluster_spread: 0.6 };
    gen_synthetic(&spec, 11).unwrap()
}

fn arch() -> Architecture {
    Architecture::new(5, vec![6], 4, 3)
}

/// Uneven shards over the first 23 rows.
fn shards() -> Vec<Vec<usize>> {
    vec![(0..8).collect(), (8..16).map(|i| i * 2 % 36).collect(), (30..36).chain(16..17).collect()]
}

fn config(strategy: Strategy) -> RoundConfig {
    let mut cfg = RoundConfig::new(strategy, 3, 3, 2);
    cfg.batch_size = 4;
    cfg
}

fn bits(params: &ModelParams) -> Vec<u64> {
    params.to_flat().iter().map(|v| v.to_bits()).collect()
}

#[test]
fn ledger_matches_closed_form_for_every_strategy() {
    let data = dataset();
    let arch = arch();
    let shards = shards();
    let model_bytes = init_network(&arch, 0).unwrap().serialized_bytes();
    let inputs = LedgerInputs {
        rounds: 3,
        model_bytes,
        sample_bytes: 5 * WIRE_BYTES_PER_SCALAR,
        num_classes: 3,
        embed_dim: 4,
        shard_sizes: shards.iter().map(|s| s.len() as u64).collect(),
    };
    for strategy in Strategy::ALL {
        let run = run_strategy(&config(strategy), &arch, &data, &shards, 5).unwrap();
        let ledger = &run.ledger;
        let from_entries: u64 = ledger.entries.iter().map(|e| e.bytes).sum();
        let up: u64 = ledger.entries.iter().filter(|e| e.direction == Direction::Uplink).map(|e| e.bytes).sum();
        assert_eq!(from_entries, ledger.total(), "{strategy}");
        assert_eq!(up, ledger.uplink_bytes, "{strategy}");
        assert_eq!(ledger.total(), ledger_bytes(strategy, &inputs), "{strategy}");
    }
}

#[test]
fn hand_counted_ledgers() {
    let data = dataset();
    let shards = shards();
    let arch = arch();
    // 5*6+6 + 6*4+4 + 4*3+3 = 79 scalars
    let model = 79 * 4;
    let table = 3 * 4 * 4;
    let samples: u64 = 23;
    let expect = [
        (Strategy::Global, samples * 5 * 4),
        (Strategy::Local, 0),
        (Strategy::FedAvg, 3 * 2 * 3 * model),
        (Strategy::FedFt, 3 * 2 * 3 * table),
        (Strategy::FedFft, 3 * (2 * 3 * model + samples * 4 * 4 + 3 * table)),
        (Strategy::FedMft, 3 * (2 * 3 * model + 2 * 3 * table)),
    ];
    for (strategy, bytes) in expect {
        let run = run_strategy(&config(strategy), &arch, &data, &shards, 1).unwrap();
        assert_eq!(run.ledger.total(), bytes, "{strategy}");
    }
}

#[test]
fn fedprox_without_proximal_term_is_fedavg() {
    let data = dataset();
    let shards = shards();
    let mut prox = config(Strategy::FedProx);
    prox.mu = 0.0;
    let a = run_strategy(&config(Strategy::FedAvg), &arch(), &data, &shards, 3).unwrap();
    let b = run_strategy(&prox, &arch(), &data, &shards, 3).unwrap();
    for (x, y) in a.client_models.iter().zip(&b.client_models) {
        assert_eq!(bits(x), bits(y));
    }
    assert_eq!(bits(a.server_model.as_ref().unwrap()), bits(b.server_model.as_ref().unwrap()));
    assert_eq!(a.ledger, b.ledger);

    let c = run_strategy(&config(Strategy::FedProx), &arch(), &data, &shards, 3).unwrap();
    assert_ne!(bits(a.server_model.as_ref().unwrap()), bits(c.server_model.as_ref().unwrap()));
}

#[test]
fn fedavg_matches_sequential_oracle_in_any_client_order() {
    let data = dataset();
    let shards = shards();
    let cfg = config(Strategy::FedAvg);
    let seed = 9;
    let run = run_strategy(&cfg, &arch(), &data, &shards, seed).unwrap();

    for order in [[0, 1, 2], [2, 1, 0], [1, 2, 0]] {
        let mut global = init_network(&arch(), derive_seed(seed, &[stream::INIT])).unwrap();
        let mut last = vec![None; 3];
        for round in 0..cfg.rounds {
            let mut updated: Vec<Option<ModelParams>> = vec![None; 3];
            for &k in &order {
                let client = ClientState::new(k, shards[k].clone(), global.clone());
                updated[k] = Some(local_update(&client, &global, &cfg, Objective::Plain, &data, round, seed).unwrap());
            }
            let models: Vec<ModelParams> = updated.into_iter().map(Option::unwrap).collect();
            global = aggregate_weights(&models).unwrap();
            last = models.into_iter().map(Some).collect();
        }
        assert_eq!(bits(&global), bits(run.server_model.as_ref().unwrap()));
        for (mine, theirs) in last.iter().zip(&run.client_models) {
            assert_eq!(bits(mine.as_ref().unwrap()), bits(theirs));
        }
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let data = dataset();
    let shards = shards();
    for strategy in [Strategy::FedAvg, Strategy::FedMft, Strategy::FedFft, Strategy::FedProxFt] {
        let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let wide = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = serial.install(|| run_strategy(&config(strategy), &arch(), &data, &shards, 2).unwrap());
        let b = wide.install(|| run_strategy(&config(strategy), &arch(), &data, &shards, 2).unwrap());
        for (x, y) in a.client_models.iter().zip(&b.client_models) {
            assert_eq!(bits(x), bits(y));
        }
        assert_eq!(a.global_table, b.global_table);
        assert_eq!(a.ledger, b.ledger);
    }
}

#[test]
fn ensemble_shape_by_strategy() {
    let data = dataset();
    let shards = shards();
    for strategy in Strategy::ALL {
        let run = run_strategy(&config(strategy), &arch(), &data, &shards, 4).unwrap();
        let expected_clients = if strategy == Strategy::Global { 1 } else { 3 };
        assert_eq!(run.client_models.len(), expected_clients, "{strategy}");
        assert_eq!(run.server_model.is_some(), strategy.shares_weights(), "{strategy}");
        assert_eq!(run.global_table.is_some(), strategy.shares_features(), "{strategy}");
        if strategy.shares_features() && !strategy.shares_weights() {
            assert_eq!(run.ledger.bytes_of(PayloadKind::Model), 0, "{strategy}");
        }

        let mut views: Vec<EnsembleView> = (0..expected_clients).map(EnsembleView::Client).collect();
        if run.server_model.is_some() {
            views.push(EnsembleView::Server);
        }
        for view in views {
            let probs = run.predict(view, data.view()).unwrap();
            for row in probs.rows() {
                assert!((row.sum() - 1.0).abs() < 1e-9, "{strategy} {view:?}");
                assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
            }
        }
        assert!(run.predict(EnsembleView::Client(expected_clients), data.view()).is_err());
    }
}

#[test]
fn feature_sharing_leaves_client_training_untouched() {
    let data = dataset();
    let shards = shards();
    let local = run_strategy(&config(Strategy::Local), &arch(), &data, &shards, 6).unwrap();
    let ft = run_strategy(&config(Strategy::FedFt), &arch(), &data, &shards, 6).unwrap();
    for (x, y) in local.client_models.iter().zip(&ft.client_models) {
        assert_eq!(bits(x), bits(y));
    }
    let l = local.predict(EnsembleView::Client(0), data.view()).unwrap();
    let f = ft.predict(EnsembleView::Client(0), data.view()).unwrap();
    assert_ne!(l, f);
}

#[test]
fn global_trains_for_all_rounds_and_epochs() {
    let data = dataset();
    let shards = shards();
    let cfg = config(Strategy::Global);
    let run = run_strategy(&cfg, &arch(), &data, &shards, 8).unwrap();
    let mut params = init_network(&arch(), derive_seed(8, &[stream::INIT])).unwrap();
    let client = ClientState::new(0, shards.concat(), params.clone());
    for round in 0..cfg.rounds {
        params = local_update(&client, &params, &cfg, Objective::Plain, &data, round, 8).unwrap();
    }
    assert_eq!(bits(&params), bits(&run.client_models[0]));
}

#[test]
fn rejects_bad_inputs() {
    let data = dataset();
    let mut shards = shards();
    assert!(run_strategy(&config(Strategy::FedAvg), &arch(), &data, &shards[..2], 0).is_err());
    assert!(run_strategy(&config(Strategy::FedAvg), &Architecture::new(4, vec![], 4, 3), &data, &shards, 0).is_err());
    shards[1].clear();
    assert!(run_strategy(&config(Strategy::FedAvg), &arch(), &data, &shards, 0).is_err());
}
