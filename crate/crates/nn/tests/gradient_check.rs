use sad_nn::gradcheck::check_network;
use sad_nn::NetConfig;

#[test]
fn every_layer_passes_finite_differences() {
    let cfg = NetConfig {
        input_dim: 6,
        hidden: 5,
        lstm_layers: 2,
        num_actions: 4,
        aux_slots: 2,
    };
    for seed in 0..3 {
        let report = check_network(cfg, seed, 4, 3, 1e-5).unwrap();
        for (name, err) in &report.per_tensor {
            assert!(*err < 1e-4, "seed {seed}: {name} relative error {err:e} {:?}", report.worst);
        }
        assert!(report.entries_checked > 500);
    }
}

#[test]
fn without_aux_head_or_recurrence() {
    let cfg = NetConfig {
        input_dim: 3,
        hidden: 4,
        lstm_layers: 0,
        num_actions: 2,
        aux_slots: 0,
    };
    let report = check_network(cfg, 7, 2, 2, 1e-5).unwrap();
    assert!(report.max_rel_error < 1e-4, "{report:?}");
}
