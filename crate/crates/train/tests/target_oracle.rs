//! n-step double-Q targets on a fixed tiny network, checked against hand arithmetic.

use std::sync::Arc;

use sad_nn::{NetConfig, NetParams, RecurrentState, Tensor};
use sad_replay::EpisodeRecord;
use sad_train::targets::{bootstrap_value, predicted};
use sad_train::{episode_targets, Batch, Mode, Scope};

const PASS: u16 = 2;

/// No LSTM: h = relu(x), V = 0, advantages `adv · h`, Q = A - mean(A).
fn tiny(adv: [[f64; 2]; 3]) -> NetParams<f64> {
    let cfg = NetConfig { input_dim: 2, hidden: 2, lstm_layers: 0, num_actions: 3, aux_slots: 0 };
    let mut p = NetParams::zeros(cfg);
    p.fc.w = Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    p.adv.w = Tensor::new(vec![3, 2], adv.iter().flatten().copied().collect()).unwrap();
    p
}

/// Hand evaluation of [`tiny`] on one observation.
fn q_by_hand(adv: [[f64; 2]; 3], x: [f64; 2]) -> [f64; 3] {
    let h = [x[0].max(0.0), x[1].max(0.0)];
    let a: Vec<f64> = adv.iter().map(|w| w[0] * h[0] + w[1] * h[1]).collect();
    let mean = (a[0] + a[1] + a[2]) / 3.0;
    [a[0] - mean, a[1] - mean, a[2] - mean]
}

// Advantage rows sum to zero so the dueling mean is exactly 0 and every value below
// is exact in binary floating point.
const ONLINE: [[f64; 2]; 3] = [[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]];
const TARGET: [[f64; 2]; 3] = [[0.5, 0.0], [0.0, 2.0], [-0.5, -2.0]];

/// Two seats alternating, three transitions, cut by the step cap. Seat 1 moves at
/// the final observation.
fn episode() -> (EpisodeRecord, Vec<[[f64; 2]; 2]>) {
    let obs = vec![
        [[0.25, 0.125], [0.0, 0.375]],
        [[0.5, 0.0], [0.75, 0.25]],
        [[0.125, 0.625], [0.375, 0.375]],
        [[1.0, 2.0], [3.0, 1.0]],
    ];
    let rewards = [1.0f32, 0.0, 2.0];
    let mut e = EpisodeRecord::new(2, 2, 3, 0);
    for (t, row) in obs.iter().enumerate() {
        for (a, x) in row.iter().enumerate() {
            let acting = t % 2 == a;
            let legal = if acting { [true, true, false] } else { [false, false, true] };
            e.push_observation(&[x[0] as f32, x[1] as f32], &legal, acting, &[]);
        }
        if t < 3 {
            let acts = if t % 2 == 0 { [1, PASS] } else { [PASS, 0] };
            e.push_transition(&acts, &acts, rewards[t]);
        }
    }
    e.truncated = true;
    (e, obs)
}

#[test]
fn three_step_target_matches_hand_arithmetic() {
    let (ep, obs) = episode();
    let batch = Batch::<f64>::assemble(vec![Arc::new(ep.clone())]).unwrap();
    let run = |adv| {
        let net = tiny(adv);
        let init = RecurrentState::zeros(&net.cfg, 2);
        net.forward(&batch.obs, batch.steps, 2, &init, false).unwrap().q
    };
    let (q_on, q_tg) = (run(ONLINE), run(TARGET));
    let (on, tg) = (batch.view(&q_on, 0, 3), batch.view(&q_tg, 0, 3));

    let gamma = 0.999;
    let targets = episode_targets(&ep, on, tg, Mode::Vdn, gamma, 3).unwrap();
    assert_eq!(targets.len(), 3);

    // Final observation: seat 1 moves, online prefers move 0 (3 > 1) while the
    // target network prefers move 1; seat 0 can only pass.
    let seat1_on = q_by_hand(ONLINE, obs[3][1]);
    assert!(seat1_on[0] > seat1_on[1]);
    let seat1_tg = q_by_hand(TARGET, obs[3][1]);
    assert!(seat1_tg[1] > seat1_tg[0]);
    let v_final = seat1_tg[0] + q_by_hand(TARGET, obs[3][0])[2];
    let y0 = 1.0 + gamma * 0.0 + (gamma * gamma) * 2.0 + (gamma * gamma * gamma) * v_final;
    assert_eq!(targets[0].y, y0);
    assert_eq!(targets[1].y, 0.0 + gamma * 2.0 + (gamma * gamma) * v_final);
    assert_eq!(targets[2].y, 2.0 + gamma * v_final);
    assert_eq!(bootstrap_value(&ep, on, tg, 3, Scope::Joint).unwrap(), v_final);

    // the network agrees with the hand evaluation on every row
    for (t, row) in obs.iter().enumerate() {
        for (a, x) in row.iter().enumerate() {
            let hand = q_by_hand(ONLINE, *x);
            for (u, &h) in hand.iter().enumerate() {
                assert_eq!(on.row(t, a)[u], h);
            }
        }
    }
}

#[test]
fn joint_q_is_the_exact_per_seat_sum() {
    let (ep, _) = episode();
    let batch = Batch::<f64>::assemble(vec![Arc::new(ep.clone())]).unwrap();
    let net = tiny(ONLINE);
    let init = RecurrentState::zeros(&net.cfg, 2);
    let q = net.forward(&batch.obs, batch.steps, 2, &init, false).unwrap().q;
    let v = batch.view(&q, 0, 3);
    for t in 0..ep.len {
        let joint = predicted(&ep, v, t, Scope::Joint);
        let parts = v.row(t, 0)[ep.action_at(t, 0)] + v.row(t, 1)[ep.action_at(t, 1)];
        assert_eq!(joint, parts);
        let split = predicted(&ep, v, t, Scope::Agent(0)) + predicted(&ep, v, t, Scope::Agent(1));
        assert_eq!(joint, split);
    }
    // a handcrafted pair of values
    let q = [2.0f64, 0.0, 0.0, 0.0, 0.0, 3.0];
    let mut one = EpisodeRecord::new(2, 1, 3, 0);
    one.push_observation(&[0.0], &[true, true, false], true, &[]);
    one.push_observation(&[0.0], &[false, false, true], false, &[]);
    one.push_transition(&[0, PASS], &[0, PASS], 0.0);
    let view = sad_train::QView::episode(&q, 2, 3);
    assert_eq!(predicted(&one, view, 0, Scope::Joint), 5.0);
}

#[test]
fn terminal_one_step_target_is_the_reward() {
    let (mut ep, _) = episode();
    ep.truncated = false;
    let batch = Batch::<f64>::assemble(vec![Arc::new(ep.clone())]).unwrap();
    let net = tiny(ONLINE);
    let init = RecurrentState::zeros(&net.cfg, 2);
    let q = net.forward(&batch.obs, batch.steps, 2, &init, false).unwrap().q;
    let v = batch.view(&q, 0, 3);
    let targets = episode_targets(&ep, v, v, Mode::Vdn, 0.999, 1).unwrap();
    assert_eq!(targets[2].y, 2.0);
}
