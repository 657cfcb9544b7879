use compact_mec::env::SystemConfig;
use compact_mec::nn::Parameterized;
use compact_mec::ppo::PpoConfig;
use compact_mec::trainer::{mean_se, metrics_path, train_run, Baseline, RunConfig, Trainer};
use compact_mec::world_model::WmConfig;

fn tiny(baseline: Baseline, iterations: usize) -> RunConfig {
    RunConfig {
        iterations,
        episode_length: Some(10),
        baseline,
        eval_episodes: 4,
        system: SystemConfig::default(),
        ppo: PpoConfig { hidden: 16, minibatch_size: 5, epochs: 2, ..Default::default() },
        wm: WmConfig { n_h: 8, n_z: 4, hidden: 16, seq_len: 3, batch_sequences: 4, ..Default::default() },
        ..Default::default()
    }
}

#[test]
fn metric_rows_equal_iterations() {
    for (baseline, n) in [(Baseline::WmPpo, 4), (Baseline::Ppo, 6)] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig { seeds: vec![3, 4], ..tiny(baseline, n) };
        let runs = train_run(&cfg, dir.path(), 2, false).unwrap();
        assert_eq!(runs.len(), 2);
        for seed in [3, 4] {
            let text = std::fs::read_to_string(metrics_path(dir.path(), seed)).unwrap();
            assert_eq!(text.lines().count(), n);
        }
    }
}

#[test]
fn zero_iterations_change_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(Baseline::WmPpo, 0);
    let runs = train_run(&cfg, dir.path(), 1, false).unwrap();
    let fresh = Trainer::new(&cfg, 0).unwrap();
    let t = runs[0].trainer.as_ref().unwrap();
    assert_eq!(t.iteration, 0);
    assert_eq!(t.agent.actor.flat(), fresh.agent.actor.flat());
    assert_eq!(t.agent.critic.flat(), fresh.agent.critic.flat());
    assert_eq!(std::fs::read_to_string(metrics_path(dir.path(), 0)).unwrap(), "");
}

#[test]
fn resume_matches_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ckpt.json");
    let cfg = tiny(Baseline::WmPpo, 5);
    let mut straight = Trainer::new(&cfg, 9).unwrap();
    let full: Vec<_> = (0..5).map(|_| straight.train_iteration().unwrap()).collect();

    let mut first = Trainer::new(&cfg, 9).unwrap();
    let mut rows: Vec<_> = (0..3).map(|_| first.train_iteration().unwrap()).collect();
    first.save(&path).unwrap();
    let mut resumed = Trainer::load(&path).unwrap();
    rows.extend((0..2).map(|_| resumed.train_iteration().unwrap()));

    assert_eq!(rows, full);
    assert_eq!(resumed.agent.actor.flat(), straight.agent.actor.flat());
    assert_eq!(resumed.wm.as_ref().unwrap().model.flat(), straight.wm.as_ref().unwrap().model.flat());
}

#[test]
fn frozen_policy_reward_is_stationary() {
    let cfg = tiny(Baseline::Ppo, 1);
    let mut t = Trainer::new(&cfg, 5).unwrap();
    let before = t.agent.actor.flat();
    let rewards: Vec<f64> = (0..400).map(|_| t.collect().unwrap().1.reward).collect();
    assert_eq!(t.agent.actor.flat(), before);
    let (m1, se1) = mean_se(&rewards[..200]);
    let (m2, se2) = mean_se(&rewards[200..]);
    let z = (m1 - m2).abs() / (se1 * se1 + se2 * se2).sqrt();
    assert!(z < 4.0, "halves differ: {m1} vs {m2} (z = {z})");
}

#[test]
fn parallel_and_serial_runs_agree() {
    let cfg = RunConfig { seeds: vec![1, 2, 3], ..tiny(Baseline::Ppo, 3) };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    train_run(&cfg, a.path(), 1, false).unwrap();
    train_run(&cfg, b.path(), 3, false).unwrap();
    for f in ["summary.csv", "evaluation.json", "metrics-seed-2.jsonl"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
}
