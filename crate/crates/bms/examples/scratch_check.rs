// temporary: verify criterion-4 thresholds hold empirically
use bms::bandits::*;
use bms::engine::stream_rng;
use bms::harness::{Architecture, Tuning};
use bms::testbeds::{play, SyntheticEnv};

fn main() {
    let t = Tuning::defaults(Architecture::Sa);
    let horizon = 20_000;

    // UCB best-arm rate in rounds 19k..20k
    let env = SyntheticEnv::bernoulli10();
    let mut rates = vec![];
    for seed in 0..20 {
        let mut a = UcbPolicy::new(10, t.ucb_alpha);
        let r = play(&env, &mut a, horizon, seed).unwrap();
        let best = 3usize;
        let hits = r.selections[19_000..].iter().filter(|&&s| s == best).count();
        rates.push(hits as f64 / 1000.0);
    }
    let m: f64 = rates.iter().sum::<f64>() / 20.0;
    println!("UCB best-arm rate 19k-20k: {m:.4}  (need >= 0.95)");

    // OSUB vs UCB on unimodal chain
    let env = SyntheticEnv::unimodal10();
    let (mut osub_total, mut ucb_total) = (0.0, 0.0);
    for seed in 0..20 {
        let mut u = UcbPolicy::new(10, t.ucb_alpha);
        let ru = play(&env, &mut u, horizon, seed).unwrap();
        let mut o = OsubPolicy::new(env.chain_graph(), 0.0, 0.0, stream_rng(seed, "agent/osub"));
        let ro = play(&env, &mut o, horizon, seed).unwrap();
        osub_total += ro.final_regret;
        ucb_total += ru.final_regret;
    }
    println!("unimodal 20k: OSUB regret {:.1} vs UCB {:.1}  (need OSUB < UCB)", osub_total/20.0, ucb_total/20.0);

    // LinUCB and E-RLB optimal rates on linear9, window = second half
    let env = SyntheticEnv::linear9();
    let (mut lin_rate, mut erlb_rate) = (0.0, 0.0);
    for seed in 0..20 {
        let mut l = LinUcbPolicy::new(5, 9, t.linucb_alpha);
        let rl = play(&env, &mut l, horizon, seed).unwrap();
        lin_rate += rl.optimal_rate(10_000, 20_000);
        let mut e = ErlbPolicy::new(5, 9, t.erlb, stream_rng(seed, "agent/erlb"));
        let re = play(&env, &mut e, horizon, seed).unwrap();
        erlb_rate += re.optimal_rate(10_000, 20_000);
    }
    println!("LinUCB optimal rate: {:.4} (need >= 0.90)", lin_rate/20.0);
    println!("E-RLB  optimal rate: {:.4} (need >= {:.3})", erlb_rate/20.0, 1.0 - t.erlb.epsilon - 0.05);
}
