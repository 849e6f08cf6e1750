//! Track a walker along a 60 m arc with noisy position fixes and watch
//! the arrival-time estimate for the far end tighten.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stg::sim::{eta, kalman_step, KalmanEtaState, KalmanParams};

fn main() -> anyhow::Result<()> {
    let params = KalmanParams::default();
    let (speed, target) = (1.6, 60.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    // the prior assumes the usual walking pace
    let mut x = KalmanEtaState::new(0.0, 1.4, 1.0, 0.25, 0.0);
    println!("{:>4} {:>8} {:>7} {:>9} {:>8} {:>8}", "t", "pos", "v", "eta", "std", "truth");
    for t in 1..=30 {
        let truth = speed * t as f64;
        // a fix every other second
        let z = (t % 2 == 0).then(|| truth + rng.random_range(-1.0..1.0));
        x = kalman_step(&x, 1.0, z, &params)?;
        let e = eta(&x, target);
        if t % 3 == 0 {
            println!(
                "{t:>4} {:>8.2} {:>7.3} {:>9.2} {:>8.3} {:>8.2}",
                x.s,
                x.v,
                e.mean_s,
                e.std_s,
                (target - truth) / speed
            );
        }
    }
    Ok(())
}
