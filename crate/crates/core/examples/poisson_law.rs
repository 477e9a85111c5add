//! Block counts over a window are Poisson: the spread shrinks only as 1/sqrt(K).
use poolsim::model::{expected_blocks, mining_distribution, sample_block_count};
use poolsim::{Difficulty, Hashrate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> poolsim::Result<()> {
    let d = Difficulty::new(1_418_481_395.0)?;
    let day = expected_blocks(Hashrate::terahashes(174.0)?, d, 86_400.0)?;
    println!(
        "174 TH/s at difficulty {}: {day:.3} blocks per day",
        d.value()
    );

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in [2.5, 18.0, 100.0, 729.0] {
        let dist = mining_distribution(k)?;
        let draws: Vec<u64> = (0..10_000)
            .map(|_| sample_block_count(k, &mut rng))
            .collect::<poolsim::Result<_>>()?;
        let mean = draws.iter().sum::<u64>() as f64 / draws.len() as f64;
        println!(
            "K={k:<6} std {:>6.3}  relative {:>6.2}%  sample mean {mean:.2}",
            dist.stddev(),
            dist.relative_stddev() * 100.0
        );
    }
    Ok(())
}
