//! Paired scratch-versus-fine-tune runs on the two-teacher fixture.
//!
//! ```text
//! cargo run --release -p memorability --example transfer -- [seeds] [pretrain_epochs]
//! ```

use memorability::synthetic::transfer_trial;

fn main() {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().map_or(5, |s| s.parse().expect("seed count"));
    let epochs: usize = args
        .next()
        .map_or(10, |s| s.parse().expect("pretrain epochs"));
    println!("seed,scratch,fine_tuned");
    let mut gaps = Vec::new();
    for seed in 0..seeds {
        let t = transfer_trial(seed, epochs).expect("fixture trains");
        println!("{seed},{:.4},{:.4}", t.scratch, t.fine_tuned);
        gaps.push(t.fine_tuned - t.scratch);
    }
    let mean = gaps.iter().sum::<f64>() / gaps.len().max(1) as f64;
    println!("mean improvement {mean:.4}");
}
