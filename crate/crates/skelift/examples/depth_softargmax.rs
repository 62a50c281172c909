//! Depth-as-classification: N bins over Z/f and the soft-argmax readout.
//!
//! ```bash
//! cargo run --example depth_softargmax
//! ```

use skelift::tcn::{soft_argmax_depth, DepthBins};

fn main() -> skelift::Result<()> {
    let bins = DepthBins::new(60, 0.0, 6.0)?;
    println!(
        "{} bins over [{}, {}], width {:.3}, centers {:.3} .. {:.3}",
        bins.count,
        bins.lo,
        bins.hi,
        bins.width(),
        bins.center(0),
        bins.center(bins.count - 1)
    );

    let uniform = vec![0.0; bins.count];
    println!("\nuniform logits -> {:.6} (midpoint)", soft_argmax_depth(&uniform, &bins)?);

    let mut peaked = vec![0.0; bins.count];
    peaked[20] = 8.0;
    println!(
        "peak at bin 20 (center {:.3}) -> {:.4}",
        bins.center(20),
        soft_argmax_depth(&peaked, &bins)?
    );

    let mut saturated = vec![0.0; bins.count];
    saturated[20] = 50.0;
    println!("saturated peak -> {:.9}", soft_argmax_depth(&saturated, &bins)?);

    // two competing peaks blend toward their probability-weighted mean
    let mut bimodal = vec![0.0; bins.count];
    bimodal[10] = 4.0;
    bimodal[50] = 4.0;
    println!("equal peaks at bins 10 and 50 -> {:.4}", soft_argmax_depth(&bimodal, &bins)?);
    Ok(())
}
