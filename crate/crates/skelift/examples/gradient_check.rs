//! Finite-difference verification of every model's analytic gradients.
//!
//! ```bash
//! cargo run --release --example gradient_check
//! ```

use skelift::train::{grad_check_threshold, run_grad_check, ModelKind};

fn main() -> skelift::Result<()> {
    for kind in ModelKind::ALL {
        let threshold = grad_check_threshold(kind);
        for seed in 0..3 {
            let report = run_grad_check(kind, seed)?;
            println!(
                "{:<13} seed {seed}: max rel err {:.3e} over {} tensors (threshold {:.0e}) {}",
                kind.name(),
                report.max_rel_error,
                report.per_param.len(),
                threshold,
                if report.passes(threshold) { "ok" } else { "FAIL" }
            );
        }
    }
    Ok(())
}
