//! Error bounds for a range of sampling rates, centered Gaussian similarities.
//!
//! cargo run --example theory_report

use nbwalk::model::stream_rng;
use nbwalk::theory::{sufficient_alpha, tau_optimal};
use nbwalk::{weight_stats, Similarity, TheoryReport, Weighting};

fn main() -> nbwalk::Result<()> {
    let p_in = Similarity::gaussian(0.5, 1.0);
    let p_out = Similarity::gaussian(-0.5, 1.0);
    let w = Weighting::centered(&p_in, &p_out);
    let (eta, k) = (0.1, 20);
    let base = weight_stats(&p_in, &p_out, &w, 1.0, &mut stream_rng(0, 0))?;
    println!("delta {} sigma^2 {}", base.delta, base.sigma2);
    let a = sufficient_alpha(eta, base.delta, base.sigma2)?;
    println!("alpha above {a:.2} pushes the effective signal past 2/(1-eta)");
    println!("{:>6} {:>6} {:>12} {:>12} {:>12}", "alpha", "tau", "bound1", "bound2", "tau*");
    for alpha in [5.0, 10.0, 15.0, 25.0, 50.0] {
        let r = TheoryReport::new(&base.with_alpha(alpha), eta, k);
        let b2 = r.tail_bound.map_or("-".into(), |b| format!("{b:.3e}"));
        let opt = tau_optimal(alpha, &p_in, &p_out)?;
        println!("{alpha:>6} {:>6.2} {:>12.3e} {b2:>12} {opt:>12.3}", r.stats.tau, r.variance_bound);
    }
    Ok(())
}
