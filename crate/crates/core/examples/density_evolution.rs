//! Population dynamics of the messages next to a simulated graph.
//!
//! cargo run --release --example density_evolution

use nbwalk::model::stream_rng;
use nbwalk::theory::DeConfig;
use nbwalk::{accuracy, density_evolution_mc, make_instance, run_binary, ModelSpec, Scope, Similarity, Weighting};

fn main() -> nbwalk::Result<()> {
    let k = 8;
    for alpha in [10.0, 20.0, 40.0] {
        let spec = ModelSpec {
            n: 50_000,
            q: 2,
            alpha,
            eta: 0.1,
            p_in: Similarity::gaussian(0.5, 1.0),
            p_out: Similarity::gaussian(-0.5, 1.0),
            seed: 2,
        };
        let w = Weighting::centered(&spec.p_in, &spec.p_out);
        let de = density_evolution_mc(&spec, &w, &DeConfig::new(k, 100_000), &mut stream_rng(3, 0))?;
        let inst = make_instance(&spec)?;
        let out = run_binary(&inst.centered_graph()?, &inst.data, k, &mut inst.algorithm_rng())?;
        let sim = 1.0 - accuracy(&out.assignments, &inst.data.spins(), Scope::Unlabeled, &inst.data.revealed)?;
        println!("alpha {alpha:>4}: population error {:.4} ± {:.4}, graph error {sim:.4}", de.error, de.error_se);
    }
    Ok(())
}
