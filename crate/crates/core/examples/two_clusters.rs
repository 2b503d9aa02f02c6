//! Two clusters with Gaussian similarities: accuracy as the walk gets longer.
//!
//! cargo run --release --example two_clusters

use nbwalk::{accuracy, make_instance, run_binary, ModelSpec, Scope, Similarity};

fn main() -> nbwalk::Result<()> {
    let spec = ModelSpec {
        n: 20_000,
        q: 2,
        alpha: 20.0,
        eta: 0.05,
        p_in: Similarity::gaussian(0.5, 1.0),
        p_out: Similarity::gaussian(-0.5, 1.0),
        seed: 1,
    };
    let inst = make_instance(&spec)?;
    let g = inst.centered_graph()?;
    println!("{} nodes, {} sampled pairs, {} revealed", g.n(), g.num_edges(), inst.data.revealed_count());
    println!("{:>4} {:>10}", "k", "accuracy");
    for k in [0, 1, 2, 4, 8, 16] {
        let out = run_binary(&g, &inst.data, k, &mut inst.algorithm_rng())?;
        let acc = accuracy(&out.assignments, &inst.data.spins(), Scope::Unlabeled, &inst.data.revealed)?;
        println!("{k:>4} {acc:>10.4}");
    }
    Ok(())
}
