//! Double barrier: two sharp resonances below the barrier top and broad
//! ones above it.

use resonance_decay::poles::find_poles;
use resonance_decay::states::{sum_rule, Expansion, Label};
use resonance_decay::PotentialSpec;

fn main() -> resonance_decay::Result<()> {
    let spec = PotentialSpec::double_barrier(40.0, 1.0, 1.0);
    let set = find_poles(&spec, 50)?;
    println!("sub-barrier poles: {:?} (barrier top k = {:.4})", set.sub_barrier, 40f64.sqrt());
    for p in set.poles.iter().take(5) {
        println!("n={} kappa={:.8} tau={:.3}", p.index, p.kappa, p.lifetime());
    }
    let expansion = Expansion::build(set, spec.box_state(1)?, None)?;
    for (n, c) in expansion.coefficients(Label::Alpha)?.iter().enumerate().take(4) {
        println!("C_{} = {c:.6}", n + 1);
    }
    println!("sum rule at N=50: {:.8}", sum_rule(&expansion, Label::Alpha, 50)?);
    Ok(())
}
