//! Convergence of the sum rule and the closure reconstruction of the
//! initial state.

use resonance_decay::poles::find_poles;
use resonance_decay::states::{reconstruct_initial, sum_rule, Expansion, Label};
use resonance_decay::PotentialSpec;

fn main() -> resonance_decay::Result<()> {
    let spec = PotentialSpec::delta_shell(100.0, 1.0);
    let poles = find_poles(&spec, 1000)?;
    let expansion = Expansion::build(poles, spec.box_state(1)?, Some(spec.box_state(6)?))?;
    println!("N      q=1 sum - 1   q=6 sum - 1");
    for n in [1, 10, 100, 1000] {
        let a = sum_rule(&expansion, Label::Alpha, n)? - 1.0;
        let b = sum_rule(&expansion, Label::Beta, n)? - 1.0;
        println!("{n:<6} {a:<13.3e} {b:.3e}");
    }
    for x in [0.25, 0.5, 0.9] {
        let exact = expansion.alpha.value(x);
        let back = reconstruct_initial(&expansion, Label::Alpha, x, 1000)?;
        println!("x={x}: initial {exact:.6}, reconstructed {back:.6}");
    }
    Ok(())
}
