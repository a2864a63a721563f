//! Resonance poles of the delta shell: closed-form seeds, Newton refinement
//! and the argument-principle count.

use resonance_decay::poles::{find_poles, winding_number};
use resonance_decay::PotentialSpec;

fn main() -> resonance_decay::Result<()> {
    let spec = PotentialSpec::delta_shell(100.0, 1.0);
    let set = find_poles(&spec, 200)?;
    println!("n   seed                         pole                          tau");
    for p in set.poles.iter().take(6) {
        let seed = spec.pole_seed(p.index)?;
        println!("{:<3} {:<28.8} {:<29.10} {:.4}", p.index, seed, p.kappa, p.lifetime());
    }
    let residual = |k| spec.pole_residual(k);
    let count = winding_number(&residual, &set.contour, 0.05)?;
    println!("argument principle over {:?}: {count} zeros, {} poles found", set.contour, set.len());
    Ok(())
}
