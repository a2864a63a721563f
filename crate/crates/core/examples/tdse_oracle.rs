//! The same decay computed twice: resonance expansion against a
//! Crank-Nicolson grid run with an absorbing layer.

use resonance_decay::dynamics::psi_single;
use resonance_decay::oracle::{tdse_snapshots, TdseOptions};
use resonance_decay::poles::find_poles;
use resonance_decay::states::{Expansion, Label};
use resonance_decay::PotentialSpec;

fn main() -> resonance_decay::Result<()> {
    let spec = PotentialSpec::delta_shell(10.0, 1.0);
    let init = spec.box_state(1)?;
    let expansion = Expansion::build(find_poles(&spec, 1000)?, init, None)?.with_far_pole_remainder(4)?;
    let tau = expansion.lifetime();
    let h = 0.02;
    let times = [0.5 * tau, tau];
    let grid = tdse_snapshots(&spec, &init, &times, h, 0.5 * h * h, &TdseOptions::default())?;
    println!("t/tau   x     expansion     grid          rel. diff");
    for (state, t) in grid.iter().zip(times) {
        for x in [0.5, 2.0, 5.0] {
            let a = psi_single(&expansion, Label::Alpha, x, t)?.amplitude.density();
            let b = state.density(x)?;
            println!("{:<7.2} {x:<5} {a:<13.6e} {b:<13.6e} {:.1e}", t / tau, (b - a).abs() / a);
        }
    }
    Ok(())
}
