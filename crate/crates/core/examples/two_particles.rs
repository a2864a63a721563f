//! Two identical particles in box modes 1 and 6, entangled by exchange
//! symmetry. The long-time tails differ: t^-6 against t^-10.

use resonance_decay::dynamics::{density_series, detect_tail_window, tail_exponent, GridSegment, Positions, Symmetry};
use resonance_decay::poles::find_poles;
use resonance_decay::states::Expansion;
use resonance_decay::PotentialSpec;

fn main() -> resonance_decay::Result<()> {
    let spec = PotentialSpec::delta_shell(100.0, 1.0);
    let expansion = Expansion::build(find_poles(&spec, 1000)?, spec.box_state(1)?, Some(spec.box_state(6)?))?
        .with_far_pole_remainder(4)?;
    let grid = [GridSegment::linear(1.0, 40.0, 391), GridSegment::log(40.0, 7000.0, 200)];
    for sym in [Symmetry::Symmetric, Symmetry::Antisymmetric] {
        let s = density_series(&expansion, Positions::Two(2400.0, 15000.0), Some(sym), &grid)?;
        let (t, rho) = s.global_max().expect("valid samples");
        let window = detect_tail_window(&s).expect("tail present");
        let slope = tail_exponent(&s, window)?;
        println!("{sym:?}: maximum {rho:.4e} at {t:.2} lifetimes, tail t^{slope:.2} from {:.0}", window[0]);
    }
    Ok(())
}
