//! One particle leaving a delta shell, observed far outside: the front
//! arrives near r/(2 upsilon_1), then exponential decay gives way to t^-3.

use resonance_decay::dynamics::{density_series, detect_tail_window, peak_time, tail_exponent, GridSegment, Positions};
use resonance_decay::poles::find_poles;
use resonance_decay::states::Expansion;
use resonance_decay::PotentialSpec;

fn main() -> resonance_decay::Result<()> {
    let spec = PotentialSpec::delta_shell(100.0, 1.0);
    let expansion = Expansion::build(find_poles(&spec, 1000)?, spec.box_state(1)?, None)?.with_far_pole_remainder(4)?;
    let tau = expansion.lifetime();
    let r = 3000.0;
    let grid = [GridSegment::linear(1.0, 20.0, 1901), GridSegment::log(20.0, 7000.0, 200)];
    let series = density_series(&expansion, Positions::One(r), None, &grid)?;

    let front = peak_time(&spec, r, &expansion.poles.poles[0], tau)?;
    let (t_max, rho_max) = series.global_max().expect("valid samples");
    println!("tau = {tau:.4}, front at {front:.4} lifetimes, maximum {rho_max:.4e} at {t_max:.4}");
    if let Some(window) = detect_tail_window(&series) {
        let slope = tail_exponent(&series, window)?;
        println!("tail over [{:.1}, {:.1}] lifetimes: rho ~ t^{slope:.3}", window[0], window[1]);
    }
    Ok(())
}
