//! Experiment configs, built-in presets and the files a run writes.
//!
//! A config is JSON. Presets `fig1` to `fig6` are complete configs; a
//! config file given together with a preset overrides it field by field.
//!
//! ```json
//! {
//!   "name": "fig1",
//!   "potential": { "kind": "delta_shell", "strength": 100.0, "radius": 1.0 },
//!   "alpha": 1,
//!   "positions": 3000.0,
//!   "time_grid": [{ "start": 0.5, "end": 20.0, "points": 1951, "spacing": "linear" }],
//!   "n_poles": 1000,
//!   "remainder_order": 4,
//!   "out_dir": "out"
//! }
//! ```
//!
//! Two positions need a non-empty `symmetry` list; each entry gives one
//! density series.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    density_series, detect_tail_window, peak_near, peak_time, tail_exponent, DensitySeries, GridSegment, Positions,
    Symmetry,
};
use crate::error::{Error, Result};
use crate::poles::{cache_path, load_or_find, render_cache, PoleSet};
use crate::states::{sum_rule, Expansion, Label};
use crate::PotentialSpec;

pub const PRESETS: [&str; 6] = ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6"];

/// Largest accepted pole count.
pub const MAX_POLES: usize = 100_000;

/// Largest accepted far-pole remainder order.
pub const MAX_REMAINDER_ORDER: usize = 8;

/// Relative half-width of the window searched around a predicted peak.
pub const PEAK_WINDOW: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub potential: PotentialSpec,
    /// Box-mode index of the first initial state.
    pub alpha: u32,
    /// Box-mode index of the second initial state (entangled states).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub symmetry: Vec<Symmetry>,
    pub positions: Positions,
    /// Segments in lifetimes of the first pole.
    pub time_grid: Vec<GridSegment>,
    pub n_poles: usize,
    /// Far-pole moments added beyond the last pole; 0 disables.
    #[serde(default)]
    pub remainder_order: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!("name {:?} must be a plain, non-empty file stem", self.name));
        }
        self.potential.validate()?;
        if self.n_poles == 0 || self.n_poles > MAX_POLES {
            return bad(format!("n_poles must be in 1..={MAX_POLES}, got {}", self.n_poles));
        }
        if self.alpha == 0 || self.beta == Some(0) {
            return bad("box-mode indices start at 1".into());
        }
        if self.remainder_order > MAX_REMAINDER_ORDER {
            return bad(format!("remainder_order must be at most {MAX_REMAINDER_ORDER}"));
        }
        if self.time_grid.is_empty() {
            return bad("time_grid is empty".into());
        }
        for seg in &self.time_grid {
            seg.validate()?;
        }
        let xs = match self.positions {
            Positions::One(x) => vec![x],
            Positions::Two(a, b) => vec![a, b],
        };
        let lowest = if self.potential.radiates_left() { f64::NEG_INFINITY } else { 0.0 };
        if xs.iter().any(|x| !x.is_finite() || *x < lowest) {
            return bad(format!("positions {xs:?} must be finite and >= {lowest}"));
        }
        let distinct = self.beta.is_some_and(|b| b != self.alpha);
        match self.positions {
            Positions::One(_) if !self.symmetry.is_empty() || self.beta.is_some() => {
                bad("one position takes neither symmetry nor beta".into())
            }
            Positions::Two(..) if self.symmetry.is_empty() => bad("two positions need a symmetry list".into()),
            _ if self.symmetry.contains(&Symmetry::Antisymmetric) && !distinct => {
                bad("an antisymmetric state needs beta != alpha".into())
            }
            _ if self.symmetry.contains(&Symmetry::Factorized) && distinct => {
                bad("a factorized state uses alpha only".into())
            }
            _ => Ok(()),
        }
    }
}

fn delta_shell_figure() -> PotentialSpec {
    PotentialSpec::delta_shell(100.0, 1.0)
}

fn double_barrier_figure() -> PotentialSpec {
    PotentialSpec::double_barrier(40.0, 1.0, 1.0)
}

/// Built-in config by name.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let tail = GridSegment::log(40.0, 7000.0, 300);
    let base = |potential, positions, symmetry: Vec<Symmetry>, grid: Vec<GridSegment>, n_poles| ExperimentConfig {
        name: name.to_string(),
        potential,
        alpha: 1,
        beta: None,
        symmetry,
        positions,
        time_grid: grid,
        n_poles,
        remainder_order: 4,
        out_dir: default_out_dir(),
    };
    let two_broad_peaks = vec![
        GridSegment::linear(0.5, 6.0, 551),
        GridSegment::linear(6.0, 27.0, 10501),
        GridSegment::linear(27.0, 40.0, 1301),
        tail,
    ];
    let config = match name {
        "fig1" => base(
            delta_shell_figure(),
            Positions::One(3000.0),
            vec![],
            vec![GridSegment::linear(0.5, 40.0, 3951), tail],
            1000,
        ),
        "fig2" => ExperimentConfig {
            beta: Some(6),
            ..base(
                delta_shell_figure(),
                Positions::Two(2400.0, 15000.0),
                vec![Symmetry::Symmetric, Symmetry::Antisymmetric],
                vec![GridSegment::linear(0.5, 40.0, 3951), tail],
                1000,
            )
        },
        "fig3" | "fig4" => base(
            delta_shell_figure(),
            Positions::Two(3000.0, 15000.0),
            vec![Symmetry::Symmetric],
            two_broad_peaks,
            if name == "fig3" { 1 } else { 1000 },
        ),
        "fig5" | "fig6" => base(
            double_barrier_figure(),
            Positions::Two(6.0e5, 3.0e6),
            vec![Symmetry::Symmetric],
            vec![GridSegment::linear(0.5, 60.0, 5951), GridSegment::log(60.0, 1e4, 200)],
            if name == "fig5" { 2 } else { 50 },
        ),
        _ => return Err(Error::Config(format!("unknown preset {name:?}; known: {}", PRESETS.join(", ")))),
    };
    Ok(config)
}

/// Overrides the fields of `base` present in the JSON object `overlay`.
pub fn overlay(base: &ExperimentConfig, overlay: &str) -> Result<ExperimentConfig> {
    let patch: serde_json::Value = serde_json::from_str(overlay).map_err(|e| Error::Config(e.to_string()))?;
    let serde_json::Value::Object(fields) = patch else {
        return Err(Error::Config("config must be a JSON object".into()));
    };
    let mut merged = serde_json::to_value(base)?;
    let target = merged.as_object_mut().expect("config is an object");
    for (k, v) in fields {
        target.insert(k, v);
    }
    let config: ExperimentConfig = serde_json::from_value(merged).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Resolves `--preset` and `--config`: either alone, or the config file
/// overriding the preset.
pub fn load_config(path: Option<&Path>, preset_name: Option<&str>) -> Result<ExperimentConfig> {
    let text = match path {
        Some(p) => Some(fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?),
        None => None,
    };
    match (text, preset_name) {
        (Some(t), Some(name)) => overlay(&preset(name)?, &t),
        (Some(t), None) => ExperimentConfig::from_json(&t),
        (None, Some(name)) => preset(name),
        (None, None) => Err(Error::Config("give --preset NAME or --config PATH".into())),
    }
}

/// Expansion plus one density series per symmetry, without touching disk.
pub fn compute_experiment(config: &ExperimentConfig, cache: Option<&Path>) -> Result<(Expansion, Vec<DensitySeries>)> {
    config.validate()?;
    let spec = config.potential;
    let poles = load_or_find(&spec, config.n_poles, cache).map_err(Error::during("pole search"))?;
    let alpha = spec.box_state(config.alpha)?;
    let beta = config.beta.map(|q| spec.box_state(q)).transpose()?;
    let expansion = Expansion::build(poles, alpha, beta)
        .and_then(|e| e.with_far_pole_remainder(config.remainder_order))
        .map_err(Error::during("expansion"))?;
    let symmetries: Vec<Option<Symmetry>> =
        if config.symmetry.is_empty() { vec![None] } else { config.symmetry.iter().copied().map(Some).collect() };
    let series = symmetries
        .into_iter()
        .map(|sym| {
            density_series(&expansion, config.positions, sym, &config.time_grid)
                .map_err(Error::during(format!("density series ({})", symmetry_name(sym))))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((expansion, series))
}

fn symmetry_name(s: Option<Symmetry>) -> &'static str {
    match s {
        None => "single",
        Some(Symmetry::Symmetric) => "symmetric",
        Some(Symmetry::Antisymmetric) => "antisymmetric",
        Some(Symmetry::Factorized) => "factorized",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleRow {
    pub n: usize,
    pub re_k: f64,
    pub im_k: f64,
    pub lifetime: f64,
}

/// Predicted front arrival `(x - boundary)/(2 upsilon_n)` of one pole at
/// one position, with the measured maximum nearby.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakRow {
    pub position: f64,
    pub pole: usize,
    pub predicted: f64,
    pub measured: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub symmetry: String,
    pub csv: String,
    pub global_max: Option<[f64; 2]>,
    pub peaks: Vec<PeakRow>,
    pub tail_window: Option<[f64; 2]>,
    pub tail_exponent: Option<f64>,
    pub invalid_samples: usize,
    pub truncation_warnings: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub units: String,
    pub potential: PotentialSpec,
    pub n_poles: usize,
    pub remainder_order: usize,
    /// Lifetime unit: `tau` of pole 1.
    pub tau: f64,
    /// Double barrier: poles below the barrier top.
    pub sub_barrier: Option<usize>,
    /// Up to the first ten poles.
    pub poles: Vec<PoleRow>,
    pub series: Vec<SeriesSummary>,
}

/// Most strongly populated pole of `label`: largest `Re C_n^2`.
fn dominant_pole(expansion: &Expansion, label: Label) -> Result<usize> {
    let c = expansion.coefficients(label)?;
    Ok((0..c.len()).max_by(|a, b| (c[*a] * c[*a]).re.total_cmp(&(c[*b] * c[*b]).re)).map_or(1, |j| j + 1))
}

fn summarize(
    config: &ExperimentConfig,
    expansion: &Expansion,
    series: &[DensitySeries],
    csv_names: &[String],
) -> Result<Summary> {
    let spec = &expansion.spec;
    let tau = expansion.lifetime();
    let poles = &expansion.poles.poles;
    let a = dominant_pole(expansion, Label::Alpha)?;
    let pairs: Vec<(f64, usize)> = match (config.positions, config.beta) {
        (Positions::One(x), _) => vec![(x, a)],
        (Positions::Two(x1, x2), Some(_)) => {
            vec![(x1, a), (x2, dominant_pole(expansion, Label::Beta)?)]
        }
        (Positions::Two(x1, x2), None) => vec![(x1, a), (x2, a)],
    };
    let mut rows: Vec<(f64, usize)> = Vec::new();
    for (x, dom) in pairs {
        for n in std::iter::once(dom).chain(1..=poles.len().min(4)) {
            if x >= spec.boundary() && !rows.contains(&(x, n)) {
                rows.push((x, n));
            }
        }
    }
    let mut out = Vec::new();
    for (s, csv) in series.iter().zip(csv_names) {
        let peaks = rows
            .iter()
            .map(|&(x, n)| {
                let predicted = peak_time(spec, x, &poles[n - 1], tau)?;
                let measured = peak_near(s, predicted, PEAK_WINDOW).map(|p| p.0);
                Ok(PeakRow { position: x, pole: n, predicted, measured })
            })
            .collect::<Result<Vec<_>>>()?;
        let window = detect_tail_window(s);
        out.push(SeriesSummary {
            symmetry: symmetry_name(s.symmetry).to_string(),
            csv: csv.clone(),
            global_max: s.global_max().map(|(t, r)| [t, r]),
            peaks,
            tail_window: window,
            tail_exponent: window.and_then(|w| tail_exponent(s, w).ok()),
            invalid_samples: s.valid.iter().filter(|v| !**v).count(),
            truncation_warnings: s.truncation_warnings,
        });
    }
    Ok(Summary {
        name: config.name.clone(),
        units: "natural units hbar = 2m = 1; times in lifetimes of pole 1".into(),
        potential: *spec,
        n_poles: expansion.n_terms(),
        remainder_order: config.remainder_order,
        tau,
        sub_barrier: expansion.poles.sub_barrier,
        poles: poles
            .iter()
            .take(10)
            .map(|p| PoleRow { n: p.index, re_k: p.kappa.re, im_k: p.kappa.im, lifetime: p.lifetime() })
            .collect(),
        series: out,
    })
}

/// gnuplot script drawing `ln rho` against `t / tau` for each CSV.
pub fn render_plot_script(name: &str, csv_names: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# natural units hbar = 2m = 1");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set datafile commentschars '#t'");
    let _ = writeln!(s, "set xlabel 't / tau'");
    let _ = writeln!(s, "set ylabel 'ln |Psi|^2'");
    let _ = writeln!(s, "set title '{name}'");
    let curves: Vec<String> = csv_names
        .iter()
        .map(|c| format!("'{c}' using 2:($7 == 1 ? $6 : NaN) with lines title '{}'", c.trim_end_matches(".csv")))
        .collect();
    let _ = writeln!(s, "plot {}", curves.join(", \\\n     "));
    s
}

/// Everything a run produced.
#[derive(Debug)]
pub struct Outcome {
    pub summary: Summary,
    pub series: Vec<DensitySeries>,
    pub files: Vec<PathBuf>,
}

/// Computes the experiment and writes, into `config.out_dir`, one CSV per
/// series, `<name>.gp` and `<name>_summary.json`.
pub fn run_experiment(config: &ExperimentConfig, cache: Option<&Path>) -> Result<Outcome> {
    let (expansion, series) = compute_experiment(config, cache)?;
    let csv_names: Vec<String> = if series.len() == 1 {
        vec![format!("{}.csv", config.name)]
    } else {
        series.iter().map(|s| format!("{}_{}.csv", config.name, symmetry_name(s.symmetry))).collect()
    };
    let summary = summarize(config, &expansion, &series, &csv_names)?;
    let dir = &config.out_dir;
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for (s, name) in series.iter().zip(&csv_names) {
        files.push(dir.join(name));
        fs::write(dir.join(name), s.render_csv())?;
    }
    let plot = dir.join(format!("{}.gp", config.name));
    fs::write(&plot, render_plot_script(&config.name, &csv_names))?;
    let json = dir.join(format!("{}_summary.json", config.name));
    fs::write(&json, serde_json::to_string_pretty(&summary)? + "\n")?;
    files.extend([plot, json]);
    Ok(Outcome { summary, series, files })
}

/// Solves (or reloads) `n` poles and writes the cache file into `dir`.
pub fn solve_poles_cmd(spec: &PotentialSpec, n: usize, dir: &Path) -> Result<(PathBuf, PoleSet)> {
    if n == 0 || n > MAX_POLES {
        return Err(Error::InvalidArgument(format!("pole count must be in 1..={MAX_POLES}, got {n}")));
    }
    let set = load_or_find(spec, n, Some(dir)).map_err(Error::during("pole search"))?;
    let path = cache_path(dir, spec, n);
    // rewrite so the file is canonical even if it was hand-edited
    fs::write(&path, render_cache(&set))?;
    Ok((path, set))
}

/// Partial sums `Re sum C_n C_bar_n` at `N = 1, 10, 100, ...` and at the
/// config's pole count, for each initial state.
pub fn sum_rule_table(config: &ExperimentConfig, cache: Option<&Path>) -> Result<String> {
    config.validate()?;
    let spec = config.potential;
    let poles = load_or_find(&spec, config.n_poles, cache).map_err(Error::during("pole search"))?;
    let beta = config.beta.map(|q| spec.box_state(q)).transpose()?;
    let expansion = Expansion::build(poles, spec.box_state(config.alpha)?, beta)?;
    let mut checkpoints: Vec<usize> =
        std::iter::successors(Some(1usize), |n| n.checked_mul(10)).take_while(|n| *n < config.n_poles).collect();
    checkpoints.push(config.n_poles);
    let mut labels = vec![(Label::Alpha, config.alpha)];
    if let Some(q) = config.beta {
        labels.push((Label::Beta, q));
    }
    let mut s = String::from("# sum rule Re sum_{n<=N} C_n C_bar_n, natural units hbar = 2m = 1\nq,N,sum,deviation\n");
    for (label, q) in labels {
        for &n in &checkpoints {
            let v = sum_rule(&expansion, label, n)?;
            let _ = writeln!(s, "{q},{n},{v:.15e},{:.3e}", v - 1.0);
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for name in PRESETS {
            let c = preset(name).unwrap();
            c.validate().unwrap();
            assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
        }
        assert!(preset("fig7").is_err());
    }

    #[test]
    fn zero_poles_rejected() {
        let err = overlay(&preset("fig1").unwrap(), r#"{"n_poles": 0}"#).unwrap_err();
        assert!(err.is_validation());
    }

    #[test]
    fn overlay_changes_only_given_fields() {
        let base = preset("fig4").unwrap();
        let c = overlay(&base, r#"{"n_poles": 20, "name": "custom"}"#).unwrap();
        assert_eq!(c.n_poles, 20);
        assert_eq!(c.name, "custom");
        assert_eq!(c.time_grid, base.time_grid);
        assert!(overlay(&base, r#"{"colour": 3}"#).is_err());
    }

    #[test]
    fn inconsistent_symmetry_rejected() {
        let base = preset("fig3").unwrap();
        for patch in [
            r#"{"symmetry": []}"#,
            r#"{"symmetry": ["antisymmetric"]}"#,
            r#"{"beta": 2, "symmetry": ["factorized"]}"#,
            r#"{"positions": 3.0}"#,
        ] {
            assert!(overlay(&base, patch).unwrap_err().is_validation(), "{patch}");
        }
    }

    #[test]
    fn plot_script_lists_every_csv() {
        let s = render_plot_script("fig2", &["fig2_symmetric.csv".into(), "fig2_antisymmetric.csv".into()]);
        assert!(s.contains("'fig2_symmetric.csv'") && s.contains("'fig2_antisymmetric.csv'"));
    }
}
