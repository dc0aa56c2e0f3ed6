//! Figure recipes: fixed scans, samples and analyses with their output
//! files. Default grids are reduced for desk-scale runtimes; `full`
//! restores the original resolutions.

use nonsig::behavior::Named;
use nonsig::curves::{sample_curve, CurveId, TSIRELSON};
use nonsig::geometry::{concavity_profile, locate_inflection, trajectory, trajectory_kinks, Kink};
use nonsig::membership::qtilde_test;
use nonsig::sampler::{bell_behavior, sample, sample_mixtures};
use nonsig::scan::{scan, BoundaryCurve, Mode, ScanConfig, SetKind};
use nonsig::{mutual_information, s_max, Behavior};
use serde::Serialize;

use crate::io::{csv_bytes, curve_csv, f17};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
}

impl Figure {
    pub const ALL: [Figure; 5] = [Figure::Fig3, Figure::Fig4, Figure::Fig5, Figure::Fig6, Figure::Fig7];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecipeOptions {
    pub seed: u64,
    pub full: bool,
    /// Overrides the recipe's restart count.
    pub restarts: Option<usize>,
}

impl RecipeOptions {
    pub fn new(seed: u64) -> Self {
        Self { seed, full: false, restarts: None }
    }
}

/// A named output file.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecipeOutput {
    pub artifacts: Vec<Artifact>,
    /// Printed on stdout.
    pub summary: serde_json::Value,
}

/// Window and threshold factor of the trajectory kink detector.
pub const KINK_WINDOW: usize = 50;
pub const KINK_FACTOR: f64 = 10.0;
/// Orientation triple spacing of the inflection recipe.
pub const INFLECTION_K: usize = 100;

fn artifact(name: &str, bytes: Vec<u8>) -> Artifact {
    Artifact { name: name.to_owned(), bytes }
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn run_scan(
    set: SetKind,
    mode: Mode,
    (lo, hi): (f64, f64),
    n: usize,
    restarts: usize,
    seed: u64,
) -> Result<BoundaryCurve, CliError> {
    Ok(scan(&ScanConfig::new(set, mode, lo, hi, n).with_restarts(restarts).with_seed(seed))?)
}

fn analytic_csv(ids: &[CurveId], n: usize) -> Result<Vec<u8>, CliError> {
    let mut rows = Vec::new();
    for &id in ids {
        for (s, i) in sample_curve(id, n)? {
            rows.push(vec![id.name().to_owned(), f17(s), f17(i)]);
        }
    }
    Ok(csv_bytes(&["curve", "s", "i"], rows))
}

fn points_csv(points: &[Behavior], with_qtilde: bool) -> Vec<u8> {
    let header: &[&str] = if with_qtilde { &["s", "i", "qtilde"] } else { &["s", "i"] };
    csv_bytes(
        header,
        points.iter().map(|p| {
            let mut row = vec![f17(s_max(p)), f17(mutual_information(p))];
            if with_qtilde {
                row.push(u8::from(qtilde_test(p).pass).to_string());
            }
            row
        }),
    )
}

fn scale(full: bool, desk: usize, full_size: usize) -> usize {
    if full {
        full_size
    } else {
        desk
    }
}

pub fn run_recipe(fig: Figure, opts: &RecipeOptions) -> Result<RecipeOutput, CliError> {
    let seed = opts.seed;
    let full = opts.full;
    let mut artifacts = Vec::new();
    let files = |a: &[Artifact]| serde_json::json!({ "recipe": fig.name(), "files": a.iter().map(|x| x.name.clone()).collect::<Vec<_>>() });
    match fig {
        Figure::Fig3 => {
            let r = opts.restarts.unwrap_or(20);
            let max = run_scan(SetKind::Ns, Mode::Max, (0.0, 4.0), scale(full, 200, 700), r, seed)?;
            let min = run_scan(SetKind::Ns, Mode::Min, (2.0, 4.0), scale(full, 150, 500), r, seed)?;
            artifacts.push(artifact("fig3_ns_max.csv", curve_csv(&max)));
            artifacts.push(artifact("fig3_ns_min.csv", curve_csv(&min)));
            artifacts.push(artifact("fig3_analytic.csv", analytic_csv(&[CurveId::NsMax, CurveId::BellPrMin], 200)?));
            let summary = files(&artifacts);
            Ok(RecipeOutput { artifacts, summary })
        }
        Figure::Fig4 => {
            let r = opts.restarts.unwrap_or(20);
            let max = run_scan(SetKind::Sym, Mode::Max, (0.0, 4.0), scale(full, 200, 700), r, seed)?;
            let min = run_scan(SetKind::Sym, Mode::Min, (2.0, 4.0), scale(full, 150, 500), r, seed)?;
            let qc_cfg = ScanConfig::new(SetKind::C, Mode::Max, 2.0, TSIRELSON, scale(full, 50, 200))
                .with_restarts(r)
                .with_seed(seed)
                .with_qtilde(true);
            let qc = scan(&qc_cfg)?;
            artifacts.push(artifact("fig4_sym_max.csv", curve_csv(&max)));
            artifacts.push(artifact("fig4_sym_min.csv", curve_csv(&min)));
            artifacts.push(artifact("fig4_c_qtilde_max.csv", curve_csv(&qc)));
            let ids = [CurveId::LocalMax, CurveId::CNonlocalMax, CurveId::LdPrMax, CurveId::QcMax, CurveId::BellPrMin];
            artifacts.push(artifact("fig4_analytic.csv", analytic_csv(&ids, 200)?));
            let summary = files(&artifacts);
            Ok(RecipeOutput { artifacts, summary })
        }
        Figure::Fig5 => {
            let quantum = sample(scale(full, 100_000, 5_000_000), seed);
            let vertices = [Named::Sc.behavior(), bell_behavior(), Named::Pr.behavior()];
            let mixtures = sample_mixtures(&vertices, scale(full, 10_000, 100_000), seed.wrapping_add(1));
            artifacts.push(artifact("fig5_quantum.csv", points_csv(&quantum, false)));
            artifacts.push(artifact("fig5_mixtures.csv", points_csv(&mixtures, true)));
            artifacts.push(artifact("fig5_qc_max.csv", analytic_csv(&[CurveId::QcMax], 200)?));
            let summary = files(&artifacts);
            Ok(RecipeOutput { artifacts, summary })
        }
        Figure::Fig6 => {
            let r = opts.restarts.unwrap_or(10);
            let n = scale(full, 2000, 5000);
            let curve = run_scan(SetKind::Ns, Mode::Min, (2.5, 3.1), n, r, seed)?;
            let profile = concavity_profile(&curve, INFLECTION_K)?;
            let ds = 0.6 / (n - 1) as f64;
            let estimate = locate_inflection(&profile, ds, INFLECTION_K)?;
            artifacts.push(artifact("fig6_ns_min.csv", curve_csv(&curve)));
            artifacts.push(artifact(
                "fig6_profile.csv",
                csv_bytes(&["s", "det"], profile.iter().map(|o| vec![f17(o.s), f17(o.det)])),
            ));
            artifacts.push(artifact("fig6_inflection.json", json_bytes(&estimate)));
            Ok(RecipeOutput { artifacts, summary: serde_json::to_value(estimate).expect("serializable") })
        }
        Figure::Fig7 => {
            let r = opts.restarts.unwrap_or(10);
            let curve = run_scan(SetKind::Sym, Mode::Min, (2.5, 3.1), scale(full, 2000, 5000), r, seed)?;
            let t = trajectory(&curve)?;
            let kinks: Vec<Kink> = trajectory_kinks(&t, KINK_WINDOW, KINK_FACTOR);
            artifacts.push(artifact("fig7_sym_min.csv", curve_csv(&curve)));
            artifacts.push(artifact("fig7_trajectory.csv", trajectory_csv(&t)));
            artifacts.push(artifact("fig7_kinks.json", json_bytes(&kinks)));
            Ok(RecipeOutput { artifacts, summary: serde_json::to_value(&kinks).expect("serializable") })
        }
    }
}

pub fn trajectory_csv(t: &nonsig::geometry::Trajectory) -> Vec<u8> {
    csv_bytes(
        &["s", "a0", "a1", "c00", "c01", "c11"],
        (0..t.len())
            .map(|i| vec![f17(t.s[i]), f17(t.a0[i]), f17(t.a1[i]), f17(t.c00[i]), f17(t.c01[i]), f17(t.c11[i])]),
    )
}
