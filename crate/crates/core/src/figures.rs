//! Closed-form data behind the equilibrium figures: κ† boundaries and level
//! curves on the simplex for L = 2, the diagonal slice across player counts,
//! and mean-variance maps for the conjugate models.

use serde::{Deserialize, Serialize};

use crate::conjugate::{gamma_upside, normal_upside, Family, GammaStat, NormalStat};
use crate::contour::{contour, rectangle_mesh, Polyline};
use crate::equilibrium::EquilibriumRule;
use crate::error::{Error, Result};
use crate::grid::SimplexGrid;
use crate::model::{Incentive, Payoffs};

/// Interior κ† levels traced besides the two boundaries.
pub const LEVELS: [f64; 4] = [0.2, 0.4, 0.6, 0.8];

/// Player counts on the diagonal-slice figure.
pub const SLICE_PLAYERS: [usize; 5] = [2, 4, 6, 8, 10];

/// One κ† level set, possibly in several pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub name: String,
    pub kappa: f64,
    /// Incentive level I at which κ† equals `kappa`.
    pub incentive: f64,
    /// κ† = 0 or κ† = 1 boundary rather than an interior level.
    pub boundary: bool,
    pub polylines: Vec<Polyline>,
}

fn curve_specs(rule: EquilibriumRule) -> Vec<(String, f64, bool)> {
    let mut out = vec![("kappa0".to_string(), 0.0, true), ("kappa1".to_string(), 1.0, true)];
    if rule.n_players > 1 {
        out.extend(LEVELS.iter().map(|&c| (format!("kappa{c}"), c, false)));
    }
    out
}

/// Level sets of κ† over the simplex for L = 2, in (π₁, π₂) coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexFigure {
    pub mu: Vec<f64>,
    pub safe_payoff: f64,
    pub rule: EquilibriumRule,
    pub resolution: usize,
    pub curves: Vec<Curve>,
}

fn full2(p: [f64; 2]) -> [f64; 3] {
    [1.0 - p[0] - p[1], p[0], p[1]]
}

/// (f − s) − c(s − m): continuous, and zero exactly where I = c.
fn incentive_gap(payoffs: &Payoffs, full: &[f64], c: f64) -> f64 {
    let mut upside = 0.0;
    let mut s_minus_m = 0.0;
    for (p, &mu) in full.iter().zip(&payoffs.mu) {
        upside += p * (mu - payoffs.safe).max(0.0);
        s_minus_m += p * (payoffs.safe - mu);
    }
    upside - c * s_minus_m
}

pub fn simplex_figure(payoffs: &Payoffs, rule: EquilibriumRule, resolution: usize) -> Result<SimplexFigure> {
    if payoffs.dim() != 2 {
        return Err(Error::invalid("states", "the simplex figures need L = 2"));
    }
    let grid = SimplexGrid::new(2, resolution)?;
    let verts: Vec<[f64; 2]> = (0..grid.len())
        .map(|n| {
            let c = grid.coords(n);
            [c[0], c[1]]
        })
        .collect();
    let tris = grid.triangles();
    let curves = curve_specs(rule)
        .into_iter()
        .map(|(name, kappa, boundary)| {
            let incentive = rule.incentive_for_action(kappa);
            let polylines = contour(&verts, &tris, |p| incentive_gap(payoffs, &full2(p), incentive));
            Curve {
                name,
                kappa,
                incentive,
                boundary,
                polylines,
            }
        })
        .collect();
    Ok(SimplexFigure {
        mu: payoffs.mu.clone(),
        safe_payoff: payoffs.safe,
        rule,
        resolution,
        curves,
    })
}

/// κ† along π₁ = π₂ = p for p ∈ [0, ½] at one player count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub n_players: usize,
    /// (p, κ†) samples.
    pub points: Vec<[f64; 2]>,
    /// Largest p with κ† = 0, if κ† = 0 somewhere on the slice.
    pub zero_threshold: Option<f64>,
    /// Smallest p with κ† = 1, if reached on the slice.
    pub one_threshold: Option<f64>,
}

fn diagonal(p: f64) -> [f64; 3] {
    [1.0 - 2.0 * p, p, p]
}

/// Root of g on [0, ½] where g is non-decreasing in p; `None` if g keeps one sign.
fn diagonal_root(g: impl Fn(f64) -> f64) -> Option<f64> {
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    if g(lo) >= 0.0 || g(hi) < 0.0 {
        return None;
    }
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

pub fn diagonal_slices(payoffs: &Payoffs, k0: f64, players: &[usize], samples: usize) -> Result<Vec<Slice>> {
    if payoffs.dim() != 2 {
        return Err(Error::invalid("states", "the diagonal slice needs L = 2"));
    }
    if samples < 2 {
        return Err(Error::invalid("samples", "need at least 2 samples"));
    }
    players
        .iter()
        .map(|&n| {
            let rule = EquilibriumRule::new(k0, n)?;
            let points = (0..samples)
                .map(|j| {
                    let p = 0.5 * j as f64 / (samples - 1) as f64;
                    [p, rule.action(payoffs.incentive_full(&diagonal(p)))]
                })
                .collect();
            let root = |c: f64| diagonal_root(|p| incentive_gap(payoffs, &diagonal(p), rule.incentive_for_action(c)));
            Ok(Slice {
                n_players: n,
                points,
                zero_threshold: root(0.0),
                one_threshold: root(1.0),
            })
        })
        .collect()
}

/// κ† over a (mean, variance) rectangle for a conjugate family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugateFigure {
    pub family: Family,
    pub safe_payoff: f64,
    pub rule: EquilibriumRule,
    pub mean_range: [f64; 2],
    pub variance_range: [f64; 2],
    pub resolution: usize,
    /// (mean, variance, κ†) at every mesh vertex.
    pub grid: Vec<[f64; 3]>,
    pub curves: Vec<Curve>,
}

/// (f − s) and (s − m) at a (mean, variance) point.
fn conjugate_gaps(family: Family, mean: f64, variance: f64, s: f64) -> (f64, f64) {
    match family {
        Family::Normal => {
            let st = NormalStat {
                m: mean,
                tau: 1.0 / variance,
            };
            (normal_upside(&st, s), s - mean)
        }
        Family::Gamma => {
            let alpha = mean * mean / variance;
            let st = GammaStat {
                alpha,
                beta: alpha / mean,
            };
            (gamma_upside(&st, s), s - mean)
        }
    }
}

pub fn conjugate_figure(
    family: Family,
    safe_payoff: f64,
    rule: EquilibriumRule,
    mean_range: [f64; 2],
    variance_range: [f64; 2],
    resolution: usize,
) -> Result<ConjugateFigure> {
    if !(safe_payoff.is_finite() && (family == Family::Normal || safe_payoff > 0.0)) {
        return Err(Error::invalid("s", format!("invalid safe payoff {safe_payoff}")));
    }
    let lo_mean = if family == Family::Gamma { 0.0 } else { f64::NEG_INFINITY };
    if !(mean_range[0] > lo_mean && mean_range[0] < mean_range[1] && mean_range[1].is_finite()) {
        return Err(Error::invalid("mean_range", format!("invalid range {mean_range:?}")));
    }
    if !(variance_range[0] > 0.0 && variance_range[0] < variance_range[1] && variance_range[1].is_finite()) {
        return Err(Error::invalid("variance_range", format!("invalid range {variance_range:?}")));
    }
    if resolution < 2 {
        return Err(Error::invalid("grid", "resolution must be >= 2"));
    }
    let (verts, tris) = rectangle_mesh(mean_range, variance_range, resolution, resolution);
    let grid = verts
        .iter()
        .map(|&[m, v]| {
            let (up, gap) = conjugate_gaps(family, m, v, safe_payoff);
            [m, v, rule.action(Incentive::from_gaps(up, gap))]
        })
        .collect();
    let curves = curve_specs(rule)
        .into_iter()
        .map(|(name, kappa, boundary)| {
            let incentive = rule.incentive_for_action(kappa);
            let polylines = contour(&verts, &tris, |[m, v]| {
                let (up, gap) = conjugate_gaps(family, m, v, safe_payoff);
                up - incentive * gap
            });
            Curve {
                name,
                kappa,
                incentive,
                boundary,
                polylines,
            }
        })
        .collect();
    Ok(ConjugateFigure {
        family,
        safe_payoff,
        rule,
        mean_range,
        variance_range,
        resolution,
        grid,
        curves,
    })
}

// ── CSV output ──────────────────────────────────────────────────────────

fn fmt(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x}")
    }
}

fn to_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Column order of simplex curve files.
pub const SIMPLEX_COLUMNS: [&str; 6] = ["segment", "pi0", "pi1", "pi2", "incentive", "kappa"];
/// Column order of diagonal-slice files.
pub const SLICE_COLUMNS: [&str; 2] = ["p", "kappa"];
/// Column order of conjugate curve files.
pub const CONJUGATE_CURVE_COLUMNS: [&str; 5] = ["segment", "mean", "variance", "incentive", "kappa"];
/// Column order of conjugate grid files.
pub const CONJUGATE_GRID_COLUMNS: [&str; 3] = ["mean", "variance", "kappa"];

impl SimplexFigure {
    /// One (file name, CSV text) pair per curve.
    pub fn csv_files(&self, prefix: &str) -> Result<Vec<(String, String)>> {
        let payoffs = &Payoffs::new(self.mu.clone(), self.safe_payoff)?;
        self.curves
            .iter()
            .map(|c| {
                let rows = c.polylines.iter().enumerate().flat_map(|(seg, line)| {
                    line.points.iter().map(move |&p| {
                        let full = full2(p);
                        let i = payoffs.incentive_full(&full);
                        vec![
                            seg.to_string(),
                            fmt(full[0]),
                            fmt(full[1]),
                            fmt(full[2]),
                            fmt(i.as_f64()),
                            fmt(self.rule.action(i)),
                        ]
                    })
                });
                Ok((format!("{prefix}_{}.csv", c.name), to_csv(&SIMPLEX_COLUMNS, rows)?))
            })
            .collect()
    }
}

pub fn slice_csv_files(slices: &[Slice], prefix: &str) -> Result<Vec<(String, String)>> {
    slices
        .iter()
        .map(|s| {
            let rows = s.points.iter().map(|p| vec![fmt(p[0]), fmt(p[1])]);
            Ok((format!("{prefix}_n{}.csv", s.n_players), to_csv(&SLICE_COLUMNS, rows)?))
        })
        .collect()
}

impl ConjugateFigure {
    /// The grid file followed by one file per curve.
    pub fn csv_files(&self, prefix: &str) -> Result<Vec<(String, String)>> {
        let mut out = vec![(
            format!("{prefix}_grid.csv"),
            to_csv(
                &CONJUGATE_GRID_COLUMNS,
                self.grid.iter().map(|g| g.iter().map(|&x| fmt(x)).collect()),
            )?,
        )];
        for c in &self.curves {
            let rows = c.polylines.iter().enumerate().flat_map(|(seg, line)| {
                line.points.iter().map(move |&[m, v]| {
                    let (up, gap) = conjugate_gaps(self.family, m, v, self.safe_payoff);
                    let i = Incentive::from_gaps(up, gap);
                    vec![
                        seg.to_string(),
                        fmt(m),
                        fmt(v),
                        fmt(i.as_f64()),
                        fmt(self.rule.action(i)),
                    ]
                })
            });
            out.push((format!("{prefix}_{}.csv", c.name), to_csv(&CONJUGATE_CURVE_COLUMNS, rows)?));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn payoffs(s: f64) -> Payoffs {
        Payoffs::new(vec![2.0, 5.0, 8.0], s).unwrap()
    }

    #[test]
    fn simplex_contours_hit_their_levels() {
        let rule = EquilibriumRule::new(0.2, 4).unwrap();
        let fig = simplex_figure(&payoffs(6.0), rule, 50).unwrap();
        assert_eq!(fig.curves.len(), 6);
        for c in &fig.curves {
            assert!(!c.polylines.is_empty(), "{}", c.name);
            for p in c.polylines.iter().flat_map(|l| &l.points) {
                let i = payoffs(6.0).incentive_full(&full2(*p)).as_f64();
                assert!((i - c.incentive).abs() < 1e-6, "{} {i}", c.name);
            }
        }
    }

    #[test]
    fn zero_threshold_does_not_depend_on_players() {
        let s = diagonal_slices(&payoffs(6.0), 0.2, &SLICE_PLAYERS, 101).unwrap();
        let t0 = s[0].zero_threshold.unwrap();
        assert!(s.iter().all(|x| x.zero_threshold == Some(t0)));
    }

    #[test]
    fn conjugate_boundaries_exist() {
        let rule = EquilibriumRule::new(0.2, 4).unwrap();
        for fam in [Family::Normal, Family::Gamma] {
            let fig = conjugate_figure(fam, 6.0, rule, [0.05, 6.0], [0.05, 10.0], 40).unwrap();
            assert!(fig.curves.iter().filter(|c| c.boundary).all(|c| !c.polylines.is_empty()));
            let files = fig.csv_files("fig").unwrap();
            assert_eq!(files.len(), 7);
            assert!(files[1].1.starts_with("segment,mean,variance,incentive,kappa"));
        }
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let p = Payoffs::new(vec![0.0, 2.0], 1.0).unwrap();
        let rule = EquilibriumRule::new(0.2, 4).unwrap();
        assert!(simplex_figure(&p, rule, 10).unwrap_err().is_validation());
    }
}
