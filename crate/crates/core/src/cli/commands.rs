//! One runner per subcommand, each producing a [`Table`] in user units.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::compose::{averaged_transmittance_center_fluct, FluctuationSetup, HeightDistribution, LossModel};
use crate::error::{Error, Result};
use crate::ode::Tolerances;
use crate::oracle::solve_exact;
use crate::potential::{build_rect_pair, Potential};
use crate::resonance::{
    find_resonant_e, find_resonant_l, join_with_gap, rect_pair_resonant_l, resonance_density, search_rect_pair_l,
    search_resonant_gaps, PairChain,
};
use crate::riccati::{integrate_alpha_form, integrate_complex, integrate_real, RiccatiOptions};
use crate::spectra::{bound_levels, compression_scan, level_scan};

use super::config::{
    Config, DistKind, MeanSpec, PotentialSpec, RectCase, ResonanceSection, RiccatiForm, SegmentKind, Units,
};
use super::{Cell, Table};

fn missing(section: &str) -> Error {
    Error::Config(format!("missing [{section}] section"))
}

fn potential_spec(cfg: &Config) -> Result<&PotentialSpec> {
    cfg.potential.as_ref().ok_or_else(|| missing("potential"))
}

/// Library diagnostics quote internal units (angstrom, 3.81 eV).
fn solver_note(s: impl AsRef<str>) -> String {
    format!("solver (natural units): {}", s.as_ref())
}

fn num(v: f64) -> Cell {
    Cell::Num(v)
}

pub fn transmit(cfg: &Config, u: &Units) -> Result<Table> {
    let sec = cfg.transmit.as_ref().ok_or_else(|| missing("transmit"))?;
    let spec = potential_spec(cfg)?;
    let base = spec.build(u)?;
    let energies = sec.energy.values("transmit.energy")?;
    let gaps: Vec<Option<f64>> = match (sec.gap_segment, &sec.gap) {
        (Some(i), _) if i >= spec.segment.len() => {
            return Err(Error::Config(format!(
                "transmit.gap_segment {i} out of range for {} segments",
                spec.segment.len()
            )))
        }
        (Some(_), Some(g)) => {
            let v = g.values("transmit.gap")?;
            if v.iter().any(|&l| l < 0.0) {
                return Err(Error::Config("transmit.gap values must be >= 0".into()));
            }
            v.into_iter().map(Some).collect()
        }
        (Some(i), None) => vec![Some(spec.segment[i].width)],
        (None, Some(_)) => return Err(Error::Config("transmit.gap needs transmit.gap_segment".into())),
        (None, None) => vec![None],
    };
    let with_gap = |l: Option<f64>| -> Result<Potential> {
        let (Some(l), Some(i)) = (l, sec.gap_segment) else {
            return Ok(base.clone());
        };
        let mut p = base.clone();
        if l == 0.0 {
            p.segments.remove(i);
        } else {
            p.segments[i].width = u.l_in(l);
        }
        Ok(p)
    };
    let potentials = gaps.iter().map(|&l| with_gap(l)).collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, f64)> = (0..gaps.len())
        .flat_map(|g| energies.iter().map(move |&e| (g, e)))
        .collect();
    let rows: Vec<(Vec<Cell>, bool)> = jobs
        .par_iter()
        .map(|&(g, e)| {
            let p = &potentials[g];
            let l = gaps[g].unwrap_or_else(|| u.l_out(p.extent()));
            match solve_exact(p, u.e_in(e)) {
                Ok(s) => {
                    let t = s.t_left_edge();
                    let row = vec![
                        num(e),
                        num(l),
                        num(s.transmittance()),
                        num(t.re),
                        num(t.im),
                        num(s.r.re),
                        num(s.r.im),
                        Cell::Text("ok".into()),
                    ];
                    (row, true)
                }
                Err(err) => {
                    let mut row = vec![num(e), num(l)];
                    row.extend(std::iter::repeat_n(num(f64::NAN), 5));
                    row.push(Cell::Text(err.to_string()));
                    (row, false)
                }
            }
        })
        .collect();
    let failures = rows.iter().filter(|r| !r.1).count();
    let mut notes = vec!["T is referenced at the left edge; D = (k_right/k_left)|T|^2".to_owned()];
    if sec.gap_segment.is_none() {
        notes.push("L is the total extent of the potential".into());
    }
    Ok(Table {
        columns: vec!["E", "L", "D", "ReT", "ImT", "ReR", "ImR", "status"],
        rows: rows.into_iter().map(|r| r.0).collect(),
        notes,
        failures,
    })
}

const RESONANCE_COLUMNS: [&str; 8] = ["E_or_L", "D", "family_index", "n", "L_closed", "L_search", "delta", "L_reference"];

/// Rows pairing closed-form members with the nearest search hit; search
/// hits left over get rows of their own.
fn pair_rows(
    family: usize,
    closed: &[(i64, f64)],
    search: &[f64],
    reference: Option<f64>,
    d_at: &(dyn Fn(f64) -> Result<f64> + Sync),
    half_period: f64,
) -> Result<Vec<Vec<Cell>>> {
    let mut used = vec![false; search.len()];
    let mut rows = Vec::new();
    for (j, &(n, lc)) in closed.iter().enumerate() {
        let nearest = search
            .iter()
            .enumerate()
            .filter(|(_, &ls)| (ls - lc).abs() < half_period)
            .min_by(|a, b| (a.1 - lc).abs().total_cmp(&(b.1 - lc).abs()));
        let (ls, delta) = match nearest {
            Some((k, &ls)) => {
                used[k] = true;
                (num(ls), num(ls - lc))
            }
            None => (Cell::Empty, Cell::Empty),
        };
        let d = d_at(match ls {
            Cell::Num(v) => v,
            _ => lc,
        })?;
        rows.push(vec![
            num(lc),
            num(d),
            Cell::Int(family as i64),
            Cell::Int(n),
            num(lc),
            ls,
            delta,
            if j == 0 { reference.map_or(Cell::Empty, num) } else { Cell::Empty },
        ]);
    }
    for (&ls, _) in search.iter().zip(&used).filter(|(_, u)| !**u) {
        rows.push(vec![
            num(ls),
            num(d_at(ls)?),
            Cell::Int(family as i64),
            Cell::Empty,
            Cell::Empty,
            num(ls),
            Cell::Empty,
            Cell::Empty,
        ]);
    }
    Ok(rows)
}

fn rect_case_rows(i: usize, case: &RectCase, l_max: f64, u: &Units, notes: &mut Vec<String>) -> Result<Vec<Vec<Cell>>> {
    let (h, a, e) = (u.e_in(case.height), u.l_in(case.width), u.e_in(case.energy));
    let l_max_in = u.l_in(l_max);
    let n0 = if e < 0.5 * h { 1 } else { 0 };
    let mut closed = Vec::new();
    let mut n = n0;
    loop {
        match rect_pair_resonant_l(h, a, e, n) {
            Ok(l) if l <= l_max_in => closed.push((n, u.l_out(l))),
            Ok(_) => break,
            Err(Error::NoResonance(why)) => {
                notes.push(format!("case {i}: no closed-form family ({why})"));
                break;
            }
            Err(err) => return Err(err),
        }
        n += 1;
    }
    let search: Vec<f64> = search_rect_pair_l(h, a, e, l_max_in)?.into_iter().map(|l| u.l_out(l)).collect();
    let d_at = |l: f64| Ok(solve_exact(&build_rect_pair(h, a, u.l_in(l))?, e)?.transmittance());
    let half_period = 0.5 * u.l_out(std::f64::consts::PI / e.sqrt());
    pair_rows(i, &closed, &search, case.reference, &d_at, half_period)
}

pub fn resonance(cfg: &Config, u: &Units) -> Result<Table> {
    let sec = cfg.resonance.as_ref().ok_or_else(|| missing("resonance"))?;
    let mut notes = Vec::new();
    let mut columns = RESONANCE_COLUMNS.to_vec();
    let rows = match sec {
        ResonanceSection::RectPair { cases, l_max } => {
            notes.push("L_closed from the closed-form phase condition, L_search from the oracle D = 1 search".into());
            let mut rows = Vec::new();
            for (i, case) in cases.iter().enumerate() {
                rows.extend(rect_case_rows(i, case, *l_max, u, &mut notes)?);
            }
            rows
        }
        ResonanceSection::Gap {
            gap_segment,
            energy,
            l_min,
            l_max,
            grid,
        } => {
            let spec = potential_spec(cfg)?;
            let i = *gap_segment;
            if i >= spec.segment.len() || spec.segment[i].kind != SegmentKind::Gap {
                return Err(Error::Config(format!("resonance.gap_segment {i} must name a `gap` segment")));
            }
            let left = spec.build_range(u, 0..i)?.with_media(u.e_in(spec.left_level), 0.0);
            let right = spec.build_range(u, i + 1..spec.segment.len())?.with_media(0.0, u.e_in(spec.right_level));
            let e = u.e_in(*energy);
            let (lo, hi) = (u.l_in(*l_min), u.l_in(*l_max));
            let family = find_resonant_l(&solve_exact(&left, e)?, &solve_exact(&right, e)?, e, lo, hi)?;
            if let Some(why) = &family.diagnostic {
                notes.push(format!("empty family: {why}"));
            }
            let closed: Vec<(i64, f64)> = family.members().into_iter().map(|(n, l)| (n, u.l_out(l))).collect();
            let search: Vec<f64> = search_resonant_gaps(&left, &right, e, lo, hi, *grid)?
                .into_iter()
                .map(|l| u.l_out(l))
                .collect();
            let d_at = |l: f64| Ok(solve_exact(&join_with_gap(&left, u.l_in(l), &right)?, e)?.transmittance());
            pair_rows(0, &closed, &search, None, &d_at, 0.5 * u.l_out(family.period))?
        }
        ResonanceSection::Energy { e_min, e_max, grid } => {
            let p = potential_spec(cfg)?.build(u)?;
            find_resonant_e(&p, u.e_in(*e_min), u.e_in(*e_max), *grid)?
                .into_iter()
                .enumerate()
                .map(|(j, e)| {
                    let d = solve_exact(&p, e)?.transmittance();
                    let mut row = vec![num(u.e_out(e)), num(d), Cell::Int(0), Cell::Int(j as i64)];
                    row.extend(std::iter::repeat_n(Cell::Empty, 4));
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()?
        }
        ResonanceSection::Density {
            height,
            width,
            intra_gap,
            inter_gap,
            n,
            e_min,
            e_max,
            grid,
        } => {
            let chain = PairChain {
                height: u.e_in(*height),
                width: u.l_in(*width),
                intra_gap: u.l_in(*intra_gap),
                inter_gap: u.l_in(*inter_gap),
            };
            columns = vec!["N", "peaks", "min_spacing", "warning"];
            resonance_density(&chain, n, u.e_in(*e_min), u.e_in(*e_max), *grid)?
                .into_iter()
                .map(|r| {
                    vec![
                        Cell::Int(r.n as i64),
                        Cell::Int(r.peaks.len() as i64),
                        r.min_spacing.map_or(Cell::Empty, |s| num(u.e_out(s))),
                        r.warning.map_or(Cell::Empty, Cell::Text),
                    ]
                })
                .collect()
        }
    };
    Ok(Table {
        columns,
        rows,
        notes,
        failures: 0,
    })
}

pub fn riccati(cfg: &Config, u: &Units, tol: Option<f64>) -> Result<Table> {
    let sec = cfg.riccati.as_ref().ok_or_else(|| missing("riccati"))?;
    let p = potential_spec(cfg)?.build(u)?;
    let mut opts = RiccatiOptions::default();
    if let Some(t) = tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Config(format!("tolerance must be in (0, 1), got {t}")));
        }
        opts.tol = Tolerances {
            rtol: t,
            atol: 1e-2 * t,
            ..opts.tol
        };
    }
    if let Some(m) = sec.max_step {
        opts.tol.max_step = u.l_in(m);
    }
    if let Some(s) = sec.switch_rho {
        opts.switch_rho = s;
    }
    if let Some(l) = &sec.loss {
        opts.loss = LossModel {
            w: Complex64::new(u.inv_l_in(l.w[0]), u.inv_l_in(l.w[1])),
            w_prime: Complex64::new(u.inv_l_in(l.w_prime[0]), u.inv_l_in(l.w_prime[1])),
        };
    }
    let e = u.e_in(sec.energy);
    let sol = match sec.form {
        RiccatiForm::Complex => integrate_complex(&p, e, &opts),
        RiccatiForm::Real => integrate_real(&p, e, &opts),
        RiccatiForm::Alpha => integrate_alpha_form(&p, e, &opts),
    }?;
    let s = &sol.scatter;
    let mut notes = vec![
        format!("D = {}", s.transmittance()),
        format!("R = {:e} {:+e}i", s.r.re, s.r.im),
        format!("absorbed = {:e}", s.loss),
        format!("extrema of rho = {}", sol.extrema.len()),
    ];
    if let Some(r) = sol.reversal_residual {
        notes.push(format!("reversal residual = {r:e}"));
    }
    let rows = sol
        .points
        .iter()
        .map(|q| {
            vec![
                num(u.l_out(q.x)),
                num(q.rho),
                num(q.phi_rev),
                num(q.phi),
                num(q.delta),
                num(q.t.re),
                num(q.t.im),
            ]
        })
        .collect();
    Ok(Table {
        columns: vec!["x", "rho", "phi_rev", "phi", "delta", "ReT", "ImT"],
        rows,
        notes,
        failures: 0,
    })
}

pub fn wells(cfg: &Config, u: &Units) -> Result<Table> {
    let sec = cfg.wells.as_ref().ok_or_else(|| missing("wells"))?;
    let ws = sec.build(u)?;
    let mut notes = vec!["energy is the binding energy below the barrier level".to_owned()];
    let rows = match &sec.scan {
        None => {
            let set = bound_levels(&ws, sec.grid)?;
            notes.extend(set.warnings.iter().map(solver_note));
            set.levels
                .iter()
                .enumerate()
                .map(|(i, &e)| {
                    vec![
                        Cell::Empty,
                        Cell::Int(i as i64),
                        num(u.e_out(e)),
                        Cell::Text("none".into()),
                    ]
                })
                .collect()
        }
        Some(scan) => {
            let out = level_scan(&ws, &scan.barriers, u.l_in(scan.from), u.l_in(scan.to), scan.steps, sec.grid)?;
            notes.extend(out.warnings.iter().map(solver_note));
            for (v, why) in &out.ambiguities {
                notes.push(solver_note(format!("ambiguous tracking at {v}: {why}")));
            }
            if let Some(s) = out.relative_shift() {
                notes.push(format!("relative shift = {s}"));
            }
            out.steps
                .iter()
                .flat_map(|step| {
                    step.levels.iter().map(|l| {
                        vec![
                            num(u.l_out(step.value)),
                            Cell::Int(l.id as i64),
                            num(u.e_out(l.energy)),
                            Cell::Text(l.event.as_str().into()),
                        ]
                    })
                })
                .collect()
        }
    };
    Ok(Table {
        columns: vec!["scan_value", "level_index", "energy", "event"],
        rows,
        notes,
        failures: 0,
    })
}

pub fn bands(cfg: &Config, u: &Units) -> Result<Table> {
    let sec = cfg.bands.as_ref().ok_or_else(|| missing("bands"))?;
    let cell = potential_spec(cfg)?.build(u)?;
    let scan = compression_scan(&cell, &sec.factors, u.e_in(sec.e_min), u.e_in(sec.e_max), sec.grid)?;
    let mut notes = Vec::new();
    let mut rows = Vec::new();
    for (f, set) in &scan {
        for (i, b) in set.bands.iter().enumerate() {
            if b.clipped {
                notes.push(format!("factor {f}: band {i} is clipped by the energy window"));
            }
            rows.push(vec![num(*f), Cell::Int(i as i64), num(u.e_out(b.lo)), num(u.e_out(b.hi))]);
        }
    }
    Ok(Table {
        columns: vec!["factor", "band_index", "E_lo", "E_hi"],
        rows,
        notes,
        failures: 0,
    })
}

pub fn ensemble(cfg: &Config, u: &Units, seed: u64) -> Result<Table> {
    let sec = cfg.ensemble.as_ref().ok_or_else(|| missing("ensemble"))?;
    let setup = FluctuationSetup {
        left: sec.left.build(u)?,
        right: sec.right.build(u)?,
        center_width: u.l_in(sec.center_width),
        energy: u.e_in(sec.energy),
    };
    let d = &sec.distribution;
    let mean = match &d.mean {
        MeanSpec::Value(v) => u.e_in(*v),
        MeanSpec::Named(s) if s == "optimal" => {
            let [lo, hi] = d
                .search
                .ok_or_else(|| Error::Config("mean = \"optimal\" needs distribution.search = [lo, hi]".into()))?;
            setup.most_transparent_height(u.e_in(lo), u.e_in(hi))?.0
        }
        MeanSpec::Named(s) => return Err(Error::Config(format!("unknown mean {s:?}; use a number or \"optimal\""))),
    };
    let spread = |v: f64| if d.relative { v * mean } else { u.e_in(v) };
    let dist = match d.kind {
        DistKind::Fixed => HeightDistribution::Fixed(mean),
        DistKind::Uniform => HeightDistribution::Uniform {
            mean,
            half_width: spread(d.half_width),
        },
        DistKind::Normal => HeightDistribution::Normal {
            mean,
            std_dev: spread(d.std_dev),
        },
    };
    let est = averaged_transmittance_center_fluct(&setup, &dist, sec.samples, seed)?;
    Ok(Table {
        columns: vec!["mean", "SE", "half_width", "D_mean_height", "z", "samples", "mean_height"],
        rows: vec![vec![
            num(est.mean),
            num(est.std_error),
            num(est.half_width),
            num(est.d_at_mean),
            num(est.significance()),
            Cell::Int(est.samples as i64),
            num(u.e_out(mean)),
        ]],
        notes: vec![format!("seed = {seed}"), "z = (D_mean_height - mean) / SE".into()],
        failures: 0,
    })
}
