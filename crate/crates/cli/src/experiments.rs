//! The five experiments. Each returns its per-case rows as CSV, a JSON summary
//! and the acceptance flags it can decide.

use std::f64::consts::PI;
use std::sync::Arc;

use anyhow::Result;
use cgo_core::almost_holo::{extension_coeffs, HoloExtension, PhaseExtension};
use cgo_core::asymptotics::{decay_slope, f_asym_with_poles};
use cgo_core::contour::{
    build_contour_with_poles, contour_nodes_for_accuracy, decompose_on, gaussian_constant, DeformedContour,
};
use cgo_core::oracle::{boundary_nodes_for_accuracy, f_area, f_boundary};
use cgo_core::phase::{find_poles, PoleData, SpectralParam};
use cgo_core::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Experiment, Validated};
use crate::report::Flag;

/// Result of one experiment before it is written out.
pub struct Outcome {
    pub csv: Vec<u8>,
    pub summary: Value,
    pub flags: Vec<Flag>,
    pub failed_cases: usize,
}

pub fn run_experiment(v: &Validated) -> Result<Outcome> {
    match v.config.experiment {
        Experiment::Validate => validate(v),
        Experiment::Decompose => decompose(v),
        Experiment::Decay => decay(v),
        Experiment::AsymError => asym_error(v),
        Experiment::ContourCost => contour_cost(v),
    }
}

fn write_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

/// Cases in declared order: z-major, then increasing `|k|`.
fn case_grid(v: &Validated) -> Vec<(usize, usize)> {
    (0..v.z_points.len())
        .flat_map(|zi| (0..v.moduli.len()).map(move |ki| (zi, ki)))
        .collect()
}

fn k_of(v: &Validated, modulus: f64) -> Complex64 {
    Complex64::from_polar(modulus, v.config.k_sweep.arg)
}

/// Pole data and the unit-modulus extension, shared by every modulus of the sweep.
struct Ray {
    k: SpectralParam,
    poles: PoleData,
    ext: HoloExtension,
}

impl Ray {
    fn new(v: &Validated) -> Result<Self> {
        let k = SpectralParam::new(k_of(v, v.moduli[0]))?;
        let poles = find_poles(v.domain.boundary(), &k)?;
        let ext = extension_coeffs(&v.domain, &k, v.config.order)?;
        Ok(Self { k, poles, ext })
    }

    fn at(&self, modulus: f64) -> Result<(SpectralParam, Arc<dyn PhaseExtension>)> {
        Ok((self.k.with_modulus(modulus)?, Arc::new(self.ext.with_modulus(modulus))))
    }

    fn contour(&self, v: &Validated, modulus: f64) -> cgo_core::Result<DeformedContour> {
        let k = self.k.with_modulus(modulus)?;
        let ext: Arc<dyn PhaseExtension> = Arc::new(self.ext.with_modulus(modulus));
        build_contour_with_poles(&v.domain, &k, &self.poles, ext, &v.config.contour)
    }
}

fn error_text(e: impl std::fmt::Display) -> String {
    e.to_string()
}

#[derive(Serialize, Default)]
struct ValidateRow {
    z_re: f64,
    z_im: f64,
    modulus: f64,
    arg: f64,
    f_area_re: Option<f64>,
    f_area_im: Option<f64>,
    f_boundary_re: Option<f64>,
    f_boundary_im: Option<f64>,
    rel_diff: Option<f64>,
    area_nodes: Option<usize>,
    boundary_nodes: Option<usize>,
    error: String,
}

fn validate(v: &Validated) -> Result<Outcome> {
    let tol = v.config.tolerances;
    let rows: Vec<ValidateRow> = case_grid(v)
        .into_par_iter()
        .map(|(zi, ki)| {
            let (z, m) = (v.z_points[zi], v.moduli[ki]);
            let mut row = ValidateRow {
                z_re: z.re,
                z_im: z.im,
                modulus: m,
                arg: v.config.k_sweep.arg,
                ..Default::default()
            };
            let k = k_of(v, m);
            match (f_area(&v.domain, z, k, tol.area), f_boundary(&v.domain, z, k, tol.oracle)) {
                (Ok(a), Ok(b)) => {
                    row.f_area_re = Some(a.value.re);
                    row.f_area_im = Some(a.value.im);
                    row.f_boundary_re = Some(b.value.re);
                    row.f_boundary_im = Some(b.value.im);
                    row.rel_diff = Some((a.value - b.value).norm() / b.value.norm());
                    row.area_nodes = Some(a.nodes_used);
                    row.boundary_nodes = Some(b.nodes_used);
                }
                (Err(e), _) | (_, Err(e)) => row.error = error_text(e),
            }
            row
        })
        .collect();
    let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
    let worst = rows.iter().filter_map(|r| r.rel_diff).fold(0.0, f64::max);
    let threshold = v.config.thresholds.oracle_rel_diff;
    let flags = vec![Flag::new(
        "oracle_equivalence",
        failed == 0 && worst <= threshold,
        format!("max rel_diff {worst:.3e} <= {threshold:e}, {failed} failed cases"),
    )];
    Ok(Outcome {
        csv: write_csv(&rows)?,
        summary: json!({ "max_rel_diff": worst }),
        flags,
        failed_cases: failed,
    })
}

#[derive(Serialize, Default)]
struct DecomposeRow {
    z_re: f64,
    z_im: f64,
    modulus: f64,
    arg: f64,
    abs_term_gamma: Option<f64>,
    abs_term_jump_pm: Option<f64>,
    abs_term_plane: Option<f64>,
    abs_term_corr: Option<f64>,
    sum_re: Option<f64>,
    sum_im: Option<f64>,
    f_re: Option<f64>,
    f_im: Option<f64>,
    rel_error: Option<f64>,
    est_error: Option<f64>,
    nodes_gamma: Option<usize>,
    error: String,
}

fn decompose(v: &Validated) -> Result<Outcome> {
    let ray = Ray::new(v)?;
    let contours: Vec<cgo_core::Result<DeformedContour>> =
        v.moduli.par_iter().map(|&m| ray.contour(v, m)).collect();
    let rows: Vec<DecomposeRow> = case_grid(v)
        .into_par_iter()
        .map(|(zi, ki)| {
            let (z, m) = (v.z_points[zi], v.moduli[ki]);
            let mut row = DecomposeRow {
                z_re: z.re,
                z_im: z.im,
                modulus: m,
                arg: v.config.k_sweep.arg,
                ..Default::default()
            };
            let outcome = contours[ki].as_ref().map_err(Clone::clone).and_then(|contour| {
                let parts = decompose_on(&v.domain, contour, z)?;
                let exact = f_boundary(&v.domain, z, k_of(v, m), v.config.tolerances.oracle)?.value;
                Ok((parts, exact))
            });
            match outcome {
                Ok((parts, exact)) => {
                    let sum = parts.sum();
                    row.abs_term_gamma = Some(parts.term_gamma.norm());
                    row.abs_term_jump_pm = Some(parts.term_jump_pm.norm());
                    row.abs_term_plane = Some(parts.term_plane.norm());
                    row.abs_term_corr = Some(parts.term_corr.norm());
                    row.sum_re = Some(sum.re);
                    row.sum_im = Some(sum.im);
                    row.f_re = Some(exact.re);
                    row.f_im = Some(exact.im);
                    row.rel_error = Some((sum - exact).norm() / exact.norm());
                    row.est_error = Some(parts.est_error);
                    row.nodes_gamma = Some(parts.nodes_gamma);
                }
                Err(e) => row.error = error_text(e),
            }
            row
        })
        .collect();
    let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
    let worst = rows.iter().filter_map(|r| r.rel_error).fold(0.0, f64::max);
    let threshold = v.config.thresholds.identity_rel_error;
    let flags = vec![Flag::new(
        "four_term_identity",
        failed == 0 && worst <= threshold,
        format!("max rel_error {worst:.3e} <= {threshold:e}, {failed} failed cases"),
    )];
    Ok(Outcome {
        csv: write_csv(&rows)?,
        summary: json!({ "max_rel_error": worst }),
        flags,
        failed_cases: failed,
    })
}

#[derive(Serialize, Default)]
struct DecayRow {
    z_re: f64,
    z_im: f64,
    modulus: f64,
    arg: f64,
    inside: Option<bool>,
    f_re: Option<f64>,
    f_im: Option<f64>,
    abs_f: Option<f64>,
    /// `|f| |k| / pi`.
    jump_ratio: Option<f64>,
    error: String,
}

#[derive(Serialize)]
struct SlopeSummary {
    z: [f64; 2],
    inside: Option<bool>,
    slope: Option<f64>,
    residual: Option<f64>,
    error: Option<String>,
}

/// Slope per z point over the rows in declared order.
fn slopes_by_point(v: &Validated, samples: &[Option<f64>], inside: &[Option<bool>]) -> Vec<SlopeSummary> {
    let n = v.moduli.len();
    v.z_points
        .iter()
        .enumerate()
        .map(|(zi, z)| {
            let block = &samples[zi * n..(zi + 1) * n];
            let points: Option<Vec<(f64, f64)>> =
                v.moduli.iter().zip(block).map(|(m, s)| s.map(|s| (*m, s))).collect();
            let fit = points
                .ok_or_else(|| "missing samples".to_string())
                .and_then(|p| decay_slope(&p).map_err(error_text));
            SlopeSummary {
                z: [z.re, z.im],
                inside: inside[zi * n],
                slope: fit.as_ref().ok().map(|f| f.slope),
                residual: fit.as_ref().ok().map(|f| f.residual),
                error: fit.err(),
            }
        })
        .collect()
}

fn decay(v: &Validated) -> Result<Outcome> {
    let th = v.config.thresholds;
    let rows: Vec<DecayRow> = case_grid(v)
        .into_par_iter()
        .map(|(zi, ki)| {
            let (z, m) = (v.z_points[zi], v.moduli[ki]);
            let mut row = DecayRow {
                z_re: z.re,
                z_im: z.im,
                modulus: m,
                arg: v.config.k_sweep.arg,
                ..Default::default()
            };
            let outcome = v
                .domain
                .indicator(z)
                .and_then(|inside| Ok((inside, f_boundary(&v.domain, z, k_of(v, m), v.config.tolerances.oracle)?)));
            match outcome {
                Ok((inside, f)) => {
                    row.inside = Some(inside);
                    row.f_re = Some(f.value.re);
                    row.f_im = Some(f.value.im);
                    row.abs_f = Some(f.value.norm());
                    row.jump_ratio = Some(f.value.norm() * m / PI);
                }
                Err(e) => row.error = error_text(e),
            }
            row
        })
        .collect();
    let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
    let mags: Vec<Option<f64>> = rows.iter().map(|r| r.abs_f).collect();
    let inside: Vec<Option<bool>> = rows.iter().map(|r| r.inside).collect();
    let slopes = slopes_by_point(v, &mags, &inside);
    let slopes_ok = slopes.iter().all(|s| match (s.slope, s.inside) {
        (Some(slope), Some(true)) => (slope - th.decay_slope_inside).abs() <= th.decay_band_inside,
        (Some(slope), Some(false)) => (slope - th.decay_slope_outside).abs() <= th.decay_band_outside,
        _ => false,
    });
    let ratios: Vec<f64> = rows
        .iter()
        .filter(|r| r.inside == Some(true) && r.modulus >= th.jump_min_modulus)
        .filter_map(|r| r.jump_ratio)
        .collect();
    let ratio_min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio_max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ratios_ok = ratios.iter().all(|r| (th.jump_ratio_min..=th.jump_ratio_max).contains(r));
    let flags = vec![Flag::new(
        "decay_rates",
        failed == 0 && slopes_ok && ratios_ok,
        format!(
            "slopes within {} +- {} outside and {} +- {} inside: {slopes_ok}; |f||k|/pi in [{}, {}]: {ratios_ok}",
            th.decay_slope_outside, th.decay_band_outside, th.decay_slope_inside, th.decay_band_inside,
            th.jump_ratio_min, th.jump_ratio_max
        ),
    )];
    Ok(Outcome {
        csv: write_csv(&rows)?,
        summary: json!({
            "slopes": slopes,
            "jump_ratio_range": if ratios.is_empty() { Value::Null } else { json!([ratio_min, ratio_max]) },
        }),
        flags,
        failed_cases: failed,
    })
}

#[derive(Serialize, Default)]
struct AsymRow {
    z_re: f64,
    z_im: f64,
    modulus: f64,
    arg: f64,
    inside: Option<bool>,
    f_re: Option<f64>,
    f_im: Option<f64>,
    asym_re: Option<f64>,
    asym_im: Option<f64>,
    abs_pole_plus: Option<f64>,
    abs_pole_minus: Option<f64>,
    abs_jump: Option<f64>,
    abs_error: Option<f64>,
    rel_error: Option<f64>,
    error: String,
}

fn asym_error(v: &Validated) -> Result<Outcome> {
    let th = v.config.thresholds;
    let ray = Ray::new(v)?;
    let rows: Vec<AsymRow> = case_grid(v)
        .into_par_iter()
        .map(|(zi, ki)| {
            let (z, m) = (v.z_points[zi], v.moduli[ki]);
            let mut row = AsymRow {
                z_re: z.re,
                z_im: z.im,
                modulus: m,
                arg: v.config.k_sweep.arg,
                ..Default::default()
            };
            let outcome = ray.k.with_modulus(m).and_then(|k| {
                let inside = v.domain.indicator(z)?;
                let model = f_asym_with_poles(&v.domain, &ray.poles, z, &k)?;
                let exact = f_boundary(&v.domain, z, k.k(), v.config.tolerances.oracle)?.value;
                Ok((inside, model, exact))
            });
            match outcome {
                Ok((inside, model, exact)) => {
                    let err = (model.total - exact).norm();
                    row.inside = Some(inside);
                    row.f_re = Some(exact.re);
                    row.f_im = Some(exact.im);
                    row.asym_re = Some(model.total.re);
                    row.asym_im = Some(model.total.im);
                    row.abs_pole_plus = Some(model.pole_terms[0].norm());
                    row.abs_pole_minus = Some(model.pole_terms[1].norm());
                    row.abs_jump = Some(model.jump_term.norm());
                    row.abs_error = Some(err);
                    row.rel_error = Some(err / exact.norm());
                }
                Err(e) => row.error = error_text(e),
            }
            row
        })
        .collect();
    let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
    let errs: Vec<Option<f64>> = rows.iter().map(|r| r.abs_error).collect();
    let inside: Vec<Option<bool>> = rows.iter().map(|r| r.inside).collect();
    let slopes = slopes_by_point(v, &errs, &inside);
    let slopes_ok = slopes.iter().all(|s| match (s.slope, s.inside) {
        (Some(slope), Some(true)) => slope <= th.asym_slope_inside,
        (Some(slope), Some(false)) => slope <= th.asym_slope_outside,
        _ => false,
    });
    let flags = vec![Flag::new(
        "asymptotic_convergence_order",
        failed == 0 && slopes_ok,
        format!(
            "error slopes <= {} outside and <= {} inside: {slopes_ok}, {failed} failed cases",
            th.asym_slope_outside, th.asym_slope_inside
        ),
    )];
    Ok(Outcome {
        csv: write_csv(&rows)?,
        summary: json!({ "slopes": slopes }),
        flags,
        failed_cases: failed,
    })
}

#[derive(Serialize, Default)]
struct CostRow {
    z_re: f64,
    z_im: f64,
    modulus: f64,
    arg: f64,
    contour_nodes: Option<usize>,
    contour_density: Option<f64>,
    contour_rel_error: Option<f64>,
    boundary_nodes: Option<usize>,
    gaussian_constant: Option<f64>,
    error: String,
}

fn contour_cost(v: &Validated) -> Result<Outcome> {
    let th = v.config.thresholds;
    let ray = Ray::new(v)?;
    let gaussian: Vec<cgo_core::Result<f64>> = v
        .moduli
        .par_iter()
        .map(|&m| ray.contour(v, m).map(|c| gaussian_constant(&c).constant))
        .collect();
    let tol = v.config.tolerances.accuracy;
    let rows: Vec<CostRow> = case_grid(v)
        .into_par_iter()
        .map(|(zi, ki)| {
            let (z, m) = (v.z_points[zi], v.moduli[ki]);
            let mut row = CostRow {
                z_re: z.re,
                z_im: z.im,
                modulus: m,
                arg: v.config.k_sweep.arg,
                ..Default::default()
            };
            let outcome = ray.at(m).map_err(|e| e.to_string()).and_then(|(k, ext)| {
                let cost = contour_nodes_for_accuracy(&v.domain, &k, ext, &v.config.contour, z, tol)
                    .map_err(error_text)?;
                let trapezoid = boundary_nodes_for_accuracy(&v.domain, z, k.k(), tol).map_err(error_text)?;
                let c = gaussian[ki].clone().map_err(error_text)?;
                Ok((cost, trapezoid, c))
            });
            match outcome {
                Ok((cost, trapezoid, c)) => {
                    row.contour_nodes = Some(cost.nodes);
                    row.contour_density = Some(cost.density);
                    row.contour_rel_error = Some(cost.rel_error);
                    row.boundary_nodes = Some(trapezoid);
                    row.gaussian_constant = Some(c);
                }
                Err(e) => row.error = e,
            }
            row
        })
        .collect();
    let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
    let n = v.moduli.len();
    let growth: Vec<Value> = (0..v.z_points.len())
        .map(|zi| {
            let (first, last) = (&rows[zi * n], &rows[zi * n + n - 1]);
            let ratio = |a: Option<usize>, b: Option<usize>| a.zip(b).map(|(a, b)| b as f64 / a as f64);
            json!({
                "z": [v.z_points[zi].re, v.z_points[zi].im],
                "contour_growth": ratio(first.contour_nodes, last.contour_nodes),
                "boundary_growth": ratio(first.boundary_nodes, last.boundary_nodes),
            })
        })
        .collect();
    let growth_ok = growth.iter().all(|g| {
        let c = g["contour_growth"].as_f64();
        let b = g["boundary_growth"].as_f64();
        matches!((c, b), (Some(c), Some(b)) if c <= th.contour_growth && b >= th.boundary_growth)
    });
    let worst_contour = growth.iter().filter_map(|g| g["contour_growth"].as_f64()).fold(0.0, f64::max);
    let worst_boundary = growth
        .iter()
        .filter_map(|g| g["boundary_growth"].as_f64())
        .fold(f64::INFINITY, f64::min);
    let max_c = rows.iter().filter_map(|r| r.gaussian_constant).fold(0.0, f64::max);
    let flags = vec![
        Flag::new(
            "gaussian_concentration",
            failed == 0 && max_c <= th.gaussian_constant,
            format!("max C {max_c:.3} <= {}", th.gaussian_constant),
        ),
        Flag::new(
            "performance",
            failed == 0 && n >= 2 && growth_ok,
            format!(
                "contour node growth {worst_contour:.3} <= {} and boundary node growth {worst_boundary:.2} >= {} from |k| = {} to {}",
                th.contour_growth,
                th.boundary_growth,
                v.moduli[0],
                v.moduli[n - 1]
            ),
        ),
    ];
    Ok(Outcome {
        csv: write_csv(&rows)?,
        summary: json!({ "growth": growth, "max_gaussian_constant": max_c }),
        flags,
        failed_cases: failed,
    })
}
