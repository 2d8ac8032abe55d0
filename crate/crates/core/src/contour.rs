//! Steepest-descent deformation of the boundary and the deformed
//! representation of `f`.
//!
//! The contour is `w = gamma(t) + i s_c(t) gamma'(t)`. On the arc `Gamma+`
//! (from `w-` to `w+`) it is pushed inside (`s_c > 0`), on `Gamma-` outside.
//! Within a patch around each pole it follows the level set
//! `Re u = u(pole)` through the saddle, where `u - u(pole)` is negative
//! imaginary and the integrand is a real Gaussian; away from the poles it
//! sits at depth `+-delta`. A degree-7 smoothstep joins the two.
//!
//! Stokes' formula on the swept regions `Omega+-` turns the boundary form of
//! `f` into
//!
//! ```text
//! f = F_Gamma / (2i conj k)
//!   + (pi / conj k) e^{-i u(z)} (1_{Omega-}(z) - 1_{Omega+}(z))
//!   + (pi / conj k) e^{-i u0(z)} 1_Omega(z)
//!   + (i / conj k) \int (1_{Omega-} - 1_{Omega+}) d_wbar(u) e^{-iu} / (z - w) dA.
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::almost_holo::{band_half_width, extension_coeffs, PhaseExtension, DEFAULT_ORDER};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryCurve, ConvexDomain};
use crate::oracle::{plane_term, QuadResult};
use crate::phase::{find_poles, split_boundary, PoleData, SpectralParam};
use crate::quadrature::{composite, geometric_breaks, legendre_tail, GaussRule};

/// Default plateau depth as a fraction of the extension band half-width.
pub const DEPTH_FRACTION: f64 = 0.4;
/// Panel width near a pole, in units of `|k|^{-1/2}`.
const FLOOR_WIDTH: f64 = 1.0;
/// Growth of the panel width with the distance to the nearest pole.
const WIDTH_GROWTH: f64 = 0.5;
const MAX_WIDTH: f64 = 0.5;
/// Largest phase change `|du/dt| h` allowed on one panel at unit density.
const PHASE_PER_PANEL: f64 = 10.0;
const NEWTON_ITERS: usize = 60;
const NEAR_SPLIT_DEPTH: usize = 40;

/// Which critical point of the boundary phase a patch is centred on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoleKind {
    /// `w+`, minimum of `u0`.
    Plus,
    /// `w-`, maximum of `u0`.
    Minus,
}

/// Morse chart around a pole: `u0(t) - u0(t0) = +-|k| mu(t)^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorsePatch {
    pub kind: PoleKind,
    pub center: f64,
    pub radius: f64,
    /// `dmu/dt` at the centre, `sqrt(2 kappa)`.
    pub mu_slope: f64,
    anchor: Complex64,
    omega: Complex64,
    period: f64,
}

impl MorsePatch {
    fn new(kind: PoleKind, center: f64, kappa: f64, radius: f64, curve: &BoundaryCurve, k: &SpectralParam) -> Self {
        Self {
            kind,
            center,
            radius,
            mu_slope: (2.0 * kappa).sqrt(),
            anchor: curve.point(center),
            omega: k.omega(),
            period: curve.length(),
        }
    }

    /// `+1` at `w+` (phase minimum), `-1` at `w-`.
    pub fn phase_sign(&self) -> f64 {
        match self.kind {
            PoleKind::Plus => 1.0,
            PoleKind::Minus => -1.0,
        }
    }

    /// Slope `ds/dt` of the descent path at the pole.
    pub fn descent_sign(&self) -> f64 {
        -self.phase_sign()
    }

    /// Offset of `t` from the centre, wrapped into `(-L/2, L/2]`.
    pub fn offset(&self, t: f64) -> f64 {
        let half = 0.5 * self.period;
        half - (half - (t - self.center)).rem_euclid(self.period)
    }

    pub fn contains(&self, t: f64) -> bool {
        self.offset(t).abs() < self.radius
    }

    /// The real Morse coordinate, `|k|`-independent.
    pub fn mu(&self, curve: &BoundaryCurve, t: f64) -> f64 {
        let x = self.offset(t);
        let d = ((curve.point(t) - self.anchor) * self.omega.conj()).re;
        x.signum() * (2.0 * d.abs()).sqrt()
    }

    /// `mu^2` of the complex Morse coordinate for a phase increment `u - u(pole)`;
    /// on the descent path it lies on `-i R+` at `w+` and on `+i R+` at `w-`.
    pub fn mu_squared(&self, du: Complex64, modulus: f64) -> Complex64 {
        du * (2.0 / (self.phase_sign() * modulus))
    }
}

/// Deformation and quadrature parameters of the contour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContourConfig {
    /// Plateau depth `delta`; defaults to `DEPTH_FRACTION` of the band half-width.
    pub depth: Option<f64>,
    /// Half-width in `t` of the Morse patches; defaults to `2 delta`.
    pub patch_radius: Option<f64>,
    /// Multiplier of the node density.
    pub density: f64,
    pub gl_order: usize,
    /// Panels on which `|e^{-iu}|` stays below this are dropped.
    pub cull_tol: f64,
}

impl Default for ContourConfig {
    fn default() -> Self {
        Self {
            depth: None,
            patch_radius: None,
            density: 1.0,
            gl_order: 16,
            cull_tol: 1e-16,
        }
    }
}

/// One quadrature node on the contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourNode {
    pub t: f64,
    pub s: f64,
    pub w: Complex64,
    /// `dw/dt` along the contour.
    pub dw: Complex64,
    /// Gauss-Legendre weight in `t`.
    pub weight: f64,
    pub u: Complex64,
}

impl ContourNode {
    /// `|e^{-iu}| = e^{Im u}`.
    pub fn magnitude(&self) -> f64 {
        self.u.im.exp()
    }

    fn wave(&self) -> Complex64 {
        (-Complex64::i() * self.u).exp()
    }
}

/// A Gauss-Legendre panel `[a, b]` in `t`; its nodes are `nodes[start..start + order]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    pub start: usize,
    pub kept: bool,
    /// Largest `|du/dt|` at the panel nodes.
    pub phase_rate: f64,
}

/// The deformed contour with its quadrature nodes for one `k`.
#[derive(Clone)]
pub struct DeformedContour {
    period: f64,
    poles: PoleData,
    patches: [MorsePatch; 2],
    targets: [f64; 2],
    depth: f64,
    radius: f64,
    modulus: f64,
    k: SpectralParam,
    dist_tol: f64,
    cfg: ContourConfig,
    ext: Arc<dyn PhaseExtension>,
    rule: GaussRule,
    panels: Vec<Panel>,
    nodes: Vec<ContourNode>,
}

impl fmt::Debug for DeformedContour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DeformedContour")
            .field("modulus", &self.modulus)
            .field("depth", &self.depth)
            .field("patch_radius", &self.radius)
            .field("panels", &self.panels.len())
            .field("nodes", &self.node_count())
            .finish()
    }
}

/// Builds the contour for `k`, locating the poles first.
pub fn build_contour(
    domain: &ConvexDomain,
    k: &SpectralParam,
    ext: Arc<dyn PhaseExtension>,
    cfg: &ContourConfig,
) -> Result<DeformedContour> {
    let poles = find_poles(domain.boundary(), k)?;
    build_contour_with_poles(domain, k, &poles, ext, cfg)
}

/// Builds the contour with poles computed earlier for the same direction of `k`.
pub fn build_contour_with_poles(
    domain: &ConvexDomain,
    k: &SpectralParam,
    poles: &PoleData,
    ext: Arc<dyn PhaseExtension>,
    cfg: &ContourConfig,
) -> Result<DeformedContour> {
    let modulus = k.modulus();
    let poles = poles.with_modulus(modulus);
    if ((ext.modulus() - modulus) / modulus).abs() > 1e-12 {
        return Err(Error::Config(format!(
            "extension built for |k| = {}, contour requested for |k| = {modulus}",
            ext.modulus()
        )));
    }
    if !(cfg.density > 0.0 && cfg.density.is_finite()) || cfg.gl_order < 4 || !(cfg.cull_tol >= 0.0) {
        return Err(Error::Config(format!("invalid quadrature settings {cfg:?}")));
    }
    let s_max = ext.s_max().min(band_half_width(domain));
    let depth = cfg.depth.unwrap_or(DEPTH_FRACTION * s_max);
    if !(depth > 0.0 && depth <= 0.5 * s_max) {
        return Err(Error::Config(format!(
            "depth {depth} must lie in (0, {}]",
            0.5 * s_max
        )));
    }
    let radius = cfg.patch_radius.unwrap_or(2.0 * depth);
    let curve = domain.boundary();
    let split = split_boundary(curve, &poles);
    let shortest = split.gamma_plus.len().min(split.gamma_minus.len());
    if !(radius > 0.0 && 2.0 * radius < shortest) {
        return Err(Error::Config(format!(
            "patch radius {radius} makes the Morse patches overlap (arcs of length {shortest})"
        )));
    }

    let mut targets = [0.0; 2];
    for (slot, (t, w)) in [(poles.t_plus, poles.w_plus), (poles.t_minus, poles.w_minus)]
        .into_iter()
        .enumerate()
    {
        let u = ext.jet(t, 0.0)?.u;
        if (u - k.phase(w)).norm() > 1e-8 * modulus * (1.0 + w.norm()) {
            return Err(Error::Config(
                "extension does not match the direction of k".to_string(),
            ));
        }
        targets[slot] = u.re;
    }

    let patches = [
        MorsePatch::new(PoleKind::Plus, poles.t_plus, poles.kappa_plus, radius, curve, k),
        MorsePatch::new(PoleKind::Minus, poles.t_minus, poles.kappa_minus, radius, curve, k),
    ];
    let mut contour = DeformedContour {
        period: curve.length(),
        poles,
        patches,
        targets,
        depth,
        radius,
        modulus,
        k: *k,
        dist_tol: domain.dist_tol(),
        cfg: *cfg,
        ext,
        rule: GaussRule::new(cfg.gl_order),
        panels: Vec::new(),
        nodes: Vec::new(),
    };
    let reach = contour.band_reach()?;
    if reach < radius {
        if cfg.patch_radius.is_some() || reach < 0.5 * depth {
            return Err(Error::Config(format!(
                "descent path leaves the extension band at |t - t_pole| = {reach:.4}, inside patch radius {radius}"
            )));
        }
        contour.radius = reach;
        contour.patches = contour.patches.map(|p| MorsePatch { radius: reach, ..p });
    }
    let start = split.gamma_plus.start;
    let arcs = [
        (start, split.gamma_plus.end),
        (split.gamma_minus.start, split.gamma_minus.end),
    ];
    for (a, b) in arcs {
        let breaks = contour.arc_breaks(a, b, cfg.density);
        for w in breaks.windows(2) {
            contour.push_panel(w[0], w[1])?;
        }
    }
    contour.check_descent()?;
    Ok(contour)
}

impl DeformedContour {
    pub fn poles(&self) -> &PoleData {
        &self.poles
    }

    /// Patches around `w+` and `w-`, in that order.
    pub fn patches(&self) -> &[MorsePatch; 2] {
        &self.patches
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn patch_radius(&self) -> f64 {
        self.radius
    }

    pub fn modulus(&self) -> f64 {
        self.modulus
    }

    pub fn spectral_param(&self) -> &SpectralParam {
        &self.k
    }

    pub fn config(&self) -> &ContourConfig {
        &self.cfg
    }

    pub fn extension(&self) -> &Arc<dyn PhaseExtension> {
        &self.ext
    }

    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    /// All nodes, including those of culled panels.
    pub fn nodes(&self) -> &[ContourNode] {
        &self.nodes
    }

    /// Nodes that enter the quadrature.
    pub fn kept_nodes(&self) -> impl Iterator<Item = &ContourNode> + '_ {
        self.panels
            .iter()
            .filter(|p| p.kept)
            .flat_map(move |p| &self.nodes[p.start..p.start + self.rule.order()])
    }

    /// Number of quadrature nodes.
    pub fn node_count(&self) -> usize {
        self.panels.iter().filter(|p| p.kept).count() * self.rule.order()
    }

    /// Deformation profile `s_c(t)` and its derivative.
    pub fn profile(&self, t: f64) -> Result<(f64, f64)> {
        let (slot, x) = self.nearest_patch(t);
        let patch = &self.patches[slot];
        let sigma = patch.descent_sign();
        let plateau = sigma * x.signum() * self.depth;
        let r = self.radius;
        if x.abs() >= r {
            return Ok((plateau, 0.0));
        }
        let (sm, dsm) = self.descent(slot, t, x)?;
        if x.abs() <= 0.5 * r {
            return Ok((sm, dsm));
        }
        let y = (x.abs() - 0.5 * r) / (0.5 * r);
        let chi = 1.0 - smoothstep(y);
        let dchi = -smoothstep_slope(y) * 2.0 / r * x.signum();
        Ok((chi * sm + (1.0 - chi) * plateau, chi * dsm + dchi * (sm - plateau)))
    }

    /// Contour node at parameter `t` with zero weight.
    pub fn point(&self, t: f64) -> Result<ContourNode> {
        Ok(self.eval_node(t, 0.0)?.0)
    }

    /// Largest `|x| <= radius` up to which both descent branches of both poles stay
    /// inside the extension band; beyond it the core curve would have a kink.
    fn band_reach(&self) -> Result<f64> {
        const STEPS: usize = 64;
        let edge = self.ext.s_max() * (1.0 - 1e-9);
        let mut reach = self.radius;
        for (slot, patch) in self.patches.iter().enumerate() {
            for side in [-1.0, 1.0] {
                for j in 1..=STEPS {
                    let x = side * self.radius * j as f64 / STEPS as f64;
                    let inside = match self.descent(slot, patch.center + x, x) {
                        Ok((s, _)) => s.abs() < edge,
                        Err(Error::Config(_) | Error::OutOfBand { .. }) => false,
                        Err(e) => return Err(e),
                    };
                    if !inside {
                        reach = reach.min(self.radius * (j - 1) as f64 / STEPS as f64);
                        break;
                    }
                }
            }
        }
        Ok(reach)
    }

    fn nearest_patch(&self, t: f64) -> (usize, f64) {
        let xp = self.patches[0].offset(t);
        let xm = self.patches[1].offset(t);
        if xp.abs() <= xm.abs() {
            (0, xp)
        } else {
            (1, xm)
        }
    }

    /// Point of the level set `Re u = u(pole)` above `t` on the descent branch.
    fn descent(&self, slot: usize, t: f64, x: f64) -> Result<(f64, f64)> {
        let sigma = self.patches[slot].descent_sign();
        if x.abs() < 1e-9 {
            return Ok((sigma * x, sigma));
        }
        let target = self.targets[slot];
        let mut s = sigma * x;
        let mut converged = false;
        for _ in 0..NEWTON_ITERS {
            let jet = self.ext.jet(t, s)?;
            let step = (jet.u.re - target) / jet.u_s.re;
            let mut next = s - step;
            // stay on the branch through the saddle with the right sign
            if next * sigma * x <= 0.0 || (next - sigma * x).abs() > 0.9 * x.abs() {
                next = 0.5 * (s + sigma * x);
            }
            let edge = self.ext.s_max();
            if next.abs() > edge {
                next = 0.5 * (s + edge * next.signum());
            }
            // rounding in Re u limits the attainable accuracy close to the saddle
            let noise = 8.0 * f64::EPSILON * (jet.u.norm() + self.modulus) / jet.u_s.re.abs();
            let done = (next - s).abs() <= 1e-11 * x.abs() + noise;
            s = next;
            if done {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Config(format!(
                "descent path through the pole not found at t = {t}"
            )));
        }
        let jet = self.ext.jet(t, s)?;
        let edge = self.ext.s_max();
        let noise = 8.0 * f64::EPSILON * (jet.u.norm() + self.modulus);
        if s.abs() > edge - 1e-9 * edge && (jet.u.re - target).abs() > 1e3 * noise {
            // the level set leaves the band: follow the band edge, which keeps dw consistent
            return Ok((edge * s.signum(), 0.0));
        }
        Ok((s, -jet.u_t.re / jet.u_s.re))
    }

    fn eval_node(&self, t: f64, weight: f64) -> Result<(ContourNode, f64)> {
        let (s, ds) = self.profile(t)?;
        let jet = self.ext.jet(t, s)?;
        let dw = jet.w_t + jet.w_s * ds;
        let du = jet.u_t + jet.u_s * ds;
        Ok((
            ContourNode {
                t,
                s,
                w: jet.w,
                dw,
                weight,
                u: jet.u,
            },
            du.norm(),
        ))
    }

    fn panel_width(&self, distance: f64, density: f64) -> f64 {
        MAX_WIDTH.min(FLOOR_WIDTH / self.modulus.sqrt() + WIDTH_GROWTH * distance) / density
    }

    /// Breakpoints on an arc between two poles, graded towards both ends and
    /// aligned with the edges of the blending zones.
    fn arc_breaks(&self, a: f64, b: f64, density: f64) -> Vec<f64> {
        let half = 0.5 * (b - a);
        let mut offsets = vec![0.0];
        let mut x = 0.0;
        while x < half {
            x = (x + self.panel_width(x, density)).min(half);
            offsets.push(x);
        }
        let n = offsets.len();
        if n > 2 && offsets[n - 1] - offsets[n - 2] < 0.3 * (offsets[n - 2] - offsets[n - 3]) {
            offsets.remove(n - 2);
        }
        let edges: Vec<f64> = [0.5 * self.radius, self.radius]
            .into_iter()
            .filter(|&e| e < half)
            .collect();
        offsets.retain(|&o| {
            o == 0.0
                || o == half
                || edges
                    .iter()
                    .all(|&e| (o - e).abs() > 0.25 * self.panel_width(e, density))
        });
        offsets.extend(edges);
        offsets.sort_by(f64::total_cmp);
        let mut breaks: Vec<f64> = offsets.iter().map(|o| a + o).collect();
        breaks.extend(offsets.iter().rev().skip(1).map(|o| b - o));
        breaks
    }

    fn gauss_nodes(&self, a: f64, b: f64) -> Result<(Vec<ContourNode>, f64)> {
        let mut rate = 0.0f64;
        let nodes = self
            .rule
            .on_interval(a, b)
            .map(|(t, wt)| {
                let (node, du) = self.eval_node(t, wt)?;
                rate = rate.max(du);
                Ok(node)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((nodes, rate))
    }

    fn push_panel(&mut self, a: f64, b: f64) -> Result<()> {
        let (nodes, rate) = self.gauss_nodes(a, b)?;
        let peak = nodes.iter().map(ContourNode::magnitude).fold(0.0, f64::max);
        if peak < self.cfg.cull_tol {
            self.store(a, b, nodes, false, rate);
            return Ok(());
        }
        let pieces = ((b - a) * rate * self.cfg.density / PHASE_PER_PANEL).ceil().max(1.0) as usize;
        if pieces == 1 {
            self.store(a, b, nodes, true, rate);
            return Ok(());
        }
        let h = (b - a) / pieces as f64;
        for j in 0..pieces {
            let (lo, hi) = (a + j as f64 * h, if j + 1 == pieces { b } else { a + (j + 1) as f64 * h });
            let (nodes, rate) = self.gauss_nodes(lo, hi)?;
            self.store(lo, hi, nodes, true, rate);
        }
        Ok(())
    }

    fn store(&mut self, a: f64, b: f64, nodes: Vec<ContourNode>, kept: bool, phase_rate: f64) {
        self.panels.push(Panel {
            a,
            b,
            start: self.nodes.len(),
            kept,
            phase_rate,
        });
        self.nodes.extend(nodes);
    }

    /// Checks that the chosen descent branches make `-Im u >= 0` inside the patches.
    fn check_descent(&self) -> Result<()> {
        for node in &self.nodes {
            let (slot, x) = self.nearest_patch(node.t);
            if x.abs() <= 0.5 * self.radius && node.u.im > 1e-9 * self.modulus {
                return Err(Error::Config(format!(
                    "Morse branch at {:?} does not descend (Im u = {:e} at t = {})",
                    self.patches[slot].kind, node.u.im, node.t
                )));
            }
        }
        Ok(())
    }

    /// Distance from `z` to the nearest contour node.
    pub fn distance_to(&self, z: Complex64) -> f64 {
        self.nodes.iter().map(|n| (n.w - z).norm()).fold(f64::INFINITY, f64::min)
    }

    /// `F_Gamma(z) = \int_Gamma e^{-iu(w)} / (z - w) dw`.
    pub fn f_gamma(&self, z: Complex64) -> Result<QuadResult> {
        let distance = self.distance_to(z);
        if distance < self.dist_tol {
            return Err(Error::TooCloseToContour { z, distance });
        }
        let order = self.rule.order();
        let mut value = Complex64::new(0.0, 0.0);
        let mut est_error = 0.0;
        let mut nodes_used = 0;
        let mut values = vec![Complex64::new(0.0, 0.0); order];
        for panel in self.panels.iter().filter(|p| p.kept) {
            let nodes = &self.nodes[panel.start..panel.start + order];
            let reach = nodes.iter().map(|n| n.dw.norm()).fold(0.0, f64::max) * (panel.b - panel.a);
            let near = nodes.iter().map(|n| (n.w - z).norm()).fold(f64::INFINITY, f64::min);
            if near < reach {
                let (v, e, used) = self.integrate_near(panel.a, panel.b, z, NEAR_SPLIT_DEPTH)?;
                value += v;
                est_error += e;
                nodes_used += used;
                continue;
            }
            for (slot, n) in values.iter_mut().zip(nodes) {
                *slot = n.wave() * n.dw / (z - n.w);
            }
            let half = 0.5 * (panel.b - panel.a);
            value += nodes.iter().zip(&values).map(|(n, v)| v * n.weight).sum::<Complex64>();
            est_error += half * legendre_tail(&self.rule, &values);
            nodes_used += order;
        }
        Ok(QuadResult {
            value,
            est_error,
            nodes_used,
        })
    }

    fn panel_sum(&self, a: f64, b: f64, z: Complex64) -> Result<(Complex64, f64)> {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut size = 0.0;
        for (t, wt) in self.rule.on_interval(a, b) {
            let (n, _) = self.eval_node(t, wt)?;
            let term = n.wave() * n.dw / (z - n.w) * wt;
            sum += term;
            size += term.norm();
        }
        Ok((sum, size))
    }

    /// Bisection refinement of a panel close to `z`.
    fn integrate_near(&self, a: f64, b: f64, z: Complex64, depth: usize) -> Result<(Complex64, f64, usize)> {
        let order = self.rule.order();
        let (whole, _) = self.panel_sum(a, b, z)?;
        let mut stack = vec![(a, b, whole, depth)];
        let mut total = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        let mut used = order;
        while let Some((lo, hi, coarse, left)) = stack.pop() {
            let mid = 0.5 * (lo + hi);
            let (l, ls) = self.panel_sum(lo, mid, z)?;
            let (r, rs) = self.panel_sum(mid, hi, z)?;
            used += 2 * order;
            let diff = (l + r - coarse).norm();
            if diff <= 1e-14 * (ls + rs) || left == 0 {
                total += l + r;
                err += diff;
            } else {
                stack.push((lo, mid, l, left - 1));
                stack.push((mid, hi, r, left - 1));
            }
        }
        Ok((total, err, used))
    }

    /// Which swept region contains `z`, and the distance from `z` to the union
    /// of both (zero inside).
    pub fn region_of(&self, domain: &ConvexDomain, z: Complex64) -> Result<(Option<PoleKind>, f64)> {
        let containment = domain.contains(z)?;
        let reach = self.depth.max(self.radius);
        if containment.distance > 2.0 * reach {
            return Ok((None, containment.distance - reach));
        }
        let (t, s) = domain.tube_coords(z);
        let (sc, _) = self.profile(t)?;
        if s * sc > 0.0 {
            if s.abs() < sc.abs() {
                let kind = if sc > 0.0 { PoleKind::Plus } else { PoleKind::Minus };
                return Ok((Some(kind), 0.0));
            }
            return Ok((None, s.abs() - sc.abs()));
        }
        Ok((None, s.abs()))
    }

    /// Area correction `(i / conj k) \int (1_{Omega-} - 1_{Omega+}) d_wbar(u) e^{-iu} / (z - w) dA`.
    pub fn correction_term(&self, domain: &ConvexDomain, z: Complex64) -> Result<QuadResult> {
        let (_, distance) = self.region_of(domain, z)?;
        if distance < self.dist_tol {
            return Err(Error::TooCloseToRegion { z, distance });
        }
        let bound_rate = |t: f64| {
            self.modulus * (domain.boundary().tangent(t) * self.k.omega().conj()).re.abs()
        };
        let t_rule = GaussRule::new(self.rule.order());
        let s_rule = GaussRule::new(12);
        let levels = ((20.0 * self.modulus * self.depth).max(1.0).ln() / 4f64.ln()).ceil() as usize + 2;
        let sigma = composite(&s_rule, &geometric_breaks(levels.max(3), 0.25));
        let offsets: Vec<f64> = sigma.iter().map(|&(x, _)| x).collect();

        let mut value = Complex64::new(0.0, 0.0);
        let mut est_error = 0.0;
        let mut nodes_used = 0;
        let mut column = vec![Complex64::new(0.0, 0.0); t_rule.order()];
        for panel in &self.panels {
            let rate = panel
                .phase_rate
                .max(bound_rate(panel.a))
                .max(bound_rate(0.5 * (panel.a + panel.b)))
                .max(bound_rate(panel.b));
            let len = panel.b - panel.a;
            let pieces = (len * rate * self.cfg.density / PHASE_PER_PANEL).ceil().max(1.0) as usize;
            let h = len / pieces as f64;
            for j in 0..pieces {
                let (lo, hi) = (panel.a + j as f64 * h, panel.a + (j + 1) as f64 * h);
                for (slot, (t, _)) in column.iter_mut().zip(t_rule.on_interval(lo, hi)) {
                    let (sc, _) = self.profile(t)?;
                    if sc == 0.0 {
                        *slot = Complex64::new(0.0, 0.0);
                        continue;
                    }
                    let scaled: Vec<f64> = offsets.iter().map(|x| x * sc).collect();
                    let jets = self.ext.jets_at(t, &scaled)?;
                    *slot = jets
                        .iter()
                        .zip(&sigma)
                        .map(|(jet, &(_, ws))| {
                            let wave = (-Complex64::i() * jet.u).exp();
                            jet.dbar() * wave / (z - jet.w) * ((1.0 - jet.kappa * jet.s) * ws)
                        })
                        .sum::<Complex64>()
                        * (-sc);
                    nodes_used += offsets.len();
                }
                value += t_rule
                    .on_interval(lo, hi)
                    .zip(&column)
                    .map(|((_, wt), v)| v * wt)
                    .sum::<Complex64>();
                est_error += 0.5 * h * legendre_tail(&t_rule, &column);
            }
        }
        let prefactor = Complex64::i() / self.k.k().conj();
        Ok(QuadResult {
            value: value * prefactor,
            est_error: est_error * prefactor.norm(),
            nodes_used,
        })
    }

    /// Nodes as rows `t, s, Re w, Im w, Re u, Im u, |e^{-iu}|` with `t` wrapped into `[0, L)`.
    pub fn dump_rows(&self) -> Vec<ContourDumpRow> {
        self.nodes
            .iter()
            .map(|n| ContourDumpRow {
                t: n.t.rem_euclid(self.period),
                s: n.s,
                re_w: n.w.re,
                im_w: n.w.im,
                re_u: n.u.re,
                im_u: n.u.im,
                abs_exp: n.magnitude(),
            })
            .collect()
    }
}

/// `35 y^4 - 84 y^5 + 70 y^6 - 20 y^7`, rising from 0 to 1 on `[0, 1]` with three flat derivatives at both ends.
fn smoothstep(y: f64) -> f64 {
    let y = y.clamp(0.0, 1.0);
    y.powi(4) * (35.0 + y * (-84.0 + y * (70.0 - 20.0 * y)))
}

fn smoothstep_slope(y: f64) -> f64 {
    let y = y.clamp(0.0, 1.0);
    140.0 * (y * (1.0 - y)).powi(3)
}

/// One row of the contour dump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourDumpRow {
    pub t: f64,
    pub s: f64,
    pub re_w: f64,
    pub im_w: f64,
    pub re_u: f64,
    pub im_u: f64,
    pub abs_exp: f64,
}

/// Smallest `C` with `|e^{-iu(w)}| <= exp(-|k| dist(w, {w+, w-})^2 / C)` at every node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub constant: f64,
    /// Parameter of the node that determines the constant.
    pub worst_t: f64,
}

pub fn gaussian_constant(contour: &DeformedContour) -> GaussianFit {
    let mut fit = GaussianFit {
        constant: 0.0,
        worst_t: f64::NAN,
    };
    for node in contour.nodes() {
        let d = contour.poles().distance(node.w);
        if d < 1e-12 {
            continue;
        }
        let decay = -node.u.im;
        let c = if decay > 0.0 {
            contour.modulus() * d * d / decay
        } else {
            f64::INFINITY
        };
        if c > fit.constant {
            fit = GaussianFit {
                constant: c,
                worst_t: node.t.rem_euclid(contour.period),
            };
        }
    }
    fit
}

/// Extension order and contour settings used by [`decompose_f`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecompositionConfig {
    pub order: usize,
    pub contour: ContourConfig,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        Self {
            order: DEFAULT_ORDER,
            contour: ContourConfig::default(),
        }
    }
}

/// The four terms of the deformed representation of `f(z, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FDecomposition {
    /// `F_Gamma / (2i conj k)`.
    pub term_gamma: Complex64,
    /// `(pi / conj k) e^{-iu(z)} (1_{Omega-}(z) - 1_{Omega+}(z))`.
    pub term_jump_pm: Complex64,
    /// `(pi / conj k) e^{-i u0(z)} 1_Omega(z)`.
    pub term_plane: Complex64,
    /// The area correction over the swept regions.
    pub term_corr: Complex64,
    /// Combined quadrature error estimate of the two numerical terms.
    pub est_error: f64,
    pub nodes_gamma: usize,
}

impl FDecomposition {
    pub fn sum(&self) -> Complex64 {
        self.term_gamma + self.term_jump_pm + self.term_plane + self.term_corr
    }
}

/// Builds the order-`N` extension and the default contour for `k`, then decomposes `f(z, k)`.
pub fn decompose_f(
    domain: &ConvexDomain,
    z: Complex64,
    k: Complex64,
    cfg: &DecompositionConfig,
) -> Result<FDecomposition> {
    let sp = SpectralParam::new(k)?;
    let ext: Arc<dyn PhaseExtension> = Arc::new(extension_coeffs(domain, &sp, cfg.order)?);
    let contour = build_contour(domain, &sp, ext, &cfg.contour)?;
    decompose_on(domain, &contour, z)
}

/// Decomposition of `f(z, k)` on an existing contour.
pub fn decompose_on(domain: &ConvexDomain, contour: &DeformedContour, z: Complex64) -> Result<FDecomposition> {
    let k = contour.spectral_param();
    let kbar = k.k().conj();
    let gamma = contour.f_gamma(z)?;
    let (region, _) = contour.region_of(domain, z)?;
    let term_jump_pm = match region {
        None => Complex64::new(0.0, 0.0),
        Some(kind) => {
            let (t, s) = domain.tube_coords(z);
            let u = contour.extension().jet(t, s)?.u;
            let sign = if kind == PoleKind::Minus { 1.0 } else { -1.0 };
            (-Complex64::i() * u).exp() * (sign * PI) / kbar
        }
    };
    let corr = contour.correction_term(domain, z)?;
    let prefactor = 1.0 / (Complex64::new(0.0, 2.0) * kbar);
    Ok(FDecomposition {
        term_gamma: gamma.value * prefactor,
        term_jump_pm,
        term_plane: plane_term(domain, z, k)?,
        term_corr: corr.value,
        est_error: gamma.est_error * prefactor.norm() + corr.est_error,
        nodes_gamma: gamma.nodes_used,
    })
}

/// Cost of an `F_Gamma` evaluation at a requested relative accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourCost {
    pub modulus: f64,
    pub nodes: usize,
    pub density: f64,
    pub rel_error: f64,
}

/// Fewest contour nodes (over a geometric ladder of densities) whose `F_Gamma(z)`
/// matches a dense reference to relative accuracy `tol`.
pub fn contour_nodes_for_accuracy(
    domain: &ConvexDomain,
    k: &SpectralParam,
    ext: Arc<dyn PhaseExtension>,
    cfg: &ContourConfig,
    z: Complex64,
    tol: f64,
) -> Result<ContourCost> {
    let poles = find_poles(domain.boundary(), k)?;
    let dense = ContourConfig {
        density: 4.0,
        cull_tol: 0.0,
        ..*cfg
    };
    let reference = build_contour_with_poles(domain, k, &poles, ext.clone(), &dense)?.f_gamma(z)?.value;
    // culling error is at most cull_tol * L / dist(z, Gamma)
    let reach = dense_reach(domain, z);
    let cull_tol = 1e-2 * tol * reference.norm() * reach / domain.length();
    let mut density = 0.05;
    while density <= 4.0 {
        let trial = ContourConfig {
            density,
            cull_tol,
            ..*cfg
        };
        let contour = build_contour_with_poles(domain, k, &poles, ext.clone(), &trial)?;
        let value = contour.f_gamma(z)?.value;
        let rel_error = (value - reference).norm() / reference.norm();
        if rel_error <= tol {
            return Ok(ContourCost {
                modulus: k.modulus(),
                nodes: contour.node_count(),
                density,
                rel_error,
            });
        }
        density *= 1.1;
    }
    Err(Error::NoConvergence {
        est_error: f64::NAN,
        tol,
    })
}

fn dense_reach(domain: &ConvexDomain, z: Complex64) -> f64 {
    domain
        .contains(z)
        .map(|c| (c.distance - 0.5 * band_half_width(domain)).max(domain.dist_tol()))
        .unwrap_or_else(|_| domain.dist_tol())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::almost_holo::SchwarzCircleExtension;
    use crate::geometry::{make_circle, make_ellipse, DEFAULT_REPARAM_TOL};
    use crate::oracle::{boundary_trapezoid, f_boundary};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn holo(domain: &ConvexDomain, sp: &SpectralParam, order: usize) -> Arc<dyn PhaseExtension> {
        Arc::new(extension_coeffs(domain, sp, order).unwrap())
    }

    #[test]
    fn smoothstep_joins_flat() {
        assert_eq!(smoothstep(0.0), 0.0);
        assert!((smoothstep(1.0) - 1.0).abs() < 1e-15);
        assert!((smoothstep(0.5) - 0.5).abs() < 1e-15);
        let h = 1e-6;
        let fd = (smoothstep(0.3 + h) - smoothstep(0.3 - h)) / (2.0 * h);
        assert!((fd - smoothstep_slope(0.3)).abs() < 1e-8);
    }

    #[test]
    fn contour_passes_through_poles_with_signed_plateaus() {
        let disk = make_circle(c(0.0, 0.0), 1.0).unwrap();
        let sp = SpectralParam::new(c(10.0, 0.0)).unwrap();
        let contour = build_contour(&disk, &sp, holo(&disk, &sp, 4), &ContourConfig::default()).unwrap();
        for patch in contour.patches() {
            let p = contour.point(patch.center).unwrap();
            assert!(p.s.abs() < 1e-12);
        }
        let poles = *contour.poles();
        let split = split_boundary(disk.boundary(), &poles);
        let r = contour.patch_radius();
        for n in contour.nodes() {
            let d = contour.patches().iter().map(|p| p.offset(n.t).abs()).fold(f64::INFINITY, f64::min);
            if d < r {
                continue;
            }
            let inside = disk.indicator(n.w).unwrap();
            if split.gamma_plus.contains(n.t, disk.length()) {
                assert!(inside && (n.s - contour.depth()).abs() < 1e-15);
            } else {
                assert!(!inside && (n.s + contour.depth()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn morse_coordinate_and_rotation() {
        let ell = make_ellipse(2.0, 1.0, DEFAULT_REPARAM_TOL).unwrap();
        let sp = SpectralParam::new(c(30.0, 40.0)).unwrap();
        let contour = build_contour(&ell, &sp, holo(&ell, &sp, 4), &ContourConfig::default()).unwrap();
        let curve = ell.boundary();
        for (patch, u_pole) in contour.patches().iter().zip([contour.poles().u0_plus, contour.poles().u0_minus]) {
            // exact quadratic form
            for j in -10..=10 {
                let t = patch.center + patch.radius * j as f64 / 10.0;
                let mu = patch.mu(curve, t);
                let du = crate::phase::u0(curve, &sp, t) - u_pole;
                assert!((du - patch.phase_sign() * sp.modulus() * mu * mu / 2.0).abs() <= 1e-10 * sp.modulus());
            }
            let h = 1e-5;
            let slope = (patch.mu(curve, patch.center + h) - patch.mu(curve, patch.center - h)) / (2.0 * h);
            let kappa = curve.curvature(patch.center);
            assert!((slope - (2.0 * kappa).sqrt()).abs() < 1e-6);
            assert!((patch.mu_slope - (2.0 * kappa).sqrt()).abs() < 1e-9);
            // on the descent path mu lies on the rotated axis
            for n in contour.nodes().iter().filter(|n| patch.offset(n.t).abs() < 0.5 * patch.radius) {
                let mu2 = patch.mu_squared(n.u - u_pole, sp.modulus());
                let expected = -patch.phase_sign();
                assert!(mu2.re.abs() <= 1e-9 * mu2.norm() + 1e-12, "{mu2}");
                assert!(mu2.im * expected > 0.0);
            }
        }
    }

    #[test]
    fn exact_extension_is_deformation_invariant() {
        let disk = make_circle(c(0.0, 0.0), 1.0).unwrap();
        let sp = SpectralParam::new(c(6.0, 8.0)).unwrap();
        let ext: Arc<dyn PhaseExtension> = Arc::new(SchwarzCircleExtension::new(&disk, &sp).unwrap());
        let z = c(2.5, 0.7);
        let direct = boundary_trapezoid(&disk, z, &sp, 4096);
        for (depth, radius) in [(0.15, 0.3), (0.1, 0.25), (0.2, 0.3)] {
            let cfg = ContourConfig {
                depth: Some(depth),
                patch_radius: Some(radius),
                ..ContourConfig::default()
            };
            let contour = build_contour(&disk, &sp, ext.clone(), &cfg).unwrap();
            let f = contour.f_gamma(z).unwrap();
            assert!((f.value - direct).norm() < 1e-9 * direct.norm(), "{depth} {radius}");
            let corr = contour.correction_term(&disk, z).unwrap();
            assert!(corr.value.norm() < 1e-14);
        }
    }

    #[test]
    fn decomposition_matches_boundary_oracle() {
        let ell = make_ellipse(2.0, 1.0, DEFAULT_REPARAM_TOL).unwrap();
        for (z, k) in [(c(0.3, 0.2), c(30.0, 40.0)), (c(3.0, 0.0), c(0.0, 20.0))] {
            let d = decompose_f(&ell, z, k, &DecompositionConfig::default()).unwrap();
            let f = f_boundary(&ell, z, k, 1e-12).unwrap().value;
            assert!((d.sum() - f).norm() < 1e-7 * f.norm(), "{z} {k}: {} vs {f}", d.sum());
        }
    }

    #[test]
    fn config_errors() {
        let disk = make_circle(c(0.0, 0.0), 1.0).unwrap();
        let sp = SpectralParam::new(c(10.0, 0.0)).unwrap();
        let ext = holo(&disk, &sp, 4);
        let deep = ContourConfig {
            depth: Some(0.4),
            ..ContourConfig::default()
        };
        assert!(matches!(build_contour(&disk, &sp, ext.clone(), &deep), Err(Error::Config(_))));
        let wide = ContourConfig {
            patch_radius: Some(2.0),
            ..ContourConfig::default()
        };
        assert!(matches!(build_contour(&disk, &sp, ext.clone(), &wide), Err(Error::Config(_))));
        // the exact outer descent branch of the disk reaches s = -1/2 near |x| = 0.39
        let exact: Arc<dyn PhaseExtension> = Arc::new(SchwarzCircleExtension::new(&disk, &sp).unwrap());
        let leaving = ContourConfig {
            depth: Some(0.2),
            patch_radius: Some(0.4),
            ..ContourConfig::default()
        };
        assert!(matches!(build_contour(&disk, &sp, exact.clone(), &leaving), Err(Error::Config(_))));
        let shrunk = build_contour(&disk, &sp, exact, &ContourConfig::default()).unwrap();
        assert!(shrunk.patch_radius() < 0.4 && shrunk.patch_radius() > 0.38);
        let other = SpectralParam::new(c(20.0, 0.0)).unwrap();
        assert!(matches!(
            build_contour(&disk, &other, ext.clone(), &ContourConfig::default()),
            Err(Error::Config(_))
        ));
        let contour = build_contour(&disk, &sp, ext, &ContourConfig::default()).unwrap();
        let on = contour.nodes()[7].w;
        assert!(matches!(contour.f_gamma(on), Err(Error::TooCloseToContour { .. })));
        let split = split_boundary(disk.boundary(), contour.poles());
        let mid = 0.5 * (split.gamma_plus.start + split.gamma_plus.end);
        let swept = crate::almost_holo::TubePoint::new(disk.boundary(), mid, 0.5 * contour.depth()).w;
        let (region, distance) = contour.region_of(&disk, swept).unwrap();
        assert_eq!((region, distance), (Some(PoleKind::Plus), 0.0));
        assert!(matches!(
            contour.correction_term(&disk, swept),
            Err(Error::TooCloseToRegion { .. })
        ));
    }
}
