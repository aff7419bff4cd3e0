//! Adaptive Gauss-Kronrod (7/15) quadrature of vector-valued integrands along
//! a polyline in the complex plane.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

pub(crate) const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the odd-indexed Kronrod abscissae.
pub(crate) const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// The 15 Kronrod abscissae on [-1, 1] with Kronrod and Gauss weights
/// (Gauss weight zero for the Kronrod-only points), in ascending order.
pub(crate) fn reference_nodes() -> [(f64, f64, f64); 15] {
    let mut out = [(0.0, 0.0, 0.0); 15];
    for k in 0..7 {
        let wg = if k % 2 == 1 { WG[k / 2] } else { 0.0 };
        out[k] = (-XGK[k], WGK[k], wg);
        out[14 - k] = (XGK[k], WGK[k], wg);
    }
    out[7] = (0.0, WGK[7], WG[3]);
    out
}

/// One straight piece `a -> b` of the integration path.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Panel {
    pub a: Complex64,
    pub b: Complex64,
}

impl Panel {
    /// `(node, kronrod weight, gauss weight)` with the Jacobian folded in.
    pub fn nodes(&self) -> impl Iterator<Item = (Complex64, Complex64, Complex64)> + '_ {
        let mid = 0.5 * (self.a + self.b);
        let half = 0.5 * (self.b - self.a);
        reference_nodes()
            .into_iter()
            .map(move |(x, wk, wg)| (mid + half * x, half * wk, half * wg))
    }

    fn split(&self) -> (Panel, Panel) {
        let mid = 0.5 * (self.a + self.b);
        (Panel { a: self.a, b: mid }, Panel { a: mid, b: self.b })
    }

    fn len(&self) -> f64 {
        (self.b - self.a).norm()
    }
}

/// Controls for [`integrate_path`].
#[derive(Debug, Clone, Copy)]
pub(crate) struct PanelLimits {
    /// Target for the summed panel error (max-norm over components).
    pub tol: f64,
    pub max_panels: usize,
    /// Initial panels carry at most this much phase.
    pub phase_budget: f64,
    pub max_len: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct PathRule {
    /// Accepted panels in path order.
    pub panels: Vec<Panel>,
    pub value: Vec<Complex64>,
    pub err: f64,
}

impl PathRule {
    pub fn nodes(&self) -> impl Iterator<Item = (Complex64, Complex64, Complex64)> + '_ {
        self.panels.iter().flat_map(|p| p.nodes())
    }
}

struct Evaluated {
    // position along the path, for ordering: (leg, start parameter)
    key: (usize, f64),
    panel: Panel,
    value: Vec<Complex64>,
    err: f64,
}

#[derive(PartialEq)]
struct ByErr(f64, usize);

impl Eq for ByErr {}

impl PartialOrd for ByErr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ByErr {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(other.1.cmp(&self.1))
    }
}

fn evaluate<F>(panel: Panel, dim: usize, f: &F, buf: &mut [Complex64]) -> (Vec<Complex64>, f64)
where
    F: Fn(Complex64, &mut [Complex64]),
{
    let mut k = vec![Complex64::new(0.0, 0.0); dim];
    let mut g = vec![Complex64::new(0.0, 0.0); dim];
    for (z, wk, wg) in panel.nodes() {
        f(z, buf);
        for i in 0..dim {
            k[i] += wk * buf[i];
            if wg.re != 0.0 || wg.im != 0.0 {
                g[i] += wg * buf[i];
            }
        }
    }
    let err = k.iter().zip(&g).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    (k, if err.is_finite() { err } else { f64::INFINITY })
}

/// Integrate `f` (filling `dim` components) along the polyline `legs`.
///
/// Each leg is cut into initial panels whose phase, estimated by
/// `rate(leg, z) * length`, stays below `limits.phase_budget`; then the worst panel
/// is bisected until the summed K15-vs-G7 error meets `limits.tol`.
pub(crate) fn integrate_path<F, R>(
    legs: &[(Complex64, Complex64)],
    rate: R,
    limits: PanelLimits,
    dim: usize,
    f: F,
) -> Result<PathRule>
where
    F: Fn(Complex64, &mut [Complex64]),
    R: Fn(usize, Complex64) -> f64,
{
    let mut buf = vec![Complex64::new(0.0, 0.0); dim];
    let mut items: Vec<Evaluated> = Vec::new();
    for (leg, &(a, b)) in legs.iter().enumerate() {
        let length = (b - a).norm();
        if length == 0.0 {
            continue;
        }
        let dir = (b - a) / length;
        let mut s = 0.0;
        while s < length {
            let z = a + dir * s;
            let step = (limits.phase_budget / rate(leg, z).max(1e-12)).min(limits.max_len);
            // avoid a sliver at the end of the leg
            let next = if s + 1.5 * step >= length { length } else { s + step };
            let panel = Panel { a: z, b: a + dir * next };
            let (value, err) = evaluate(panel, dim, &f, &mut buf);
            items.push(Evaluated { key: (leg, s), panel, value, err });
            s = next;
            if items.len() > limits.max_panels {
                return Err(budget_error(&items, dim));
            }
        }
    }

    let mut heap: BinaryHeap<ByErr> = items.iter().enumerate().map(|(i, e)| ByErr(e.err, i)).collect();
    let mut total: f64 = items.iter().map(|e| e.err).sum();
    let mut since_resum = 0usize;
    while total > limits.tol {
        if items.len() >= limits.max_panels {
            return Err(budget_error(&items, dim));
        }
        let Some(ByErr(_, worst)) = heap.pop() else { break };
        let old = &items[worst];
        if old.panel.len() < 1e-13 * (1.0 + old.panel.a.norm()) {
            // cannot refine further; leave it in the total
            continue;
        }
        let (left, right) = old.panel.split();
        let key = old.key;
        let right_key = (key.0, key.1 + left.len());
        let (lv, le) = evaluate(left, dim, &f, &mut buf);
        let (rv, re) = evaluate(right, dim, &f, &mut buf);
        total += le + re - old.err;
        items[worst] = Evaluated { key, panel: left, value: lv, err: le };
        items.push(Evaluated { key: right_key, panel: right, value: rv, err: re });
        heap.push(ByErr(le, worst));
        heap.push(ByErr(re, items.len() - 1));
        since_resum += 1;
        if since_resum == 64 {
            total = items.iter().map(|e| e.err).sum();
            since_resum = 0;
        }
    }

    items.sort_by(|x, y| x.key.0.cmp(&y.key.0).then(x.key.1.total_cmp(&y.key.1)));
    let mut value = vec![Complex64::new(0.0, 0.0); dim];
    for e in &items {
        for i in 0..dim {
            value[i] += e.value[i];
        }
    }
    let err = items.iter().map(|e| e.err).sum();
    Ok(PathRule { panels: items.into_iter().map(|e| e.panel).collect(), value, err })
}

fn budget_error(items: &[Evaluated], dim: usize) -> Error {
    let mut best = vec![Complex64::new(0.0, 0.0); dim];
    for e in items {
        for i in 0..dim {
            best[i] += e.value[i];
        }
    }
    Error::BudgetExceeded { panels: items.len(), err_est: items.iter().map(|e| e.err).sum(), best }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn limits(tol: f64) -> PanelLimits {
        PanelLimits { tol, max_panels: 10_000, phase_budget: std::f64::consts::FRAC_PI_4, max_len: 0.25 }
    }

    #[test]
    fn weights_sum_to_two() {
        let nodes = reference_nodes();
        let k: f64 = nodes.iter().map(|n| n.1).sum();
        let g: f64 = nodes.iter().map(|n| n.2).sum();
        assert!((k - 2.0).abs() < 1e-14);
        assert!((g - 2.0).abs() < 1e-14);
        assert_eq!(nodes.iter().filter(|n| n.2 != 0.0).count(), 7);
    }

    #[test]
    fn fresnel_integral_along_real_axis() {
        // int_0^X e^{i q^2} dq -> sqrt(pi)/2 e^{i pi/4}; compare with a rotated path instead
        let legs = [(Complex64::new(0.0, 0.0), Complex64::new(6.0, 0.0))];
        let rule = integrate_path(&legs, |_, z| 2.0 * z.norm(), limits(1e-12), 1, |z, out| {
            out[0] = (Complex64::i() * z * z).exp();
        })
        .unwrap();
        // same integral via the segment 0 -> 6 e^{i pi/4} ... closed by the arc at radius 6
        let ray = [
            (Complex64::new(0.0, 0.0), Complex64::from_polar(6.0, std::f64::consts::FRAC_PI_4)),
        ];
        let along_ray = integrate_path(&ray, |_, _| 1.0, limits(1e-13), 1, |z, out| {
            out[0] = (Complex64::i() * z * z).exp();
        })
        .unwrap();
        let arc_steps = 20_000;
        let mut arc = Complex64::new(0.0, 0.0);
        for k in 0..arc_steps {
            let t = (k as f64 + 0.5) / arc_steps as f64 * std::f64::consts::FRAC_PI_4;
            let z = Complex64::from_polar(6.0, t);
            let dz = Complex64::i() * z * (std::f64::consts::FRAC_PI_4 / arc_steps as f64);
            arc += (Complex64::i() * z * z).exp() * dz;
        }
        let closed = rule.value[0] + arc - along_ray.value[0];
        assert!(closed.norm() < 1e-7, "{closed}");
        assert!(rule.err < 1e-12);
    }

    #[test]
    fn resolves_narrow_peak() {
        let legs = [(Complex64::new(0.0, 0.0), Complex64::new(10.0, 0.0))];
        let eps = 1e-3;
        let rule = integrate_path(&legs, |_, _| 1.0, limits(1e-10), 1, |z, out| {
            out[0] = Complex64::new(eps / ((z.re - 3.0).powi(2) + eps * eps), 0.0);
        })
        .unwrap();
        let exact = (7.0 / eps).atan() + (3.0 / eps).atan();
        assert!((rule.value[0].re - exact).abs() < 1e-9);
    }

    #[test]
    fn budget_is_reported() {
        let legs = [(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))];
        let tight = PanelLimits { tol: 1e-30, max_panels: 20, ..limits(0.0) };
        let result = integrate_path(&legs, |_, _| 1.0, tight, 1, |z, out| {
            out[0] = Complex64::new(z.re.sqrt(), 0.0);
        });
        match result {
            Err(Error::BudgetExceeded { best, err_est, .. }) => {
                assert!((best[0].re - 2.0 / 3.0).abs() < 1e-4);
                assert!(err_est > 0.0);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }
}
