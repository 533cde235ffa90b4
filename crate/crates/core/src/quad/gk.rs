//! Globally adaptive 21-point Gauss–Kronrod quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_452_970,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Gauss weights for the nodes `XGK[1], XGK[3], .., XGK[9]`.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Integral estimate with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

/// One panel: Kronrod value and `|Kronrod - Gauss|`.
pub fn gk21<F>(f: &F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = WGK[10] * fc;
    let mut g = 0.0;
    for i in 0..10 {
        let dx = h * XGK[i];
        let pair = f(c - dx)? + f(c + dx)?;
        k += WGK[i] * pair;
        if i % 2 == 1 {
            g += WG[i / 2] * pair;
        }
    }
    let (k, g) = (k * h, g * h);
    if !k.is_finite() {
        return Err(Error::NonSmooth(format!("non-finite integrand on [{a}, {b}]")));
    }
    Ok((k, (k - g).abs()))
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Adaptive integration over the panels delimited by `breaks` (ascending).
/// Stops once the summed error estimate is at most
/// `tol * max(1, |value|)`; fails after `max_subdivisions` bisections.
pub fn integrate<F>(f: F, breaks: &[f64], tol: f64, max_subdivisions: usize) -> Result<Estimate>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (value, error) = gk21(&f, w[0], w[1])?;
            heap.push(Panel { a: w[0], b: w[1], value, error });
        }
    }
    let mut subdivisions = 0;
    let (mut value, mut error) = totals(&heap);
    loop {
        if error <= tol * value.abs().max(1.0) {
            let (value, error) = totals(&heap);
            return Ok(Estimate { value, error, subdivisions });
        }
        let worst = heap.pop().expect("non-empty panel set");
        let mid = 0.5 * (worst.a + worst.b);
        if subdivisions >= max_subdivisions || !(mid > worst.a && mid < worst.b) {
            heap.push(worst);
            let (_, error) = totals(&heap);
            return Err(Error::ToleranceNotReached { subdivisions, error });
        }
        subdivisions += 1;
        value -= worst.value;
        error -= worst.error;
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (v, e) = gk21(&f, a, b)?;
            value += v;
            error += e;
            heap.push(Panel { a, b, value: v, error: e });
        }
        if subdivisions % 64 == 0 {
            (value, error) = totals(&heap);
        }
    }
}

/// Panel sums, accumulated in a fixed order for reproducibility.
fn totals(heap: &BinaryHeap<Panel>) -> (f64, f64) {
    let mut panels: Vec<&Panel> = heap.iter().collect();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    panels
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error))
}

/// `a, 2a, 4a, .., b` (always including `b`).
pub fn geometric_breaks(a: f64, b: f64) -> Vec<f64> {
    let mut out = vec![a];
    let mut t = a;
    while t * 2.0 < b {
        t *= 2.0;
        out.push(t);
    }
    out.push(b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let e = integrate(|x| Ok(x.powi(20)), &[0.0, 1.0], 1e-14, 10).unwrap();
        assert!((e.value - 1.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn endpoint_singularity() {
        let e = integrate(|x: f64| Ok(x.powf(-0.5)), &[0.0, 1.0], 1e-10, 200).unwrap();
        assert!((e.value - 2.0).abs() < 1e-9, "{e:?}");
    }

    #[test]
    fn oscillatory_with_breaks() {
        let breaks = geometric_breaks(1.0, 1000.0);
        let e = integrate(|x: f64| Ok(x.cos()), &breaks, 1e-12, 5000).unwrap();
        assert!((e.value - (1000f64.sin() - 1f64.sin())).abs() < 1e-10);
    }

    #[test]
    fn budget_exhaustion() {
        let r = integrate(|x: f64| Ok((1.0 / x).sin() / x), &[1e-9, 1.0], 1e-14, 5);
        assert!(matches!(r, Err(Error::ToleranceNotReached { subdivisions: 5, .. })));
    }
}
