//! Adaptive Gauss–Kronrod (10/21 point) quadrature on finite intervals.
//!
//! The error estimate and the roundoff floor follow the classic QUADPACK
//! `qk21` recipe. Intervals are bisected in order of decreasing error
//! estimate until the global estimate meets the requested tolerance or
//! every remaining interval is limited by roundoff.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_059,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_114,
    0.562_757_134_668_604_683_339_000_099_272,
    0.433_395_394_129_247_190_799_265_943_165,
    0.294_392_862_701_460_198_131_126_603_103,
    0.148_874_338_981_631_210_884_826_001_129,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_244,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_325,
    0.123_491_976_262_065_851_077_208_292_044,
    0.134_709_217_311_473_325_928_054_001_771,
    0.142_775_938_577_060_080_797_094_273_138,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_389,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_657,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { rel_tol: 1e-12, abs_tol: 1e-15, max_intervals: 20_000 }
    }
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    roundoff_limited: bool,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let centr = 0.5 * (a + b);
    let hlgth = 0.5 * (b - a);
    let dhlgth = hlgth.abs();

    let fc = f(centr);
    let mut resg = 0.0;
    let mut resk = WGK[10] * fc;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];

    for j in 0..5 {
        let jtw = 2 * j + 1;
        let absc = hlgth * XGK[jtw];
        let f1 = f(centr - absc);
        let f2 = f(centr + absc);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        resg += WG[j] * (f1 + f2);
        resk += WGK[jtw] * (f1 + f2);
        resabs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let absc = hlgth * XGK[jtwm1];
        let f1 = f(centr - absc);
        let f2 = f(centr + absc);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        resk += WGK[jtwm1] * (f1 + f2);
        resabs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }

    let reskh = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - reskh).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }

    let value = resk * hlgth;
    resabs *= dhlgth;
    resasc *= dhlgth;
    let mut error = ((resk - resg) * hlgth).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * resabs;
    let mut roundoff_limited = false;
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && floor >= error {
        error = floor;
        roundoff_limited = true;
    }
    Piece { a, b, value, error, roundoff_limited }
}

impl Quadrature {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Self {
        Self { rel_tol, abs_tol, ..Self::default() }
    }

    /// Integrates `f` over `[a, b]`, starting from `panels` equal subintervals.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, panels: usize) -> Result<Estimate> {
        let panels = panels.max(1);
        let width = (b - a) / panels as f64;
        let mut heap: BinaryHeap<Piece> = (0..panels)
            .map(|i| {
                let lo = a + width * i as f64;
                let hi = if i + 1 == panels { b } else { a + width * (i + 1) as f64 };
                kronrod21(&f, lo, hi)
            })
            .collect();

        loop {
            let (value, error) = heap.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
            let tolerance = self.abs_tol.max(self.rel_tol * value.abs());
            if !value.is_finite() {
                return Err(Error::Quadrature { estimate: f64::INFINITY, tolerance });
            }
            if error <= tolerance {
                return Ok(Estimate { value, error });
            }
            let worst = heap.pop().expect("heap is never empty");
            if worst.roundoff_limited {
                // Every remaining interval has a smaller estimate, so further
                // bisection cannot improve on the roundoff floor.
                heap.push(worst);
                return Ok(Estimate { value, error });
            }
            if heap.len() + 2 > self.max_intervals {
                return Err(Error::Quadrature { estimate: error, tolerance });
            }
            let mid = 0.5 * (worst.a + worst.b);
            heap.push(kronrod21(&f, worst.a, mid));
            heap.push(kronrod21(&f, mid, worst.b));
        }
    }
}
