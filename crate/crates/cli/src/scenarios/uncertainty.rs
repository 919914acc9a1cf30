use geb_core::event::{gaussian_packet, random_packet};
use geb_core::{FourVector, Grid, Grid4D};
use serde::Serialize;

use crate::config::Settings;
use crate::report::{Check, Recorder};

#[derive(Serialize)]
struct GaussianRow {
    case: String,
    mu: usize,
    width: f64,
    dx: f64,
    dp: f64,
    product: f64,
}

#[derive(Serialize)]
struct RandomRow {
    sample: usize,
    seed: u64,
    mu: usize,
    dx: f64,
    dp: f64,
    product: f64,
}

/// Gaussian width sweep; the last case is anisotropic and displaced.
const SWEEP: [(&str, [f64; 4], [f64; 4], [f64; 4]); 6] = [
    ("sigma=0.6", [0.6; 4], [0.0; 4], [0.0; 4]),
    ("sigma=0.8", [0.8; 4], [0.0; 4], [0.0; 4]),
    ("sigma=1", [1.0; 4], [0.0; 4], [0.0; 4]),
    ("sigma=1.25", [1.25; 4], [0.0; 4], [0.0; 4]),
    ("sigma=1.6", [1.6; 4], [0.0; 4], [0.0; 4]),
    ("anisotropic", [0.7, 1.3, 0.9, 1.1], [0.4, -0.6, 0.2, 0.0], [0.3, 0.0, -0.5, 0.4]),
];

/// Random states use a smaller grid; they only need to stay band limited.
const RANDOM_GRID: usize = 16;

pub fn run(s: &Settings, rec: &mut Recorder) {
    let bound = 0.5 - s.tol("random_product_slack");
    if s.runs("gaussian") {
        rec.section("gaussian", |rec| {
            let g: Grid4D = s.grid.grid()?;
            let mut rows = Vec::new();
            let mut lowest = f64::INFINITY;
            for (case, widths, center, carrier) in SWEEP {
                let psi = gaussian_packet(&g, FourVector(center), widths, FourVector(carrier), None)?;
                let mut worst = 0.0f64;
                for (mu, (dx, dp, product)) in psi.uncertainty_products().into_iter().enumerate() {
                    worst = worst.max((product - 0.5).abs());
                    lowest = lowest.min(product);
                    rows.push(GaussianRow { case: case.into(), mu, width: widths[mu], dx, dp, product });
                }
                rec.check(Check::max(format!("gaussian/{case}"), worst, s.tol("gaussian_product")));
            }
            rec.check(Check::min("gaussian/lowest_product", lowest, bound));
            rec.series("gaussian_sweep", &rows)
        });
    }
    if s.runs("random") {
        rec.section("random", |rec| {
            let g: Grid4D = Grid::cubic(RANDOM_GRID)?;
            let mut rows = Vec::new();
            let mut lowest = f64::INFINITY;
            for sample in 0..s.samples {
                let seed = s.seed.wrapping_add(sample as u64);
                let psi = random_packet(&g, seed, 3)?;
                for (mu, (dx, dp, product)) in psi.uncertainty_products().into_iter().enumerate() {
                    lowest = lowest.min(product);
                    rows.push(RandomRow { sample, seed, mu, dx, dp, product });
                }
            }
            rec.check(Check::min("random/lowest_product", lowest, bound).with_note(format!("{} states", s.samples)));
            rec.series("random_states", &rows)
        });
    }
}
