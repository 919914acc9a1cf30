use geb_core::dirac::{self, covariance_defect, standard_spinor, Mat4c, Spinor};
use geb_core::event::{gaussian_packet, EventState};
use geb_core::poincare::{apply, generator_exponential_check, PoincareElement};
use geb_core::{boost_matrix, rotation_matrix, FourVector, Grid4D, LorentzTransform};
use serde::Serialize;

use super::c;
use crate::config::Settings;
use crate::report::{Check, Recorder};

#[derive(Serialize)]
struct TransformRow {
    transform: String,
    scalar_product_error: f64,
    norm_error: f64,
    position_error: f64,
    momentum_error: f64,
}

#[derive(Serialize)]
struct GroupRow {
    case: String,
    distance: f64,
}

fn distance(a: &EventState, b: &EventState) -> anyhow::Result<f64> {
    Ok((a.field().dist_sqr(b.field())? * a.cell_measure()).sqrt())
}

/// Named transforms with their translations: the configured boosts along
/// x¹, two rotations and one mixed element.
fn transforms(s: &Settings) -> anyhow::Result<Vec<(String, LorentzTransform, FourVector)>> {
    let mut out = Vec::new();
    for &v in &s.velocities {
        out.push((format!("boost x1 v={v}"), boost_matrix(1, v)?, FourVector::new(0.2, 0.0, 0.1, -0.3)));
    }
    out.push(("rotation x2 angle=2".into(), rotation_matrix(2, 2.0)?, FourVector::new(0.1, 0.2, -0.1, 0.0)));
    out.push(("rotation x3 angle=0.7".into(), rotation_matrix(3, 0.7)?, FourVector::new(0.0, -0.1, 0.2, 0.0)));
    let mixed = boost_matrix(2, 0.3)?.compose(&rotation_matrix(2, -0.8)?);
    out.push(("boost x2 v=0.3 after rotation x2 angle=-0.8".into(), mixed, FourVector::new(-0.4, 0.3, 0.0, 0.2)));
    Ok(out)
}

pub fn run(s: &Settings, rec: &mut Recorder) {
    let packets = |s: &Settings| -> anyhow::Result<(EventState, EventState)> {
        let g: Grid4D = s.grid.grid()?;
        let a = gaussian_packet(&g, FourVector::new(0.2, -0.3, 0.1, 0.0), [1.0; 4], FourVector::new(0.1, 0.2, 0.0, -0.1), None)?;
        let b = gaussian_packet(&g, FourVector::new(-0.1, 0.2, 0.0, 0.3), [1.1, 0.9, 1.0, 1.0], FourVector::new(0.0, -0.2, 0.1, 0.0), None)?;
        Ok((a, b))
    };
    if s.runs("transforms") {
        rec.section("transforms", |rec| {
            let (a, b) = packets(s)?;
            let before = a.inner(&b)?;
            let mut rows = Vec::new();
            for (name, lambda, shift) in transforms(s)? {
                let elem = PoincareElement::new(lambda, shift)?;
                let (ga, gb) = (apply(&elem, &a)?, apply(&elem, &b)?);
                let scalar = (ga.inner(&gb)? - before).norm();
                let norm = (ga.norm() - 1.0).abs();
                let x = elem.lorentz.apply(&a.mean_position()) + elem.translation;
                let p = elem.lorentz.apply(&a.mean_momentum());
                let (dx, dp) = (ga.mean_position().max_abs_diff(&x), ga.mean_momentum().max_abs_diff(&p));
                rec.check(Check::max(format!("scalar_product/{name}"), scalar, s.tol("scalar_product")));
                rec.check(Check::max(format!("norm/{name}"), norm, s.tol("norm")));
                rec.check(Check::max(format!("moments/{name}"), dx.max(dp), s.tol("moments")));
                rows.push(TransformRow { transform: name, scalar_product_error: scalar, norm_error: norm, position_error: dx, momentum_error: dp });
            }
            rec.series("transforms", &rows)
        });
    }
    if s.runs("group") {
        rec.section("group", |rec| {
            let (a, _) = packets(s)?;
            // A boost stretches a round packet along one light-cone direction
            // until it hits the momentum box. Starting from the opposite half
            // rapidity keeps the packet round halfway and equally compact at
            // both ends.
            let mut pairs = Vec::new();
            for &v in &s.velocities {
                let pre = apply(&PoincareElement::lorentz(boost_matrix(1, -(v.atanh() / 2.0).tanh())?)?, &a)?;
                pairs.push((
                    format!("rotation x3 after boost x1 v={v}"),
                    pre,
                    PoincareElement::new(boost_matrix(1, v)?, FourVector::new(0.2, 0.1, 0.0, 0.0))?,
                    PoincareElement::new(rotation_matrix(3, 0.7)?, FourVector::new(0.0, -0.1, 0.2, 0.0))?,
                ));
            }
            pairs.push((
                "boost x1 v=0.3 after boost x2 v=0.4".to_string(),
                a,
                PoincareElement::lorentz(boost_matrix(2, 0.4)?)?,
                PoincareElement::new(boost_matrix(1, 0.3)?, FourVector::new(0.1, 0.0, 0.0, -0.1))?,
            ));
            let mut rows = Vec::new();
            for (name, a, g1, g2) in pairs {
                let once = apply(&g1, &a)?;
                let composed = distance(&apply(&g2, &once)?, &apply(&g2.compose(&g1), &a)?)?;
                let back = distance(&apply(&g1.inverse(), &once)?, &a)?;
                rec.check(Check::max(format!("composition/{name}"), composed, s.tol("group_law")));
                rec.check(Check::max(format!("inverse/{name}"), back, s.tol("group_law")));
                rows.push(GroupRow { case: format!("composition {name}"), distance: composed });
                rows.push(GroupRow { case: format!("inverse {name}"), distance: back });
            }
            rec.series("group_law", &rows)
        });
    }
    if s.runs("generators") {
        rec.section("generators", |rec| {
            let (a, _) = packets(s)?;
            let mut rows = Vec::new();
            for (mu, nu) in [(0, 1), (3, 1), (2, 3)] {
                let r = generator_exponential_check((mu, nu), 0.1, &a, 8)?;
                rec.check(Check::max(format!("series/M{mu}{nu}"), r, s.tol("generator_series")));
                rows.push(GroupRow { case: format!("exp(-i 0.1 M{mu}{nu})"), distance: r });
            }
            rec.series("generator_series", &rows)
        });
    }
    if s.runs("spinors") {
        rec.section("spinors", |rec| {
            for (name, lambda, _) in transforms(s)? {
                let spin = standard_spinor(&lambda);
                rec.check(Check::max(format!("covariance/{name}"), covariance_defect(&spin, &lambda), s.tol("spinor_covariance")));
                if name.starts_with("rotation") {
                    let unitarity = dirac::max_abs(&(spin.adjoint() * spin - Mat4c::identity()));
                    rec.check(Check::max(format!("unitarity/{name}"), unitarity, s.tol("spinor_covariance")));
                }
            }
            // a round packet under a rotation only changes its spin part
            let g: Grid4D = s.grid.grid()?;
            let w = [c(1.0, 0.0), c(0.0, 0.5), c(0.3, 0.0), c(0.0, 0.0)];
            let psi = gaussian_packet(&g, FourVector::ZERO, [1.0; 4], FourVector::ZERO, Some(w))?;
            let lambda = rotation_matrix(2, 0.9)?;
            let out = apply(&PoincareElement::lorentz(lambda.clone())?, &psi)?;
            let norm = w.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let expected = standard_spinor(&lambda) * Spinor::from_iterator(w.iter().map(|v| v / norm));
            let mut worst = 0.0f64;
            for sigma in 0..4 {
                worst = worst.max((out.spinor_probability(sigma)? - expected[sigma].norm_sqr()).abs());
            }
            rec.check(Check::max("rotated_spinor_packet/component_weights", worst, s.tol("norm")));
            rec.check(Check::max("rotated_spinor_packet/norm", (out.norm() - 1.0).abs(), s.tol("norm")));
            Ok(())
        });
    }
}
