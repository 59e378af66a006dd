mod common;

use common::*;
use zcmvn::diagnostics::simulate_compositions;
use zcmvn::gaussian::mvn_logpdf;
use zcmvn::simplex::{closure, AlphaTransform};
use zcmvn::ternary::{contour_levels, render_svg, ternary_parts, PlotOptions, LEVELS};
use zcmvn::MvnParams;

fn residuals(model: &MvnParams) -> (usize, f64) {
    let t = AlphaTransform::new(3, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for level in contour_levels(model).unwrap() {
        for line in &level.polylines {
            for &p in line {
                let raw = ternary_parts(p).map(|v| v.max(0.0));
                let x = closure(&raw).unwrap();
                let y = t.forward(&x).unwrap();
                let r = (mvn_logpdf(&y, model).unwrap() - level.log_density).abs();
                worst = worst.max(r);
                count += 1;
            }
        }
    }
    (count, worst)
}

#[test]
fn contours_lie_on_level_sets() {
    let (count, worst) = residuals(&skewed_model());
    assert!(count > 1000);
    assert!(worst < 1e-3, "worst residual {worst}");
    let tight = MvnParams::from_slices(&[0.1, -0.2], &[&[0.05, 0.01], &[0.01, 0.03]]).unwrap();
    let (_, worst) = residuals(&tight);
    assert!(worst < 1e-3);
}

#[test]
fn clipped_contours_stay_in_the_triangle() {
    for level in contour_levels(&skewed_model()).unwrap() {
        for line in &level.polylines {
            assert!(line.len() >= 2);
            for &p in line {
                assert!(ternary_parts(p).iter().all(|&v| v > -1e-12));
            }
        }
    }
}

#[test]
fn example_plot_has_every_layer() {
    let model = skewed_model();
    let data = simulate_compositions(500, &model, 3, 1).unwrap();
    let svg = render_svg(&data, Some(&model), &PlotOptions::default()).unwrap();
    assert_eq!(svg.matches("<circle").count(), data.n_interior());
    assert_eq!(svg.matches("<path").count(), data.n_face());
    for k in 1..=LEVELS {
        assert!(svg.contains(&format!("data-level=\"{k}\"")));
    }
    assert!(svg.contains("contour-levels"));
    let again = render_svg(&data, Some(&model), &PlotOptions::default()).unwrap();
    assert_eq!(svg, again);
}
