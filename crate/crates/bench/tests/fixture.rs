use arlens_bench::Fixture;
use arlens_core::tracker::{ransac_homography, RansacConfig, MIN_CONSENSUS};

#[test]
fn fixture_matches_support_a_fit_near_truth() {
    let fx = Fixture::new("gdp_demo");
    assert_eq!(fx.src.len(), fx.dst.len());
    assert!(fx.src.len() >= MIN_CONSENSUS, "{} matches", fx.src.len());
    let fit = ransac_homography(&fx.src, &fx.dst, &RansacConfig::default()).unwrap();
    let (w, h) = (
        fx.bundle.spec.width() as f64,
        fx.bundle.spec.height() as f64,
    );
    let err = fit.homography.corner_error(&fx.truth, w, h);
    assert!(err < 2.0, "corner error {err}");
}
