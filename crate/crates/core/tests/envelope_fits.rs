use wedgegreen_core::bounds::appendix::{evaluate, lozenka_inputs, lozenka_oracle, summarize, zhut_inputs, zhut_oracle};
use wedgegreen_core::bounds::clouds::{kernel_cloud, CloudKernel, CloudSetup};
use wedgegreen_core::bounds::{fit_constant, Preset, PresetParams};

fn params(lambda_plus: f64) -> PresetParams {
    PresetParams { lambda_plus, lambda_minus: 1.8, ..Default::default() }
}

#[test]
fn dirichlet_kernel_fits_below_the_critical_exponent_only() {
    let setup = CloudSetup::quarter_plane(CloudKernel::Dirichlet);
    let cloud = kernel_cloud(&setup).unwrap();
    let domain = setup.domain().unwrap();
    let sub = fit_constant(&cloud, Preset::Dirichlet, &params(1.8), &domain).unwrap();
    assert!(sub.confirmed, "{sub:?}");
    let sup = fit_constant(&cloud, Preset::Dirichlet, &params(3.0), &domain).unwrap();
    assert!(sup.c_emp >= 2.0 * sup.c_half, "{sup:?}");
}

#[test]
fn oblique_kernels_fit_their_envelopes() {
    for (kernel, preset) in [(CloudKernel::Oblique, Preset::Oblique), (CloudKernel::ObliqueDifference, Preset::ObliqueDifference)] {
        let setup = CloudSetup::quarter_plane(kernel);
        let cloud = kernel_cloud(&setup).unwrap();
        let fit = fit_constant(&cloud, preset, &params(1.8), &setup.domain().unwrap()).unwrap();
        assert!(fit.confirmed, "{preset:?}: {fit:?}");
    }
}

#[test]
fn half_line_oracle_with_fixed_exponents_is_stable() {
    let inputs = zhut_inputs(1000, 0, 0.05, Some([1.0, 1.0, 1.0]));
    let s = summarize(0, &evaluate(&inputs, zhut_oracle).unwrap()).unwrap();
    assert!(s.stable, "{s:?}");
}

#[test]
fn convolution_oracle_is_bounded_in_the_admissible_region() {
    for (d, a, b) in [(1, -0.5, 0.0), (2, -1.5, 0.7), (3, -2.0, -0.5)] {
        let inputs = lozenka_inputs(d, a, b, 1000, 0);
        let s = summarize(0, &evaluate(&inputs, lozenka_oracle).unwrap()).unwrap();
        assert!(s.stable, "d = {d}, a = {a}, b = {b}: {s:?}");
    }
}
