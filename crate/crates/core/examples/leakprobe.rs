use modkg_core::norms::modulation_norm_spectral;
use modkg_core::testutil::gaussian;
use modkg_core::{build_windows, forward_transform, GridSpec, SpaceParams};
use std::time::Instant;

fn main() {
    let grid = GridSpec::new(2, 80.0, 512).unwrap();
    let t0 = Instant::now();
    let wf = build_windows(grid, 1.0).unwrap();
    println!("build_windows: {:?}", t0.elapsed());
    let f = gaussian(grid, 1.0, 0.5);
    let g = forward_transform(&f);
    let t0 = Instant::now();
    let lhs = modulation_norm_spectral(&wf, &g, &SpaceParams { s: -0.75, p: 4.0, q: 12.0 }).unwrap();
    println!("LHS p=4 norm {lhs:.4e}: {:?}", t0.elapsed());
    let t0 = Instant::now();
    let rhs = modulation_norm_spectral(&wf, &g, &SpaceParams { s: 0.0, p: 4.0 / 3.0, q: 12.0 }).unwrap();
    println!("RHS p=4/3 norm {rhs:.4e}: {:?}", t0.elapsed());
}
