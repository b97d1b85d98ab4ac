//! Aperture of flat space versus the cigar.
//!
//! Geodesic circles in the plane grow like 2πr; on the cigar they saturate at
//! the circumference of its asymptotic cylinder, so `L / 2πr_g` tends to 0.

use ricci_lab::conformal::ConformalMetric;
use ricci_lab::exact::ExactSolution;
use ricci_lab::geometry::aperture_estimate;
use ricci_lab::grid::GridSpec;

fn main() -> ricci_lab::Result<()> {
    let spec = GridSpec::centered(256, 8.0)?;
    let centre = spec.node_at(0.0, 0.0).expect("even grid has a centre node");
    for (name, radii) in [("flat", [2.0, 3.0, 4.0, 5.0, 6.0]), ("cigar", [1.8, 2.1, 2.3, 2.4, 2.5])] {
        let sol: ExactSolution = name.parse()?;
        let m = ConformalMetric::new(sol.sample_to_grid(&spec, 0.0)?, 0.0)?;
        let report = aperture_estimate(&m, centre, &radii)?;
        println!("{name}: aperture ≈ {:.4}", report.estimate);
        for row in &report.rows {
            println!("  r_g = {:.3}  L = {:.4}  L/2πr_g = {:.4}", row.r_g, row.length, row.ratio);
        }
    }
    Ok(())
}
