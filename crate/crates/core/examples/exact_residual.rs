//! Residual of `∂t v = Δ ln v` for the exact solutions, across grids.
//!
//! A second-order discretisation of a smooth solution shows ratios near 4
//! under grid halving; the flat metric solves the discrete equation exactly.

use ricci_lab::exact::ExactSolution;
use ricci_lab::grid::GridSpec;

fn main() -> ricci_lab::Result<()> {
    for sol in [ExactSolution::cigar(), ExactSolution::Flat { c: 0.3 }, "cigar:3".parse()?] {
        let mut prev: Option<f64> = None;
        print!("{sol:<10}");
        for n in [64, 128, 256] {
            let spec = GridSpec::centered(n, 8.0)?;
            let r = sol.pde_residual(&spec, 1.0, 1e-4)?;
            match prev {
                Some(p) if r > 0.0 => print!("  n={n}: {r:.3e} (ratio {:.2})", p / r),
                _ => print!("  n={n}: {r:.3e}"),
            }
            prev = Some(r);
        }
        println!();
    }
    // `cigar:3` evolves at the wrong rate: its residual stalls instead of
    // shrinking, which is what a wrong exponent looks like to the oracle.
    Ok(())
}
