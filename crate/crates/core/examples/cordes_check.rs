//! Generates the channel coefficients and checks the Cordes condition, then
//! shows that a wider `a12` range breaks it.

use nondiv_lod::coeffs::{check_cordes, CoeffSpec, FieldRange, UNIT_SQUARE_POINCARE};

fn main() -> nondiv_lod::Result<()> {
    let spec = CoeffSpec::paper(5, 1);
    let coeffs = spec.generate()?;
    let report = check_cordes(&coeffs, 0.1, UNIT_SQUARE_POINCARE)?;
    println!("{report}");

    let wide = CoeffSpec {
        a12: FieldRange {
            lo: -1.2,
            hi: -0.9,
            ..spec.a12
        },
        ..spec
    };
    let report = check_cordes(&wide.generate()?, 0.1, UNIT_SQUARE_POINCARE)?;
    println!("a12 in [-1.2, -0.9]: satisfied = {}", report.satisfied);
    Ok(())
}
