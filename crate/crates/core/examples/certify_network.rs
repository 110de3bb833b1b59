//! Certifies a few random recurrent networks and lists their equilibria.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use surge_ident::rnn::{certify, equilibria, RnnWeights};

fn main() -> surge_ident::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 20;
    for half_width in [0.02, 0.05, 0.5] {
        let w = RnnWeights::uniform(n, 4, half_width, &mut rng);
        let c = certify(&w)?;
        println!(
            "half-width {half_width}: row bound {}, Gershgorin {}, M >= 0 {} (min eig {:.2e}), rate {:.3}",
            c.row_bound_ok, c.gersgorin_ok, c.m_psd_ok, c.min_eigenvalue, c.contraction_rate
        );
        let report = equilibria(&w);
        for e in &report.equilibria {
            println!("  equilibrium x = {:.5}, slope {:+.4}, {}", e.x, e.slope, e.class);
        }
        if report.equilibria.is_empty() {
            println!("  no equilibrium in [0, 1]");
        }
    }
    Ok(())
}
