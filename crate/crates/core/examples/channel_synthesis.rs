//! Draws a two-hop channel realization and prints its path parameters,
//! path-loss factors and the rank of each hop.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ris_anm::channel::{ChannelRealization, Geometry2D, LinkArrays, PathLossModel, PathSampler};
use ris_anm::linalg::{frobenius, numerical_rank};

fn main() -> ris_anm::Result<()> {
    let arrays = LinkArrays::paper_default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let real = ChannelRealization::sample(&mut rng, arrays, 2, 2, &PathSampler::default())?;

    for (name, p, h) in [("MS -> RIS", &real.params_mr, &real.h_mr), ("RIS -> BS", &real.params_rb, &real.h_rb)] {
        println!("{name}: {} x {} channel, rank {}", h.nrows(), h.ncols(), numerical_rank(h, 1e-9));
        for l in 0..p.n_paths() {
            println!(
                "  path {l}: AoD {:+.4} rad, AoA {:+.4} rad, |gain| {:.3}",
                p.aod[l],
                p.aoa[l],
                p.gains[l].norm()
            );
        }
        println!("  Frobenius norm {:.3}, min sine separation {:.4}", frobenius(h), p.min_separation());
    }

    let geometry = Geometry2D::paper_default();
    let (beta1, beta2) = PathLossModel::default().amplitude_factors(geometry.d1(), geometry.d2())?;
    println!("d1 = {:.2} m, d2 = {:.2} m", geometry.d1(), geometry.d2());
    println!("beta1 = {beta1:.3e} (MS -> RIS), beta2 = {beta2:.3e} (cascaded)");
    Ok(())
}
