//! Exact trace distances between the ensembles each party sees.

use qelection::adversary::audit::{density_audit, AuditView};
use qelection::rng::seeded;

fn main() -> qelection::Result<()> {
    let mut rng = seeded(8);
    for view in [AuditView::Outsider, AuditView::Bob1, AuditView::Bob2, AuditView::Charlie] {
        for (l, m) in [(2, 2), (4, 2), (3, 2)] {
            let a = density_audit(view, l, m, &mut rng)?;
            println!("{view:<8} l={l} m={m} dim={:<3} max distance {:.2e}", a.dim, a.max_distance());
        }
    }
    Ok(())
}
