//! Dense Liouvillian against the fast path on a four-site chain.

use open_kitaev::oracle;

fn main() {
    for case in oracle::equivalence_suite(4, 1).unwrap() {
        println!(
            "{:<12} {} samples, max |n_dense - n_fast| = {:.2e} (dense step {:.1e})",
            case.name, case.samples, case.max_deviation, case.dense_step
        );
    }
}
