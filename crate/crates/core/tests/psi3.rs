use enlab_core::conjecture::{annulus_size, PsiOptions};
use enlab_core::{verify_psi, SearchConfig};

#[test]
#[ignore = "long-running; run with --ignored"]
fn psi3_annulus_is_confirmed() {
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let opts = PsiOptions {
        long_running: true,
        search: SearchConfig::with_workers(workers),
        ..Default::default()
    };
    let r = verify_psi(3, &opts).unwrap();
    assert!(r.confirmed(), "{:?}", r.outcome);
    assert_eq!(r.tuples_checked, annulus_size(3, 16, 256));
}
