mod common;

use common::*;
use dcube::battery::{overall, system_battery, Status};

#[test]
fn every_fixture_passes_its_battery() {
    for name in MINIMAL.iter().chain(NON_MINIMAL) {
        let sys = load(name);
        let checks = system_battery(&sys);
        let bad: Vec<_> = checks.iter().filter(|c| c.status == Status::Fail).collect();
        assert!(bad.is_empty(), "{name}: {bad:#?}");
        assert_eq!(overall(&checks), Status::Pass);
        let minimal = sys.is_minimal().minimal;
        let skipped = checks.iter().filter(|c| c.status == Status::Skipped).count();
        if minimal && sys.d() >= 2 {
            assert_eq!(skipped, 0, "{name}");
        } else {
            assert!(skipped > 0, "{name}");
        }
    }
}
