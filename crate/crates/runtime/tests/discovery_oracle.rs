mod oracle;

#[test]
fn discovery_matches_brute_force() {
    let n = oracle::run_trials(1000).unwrap();
    assert_eq!(n, 1000);
}
