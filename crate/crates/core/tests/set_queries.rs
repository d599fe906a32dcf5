mod support;

#[test]
fn emptiness_and_membership_match_the_xi_grid() {
    let msg = support::set_query_oracles().unwrap_or_else(|e| panic!("{e}"));
    eprintln!("{msg}");
}

#[test]
fn exact_volume_matches_monte_carlo() {
    let msg = support::volume_vs_monte_carlo().unwrap_or_else(|e| panic!("{e}"));
    eprintln!("{msg}");
}
