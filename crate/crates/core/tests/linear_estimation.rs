mod support;

#[test]
fn random_systems_keep_the_true_state() {
    let msg = support::linear_containment().unwrap_or_else(|e| panic!("{e}"));
    eprintln!("{msg}");
}

#[test]
fn exact_cz_estimate_lies_in_strip_estimate() {
    let msg = support::cz_inside_strip().unwrap_or_else(|e| panic!("{e}"));
    eprintln!("{msg}");
}

#[test]
fn descriptor_estimates_satisfy_static_rows() {
    let msg = support::descriptor_static_rows().unwrap_or_else(|e| panic!("{e}"));
    eprintln!("{msg}");
}

#[test]
fn line_zonotope_estimate_becomes_bounded() {
    let msg = support::lz_becomes_bounded().unwrap_or_else(|e| panic!("{e}"));
    eprintln!("{msg}");
}
