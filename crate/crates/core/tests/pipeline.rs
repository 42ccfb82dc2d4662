use eddi::basis::{parse_terms, BasisLibrary};
use eddi::csvio::{read_table_bytes, write_table, Table};
use eddi::dynamics::{gen_duffing, simulate, SolverSpec};
use eddi::modelfile::ModelFile;
use eddi::pipeline::{identify_eddi, EddiOptions};
use eddi::response::Response;
use eddi::score::{relative_l2, score_models};

#[test]
fn csv_to_model_file_and_back() {
    let (r, truth) = gen_duffing().unwrap();
    let qdd = r.qdd().unwrap();
    let table = Table::from_series(vec![("q", r.q()), ("qd", r.qd()), ("qdd", qdd)]).unwrap();
    let mut bytes = Vec::new();
    write_table(&table, &mut bytes).unwrap();

    let read = read_table_bytes(&bytes).unwrap();
    assert_eq!(read.len(), r.len());
    let loaded = Response::new(
        read.column("q").unwrap(),
        read.column("qd").unwrap(),
        Some(read.column("qdd").unwrap()),
        r.inertia(),
    )
    .unwrap();
    // Shortest round-trip formatting keeps every sample bit-exact.
    assert_eq!(loaded.q().values(), r.q().values());

    let dlib = parse_terms("qd, q^2*qd").unwrap();
    let res = identify_eddi(&loaded, &dlib, &BasisLibrary::polynomial(3), &EddiOptions::default()).unwrap();
    let json = ModelFile::from_system(&res.system, None).to_json();
    let back = ModelFile::from_json(&json).unwrap().to_system().unwrap();
    assert_eq!(back, res.system);

    let scores = score_models(&back, &truth);
    for s in &scores {
        if let Some(e) = s.percent_error() {
            let limit = if s.term.to_string() == "q" { 10.0 } else { 1.0 };
            assert!(e < limit, "{} {e}", s.term);
        }
    }

    let spec = SolverSpec::new(1e4, 0.5);
    let a = simulate(&back, (0.0, 10.0), &spec, None).unwrap();
    let b = simulate(&truth, (0.0, 10.0), &spec, None).unwrap();
    assert!(relative_l2(a.q().values(), b.q().values()) < 0.05);
}

#[test]
fn truncated_crossings_still_identify() {
    let (r, _) = gen_duffing().unwrap();
    let mut opts = EddiOptions::default();
    opts.damping.max_crossings = Some(20);
    let dlib = parse_terms("qd, q^2*qd").unwrap();
    let res = identify_eddi(&r, &dlib, &BasisLibrary::polynomial(3), &opts).unwrap();
    assert_eq!(res.damping.crossings.len(), 21);
    let b = res.system.damping.coeffs();
    assert!((b[0] - 0.5).abs() < 0.02 * 0.5, "{b:?}");
    assert!((b[1] - 4000.0).abs() < 0.02 * 4000.0, "{b:?}");
}
